use std::path::PathBuf;
use std::sync::Arc;

use forge_api::{
    AgentKind, CreateSessionRequest, EpisodeRequest, FoldRequest, RenderRequest, ScoreRequest, TargetSpec,
    ValidateRequest, VerdictStatus, View,
};
use forge_client::{decode_image, ForgeClient};
use forge_core::env::{EnvConfig, Session};
use forge_core::fold::{parse_fold, serialize_fold};
use forge_core::library::load_design;
use forge_core::render::RasterImage;
use forge_server::{spawn, AppState, ServerConfig};

const BOOK: &str = r#"{"action": "add_crease", "p1": [5, 0], "p2": [5, 10], "assignment": "V"}"#;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn config() -> ServerConfig {
    ServerConfig {
        addr: "127.0.0.1:0".into(),
        targets_dir: Some(fixtures()),
        env: EnvConfig {
            image_size: 96,
            max_steps: 5,
            ..EnvConfig::default()
        },
        ..ServerConfig::default()
    }
}

async fn start() -> ForgeClient {
    let state = Arc::new(AppState::new(config()).unwrap());
    let (addr, _task) = spawn("127.0.0.1:0", state).await.unwrap();
    ForgeClient::new(format!("http://{addr}"))
}

fn session_for(id: &str) -> CreateSessionRequest {
    CreateSessionRequest {
        target: TargetSpec::by_id(id),
        max_steps: None,
    }
}

#[tokio::test]
async fn session_matches_direct_library_calls() {
    let client = start().await;
    let created = client.create_session(&session_for("book")).await.unwrap();
    assert_eq!(created.target_id, "book");
    let obs = client.observation(&created.episode_id).await.unwrap();
    assert!(obs.feedback);
    let act = client.act(&created.episode_id, BOOK).await.unwrap();
    assert!(act.accepted);
    let bad = client.act(&created.episode_id, "fold it in half").await.unwrap();
    assert!(!bad.accepted);
    let score = client.session_score(&created.episode_id).await.unwrap();
    let record = client.session_record(&created.episode_id).await.unwrap();

    let target = load_design(&fixtures().join("book.fold")).unwrap().fold;
    let mut direct = Session::new("direct", "book", &target, config().env).unwrap();
    let initial = direct.current_image().clone();
    direct.step_raw(BOOK).unwrap();
    direct.step_raw("fold it in half").unwrap();
    assert_eq!(score, direct.score(None).unwrap());
    assert_eq!(record.final_fold, direct.record().final_fold);
    assert_eq!(record.attempts.len(), 2);
    for (a, b) in record.attempts.iter().zip(direct.attempts()) {
        assert_eq!((a.accepted, &a.action, a.verdict), (b.accepted, &b.action, b.verdict));
    }

    let first = RasterImage::from_png(&decode_image(&obs.images.current).unwrap()).unwrap();
    assert_eq!(first, initial);
    let now = client.observation(&created.episode_id).await.unwrap();
    assert!(!now.feedback);
    let current = RasterImage::from_png(&decode_image(&now.images.current).unwrap()).unwrap();
    assert_eq!(&current, direct.current_image());
}

#[tokio::test]
async fn sessions_are_isolated() {
    let client = start().await;
    let a = client.create_session(&session_for("book")).await.unwrap();
    let b = client.create_session(&session_for("book")).await.unwrap();
    assert_ne!(a.episode_id, b.episode_id);
    let (ra, rb) = tokio::join!(client.act(&a.episode_id, BOOK), client.observation(&b.episode_id));
    assert!(ra.unwrap().accepted);
    assert!(rb.unwrap().feedback);
    let rec_b = client.session_record(&b.episode_id).await.unwrap();
    assert!(rec_b.attempts.is_empty());
    let rec_a = client.session_record(&a.episode_id).await.unwrap();
    assert_ne!(rec_a.final_fold, rec_b.final_fold);
}

#[tokio::test]
async fn exhausted_budget_is_a_conflict() {
    let client = start().await;
    let req = CreateSessionRequest {
        target: TargetSpec::by_id("book"),
        max_steps: Some(1),
    };
    let s = client.create_session(&req).await.unwrap();
    assert_eq!(client.act(&s.episode_id, BOOK).await.unwrap().steps_remaining, 0);
    let err = client.act(&s.episode_id, BOOK).await.unwrap_err();
    assert_eq!(err.status().map(|c| c.as_u16()), Some(409));
    let record = client.close_session(&s.episode_id).await.unwrap();
    assert_eq!(record.attempts.len(), 1);
    let gone = client.observation(&s.episode_id).await.unwrap_err();
    assert_eq!(gone.status().map(|c| c.as_u16()), Some(404));
}

#[tokio::test]
async fn unknown_targets_and_bad_bodies() {
    let client = start().await;
    let err = client.create_session(&session_for("crane")).await.unwrap_err();
    assert_eq!(err.status().map(|c| c.as_u16()), Some(404));
    let err = client
        .create_session(&CreateSessionRequest {
            target: TargetSpec::inline("{"),
            max_steps: None,
        })
        .await
        .unwrap_err();
    assert_eq!(err.status().map(|c| c.as_u16()), Some(400));
}

#[tokio::test]
async fn stateless_endpoints() {
    let client = start().await;
    let targets = client.targets().await.unwrap();
    assert_eq!(targets.targets.len(), 14);

    let fish = std::fs::read_to_string(fixtures().join("fish.fold")).unwrap();
    let v = client
        .validate(&ValidateRequest {
            fold: fish.clone(),
            solver: None,
        })
        .await
        .unwrap();
    assert_eq!(v.status, VerdictStatus::Valid);
    assert_eq!(v.stacking.map(|s| s.len()), Some(v.face_count));

    let png = client
        .render_png(&RenderRequest {
            fold: fish.clone(),
            view: View::Back,
            size: Some(64),
        })
        .await
        .unwrap();
    assert_eq!(RasterImage::from_png(&png).unwrap().width, 64);

    let kite = load_design(&fixtures().join("kite.fold")).unwrap();
    let folded = client
        .fold(&FoldRequest {
            base: None,
            script: kite.script.clone().unwrap(),
        })
        .await
        .unwrap();
    assert_eq!(folded.states, 3);
    assert_eq!(folded.fold, serialize_fold(&kite.fold.without_extras()));

    let s = client
        .score(&ScoreRequest {
            result: fish.clone(),
            target: fish,
        })
        .await
        .unwrap();
    assert_eq!(s.gs, 1.0);

    let ep = client
        .episode(&EpisodeRequest {
            target: TargetSpec::by_id("kite"),
            agent: AgentKind::Scripted,
            script: None,
            seed: 0,
            max_steps: None,
        })
        .await
        .unwrap();
    assert_eq!((ep.score.gs, ep.score.qe), (1.0, 1.0));
    assert_eq!(parse_fold(&ep.record.final_fold).unwrap(), kite.fold.without_extras());
}
