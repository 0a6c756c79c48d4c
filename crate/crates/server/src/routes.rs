use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use forge_api::{
    ActionRequest, ActionResponse, AgentKind, CreateSessionRequest, CreateSessionResponse, EpisodeRequest,
    EpisodeResponse, FoldRequest, FoldResponse, ObservationImages, ObservationResponse, RenderRequest, RenderResponse,
    ScoreRequest, ScoreResponse, TargetInfo, TargetSpec, TargetsResponse, ValidateRequest, ValidateResponse,
};
use forge_core::env::{
    fold_pattern, front_image, run_episode, Agent, EpisodeRecord, NullAgent, RandomAgent, ScriptedAgent, Session,
};
use forge_core::fold::{parse_fold, serialize_fold, DesignMeta, FoldFile};
use forge_core::kernel::{CreasePattern, PAPER_SIZE};
use forge_core::metrics::{image_iou, EpisodeScore};
use forge_core::render::{rasterize, render_crease_pattern, render_view, RasterImage, View};
use forge_core::scorer::{semantic_similarity, Embedder};
use forge_core::solver::is_foldable;
use forge_core::taskgen::{build_sequence, parse_script, SequenceConfig};

use crate::{ApiError, AppState};

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/targets", get(targets))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/observation", get(observation))
        .route("/sessions/{id}/actions", post(post_action))
        .route("/sessions/{id}/score", get(session_score))
        .route("/sessions/{id}/record", get(session_record))
        .route("/validate", post(validate))
        .route("/render", post(render))
        .route("/fold", post(fold))
        .route("/score", post(score))
        .route("/episodes", post(episode))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await?
}

fn png_b64(img: &RasterImage) -> Result<String, ApiError> {
    Ok(base64::engine::general_purpose::STANDARD.encode(img.to_png()?))
}

struct Target {
    id: String,
    fold: FoldFile,
    script: Option<Vec<String>>,
}

fn resolve(state: &AppState, spec: &TargetSpec) -> Result<Target, ApiError> {
    match (&spec.target_id, &spec.target_fold) {
        (Some(id), None) => {
            let d = state.library.get(id).ok_or_else(|| ApiError::unknown_target(id))?;
            Ok(Target {
                id: id.clone(),
                fold: d.fold.clone(),
                script: d.script.clone(),
            })
        }
        (None, Some(text)) => Ok(Target {
            id: "inline".to_owned(),
            fold: parse_fold(text)?,
            script: None,
        }),
        _ => Err(ApiError::bad_request(
            "give exactly one of `target_id` and `target_fold`",
        )),
    }
}

async fn targets(State(state): Shared) -> Json<TargetsResponse> {
    let targets = state
        .library
        .values()
        .map(|d| {
            let category = d.category();
            let meta = DesignMeta::describe(&d.fold, category.as_deref().unwrap_or(""), &state.config.complexity);
            TargetInfo {
                id: d.id.clone(),
                category,
                complexity: meta.complexity,
                vertex_count: meta.vertex_count,
                crease_count: meta.crease_count,
                has_script: d.script.is_some(),
            }
        })
        .collect();
    Json(TargetsResponse { targets })
}

async fn create_session(
    State(state): Shared,
    Json(req): Json<CreateSessionRequest>,
) -> Result<(StatusCode, Json<CreateSessionResponse>), ApiError> {
    let target = resolve(&state, &req.target)?;
    let mut config = state.config.env.clone();
    if let Some(n) = req.max_steps {
        config.max_steps = n;
    }
    let id = uuid::Uuid::new_v4().to_string();
    let (sid, tid) = (id.clone(), target.id.clone());
    let session = blocking(move || Ok(Session::new(sid, tid, &target.fold, config)?)).await?;
    let resp = CreateSessionResponse {
        episode_id: id.clone(),
        target_id: session.record().target_id,
        max_steps: session.config().max_steps,
    };
    state
        .sessions
        .lock()
        .expect("session map lock")
        .insert(id, Arc::new(std::sync::Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(resp)))
}

async fn observation(State(state): Shared, Path(id): Path<String>) -> ApiResult<ObservationResponse> {
    let session = state.session(&id)?;
    blocking(move || {
        let s = session.lock().expect("session lock");
        let obs = s.observation();
        Ok(Json(ObservationResponse {
            episode_id: s.id().to_owned(),
            step: obs.step,
            max_steps: obs.max_steps,
            feedback: obs.feedback,
            prompt_template_id: obs.prompt_template_id,
            images: ObservationImages {
                target: png_b64(&obs.target_img)?,
                current: png_b64(&obs.current_img)?,
                crease_pattern: png_b64(&obs.cp_img)?,
            },
        }))
    })
    .await
}

async fn post_action(
    State(state): Shared,
    Path(id): Path<String>,
    Json(req): Json<ActionRequest>,
) -> ApiResult<ActionResponse> {
    let session = state.session(&id)?;
    blocking(move || {
        let report = session.lock().expect("session lock").step_raw(&req.raw)?;
        Ok(Json(ActionResponse {
            accepted: report.accepted,
            verdict: report.verdict,
            rejection: report.rejection,
            steps_remaining: report.steps_remaining,
        }))
    })
    .await
}

async fn session_score(State(state): Shared, Path(id): Path<String>) -> ApiResult<EpisodeScore> {
    let session = state.session(&id)?;
    let embedder = state.embedder();
    blocking(move || {
        let s = session.lock().expect("session lock");
        Ok(Json(s.score(embedder.as_ref().map(|e| e as &dyn Embedder))?))
    })
    .await
}

async fn session_record(State(state): Shared, Path(id): Path<String>) -> ApiResult<EpisodeRecord> {
    let session = state.session(&id)?;
    let record = session.lock().expect("session lock").record();
    Ok(Json(record))
}

async fn delete_session(State(state): Shared, Path(id): Path<String>) -> ApiResult<EpisodeRecord> {
    let session = state
        .sessions
        .lock()
        .expect("session map lock")
        .remove(&id)
        .ok_or_else(|| ApiError::unknown_session(&id))?;
    let mut s = session.lock().expect("session lock");
    s.close();
    Ok(Json(s.record()))
}

async fn validate(State(state): Shared, Json(req): Json<ValidateRequest>) -> ApiResult<ValidateResponse> {
    let solver = req.solver.unwrap_or_else(|| state.config.env.solver.clone());
    blocking(move || {
        let cp = CreasePattern::from_fold(&parse_fold(&req.fold)?)?;
        let v = is_foldable(&cp, &solver);
        Ok(Json(ValidateResponse {
            status: v.status,
            violations: v.violations,
            nodes: v.nodes,
            face_count: cp.faces().len(),
            stacking: v.witness.map(|w| w.stacking),
        }))
    })
    .await
}

async fn render(State(state): Shared, Json(req): Json<RenderRequest>) -> ApiResult<RenderResponse> {
    let env = state.config.env.clone();
    blocking(move || {
        let size = req.size.unwrap_or(env.image_size);
        if size == 0 {
            return Err(ApiError::bad_request("size must be positive"));
        }
        let cp = CreasePattern::from_fold(&parse_fold(&req.fold)?)?;
        let img = match req.view {
            View::CreasePattern => rasterize(&render_crease_pattern(&cp, &env.style), size, size),
            view => {
                let folded = fold_pattern(&cp, &env.solver)?;
                render_view(&cp, &folded, view, &env.style, size)?
            }
        };
        Ok(Json(RenderResponse {
            png: png_b64(&img)?,
            width: img.width,
            height: img.height,
        }))
    })
    .await
}

async fn fold(State(state): Shared, Json(req): Json<FoldRequest>) -> ApiResult<FoldResponse> {
    let env = state.config.env.clone();
    blocking(move || {
        let base = match &req.base {
            Some(text) => parse_fold(text)?,
            None => CreasePattern::new_blank(PAPER_SIZE).to_fold()?,
        };
        let actions = parse_script(&req.script)?;
        let config = SequenceConfig {
            solver: env.solver,
            style: env.style,
            image_size: 16,
        };
        let seq = build_sequence("request", &actions, &base, &config)?;
        let last = seq.states.last().expect("sequence has its base state");
        Ok(Json(FoldResponse {
            fold: serialize_fold(last),
            states: seq.len(),
        }))
    })
    .await
}

async fn score(State(state): Shared, Json(req): Json<ScoreRequest>) -> ApiResult<ScoreResponse> {
    let env = state.config.env.clone();
    let embedder = state.embedder();
    blocking(move || {
        let a = front_image(&parse_fold(&req.result)?, &env)?;
        let b = front_image(&parse_fold(&req.target)?, &env)?;
        let gs = image_iou(&a, &b)?;
        let ss = embedder.and_then(|e| semantic_similarity(&a.to_png().ok()?, &b.to_png().ok()?, &e).ok());
        Ok(Json(ScoreResponse { gs, ss }))
    })
    .await
}

async fn episode(State(state): Shared, Json(req): Json<EpisodeRequest>) -> ApiResult<EpisodeResponse> {
    let target = resolve(&state, &req.target)?;
    let mut config = state.config.env.clone();
    if let Some(n) = req.max_steps {
        config.max_steps = n;
    }
    let mut agent: Box<dyn Agent + Send> = match req.agent {
        AgentKind::Scripted => {
            let script = req
                .script
                .or(target.script)
                .ok_or_else(|| ApiError::bad_request("scripted agent needs a script"))?;
            Box::new(ScriptedAgent::new(script))
        }
        AgentKind::Random => Box::new(RandomAgent::new(req.seed)),
        AgentKind::Null => Box::new(NullAgent),
    };
    let embedder = state.embedder();
    blocking(move || {
        let id = uuid::Uuid::new_v4().to_string();
        let mut session = Session::new(id, target.id, &target.fold, config)?;
        let (record, score) = run_episode(
            &mut session,
            agent.as_mut(),
            embedder.as_ref().map(|e| e as &dyn Embedder),
        )?;
        Ok(Json(EpisodeResponse { record, score }))
    })
    .await
}
