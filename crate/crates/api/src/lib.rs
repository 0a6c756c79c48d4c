//! JSON bodies exchanged with the forge service. Images travel as base64 PNG;
//! FOLD documents travel as their text.

use serde::{Deserialize, Serialize};

pub use forge_core::env::{EpisodeRecord, Rejection};
pub use forge_core::fold::Complexity;
pub use forge_core::metrics::EpisodeScore;
pub use forge_core::render::View;
pub use forge_core::solver::{SolverConfig, VerdictStatus, Violation};

/// Where a session or episode gets its target from. Exactly one of the
/// two fields must be set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_fold: Option<String>,
}

impl TargetSpec {
    pub fn by_id(id: impl Into<String>) -> Self {
        TargetSpec {
            target_id: Some(id.into()),
            target_fold: None,
        }
    }

    pub fn inline(fold_text: impl Into<String>) -> Self {
        TargetSpec {
            target_id: None,
            target_fold: Some(fold_text.into()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(flatten)]
    pub target: TargetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub episode_id: String,
    pub target_id: String,
    pub max_steps: usize,
}

/// Base64 PNGs in the fixed order target, current, crease pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationImages {
    pub target: String,
    pub current: String,
    pub crease_pattern: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationResponse {
    pub episode_id: String,
    pub step: usize,
    pub max_steps: usize,
    pub feedback: bool,
    pub prompt_template_id: String,
    pub images: ObservationImages,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRequest {
    /// Agent output, passed to the strict action parser unchanged.
    pub raw: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub accepted: bool,
    pub verdict: Option<VerdictStatus>,
    pub rejection: Option<Rejection>,
    pub steps_remaining: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateRequest {
    pub fold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub status: VerdictStatus,
    pub violations: Vec<Violation>,
    pub nodes: u64,
    pub face_count: usize,
    /// Faces from bottom to top when valid.
    pub stacking: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderRequest {
    pub fold: String,
    pub view: View,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderResponse {
    pub png: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRequest {
    /// Starting pattern; the blank square when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    /// One action command per entry.
    pub script: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResponse {
    /// Canonical FOLD text after the last action.
    pub fold: String,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub result: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub gs: f64,
    pub ss: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Scripted,
    Random,
    Null,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRequest {
    #[serde(flatten)]
    pub target: TargetSpec,
    pub agent: AgentKind,
    /// Commands for the scripted agent; defaults to the target's own script.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResponse {
    pub record: EpisodeRecord,
    pub score: EpisodeScore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub id: String,
    pub category: Option<String>,
    pub complexity: Complexity,
    pub vertex_count: usize,
    pub crease_count: usize,
    pub has_script: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetsResponse {
    pub targets: Vec<TargetInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_fields_flatten() {
        let req = CreateSessionRequest {
            target: TargetSpec::by_id("kite"),
            max_steps: Some(10),
        };
        let text = serde_json::to_string(&req).unwrap();
        assert_eq!(text, r#"{"target_id":"kite","max_steps":10}"#);
        assert_eq!(serde_json::from_str::<CreateSessionRequest>(&text).unwrap(), req);
    }

    #[test]
    fn agent_names() {
        let req: EpisodeRequest =
            serde_json::from_str(r#"{"target_id": "book", "agent": "random", "seed": 3}"#).unwrap();
        assert_eq!(req.agent, AgentKind::Random);
        assert_eq!(req.max_steps, None);
    }
}
