//! The closed-loop folding environment: sessions, steps, episodes.

pub mod action;
pub mod agent;

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fold::{serialize_fold, FoldFile};
use crate::kernel::{CreasePattern, KernelError, Segment};
use crate::metrics::{extract_mask, image_iou, query_efficiency, BinaryMask, EpisodeScore, MetricsError};
use crate::render::{render_view, RasterImage, RenderError, RenderStyle, View, DEFAULT_SIZE};
use crate::scorer::{semantic_similarity, Embedder};
use crate::solver::{is_foldable, FoldedState, SolverConfig, VerdictStatus, Violation};

pub use action::{parse_action, ActionError, ActionKind, AgentAction, CreaseEnds, CreaseSpec};
pub use agent::{Agent, AgentError, NullAgent, RandomAgent, ScriptedAgent};

pub const DEFAULT_TEMPLATE: &str = "full-step/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub solver: SolverConfig,
    pub style: RenderStyle,
    pub image_size: u32,
    pub max_steps: usize,
    pub prompt_template_id: String,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            solver: SolverConfig::default(),
            style: RenderStyle::default(),
            image_size: DEFAULT_SIZE,
            max_steps: 25,
            prompt_template_id: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("target pattern is invalid: {0}")]
    TargetImport(#[from] KernelError),
    #[error("target does not fold flat (solver says {0})")]
    TargetNotFoldable(VerdictStatus),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    #[error("session is closed")]
    SessionClosed,
    #[error("step budget exhausted")]
    BudgetExhausted,
}

/// What the agent sees before each step. Images are in the fixed order
/// target, current, crease pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub step: usize,
    pub max_steps: usize,
    pub target_img: RasterImage,
    pub current_img: RasterImage,
    pub cp_img: RasterImage,
    pub feedback: bool,
    pub prompt_template_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionKind {
    Parse,
    Insert,
    Foldability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub kind: RejectionKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub index: usize,
    pub raw: String,
    pub action: Option<AgentAction>,
    pub verdict: Option<VerdictStatus>,
    pub accepted: bool,
    pub rejection: Option<Rejection>,
    /// Whether the accepted step changed the front silhouette.
    pub reshaped: bool,
    pub timestamp_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_id: String,
    pub target_id: String,
    pub max_steps: usize,
    pub attempts: Vec<Attempt>,
    /// Canonical FOLD text of the committed pattern.
    pub final_fold: String,
    pub agent_error: Option<String>,
}

impl EpisodeRecord {
    pub fn steps_valid(&self) -> usize {
        self.attempts.iter().filter(|a| a.accepted).count()
    }

    pub fn raw_actions(&self) -> Vec<String> {
        self.attempts.iter().map(|a| a.raw.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub accepted: bool,
    pub verdict: Option<VerdictStatus>,
    pub rejection: Option<Rejection>,
    pub steps_remaining: usize,
}

/// Inserts every crease of `action` into a copy of `cp`. Vertex indices
/// refer to `cp` as it was before the action.
pub fn apply_action(cp: &CreasePattern, action: &AgentAction) -> Result<CreasePattern, KernelError> {
    let mut next = cp.clone();
    for c in &action.creases {
        let seg = match c.ends {
            CreaseEnds::Points { p1, p2 } => Segment::new(p1, p2),
            CreaseEnds::Vertices([a, b]) => {
                let v = cp.vertices();
                let pa = *v.get(a).ok_or(KernelError::UnknownVertex(a))?;
                let pb = *v.get(b).ok_or(KernelError::UnknownVertex(b))?;
                Segment::new(pa, pb)
            }
        };
        next.insert_crease_in_place(seg, c.assignment)?;
    }
    Ok(next)
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Folded state of a pattern that must be valid.
pub fn fold_pattern(cp: &CreasePattern, solver: &SolverConfig) -> Result<FoldedState, EnvError> {
    let verdict = is_foldable(cp, solver);
    verdict.witness.ok_or(EnvError::TargetNotFoldable(verdict.status))
}

/// Front render of a foldable FOLD document.
pub fn front_image(fold: &FoldFile, config: &EnvConfig) -> Result<RasterImage, EnvError> {
    let cp = CreasePattern::from_fold(fold)?;
    let state = fold_pattern(&cp, &config.solver)?;
    Ok(render_view(&cp, &state, View::Front, &config.style, config.image_size)?)
}

/// IoU of the front silhouettes of two foldable patterns.
pub fn geometric_similarity(result: &FoldFile, target: &FoldFile, config: &EnvConfig) -> Result<f64, EnvError> {
    Ok(image_iou(&front_image(result, config)?, &front_image(target, config)?)?)
}

/// One episode against one target.
#[derive(Clone, Debug)]
pub struct Session {
    id: String,
    target_id: String,
    config: EnvConfig,
    target_img: RasterImage,
    cp: CreasePattern,
    state: FoldedState,
    current_img: RasterImage,
    cp_img: RasterImage,
    current_mask: Option<BinaryMask>,
    feedback: bool,
    attempts: Vec<Attempt>,
    agent_error: Option<String>,
    closed: bool,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        target_id: impl Into<String>,
        target: &FoldFile,
        config: EnvConfig,
    ) -> Result<Self, EnvError> {
        let target_cp = CreasePattern::from_fold(target)?;
        let target_state = fold_pattern(&target_cp, &config.solver)?;
        let target_img = render_view(&target_cp, &target_state, View::Front, &config.style, config.image_size)?;
        let cp = CreasePattern::new_blank(target_cp.size());
        let state = fold_pattern(&cp, &config.solver)?;
        let current_img = render_view(&cp, &state, View::Front, &config.style, config.image_size)?;
        let cp_img = render_view(&cp, &state, View::CreasePattern, &config.style, config.image_size)?;
        let current_mask = extract_mask(&current_img).ok();
        Ok(Session {
            id: id.into(),
            target_id: target_id.into(),
            config,
            target_img,
            cp,
            state,
            current_img,
            cp_img,
            current_mask,
            feedback: true,
            attempts: Vec::new(),
            agent_error: None,
            closed: false,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn pattern(&self) -> &CreasePattern {
        &self.cp
    }

    pub fn folded_state(&self) -> &FoldedState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn attempts(&self) -> &[Attempt] {
        &self.attempts
    }

    pub fn feedback(&self) -> bool {
        self.feedback
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn steps_remaining(&self) -> usize {
        self.config.max_steps.saturating_sub(self.attempts.len())
    }

    pub fn target_image(&self) -> &RasterImage {
        &self.target_img
    }

    pub fn current_image(&self) -> &RasterImage {
        &self.current_img
    }

    pub fn crease_image(&self) -> &RasterImage {
        &self.cp_img
    }

    pub fn observation(&self) -> Observation {
        Observation {
            step: self.attempts.len(),
            max_steps: self.config.max_steps,
            target_img: self.target_img.clone(),
            current_img: self.current_img.clone(),
            cp_img: self.cp_img.clone(),
            feedback: self.feedback,
            prompt_template_id: self.config.prompt_template_id.clone(),
        }
    }

    fn check_open(&self) -> Result<(), StepError> {
        if self.closed {
            return Err(StepError::SessionClosed);
        }
        if self.attempts.len() >= self.config.max_steps {
            return Err(StepError::BudgetExhausted);
        }
        Ok(())
    }

    /// Parses and executes one raw agent reply. Unparseable text still
    /// counts as an attempt.
    pub fn step_raw(&mut self, raw: &str) -> Result<StepReport, StepError> {
        self.check_open()?;
        match parse_action(raw) {
            Ok(action) => self.execute(raw.to_string(), action),
            Err(e) => Ok(self.reject(
                raw.to_string(),
                None,
                None,
                Rejection {
                    kind: RejectionKind::Parse,
                    message: e.to_string(),
                    violations: Vec::new(),
                },
            )),
        }
    }

    pub fn step(&mut self, action: AgentAction) -> Result<StepReport, StepError> {
        self.check_open()?;
        let raw = action.to_command();
        self.execute(raw, action)
    }

    fn execute(&mut self, raw: String, action: AgentAction) -> Result<StepReport, StepError> {
        let tentative = match apply_action(&self.cp, &action) {
            Ok(cp) => cp,
            Err(e) => {
                return Ok(self.reject(
                    raw,
                    Some(action),
                    None,
                    Rejection {
                        kind: RejectionKind::Insert,
                        message: e.to_string(),
                        violations: Vec::new(),
                    },
                ))
            }
        };
        let verdict = is_foldable(&tentative, &self.config.solver);
        let Some(state) = verdict.witness else {
            let message = format!("pattern is not flat-foldable ({})", verdict.status);
            return Ok(self.reject(
                raw,
                Some(action),
                Some(verdict.status),
                Rejection {
                    kind: RejectionKind::Foldability,
                    message,
                    violations: verdict.violations,
                },
            ));
        };
        let rendered = render_view(
            &tentative,
            &state,
            View::Front,
            &self.config.style,
            self.config.image_size,
        )
        .and_then(|front| {
            let cp_img = render_view(
                &tentative,
                &state,
                View::CreasePattern,
                &self.config.style,
                self.config.image_size,
            )?;
            Ok((front, cp_img))
        });
        let (current_img, cp_img) = match rendered {
            Ok(pair) => pair,
            Err(e) => {
                return Ok(self.reject(
                    raw,
                    Some(action),
                    Some(verdict.status),
                    Rejection {
                        kind: RejectionKind::Foldability,
                        message: e.to_string(),
                        violations: Vec::new(),
                    },
                ))
            }
        };
        let mask = extract_mask(&current_img).ok();
        let reshaped = mask != self.current_mask;
        self.cp = tentative;
        self.state = state;
        self.current_img = current_img;
        self.cp_img = cp_img;
        self.current_mask = mask;
        self.feedback = true;
        self.attempts.push(Attempt {
            index: self.attempts.len(),
            raw,
            action: Some(action),
            verdict: Some(VerdictStatus::Valid),
            accepted: true,
            rejection: None,
            reshaped,
            timestamp_ms: now_ms(),
        });
        Ok(StepReport {
            accepted: true,
            verdict: Some(VerdictStatus::Valid),
            rejection: None,
            steps_remaining: self.steps_remaining(),
        })
    }

    fn reject(
        &mut self,
        raw: String,
        action: Option<AgentAction>,
        verdict: Option<VerdictStatus>,
        rejection: Rejection,
    ) -> StepReport {
        self.feedback = false;
        self.attempts.push(Attempt {
            index: self.attempts.len(),
            raw,
            action,
            verdict,
            accepted: false,
            rejection: Some(rejection.clone()),
            reshaped: false,
            timestamp_ms: now_ms(),
        });
        StepReport {
            accepted: false,
            verdict,
            rejection: Some(rejection),
            steps_remaining: self.steps_remaining(),
        }
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn note_agent_error(&mut self, message: impl Into<String>) {
        self.agent_error = Some(message.into());
    }

    pub fn final_fold(&self) -> FoldFile {
        self.cp.to_fold().expect("committed patterns always export")
    }

    pub fn record(&self) -> EpisodeRecord {
        EpisodeRecord {
            episode_id: self.id.clone(),
            target_id: self.target_id.clone(),
            max_steps: self.config.max_steps,
            attempts: self.attempts.clone(),
            final_fold: serialize_fold(&self.final_fold()),
            agent_error: self.agent_error.clone(),
        }
    }

    /// QE and GS always; SS only when an embedder answers.
    pub fn score(&self, embedder: Option<&dyn Embedder>) -> Result<EpisodeScore, EnvError> {
        let attempted = self.attempts.len();
        let valid = self.attempts.iter().filter(|a| a.accepted).count();
        let gs = image_iou(&self.current_img, &self.target_img)?;
        let ss = embedder.and_then(|e| {
            let a = self.current_img.to_png().ok()?;
            let b = self.target_img.to_png().ok()?;
            semantic_similarity(&a, &b, e).ok()
        });
        Ok(EpisodeScore {
            qe: query_efficiency(valid, attempted),
            gs,
            ss,
            steps_attempted: attempted,
            steps_valid: valid,
            steps_reshaping: self.attempts.iter().filter(|a| a.reshaped).count(),
        })
    }
}

/// Runs `agent` until it stops, errs or the step budget runs out.
pub fn run_episode(
    session: &mut Session,
    agent: &mut dyn Agent,
    embedder: Option<&dyn Embedder>,
) -> Result<(EpisodeRecord, EpisodeScore), EnvError> {
    while !session.is_closed() && session.steps_remaining() > 0 {
        let obs = session.observation();
        match agent.act(&obs) {
            Ok(Some(text)) => {
                session.step_raw(&text).expect("session is open with budget left");
            }
            Ok(None) => break,
            Err(e) => {
                session.note_agent_error(e.to_string());
                break;
            }
        }
    }
    session.close();
    let score = session.score(embedder)?;
    Ok((session.record(), score))
}

/// Replays the raw texts of `record` against `target`.
pub fn replay(record: &EpisodeRecord, target: &FoldFile, config: EnvConfig) -> Result<EpisodeRecord, EnvError> {
    let mut session = Session::new(record.episode_id.clone(), record.target_id.clone(), target, config)?;
    let mut agent = ScriptedAgent::new(record.raw_actions());
    run_episode(&mut session, &mut agent, None).map(|(r, _)| r)
}
