//! One-step multiple-choice tasks: fold sequences, instance sampling,
//! answer parsing, accuracy and on-disk bundles.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{apply_action, parse_action, ActionError, AgentAction};
use crate::fold::FoldFile;
use crate::kernel::{CreasePattern, KernelError};
use crate::render::{render_view, RasterImage, RenderError, RenderStyle, View, DEFAULT_SIZE};
use crate::solver::{is_foldable, FoldedState, SolverConfig, VerdictStatus};

pub const ONE_STEP_TEMPLATE: &str = "one-step/v1";

/// Causal instances need this many states besides `t` and `t + 1`.
pub const CAUSAL_MIN_OTHER_STATES: usize = 4;
const DISTRACTORS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub solver: SolverConfig,
    pub style: RenderStyle,
    pub image_size: u32,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            solver: SolverConfig::default(),
            style: RenderStyle::default(),
            image_size: DEFAULT_SIZE,
        }
    }
}

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("script line {line}: {source}")]
    Script {
        line: usize,
        #[source]
        source: ActionError,
    },
    #[error("base pattern is invalid: {0}")]
    Base(#[from] KernelError),
    #[error("base pattern does not fold flat ({0})")]
    BaseNotFoldable(VerdictStatus),
    #[error("step {step} cannot be folded: {reason}")]
    InfeasiblePrefix { step: usize, reason: String },
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// States of one design, each one fold action after the previous.
#[derive(Clone, Debug)]
pub struct FoldSequence {
    pub design_id: String,
    pub actions: Vec<AgentAction>,
    pub states: Vec<FoldFile>,
    pub front: Vec<RasterImage>,
    pub back: Vec<RasterImage>,
}

impl FoldSequence {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Front view on the left, back view on the right.
    pub fn composite(&self, index: usize) -> RasterImage {
        self.front[index].beside(&self.back[index])
    }
}

/// Parses script lines; errors carry the 1-based line number.
pub fn parse_script(lines: &[String]) -> Result<Vec<AgentAction>, SequenceError> {
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| parse_action(l).map_err(|source| SequenceError::Script { line: i + 1, source }))
        .collect()
}

fn render_pair(
    cp: &CreasePattern,
    state: &FoldedState,
    config: &SequenceConfig,
) -> Result<(RasterImage, RasterImage), RenderError> {
    Ok((
        render_view(cp, state, View::Front, &config.style, config.image_size)?,
        render_view(cp, state, View::Back, &config.style, config.image_size)?,
    ))
}

/// Folds every prefix of `actions` starting from `base`.
pub fn build_sequence(
    design_id: &str,
    actions: &[AgentAction],
    base: &FoldFile,
    config: &SequenceConfig,
) -> Result<FoldSequence, SequenceError> {
    let mut cp = CreasePattern::from_fold(base)?;
    let verdict = is_foldable(&cp, &config.solver);
    let state = verdict.witness.ok_or(SequenceError::BaseNotFoldable(verdict.status))?;
    let (f, b) = render_pair(&cp, &state, config)?;
    let mut seq = FoldSequence {
        design_id: design_id.to_owned(),
        actions: actions.to_vec(),
        states: vec![cp.to_fold().expect("imported patterns export")],
        front: vec![f],
        back: vec![b],
    };
    for (i, action) in actions.iter().enumerate() {
        let step = i + 1;
        let next = apply_action(&cp, action).map_err(|e| SequenceError::InfeasiblePrefix {
            step,
            reason: e.to_string(),
        })?;
        let verdict = is_foldable(&next, &config.solver);
        let Some(state) = verdict.witness else {
            return Err(SequenceError::InfeasiblePrefix {
                step,
                reason: format!("solver says {}", verdict.status),
            });
        };
        let (f, b) = render_pair(&next, &state, config)?;
        seq.states.push(next.to_fold().expect("committed patterns export"));
        seq.front.push(f);
        seq.back.push(b);
        cp = next;
    }
    Ok(seq)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Associative,
    Causal,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Associative => "associative",
            Variant::Causal => "causal",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "associative" => Ok(Variant::Associative),
            "causal" => Ok(Variant::Causal),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    C,
    D,
}

impl Choice {
    pub const ALL: [Choice; 4] = [Choice::A, Choice::B, Choice::C, Choice::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A state within a named sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateRef {
    pub design: String,
    pub index: usize,
}

/// Number of folds from `from` to `to`; `None` across designs.
pub fn fold_distance(from: &StateRef, to: &StateRef) -> Option<i64> {
    (from.design == to.design).then(|| to.index as i64 - from.index as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqInstance {
    pub id: String,
    pub variant: Variant,
    pub reference: StateRef,
    /// Options in label order A to D.
    pub options: Vec<StateRef>,
    pub correct: Choice,
    pub seed: u64,
}

impl McqInstance {
    pub fn option(&self, c: Choice) -> &StateRef {
        &self.options[c.index()]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("design `{design}` has {available} usable states for t = {t}, {required} needed")]
    InsufficientStates {
        design: String,
        t: usize,
        available: usize,
        required: usize,
    },
    #[error("pool offers {available} foreign states, {required} needed")]
    InsufficientPool { available: usize, required: usize },
    #[error("no sequence supports any requested variant")]
    NoEligibleSequence,
}

/// Builds the instance asking for state `t + 1` of `seq` given state `t`.
///
/// Associative distractors are folded states (index ≥ 1) of other designs
/// in `pool` whose pattern differs from the correct one.
pub fn make_instance(
    seq: &FoldSequence,
    t: usize,
    variant: Variant,
    pool: &[FoldSequence],
    seed: u64,
) -> Result<McqInstance, InstanceError> {
    if t + 1 >= seq.len() {
        return Err(InstanceError::InsufficientStates {
            design: seq.design_id.clone(),
            t,
            available: 0,
            required: 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let correct = StateRef {
        design: seq.design_id.clone(),
        index: t + 1,
    };
    let candidates: Vec<StateRef> = match variant {
        Variant::Causal => {
            let eligible: Vec<StateRef> = (0..seq.len())
                .filter(|&i| i != t && i != t + 1)
                .map(|index| StateRef {
                    design: seq.design_id.clone(),
                    index,
                })
                .collect();
            if eligible.len() < CAUSAL_MIN_OTHER_STATES {
                return Err(InstanceError::InsufficientStates {
                    design: seq.design_id.clone(),
                    t,
                    available: eligible.len(),
                    required: CAUSAL_MIN_OTHER_STATES,
                });
            }
            eligible
        }
        Variant::Associative => {
            let target = seq.states[t + 1].without_extras();
            let foreign = foreign_states(seq, pool, &target);
            if foreign.len() < DISTRACTORS {
                return Err(InstanceError::InsufficientPool {
                    available: foreign.len(),
                    required: DISTRACTORS,
                });
            }
            foreign
        }
    };
    let mut options = vec![correct.clone()];
    options.extend(
        index::sample(&mut rng, candidates.len(), DISTRACTORS)
            .into_iter()
            .map(|i| candidates[i].clone()),
    );
    options.shuffle(&mut rng);
    let pos = options
        .iter()
        .position(|o| *o == correct)
        .expect("correct option present");
    Ok(McqInstance {
        id: format!("{}-t{}-{}-{:016x}", seq.design_id, t, variant, seed),
        variant,
        reference: StateRef {
            design: seq.design_id.clone(),
            index: t,
        },
        options,
        correct: Choice::ALL[pos],
        seed,
    })
}

fn foreign_states(seq: &FoldSequence, pool: &[FoldSequence], target: &FoldFile) -> Vec<StateRef> {
    let mut out = Vec::new();
    for other in pool.iter().filter(|o| o.design_id != seq.design_id) {
        for (index, state) in other.states.iter().enumerate().skip(1) {
            if state.without_extras() != *target {
                out.push(StateRef {
                    design: other.design_id.clone(),
                    index,
                });
            }
        }
    }
    out
}

fn eligible_steps(seq: &FoldSequence, variant: Variant, pool: &[FoldSequence]) -> Vec<usize> {
    (0..seq.len().saturating_sub(1))
        .filter(|&t| match variant {
            Variant::Causal => seq.len() - 2 >= CAUSAL_MIN_OTHER_STATES,
            Variant::Associative => foreign_states(seq, pool, &seq.states[t + 1].without_extras()).len() >= DISTRACTORS,
        })
        .collect()
}

/// `count` instances over `sequences`, each using the others as the
/// associative pool. Variant, design and step are drawn uniformly.
pub fn generate_instances(
    sequences: &[FoldSequence],
    variants: &[Variant],
    count: usize,
    seed: u64,
) -> Result<Vec<McqInstance>, InstanceError> {
    let mut slots: Vec<(Variant, Vec<(usize, usize)>)> = Vec::new();
    for &v in variants {
        let steps: Vec<(usize, usize)> = sequences
            .iter()
            .enumerate()
            .flat_map(|(s, seq)| eligible_steps(seq, v, sequences).into_iter().map(move |t| (s, t)))
            .collect();
        if !steps.is_empty() {
            slots.push((v, steps));
        }
    }
    if slots.is_empty() {
        return Err(InstanceError::NoEligibleSequence);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (variant, steps) = &slots[rng.random_range(0..slots.len())];
        let (s, t) = steps[rng.random_range(0..steps.len())];
        out.push(make_instance(&sequences[s], t, *variant, sequences, rng.random())?);
    }
    Ok(out)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChoiceError {
    #[error("answer is not a single boxed letter")]
    NoMatch,
    #[error("`{0}` is not one of A, B, C, D")]
    InvalidOption(String),
    #[error("answer contains {0} boxed values")]
    MultipleMatches(usize),
}

static BOXED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\boxed\{([^{}]*)\}").expect("valid pattern"));

/// Accepts only `\boxed{X}` with nothing else but surrounding whitespace.
pub fn parse_choice(raw: &str) -> Result<Choice, ChoiceError> {
    let matches: Vec<_> = BOXED.captures_iter(raw).collect();
    match matches.len() {
        0 => return Err(ChoiceError::NoMatch),
        1 => {}
        n => return Err(ChoiceError::MultipleMatches(n)),
    }
    let cap = &matches[0];
    if cap.get(0).map(|m| m.as_str()) != Some(raw.trim()) {
        return Err(ChoiceError::NoMatch);
    }
    match &cap[1] {
        "A" => Ok(Choice::A),
        "B" => Ok(Choice::B),
        "C" => Ok(Choice::C),
        "D" => Ok(Choice::D),
        other => Err(ChoiceError::InvalidOption(other.to_owned())),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AccuracyError {
    #[error("{instances} instances but {answers} answers")]
    CountMismatch { instances: usize, answers: usize },
}

/// Fraction answered correctly; rejected answers count as wrong.
pub fn score_accuracy(
    instances: &[McqInstance],
    answers: &[Result<Choice, ChoiceError>],
) -> Result<f64, AccuracyError> {
    if instances.len() != answers.len() {
        return Err(AccuracyError::CountMismatch {
            instances: instances.len(),
            answers: answers.len(),
        });
    }
    if instances.is_empty() {
        return Ok(0.0);
    }
    let correct = instances
        .iter()
        .zip(answers)
        .filter(|(i, a)| a.as_ref().ok() == Some(&i.correct))
        .count();
    Ok(correct as f64 / instances.len() as f64)
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("instance refers to unknown state {0:?}")]
    UnknownState(StateRef),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Serialize)]
struct OptionEntry<'a> {
    label: Choice,
    image: String,
    source: &'a StateRef,
}

#[derive(Serialize)]
struct Manifest<'a> {
    id: &'a str,
    variant: Variant,
    prompt_template_id: &'a str,
    seed: u64,
    reference_image: &'a str,
    reference: &'a StateRef,
    options: Vec<OptionEntry<'a>>,
    correct_label: Choice,
}

#[derive(Serialize)]
struct IndexEntry<'a> {
    id: &'a str,
    variant: Variant,
    manifest: String,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), BundleError> {
    std::fs::write(path, bytes).map_err(|source| BundleError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes one directory per instance plus `index.json`; returns the index path.
pub fn write_bundle(dir: &Path, instances: &[McqInstance], sequences: &[FoldSequence]) -> Result<PathBuf, BundleError> {
    let image = |r: &StateRef| -> Result<Vec<u8>, BundleError> {
        let seq = sequences
            .iter()
            .find(|s| s.design_id == r.design && r.index < s.len())
            .ok_or_else(|| BundleError::UnknownState(r.clone()))?;
        Ok(seq.composite(r.index).to_png()?)
    };
    let mkdir = |p: &Path| {
        std::fs::create_dir_all(p).map_err(|source| BundleError::Io {
            path: p.to_owned(),
            source,
        })
    };
    mkdir(dir)?;
    let mut index = Vec::new();
    for inst in instances {
        let sub = dir.join(&inst.id);
        mkdir(&sub)?;
        write(&sub.join("reference.png"), &image(&inst.reference)?)?;
        let mut options = Vec::new();
        for c in Choice::ALL {
            let name = format!("option_{c}.png");
            write(&sub.join(&name), &image(inst.option(c))?)?;
            options.push(OptionEntry {
                label: c,
                image: name,
                source: inst.option(c),
            });
        }
        let manifest = Manifest {
            id: &inst.id,
            variant: inst.variant,
            prompt_template_id: ONE_STEP_TEMPLATE,
            seed: inst.seed,
            reference_image: "reference.png",
            reference: &inst.reference,
            options,
            correct_label: inst.correct,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write(&sub.join("manifest.json"), text.as_bytes())?;
        index.push(IndexEntry {
            id: &inst.id,
            variant: inst.variant,
            manifest: format!("{}/manifest.json", inst.id),
        });
    }
    let path = dir.join("index.json");
    let text = serde_json::to_string_pretty(&serde_json::json!({ "count": index.len(), "instances": index }))
        .expect("index serializes");
    write(&path, text.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::CreaseSpec;
    use crate::fold::Assignment::{M, V};
    use crate::kernel::PAPER_SIZE;

    fn blank() -> FoldFile {
        CreasePattern::new_blank(PAPER_SIZE).to_fold().unwrap()
    }

    fn small() -> SequenceConfig {
        SequenceConfig {
            image_size: 64,
            ..SequenceConfig::default()
        }
    }

    fn vertical(x: f64, a: crate::fold::Assignment) -> AgentAction {
        AgentAction::single(CreaseSpec::points([x, 0.0], [x, 10.0], a))
    }

    fn pleats(id: &str, n: usize) -> FoldSequence {
        let actions: Vec<_> = (1..=n)
            .map(|i| vertical(10.0 * i as f64 / (n + 1) as f64, if i % 2 == 0 { M } else { V }))
            .collect();
        build_sequence(id, &actions, &blank(), &small()).unwrap()
    }

    #[test]
    fn one_action_two_states() {
        let seq = build_sequence("book", &[vertical(5.0, V)], &blank(), &small()).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.states[1].crease_count(), 1);
        assert_eq!(seq.composite(1).width, 128);
    }

    #[test]
    fn infeasible_step_is_named() {
        let cross = AgentAction::multi(vec![
            CreaseSpec::points([0.0, 5.0], [10.0, 5.0], M),
            CreaseSpec::points([5.0, 0.0], [5.0, 10.0], M),
        ]);
        let actions = vec![vertical(2.0, V), vertical(8.0, V), cross];
        let err = build_sequence("bad", &actions, &blank(), &small()).unwrap_err();
        assert!(matches!(err, SequenceError::InfeasiblePrefix { step: 3, .. }), "{err}");
    }

    #[test]
    fn script_errors_carry_line_numbers() {
        let lines = vec![vertical(5.0, V).to_command(), "{\"action\": \"nope\"}".to_owned()];
        assert!(matches!(
            parse_script(&lines),
            Err(SequenceError::Script { line: 2, .. })
        ));
    }

    #[test]
    fn causal_distractors_come_from_eligible_indices() {
        let seq = pleats("p", 5);
        assert_eq!(seq.len(), 6);
        for seed in 0..50 {
            let inst = make_instance(&seq, 2, Variant::Causal, &[], seed).unwrap();
            let mut idx: Vec<usize> = inst.options.iter().map(|o| o.index).collect();
            idx.sort();
            assert!(idx.contains(&3));
            assert!(idx.iter().all(|i| [0, 1, 3, 4, 5].contains(i)));
            assert_eq!(inst.option(inst.correct).index, 3);
        }
        assert!(matches!(
            make_instance(&pleats("q", 4), 1, Variant::Causal, &[], 0),
            Err(InstanceError::InsufficientStates { available: 3, .. })
        ));
    }

    #[test]
    fn forced_associative_pool() {
        let seq = pleats("p", 1);
        let pool = vec![seq.clone(), pleats("q", 3)];
        let inst = make_instance(&seq, 0, Variant::Associative, &pool, 9).unwrap();
        let mut foreign: Vec<usize> = inst
            .options
            .iter()
            .filter(|o| o.design == "q")
            .map(|o| o.index)
            .collect();
        foreign.sort();
        assert_eq!(foreign, vec![1, 2, 3]);
        assert!(matches!(
            make_instance(&seq, 0, Variant::Associative, &pool[..1], 9),
            Err(InstanceError::InsufficientPool { available: 0, .. })
        ));
    }

    #[test]
    fn same_seed_same_instance() {
        let seqs = vec![pleats("a", 5), pleats("b", 2), pleats("c", 3)];
        let a = generate_instances(&seqs, &[Variant::Associative, Variant::Causal], 40, 7).unwrap();
        let b = generate_instances(&seqs, &[Variant::Associative, Variant::Causal], 40, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().any(|i| i.variant == Variant::Causal));
        assert!(a.iter().any(|i| i.variant == Variant::Associative));
    }

    #[test]
    fn choice_parsing() {
        assert_eq!(parse_choice(r"\boxed{B}"), Ok(Choice::B));
        assert_eq!(parse_choice("  \\boxed{D}\n"), Ok(Choice::D));
        assert_eq!(parse_choice(r"\boxed{E}"), Err(ChoiceError::InvalidOption("E".into())));
        assert_eq!(parse_choice(r"I think \boxed{A}"), Err(ChoiceError::NoMatch));
        assert_eq!(parse_choice("B"), Err(ChoiceError::NoMatch));
        assert_eq!(
            parse_choice(r"\boxed{A} \boxed{B}"),
            Err(ChoiceError::MultipleMatches(2))
        );
    }

    #[test]
    fn accuracy_cases() {
        let seq = pleats("p", 5);
        let insts: Vec<_> = (0..4)
            .map(|s| make_instance(&seq, 1, Variant::Causal, &[], s).unwrap())
            .collect();
        let right: Vec<_> = insts.iter().map(|i| Ok(i.correct)).collect();
        assert_eq!(score_accuracy(&insts, &right), Ok(1.0));
        let rejected: Vec<_> = insts.iter().map(|_| Err(ChoiceError::NoMatch)).collect();
        assert_eq!(score_accuracy(&insts, &rejected), Ok(0.0));
        assert_eq!(
            score_accuracy(&insts, &right[..3]),
            Err(AccuracyError::CountMismatch {
                instances: 4,
                answers: 3
            })
        );
    }
}
