//! Strict parsing of agent fold commands.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::fold::{format_number, Assignment, Point};
use crate::kernel::PAPER_SIZE;

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum ActionError {
    #[error("malformed action text: {0}")]
    Malformed(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("coordinate {0:?} lies outside the paper")]
    OutOfBounds(Point),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreaseEnds {
    Points {
        p1: Point,
        p2: Point,
    },
    /// Indices into the current pattern's vertices.
    Vertices([usize; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreaseSpec {
    pub ends: CreaseEnds,
    pub assignment: Assignment,
}

impl CreaseSpec {
    pub fn points(p1: Point, p2: Point, assignment: Assignment) -> Self {
        CreaseSpec {
            ends: CreaseEnds::Points { p1, p2 },
            assignment,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    AddCrease,
    AddCreases,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    pub kind: ActionKind,
    pub creases: Vec<CreaseSpec>,
}

impl AgentAction {
    pub fn single(spec: CreaseSpec) -> Self {
        AgentAction {
            kind: ActionKind::AddCrease,
            creases: vec![spec],
        }
    }

    pub fn multi(creases: Vec<CreaseSpec>) -> Self {
        AgentAction {
            kind: ActionKind::AddCreases,
            creases,
        }
    }

    /// One-line command text that [`parse_action`] accepts.
    pub fn to_command(&self) -> String {
        fn point(p: Point) -> String {
            format!("[{}, {}]", format_number(p[0]), format_number(p[1]))
        }
        fn body(c: &CreaseSpec) -> String {
            match c.ends {
                CreaseEnds::Points { p1, p2 } => format!(
                    r#""p1": {}, "p2": {}, "assignment": "{}""#,
                    point(p1),
                    point(p2),
                    c.assignment
                ),
                CreaseEnds::Vertices([a, b]) => {
                    format!(r#""edge_vertices": [{a}, {b}], "assignment": "{}""#, c.assignment)
                }
            }
        }
        match self.kind {
            ActionKind::AddCrease => format!(r#"{{"action": "add_crease", {}}}"#, body(&self.creases[0])),
            ActionKind::AddCreases => {
                let items: Vec<String> = self.creases.iter().map(|c| format!("{{{}}}", body(c))).collect();
                format!(r#"{{"action": "add_creases", "creases": [{}]}}"#, items.join(", "))
            }
        }
    }
}

fn schema(msg: impl Into<String>) -> ActionError {
    ActionError::SchemaViolation(msg.into())
}

fn exact_keys(obj: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<(), ActionError> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(schema(format!("unexpected key `{key}` in {what}")));
        }
    }
    for key in allowed {
        if !obj.contains_key(*key) {
            return Err(schema(format!("missing key `{key}` in {what}")));
        }
    }
    Ok(())
}

fn coord(v: &Value, key: &str) -> Result<Point, ActionError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema(format!("`{key}` must be a pair of numbers")))?;
    let x = arr[0]
        .as_f64()
        .ok_or_else(|| schema(format!("`{key}` must be a pair of numbers")))?;
    let y = arr[1]
        .as_f64()
        .ok_or_else(|| schema(format!("`{key}` must be a pair of numbers")))?;
    let p = [x, y];
    if !(0.0..=PAPER_SIZE).contains(&x) || !(0.0..=PAPER_SIZE).contains(&y) {
        return Err(ActionError::OutOfBounds(p));
    }
    Ok(p)
}

fn assignment(v: &Value) -> Result<Assignment, ActionError> {
    match v.as_str() {
        Some("M") => Ok(Assignment::M),
        Some("V") => Ok(Assignment::V),
        _ => Err(schema("`assignment` must be \"M\" or \"V\"")),
    }
}

fn crease(obj: &Map<String, Value>, extra: &[&str], what: &str) -> Result<CreaseSpec, ActionError> {
    if obj.contains_key("edge_vertices") {
        let keys: Vec<&str> = extra.iter().copied().chain(["edge_vertices", "assignment"]).collect();
        exact_keys(obj, &keys, what)?;
        let pair = obj["edge_vertices"]
            .as_array()
            .filter(|a| a.len() == 2)
            .and_then(|a| Some([a[0].as_u64()? as usize, a[1].as_u64()? as usize]))
            .ok_or_else(|| schema("`edge_vertices` must be a pair of vertex indices"))?;
        return Ok(CreaseSpec {
            ends: CreaseEnds::Vertices(pair),
            assignment: assignment(&obj["assignment"])?,
        });
    }
    let keys: Vec<&str> = extra.iter().copied().chain(["p1", "p2", "assignment"]).collect();
    exact_keys(obj, &keys, what)?;
    Ok(CreaseSpec {
        ends: CreaseEnds::Points {
            p1: coord(&obj["p1"], "p1")?,
            p2: coord(&obj["p2"], "p2")?,
        },
        assignment: assignment(&obj["assignment"])?,
    })
}

/// Parses exactly one JSON object (surrounding whitespace allowed).
pub fn parse_action(raw: &str) -> Result<AgentAction, ActionError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| ActionError::Malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema("action must be a JSON object"))?;
    let name = obj
        .get("action")
        .ok_or_else(|| schema("missing key `action`"))?
        .as_str()
        .ok_or_else(|| schema("`action` must be a string"))?;
    match name {
        "add_crease" => Ok(AgentAction::single(crease(obj, &["action"], "add_crease")?)),
        "add_creases" => {
            exact_keys(obj, &["action", "creases"], "add_creases")?;
            let list = obj["creases"]
                .as_array()
                .ok_or_else(|| schema("`creases` must be a list"))?;
            if list.is_empty() {
                return Err(schema("`creases` must not be empty"));
            }
            let creases = list
                .iter()
                .map(|item| {
                    let o = item
                        .as_object()
                        .ok_or_else(|| schema("each crease must be an object"))?;
                    crease(o, &[], "crease")
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(AgentAction::multi(creases))
        }
        other => Err(ActionError::UnknownAction(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_crease() {
        let a = parse_action(r#"{"action": "add_crease", "p1": [0, 5], "p2": [5, 0], "assignment": "M"}"#).unwrap();
        assert_eq!(
            a,
            AgentAction::single(CreaseSpec::points([0.0, 5.0], [5.0, 0.0], Assignment::M))
        );
    }

    #[test]
    fn multi_crease() {
        let raw = r#"
        {
          "action": "add_creases",
          "creases": [
            { "p1": [0, 7.5], "p2": [7.5, 0], "assignment": "V" },
            { "p1": [2.5, 10], "p2": [10, 2.5], "assignment": "V" }
          ]
        }"#;
        let a = parse_action(raw).unwrap();
        assert_eq!(a.kind, ActionKind::AddCreases);
        assert_eq!(a.creases.len(), 2);
    }

    #[test]
    fn vertex_form() {
        let a = parse_action(r#"{"action": "add_crease", "edge_vertices": [0, 2], "assignment": "V"}"#).unwrap();
        assert_eq!(a.creases[0].ends, CreaseEnds::Vertices([0, 2]));
    }

    #[test]
    fn rejections() {
        assert_eq!(
            parse_action(r#"{"action": "add_crease", "p1": [0, 5], "p2": [11, 5], "assignment": "V"}"#),
            Err(ActionError::OutOfBounds([11.0, 5.0]))
        );
        assert!(matches!(
            parse_action(r#"{"action": "add_crease", "p1": [0, 5], "p2": [5"#),
            Err(ActionError::Malformed(_))
        ));
        assert!(matches!(
            parse_action(r#"{"action": "fold_all"}"#),
            Err(ActionError::UnknownAction(_))
        ));
        assert!(matches!(
            parse_action(r#"{"action": "add_crease", "p1": [0, 5], "p2": [5, 0], "assignment": "F"}"#),
            Err(ActionError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_action(r#"{"action": "add_crease", "p1": [0, 5], "p2": [5, 0], "assignment": "M", "note": 1}"#),
            Err(ActionError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_action(r#"{"action": "add_creases", "creases": []}"#),
            Err(ActionError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_action(r#"Sure! {"action": "add_crease", "p1": [0, 5], "p2": [5, 0], "assignment": "M"}"#),
            Err(ActionError::Malformed(_))
        ));
        assert!(matches!(
            parse_action(r#"{"action": "add_crease", "p1": [0, 5], "p2": [5, 0], "assignment": "M"} {}"#),
            Err(ActionError::Malformed(_))
        ));
        assert!(matches!(parse_action("[1, 2]"), Err(ActionError::SchemaViolation(_))));
    }

    #[test]
    fn command_text_round_trips() {
        let a = AgentAction::multi(vec![
            CreaseSpec::points([0.0, 2.5], [2.5, 0.0], Assignment::V),
            CreaseSpec {
                ends: CreaseEnds::Vertices([3, 1]),
                assignment: Assignment::M,
            },
        ]);
        assert_eq!(parse_action(&a.to_command()).unwrap(), a);
        let b = AgentAction::single(CreaseSpec::points([0.1, 9.9], [10.0, 1.0 / 3.0], Assignment::M));
        assert_eq!(parse_action(&b.to_command()).unwrap(), b);
    }
}
