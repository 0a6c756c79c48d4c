//! The FOLD subset used by the environment: parsing, validation, canonical
//! serialization and design metadata.
//!
//! Only the four core arrays are interpreted. Every other top-level key is
//! kept as its raw JSON text and written back untouched.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;
use thiserror::Error;

/// A point in paper units.
pub type Point = [f64; 2];

const CORE_KEYS: [&str; 4] = [
    "vertices_coords",
    "edges_vertices",
    "edges_assignment",
    "faces_vertices",
];

/// Fold assignment of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Assignment {
    /// Mountain fold.
    M,
    /// Valley fold.
    V,
    /// Raw paper boundary.
    B,
    /// Flat (unfolded) auxiliary line.
    F,
}

impl Assignment {
    pub fn as_str(self) -> &'static str {
        match self {
            Assignment::M => "M",
            Assignment::V => "V",
            Assignment::B => "B",
            Assignment::F => "F",
        }
    }

    /// True for mountain and valley creases.
    pub fn is_fold(self) -> bool {
        matches!(self, Assignment::M | Assignment::V)
    }

    pub fn opposite(self) -> Assignment {
        match self {
            Assignment::M => Assignment::V,
            Assignment::V => Assignment::M,
            other => other,
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Assignment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "M" => Ok(Assignment::M),
            "V" => Ok(Assignment::V),
            "B" => Ok(Assignment::B),
            "F" => Ok(Assignment::F),
            other => Err(format!("unknown assignment `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FoldError {
    #[error("malformed FOLD document: {0}")]
    Syntax(String),
    #[error("schema error in `{key}`: {reason}")]
    Schema { key: String, reason: String },
    #[error("{owner} {index} references vertex {vertex}, but there are only {count} vertices")]
    Index {
        owner: &'static str,
        index: usize,
        vertex: usize,
        count: usize,
    },
    #[error("edges_assignment has {assignments} entries for {edges} edges")]
    Mismatch { edges: usize, assignments: usize },
}

fn schema(key: &str, reason: impl Into<String>) -> FoldError {
    FoldError::Schema {
        key: key.to_owned(),
        reason: reason.into(),
    }
}

/// A validated FOLD document.
///
/// Values are immutable once built; use [`FoldFile::new`] or [`parse_fold`].
#[derive(Clone, Debug, PartialEq)]
pub struct FoldFile {
    vertices_coords: Vec<Point>,
    edges_vertices: Vec<[usize; 2]>,
    edges_assignment: Vec<Assignment>,
    faces_vertices: Vec<Vec<usize>>,
    extra_fields: BTreeMap<String, String>,
}

impl FoldFile {
    pub fn new(
        vertices_coords: Vec<Point>,
        edges_vertices: Vec<[usize; 2]>,
        edges_assignment: Vec<Assignment>,
        faces_vertices: Vec<Vec<usize>>,
        extra_fields: BTreeMap<String, String>,
    ) -> Result<Self, FoldError> {
        let file = FoldFile {
            vertices_coords,
            edges_vertices,
            edges_assignment,
            faces_vertices,
            extra_fields,
        };
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), FoldError> {
        let count = self.vertices_coords.len();
        for (i, p) in self.vertices_coords.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(schema("vertices_coords", format!("vertex {i} is not finite")));
            }
        }
        if self.edges_vertices.len() != self.edges_assignment.len() {
            return Err(FoldError::Mismatch {
                edges: self.edges_vertices.len(),
                assignments: self.edges_assignment.len(),
            });
        }
        for (index, e) in self.edges_vertices.iter().enumerate() {
            for &vertex in e {
                if vertex >= count {
                    return Err(FoldError::Index {
                        owner: "edge",
                        index,
                        vertex,
                        count,
                    });
                }
            }
            if e[0] == e[1] {
                return Err(schema("edges_vertices", format!("edge {index} is a loop")));
            }
        }
        for (index, face) in self.faces_vertices.iter().enumerate() {
            for &vertex in face {
                if vertex >= count {
                    return Err(FoldError::Index {
                        owner: "face",
                        index,
                        vertex,
                        count,
                    });
                }
            }
            if face.len() < 3 {
                return Err(schema(
                    "faces_vertices",
                    format!("face {index} has fewer than 3 vertices"),
                ));
            }
            let mut sorted = face.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(schema("faces_vertices", format!("face {index} repeats a vertex")));
            }
        }
        for key in self.extra_fields.keys() {
            if CORE_KEYS.contains(&key.as_str()) {
                return Err(schema(key, "core key stored as an extra field"));
            }
        }
        Ok(())
    }

    pub fn vertices_coords(&self) -> &[Point] {
        &self.vertices_coords
    }

    pub fn edges_vertices(&self) -> &[[usize; 2]] {
        &self.edges_vertices
    }

    pub fn edges_assignment(&self) -> &[Assignment] {
        &self.edges_assignment
    }

    pub fn faces_vertices(&self) -> &[Vec<usize>] {
        &self.faces_vertices
    }

    /// Unknown keys, mapped to their raw JSON text.
    pub fn extra_fields(&self) -> &BTreeMap<String, String> {
        &self.extra_fields
    }

    /// Returns a copy with one extra field set. `raw_json` must be a JSON value.
    pub fn with_extra_field(mut self, key: &str, raw_json: &str) -> Result<Self, FoldError> {
        if CORE_KEYS.contains(&key) {
            return Err(schema(key, "core key stored as an extra field"));
        }
        serde_json::from_str::<Value>(raw_json).map_err(|e| schema(key, e.to_string()))?;
        self.extra_fields.insert(key.to_owned(), raw_json.to_owned());
        Ok(self)
    }

    /// Copy without extra fields, for comparing geometry alone.
    pub fn without_extras(&self) -> FoldFile {
        FoldFile {
            extra_fields: BTreeMap::new(),
            ..self.clone()
        }
    }

    /// Reads a string-valued extra field.
    pub fn extra_str(&self, key: &str) -> Option<String> {
        let raw = self.extra_fields.get(key)?;
        serde_json::from_str::<String>(raw).ok()
    }

    /// Number of non-boundary edges.
    pub fn crease_count(&self) -> usize {
        self.edges_assignment.iter().filter(|a| **a != Assignment::B).count()
    }
}

fn core_value(map: &BTreeMap<String, Box<RawValue>>, key: &str) -> Result<Vec<Value>, FoldError> {
    let raw = map.get(key).ok_or_else(|| schema(key, "missing"))?;
    match serde_json::from_str::<Value>(raw.get()) {
        Ok(Value::Array(items)) => Ok(items),
        Ok(_) => Err(schema(key, "expected an array")),
        Err(e) => Err(FoldError::Syntax(e.to_string())),
    }
}

fn as_index(key: &str, v: &Value) -> Result<usize, FoldError> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| schema(key, format!("expected a vertex index, found {v}")))
}

fn index_list(key: &str, v: &Value) -> Result<Vec<usize>, FoldError> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_index(key, x)).collect(),
        other => Err(schema(key, format!("expected an array, found {other}"))),
    }
}

/// Parses a FOLD document.
pub fn parse_fold(text: &str) -> Result<FoldFile, FoldError> {
    let map: BTreeMap<String, Box<RawValue>> =
        serde_json::from_str(text).map_err(|e| FoldError::Syntax(e.to_string()))?;

    let mut vertices = Vec::new();
    for v in core_value(&map, "vertices_coords")? {
        let coords = match &v {
            Value::Array(c) if c.len() == 2 => c,
            _ => return Err(schema("vertices_coords", format!("expected [x, y], found {v}"))),
        };
        let x = coords[0].as_f64();
        let y = coords[1].as_f64();
        match (x, y) {
            (Some(x), Some(y)) => vertices.push([x, y]),
            _ => return Err(schema("vertices_coords", format!("non-numeric coordinate {v}"))),
        }
    }

    let mut edges = Vec::new();
    for e in core_value(&map, "edges_vertices")? {
        let pair = index_list("edges_vertices", &e)?;
        if pair.len() != 2 {
            return Err(schema("edges_vertices", format!("expected a pair, found {e}")));
        }
        edges.push([pair[0], pair[1]]);
    }

    let mut assignments = Vec::new();
    for a in core_value(&map, "edges_assignment")? {
        let s = a
            .as_str()
            .ok_or_else(|| schema("edges_assignment", format!("expected a string, found {a}")))?;
        assignments.push(
            s.parse::<Assignment>()
                .map_err(|reason| schema("edges_assignment", reason))?,
        );
    }

    let faces = core_value(&map, "faces_vertices")?
        .iter()
        .map(|f| index_list("faces_vertices", f))
        .collect::<Result<Vec<_>, _>>()?;

    let extra_fields = map
        .iter()
        .filter(|(k, _)| !CORE_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.get().to_owned()))
        .collect();

    FoldFile::new(vertices, edges, assignments, faces, extra_fields)
}

/// Shortest round-trip decimal, with `-0` folded into `0`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".to_owned()
    } else {
        format!("{x}")
    }
}

fn write_list<T>(out: &mut String, items: &[T], mut item: impl FnMut(&mut String, &T)) {
    out.push('[');
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        item(out, x);
    }
    out.push(']');
}

fn write_indices(out: &mut String, items: &[usize]) {
    write_list(out, items, |o, i| o.push_str(&i.to_string()));
}

/// Canonical text form: fixed key order, one key per line, shortest
/// round-trip numbers. Equal files give byte-identical output.
pub fn serialize_fold(f: &FoldFile) -> String {
    let mut out = String::from("{\n");

    out.push_str("  \"vertices_coords\": ");
    write_list(&mut out, &f.vertices_coords, |o, p| {
        o.push('[');
        o.push_str(&format_number(p[0]));
        o.push(',');
        o.push_str(&format_number(p[1]));
        o.push(']');
    });
    out.push_str(",\n  \"edges_vertices\": ");
    write_list(&mut out, &f.edges_vertices, |o, e| write_indices(o, e));
    out.push_str(",\n  \"edges_assignment\": ");
    write_list(&mut out, &f.edges_assignment, |o, a| {
        o.push('"');
        o.push_str(a.as_str());
        o.push('"');
    });
    out.push_str(",\n  \"faces_vertices\": ");
    write_list(&mut out, &f.faces_vertices, |o, face| write_indices(o, face));

    for (key, raw) in &f.extra_fields {
        out.push_str(",\n  ");
        out.push_str(&serde_json::to_string(key).expect("string keys serialize"));
        out.push_str(": ");
        out.push_str(raw);
    }
    out.push_str("\n}\n");
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Complexity {
    Easy,
    Medium,
    Hard,
}

/// Tier boundaries for [`classify_complexity`]. Upper bounds are inclusive.
///
/// Vertex bounds are off by default; when set, the harder of the two tiers wins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComplexityThresholds {
    pub easy_max_creases: usize,
    pub medium_max_creases: usize,
    pub easy_max_vertices: Option<usize>,
    pub medium_max_vertices: Option<usize>,
}

impl Default for ComplexityThresholds {
    fn default() -> Self {
        ComplexityThresholds {
            easy_max_creases: 20,
            medium_max_creases: 60,
            easy_max_vertices: None,
            medium_max_vertices: None,
        }
    }
}

fn tier(count: usize, easy: Option<usize>, medium: Option<usize>) -> Complexity {
    match (easy, medium) {
        (Some(e), _) if count <= e => Complexity::Easy,
        (_, Some(m)) if count <= m => Complexity::Medium,
        (None, None) => Complexity::Easy,
        (Some(_), None) => Complexity::Medium,
        _ => Complexity::Hard,
    }
}

pub fn classify_complexity(vertex_count: usize, crease_count: usize, thresholds: &ComplexityThresholds) -> Complexity {
    let by_creases = tier(
        crease_count,
        Some(thresholds.easy_max_creases),
        Some(thresholds.medium_max_creases),
    );
    let by_vertices = tier(
        vertex_count,
        thresholds.easy_max_vertices,
        thresholds.medium_max_vertices,
    );
    by_creases.max(by_vertices)
}

/// Category and complexity tags for one design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub category: String,
    pub complexity: Complexity,
    pub vertex_count: usize,
    pub crease_count: usize,
}

impl DesignMeta {
    pub fn describe(fold: &FoldFile, category: &str, thresholds: &ComplexityThresholds) -> Self {
        let vertex_count = fold.vertices_coords().len();
        let crease_count = fold.crease_count();
        DesignMeta {
            category: category.to_owned(),
            complexity: classify_complexity(vertex_count, crease_count, thresholds),
            vertex_count,
            crease_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLANK: &str = r#"{
        "vertices_coords": [[0,0],[10,0],[10,10],[0,10]],
        "edges_vertices": [[0,1],[1,2],[2,3],[3,0]],
        "edges_assignment": ["B","B","B","B"],
        "faces_vertices": [[0,1,2,3]]
    }"#;

    #[test]
    fn blank_square_parses() {
        let f = parse_fold(BLANK).unwrap();
        assert_eq!(f.vertices_coords().len(), 4);
        assert_eq!(f.faces_vertices().len(), 1);
        assert_eq!(f.crease_count(), 0);
    }

    #[test]
    fn assignment_length_mismatch() {
        let text = BLANK.replace(r#"["B","B","B","B"]"#, r#"["B","B","B"]"#);
        assert_eq!(
            parse_fold(&text),
            Err(FoldError::Mismatch {
                edges: 4,
                assignments: 3
            })
        );
    }

    #[test]
    fn dangling_vertex_reference() {
        let text = BLANK.replace("[3,0]]", "[3,7]]");
        assert!(matches!(
            parse_fold(&text),
            Err(FoldError::Index {
                owner: "edge",
                index: 3,
                vertex: 7,
                ..
            })
        ));
    }

    #[test]
    fn syntax_and_schema_errors() {
        assert!(matches!(
            parse_fold("{\"vertices_coords\": [[0,0]"),
            Err(FoldError::Syntax(_))
        ));
        assert!(matches!(parse_fold("[1,2]"), Err(FoldError::Syntax(_))));
        let missing = BLANK.replace("\"faces_vertices\": [[0,1,2,3]]", "\"faces\": 1");
        assert!(matches!(parse_fold(&missing), Err(FoldError::Schema { key, .. }) if key == "faces_vertices"));
        let bad = BLANK.replace("\"B\",\"B\",\"B\",\"B\"", "\"B\",\"B\",\"B\",\"Q\"");
        assert!(matches!(parse_fold(&bad), Err(FoldError::Schema { .. })));
        let three_d = BLANK.replace("[[0,0],", "[[0,0,1],");
        assert!(matches!(parse_fold(&three_d), Err(FoldError::Schema { .. })));
        let repeated = BLANK.replace("[[0,1,2,3]]", "[[0,1,1,3]]");
        assert!(matches!(parse_fold(&repeated), Err(FoldError::Schema { .. })));
    }

    #[test]
    fn serialization_is_canonical() {
        let f = parse_fold(BLANK).unwrap();
        let a = serialize_fold(&f);
        let b = serialize_fold(&f);
        assert_eq!(a, b);
        assert!(a.starts_with("{\n  \"vertices_coords\": [[0,0],[10,0],[10,10],[0,10]],\n"));
        assert_eq!(parse_fold(&a).unwrap(), f);
    }

    #[test]
    fn extra_fields_survive() {
        let text = BLANK.replacen(
            '{',
            "{\"file_author\": \"x\", \"frame_classes\": [\"creasePattern\"],",
            1,
        );
        let f = parse_fold(&text).unwrap();
        let out = serialize_fold(&f);
        assert!(out.contains("\"file_author\": \"x\""));
        assert!(out.contains("\"frame_classes\": [\"creasePattern\"]"));
        assert_eq!(f.extra_str("file_author").as_deref(), Some("x"));
        assert_eq!(parse_fold(&out).unwrap(), f);
    }

    #[test]
    fn numbers_use_shortest_form() {
        assert_eq!(format_number(5.0), "5");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(format_number(4.142135623730951), "4.142135623730951");
        let x = 7.0710678118654755_f64;
        assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn complexity_defaults() {
        let t = ComplexityThresholds::default();
        assert_eq!(classify_complexity(4, 0, &t), Complexity::Easy);
        assert_eq!(classify_complexity(30, 20, &t), Complexity::Easy);
        assert_eq!(classify_complexity(30, 21, &t), Complexity::Medium);
        assert_eq!(classify_complexity(30, 60, &t), Complexity::Medium);
        assert_eq!(classify_complexity(30, 61, &t), Complexity::Hard);
    }

    #[test]
    fn complexity_is_monotone_on_a_grid() {
        let configs = [
            ComplexityThresholds::default(),
            ComplexityThresholds {
                easy_max_creases: 3,
                medium_max_creases: 7,
                easy_max_vertices: Some(5),
                medium_max_vertices: Some(9),
            },
            ComplexityThresholds {
                easy_max_creases: 0,
                medium_max_creases: 0,
                easy_max_vertices: None,
                medium_max_vertices: Some(4),
            },
        ];
        for t in &configs {
            for v in 0..80 {
                for c in 0..80 {
                    let here = classify_complexity(v, c, t);
                    assert!(classify_complexity(v + 1, c, t) >= here, "{t:?} v={v} c={c}");
                    assert!(classify_complexity(v, c + 1, t) >= here, "{t:?} v={v} c={c}");
                }
            }
        }
    }
}
