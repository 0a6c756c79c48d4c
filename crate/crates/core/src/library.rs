//! Design collections on disk: `<id>.fold` files, each optionally paired
//! with an `<id>.jsonl` action script (one command per line).

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fold::{parse_fold, FoldError, FoldFile};

/// Extra FOLD key holding the design category.
pub const CATEGORY_KEY: &str = "forge:category";

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Fold {
        path: PathBuf,
        #[source]
        source: FoldError,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub id: String,
    pub fold: FoldFile,
    pub script: Option<Vec<String>>,
}

impl Design {
    pub fn category(&self) -> Option<String> {
        self.fold.extra_str(CATEGORY_KEY)
    }
}

/// Non-blank lines of a script file.
pub fn script_lines(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect()
}

fn read(path: &Path) -> Result<String, LibraryError> {
    std::fs::read_to_string(path).map_err(|source| LibraryError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_design(fold_path: &Path) -> Result<Design, LibraryError> {
    let fold = parse_fold(&read(fold_path)?).map_err(|source| LibraryError::Fold {
        path: fold_path.to_owned(),
        source,
    })?;
    let script_path = fold_path.with_extension("jsonl");
    let script = if script_path.is_file() {
        Some(script_lines(&read(&script_path)?))
    } else {
        None
    };
    let id = fold_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Design { id, fold, script })
}

/// Every `.fold` file in `dir`, sorted by id.
pub fn load_library(dir: &Path) -> Result<Vec<Design>, LibraryError> {
    let entries = std::fs::read_dir(dir).map_err(|source| LibraryError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| LibraryError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "fold") {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| load_design(p)).collect()
}
