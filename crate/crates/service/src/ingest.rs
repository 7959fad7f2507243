//! JSONL item ingestion.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use hilrank_core::Item;
use serde::Deserialize;

use crate::error::{Result, ServiceError};

#[derive(Deserialize)]
struct ItemLine {
    id: String,
    features: Vec<f64>,
    prompt_scores: Vec<f64>,
    #[serde(default)]
    display_uri: Option<String>,
}

pub fn ingest_features(path: impl AsRef<Path>) -> Result<Vec<Item>> {
    parse_features(BufReader::new(File::open(path)?))
}

/// Parses one item per line. `D` and `B` come from the first item; blank
/// lines are skipped. Line numbers in errors are 1-based.
pub fn parse_features(reader: impl BufRead) -> Result<Vec<Item>> {
    let mut items: Vec<Item> = Vec::new();
    let mut ids = HashSet::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| ServiceError::Ingest { line: line_no, reason };
        let parsed: ItemLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let item = Item {
            id: parsed.id,
            features: parsed.features,
            prompt_scores: parsed.prompt_scores,
            display_uri: parsed.display_uri,
        };
        let (d, b) = items
            .first()
            .map_or((item.features.len(), item.prompt_scores.len()), |f| (f.features.len(), f.prompt_scores.len()));
        if item.features.len() != d {
            return Err(bad(format!("expected {d} features, got {}", item.features.len())));
        }
        if item.prompt_scores.len() != b {
            return Err(bad(format!("expected {b} prompt scores, got {}", item.prompt_scores.len())));
        }
        if d == 0 || b < 2 {
            return Err(bad(format!("need at least 1 feature and 2 prompt scores, got {d} and {b}")));
        }
        item.validate(d, b).map_err(|e| bad(e.to_string()))?;
        if !ids.insert(item.id.clone()) {
            return Err(ServiceError::DuplicateId { id: item.id, line: line_no });
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(hilrank_core::Error::EmptyItems.into());
    }
    Ok(items)
}
