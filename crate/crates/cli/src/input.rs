//! Turning command-line curve arguments into curves.

use std::path::Path;

use spherical::generators::torus_projection;
use spherical::{parse_gauss, realize, PlaneCurve};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{input}: {reason}")]
    Parse { input: String, reason: String },
    #[error("{input}: word is not realizable on the sphere")]
    Unrealizable { input: String },
    #[error("{path}: {reason}")]
    File { path: String, reason: String },
}

/// One curve together with the text it came from.
#[derive(Clone, Debug)]
pub struct Sourced {
    pub source: String,
    pub curve: PlaneCurve,
}

/// Reads `torus:p,q`, `@file` (one input per line, `#` comments) or a
/// literal Gauss code. An unsigned code yields every embedding.
pub fn resolve(arg: &str) -> Result<Vec<Sourced>, InputError> {
    if let Some(path) = arg.strip_prefix('@') {
        let text = std::fs::read_to_string(Path::new(path))
            .map_err(|e| InputError::File { path: path.to_string(), reason: e.to_string() })?;
        let mut out = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if line.starts_with('@') {
                return Err(InputError::File { path: path.to_string(), reason: "nested @file".into() });
            }
            out.extend(resolve(line)?);
        }
        return Ok(out);
    }
    if let Some(pair) = arg.strip_prefix("torus:") {
        let bad = |reason: String| InputError::Parse { input: arg.to_string(), reason };
        let (p, q) = pair.split_once(',').ok_or_else(|| bad("expected torus:p,q".into()))?;
        let p: usize = p.trim().parse().map_err(|_| bad(format!("bad p `{p}`")))?;
        let q: usize = q.trim().parse().map_err(|_| bad(format!("bad q `{q}`")))?;
        let curve = torus_projection(p, q).map_err(|e| bad(e.to_string()))?;
        return Ok(vec![Sourced { source: arg.to_string(), curve }]);
    }
    let word = parse_gauss(arg).map_err(|e| InputError::Parse { input: arg.to_string(), reason: e.to_string() })?;
    let curves = realize(&word);
    if curves.is_empty() {
        return Err(InputError::Unrealizable { input: arg.to_string() });
    }
    Ok(curves.into_iter().map(|curve| Sourced { source: arg.to_string(), curve }).collect())
}
