//! Line-oriented trace files.
//!
//! ```text
//! # dyncolor trace v1
//! n=8
//! delta=3
//! mode=engine
//! profile=desk
//! ...
//! + 0 1
//! > 1:4
//! - 0 1
//! ```
//!
//! Header lines are `key=value`. Each update is `+ u v` or `- u v`; an
//! optional following `>` line lists the color changes the engine published
//! for that update as `vertex:color` tokens.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::graph::{Color, EdgeUpdate, VertexId};
use crate::params::{EngineMode, ParamSet, Profile};

pub const MAGIC: &str = "# dyncolor trace v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn malformed(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Malformed { line, message: message.into() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceHeader {
    pub n: usize,
    pub delta: usize,
    pub mode: EngineMode,
    pub params: ParamSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub update: EdgeUpdate,
    /// Color changes published after the update, sorted by vertex.
    pub outputs: Option<Vec<(VertexId, Color)>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl TraceFile {
    pub fn new(header: TraceHeader) -> Self {
        TraceFile { header, records: Vec::new() }
    }

    pub fn updates(&self) -> impl Iterator<Item = EdgeUpdate> + '_ {
        self.records.iter().map(|r| r.update)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        let _ = writeln!(out, "n={}", self.header.n);
        let _ = writeln!(out, "delta={}", self.header.delta);
        let _ = writeln!(out, "mode={}", self.header.mode);
        for (k, v) in self.header.params.pairs() {
            let _ = writeln!(out, "{k}={v}");
        }
        for r in &self.records {
            let sign = if r.update.is_insert() { '+' } else { '-' };
            let _ = writeln!(out, "{sign} {} {}", r.update.u, r.update.v);
            if let Some(outs) = &r.outputs {
                out.push('>');
                for (v, c) in outs {
                    let _ = write!(out, " {v}:{c}");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses a trace. `n` and `delta` are required; missing parameters
    /// default to the profile constructor for (`profile`, `epsilon`, `seed`).
    pub fn parse(text: &str) -> Result<TraceFile, TraceError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim_end() == MAGIC => {}
            Some((i, _)) => return Err(malformed(i, format!("expected '{MAGIC}'"))),
            None => return Err(malformed(1, "empty file")),
        }
        let mut header_pairs: Vec<(usize, String, String)> = Vec::new();
        let mut records: Vec<TraceRecord> = Vec::new();
        for (no, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('>') {
                let last = records.last_mut().ok_or_else(|| malformed(no, "output line before any update"))?;
                if last.outputs.is_some() {
                    return Err(malformed(no, "duplicate output line"));
                }
                let mut outs = Vec::new();
                for tok in rest.split_whitespace() {
                    let (v, c) = tok.split_once(':').ok_or_else(|| malformed(no, format!("bad output token '{tok}'")))?;
                    let v = v.parse().map_err(|_| malformed(no, format!("bad vertex in '{tok}'")))?;
                    let c = c.parse().map_err(|_| malformed(no, format!("bad color in '{tok}'")))?;
                    outs.push((v, c));
                }
                last.outputs = Some(outs);
                continue;
            }
            if line.starts_with('+') || line.starts_with('-') {
                let mut parts = line.split_whitespace();
                let sign = parts.next().unwrap_or_default();
                let u = parts.next().and_then(|s| s.parse().ok());
                let v = parts.next().and_then(|s| s.parse().ok());
                let (u, v) = match (sign, u, v, parts.next()) {
                    ("+" | "-", Some(u), Some(v), None) => (u, v),
                    _ => return Err(malformed(no, format!("bad update line '{line}'"))),
                };
                let update = if sign == "+" { EdgeUpdate::insert(u, v) } else { EdgeUpdate::delete(u, v) };
                records.push(TraceRecord { update, outputs: None });
                continue;
            }
            if !records.is_empty() {
                return Err(malformed(no, "header line after updates"));
            }
            let (k, v) = line.split_once('=').ok_or_else(|| malformed(no, format!("expected key=value, got '{line}'")))?;
            header_pairs.push((no, k.trim().to_string(), v.trim().to_string()));
        }
        let header = build_header(&header_pairs)?;
        Ok(TraceFile { header, records })
    }

    pub fn save(&self, path: &Path) -> Result<(), TraceError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TraceFile, TraceError> {
        TraceFile::parse(&std::fs::read_to_string(path)?)
    }
}

fn build_header(pairs: &[(usize, String, String)]) -> Result<TraceHeader, TraceError> {
    let find = |key: &str| pairs.iter().find(|(_, k, _)| k == key);
    let required = |key: &str| -> Result<usize, TraceError> {
        let (no, _, v) = find(key).ok_or_else(|| malformed(1, format!("missing header key '{key}'")))?;
        v.parse().map_err(|_| malformed(*no, format!("invalid {key} '{v}'")))
    };
    let n = required("n")?;
    let delta = required("delta")?;
    let parse_or = |key: &str, default: &str| -> (usize, String) {
        find(key).map(|(no, _, v)| (*no, v.clone())).unwrap_or((1, default.to_string()))
    };
    let (no, profile) = parse_or("profile", "desk");
    let profile: Profile = profile.parse().map_err(|e: String| malformed(no, e))?;
    let (no, eps) = parse_or("epsilon", "0.1");
    let epsilon: f64 = eps.parse().map_err(|_| malformed(no, format!("invalid epsilon '{eps}'")))?;
    let (no, seed) = parse_or("seed", "0");
    let seed: u64 = seed.parse().map_err(|_| malformed(no, format!("invalid seed '{seed}'")))?;
    let (no, mode) = parse_or("mode", "engine");
    let mode: EngineMode = mode.parse().map_err(|e: String| malformed(no, e))?;
    let mut params = ParamSet::for_profile(profile, n, delta, epsilon, seed);
    for (no, k, v) in pairs {
        if matches!(k.as_str(), "n" | "delta" | "mode") {
            continue;
        }
        params.set_key(k, v).map_err(|e| malformed(*no, e))?;
    }
    Ok(TraceHeader { n, delta, mode, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> TraceHeader {
        TraceHeader { n: 6, delta: 3, mode: EngineMode::Engine, params: ParamSet::desk(6, 3, 0.1, 42) }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let t = TraceFile::new(header());
        let text = t.to_text();
        assert!(text.lines().all(|l| l.starts_with('#') || l.contains('=')));
        assert_eq!(TraceFile::parse(&text).unwrap(), t);
    }

    #[test]
    fn three_updates_roundtrip() {
        let mut t = TraceFile::new(header());
        t.records.push(TraceRecord { update: EdgeUpdate::insert(0, 1), outputs: Some(vec![(1, 3)]) });
        t.records.push(TraceRecord { update: EdgeUpdate::insert(1, 2), outputs: Some(vec![]) });
        t.records.push(TraceRecord { update: EdgeUpdate::delete(0, 1), outputs: None });
        let back = TraceFile::parse(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), t.to_text());
    }

    #[test]
    fn minimal_header_uses_profile_defaults() {
        let t = TraceFile::parse("# dyncolor trace v1\nn=10\ndelta=4\n+ 0 1\n").unwrap();
        assert_eq!(t.header.params, ParamSet::desk(10, 4, 0.1, 0));
        assert_eq!(t.records.len(), 1);
    }

    #[test]
    fn malformed_lines_are_located() {
        let err = TraceFile::parse("# dyncolor trace v1\nn=10\ndelta=4\n+ 0\n").unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 4, .. }), "{err}");
        let err = TraceFile::parse("# dyncolor trace v1\nn=10\n").unwrap_err();
        assert!(err.to_string().contains("delta"));
        let err = TraceFile::parse("# dyncolor trace v1\nn=10\ndelta=4\nbogus=1\n").unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 4, .. }));
    }
}
