//! JSONL input of correspondences and JSON output of run reports.
//!
//! A correspondence file holds one JSON object per line.  Residue lines
//! carry the homogeneous points directly; pixel lines carry grid
//! coordinates that are encoded on load.  An optional first line records
//! the ground-truth essential matrix.  All exact rationals are rendered as
//! `p/q` strings so reports stay lossless.

use crate::grid::{grid_encode, GridCoord};
use crate::mat::{Mat3, Vec3};
use crate::padic::PadicInt;
use crate::ransac::{RansacReport, RunConfig};
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::{json, Value};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: &'static str },
    #[error("pixel {value} out of range for {bits} bits")]
    OutOfRange { value: u64, bits: u32 },
    #[error("mixed precisions {0} and {1}")]
    MixedPrecision(u32, u32),
    #[error("no correspondence lines")]
    Empty,
}

/// A loaded correspondence file: uniform-precision pairs plus the optional
/// ground truth from the header line.
#[derive(Clone, Debug)]
pub struct CorrespondenceSet {
    pub pairs: Vec<(Vec3, Vec3)>,
    pub m: u32,
    pub ground_truth: Option<Mat3>,
}

#[derive(Deserialize)]
struct RawLine {
    u: Option<[i64; 3]>,
    v: Option<[i64; 3]>,
    m: Option<u32>,
    px: Option<[u64; 2]>,
    px2: Option<[u64; 2]>,
    n: Option<u32>,
    ground_truth: Option<[[i64; 3]; 3]>,
}

fn vec3_from(raw: &[i64; 3], m: u32) -> Vec3 {
    [
        PadicInt::from_i64(raw[0], m),
        PadicInt::from_i64(raw[1], m),
        PadicInt::from_i64(raw[2], m),
    ]
}

fn mat3_from(raw: &[[i64; 3]; 3], m: u32) -> Mat3 {
    [
        vec3_from(&raw[0], m),
        vec3_from(&raw[1], m),
        vec3_from(&raw[2], m),
    ]
}

fn encode_coord(value: u64, n: u32) -> Result<PadicInt, IoError> {
    if n < 64 && value >= (1u64 << n) {
        return Err(IoError::OutOfRange { value, bits: n });
    }
    Ok(grid_encode(GridCoord::new(value, n)))
}

/// Grid-encodes one pixel pair into homogeneous points of precision `n`.
/// The third coordinate is pinned to 1.
pub fn encode_pixel_pair(
    px: [u64; 2],
    px2: [u64; 2],
    n: u32,
) -> Result<(Vec3, Vec3), IoError> {
    if n < 1 || n > 64 {
        return Err(IoError::OutOfRange { value: 0, bits: n });
    }
    let one = PadicInt::one(n);
    let u = [encode_coord(px[0], n)?, encode_coord(px[1], n)?, one];
    let v = [encode_coord(px2[0], n)?, encode_coord(px2[1], n)?, one];
    Ok((u, v))
}

/// Encodes a batch of pixel pairs at one grid resolution.
pub fn encode_correspondences(
    pixels: &[([u64; 2], [u64; 2])],
    n: u32,
) -> Result<Vec<(Vec3, Vec3)>, IoError> {
    pixels
        .iter()
        .map(|(px, px2)| encode_pixel_pair(*px, *px2, n))
        .collect()
}

/// Parses a correspondence file.  Residue and pixel lines may be mixed as
/// long as every line lands at one precision; the header, when present,
/// must come first and match that precision.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<CorrespondenceSet, IoError> {
    let mut pairs: Vec<(Vec3, Vec3)> = Vec::new();
    let mut m: Option<u32> = None;
    let mut gt: Option<(usize, [[i64; 3]; 3], u32)> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLine = serde_json::from_str(&line).map_err(|source| IoError::Parse {
            line: line_no,
            source,
        })?;
        if let Some(g) = raw.ground_truth {
            if !pairs.is_empty() || gt.is_some() {
                return Err(IoError::Malformed {
                    line: line_no,
                    msg: "ground-truth header must be the first line",
                });
            }
            let gm = raw.m.ok_or(IoError::Malformed {
                line: line_no,
                msg: "header needs a precision field",
            })?;
            if !(1..=64).contains(&gm) {
                return Err(IoError::Malformed {
                    line: line_no,
                    msg: "header precision out of 1..=64",
                });
            }
            gt = Some((line_no, g, gm));
            continue;
        }
        let (u, v, lm) = match (raw.u, raw.v, raw.m, raw.px, raw.px2, raw.n) {
            (Some(u), Some(v), Some(lm), None, None, None) => {
                if !(1..=64).contains(&lm) {
                    return Err(IoError::Malformed {
                        line: line_no,
                        msg: "precision out of 1..=64",
                    });
                }
                (vec3_from(&u, lm), vec3_from(&v, lm), lm)
            }
            (None, None, None, Some(px), Some(px2), Some(n)) => {
                let (u, v) = encode_pixel_pair(px, px2, n)?;
                (u, v, n)
            }
            _ => {
                return Err(IoError::Malformed {
                    line: line_no,
                    msg: "line is neither a residue pair nor a pixel pair",
                })
            }
        };
        match m {
            None => m = Some(lm),
            Some(prev) if prev != lm => return Err(IoError::MixedPrecision(prev, lm)),
            Some(_) => {}
        }
        pairs.push((u, v));
    }
    let m = m.ok_or(IoError::Empty)?;
    let ground_truth = match gt {
        Some((line, g, gm)) => {
            if gm != m {
                return Err(IoError::MixedPrecision(gm, m));
            }
            let _ = line;
            Some(mat3_from(&g, gm))
        }
        None => None,
    };
    Ok(CorrespondenceSet {
        pairs,
        m,
        ground_truth,
    })
}

fn vec3_residues(v: &Vec3) -> Vec<u64> {
    v.iter().map(|c| c.residue()).collect()
}

/// Row-major residues of a matrix, for JSON output.
pub fn mat3_residues(e: &Mat3) -> Vec<Vec<u64>> {
    e.iter().map(|row| vec3_residues(row)).collect()
}

/// Writes a correspondence set in the residue line format.
pub fn write_jsonl<W: Write>(w: &mut W, set: &CorrespondenceSet) -> Result<(), IoError> {
    if let Some(gt) = &set.ground_truth {
        let line = json!({"ground_truth": mat3_residues(gt), "m": set.m});
        writeln!(w, "{line}")?;
    }
    for (u, v) in &set.pairs {
        let line = json!({"u": vec3_residues(u), "v": vec3_residues(v), "m": set.m});
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Exact rational as a `p/q` string.
pub fn rational_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn config_json(cfg: &RunConfig) -> Value {
    json!({
        "m": cfg.m,
        "n": cfg.n,
        "samples": cfg.samples,
        "k": cfg.k,
        "seed": cfg.seed,
        "tie_tol": rational_str(&cfg.tie_tol),
        "max_resamples": cfg.max_resamples,
    })
}

/// Renders a full run report as one JSON document.
pub fn report_to_json(report: &RansacReport) -> Value {
    let curve: Vec<Value> = report
        .validity_curve
        .iter()
        .map(|(pos, v)| json!({"position": pos, "validity": rational_str(v)}))
        .collect();
    let clusters: Vec<Value> = report
        .clusters
        .iter()
        .map(|c| {
            json!({
                "rank": c.rank,
                "size": c.size,
                "density": rational_str(&c.density),
                "central_measure": rational_str(&c.central_measure),
                "measure": rational_str(&c.measure),
                "branch_free_depth": c.branch_free_depth,
                "centre_index": c.centre_index,
            })
        })
        .collect();
    let slots: Vec<Value> = report
        .slots
        .iter()
        .map(|s| {
            json!({
                "slot": s.slot,
                "resamples": s.resamples,
                "votes": s.votes,
                "failure": s.failure.map(|f| f.to_string()),
                "skipped_positive_dimensional": s.skipped_positive_dimensional,
                "lift_failures": s.lift_failures,
                "rejected": s.rejected,
                "lift_ambiguity": s.lift_ambiguity,
            })
        })
        .collect();
    json!({
        "config": config_json(&report.config),
        "total_votes": report.total_votes,
        "validity_curve": curve,
        "chosen_position": report.chosen_position,
        "clusters": clusters,
        "winner": {
            "entries": mat3_residues(&report.winner.entries),
            "canonical": mat3_residues(&report.winner.canonical),
            "pivot_index": report.winner.pivot_index,
            "pivot_valuation": report.winner.pivot_valuation,
            "sample_id": report.winner.sample_id,
            "votes": report.winner_votes,
        },
        "runner_up_votes": report.runner_up_votes,
        "agreement_depth": report.agreement_depth,
        "slots": slots,
    })
}

/// Writes the report as pretty-printed JSON.
pub fn write_report<W: Write>(w: &mut W, report: &RansacReport) -> Result<(), IoError> {
    let doc = report_to_json(report);
    writeln!(w, "{}", serde_json::to_string_pretty(&doc).expect("report is a tree"))?;
    Ok(())
}

#[derive(Deserialize)]
struct RawMatrixLine {
    e: [[i64; 3]; 3],
    m: u32,
}

/// Parses a file of essential matrices, one per line, for standalone
/// clustering runs.
pub fn read_matrices<R: BufRead>(reader: R) -> Result<(Vec<Mat3>, u32), IoError> {
    let mut out = Vec::new();
    let mut m: Option<u32> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawMatrixLine =
            serde_json::from_str(&line).map_err(|source| IoError::Parse {
                line: line_no,
                source,
            })?;
        if !(1..=64).contains(&raw.m) {
            return Err(IoError::Malformed {
                line: line_no,
                msg: "precision out of 1..=64",
            });
        }
        match m {
            None => m = Some(raw.m),
            Some(prev) if prev != raw.m => return Err(IoError::MixedPrecision(prev, raw.m)),
            Some(_) => {}
        }
        out.push(mat3_from(&raw.e, raw.m));
    }
    let m = m.ok_or(IoError::Empty)?;
    Ok((out, m))
}
