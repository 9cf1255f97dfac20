//! Batch front end over the solver library: generate synthetic scenes,
//! solve single five-pair samples, run the full consensus loop, or
//! classify an existing matrix pool.  All file formats are JSON lines;
//! reports are pretty-printed JSON.  Exit codes: 0 on success, 2 on input
//! or configuration errors, 3 when sampling produced no candidate at all.

use clap::{Parser, Subcommand};
use dyadic_pose::io;
use dyadic_pose::ransac::{self, RansacError, RunConfig};
use dyadic_pose::relpose::{five_point_solve, EpipolarSample};
use dyadic_pose::scene;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dyadic-pose", version, about = "Exact 2-adic relative pose from five-point samples")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic scene with exact ground truth
    Simulate {
        /// Number of correspondences
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Fraction of pairs whose second point is replaced by noise
        #[arg(long, default_value_t = 0.0)]
        outlier_frac: f64,
        /// Working precision in bits
        #[arg(long, default_value_t = 16)]
        m: u32,
        /// Grid resolution in bits; recorded for pixel workflows, residue
        /// output does not depend on it
        #[arg(long, default_value_t = 8)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output correspondence file
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one five-pair sample and print its candidates
    Solve {
        /// Correspondence file
        #[arg(long = "in")]
        input: PathBuf,
        /// Five distinct zero-based pair indices, comma separated
        #[arg(long)]
        sample: String,
        /// Working precision in bits; defaults to the file's precision
        #[arg(long)]
        m: Option<u32>,
    },
    /// Run the consensus loop over a correspondence file
    Ransac {
        /// Correspondence file
        #[arg(long = "in")]
        input: PathBuf,
        /// Number of sample slots
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Greedy splitting budget for the vote dendrogram
        #[arg(long, default_value_t = 12)]
        k: usize,
        /// Working precision in bits
        #[arg(long, default_value_t = 16)]
        m: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Ranking tie tolerance as an exact fraction p/q
        #[arg(long)]
        tie_tol: Option<String>,
        /// Redraws allowed per slot before it reports failure
        #[arg(long, default_value_t = 40)]
        max_resamples: usize,
        /// Report file
        #[arg(long)]
        report: PathBuf,
    },
    /// Classify a pool of matrices without solving anything
    Cluster {
        /// Matrix file, one {"e": [[..],[..],[..]], "m": M} per line
        #[arg(long = "in")]
        input: PathBuf,
        /// Greedy splitting budget
        #[arg(long, default_value_t = 12)]
        k: usize,
        /// Ranking tie tolerance as an exact fraction p/q
        #[arg(long)]
        tie_tol: Option<String>,
    },
}

enum CliError {
    /// Bad file, bad flag, bad combination: exit 2.
    Input(String),
    /// The pipeline ran but no sample yielded a candidate: exit 3.
    NoCandidates(String),
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RansacError> for CliError {
    fn from(e: RansacError) -> Self {
        match e {
            RansacError::AllSamplesFailed(_) => CliError::NoCandidates(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::NoCandidates(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Simulate {
            points,
            outlier_frac,
            m,
            n,
            seed,
            out,
        } => simulate(points, outlier_frac, m, n, seed, &out),
        Cmd::Solve { input, sample, m } => solve(&input, &sample, m),
        Cmd::Ransac {
            input,
            samples,
            k,
            m,
            seed,
            tie_tol,
            max_resamples,
            report,
        } => run_ransac(&input, samples, k, m, seed, tie_tol, max_resamples, &report),
        Cmd::Cluster { input, k, tie_tol } => cluster(&input, k, tie_tol),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses an exact nonnegative rational, either `p` or `p/q`.
fn parse_ratio(s: &str) -> Result<BigRational, CliError> {
    let (num, den) = s.split_once('/').unwrap_or((s, "1"));
    let bad = |part: &str| CliError::Input(format!("tie tolerance: `{part}` is not an integer"));
    let n: BigInt = num.trim().parse().map_err(|_| bad(num))?;
    let d: BigInt = den.trim().parse().map_err(|_| bad(den))?;
    if d.is_zero() {
        return Err(CliError::Input("tie tolerance denominator is zero".into()));
    }
    Ok(BigRational::new(n, d))
}

/// Parses `i1,...,i5` into five distinct in-range indices.
fn parse_sample(spec: &str, len: usize) -> Result<[usize; 5], CliError> {
    let parts: Vec<usize> = spec
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("sample: `{t}` is not an index")))
        })
        .collect::<Result<_, _>>()?;
    if parts.len() != 5 {
        return Err(CliError::Input(format!(
            "sample needs exactly five indices, got {}",
            parts.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &i in &parts {
        if i >= len {
            return Err(CliError::Input(format!(
                "sample index {i} out of range for {len} pairs"
            )));
        }
        if !seen.insert(i) {
            return Err(CliError::Input(format!("sample index {i} repeats")));
        }
    }
    Ok([parts[0], parts[1], parts[2], parts[3], parts[4]])
}

fn simulate(
    points: usize,
    outlier_frac: f64,
    m: u32,
    n: u32,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    if !(4..=48).contains(&m) {
        return Err(CliError::Input("precision must be in 4..=48".into()));
    }
    if !(1..=64).contains(&n) {
        return Err(CliError::Input("grid resolution must be in 1..=64".into()));
    }
    if !(0.0..=1.0).contains(&outlier_frac) {
        return Err(CliError::Input("outlier fraction must be in 0..=1".into()));
    }
    if points == 0 {
        return Err(CliError::Input("need at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sc = scene::generate_scene(&mut rng, m, points, outlier_frac)
        .map_err(|e| CliError::Input(format!("scene generation failed: {e}")))?;
    let outliers = sc.outliers.iter().filter(|&&b| b).count();
    let set = io::CorrespondenceSet {
        pairs: sc.pairs,
        m,
        ground_truth: Some(sc.e_gt),
    };
    let mut w = create(out)?;
    io::write_jsonl(&mut w, &set)?;
    println!(
        "{}",
        json!({"written": points, "outliers": outliers, "m": m, "out": out.display().to_string()})
    );
    Ok(())
}

fn solve(input: &Path, sample_spec: &str, m: Option<u32>) -> Result<(), CliError> {
    let set = io::read_jsonl(open(input)?)?;
    let m = m.unwrap_or(set.m);
    if !(1..=64).contains(&m) {
        return Err(CliError::Input("precision must be in 1..=64".into()));
    }
    let idx = parse_sample(sample_spec, set.pairs.len())?;
    let chosen = std::array::from_fn(|i| set.pairs[idx[i]]);
    let sample = EpipolarSample::new(chosen);
    let out = five_point_solve(&sample, m)
        .map_err(|e| CliError::NoCandidates(format!("sample failed: {e}")))?;
    let candidates: Vec<_> = out
        .candidates
        .iter()
        .map(|c| {
            json!({
                "x": c.x.iter().map(|v| v.residue()).collect::<Vec<_>>(),
                "entries": io::mat3_residues(&c.e),
                "canonical": io::mat3_residues(&c.e_canonical),
                "component": c.component,
                "chart": c.chart,
            })
        })
        .collect();
    let doc = json!({
        "m": m,
        "sample": idx.to_vec(),
        "component_count": out.component_count,
        "skipped_positive_dimensional": out.skipped_positive_dimensional,
        "lift_failures": out.lift_failures,
        "rejected": out.rejected,
        "lift_ambiguity": out.lift_ambiguity,
        "candidates": candidates,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("report is a tree"));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_ransac(
    input: &Path,
    samples: usize,
    k: usize,
    m: u32,
    seed: u64,
    tie_tol: Option<String>,
    max_resamples: usize,
    report_path: &Path,
) -> Result<(), CliError> {
    let set = io::read_jsonl(open(input)?)?;
    let mut cfg = RunConfig::new(m, samples, k, seed);
    cfg.max_resamples = max_resamples;
    if let Some(t) = tie_tol {
        cfg.tie_tol = parse_ratio(&t)?;
    }
    let report = ransac::run_ransacp(&set.pairs, &cfg, set.ground_truth.as_ref())?;
    let mut w = create(report_path)?;
    io::write_report(&mut w, &report)?;
    println!(
        "{}",
        json!({
            "total_votes": report.total_votes,
            "winner_votes": report.winner_votes,
            "runner_up_votes": report.runner_up_votes,
            "agreement_depth": report.agreement_depth,
            "report": report_path.display().to_string(),
        })
    );
    Ok(())
}

fn cluster(input: &Path, k: usize, tie_tol: Option<String>) -> Result<(), CliError> {
    let (mats, m) = io::read_matrices(open(input)?)?;
    let tol = match tie_tol {
        Some(t) => parse_ratio(&t)?,
        None => dyadic_pose::cluster::default_tie_tol(),
    };
    let report = ransac::classify_matrices(&mats, k, &tol)?;
    let curve: Vec<_> = report
        .validity_curve
        .iter()
        .map(|(pos, v)| json!({"position": pos, "validity": io::rational_str(v)}))
        .collect();
    let clusters: Vec<_> = report
        .clusters
        .iter()
        .zip(&report.centres)
        .map(|(c, centre)| {
            json!({
                "rank": c.rank,
                "size": c.size,
                "density": io::rational_str(&c.density),
                "central_measure": io::rational_str(&c.central_measure),
                "measure": io::rational_str(&c.measure),
                "branch_free_depth": c.branch_free_depth,
                "centre_index": c.centre_index,
                "centre": io::mat3_residues(centre),
            })
        })
        .collect();
    let doc = json!({
        "m": m,
        "pool": mats.len(),
        "chosen_position": report.chosen_position,
        "validity_curve": curve,
        "clusters": clusters,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("report is a tree"));
    Ok(())
}
