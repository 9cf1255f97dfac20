//! Consensus over essential-matrix votes by ultrametric clustering.
//!
//! Each slot draws five correspondences, solves them exactly, and votes
//! with every candidate matrix it finds.  Votes are canonicalized, encoded
//! as degree-9 field elements, and clustered; the best-ranked cluster's
//! representative is the winning pose.  No inlier threshold appears
//! anywhere: agreement is measured by shared 2-adic digits.

use crate::cluster::{
    build_dendrogram, default_tie_tol, lbgp, rank_clusters, validity, validity_index,
    ClusterError, Clustering, Dendrogram,
};
use crate::field::{dist_level, encode_vector, UnramifiedElement};
use crate::mat::{mat_canonicalize, mat_to_vec9, Mat3, Vec3};
use crate::relpose::{five_point_solve, EpipolarSample, ResampleReason};
use crate::scene::epipolar_residual;
use num_rational::BigRational;
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Hard cap on how many candidates one five-point sample may contribute.
/// A generic sample has at most ten solutions; anything above that signals
/// a degenerate configuration and the surplus is dropped deterministically.
pub const MAX_VOTES_PER_SAMPLE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RansacError {
    #[error("need at least five correspondences, got {0}")]
    InsufficientData(usize),
    #[error("all {0} samples failed to produce a candidate")]
    AllSamplesFailed(usize),
    #[error("zero matrix has no canonical representative")]
    ZeroMatrix,
    #[error("bad configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Scales a matrix so its minimal-valuation entry becomes the power of two
/// carrying that valuation.  Two matrices represent the same projective
/// point over the 2-adic units exactly when their canonical forms agree.
pub fn canonicalize(e: &Mat3) -> Result<(Mat3, usize, u32), RansacError> {
    mat_canonicalize(e).ok_or(RansacError::ZeroMatrix)
}

/// One vote: a verified essential matrix from one sample slot.
#[derive(Clone, Debug)]
pub struct CandidateEssential {
    pub entries: Mat3,
    pub canonical: Mat3,
    /// Flat row-major index of the canonicalization pivot.
    pub pivot_index: usize,
    pub pivot_valuation: u32,
    /// Slot that produced the vote.
    pub sample_id: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Working precision in bits.
    pub m: u32,
    /// Grid resolution in bits for pixel input.
    pub n: u32,
    /// Number of sample slots.
    pub samples: usize,
    /// Greedy splitting budget for the vote dendrogram.
    pub k: usize,
    pub seed: u64,
    /// Relative gap treated as a tie when ranking clusters.
    pub tie_tol: BigRational,
    /// Redraws allowed per slot before it reports failure.
    pub max_resamples: usize,
}

impl RunConfig {
    pub fn new(m: u32, samples: usize, k: usize, seed: u64) -> Self {
        RunConfig {
            m,
            n: 8,
            samples,
            k,
            seed,
            tie_tol: default_tie_tol(),
            max_resamples: 40,
        }
    }

    pub fn validate(&self) -> Result<(), RansacError> {
        if self.m < 4 {
            return Err(RansacError::InvalidConfig("precision must be at least 4"));
        }
        // The solver carries 16 guard bits above m, so m itself must leave
        // room below the 64-bit ceiling.
        if self.m > 48 {
            return Err(RansacError::InvalidConfig("precision must be at most 48"));
        }
        if self.n < 1 {
            return Err(RansacError::InvalidConfig("grid resolution must be positive"));
        }
        if self.samples < 1 {
            return Err(RansacError::InvalidConfig("need at least one sample slot"));
        }
        if self.k < 2 {
            return Err(RansacError::InvalidConfig("splitting budget must be at least 2"));
        }
        if self.k > self.samples * MAX_VOTES_PER_SAMPLE {
            return Err(RansacError::InvalidConfig(
                "splitting budget exceeds the largest possible vote count",
            ));
        }
        if self.max_resamples < 1 {
            return Err(RansacError::InvalidConfig("need at least one resample"));
        }
        if self.tie_tol.is_negative() {
            return Err(RansacError::InvalidConfig("tie tolerance must be nonnegative"));
        }
        Ok(())
    }
}

/// Diagnostics for one sample slot.
#[derive(Clone, Debug)]
pub struct SlotReport {
    pub slot: usize,
    /// Redraws consumed before the slot solved or gave up.
    pub resamples: usize,
    /// Votes contributed to the pool.
    pub votes: usize,
    /// Set when the slot exhausted its redraws; carries the last reason.
    pub failure: Option<ResampleReason>,
    pub skipped_positive_dimensional: usize,
    pub lift_failures: usize,
    pub rejected: usize,
    pub lift_ambiguity: bool,
}

/// One row of the ranked cluster table.
#[derive(Clone, Debug)]
pub struct RankedCluster {
    pub rank: usize,
    pub size: usize,
    pub density: BigRational,
    /// Measure of the ball spanned by the cluster's centres.
    pub central_measure: BigRational,
    /// Measure of the cluster's own ball.
    pub measure: BigRational,
    /// Depth to which the cluster is a single chain of balls.
    pub branch_free_depth: u32,
    /// Index into the vote pool of the cluster's representative centre.
    pub centre_index: usize,
}

#[derive(Clone, Debug)]
pub struct RansacReport {
    pub config: RunConfig,
    /// Validity at each scored position of the greedy sequence.
    pub validity_curve: Vec<(usize, BigRational)>,
    /// Sequence position whose clustering was ranked.
    pub chosen_position: usize,
    pub clusters: Vec<RankedCluster>,
    pub winner: CandidateEssential,
    pub winner_votes: usize,
    pub runner_up_votes: Option<usize>,
    pub total_votes: usize,
    pub slots: Vec<SlotReport>,
    /// Digit levels shared by the winner and the canonical ground truth;
    /// equals the working precision on exact agreement.
    pub agreement_depth: Option<u32>,
}

/// Stateless mixer assigning one independent stream seed per slot.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn run_slot(
    pairs: &[(Vec3, Vec3)],
    cfg: &RunConfig,
    slot: usize,
) -> (SlotReport, Vec<CandidateEssential>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ splitmix64(slot as u64));
    let mut report = SlotReport {
        slot,
        resamples: 0,
        votes: 0,
        failure: None,
        skipped_positive_dimensional: 0,
        lift_failures: 0,
        rejected: 0,
        lift_ambiguity: false,
    };
    let mut last = ResampleReason::NoCandidates;
    for attempt in 0..=cfg.max_resamples {
        let idx = rand::seq::index::sample(&mut rng, pairs.len(), 5);
        let chosen: [(Vec3, Vec3); 5] = std::array::from_fn(|i| pairs[idx.index(i)]);
        let sample = EpipolarSample::new(chosen);
        match five_point_solve(&sample, cfg.m) {
            Ok(out) => {
                report.resamples = attempt;
                report.skipped_positive_dimensional = out.skipped_positive_dimensional;
                report.lift_failures = out.lift_failures;
                report.rejected = out.rejected;
                report.lift_ambiguity = out.lift_ambiguity;
                let mut votes = Vec::new();
                for cand in out.candidates.iter().take(MAX_VOTES_PER_SAMPLE) {
                    for (u, up) in sample.pairs() {
                        let r = epipolar_residual(&cand.e, u, up);
                        assert!(r.is_zero(), "vote violates its own sample");
                    }
                    let (canonical, pivot_index, pivot_valuation) =
                        canonicalize(&cand.e).expect("verified candidate is nonzero");
                    debug_assert_eq!(canonical, cand.e_canonical);
                    votes.push(CandidateEssential {
                        entries: cand.e,
                        canonical,
                        pivot_index,
                        pivot_valuation,
                        sample_id: slot,
                    });
                }
                report.votes = votes.len();
                return (report, votes);
            }
            Err(reason) => last = reason,
        }
    }
    report.resamples = cfg.max_resamples;
    report.failure = Some(last);
    (report, Vec::new())
}

fn encode_votes(votes: &[CandidateEssential]) -> Vec<UnramifiedElement> {
    votes
        .iter()
        .map(|v| encode_vector(&mat_to_vec9(&v.canonical)).expect("votes share one precision"))
        .collect()
}

/// Picks the clustering to rank.  The validity index decides whenever the
/// greedy sequence offers a genuine choice; a unanimous vote pool (every
/// vote in one leaf) degenerates to the single root cluster.
fn choose_clustering(
    dend: &Dendrogram,
    k: usize,
) -> (Vec<(usize, BigRational)>, usize, Clustering) {
    let seq = lbgp(dend, k);
    let mut curve = Vec::new();
    for (pos, clustering) in seq.iter().enumerate().skip(1) {
        if let Ok((_, _, v)) = validity(dend, clustering) {
            curve.push((pos + 1, v));
        }
    }
    match validity_index(dend, k) {
        Ok((_, position, clustering)) => (curve, position, clustering),
        Err(ClusterError::SingleCluster) => (curve, 1, seq[0].clone()),
        Err(e) => unreachable!("uniform vote pool cannot fail to cluster: {e}"),
    }
}

/// Runs the full pipeline over a correspondence set.
///
/// Slots are independent and deterministic: slot `i` always sees the same
/// random stream for a given seed, so equal inputs give bit-identical
/// reports regardless of thread count.  When `ground_truth` is supplied
/// the report records how many digit levels the winner shares with it.
pub fn run_ransacp(
    pairs: &[(Vec3, Vec3)],
    cfg: &RunConfig,
    ground_truth: Option<&Mat3>,
) -> Result<RansacReport, RansacError> {
    cfg.validate()?;
    if pairs.len() < 5 {
        return Err(RansacError::InsufficientData(pairs.len()));
    }
    for (u, up) in pairs {
        for c in u.iter().chain(up.iter()) {
            if c.precision() < cfg.m {
                return Err(RansacError::InvalidConfig(
                    "correspondences carry fewer bits than the working precision",
                ));
            }
        }
    }

    let outcomes: Vec<(SlotReport, Vec<CandidateEssential>)> = (1..=cfg.samples)
        .into_par_iter()
        .map(|slot| run_slot(pairs, cfg, slot))
        .collect();

    let mut slots = Vec::with_capacity(cfg.samples);
    let mut votes: Vec<CandidateEssential> = Vec::new();
    for (report, mut slot_votes) in outcomes {
        slots.push(report);
        votes.append(&mut slot_votes);
    }
    if votes.is_empty() {
        return Err(RansacError::AllSamplesFailed(cfg.samples));
    }

    let elements = encode_votes(&votes);
    let dend = build_dendrogram(&elements).expect("votes are uniform and nonempty");
    let (validity_curve, chosen_position, clustering) = choose_clustering(&dend, cfg.k);

    let ranked = rank_clusters(&dend, &clustering, &cfg.tie_tol);
    let clusters: Vec<RankedCluster> = ranked
        .iter()
        .enumerate()
        .map(|(rank, (ci, rep))| {
            let info = &clustering.clusters[*ci];
            RankedCluster {
                rank,
                size: rep.size,
                density: rep.density.clone(),
                central_measure: rep.central_measure.clone(),
                measure: rep.measure.clone(),
                branch_free_depth: rep.branch_free_depth,
                centre_index: info.representative,
            }
        })
        .collect();

    let winner_row = &clusters[0];
    let winner = votes[winner_row.centre_index].clone();
    let winner_votes = winner_row.size;
    let runner_up_votes = clusters.get(1).map(|c| c.size);

    let agreement_depth = match ground_truth {
        Some(gt) => {
            if gt[0][0].precision() < cfg.m {
                return Err(RansacError::InvalidConfig(
                    "ground truth carries fewer bits than the working precision",
                ));
            }
            let (gt_canonical, _, _) = canonicalize(gt)?;
            let gt_elem = encode_vector(&mat_to_vec9(&crate::mat::mat_truncate(
                &gt_canonical,
                cfg.m,
            )))
            .expect("canonical ground truth encodes");
            let winner_elem = &elements[winner_row.centre_index];
            let depth = match dist_level(winner_elem, &gt_elem).expect("dimensions match") {
                None => cfg.m,
                Some(level) => level,
            };
            Some(depth)
        }
        None => None,
    };

    Ok(RansacReport {
        config: cfg.clone(),
        validity_curve,
        chosen_position,
        clusters,
        winner,
        winner_votes,
        runner_up_votes,
        total_votes: votes.len(),
        slots,
        agreement_depth,
    })
}

/// Classification of an already-collected matrix pool, without any solving.
#[derive(Clone, Debug)]
pub struct ClassifyReport {
    pub validity_curve: Vec<(usize, BigRational)>,
    pub chosen_position: usize,
    pub clusters: Vec<RankedCluster>,
    /// Canonical centre matrix per ranked cluster, same order as `clusters`.
    pub centres: Vec<Mat3>,
}

/// Clusters a pool of candidate matrices exactly as the consensus loop
/// would cluster its votes: canonicalize, embed as degree-9 field
/// elements, split greedily with budget `k`, pick the clustering by
/// validity, rank.
pub fn classify_matrices(
    mats: &[Mat3],
    k: usize,
    tie_tol: &BigRational,
) -> Result<ClassifyReport, RansacError> {
    if mats.is_empty() {
        return Err(RansacError::InsufficientData(0));
    }
    if k < 2 {
        return Err(RansacError::InvalidConfig("splitting budget must be at least 2"));
    }
    let canonical: Vec<Mat3> = mats
        .iter()
        .map(|e| canonicalize(e).map(|(c, _, _)| c))
        .collect::<Result<_, _>>()?;
    let elements: Vec<UnramifiedElement> = canonical
        .iter()
        .map(|c| encode_vector(&mat_to_vec9(c)).expect("canonical matrices encode"))
        .collect();
    let dend = build_dendrogram(&elements).expect("inputs share one precision");
    let (validity_curve, chosen_position, clustering) = choose_clustering(&dend, k);
    let ranked = rank_clusters(&dend, &clustering, tie_tol);
    let mut clusters = Vec::with_capacity(ranked.len());
    let mut centres = Vec::with_capacity(ranked.len());
    for (rank, (ci, rep)) in ranked.iter().enumerate() {
        let info = &clustering.clusters[*ci];
        clusters.push(RankedCluster {
            rank,
            size: rep.size,
            density: rep.density.clone(),
            central_measure: rep.central_measure.clone(),
            measure: rep.measure.clone(),
            branch_free_depth: rep.branch_free_depth,
            centre_index: info.representative,
        });
        centres.push(canonical[info.representative]);
    }
    Ok(ClassifyReport {
        validity_curve,
        chosen_position,
        clusters,
        centres,
    })
}
