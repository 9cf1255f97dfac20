//! Hierarchical clustering of field elements under the ultrametric.
//!
//! Data sharing a digit prefix of length d sits inside one ball of radius
//! 2^{-d}, so the set of balls touching the data forms a trie on digit
//! tuples: the dendrogram.  Clusters are always node sets of this trie,
//! centres and energies are exact rationals, and the greedy splitter
//! refines the partition one node at a time while the validity index
//! picks the best stopping point.

use crate::field::{ball_measure, pow2_inv, UnramifiedElement};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("element dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("mixed precisions {0} and {1}")]
    MixedPrecision(u32, u32),
    #[error("empty input")]
    EmptyInput,
    #[error("inter-cluster distance needs at least two clusters")]
    SingleCluster,
}

#[derive(Clone, Debug)]
struct Node {
    parent: Option<usize>,
    /// Digit tuple on the edge from the parent.
    digit: u64,
    depth: u32,
    children: BTreeMap<u64, usize>,
    /// Data indices at this leaf (depth = precision); duplicates stack here.
    indices: Vec<usize>,
    /// Number of data points in the subtree, counting multiplicity.
    weight: usize,
    /// Minimal energy of the subtree as one cluster.
    energy: BigRational,
    /// Data indices attaining the minimal energy, sorted.
    centres: Vec<usize>,
}

/// Prefix trie over digit tuples of the data; node at depth d is the ball
/// of radius 2^{-d} around its members.
#[derive(Clone, Debug)]
pub struct Dendrogram {
    nodes: Vec<Node>,
    dim: u32,
    precision: u32,
    /// Total number of data points (with multiplicity).
    data_len: usize,
    /// Leaf node of each data index.
    leaf_of: Vec<usize>,
}

/// One cluster inside a clustering: a dendrogram node plus its centre data.
#[derive(Clone, Debug)]
pub struct ClusterInfo {
    /// Deepest node containing all of the cluster's data.
    pub node: usize,
    /// Sorted data indices minimizing the summed distance within the cluster.
    pub centres: Vec<usize>,
    /// Centre with the smallest data index.
    pub representative: usize,
    pub energy: BigRational,
    pub size: usize,
}

/// A partition of the data into dendrogram nodes.
#[derive(Clone, Debug)]
pub struct Clustering {
    pub clusters: Vec<ClusterInfo>,
    pub energy: BigRational,
}

impl Dendrogram {
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn data_len(&self) -> usize {
        self.data_len
    }

    pub fn node_depth(&self, v: usize) -> u32 {
        self.nodes[v].depth
    }

    pub fn node_weight(&self, v: usize) -> usize {
        self.nodes[v].weight
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes[v].children.values().copied()
    }

    pub fn leaf_of(&self, index: usize) -> usize {
        self.leaf_of[index]
    }

    /// Digit tuples from the root down to the node.
    pub fn prefix(&self, v: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.nodes[v].depth as usize);
        let mut cur = v;
        while let Some(p) = self.nodes[cur].parent {
            out.push(self.nodes[cur].digit);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Depth of the deepest common ancestor of two nodes.
    pub fn meet_depth(&self, a: usize, b: usize) -> u32 {
        let (mut a, mut b) = (a, b);
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent.expect("deeper node has a parent");
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent.expect("deeper node has a parent");
        }
        while a != b {
            a = self.nodes[a].parent.expect("meet exists at the root");
            b = self.nodes[b].parent.expect("meet exists at the root");
        }
        self.nodes[a].depth
    }

    /// Deepest descendant containing the same data: unary chains collapse,
    /// so a split of the returned node always increases the cluster count.
    pub fn contract(&self, v: usize) -> usize {
        let mut cur = v;
        while self.nodes[cur].children.len() == 1 {
            cur = *self.nodes[cur].children.values().next().unwrap();
        }
        cur
    }

    fn cluster_info(&self, v: usize) -> ClusterInfo {
        let v = self.contract(v);
        let n = &self.nodes[v];
        ClusterInfo {
            node: v,
            centres: n.centres.clone(),
            representative: n.centres[0],
            energy: n.energy.clone(),
            size: n.weight,
        }
    }
}

/// Builds the digit-tuple trie of the data with exact subtree energies.
///
/// Every leaf sits at depth m; duplicate elements share one leaf.  The
/// per-node energy is the minimum over data points c in the subtree of
/// the summed distance to c, found bottom-up: placing the centre inside
/// child w costs 2^{-d} for each point outside w plus the child's own
/// optimum, and the centre set is the union over optimal children.
pub fn build_dendrogram(data: &[UnramifiedElement]) -> Result<Dendrogram, ClusterError> {
    if data.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let dim = data[0].dim();
    let precision = data[0].precision();
    for e in data {
        if e.dim() != dim {
            return Err(ClusterError::ShapeMismatch {
                expected: dim as usize,
                got: e.dim() as usize,
            });
        }
        if e.precision() != precision {
            return Err(ClusterError::MixedPrecision(precision, e.precision()));
        }
    }
    let mut nodes = vec![Node {
        parent: None,
        digit: 0,
        depth: 0,
        children: BTreeMap::new(),
        indices: Vec::new(),
        weight: 0,
        energy: BigRational::zero(),
        centres: Vec::new(),
    }];
    let mut leaf_of = Vec::with_capacity(data.len());
    for (i, e) in data.iter().enumerate() {
        let mut cur = 0usize;
        nodes[cur].weight += 1;
        for level in 0..precision {
            let d = e.digit(level);
            let next = match nodes[cur].children.get(&d) {
                Some(&id) => id,
                None => {
                    let id = nodes.len();
                    nodes.push(Node {
                        parent: Some(cur),
                        digit: d,
                        depth: level + 1,
                        children: BTreeMap::new(),
                        indices: Vec::new(),
                        weight: 0,
                        energy: BigRational::zero(),
                        centres: Vec::new(),
                    });
                    nodes[cur].children.insert(d, id);
                    id
                }
            };
            cur = next;
            nodes[cur].weight += 1;
        }
        nodes[cur].indices.push(i);
        leaf_of.push(cur);
    }

    // Bottom-up energy: children always follow their parent in the arena,
    // so a reverse index scan is a valid post-order.
    for v in (0..nodes.len()).rev() {
        if nodes[v].children.is_empty() {
            nodes[v].centres = nodes[v].indices.clone();
            continue;
        }
        let here = pow2_inv(nodes[v].depth as u64);
        let w_v = nodes[v].weight;
        let mut best: Option<BigRational> = None;
        let mut centres: Vec<usize> = Vec::new();
        let child_ids: Vec<usize> = nodes[v].children.values().copied().collect();
        for c in child_ids {
            let outside = BigRational::from_integer(BigInt::from(w_v - nodes[c].weight));
            let cost = outside * here.clone() + nodes[c].energy.clone();
            match &best {
                Some(b) if cost > *b => {}
                Some(b) if cost == *b => centres.extend_from_slice(&nodes[c].centres),
                _ => {
                    best = Some(cost);
                    centres = nodes[c].centres.clone();
                }
            }
        }
        centres.sort_unstable();
        nodes[v].energy = best.expect("internal node has children");
        nodes[v].centres = centres;
    }

    Ok(Dendrogram { nodes, dim, precision, data_len: data.len(), leaf_of })
}

/// Centre set and representative of the cluster rooted at a node.
pub fn centres(dend: &Dendrogram, node: usize) -> (Vec<usize>, usize) {
    let info = dend.cluster_info(node);
    (info.centres.clone(), info.representative)
}

/// Energy of a clustering: the sum of summed distances to each
/// representative, exact.
pub fn energy(clustering: &Clustering) -> BigRational {
    clustering.energy.clone()
}

fn snapshot(dend: &Dendrogram, members: &[usize]) -> Clustering {
    let mut clusters: Vec<ClusterInfo> =
        members.iter().map(|&v| dend.cluster_info(v)).collect();
    clusters.sort_by(|a, b| {
        let ka = (dend.node_depth(a.node), dend.prefix(a.node));
        let kb = (dend.node_depth(b.node), dend.prefix(b.node));
        ka.cmp(&kb)
    });
    let energy = clusters
        .iter()
        .fold(BigRational::zero(), |acc, c| acc + c.energy.clone());
    Clustering { clusters, energy }
}

/// Greedy divisive clustering: the sequence of partitions obtained by
/// repeatedly replacing the cluster whose split into children yields the
/// largest energy decrease.
///
/// The sequence starts at the one-cluster partition and gains one entry
/// per split, stopping after `k` entries or when every cluster is a
/// single leaf.  Split ties prefer the smallest node depth, then the
/// lexicographically smallest digit prefix.
pub fn lbgp(dend: &Dendrogram, k: usize) -> Vec<Clustering> {
    assert!(k >= 1, "need at least one clustering");
    let mut members = vec![dend.contract(0)];
    let mut seq = vec![snapshot(dend, &members)];
    while seq.len() < k {
        let mut pick: Option<(BigRational, u32, Vec<u64>, usize)> = None;
        for (slot, &v) in members.iter().enumerate() {
            if dend.nodes[v].children.len() < 2 {
                continue;
            }
            let split_energy: BigRational = dend
                .children(v)
                .map(|c| dend.nodes[dend.contract(c)].energy.clone())
                .fold(BigRational::zero(), |a, b| a + b);
            let decrease = dend.nodes[v].energy.clone() - split_energy;
            let key = (decrease, dend.node_depth(v), dend.prefix(v), slot);
            let better = match &pick {
                None => true,
                Some((d, dep, pfx, _)) => {
                    key.0 > *d || (key.0 == *d && (key.1, &key.2) < (*dep, pfx))
                }
            };
            if better {
                pick = Some(key);
            }
        }
        let Some((_, _, _, slot)) = pick else { break };
        let v = members.remove(slot);
        for c in dend.children(v) {
            members.push(dend.contract(c));
        }
        seq.push(snapshot(dend, &members));
    }
    seq
}

/// Intra (mean distance to representatives), Inter (minimal distance
/// between representatives of distinct clusters), and their quotient.
///
/// Inter only depends on where the cluster subtrees meet, so any centre
/// choice gives the same value.
pub fn validity(
    dend: &Dendrogram,
    clustering: &Clustering,
) -> Result<(BigRational, BigRational, BigRational), ClusterError> {
    if clustering.clusters.len() < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let intra = clustering.energy.clone()
        / BigRational::from_integer(BigInt::from(dend.data_len));
    let mut deepest_meet = 0u32;
    for (i, a) in clustering.clusters.iter().enumerate() {
        for b in &clustering.clusters[i + 1..] {
            deepest_meet = deepest_meet.max(dend.meet_depth(a.node, b.node));
        }
    }
    let inter = pow2_inv(deepest_meet as u64);
    let validity = intra.clone() / inter.clone();
    Ok((intra, inter, validity))
}

/// Minimizes Validity along the greedy sequence.
///
/// Entries 2..=k of the sequence are scored (the one-cluster entry has no
/// Inter); returns the minimal value, its 1-based sequence position, and
/// the minimizing clustering, preferring the smallest position on ties.
pub fn validity_index(
    dend: &Dendrogram,
    k: usize,
) -> Result<(BigRational, usize, Clustering), ClusterError> {
    assert!(k >= 2, "index needs at least two clusters");
    let seq = lbgp(dend, k);
    let mut best: Option<(BigRational, usize)> = None;
    for (pos, clustering) in seq.iter().enumerate().skip(1) {
        let l = pos + 1;
        let (_, _, v) = match validity(dend, clustering) {
            Ok(t) => t,
            Err(ClusterError::SingleCluster) => continue,
            Err(e) => return Err(e),
        };
        match &best {
            Some((bv, _)) if *bv <= v => {}
            _ => best = Some((v, l)),
        }
    }
    let (value, l) = best.ok_or(ClusterError::SingleCluster)?;
    Ok((value, l, seq[l - 1].clone()))
}

/// Ranking report for one cluster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterReport {
    /// Points in the cluster, counting multiplicity.
    pub size: usize,
    /// (size - 1) / measure of the cluster's ball; 0 for singletons.
    pub density: BigRational,
    /// Haar measure of the cluster's ball.
    pub measure: BigRational,
    /// Deepest node containing every centre leaf.
    pub central_node: usize,
    /// Measure of the central node's ball: the cluster's precision.
    pub central_measure: BigRational,
    /// Nodes on the paths from the cluster node to its centre leaves.
    pub spine: Vec<usize>,
    /// Depth at which the spine first branches; the full precision when
    /// the centres share one leaf.
    pub branch_free_depth: u32,
    /// Digit tuples of the representative's leaf.
    pub centre_digits: Vec<u64>,
}

/// Density, central cluster, and spine data for one cluster.
pub fn cluster_report(dend: &Dendrogram, cluster: &ClusterInfo) -> ClusterReport {
    let measure = ball_measure(dend.node_depth(cluster.node), dend.dim);
    let density = if cluster.size > 1 {
        BigRational::from_integer(BigInt::from(cluster.size - 1)) / measure.clone()
    } else {
        BigRational::zero()
    };
    let leaves: Vec<usize> = cluster.centres.iter().map(|&i| dend.leaf_of(i)).collect();
    let mut central = leaves[0];
    let mut distinct = false;
    for &l in &leaves[1..] {
        if l != central {
            distinct = true;
        }
        let d = dend.meet_depth(central, l);
        while dend.node_depth(central) > d {
            central = dend.nodes[central].parent.expect("above a leaf");
        }
    }
    let mut spine: Vec<usize> = Vec::new();
    for &l in &leaves {
        let mut cur = l;
        loop {
            spine.push(cur);
            if cur == cluster.node {
                break;
            }
            cur = dend.nodes[cur].parent.expect("leaf lies under its cluster");
        }
    }
    spine.sort_unstable();
    spine.dedup();
    let branch_free_depth = if distinct {
        dend.node_depth(central)
    } else {
        dend.precision
    };
    ClusterReport {
        size: cluster.size,
        density,
        measure,
        central_node: central,
        central_measure: ball_measure(dend.node_depth(central), dend.dim),
        spine,
        branch_free_depth,
        centre_digits: dend.prefix(dend.leaf_of(cluster.representative)),
    }
}

pub fn default_tie_tol() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(20))
}

/// Sort key of one cluster for the vote ranking.
#[derive(Clone, Debug)]
pub struct RankKey {
    pub size: usize,
    pub density: BigRational,
    pub central_measure: BigRational,
    pub depth: u32,
    pub prefix: Vec<u64>,
}

fn roughly_equal(a: &BigRational, b: &BigRational, tol: &BigRational) -> bool {
    if a == b {
        return true;
    }
    let max = if a > b { a.clone() } else { b.clone() };
    (a.clone() - b.clone()).abs() <= tol.clone() * max
}

/// Orders cluster indices by votes, breaking near-ties by density and
/// then by precision of the central cluster.
///
/// Sizes within the relative tolerance of their group neighbour count as
/// tied and are reordered by density descending; densities within the
/// tolerance are reordered by central measure ascending; exact leftovers
/// fall back to node depth and digit order.  The tolerance chains across
/// adjacent values.
pub fn rank_order(keys: &[RankKey], tie_tol: &BigRational) -> Vec<usize> {
    let fallback = |i: &usize, j: &usize| {
        let (a, b) = (&keys[*i], &keys[*j]);
        (a.depth, &a.prefix).cmp(&(b.depth, &b.prefix))
    };
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|i, j| keys[*j].size.cmp(&keys[*i].size).then_with(|| fallback(i, j)));

    let rat = |n: usize| BigRational::from_integer(BigInt::from(n));
    let mut out: Vec<usize> = Vec::with_capacity(order.len());
    let mut g0 = 0;
    while g0 < order.len() {
        let mut g1 = g0 + 1;
        while g1 < order.len()
            && roughly_equal(&rat(keys[order[g1 - 1]].size), &rat(keys[order[g1]].size), tie_tol)
        {
            g1 += 1;
        }
        let mut group: Vec<usize> = order[g0..g1].to_vec();
        group.sort_by(|i, j| {
            keys[*j].density.cmp(&keys[*i].density).then_with(|| fallback(i, j))
        });
        let mut h0 = 0;
        while h0 < group.len() {
            let mut h1 = h0 + 1;
            while h1 < group.len()
                && roughly_equal(
                    &keys[group[h1 - 1]].density,
                    &keys[group[h1]].density,
                    tie_tol,
                )
            {
                h1 += 1;
            }
            let mut sub: Vec<usize> = group[h0..h1].to_vec();
            sub.sort_by(|i, j| {
                keys[*i]
                    .central_measure
                    .cmp(&keys[*j].central_measure)
                    .then_with(|| fallback(i, j))
            });
            out.extend_from_slice(&sub);
            h0 = h1;
        }
        g0 = g1;
    }
    out
}

/// Ranks a clustering's clusters; returns indices into `clustering.clusters`
/// with their reports, best first.
pub fn rank_clusters(
    dend: &Dendrogram,
    clustering: &Clustering,
    tie_tol: &BigRational,
) -> Vec<(usize, ClusterReport)> {
    let reports: Vec<ClusterReport> = clustering
        .clusters
        .iter()
        .map(|c| cluster_report(dend, c))
        .collect();
    let keys: Vec<RankKey> = clustering
        .clusters
        .iter()
        .zip(&reports)
        .map(|(c, r)| RankKey {
            size: r.size,
            density: r.density.clone(),
            central_measure: r.central_measure.clone(),
            depth: dend.node_depth(c.node),
            prefix: dend.prefix(c.node),
        })
        .collect();
    rank_order(&keys, tie_tol)
        .into_iter()
        .map(|i| (i, reports[i].clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{dist_k, encode_vector};
    use crate::padic::PadicInt;
    use num_traits::One;

    fn zline(vals: &[u64], m: u32) -> Vec<UnramifiedElement> {
        vals.iter()
            .map(|&v| encode_vector(&[PadicInt::new(v, m)]).unwrap())
            .collect()
    }

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn trie_structure_of_three_small_integers() {
        let data = zline(&[0, 1, 2], 2);
        let d = build_dendrogram(&data).unwrap();
        let root_children: Vec<usize> = d.children(0).collect();
        assert_eq!(root_children.len(), 2);
        // Even branch holds {0, 2} and splits at the next level.
        let even = root_children[0];
        assert_eq!(d.node_weight(even), 2);
        assert_eq!(d.children(even).count(), 2);
        let odd = root_children[1];
        assert_eq!(d.node_weight(odd), 1);
    }

    #[test]
    fn singleton_build_is_a_path() {
        let data = zline(&[5], 4);
        let d = build_dendrogram(&data).unwrap();
        assert_eq!(d.nodes.len(), 5);
        assert_eq!(d.contract(0), d.leaf_of(0));
    }

    #[test]
    fn duplicates_share_a_leaf() {
        let data = zline(&[3, 3, 3], 3);
        let d = build_dendrogram(&data).unwrap();
        let leaf = d.leaf_of(0);
        assert_eq!(d.leaf_of(1), leaf);
        assert_eq!(d.node_weight(leaf), 3);
    }

    #[test]
    fn meet_depth_matches_pairwise_distance() {
        let data = zline(&[0, 1, 2, 5, 6, 12, 13], 4);
        let d = build_dendrogram(&data).unwrap();
        for i in 0..data.len() {
            for j in (i + 1)..data.len() {
                let meet = d.meet_depth(d.leaf_of(i), d.leaf_of(j));
                let dist = dist_k(&data[i], &data[j]).unwrap();
                assert_eq!(dist, pow2_inv(meet as u64));
            }
        }
    }

    #[test]
    fn centres_of_zero_two_four() {
        let data = zline(&[0, 2, 4], 3);
        let d = build_dendrogram(&data).unwrap();
        let (a, rep) = centres(&d, 0);
        assert_eq!(a, vec![0, 2]);
        assert_eq!(rep, 0);
        let info = d.cluster_info(0);
        assert_eq!(info.energy, rational(3, 4));
    }

    #[test]
    fn two_point_cluster_has_both_centres() {
        let data = zline(&[1, 9], 4);
        let d = build_dendrogram(&data).unwrap();
        let (a, _) = centres(&d, 0);
        assert_eq!(a, vec![0, 1]);
    }

    #[test]
    fn greedy_sequence_energies_decrease_to_zero() {
        let data = zline(&[0, 2, 4], 3);
        let d = build_dendrogram(&data).unwrap();
        let seq = lbgp(&d, 3);
        assert_eq!(seq.len(), 3);
        assert_eq!(seq[0].energy, rational(3, 4));
        assert_eq!(seq[1].energy, rational(1, 4));
        assert!(seq[2].energy.is_zero());
        assert_eq!(seq[1].clusters.len(), 2);
        assert_eq!(seq[2].clusters.len(), 3);
        for w in seq.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
    }

    #[test]
    fn greedy_sequence_stops_at_single_leaves() {
        let data = zline(&[6, 6, 6, 6], 3);
        let d = build_dendrogram(&data).unwrap();
        let seq = lbgp(&d, 5);
        assert_eq!(seq.len(), 1);
        assert!(seq[0].energy.is_zero());
    }

    #[test]
    fn validity_of_the_three_point_sequence() {
        let data = zline(&[0, 2, 4], 3);
        let d = build_dendrogram(&data).unwrap();
        let seq = lbgp(&d, 3);
        assert!(matches!(
            validity(&d, &seq[0]),
            Err(ClusterError::SingleCluster)
        ));
        let (intra, inter, v) = validity(&d, &seq[1]).unwrap();
        assert_eq!(intra, rational(1, 12));
        assert_eq!(inter, rational(1, 2));
        assert_eq!(v, rational(1, 6));
        let (intra3, _, v3) = validity(&d, &seq[2]).unwrap();
        assert!(intra3.is_zero());
        assert!(v3.is_zero());
    }

    #[test]
    fn validity_index_picks_the_separated_split() {
        // Two tight groups a norm-1 gap apart: the two-cluster entry wins.
        let data = zline(&[0, 64, 1, 65], 7);
        let d = build_dendrogram(&data).unwrap();
        let (value, l, clustering) = validity_index(&d, 3).unwrap();
        assert_eq!(l, 2);
        assert_eq!(clustering.clusters.len(), 2);
        // Intra = (1/64 + 1/64)/4 = 1/128, Inter = 1.
        assert_eq!(value, rational(1, 128));
    }

    #[test]
    fn validity_index_is_zero_at_full_depth() {
        let data = zline(&[0, 2, 4], 3);
        let d = build_dendrogram(&data).unwrap();
        let (value, l, _) = validity_index(&d, data.len()).unwrap();
        assert!(value.is_zero());
        assert_eq!(l, 3);
    }

    #[test]
    fn report_of_a_two_point_cluster() {
        let data = zline(&[0, 2], 3);
        let d = build_dendrogram(&data).unwrap();
        let info = d.cluster_info(0);
        let r = cluster_report(&d, &info);
        assert_eq!(r.size, 2);
        assert_eq!(r.measure, rational(1, 2));
        assert_eq!(r.density, rational(2, 1));
        // Both points are centres; they diverge right below the node.
        assert_eq!(r.branch_free_depth, 1);
        assert_eq!(r.central_measure, rational(1, 2));
    }

    #[test]
    fn singleton_report_has_zero_density_and_full_spine_depth() {
        let data = zline(&[0, 2], 3);
        let d = build_dendrogram(&data).unwrap();
        let seq = lbgp(&d, 2);
        let single = &seq[1].clusters[0];
        assert_eq!(single.size, 1);
        let r = cluster_report(&d, single);
        assert!(r.density.is_zero());
        assert_eq!(r.branch_free_depth, 3);
    }

    #[test]
    fn ranking_follows_size_density_precision() {
        let tol = default_tie_tol();
        let key = |size, density: BigRational, cm: BigRational, depth| RankKey {
            size,
            density,
            central_measure: cm,
            depth,
            prefix: vec![depth as u64],
        };
        // Clear size order wins outright.
        let keys = vec![
            key(1, BigRational::zero(), BigRational::one(), 2),
            key(10, rational(2, 1), rational(1, 4), 0),
            key(4, rational(8, 1), rational(1, 8), 1),
        ];
        assert_eq!(rank_order(&keys, &tol), vec![1, 2, 0]);
        // Size tie resolved by density.
        let keys = vec![
            key(10, rational(2, 1), rational(1, 4), 0),
            key(10, rational(8, 1), rational(1, 4), 1),
        ];
        assert_eq!(rank_order(&keys, &tol), vec![1, 0]);
        // Size and density tied: smaller central measure wins.
        let keys = vec![
            key(10, rational(8, 1), pow2_inv(27), 0),
            key(10, rational(8, 1), pow2_inv(54), 1),
        ];
        assert_eq!(rank_order(&keys, &tol), vec![1, 0]);
    }

    #[test]
    fn near_tie_sizes_chain_into_one_group() {
        let tol = default_tie_tol();
        let key = |size, density: BigRational| RankKey {
            size,
            density,
            central_measure: BigRational::one(),
            depth: 0,
            prefix: vec![size as u64],
        };
        // 100 vs 96 is within 5%, so density decides despite the size gap.
        let keys = vec![key(100, rational(1, 1)), key(96, rational(9, 1))];
        assert_eq!(rank_order(&keys, &tol), vec![1, 0]);
        // 100 vs 80 is far outside the tolerance.
        let keys = vec![key(100, rational(1, 1)), key(80, rational(9, 1))];
        assert_eq!(rank_order(&keys, &tol), vec![0, 1]);
    }

    #[test]
    fn mixed_shape_input_is_rejected() {
        let a = encode_vector(&[PadicInt::new(1, 3)]).unwrap();
        let b = encode_vector(&[PadicInt::new(1, 3), PadicInt::new(0, 3)]).unwrap();
        assert!(matches!(
            build_dendrogram(&[a, b]),
            Err(ClusterError::ShapeMismatch { .. })
        ));
    }
}
