//! The min-disagree objective and an exhaustive optimum for tiny graphs.

use serde::Serialize;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::SignedGraph;

/// Largest `n` accepted by [`brute_force_opt`] (Bell(11) = 678 570 partitions).
pub const BRUTE_FORCE_MAX_N: usize = 11;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CostReport {
    pub total: u64,
    /// `+` edges whose endpoints are in different clusters.
    pub plus_cut: u64,
    /// `-` pairs whose endpoints share a cluster.
    pub minus_within: u64,
}

/// Disagreement cost in `O(|E+| + n)`, from cluster sizes and internal `+`
/// counts without touching the `-` pairs.
pub fn cost(g: &SignedGraph, c: &Clustering) -> Result<CostReport> {
    if c.n() != g.n() {
        return Err(Error::Domain(format!(
            "clustering covers {} vertices, graph has {}",
            c.n(),
            g.n()
        )));
    }
    let k = c.num_clusters();
    let mut size = vec![0u64; k];
    let mut internal = vec![0u64; k];
    for v in 0..g.n() {
        size[c.cluster_of(v)] += 1;
    }
    for &(u, v) in g.edges() {
        if c.same_cluster(u, v) {
            internal[c.cluster_of(u)] += 1;
        }
    }
    let inside: u64 = internal.iter().sum();
    let plus_cut = g.num_edges() as u64 - inside;
    let minus_within: u64 = size
        .iter()
        .zip(&internal)
        .map(|(&s, &m)| s * s.saturating_sub(1) / 2 - m)
        .sum();
    Ok(CostReport {
        total: plus_cut + minus_within,
        plus_cut,
        minus_within,
    })
}

/// Minimum-cost clustering by enumerating every set partition as a
/// restricted-growth string. Ties resolve to the lexicographically smallest
/// string.
pub fn brute_force_opt(g: &SignedGraph) -> Result<(CostReport, Clustering)> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Size(format!(
            "exhaustive optimum supports n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    if n == 0 {
        return Ok((CostReport::default(), Clustering::from_labels(&[])));
    }
    let mut plus = vec![vec![false; n]; n];
    for &(u, v) in g.edges() {
        plus[u][v] = true;
        plus[v][u] = true;
    }

    // rgs[i] <= 1 + max(rgs[..i]); partial cost maintained incrementally as
    // vertex i is placed against vertices 0..i.
    let mut rgs = vec![0usize; n];
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut stack_cost = vec![0u64; n + 1];
    let mut maxes = vec![0usize; n];

    fn placement_cost(plus: &[Vec<bool>], rgs: &[usize], i: usize) -> u64 {
        (0..i)
            .map(|j| {
                let same = rgs[j] == rgs[i];
                u64::from(same != plus[i][j])
            })
            .sum()
    }

    // iterative depth-first enumeration in lexicographic order
    let mut i = 1;
    rgs[0] = 0;
    maxes[0] = 0;
    stack_cost[1] = 0;
    if n == 1 {
        best = Some((0, rgs.clone()));
    } else {
        rgs[1] = 0;
        loop {
            let limit = maxes[i - 1] + 1;
            if rgs[i] > limit {
                // exhausted this position
                if i == 1 {
                    break;
                }
                i -= 1;
                rgs[i] += 1;
                continue;
            }
            let c = stack_cost[i] + placement_cost(&plus, &rgs, i);
            let pruned = best.as_ref().is_some_and(|(b, _)| c >= *b);
            if pruned {
                // cost only grows deeper; equal cost cannot beat the earlier witness
                rgs[i] += 1;
                continue;
            }
            maxes[i] = maxes[i - 1].max(rgs[i]);
            stack_cost[i + 1] = c;
            if i + 1 == n {
                best = Some((c, rgs.clone()));
                rgs[i] += 1;
            } else {
                i += 1;
                rgs[i] = 0;
            }
        }
    }
    let (_, witness) = best.expect("at least one partition exists");
    let clustering = Clustering::from_labels(&witness);
    let report = cost(g, &clustering)?;
    Ok((report, clustering))
}
