//! Instance generators: planted partitions, Erdős–Rényi signed graphs and the
//! perfect-matching lower-bound family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::SignedGraph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlantedSpec {
    /// Number of clusters.
    pub k: usize,
    /// Cluster size.
    pub s: usize,
    pub flip_p: f64,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn n(&self) -> usize {
        self.k * self.s
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.s == 0 {
            return Err(Error::Domain(
                "planted partition needs k >= 1 and s >= 1".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.flip_p) {
            return Err(Error::Domain(format!(
                "flip probability must lie in [0, 0.5], got {}",
                self.flip_p
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub graph: SignedGraph,
    pub truth: Clustering,
    /// Number of flipped pairs; an upper bound on the optimum.
    pub planted_cost: u64,
}

/// Clusters `{0..s}, {s..2s}, ...`; intra pairs `+`, inter pairs `-`, then every
/// pair flipped independently with probability `flip_p`.
pub fn planted(spec: &PlantedSpec) -> Result<Planted> {
    spec.validate()?;
    let n = spec.n();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::new();
    let mut flips = 0u64;
    for a in 0..n {
        for b in (a + 1)..n {
            let same = a / spec.s == b / spec.s;
            let flip = spec.flip_p > 0.0 && rng.gen_bool(spec.flip_p);
            flips += u64::from(flip);
            if same != flip {
                edges.push((a, b));
            }
        }
    }
    let truth = Clustering::from_labels(&(0..n).map(|v| v / spec.s).collect::<Vec<_>>());
    Ok(Planted {
        graph: SignedGraph::from_edges(n, edges)?,
        truth,
        planted_cost: flips,
    })
}

/// Matching instance on `2m` vertices: `+` edge `(2i, 2i+1)` iff `tau[i]`.
pub fn matching_instance(tau: &[bool]) -> Result<SignedGraph> {
    if tau.is_empty() {
        return Err(Error::Domain("matching instance needs m >= 1".into()));
    }
    let edges = tau
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .map(|(i, _)| (2 * i, 2 * i + 1));
    SignedGraph::from_edges(2 * tau.len(), edges)
}

/// Each pair is `+` independently with probability `p`.
pub fn er_signed(n: usize, p: f64, seed: u64) -> Result<SignedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "edge probability must lie in [0, 1], got {p}"
        )));
    }
    let total = n * n.saturating_sub(1) / 2;
    let mut edges = Vec::new();
    if p == 1.0 {
        edges.reserve(total);
        for a in 0..n {
            for b in (a + 1)..n {
                edges.push((a, b));
            }
        }
    } else if p > 0.0 {
        // geometric skips over the row-major pair order
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log_q = (1.0 - p).ln();
        let (mut a, mut b) = (0usize, 0usize);
        loop {
            let u: f64 = rng.gen();
            let skip = ((1.0 - u).ln() / log_q).floor();
            if !skip.is_finite() || skip >= total as f64 {
                break;
            }
            b += skip as usize + 1;
            while a < n && b >= n {
                b = b - n + a + 2;
                a += 1;
            }
            if a + 1 >= n {
                break;
            }
            edges.push((a, b));
        }
    }
    SignedGraph::from_edges(n, edges)
}
