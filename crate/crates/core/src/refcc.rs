//! The non-private reference procedure with per-pair
//! agreement parameters, per-vertex lightness thresholds and a forced removal
//! set, plus the variant that keeps light vertices in their components.
//!
//! Unlike the private pipeline, `l(v)` here counts the forced removals as well
//! as the agreement removals.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::sparsify::{finish, removed_counts};

/// Symmetric pair weights with a default and sparse overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct PairWeights {
    default: f64,
    overrides: HashMap<(usize, usize), f64>,
}

impl PairWeights {
    pub fn constant(value: f64) -> Self {
        Self {
            default: value,
            overrides: HashMap::new(),
        }
    }

    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.overrides.insert((u.min(v), u.max(v)), value);
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.overrides
            .get(&(u.min(v), u.max(v)))
            .copied()
            .unwrap_or(self.default)
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.default).chain(self.overrides.values().copied())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgreementVectors {
    pub beta: PairWeights,
    pub lambda: Vec<f64>,
    pub removed: BTreeSet<(usize, usize)>,
}

impl AgreementVectors {
    /// `β⃗ = β·1`, `λ⃗ = λ·1`, `E_rem = ∅`.
    pub fn constant(n: usize, beta: f64, lambda: f64) -> Self {
        Self {
            beta: PairWeights::constant(beta),
            lambda: vec![lambda; n],
            removed: BTreeSet::new(),
        }
    }

    pub fn with_removed(mut self, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        self.removed
            .extend(edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))));
        self
    }

    fn validate(&self, g: &SignedGraph) -> Result<()> {
        if self.lambda.len() != g.n() {
            return Err(Error::Domain(format!(
                "lambda vector has {} entries for {} vertices",
                self.lambda.len(),
                g.n()
            )));
        }
        if let Some(b) = self.beta.values().find(|b| b.is_nan() || *b < 0.0) {
            return Err(Error::Domain(format!("beta entries must be >= 0, got {b}")));
        }
        if let Some(l) = self.lambda.iter().find(|l| l.is_nan() || **l < 0.0) {
            return Err(Error::Domain(format!(
                "lambda entries must be >= 0, got {l}"
            )));
        }
        if let Some(&(u, v)) = self.removed.iter().find(|&&(u, v)| !g.has_edge(u, v)) {
            return Err(Error::Domain(format!(
                "removal set contains ({u}, {v}), which is not a + edge"
            )));
        }
        Ok(())
    }
}

/// Everything the reference procedure decided, for property checks.
#[derive(Clone, Debug)]
pub struct RefOutcome {
    pub clustering: Clustering,
    /// Per edge (in `g.edges()` order): removed by `E_rem` or disagreement.
    pub discarded: Vec<bool>,
    /// Per edge: present in the sparsified graph.
    pub kept: Vec<bool>,
    pub removed_count: Vec<usize>,
    pub light: Vec<bool>,
}

/// Runs the reference procedure; `light_singletons` selects `alg_cc` (true)
/// or `alg_cc_prime` (false).
pub fn alg_cc_trace(
    g: &SignedGraph,
    vectors: &AgreementVectors,
    light_singletons: bool,
) -> Result<RefOutcome> {
    vectors.validate(g)?;
    // decisions against the original neighborhoods, then removed as a batch
    let discarded: Vec<bool> = g
        .edges()
        .par_iter()
        .map(|&(u, v)| {
            if vectors.removed.contains(&(u, v)) {
                return true;
            }
            let dmax = g.degree(u).max(g.degree(v)) as f64;
            let in_agreement = (g.sym_diff_unchecked(u, v) as f64) < vectors.beta.get(u, v) * dmax;
            !in_agreement
        })
        .collect();
    let removed_count = removed_counts(g, &discarded);
    let light: Vec<bool> = (0..g.n())
        .map(|v| removed_count[v] as f64 > vectors.lambda[v] * g.degree(v) as f64)
        .collect();
    let done = finish(g, &discarded, &light, light_singletons);
    Ok(RefOutcome {
        clustering: done.clustering,
        discarded,
        kept: done.kept,
        removed_count,
        light,
    })
}

/// Reference clustering; light vertices become singletons.
pub fn alg_cc(g: &SignedGraph, vectors: &AgreementVectors) -> Result<Clustering> {
    Ok(alg_cc_trace(g, vectors, true)?.clustering)
}

/// Variant where light vertices stay in their component's cluster.
pub fn alg_cc_prime(g: &SignedGraph, vectors: &AgreementVectors) -> Result<Clustering> {
    Ok(alg_cc_trace(g, vectors, false)?.clustering)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_k6() -> SignedGraph {
        let mut edges = Vec::new();
        for base in [0, 6] {
            for a in 0..6 {
                for b in (a + 1)..6 {
                    edges.push((base + a, base + b));
                }
            }
        }
        SignedGraph::from_edges(12, edges).unwrap()
    }

    fn is_two_cliques(c: &Clustering) -> bool {
        c.clusters() == vec![(0..6).collect::<Vec<_>>(), (6..12).collect()]
    }

    #[test]
    fn zero_beta_discards_everything() {
        let g = two_k6();
        let v = AgreementVectors::constant(12, 0.0, 0.0);
        let out = alg_cc_trace(&g, &v, true).unwrap();
        assert!(out.discarded.iter().all(|&d| d));
        assert!(out.light.iter().all(|&l| l));
        assert_eq!(
            out.clustering,
            Clustering::new(&(0..12).collect::<Vec<_>>(), vec![true; 12]).unwrap()
        );
        // no-singleton variant: nothing survives, so still all singletons
        assert_eq!(alg_cc_prime(&g, &v).unwrap().num_clusters(), 12);
    }

    #[test]
    fn loose_parameters_keep_cliques() {
        let g = two_k6();
        let v = AgreementVectors::constant(12, 2.0, 1.0);
        let out = alg_cc_trace(&g, &v, true).unwrap();
        assert!(out.removed_count.iter().all(|&l| l == 0));
        assert!(is_two_cliques(&out.clustering));
        assert!(is_two_cliques(&alg_cc_prime(&g, &v).unwrap()));
    }

    #[test]
    fn removing_everything_gives_singletons() {
        let g = two_k6();
        let v = AgreementVectors::constant(12, 2.0, 1.0).with_removed(g.edges().to_vec());
        let out = alg_cc_trace(&g, &v, true).unwrap();
        // l(v) counts forced removals: 5 of d(v) = 6 > λ·6 fails for λ = 1
        assert!(out.removed_count.iter().all(|&l| l == 5));
        assert_eq!(out.clustering.num_clusters(), 12);
        let light = AgreementVectors::constant(12, 2.0, 0.5).with_removed(g.edges().to_vec());
        let out = alg_cc_trace(&g, &light, true).unwrap();
        assert!(out.light.iter().all(|&l| l));
        assert_eq!(out.clustering.num_clusters(), 12);
        assert_eq!(alg_cc_prime(&g, &light).unwrap().num_clusters(), 12);
    }

    #[test]
    fn batch_semantics_use_original_neighborhoods() {
        // Path 0-1-2-3: with sequential removal the second decision would see
        // a shrunken neighborhood. Batch removal uses the input graph only.
        let g = SignedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        // |N(0)△N(1)| = |{0,1}△{0,1,2}| = 1 < 0.4·3 ; |N(1)△N(2)| = 2 ≥ 0.4·3
        let v = AgreementVectors::constant(4, 0.4, 1.0);
        let out = alg_cc_trace(&g, &v, true).unwrap();
        assert_eq!(out.discarded, vec![false, true, false]);
        assert_eq!(out.removed_count, vec![0, 1, 1, 0]);
    }

    #[test]
    fn invalid_vectors_rejected() {
        let g = two_k6();
        let mut v = AgreementVectors::constant(11, 0.1, 0.1);
        assert!(alg_cc(&g, &v).is_err());
        v = AgreementVectors::constant(12, 0.1, 0.1).with_removed([(0, 7)]);
        assert!(alg_cc(&g, &v).is_err());
        v = AgreementVectors::constant(12, -0.1, 0.1);
        assert!(alg_cc(&g, &v).is_err());
    }
}
