//! The private clustering pipeline.
//!
//! 1. Noised degrees `d̂(v) = d(v) + Z_v`, `Z_v ~ Lap(8/ε)`; `H = {v : d̂(v) ≥ T0}`.
//! 2. Every edge is tested for noised agreement against the input graph; the
//!    failing edges, and every edge with an endpoint outside `H`, are removed
//!    together.
//! 3. `l̂(v) = l(v) + Y_v`, `Y_v ~ Lap(8/ε)`, where `l(v)` counts the edges of
//!    `v` removed in step 2; `v` is light iff `l̂(v) > λ·d(v)`.
//! 4. Light-light edges are dropped; the heavy vertices of each component of
//!    what remains form a cluster and each light vertex is a singleton.

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{components, Clustering};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::noise::{agreement_base_scale, scaled_draw, Draw, NoiseKey, NoiseLedger, NoiseTag};
use crate::params::PrivacyParams;
use crate::sparsify::{finish, removed_counts};

/// `|N(u)△N(v)| + noise < i·β·max(d(u), d(v))`, strict.
pub fn agreement_holds(sym_diff: usize, noise: f64, i: f64, beta: f64, dmax: usize) -> bool {
    sym_diff as f64 + noise < i * beta * dmax as f64
}

/// Decision for one surviving edge, given its agreement noise draw.
pub trait AgreementRule: Sync {
    fn decide(&self, g: &SignedGraph, u: usize, v: usize, noise: f64, p: &PrivacyParams) -> bool;
}

/// The `i`-noised agreement test; `i = 1` is the pipeline's rule.
#[derive(Clone, Copy, Debug)]
pub struct NoisedAgreement {
    pub i: f64,
}

impl Default for NoisedAgreement {
    fn default() -> Self {
        Self { i: 1.0 }
    }
}

impl AgreementRule for NoisedAgreement {
    fn decide(&self, g: &SignedGraph, u: usize, v: usize, noise: f64, p: &PrivacyParams) -> bool {
        let dmax = g.degree(u).max(g.degree(v));
        agreement_holds(g.sym_diff_unchecked(u, v), noise, self.i, p.beta, dmax)
    }
}

/// Draws (or replays from the ledger) the agreement noise of pair `{u, v}`.
pub fn agreement_draw(g: &SignedGraph, u: usize, v: usize, p: &PrivacyParams, seed: u64) -> Draw {
    let key = NoiseKey::pair(seed, NoiseTag::Agreement, u, v);
    let base = agreement_base_scale(g.degree(u), g.degree(v), p);
    let (scale, value) = scaled_draw(&key, base, p.noise_multiplier);
    Draw { scale, value }
}

/// `i`-noised agreement of `u ≠ v`, both in `H`. The noise is taken from the
/// ledger when already present and recorded otherwise.
pub fn noised_agreement(
    g: &SignedGraph,
    u: usize,
    v: usize,
    i: f64,
    p: &PrivacyParams,
    in_h: &[bool],
    ledger: &mut NoiseLedger,
) -> Result<bool> {
    if u == v || u >= g.n() || v >= g.n() {
        return Err(Error::Domain(format!("invalid pair ({u}, {v})")));
    }
    if !in_h[u] || !in_h[v] {
        return Err(Error::Contract(format!(
            "noised agreement of ({u}, {v}) requires both endpoints in H"
        )));
    }
    let key = (u.min(v), u.max(v));
    let draw = match ledger.agreement.get(&key) {
        Some(d) => *d,
        None => {
            let d = agreement_draw(g, u, v, p, ledger.seed);
            ledger.agreement.insert(key, d);
            d
        }
    };
    Ok(NoisedAgreement { i }.decide(g, u, v, draw.value, p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTrace {
    pub noised_degree: Vec<f64>,
    pub in_h: Vec<bool>,
    /// Per edge in `g.edges()` order; false for every edge leaving `H`.
    pub agreement: Vec<bool>,
    /// `l(v)`.
    pub removed_count: Vec<usize>,
    /// `l̂(v)`.
    pub noised_removed: Vec<f64>,
    pub light: Vec<bool>,
    /// Edges of the sparsified graph.
    pub sparsified: Vec<(usize, usize)>,
    pub ledger: NoiseLedger,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceSummary {
    pub n: usize,
    pub plus_edges: usize,
    pub h_size: usize,
    pub removed_by_agreement: usize,
    pub removed_light_light: usize,
    pub sparsified_edges: usize,
    pub light_vertices: usize,
    pub components: usize,
    pub clusters: usize,
}

impl RunTrace {
    pub fn summary(&self, clustering: &Clustering) -> TraceSummary {
        let n = self.in_h.len();
        let removed_by_agreement = self.agreement.iter().filter(|&&a| !a).count();
        let survived = self.agreement.len() - removed_by_agreement;
        let labels = components(n, self.sparsified.iter().copied());
        let mut roots = labels.clone();
        roots.sort_unstable();
        roots.dedup();
        TraceSummary {
            n,
            plus_edges: self.agreement.len(),
            h_size: self.in_h.iter().filter(|&&h| h).count(),
            removed_by_agreement,
            removed_light_light: survived - self.sparsified.len(),
            sparsified_edges: self.sparsified.len(),
            light_vertices: self.light.iter().filter(|&&l| l).count(),
            components: roots.len(),
            clusters: clustering.num_clusters(),
        }
    }
}

/// Runs the private pipeline with the noised-agreement rule.
pub fn run(g: &SignedGraph, p: &PrivacyParams, seed: u64) -> (Clustering, RunTrace) {
    run_with_rule(g, p, seed, &NoisedAgreement::default())
}

/// Runs the pipeline with a caller-supplied agreement decision for edges
/// inside `H`. Noise keys are identical for every rule.
pub fn run_with_rule<R: AgreementRule + ?Sized>(
    g: &SignedGraph,
    p: &PrivacyParams,
    seed: u64,
    rule: &R,
) -> (Clustering, RunTrace) {
    let n = g.n();
    let s = p.noise_multiplier;
    let vertex_scale = p.vertex_noise_scale();
    let t0 = p.t0();
    let mut ledger = NoiseLedger::new(seed);

    let degree_draws: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|v| {
            scaled_draw(
                &NoiseKey::vertex(seed, NoiseTag::Degree, v),
                vertex_scale,
                s,
            )
        })
        .collect();
    let noised_degree: Vec<f64> = degree_draws
        .iter()
        .enumerate()
        .map(|(v, &(_, z))| g.degree(v) as f64 + z)
        .collect();
    let in_h: Vec<bool> = noised_degree.iter().map(|&d| d >= t0).collect();

    let decisions: Vec<(Option<Draw>, bool)> = g
        .edges()
        .par_iter()
        .map(|&(u, v)| {
            if !(in_h[u] && in_h[v]) {
                return (None, false);
            }
            let draw = agreement_draw(g, u, v, p, seed);
            (Some(draw), rule.decide(g, u, v, draw.value, p))
        })
        .collect();
    let agreement: Vec<bool> = decisions.iter().map(|&(_, a)| a).collect();
    let discarded: Vec<bool> = agreement.iter().map(|&a| !a).collect();

    let removed_count = removed_counts(g, &discarded);
    let light_draws: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|v| scaled_draw(&NoiseKey::vertex(seed, NoiseTag::Light, v), vertex_scale, s))
        .collect();
    let noised_removed: Vec<f64> = (0..n)
        .map(|v| removed_count[v] as f64 + light_draws[v].1)
        .collect();
    let light: Vec<bool> = (0..n)
        .map(|v| noised_removed[v] > p.lambda * g.degree(v) as f64)
        .collect();

    let done = finish(g, &discarded, &light, true);
    let sparsified = g
        .edges()
        .iter()
        .zip(&done.kept)
        .filter(|(_, &k)| k)
        .map(|(&e, _)| e)
        .collect();

    for v in 0..n {
        let (scale, value) = degree_draws[v];
        ledger.degree.insert(v, Draw { scale, value });
        let (scale, value) = light_draws[v];
        ledger.light.insert(v, Draw { scale, value });
    }
    for (&(u, v), (draw, _)) in g.edges().iter().zip(&decisions) {
        if let Some(d) = draw {
            ledger.agreement.insert((u, v), *d);
        }
    }

    let trace = RunTrace {
        noised_degree,
        in_h,
        agreement,
        removed_count,
        noised_removed,
        light,
        sparsified,
        ledger,
    };
    (done.clustering, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DeriveInput;
    use crate::refcc::{alg_cc, AgreementVectors};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero_noise(beta: f64, lambda: f64) -> PrivacyParams {
        PrivacyParams::derive(
            &DeriveInput::new(1.0, 0.1)
                .beta(beta)
                .lambda(lambda)
                .zero_noise(),
        )
        .unwrap()
    }

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

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SignedGraph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        SignedGraph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn predicate_examples() {
        // single edge: identical neighborhoods
        let edge = SignedGraph::from_edges(2, [(0, 1)]).unwrap();
        let p = zero_noise(0.02, 0.02);
        let mut ledger = NoiseLedger::new(1);
        assert!(noised_agreement(&edge, 0, 1, 1.0, &p, &[true, true], &mut ledger).unwrap());
        assert_eq!(ledger.agreement[&(0, 1)].value, 0.0);

        // path endpoints: |△| = 2 vs 0.02·2
        let path = SignedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut ledger = NoiseLedger::new(1);
        assert!(!noised_agreement(&path, 0, 2, 1.0, &p, &[true; 3], &mut ledger).unwrap());

        // i = 0 with nonnegative noise is never in agreement
        assert!(!agreement_holds(0, 0.0, 0.0, 0.5, 10));
        assert!(!agreement_holds(3, 1.5, 0.0, 0.5, 10));
    }

    #[test]
    fn outside_h_is_a_contract_violation() {
        let edge = SignedGraph::from_edges(2, [(0, 1)]).unwrap();
        let p = zero_noise(0.02, 0.02);
        let mut ledger = NoiseLedger::new(1);
        let err = noised_agreement(&edge, 0, 1, 1.0, &p, &[true, false], &mut ledger).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn ledger_noise_is_reused() {
        let g = two_k6();
        let p = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1).t0_override(0.0)).unwrap();
        let mut ledger = NoiseLedger::new(9);
        ledger.agreement.insert(
            (0, 1),
            Draw {
                scale: 1.0,
                value: -1000.0,
            },
        );
        assert!(noised_agreement(&g, 1, 0, 1.0, &p, &[true; 12], &mut ledger).unwrap());
        ledger.agreement.insert(
            (0, 1),
            Draw {
                scale: 1.0,
                value: 1000.0,
            },
        );
        assert!(!noised_agreement(&g, 0, 1, 1.0, &p, &[true; 12], &mut ledger).unwrap());
    }

    #[test]
    fn empty_graph_gives_singletons() {
        let g = SignedGraph::empty(5);
        let p = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1)).unwrap();
        let (c, trace) = run(&g, &p, 3);
        assert_eq!(c.num_clusters(), 5);
        assert!(trace.sparsified.is_empty());
        assert_eq!(crate::cost::cost(&g, &c).unwrap().total, 0);
    }

    #[test]
    fn zero_noise_two_cliques() {
        let g = two_k6();
        let (c, trace) = run(&g, &zero_noise(0.02, 0.02), 0);
        assert!(trace.agreement.iter().all(|&a| a));
        assert!(trace.removed_count.iter().all(|&l| l == 0));
        assert!(trace.light.iter().all(|&l| !l));
        assert_eq!(
            c.clusters(),
            vec![(0..6).collect::<Vec<_>>(), (6..12).collect()]
        );
    }

    #[test]
    fn zero_noise_single_edge_plus_isolated() {
        let g = SignedGraph::from_edges(3, [(0, 1)]).unwrap();
        let (c, trace) = run(&g, &zero_noise(0.02, 0.02), 0);
        assert_eq!(trace.agreement, vec![true]);
        assert_eq!(trace.light, vec![false; 3]);
        assert_eq!(c.clusters(), vec![vec![0, 1], vec![2]]);
        assert!(!c.is_singleton_light(2));
    }

    /// Same decisions as the pipeline, but each disagreeing edge is removed
    /// before the next edge is judged.
    fn sequential_removed_counts(g: &SignedGraph, beta: f64) -> Vec<usize> {
        let mut adj: Vec<std::collections::BTreeSet<usize>> = (0..g.n())
            .map(|v| g.closed_neighborhood(v).unwrap().into_iter().collect())
            .collect();
        let mut l = vec![0; g.n()];
        for &(u, v) in g.edges() {
            let sym = adj[u].symmetric_difference(&adj[v]).count();
            let dmax = adj[u].len().max(adj[v].len());
            if !agreement_holds(sym, 0.0, 1.0, beta, dmax) {
                adj[u].remove(&v);
                adj[v].remove(&u);
                l[u] += 1;
                l[v] += 1;
            }
        }
        l
    }

    #[test]
    fn agreement_removal_is_batched() {
        let p = zero_noise(0.2, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut witnessed = false;
        for _ in 0..500 {
            let g = random_graph(&mut rng, 9, 0.45);
            let (_, trace) = run(&g, &p, 0);
            let batch = alg_cc_trace_counts(&g, 0.2);
            assert_eq!(trace.removed_count, batch);
            if sequential_removed_counts(&g, 0.2) != batch {
                witnessed = true;
            }
        }
        assert!(
            witnessed,
            "no instance distinguishes batch from sequential removal"
        );
    }

    fn alg_cc_trace_counts(g: &SignedGraph, beta: f64) -> Vec<usize> {
        // independent batch oracle from explicit closed neighborhoods
        let sets: Vec<std::collections::BTreeSet<usize>> = (0..g.n())
            .map(|v| g.closed_neighborhood(v).unwrap().into_iter().collect())
            .collect();
        let mut l = vec![0; g.n()];
        for &(u, v) in g.edges() {
            let sym = sets[u].symmetric_difference(&sets[v]).count();
            if !agreement_holds(sym, 0.0, 1.0, beta, sets[u].len().max(sets[v].len())) {
                l[u] += 1;
                l[v] += 1;
            }
        }
        l
    }

    #[test]
    fn zero_noise_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            let n = rng.gen_range(1..80);
            let density = rng.gen_range(0.02..0.6);
            let g = random_graph(&mut rng, n, density);
            let beta = rng.gen_range(0.01..0.2);
            let lambda = rng.gen_range(0.01..0.2);
            let (c, _) = run(&g, &zero_noise(beta, lambda), 5);
            let reference = alg_cc(&g, &AgreementVectors::constant(n, beta, lambda)).unwrap();
            assert_eq!(c, reference);
        }
    }

    #[test]
    fn trace_invariants_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PrivacyParams::derive(&DeriveInput::new(2.0, 0.1).t0_override(6.0)).unwrap();
        for seed in 0..20 {
            let g = random_graph(&mut rng, 60, 0.15);
            let (c, trace) = run(&g, &p, seed);
            trace.ledger.verify().unwrap();
            for v in 0..g.n() {
                assert_eq!(trace.in_h[v], trace.noised_degree[v] >= p.t0());
                if trace.light[v] {
                    assert!(c.is_singleton_light(v));
                }
            }
            for (i, &(u, v)) in g.edges().iter().enumerate() {
                if !(trace.in_h[u] && trace.in_h[v]) {
                    assert!(!trace.agreement[i]);
                    assert!(!trace.ledger.agreement.contains_key(&(u, v)));
                }
            }
            for &(u, v) in &trace.sparsified {
                assert!(g.has_edge(u, v));
                assert!(!(trace.light[u] && trace.light[v]));
                assert!(trace.in_h[u] && trace.in_h[v]);
            }
            let again = run(&g, &p, seed);
            assert_eq!(again.0, c);
            assert_eq!(again.1, trace);
        }
    }

    #[test]
    fn derived_threshold_on_sparse_graph_gives_all_singletons() {
        let p = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1)).unwrap();
        assert!(p.t0() > 1000.0);
        let g = two_k6();
        let (c, trace) = run(&g, &p, 11);
        assert!(trace.in_h.iter().all(|&h| !h));
        assert_eq!(c.num_clusters(), 12);
    }
}
