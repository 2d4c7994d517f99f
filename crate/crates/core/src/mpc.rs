//! Sampled-neighborhood agreement and a bulk-synchronous accountant for the
//! massively parallel version of the pipeline.
//!
//! Levels are `j_k = r^k` with `r = 1/(1 − β̂)` and `β̂ = 1.1β`. Vertex `w`
//! belongs to `S(j)` with probability `min(a·ln n/(β̂·j), 1)`, decided by a
//! key-derived uniform so that every run with the same seed sees the same
//! family. Each vertex keeps `S(v, j_v)` and `S(v, r·j_v)`, where `j_v` is the
//! largest level not above `d(v)`.
//!
//! The simulator does not run a distributed system. It executes the pipeline
//! in memory and charges each stage to virtual machines of `⌈n^μ⌉·slack`
//! words, recording rounds, machine counts and peak memory.

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::Clustering;
use crate::dp::{run_with_rule, AgreementRule, RunTrace};
use crate::error::{Error, Result};
use crate::graph::{merge_count_common, SignedGraph};
use crate::noise::{NoiseKey, NoiseTag};
use crate::params::PrivacyParams;
use crate::sparsify::emit;

pub const DEFAULT_A: f64 = 30.0;
pub const DEFAULT_SLACK: f64 = 8.0;
pub const DEFAULT_MAX_ROUNDS: usize = 64;
/// Label-propagation rounds that suffice when every component has diameter ≤ 4.
pub const PROPAGATION_ROUNDS: usize = 5;
/// Words per record; tuples never exceed this.
pub const RECORD_WORDS: u64 = 4;

/// Sampling ratio `β̂/β`.
pub const BETA_HAT_RATIO: f64 = 1.1;

#[derive(Clone, Debug, Serialize)]
pub struct KeptSets {
    /// Index of `j_v`.
    pub level: usize,
    /// `S(v, j_v)`, sorted.
    pub low: Vec<usize>,
    /// `S(v, r·j_v)`, sorted.
    pub high: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleFamily {
    pub beta_hat: f64,
    pub a: f64,
    pub n: usize,
    pub seed: u64,
    /// `j_k` for `k = 0..`, ascending, up to the largest level not above the
    /// maximum degree.
    pub levels: Vec<f64>,
    pub kept: Vec<KeptSets>,
}

fn ln_n(n: usize) -> f64 {
    (n.max(2) as f64).ln()
}

impl SampleFamily {
    /// Family with `β̂ = 1.1·p.beta`.
    pub fn build(g: &SignedGraph, p: &PrivacyParams, a: f64, seed: u64) -> Result<Self> {
        Self::with_beta_hat(g, BETA_HAT_RATIO * p.beta, a, seed)
    }

    /// Family with an explicit `β̂`.
    pub fn with_beta_hat(g: &SignedGraph, beta_hat: f64, a: f64, seed: u64) -> Result<Self> {
        let mut fam = Self::levels_only(g, beta_hat, a, seed)?;
        fam.kept = (0..g.n())
            .into_par_iter()
            .map(|v| fam.kept_for(g, v))
            .collect();
        Ok(fam)
    }

    /// Levels and membership only; kept sets are computed on demand by
    /// [`SampleFamily::kept_for`] and [`SampleFamily::estimate_x_in`].
    pub fn levels_only(g: &SignedGraph, beta_hat: f64, a: f64, seed: u64) -> Result<Self> {
        if !(beta_hat > 0.0 && beta_hat < 1.0) {
            return Err(Error::Domain(format!(
                "beta_hat must lie in (0, 1), got {beta_hat}"
            )));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!(
                "sampling constant must be positive, got {a}"
            )));
        }
        let r = 1.0 / (1.0 - beta_hat);
        let dmax = (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(1) as f64;
        let mut levels = vec![1.0];
        loop {
            let next = r.powi(levels.len() as i32);
            if next > dmax {
                break;
            }
            levels.push(next);
        }
        Ok(Self {
            beta_hat,
            a,
            n: g.n(),
            seed,
            levels,
            kept: Vec::new(),
        })
    }

    /// `S(v, j_v)` and `S(v, r·j_v)` for one vertex.
    pub fn kept_for(&self, g: &SignedGraph, v: usize) -> KeptSets {
        let level = self.level_of_degree(g.degree(v));
        let closed: Vec<usize> = closed(g, v).collect();
        let low = closed
            .iter()
            .copied()
            .filter(|&w| self.member(level, w))
            .collect();
        let high = closed
            .iter()
            .copied()
            .filter(|&w| self.member(level + 1, w))
            .collect();
        KeptSets { level, low, high }
    }

    /// [`SampleFamily::estimate_x`] computing the two kept sets on the fly.
    pub fn estimate_x_in(&self, g: &SignedGraph, u: usize, v: usize) -> Option<(usize, usize)> {
        let (ku, kv) = (self.kept_for(g, u), self.kept_for(g, v));
        let (k, su, sv) = pick_level(&ku, &kv)?;
        Some((sorted_sym_diff(su, sv), k))
    }

    pub fn level_value(&self, k: usize) -> f64 {
        self.levels
            .get(k)
            .copied()
            .unwrap_or_else(|| (1.0 / (1.0 - self.beta_hat)).powi(k as i32))
    }

    /// Index of the largest level not above `d`.
    pub fn level_of_degree(&self, d: usize) -> usize {
        let d = d as f64;
        self.levels.partition_point(|&j| j <= d).saturating_sub(1)
    }

    /// `min(a·ln n/(β̂·j_k), 1)`.
    pub fn probability(&self, k: usize) -> f64 {
        (self.a * ln_n(self.n) / (self.beta_hat * self.level_value(k))).min(1.0)
    }

    pub fn saturated(&self, k: usize) -> bool {
        self.probability(k) >= 1.0
    }

    /// Whether `w ∈ S(j_k)`.
    pub fn member(&self, k: usize, w: usize) -> bool {
        let p = self.probability(k);
        p >= 1.0
            || NoiseKey::new(
                self.seed,
                NoiseTag::Sample,
                crate::noise::KeyIndex::Level(k, w),
            )
            .uniform()
                < p
    }

    /// The common level of `u` and `v` and the kept samples of each there.
    pub fn common_level(&self, u: usize, v: usize) -> Option<(usize, &[usize], &[usize])> {
        pick_level(&self.kept[u], &self.kept[v])
    }

    /// `(X_{u,v}, level)`, or `None` when the levels of `u` and `v` are more
    /// than one step apart.
    pub fn estimate_x(&self, u: usize, v: usize) -> Option<(usize, usize)> {
        let (k, su, sv) = self.common_level(u, v)?;
        Some((sorted_sym_diff(su, sv), k))
    }

    /// Words held by all kept sets.
    pub fn kept_words(&self) -> u64 {
        self.kept
            .iter()
            .map(|k| (k.low.len() + k.high.len()) as u64 * 3)
            .sum()
    }
}

fn pick_level<'a>(ku: &'a KeptSets, kv: &'a KeptSets) -> Option<(usize, &'a [usize], &'a [usize])> {
    if ku.level == kv.level {
        Some((ku.level, &ku.low, &kv.low))
    } else if kv.level == ku.level + 1 {
        Some((kv.level, &ku.high, &kv.low))
    } else if ku.level == kv.level + 1 {
        Some((ku.level, &ku.low, &kv.high))
    } else {
        None
    }
}

fn closed(g: &SignedGraph, v: usize) -> impl Iterator<Item = usize> + '_ {
    let adj = g.adj(v);
    let split = adj.partition_point(|&w| w < v);
    adj[..split]
        .iter()
        .copied()
        .chain(std::iter::once(v))
        .chain(adj[split..].iter().copied())
}

fn sorted_sym_diff(a: &[usize], b: &[usize]) -> usize {
    a.len() + b.len() - 2 * merge_count_common(a.iter().copied(), b.iter().copied())
}

/// Sampled agreement decision from its inputs. `estimate` is `(X, j)` at the common
/// level, or `None` when there is none.
#[allow(clippy::too_many_arguments)]
pub fn sampled_agreement_decision(
    d_u: usize,
    d_v: usize,
    noise: f64,
    beta: f64,
    beta_hat: f64,
    a: f64,
    n: usize,
    estimate: Option<(usize, f64)>,
) -> bool {
    let dmax = d_u.max(d_v) as f64;
    if (d_u as f64 - d_v as f64).abs() >= beta * dmax - noise {
        return false;
    }
    let Some((x, j)) = estimate else {
        return false;
    };
    let tau = (a * ln_n(n) / j) * (dmax - noise / beta_hat);
    x as f64 <= 0.9 * tau
}

/// Sampled agreement test with the estimate `X_{u,v}`.
pub fn mpc_noised_agreement(
    g: &SignedGraph,
    u: usize,
    v: usize,
    fam: &SampleFamily,
    p: &PrivacyParams,
    noise: f64,
) -> bool {
    let est = fam.estimate_x(u, v).map(|(x, k)| (x, fam.level_value(k)));
    sampled_agreement_decision(
        g.degree(u),
        g.degree(v),
        noise,
        p.beta,
        fam.beta_hat,
        fam.a,
        fam.n,
        est,
    )
}

/// Agreement rule driven by the sampled estimate.
pub struct SampledAgreement<'a> {
    pub family: &'a SampleFamily,
}

impl AgreementRule for SampledAgreement<'_> {
    fn decide(&self, g: &SignedGraph, u: usize, v: usize, noise: f64, p: &PrivacyParams) -> bool {
        mpc_noised_agreement(g, u, v, self.family, p, noise)
    }
}

/// Sampled agreement test with `X` replaced by the exact `|N(u)△N(v)|` at the same level
/// choice; the sequential oracle for saturated families.
pub struct ExactLevelAgreement<'a> {
    pub family: &'a SampleFamily,
}

impl AgreementRule for ExactLevelAgreement<'_> {
    fn decide(&self, g: &SignedGraph, u: usize, v: usize, noise: f64, p: &PrivacyParams) -> bool {
        let fam = self.family;
        let est = fam
            .common_level(u, v)
            .map(|(k, _, _)| (g.sym_diff_unchecked(u, v), fam.level_value(k)));
        sampled_agreement_decision(
            g.degree(u),
            g.degree(v),
            noise,
            p.beta,
            fam.beta_hat,
            fam.a,
            fam.n,
            est,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MpcConfig {
    /// Memory exponent `μ`.
    pub mu: f64,
    pub a: f64,
    pub slack: f64,
    pub max_rounds: usize,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            mu: 0.5,
            a: DEFAULT_A,
            slack: DEFAULT_SLACK,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

impl MpcConfig {
    /// `⌈n^μ⌉·slack` words, rounded down.
    pub fn capacity(&self, n: usize) -> Result<u64> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::Config(format!(
                "memory exponent must lie in (0, 1], got {}",
                self.mu
            )));
        }
        if !(self.slack.is_finite() && self.slack > 0.0) {
            return Err(Error::Config(format!(
                "slack must be positive, got {}",
                self.slack
            )));
        }
        let words = ((n.max(1) as f64).powf(self.mu).ceil() * self.slack).floor() as u64;
        if words < RECORD_WORDS {
            return Err(Error::Config(format!(
                "machine memory of {words} words cannot hold one {RECORD_WORDS}-word record"
            )));
        }
        Ok(words)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageStats {
    pub name: String,
    pub rounds: usize,
    pub records: u64,
    pub words: u64,
    pub machines: u64,
    pub peak_machine_words: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MpcStats {
    pub rounds: usize,
    pub machines: u64,
    pub peak_machine_words: u64,
    /// Largest total memory in use at any stage, resident input included.
    pub total_words: u64,
    pub mu: f64,
    pub machine_capacity: u64,
    pub propagation_rounds: usize,
    pub diameter_flag: bool,
    pub stages: Vec<StageStats>,
}

/// Charges stages to fixed-capacity machines.
#[derive(Clone, Debug)]
pub struct Accountant {
    capacity: u64,
    resident: u64,
    stages: Vec<StageStats>,
}

impl Accountant {
    pub fn new(capacity: u64, resident: u64) -> Self {
        Self {
            capacity,
            resident,
            stages: Vec::new(),
        }
    }

    /// Tree depth of a sort or aggregation over `records` records.
    pub fn tree_depth(&self, records: u64) -> usize {
        let fanin = (self.capacity / RECORD_WORDS).max(2);
        let mut depth = 0;
        let mut span = 1u64;
        while span < records {
            span = span.saturating_mul(fanin);
            depth += 1;
        }
        depth
    }

    /// Packs `records` tuples of `width` words onto machines; `aggregate`
    /// adds the rounds of a sort/reduce tree.
    pub fn charge(
        &mut self,
        name: &str,
        records: u64,
        width: u64,
        local_rounds: usize,
        aggregate: bool,
    ) -> Result<()> {
        if width == 0 || width > RECORD_WORDS {
            return Err(Error::Contract(format!(
                "record width {width} outside 1..={RECORD_WORDS}"
            )));
        }
        let per_machine = self.capacity / width;
        if per_machine == 0 {
            return Err(Error::Contract(format!(
                "stage {name}: a {width}-word record exceeds the {}-word machine budget",
                self.capacity
            )));
        }
        let machines = records.div_ceil(per_machine).max(1);
        let peak = records.min(per_machine) * width;
        if peak > self.capacity {
            return Err(Error::Contract(format!(
                "stage {name}: machine load {peak} exceeds budget {}",
                self.capacity
            )));
        }
        let rounds = local_rounds
            + if aggregate {
                self.tree_depth(records)
            } else {
                0
            };
        self.stages.push(StageStats {
            name: name.to_string(),
            rounds,
            records,
            words: records * width,
            machines,
            peak_machine_words: peak,
        });
        Ok(())
    }

    pub fn stages(&self) -> &[StageStats] {
        &self.stages
    }

    fn finish(self, mu: f64, propagation_rounds: usize, diameter_flag: bool) -> MpcStats {
        MpcStats {
            rounds: self.stages.iter().map(|s| s.rounds).sum(),
            machines: self.stages.iter().map(|s| s.machines).max().unwrap_or(0),
            peak_machine_words: self
                .stages
                .iter()
                .map(|s| s.peak_machine_words)
                .max()
                .unwrap_or(0),
            total_words: self.resident + self.stages.iter().map(|s| s.words).max().unwrap_or(0),
            mu,
            machine_capacity: self.capacity,
            propagation_rounds,
            diameter_flag,
            stages: self.stages,
        }
    }
}

/// Outcome of min-label propagation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagation {
    pub labels: Vec<usize>,
    /// Rounds executed, fallback included.
    pub rounds: usize,
    /// Labels were still changing after the fixed number of rounds.
    pub fallback: bool,
}

/// Synchronous min-label propagation for [`PROPAGATION_ROUNDS`] rounds, then
/// propagation with pointer jumping until stable.
pub fn propagate_labels(n: usize, edges: &[(usize, usize)]) -> Propagation {
    let mut labels: Vec<usize> = (0..n).collect();
    let step = |labels: &[usize]| {
        let mut next = labels.to_vec();
        for &(u, v) in edges {
            let m = labels[u].min(labels[v]);
            next[u] = next[u].min(m);
            next[v] = next[v].min(m);
        }
        next
    };
    let mut rounds = 0;
    let mut changed = true;
    while rounds < PROPAGATION_ROUNDS && changed {
        let next = step(&labels);
        changed = next != labels;
        labels = next;
        rounds += 1;
    }
    let fallback = changed;
    while changed {
        let mut next = step(&labels);
        for v in 0..n {
            next[v] = next[v].min(next[next[v]]);
        }
        changed = next != labels;
        labels = next;
        rounds += 1;
    }
    Propagation {
        labels,
        rounds,
        fallback,
    }
}

#[derive(Clone, Debug)]
pub struct MpcRun {
    pub clustering: Clustering,
    pub stats: MpcStats,
    pub trace: RunTrace,
    pub family: SampleFamily,
}

/// Runs the pipeline with sampled agreement and charges every stage.
pub fn simulate(g: &SignedGraph, p: &PrivacyParams, cfg: &MpcConfig, seed: u64) -> Result<MpcRun> {
    let n = g.n();
    let capacity = cfg.capacity(n)?;
    let family = SampleFamily::build(g, p, cfg.a, seed)?;
    let (_, trace) = run_with_rule(g, p, seed, &SampledAgreement { family: &family });

    let m = g.num_edges() as u64;
    let nn = n as u64;
    // input edge list, both orientations
    let mut acc = Accountant::new(capacity, 4 * m);
    acc.charge("degrees", 2 * m, 2, 1, true)?;
    acc.charge("noised-degree", nn, 3, 1, false)?;

    let in_h = &trace.in_h;
    let sample_records: u64 = (0..n)
        .filter(|&v| in_h[v])
        .map(|v| (family.kept[v].low.len() + family.kept[v].high.len()) as u64)
        .sum();
    acc.charge("samples", sample_records + 2 * m, 3, 1, true)?;

    let tested: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| in_h[u] && in_h[v])
        .collect();
    acc.charge("degree-gap", tested.len() as u64, 4, 1, false)?;
    let replicated: u64 = tested
        .par_iter()
        .map(|&(u, v)| {
            family
                .common_level(u, v)
                .map_or(0, |(_, su, sv)| (su.len() + sv.len()) as u64)
        })
        .sum();
    acc.charge("replicate-samples", replicated, 3, 1, true)?;
    acc.charge("estimate", replicated, 3, 0, true)?;
    acc.charge("decide", tested.len() as u64, 4, 1, false)?;
    acc.charge("removed-count", 2 * m, 2, 1, true)?;
    acc.charge("lightness", nn, 3, 1, false)?;
    acc.charge("sparsify", m, 3, 1, false)?;

    let prop = propagate_labels(n, &trace.sparsified);
    let per_round = 2 * trace.sparsified.len() as u64 + nn;
    for r in 0..prop.rounds {
        let name = if r < PROPAGATION_ROUNDS {
            "propagate"
        } else {
            "propagate-fallback"
        };
        acc.charge(name, per_round, 2, 1, true)?;
    }
    let clustering = emit(&prop.labels, &trace.light, true);
    let stats = acc.finish(cfg.mu, prop.rounds, prop.fallback);
    Ok(MpcRun {
        clustering,
        stats,
        trace,
        family,
    })
}

/// One row of the sampling-constant sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub a: f64,
    pub families: usize,
    /// Pairs in 0.8-noised agreement, and how often the sampled test said yes.
    pub near_pairs: usize,
    pub near_yes_rate: f64,
    /// Pairs not in 1.0-noised agreement, and how often the sampled test said no.
    pub far_pairs: usize,
    pub far_no_rate: f64,
    pub saturated_fraction: f64,
}

/// Sweeps `a` over fresh sample families. Noise draws are shared between the
/// exact classification and the sampled test.
pub fn calibrate_a(
    g: &SignedGraph,
    p: &PrivacyParams,
    beta_hat: f64,
    a_values: &[f64],
    families: usize,
    seed: u64,
) -> Result<Vec<CalibrationRow>> {
    use crate::dp::{agreement_draw, agreement_holds};
    let noise: Vec<f64> = g
        .edges()
        .iter()
        .map(|&(u, v)| agreement_draw(g, u, v, p, seed).value)
        .collect();
    let class: Vec<(bool, bool)> = g
        .edges()
        .iter()
        .zip(&noise)
        .map(|(&(u, v), &e)| {
            let sym = g.sym_diff_unchecked(u, v);
            let dmax = g.degree(u).max(g.degree(v));
            (
                agreement_holds(sym, e, 0.8, p.beta, dmax),
                !agreement_holds(sym, e, 1.0, p.beta, dmax),
            )
        })
        .collect();
    let near = class.iter().filter(|c| c.0).count();
    let far = class.iter().filter(|c| c.1).count();
    let mut rows = Vec::new();
    for &a in a_values {
        let mut near_yes = 0usize;
        let mut far_no = 0usize;
        let mut saturated = 0usize;
        let mut levels_seen = 0usize;
        for f in 0..families {
            let fam_seed = crate::noise::derive_seed(seed, a.to_bits(), f as u64);
            let fam = SampleFamily::with_beta_hat(g, beta_hat, a, fam_seed)?;
            for (i, &(u, v)) in g.edges().iter().enumerate() {
                let yes = mpc_noised_agreement(g, u, v, &fam, p, noise[i]);
                near_yes += usize::from(class[i].0 && yes);
                far_no += usize::from(class[i].1 && !yes);
            }
            saturated += (0..fam.levels.len()).filter(|&k| fam.saturated(k)).count();
            levels_seen += fam.levels.len();
        }
        let rate = |hits: usize, pairs: usize| {
            if pairs == 0 {
                f64::NAN
            } else {
                hits as f64 / (pairs * families) as f64
            }
        };
        rows.push(CalibrationRow {
            a,
            families,
            near_pairs: near,
            near_yes_rate: rate(near_yes, near),
            far_pairs: far,
            far_no_rate: rate(far_no, far),
            saturated_fraction: saturated as f64 / levels_seen.max(1) as f64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::run_with_rule;
    use crate::gen::{er_signed, planted, PlantedSpec};
    use crate::params::DeriveInput;

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

    #[test]
    fn levels_and_kept_sets() {
        let g = er_signed(200, 0.3, 1).unwrap();
        let fam = SampleFamily::with_beta_hat(&g, 0.5, 1.0, 3).unwrap();
        let r = 2.0f64;
        let bound = ((200f64).ln() / r.ln()).ceil() as usize + 1;
        assert!(fam.levels.len() <= bound);
        assert!(fam.levels.windows(2).all(|w| w[0] < w[1]));
        for v in 0..g.n() {
            let k = fam.kept[v].level;
            let d = g.degree(v) as f64;
            assert!(fam.level_value(k) <= d && fam.level_value(k + 1) > d);
            let closed = g.closed_neighborhood(v).unwrap();
            let low: Vec<usize> = closed
                .iter()
                .copied()
                .filter(|&w| fam.member(k, w))
                .collect();
            let high: Vec<usize> = closed
                .iter()
                .copied()
                .filter(|&w| fam.member(k + 1, w))
                .collect();
            assert_eq!(fam.kept[v].low, low);
            assert_eq!(fam.kept[v].high, high);
        }
    }

    #[test]
    fn saturated_family_is_exact() {
        let g = er_signed(80, 0.2, 4).unwrap();
        let p = zero_noise(0.05, 0.05);
        let fam = SampleFamily::build(&g, &p, DEFAULT_A, 5).unwrap();
        assert!((0..=fam.levels.len()).all(|k| fam.saturated(k)));
        for &(u, v) in g.edges() {
            if let Some((x, _)) = fam.estimate_x(u, v) {
                assert_eq!(x, g.sym_diff_size(u, v).unwrap());
            }
        }
    }

    #[test]
    fn lazy_estimate_matches_full_family() {
        let g = er_signed(120, 0.4, 6).unwrap();
        let full = SampleFamily::with_beta_hat(&g, 0.6, 2.0, 9).unwrap();
        let lazy = SampleFamily::levels_only(&g, 0.6, 2.0, 9).unwrap();
        assert_eq!(full.levels, lazy.levels);
        for u in 0..20 {
            for v in (u + 1)..20 {
                assert_eq!(full.estimate_x(u, v), lazy.estimate_x_in(&g, u, v));
            }
        }
    }

    #[test]
    fn equal_degrees_use_first_case() {
        let g = two_k6();
        let fam = SampleFamily::with_beta_hat(&g, 0.5, 0.5, 0).unwrap();
        let (x, k) = fam.estimate_x(0, 1).unwrap();
        assert_eq!(k, fam.kept[0].level);
        assert_eq!(k, fam.kept[1].level);
        // identical closed neighborhoods
        assert_eq!(x, 0);
    }

    #[test]
    fn level_gap_means_no() {
        // star center has degree 21, leaves degree 2
        let g = SignedGraph::from_edges(21, (1..21).map(|v| (0, v))).unwrap();
        let p = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1).beta(0.2).zero_noise()).unwrap();
        let fam = SampleFamily::with_beta_hat(&g, 0.5, 30.0, 0).unwrap();
        assert!(fam.kept[0].level > fam.kept[1].level + 1);
        assert_eq!(fam.estimate_x(0, 1), None);
        assert!(!mpc_noised_agreement(&g, 0, 1, &fam, &p, 0.0));
    }

    #[test]
    fn line_one_rejects_degree_gaps() {
        assert!(!sampled_agreement_decision(
            10,
            5,
            0.0,
            0.2,
            0.22,
            30.0,
            100,
            Some((0, 1.0))
        ));
        assert!(sampled_agreement_decision(
            10,
            9,
            0.0,
            0.2,
            0.22,
            30.0,
            100,
            Some((0, 1.0))
        ));
        // saturated zero-noise threshold
        let tau: f64 = 30.0 * 100f64.ln() / 8.0 * 10.0;
        let x = (0.9 * tau).floor() as usize;
        assert!(sampled_agreement_decision(
            10,
            9,
            0.0,
            0.2,
            0.22,
            30.0,
            100,
            Some((x, 8.0))
        ));
        assert!(!sampled_agreement_decision(
            10,
            9,
            0.0,
            0.2,
            0.22,
            30.0,
            100,
            Some((x + 1, 8.0))
        ));
        assert!(!sampled_agreement_decision(
            10, 9, 0.0, 0.2, 0.22, 30.0, 100, None
        ));
    }

    #[test]
    fn membership_frequency_matches_probability() {
        let g = SignedGraph::empty(400);
        let fam = SampleFamily::with_beta_hat(&g, 0.5, 0.02, 0).unwrap();
        let k = 0;
        let prob = fam.probability(k);
        assert!(prob < 1.0);
        let seeds = 2000;
        let hits: usize = (0..seeds)
            .map(|s| {
                let f = SampleFamily {
                    seed: s,
                    ..fam.clone()
                };
                (0..400).filter(|&w| f.member(k, w)).count()
            })
            .sum();
        let trials = (seeds * 400) as f64;
        let mean = hits as f64 / trials;
        let sigma = (prob * (1.0 - prob) / trials).sqrt();
        assert!((mean - prob).abs() < 3.0 * sigma, "{mean} vs {prob}");
    }

    #[test]
    fn two_cliques_simulated() {
        let g = two_k6();
        let run = simulate(&g, &zero_noise(0.02, 0.02), &MpcConfig::default(), 0).unwrap();
        assert_eq!(
            run.clustering.clusters(),
            vec![(0..6).collect::<Vec<_>>(), (6..12).collect()]
        );
        assert!(!run.stats.diameter_flag);
        assert!(run.stats.rounds <= MpcConfig::default().max_rounds);
        assert!(run.stats.peak_machine_words <= run.stats.machine_capacity);
    }

    #[test]
    fn simulate_matches_sequential_oracle() {
        for seed in 0..30u64 {
            let n = 10 + (seed as usize * 7) % 55;
            let g = er_signed(n, 0.05 + (seed % 5) as f64 * 0.1, seed).unwrap();
            let p = zero_noise(0.1, 0.1);
            let run = simulate(&g, &p, &MpcConfig::default(), seed).unwrap();
            let (oracle, _) = run_with_rule(
                &g,
                &p,
                seed,
                &ExactLevelAgreement {
                    family: &run.family,
                },
            );
            assert_eq!(run.clustering, oracle, "seed {seed}");
        }
    }

    #[test]
    fn label_propagation_matches_union_find() {
        for seed in 0..20 {
            let g = er_signed(60, 0.03, seed).unwrap();
            let prop = propagate_labels(g.n(), g.edges());
            assert_eq!(
                prop.labels,
                crate::clustering::components(g.n(), g.edges().iter().copied())
            );
        }
        // a long path needs the fallback
        let path: Vec<(usize, usize)> = (0..20).map(|i| (i, i + 1)).collect();
        let prop = propagate_labels(21, &path);
        assert!(prop.fallback);
        assert!(prop.labels.iter().all(|&l| l == 0));
        // diameter 4: stable within the fixed rounds
        let short: Vec<(usize, usize)> = (0..4).map(|i| (i, i + 1)).collect();
        let prop = propagate_labels(5, &short);
        assert!(!prop.fallback);
        assert!(prop.rounds <= PROPAGATION_ROUNDS);
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = MpcConfig {
            mu: 0.1,
            slack: 1.0,
            ..MpcConfig::default()
        };
        assert!(matches!(cfg.capacity(10), Err(Error::Config(_))));
        let mut acc = Accountant::new(3, 0);
        assert!(acc.charge("x", 5, 4, 1, false).is_err());
        let mut acc = Accountant::new(16, 0);
        acc.charge("x", 100, 4, 1, true).unwrap();
        assert_eq!(acc.stages()[0].machines, 25);
        assert_eq!(acc.stages()[0].peak_machine_words, 16);
        assert!(MpcConfig {
            mu: 0.0,
            ..MpcConfig::default()
        }
        .capacity(10)
        .is_err());
    }

    #[test]
    fn simulate_is_deterministic() {
        let pl = planted(&PlantedSpec {
            k: 3,
            s: 20,
            flip_p: 0.05,
            seed: 2,
        })
        .unwrap();
        let p = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1).t0_override(5.0)).unwrap();
        let cfg = MpcConfig {
            mu: 0.3,
            ..MpcConfig::default()
        };
        let a = simulate(&pl.graph, &p, &cfg, 8).unwrap();
        let b = simulate(&pl.graph, &p, &cfg, 8).unwrap();
        assert_eq!(a.clustering, b.clustering);
        assert_eq!(a.stats, b.stats);
        assert!(a.stats.peak_machine_words <= a.stats.machine_capacity);
    }
}
