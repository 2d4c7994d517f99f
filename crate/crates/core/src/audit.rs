//! Empirical privacy estimates for single pipeline steps on adjacent graphs.
//!
//! Each step is run `N` times on `G` and on `G′` with independent seeds and an
//! event of the step's output is counted. With Clopper–Pearson intervals for
//! both frequencies, the report bounds
//! `max ln((P[S] − δ)/Q[S])` over the event, its complement and both
//! directions. A step is flagged only when the lower confidence bound exceeds
//! the step's guarantee, so a correct mechanism is flagged with probability at
//! most `α`.
//!
//! Scope: single steps only. The end-to-end guarantee follows by composition
//! and cannot be separated from the step bounds at these sample sizes.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::dp::agreement_holds;
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::noise::{agreement_base_scale, derive_seed, scaled_draw, NoiseKey, NoiseTag};
use crate::params::PrivacyParams;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    NoisedDegree,
    Agreement,
    Lightness,
}

impl FromStr for Step {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noised-degree" | "degree" => Ok(Step::NoisedDegree),
            "agreement" => Ok(Step::Agreement),
            "lightness" | "light" => Ok(Step::Lightness),
            other => Err(Error::Validation(format!(
                "unknown step `{other}` (noised-degree, agreement, lightness)"
            ))),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Step::NoisedDegree => "noised-degree",
            Step::Agreement => "agreement",
            Step::Lightness => "lightness",
        })
    }
}

/// Event predicates over a step's output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Event {
    /// `x ∈ H`.
    InH(usize),
    /// Every listed vertex is in `H`.
    InHAll(Vec<usize>),
    /// Edge `{u, v}` judged in noised agreement.
    Agree(usize, usize),
    /// `x` is light.
    Light(usize),
}

impl FromStr for Event {
    type Err = Error;
    /// `in-h:3`, `in-h-all:2,3`, `agree:4-5`, `light:7`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("cannot parse event `{s}`"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "in-h" => Ok(Event::InH(num(arg)?)),
            "in-h-all" => {
                let vs = arg.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if vs.is_empty() {
                    return Err(bad());
                }
                Ok(Event::InHAll(vs))
            }
            "agree" => {
                let (u, v) = arg.split_once('-').ok_or_else(bad)?;
                Ok(Event::Agree(num(u)?, num(v)?))
            }
            "light" => Ok(Event::Light(num(arg)?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::InH(x) => write!(f, "in-h:{x}"),
            Event::InHAll(vs) => {
                let list: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "in-h-all:{}", list.join(","))
            }
            Event::Agree(u, v) => write!(f, "agree:{u}-{v}"),
            Event::Light(x) => write!(f, "light:{x}"),
        }
    }
}

impl Event {
    fn vertices(&self) -> Vec<usize> {
        match self {
            Event::InH(x) | Event::Light(x) => vec![*x],
            Event::InHAll(vs) => vs.clone(),
            Event::Agree(u, v) => vec![*u, *v],
        }
    }

    fn fits(&self, step: Step) -> bool {
        matches!(
            (self, step),
            (Event::InH(_) | Event::InHAll(_), Step::NoisedDegree)
                | (Event::Agree(..), Step::Agreement)
                | (Event::Light(_), Step::Lightness)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditConfig {
    pub trials: usize,
    pub alpha: f64,
    /// Threshold replacing `T0` for the noised-degree step; the step's
    /// privacy does not depend on it.
    pub threshold: Option<f64>,
    /// Multiplies every noise scale. Anything other than 1 is a deliberately
    /// broken mechanism, used to check that the auditor notices.
    pub tamper_scale: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            alpha: DEFAULT_ALPHA,
            threshold: None,
            tamper_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub step: Step,
    pub event: String,
    pub trials: usize,
    pub count_g: usize,
    pub count_g_prime: usize,
    pub p_hat: f64,
    pub q_hat: f64,
    pub p_interval: (f64, f64),
    pub q_interval: (f64, f64),
    pub alpha: f64,
    pub epsilon_step: f64,
    pub delta_step: f64,
    pub epsilon_hat_upper: f64,
    pub epsilon_hat_lower: f64,
    pub slack: f64,
    /// `ε̂_lower ≤ ε_step`, i.e. `ε̂_upper ≤ ε_step + slack`.
    pub pass: bool,
    pub tamper_scale: f64,
    pub scope: &'static str,
}

const SCOPE: &str = "single-step audit; the composed pipeline is not audited";

/// Two-sided Clopper–Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, alpha: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64)
            .expect("positive shape")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64)
            .expect("positive shape")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

fn log_ratio(num: f64, delta: f64, den: f64) -> f64 {
    let top = num - delta;
    if top <= 0.0 {
        f64::NEG_INFINITY
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        (top / den).ln()
    }
}

/// `(ε̂_lower, ε̂_upper)` from simultaneous intervals for `p` and `q`.
pub fn epsilon_bounds(p: (f64, f64), q: (f64, f64), delta: f64) -> (f64, f64) {
    let comp = |(lo, hi): (f64, f64)| (1.0 - hi, 1.0 - lo);
    let pairs = [(p, q), (q, p), (comp(p), comp(q)), (comp(q), comp(p))];
    let upper = pairs
        .iter()
        .map(|&(a, b)| log_ratio(a.1, delta, b.0))
        .fold(0.0f64, f64::max);
    let lower = pairs
        .iter()
        .map(|&(a, b)| log_ratio(a.0, delta, b.1))
        .fold(0.0f64, f64::max);
    (lower, upper)
}

/// Differing edges between `G` and `G′`; at most one is allowed.
fn differing_edge(g: &SignedGraph, h: &SignedGraph) -> Result<Option<(usize, usize)>> {
    if g.n() != h.n() {
        return Err(Error::Precondition(format!(
            "graphs have {} and {} vertices",
            g.n(),
            h.n()
        )));
    }
    let a: std::collections::BTreeSet<_> = g.edges().iter().copied().collect();
    let b: std::collections::BTreeSet<_> = h.edges().iter().copied().collect();
    let diff: Vec<_> = a.symmetric_difference(&b).copied().collect();
    match diff.len() {
        0 => Ok(None),
        1 => Ok(Some(diff[0])),
        k => Err(Error::Precondition(format!(
            "graphs must differ in exactly one edge, found {k}"
        ))),
    }
}

/// Privacy guarantee `(ε, δ)` of a step.
pub fn step_bound(step: Step, p: &PrivacyParams) -> (f64, f64) {
    match step {
        Step::NoisedDegree | Step::Lightness => (p.epsilon / 4.0, 0.0),
        Step::Agreement => (2.9 * p.eps_agr, 2.4 * p.delta_agr),
    }
}

/// Removal status of every edge of the union graph, computed without noise on
/// the union and held fixed for both inputs of the lightness step.
fn union_removed(g: &SignedGraph, h: &SignedGraph, beta: f64) -> Result<SignedGraph> {
    let u = SignedGraph::from_edges(g.n(), g.edges().iter().chain(h.edges()).copied())?;
    let removed: Vec<(usize, usize)> = u
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| {
            let dmax = u.degree(a).max(u.degree(b));
            !agreement_holds(u.sym_diff_unchecked(a, b), 0.0, 1.0, beta, dmax)
        })
        .collect();
    SignedGraph::from_edges(g.n(), removed)
}

struct StepRunner<'a> {
    event: &'a Event,
    p: &'a PrivacyParams,
    threshold: f64,
    tamper: f64,
    removed: Option<SignedGraph>,
}

impl StepRunner<'_> {
    fn occurs(&self, g: &SignedGraph, seed: u64) -> bool {
        let vertex_scale = self.p.vertex_noise_scale() * self.tamper;
        match self.event {
            Event::InH(x) => self.in_h(g, *x, seed, vertex_scale),
            Event::InHAll(vs) => vs.iter().all(|&x| self.in_h(g, x, seed, vertex_scale)),
            Event::Agree(u, v) => {
                let base = agreement_base_scale(g.degree(*u), g.degree(*v), self.p) * self.tamper;
                let (_, e) = scaled_draw(
                    &NoiseKey::pair(seed, NoiseTag::Agreement, *u, *v),
                    base,
                    1.0,
                );
                let dmax = g.degree(*u).max(g.degree(*v));
                agreement_holds(g.sym_diff_unchecked(*u, *v), e, 1.0, self.p.beta, dmax)
            }
            Event::Light(x) => {
                let removed = self
                    .removed
                    .as_ref()
                    .expect("lightness runner has removal set");
                let l = removed
                    .adj(*x)
                    .iter()
                    .filter(|&&w| g.has_edge(*x, w))
                    .count();
                let (_, y) = scaled_draw(
                    &NoiseKey::vertex(seed, NoiseTag::Light, *x),
                    vertex_scale,
                    1.0,
                );
                l as f64 + y > self.p.lambda * g.degree(*x) as f64
            }
        }
    }

    fn in_h(&self, g: &SignedGraph, x: usize, seed: u64, scale: f64) -> bool {
        let (_, z) = scaled_draw(&NoiseKey::vertex(seed, NoiseTag::Degree, x), scale, 1.0);
        g.degree(x) as f64 + z >= self.threshold
    }
}

/// Audits one step on the adjacent pair `(g, g_prime)`.
pub fn audit_step(
    step: Step,
    g: &SignedGraph,
    g_prime: &SignedGraph,
    event: &Event,
    p: &PrivacyParams,
    cfg: &AuditConfig,
    seed: u64,
) -> Result<AuditReport> {
    if p.noise_multiplier != 1.0 {
        return Err(Error::Precondition(format!(
            "noise multiplier {} is not a private mechanism; audit refused",
            p.noise_multiplier
        )));
    }
    if !(cfg.tamper_scale.is_finite() && cfg.tamper_scale > 0.0) {
        return Err(Error::Validation("tamper scale must be positive".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Validation("audit needs at least one trial".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Validation(format!(
            "alpha must lie in (0, 1), got {}",
            cfg.alpha
        )));
    }
    differing_edge(g, g_prime)?;
    if !event.fits(step) {
        return Err(Error::Validation(format!(
            "event `{event}` does not describe the {step} step"
        )));
    }
    if let Some(&bad) = event.vertices().iter().find(|&&v| v >= g.n()) {
        return Err(Error::Validation(format!(
            "event vertex {bad} out of range"
        )));
    }
    if let Event::Agree(u, v) = *event {
        if u == v || !g.has_edge(u, v) || !g_prime.has_edge(u, v) {
            return Err(Error::Precondition(format!(
                "agreement event needs ({u}, {v}) to be an edge of both graphs"
            )));
        }
    }
    let removed = match step {
        Step::Lightness => Some(union_removed(g, g_prime, p.beta)?),
        _ => None,
    };
    let runner = StepRunner {
        event,
        p,
        threshold: cfg.threshold.unwrap_or_else(|| p.t0()),
        tamper: cfg.tamper_scale,
        removed,
    };
    let count = |graph: &SignedGraph, stream: u64| -> usize {
        (0..cfg.trials)
            .into_par_iter()
            .filter(|&t| runner.occurs(graph, derive_seed(seed, stream, t as u64)))
            .count()
    };
    let count_g = count(g, 0);
    let count_g_prime = count(g_prime, 1);

    // Bonferroni over the two intervals
    let p_interval = clopper_pearson(count_g, cfg.trials, cfg.alpha / 2.0);
    let q_interval = clopper_pearson(count_g_prime, cfg.trials, cfg.alpha / 2.0);
    let (epsilon_step, delta_step) = step_bound(step, p);
    let (lower, upper) = epsilon_bounds(p_interval, q_interval, delta_step);
    Ok(AuditReport {
        step,
        event: event.to_string(),
        trials: cfg.trials,
        count_g,
        count_g_prime,
        p_hat: count_g as f64 / cfg.trials as f64,
        q_hat: count_g_prime as f64 / cfg.trials as f64,
        p_interval,
        q_interval,
        alpha: cfg.alpha,
        epsilon_step,
        delta_step,
        epsilon_hat_upper: upper,
        epsilon_hat_lower: lower,
        slack: upper - lower,
        pass: lower <= epsilon_step,
        tamper_scale: cfg.tamper_scale,
        scope: SCOPE,
    })
}

/// Audit of the scalar mechanism `x + Lap(1/ε)` on inputs 0 and 1 with event
/// `output ≥ threshold`; true privacy loss is at most `ε`.
pub fn audit_scalar_laplace(
    epsilon: f64,
    threshold: f64,
    trials: usize,
    alpha: f64,
    seed: u64,
) -> (f64, f64, bool) {
    let count = |x: f64, stream: u64| {
        (0..trials)
            .into_par_iter()
            .filter(|&t| {
                let key =
                    NoiseKey::vertex(derive_seed(seed, stream, t as u64), NoiseTag::Degree, 0);
                x + scaled_draw(&key, 1.0 / epsilon, 1.0).1 >= threshold
            })
            .count()
    };
    let p = clopper_pearson(count(1.0, 0), trials, alpha / 2.0);
    let q = clopper_pearson(count(0.0, 1), trials, alpha / 2.0);
    let (lower, upper) = epsilon_bounds(p, q, 0.0);
    (lower, upper, lower <= epsilon)
}
