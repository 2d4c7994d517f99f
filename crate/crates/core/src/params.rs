//! Privacy constants and the lower bounds on the degree threshold `T1`.
//!
//! All logarithms are natural. `T1` is the maximum of the individual lower
//! bounds that the privacy analysis places on it; the `n`-dependent bound
//! joins the maximum only when an `n_hint` is supplied. `T0 = T1 + 8·ln(16/δ)/ε`
//! unless a testing override is set.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_BETA: f64 = 0.8 / 36.0;
pub const DEFAULT_LAMBDA: f64 = 0.8 / 36.0;
pub const DEFAULT_BETA_PRIME: f64 = 0.1;
pub const DEFAULT_LAMBDA_PRIME: f64 = 0.1;
/// Upper limit on `5β + 2λ` for the approximation and diameter guarantees.
pub const APPROX_REGIME_LIMIT: f64 = 1.0 / 1.1;

/// User-facing inputs to [`PrivacyParams::derive`].
#[derive(Clone, Debug, PartialEq)]
pub struct DeriveInput {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub lambda: f64,
    pub beta_prime: f64,
    pub lambda_prime: f64,
    pub n_hint: Option<usize>,
    /// Testing dial `s`; every Laplace parameter is multiplied by it.
    pub noise_multiplier: f64,
    /// Testing replacement for `T0`.
    pub t0_override: Option<f64>,
}

impl DeriveInput {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        Self {
            epsilon,
            delta,
            beta: DEFAULT_BETA,
            lambda: DEFAULT_LAMBDA,
            beta_prime: DEFAULT_BETA_PRIME,
            lambda_prime: DEFAULT_LAMBDA_PRIME,
            n_hint: None,
            noise_multiplier: 1.0,
            t0_override: None,
        }
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn primes(mut self, beta_prime: f64, lambda_prime: f64) -> Self {
        self.beta_prime = beta_prime;
        self.lambda_prime = lambda_prime;
        self
    }

    pub fn n_hint(mut self, n: usize) -> Self {
        self.n_hint = Some(n);
        self
    }

    pub fn noise_multiplier(mut self, s: f64) -> Self {
        self.noise_multiplier = s;
        self
    }

    pub fn t0_override(mut self, t0: f64) -> Self {
        self.t0_override = Some(t0);
        self
    }

    /// Zero noise and `T0 = 0`: the run reduces to the non-private reference.
    pub fn zero_noise(self) -> Self {
        self.noise_multiplier(0.0).t0_override(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T1Bound {
    pub id: u8,
    pub label: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T1Report {
    pub bounds: Vec<T1Bound>,
    pub max: f64,
    /// Id of the bound attaining the maximum.
    pub binding: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub lambda: f64,
    pub beta_prime: f64,
    pub lambda_prime: f64,
    pub eps_agr: f64,
    pub delta_agr: f64,
    pub gamma: f64,
    pub t1: f64,
    /// Derived `T1 + 8·ln(16/δ)/ε`, independent of any override.
    pub t0_derived: f64,
    pub noise_multiplier: f64,
    pub t0_override: Option<f64>,
    pub n_hint: Option<usize>,
    pub t1_bounds: T1Report,
}

impl PrivacyParams {
    pub fn derive(input: &DeriveInput) -> Result<Self> {
        validate_input(input)?;
        let eps_agr = input.epsilon / 5.8;
        let delta_agr = input.delta / 9.6;
        let gamma = gamma_for(eps_agr, delta_agr);
        let report = t1_lower_bounds(input)?;
        let t1 = report.max;
        let t0_derived = t1 + t0_margin(input.epsilon, input.delta);
        Ok(Self {
            epsilon: input.epsilon,
            delta: input.delta,
            beta: input.beta,
            lambda: input.lambda,
            beta_prime: input.beta_prime,
            lambda_prime: input.lambda_prime,
            eps_agr,
            delta_agr,
            gamma,
            t1,
            t0_derived,
            noise_multiplier: input.noise_multiplier,
            t0_override: input.t0_override,
            n_hint: input.n_hint,
            t1_bounds: report,
        })
    }

    /// Effective degree threshold.
    pub fn t0(&self) -> f64 {
        self.t0_override.unwrap_or(self.t0_derived)
    }

    /// True when a testing dial makes the run non-private.
    pub fn non_private(&self) -> bool {
        self.noise_multiplier != 1.0 || self.t0_override.is_some()
    }

    /// Human-readable reasons for the NON-PRIVATE banner, empty when private.
    pub fn non_private_reasons(&self) -> Vec<String> {
        let mut reasons = Vec::new();
        if self.noise_multiplier != 1.0 {
            reasons.push(format!("noise multiplier s={}", self.noise_multiplier));
        }
        if let Some(t0) = self.t0_override {
            reasons.push(format!("T0 override {t0}"));
        }
        reasons
    }

    pub fn with_noise_multiplier(mut self, s: f64) -> Self {
        self.noise_multiplier = s;
        self
    }

    pub fn with_t0_override(mut self, t0: Option<f64>) -> Self {
        self.t0_override = t0;
        self
    }

    /// Laplace parameter of the degree and lightness noise, before `s`.
    pub fn vertex_noise_scale(&self) -> f64 {
        8.0 / self.epsilon
    }

    /// Residual of the quadratic that defines `γ`, relative to `ε_agr`.
    pub fn gamma_residual(&self) -> f64 {
        gamma_identity_lhs(self.eps_agr, self.delta_agr, self.gamma) / self.eps_agr - 1.0
    }

    pub fn regime(&self) -> RegimeCheck {
        validate_approx_regime(self.beta, self.lambda)
    }
}

/// `γ = (sqrt(4ε_agr/ln(1/δ_agr) + 1) + 1)/√2`.
pub fn gamma_for(eps_agr: f64, delta_agr: f64) -> f64 {
    let l = (1.0 / delta_agr).ln();
    ((4.0 * eps_agr / l + 1.0).sqrt() + 1.0) / std::f64::consts::SQRT_2
}

/// Left side of `√2·ε_agr/γ + 2ε_agr²/(γ²·ln(1/δ_agr)) = ε_agr`.
pub fn gamma_identity_lhs(eps_agr: f64, delta_agr: f64, gamma: f64) -> f64 {
    let l = (1.0 / delta_agr).ln();
    std::f64::consts::SQRT_2 * eps_agr / gamma + 2.0 * eps_agr * eps_agr / (gamma * gamma * l)
}

/// `8·ln(16/δ)/ε`, the margin between `T1` and `T0`.
pub fn t0_margin(epsilon: f64, delta: f64) -> f64 {
    8.0 * (16.0 / delta).ln() / epsilon
}

fn validate_input(input: &DeriveInput) -> Result<()> {
    let bad = |msg: String| Err(Error::Validation(msg));
    if !(input.epsilon.is_finite() && input.epsilon > 0.0) {
        return bad(format!("epsilon must be positive, got {}", input.epsilon));
    }
    if !(input.delta > 0.0 && input.delta < 0.5) {
        return bad(format!("delta must lie in (0, 1/2), got {}", input.delta));
    }
    for (name, value) in [("beta", input.beta), ("lambda", input.lambda)] {
        if !(value > 0.0 && value <= 0.2) {
            return bad(format!("{name} must lie in (0, 0.2], got {value}"));
        }
    }
    for (name, value) in [
        ("beta_prime", input.beta_prime),
        ("lambda_prime", input.lambda_prime),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return bad(format!("{name} must be positive, got {value}"));
        }
    }
    if !(input.noise_multiplier.is_finite() && input.noise_multiplier >= 0.0) {
        return bad(format!(
            "noise multiplier must be a finite value >= 0, got {}",
            input.noise_multiplier
        ));
    }
    if let Some(t0) = input.t0_override {
        if !t0.is_finite() {
            return bad(format!("T0 override must be finite, got {t0}"));
        }
    }
    if let Some(n) = input.n_hint {
        if n < 2 {
            return bad(format!("n_hint must be at least 2, got {n}"));
        }
    }
    Ok(())
}

fn infeasible(id: u8, detail: String) -> Error {
    Error::Validation(format!("T1 bound ({id}) is infeasible: {detail}"))
}

/// Evaluates every lower bound on `T1` and their maximum.
pub fn t1_lower_bounds(input: &DeriveInput) -> Result<T1Report> {
    validate_input(input)?;
    let DeriveInput {
        epsilon: eps,
        delta,
        beta,
        lambda,
        beta_prime: bp,
        lambda_prime: lp,
        ..
    } = *input;
    let eps_agr = eps / 5.8;
    let delta_agr = delta / 9.6;
    let gamma = gamma_for(eps_agr, delta_agr);
    let ln_inv_dagr = (1.0 / delta_agr).ln();

    let keep = 1.0 - beta - bp;
    let width = 2.0 - beta - bp;
    if keep <= 0.0 || width <= 0.0 {
        return Err(infeasible(
            1,
            format!("need beta + beta' < 1, got {}", beta + bp),
        ));
    }

    let mut bounds = Vec::with_capacity(9);
    let mut push = |id: u8, label: &'static str, value: f64| {
        bounds.push(T1Bound { id, label, value });
    };

    let den1 = keep / width - lambda - lp;
    if den1 <= 0.0 {
        return Err(infeasible(
            1,
            format!(
                "lambda + lambda' = {} must be below (1-beta-beta')/(2-beta-beta') = {}",
                lambda + lp,
                keep / width
            ),
        ));
    }
    push(1, "heavy-heavy common neighbors", 1.5 / den1);

    let den2 = (keep - 2.0 * (lambda + lp)) * width;
    if den2 <= 0.0 {
        return Err(infeasible(
            2,
            format!(
                "1 - beta - beta' - 2(lambda + lambda') = {} must be positive",
                keep - 2.0 * (lambda + lp)
            ),
        ));
    }
    push(2, "heavy-light common neighbors", 4.0 / den2);

    push(3, "agreement noise tail, linear", (4.0 / delta).ln() / bp);

    let t4 = (4.0 / delta).ln() * gamma / (eps_agr * bp);
    push(
        4,
        "agreement noise tail, square root",
        t4 * t4 * ln_inv_dagr,
    );

    push(
        5,
        "lightness noise tail",
        8.0 * (16.0 / delta).ln() / (lp * eps),
    );

    let a6 = lp * keep * eps;
    push(
        6,
        "lightness tail per neighbor",
        1.6 * (32.0 / (delta * a6)).ln() * 8.0 / a6,
    );

    push(
        7,
        "agreement tail per neighbor, linear",
        1.6 * (4.0 / (delta * bp)).ln() / bp,
    );

    let a8 = eps_agr * bp / (gamma * ln_inv_dagr.sqrt());
    let t8 = 2.8 * (1.0 + (2.0 / (delta.sqrt() * a8)).ln()) / a8;
    push(8, "agreement tail per neighbor, square root", t8 * t8);

    if let Some(n) = input.n_hint {
        let ln_n = (n as f64).ln();
        let c = (4.0 * eps_agr + 1.0).sqrt() + 1.0;
        let t_prime = (400.0 * ln_n / (lambda * eps)).max(
            2500.0 * c * c * ln_n * ln_n * (1.0 / delta).ln() / (beta * beta * eps_agr * eps_agr),
        );
        push(
            9,
            "approximation regime (n-dependent)",
            t_prime + 40.0 * ln_n / eps - t0_margin(eps, delta),
        );
    }

    if let Some(b) = bounds.iter().find(|b| !b.value.is_finite()) {
        return Err(infeasible(b.id, format!("bound evaluates to {}", b.value)));
    }
    let (max, binding) = bounds.iter().fold((f64::NEG_INFINITY, 0), |(m, id), b| {
        if b.value > m {
            (b.value, b.id)
        } else {
            (m, id)
        }
    });
    Ok(T1Report {
        bounds,
        max,
        binding,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub ok: bool,
    /// `5β + 2λ`.
    pub value: f64,
    pub limit: f64,
    /// `limit - value`; negative on violation.
    pub slack: f64,
}

/// Checks `5β + 2λ < 1/1.1`.
pub fn validate_approx_regime(beta: f64, lambda: f64) -> RegimeCheck {
    let value = 5.0 * beta + 2.0 * lambda;
    RegimeCheck {
        ok: value < APPROX_REGIME_LIMIT,
        value,
        limit: APPROX_REGIME_LIMIT,
        slack: APPROX_REGIME_LIMIT - value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bound(report: &T1Report, id: u8) -> f64 {
        report.bounds.iter().find(|b| b.id == id).unwrap().value
    }

    #[test]
    fn delta_out_of_range_is_rejected() {
        let err = PrivacyParams::derive(&DeriveInput::new(5.8, 0.96)).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("delta")));
        assert!(PrivacyParams::derive(&DeriveInput::new(0.0, 0.1)).is_err());
        assert!(PrivacyParams::derive(&DeriveInput::new(1.0, 0.1).beta(0.25)).is_err());
    }

    #[test]
    fn division_constants() {
        let p = PrivacyParams::derive(&DeriveInput::new(5.8, 0.48)).unwrap();
        assert!((p.eps_agr - 1.0).abs() < 1e-15);
        assert!((p.delta_agr - 0.05).abs() < 1e-15);
    }

    #[test]
    fn gamma_solves_its_quadratic() {
        let p = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1)).unwrap();
        assert!(p.gamma_residual().abs() < 1e-9);
        assert!(p.gamma >= std::f64::consts::SQRT_2);
    }

    #[test]
    fn t0_margin_identity() {
        let p = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1)).unwrap();
        assert!((p.t0() - p.t1 - t0_margin(1.0, 0.1)).abs() < 1e-9 * p.t0());
        assert!(!p.non_private());
        let q = PrivacyParams::derive(&DeriveInput::new(1.0, 0.1).t0_override(3.0)).unwrap();
        assert_eq!(q.t0(), 3.0);
        assert!(q.non_private());
    }

    #[test]
    fn bound_one_and_three_closed_forms() {
        let input = DeriveInput::new(1.0, 0.1)
            .beta(0.1)
            .lambda(0.1)
            .primes(0.1, 0.1);
        let report = t1_lower_bounds(&input).unwrap();
        // 1.5 / (0.8/1.8 - 0.2)
        assert!((bound(&report, 1) - 6.136_363_636_363_636).abs() < 1e-9);
        // ln(40) / 0.1
        assert!((bound(&report, 3) - 36.888_794_541_139_36).abs() < 1e-9);
        assert_eq!(report.bounds.len(), 8);
        let max = report
            .bounds
            .iter()
            .map(|b| b.value)
            .fold(f64::MIN, f64::max);
        assert_eq!(report.max, max);
    }

    #[test]
    fn remaining_bounds_match_hand_evaluation() {
        // Independent evaluation with ε = 1, δ = 0.1, β = λ = β' = λ' = 0.1.
        let (eps, delta, b, bp, lp) = (1.0f64, 0.1f64, 0.1f64, 0.1f64, 0.1f64);
        let ea = eps / 5.8;
        let da = delta / 9.6;
        let l = (1.0 / da).ln();
        let g = ((4.0 * ea / l + 1.0).sqrt() + 1.0) / 2f64.sqrt();
        let report = t1_lower_bounds(&DeriveInput::new(eps, delta).beta(b).lambda(0.1)).unwrap();
        let expect = [
            (2, 4.0 / ((1.0 - b - bp - 0.4) * (2.0 - b - bp))),
            (4, ((4.0 / delta).ln() * g / (ea * bp)).powi(2) * l),
            (5, 8.0 * (16.0 / delta).ln() / (lp * eps)),
            (
                6,
                1.6 * (32.0 / (delta * lp * 0.8 * eps)).ln() * 8.0 / (lp * 0.8 * eps),
            ),
            (7, 1.6 * (4.0 / (delta * bp)).ln() / bp),
            (
                8,
                (2.8 * (1.0 + (2.0 * g * l.sqrt() / (delta.sqrt() * ea * bp)).ln()) * g * l.sqrt()
                    / (ea * bp))
                    .powi(2),
            ),
        ];
        for (id, value) in expect {
            let got = bound(&report, id);
            assert!(
                (got - value).abs() <= 1e-9 * value,
                "bound {id}: {got} vs {value}"
            );
        }
    }

    #[test]
    fn n_hint_adds_ninth_bound() {
        let input = DeriveInput::new(1.0, 0.1).n_hint(1000);
        let report = t1_lower_bounds(&input).unwrap();
        assert_eq!(report.bounds.len(), 9);
        let ea = 1.0 / 5.8;
        let ln_n = 1000f64.ln();
        let c = (4.0 * ea + 1.0f64).sqrt() + 1.0;
        let t_prime = (400.0 * ln_n / (DEFAULT_LAMBDA)).max(
            2500.0 * c * c * ln_n * ln_n * 10f64.ln() / (DEFAULT_BETA * DEFAULT_BETA * ea * ea),
        );
        let expected = t_prime + 40.0 * ln_n - 8.0 * 160f64.ln();
        assert!((bound(&report, 9) - expected).abs() <= 1e-9 * expected);
        assert_eq!(report.binding, 9);
    }

    #[test]
    fn infeasible_bound_one() {
        // (1 - 0.2 - 0.1)/(2 - 0.3) ≈ 0.41 <= λ + λ' = 0.2 + 0.3
        let input = DeriveInput::new(1.0, 0.1)
            .beta(0.2)
            .lambda(0.2)
            .primes(0.1, 0.3);
        let err = t1_lower_bounds(&input).unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("(1)")),
            "{err}"
        );
    }

    #[test]
    fn infeasible_bound_two() {
        // bound (1) feasible: 0.7/1.7 - 0.36 > 0; bound (2): 0.7 - 2·0.36 < 0
        let input = DeriveInput::new(1.0, 0.1)
            .beta(0.2)
            .lambda(0.2)
            .primes(0.1, 0.16);
        let err = t1_lower_bounds(&input).unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("(2)")),
            "{err}"
        );
    }

    #[test]
    fn approx_regime_examples() {
        let r = validate_approx_regime(DEFAULT_BETA, DEFAULT_LAMBDA);
        assert!(r.ok);
        assert!((r.value - 7.0 * 0.8 / 36.0).abs() < 1e-12);
        let r = validate_approx_regime(0.2, 0.0);
        assert!(!r.ok);
        assert!(r.slack < 0.0);
        assert!(validate_approx_regime(0.0, 0.45).ok);
    }

    #[test]
    fn bounds_do_not_increase_with_epsilon_or_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let eps = rng.gen_range(0.05..5.0);
            let delta = rng.gen_range(1e-6..0.3);
            let base = t1_lower_bounds(&DeriveInput::new(eps, delta)).unwrap();
            let more_eps = t1_lower_bounds(&DeriveInput::new(eps * 1.5, delta)).unwrap();
            let more_delta =
                t1_lower_bounds(&DeriveInput::new(eps, (delta * 1.5).min(0.49))).unwrap();
            for ((a, b), c) in base
                .bounds
                .iter()
                .zip(&more_eps.bounds)
                .zip(&more_delta.bounds)
            {
                assert!(
                    b.value <= a.value * (1.0 + 1e-12),
                    "bound {} grew with epsilon",
                    a.id
                );
                assert!(
                    c.value <= a.value * (1.0 + 1e-12),
                    "bound {} grew with delta",
                    a.id
                );
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gamma_properties(eps in 0.01f64..10.0, log_delta in -9.0f64..-0.398) {
                let delta = 10f64.powf(log_delta);
                let p = PrivacyParams::derive(&DeriveInput::new(eps, delta)).unwrap();
                prop_assert!(p.gamma_residual().abs() <= 1e-9);
                prop_assert!(p.gamma >= std::f64::consts::SQRT_2);
                let margin = p.t0() - p.t1;
                prop_assert!((margin - t0_margin(eps, delta)).abs() <= 1e-12 * p.t0());
            }
        }
    }
}
