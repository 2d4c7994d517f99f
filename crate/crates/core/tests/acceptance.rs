//! Acceptance suite: one PASS/FAIL line per criterion. Per-trial rows are
//! available through `privcc bench`.
//!
//! Run a subset by passing criterion numbers or names:
//! `cargo test --test acceptance -- 5 mpc`.

use std::process::ExitCode;
use std::time::Instant;

use privcc::experiments::{self, Experiment};

const SEED: u64 = 20_240_601;

type Criterion = (u8, &'static str, fn() -> Experiment);

fn criteria() -> Vec<Criterion> {
    vec![
        (1, "zero-noise-reduction", || {
            experiments::zero_noise_reduction(100, SEED)
        }),
        (2, "sandwich-inequality", || {
            experiments::sandwich(100, SEED)
        }),
        (3, "monotonicity", || experiments::monotonicity(100, SEED)),
        (4, "brute-force-dominance", || {
            experiments::brute_force_dominance(100, SEED)
        }),
        (5, "laplace-tails", || {
            experiments::laplace_tails(1_000_000, SEED)
        }),
        (6, "gamma-identity", || {
            experiments::gamma_identity(1000, SEED)
        }),
        (7, "mpc-estimator", || {
            experiments::mpc_estimator(10_000, SEED)
        }),
        (8, "diameter-4", || experiments::diameter_bound(50, SEED)),
        (9, "mpc-accounting", || experiments::mpc_accounting(SEED)),
        (10, "lower-bound-family", || {
            experiments::lower_bound_family(200, SEED)
        }),
        (11, "privacy-audit", || {
            experiments::privacy_audit(100_000, SEED)
        }),
        (12, "approximation-trend", || {
            experiments::approximation_trend(SEED)
        }),
    ]
}

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected: Vec<Criterion> = criteria()
        .into_iter()
        .filter(|(id, name, _)| {
            filters.is_empty()
                || filters
                    .iter()
                    .any(|f| *f == id.to_string() || name.contains(f.as_str()))
        })
        .collect();
    if selected.is_empty() {
        // cargo passes test-name filters meant for other targets
        return ExitCode::SUCCESS;
    }
    println!("\nrunning {} acceptance criteria", selected.len());
    let mut failed = 0;
    for (_, _, f) in &selected {
        let start = Instant::now();
        let ex = f();
        println!("{} ({:.1}s)", ex.line(), start.elapsed().as_secs_f64());
        failed += usize::from(!ex.pass);
    }
    println!(
        "\nacceptance: {} passed; {failed} failed\n",
        selected.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
