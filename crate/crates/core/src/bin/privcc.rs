use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use privcc::audit::{audit_step, AuditConfig, Event, Step, DEFAULT_ALPHA};
use privcc::cost::{brute_force_opt, cost};
use privcc::dp::run;
use privcc::experiments;
use privcc::gen::{er_signed, matching_instance, planted, PlantedSpec};
use privcc::mpc::{calibrate_a, simulate, MpcConfig, DEFAULT_A, DEFAULT_MAX_ROUNDS, DEFAULT_SLACK};
use privcc::params::{DeriveInput, DEFAULT_BETA, DEFAULT_LAMBDA};
use privcc::refcc::{alg_cc, alg_cc_prime, AgreementVectors};
use privcc::{Clustering, Error, PrivacyParams, Result, SignedGraph};

#[derive(Parser)]
#[command(
    name = "privcc",
    version,
    about = "Differentially private correlation clustering"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "PRIVCC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the private clustering pipeline.
    Cluster(ClusterArgs),
    /// Run the non-private reference procedure.
    Refcc(RefccArgs),
    /// Disagreement cost of a clustering.
    Cost(CostArgs),
    /// Exact optimum by exhaustive search (n <= 11).
    Opt(OptArgs),
    /// Massively parallel variant with memory and round accounting.
    Mpc(MpcArgs),
    /// Generate instances.
    Gen(GenArgs),
    /// Empirical privacy audit of one step on adjacent graphs.
    Audit(AuditArgs),
    /// Print the derived privacy constants as JSON.
    Params(ParamsArgs),
    /// Run the quantitative experiments and write one CSV per criterion.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct PrivacyFlags {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    beta_prime: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda_prime: f64,
    /// Include the vertex-count bound in T1.
    #[arg(long)]
    n_hint: Option<usize>,
}

#[derive(Args, Clone)]
struct TestingDials {
    /// Noise multiplier s; anything other than 1 is not private.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    /// Replace the derived T0; not private.
    #[arg(long)]
    t0_override: Option<f64>,
}

impl PrivacyFlags {
    fn derive(&self, dials: Option<&TestingDials>) -> Result<PrivacyParams> {
        let mut input = DeriveInput::new(self.epsilon, self.delta)
            .beta(self.beta)
            .lambda(self.lambda)
            .primes(self.beta_prime, self.lambda_prime);
        if let Some(n) = self.n_hint {
            input = input.n_hint(n);
        }
        if let Some(d) = dials {
            input = input.noise_multiplier(d.noise_scale);
            if let Some(t0) = d.t0_override {
                input = input.t0_override(t0);
            }
        }
        PrivacyParams::derive(&input)
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    privacy: PrivacyFlags,
    #[command(flatten)]
    dials: TestingDials,
    #[arg(long)]
    seed: u64,
    /// Clustering file (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Trace JSON; defaults to `<output>.trace.json` when --output is set.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Noise ledger CSV.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

#[derive(Args)]
struct RefccArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Edge list of forced removals.
    #[arg(long)]
    removed: Option<PathBuf>,
    /// Keep light vertices in their components.
    #[arg(long)]
    no_singletons: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    clustering: PathBuf,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long)]
    input: PathBuf,
    /// Witness clustering file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MpcArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    privacy: PrivacyFlags,
    #[command(flatten)]
    dials: TestingDials,
    #[arg(long)]
    seed: u64,
    /// Memory exponent.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Sampling constant.
    #[arg(long, default_value_t = DEFAULT_A)]
    a: f64,
    /// Machine memory is ceil(n^mu) * slack words.
    #[arg(long, default_value_t = DEFAULT_SLACK)]
    slack: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    max_rounds: usize,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Stats JSON; defaults to `<output>.stats.json` when --output is set.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Sweep these sampling constants instead of clustering.
    #[arg(long, value_delimiter = ',')]
    calibrate_a: Option<Vec<f64>>,
    /// Sample families per value in the sweep.
    #[arg(long, default_value_t = 100)]
    families: usize,
    /// Explicit beta-hat for the sweep (default 1.1 * beta).
    #[arg(long)]
    beta_hat: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
}

#[derive(Subcommand)]
enum GenKind {
    /// Planted partition with random sign flips.
    Planted {
        #[arg(long)]
        k: usize,
        /// Cluster size.
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0.0)]
        flip_p: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Ground-truth clustering file.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Each pair positive with probability p.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Perfect-matching instance: edge (2i, 2i+1) iff bit i is set.
    Matching {
        /// Bit string such as 1011; random when omitted.
        #[arg(long)]
        tau: Option<String>,
        /// Number of bits for a random tau.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    input: PathBuf,
    /// The adjacent graph.
    #[arg(long)]
    input_prime: PathBuf,
    /// noised-degree, agreement or lightness.
    #[arg(long)]
    step: String,
    /// in-h:X, in-h-all:X,Y, agree:U-V or light:X.
    #[arg(long)]
    event: String,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    privacy: PrivacyFlags,
    #[command(flatten)]
    dials: TestingDials,
    /// Degree threshold for the noised-degree step (defaults to T0).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Multiply the step's noise scale (fault injection).
    #[arg(long, default_value_t = 1.0)]
    tamper_scale: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ParamsArgs {
    #[command(flatten)]
    privacy: PrivacyFlags,
    #[command(flatten)]
    dials: TestingDials,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    seed: u64,
    /// Directory for the CSV files.
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    /// Criterion numbers to run (default all).
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
}

fn read_graph(path: &Path) -> Result<SignedGraph> {
    SignedGraph::load_edge_list(BufReader::new(File::open(path)?))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Domain(e.to_string()))?;
    text.push('\n');
    write_out(path, &text)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Header lines of a clustering file; non-private runs lead with a banner.
fn header(
    command: &str,
    p: Option<&PrivacyParams>,
    seed: Option<u64>,
    reference: bool,
) -> Vec<String> {
    let mut lines = Vec::new();
    if reference {
        lines.push("REFERENCE / NON-PRIVATE: non-private reference procedure".to_string());
    }
    if let Some(p) = p {
        let reasons = p.non_private_reasons();
        if !reasons.is_empty() {
            lines.push(format!("NON-PRIVATE: {}", reasons.join("; ")));
        }
        lines.push(format!(
            "privcc {command} epsilon={} delta={} beta={} lambda={} T0={}",
            p.epsilon,
            p.delta,
            p.beta,
            p.lambda,
            p.t0()
        ));
    } else {
        lines.push(format!("privcc {command}"));
    }
    if let Some(s) = seed {
        lines.push(format!("seed={s}"));
    }
    lines.push("vertex cluster is_singleton_light".to_string());
    lines
}

fn warn_non_private(p: &PrivacyParams) {
    if p.non_private() {
        eprintln!("NON-PRIVATE run: {}", p.non_private_reasons().join("; "));
    }
}

fn cmd_cluster(a: ClusterArgs) -> Result<()> {
    let p = a.privacy.derive(Some(&a.dials))?;
    let g = read_graph(&a.input)?;
    warn_non_private(&p);
    let (c, trace) = run(&g, &p, a.seed);
    write_out(
        a.output.as_deref(),
        &c.to_text(&header("cluster", Some(&p), Some(a.seed), false)),
    )?;
    let trace_path = a
        .trace
        .clone()
        .or_else(|| a.output.as_ref().map(|o| sibling(o, ".trace.json")));
    if let Some(path) = trace_path {
        let doc = json!({
            "non_private": p.non_private(),
            "non_private_reasons": p.non_private_reasons(),
            "params": p,
            "seed": a.seed,
            "summary": trace.summary(&c),
            "trace": trace,
        });
        write_json(Some(&path), &doc)?;
    }
    if let Some(path) = a.ledger {
        fs::write(path, trace.ledger.to_csv())?;
    }
    Ok(())
}

fn cmd_refcc(a: RefccArgs) -> Result<()> {
    let g = read_graph(&a.input)?;
    let mut vectors = AgreementVectors::constant(g.n(), a.beta, a.lambda);
    if let Some(path) = &a.removed {
        let removed = read_graph(path)?;
        vectors = vectors.with_removed(removed.edges().iter().copied());
    }
    let c = if a.no_singletons {
        alg_cc_prime(&g, &vectors)?
    } else {
        alg_cc(&g, &vectors)?
    };
    let mut head = header("refcc", None, None, true);
    head.insert(
        2,
        format!(
            "beta={} lambda={} light_singletons={}",
            a.beta, a.lambda, !a.no_singletons
        ),
    );
    write_out(a.output.as_deref(), &c.to_text(&head))
}

fn cmd_cost(a: CostArgs) -> Result<()> {
    let g = read_graph(&a.input)?;
    let c = Clustering::read(BufReader::new(File::open(&a.clustering)?))?;
    write_json(None, &cost(&g, &c)?)
}

fn cmd_opt(a: OptArgs) -> Result<()> {
    let g = read_graph(&a.input)?;
    let (report, witness) = brute_force_opt(&g)?;
    if let Some(path) = &a.output {
        fs::write(path, witness.to_text(&header("opt", None, None, false)))?;
    }
    write_json(
        None,
        &json!({ "opt": report, "witness": witness.assignment() }),
    )
}

fn cmd_mpc(a: MpcArgs) -> Result<()> {
    let p = a.privacy.derive(Some(&a.dials))?;
    let g = read_graph(&a.input)?;
    warn_non_private(&p);
    if let Some(values) = &a.calibrate_a {
        let beta_hat = a.beta_hat.unwrap_or(1.1 * p.beta);
        let rows = calibrate_a(&g, &p, beta_hat, values, a.families, a.seed)?;
        return write_json(
            a.output.as_deref(),
            &json!({ "beta_hat": beta_hat, "rows": rows }),
        );
    }
    let cfg = MpcConfig {
        mu: a.mu,
        a: a.a,
        slack: a.slack,
        max_rounds: a.max_rounds,
    };
    let out = simulate(&g, &p, &cfg, a.seed)?;
    let mut head = header("mpc", Some(&p), Some(a.seed), false);
    head.insert(
        head.len() - 1,
        format!("mu={} a={} slack={}", cfg.mu, cfg.a, cfg.slack),
    );
    write_out(a.output.as_deref(), &out.clustering.to_text(&head))?;
    let stats_path = a
        .stats
        .clone()
        .or_else(|| a.output.as_ref().map(|o| sibling(o, ".stats.json")));
    match stats_path {
        Some(path) => write_json(Some(&path), &out.stats),
        None => {
            let text =
                serde_json::to_string(&out.stats).map_err(|e| Error::Domain(e.to_string()))?;
            eprintln!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    match a.kind {
        GenKind::Planted {
            k,
            size,
            flip_p,
            seed,
            output,
            truth,
        } => {
            let pl = planted(&PlantedSpec {
                k,
                s: size,
                flip_p,
                seed,
            })?;
            write_out(output.as_deref(), &pl.graph.to_edge_list_string())?;
            if let Some(path) = truth {
                let head = vec![
                    format!("planted k={k} size={size} flip_p={flip_p} seed={seed}"),
                    format!("planted_cost={}", pl.planted_cost),
                ];
                fs::write(path, pl.truth.to_text(&head))?;
            }
            Ok(())
        }
        GenKind::Er { n, p, seed, output } => write_out(
            output.as_deref(),
            &er_signed(n, p, seed)?.to_edge_list_string(),
        ),
        GenKind::Matching {
            tau,
            m,
            seed,
            output,
        } => {
            let bits: Vec<bool> = match (tau, m) {
                (Some(t), _) => t
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::Validation(format!(
                            "tau must be a bit string, got `{t}`"
                        ))),
                    })
                    .collect::<Result<_>>()?,
                (None, Some(m)) => {
                    use rand::{Rng, SeedableRng};
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                    (0..m).map(|_| rng.gen()).collect()
                }
                (None, None) => {
                    return Err(Error::Validation("matching needs --tau or --m".into()))
                }
            };
            write_out(
                output.as_deref(),
                &matching_instance(&bits)?.to_edge_list_string(),
            )
        }
    }
}

fn cmd_audit(a: AuditArgs) -> Result<()> {
    let p = a.privacy.derive(Some(&a.dials))?;
    let g = read_graph(&a.input)?;
    let g_prime = read_graph(&a.input_prime)?;
    let step: Step = a.step.parse()?;
    let event: Event = a.event.parse()?;
    let cfg = AuditConfig {
        trials: a.trials,
        alpha: a.alpha,
        threshold: a.threshold,
        tamper_scale: a.tamper_scale,
    };
    let report = audit_step(step, &g, &g_prime, &event, &p, &cfg, a.seed)?;
    write_json(a.output.as_deref(), &report)
}

fn cmd_params(a: ParamsArgs) -> Result<()> {
    let p = a.privacy.derive(Some(&a.dials))?;
    let doc = json!({
        "epsilon": p.epsilon,
        "delta": p.delta,
        "beta": p.beta,
        "lambda": p.lambda,
        "beta_prime": p.beta_prime,
        "lambda_prime": p.lambda_prime,
        "eps_agr": p.eps_agr,
        "delta_agr": p.delta_agr,
        "gamma": p.gamma,
        "gamma_residual": p.gamma_residual(),
        "t1": p.t1,
        "t1_bounds": p.t1_bounds,
        "t0": p.t0(),
        "t0_derived": p.t0_derived,
        "vertex_noise_scale": p.vertex_noise_scale(),
        "noise_multiplier": p.noise_multiplier,
        "regime": p.regime(),
        "non_private": p.non_private(),
        "non_private_reasons": p.non_private_reasons(),
    });
    write_json(None, &doc)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let wanted = |id: u8| a.only.as_ref().is_none_or(|o| o.contains(&id));
    let runners: Vec<(u8, Box<dyn Fn() -> experiments::Experiment>)> = vec![
        (
            1,
            Box::new(|| experiments::zero_noise_reduction(100, a.seed)),
        ),
        (2, Box::new(|| experiments::sandwich(100, a.seed))),
        (3, Box::new(|| experiments::monotonicity(100, a.seed))),
        (
            4,
            Box::new(|| experiments::brute_force_dominance(100, a.seed)),
        ),
        (
            5,
            Box::new(|| experiments::laplace_tails(1_000_000, a.seed)),
        ),
        (6, Box::new(|| experiments::gamma_identity(1000, a.seed))),
        (7, Box::new(|| experiments::mpc_estimator(10_000, a.seed))),
        (8, Box::new(|| experiments::diameter_bound(50, a.seed))),
        (9, Box::new(|| experiments::mpc_accounting(a.seed))),
        (
            10,
            Box::new(|| experiments::lower_bound_family(200, a.seed)),
        ),
        (11, Box::new(|| experiments::privacy_audit(100_000, a.seed))),
        (12, Box::new(|| experiments::approximation_trend(a.seed))),
    ];
    let mut failed = 0;
    for (id, f) in runners.iter().filter(|(id, _)| wanted(*id)) {
        let ex = f();
        let file = a.out_dir.join(format!("{id:02}-{}.csv", ex.name));
        fs::write(&file, ex.to_csv())?;
        println!("{}", ex.line());
        failed += usize::from(!ex.pass);
    }
    if failed > 0 {
        return Err(Error::Validation(format!("{failed} criteria failed")));
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Refcc(a) => cmd_refcc(a),
        Command::Cost(a) => cmd_cost(a),
        Command::Opt(a) => cmd_opt(a),
        Command::Mpc(a) => cmd_mpc(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Params(a) => cmd_params(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
