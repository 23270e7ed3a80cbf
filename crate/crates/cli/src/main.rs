//! `qrev` — command-line runner for partial-measurement reversal experiments.
//!
//! Every subcommand writes a machine-readable report (JSON with top-level
//! `manifest` and `results` keys; CSV for tabular surfaces) to `--out`, or to
//! stdout when no path is given.  Angles are radians; measurement strengths
//! are decimals in [0, 1].  Exit codes: 0 on success, 2 on argument or range
//! errors, 1 on runtime errors.

mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use output::{CliError, Format, OutputArgs, RunManifest};
use qrev_core::chain::{enumerate_exact, simulate_ensemble, ChainConfig, PathStep};
use qrev_core::inference::{
    asymptotic_entropy_scan, entropy_report, fisher_information, log_likelihood_surface,
    per_hexagon_entropy, LikelihoodSpec, SurfaceGrid, DEFAULT_FD_STEP,
};
use qrev_core::qkd::{
    intercept_resend_profile, run_b92, B92Config, EveBasis, EveStrategy, InterceptResendProfile,
};
use qrev_core::rng::substream;
use qrev_core::twoqubit::{
    epr_amplification, no_signaling_check, remote_readout_scenario, MeasBasis, ReadoutVariant,
};
use qrev_core::{B92Stats, BlochAngles, CountRecord, PartialMeasurement, PureState};

#[derive(Parser)]
#[command(
    name = "qrev",
    version,
    about = "Partial qubit measurements, their probabilistic undo, and what the records reveal"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo ensemble of measure-then-undo chains with postselection
    Chain(ChainArgs),
    /// Exact enumeration of every chain path and its probability
    Enumerate(EnumerateArgs),
    /// Weighted log-likelihood surface over the state angles
    Likelihood(LikelihoodArgs),
    /// Fisher information matrix of the weighted log-likelihood
    Fisher(FisherArgs),
    /// Record-entropy decomposition, optionally scanned over strengths
    Entropy(EntropyArgs),
    /// Entanglement degradation and probabilistic restoration on a Bell pair
    Epr(EprArgs),
    /// Teleportation-circuit state and remote-readout variants
    Teleport(TeleportArgs),
    /// Check that one side's choices cannot steer the other's marginals
    Nosignal(NosignalArgs),
    /// B92 key distribution with an optional eavesdropper
    B92(B92Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Chain(a) => run_chain(a),
        Command::Enumerate(a) => run_enumerate(a),
        Command::Likelihood(a) => run_likelihood(a),
        Command::Fisher(a) => run_fisher(a),
        Command::Entropy(a) => run_entropy(a),
        Command::Epr(a) => run_epr(a),
        Command::Teleport(a) => run_teleport(a),
        Command::Nosignal(a) => run_nosignal(a),
        Command::B92(a) => run_b92_command(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Whether the likelihood keeps the undo-check factors.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn as_str(self) -> &'static str {
        match self {
            Self::On => "on",
            Self::Off => "off",
        }
    }

    fn likelihood_spec(self) -> LikelihoodSpec {
        match self {
            Self::On => LikelihoodSpec::with_reversal_factors(),
            Self::Off => LikelihoodSpec::priors_only(),
        }
    }
}

#[derive(Args)]
struct ChainArgs {
    /// Strength felt by |1> (decimal in [0, 1])
    #[arg(long)]
    p: f64,
    /// Strength felt by |0> (decimal in [0, 1])
    #[arg(long)]
    q: f64,
    /// Polar angle of the initial state (radians)
    #[arg(long)]
    theta: f64,
    /// Azimuthal angle of the initial state (radians)
    #[arg(long)]
    phi: f64,
    /// Measure-undo rounds per chain
    #[arg(long)]
    hexagons: usize,
    /// Number of independent chains
    #[arg(long)]
    trials: u64,
    /// Master seed; each trial draws from its own substream
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn run_chain(a: ChainArgs) -> Result<(), CliError> {
    a.output.require_json()?;
    let pm = PartialMeasurement::new(a.p, a.q)?;
    let psi = PureState::from_angles(BlochAngles::new(a.theta, a.phi)?);
    let cfg = ChainConfig::new(a.hexagons, a.trials, a.seed)?;
    let stats = simulate_ensemble(&pm, &psi, &cfg)?;
    let manifest = RunManifest::new(
        "chain",
        json!({
            "p": a.p, "q": a.q, "theta": a.theta, "phi": a.phi,
            "hexagons": a.hexagons, "trials": a.trials, "seed": a.seed,
        }),
        Some(a.seed),
    );
    output::write_json(&a.output.out, &manifest, &stats)
}

#[derive(Args)]
struct EnumerateArgs {
    /// Strength felt by |1> (decimal in [0, 1])
    #[arg(long)]
    p: f64,
    /// Strength felt by |0> (decimal in [0, 1])
    #[arg(long)]
    q: f64,
    /// Polar angle of the initial state (radians)
    #[arg(long)]
    theta: f64,
    /// Azimuthal angle of the initial state (radians)
    #[arg(long)]
    phi: f64,
    /// Chain depth to enumerate exhaustively
    #[arg(long)]
    depth: usize,
    /// Accepted for interface uniformity; enumeration is deterministic
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// `m+.mbar-` style label: outcome per round, `+` when its undo check
/// repeated the outcome and `-` when it failed (aborting the chain).
fn path_label(steps: &[PathStep]) -> String {
    steps
        .iter()
        .map(|s| format!("{}{}", s.outcome, if s.reversed { '+' } else { '-' }))
        .collect::<Vec<_>>()
        .join(".")
}

fn run_enumerate(a: EnumerateArgs) -> Result<(), CliError> {
    let pm = PartialMeasurement::new(a.p, a.q)?;
    let psi = PureState::from_angles(BlochAngles::new(a.theta, a.phi)?);
    let dist = enumerate_exact(&pm, &psi, a.depth)?;
    let manifest = RunManifest::new(
        "enumerate",
        json!({
            "p": a.p, "q": a.q, "theta": a.theta, "phi": a.phi, "depth": a.depth,
            "seed": a.seed,
        }),
        a.seed,
    );

    match a.output.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct PathRow {
                path: String,
                completed: bool,
                probability: f64,
            }
            #[derive(Serialize)]
            struct EnumerateResults {
                depth: usize,
                total_probability: f64,
                completion_probability: f64,
                paths: Vec<PathRow>,
            }
            let paths = dist
                .iter()
                .map(|(steps, probability)| PathRow {
                    path: path_label(steps),
                    completed: steps.len() == dist.depth()
                        && steps.iter().all(|s| s.reversed),
                    probability,
                })
                .collect();
            let results = EnumerateResults {
                depth: dist.depth(),
                total_probability: dist.total_probability(),
                completion_probability: dist.completion_probability(),
                paths,
            };
            output::write_json(&a.output.out, &manifest, &results)
        }
        Format::Csv => {
            let rows: Vec<(String, f64)> = dist
                .iter()
                .map(|(steps, probability)| (path_label(steps), probability))
                .collect();
            output::write_rows_csv(&a.output.out, &manifest, "path,probability", &rows)
        }
    }
}

#[derive(Args)]
struct LikelihoodArgs {
    /// Strength felt by |1> (decimal in [0, 1])
    #[arg(long)]
    p: f64,
    /// Strength felt by |0> (decimal in [0, 1])
    #[arg(long)]
    q: f64,
    /// Postselected tally of null outcomes
    #[arg(long)]
    nm: u64,
    /// Postselected tally of complementary outcomes
    #[arg(long)]
    nmbar: u64,
    /// Grid resolution per angle axis
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// Keep the undo-check factors in the likelihood
    #[arg(long, value_enum, default_value = "on")]
    reversal_factors: Switch,
    /// Accepted for interface uniformity; the surface is deterministic
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn run_likelihood(a: LikelihoodArgs) -> Result<(), CliError> {
    let pm = PartialMeasurement::new(a.p, a.q)?;
    let counts = CountRecord::new(a.nm, a.nmbar);
    let grid = SurfaceGrid::uniform(a.grid, a.grid)?;
    let surface = log_likelihood_surface(&pm, &counts, &grid, a.reversal_factors.likelihood_spec());
    let manifest = RunManifest::new(
        "likelihood",
        json!({
            "p": a.p, "q": a.q, "nm": a.nm, "nmbar": a.nmbar, "grid": a.grid,
            "reversal_factors": a.reversal_factors.as_str(), "seed": a.seed,
        }),
        a.seed,
    );
    match a.output.format() {
        Format::Json => output::write_json(&a.output.out, &manifest, &surface),
        Format::Csv => output::write_grid_csv(
            &a.output.out,
            &manifest,
            &[("flatness", format!("{}", surface.flatness))],
            "theta",
            &surface.theta_grid,
            &surface.phi_grid,
            &surface.log_values,
        ),
    }
}

#[derive(Args)]
struct FisherArgs {
    /// Strength felt by |1> (decimal in [0, 1])
    #[arg(long)]
    p: f64,
    /// Strength felt by |0> (decimal in [0, 1])
    #[arg(long)]
    q: f64,
    /// Postselected tally of null outcomes
    #[arg(long)]
    nm: u64,
    /// Postselected tally of complementary outcomes
    #[arg(long)]
    nmbar: u64,
    /// Polar angle of the evaluation point (radians)
    #[arg(long)]
    theta: f64,
    /// Azimuthal angle of the evaluation point (radians)
    #[arg(long)]
    phi: f64,
    /// Central-difference step (radians)
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    step: f64,
    /// Keep the undo-check factors in the likelihood
    #[arg(long, value_enum, default_value = "on")]
    reversal_factors: Switch,
    /// Accepted for interface uniformity; the matrix is deterministic
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn run_fisher(a: FisherArgs) -> Result<(), CliError> {
    a.output.require_json()?;
    if !(a.step > 0.0 && a.step.is_finite()) {
        return Err(CliError::usage("--step must be a positive finite number"));
    }
    let pm = PartialMeasurement::new(a.p, a.q)?;
    let counts = CountRecord::new(a.nm, a.nmbar);
    let angles = BlochAngles::new(a.theta, a.phi)?;
    let report = fisher_information(
        &pm,
        &counts,
        angles,
        a.reversal_factors.likelihood_spec(),
        a.step,
    )?;
    let manifest = RunManifest::new(
        "fisher",
        json!({
            "p": a.p, "q": a.q, "nm": a.nm, "nmbar": a.nmbar,
            "theta": a.theta, "phi": a.phi, "step": a.step,
            "reversal_factors": a.reversal_factors.as_str(), "seed": a.seed,
        }),
        a.seed,
    );
    output::write_json(&a.output.out, &manifest, &report)
}

#[derive(Args)]
struct EntropyArgs {
    /// Strength felt by |1> (decimal in [0, 1])
    #[arg(long)]
    p: f64,
    /// Strength felt by |0> (decimal in [0, 1])
    #[arg(long)]
    q: f64,
    /// Polar angle of the state (radians); needed for the per-state report
    #[arg(long)]
    theta: Option<f64>,
    /// Azimuthal angle of the state (radians); needed for the per-state report
    #[arg(long)]
    phi: Option<f64>,
    /// Postselected tally of null outcomes; needed for the per-state report
    #[arg(long)]
    nm: Option<u64>,
    /// Postselected tally of complementary outcomes; ditto
    #[arg(long)]
    nmbar: Option<u64>,
    /// Also scan the per-round record entropy over an N x N strength grid
    #[arg(long)]
    scan: Option<usize>,
    /// Accepted for interface uniformity; entropies are deterministic
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn run_entropy(a: EntropyArgs) -> Result<(), CliError> {
    let pm = PartialMeasurement::new(a.p, a.q)?;

    let state_args = [
        a.theta.is_some(),
        a.phi.is_some(),
        a.nm.is_some(),
        a.nmbar.is_some(),
    ];
    let state_report = if state_args.iter().all(|&given| given) {
        let psi = PureState::from_angles(BlochAngles::new(a.theta.unwrap(), a.phi.unwrap())?);
        let counts = CountRecord::new(a.nm.unwrap(), a.nmbar.unwrap());
        Some(entropy_report(&pm, &psi, &counts)?)
    } else if state_args.iter().any(|&given| given) {
        return Err(CliError::usage(
            "the per-state report needs all of --theta, --phi, --nm, --nmbar",
        ));
    } else {
        None
    };

    let scan = match a.scan {
        Some(n) => {
            if n < 2 {
                return Err(CliError::usage("--scan needs at least 2 grid points"));
            }
            let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            Some(asymptotic_entropy_scan(&axis, &axis)?)
        }
        None => None,
    };

    if state_report.is_none() && scan.is_none() {
        return Err(CliError::usage(
            "nothing to compute: pass --theta/--phi/--nm/--nmbar, or --scan N, or both",
        ));
    }

    let manifest = RunManifest::new(
        "entropy",
        json!({
            "p": a.p, "q": a.q, "theta": a.theta, "phi": a.phi,
            "nm": a.nm, "nmbar": a.nmbar, "scan": a.scan, "seed": a.seed,
        }),
        a.seed,
    );

    match a.output.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct EntropyResults {
                per_hexagon: f64,
                state: Option<qrev_core::EntropyReport>,
                scan: Option<qrev_core::inference::EntropyScan>,
            }
            let results = EntropyResults {
                per_hexagon: per_hexagon_entropy(pm.p(), pm.q()),
                state: state_report,
                scan,
            };
            output::write_json(&a.output.out, &manifest, &results)
        }
        Format::Csv => {
            let scan = scan.ok_or_else(|| {
                CliError::usage("csv output is only available with --scan")
            })?;
            output::write_grid_csv(
                &a.output.out,
                &manifest,
                &[
                    ("max_value", format!("{}", scan.max_value)),
                    ("argmax_p", format!("{}", scan.argmax.0)),
                    ("argmax_q", format!("{}", scan.argmax.1)),
                ],
                "p",
                &scan.p_grid,
                &scan.q_grid,
                &scan.values,
            )
        }
    }
}

#[derive(Args)]
struct EprArgs {
    /// Strength felt by |1> (decimal in (0, 1))
    #[arg(long)]
    p: f64,
    /// Strength felt by |0> (decimal in (0, 1))
    #[arg(long)]
    q: f64,
    /// Number of measure-then-undo runs on fresh Bell pairs
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Master seed; each trial draws from its own substream
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn run_epr(a: EprArgs) -> Result<(), CliError> {
    a.output.require_json()?;
    if a.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let pm = PartialMeasurement::new(a.p, a.q)?;
    let mut successes = 0u64;
    let mut worst_restoration_error = 0.0f64;
    let mut exact_success_probability = 0.0;
    for i in 0..a.trials {
        let mut rng = substream(a.seed, i);
        let report = epr_amplification(&pm, &mut rng)?;
        exact_success_probability = report.success_probability;
        if report.reversal_success {
            successes += 1;
            if let Some(c_after) = report.c_after {
                worst_restoration_error = worst_restoration_error.max((c_after - 1.0).abs());
            }
        }
    }

    #[derive(Serialize)]
    struct EprResults {
        trials: u64,
        successes: u64,
        empirical_rate: f64,
        exact_success_probability: f64,
        /// Concurrence left by a null outcome, from the closed form.
        c_before_m: f64,
        /// Concurrence left by a complementary outcome, from the closed form.
        c_before_mbar: f64,
        /// Largest |concurrence - 1| over all successfully restored pairs.
        worst_restoration_error: f64,
    }
    let (p, q) = (pm.p(), pm.q());
    let results = EprResults {
        trials: a.trials,
        successes,
        empirical_rate: successes as f64 / a.trials as f64,
        exact_success_probability,
        c_before_m: 2.0 * ((1.0 - p) * (1.0 - q)).sqrt() / (2.0 - p - q),
        c_before_mbar: 2.0 * (p * q).sqrt() / (p + q),
        worst_restoration_error,
    };
    let manifest = RunManifest::new(
        "epr",
        json!({"p": a.p, "q": a.q, "trials": a.trials, "seed": a.seed}),
        Some(a.seed),
    );
    output::write_json(&a.output.out, &manifest, &results)
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    /// Alice filters both of her qubits and postselects on null outcomes
    TwoBit,
    /// Alice projectively reads her second qubit
    OneBit,
}

#[derive(Args)]
struct TeleportArgs {
    /// Polar angle of the input state (radians)
    #[arg(long)]
    theta: f64,
    /// Azimuthal angle of the input state (radians)
    #[arg(long)]
    phi: f64,
    /// Which readout Alice performs on the circuit state
    #[arg(long, value_enum, default_value = "two-bit")]
    variant: VariantArg,
    /// Filter strength for the two-bit variant (decimal in [0, 1))
    #[arg(long, default_value_t = 0.99)]
    strength: f64,
    /// Master seed for the sampled run
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn run_teleport(a: TeleportArgs) -> Result<(), CliError> {
    a.output.require_json()?;
    let psi = PureState::from_angles(BlochAngles::new(a.theta, a.phi)?);
    let (variant, variant_name) = match a.variant {
        VariantArg::TwoBit => (ReadoutVariant::TwoBit { strength: a.strength }, "two-bit"),
        VariantArg::OneBit => (ReadoutVariant::OneBit, "one-bit"),
    };
    let mut rng = substream(a.seed, 0);
    let report = remote_readout_scenario(&psi, variant, &mut rng)?;
    let manifest = RunManifest::new(
        "teleport",
        json!({
            "theta": a.theta, "phi": a.phi, "variant": variant_name,
            "strength": a.strength, "seed": a.seed,
        }),
        Some(a.seed),
    );
    output::write_json(&a.output.out, &manifest, &report)
}

#[derive(Args)]
struct NosignalArgs {
    /// Partial measurement as "p,q"; repeat for several choices.  Projective
    /// readouts in both bases are always checked as well.
    #[arg(long = "pm", value_name = "P,Q")]
    pm: Vec<String>,
    /// Accepted for interface uniformity; the check is deterministic
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_strength_pair(s: &str) -> Result<PartialMeasurement, CliError> {
    let (p_str, q_str) = s
        .split_once(',')
        .ok_or_else(|| CliError::usage(format!("expected \"p,q\", got \"{s}\"")))?;
    let parse = |part: &str, name: &str| {
        part.trim()
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("cannot parse {name} in \"{s}\"")))
    };
    Ok(PartialMeasurement::new(
        parse(p_str, "p")?,
        parse(q_str, "q")?,
    )?)
}

fn run_nosignal(a: NosignalArgs) -> Result<(), CliError> {
    a.output.require_json()?;
    let partials: Vec<PartialMeasurement> = a
        .pm
        .iter()
        .map(|s| parse_strength_pair(s))
        .collect::<Result<_, _>>()?;
    let report = no_signaling_check(&partials, &[MeasBasis::Z, MeasBasis::X]);
    let manifest = RunManifest::new(
        "nosignal",
        json!({"pm": a.pm, "seed": a.seed}),
        a.seed,
    );
    output::write_json(&a.output.out, &manifest, &report)
}

#[derive(Args)]
struct B92Args {
    /// Number of protocol rounds
    #[arg(long)]
    rounds: u64,
    /// Eavesdropper: none, measure-reverse:p,q,rounds, or intercept-resend:z|x
    #[arg(long, default_value = "none")]
    eve: String,
    /// Master seed; each round draws from its own substream
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_eve(s: &str) -> Result<EveStrategy, CliError> {
    if s == "none" {
        return Ok(EveStrategy::None);
    }
    if let Some(rest) = s.strip_prefix("measure-reverse:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(CliError::usage(format!(
                "measure-reverse takes \"p,q,rounds\", got \"{rest}\""
            )));
        }
        let parse_f = |part: &str, name: &str| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("cannot parse {name} in \"{s}\"")))
        };
        let rounds = parts[2]
            .trim()
            .parse::<u32>()
            .map_err(|_| CliError::usage(format!("cannot parse rounds in \"{s}\"")))?;
        return Ok(EveStrategy::MeasureReverse {
            p: parse_f(parts[0], "p")?,
            q: parse_f(parts[1], "q")?,
            rounds,
        });
    }
    if let Some(rest) = s.strip_prefix("intercept-resend:") {
        return match rest {
            "z" => Ok(EveStrategy::InterceptResend { basis: EveBasis::Z }),
            "x" => Ok(EveStrategy::InterceptResend { basis: EveBasis::X }),
            _ => Err(CliError::usage(format!(
                "intercept-resend basis must be z or x, got \"{rest}\""
            ))),
        };
    }
    Err(CliError::usage(format!(
        "unknown eavesdropper \"{s}\"; use none, measure-reverse:p,q,rounds, or intercept-resend:z|x"
    )))
}

fn run_b92_command(a: B92Args) -> Result<(), CliError> {
    a.output.require_json()?;
    let eve = parse_eve(&a.eve)?;
    let cfg = B92Config::new(a.rounds, a.seed, eve.clone())?;
    let (_transcript, stats) = run_b92(&cfg)?;
    let intercept_profile = match eve {
        EveStrategy::InterceptResend { basis } => Some(intercept_resend_profile(basis)),
        _ => None,
    };

    #[derive(Serialize)]
    struct B92Results {
        stats: B92Stats,
        /// Exactly enumerated rates for an intercept-resend eavesdropper.
        intercept_profile: Option<InterceptResendProfile>,
    }
    let results = B92Results {
        stats,
        intercept_profile,
    };
    let manifest = RunManifest::new(
        "b92",
        json!({"rounds": a.rounds, "eve": a.eve, "seed": a.seed}),
        Some(a.seed),
    );
    output::write_json(&a.output.out, &manifest, &results)
}
