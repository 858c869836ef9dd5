//! `rydress`: command-line front end for the dressed-Rydberg gate toolkit.
//!
//! Every subcommand echoes its resolved configuration into the output so a
//! run can be reproduced from its artifacts alone. JSON documents go to
//! stdout; tabular scans emit CSV (prefixed with a `# config:` comment)
//! either to stdout or to `--out`. Domain failures exit 1 with a
//! machine-readable JSON error on stderr; usage errors exit 2.

mod circuit;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rydress_core::dataset::LevelDataset;
use rydress_core::dressing::{design_triple, design_triple_on, DressingDesign};
use rydress_core::errormodel::{gate_error, AveragingConvention, ErrorParams, Lattice};
use rydress_core::ghzplan::{plan_errors, Combination};
use rydress_core::interactions::{
    different_drives_max, dressed_from_raw, vcc, vct, vct_exchange, vct_max, vtt, Geometry,
};
use rydress_core::vdw::scan::{evaluate_point, find_zeros, scan_c6, ScanConfig, ZeroConfig};

#[derive(Parser)]
#[command(
    name = "rydress",
    version,
    about = "Design and verification toolkit for microwave-dressed Rydberg multi-qubit gates",
    long_about = None,
    propagate_version = true
)]
struct Cli {
    /// Seed recorded for randomized helper runs (reproducibility echo).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a level dataset and report validation results.
    ValidateDataset(ValidateArgs),
    /// Solve the dressing design and print the dressed triple.
    Dress(DressArgs),
    /// Evaluate the dressed dipole-dipole matrix elements and bounds.
    Interact(InteractArgs),
    /// Scan C6 coefficients over the (alpha, Omega0) plane (CSV).
    Scan(ScanArgs),
    /// Locate simultaneous zeros of both C6 coefficients.
    Zeros(ScanArgs),
    /// Error budget of a multi-qubit gate on a lattice.
    GateError(GateErrorArgs),
    /// GHZ growth schedule with per-step and cumulative errors.
    Ghz(GhzArgs),
    /// Decompose a single-qubit unitary into A Z B Z C factors.
    Decompose(DecomposeArgs),
    /// Run a sparse circuit specification.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Level dataset (JSON).
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args)]
struct DressArgs {
    /// Level dataset; supplies the moment ratio, drive frequencies, and
    /// lifetimes.
    #[arg(long, conflicts_with = "m_ratio")]
    dataset: Option<PathBuf>,
    /// Moment ratio M = mu0 / mu+ (when no dataset is given).
    #[arg(long)]
    m_ratio: Option<f64>,
    /// Design coefficient fraction: c0 = alpha * c0_max.
    #[arg(long)]
    alpha: f64,
    /// Drive scale in ordinary MHz (largest drive parameter).
    #[arg(long, default_value_t = 50.0)]
    scale_mhz: f64,
}

#[derive(Args)]
struct InteractArgs {
    /// Dipole moment of the s <-> p0 transition.
    #[arg(long)]
    mu0: f64,
    /// Dipole moment of the s <-> p+ transition.
    #[arg(long)]
    muplus: f64,
    /// Design coefficient fraction: c0 = alpha * c0_max.
    #[arg(long)]
    alpha: f64,
    /// Atom separation in um.
    #[arg(long)]
    r_um: f64,
    /// Angle to the quantization axis in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    theta_rad: f64,
}

#[derive(Args)]
struct ScanArgs {
    /// Level dataset (JSON).
    #[arg(long)]
    dataset: PathBuf,
    /// Alpha grid as start:stop:count (inclusive endpoints).
    #[arg(long)]
    alpha: String,
    /// Omega0 grid in ordinary MHz as start:stop:count.
    #[arg(long, allow_hyphen_values = true)]
    omega0: String,
    /// Pair angle in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    theta_rad: f64,
    /// Resonance flag threshold in MHz.
    #[arg(long, default_value_t = 1.0)]
    resonance_threshold_mhz: f64,
    /// Zero tolerance in GHz um^6 (zeros subcommand).
    #[arg(long, default_value_t = 1e-9)]
    zero_tol: f64,
    /// Exclusion radius around flagged resonances, in grid cells.
    #[arg(long, default_value_t = 2)]
    exclusion_cells: usize,
    /// Write the CSV here instead of stdout (scan subcommand).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    WorstCaseBlockade,
    ConfigurationAverage,
}

impl From<ConventionArg> for AveragingConvention {
    fn from(v: ConventionArg) -> Self {
        match v {
            ConventionArg::WorstCaseBlockade => AveragingConvention::WorstCaseBlockade,
            ConventionArg::ConfigurationAverage => AveragingConvention::ConfigurationAverage,
        }
    }
}

#[derive(Args)]
struct GateErrorArgs {
    /// Lattice specification (JSON: positions, roles, spacing).
    #[arg(long)]
    lattice: PathBuf,
    /// Nearest-neighbor control-target interaction in ordinary MHz.
    #[arg(long)]
    vnn_mhz: f64,
    /// Rydberg lifetime in ms (both species).
    #[arg(long, conflicts_with_all = ["tau_c_ms", "tau_t_ms"])]
    tau_ms: Option<f64>,
    /// Control-species lifetime in ms (with --tau-t-ms).
    #[arg(long, requires = "tau_t_ms")]
    tau_c_ms: Option<f64>,
    /// Target-species lifetime in ms (with --tau-c-ms).
    #[arg(long, requires = "tau_c_ms")]
    tau_t_ms: Option<f64>,
    /// Residual van der Waals blockade shift in ordinary MHz.
    #[arg(long, default_value_t = 0.0)]
    vdw_mhz: f64,
    /// Averaging convention for the control excitation patterns.
    #[arg(long, value_enum, default_value_t = ConventionArg::WorstCaseBlockade)]
    convention: ConventionArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CombinationArg {
    Sum,
    Product,
}

#[derive(Args)]
struct GhzArgs {
    /// Number of growth steps.
    #[arg(long)]
    steps: usize,
    /// Nearest-neighbor control-target interaction in ordinary MHz.
    #[arg(long)]
    vnn_mhz: f64,
    /// Rydberg lifetime in ms.
    #[arg(long)]
    tau_ms: f64,
    /// Cumulative combination rule.
    #[arg(long, value_enum, default_value_t = CombinationArg::Sum)]
    combination: CombinationArg,
    /// Write the full plan JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-step CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// 2x2 unitary as JSON; entries are numbers, [re, im] pairs, or
    /// {"re": .., "im": ..} objects.
    #[arg(long)]
    unitary: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// Circuit specification (JSON).
    #[arg(long)]
    circuit: PathBuf,
    /// Include the full amplitude list in the output.
    #[arg(long, default_value_t = false)]
    amplitudes: bool,
}

/// Domain error carrying the machine-readable kind.
pub(crate) struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    pub(crate) fn new(kind: &'static str, err: impl fmt::Display) -> Self {
        CliError {
            kind,
            message: err.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::ValidateDataset(args) => run_validate(&cli, args),
        Command::Dress(args) => run_dress(&cli, args),
        Command::Interact(args) => run_interact(&cli, args),
        Command::Scan(args) => run_scan(&cli, args),
        Command::Zeros(args) => run_zeros(&cli, args),
        Command::GateError(args) => run_gate_error(&cli, args),
        Command::Ghz(args) => run_ghz(&cli, args),
        Command::Decompose(args) => run_decompose(&cli, args),
        Command::Simulate(args) => run_simulate(&cli, args),
    };
    if let Err(e) = outcome {
        let doc = json!({ "error": e.kind, "message": e.message });
        eprintln!("{}", serde_json::to_string(&doc).expect("error json"));
        std::process::exit(1);
    }
}

fn print_doc(doc: &Value) {
    println!("{}", serde_json::to_string_pretty(doc).expect("json"));
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn load_dataset(path: &PathBuf) -> Result<LevelDataset<f64>, CliError> {
    LevelDataset::load(path).map_err(|e| CliError::new("dataset", e))
}

/// Parse `start:stop:count` into an inclusive grid.
fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::new("grid", format!("expected start:stop:count, got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

fn run_validate(cli: &Cli, args: &ValidateArgs) -> CliResult {
    let ds = load_dataset(&args.dataset)?;
    print_doc(&json!({
        "config": {
            "subcommand": "validate-dataset",
            "dataset": args.dataset.display().to_string(),
            "seed": cli.seed,
        },
        "valid": true,
        "states": ds.len(),
        "dipoles": ds.dipoles().len(),
        "roles": to_value(ds.roles()),
    }));
    Ok(())
}

fn run_dress(cli: &Cli, args: &DressArgs) -> CliResult {
    let config = json!({
        "subcommand": "dress",
        "dataset": args.dataset.as_ref().map(|p| p.display().to_string()),
        "m_ratio": args.m_ratio,
        "alpha": args.alpha,
        "scale_mhz": args.scale_mhz,
        "seed": cli.seed,
    });
    let triple = match (&args.dataset, args.m_ratio) {
        (Some(path), _) => {
            let ds = load_dataset(path)?;
            design_triple_on(&ds, args.alpha, args.scale_mhz)
                .map_err(|e| CliError::new("dressing", e))?
        }
        (None, Some(m)) => design_triple(&DressingDesign {
            m_ratio: m,
            alpha: args.alpha,
            scale: args.scale_mhz,
        })
        .map_err(|e| CliError::new("dressing", e))?,
        (None, None) => {
            return Err(CliError::new(
                "usage",
                "either --dataset or --m-ratio is required",
            ))
        }
    };
    print_doc(&json!({
        "config": config,
        "triple": to_value(&triple),
        "degenerate_shifts": triple.degenerate_shifts(),
    }));
    Ok(())
}

fn run_interact(cli: &Cli, args: &InteractArgs) -> CliResult {
    let config = json!({
        "subcommand": "interact",
        "mu0": args.mu0,
        "muplus": args.muplus,
        "alpha": args.alpha,
        "r_um": args.r_um,
        "theta_rad": args.theta_rad,
        "seed": cli.seed,
    });
    let g = Geometry::new(args.r_um, args.theta_rad).map_err(|e| CliError::new("geometry", e))?;
    let m = (args.mu0 / args.muplus).abs();
    let c0max = rydress_core::dressing::c0_max(m).map_err(|e| CliError::new("dressing", e))?;
    let (c_raw, t_raw) = rydress_core::dressing::design_states(m, args.alpha * c0max)
        .map_err(|e| CliError::new("dressing", e))?;
    let c = dressed_from_raw(c_raw);
    let t = dressed_from_raw(t_raw);
    let (mu0, muplus) = (args.mu0, args.muplus);
    let bound = vct_max(mu0, muplus, g);
    let dd = different_drives_max(mu0, muplus, g);
    print_doc(&json!({
        "config": config,
        "v_cc_mhz": vcc(&c, mu0, muplus, g),
        "v_tt_mhz": vtt(&t, mu0, muplus, g),
        "v_ct_mhz": vct(&c, &t, mu0, muplus, g),
        "v_ct_exchange_mhz": vct_exchange(&c, &t, mu0, muplus, g),
        "vct_max_mhz": to_value(&bound),
        "different_drives_max_mhz": to_value(&dd),
    }));
    Ok(())
}

fn scan_config(args: &ScanArgs) -> Result<(ScanConfig<f64>, Value), CliError> {
    let alphas = parse_grid(&args.alpha)?;
    let omega0s = parse_grid(&args.omega0)?;
    let config = json!({
        "dataset": args.dataset.display().to_string(),
        "alpha": args.alpha,
        "omega0": args.omega0,
        "theta_rad": args.theta_rad,
        "resonance_threshold_mhz": args.resonance_threshold_mhz,
    });
    Ok((
        ScanConfig {
            alphas,
            omega0s,
            theta: args.theta_rad,
            resonance_threshold: args.resonance_threshold_mhz,
        },
        config,
    ))
}

fn run_scan(cli: &Cli, args: &ScanArgs) -> CliResult {
    let ds = load_dataset(&args.dataset)?;
    let (cfg, mut config) = scan_config(args)?;
    config["subcommand"] = json!("scan");
    config["seed"] = json!(cli.seed);
    let scan = scan_c6(&ds, &cfg);
    let csv = format!(
        "# config: {}\n{}",
        serde_json::to_string(&config).expect("json"),
        scan.to_csv()
    );
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| CliError::new("io", e))?;
            print_doc(&json!({
                "config": config,
                "rows": scan.points.len(),
                "flagged": scan.points.iter().filter(|p| p.flagged).count(),
                "out": path.display().to_string(),
            }));
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_zeros(cli: &Cli, args: &ScanArgs) -> CliResult {
    let ds = load_dataset(&args.dataset)?;
    let (cfg, mut config) = scan_config(args)?;
    config["subcommand"] = json!("zeros");
    config["seed"] = json!(cli.seed);
    config["zero_tol"] = json!(args.zero_tol);
    config["exclusion_cells"] = json!(args.exclusion_cells);
    let scan = scan_c6(&ds, &cfg);
    let zeros = find_zeros(
        &scan,
        |a, w| evaluate_point(&ds, cfg.theta, cfg.resonance_threshold, a, w),
        &ZeroConfig {
            zero_tolerance: args.zero_tol,
            exclusion_radius_cells: args.exclusion_cells,
            max_iter: 60,
        },
    );
    print_doc(&json!({ "config": config, "zeros": to_value(&zeros) }));
    Ok(())
}

fn run_gate_error(cli: &Cli, args: &GateErrorArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.lattice).map_err(|e| CliError::new("io", e))?;
    let lattice: Lattice<f64> =
        serde_json::from_str(&text).map_err(|e| CliError::new("lattice", e))?;
    let lattice = Lattice::new(lattice.positions, lattice.roles, lattice.spacing)
        .map_err(|e| CliError::new("lattice", e))?;
    let mut params = match (args.tau_ms, args.tau_c_ms, args.tau_t_ms) {
        (Some(tau), None, None) => ErrorParams::new(args.vnn_mhz, tau),
        (None, Some(tc), Some(tt)) => ErrorParams::with_split_tau(args.vnn_mhz, tc, tt),
        _ => {
            return Err(CliError::new(
                "usage",
                "provide --tau-ms, or both --tau-c-ms and --tau-t-ms",
            ))
        }
    };
    params.v_vdw_total = args.vdw_mhz;
    let budget = gate_error(&lattice, &params, args.convention.into())
        .map_err(|e| CliError::new("errormodel", e))?;
    print_doc(&json!({
        "config": {
            "subcommand": "gate-error",
            "lattice": args.lattice.display().to_string(),
            "vnn_mhz": args.vnn_mhz,
            "tau_c_ms": params.tau_c,
            "tau_t_ms": params.tau_t,
            "vdw_mhz": args.vdw_mhz,
            "convention": to_value(&AveragingConvention::from(args.convention)),
            "seed": cli.seed,
        },
        "budget": to_value(&budget),
    }));
    Ok(())
}

fn run_ghz(cli: &Cli, args: &GhzArgs) -> CliResult {
    let combination = match args.combination {
        CombinationArg::Sum => Combination::Sum,
        CombinationArg::Product => Combination::Product,
    };
    let config = json!({
        "subcommand": "ghz",
        "steps": args.steps,
        "vnn_mhz": args.vnn_mhz,
        "tau_ms": args.tau_ms,
        "combination": to_value(&combination),
        "seed": cli.seed,
    });
    let plan = plan_errors::<f64>(args.steps, args.vnn_mhz, args.tau_ms, combination)
        .map_err(|e| CliError::new("ghzplan", e))?;
    let mut csv = format!(
        "# config: {}\nstep,n_c,n_t,mean_ratio,omega_opt_MHz,eps,cumulative\n",
        serde_json::to_string(&config).expect("json")
    );
    for (i, step) in plan.steps.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            step.index,
            step.n_c,
            step.n_t,
            step.mean_ratio,
            plan.omega_opt[i],
            plan.per_step_eps[i],
            plan.cumulative_eps[i]
        ));
    }
    if let Some(path) = &args.out {
        let doc = json!({ "config": config, "plan": to_value(&plan) });
        std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))
            .map_err(|e| CliError::new("io", e))?;
    }
    match &args.csv {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| CliError::new("io", e))?;
            print_doc(&json!({ "config": config, "plan": to_value(&plan) }));
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_decompose(cli: &Cli, args: &DecomposeArgs) -> CliResult {
    let u = circuit::parse_unitary(&args.unitary)?;
    let d = rydress_core::circuits::su2_decompose(&u).map_err(|e| CliError::new("circuits", e))?;
    let (abc_residual, reconstruction_residual) = circuit::decomposition_residuals(&u, &d);
    print_doc(&json!({
        "config": {
            "subcommand": "decompose",
            "unitary": args.unitary,
            "seed": cli.seed,
        },
        "decomposition": to_value(&d),
        "abc_identity_residual": abc_residual,
        "reconstruction_residual": reconstruction_residual,
    }));
    Ok(())
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.circuit).map_err(|e| CliError::new("io", e))?;
    let spec: circuit::CircuitSpec =
        serde_json::from_str(&text).map_err(|e| CliError::new("circuit", e))?;
    let outcome = circuit::run(&spec)?;
    let mut doc = json!({
        "config": {
            "subcommand": "simulate",
            "circuit": args.circuit.display().to_string(),
            "seed": cli.seed,
        },
        "report": outcome.report,
    });
    if args.amplitudes {
        doc["amplitudes"] = outcome.amplitudes;
    }
    print_doc(&doc);
    Ok(())
}
