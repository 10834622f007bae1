use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nhqubit_cli::{changed_files, parse_config_file, read_manifest, replay, run, CliError, Experiment, RunConfig};

/// Simulations of a post-selected non-Hermitian qubit under homodyne detection.
#[derive(Parser)]
#[command(name = "nhqubit", version)]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Liouvillian eigenvalues over a drive scan and the exceptional point.
    Spectrum(Flags),
    /// Jump-aware trajectory ensemble against the three-level Lindblad solution.
    Ensemble(Flags),
    /// Normalized Liouvillian against survivor-conditioned trajectories.
    Compare(Flags),
    /// Bloch-equation trajectory ensembles.
    Sde(Flags),
    /// Most-likely path between two Bloch vectors.
    OptimalPath(Flags),
    /// Reduced one-dimensional phase portrait and fixed points.
    PhasePortrait(Flags),
    /// Completeness residuals of the measurement operators.
    PovmCheck(Flags),
    /// Re-runs the configuration stored in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct Flags {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "gamma-e")]
    gamma_e: Option<String>,
    #[arg(long = "gamma-g")]
    gamma_g: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    /// Local-oscillator phase (rad).
    #[arg(long)]
    theta: Option<String>,
    /// x, y or both.
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    /// Final time (µs).
    #[arg(long = "T")]
    t_end: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// none, no-jump or final.
    #[arg(long)]
    postselect: Option<String>,
    #[arg(long)]
    qi: Option<String>,
    /// Target Bloch vector `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    qf: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// jump, kraus, stratonovich or ito.
    #[arg(long)]
    scheme: Option<String>,
    /// Bloch norm guard, or `none`.
    #[arg(long = "norm-tol")]
    norm_tol: Option<String>,
    #[arg(long = "omega-min")]
    omega_min: Option<String>,
    #[arg(long = "omega-max")]
    omega_max: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    starts: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    energies: Option<String>,
    #[arg(long = "theta-points")]
    theta_points: Option<String>,
    #[arg(long = "save-trajectories")]
    save_trajectories: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: bool,
}

impl Flags {
    fn overrides(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("gamma-e", &self.gamma_e),
            ("gamma-g", &self.gamma_g),
            ("omega", &self.omega),
            ("theta", &self.theta),
            ("axis", &self.axis),
            ("dt", &self.dt),
            ("T", &self.t_end),
            ("n", &self.n),
            ("seed", &self.seed),
            ("postselect", &self.postselect),
            ("qi", &self.qi),
            ("qf", &self.qf),
            ("lambda", &self.lambda),
            ("scheme", &self.scheme),
            ("norm-tol", &self.norm_tol),
            ("omega-min", &self.omega_min),
            ("omega-max", &self.omega_max),
            ("points", &self.points),
            ("starts", &self.starts),
            ("energies", &self.energies),
            ("theta-points", &self.theta_points),
            ("save-trajectories", &self.save_trajectories),
        ];
        let mut m: BTreeMap<String, String> =
            pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect();
        if let Some(out) = &self.out {
            m.insert("out".into(), out.display().to_string());
        }
        if self.plot {
            m.insert("plot".into(), "true".into());
        }
        m
    }

    fn build(&self, experiment: Experiment) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::defaults(experiment);
        if let Some(path) = &self.config {
            cfg.apply(&parse_config_file(path)?)?;
        }
        cfg.apply(&self.overrides())?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("threads", e.to_string()))?;
    }
    let (experiment, flags) = match cli.command {
        Command::Replay { manifest, out } => {
            let original = read_manifest(&manifest)?;
            let m = replay(&original, out.as_deref())?;
            let changed = changed_files(&original, &m);
            if !changed.is_empty() {
                return Err(CliError::Io(format!("replay differs in: {}", changed.join(", "))));
            }
            println!("replayed {} into {}: {} files identical", m.experiment, m.config.out.display(), m.files.len());
            return Ok(());
        }
        Command::Spectrum(f) => (Experiment::Spectrum, f),
        Command::Ensemble(f) => (Experiment::Ensemble, f),
        Command::Compare(f) => (Experiment::Compare, f),
        Command::Sde(f) => (Experiment::Sde, f),
        Command::OptimalPath(f) => (Experiment::OptimalPath, f),
        Command::PhasePortrait(f) => (Experiment::PhasePortrait, f),
        Command::PovmCheck(f) => (Experiment::PovmCheck, f),
    };
    let cfg = flags.build(experiment)?;
    let m = run(&cfg)?;
    println!("{}: wrote {} files to {}", m.experiment, m.files.len(), cfg.out.display());
    if !m.summary.as_object().is_some_and(|o| o.is_empty()) {
        println!("{}", serde_json::to_string(&m.summary).unwrap_or_default());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
