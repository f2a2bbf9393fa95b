use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gpe_control::error::Result;
use gpe_control::harness::{self, Outcome, RunConfig};

#[derive(Parser)]
#[command(name = "gpec", version, about = "Coherent modes and optimal control of the 1-D Gross-Pitaevskii equation")]
struct Cli {
    /// Worker threads for mode families and sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve coherent modes for every g0 and j <= j_max.
    Modes {
        config: PathBuf,
        /// Verify existing outputs are byte-identical instead of writing.
        #[arg(long)]
        check: bool,
    },
    /// Maximize the 0 -> target transition probability.
    Optimize {
        /// Run config, or with --sweep a directory made by sweep-gen.
        path: PathBuf,
        #[arg(long)]
        sweep: bool,
        #[command(flatten)]
        flow: FlowFlags,
        /// Continue from the final controls of an earlier run directory.
        #[arg(long)]
        restart_from: Option<PathBuf>,
        /// Double the spatial and temporal resolution of the restarted controls.
        #[arg(long, requires = "restart_from")]
        refine: bool,
        /// Also store the trajectory under the final controls.
        #[arg(long)]
        record: bool,
        #[arg(long)]
        check: bool,
    },
    /// Spectra, populations and overlap profile of a finished run.
    Analyze {
        run_dir: PathBuf,
        #[arg(long)]
        check: bool,
    },
    /// Forward propagation with norm, parity and center-of-mass diagnostics.
    Propagate {
        config: PathBuf,
        /// Initial wave field file (overrides initial_field/initial_mode).
        initial: Option<PathBuf>,
        #[arg(long)]
        record: bool,
        #[arg(long)]
        check: bool,
    },
    /// Emit one config per combination of the list-valued keys.
    SweepGen { config: PathBuf },
}

#[derive(Args)]
struct FlowFlags {
    #[arg(long)]
    tol_rel: Option<f64>,
    #[arg(long)]
    tol_abs: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    stop_p: Option<f64>,
    /// Fixed RK4 step in s instead of the adaptive pair.
    #[arg(long)]
    fixed_step_rk4: Option<f64>,
    /// Seeded noise on the trial controls (1e-8 when no value is given).
    #[arg(long, num_args = 0..=1, default_missing_value = "1e-8")]
    noise_amp: Option<f64>,
}

impl FlowFlags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut o = Vec::new();
        let mut put = |k, v: Option<String>| {
            if let Some(v) = v {
                o.push((k, v));
            }
        };
        put("rtol", self.tol_rel.map(|x| format!("{x:?}")));
        put("atol", self.tol_abs.map(|x| format!("{x:?}")));
        put("max_steps", self.max_steps.map(|x| x.to_string()));
        put("stop_p", self.stop_p.map(|x| format!("{x:?}")));
        put("fixed_step_rk4", self.fixed_step_rk4.map(|x| format!("{x:?}")));
        put("noise_amp", self.noise_amp.map(|x| format!("{x:?}")));
        o
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Modes { config, check } => harness::cmd_modes(&RunConfig::load(&config)?, check),
        Command::Optimize {
            path,
            sweep,
            flow,
            restart_from,
            refine,
            record,
            check,
        } => {
            let mut overrides = flow.overrides();
            if let Some(dir) = restart_from {
                overrides.push(("restart_from", std::path::absolute(dir)?.display().to_string()));
            }
            if refine {
                overrides.push(("refine", "true".into()));
            }
            if sweep {
                harness::cmd_optimize_sweep(&path, record, &overrides)
            } else {
                harness::cmd_optimize(&RunConfig::load_with(&path, &overrides)?, record, check)
            }
        }
        Command::Analyze { run_dir, check } => harness::cmd_analyze(&run_dir, check),
        Command::Propagate {
            config,
            initial,
            record,
            check,
        } => {
            let mut overrides = Vec::new();
            if let Some(p) = initial {
                overrides.push(("initial_field", std::path::absolute(p)?.display().to_string()));
                overrides.push(("initial_mode", String::new()));
            }
            harness::cmd_propagate(&RunConfig::load_with(&config, &overrides)?, record, check)
        }
        Command::SweepGen { config } => harness::cmd_sweep_gen(&RunConfig::load(&config)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("gpec: {e}");
            return ExitCode::from(harness::commands::EXIT_CONFIG);
        }
    }
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("gpec: {e}");
            ExitCode::from(harness::exit_code(&e))
        }
    }
}
