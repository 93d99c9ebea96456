use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eep_cli::{run, run_preset, run_sweep, CliError, JobOutput, Preset, RunConfig, SweepConfig};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "eep",
    version,
    about = "Charged-particle integration experiments in a strong magnetic field"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write CSV samples plus a JSON summary.
    Run {
        /// Flat `key = value` configuration file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Global errors at t_end against an RK4 reference for several stepsizes.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
        /// Comma-separated stepsizes.
        #[arg(long, allow_hyphen_values = true)]
        h_list: Option<String>,
        /// Comma-separated scalings; one table each.
        #[arg(long, allow_hyphen_values = true)]
        epsilon_list: Option<String>,
        /// Reference stepsize (default: min(min h / 16, 0.001 eps / |B|)).
        #[arg(long, allow_hyphen_values = true)]
        h_ref: Option<String>,
    },
    /// Run a built-in experiment; `--out` names the output directory.
    Preset {
        name: Preset,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// eep, boris or rk4.
    #[arg(long, allow_hyphen_values = true)]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<String>,
    /// axial-inverse[:s], quadratic[:k | :q11,q22,q33 | :9 entries], uniform:f1,f2,f3 or zero.
    #[arg(long, allow_hyphen_values = true)]
    potential: Option<String>,
    /// Magnetic field, `b1,b2,b3`.
    #[arg(long, allow_hyphen_values = true)]
    field: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    quad_points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    fp_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    fp_max_iter: Option<String>,
    /// Write every k-th step (default: at most 100000 rows; `1` for every step).
    #[arg(long, allow_hyphen_values = true)]
    sample_every: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
}

impl Flags {
    fn pairs(self) -> Vec<(String, String)> {
        [
            ("method", self.method),
            ("epsilon", self.epsilon),
            ("h", self.h),
            ("t_end", self.t_end),
            ("potential", self.potential),
            ("field", self.field),
            ("x0", self.x0),
            ("v0", self.v0),
            ("quad_points", self.quad_points),
            ("fp_tol", self.fp_tol),
            ("fp_max_iter", self.fp_max_iter),
            ("sample_every", self.sample_every),
            ("out", self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }
}

fn execute(command: Command) -> Result<Vec<serde_json::Value>, CliError> {
    match command {
        Command::Run { config, flags } => {
            let mut cfg = match config {
                Some(path) => RunConfig::from_file(&path)?,
                None => RunConfig::default(),
            };
            for (k, v) in flags.pairs() {
                cfg.set(&k, &v)?;
            }
            let summary = run(&cfg)?;
            Ok(vec![
                json!({ "csv": cfg.out, "summary": eep_cli::run::summary_path(&cfg.out), "steps": summary.steps }),
            ])
        }
        Command::Sweep {
            config,
            flags,
            h_list,
            epsilon_list,
            h_ref,
        } => {
            let mut cfg = match config {
                Some(path) => SweepConfig::from_file(&path)?,
                None => SweepConfig::new(RunConfig {
                    out: PathBuf::from("sweep.csv"),
                    ..RunConfig::default()
                }),
            };
            let extra = [("h_list", h_list), ("epsilon_list", epsilon_list), ("h_ref", h_ref)];
            let extra = extra.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v)));
            for (k, v) in flags.pairs().into_iter().chain(extra) {
                cfg.set(&k, &v)?;
            }
            let (_, paths) = run_sweep(&cfg)?;
            Ok(paths.into_iter().map(|p| json!({ "csv": p })).collect())
        }
        Command::Preset { name, flags } => {
            let mut pairs = flags.pairs();
            let out_dir = match pairs.iter().position(|(k, _)| k == "out") {
                Some(i) => PathBuf::from(pairs.remove(i).1),
                None => PathBuf::from("."),
            };
            let outputs = run_preset(name, &out_dir, &pairs)?;
            Ok(outputs
                .into_iter()
                .flat_map(|o| match o {
                    JobOutput::Run { csv, .. } => vec![json!({ "preset": name.name(), "csv": csv })],
                    JobOutput::Sweep { csv, .. } => csv
                        .into_iter()
                        .map(|p| json!({ "preset": name.name(), "csv": p }))
                        .collect(),
                })
                .collect())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", json!({ "error": "usage", "message": message.trim() }));
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
