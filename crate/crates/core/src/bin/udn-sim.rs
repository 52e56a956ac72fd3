//! Command-line front end: generate instances, solve them, run sweeps and
//! round-trip the ILP model through external solvers.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use udn_coord::exact::{export_ilp, IlpModel};
use udn_coord::harness::{
    emit_results, exhaustive_best_n, run_algorithm, run_scenario, write_csv, AlgorithmId,
    NPolicy, ScenarioSpec,
};
use udn_coord::network::{dbm_to_watts, generate_instance};
use udn_coord::{CoordError, NetworkInstance, Result, SystemConfig};

#[derive(Parser)]
#[command(name = "udn-sim", version, about = "Coordination simulator for dense small-cell networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random deployment and write it with its gain matrix as JSON.
    Generate {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one algorithm on one instance and print the solution as JSON.
    Solve {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long, default_value = "power-aware-exact")]
        algorithm: AlgorithmId,
        /// Number of partitions; `best` sweeps 1..=K.
        #[arg(long, default_value = "1")]
        partitions: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo sweep; writes CSV plus a JSON summary beside it.
    Sweep {
        /// Scenario JSON; overrides the flags below.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value = "1")]
        realizations: usize,
        /// `N`, `fixed:N`, `best`, `best:MAX` or `intra-an`.
        #[arg(long = "n-policy", alias = "partitions", default_value = "1")]
        n_policy: NPolicy,
        #[arg(long, value_delimiter = ',', default_value = "power-aware-exact,full-reuse,full-orth")]
        algorithms: Vec<AlgorithmId>,
        /// Fill the wall_ms column (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
        /// CSV path; stdout when omitted (no summary file then).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the big-M feasibility ILP for a target SINR as MPS.
    ExportIlp {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        partitions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a `name=value` solution file against the exported model.
    CheckSolution {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        partitions: usize,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
    },
}

#[derive(Args, Clone)]
struct NetArgs {
    #[arg(long, default_value_t = 10)]
    ans: usize,
    #[arg(long, default_value_t = 10)]
    ues: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "pmax-dbm", default_value_t = 30.0)]
    pmax_dbm: f64,
    #[arg(long = "noise-dbm-hz", default_value_t = -174.0, allow_hyphen_values = true)]
    noise_dbm_hz: f64,
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    #[arg(long = "area-m", default_value_t = 1000.0)]
    area_m: f64,
    #[arg(long = "bandwidth-hz", default_value_t = 1e7)]
    bandwidth_hz: f64,
}

impl NetArgs {
    fn config(&self) -> SystemConfig {
        SystemConfig {
            area_side: self.area_m,
            pathloss_exponent: self.alpha,
            p_max: dbm_to_watts(self.pmax_dbm),
            noise_density: dbm_to_watts(self.noise_dbm_hz),
            system_bandwidth: self.bandwidth_hz,
            rng_seed: self.seed,
            ..SystemConfig::default()
        }
    }
}

#[derive(Args)]
struct InstanceSource {
    /// Instance JSON from `generate`; otherwise one is drawn from the flags.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
}

impl InstanceSource {
    fn load(&self) -> Result<NetworkInstance> {
        match &self.instance {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                let inst: NetworkInstance = serde_json::from_str(&text)
                    .map_err(|e| CoordError::Parse(format!("{}: {e}", path.display())))?;
                inst.validate()?;
                Ok(inst)
            }
            None => generate_instance(self.net.ans, self.net.ues, &self.net.config()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CoordError {
    CoordError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CoordError::Parse(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { net, out } => {
            let inst = generate_instance(net.ans, net.ues, &net.config())?;
            write_out(out.as_deref(), &json(&inst)?)
        }
        Command::Solve {
            source,
            algorithm,
            partitions,
            out,
        } => {
            let inst = source.load()?;
            let seed = source.net.seed;
            let sol = if partitions == "best" {
                exhaustive_best_n(&inst, algorithm, 1..=inst.ue_count(), seed)?.1
            } else {
                let n = partitions
                    .parse()
                    .map_err(|_| CoordError::Parse(format!("bad --partitions '{partitions}'")))?;
                run_algorithm(&inst, algorithm, n, seed)?
            };
            write_out(out.as_deref(), &json(&sol)?)
        }
        Command::Sweep {
            spec,
            net,
            realizations,
            n_policy,
            algorithms,
            timing,
            out,
        } => {
            let spec = match spec {
                Some(path) => ScenarioSpec::from_json_file(&path)?,
                None => ScenarioSpec {
                    m_count: net.ans,
                    k_count: net.ues,
                    n_policy,
                    algorithms,
                    realizations,
                    base_seed: net.seed,
                    config: net.config(),
                    record_timing: timing,
                },
            };
            let output = run_scenario(&spec)?;
            for note in output.summary.notes.iter().filter(|n| n.realization.is_none()) {
                eprintln!("skipped {}: {}", note.algorithm, note.reason);
            }
            match out {
                Some(path) => {
                    let summary = emit_results(&output.records, &output.summary, &path)?;
                    eprintln!("wrote {} and {}", path.display(), summary.display());
                    Ok(())
                }
                None => {
                    let stdout = std::io::stdout();
                    write_csv(&output.records, stdout.lock())
                }
            }
        }
        Command::ExportIlp {
            source,
            theta,
            partitions,
            out,
        } => {
            let inst = source.load()?;
            let (model, text) = export_ilp(&inst, theta, partitions)?;
            eprintln!("{} variables, {} rows", model.variables.len(), model.rows.len());
            write_out(out.as_deref(), &text)
        }
        Command::CheckSolution {
            source,
            theta,
            partitions,
            solution,
            tolerance,
        } => {
            let inst = source.load()?;
            let model = IlpModel::build(&inst, theta, partitions)?;
            let text = std::fs::read_to_string(&solution).map_err(|e| io_err(&solution, e))?;
            let x = model.parse_solution(&text)?;
            let violations = model.check(&x, tolerance);
            let mut stdout = std::io::stdout().lock();
            for v in &violations {
                let _ = writeln!(stdout, "violated {} by {:e}", v.name, v.excess);
            }
            if violations.is_empty() {
                let _ = writeln!(stdout, "feasible");
                Ok(())
            } else {
                Err(CoordError::Infeasible(format!("{} constraints violated", violations.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
