use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lf_core::experiment::{
    parse_config_with_overrides, parse_lattice_list, parse_real, run_experiment, ConfigError,
    ExperimentConfig, ExperimentError, ExperimentReport, RawConfig,
};
use lf_core::linear::{classify_disordered, classify_ordered};
use lf_core::model::ModelParams;

const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "lf", version, about = "Linear and nonlinear stability experiments for active-fluid models")]
struct Cli {
    /// Worker threads (defaults to LF_THREADS, then the number of CPUs).
    #[arg(long, global = true, env = "LF_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key=value` settings applied after the file, e.g. `solver.dt=0.01`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Classify the steady state for one parameter set and print a JSON line.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        /// Classify the ordered state instead of the disordered one.
        #[arg(long)]
        ordered: bool,
    },
    /// Measure growth rates of lattice modes and print them next to the prediction.
    Dispersion {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        ordered: bool,
        /// Lattice modes, e.g. "5,5;7,1".
        #[arg(long)]
        modes: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value = "20pi")]
        length: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// Also write CSV outputs here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    gamma0: f64,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma2: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    lambda0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda1: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
}

impl ParamArgs {
    fn params(&self) -> ModelParams {
        ModelParams {
            lambda0: self.lambda0,
            lambda1: self.lambda1,
            alpha: self.alpha,
            beta: self.beta,
            gamma0: self.gamma0,
            gamma2: self.gamma2,
            dim: self.dim,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        // ignore failure: a global pool may already exist
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Run {
            config,
            out,
            overrides,
        } => run(config, out, &overrides),
        Command::Classify { params, ordered } => classify(&params.params(), ordered),
        Command::Dispersion {
            params,
            ordered,
            modes,
            n,
            length,
            dt,
            t_end,
            out,
        } => dispersion(&params, ordered, &modes, n, &length, dt, t_end, out),
    }
}

fn fail(e: &ExperimentError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(path: PathBuf, out: Option<PathBuf>, overrides: &[String]) -> ExitCode {
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let config = match parse_config_with_overrides(&text, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = out.unwrap_or_else(|| config.output_dir.clone());
    match run_experiment(&config, Some(&dir)) {
        Ok(report) => {
            print_report(&report);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => fail(&e),
    }
}

fn print_report(report: &ExperimentReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.checks {
        if c.asserted {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {} = {:e} (threshold {:e})", c.name, c.value, c.threshold);
        } else {
            println!("INFO {} = {:e}", c.name, c.value);
        }
    }
    for p in &report.outputs {
        println!("wrote {}", p.display());
    }
}

fn classify(params: &ModelParams, ordered: bool) -> ExitCode {
    let result = if ordered {
        classify_ordered(params)
    } else {
        classify_disordered(params)
    };
    match result {
        Ok(report) => {
            println!("{}", serde_json::to_string(&report).expect("report is serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn dispersion(
    args: &ParamArgs,
    ordered: bool,
    modes: &str,
    n: usize,
    length: &str,
    dt: f64,
    t_end: f64,
    out: Option<PathBuf>,
) -> ExitCode {
    let config = match dispersion_config(args, ordered, modes, n, length, dt, t_end) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match run_experiment(&config, out.as_deref()) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{:>10} {:>10} {:>14} {:>14} {:>11} {:>5}",
        "mode", "k_sq", "predicted", "measured", "rel_error", "pass"
    );
    for r in &report.rates {
        let label = r.mode.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
        println!(
            "{:>10} {:>10.5} {:>14.6e} {:>14.6e} {:>11.3e} {:>5}",
            label,
            r.k_sq,
            r.predicted,
            r.measured(),
            r.rel_error,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    ExitCode::from(report.exit_code() as u8)
}

fn dispersion_config(
    args: &ParamArgs,
    ordered: bool,
    modes: &str,
    n: usize,
    length: &str,
    dt: f64,
    t_end: f64,
) -> Result<ExperimentConfig, ConfigError> {
    // validate the free-form arguments before handing them to the config builder
    parse_lattice_list(modes).map_err(ConfigError::Validation)?;
    parse_real(length).map_err(ConfigError::Validation)?;
    let p = args.params();
    let text = format!(
        "experiment = Dispersion\n\
         state.kind = {}\n\
         [params]\nlambda0 = {}\nlambda1 = {}\nalpha = {}\nbeta = {}\ngamma0 = {}\ngamma2 = {}\ndim = {}\n\
         [grid]\nn = {n}\nlength = {length}\n\
         [solver]\ndt = {dt}\nt_end = {t_end}\ndiagnostics_interval = {}\n\
         [perturbation]\ntracked = {modes}\n",
        if ordered { "ordered" } else { "disordered" },
        p.lambda0,
        p.lambda1,
        p.alpha,
        p.beta,
        p.gamma0,
        p.gamma2,
        p.dim,
        (t_end / 200.0).max(dt),
    );
    RawConfig::parse(&text)?.build()
}
