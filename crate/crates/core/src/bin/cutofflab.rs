use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cutofflab::cli::{
    cmd_analyze, cmd_curve, exit_code, reproduce, with_threads, ReproduceTarget, RunConfig, ScenarioConfig,
    ScenarioFlags, EXIT_CONFIG, EXIT_OK, EXIT_REPRODUCTION,
};

#[derive(Parser)]
#[command(name = "cutofflab", version, about = "Cutoff thermalization of Lévy-driven Ornstein-Uhlenbeck systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "CUTOFFLAB_THREADS")]
    threads: Option<usize>,
    /// rotation, oscillator, jacobi_chain, suspension, jordan_block or gradient.
    #[arg(long, global = true)]
    scenario: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Number of masses in the chain.
    #[arg(long, global = true)]
    masses: Option<usize>,
    /// Size of the Jordan block.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Comma-separated spectrum of a gradient system.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    eigenvalues: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral decomposition, verdict and constants, written to report.json.
    Analyze,
    /// Empirical profile and δ-dichotomy curves as CSV plus a plot script.
    Curve,
    /// Re-runs a pinned set of reference checks.
    Reproduce {
        /// jacobi-chain, oscillator or entropy-dichotomy.
        target: String,
    },
}

fn config(cli: &Cli) -> cutofflab::Result<RunConfig> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &cli.scenario {
        let flags = ScenarioFlags {
            lambda: cli.lambda,
            theta: cli.theta,
            gamma: cli.gamma,
            kappa: cli.kappa,
            masses: cli.masses,
            dim: cli.dim,
            eigenvalues: cli.eigenvalues.clone(),
        };
        c = c.with_scenario(ScenarioConfig::from_flags(name, &flags)?);
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    if let Some(out) = &cli.out {
        c.out = Some(out.clone());
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: &Cli) -> cutofflab::Result<i32> {
    match &cli.command {
        Command::Analyze => {
            let c = config(cli)?;
            let path = cmd_analyze(&c, &c.out_dir())?;
            println!("{}", path.display());
        }
        Command::Curve => {
            let c = config(cli)?;
            let out = c.out_dir();
            let curves = cmd_curve(&c, &out)?;
            println!("{} profile rows, {} dichotomy rows in {}", curves.profile.len(), curves.dichotomy.len(), out.display());
        }
        Command::Reproduce { target } => {
            let target: ReproduceTarget = target.parse()?;
            let result = reproduce(target)?;
            for check in &result.checks {
                println!("{check}");
            }
            if let Some(out) = &cli.out {
                std::fs::create_dir_all(out)?;
                let text = serde_json::to_string_pretty(&result).map_err(|e| cutofflab::Error::Io(e.to_string()))?;
                std::fs::write(out.join(format!("reproduce-{target}.json")), text + "\n")?;
            }
            if !result.passed() {
                return Ok(EXIT_REPRODUCTION);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match with_threads(cli.threads, || run(&cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
