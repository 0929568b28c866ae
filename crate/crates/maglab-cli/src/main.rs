use clap::{Args, Parser, Subcommand};
use maglab::config::{ConfigError, ExecutionMode, RunConfig, Suite, SystemSpec};
use maglab::manifold::BUILTIN_NAMES;
use maglab::reptheory;
use maglab::suites::{self, SuiteError, SuiteOutcome};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Verification suites for magnetic flows.
#[derive(Parser)]
#[command(name = "maglab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite on a builtin system.
    Verify {
        /// tensors, brackets, jacobi, pestov, localized, pinching, tomo, poincare or fmquad.
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Pinching threshold row for SO(n).
    Pinching {
        #[arg(long)]
        n: usize,
        /// Report the ε-margin at this δ instead of at δ*(n).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Exact sweep of the tomography constant.
    Tomo {
        #[arg(long, default_value_t = 40)]
        max_m: u32,
        #[arg(long, default_value_t = 40)]
        max_n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Poincaré inequality on SO(3) by Haar quadrature.
    Poincare {
        #[arg(long, default_value_t = 48)]
        resolution: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the suites listed in a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// List builtin systems.
    Systems,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "conformal-t2")]
    system: String,
    /// Field strength override (larmor-t2, hyperbolic3-magnetic).
    #[arg(long)]
    b: Option<f64>,
    /// Kähler constant override (kahler-t4).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random frame points per pointwise suite.
    #[arg(long)]
    points: Option<usize>,
    /// Circle-bundle grid size.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    sequential: bool,
    /// Directory for the JSON summary and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self, suite: Suite) -> RunConfig {
        let mut spec = SystemSpec::named(&self.system);
        spec.b = self.b;
        spec.c = self.c;
        let mut cfg = RunConfig::new(spec, vec![suite]);
        cfg.seed = self.seed;
        if let Some(p) = self.points {
            cfg.grids.points = p;
        }
        if let Some(g) = self.grid {
            cfg.grids.pestov = g;
        }
        if self.sequential {
            cfg.execution = ExecutionMode::Sequential;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg
    }
}

enum Failure {
    Config(String),
    Suite(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SuiteError> for Failure {
    fn from(e: SuiteError) -> Self {
        match e {
            SuiteError::Config(_) | SuiteError::Unsupported { .. } => Failure::Config(e.to_string()),
            e => Failure::Suite(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Suite(format!("output: {e}"))
    }
}

fn write_outputs(dir: &Path, summary_name: &str, outcomes: &[SuiteOutcome]) -> Result<String, Failure> {
    std::fs::create_dir_all(dir)?;
    for o in outcomes {
        std::fs::write(dir.join(format!("{}_checks.csv", o.report.suite)), o.checks_csv())?;
        for t in &o.tables {
            std::fs::write(dir.join(&t.file), &t.csv)?;
        }
    }
    let reports: Vec<_> = outcomes.iter().map(|o| &o.report).collect();
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    std::fs::write(dir.join(summary_name), format!("{json}\n"))?;
    Ok(json)
}

fn run_config(cfg: &RunConfig) -> Result<bool, Failure> {
    cfg.validate()?;
    let outcomes = suites::run_all(cfg)?;
    let json = write_outputs(&cfg.output.dir, &cfg.output.summary, &outcomes)?;
    println!("{json}");
    for o in &outcomes {
        let r = &o.report;
        eprintln!(
            "{} {:<10} {}/{} checks, max residual {:.3e}, {:.2}s",
            if r.passed { "ok  " } else { "FAIL" },
            r.suite,
            r.checks_passed,
            r.checks,
            r.max_residual,
            r.runtime
        );
    }
    Ok(outcomes.iter().all(|o| o.report.passed))
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Verify { suite, common } => {
            let suite: Suite = suite.parse()?;
            run_config(&common.config(suite))
        }
        Command::Pinching { n, delta } => {
            let ds = reptheory::delta_star(n).map_err(|e| Failure::Config(e.to_string()))?;
            let row = reptheory::pinching_row(n, delta.or(ds.as_f64()))
                .map_err(|e| Failure::Config(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&row).expect("row serializes"));
            Ok(true)
        }
        Command::Tomo { max_m, max_n, out } => {
            let mut cfg = RunConfig::new(SystemSpec::default(), vec![Suite::Tomo]);
            cfg.grids.tomo_max_m = max_m;
            cfg.grids.tomo_max_n = max_n;
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            run_config(&cfg)
        }
        Command::Poincare {
            resolution,
            samples,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::new(SystemSpec::default(), vec![Suite::Poincare]);
            cfg.grids.haar = resolution;
            cfg.grids.poincare_samples = samples;
            cfg.seed = seed;
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            run_config(&cfg)
        }
        Command::Run { config } => run_config(&RunConfig::load(&config)?),
        Command::Systems => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Suite(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
