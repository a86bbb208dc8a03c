use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmac_cli::{
    commands, emit, plot, write_svg, CliError, CliResult, Format, Overrides, ScenarioConfig,
};

/// Secrecy capacity region boundaries and optimal power allocation for the
/// cognitive MAC with a confidential message.
///
/// Exit status: 0 success, 1 configuration or usage error, 2 solver failure,
/// 3 verification failure. RAYON_NUM_THREADS sets the worker count; results
/// do not depend on it.
#[derive(Parser)]
#[command(name = "cmac-region", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the boundary over the configured weights.
    Region(Common),
    /// Synchronous and asynchronous boundaries side by side.
    CompareAsync(Common),
    /// Certify the closed forms against brute-force oracles.
    Verify(Common),
    /// Dump sampled fading states.
    Sample(Common),
    /// Render a boundary CSV as SVG.
    Plot {
        /// CSV written by `region` or `compare-async`.
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the fading and verification seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of fading samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; stdout when absent. CSV files get a .json mirror.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Largest accepted objective gap in `verify`.
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Common {
    fn load(&self) -> CliResult<ScenarioConfig> {
        let mut cfg = ScenarioConfig::load(&self.config)?;
        if let Some(n) = self.samples.filter(|&n| n == 0) {
            return Err(CliError::Usage(format!("--samples must be >= 1, got {n}")));
        }
        if let Some(t) = self.tolerance.filter(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(CliError::Usage(format!("--tolerance must be > 0, got {t}")));
        }
        cfg.apply(&Overrides {
            seed: self.seed,
            samples: self.samples,
            tolerance: self.tolerance,
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            }),
        });
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (common, f): (Common, fn(&ScenarioConfig) -> CliResult<commands::Report>) =
        match cli.command {
            Command::Plot { input, out } => {
                let csv = std::fs::read_to_string(&input).map_err(|source| CliError::Io {
                    path: input,
                    source,
                })?;
                return write_svg(&out, &plot::render_svg(&csv)?);
            }
            Command::Region(c) => (c, commands::region),
            Command::CompareAsync(c) => (c, commands::compare_async),
            Command::Verify(c) => (c, commands::verify),
            Command::Sample(c) => (c, commands::sample),
        };
    let cfg = common.load()?;
    let report = f(&cfg)?;
    if let Some(body) = emit(&report.table, cfg.output.path.as_deref(), cfg.output.format)? {
        let mut stdout = std::io::stdout().lock();
        let _ = stdout.write_all(body.as_bytes());
    }
    match report.failure {
        Some(e) => Err(e),
        None => Ok(()),
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cmac-region: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
