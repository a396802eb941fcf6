//! Command-line driver: config loading, scenario dispatch and result files.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{parse_override, Command, Format};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FDS_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "fds-output";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fds",
    version,
    about = "Rabi-based microwave amplitude sensing with a Floquet-driven spin sensor",
    after_help = "Configuration: a TOML file (--config) with flat overrides from --set KEY=VALUE and the flags \
above; flags win over --set, which wins over the file. Frequencies are cyclic MHz, times µs.\n\n\
Environment:\n  FDS_OUT_DIR  output directory used when neither --out nor `out` in the config is given \
(fallback: ./fds-output)\n\n\
Exit status: 0 success, 1 runtime error, 2 usage or configuration error."
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Master random seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Photon-readout shots per grid point (default: noiseless readout).
    #[arg(long, global = true, value_name = "N")]
    shots: Option<u64>,

    /// Output formats.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    format: Option<Vec<Format>>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Named scenario (default: every scenario of the command).
    #[arg(long, global = true, value_name = "NAME")]
    scenario: Option<String>,

    /// Override any config key, e.g. --set drive.harmonics=3.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Rabi oscillations P0(t) for the ODS and FDS presets.
    Rabi,
    /// QFI versus sensing time, pipeline estimate against the exact oracle.
    Qfi,
    /// Quasi-energy shift, effective Hamiltonian and micromotion diagnostics.
    Effective,
    /// QFI under drive-amplitude and drive-frequency errors.
    Robustness,
    /// Magnetic sensitivity curves and optimal sensing time.
    Sensitivity,
    /// Coherence with and without Carr–Purcell decoupling under dephasing noise.
    Dd,
    /// Noise strength giving the target coherence time without decoupling.
    Calibrate,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::Rabi => Command::Rabi,
            Sub::Qfi => Command::Qfi,
            Sub::Effective => Command::Effective,
            Sub::Robustness => Command::Robustness,
            Sub::Sensitivity => Command::Sensitivity,
            Sub::Dd => Command::Dd,
            Sub::Calibrate => Command::Calibrate,
        }
    }
}

fn flag_overrides(cli: &Cli) -> Vec<(String, toml::Value)> {
    let mut o = Vec::new();
    if let Some(out) = &cli.out {
        o.push(("out".into(), toml::Value::String(out.display().to_string())));
    }
    if let Some(seed) = cli.seed {
        o.push(("seed".into(), toml::Value::Integer(seed as i64)));
    }
    if let Some(shots) = cli.shots {
        o.push(("shots".into(), toml::Value::Integer(shots as i64)));
    }
    if let Some(formats) = &cli.format {
        let list = formats
            .iter()
            .map(|f| toml::Value::String(if *f == Format::Csv { "csv" } else { "json" }.into()))
            .collect();
        o.push(("formats".into(), toml::Value::Array(list)));
    }
    if let Some(threads) = cli.threads {
        o.push(("threads".into(), toml::Value::Integer(threads as i64)));
    }
    if let Some(s) = &cli.scenario {
        o.push(("scenario".into(), toml::Value::String(s.clone())));
    }
    o
}

/// Runs the CLI on `args` and returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let command = cli.command.command();

    let mut overrides = Vec::new();
    for raw in &cli.set {
        match parse_override(raw) {
            Ok(kv) => overrides.push(kv),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        }
    }
    overrides.extend(flag_overrides(&cli));
    let loaded = match config::load(cli.config.as_deref(), &overrides).and_then(|l| l.validate(command).map(|_| l)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if cli.dump_config {
        let _ = write!(std::io::stdout(), "{}", loaded.config.to_toml());
        return EXIT_OK;
    }
    if let Some(n) = loaded.config.threads {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let bundle = match commands::run(command, &loaded) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let dir = loaded
        .config
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    match bundle.write(&loaded.config, &dir) {
        Ok(paths) => {
            // A closed stdout (e.g. piped into `head`) is not a failure.
            let mut out = std::io::stdout().lock();
            for line in &bundle.report {
                let _ = writeln!(out, "{line}");
            }
            for p in paths {
                let _ = writeln!(out, "wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: writing results to {}: {e}", dir.display());
            EXIT_RUNTIME
        }
    }
}
