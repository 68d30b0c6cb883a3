//! Command-line driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::far_path_count;
use crate::config::{self, EstimatorKind, ExperimentConfig, Overrides, Profile};
use crate::dictionary::{dft_dictionary, polar_dictionary};
use crate::error::{Error, Result};
use crate::estimators::SparsityBudget;
use crate::experiments::{Experiment, SweepResult};
use crate::io;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hfce", version, about = "Hybrid-field XL-MIMO channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// NMSE against SNR at a fixed mixing ratio.
    SweepSnr {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV; the metadata goes to `<out>.meta`.
        #[arg(long, default_value = "sweep_snr.csv")]
        out: PathBuf,
    },
    /// NMSE against the mixing ratio at a fixed SNR.
    SweepGamma {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "sweep_gamma.csv")]
        out: PathBuf,
    },
    /// Write a dictionary in the binary container format.
    ExportDict {
        #[arg(long, value_enum)]
        kind: DictKind,
        #[command(flatten)]
        common: CommonArgs,
        /// Defaults to `dictionary_<kind>.bin`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the channel of one trial as CSV or binary.
    ExportChannel {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Defaults to the configured `channel.gamma`.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value_t = ChannelFormat::Csv)]
        format: ChannelFormat,
        #[arg(long, default_value = "channel.csv")]
        out: PathBuf,
    },
    /// Split a sweep CSV into one `x nmse_db` series file per estimator.
    Plotdata {
        /// Sweep CSV written by sweep-snr or sweep-gamma.
        csv: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "plotdata")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DictKind {
    Angle,
    Polar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelFormat {
    Csv,
    Bin,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config file with dotted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    profile: Option<Profile>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated mixing ratios.
    #[arg(long)]
    gamma_grid: Option<String>,
    /// Comma-separated SNR values in dB.
    #[arg(long)]
    snr_grid: Option<String>,
    /// Comma-separated subset of ff-omp, nf-omp, hf-omp, mmse, ls.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    kappa: Option<usize>,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let overrides = Overrides {
            profile: self.profile,
            seed: self.seed,
            trials: self.trials,
            gamma_grid: self.gamma_grid.as_deref().map(config::parse_list).transpose()?,
            snr_grid: self.snr_grid.as_deref().map(config::parse_list).transpose()?,
            estimators: self
                .estimators
                .as_deref()
                .map(config::parse_list::<EstimatorKind>)
                .transpose()?,
            kappa: self.kappa,
            serial: self.serial,
        };
        config::load(self.config.as_deref(), &overrides)
    }
}

/// Maps an error to its exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Numerical(_)) {
                eprintln!("hint: a small positive noise floor (finite SNR) usually regularizes the covariance solve");
            }
            exit_code(&e)
        }
    }
}

fn log_config(cfg: &ExperimentConfig) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "effective configuration (hash {}):", cfg.hash());
    for line in cfg.to_toml().lines() {
        let _ = writeln!(err, "  {line}");
    }
}

/// Reports every point where the far-path count or the sparsity split
/// needs rounding.
fn log_rounding(cfg: &ExperimentConfig, gammas: &[f64]) {
    for &g in gammas {
        let paths = g * cfg.num_paths as f64;
        if paths.fract() != 0.0 {
            eprintln!(
                "note: gamma={g} gives gamma*L={paths}; far paths = {} (round half toward far)",
                far_path_count(cfg.num_paths, g)
            );
        }
        if cfg.estimators.contains(&EstimatorKind::HfOmp) {
            let k = g * (cfg.kappa * cfg.num_paths) as f64;
            if k.fract() != 0.0 {
                if let Ok(b) = SparsityBudget::split(cfg.num_paths, g, cfg.kappa) {
                    eprintln!(
                        "note: gamma={g} gives gamma*kappa*L={k}; hf-omp budget {} far + {} near",
                        b.far, b.near
                    );
                }
            }
        }
    }
}

fn finish_sweep(out: &Path, result: &SweepResult) -> Result<()> {
    io::save_sweep(out, result)?;
    for r in result.rows.iter().filter(|r| r.failures > 0) {
        eprintln!(
            "warning: {} failed in {} of {} trials at {}={}",
            r.estimator,
            r.failures,
            r.failures + r.trials,
            result.variable.name(),
            r.sweep_value
        );
    }
    eprintln!(
        "wrote {} rows to {} (metadata {})",
        result.rows.len(),
        out.display(),
        io::metadata_path(out).display()
    );
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::SweepSnr { common, out } => {
            let cfg = common.load()?;
            log_config(&cfg);
            log_rounding(&cfg, &[cfg.gamma]);
            let result = Experiment::new(cfg)?.run_snr_sweep()?;
            finish_sweep(&out, &result)
        }
        Command::SweepGamma { common, out } => {
            let cfg = common.load()?;
            log_config(&cfg);
            log_rounding(&cfg, &cfg.gamma_grid);
            let result = Experiment::new(cfg)?.run_gamma_sweep()?;
            finish_sweep(&out, &result)
        }
        Command::ExportDict { kind, common, out } => {
            let cfg = common.load()?;
            log_config(&cfg);
            let (dict, default) = match kind {
                DictKind::Angle => (dft_dictionary(&cfg.array)?, "dictionary_angle.bin"),
                DictKind::Polar => (polar_dictionary(&cfg.array, &cfg.polar)?, "dictionary_polar.bin"),
            };
            let out = out.unwrap_or_else(|| PathBuf::from(default));
            io::save_dictionary(&out, &dict)?;
            if matches!(kind, DictKind::Polar) {
                println!("S={}", dict.num_columns());
            }
            eprintln!(
                "wrote {}x{} {} dictionary to {}",
                dict.num_rows(),
                dict.num_columns(),
                dict.kind().name(),
                out.display()
            );
            Ok(())
        }
        Command::ExportChannel {
            common,
            trial,
            gamma,
            format,
            out,
        } => {
            let mut cfg = common.load()?;
            log_config(&cfg);
            let gamma = gamma.unwrap_or(cfg.gamma);
            cfg.estimators = vec![EstimatorKind::Ls];
            let ch = Experiment::new(cfg)?.trial_channel(gamma, trial)?;
            let mut w = std::io::BufWriter::new(
                std::fs::File::create(&out)
                    .map_err(|e| Error::Config(format!("cannot write {}: {e}", out.display())))?,
            );
            match format {
                ChannelFormat::Csv => io::write_channel_csv(&mut w, &ch.h)?,
                ChannelFormat::Bin => io::write_channel_binary(&mut w, &ch.h)?,
            }
            w.flush()?;
            eprintln!(
                "wrote trial {trial} channel ({} far + {} near paths) to {}",
                ch.num_far(),
                ch.num_paths() - ch.num_far(),
                out.display()
            );
            Ok(())
        }
        Command::Plotdata { csv, out } => {
            let file = std::fs::File::open(&csv)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", csv.display())))?;
            let rows = io::read_sweep_csv(std::io::BufReader::new(file))
                .map_err(|e| match e {
                    Error::Format(m) => Error::Format(format!("{}: {m}", csv.display())),
                    other => other,
                })?;
            for path in io::write_plotdata(&out, &rows)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}
