//! Command-line experiments over the optempest toolkit.

pub mod config;

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(
    name = "optempest",
    version,
    about = "Optical emanation experiments",
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Experiment parameters. Any of them may also come from `--config`; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emanation class: I, II or III.
    #[arg(long, global = true)]
    pub class: Option<String>,
    /// Baud rate, or `auto` to estimate it when recovering.
    #[arg(long, global = true)]
    pub baud: Option<String>,
    /// Character format, e.g. 8N1 or 7E2.
    #[arg(long = "char-format", global = true)]
    pub char_format: Option<String>,
    /// Sample rate in Hz; defaults to max(1 MHz, 16 x baud)
    #[arg(long = "sample-rate", global = true)]
    pub sample_rate: Option<f64>,
    /// Gaussian noise standard deviation, in units of full LED output.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Comma-separated minimum pulse lengths in microseconds.
    #[arg(long = "stretch-us", global = true)]
    pub stretch_us: Option<String>,
    /// Number of random frames
    #[arg(long, global = true)]
    pub frames: Option<usize>,
    /// Fraction of emitted light reaching the receiver
    #[arg(long, global = true)]
    pub attenuation: Option<f64>,
    /// Text payload (synth) or reference traffic (classify).
    #[arg(long, global = true)]
    pub data: Option<String>,
    /// Random payload length for sweep-stretch.
    #[arg(long = "payload-octets", global = true)]
    pub payload_octets: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a photodetector trace and its ground-truth drive signal.
    Synth,
    /// Decode serial data from a trace file.
    Recover { trace: PathBuf },
    /// Assign an emanation class to a trace, given the traffic it carried.
    Classify { trace: PathBuf },
    /// Measure BER and leakage across pulse-stretch settings.
    SweepStretch,
    /// Ethernet MAC framing tools.
    #[command(subcommand)]
    Mac(MacCommand),
    /// Send frames over the simulated one-way optical link.
    Diode {
        /// Frame hex dump to send instead of random frames.
        #[arg(long = "frames-file")]
        frames_file: Option<PathBuf>,
        /// Use the wired-back negative control instead of a one-way link.
        #[arg(long = "wired-back")]
        wired_back: bool,
    },
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Subcommand)]
pub enum MacCommand {
    /// Build frames and write them as a hex dump.
    Build {
        #[arg(long, default_value = "02:00:00:00:00:01")]
        dst: String,
        #[arg(long, default_value = "02:00:00:00:00:02")]
        src: String,
        #[arg(long, default_value = "88b5", value_parser = parse_hex_u16)]
        ethertype: u16,
        /// Build `--frames` random frames from `--seed` instead of one frame from `--data`.
        #[arg(long)]
        random: bool,
    },
    /// Receive each frame (hex dump line or nibble string) and print the verdict.
    Validate { input: PathBuf },
    /// Cancel each frame mid-transmission and write the nibble streams.
    Abort {
        input: PathBuf,
        /// Nibble index at which the abort is issued; defaults to mid-frame.
        #[arg(long)]
        at: Option<usize>,
    },
    /// Print the clock at which each header field became readable.
    Peek { input: PathBuf },
}

fn parse_hex_u16(s: &str) -> Result<u16, String> {
    u16::from_str_radix(s.trim_start_matches("0x"), 16).map_err(|e| format!("{s:?}: {e}"))
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NO_SIGNAL: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;

/// A command that did not succeed.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    NoSignal(String),
    Violation(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::NoSignal(_) => EXIT_NO_SIGNAL,
            Failure::Violation(_) => EXIT_VIOLATION,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.into())
    }
}

/// Builds the effective configuration: defaults, then the config file, then flags.
pub fn resolve_config(args: &CommonArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        cfg.merge_text(&text)?;
    }
    let flags: [(&str, Option<String>); 12] = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("class", args.class.clone()),
        ("baud", args.baud.clone()),
        ("char_format", args.char_format.clone()),
        ("sample_rate_hz", args.sample_rate.map(|v| v.to_string())),
        ("sigma", args.sigma.map(|v| v.to_string())),
        ("stretch_us", args.stretch_us.clone()),
        ("frames", args.frames.map(|v| v.to_string())),
        ("attenuation", args.attenuation.map(|v| v.to_string())),
        ("data", args.data.clone()),
        ("payload_octets", args.payload_octets.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve_config(&cli.common)?;
    commands::dispatch(&cli.command, &cfg)
}

/// Parses `std::env::args`, runs the command and maps the outcome to an exit code.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e:#}"),
                Failure::NoSignal(m) => eprintln!("no signal: {m}"),
                Failure::Violation(m) => eprintln!("unidirectionality violation: {m}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
