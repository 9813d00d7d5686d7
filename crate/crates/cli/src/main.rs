use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqbath_cli::config::{parse_config, RunConfig};
use sqbath_cli::error::{CliError, Result};
use sqbath_cli::{presets, runner};

#[derive(Parser)]
#[command(name = "sqbath", version, about = "Non-Markovian dynamics in squeezed baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write `<stem>.csv` with a metadata sidecar.
    Run(RunArgs),
    /// Run the configured sweep and write `<stem>.sweep.csv` plus per-point trajectories.
    Sweep(RunArgs),
    /// Compare the non-Markovian equation with its Markovian limit.
    Oracle(ConfigArgs),
    /// Inspect the shipped figure presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file path, or `preset:NAME`.
    config: String,
    /// Override a key after parsing, e.g. `--set N=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ConfigArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn load(args: &ConfigArgs) -> Result<(RunConfig, String)> {
    let (text, stem) = match args.config.strip_prefix("preset:") {
        Some(name) => {
            let preset = presets::find(name).ok_or_else(|| CliError::InvalidValue {
                key: "preset".into(),
                message: format!("unknown preset `{name}`"),
            })?;
            (preset.document.to_string(), name.to_string())
        }
        None => {
            let path = Path::new(&args.config);
            let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
            (text, stem)
        }
    };
    let mut cfg = parse_config(&text)?;
    for item in &args.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| CliError::InvalidValue {
            key: "--set".into(),
            message: format!("expected KEY=VALUE, got `{item}`"),
        })?;
        cfg.set(key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok((cfg, stem))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let (cfg, stem) = load(&args.source)?;
            let out = runner::run_single(&cfg, &args.out, &stem)?;
            let f = out.record.final_fidelity().unwrap_or(f64::NAN);
            println!("{}  F(T) = {f:.9}", out.csv_path.display());
        }
        Command::Sweep(args) => {
            let (cfg, stem) = load(&args.source)?;
            let out = runner::run_sweep(&cfg, &args.out, &stem, args.threads)?;
            println!("{}", out.csv_path.display());
            if let Some((value, f)) = out.result.argmax() {
                println!("argmax {} = {value}  F_max = {f:.9}", out.result.param.key());
            }
            let flagged = out.result.flagged();
            if flagged > 0 {
                println!("{flagged} point(s) aborted");
            }
        }
        Command::Oracle(args) => {
            let (cfg, _) = load(&args)?;
            println!("{}", runner::compare_oracle(&cfg)?);
        }
        Command::Presets { action: PresetAction::List } => {
            for p in &presets::PRESETS {
                println!("{:<6} {}", p.name, p.summary);
            }
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            let preset = presets::find(&name).ok_or_else(|| CliError::InvalidValue {
                key: "preset".into(),
                message: format!("unknown preset `{name}`"),
            })?;
            print!("{}", preset.document);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
