use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wald_core::two_period::Opponent;
use wald_lab::commands::{dispatch, CmdError, Extra};
use wald_lab::config::{load_config, RunConfig};
use wald_lab::output::{envelope, error_json};

/// Solve, certify and simulate equilibria of the learning-and-preemption
/// stopping game.
#[derive(Parser, Debug)]
#[command(name = "wald-lab", version)]
struct Cli {
    /// single-dm, cutoffs, classify, solve, verify, simulate, sweep,
    /// two-period or extensions
    command: String,
    /// Flat `key = value` config; the baseline parameters if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set c=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    p0: Option<String>,
    #[arg(long)]
    regime: Option<String>,
    /// Start of randomization.
    #[arg(long = "that", value_name = "T")]
    t_hat: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    report_step: Option<String>,
    /// Directory for JSON and CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the full JSON document instead of the summary line.
    #[arg(long)]
    json: bool,
    /// extensions: competition, mrss or nplayer.
    #[arg(long)]
    kind: Option<String>,
    /// two-period: S0, R0 or Learn.
    #[arg(long)]
    opponent: Option<String>,
    /// sweep: key to vary.
    #[arg(long)]
    key: Option<String>,
    /// sweep: comma-separated values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
    /// sweep: command run at each value (default classify).
    #[arg(long)]
    inner: Option<String>,
}

fn resolve(cli: &Cli) -> Result<(RunConfig, Extra), CmdError> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CmdError { kind: "Usage".into(), message: format!("--set expects KEY=VALUE, got {o:?}") })?;
        cfg.set(k.trim(), v.trim())?;
    }
    let flags = [
        ("p0", &cli.p0),
        ("regime", &cli.regime),
        ("t_hat", &cli.t_hat),
        ("reps", &cli.reps),
        ("seed", &cli.seed),
        ("report_step", &cli.report_step),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if let Some(d) = &cli.out {
        cfg.out_dir = Some(d.clone());
    }
    let opponent = match cli.opponent.as_deref() {
        None => None,
        Some(s) => Some(Opponent::ALL.into_iter().find(|o| o.name().eq_ignore_ascii_case(s)).ok_or_else(|| {
            CmdError { kind: "Usage".into(), message: format!("unknown opponent {s:?}; expected S0, R0 or Learn") }
        })?),
    };
    let extra = Extra {
        kind: cli.kind.clone(),
        opponent,
        sweep_key: cli.key.clone(),
        sweep_values: cli.values.clone(),
        sweep_command: cli.inner.clone(),
    };
    Ok((cfg, extra))
}

fn run(cli: &Cli) -> Result<String, CmdError> {
    let (cfg, extra) = resolve(cli)?;
    let out = dispatch(&cli.command, &cfg, &extra)?;
    let doc = envelope(&cli.command, &cfg, out.result);
    let text = serde_json::to_string(&doc).expect("serializable");
    if let Some(dir) = &cfg.out_dir {
        let mut arts = out.artifacts;
        arts.add(format!("{}.json", cli.command), format!("{text}\n"));
        arts.write(dir).map_err(|e| CmdError { kind: "Io".into(), message: e.to_string() })?;
    }
    Ok(if cli.json { text } else { out.summary })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(line) => {
            // a closed pipe is not an error of the command
            let _ = writeln!(std::io::stdout().lock(), "{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&cli.command, &e.kind, &e.message));
            ExitCode::FAILURE
        }
    }
}
