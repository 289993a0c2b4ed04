use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use statepin::crypto::{ChainSecret, Pbi, PinKeys};
use statepin::eventlog::{read_jsonl, write_jsonl};
use statepin::finality::{hierarchy_finality, FinalityError, LayerParams};
use statepin::scenario::{bundled, run_scenario, verify_log, ScenarioError, ScenarioSpec};
use statepin::sim::measure::model_layers;
use statepin::sim::Simulation;

#[derive(Parser)]
#[command(name = "statepin", version, about = "Anonymous state pinning: simulator, finality calculator and log verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, write its event log and print the report.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        /// Where to write the JSON-lines event log.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Compute worst-case finality for a pinning hierarchy, leaf layer first.
    Finality {
        /// `mainnet:<pinning blocks>`, `ibft:<pinning blocks>`, or
        /// `observe=..,unmask=..,voting=..,action=..,block=..,pinning=..`.
        #[arg(long = "layer")]
        layers: Vec<String>,
        /// Derive the layers of every leaf chain from a scenario instead.
        #[arg(long, conflicts_with = "layers")]
        scenario: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Recover one chain's pins from an event log and check for gaps.
    VerifyLog {
        #[arg(long)]
        log: PathBuf,
        /// Chain secret, 0x-prefixed hex.
        #[arg(long)]
        secret: ChainSecret,
        /// Chain's public identifier, 0x-prefixed hex.
        #[arg(long)]
        pbi: Pbi,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

/// Usage or input errors exit with 2, failed checks with 1.
enum Failure {
    Usage(String),
    Check,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load_scenario(arg: &str) -> Result<ScenarioSpec, ScenarioError> {
    match bundled(arg) {
        Some(text) if !Path::new(arg).exists() => ScenarioSpec::from_json(text),
        _ => ScenarioSpec::load(Path::new(arg)),
    }
}

fn parse_layer(spec: &str) -> Result<LayerParams, String> {
    if let Some((preset, pinning)) = spec.split_once(':') {
        let pinning: u64 = pinning.parse().map_err(|_| format!("bad pinning period in `{spec}`"))?;
        return match preset {
            "mainnet" => Ok(LayerParams::mainnet(pinning)),
            "ibft" => Ok(LayerParams::ibft(pinning)),
            other => Err(format!("unknown preset `{other}`")),
        };
    }
    let mut layer = LayerParams::mainnet(0);
    for part in spec.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got `{part}`"))?;
        let v: u64 = v.parse().map_err(|_| format!("bad value in `{part}`"))?;
        match k.trim() {
            "observe" => layer.observe_depth = v,
            "unmask" => layer.unmask_blocks = v,
            "voting" => layer.voting_period = v,
            "action" => layer.action_blocks = v,
            "block" => layer.block_period = v,
            "pinning" => layer.pinning_period = v,
            other => return Err(format!("unknown layer field `{other}`")),
        }
    }
    Ok(layer)
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn cmd_run(scenario: &str, out: &Path, seed: Option<u64>, format: Format) -> Result<(), Failure> {
    let mut spec = load_scenario(scenario)?;
    if let Some(seed) = seed {
        spec.sim.seed = seed;
    }
    let (sim, report) = run_scenario(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let file = File::create(out).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", out.display())))?;
    write_jsonl(BufWriter::new(file), sim.log()).map_err(|e| Failure::Usage(e.to_string()))?;
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => print_json(&report),
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_finality(layers: &[String], scenario: Option<&str>, format: Format) -> Result<(), Failure> {
    let hierarchies: Vec<(String, Vec<LayerParams>)> = match scenario {
        Some(s) => {
            let spec = load_scenario(s)?;
            let sim = Simulation::new(spec.sim.clone()).map_err(|e| Failure::Usage(e.to_string()))?;
            let managers: Vec<usize> = sim
                .chains()
                .iter()
                .filter_map(|c| c.pinning.as_ref().map(|p| p.management))
                .collect();
            sim.chains()
                .iter()
                .enumerate()
                .filter(|(i, c)| c.pinning.is_some() && !managers.contains(i))
                .map(|(i, c)| (c.id.clone(), model_layers(&sim, i)))
                .collect()
        }
        None => {
            let parsed = layers.iter().map(|l| parse_layer(l)).collect::<Result<Vec<_>, _>>().map_err(Failure::Usage)?;
            vec![("hierarchy".to_string(), parsed)]
        }
    };
    let mut reports = Vec::new();
    for (name, layers) in &hierarchies {
        for (idx, layer) in layers.iter().enumerate() {
            layer.validate(idx).map_err(|e| Failure::Usage(e.to_string()))?;
        }
        let report = hierarchy_finality(layers).map_err(|e: FinalityError| Failure::Usage(e.to_string()))?;
        reports.push((name.clone(), report));
    }
    if reports.is_empty() {
        return Err(Failure::Usage("no pinned chains in scenario".into()));
    }
    match format {
        Format::Text => {
            for (name, report) in &reports {
                if hierarchies.len() > 1 || scenario.is_some() {
                    println!("{name}:");
                }
                print!("{}", report.to_text());
            }
        }
        Format::Json => {
            let map: std::collections::BTreeMap<_, _> = reports.into_iter().collect();
            print_json(&map);
        }
    }
    Ok(())
}

fn cmd_verify(log: &Path, secret: ChainSecret, pbi: Pbi, format: Format) -> Result<(), Failure> {
    let file = File::open(log).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", log.display())))?;
    let records = read_jsonl(BufReader::new(file)).map_err(|e| Failure::Usage(e.to_string()))?;
    let report = verify_log(&records, &PinKeys::new(pbi, secret));
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => print_json(&report),
    }
    if report.is_consistent() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            format,
        } => cmd_run(scenario, out, *seed, *format),
        Command::Finality {
            layers,
            scenario,
            format,
        } => cmd_finality(layers, scenario.as_deref(), *format),
        Command::VerifyLog {
            log,
            secret,
            pbi,
            format,
        } => cmd_verify(log, secret.clone(), *pbi, *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
