use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use gri_cli::config::KEYS;
use gri_cli::{exit_code, RunConfig, EXIT_CONFIG};
use gri_core::{GriError, Result};

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("build-vocab", "Count the source corpus vocabulary"),
    ("build-graph", "Build the semantic graph over lexicon target words"),
    ("train", "Train source embeddings"),
    ("eval", "Map, retrieve and score P@1 plus isometry metrics"),
    ("metrics", "Isometry metrics only"),
    ("synth", "Generate a synthetic bilingual corpus, lexicon and target vectors"),
];

fn cli() -> Command {
    let keys: Vec<Arg> = KEYS
        .iter()
        .map(|(key, default, help)| {
            let help = if default.is_empty() {
                help.to_string()
            } else {
                format!("{help} [default: {default}]")
            };
            let long: &'static str = Box::leak(key.replace('_', "-").into_boxed_str());
            Arg::new(*key).long(long).value_name("VALUE").help(help)
        })
        .collect();
    let sub = |(name, about): &(&'static str, &'static str)| {
        Command::new(*name)
            .about(*about)
            .arg(Arg::new("config").long("config").short('c').value_name("FILE").help("flat key = value config file"))
            .arg(
                Arg::new("set")
                    .long("set")
                    .value_name("KEY=VALUE")
                    .action(ArgAction::Append)
                    .help("override any config key"),
            )
            .args(keys.clone())
    };
    Command::new("gri")
        .version(gri_core::VERSION)
        .about("Graph-based relative isomorphism for bilingual lexicon induction")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(SUBCOMMANDS.iter().map(sub))
}

/// File values first, then `--set`, then dedicated flags.
fn load_config(m: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(p) => RunConfig::from_file(PathBuf::from(p))?,
        None => RunConfig::default(),
    };
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| GriError::InvalidConfig(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    for (key, _, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn run(name: &str, m: &ArgMatches) -> Result<serde_json::Value> {
    let cfg = load_config(m)?;
    match name {
        "build-vocab" => gri_cli::cmd_build_vocab(&cfg),
        "build-graph" => gri_cli::cmd_build_graph(&cfg),
        "train" => gri_cli::cmd_train(&cfg),
        "eval" => gri_cli::cmd_eval(&cfg),
        "metrics" => gri_cli::cmd_metrics(&cfg),
        "synth" => gri_cli::cmd_synth(&cfg),
        _ => unreachable!("clap rejects unknown subcommands"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match run(name, sub) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            ExitCode::from(u8::try_from(code).unwrap_or(EXIT_CONFIG as u8))
        }
    }
}
