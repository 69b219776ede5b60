//! `driftlab`: generate drifting streams, measure and classify drift,
//! evaluate learners.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Arg, ArgAction, ArgMatches, Command};

use config::{ExperimentConfig, KEYS};

fn flag_name(key: &str) -> &'static str {
    Box::leak(key.replace('_', "-").into_boxed_str())
}

/// `--config` plus one flag per config key.
fn with_config_flags(cmd: Command) -> Command {
    let mut cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .short('c')
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("key = value config file; flags override it"),
    );
    for k in KEYS {
        cmd = cmd.arg(
            Arg::new(k.name)
                .long(flag_name(k.name))
                .value_name("VALUE")
                .help(format!("{} [default: {}]", k.help, k.default))
                .help_heading("Config keys"),
        );
    }
    cmd
}

fn trajectory_args(cmd: Command) -> Command {
    cmd.arg(
        Arg::new("trajectory")
            .long("trajectory")
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("trajectory manifest, e.g. a truth-NNN.txt from generate"),
    )
    .arg(
        Arg::new("fixture")
            .long("fixture")
            .value_name("NAME")
            .conflicts_with("trajectory")
            .help("built-in fixture instead of a file"),
    )
    .arg(
        Arg::new("out")
            .long("out")
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("write here instead of stdout"),
    )
}

fn cli() -> Command {
    Command::new("driftlab")
        .about("Concept drift streams, measures and taxonomy")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(Command::new("defaults").about("Print every config key with its default"))
        .subcommand(with_config_flags(
            Command::new("generate").about("Write replicate streams and ground-truth manifests"),
        ))
        .subcommand(with_config_flags(trajectory_args(
            Command::new("measure")
                .about("Magnitude, duration, path length and average rate over [t, u]")
                .arg(Arg::new("t").long("t").short('t').required(true).value_parser(clap::value_parser!(f64)))
                .arg(Arg::new("u").long("u").short('u').required(true).value_parser(clap::value_parser!(f64)))
                .arg(
                    Arg::new("rate_at")
                        .long("rate-at")
                        .value_name("TIME")
                        .value_parser(clap::value_parser!(f64))
                        .help("also report the drift rate at this time"),
                ),
        )))
        .subcommand(with_config_flags(trajectory_args(
            Command::new("classify").about("Segment a trajectory and label every drift").arg(
                Arg::new("params")
                    .long("params")
                    .value_name("FILE")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("taxonomy thresholds as key = value lines"),
            ),
        )))
        .subcommand(with_config_flags(
            Command::new("evaluate").about("Prequential evaluation over a magnitude grid"),
        ))
        .subcommand(
            Command::new("report")
                .about("Verify a run directory and write summaries and plot tables")
                .arg(Arg::new("run_dir").required(true).value_parser(clap::value_parser!(PathBuf))),
        )
        .subcommand(
            Command::new("echo-learner")
                .hide(true)
                .about("External learner that predicts the last label seen"),
        )
        .arg(
            Arg::new("quiet")
                .long("quiet")
                .short('q')
                .global(true)
                .action(ArgAction::SetTrue)
                .help("suppress progress messages"),
        )
}

fn load_config(m: &ArgMatches, extra_file: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        cfg.load_file(path)?;
    }
    if let Some(path) = extra_file {
        cfg.load_file(path)?;
    }
    for k in KEYS {
        if let Some(v) = m.get_one::<String>(k.name) {
            cfg.set(k.name, v).with_context(|| format!("--{}", flag_name(k.name)))?;
        }
    }
    Ok(cfg)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(m: &ArgMatches) -> Result<()> {
    let quiet = m.get_flag("quiet");
    match m.subcommand() {
        Some(("defaults", _)) => {
            print!("{}", commands::cmd_defaults());
            Ok(())
        }
        Some(("generate", sub)) => {
            let cfg = load_config(sub, None)?;
            with_partial_marker(&cfg.output, || commands::cmd_generate(&cfg))?;
            if !quiet {
                eprintln!("wrote {} replicates to {}", cfg.replicates, cfg.output.display());
            }
            Ok(())
        }
        Some(("measure", sub)) => {
            let cfg = load_config(sub, None)?;
            let (tr, input) = commands::load_trajectory(
                sub.get_one::<PathBuf>("trajectory").map(PathBuf::as_path),
                sub.get_one::<String>("fixture").map(String::as_str),
            )?;
            let t = *sub.get_one::<f64>("t").expect("required");
            let u = *sub.get_one::<f64>("u").expect("required");
            let text = commands::cmd_measure(&cfg, &tr, &input, t, u, sub.get_one::<f64>("rate_at").copied())?;
            emit(sub.get_one::<PathBuf>("out"), &text)
        }
        Some(("classify", sub)) => {
            let cfg = load_config(sub, sub.get_one::<PathBuf>("params").map(PathBuf::as_path))?;
            let fixture = sub.get_one::<String>("fixture").map(String::as_str);
            let (tr, input) =
                commands::load_trajectory(sub.get_one::<PathBuf>("trajectory").map(PathBuf::as_path), fixture)?;
            let text = commands::cmd_classify(&cfg, &tr, &input, fixture)?;
            emit(sub.get_one::<PathBuf>("out"), &text)
        }
        Some(("evaluate", sub)) => {
            let cfg = load_config(sub, None)?;
            with_partial_marker(&cfg.output, || commands::cmd_evaluate(&cfg))?;
            if !quiet {
                eprintln!("wrote evaluation to {}", cfg.output.display());
            }
            Ok(())
        }
        Some(("report", sub)) => {
            let dir = sub.get_one::<PathBuf>("run_dir").expect("required");
            print!("{}", commands::cmd_report(dir)?);
            Ok(())
        }
        Some(("echo-learner", _)) => commands::echo_learner(),
        _ => unreachable!("subcommand required"),
    }
}

fn with_partial_marker(dir: &Path, f: impl FnOnce() -> Result<()>) -> Result<()> {
    f().inspect_err(|e| commands::mark_partial(dir, e))
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
