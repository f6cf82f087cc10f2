//! Command-line runner for the qlab experiments.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use config::{parse_overrides, ExperimentConfig};
use output::{Outputs, RunReport, RunVerdict, VERSION};

#[derive(Debug, Parser)]
#[command(name = "qlab", version = VERSION, about = "Numerical experiments on Schrödinger operators with singular potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment: `qlab run <experiment> [--config FILE] [--key value ...] [--jobs N] [--out DIR]`.
    #[command(disable_help_flag = true)]
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// List the experiments.
    List,
    /// Check config files (and overrides) without running anything.
    #[command(disable_help_flag = true)]
    Validate {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// `qlab <experiment> ...` is shorthand for `qlab run <experiment> ...`.
    #[command(external_subcommand)]
    Other(Vec<String>),
}

/// Parsed `run`/`validate` arguments.
#[derive(Debug, Default)]
struct Invocation {
    experiment: Option<String>,
    configs: Vec<PathBuf>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    overrides: Vec<(String, String)>,
}

fn parse_invocation(args: &[String]) -> Result<Invocation> {
    let mut inv = Invocation::default();
    let mut rest = Vec::new();
    let mut it = args.iter().peekable();
    while let Some(a) = it.next() {
        let mut take = |flag: &str| -> Result<String> {
            match a.split_once('=') {
                Some((_, v)) => Ok(v.to_string()),
                None => it.next().cloned().ok_or_else(|| anyhow!("{flag} needs a value")),
            }
        };
        let flag = a.split('=').next().unwrap_or_default();
        match flag {
            "--config" => inv.configs.push(take("--config")?.into()),
            "--jobs" => {
                let v = take("--jobs")?;
                inv.jobs = Some(v.parse().map_err(|_| anyhow!("--jobs expects a positive integer, got {v:?}"))?);
            }
            "--out" => inv.out = Some(take("--out")?.into()),
            _ if !a.starts_with("--") && rest.is_empty() && a.ends_with(".toml") => inv.configs.push(a.into()),
            _ if !a.starts_with("--") && inv.experiment.is_none() && rest.is_empty() => inv.experiment = Some(a.clone()),
            _ => {
                rest.push(a.clone());
                if !a.contains('=') {
                    if let Some(v) = it.next() {
                        rest.push(v.clone());
                    }
                }
            }
        }
    }
    inv.overrides = parse_overrides(&rest)?;
    Ok(inv)
}

fn unknown_experiment(name: &str) -> anyhow::Error {
    anyhow!(
        "unknown experiment {name:?}; valid experiments: {}",
        experiments::names().join(", ")
    )
}

/// Builds the effective config: file (if any), then the named experiment,
/// then overrides.
fn resolve(experiment: Option<&str>, config: Option<&PathBuf>, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let base = match (config, experiment) {
        (Some(path), exp) => {
            let c = ExperimentConfig::load(path)?;
            if let Some(e) = exp {
                if e != c.experiment {
                    bail!("{} configures {:?}, not {e:?}", path.display(), c.experiment);
                }
            }
            c
        }
        (None, Some(e)) => ExperimentConfig::bare(e),
        (None, None) => bail!("name an experiment or pass --config FILE"),
    };
    let cfg = base.with_overrides(overrides)?;
    if experiments::find(&cfg.experiment).is_none() {
        return Err(unknown_experiment(&cfg.experiment));
    }
    Ok(cfg)
}

fn run(inv: Invocation) -> Result<RunVerdict> {
    if inv.configs.len() > 1 {
        bail!("run takes at most one --config");
    }
    if let Some(e) = &inv.experiment {
        if experiments::find(e).is_none() {
            return Err(unknown_experiment(e));
        }
    }
    let cfg = resolve(inv.experiment.as_deref(), inv.configs.first(), &inv.overrides)?;
    let diags = experiments::validate(&cfg);
    if !diags.is_empty() {
        bail!("invalid config:\n  {}", diags.join("\n  "));
    }
    if let Some(j) = inv.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("configuring worker threads")?;
    }
    let dir = std::env::var_os("QLAB_OUT")
        .map(PathBuf::from)
        .or(inv.out)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(&cfg.experiment));
    let exp = experiments::find(&cfg.experiment).expect("validated");
    let mut out = Outputs::create(&dir)?;
    let start = Instant::now();
    let outcome = exp.run(&cfg, &mut out).with_context(|| format!("experiment {}", exp.name))?;
    let verdict = RunVerdict::of(&outcome);
    let files: Vec<String> = out.files().to_vec();
    let report = RunReport {
        experiment: exp.name,
        version: VERSION,
        runtime_seconds: start.elapsed().as_secs_f64(),
        config: &cfg,
        verdict,
        files: &files,
        outcome: &outcome,
    };
    let json = serde_json::to_string_pretty(&report)?;
    out.write("report.json", |w| Ok(w.write_all(json.as_bytes())?))?;
    for c in &outcome.checks {
        println!("{} {}: {:e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.requirement);
    }
    println!("{}: {:?}, results in {}", exp.name, verdict, dir.display());
    Ok(verdict)
}

fn validate_cmd(inv: Invocation) -> Result<bool> {
    let mut clean = true;
    let targets: Vec<Option<&PathBuf>> = if inv.configs.is_empty() {
        vec![None]
    } else {
        inv.configs.iter().map(Some).collect()
    };
    for path in targets {
        let label = path.map(|p| p.display().to_string()).unwrap_or_else(|| "<arguments>".into());
        match resolve(inv.experiment.as_deref(), path, &inv.overrides) {
            Ok(cfg) => {
                let d = experiments::validate(&cfg);
                if d.is_empty() {
                    println!("{label}: ok");
                }
                for m in d {
                    clean = false;
                    println!("{label}: {m}");
                }
            }
            Err(e) => {
                clean = false;
                println!("{label}: {e:#}");
            }
        }
    }
    Ok(clean)
}

/// Entry point; exit code 0 on completion, 2 on a failed verdict, 1 on
/// any error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::List => {
            print!("{}", experiments::listing());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { args } => parse_invocation(&args).and_then(run).map(exit_for),
        Command::Other(args) => parse_invocation(&args).and_then(run).map(exit_for),
        Command::Validate { args } => parse_invocation(&args)
            .and_then(validate_cmd)
            .map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn exit_for(v: RunVerdict) -> ExitCode {
    match v {
        RunVerdict::Fail => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn invocation_parsing() {
        let inv = parse_invocation(&s(&["counterexample", "--n", "3", "--K=128", "--jobs", "2", "--out", "o"])).unwrap();
        assert_eq!(inv.experiment.as_deref(), Some("counterexample"));
        assert_eq!(inv.jobs, Some(2));
        assert_eq!(inv.out, Some(PathBuf::from("o")));
        assert_eq!(inv.overrides, vec![("n".to_string(), "3".to_string()), ("K".to_string(), "128".to_string())]);
        let inv = parse_invocation(&s(&["--config", "a.toml", "--params.t", "0.2"])).unwrap();
        assert_eq!(inv.experiment, None);
        assert_eq!(inv.configs, vec![PathBuf::from("a.toml")]);
        assert!(parse_invocation(&s(&["heat", "--jobs", "many"])).is_err());
        let inv = parse_invocation(&s(&["a.toml", "b.toml"])).unwrap();
        assert_eq!(inv.configs.len(), 2);
    }

    #[test]
    fn resolve_checks_names() {
        assert!(resolve(Some("nope"), None, &[]).is_err());
        let c = resolve(Some("heat"), None, &[("K".into(), "32".into())]).unwrap();
        assert_eq!(c.truncation, Some(32));
        assert!(resolve(None, None, &[]).is_err());
    }
}
