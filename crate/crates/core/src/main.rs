use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use copa::features::write_ground_truth;
use copa::pipeline::{emit_report, load_datasets, run_stages, ProviderConfig, RunConfig, Stage};
use copa::render::{export_renderings, render};

#[derive(Parser)]
#[command(
    name = "copa",
    version,
    about = "Direct querying, feature probing and algorithm selection over LLM representations of optimization instances"
)]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// OpenAI-compatible base URL; switches the provider to `openai`.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// Model name sent to `--endpoint`.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Never contact a provider; activations must already be cached.
    #[arg(long, global = true, conflicts_with = "endpoint")]
    offline: bool,
    #[arg(long, global = true)]
    activations_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the ground-truth feature matrix of every problem.
    Features,
    /// Write every configured representation of every instance.
    Render,
    /// Direct querying.
    Query,
    /// Feature probing on pooled activations.
    Probe,
    /// Algorithm selection with stratified k-fold.
    Select,
    /// All three experiments and the combined report.
    Report,
}

fn load_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => {
            let mut cfg = RunConfig::default();
            cfg.apply_env(|k| std::env::var(k).ok());
            cfg
        }
    };
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(endpoint) = &o.endpoint {
        match &mut cfg.provider {
            ProviderConfig::Openai {
                endpoint: e, model, ..
            } => {
                *e = endpoint.clone();
                if let Some(m) = &o.model {
                    *model = m.clone();
                }
            }
            _ => {
                let model = o.model.clone().context(
                    "--endpoint needs --model unless the config names an openai provider",
                )?;
                cfg.provider = ProviderConfig::Openai {
                    endpoint: endpoint.clone(),
                    model,
                    api_key: std::env::var("COPA_API_KEY").ok(),
                };
            }
        }
    }
    if o.offline {
        cfg.provider = ProviderConfig::Offline;
    }
    if let Some(d) = &o.activations_dir {
        cfg.activations_dir = Some(d.clone());
    }
    if let Some(d) = &o.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(d) = &o.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli.opts)?;
    let stages: &[Stage] = match cli.command {
        Command::Features => {
            for ds in load_datasets(&cfg)? {
                fs::create_dir_all(&cfg.output_dir)
                    .with_context(|| cfg.output_dir.display().to_string())?;
                let path = cfg
                    .output_dir
                    .join(format!("features_{}.csv", ds.kind.code()));
                let file = fs::File::create(&path).with_context(|| path.display().to_string())?;
                write_ground_truth(file, ds.kind, &ds.features)
                    .with_context(|| path.display().to_string())?;
                println!("{}", path.display());
            }
            return Ok(true);
        }
        Command::Render => {
            for ds in load_datasets(&cfg)? {
                let renderings: Vec<_> = ds
                    .instances
                    .iter()
                    .flat_map(|i| cfg.representations.iter().map(move |&r| render(i, r)))
                    .collect();
                let dir = cfg.output_dir.join("renderings").join(ds.kind.code());
                let written = export_renderings(&dir, &renderings)
                    .with_context(|| dir.display().to_string())?;
                println!("{}: {} files", dir.display(), written.len());
            }
            return Ok(true);
        }
        Command::Query => &[Stage::DirectQuerying],
        Command::Probe => &[Stage::FeatureProbing],
        Command::Select => &[Stage::AlgorithmSelection],
        Command::Report => &[
            Stage::DirectQuerying,
            Stage::FeatureProbing,
            Stage::AlgorithmSelection,
        ],
    };
    let report = run_stages(&cfg, stages)?;
    for path in emit_report(&report, &cfg.output_dir)? {
        println!("{}", path.display());
    }
    for f in &report.failures {
        eprintln!(
            "failed: {} {} {}: {}",
            f.experiment.as_str(),
            f.problem.code(),
            f.cell,
            f.reason
        );
    }
    Ok(report.is_success())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let mut msg = String::new();
            for cause in e.chain().map(ToString::to_string) {
                if !msg.ends_with(&cause) {
                    msg = if msg.is_empty() {
                        cause
                    } else {
                        format!("{msg}: {cause}")
                    };
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
