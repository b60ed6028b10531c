use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cend_cli::config::parse_list;
use cend_cli::{cmd_gold, cmd_plotdata, cmd_run, cmd_synth, error_json, Overrides, RunConfig, ThresholdKind};
use cend_core::evaluation::InjectionMode;
use cend_core::ModelTag;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cend", version, about = "Detect slowly emerging topics from frequency / embedding-movement correlation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSONL corpus (otherwise the configured synthetic corpus is generated).
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labelled corpus as JSONL.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Also write the true exclusive words per category.
        #[arg(long)]
        fields: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the Naive Bayes gold standard of every category.
    Gold {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inject, embed, detect and score.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<InjectionMode>,
        /// Comma-separated logistic rates, one experiment each.
        #[arg(long)]
        rates: Option<String>,
        #[arg(long)]
        model: Option<ModelTag>,
        #[arg(long)]
        category: Option<String>,
        /// Comma-separated run seeds.
        #[arg(long)]
        seeds: Option<String>,
        /// Correlation window size.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_parser = parse_threshold)]
        threshold: Option<ThresholdKind>,
        #[arg(long, allow_hyphen_values = true)]
        fixed_k: Option<f64>,
        /// Persist every embedding snapshot.
        #[arg(long)]
        snapshots: bool,
    },
    /// Emit plot-ready CSV from a finished run directory.
    Plotdata {
        #[arg(long)]
        run: PathBuf,
        /// Comma-separated words whose series to dump.
        #[arg(long, default_value = "")]
        words: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_threshold(s: &str) -> Result<ThresholdKind, String> {
    match s {
        "adaptive" => Ok(ThresholdKind::Adaptive),
        "fixed" => Ok(ThresholdKind::Fixed),
        other => Err(format!("unknown threshold mode {other:?}")),
    }
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(Overrides {
        corpus: common.corpus.clone(),
        ..Overrides::default()
    });
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common, out, fields, seed } => {
            let mut spec = base_config(&common)?.corpus.synth;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let n = cmd_synth(&spec, &out, fields.as_deref())?;
            println!("wrote {n} documents to {}", out.display());
        }
        Command::Gold { common, out } => {
            let gold = cmd_gold(&base_config(&common)?, &out)?;
            println!("wrote {} categories to {}", gold.categories.len(), out.display());
        }
        Command::Run {
            common,
            gold,
            out,
            mode,
            rates,
            model,
            category,
            seeds,
            n,
            dim,
            threshold,
            fixed_k,
            snapshots,
        } => {
            let mut cfg = base_config(&common)?;
            cfg.apply(Overrides {
                gold,
                out,
                mode,
                rates: rates.as_deref().map(parse_list).transpose()?,
                model,
                category,
                seeds: seeds.as_deref().map(parse_list).transpose()?,
                n,
                dim,
                threshold,
                fixed_k,
                snapshots,
                ..Overrides::default()
            });
            for r in cmd_run(&cfg)? {
                let rep = &r.report;
                println!(
                    "{}: CEND P={:.3} R={:.3} F={:.3} AUC={:.3} | TFIDF F={:.3}",
                    r.label, rep.precision, rep.recall, rep.f_measure, rep.auc, rep.tfidf.f_measure
                );
            }
        }
        Command::Plotdata { run, words, seed } => {
            let words: Vec<String> = parse_list(&words)?;
            let summary = cmd_plotdata(&run, &words, seed)?;
            for p in &summary.written {
                println!("{}", p.display());
            }
            if !summary.skipped_words.is_empty() {
                eprintln!("skipped unknown words: {}", summary.skipped_words.join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::FAILURE
        }
    }
}
