//! Library side of the `cend` command: configuration handling and the
//! subcommands, kept callable from tests.

pub mod commands;
pub mod config;

pub use commands::{cmd_gold, cmd_plotdata, cmd_run, cmd_synth, load_corpus, Manifest, PlotSummary, RunResult};
pub use config::{CorpusSource, Overrides, RunConfig, ThresholdKind};

/// Machine-readable error body written to stderr on failure.
pub fn error_json(err: &anyhow::Error) -> serde_json::Value {
    let chain: Vec<String> = err.chain().skip(1).map(|e| e.to_string()).collect();
    serde_json::json!({ "error": err.to_string(), "causes": chain })
}
