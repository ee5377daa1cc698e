//! Subcommand implementations behind the `lrp-transfer` binary.

use std::fmt;
use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod output;
pub mod study;

pub use config::RunConfig;
pub use study::{run_study, write_study, StudyRun};

/// Error context naming the file being read or written.
#[derive(Debug, Clone)]
pub struct AtPath(pub PathBuf);

impl fmt::Display for AtPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.display())
    }
}

/// Machine-readable error report printed on stderr.
pub fn error_json(err: &anyhow::Error) -> serde_json::Value {
    let path = err.downcast_ref::<AtPath>().map(|p| p.0.display().to_string());
    serde_json::json!({
        "error": {
            "kind": error_kind(err),
            "message": message(err),
            "path": path,
        }
    })
}

/// The cause chain joined by `: `, skipping layers that repeat another layer's text.
fn message(err: &anyhow::Error) -> String {
    let layers: Vec<String> = err.chain().map(|c| c.to_string()).collect();
    let mut kept: Vec<&str> = Vec::new();
    for (i, l) in layers.iter().enumerate() {
        let inner_repeats = layers[i + 1..].iter().any(|x| x.contains(l.as_str()));
        let outer_repeats = kept.iter().any(|k| k.contains(l.as_str()));
        if !inner_repeats && !outer_repeats {
            kept.push(l);
        }
    }
    kept.join(": ")
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use lrp_transfer::{channels, eval, ingest, model, onset, preprocess, synth};
    for c in err.chain() {
        if let Some(e) = c.downcast_ref::<lrp_transfer::Error>() {
            return e.kind();
        }
        macro_rules! kinds {
            ($($t:ty => $k:literal),*) => {
                $(if c.is::<$t>() { return $k; })*
            };
        }
        kinds!(
            ingest::IngestError => "ingest",
            model::ModelError => "model",
            eval::EvalError => "eval",
            synth::SynthError => "synth",
            channels::RegistryError => "registry",
            onset::OnsetError => "onset",
            preprocess::PreprocessError => "preprocess",
            lrp_transfer::domain::RecordingError => "recording",
            toml::de::Error => "config",
            std::io::Error => "io"
        );
    }
    "usage"
}
