//! CSV and JSON emission. Every JSON document carries `schema_version`.

use std::io::Write;
use std::path::{Path, PathBuf};

use scarsim::LiouvillianModel;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// `spec.csv` -> `spec.json`
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Writes to `path`, or to standard output when no path is given.
pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// The common wrapper of every JSON report: versions, configuration, the
/// built model and its rates, seeds, then the subcommand's result.
pub fn envelope(subcommand: &str, cfg: &RunConfig, model: &LiouvillianModel, result: impl Serialize) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "scarsim",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "config": cfg,
        "model": model.spec,
        "rates": model.jumps.iter().map(|j| j.rate).collect::<Vec<_>>(),
        "seeds": { "seed": cfg.seed, "master_seed": cfg.master_seed, "coupling_seed": cfg.coupling_seed },
        "result": result,
    })
}

pub fn to_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

/// CSV to `out` with its JSON sidecar, or the CSV alone on standard output.
pub fn emit_csv(out: Option<&Path>, csv: &str, report: &Value) -> Result<(), CliError> {
    write_text(out, csv)?;
    if let Some(path) = out {
        write_text(Some(&sidecar_path(path)), &to_json(report))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_swaps_extension() {
        assert_eq!(sidecar_path(Path::new("out/spec.csv")), PathBuf::from("out/spec.json"));
        assert_eq!(sidecar_path(Path::new("run")), PathBuf::from("run.json"));
    }
}
