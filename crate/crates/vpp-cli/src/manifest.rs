//! Run manifests recorded in every output directory.

use std::path::Path;

use serde_json::Value;

use crate::CliError;

pub const TOOL_NAME: &str = "vpp";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The tool identity block shared by all manifests.
pub fn tool() -> Value {
    serde_json::json!({ "name": TOOL_NAME, "version": TOOL_VERSION })
}

/// Serializes `manifest` as pretty-printed JSON with sorted keys into
/// `dir/manifest.json`. Sorted keys and fixed formatting keep the bytes
/// reproducible across runs.
pub fn write(dir: &Path, manifest: &Value) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    crate::write_file(&path, &text)
}
