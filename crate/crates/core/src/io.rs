//! Canonical JSON helpers shared by every file format.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Serialize with object keys sorted, two-space indentation and a trailing newline.
///
/// Keys are sorted by round-tripping through `serde_json::Value`, whose map
/// type is ordered.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("in-memory value serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_canonical<T: Serialize>(path: impl AsRef<Path>, value: &T) -> std::io::Result<()> {
    fs::write(path, canonical_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, String> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
