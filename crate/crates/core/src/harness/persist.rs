//! Versioned on-disk format for [`NetworkState`].
//!
//! The file is UTF-8 JSON:
//!
//! ```text
//! { "format": "hprnnpb-state", "version": 1, "state": { "config": {..},
//!   "weights": { "w_d": {"v":1,"dim":[rows,cols],"data":[row-major..]}, .. },
//!   "rho_d": {..}, "rho_v": {..}, "lr": {..}, "prev_grad": {..} } }
//! ```
//!
//! Floats are written in shortest round-trip form, so save→load is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::net::NetworkState;

pub const STATE_FORMAT: &str = "hprnnpb-state";
pub const STATE_VERSION: u32 = 1;

#[derive(Serialize)]
struct StateFileRef<'a> {
    format: &'a str,
    version: u32,
    state: &'a NetworkState,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    #[allow(dead_code)]
    format: String,
    #[allow(dead_code)]
    version: u32,
    state: NetworkState,
}

pub fn state_to_string(state: &NetworkState) -> Result<String> {
    serde_json::to_string(&StateFileRef {
        format: STATE_FORMAT,
        version: STATE_VERSION,
        state,
    })
    .map_err(|e| Error::Persistence(format!("cannot encode state: {e}")))
}

pub fn state_from_str(text: &str) -> Result<NetworkState> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Persistence(format!("state file is not valid JSON: {e}")))?;
    match value.get("format").and_then(Value::as_str) {
        Some(STATE_FORMAT) => {}
        other => {
            return Err(Error::Persistence(format!(
                "unexpected format tag {other:?}, expected {STATE_FORMAT:?}"
            )))
        }
    }
    let version = value
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Persistence("state file has no version".into()))?;
    if version != u64::from(STATE_VERSION) {
        return Err(Error::Version {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: STATE_VERSION,
        });
    }
    let file: StateFile = serde_json::from_value(value)
        .map_err(|e| Error::Persistence(format!("malformed state file: {e}")))?;
    file.state
        .validate()
        .map_err(|e| Error::Persistence(format!("inconsistent state: {e}")))?;
    Ok(file.state)
}

pub fn save_state(state: &NetworkState, path: &Path) -> Result<()> {
    write_atomic(path, state_to_string(state)?.as_bytes())
}

pub fn load_state(path: &Path) -> Result<NetworkState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    state_from_str(&text)
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Persistence(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
