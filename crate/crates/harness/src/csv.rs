//! Minimal CSV emission: one provenance comment line, a header, then rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bdris_core::SystemConfig;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex digits of the SHA-256 of the config's JSON form.
pub fn config_hash(config: &SystemConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_seconds(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn provenance_line(config: &SystemConfig, seed: u64) -> String {
    format!(
        "# config_hash={} seed={} version=bdris-{}",
        config_hash(config),
        seed,
        VERSION
    )
}

pub fn write_csv(path: &Path, comment: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "{comment}").map_err(io)?;
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}
