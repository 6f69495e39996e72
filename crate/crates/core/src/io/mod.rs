//! File formats: 8/16-bit PNG and binary PNM images, PFM depth maps,
//! trajectory CSV and JSON configuration. Every writer goes through
//! [`write_atomic`] so an interrupted run never leaves a partial file.

mod config;
mod depth;
mod image_file;
mod trajectory_file;

use std::io::{BufWriter, Write};
use std::path::Path;

pub use config::{load_fit_config, load_run_config, RunConfig};
pub use depth::{decode_pfm, encode_pfm, load_depth, save_depth};
pub use image_file::{load_image, save_image, BitDepth};
pub use trajectory_file::{load_trajectory, parse_trajectory, save_trajectory, write_trajectory};

use crate::error::{Error, Result};

/// Schema version stamped into every CSV and JSON report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Writes through a temporary file in the destination directory and
/// renames it into place once `body` succeeds.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Serializes `value` as pretty JSON, atomically.
pub fn save_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_vec_pretty(value).map_err(|e| Error::format(path, e))?;
    write_atomic(path, |w| w.write_all(&text))
}
