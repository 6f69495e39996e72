use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::layering::DepthMap;

/// Encodes a grayscale little-endian PFM (rows stored bottom-up).
pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    let (w, h) = (depth.width(), depth.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for y in (0..h).rev() {
        for v in &depth.values()[y * w..(y + 1) * w] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Splits off the next whitespace-delimited header token.
fn token<'a>(bytes: &'a [u8], at: &mut usize) -> Option<&'a str> {
    while *at < bytes.len() && bytes[*at].is_ascii_whitespace() {
        *at += 1;
    }
    let start = *at;
    while *at < bytes.len() && !bytes[*at].is_ascii_whitespace() {
        *at += 1;
    }
    std::str::from_utf8(&bytes[start..*at]).ok().filter(|t| !t.is_empty())
}

/// Decodes a grayscale PFM. A negative scale marks little-endian data, a
/// positive one big-endian. Color (`PF`) files are rejected.
pub fn decode_pfm(bytes: &[u8], origin: &Path) -> Result<DepthMap> {
    let bad = |reason: String| Error::format(origin, reason);
    let mut at = 0;
    match token(bytes, &mut at) {
        Some("Pf") => {}
        Some("PF") => return Err(bad("color PFM (PF) is not a depth map".into())),
        other => return Err(bad(format!("not a PFM file (magic {other:?})"))),
    }
    let mut number = |what: &str| -> Result<String> {
        token(bytes, &mut at)
            .map(str::to_owned)
            .ok_or_else(|| bad(format!("missing {what}")))
    };
    let w: usize = number("width")?.parse().map_err(|_| bad("bad width".into()))?;
    let h: usize = number("height")?.parse().map_err(|_| bad("bad height".into()))?;
    let scale: f64 = number("scale")?.parse().map_err(|_| bad("bad scale".into()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad(format!("invalid scale {scale}")));
    }
    // exactly one whitespace byte separates the header from the raster
    at += 1;
    let body = bytes.get(at..).unwrap_or_default();
    if body.len() != 4 * w * h {
        return Err(bad(format!("expected {} data bytes, found {}", 4 * w * h, body.len())));
    }
    let little = scale < 0.0;
    let mut values = vec![0f32; w * h];
    for (i, b) in body.chunks_exact(4).enumerate() {
        let raw = [b[0], b[1], b[2], b[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (row, col) = (i / w, i % w);
        values[(h - 1 - row) * w + col] = v;
    }
    DepthMap::new(w, h, values).map_err(|e| bad(e.to_string()))
}

pub fn load_depth(path: &Path) -> Result<DepthMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes, path)
}

pub fn save_depth(depth: &DepthMap, path: &Path) -> Result<()> {
    let bytes = encode_pfm(depth);
    write_atomic(path, |w| w.write_all(&bytes))
}
