//! Network snapshots: a little-endian `u32` header length, a JSON header,
//! then every parameter as a little-endian `f32`.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::siren::{SirenNetwork, SirenShape};
use crate::error::{Error, Result};
use crate::io::write_atomic;

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    /// `(fan_in, fan_out)` per layer.
    layers: Vec<(usize, usize)>,
    seed: u64,
    omega0: f64,
    parameter_count: usize,
}

pub fn encode_checkpoint(net: &SirenNetwork) -> Vec<u8> {
    let shape = net.shape();
    let header = Header {
        schema_version: SCHEMA_VERSION,
        layers: shape.layer_dims(),
        seed: net.seed(),
        omega0: shape.omega0,
        parameter_count: net.parameters().len(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(4 + json.len() + 4 * net.parameters().len());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in net.parameters() {
        out.extend_from_slice(&(*p as f32).to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(mut bytes: &[u8], origin: &Path) -> Result<SirenNetwork> {
    let bad = |reason: &str| Error::format(origin, reason);
    let mut len = [0u8; 4];
    bytes.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
    let len = u32::from_le_bytes(len) as usize;
    if bytes.len() < len {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[..len]).map_err(|e| bad(&format!("bad header: {e}")))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(bad(&format!("unsupported schema version {}", header.schema_version)));
    }
    let body = &bytes[len..];
    let dims = &header.layers;
    if dims.len() < 2 || dims[0].0 != 2 {
        return Err(bad("layer list must start with a 2-input layer"));
    }
    let width = dims[0].1;
    let chained = dims.windows(2).all(|w| w[0].1 == w[1].0);
    let uniform = dims[..dims.len() - 1].iter().all(|d| d.1 == width);
    if !chained || !uniform {
        return Err(bad("layer shapes do not chain"));
    }
    let shape = SirenShape {
        hidden_layers: dims.len() - 1,
        hidden_width: width,
        channels: dims[dims.len() - 1].1,
        omega0: header.omega0,
    };
    let count = shape.parameter_count();
    if count != header.parameter_count || body.len() != 4 * count {
        return Err(bad("parameter block does not match the header"));
    }
    let params = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    SirenNetwork::from_parameters(shape, header.seed, params)
}

pub fn save_checkpoint(net: &SirenNetwork, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(net);
    write_atomic(path, |w| w.write_all(&bytes))
}

pub fn load_checkpoint(path: &Path) -> Result<SirenNetwork> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_rounds_to_f32() {
        let net = SirenNetwork::new(
            SirenShape {
                hidden_layers: 2,
                hidden_width: 8,
                channels: 3,
                omega0: 30.0,
            },
            9,
        )
        .unwrap();
        let bytes = encode_checkpoint(&net);
        let back = decode_checkpoint(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back.shape(), net.shape());
        assert_eq!(back.seed(), 9);
        for (a, b) in net.parameters().iter().zip(back.parameters()) {
            assert_eq!(*b, *a as f32 as f64);
        }
        assert_eq!(encode_checkpoint(&back), bytes);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1], Path::new("mem")).is_err());
    }
}
