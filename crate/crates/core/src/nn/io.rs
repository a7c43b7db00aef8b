//! Binary parameter container.
//!
//! Layout: the 8 bytes `SBGNNPAR`, a little-endian `u64` header length, a
//! UTF-8 JSON header `{"arch","dim","layers","tensors":[{"name","shape"}]}`,
//! then every tensor as little-endian `f64` in header order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::params::{init_params, Arch, GnnParams};
use super::NnError;

const MAGIC: &[u8; 8] = b"SBGNNPAR";

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    arch: String,
    dim: usize,
    layers: usize,
    tensors: Vec<TensorInfo>,
}

fn io_err(e: std::io::Error) -> NnError {
    NnError::Format(e.to_string())
}

pub fn write_params<W: Write>(params: &GnnParams, mut out: W) -> Result<(), NnError> {
    let tensors = params.tensors();
    let header = Header {
        arch: params.arch.to_string(),
        dim: params.dim,
        layers: params.layers.len(),
        tensors: tensors
            .iter()
            .map(|(name, shape, _)| TensorInfo {
                name: name.clone(),
                shape: shape.clone(),
            })
            .collect(),
    };
    let text = serde_json::to_vec(&header).map_err(|e| NnError::Format(e.to_string()))?;
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&(text.len() as u64).to_le_bytes()).map_err(io_err)?;
    out.write_all(&text).map_err(io_err)?;
    let mut buf = Vec::with_capacity(8 * params.num_params());
    for (_, _, data) in &tensors {
        for v in *data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf).map_err(io_err)
}

pub fn read_params<R: Read>(mut input: R) -> Result<GnnParams, NnError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(NnError::Format("not a parameter file".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len).map_err(io_err)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut text = vec![0u8; len];
    input.read_exact(&mut text).map_err(io_err)?;
    let header: Header = serde_json::from_slice(&text).map_err(|e| NnError::Format(e.to_string()))?;
    let arch: Arch = header.arch.parse().map_err(NnError::Format)?;
    if header.dim == 0 || header.layers == 0 {
        return Err(NnError::Format("dim and layers must be positive".into()));
    }
    let mut params = init_params(arch, header.dim, header.layers, 0);
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|(n, s, _)| (n, s))
        .collect();
    let found: Vec<(String, Vec<usize>)> = header.tensors.into_iter().map(|t| (t.name, t.shape)).collect();
    if expected != found {
        return Err(NnError::Format("tensor list does not match the architecture".into()));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() != 8 * params.num_params() {
        return Err(NnError::Format(format!(
            "expected {} parameter bytes, found {}",
            8 * params.num_params(),
            bytes.len()
        )));
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    params.set_flat(&flat);
    Ok(params)
}
