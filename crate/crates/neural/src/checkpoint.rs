//! Checkpoint format: 8-byte magic, little-endian u64 header length, JSON
//! header (spec, seeds, epoch, loss history, layer table, free-form
//! provenance), then per-layer raw little-endian `f32` payload — weights
//! then bias, in the network's canonical layer order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::unet::{ConvLayer, NetworkParams, NetworkSpec};
use crate::{NeuralError, Real, Tensor4};

const MAGIC: &[u8; 8] = b"RUNCKPT1";

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    spec: NetworkSpec,
    init_seed: u64,
    epoch: usize,
    loss_history: Vec<f64>,
    /// `(name, cout, cin, kh, kw)` per layer, in payload order.
    layers: Vec<(String, usize, usize, usize, usize)>,
    provenance: serde_json::Value,
}

/// Everything a checkpoint stores besides the parameters themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub epoch: usize,
    pub loss_history: Vec<f64>,
    /// Free-form JSON recorded by the producer (e.g. the experiment config).
    pub provenance: serde_json::Value,
}

pub fn save_checkpoint<T: Real>(
    path: impl AsRef<Path>,
    params: &NetworkParams<T>,
    meta: &CheckpointMeta,
) -> Result<(), NeuralError> {
    let path = path.as_ref();
    let header = HeaderJson {
        spec: params.spec,
        init_seed: params.init_seed,
        epoch: meta.epoch,
        loss_history: meta.loss_history.clone(),
        layers: params
            .layers
            .iter()
            .map(|l| {
                let (cout, cin, kh, kw) = l.weights.dims();
                (l.name.clone(), cout, cin, kh, kw)
            })
            .collect(),
        provenance: meta.provenance.clone(),
    };
    let header_bytes = serde_json::to_vec(&header).map_err(|e| NeuralError::Format {
        path: path.to_path_buf(),
        why: e.to_string(),
    })?;

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header_bytes);
    for layer in &params.layers {
        for v in layer.weights.data() {
            bytes.extend_from_slice(&(v.into_f64() as f32).to_le_bytes());
        }
        for v in &layer.bias {
            bytes.extend_from_slice(&(v.into_f64() as f32).to_le_bytes());
        }
    }
    rising_tomo::atomic_write(path, &bytes)?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(
    path: impl AsRef<Path>,
) -> Result<(NetworkParams<T>, CheckpointMeta), NeuralError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| NeuralError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let fail = |why: &str| NeuralError::Format {
        path: path.to_path_buf(),
        why: why.into(),
    };
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(fail("missing magic"));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + header_len {
        return Err(fail("truncated header"));
    }
    let header: HeaderJson = serde_json::from_slice(&bytes[16..16 + header_len])
        .map_err(|e| fail(&format!("bad header: {e}")))?;

    let mut offset = 16 + header_len;
    let mut layers = Vec::with_capacity(header.layers.len());
    for (name, cout, cin, kh, kw) in &header.layers {
        let wlen = cout * cin * kh * kw;
        let take = |offset: &mut usize, count: usize| -> Result<Vec<T>, NeuralError> {
            let need = count * 4;
            if bytes.len() < *offset + need {
                return Err(fail("truncated payload"));
            }
            let out = bytes[*offset..*offset + need]
                .chunks_exact(4)
                .map(|c| T::from_f64(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
                .collect();
            *offset += need;
            Ok(out)
        };
        let weights = Tensor4::new((*cout, *cin, *kh, *kw), take(&mut offset, wlen)?)?;
        let bias = take(&mut offset, *cout)?;
        layers.push(ConvLayer {
            name: name.clone(),
            weights,
            bias,
        });
    }
    if offset != bytes.len() {
        return Err(fail("trailing bytes after payload"));
    }
    let expected = header.spec.layer_shapes();
    if expected.len() != layers.len() {
        return Err(fail("layer table does not match spec"));
    }
    Ok((
        NetworkParams {
            spec: header.spec,
            init_seed: header.init_seed,
            layers,
        },
        CheckpointMeta {
            epoch: header.epoch,
            loss_history: header.loss_history,
            provenance: header.provenance,
        },
    ))
}
