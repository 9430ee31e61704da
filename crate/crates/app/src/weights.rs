//! Versioned binary weights container.
//!
//! Layout: magic `GDW1`, little-endian u32 header length, JSON header
//! (model config, layer manifest, normalization statistics, trainer
//! state), then all tensor payloads as little-endian f32:
//! `params | ema | adam_m | adam_v`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use graspdiff_core::denoiser::{MlpConfig, MlpDenoiser, TensorSpec, TrainerState};
use graspdiff_core::repr::NormStats;
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"GDW1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsHeader {
    pub config: MlpConfig,
    /// Layer manifest: name, shape, and element offset of each tensor
    /// within one parameter block.
    pub tensors: Vec<TensorSpec>,
    pub norm: NormStats,
    pub train: TrainMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMeta {
    pub steps_done: usize,
    pub ema_decay: f64,
    pub ema_steps: usize,
}

pub struct WeightsFile {
    pub model: MlpDenoiser,
    pub norm: NormStats,
    pub state: TrainerState,
    pub meta: TrainMeta,
}

fn push_f32(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
}

fn read_f32(bytes: &[u8], n: usize, cursor: &mut usize) -> Result<Vec<f64>> {
    let need = n * 4;
    if bytes.len() < *cursor + need {
        bail!("weights payload truncated");
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let o = *cursor + 4 * i;
        let v = f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        out.push(v as f64);
    }
    *cursor += need;
    Ok(out)
}

pub fn encode(
    model: &MlpDenoiser,
    norm: &NormStats,
    state: &TrainerState,
    ema_decay: f64,
) -> Vec<u8> {
    let header = WeightsHeader {
        config: model.config.clone(),
        tensors: model.tensor_specs().to_vec(),
        norm: norm.clone(),
        train: TrainMeta {
            steps_done: state.step,
            ema_decay,
            ema_steps: model.ema_steps,
        },
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    push_f32(&mut out, &model.params);
    push_f32(&mut out, &model.ema);
    push_f32(&mut out, &state.adam_m);
    push_f32(&mut out, &state.adam_v);
    out
}

pub fn decode(bytes: &[u8]) -> Result<WeightsFile> {
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        bail!("not a GDW1 weights file");
    }
    let hlen = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    if bytes.len() < 8 + hlen {
        bail!("weights header truncated");
    }
    let header: WeightsHeader =
        serde_json::from_slice(&bytes[8..8 + hlen]).context("weights header JSON")?;
    let mut model = MlpDenoiser::new(header.config.clone(), 0)
        .map_err(|e| anyhow::anyhow!("invalid model config in weights: {e}"))?;
    let n = model.num_params();
    let mut cursor = 8 + hlen;
    model.params = read_f32(bytes, n, &mut cursor)?;
    model.ema = read_f32(bytes, n, &mut cursor)?;
    let adam_m = read_f32(bytes, n, &mut cursor)?;
    let adam_v = read_f32(bytes, n, &mut cursor)?;
    model.ema_steps = header.train.ema_steps;
    let state = TrainerState {
        adam_m,
        adam_v,
        step: header.train.steps_done,
    };
    Ok(WeightsFile {
        model,
        norm: header.norm.clone(),
        state,
        meta: header.train,
    })
}

pub fn write_weights(
    path: &Path,
    model: &MlpDenoiser,
    norm: &NormStats,
    state: &TrainerState,
    ema_decay: f64,
) -> Result<()> {
    std::fs::write(path, encode(model, norm, state, ema_decay))
        .with_context(|| format!("writing weights {}", path.display()))
}

pub fn read_weights(path: &Path) -> Result<WeightsFile> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading weights {}", path.display()))?;
    decode(&bytes)
}

/// Human-readable header summary for `inspect`.
pub fn describe(file: &WeightsFile) -> String {
    let c = &file.model.config;
    let mut s = String::new();
    s.push_str(&format!(
        "GDW1 model: layout={:?} n_frames={} window={} hidden={:?}\n",
        c.layout, c.n_frames, c.window, c.hidden
    ));
    s.push_str(&format!(
        "parameterization={:?} time_dim={} pos_dim={} text_dim={} mesh_dim={}\n",
        c.parameterization, c.time_dim, c.pos_dim, c.text_dim, c.mesh_dim
    ));
    s.push_str(&format!(
        "params={} trained_steps={} ema_steps={} ema_decay={}\n",
        file.model.num_params(),
        file.meta.steps_done,
        file.meta.ema_steps,
        file.meta.ema_decay
    ));
    s.push_str("tensors:\n");
    for t in file.model.tensor_specs() {
        s.push_str(&format!("  {:8} {} x {}\n", t.name, t.rows, t.cols));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use graspdiff_core::diffusion::Parameterization;
    use graspdiff_core::repr::Layout;

    fn tiny() -> MlpDenoiser {
        MlpDenoiser::new(
            MlpConfig {
                layout: Layout::HandsOnly,
                n_frames: 3,
                window: 1,
                hidden: vec![8],
                time_dim: 4,
                pos_dim: 2,
                text_dim: 4,
                mesh_dim: 4,
                parameterization: Parameterization::EpsilonPrediction,
            },
            7,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_f32_quantized_values() {
        let mut model = tiny();
        model.ema_steps = 5;
        for (i, p) in model.params.iter_mut().enumerate() {
            *p = (i as f64) * 0.001 - 0.3;
        }
        let norm = NormStats::identity(192);
        let mut state = TrainerState::new(model.num_params());
        state.step = 42;
        state.adam_m[3] = 0.25;
        let bytes = encode(&model, &norm, &state, 0.9999);
        assert_eq!(&bytes[0..4], b"GDW1");
        let back = decode(&bytes).unwrap();
        assert_eq!(back.state.step, 42);
        assert_eq!(back.model.ema_steps, 5);
        for (a, b) in model.params.iter().zip(back.model.params.iter()) {
            assert_eq!(*a as f32, *b as f32);
            assert_eq!(*b, (*a as f32) as f64, "payload is exactly f32");
        }
        assert_eq!(back.state.adam_m[3], 0.25);
        // a second encode of the decoded state is byte-identical
        let bytes2 = encode(&back.model, &back.norm, &back.state, 0.9999);
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(decode(b"NOPE....").is_err());
    }
}
