//! Per-frame MLP denoiser with hand-rolled backpropagation.
//!
//! Each frame of the sequence is denoised by a shared 4-layer MLP whose
//! input is the frame's temporal window (neighboring frames, edge-clamped)
//! plus a sinusoidal frame-position embedding. The diffusion step embedding
//! and the condition (text + mesh encoding) enter through a separate
//! projection added to the first-layer preactivation, so the wide condition
//! vector is processed once per sequence instead of once per frame.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::diffusion::Parameterization;
use crate::error::{Error, Result};
use crate::linalg;
use crate::repr::Layout;
use crate::rng;
use crate::schedule::DiffusionSchedule;

use super::{ConditionEmbedding, Denoiser};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MlpConfig {
    pub layout: Layout,
    pub n_frames: usize,
    /// Odd temporal window width in frames.
    pub window: usize,
    /// Hidden layer widths; the network has `hidden.len() + 1` weight
    /// layers counting the output projection.
    pub hidden: Vec<usize>,
    pub time_dim: usize,
    pub pos_dim: usize,
    pub text_dim: usize,
    pub mesh_dim: usize,
    pub parameterization: Parameterization,
}

impl MlpConfig {
    pub fn frame_dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn input_x_dim(&self) -> usize {
        self.window * self.frame_dim() + self.pos_dim
    }

    pub fn input_cond_dim(&self) -> usize {
        self.time_dim + self.text_dim + self.mesh_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.window % 2 == 0 || self.window == 0 {
            return Err(Error::ShapeMismatch {
                field: "window",
                expected: 1,
                got: self.window,
            });
        }
        if self.hidden.is_empty() {
            return Err(Error::ShapeMismatch {
                field: "hidden",
                expected: 1,
                got: 0,
            });
        }
        for (field, d) in [("time_dim", self.time_dim), ("pos_dim", self.pos_dim)] {
            if d == 0 || d % 2 != 0 {
                return Err(Error::ShapeMismatch {
                    field,
                    expected: 2,
                    got: d,
                });
            }
        }
        Ok(())
    }
}

/// Shape and flat-buffer location of one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TensorSpec {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// MLP denoiser with all parameters in one flat buffer plus the EMA shadow.
#[derive(Debug, Clone)]
pub struct MlpDenoiser {
    pub config: MlpConfig,
    pub params: Vec<f64>,
    /// Raw EMA shadow (zero-initialized); see [`MlpDenoiser::ema_model`].
    pub ema: Vec<f64>,
    pub ema_steps: usize,
    specs: Vec<TensorSpec>,
}

fn silu(x: f64) -> f64 {
    x / (1.0 + libm::exp(-x))
}

fn silu_prime(x: f64) -> f64 {
    let s = 1.0 / (1.0 + libm::exp(-x));
    s * (1.0 + x * (1.0 - s))
}

/// Sinusoidal embedding of a scalar position.
pub fn sin_embedding(pos: f64, dim: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), dim);
    let half = dim / 2;
    for k in 0..half {
        let freq = libm::exp(-libm::log(10000.0) * k as f64 / half as f64);
        out[2 * k] = libm::sin(pos * freq);
        out[2 * k + 1] = libm::cos(pos * freq);
    }
}

fn build_specs(config: &MlpConfig) -> Vec<TensorSpec> {
    let h0 = config.hidden[0];
    let last = *config.hidden.last().unwrap();
    let mut shapes: Vec<(String, usize, usize)> = vec![
        (String::from("wx.w"), h0, config.input_x_dim()),
        (String::from("wx.b"), 1, h0),
        (String::from("wc.w"), h0, config.input_cond_dim()),
    ];
    for i in 1..config.hidden.len() {
        shapes.push((format!("h{i}.w"), config.hidden[i], config.hidden[i - 1]));
        shapes.push((format!("h{i}.b"), 1, config.hidden[i]));
    }
    shapes.push((String::from("out.w"), config.frame_dim(), last));
    shapes.push((String::from("out.b"), 1, config.frame_dim()));

    let mut specs = Vec::with_capacity(shapes.len());
    let mut offset = 0usize;
    for (name, rows, cols) in shapes {
        specs.push(TensorSpec {
            name,
            offset,
            rows,
            cols,
        });
        offset += rows * cols;
    }
    specs
}

/// Activations captured during a forward pass, consumed by backprop.
pub struct ForwardCache {
    /// rows x input_x_dim
    x: Vec<f64>,
    cond: Vec<f64>,
    /// preactivations per hidden layer, rows x width
    pre: Vec<Vec<f64>>,
    /// activations per hidden layer
    act: Vec<Vec<f64>>,
    pub out: Vec<f64>,
    rows: usize,
}

impl MlpDenoiser {
    pub fn new(config: MlpConfig, seed: u64) -> Result<MlpDenoiser> {
        config.validate()?;
        let specs = build_specs(&config);
        let total: usize = specs.iter().map(|s| s.len()).sum();
        let mut params = vec![0.0; total];
        let mut r = rng::chacha(seed, &[0x6d6c70]);
        for spec in &specs {
            let slice = &mut params[spec.offset..spec.offset + spec.len()];
            if spec.name == "out.w" || spec.name == "out.b" || spec.name.ends_with(".b") {
                continue; // zero-initialized
            }
            let fan_in = if spec.name == "wx.w" || spec.name == "wc.w" {
                config.input_x_dim() + config.input_cond_dim()
            } else {
                spec.cols
            };
            let std = libm::sqrt(2.0 / fan_in as f64);
            for v in slice.iter_mut() {
                *v = std * rng::standard_normal(&mut r);
            }
        }
        let ema = vec![0.0; total];
        Ok(MlpDenoiser {
            config,
            params,
            ema,
            ema_steps: 0,
            specs,
        })
    }

    pub fn tensor_specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.specs
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.params[s.offset..s.offset + s.len()])
    }

    fn spec(&self, name: &str) -> &TensorSpec {
        self.specs
            .iter()
            .find(|s| s.name == name)
            .expect("tensor name")
    }

    /// EMA update `shadow = decay * shadow + (1 - decay) * live`.
    pub fn update_ema(&mut self, decay: f64) {
        for (s, p) in self.ema.iter_mut().zip(self.params.iter()) {
            *s = decay * *s + (1.0 - decay) * *p;
        }
        self.ema_steps += 1;
    }

    /// Copy of the model with bias-corrected EMA weights
    /// (`shadow / (1 - decay^steps)`); falls back to the live weights when
    /// no EMA updates have happened.
    pub fn ema_model(&self, decay: f64) -> MlpDenoiser {
        let mut m = self.clone();
        if self.ema_steps > 0 {
            let correction = 1.0 - libm::pow(decay, self.ema_steps as f64);
            for (p, s) in m.params.iter_mut().zip(self.ema.iter()) {
                *p = s / correction;
            }
        }
        m
    }

    fn build_input(&self, x_t: &[f64]) -> Vec<f64> {
        let d = self.config.frame_dim();
        let n = self.config.n_frames;
        let w = self.config.window;
        let w2 = (w / 2) as isize;
        let in_x = self.config.input_x_dim();
        let mut x = vec![0.0; n * in_x];
        let mut pos_emb = vec![0.0; self.config.pos_dim];
        for i in 0..n {
            let row = &mut x[i * in_x..(i + 1) * in_x];
            for (slot, off) in (-w2..=w2).enumerate() {
                let j = (i as isize + off).clamp(0, n as isize - 1) as usize;
                row[slot * d..(slot + 1) * d].copy_from_slice(&x_t[j * d..(j + 1) * d]);
            }
            sin_embedding(i as f64, self.config.pos_dim, &mut pos_emb);
            row[w * d..].copy_from_slice(&pos_emb);
        }
        x
    }

    fn build_cond(&self, t: usize, cond: &ConditionEmbedding) -> Vec<f64> {
        let mut c = vec![0.0; self.config.input_cond_dim()];
        sin_embedding(t as f64, self.config.time_dim, &mut c[..self.config.time_dim]);
        let td = self.config.time_dim;
        c[td..td + cond.text.len()].copy_from_slice(&cond.text);
        c[td + cond.text.len()..].copy_from_slice(&cond.mesh);
        c
    }

    /// Forward pass with cached activations; panics on shape mismatch in
    /// debug builds (the sampler and trainer guarantee shapes).
    pub fn forward(&self, x_t: &[f64], t: usize, cond: &ConditionEmbedding) -> ForwardCache {
        let d = self.config.frame_dim();
        let n = self.config.n_frames;
        debug_assert_eq!(x_t.len(), n * d, "x_t shape");
        debug_assert_eq!(cond.dim(), self.config.text_dim + self.config.mesh_dim);
        let x = self.build_input(x_t);
        let c = self.build_cond(t, cond);
        let rows = n;
        let nl = self.config.hidden.len();

        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(nl);
        let mut act: Vec<Vec<f64>> = Vec::with_capacity(nl);

        // layer 0: X wx^T + bx + wc c
        let h0 = self.config.hidden[0];
        let wx = self.tensor("wx.w").unwrap();
        let bx = self.tensor("wx.b").unwrap();
        let wc = self.tensor("wc.w").unwrap();
        let in_c = self.config.input_cond_dim();
        let mut cshift = vec![0.0; h0];
        linalg::matmul_xwt_acc(&c, 1, in_c, wc, h0, &mut cshift);
        let mut pre0 = vec![0.0; rows * h0];
        linalg::matmul_xwt_acc(&x, rows, self.config.input_x_dim(), wx, h0, &mut pre0);
        for r in 0..rows {
            let p = &mut pre0[r * h0..(r + 1) * h0];
            for j in 0..h0 {
                p[j] += bx[j] + cshift[j];
            }
        }
        let act0: Vec<f64> = pre0.iter().map(|v| silu(*v)).collect();
        pre.push(pre0);
        act.push(act0);

        for i in 1..nl {
            let (hin, hout) = (self.config.hidden[i - 1], self.config.hidden[i]);
            let w = self.tensor(&format!("h{i}.w")).unwrap();
            let b = self.tensor(&format!("h{i}.b")).unwrap();
            let mut p = vec![0.0; rows * hout];
            linalg::matmul_xwt_acc(&act[i - 1], rows, hin, w, hout, &mut p);
            for r in 0..rows {
                for j in 0..hout {
                    p[r * hout + j] += b[j];
                }
            }
            let a: Vec<f64> = p.iter().map(|v| silu(*v)).collect();
            pre.push(p);
            act.push(a);
        }

        let last = *self.config.hidden.last().unwrap();
        let wo = self.tensor("out.w").unwrap();
        let bo = self.tensor("out.b").unwrap();
        let mut out = vec![0.0; rows * d];
        linalg::matmul_xwt_acc(&act[nl - 1], rows, last, wo, d, &mut out);
        for r in 0..rows {
            for j in 0..d {
                out[r * d + j] += bo[j];
            }
        }
        ForwardCache {
            x,
            cond: c,
            pre,
            act,
            out,
            rows,
        }
    }

    /// Accumulate parameter gradients for `d_out = dL/d(output)` into
    /// `grads` (flat, same layout as `params`).
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grads: &mut [f64]) {
        debug_assert_eq!(grads.len(), self.params.len());
        let rows = cache.rows;
        let d = self.config.frame_dim();
        let nl = self.config.hidden.len();
        let last = *self.config.hidden.last().unwrap();

        // output layer
        {
            let spec_w = self.spec("out.w").clone();
            let spec_b = self.spec("out.b").clone();
            linalg::matmul_ytx_acc(
                d_out,
                &cache.act[nl - 1],
                rows,
                d,
                last,
                &mut grads[spec_w.offset..spec_w.offset + spec_w.len()],
            );
            linalg::col_sum_acc(
                d_out,
                rows,
                d,
                &mut grads[spec_b.offset..spec_b.offset + spec_b.len()],
            );
        }
        let wo = self.tensor("out.w").unwrap();
        let mut d_act = vec![0.0; rows * last];
        linalg::matmul_xw_acc(d_out, rows, d, wo, last, &mut d_act);

        for i in (0..nl).rev() {
            let width = self.config.hidden[i];
            // through the activation
            let mut d_pre = d_act;
            for (dp, pre) in d_pre.iter_mut().zip(cache.pre[i].iter()) {
                *dp *= silu_prime(*pre);
            }
            if i > 0 {
                let hin = self.config.hidden[i - 1];
                let spec_w = self.spec(&format!("h{i}.w")).clone();
                let spec_b = self.spec(&format!("h{i}.b")).clone();
                linalg::matmul_ytx_acc(
                    &d_pre,
                    &cache.act[i - 1],
                    rows,
                    width,
                    hin,
                    &mut grads[spec_w.offset..spec_w.offset + spec_w.len()],
                );
                linalg::col_sum_acc(
                    &d_pre,
                    rows,
                    width,
                    &mut grads[spec_b.offset..spec_b.offset + spec_b.len()],
                );
                let w = self.tensor(&format!("h{i}.w")).unwrap();
                let mut d_prev = vec![0.0; rows * hin];
                linalg::matmul_xw_acc(&d_pre, rows, width, w, hin, &mut d_prev);
                d_act = d_prev;
            } else {
                let in_x = self.config.input_x_dim();
                let in_c = self.config.input_cond_dim();
                let spec_wx = self.spec("wx.w").clone();
                let spec_bx = self.spec("wx.b").clone();
                let spec_wc = self.spec("wc.w").clone();
                linalg::matmul_ytx_acc(
                    &d_pre,
                    &cache.x,
                    rows,
                    width,
                    in_x,
                    &mut grads[spec_wx.offset..spec_wx.offset + spec_wx.len()],
                );
                let mut d_shift = vec![0.0; width];
                linalg::col_sum_acc(&d_pre, rows, width, &mut d_shift);
                for (g, v) in grads[spec_bx.offset..spec_bx.offset + spec_bx.len()]
                    .iter_mut()
                    .zip(d_shift.iter())
                {
                    *g += v;
                }
                // wc gradient: outer product of the broadcast shift gradient
                // with the condition vector
                let gwc = &mut grads[spec_wc.offset..spec_wc.offset + spec_wc.len()];
                for o in 0..width {
                    let g = d_shift[o];
                    if g == 0.0 {
                        continue;
                    }
                    for k in 0..in_c {
                        gwc[o * in_c + k] += g * cache.cond[k];
                    }
                }
                d_act = Vec::new();
            }
        }
    }
}

impl Denoiser for MlpDenoiser {
    fn parameterization(&self) -> Parameterization {
        self.config.parameterization
    }

    fn denoise(
        &self,
        x_t: &[f64],
        t: usize,
        _schedule: &DiffusionSchedule,
        cond: &ConditionEmbedding,
    ) -> Vec<f64> {
        self.forward(x_t, t, cond).out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config() -> MlpConfig {
        MlpConfig {
            layout: Layout::Full,
            n_frames: 4,
            window: 3,
            hidden: vec![16, 16, 16],
            time_dim: 8,
            pos_dim: 4,
            text_dim: 8,
            mesh_dim: 8,
            parameterization: Parameterization::X0Prediction,
        }
    }

    #[test]
    fn output_shape_matches_input() {
        let m = MlpDenoiser::new(tiny_config(), 3).unwrap();
        let n = m.config.n_frames * m.config.frame_dim();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.01).sin()).collect();
        let cond = ConditionEmbedding::null(8, 8);
        let cache = m.forward(&x, 5, &cond);
        assert_eq!(cache.out.len(), n);
    }

    #[test]
    fn zero_init_output_layer_predicts_zero() {
        let m = MlpDenoiser::new(tiny_config(), 3).unwrap();
        let n = m.config.n_frames * m.config.frame_dim();
        let x = vec![0.3; n];
        let cond = ConditionEmbedding::null(8, 8);
        let cache = m.forward(&x, 1, &cond);
        assert!(cache.out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn even_window_rejected() {
        let mut c = tiny_config();
        c.window = 2;
        assert!(MlpDenoiser::new(c, 0).is_err());
    }

    #[test]
    fn ema_single_update_formula() {
        let mut m = MlpDenoiser::new(tiny_config(), 3).unwrap();
        // seed the shadow with something nonzero first
        for s in m.ema.iter_mut() {
            *s = 0.5;
        }
        m.ema_steps = 10;
        let live = m.params.clone();
        m.update_ema(0.9999);
        for (s, v) in m.ema.iter().zip(live.iter()) {
            let expected = 0.9999 * 0.5 + 0.0001 * v;
            assert!((s - expected).abs() < 1e-15);
        }
    }
}
