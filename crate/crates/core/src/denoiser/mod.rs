//! Denoisers and their conditioning: a deterministic hashed bag-of-words
//! text embedding plus a BPS mesh encoding form the condition; denoising is
//! provided by an analytic Gaussian oracle (for sampler verification) and a
//! trainable MLP with hand-rolled backpropagation.

mod mlp;
mod train;

pub use mlp::{MlpConfig, MlpDenoiser, TensorSpec};
pub use train::{
    loss_and_grad, ChunkResult, ChunkRunner, SequentialRunner, TrainExample, TrainSet,
    TrainerConfig, TrainerState, TrainItem, Trainer, GRAD_CHUNK,
};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::diffusion::Parameterization;
use crate::error::Result;
use crate::geometry::{BasisPointSet, TriangleMesh};
use crate::schedule::DiffusionSchedule;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Conditioning input: an L2-normalized hashed bag-of-words text embedding
/// and a basis-point-set encoding of the object mesh. The null embedding
/// (all zeros, `is_null = true`) is the unconditional branch used for
/// classifier-free training and inference.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConditionEmbedding {
    pub text: Vec<f64>,
    pub mesh: Vec<f64>,
    pub is_null: bool,
}

impl ConditionEmbedding {
    pub fn null(text_dim: usize, mesh_dim: usize) -> ConditionEmbedding {
        ConditionEmbedding {
            text: vec![0.0; text_dim],
            mesh: vec![0.0; mesh_dim],
            is_null: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.text.len() + self.mesh.len()
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(token: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in token.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Hash a prompt into `text_dim` bins: lowercase, strip punctuation, count
/// tokens per bin, L2-normalize. Deterministic across platforms.
pub fn embed_text(prompt: &str, text_dim: usize) -> Vec<f64> {
    let mut bins = vec![0.0; text_dim];
    let mut token = String::new();
    let flush = |token: &mut String, bins: &mut Vec<f64>| {
        if !token.is_empty() {
            let h = fnv1a(token.as_str());
            bins[(h % text_dim as u64) as usize] += 1.0;
            token.clear();
        }
    };
    for ch in prompt.chars() {
        if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                token.push(lc);
            }
        } else {
            flush(&mut token, &mut bins);
        }
    }
    flush(&mut token, &mut bins);
    let norm: f64 = libm::sqrt(bins.iter().map(|x| x * x).sum());
    if norm > 0.0 {
        for b in bins.iter_mut() {
            *b /= norm;
        }
    }
    bins
}

/// Condition from a prompt and an object mesh.
pub fn embed_condition(
    prompt: &str,
    mesh: &TriangleMesh,
    bps: &BasisPointSet,
    text_dim: usize,
) -> Result<ConditionEmbedding> {
    Ok(ConditionEmbedding {
        text: embed_text(prompt, text_dim),
        mesh: bps.encode(mesh)?,
        is_null: false,
    })
}

/// Classifier-free combination: `uncond + w * (cond - uncond)`.
pub fn cfg_combine(pred_cond: &[f64], pred_uncond: &[f64], w: f64) -> Vec<f64> {
    debug_assert_eq!(pred_cond.len(), pred_uncond.len());
    pred_cond
        .iter()
        .zip(pred_uncond.iter())
        .map(|(c, u)| u + w * (c - u))
        .collect()
}

/// A denoiser predicts either the injected noise or the clean sample from
/// `(x_t, t, condition)`.
pub trait Denoiser {
    fn parameterization(&self) -> Parameterization;

    fn denoise(
        &self,
        x_t: &[f64],
        t: usize,
        schedule: &DiffusionSchedule,
        cond: &ConditionEmbedding,
    ) -> Vec<f64>;
}

/// Exact posterior-mean denoiser for factorized Gaussian data
/// `N(mean, var)`; used as a ground-truth oracle for the sampler.
#[derive(Debug, Clone)]
pub struct AnalyticGaussianDenoiser {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub parameterization: Parameterization,
}

impl AnalyticGaussianDenoiser {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> AnalyticGaussianDenoiser {
        assert_eq!(mean.len(), var.len());
        assert!(var.iter().all(|v| *v > 0.0));
        AnalyticGaussianDenoiser {
            mean,
            var,
            parameterization: Parameterization::X0Prediction,
        }
    }

    /// `E[x0 | x_t]` per dimension:
    /// `(sqrt(ab) var x_t + (1 - ab) mean) / (ab var + (1 - ab))`.
    pub fn predict_x0(&self, x_t: &[f64], t: usize, schedule: &DiffusionSchedule) -> Vec<f64> {
        let ab = schedule.alpha_bar(t);
        let sab = libm::sqrt(ab);
        x_t.iter()
            .enumerate()
            .map(|(i, x)| {
                let dim = i % self.mean.len();
                let v = self.var[dim];
                (sab * v * x + (1.0 - ab) * self.mean[dim]) / (ab * v + (1.0 - ab))
            })
            .collect()
    }
}

impl Denoiser for AnalyticGaussianDenoiser {
    fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    fn denoise(
        &self,
        x_t: &[f64],
        t: usize,
        schedule: &DiffusionSchedule,
        _cond: &ConditionEmbedding,
    ) -> Vec<f64> {
        let x0 = self.predict_x0(x_t, t, schedule);
        match self.parameterization {
            Parameterization::X0Prediction => x0,
            Parameterization::EpsilonPrediction => {
                crate::diffusion::eps_from_x0(x_t, &x0, t, schedule)
                    .expect("shapes match by construction")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion;

    #[test]
    fn empty_prompt_is_zero_but_not_null() {
        let e = embed_text("", 64);
        assert!(e.iter().all(|x| *x == 0.0));
        let c = ConditionEmbedding {
            text: e,
            mesh: vec![0.0; 4],
            is_null: false,
        };
        assert!(!c.is_null);
    }

    #[test]
    fn embedding_is_deterministic_and_word_sensitive() {
        let a = embed_text("The person lifts the sphere.", 64);
        let b = embed_text("The person lifts the sphere.", 64);
        assert_eq!(a, b);
        let c = embed_text("The person shakes the sphere.", 64);
        assert_ne!(a, c, "content word must land in a different bin");
        // normalization
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cfg_combine_endpoints() {
        let c = [3.0];
        let u = [1.0];
        assert_eq!(cfg_combine(&c, &u, 1.0), vec![3.0]);
        assert_eq!(cfg_combine(&c, &u, 0.0), vec![1.0]);
        assert_eq!(cfg_combine(&c, &u, 2.0), vec![5.0]);
    }

    #[test]
    fn analytic_denoiser_limits() {
        let s = DiffusionSchedule::cosine(400);
        let d = AnalyticGaussianDenoiser::new(vec![1.0], vec![4.0]);
        // alpha_bar near 1: prediction approaches x_t
        let x0 = d.predict_x0(&[2.0], 1, &s);
        assert!((x0[0] - 2.0).abs() < 0.05, "{}", x0[0]);
        // alpha_bar near 0: prediction approaches the data mean
        let x0 = d.predict_x0(&[2.0], 400, &s);
        assert!((x0[0] - 1.0).abs() < 0.05, "{}", x0[0]);
    }

    #[test]
    fn analytic_denoiser_scalar_hand_case() {
        // mean 1, var 4, alpha_bar 0.5, x_t 2
        let s = DiffusionSchedule::from_betas(vec![0.5]);
        assert!((s.alpha_bar(1) - 0.5).abs() < 1e-15);
        let d = AnalyticGaussianDenoiser::new(vec![1.0], vec![4.0]);
        let got = d.predict_x0(&[2.0], 1, &s)[0];
        let expected = (libm::sqrt(0.5) * 4.0 * 2.0 + 0.5 * 1.0) / (0.5 * 4.0 + 0.5);
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn analytic_denoiser_eps_x0_consistency() {
        let s = DiffusionSchedule::cosine(100);
        let mut d = AnalyticGaussianDenoiser::new(vec![0.3, -0.7], vec![1.5, 0.8]);
        let xt = [0.9, -0.2];
        let t = 37;
        let x0 = d.predict_x0(&xt, t, &s);
        d.parameterization = Parameterization::EpsilonPrediction;
        let null = ConditionEmbedding::null(1, 1);
        let eps = d.denoise(&xt, t, &s, &null);
        let x0_back = diffusion::x0_from_eps(&xt, &eps, t, &s).unwrap();
        for (a, b) in x0.iter().zip(x0_back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
