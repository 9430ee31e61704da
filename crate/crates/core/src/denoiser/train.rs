//! Classifier-free diffusion training for the MLP denoiser: AdamW-style
//! decoupled weight decay, EMA shadow weights, condition dropout, and a
//! chunked gradient evaluation whose reduction order is fixed so parallel
//! and sequential execution produce bit-identical results.

use alloc::vec;
use alloc::vec::Vec;

use crate::diffusion::{forward_diffuse, Parameterization};
use crate::error::{Error, Result};
use crate::rng;
use crate::schedule::DiffusionSchedule;

use super::{ConditionEmbedding, MlpDenoiser};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Fixed chunk width for gradient accumulation. The batch is always split
/// into chunks of this size and chunk results are summed in order, so the
/// result does not depend on how chunks are scheduled.
pub const GRAD_CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub ema_decay: f64,
    pub cond_dropout: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 1e-4,
            weight_decay: 1e-2,
            batch_size: 32,
            ema_decay: 0.9999,
            cond_dropout: 0.1,
            steps: 1000,
            seed: 0,
        }
    }
}

/// One training example: normalized features plus its condition.
#[derive(Debug, Clone)]
pub struct TrainExample {
    /// `n_frames * frame_dim` normalized feature values.
    pub features: Vec<f64>,
    pub cond: ConditionEmbedding,
}

#[derive(Debug, Clone)]
pub struct TrainSet {
    pub examples: Vec<TrainExample>,
}

impl TrainSet {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// A prepared per-element training task (noise and dropout already drawn).
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub x_t: Vec<f64>,
    pub target: Vec<f64>,
    pub t: usize,
    pub cond: ConditionEmbedding,
}

#[derive(Debug)]
pub struct ChunkResult {
    pub loss_sum: f64,
    pub grad: Vec<f64>,
}

/// Evaluates chunks of training items; implementations may run chunks in
/// parallel but must return results in chunk order.
pub trait ChunkRunner {
    fn run(
        &self,
        model: &MlpDenoiser,
        schedule: &DiffusionSchedule,
        chunks: &[&[TrainItem]],
    ) -> Vec<ChunkResult>;
}

/// Straight-line chunk evaluation.
pub struct SequentialRunner;

impl ChunkRunner for SequentialRunner {
    fn run(
        &self,
        model: &MlpDenoiser,
        schedule: &DiffusionSchedule,
        chunks: &[&[TrainItem]],
    ) -> Vec<ChunkResult> {
        chunks
            .iter()
            .map(|chunk| loss_and_grad(model, schedule, chunk))
            .collect()
    }
}

/// Sum of per-item losses and gradients over one chunk. Loss per item is
/// the per-element mean squared error between the prediction and its target.
pub fn loss_and_grad(
    model: &MlpDenoiser,
    _schedule: &DiffusionSchedule,
    items: &[TrainItem],
) -> ChunkResult {
    let mut grad = vec![0.0; model.num_params()];
    let mut loss_sum = 0.0;
    for item in items {
        let cache = model.forward(&item.x_t, item.t, &item.cond);
        let n = cache.out.len() as f64;
        let mut d_out = vec![0.0; cache.out.len()];
        let mut loss = 0.0;
        for ((d, o), tgt) in d_out.iter_mut().zip(cache.out.iter()).zip(item.target.iter()) {
            let diff = o - tgt;
            loss += diff * diff;
            *d = 2.0 * diff / n;
        }
        loss_sum += loss / n;
        model.backward(&cache, &d_out, &mut grad);
    }
    ChunkResult { loss_sum, grad }
}

/// Optimizer state carried across steps (and across resumed runs).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrainerState {
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub step: usize,
}

impl TrainerState {
    pub fn new(num_params: usize) -> TrainerState {
        TrainerState {
            adam_m: vec![0.0; num_params],
            adam_v: vec![0.0; num_params],
            step: 0,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Diffusion trainer. Identical `(seed, config, dataset)` produce
/// bit-identical loss curves regardless of the chunk runner used.
pub struct Trainer {
    pub model: MlpDenoiser,
    pub config: TrainerConfig,
    pub state: TrainerState,
}

impl Trainer {
    pub fn new(model: MlpDenoiser, config: TrainerConfig) -> Trainer {
        let state = TrainerState::new(model.num_params());
        Trainer {
            model,
            config,
            state,
        }
    }

    /// Resume with previously saved optimizer state.
    pub fn with_state(model: MlpDenoiser, config: TrainerConfig, state: TrainerState) -> Trainer {
        assert_eq!(state.adam_m.len(), model.num_params());
        Trainer {
            model,
            config,
            state,
        }
    }

    /// Draw one batch of training items. Noise, step indices, and condition
    /// dropout come from streams keyed by `(seed, step)`.
    fn draw_batch(
        &self,
        data: &TrainSet,
        schedule: &DiffusionSchedule,
        step: usize,
    ) -> Result<Vec<TrainItem>> {
        let mut r = rng::chacha(self.config.seed, &[0x7472, step as u64]);
        let dim = self.model.config.frame_dim() * self.model.config.n_frames;
        let mut items = Vec::with_capacity(self.config.batch_size);
        for _ in 0..self.config.batch_size {
            let idx = rng::uniform_usize(&mut r, data.len());
            let example = &data.examples[idx];
            if example.features.len() != dim {
                return Err(Error::ShapeMismatch {
                    field: "features",
                    expected: dim,
                    got: example.features.len(),
                });
            }
            let t = 1 + rng::uniform_usize(&mut r, schedule.steps());
            let eps = rng::normal_vec(&mut r, dim);
            let x_t = forward_diffuse(&example.features, t, &eps, schedule)?;
            let target = match self.model.config.parameterization {
                Parameterization::EpsilonPrediction => eps,
                Parameterization::X0Prediction => example.features.clone(),
            };
            let drop = rng::uniform_f64(&mut r) < self.config.cond_dropout;
            let cond = if drop {
                ConditionEmbedding::null(example.cond.text.len(), example.cond.mesh.len())
            } else {
                example.cond.clone()
            };
            items.push(TrainItem {
                x_t,
                target,
                t,
                cond,
            });
        }
        Ok(items)
    }

    /// Run `config.steps` updates, returning the per-step loss curve.
    pub fn run(
        &mut self,
        data: &TrainSet,
        schedule: &DiffusionSchedule,
        runner: &dyn ChunkRunner,
    ) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut curve = Vec::with_capacity(self.config.steps);
        for _ in 0..self.config.steps {
            let loss = self.step(data, schedule, runner)?;
            curve.push(loss);
        }
        Ok(curve)
    }

    /// One optimization step; returns the batch loss.
    pub fn step(
        &mut self,
        data: &TrainSet,
        schedule: &DiffusionSchedule,
        runner: &dyn ChunkRunner,
    ) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let items = self.draw_batch(data, schedule, self.state.step)?;
        let chunks: Vec<&[TrainItem]> = items.chunks(GRAD_CHUNK).collect();
        let results = runner.run(&self.model, schedule, &chunks);

        let scale = 1.0 / self.config.batch_size as f64;
        let mut grad = vec![0.0; self.model.num_params()];
        let mut loss = 0.0;
        for res in &results {
            loss += res.loss_sum;
            for (g, r) in grad.iter_mut().zip(res.grad.iter()) {
                *g += r;
            }
        }
        loss *= scale;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                step: self.state.step,
            });
        }
        for g in grad.iter_mut() {
            *g *= scale;
        }

        // AdamW with decoupled weight decay
        self.state.step += 1;
        let t = self.state.step as f64;
        let lr = self.config.learning_rate;
        let wd = self.config.weight_decay;
        let bc1 = 1.0 - libm::pow(ADAM_BETA1, t);
        let bc2 = 1.0 - libm::pow(ADAM_BETA2, t);
        for i in 0..grad.len() {
            let g = grad[i];
            let m = ADAM_BETA1 * self.state.adam_m[i] + (1.0 - ADAM_BETA1) * g;
            let v = ADAM_BETA2 * self.state.adam_v[i] + (1.0 - ADAM_BETA2) * g * g;
            self.state.adam_m[i] = m;
            self.state.adam_v[i] = v;
            let update = (m / bc1) / (libm::sqrt(v / bc2) + ADAM_EPS) + wd * self.model.params[i];
            self.model.params[i] -= lr * update;
        }
        self.model.update_ema(self.config.ema_decay);
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::MlpConfig;
    use crate::repr::Layout;

    fn tiny_model(param: Parameterization, seed: u64) -> MlpDenoiser {
        let config = MlpConfig {
            layout: Layout::HandsOnly,
            n_frames: 3,
            window: 3,
            hidden: vec![24, 24, 24],
            time_dim: 8,
            pos_dim: 4,
            text_dim: 8,
            mesh_dim: 4,
            parameterization: param,
        };
        MlpDenoiser::new(config, seed).unwrap()
    }

    fn tiny_set(model: &MlpDenoiser, n: usize) -> TrainSet {
        let dim = model.config.frame_dim() * model.config.n_frames;
        let mut r = rng::chacha(123, &[0]);
        let examples = (0..n)
            .map(|i| {
                let features = rng::normal_vec(&mut r, dim);
                let mut cond = ConditionEmbedding::null(8, 4);
                cond.is_null = false;
                cond.text[i % 8] = 1.0;
                TrainExample { features, cond }
            })
            .collect();
        TrainSet { examples }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut model = tiny_model(Parameterization::X0Prediction, 5);
        // randomize every tensor (including the zero-initialized output
        // layer) so no gradient vanishes structurally
        let mut r = rng::chacha(9, &[1]);
        for p in model.params.iter_mut() {
            *p = 0.2 * rng::standard_normal(&mut r);
        }
        let dim = model.config.frame_dim() * model.config.n_frames;
        let schedule = DiffusionSchedule::cosine(10);
        let mut cond = ConditionEmbedding::null(8, 4);
        cond.is_null = false;
        cond.text[1] = 0.7;
        cond.mesh[2] = 0.1;
        let items = vec![
            TrainItem {
                x_t: rng::normal_vec(&mut r, dim),
                target: rng::normal_vec(&mut r, dim),
                t: 4,
                cond: cond.clone(),
            },
            TrainItem {
                x_t: rng::normal_vec(&mut r, dim),
                target: rng::normal_vec(&mut r, dim),
                t: 9,
                cond: ConditionEmbedding::null(8, 4),
            },
        ];
        let analytic = loss_and_grad(&model, &schedule, &items);
        let h = 1e-4;
        let mut worst = 0.0f64;
        for i in 0..model.num_params() {
            let orig = model.params[i];
            model.params[i] = orig + h;
            let lp = loss_and_grad(&model, &schedule, &items).loss_sum;
            model.params[i] = orig - h;
            let lm = loss_and_grad(&model, &schedule, &items).loss_sum;
            model.params[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let g = analytic.grad[i];
            let rel = (fd - g).abs() / (fd.abs() + g.abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "param {i}: analytic {g}, fd {fd}, rel {rel}");
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn training_is_deterministic() {
        let schedule = DiffusionSchedule::cosine(10);
        let run = || {
            let model = tiny_model(Parameterization::EpsilonPrediction, 7);
            let data = tiny_set(&model, 6);
            let mut trainer = Trainer::new(
                model,
                TrainerConfig {
                    learning_rate: 1e-3,
                    steps: 20,
                    batch_size: 8,
                    seed: 42,
                    ..TrainerConfig::default()
                },
            );
            trainer.run(&data, &schedule, &SequentialRunner).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b, "loss curves must be bit-identical");
    }

    #[test]
    fn single_example_overfit_drops_loss() {
        let schedule = DiffusionSchedule::cosine(10);
        let model = tiny_model(Parameterization::X0Prediction, 3);
        let data = tiny_set(&model, 1);
        let mut trainer = Trainer::new(
            model,
            TrainerConfig {
                learning_rate: 3e-3,
                weight_decay: 0.0,
                cond_dropout: 0.0,
                steps: 2000,
                batch_size: 16,
                seed: 1,
                ..TrainerConfig::default()
            },
        );
        let curve = trainer.run(&data, &schedule, &SequentialRunner).unwrap();
        let initial: f64 = curve[..20].iter().sum::<f64>() / 20.0;
        let last: f64 = curve[curve.len() - 20..].iter().sum::<f64>() / 20.0;
        assert!(
            last < 0.05 * initial,
            "loss should fall below 5% of initial: {initial} -> {last}"
        );
    }

    #[test]
    fn empty_dataset_rejected() {
        let schedule = DiffusionSchedule::cosine(4);
        let model = tiny_model(Parameterization::X0Prediction, 3);
        let mut trainer = Trainer::new(model, TrainerConfig::default());
        let empty = TrainSet { examples: vec![] };
        assert_eq!(
            trainer.run(&empty, &schedule, &SequentialRunner).unwrap_err(),
            Error::EmptyDataset
        );
    }
}
