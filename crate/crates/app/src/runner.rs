//! Parallel gradient evaluation. Chunk boundaries are fixed by the trainer
//! (`GRAD_CHUNK`) and results are reduced in chunk order, so this runner
//! produces bit-identical results to the sequential one for any pool size.

use graspdiff_core::denoiser::{
    loss_and_grad, ChunkResult, ChunkRunner, MlpDenoiser, TrainItem,
};
use graspdiff_core::schedule::DiffusionSchedule;
use rayon::prelude::*;

pub struct RayonRunner {
    pool: rayon::ThreadPool,
}

impl RayonRunner {
    pub fn new(workers: usize) -> RayonRunner {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .expect("thread pool");
        RayonRunner { pool }
    }
}

impl ChunkRunner for RayonRunner {
    fn run(
        &self,
        model: &MlpDenoiser,
        schedule: &DiffusionSchedule,
        chunks: &[&[TrainItem]],
    ) -> Vec<ChunkResult> {
        self.pool.install(|| {
            chunks
                .par_iter()
                .map(|chunk| loss_and_grad(model, schedule, chunk))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use graspdiff_core::denoiser::{
        MlpConfig, SequentialRunner, TrainExample, TrainSet, Trainer, TrainerConfig,
        ConditionEmbedding,
    };
    use graspdiff_core::diffusion::Parameterization;
    use graspdiff_core::repr::Layout;
    use graspdiff_core::rng;

    #[test]
    fn parallel_runner_matches_sequential_bitwise() {
        let config = MlpConfig {
            layout: Layout::HandsOnly,
            n_frames: 3,
            window: 3,
            hidden: vec![16, 16],
            time_dim: 8,
            pos_dim: 4,
            text_dim: 8,
            mesh_dim: 4,
            parameterization: Parameterization::EpsilonPrediction,
        };
        let dim = config.layout.dim() * config.n_frames;
        let mut r = rng::chacha(5, &[0]);
        let data = TrainSet {
            examples: (0..10)
                .map(|_| TrainExample {
                    features: rng::normal_vec(&mut r, dim),
                    cond: ConditionEmbedding::null(8, 4),
                })
                .collect(),
        };
        let schedule = DiffusionSchedule::cosine(10);
        let tconf = TrainerConfig {
            steps: 8,
            batch_size: 16,
            learning_rate: 1e-3,
            seed: 3,
            ..TrainerConfig::default()
        };
        let run = |runner: &dyn ChunkRunner| {
            let model = MlpDenoiser::new(config.clone(), 1).unwrap();
            let mut t = Trainer::new(model, tconf.clone());
            let curve = t.run(&data, &schedule, runner).unwrap();
            (curve, t.model.params)
        };
        let (c1, p1) = run(&SequentialRunner);
        let (c2, p2) = run(&RayonRunner::new(4));
        assert_eq!(c1, c2, "loss curves differ between runners");
        assert_eq!(p1, p2, "parameters differ between runners");
    }
}
