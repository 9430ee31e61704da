//! Flat key=value run configuration. Files use one `key = value` per line
//! with `#` comments; CLI `--set key=value` flags override file values.
//! Unknown keys are rejected with the offending key name.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};

use crate::{usage, UsageError};

macro_rules! run_config {
    ($( $(#[doc = $doc:literal])* $key:ident : $ty:ty = $default:expr ),+ $(,)?) => {
        /// All runtime knobs with documented defaults.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( $(#[doc = $doc])* pub $key : $ty, )+
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $( $key : $default, )+ }
            }
        }

        impl RunConfig {
            /// Set one key from its string form. Unknown keys and malformed
            /// values are usage errors carrying the key name.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( stringify!($key) => {
                        self.$key = value.trim().parse::<$ty>().map_err(|e| {
                            UsageError(format!("config key `{key}`: bad value {value:?}: {e}"))
                        })?;
                        Ok(())
                    } )+
                    _ => usage(format!("unknown config key `{key}`")),
                }
            }

            /// Ordered key/value echo for manifests.
            pub fn to_pairs(&self) -> BTreeMap<String, String> {
                let mut m = BTreeMap::new();
                $( m.insert(stringify!($key).to_string(), self.$key.to_string()); )+
                m
            }
        }
    };
}

run_config! {
    /// Master seed; every command derives its streams from it.
    seed: u64 = 0,
    /// Diffusion steps T for training and sampling.
    schedule_t: usize = 400,
    /// Full-sequence length N.
    n_frames: usize = 150,
    /// Grasp-stage length N_g after alignment.
    n_grasp: usize = 60,
    /// Frame rate in Hz.
    fps: f64 = 30.0,
    /// Basis point set: seed, count, ball radius (m).
    bps_seed: u64 = 7,
    bps_count: usize = 1024,
    bps_radius: f64 = 0.15,
    /// Hashed bag-of-words text embedding bins.
    text_dim: usize = 64,
    /// Sinusoidal embeddings for diffusion step and frame position.
    time_dim: usize = 64,
    pos_dim: usize = 16,
    /// Temporal window (odd) of the per-frame denoiser.
    window: usize = 3,
    /// Hidden widths, comma separated.
    widths: Widths = Widths(vec![256, 256, 256]),
    /// Classifier-free guidance weight at sampling.
    cfg_weight: f64 = 2.5,
    /// Grasp-guidance scale (Eq. 4 shift uses scale * beta_tilde_t).
    grasp_scale: f64 = 20.0,
    /// Subsequence-guidance scale.
    subseq_scale: f64 = 1.0,
    /// Chain-step range where guidance applies.
    guide_t_lo: usize = 2,
    guide_t_hi: usize = 400,
    /// Optimizer settings.
    lr: f64 = 1e-4,
    weight_decay: f64 = 1e-2,
    batch_size: usize = 32,
    ema_decay: f64 = 0.9999,
    cond_dropout: f64 = 0.1,
    train_steps: usize = 600,
    /// Sample from EMA weights (bias-corrected) instead of live weights.
    use_ema: bool = true,
    /// Which text labels condition the interaction model.
    text_mode: TextMode = TextMode::Simple,
    /// Sequences per (action, handedness, object) cell in gen-data.
    per_cell: usize = 20,
    /// Metric settings.
    voxel_mm: f64 = 2.0,
    proxy_density: usize = 2,
    contact_mm: f64 = 5.0,
    motion_eps_mm: f64 = 2.0,
    motion_eps_deg: f64 = 1.0,
    move_thresh_cm: f64 = 5.0,
    div_subset: usize = 200,
    div_reps: usize = 20,
    /// Worker threads for sampling/eval/training gradient chunks.
    workers: usize = 2,
    /// Seed of the synthetic hand shapes.
    hand_seed: u64 = 11,
    /// Paths consumed by train/sample/eval (empty = unset).
    dataset_dir: String = String::new(),
    grasp_weights: String = String::new(),
    interaction_weights: String = String::new(),
    /// Enable grasp guidance at sampling (requires a reference file).
    use_grasp_guidance: bool = false,
    /// Interaction-stage imputation and subsequence guidance.
    use_imputation: bool = true,
    use_subseq_guidance: bool = true,
}

/// Comma-separated hidden widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Widths(pub Vec<usize>);

impl std::str::FromStr for Widths {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Result<Vec<usize>, _> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect();
        match v {
            Ok(v) if !v.is_empty() => Ok(Widths(v)),
            _ => Err(format!("expected comma-separated widths, got {s:?}")),
        }
    }
}

impl std::fmt::Display for Widths {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let strs: Vec<String> = self.0.iter().map(|w| w.to_string()).collect();
        write!(f, "{}", strs.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextMode {
    Simple,
    Detailed,
}

impl std::str::FromStr for TextMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simple" => Ok(TextMode::Simple),
            "detailed" => Ok(TextMode::Detailed),
            _ => Err(format!("expected `simple` or `detailed`, got {s:?}")),
        }
    }
}

impl std::fmt::Display for TextMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TextMode::Simple => "simple",
            TextMode::Detailed => "detailed",
        })
    }
}

impl RunConfig {
    /// Parse a key=value file (`#` comments, blank lines allowed).
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!(
                    "{}:{}: expected key = value, got {raw:?}",
                    path.display(),
                    lineno + 1
                ));
            };
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Apply `--set key=value` overrides.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        for p in pairs {
            let Some((k, v)) = p.split_once('=') else {
                return usage(format!("--set expects key=value, got {p:?}"));
            };
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut c = RunConfig::default();
        assert_eq!(c.schedule_t, 400);
        assert_eq!(c.widths.0, vec![256, 256, 256]);
        c.set("widths", "64,64").unwrap();
        assert_eq!(c.widths.0, vec![64, 64]);
        c.set("text_mode", "detailed").unwrap();
        assert_eq!(c.text_mode, TextMode::Detailed);
    }

    #[test]
    fn unknown_key_names_the_key() {
        let mut c = RunConfig::default();
        let err = c.set("not_a_key", "1").unwrap_err();
        assert!(err.to_string().contains("not_a_key"));
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn echo_is_total() {
        let c = RunConfig::default();
        let pairs = c.to_pairs();
        assert!(pairs.contains_key("cfg_weight"));
        assert_eq!(pairs["lr"], "0.0001");
    }
}
