//! Forward noising, posterior means, and reverse sampling steps for the
//! two denoiser output conventions.
//!
//! The forward process follows `x_t = sqrt(alpha_bar_t) x_0 +
//! sqrt(1 - alpha_bar_t) eps` with `alpha_bar_t = prod (1 - beta_s)`; the
//! reverse transitions use the fixed small variance `beta_tilde_t` and add
//! no noise at the final step.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::schedule::DiffusionSchedule;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Output convention of a trained denoiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Parameterization {
    /// The model predicts the injected noise.
    EpsilonPrediction,
    /// The model predicts the clean sample directly.
    X0Prediction,
}

/// A noised sample at step `t` (optionally keeping the noise that made it).
#[derive(Debug, Clone)]
pub struct NoisySample {
    pub x_t: Vec<f64>,
    pub t: usize,
    pub epsilon: Option<Vec<f64>>,
}

fn check_same(a: &[f64], b: &[f64], field: &'static str) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            field,
            expected: a.len(),
            got: b.len(),
        })
    }
}

/// `x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps`.
pub fn forward_diffuse(
    x0: &[f64],
    t: usize,
    epsilon: &[f64],
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    check_same(x0, epsilon, "epsilon")?;
    let ab = schedule.alpha_bar(t);
    let a = libm::sqrt(ab);
    let b = libm::sqrt(1.0 - ab);
    Ok(x0
        .iter()
        .zip(epsilon.iter())
        .map(|(x, e)| a * x + b * e)
        .collect())
}

/// Coefficients of the forward-posterior mean
/// `mu_tilde = c0 * x0 + ct * x_t`.
pub fn posterior_coefficients(t: usize, schedule: &DiffusionSchedule) -> (f64, f64) {
    let ab = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar(t - 1);
    let beta = schedule.beta(t);
    let c0 = libm::sqrt(ab_prev) * beta / (1.0 - ab);
    let ct = libm::sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab);
    (c0, ct)
}

/// Mean of the forward-process posterior `q(x_{t-1} | x_t, x0)`.
pub fn posterior_mean(
    x0: &[f64],
    x_t: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    check_same(x0, x_t, "x_t")?;
    let (c0, ct) = posterior_coefficients(t, schedule);
    Ok(x0
        .iter()
        .zip(x_t.iter())
        .map(|(x0i, xti)| c0 * x0i + ct * xti)
        .collect())
}

/// Denoised mean from a noise prediction:
/// `mu = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps) / sqrt(1 - beta_t)`.
pub fn mean_from_eps(
    x_t: &[f64],
    eps_pred: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    check_same(x_t, eps_pred, "eps_pred")?;
    let beta = schedule.beta(t);
    let scale = 1.0 / libm::sqrt(1.0 - beta);
    let k = beta / libm::sqrt(1.0 - schedule.alpha_bar(t));
    Ok(x_t
        .iter()
        .zip(eps_pred.iter())
        .map(|(x, e)| scale * (x - k * e))
        .collect())
}

/// Invert the forward closed form for the clean sample:
/// `x0 = (x_t - sqrt(1 - alpha_bar_t) eps) / sqrt(alpha_bar_t)`.
pub fn x0_from_eps(
    x_t: &[f64],
    eps: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    check_same(x_t, eps, "eps")?;
    let ab = schedule.alpha_bar(t);
    let a = libm::sqrt(ab);
    let b = libm::sqrt(1.0 - ab);
    Ok(x_t
        .iter()
        .zip(eps.iter())
        .map(|(x, e)| (x - b * e) / a)
        .collect())
}

/// Noise implied by a clean-sample prediction via the forward closed form.
pub fn eps_from_x0(
    x_t: &[f64],
    x0: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    check_same(x_t, x0, "x0")?;
    let ab = schedule.alpha_bar(t);
    let a = libm::sqrt(ab);
    let b = libm::sqrt(1.0 - ab);
    Ok(x_t
        .iter()
        .zip(x0.iter())
        .map(|(x, x0i)| (x - a * x0i) / b)
        .collect())
}

/// Reverse-step mean for the given parameterization.
pub fn reverse_mean(
    denoiser_output: &[f64],
    x_t: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
    parameterization: Parameterization,
) -> Result<Vec<f64>> {
    match parameterization {
        Parameterization::EpsilonPrediction => mean_from_eps(x_t, denoiser_output, t, schedule),
        Parameterization::X0Prediction => posterior_mean(denoiser_output, x_t, t, schedule),
    }
}

/// One reverse transition `x_t -> x_{t-1}` with fixed small variance.
/// `noise` must be a standard-normal draw of matching shape; it is ignored
/// at `t = 1` where the chain returns the mean.
pub fn reverse_step(
    denoiser_output: &[f64],
    x_t: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
    parameterization: Parameterization,
    noise: &[f64],
) -> Result<Vec<f64>> {
    check_same(x_t, noise, "noise")?;
    let mut mean = reverse_mean(denoiser_output, x_t, t, schedule, parameterization)?;
    if t > 1 {
        let sigma = libm::sqrt(schedule.beta_tilde(t));
        for (m, z) in mean.iter_mut().zip(noise.iter()) {
            *m += sigma * z;
        }
    }
    Ok(mean)
}

/// Mean squared error over all components.
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let s: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    s / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    #[test]
    fn forward_with_zero_noise_scales_x0() {
        let s = DiffusionSchedule::cosine(10);
        let x0 = vec![1.0, -2.0, 0.5];
        let z = vec![0.0; 3];
        let xt = forward_diffuse(&x0, 4, &z, &s).unwrap();
        let a = libm::sqrt(s.alpha_bar(4));
        for (x, x0i) in xt.iter().zip(x0.iter()) {
            assert!((x - a * x0i).abs() < 1e-15);
        }
        // and with x0 = 0 the output is sqrt(1-ab) * eps exactly
        let zeros = vec![0.0; 3];
        let e = vec![1.0, 2.0, -1.0];
        let xt = forward_diffuse(&zeros, 4, &e, &s).unwrap();
        let b = libm::sqrt(1.0 - s.alpha_bar(4));
        for (x, ei) in xt.iter().zip(e.iter()) {
            assert!((x - b * ei).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_scalar_hand_arithmetic() {
        // x0 = 2, alpha_bar = 0.25, eps = 1 -> x_t = 1 + sqrt(0.75)
        // build a schedule whose alpha_bar at t=2 is exactly 0.25
        let s = DiffusionSchedule::from_betas(vec![0.5, 0.5]);
        assert!((s.alpha_bar(2) - 0.25).abs() < 1e-15);
        let xt = forward_diffuse(&[2.0], 2, &[1.0], &s).unwrap();
        assert!((xt[0] - (1.0 + libm::sqrt(0.75))).abs() < 1e-15);
    }

    #[test]
    fn posterior_mean_at_t1_returns_x0() {
        let s = DiffusionSchedule::cosine(50);
        let x0 = vec![0.3, -1.2];
        let xt = vec![5.0, -4.0];
        let mu = posterior_mean(&x0, &xt, 1, &s).unwrap();
        for (m, x) in mu.iter().zip(x0.iter()) {
            assert!((m - x).abs() < 1e-12);
        }
        // zero in, zero out
        let mu0 = posterior_mean(&[0.0], &[0.0], 3, &s).unwrap();
        assert_eq!(mu0[0], 0.0);
    }

    #[test]
    fn posterior_mean_matches_direct_formula() {
        // T=4 schedule, independent arithmetic oracle
        let betas = vec![0.1, 0.2, 0.3, 0.4];
        let s = DiffusionSchedule::from_betas(betas.clone());
        let t = 3usize;
        let ab: f64 = (1.0 - 0.1) * (1.0 - 0.2) * (1.0 - 0.3);
        let ab_prev: f64 = (1.0 - 0.1) * (1.0 - 0.2);
        let (x0, xt) = (0.7, -0.4);
        let expected = libm::sqrt(ab_prev) * 0.3 / (1.0 - ab) * x0
            + libm::sqrt(1.0 - 0.3) * (1.0 - ab_prev) / (1.0 - ab) * xt;
        let mu = posterior_mean(&[x0], &[xt], t, &s).unwrap();
        assert!((mu[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn mean_from_eps_zero_prediction() {
        let s = DiffusionSchedule::cosine(20);
        let xt = vec![2.0, -1.0];
        let mu = mean_from_eps(&xt, &[0.0, 0.0], 5, &s).unwrap();
        let scale = 1.0 / libm::sqrt(1.0 - s.beta(5));
        for (m, x) in mu.iter().zip(xt.iter()) {
            assert!((m - scale * x).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_from_eps_scalar_hand_arithmetic() {
        let s = DiffusionSchedule::from_betas(vec![0.1, 0.2]);
        // t=2: beta=0.2, alpha_bar=0.72
        let (xt, e) = (1.5, -0.3);
        let expected = (xt - 0.2 / libm::sqrt(1.0 - 0.72) * e) / libm::sqrt(0.8);
        let mu = mean_from_eps(&[xt], &[e], 2, &s).unwrap();
        assert!((mu[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn eps_route_equals_posterior_route() {
        // feeding the true eps reproduces the posterior mean of the true x0
        let s = DiffusionSchedule::cosine(100);
        let mut r = rng::chacha(9, &[3]);
        for _ in 0..200 {
            let t = 1 + rng::uniform_usize(&mut r, 100);
            let x0 = rng::normal_vec(&mut r, 4);
            let eps = rng::normal_vec(&mut r, 4);
            let xt = forward_diffuse(&x0, t, &eps, &s).unwrap();
            let mu_eps = mean_from_eps(&xt, &eps, t, &s).unwrap();
            let mu_post = posterior_mean(&x0, &xt, t, &s).unwrap();
            for (a, b) in mu_eps.iter().zip(mu_post.iter()) {
                assert!((a - b).abs() < 1e-9, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reverse_step_adds_no_noise_at_t1() {
        let s = DiffusionSchedule::cosine(10);
        let x0_pred = vec![0.4];
        let xt = vec![1.0];
        let noise = vec![100.0];
        let out = reverse_step(&x0_pred, &xt, 1, &s, Parameterization::X0Prediction, &noise)
            .unwrap();
        let mu = posterior_mean(&x0_pred, &xt, 1, &s).unwrap();
        assert_eq!(out, mu);
    }

    #[test]
    fn parameterizations_agree_with_consistent_predictions() {
        let s = DiffusionSchedule::cosine(400);
        let mut r = rng::chacha(12, &[4]);
        for _ in 0..300 {
            let t = 1 + rng::uniform_usize(&mut r, 400);
            let xt = rng::normal_vec(&mut r, 3);
            let x0_pred = rng::normal_vec(&mut r, 3);
            let eps_pred = eps_from_x0(&xt, &x0_pred, t, &s).unwrap();
            let z = vec![0.0; 3];
            let a = reverse_step(&eps_pred, &xt, t, &s, Parameterization::EpsilonPrediction, &z)
                .unwrap();
            let b =
                reverse_step(&x0_pred, &xt, t, &s, Parameterization::X0Prediction, &z).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-9, "t={t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn marginal_consistency_of_single_step_kernel() {
        // compounding q(x_t | x_{t-1}) = N(sqrt(1-beta_t) x_{t-1}, beta_t)
        // matches the closed form in mean and variance (Monte Carlo)
        let s = DiffusionSchedule::cosine(8);
        let k = 5usize;
        let x0 = 1.7;
        let n = 10000;
        let mut r = rng::chacha(14, &[5]);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let mut x = x0;
            for t in 1..=k {
                let b = s.beta(t);
                x = libm::sqrt(1.0 - b) * x + libm::sqrt(b) * rng::standard_normal(&mut r);
            }
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let ab = s.alpha_bar(k);
        let expect_mean = libm::sqrt(ab) * x0;
        let expect_var = 1.0 - ab;
        // 3 sigma bands for the Monte Carlo estimates
        let mean_tol = 3.0 * libm::sqrt(expect_var / n as f64);
        let var_tol = 3.0 * expect_var * libm::sqrt(2.0 / n as f64);
        assert!((mean - expect_mean).abs() < mean_tol, "{mean} vs {expect_mean}");
        assert!((var - expect_var).abs() < var_tol, "{var} vs {expect_var}");
    }
}
