//! Noise schedule tables: beta_t, alpha_bar_t, and the posterior variance
//! beta_tilde_t for T steps. Step indices are 1-based (`t` in `[1, T]`).

use alloc::vec::Vec;

/// Precomputed schedule driving both the forward and reverse processes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    steps: usize,
    beta: Vec<f64>,
    alpha_bar: Vec<f64>,
    beta_tilde: Vec<f64>,
}

impl DiffusionSchedule {
    /// Cosine schedule: `alpha_bar(t) = f(t/T) / f(0)` with
    /// `f(u) = cos^2(((u + 0.008) / 1.008) * pi/2)`, betas clipped at 0.999
    /// and the table rebuilt from the clipped betas so it stays
    /// self-consistent.
    pub fn cosine(steps: usize) -> DiffusionSchedule {
        assert!(steps >= 1);
        let f = |u: f64| {
            let c = libm::cos((u + 0.008) / 1.008 * core::f64::consts::FRAC_PI_2);
            c * c
        };
        let f0 = f(0.0);
        let mut beta = Vec::with_capacity(steps);
        let mut prev = 1.0;
        for t in 1..=steps {
            let ab = f(t as f64 / steps as f64) / f0;
            let b = (1.0 - ab / prev).min(0.999);
            beta.push(b);
            prev = ab;
        }
        Self::from_betas(beta)
    }

    /// Build the derived tables from explicit betas.
    pub fn from_betas(beta: Vec<f64>) -> DiffusionSchedule {
        let steps = beta.len();
        assert!(steps >= 1);
        let mut alpha_bar = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for &b in &beta {
            debug_assert!(b > 0.0 && b < 1.0);
            acc *= 1.0 - b;
            alpha_bar.push(acc);
        }
        let mut beta_tilde = Vec::with_capacity(steps);
        for t in 1..=steps {
            let ab_prev = if t == 1 { 1.0 } else { alpha_bar[t - 2] };
            let ab = alpha_bar[t - 1];
            beta_tilde.push((1.0 - ab_prev) / (1.0 - ab) * beta[t - 1]);
        }
        DiffusionSchedule {
            steps,
            beta,
            alpha_bar,
            beta_tilde,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `beta_t`, `t` in `[1, T]`.
    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    /// `alpha_bar_t = prod_{s<=t} (1 - beta_s)`, with `alpha_bar_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    /// Posterior variance `beta_tilde_t`; zero at `t = 1`.
    pub fn beta_tilde(&self, t: usize) -> f64 {
        self.beta_tilde[t - 1]
    }

    /// Rows `(t, beta, alpha_bar, beta_tilde)` for inspection dumps.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        (1..=self.steps).map(|t| (t, self.beta(t), self.alpha_bar(t), self.beta_tilde(t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_t400_shape() {
        let s = DiffusionSchedule::cosine(400);
        assert_eq!(s.steps(), 400);
        // alpha_bar strictly decreasing
        for t in 2..=400 {
            assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
        }
        assert!(s.alpha_bar(1) > 0.99, "alpha_bar_1 = {}", s.alpha_bar(1));
        assert!(s.alpha_bar(400) < 0.01, "alpha_bar_T = {}", s.alpha_bar(400));
    }

    #[test]
    fn beta_one_matches_closed_form() {
        let s = DiffusionSchedule::cosine(400);
        // independent evaluation of the closed form
        let f = |u: f64| {
            let c = libm::cos((u + 0.008) / 1.008 * core::f64::consts::FRAC_PI_2);
            c * c
        };
        let expected = 1.0 - f(1.0 / 400.0) / f(0.0);
        assert!((s.beta(1) - expected).abs() < 1e-15);
    }

    #[test]
    fn beta_tilde_bounds_and_first_step() {
        let s = DiffusionSchedule::cosine(400);
        assert_eq!(s.beta_tilde(1), 0.0);
        for t in 1..=400 {
            let bt = s.beta_tilde(t);
            assert!(bt >= 0.0 && bt <= s.beta(t) + 1e-15, "t={t}: {bt}");
        }
    }

    #[test]
    fn betas_clipped() {
        let s = DiffusionSchedule::cosine(400);
        for t in 1..=400 {
            assert!(s.beta(t) > 0.0 && s.beta(t) <= 0.999);
        }
    }
}
