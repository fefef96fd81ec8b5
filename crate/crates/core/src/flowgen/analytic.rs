//! Closed-form 1D Gaussian flow used as an independent oracle.
//!
//! For scalar data distributed N(mu, s^2) interpolated linearly against
//! standard noise, the marginal at time t is N((1-t)mu, V_t) with
//! V_t = (1-t)^2 s^2 + t^2, and the exact conditional-expectation velocity
//! has a closed form. Sampling diagnostics compare integrator output against
//! this law without touching any learned component.

use super::VelocityField;

/// Exact velocity field for 1D Gaussian data under linear interpolation.
#[derive(Debug, Clone, Copy)]
pub struct Gauss1d {
    pub mu: f64,
    pub s: f64,
}

impl Gauss1d {
    pub fn marginal_mean(&self, t: f64) -> f64 {
        (1.0 - t) * self.mu
    }

    pub fn marginal_var(&self, t: f64) -> f64 {
        let u = 1.0 - t;
        u * u * self.s * self.s + t * t
    }

    /// E[x1 - x0 | x_t = x], the optimal velocity at (x, t).
    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        let u = 1.0 - t;
        let v = self.marginal_var(t);
        (t - u * self.s * self.s) * (x - u * self.mu) / v - self.mu
    }

    /// d/dx log p_t(x) of the exact marginal.
    pub fn score(&self, x: f64, t: f64) -> f64 {
        -(x - self.marginal_mean(t)) / self.marginal_var(t)
    }

    /// CDF of the data law N(mu, s^2).
    pub fn data_cdf(&self, x: f64) -> f64 {
        normal_cdf(x, self.mu, self.s)
    }
}

impl VelocityField for Gauss1d {
    fn dim(&self) -> usize {
        1
    }

    fn velocity_at(&self, x: &[f64], t: f64) -> Vec<f64> {
        vec![self.velocity(x[0], t)]
    }
}

pub fn normal_cdf(x: f64, mean: f64, std: f64) -> f64 {
    0.5 * (1.0 + libm::erf((x - mean) / (std * std::f64::consts::SQRT_2)))
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic critical value sqrt(-ln(alpha/2) / 2) / sqrt(n); the test
/// rejects when the statistic exceeds it.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    assert!(n > 0 && alpha > 0.0 && alpha < 1.0);
    ((-(alpha / 2.0).ln()) / 2.0).sqrt() / (n as f64).sqrt()
}
