//! Moment-based ψ-norm estimates.

use statrs::function::gamma::ln_gamma;

/// Order of the ψ-norm: 2 (sub-Gaussian, `/√p`) or 1 (sub-exponential, `/p`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiOrder {
    One,
    Two,
}

impl PsiOrder {
    fn normalizer(self, p: f64) -> f64 {
        match self {
            PsiOrder::One => p,
            PsiOrder::Two => p.sqrt(),
        }
    }
}

/// Default moment grid `p ∈ {1, 1.5, 2, …, 20}`.
pub fn default_p_grid() -> Vec<f64> {
    (0..=38).map(|i| 1.0 + 0.5 * i as f64).collect()
}

/// `max_{p ∈ grid} (mean |X|^p)^{1/p} / p^{1/order}`.
///
/// Returns 0 for an empty sample or grid.
pub fn psi_norm_estimate(samples: &[f64], order: PsiOrder, p_grid: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let logs: Vec<f64> = samples
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs().ln())
        .collect();
    if logs.is_empty() {
        return 0.0;
    }
    let n = samples.len() as f64;
    // Factor out the largest |x| so that high moments do not overflow.
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    p_grid
        .iter()
        .map(|&p| {
            let scaled: f64 = logs.iter().map(|&l| (p * (l - top)).exp()).sum();
            let log_moment = top * p + (scaled / n).ln();
            (log_moment / p).exp() / order.normalizer(p)
        })
        .fold(0.0, f64::max)
}

/// `E|G|^p = 2^{p/2} Γ((p+1)/2) / √π` for a standard normal `G`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    (0.5 * p * std::f64::consts::LN_2 + ln_gamma((p + 1.0) / 2.0)
        - 0.5 * std::f64::consts::PI.ln())
    .exp()
}

/// The exact-moment ψ-norm of a standard normal over the grid.
pub fn gaussian_psi_oracle(order: PsiOrder, p_grid: &[f64]) -> f64 {
    p_grid
        .iter()
        .map(|&p| gaussian_abs_moment(p).powf(1.0 / p) / order.normalizer(p))
        .fold(0.0, f64::max)
}
