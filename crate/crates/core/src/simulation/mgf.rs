//! Monte Carlo check of the moment generating function bound for a product
//! of two centered sub-Gaussian variables:
//! `E exp(λ a Z1 Z2) − 1 ≤ λ a E[Z1 Z2] + 16 λ² a² K1² K2²`
//! for `|λ| < 1/(4e K1 K2 |a|)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_positive, invalid, Result};
use crate::simulation::tail::run_replicates;

/// Minimum replicate count of the check.
pub const MIN_MGF_REPS: usize = 10_000;

/// A sampler of centered pairs `(Z1, Z2)` with known `E[Z1 Z2]`.
pub trait PairSampler: Sync {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64);
    fn mean_product(&self) -> f64;
}

/// Standard bivariate normal with correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPair {
    pub rho: f64,
}

impl PairSampler for GaussianPair {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        (a, self.rho * a + (1.0 - self.rho * self.rho).sqrt() * b)
    }

    fn mean_product(&self) -> f64 {
        self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfReport {
    pub lambda: f64,
    pub a: f64,
    pub lhs: f64,
    pub se: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Largest admissible `|λ|` (exclusive) for the given `a`, `K1`, `K2`.
pub fn lambda_limit(a: f64, k1: f64, k2: f64) -> f64 {
    1.0 / (4.0 * std::f64::consts::E * k1 * k2 * a.abs())
}

/// Estimates `E exp(λ a Z1 Z2) − 1` over `reps` pairs and compares it with
/// the bound; passes when `lhs − 3 se ≤ rhs`.
pub fn mgf_bound_check<S: PairSampler>(
    lambda: f64,
    a: f64,
    sampler: &S,
    k1: f64,
    k2: f64,
    reps: usize,
    seed: u64,
) -> Result<MgfReport> {
    check_positive("K1", k1)?;
    check_positive("K2", k2)?;
    if reps < MIN_MGF_REPS {
        return Err(invalid("reps", reps as f64, "at least 10000"));
    }
    if !lambda.is_finite() || !a.is_finite() {
        return Err(invalid("lambda", lambda, "finite"));
    }
    if a != 0.0 && lambda.abs() >= lambda_limit(a, k1, k2) {
        return Err(invalid(
            "lambda",
            lambda,
            "inside the admissible range |lambda| < 1/(4e K1 K2 |a|)",
        ));
    }
    let s = lambda * a;
    let draws = run_replicates(reps, seed, |rng, _| {
        let (z1, z2) = sampler.sample(rng);
        Ok((s * z1 * z2).exp_m1())
    })?;
    let n = reps as f64;
    let lhs = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|v| (v - lhs).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let rhs = s * sampler.mean_product() + 16.0 * s * s * (k1 * k2).powi(2);
    Ok(MgfReport {
        lambda,
        a,
        lhs,
        se,
        rhs,
        pass: lhs - 3.0 * se <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_inputs_are_exact() {
        let g = GaussianPair { rho: 0.3 };
        for (lambda, a) in [(0.0, 1.0), (0.1, 0.0)] {
            let r = mgf_bound_check(lambda, a, &g, 0.8, 0.8, 10_000, 1).unwrap();
            assert_eq!((r.lhs, r.rhs, r.se), (0.0, 0.0, 0.0));
            assert!(r.pass);
        }
    }

    #[test]
    fn inadmissible_lambda_rejected() {
        let g = GaussianPair { rho: 0.0 };
        let limit = lambda_limit(1.0, 1.0, 1.0);
        assert!(mgf_bound_check(limit, 1.0, &g, 1.0, 1.0, 10_000, 1).is_err());
        assert!(mgf_bound_check(-limit * 1.01, 1.0, &g, 1.0, 1.0, 10_000, 1).is_err());
        assert!(mgf_bound_check(0.01, 1.0, &g, 1.0, 1.0, 100, 1).is_err());
    }

    #[test]
    fn squared_normal_passes() {
        let g = GaussianPair { rho: 1.0 };
        let r = mgf_bound_check(0.05, 1.0, &g, 0.86, 0.86, 100_000, 2).unwrap();
        // E exp(λZ²) = (1 − 2λ)^{-1/2}.
        let exact = (1.0 - 0.1_f64).powf(-0.5) - 1.0;
        assert!((r.lhs - exact).abs() < 4.0 * r.se);
        assert!(r.pass);
    }
}
