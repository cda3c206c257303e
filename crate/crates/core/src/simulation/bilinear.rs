//! Bilinear-form experiments for the four tail bounds and the Hoeffding
//! bound, with calibration of the exponent constant `c`.
//!
//! A setting draws `n` independent index pairs. At index `j` the data pair
//! `(Z1j, Z2j)` is standard bivariate normal with correlation `rho`, shifted
//! by `(μ1j, μ2j)`, and the multiplier pair `(γ1j, γ2j)` is drawn
//! independently of it.

use rand::Rng;
use serde::Serialize;

use crate::bounds::{
    bounded_error_evaluation, centered_evaluation, e1_e2_bounded_error, e1_e2_noncentered,
    hoeffding_tail, BoundEvaluation, ErrorBounds, MeanVectors, Structure, SubGaussianParams,
    DEFAULT_D_NONCENTERED,
};
use crate::error::{check_len, check_positive, invalid, Result};
use crate::norms::{CoefficientMatrix, MaskMoments};
use crate::simulation::mgf::{GaussianPair, PairSampler};
use crate::simulation::tail::{quantile, TailCurve};

/// ψ₂ bound of a standard normal: `√(2/π)`.
pub fn standard_normal_psi2() -> f64 {
    (2.0 / std::f64::consts::PI).sqrt()
}

/// Distribution of the multiplier pairs `(γ1j, γ2j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Multipliers {
    /// Bernoulli pairs with marginals `π1j`, `π2j` and joint `π12j`.
    Bernoulli { moments: MaskMoments },
    /// `γij = Bij Uij` with uniform `U`; with probability `shared` the two
    /// uniforms coincide, otherwise they are independent.
    Bounded { b1: Vec<f64>, b2: Vec<f64>, shared: f64 },
}

impl Multipliers {
    fn n(&self) -> usize {
        match self {
            Multipliers::Bernoulli { moments } => moments.n(),
            Multipliers::Bounded { b1, .. } => b1.len(),
        }
    }

    /// `(E γ1j, E γ2j, E γ1j γ2j)`.
    fn moments(&self, j: usize) -> (f64, f64, f64) {
        match self {
            Multipliers::Bernoulli { moments } => {
                (moments.pi1()[j], moments.pi2()[j], moments.pi12()[j])
            }
            Multipliers::Bounded { b1, b2, shared } => (
                b1[j] / 2.0,
                b2[j] / 2.0,
                b1[j] * b2[j] * (shared / 3.0 + (1.0 - shared) / 4.0),
            ),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> (f64, f64) {
        match self {
            Multipliers::Bernoulli { moments } => {
                let (p1, p2, p12) = (moments.pi1()[j], moments.pi2()[j], moments.pi12()[j]);
                let u: f64 = rng.random();
                // Cells ordered (1,1), (1,0), (0,1), (0,0).
                if u < p12 {
                    (1.0, 1.0)
                } else if u < p1 {
                    (1.0, 0.0)
                } else if u < p1 + p2 - p12 {
                    (0.0, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Multipliers::Bounded { b1, b2, shared } => {
                let u1: f64 = rng.random();
                let coin: f64 = rng.random();
                let fresh: f64 = rng.random();
                let u2 = if coin < *shared { u1 } else { fresh };
                (b1[j] * u1, b2[j] * u2)
            }
        }
    }
}

/// Which bound a setting is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// Centered data, Bernoulli masks.
    CenteredMasked,
    /// Non-centered data, Bernoulli masks.
    NonCenteredMasked,
    /// Centered data, bounded multipliers.
    CenteredBounded,
    /// Non-centered data, bounded multipliers.
    NonCenteredBounded,
}

/// One bilinear-form experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BilinearSetting {
    pub name: String,
    #[serde(skip)]
    pub a: CoefficientMatrix,
    pub rho: f64,
    pub mu: MeanVectors,
    pub multipliers: Multipliers,
}

impl BilinearSetting {
    pub fn new(
        name: impl Into<String>,
        a: CoefficientMatrix,
        rho: f64,
        mu: MeanVectors,
        multipliers: Multipliers,
    ) -> Result<Self> {
        let n = a.n();
        check_len("mu1", n, mu.mu1.len())?;
        check_len("mu2", n, mu.mu2.len())?;
        check_len("multipliers", n, multipliers.n())?;
        if !(-1.0..=1.0).contains(&rho) {
            return Err(invalid("rho", rho, "in [-1, 1]"));
        }
        if let Multipliers::Bounded { b1, b2, shared } = &multipliers {
            check_len("b2", b1.len(), b2.len())?;
            for &b in b1.iter().chain(b2) {
                check_positive("B", b)?;
            }
            if !(0.0..=1.0).contains(shared) {
                return Err(invalid("shared", *shared, "in [0, 1]"));
            }
        }
        Ok(BilinearSetting {
            name: name.into(),
            a,
            rho,
            mu,
            multipliers,
        })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn is_centered(&self) -> bool {
        self.mu.mu1.iter().chain(&self.mu.mu2).all(|&m| m == 0.0)
    }

    pub fn bound_kind(&self) -> BoundKind {
        match (&self.multipliers, self.is_centered()) {
            (Multipliers::Bernoulli { .. }, true) => BoundKind::CenteredMasked,
            (Multipliers::Bernoulli { .. }, false) => BoundKind::NonCenteredMasked,
            (Multipliers::Bounded { .. }, true) => BoundKind::CenteredBounded,
            (Multipliers::Bounded { .. }, false) => BoundKind::NonCenteredBounded,
        }
    }

    pub fn subgaussian(&self) -> SubGaussianParams {
        let k = standard_normal_psi2();
        SubGaussianParams::new(k, k).expect("positive constant")
    }

    /// `E (Z̃1 ∗ γ1)ᵀ A (Z̃2 ∗ γ2)`.
    pub fn expectation(&self) -> f64 {
        let n = self.n();
        let (mu1, mu2) = (&self.mu.mu1, &self.mu.mu2);
        let m: Vec<(f64, f64, f64)> = (0..n).map(|j| self.multipliers.moments(j)).collect();
        let v1: Vec<f64> = (0..n).map(|j| mu1[j] * m[j].0).collect();
        let v2: Vec<f64> = (0..n).map(|j| mu2[j] * m[j].1).collect();
        let av2 = self.a.mul_vec(&v2).expect("validated length");
        let mut total: f64 = v1.iter().zip(&av2).map(|(x, y)| x * y).sum();
        for j in 0..n {
            let ajj = self.a.get(j, j);
            total += ajj * (m[j].2 * (self.rho + mu1[j] * mu2[j]) - v1[j] * v2[j]);
        }
        total
    }

    /// One draw of the bilinear form.
    pub fn sample_form<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = self.n();
        let pair = GaussianPair { rho: self.rho };
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        for j in 0..n {
            let (z1, z2) = pair.sample(rng);
            let (g1, g2) = self.multipliers.sample(j, rng);
            w1[j] = (z1 + self.mu.mu1[j]) * g1;
            w2[j] = (z2 + self.mu.mu2[j]) * g2;
        }
        let aw2 = self.a.mul_vec(&w2).expect("validated length");
        w1.iter().zip(&aw2).map(|(x, y)| x * y).sum()
    }

    /// `E1`, `E2` of the applicable bound with exponent constant `c`.
    pub fn evaluation(&self, c: f64) -> Result<BoundEvaluation> {
        let sg = self.subgaussian();
        match (&self.multipliers, self.bound_kind()) {
            (Multipliers::Bernoulli { moments }, BoundKind::CenteredMasked) => {
                centered_evaluation(sg, &self.a, moments, c, Structure::Full)
            }
            (Multipliers::Bernoulli { moments }, _) => {
                e1_e2_noncentered(sg, &self.a, &self.mu, moments)?
                    .evaluation(c, DEFAULT_D_NONCENTERED)
            }
            (Multipliers::Bounded { b1, b2, .. }, BoundKind::CenteredBounded) => {
                bounded_error_evaluation(sg, &self.a, &ErrorBounds::new(b1.clone(), b2.clone())?, c)
            }
            (Multipliers::Bounded { b1, b2, .. }, _) => {
                let u = MeanVectors::new(
                    b1.iter().map(|b| b / 2.0).collect(),
                    b2.iter().map(|b| b / 2.0).collect(),
                )?;
                e1_e2_bounded_error(sg, &self.a, &self.mu, &ErrorBounds::new(b1.clone(), b2.clone())?, &u)?
                    .evaluation(c, DEFAULT_D_NONCENTERED)
            }
        }
    }
}

/// `Σ αj γj Zj` with standard normal `Z` and Bernoulli(`π`) `γ`: the linear
/// statistic of the Hoeffding bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearSetting {
    pub alpha: Vec<f64>,
    pub pi: Vec<f64>,
}

impl LinearSetting {
    pub fn new(alpha: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        check_len("pi", alpha.len(), pi.len())?;
        for &p in &pi {
            crate::error::check_probability("pi", p)?;
        }
        Ok(LinearSetting { alpha, pi })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut total = 0.0;
        for (&a, &p) in self.alpha.iter().zip(&self.pi) {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let u: f64 = rng.random();
            if u < p {
                total += a * z;
            }
        }
        total
    }

    /// Hoeffding tail at `t` with constant `c`, using `K = √(2/π)`.
    pub fn tail(&self, t: f64, c: f64) -> Result<f64> {
        Ok(hoeffding_tail(t, standard_normal_psi2(), &self.alpha, c)?.value())
    }

    /// Exponent before scaling by `c`: `t²/(K²‖α‖²)`.
    pub fn rate(&self, t: f64) -> f64 {
        let k = standard_normal_psi2();
        let norm2: f64 = self.alpha.iter().map(|a| a * a).sum();
        t * t / (k * k * norm2)
    }
}

/// `count` evenly spaced positive points up to the empirical
/// `1 − min_tail` quantile of `|deviation|`, so every grid point keeps at
/// least a `min_tail` fraction of exceedances.
pub fn calibration_grid(deviations: &[f64], count: usize, min_tail: f64) -> Vec<f64> {
    let abs: Vec<f64> = deviations.iter().map(|d| d.abs()).collect();
    let top = quantile(&abs, 1.0 - min_tail);
    (1..=count).map(|i| top * i as f64 / count as f64).collect()
}

/// One-sided upper confidence limit used when fitting `c`:
/// `f + 4√(max(f, 1/R)(1 − f)/R) + 4/R`.
pub fn frequency_upper_limit(f: f64, reps: usize) -> f64 {
    let r = reps as f64;
    f + 4.0 * (f.max(1.0 / r) * (1.0 - f) / r).sqrt() + 4.0 / r
}

/// Largest `c` with `d exp(−c rate(t)) ≥` the upper confidence limit of the
/// empirical frequency at every grid point with `rate(t) > 0`.
pub fn calibrate_exponent_constant(
    curve: &TailCurve,
    reps: usize,
    d: f64,
    rate: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (&t, &f) in curve.t_grid.iter().zip(&curve.frequency) {
        let r = rate(t);
        if !(r > 0.0) {
            continue;
        }
        let upper = frequency_upper_limit(f, reps);
        best = best.min((d / upper).ln() / r);
    }
    if !(best > 0.0 && best.is_finite()) {
        return Err(invalid("calibrated c", best, "finite and strictly positive"));
    }
    Ok(best)
}

/// Comparison of an empirical curve with a bound at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationRow {
    pub t: f64,
    pub frequency: f64,
    pub se: f64,
    pub bound: f64,
    pub dominated: bool,
}

/// Compares each frequency with `bound(t)`.
pub fn domination(curve: &TailCurve, bound: impl Fn(f64) -> f64) -> Vec<DominationRow> {
    curve
        .t_grid
        .iter()
        .zip(curve.frequency.iter().zip(&curve.se))
        .map(|(&t, (&frequency, &se))| {
            let bound = bound(t);
            DominationRow {
                t,
                frequency,
                se,
                bound,
                dominated: frequency <= bound,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::tail::run_replicates;

    fn small_a(n: usize) -> CoefficientMatrix {
        CoefficientMatrix::dense(
            n,
            (0..n * n)
                .map(|k| ((k * 7 % 11) as f64 - 5.0) / 10.0)
                .collect(),
        )
        .unwrap()
    }

    fn mean_and_se(draws: &[f64]) -> (f64, f64) {
        let n = draws.len() as f64;
        let m = draws.iter().sum::<f64>() / n;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn expectation_matches_monte_carlo() {
        let n = 6;
        let mu = MeanVectors::new(vec![0.5, -1.0, 0.2, 0.0, 1.0, 0.3], vec![1.0; 6]).unwrap();
        let masks = MaskMoments::new(vec![0.7; 6], vec![0.6; 6], vec![0.5; 6]).unwrap();
        let s = BilinearSetting::new("m", small_a(n), 0.4, mu.clone(), Multipliers::Bernoulli { moments: masks })
            .unwrap();
        let draws = run_replicates(40_000, 1, |rng, _| Ok(s.sample_form(rng))).unwrap();
        let (m, se) = mean_and_se(&draws);
        assert!((m - s.expectation()).abs() < 4.0 * se, "{m} vs {}", s.expectation());

        let b = BilinearSetting::new(
            "b",
            small_a(n),
            -0.3,
            mu,
            Multipliers::Bounded { b1: vec![1.0; 6], b2: vec![2.0; 6], shared: 0.5 },
        )
        .unwrap();
        let draws = run_replicates(40_000, 2, |rng, _| Ok(b.sample_form(rng))).unwrap();
        let (m, se) = mean_and_se(&draws);
        assert!((m - b.expectation()).abs() < 4.0 * se);
    }

    #[test]
    fn bound_kinds() {
        let masks = MaskMoments::shared(vec![0.7; 3]).unwrap();
        let s = BilinearSetting::new("q", small_a(3), 1.0, MeanVectors::zeros(3), Multipliers::Bernoulli { moments: masks })
            .unwrap();
        assert_eq!(s.bound_kind(), BoundKind::CenteredMasked);
        assert_eq!(s.evaluation(0.1).unwrap().d, crate::bounds::DEFAULT_D);
    }

    #[test]
    fn calibration_dominates_its_own_curve() {
        let curve = TailCurve {
            t_grid: vec![0.5, 1.0, 2.0],
            frequency: vec![0.6, 0.3, 0.01],
            se: vec![0.0; 3],
        };
        let ev = BoundEvaluation::new(1.0, 1.0, 1.0, 2.0).unwrap();
        let c = calibrate_exponent_constant(&curve, 10_000, ev.d, |t| ev.rate(t)).unwrap();
        let ev = ev.with_c(c);
        assert!(domination(&curve, |t| ev.tail(t).value()).iter().all(|r| r.dominated));
    }

    #[test]
    fn grid_is_positive_and_increasing() {
        let devs: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0 - 0.5).collect();
        let g = calibration_grid(&devs, 10, 0.01);
        assert!(g[0] > 0.0 && g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[9] <= 0.5);
    }
}
