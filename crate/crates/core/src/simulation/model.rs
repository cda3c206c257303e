//! Population, missingness and measurement-error specifications.
//!
//! Every constructor validates its invariants, so a value of one of these
//! types can be handed to the generators and estimators without further
//! checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{check_len, check_positive, check_probability, invalid, Error, Result};
use crate::matrix::{cholesky_psd, Matrix};
use crate::norms::check_frechet;

/// Distribution family of the population generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopulationFamily {
    /// Jointly Gaussian `(X, Y)`.
    #[default]
    Gaussian,
    /// `μ + L ξ` with `L Lᵀ = Σ` and `ξ` a vector of independent Rademacher
    /// signs: bounded, non-Gaussian, same first two moments.
    RademacherMixture,
}

impl PopulationFamily {
    /// A ψ₂-norm bound for a centered marginal with standard deviation `sd`.
    ///
    /// For a Gaussian the supremum of `(E|X|^p)^{1/p}/√p` is attained at
    /// `p = 1` and equals `sd·√(2/π)`. For a Rademacher sum Khintchine's
    /// inequality bounds every ratio by `sd`.
    pub fn psi2_bound(self, sd: f64) -> f64 {
        match self {
            PopulationFamily::Gaussian => sd * (2.0 / std::f64::consts::PI).sqrt(),
            PopulationFamily::RademacherMixture => sd,
        }
    }
}

/// Moments of the joint population `(X, Y)` and the ψ₂ bounds `K_X`, `K_Y`
/// shared by all centered components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSpec {
    mu_x: Vec<f64>,
    mu_y: Vec<f64>,
    sigma_xx: Matrix,
    sigma_yy: Matrix,
    sigma_xy: Matrix,
    k_x: f64,
    k_y: f64,
    family: PopulationFamily,
    #[serde(skip)]
    factor: Matrix,
}

impl PopulationSpec {
    /// Validates dimensions, symmetry and positive semidefiniteness of the
    /// block covariance `[[Σ_XX, Σ_XY], [Σ_XYᵀ, Σ_YY]]`.
    pub fn new(
        mu_x: Vec<f64>,
        mu_y: Vec<f64>,
        sigma_xx: Matrix,
        sigma_yy: Matrix,
        sigma_xy: Matrix,
        k_x: f64,
        k_y: f64,
    ) -> Result<Self> {
        let (p, q) = (mu_x.len(), mu_y.len());
        if p == 0 || q == 0 {
            return Err(invalid("dimension", 0.0, "at least 1"));
        }
        check_len("sigma_xx rows", p, sigma_xx.rows())?;
        check_len("sigma_xx cols", p, sigma_xx.cols())?;
        check_len("sigma_yy rows", q, sigma_yy.rows())?;
        check_len("sigma_yy cols", q, sigma_yy.cols())?;
        check_len("sigma_xy rows", p, sigma_xy.rows())?;
        check_len("sigma_xy cols", q, sigma_xy.cols())?;
        if !mu_x.iter().chain(&mu_y).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mean vector"));
        }
        if !(sigma_xx.is_finite() && sigma_yy.is_finite() && sigma_xy.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        check_positive("k_x", k_x)?;
        check_positive("k_y", k_y)?;
        let joint = joint_covariance(&sigma_xx, &sigma_yy, &sigma_xy);
        let d = p + q;
        let scale = joint.max_abs().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (joint[(i, j)] - joint[(j, i)]).abs() > 1e-12 * scale {
                    return Err(invalid(
                        format!("covariance[{i}][{j}]"),
                        joint[(i, j)],
                        "symmetric",
                    ));
                }
            }
        }
        let factor = cholesky_psd(&joint)?;
        Ok(PopulationSpec {
            mu_x,
            mu_y,
            sigma_xx,
            sigma_yy,
            sigma_xy,
            k_x,
            k_y,
            family: PopulationFamily::Gaussian,
            factor,
        })
    }

    /// Like [`PopulationSpec::new`], with `K_X`, `K_Y` derived from the
    /// largest marginal standard deviation of each block.
    pub fn with_derived_k(
        mu_x: Vec<f64>,
        mu_y: Vec<f64>,
        sigma_xx: Matrix,
        sigma_yy: Matrix,
        sigma_xy: Matrix,
        family: PopulationFamily,
    ) -> Result<Self> {
        let sd = |s: &Matrix| {
            (0..s.rows())
                .map(|i| s[(i, i)].max(0.0).sqrt())
                .fold(0.0_f64, f64::max)
        };
        let (sx, sy) = (sd(&sigma_xx), sd(&sigma_yy));
        // A degenerate block still needs a positive bound.
        let k_x = family.psi2_bound(sx).max(f64::MIN_POSITIVE);
        let k_y = family.psi2_bound(sy).max(f64::MIN_POSITIVE);
        Ok(Self::new(mu_x, mu_y, sigma_xx, sigma_yy, sigma_xy, k_x, k_y)?.with_family(family))
    }

    /// Identity within-block covariances, the given cross block and means.
    pub fn identity_blocks(mu_x: Vec<f64>, mu_y: Vec<f64>, sigma_xy: Matrix) -> Result<Self> {
        let (p, q) = (mu_x.len(), mu_y.len());
        Self::with_derived_k(
            mu_x,
            mu_y,
            Matrix::identity(p),
            Matrix::identity(q),
            sigma_xy,
            PopulationFamily::Gaussian,
        )
    }

    pub fn with_family(mut self, family: PopulationFamily) -> Self {
        self.family = family;
        self
    }

    pub fn p(&self) -> usize {
        self.mu_x.len()
    }

    pub fn q(&self) -> usize {
        self.mu_y.len()
    }

    pub fn mu_x(&self) -> &[f64] {
        &self.mu_x
    }

    pub fn mu_y(&self) -> &[f64] {
        &self.mu_y
    }

    pub fn sigma_xx(&self) -> &Matrix {
        &self.sigma_xx
    }

    pub fn sigma_yy(&self) -> &Matrix {
        &self.sigma_yy
    }

    pub fn sigma_xy(&self) -> &Matrix {
        &self.sigma_xy
    }

    pub fn k_x(&self) -> f64 {
        self.k_x
    }

    pub fn k_y(&self) -> f64 {
        self.k_y
    }

    pub fn family(&self) -> PopulationFamily {
        self.family
    }

    /// Lower-triangular factor of the joint covariance, `(p+q) × (p+q)`.
    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    /// Entries `(k, ℓ)` with `σ_kℓ = 0`.
    pub fn null_set(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.p() {
            for l in 0..self.q() {
                if self.sigma_xy[(k, l)] == 0.0 {
                    out.push((k, l));
                }
            }
        }
        out
    }
}

fn joint_covariance(sxx: &Matrix, syy: &Matrix, sxy: &Matrix) -> Matrix {
    let (p, q) = (sxx.rows(), syy.rows());
    Matrix::from_fn(p + q, p + q, |i, j| match (i < p, j < p) {
        (true, true) => sxx[(i, j)],
        (true, false) => sxy[(i, j - p)],
        (false, true) => sxy[(j, i - p)],
        (false, false) => syy[(i - p, j - p)],
    })
}

/// Named joint observation tables built from the marginals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointPreset {
    /// `π_kℓ = π_k^X π_ℓ^Y`.
    Independent,
    /// `π_kℓ = min(π_k^X, π_ℓ^Y)`, the Fréchet upper bound.
    Comonotone,
    /// `π_kℓ = max(0, π_k^X + π_ℓ^Y − 1)`, the Fréchet lower bound.
    Exclusive,
}

impl JointPreset {
    pub fn joint(self, a: f64, b: f64) -> f64 {
        match self {
            JointPreset::Independent => a * b,
            JointPreset::Comonotone => a.min(b),
            JointPreset::Exclusive => (a + b - 1.0).max(0.0),
        }
    }
}

/// Observation probabilities of the missing-data indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingSpec {
    pi_x: Vec<f64>,
    pi_y: Vec<f64>,
    pi_xy: Matrix,
}

impl MissingSpec {
    /// Marginals must lie in (0, 1]; the joint table must satisfy the
    /// Fréchet bounds cell by cell.
    pub fn new(pi_x: Vec<f64>, pi_y: Vec<f64>, pi_xy: Matrix) -> Result<Self> {
        check_len("pi_xy rows", pi_x.len(), pi_xy.rows())?;
        check_len("pi_xy cols", pi_y.len(), pi_xy.cols())?;
        for (k, &a) in pi_x.iter().enumerate() {
            check_probability(format!("pi_x[{k}]"), a)?;
        }
        for (l, &b) in pi_y.iter().enumerate() {
            check_probability(format!("pi_y[{l}]"), b)?;
        }
        for k in 0..pi_x.len() {
            for l in 0..pi_y.len() {
                let v = pi_xy[(k, l)];
                if !v.is_finite() {
                    return Err(Error::NonFinite("pi_xy"));
                }
                check_frechet(k, l, pi_x[k], pi_y[l], v)?;
            }
        }
        Ok(MissingSpec { pi_x, pi_y, pi_xy })
    }

    pub fn preset(pi_x: Vec<f64>, pi_y: Vec<f64>, preset: JointPreset) -> Result<Self> {
        let table = Matrix::from_fn(pi_x.len(), pi_y.len(), |k, l| preset.joint(pi_x[k], pi_y[l]));
        Self::new(pi_x, pi_y, table)
    }

    /// Same observation probability for every column, joint from a preset.
    pub fn uniform(p: usize, q: usize, pi: f64, preset: JointPreset) -> Result<Self> {
        Self::preset(vec![pi; p], vec![pi; q], preset)
    }

    /// Everything observed.
    pub fn complete(p: usize, q: usize) -> Self {
        MissingSpec {
            pi_x: vec![1.0; p],
            pi_y: vec![1.0; q],
            pi_xy: Matrix::filled(p, q, 1.0),
        }
    }

    pub fn p(&self) -> usize {
        self.pi_x.len()
    }

    pub fn q(&self) -> usize {
        self.pi_y.len()
    }

    pub fn pi_x(&self) -> &[f64] {
        &self.pi_x
    }

    pub fn pi_y(&self) -> &[f64] {
        &self.pi_y
    }

    pub fn pi_xy(&self) -> &Matrix {
        &self.pi_xy
    }
}

/// Default `a + b` of the Beta error distribution.
pub const DEFAULT_BETA_DISPERSION: f64 = 10.0;

/// How the error generator produces `(δ^X, δ^Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ErrorDependence {
    /// `δ = B · Beta(a, b)` with `a + b = dispersion` and mean `u/B`; the
    /// latent Gaussians share one factor so that every `(δ_k^X, δ_ℓ^Y)` pair
    /// has latent correlation `rho`, and every within-block pair `|rho|`.
    BetaCopula { dispersion: f64, rho: f64 },
    /// Bernoulli factors (`B = 1`): the missing-data case.
    Bernoulli,
    /// Moments supplied directly; usable by the estimator only.
    Unspecified,
}

/// Largest admissible latent correlation of the Beta copula.
pub const MAX_COPULA_RHO: f64 = 0.95;

/// Moments and bounds of the multiplicative measurement errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementErrorSpec {
    u_x: Vec<f64>,
    u_y: Vec<f64>,
    u_xy: Matrix,
    b_x: Vec<f64>,
    b_y: Vec<f64>,
    dependence: ErrorDependence,
}

impl MeasurementErrorSpec {
    /// Explicit moments. Requires `0 < u ≤ B` entrywise and
    /// `0 < u_kℓ ≤ B_k^X B_ℓ^Y`.
    pub fn new(
        u_x: Vec<f64>,
        u_y: Vec<f64>,
        u_xy: Matrix,
        b_x: Vec<f64>,
        b_y: Vec<f64>,
    ) -> Result<Self> {
        check_len("b_x", u_x.len(), b_x.len())?;
        check_len("b_y", u_y.len(), b_y.len())?;
        check_len("u_xy rows", u_x.len(), u_xy.rows())?;
        check_len("u_xy cols", u_y.len(), u_xy.cols())?;
        check_marginals(&u_x, &b_x, "x", 0)?;
        check_marginals(&u_y, &b_y, "y", u_x.len())?;
        for k in 0..u_x.len() {
            for l in 0..u_y.len() {
                let v = u_xy[(k, l)];
                let bound = b_x[k] * b_y[l];
                if !(v > 0.0 && v <= bound * (1.0 + 1e-12)) {
                    return Err(Error::InfeasibleErrorMoments {
                        index: k * u_y.len() + l,
                        detail: format!(
                            "u_xy[{k}][{l}] = {v} must lie in (0, B_x B_y = {bound}]"
                        ),
                    });
                }
            }
        }
        Ok(MeasurementErrorSpec {
            u_x,
            u_y,
            u_xy,
            b_x,
            b_y,
            dependence: ErrorDependence::Unspecified,
        })
    }

    /// Scaled-Beta errors with a one-factor Gaussian copula; the joint
    /// moments `u_kℓ` are computed by quadrature (exactly `u_k u_ℓ` when
    /// `rho = 0`).
    pub fn beta_copula(
        u_x: Vec<f64>,
        u_y: Vec<f64>,
        b_x: Vec<f64>,
        b_y: Vec<f64>,
        dispersion: f64,
        rho: f64,
    ) -> Result<Self> {
        check_len("b_x", u_x.len(), b_x.len())?;
        check_len("b_y", u_y.len(), b_y.len())?;
        check_marginals(&u_x, &b_x, "x", 0)?;
        check_marginals(&u_y, &b_y, "y", u_x.len())?;
        check_positive("dispersion", dispersion)?;
        if !(rho.abs() <= MAX_COPULA_RHO) {
            return Err(invalid("rho", rho, "in [-0.95, 0.95]"));
        }
        let u_xy = copula_joint_moments(&u_x, &u_y, &b_x, &b_y, dispersion, rho);
        let mut spec = Self::new(u_x, u_y, u_xy, b_x, b_y)?;
        spec.dependence = ErrorDependence::BetaCopula { dispersion, rho };
        Ok(spec)
    }

    /// Bernoulli factors with the given observation probabilities.
    pub fn from_missing(m: &MissingSpec) -> Result<Self> {
        let mut spec = Self::new(
            m.pi_x.clone(),
            m.pi_y.clone(),
            m.pi_xy.clone(),
            vec![1.0; m.p()],
            vec![1.0; m.q()],
        )?;
        spec.dependence = ErrorDependence::Bernoulli;
        Ok(spec)
    }

    /// The missing-data specification this one encodes, if Bernoulli.
    pub fn as_missing(&self) -> Option<MissingSpec> {
        match self.dependence {
            ErrorDependence::Bernoulli => Some(MissingSpec {
                pi_x: self.u_x.clone(),
                pi_y: self.u_y.clone(),
                pi_xy: self.u_xy.clone(),
            }),
            _ => None,
        }
    }

    pub fn p(&self) -> usize {
        self.u_x.len()
    }

    pub fn q(&self) -> usize {
        self.u_y.len()
    }

    pub fn u_x(&self) -> &[f64] {
        &self.u_x
    }

    pub fn u_y(&self) -> &[f64] {
        &self.u_y
    }

    pub fn u_xy(&self) -> &Matrix {
        &self.u_xy
    }

    pub fn b_x(&self) -> &[f64] {
        &self.b_x
    }

    pub fn b_y(&self) -> &[f64] {
        &self.b_y
    }

    pub fn dependence(&self) -> ErrorDependence {
        self.dependence
    }
}

fn check_marginals(u: &[f64], b: &[f64], block: &str, offset: usize) -> Result<()> {
    for (i, (&ui, &bi)) in u.iter().zip(b).enumerate() {
        check_positive(format!("b_{block}[{i}]"), bi)?;
        if !(ui > 0.0 && ui <= bi) {
            return Err(Error::InfeasibleErrorMoments {
                index: offset + i,
                detail: format!("u_{block}[{i}] = {ui} must lie in (0, B = {bi}]"),
            });
        }
    }
    Ok(())
}

/// Shape parameters `(a, b)` of `Beta` with mean `m` and `a + b = s`, or
/// `None` for the point mass at one (`m = 1`).
pub(crate) fn beta_shapes(mean: f64, dispersion: f64) -> Option<(f64, f64)> {
    if mean >= 1.0 {
        None
    } else {
        Some((dispersion * mean, dispersion * (1.0 - mean)))
    }
}

/// Maps a latent standard normal value to a draw `B · Beta(a, b)` through
/// the quantile transform.
#[derive(Debug, Clone)]
pub struct ScaledBetaQuantile {
    bound: f64,
    beta: Option<Beta>,
}

impl ScaledBetaQuantile {
    pub fn new(u: f64, bound: f64, dispersion: f64) -> Self {
        let beta = beta_shapes(u / bound, dispersion)
            .map(|(a, b)| Beta::new(a, b).expect("shapes are positive by validation"));
        ScaledBetaQuantile { bound, beta }
    }

    pub fn at_latent(&self, z: f64) -> f64 {
        match &self.beta {
            None => self.bound,
            Some(beta) => {
                let p = standard_normal_cdf(z);
                self.bound * beta.inverse_cdf(p).clamp(0.0, 1.0)
            }
        }
    }
}

pub(crate) fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

const QUAD_HALF_WIDTH: f64 = 8.5;
const QUAD_STEP: f64 = 0.02;

/// `E[δ_k^X δ_ℓ^Y]` for latent pairs with correlation `rho`, by the
/// trapezoid rule on a uniform grid in latent space (spectrally accurate for
/// smooth integrands with Gaussian decay).
fn copula_joint_moments(
    u_x: &[f64],
    u_y: &[f64],
    b_x: &[f64],
    b_y: &[f64],
    dispersion: f64,
    rho: f64,
) -> Matrix {
    if rho == 0.0 {
        return Matrix::from_fn(u_x.len(), u_y.len(), |k, l| u_x[k] * u_y[l]);
    }
    let m = (2.0 * QUAD_HALF_WIDTH / QUAD_STEP).round() as usize + 1;
    let grid: Vec<f64> = (0..m).map(|i| -QUAD_HALF_WIDTH + i as f64 * QUAD_STEP).collect();
    let tabulate = |u: &[f64], b: &[f64]| -> Vec<Vec<f64>> {
        u.iter()
            .zip(b)
            .map(|(&ui, &bi)| {
                let q = ScaledBetaQuantile::new(ui, bi, dispersion);
                grid.iter().map(|&z| q.at_latent(z)).collect()
            })
            .collect()
    };
    let qx = tabulate(u_x, b_x);
    let qy = tabulate(u_y, b_y);
    let det = 1.0 - rho * rho;
    let norm = QUAD_STEP * QUAD_STEP / (2.0 * std::f64::consts::PI * det.sqrt());
    let mut weights = vec![0.0; m * m];
    for (i, &z) in grid.iter().enumerate() {
        for (j, &w) in grid.iter().enumerate() {
            weights[i * m + j] = norm * (-(z * z - 2.0 * rho * z * w + w * w) / (2.0 * det)).exp();
        }
    }
    Matrix::from_fn(u_x.len(), u_y.len(), |k, l| {
        let mut total = 0.0;
        for i in 0..m {
            let row = &weights[i * m..(i + 1) * m];
            let inner: f64 = row.iter().zip(&qy[l]).map(|(w, y)| w * y).sum();
            total += qx[k][i] * inner;
        }
        total
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_rejects_indefinite_block() {
        let sxy = Matrix::from_rows(&[vec![1.2]]).unwrap();
        let err = PopulationSpec::identity_blocks(vec![0.0], vec![0.0], sxy).unwrap_err();
        assert!(matches!(err, Error::NotPositiveSemidefinite { minor: 2, .. }));
    }

    #[test]
    fn population_null_set() {
        let sxy = Matrix::from_rows(&[vec![0.3, 0.0], vec![0.0, 0.0]]).unwrap();
        let spec = PopulationSpec::identity_blocks(vec![0.0; 2], vec![0.0; 2], sxy).unwrap();
        assert_eq!(spec.null_set(), vec![(0, 1), (1, 0), (1, 1)]);
        assert!((spec.k_x() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn missing_spec_names_frechet_cell() {
        let table = Matrix::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.6]]).unwrap();
        match MissingSpec::new(vec![0.5, 0.5], vec![0.5, 0.5], table) {
            Err(Error::FrechetViolation { row, col, .. }) => assert_eq!((row, col), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_presets_hit_frechet_bounds() {
        let m = MissingSpec::preset(vec![0.7, 0.4], vec![0.5], JointPreset::Comonotone).unwrap();
        assert_eq!(m.pi_xy()[(0, 0)], 0.5);
        assert_eq!(m.pi_xy()[(1, 0)], 0.4);
        let m = MissingSpec::preset(vec![0.7, 0.4], vec![0.5], JointPreset::Exclusive).unwrap();
        assert!((m.pi_xy()[(0, 0)] - 0.2).abs() < 1e-15);
        assert_eq!(m.pi_xy()[(1, 0)], 0.0);
        assert!(MissingSpec::uniform(2, 2, 0.0, JointPreset::Independent).is_err());
    }

    #[test]
    fn error_spec_rejects_mean_above_bound() {
        let err = MeasurementErrorSpec::beta_copula(vec![1.5], vec![1.0], vec![1.0], vec![2.0], 10.0, 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::InfeasibleErrorMoments { index: 0, .. }));
    }

    #[test]
    fn copula_moments_bracket_independence() {
        let indep =
            MeasurementErrorSpec::beta_copula(vec![0.6], vec![0.8], vec![1.0], vec![2.0], 10.0, 0.0)
                .unwrap();
        let pos =
            MeasurementErrorSpec::beta_copula(vec![0.6], vec![0.8], vec![1.0], vec![2.0], 10.0, 0.5)
                .unwrap();
        let neg =
            MeasurementErrorSpec::beta_copula(vec![0.6], vec![0.8], vec![1.0], vec![2.0], 10.0, -0.5)
                .unwrap();
        let base = indep.u_xy()[(0, 0)];
        assert!((base - 0.48).abs() < 1e-15);
        assert!(pos.u_xy()[(0, 0)] > base);
        assert!(neg.u_xy()[(0, 0)] < base);
    }

    #[test]
    fn copula_quadrature_recovers_marginal_means_for_point_masses() {
        // Point masses are independent of the latent value, so the joint
        // moment must factor for any correlation.
        let s = MeasurementErrorSpec::beta_copula(vec![2.0], vec![0.5], vec![2.0], vec![0.5], 10.0, 0.9)
            .unwrap();
        assert!((s.u_xy()[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_round_trip() {
        let m = MissingSpec::uniform(2, 3, 0.7, JointPreset::Comonotone).unwrap();
        let e = MeasurementErrorSpec::from_missing(&m).unwrap();
        assert_eq!(e.as_missing().unwrap(), m);
        assert_eq!(e.b_x(), &[1.0, 1.0]);
    }
}
