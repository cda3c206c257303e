//! Coefficient matrices of bilinear forms and the norms the tail bounds are
//! stated in.
//!
//! A [`CoefficientMatrix`] is either a dense `n × n` array or an
//! equicorrelated matrix `(d − o) I + o 11ᵀ` stored as its diagonal value `d`
//! and off-diagonal value `o`. The centering matrix of the sample
//! cross-covariance and the inverse-probability-weighted matrices all have the
//! second form, so their norms are available in closed form and they cost
//! O(1) memory until materialized.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::matrix::Matrix;

/// Relative tolerance used by the cached operator norm.
pub const OPERATOR_NORM_TOL: f64 = 1e-10;
/// Iteration cap of the power iteration.
pub const POWER_ITERATION_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense(Vec<f64>),
    Equicorrelated { diag: f64, off: f64 },
}

/// The `n × n` real matrix `A` of a bilinear form `z1ᵀ A z2`.
///
/// Frobenius and operator norms are computed lazily and cached; filling the
/// cache from several threads at once is harmless since every thread computes
/// the same value.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    n: usize,
    repr: Repr,
    frobenius: OnceLock<f64>,
    operator: OnceLock<f64>,
}

impl PartialEq for CoefficientMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.repr == other.repr
    }
}

impl CoefficientMatrix {
    fn with_repr(n: usize, repr: Repr) -> Self {
        CoefficientMatrix {
            n,
            repr,
            frobenius: OnceLock::new(),
            operator: OnceLock::new(),
        }
    }

    /// Dense matrix from row-major entries.
    pub fn dense(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", 0.0, "at least 1"));
        }
        check_len("coefficient entries", n * n, entries.len())?;
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient matrix"));
        }
        Ok(Self::with_repr(n, Repr::Dense(entries)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            check_len("coefficient row", n, row.len())?;
            entries.extend_from_slice(row);
        }
        Self::dense(n, entries)
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        check_len("coefficient matrix columns", m.rows(), m.cols())?;
        Self::dense(m.rows(), m.as_slice().to_vec())
    }

    /// The matrix `(diag − off) I + off 11ᵀ`.
    pub fn equicorrelated(n: usize, diag: f64, off: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", 0.0, "at least 1"));
        }
        if !diag.is_finite() || !off.is_finite() {
            return Err(Error::NonFinite("coefficient matrix"));
        }
        Ok(Self::with_repr(n, Repr::Equicorrelated { diag, off }))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::equicorrelated(n, 1.0, 0.0)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut entries = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            entries[i * n + i] = *v;
        }
        Self::dense(n, entries)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `Some((diag, off))` for matrices stored in closed form.
    pub fn closed_form(&self) -> Option<(f64, f64)> {
        match self.repr {
            Repr::Equicorrelated { diag, off } => Some((diag, off)),
            Repr::Dense(_) => None,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Dense(e) => e[i * self.n + j],
            Repr::Equicorrelated { diag, off } => {
                if i == j {
                    *diag
                } else {
                    *off
                }
            }
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Row-major entries, materializing closed-form matrices.
    pub fn to_dense_entries(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(e) => e.clone(),
            Repr::Equicorrelated { .. } => self.to_matrix().as_slice().to_vec(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match &self.repr {
            Repr::Equicorrelated { off, .. } => *off == 0.0 || self.n == 1,
            Repr::Dense(e) => (0..self.n)
                .all(|i| (0..self.n).all(|j| i == j || e[i * self.n + j] == 0.0)),
        }
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i) == 0.0)
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Copy with the diagonal set to zero.
    pub fn off_diagonal_part(&self) -> CoefficientMatrix {
        match self.repr {
            Repr::Equicorrelated { off, .. } => Self::with_repr(
                self.n,
                Repr::Equicorrelated { diag: 0.0, off },
            ),
            Repr::Dense(ref e) => {
                let mut e = e.clone();
                for i in 0..self.n {
                    e[i * self.n + i] = 0.0;
                }
                Self::with_repr(self.n, Repr::Dense(e))
            }
        }
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("vector", self.n, x.len())?;
        Ok(match &self.repr {
            Repr::Dense(e) => e
                .chunks_exact(self.n)
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
            Repr::Equicorrelated { diag, off } => {
                let s: f64 = x.iter().sum();
                x.iter().map(|xi| (diag - off) * xi + off * s).collect()
            }
        })
    }

    /// `Aᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("vector", self.n, x.len())?;
        Ok(match &self.repr {
            Repr::Dense(e) => {
                let mut out = vec![0.0; self.n];
                for (row, xi) in e.chunks_exact(self.n).zip(x) {
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * xi;
                    }
                }
                out
            }
            Repr::Equicorrelated { .. } => return self.mul_vec(x),
        })
    }

    /// Cached `‖A‖_F`.
    pub fn frobenius(&self) -> f64 {
        *self.frobenius.get_or_init(|| frobenius_uncached(self))
    }

    /// Cached `‖A‖₂` at [`OPERATOR_NORM_TOL`].
    pub fn operator_norm(&self) -> Result<f64> {
        if let Some(v) = self.operator.get() {
            return Ok(*v);
        }
        let v = operator_norm_uncached(self, OPERATOR_NORM_TOL)?;
        Ok(*self.operator.get_or_init(|| v))
    }
}

/// Mask moments of the pairs `(γ1j, γ2j)`: marginals `π1`, `π2` and joint
/// `π12 = E γ1j γ2j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskMoments {
    pi1: Vec<f64>,
    pi2: Vec<f64>,
    pi12: Vec<f64>,
}

impl MaskMoments {
    /// Validates ranges and the Fréchet bounds
    /// `max(0, π1j + π2j − 1) ≤ π12j ≤ min(π1j, π2j)`.
    pub fn new(pi1: Vec<f64>, pi2: Vec<f64>, pi12: Vec<f64>) -> Result<Self> {
        check_len("pi2", pi1.len(), pi2.len())?;
        check_len("pi12", pi1.len(), pi12.len())?;
        for (j, ((&a, &b), &ab)) in pi1.iter().zip(&pi2).zip(&pi12).enumerate() {
            for (name, v) in [("pi1", a), ("pi2", b), ("pi12", ab)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(format!("{name}[{j}]"), v, "in [0, 1]"));
                }
            }
            check_frechet(j, 0, a, b, ab)?;
        }
        Ok(MaskMoments { pi1, pi2, pi12 })
    }

    /// Fully observed: every probability equals one.
    pub fn complete(n: usize) -> Self {
        MaskMoments {
            pi1: vec![1.0; n],
            pi2: vec![1.0; n],
            pi12: vec![1.0; n],
        }
    }

    /// `γ1j` independent of `γ2j`.
    pub fn independent(pi1: Vec<f64>, pi2: Vec<f64>) -> Result<Self> {
        let pi12 = pi1.iter().zip(&pi2).map(|(a, b)| a * b).collect();
        Self::new(pi1, pi2, pi12)
    }

    /// Identical masks `γ1 = γ2` (the sparse quadratic-form setting).
    pub fn shared(pi: Vec<f64>) -> Result<Self> {
        Self::new(pi.clone(), pi.clone(), pi)
    }

    pub fn n(&self) -> usize {
        self.pi1.len()
    }

    pub fn pi1(&self) -> &[f64] {
        &self.pi1
    }

    pub fn pi2(&self) -> &[f64] {
        &self.pi2
    }

    pub fn pi12(&self) -> &[f64] {
        &self.pi12
    }

    /// `V1 = max_i π1i (1 − π1i)`.
    pub fn v1(&self) -> f64 {
        bernoulli_variance_max(&self.pi1)
    }

    pub fn v2(&self) -> f64 {
        bernoulli_variance_max(&self.pi2)
    }
}

fn bernoulli_variance_max(pi: &[f64]) -> f64 {
    pi.iter().fold(0.0_f64, |m, p| m.max(p * (1.0 - p)))
}

const FRECHET_SLACK: f64 = 1e-12;

pub(crate) fn check_frechet(row: usize, col: usize, a: f64, b: f64, joint: f64) -> Result<()> {
    let lower = (a + b - 1.0).max(0.0);
    let upper = a.min(b);
    if joint < lower - FRECHET_SLACK || joint > upper + FRECHET_SLACK {
        return Err(Error::FrechetViolation {
            row,
            col,
            joint,
            lower,
            upper,
        });
    }
    Ok(())
}

/// `‖A‖_F = √(Σ a_ij²)`.
pub fn frobenius(a: &CoefficientMatrix) -> f64 {
    a.frobenius()
}

fn frobenius_uncached(a: &CoefficientMatrix) -> f64 {
    match &a.repr {
        Repr::Dense(e) => e.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Repr::Equicorrelated { diag, off } => {
            let n = a.n as f64;
            (n * diag * diag + n * (n - 1.0) * off * off).sqrt()
        }
    }
}

/// `‖A‖₂`, the square root of the largest eigenvalue of `AᵀA`, to relative
/// error `tol`.
///
/// Dense matrices use power iteration on `AᵀA` from the all-ones vector;
/// closed-form matrices use their two-point spectrum `{d − o + n o, d − o}`.
pub fn operator_norm(a: &CoefficientMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid("tol", tol, "strictly positive"));
    }
    if tol == OPERATOR_NORM_TOL {
        return a.operator_norm();
    }
    operator_norm_uncached(a, tol)
}

fn operator_norm_uncached(a: &CoefficientMatrix, tol: f64) -> Result<f64> {
    match &a.repr {
        Repr::Equicorrelated { diag, off } => {
            let n = a.n as f64;
            let along_ones = (diag + (n - 1.0) * off).abs();
            if a.n == 1 {
                Ok(along_ones)
            } else {
                Ok(along_ones.max((diag - off).abs()))
            }
        }
        Repr::Dense(_) => power_iteration(a, tol, POWER_ITERATION_CAP),
    }
}

fn gram_apply(a: &CoefficientMatrix, v: &[f64]) -> Vec<f64> {
    let av = a.mul_vec(v).expect("length checked by caller");
    a.tr_mul_vec(&av).expect("length checked by caller")
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn power_iteration(a: &CoefficientMatrix, tol: f64, cap: usize) -> Result<f64> {
    let n = a.n;
    let fro2 = a.frobenius().powi(2);
    if fro2 == 0.0 {
        return Ok(0.0);
    }
    // All-ones first; if it lies in the null space of A, fall back to a fixed
    // irregular vector (fractional parts of multiples of the golden ratio).
    let golden = 0.618_033_988_749_894_9_f64;
    let starts: [Box<dyn Fn(usize) -> f64>; 2] = [
        Box::new(|_| 1.0),
        Box::new(move |i| ((i + 1) as f64 * golden).fract() - 0.5),
    ];
    let mut v = Vec::new();
    let mut w = Vec::new();
    for start in &starts {
        v = (0..n).map(start).collect();
        normalize(&mut v);
        w = gram_apply(a, &v);
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wn > 1e-14 * fro2 {
            break;
        }
    }

    let mut rho: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
    let mut prev_delta = f64::NAN;
    for _ in 0..cap {
        v.clone_from(&w);
        if normalize(&mut v) == 0.0 {
            return Ok(0.0);
        }
        w = gram_apply(a, &v);
        let next: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        let delta = next - rho;
        rho = next;
        if delta <= 0.0 {
            // Rayleigh quotients of power iterates are nondecreasing; a
            // non-positive step is round-off at the fixed point.
            return Ok(rho.max(0.0).sqrt());
        }
        let ratio = delta / prev_delta;
        if ratio > 0.0 && ratio < 1.0 {
            let remaining = delta * ratio / (1.0 - ratio);
            if delta <= tol * rho && remaining <= tol * rho {
                return Ok(rho.sqrt());
            }
        }
        prev_delta = delta;
    }
    Err(Error::NonConvergence {
        iterations: cap,
        last_estimate: rho.max(0.0).sqrt(),
        last_vector: v,
    })
}

/// `‖A‖_{F,π} = √(Σ_j π12j a_jj² + Σ_{i≠j} a_ij² π1i π2j)`.
pub fn pi_frobenius(a: &CoefficientMatrix, m: &MaskMoments) -> Result<f64> {
    Ok(pi_frobenius_parts(a, m)?.total().sqrt())
}

/// The diagonal and off-diagonal sums of `‖A‖²_{F,π}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiFrobeniusParts {
    pub diagonal: f64,
    pub off_diagonal: f64,
}

impl PiFrobeniusParts {
    pub fn total(&self) -> f64 {
        self.diagonal + self.off_diagonal
    }
}

pub fn pi_frobenius_parts(a: &CoefficientMatrix, m: &MaskMoments) -> Result<PiFrobeniusParts> {
    check_len("mask moments", a.n, m.n())?;
    let diagonal = (0..a.n)
        .map(|j| m.pi12[j] * a.get(j, j).powi(2))
        .sum::<f64>();
    let off_diagonal = match a.repr {
        Repr::Equicorrelated { off, .. } => {
            let s1: f64 = m.pi1.iter().sum();
            let s2: f64 = m.pi2.iter().sum();
            let same: f64 = m.pi1.iter().zip(&m.pi2).map(|(x, y)| x * y).sum();
            off * off * (s1 * s2 - same)
        }
        Repr::Dense(ref e) => {
            let mut acc = 0.0;
            for i in 0..a.n {
                for j in 0..a.n {
                    if i != j {
                        acc += e[i * a.n + j].powi(2) * m.pi1[i] * m.pi2[j];
                    }
                }
            }
            acc
        }
    };
    Ok(PiFrobeniusParts {
        diagonal,
        off_diagonal,
    })
}

/// `D(left) A D(right)`: entries `left_i a_ij right_j`.
pub fn diag_scale(a: &CoefficientMatrix, left: &[f64], right: &[f64]) -> Result<CoefficientMatrix> {
    check_len("left scaling", a.n, left.len())?;
    check_len("right scaling", a.n, right.len())?;
    let n = a.n;
    let mut entries = Vec::with_capacity(n * n);
    for (i, l) in left.iter().enumerate() {
        for (j, r) in right.iter().enumerate() {
            entries.push(l * a.get(i, j) * r);
        }
    }
    CoefficientMatrix::dense(n, entries)
}

/// The matrix `(nI − 11ᵀ)/(n(n−1))` with `s_kl = z1ᵀ A z2` for centered
/// columns: diagonal `1/n`, off-diagonal `−1/(n(n−1))`.
pub fn centering_coefficient_matrix(n: usize) -> Result<CoefficientMatrix> {
    if n < 2 {
        return Err(invalid("n", n as f64, "at least 2"));
    }
    let nf = n as f64;
    let denom = nf * (nf - 1.0);
    CoefficientMatrix::equicorrelated(n, (nf - 1.0) / denom, -1.0 / denom)
}

/// The inverse-probability-weighted matrix
/// `(1/(nπ_joint) + 1/(n(n−1)π_x π_y)) I − 11ᵀ/(n(n−1)π_x π_y)`.
pub fn ipw_coefficient_matrix(
    n: usize,
    pi_joint: f64,
    pi_x: f64,
    pi_y: f64,
) -> Result<CoefficientMatrix> {
    if n < 2 {
        return Err(invalid("n", n as f64, "at least 2"));
    }
    for (name, v) in [("pi_joint", pi_joint), ("pi_x", pi_x), ("pi_y", pi_y)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(name, v, "strictly positive"));
        }
    }
    let nf = n as f64;
    CoefficientMatrix::equicorrelated(
        n,
        1.0 / (nf * pi_joint),
        -1.0 / (nf * (nf - 1.0) * pi_x * pi_y),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn frobenius_examples() {
        let id = CoefficientMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(close(frobenius(&id), std::f64::consts::SQRT_2, 1e-15));
        let c5 = centering_coefficient_matrix(5).unwrap();
        assert!(close(frobenius(&c5), 0.5, 1e-14));
        let zero = CoefficientMatrix::dense(3, vec![0.0; 9]).unwrap();
        assert_eq!(frobenius(&zero), 0.0);
    }

    #[test]
    fn operator_norm_examples() {
        let id = CoefficientMatrix::dense(4, Matrix::identity(4).as_slice().to_vec()).unwrap();
        assert!(close(operator_norm(&id, 1e-10).unwrap(), 1.0, 1e-10));
        let c5 = centering_coefficient_matrix(5).unwrap();
        assert!(close(operator_norm(&c5, 1e-10).unwrap(), 0.25, 1e-14));
        let d = CoefficientMatrix::diagonal(&[3.0, -4.0]).unwrap();
        assert!(close(operator_norm(&d, 1e-10).unwrap(), 4.0, 1e-9));
    }

    #[test]
    fn operator_norm_escapes_null_start() {
        // the all-ones vector is in the null space of this matrix
        let a = CoefficientMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!(close(a.operator_norm().unwrap(), 2.0, 1e-9));
        let dense_centering =
            CoefficientMatrix::from_matrix(&centering_coefficient_matrix(6).unwrap().to_matrix())
                .unwrap();
        assert!(close(dense_centering.operator_norm().unwrap(), 0.2, 1e-9));
    }

    #[test]
    fn operator_norm_rejects_bad_tol() {
        let id = CoefficientMatrix::identity(2).unwrap();
        assert!(matches!(
            operator_norm(&id, 0.0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn operator_norm_reports_non_convergence() {
        // nearly equal leading singular values, far too few iterations
        let a = CoefficientMatrix::diagonal(&[1.0, 1.0 - 1e-3, 0.5]).unwrap();
        match power_iteration(&a, 1e-16, 3) {
            Err(Error::NonConvergence {
                iterations,
                last_estimate,
                last_vector,
            }) => {
                assert_eq!(iterations, 3);
                assert!(last_estimate > 0.9 && last_estimate <= 1.0);
                assert_eq!(last_vector.len(), 3);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn pi_frobenius_examples() {
        let a = CoefficientMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let ones = MaskMoments::complete(2);
        assert!(close(pi_frobenius(&a, &ones).unwrap(), frobenius(&a), 1e-15));

        let id = CoefficientMatrix::diagonal(&[1.0, 1.0]).unwrap();
        let m = MaskMoments::new(vec![0.5, 0.5], vec![0.5, 0.5], vec![0.25, 0.25]).unwrap();
        assert!(close(pi_frobenius(&id, &m).unwrap(), 0.5_f64.sqrt(), 1e-15));

        let swap = CoefficientMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let m = MaskMoments::independent(vec![0.5, 0.5], vec![0.4, 0.4]).unwrap();
        assert!(close(pi_frobenius(&swap, &m).unwrap(), 0.4_f64.sqrt(), 1e-15));
    }

    #[test]
    fn pi_frobenius_dimension_mismatch() {
        let a = CoefficientMatrix::identity(3).unwrap();
        assert!(matches!(
            pi_frobenius(&a, &MaskMoments::complete(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn closed_form_pi_frobenius_matches_dense() {
        let a = ipw_coefficient_matrix(6, 0.4, 0.7, 0.6).unwrap();
        let dense = CoefficientMatrix::from_matrix(&a.to_matrix()).unwrap();
        let m = MaskMoments::new(
            vec![0.9, 0.8, 0.7, 0.6, 0.5, 0.4],
            vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            vec![0.3, 0.3, 0.3, 0.3, 0.3, 0.3],
        )
        .unwrap();
        assert!(close(
            pi_frobenius(&a, &m).unwrap(),
            pi_frobenius(&dense, &m).unwrap(),
            1e-13
        ));
    }

    #[test]
    fn mask_moments_reject_frechet_violation() {
        let err = MaskMoments::new(vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.6]).unwrap_err();
        assert!(matches!(err, Error::FrechetViolation { row: 1, .. }));
        let err = MaskMoments::new(vec![0.9], vec![0.9], vec![0.7]).unwrap_err();
        assert!(matches!(err, Error::FrechetViolation { .. }));
    }

    #[test]
    fn diag_scale_examples() {
        let a = CoefficientMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(diag_scale(&a, &[1.0, 1.0], &[1.0, 1.0]).unwrap(), a);
        let id = CoefficientMatrix::diagonal(&[1.0, 1.0]).unwrap();
        let scaled = diag_scale(&id, &[2.0, 3.0], &[1.0, 1.0]).unwrap();
        assert_eq!(scaled, CoefficientMatrix::diagonal(&[2.0, 3.0]).unwrap());
        let ones = CoefficientMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let z = diag_scale(&ones, &[0.0, 0.0], &[5.0, -7.0]).unwrap();
        assert_eq!(frobenius(&z), 0.0);
        assert!(diag_scale(&a, &[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn centering_matrix_examples() {
        let c2 = centering_coefficient_matrix(2).unwrap();
        assert_eq!(c2.to_matrix().as_slice(), &[0.5, -0.5, -0.5, 0.5]);
        for n in [2, 3, 7, 40] {
            let c = centering_coefficient_matrix(n).unwrap();
            for i in 0..n {
                let row: f64 = (0..n).map(|j| c.get(i, j)).sum();
                assert!(row.abs() < 1e-15);
            }
        }
        assert!(centering_coefficient_matrix(1).is_err());
    }

    #[test]
    fn ipw_matrix_examples() {
        let a = ipw_coefficient_matrix(2, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(a.to_matrix().as_slice(), &[1.0, -2.0, -2.0, 1.0]);
        let a = ipw_coefficient_matrix(3, 1.0, 1.0, 1.0).unwrap();
        assert!(close(a.get(0, 0), 1.0 / 3.0, 1e-15));
        assert!(close(a.get(0, 1), -1.0 / 6.0, 1e-15));
        // with unit probabilities the weighted matrix is the centering matrix
        let c = centering_coefficient_matrix(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(a.get(i, j), c.get(i, j), 1e-15));
            }
        }
        assert!(matches!(
            ipw_coefficient_matrix(4, 0.0, 0.5, 0.5),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn cached_norms_are_stable_across_threads() {
        let a = CoefficientMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let shared = std::sync::Arc::new(a);
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let a = shared.clone();
                std::thread::spawn(move || (a.frobenius(), a.operator_norm().unwrap()))
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(results.windows(2).all(|w| w[0] == w[1]));
    }
}
