//! Cross-covariance estimators for complete, missing and error-contaminated
//! data, together with the bilinear-form evaluation they reduce to.
//!
//! Every estimate `ŝ_kℓ` is a bilinear form `z1ᵀ A z2` of two data columns
//! with an equicorrelated coefficient matrix, so each estimator computes the
//! off-diagonal cross term through the sum-product identity
//! `Σ_{i≠j} x_i y_j = (Σ x)(Σ y) − Σ x_i y_i` at O(n) cost per entry.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::matrix::Matrix;
use crate::norms::CoefficientMatrix;
use crate::simulation::model::{MeasurementErrorSpec, MissingSpec};

/// Fully observed samples: rows are observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrixPair {
    x: Matrix,
    y: Matrix,
}

impl SampleMatrixPair {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        check_len("sample rows", x.rows(), y.rows())?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::NonFinite("sample matrix"));
        }
        Ok(SampleMatrixPair { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn q(&self) -> usize {
        self.y.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    /// Rows reordered as `order[new] = old`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        SampleMatrixPair {
            x: self.x.permute_rows(order),
            y: self.y.permute_rows(order),
        }
    }
}

/// Partially observed samples `X̃ = δ^X ∗ X`, `Ỹ = δ^Y ∗ Y` together with
/// the factors `δ`. Missing entries are explicit zeros in `X̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedSamplePair {
    xt: Matrix,
    yt: Matrix,
    delta_x: Matrix,
    delta_y: Matrix,
}

impl MaskedSamplePair {
    /// Applies the factors to fully observed data.
    pub fn from_full(full: &SampleMatrixPair, delta_x: Matrix, delta_y: Matrix) -> Result<Self> {
        check_shape("delta_x", &delta_x, full.n(), full.p())?;
        check_shape("delta_y", &delta_y, full.n(), full.q())?;
        let xt = full.x.hadamard(&delta_x)?;
        let yt = full.y.hadamard(&delta_y)?;
        Self::new(xt, yt, delta_x, delta_y)
    }

    /// Requires matching shapes, finite entries, non-negative factors and
    /// `X̃ = 0` wherever the factor is zero.
    pub fn new(xt: Matrix, yt: Matrix, delta_x: Matrix, delta_y: Matrix) -> Result<Self> {
        check_len("sample rows", xt.rows(), yt.rows())?;
        check_shape("delta_x", &delta_x, xt.rows(), xt.cols())?;
        check_shape("delta_y", &delta_y, yt.rows(), yt.cols())?;
        for (name, data, delta) in [("x", &xt, &delta_x), ("y", &yt, &delta_y)] {
            if !(data.is_finite() && delta.is_finite()) {
                return Err(Error::NonFinite("masked sample"));
            }
            for i in 0..data.rows() {
                for j in 0..data.cols() {
                    let d = delta[(i, j)];
                    if d < 0.0 {
                        return Err(invalid(format!("delta_{name}[{i}][{j}]"), d, "non-negative"));
                    }
                    if d == 0.0 && data[(i, j)] != 0.0 {
                        return Err(invalid(
                            format!("{name}t[{i}][{j}]"),
                            data[(i, j)],
                            "zero where the factor is zero",
                        ));
                    }
                }
            }
        }
        Ok(MaskedSamplePair {
            xt,
            yt,
            delta_x,
            delta_y,
        })
    }

    /// All factors one.
    pub fn fully_observed(full: &SampleMatrixPair) -> Self {
        MaskedSamplePair {
            xt: full.x.clone(),
            yt: full.y.clone(),
            delta_x: Matrix::filled(full.n(), full.p(), 1.0),
            delta_y: Matrix::filled(full.n(), full.q(), 1.0),
        }
    }

    pub fn n(&self) -> usize {
        self.xt.rows()
    }

    pub fn p(&self) -> usize {
        self.xt.cols()
    }

    pub fn q(&self) -> usize {
        self.yt.cols()
    }

    pub fn xt(&self) -> &Matrix {
        &self.xt
    }

    pub fn yt(&self) -> &Matrix {
        &self.yt
    }

    pub fn delta_x(&self) -> &Matrix {
        &self.delta_x
    }

    pub fn delta_y(&self) -> &Matrix {
        &self.delta_y
    }

    pub fn permute_rows(&self, order: &[usize]) -> Self {
        MaskedSamplePair {
            xt: self.xt.permute_rows(order),
            yt: self.yt.permute_rows(order),
            delta_x: self.delta_x.permute_rows(order),
            delta_y: self.delta_y.permute_rows(order),
        }
    }
}

fn check_shape(what: &'static str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    check_len(what, rows, m.rows())?;
    check_len(what, cols, m.cols())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Complete,
    Ipw,
    BoundedError,
}

/// A `p × q` estimate of `Σ_XY`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMatrix {
    pub values: Matrix,
    pub kind: EstimateKind,
}

impl EstimateMatrix {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[(k, l)]
    }

    /// CSV with a header row `k/l,0,1,…` and the row index in the first
    /// column; values carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k/l");
        for l in 0..self.values.cols() {
            out.push_str(&format!(",{l}"));
        }
        out.push('\n');
        for k in 0..self.values.rows() {
            out.push_str(&k.to_string());
            for &v in self.values.row(k) {
                out.push(',');
                out.push_str(&format_value(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Formats a float with 17 significant digits, '.' as decimal separator.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// `z1ᵀ A z2` computed as `z1 · (A z2)`; O(n) for equicorrelated `A`.
pub fn bilinear_value(z1: &[f64], z2: &[f64], a: &CoefficientMatrix) -> Result<f64> {
    check_len("z1", a.n(), z1.len())?;
    let az2 = a.mul_vec(z2)?;
    Ok(z1.iter().zip(&az2).map(|(x, y)| x * y).sum())
}

/// Reference double loop `Σ_i Σ_j z1_i a_ij z2_j`.
pub fn bilinear_value_naive(z1: &[f64], z2: &[f64], a: &CoefficientMatrix) -> Result<f64> {
    check_len("z1", a.n(), z1.len())?;
    check_len("z2", a.n(), z2.len())?;
    let mut total = 0.0;
    for (i, &x) in z1.iter().enumerate() {
        for (j, &y) in z2.iter().enumerate() {
            total += x * a.get(i, j) * y;
        }
    }
    Ok(total)
}

/// `s_kℓ = Σ (X_ik − X̄_k)(Y_iℓ − Ȳ_ℓ) / (n − 1)`, two-pass.
pub fn sample_cross_cov(s: &SampleMatrixPair) -> Result<EstimateMatrix> {
    let n = s.n();
    if n < 2 {
        return Err(invalid("n", n as f64, "at least 2"));
    }
    let mean_x = column_sums(&s.x).into_iter().map(|v| v / n as f64).collect::<Vec<_>>();
    let mean_y = column_sums(&s.y).into_iter().map(|v| v / n as f64).collect::<Vec<_>>();
    let mut values = Matrix::zeros(s.p(), s.q());
    for i in 0..n {
        let (xr, yr) = (s.x.row(i), s.y.row(i));
        for k in 0..s.p() {
            let dx = xr[k] - mean_x[k];
            let out = values.row_mut(k);
            for l in 0..s.q() {
                out[l] += dx * (yr[l] - mean_y[l]);
            }
        }
    }
    let values = values.map(|v| v / (n as f64 - 1.0));
    finish(values, EstimateKind::Complete)
}

/// Inverse-probability-weighted estimator
/// `s̃_kℓ = Σ_i X̃_ik Ỹ_iℓ/(nπ_kℓ) − Σ_{i≠j} X̃_ik Ỹ_jℓ/(n(n−1)π_k^X π_ℓ^Y)`.
///
/// The factors must be 0/1 indicators.
pub fn ipw_cross_cov(m: &MaskedSamplePair, spec: &MissingSpec) -> Result<EstimateMatrix> {
    check_dims(m, spec.p(), spec.q())?;
    for (name, delta) in [("delta_x", &m.delta_x), ("delta_y", &m.delta_y)] {
        if let Some(&v) = delta.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(invalid(name, v, "a 0/1 indicator"));
        }
    }
    let values = weighted_cross_cov(m, spec.pi_x(), spec.pi_y(), spec.pi_xy(), "pi")?;
    finish(values, EstimateKind::Ipw)
}

/// Moment-corrected estimator for bounded multiplicative errors,
/// `š_kℓ` with `u` in place of `π`.
pub fn me_cross_cov(m: &MaskedSamplePair, spec: &MeasurementErrorSpec) -> Result<EstimateMatrix> {
    check_dims(m, spec.p(), spec.q())?;
    for (name, delta, bound) in [
        ("delta_x", &m.delta_x, spec.b_x()),
        ("delta_y", &m.delta_y, spec.b_y()),
    ] {
        for i in 0..delta.rows() {
            for (j, (&v, &b)) in delta.row(i).iter().zip(bound).enumerate() {
                if v > b {
                    return Err(invalid(format!("{name}[{i}][{j}]"), v, "at most its bound B"));
                }
            }
        }
    }
    let values = weighted_cross_cov(m, spec.u_x(), spec.u_y(), spec.u_xy(), "u")?;
    finish(values, EstimateKind::BoundedError)
}

fn check_dims(m: &MaskedSamplePair, p: usize, q: usize) -> Result<()> {
    check_len("spec p", m.p(), p)?;
    check_len("spec q", m.q(), q)?;
    if m.n() < 2 {
        return Err(invalid("n", m.n() as f64, "at least 2"));
    }
    Ok(())
}

fn weighted_cross_cov(
    m: &MaskedSamplePair,
    wx: &[f64],
    wy: &[f64],
    wxy: &Matrix,
    name: &str,
) -> Result<Matrix> {
    for (k, &v) in wx.iter().enumerate() {
        positive_weight(format!("{name}_x[{k}]"), v)?;
    }
    for (l, &v) in wy.iter().enumerate() {
        positive_weight(format!("{name}_y[{l}]"), v)?;
    }
    for k in 0..wxy.rows() {
        for l in 0..wxy.cols() {
            positive_weight(format!("{name}_xy[{k}][{l}]"), wxy[(k, l)])?;
        }
    }
    let nf = m.n() as f64;
    let sx = column_sums(&m.xt);
    let sy = column_sums(&m.yt);
    let mut diag = Matrix::zeros(m.p(), m.q());
    for i in 0..m.n() {
        let (xr, yr) = (m.xt.row(i), m.yt.row(i));
        for (k, &x) in xr.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let out = diag.row_mut(k);
            for (o, &y) in out.iter_mut().zip(yr) {
                *o += x * y;
            }
        }
    }
    Ok(Matrix::from_fn(m.p(), m.q(), |k, l| {
        let d = diag[(k, l)];
        let cross = sx[k] * sy[l] - d;
        d / (nf * wxy[(k, l)]) - cross / (nf * (nf - 1.0) * wx[k] * wy[l])
    }))
}

fn positive_weight(name: String, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, v, "strictly positive"))
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut s = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (acc, v) in s.iter_mut().zip(m.row(i)) {
            *acc += v;
        }
    }
    s
}

fn finish(values: Matrix, kind: EstimateKind) -> Result<EstimateMatrix> {
    if !values.is_finite() {
        return Err(Error::NonFinite("estimate"));
    }
    Ok(EstimateMatrix { values, kind })
}

/// Rejection decisions `|est(k, ℓ)| > cutoff`; ties are not rejected.
pub fn threshold_matrix(est: &EstimateMatrix, cutoff: f64) -> Result<Vec<Vec<bool>>> {
    if !(cutoff > 0.0) {
        return Err(invalid("cutoff", cutoff, "strictly positive"));
    }
    Ok((0..est.values.rows())
        .map(|k| est.values.row(k).iter().map(|v| v.abs() > cutoff).collect())
        .collect())
}
