//! Right-hand sides of the sparse bilinear Hanson-Wright inequalities and the
//! cutoffs that control the family-wise error rate of entrywise
//! cross-covariance tests.
//!
//! Every bound has the shape `d · exp(−c · min(t²/E1, t/E2))`. The numerical
//! constants `c` and `d` are not pinned down by the theory, so they are plain
//! parameters here ([`DEFAULT_C`], [`DEFAULT_D`], [`DEFAULT_D_NONCENTERED`])
//! and can be replaced by Monte Carlo calibrated values.

mod terms;
mod threshold;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_positive, invalid, Error, Result};
use crate::norms::{pi_frobenius_parts, CoefficientMatrix, MaskMoments};

pub use terms::{
    e1_e2_bounded_error, e1_e2_me_entry, e1_e2_missing_entry, e1_e2_noncentered, BoundTerms, Term,
};
pub use threshold::{
    f2, f3, g2, g3, threshold_complete, threshold_me, threshold_missing, Dimensions, ErrorScales,
    MissingScales, SampleSizeCondition, ThresholdPlan,
};

pub const DEFAULT_C: f64 = 1.0 / 16.0;
/// Leading multiplier of the centered bounds.
pub const DEFAULT_D: f64 = 2.0;
/// Leading multiplier of the non-centered bounds (union over eight pieces).
pub const DEFAULT_D_NONCENTERED: f64 = 8.0;

/// Sub-Gaussian norm bounds `‖Z1j‖ψ₂ ≤ K1`, `‖Z2j‖ψ₂ ≤ K2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianParams {
    k1: f64,
    k2: f64,
}

impl SubGaussianParams {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        check_positive("K1", k1)?;
        check_positive("K2", k2)?;
        Ok(SubGaussianParams { k1, k2 })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }
}

/// Means of the non-centered variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanVectors {
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
}

impl MeanVectors {
    pub fn new(mu1: Vec<f64>, mu2: Vec<f64>) -> Result<Self> {
        check_len("mu2", mu1.len(), mu2.len())?;
        if mu1.iter().chain(&mu2).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean vector"));
        }
        Ok(MeanVectors { mu1, mu2 })
    }

    pub fn zeros(n: usize) -> Self {
        MeanVectors {
            mu1: vec![0.0; n],
            mu2: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.mu1.len()
    }
}

/// Almost-sure upper bounds `γ_ij ≤ B_ij` of bounded multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBounds {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

impl ErrorBounds {
    pub fn new(b1: Vec<f64>, b2: Vec<f64>) -> Result<Self> {
        check_len("B2", b1.len(), b2.len())?;
        for (i, v) in b1.iter().enumerate() {
            check_positive(format!("B1[{i}]"), *v)?;
        }
        for (i, v) in b2.iter().enumerate() {
            check_positive(format!("B2[{i}]"), *v)?;
        }
        Ok(ErrorBounds { b1, b2 })
    }

    pub fn ones(n: usize) -> Self {
        ErrorBounds {
            b1: vec![1.0; n],
            b2: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.b1.len()
    }
}

/// A tail probability bound. `raw` may exceed one; [`value`](Self::value)
/// is the clamped probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    pub raw: f64,
}

impl TailProbability {
    pub fn value(&self) -> f64 {
        self.raw.min(1.0)
    }

    pub fn is_clamped(&self) -> bool {
        self.raw > 1.0
    }
}

/// Assembled `E1`, `E2` and constants of one bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub e1: f64,
    pub e2: f64,
    pub c: f64,
    pub d: f64,
}

impl BoundEvaluation {
    pub fn new(e1: f64, e2: f64, c: f64, d: f64) -> Result<Self> {
        check_positive("E1", e1)?;
        check_positive("E2", e2)?;
        check_positive("c", c)?;
        check_positive("d", d)?;
        Ok(BoundEvaluation { e1, e2, c, d })
    }

    /// `t = E1/E2`: below it the exponent is quadratic in `t`, above linear.
    pub fn kink(&self) -> f64 {
        self.e1 / self.e2
    }

    /// `min(t²/E1, t/E2)`, the exponent before scaling by `c`.
    pub fn rate(&self, t: f64) -> f64 {
        (t * t / self.e1).min(t / self.e2)
    }

    pub fn exponent(&self, t: f64) -> f64 {
        -self.c * self.rate(t)
    }

    /// `d · exp(−c · min(t²/E1, t/E2))`.
    pub fn tail(&self, t: f64) -> TailProbability {
        TailProbability {
            raw: self.d * self.exponent(t).exp(),
        }
    }

    pub fn tails(&self, grid: &[f64]) -> Vec<TailProbability> {
        grid.iter().map(|&t| self.tail(t)).collect()
    }

    pub fn with_c(self, c: f64) -> Self {
        BoundEvaluation { c, ..self }
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(invalid("t", t, "strictly positive"))
    }
}

/// Which part of `A` a centered bound is stated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    /// Any `A`, with `‖A‖_{F,π}` and `‖A‖₂`.
    Full,
    /// Diagonal `A`: `Σ π12j a_jj²` and `max |a_jj|`.
    Diagonal,
    /// Zero-diagonal `A`: `Σ_{i≠j} a_ij² π1i π2j` and `‖A‖₂`.
    OffDiagonal,
}

/// `E1`, `E2` of the centered bound for the given structure.
pub fn centered_evaluation(
    sg: SubGaussianParams,
    a: &CoefficientMatrix,
    m: &MaskMoments,
    c: f64,
    structure: Structure,
) -> Result<BoundEvaluation> {
    let parts = pi_frobenius_parts(a, m)?;
    let kk = sg.k1 * sg.k2;
    let (variance, scale) = match structure {
        Structure::Full => (parts.total(), a.operator_norm()?),
        Structure::Diagonal => {
            if !a.is_diagonal() {
                return Err(Error::StructureMismatch {
                    expected: "diagonal",
                    detail: "off-diagonal entries are nonzero".into(),
                });
            }
            let max_diag = a
                .diagonal_values()
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            (parts.diagonal, max_diag)
        }
        Structure::OffDiagonal => {
            if !a.has_zero_diagonal() {
                return Err(Error::StructureMismatch {
                    expected: "off-diagonal",
                    detail: "diagonal entries are nonzero".into(),
                });
            }
            (parts.off_diagonal, a.operator_norm()?)
        }
    };
    BoundEvaluation::new(kk * kk * variance, kk * scale, c, DEFAULT_D)
}

/// Tail bound for a centered sparse bilinear form `(Z1∗γ1)ᵀ A (Z2∗γ2)`:
/// `2 exp(−c min(t²/(K1²K2²‖A‖²_{F,π}), t/(K1K2‖A‖₂)))`, with the diagonal
/// and off-diagonal specializations selected by `structure`.
pub fn hw_tail_centered(
    t: f64,
    sg: SubGaussianParams,
    a: &CoefficientMatrix,
    m: &MaskMoments,
    c: f64,
    structure: Structure,
) -> Result<TailProbability> {
    check_t(t)?;
    Ok(centered_evaluation(sg, a, m, c, structure)?.tail(t))
}

/// `d exp(−c min(t²/E1, t/E2))` for an assembled evaluation.
pub fn hw_tail_noncentered(t: f64, ev: &BoundEvaluation) -> Result<TailProbability> {
    check_t(t)?;
    Ok(ev.tail(t))
}

/// `E1`, `E2` of the bounded-multiplier bound:
/// `K1²K2²‖D(B1) A D(B2)‖²_F` and `K1K2‖A‖₂`.
pub fn bounded_error_evaluation(
    sg: SubGaussianParams,
    a: &CoefficientMatrix,
    b: &ErrorBounds,
    c: f64,
) -> Result<BoundEvaluation> {
    let scaled = crate::norms::diag_scale(a, &b.b1, &b.b2)?;
    let kk = sg.k1 * sg.k2;
    BoundEvaluation::new(
        kk * kk * scaled.frobenius().powi(2),
        kk * a.operator_norm()?,
        c,
        DEFAULT_D,
    )
}

/// Tail bound for a centered bilinear form with bounded non-negative
/// multipliers `0 ≤ γ_ij ≤ B_ij`.
pub fn hw_tail_bounded_error(
    t: f64,
    sg: SubGaussianParams,
    a: &CoefficientMatrix,
    b: &ErrorBounds,
    c: f64,
) -> Result<TailProbability> {
    check_t(t)?;
    Ok(bounded_error_evaluation(sg, a, b, c)?.tail(t))
}

/// Hoeffding bound `2 exp(−c t²/(K²‖α‖₂²))` for `Σ α_i γ_i Z_i`.
pub fn hoeffding_tail(t: f64, k: f64, alpha: &[f64], c: f64) -> Result<TailProbability> {
    check_t(t)?;
    check_positive("K", k)?;
    check_positive("c", c)?;
    let norm2: f64 = alpha.iter().map(|a| a * a).sum();
    if !(norm2 > 0.0) {
        return Err(invalid(
            "coefficient vector norm",
            norm2,
            "strictly positive (zero coefficients leave the bound undefined)",
        ));
    }
    Ok(TailProbability {
        raw: 2.0 * (-c * t * t / (k * k * norm2)).exp(),
    })
}
