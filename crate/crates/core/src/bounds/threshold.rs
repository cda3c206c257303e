//! Cutoffs `c(n, p, q)` with `P[max_kl |ŝ_kl − σ_kl| > c] ≤ α` for the
//! complete-data, missing-data and measurement-error estimators.

use serde::{Deserialize, Serialize};

use super::SubGaussianParams;
use crate::error::{check_positive, invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl Dimensions {
    pub fn new(n: usize, p: usize, q: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", n as f64, "at least 2"));
        }
        if p == 0 || q == 0 {
            return Err(invalid("p*q", (p * q) as f64, "at least 1"));
        }
        Ok(Dimensions { n, p, q })
    }
}

/// Outcome of the sample-size condition attached to a cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "reason")]
pub enum SampleSizeCondition {
    Satisfied,
    Violated,
    /// The condition cannot be evaluated as written.
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPlan {
    pub dims: Dimensions,
    pub alpha: f64,
    /// Numerical constant (`C1`, `C2` or `C3`).
    pub constant: f64,
    /// Scale factor (`K_X K_Y`, `f2` or `f3`).
    pub scale: f64,
    /// `√(log(pq/α) / …)`.
    pub rate: f64,
    pub cutoff: f64,
    pub condition: SampleSizeCondition,
    /// For complete data: whether `cutoff/(K_X K_Y) < 1`, the regime where
    /// the quadratic exponent applies.
    pub subgaussian_regime: Option<bool>,
}

impl ThresholdPlan {
    /// `scale · rate`, the cutoff with unit constant.
    pub fn unit_cutoff(&self) -> f64 {
        self.scale * self.rate
    }

    /// The same plan with a different numerical constant.
    pub fn with_constant(&self, constant: f64) -> Result<ThresholdPlan> {
        check_positive("constant", constant)?;
        let cutoff = constant * self.unit_cutoff();
        let subgaussian_regime = self.subgaussian_regime.map(|_| cutoff / self.scale < 1.0);
        Ok(ThresholdPlan {
            constant,
            cutoff,
            subgaussian_regime,
            ..self.clone()
        })
    }

    /// Whether the sample-size condition holds; a degenerate condition is an
    /// error.
    pub fn condition_ok(&self) -> Result<bool> {
        match &self.condition {
            SampleSizeCondition::Satisfied => Ok(true),
            SampleSizeCondition::Violated => Ok(false),
            SampleSizeCondition::Degenerate(reason) => {
                Err(Error::DegenerateCondition(reason.clone()))
            }
        }
    }
}

/// `log(pq/α)`, required to be positive.
fn log_tests(dims: Dimensions, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", alpha, "in (0, 1)"));
    }
    let ratio = (dims.p * dims.q) as f64 / alpha;
    if ratio <= 1.0 {
        return Err(invalid("pq/alpha", ratio, "greater than 1"));
    }
    Ok(ratio.ln())
}

fn condition(holds: bool) -> SampleSizeCondition {
    if holds {
        SampleSizeCondition::Satisfied
    } else {
        SampleSizeCondition::Violated
    }
}

/// Complete data: `C1 K_X K_Y √(log(pq/α)/(n−1))`, valid when
/// `n/log(pq/α) > d1`.
pub fn threshold_complete(
    dims: Dimensions,
    alpha: f64,
    sg: SubGaussianParams,
    c1: f64,
    d1: f64,
) -> Result<ThresholdPlan> {
    check_positive("C1", c1)?;
    check_positive("d1", d1)?;
    let log = log_tests(dims, alpha)?;
    let scale = sg.k1() * sg.k2();
    let rate = (log / (dims.n as f64 - 1.0)).sqrt();
    let cutoff = c1 * scale * rate;
    Ok(ThresholdPlan {
        dims,
        alpha,
        constant: c1,
        scale,
        rate,
        cutoff,
        condition: condition(dims.n as f64 / log > d1),
        subgaussian_regime: Some(cutoff / scale < 1.0),
    })
}

/// Scales entering the missing-data cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingScales {
    /// `(max_k |μ_k^X|, max_l |μ_l^Y|)`.
    pub mu_max: (f64, f64),
    /// `min_kl π_kl`.
    pub pi_min_joint: f64,
    /// `min(min_k π_k^X, min_l π_l^Y)`.
    pub pi_min_marginal: f64,
}

/// `max{K_X K_Y, μ_X K_Y, K_X μ_Y, μ_X μ_Y, μ_X², μ_Y²}`.
pub fn f2(sg: SubGaussianParams, mu_max: (f64, f64)) -> f64 {
    let (kx, ky) = (sg.k1(), sg.k2());
    let (mx, my) = mu_max;
    [kx * ky, mx * ky, kx * my, mx * my, mx * mx, my * my]
        .into_iter()
        .fold(0.0, f64::max)
}

/// `min{1, μ_X/K_Y, μ_Y/K_X, μ_X μ_Y/(K_X K_Y)}`.
pub fn g2(sg: SubGaussianParams, mu_max: (f64, f64)) -> f64 {
    let (kx, ky) = (sg.k1(), sg.k2());
    let (mx, my) = mu_max;
    [1.0, mx / ky, my / kx, mx * my / (kx * ky)]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Missing data: `C2 f2 √(log(pq/α)/((n−1)(π_J ∧ π_M²)))`, valid when
/// `(n−1)/log(pq/α) > d2/(g2 (π_J ∧ π_M²))`. The condition is reported as
/// degenerate when `g2 = 0`.
pub fn threshold_missing(
    dims: Dimensions,
    alpha: f64,
    sg: SubGaussianParams,
    scales: MissingScales,
    c2: f64,
    d2: f64,
) -> Result<ThresholdPlan> {
    check_positive("C2", c2)?;
    check_positive("d2", d2)?;
    let (pj, pm) = (scales.pi_min_joint, scales.pi_min_marginal);
    crate::error::check_probability("pi_min_joint", pj)?;
    crate::error::check_probability("pi_min_marginal", pm)?;
    let (mx, my) = scales.mu_max;
    if !(mx >= 0.0 && my >= 0.0) {
        return Err(invalid("mu_max", mx.min(my), "non-negative"));
    }
    let log = log_tests(dims, alpha)?;
    let prob = pj.min(pm * pm);
    let scale = f2(sg, scales.mu_max);
    let rate = (log / ((dims.n as f64 - 1.0) * prob)).sqrt();
    let g = g2(sg, scales.mu_max);
    let condition = if g > 0.0 {
        condition((dims.n as f64 - 1.0) / log > d2 / (g * prob))
    } else {
        SampleSizeCondition::Degenerate(format!(
            "g2 = 0 because max|mu_X| = {mx} or max|mu_Y| = {my} is zero"
        ))
    };
    Ok(ThresholdPlan {
        dims,
        alpha,
        constant: c2,
        scale,
        rate,
        cutoff: c2 * scale * rate,
        condition,
        subgaussian_regime: None,
    })
}

/// Scales entering the measurement-error cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorScales {
    pub mu_max: (f64, f64),
    /// `(max_k B_k^X, max_l B_l^Y)`.
    pub b_max: (f64, f64),
    /// `min_kl u_kl`.
    pub u_min_joint: f64,
    /// `min(min_k u_k^X, min_l u_l^Y)`.
    pub u_min_marginal: f64,
    /// `(max_k u_k^X, max_l u_l^Y)`, the `u_X`, `u_Y` of `f3`.
    pub u_max: (f64, f64),
}

/// `max{K_X K_Y B_X B_Y, μ_X K_Y B_X B_Y, K_X μ_Y B_X B_Y, μ_X μ_Y B_X B_Y,
/// K_X μ_Y B_X u_Y, μ_X K_Y u_X B_Y}`.
pub fn f3(sg: SubGaussianParams, s: &ErrorScales) -> f64 {
    let (kx, ky) = (sg.k1(), sg.k2());
    let (mx, my) = s.mu_max;
    let (bx, by) = s.b_max;
    let (ux, uy) = s.u_max;
    [
        kx * ky * bx * by,
        mx * ky * bx * by,
        kx * my * bx * by,
        mx * my * bx * by,
        kx * my * bx * uy,
        mx * ky * ux * by,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// `min{1, K_X/(B_X μ_X), K_Y/(B_Y μ_Y)}`; a zero mean makes its ratio
/// infinite.
pub fn g3(sg: SubGaussianParams, s: &ErrorScales) -> f64 {
    let (mx, my) = s.mu_max;
    let (bx, by) = s.b_max;
    [1.0, sg.k1() / (bx * mx), sg.k2() / (by * my)]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Measurement error: `C3 f3 √(log(pq/α)/((n−1)(u_J² ∧ u_M⁴)))`, valid when
/// `(n−1)/log(pq/α) ≥ d3/(g3 (u_J ∧ u_M²))`.
pub fn threshold_me(
    dims: Dimensions,
    alpha: f64,
    sg: SubGaussianParams,
    scales: ErrorScales,
    c3: f64,
    d3: f64,
) -> Result<ThresholdPlan> {
    check_positive("C3", c3)?;
    check_positive("d3", d3)?;
    check_positive("u_min_joint", scales.u_min_joint)?;
    check_positive("u_min_marginal", scales.u_min_marginal)?;
    check_positive("B_X", scales.b_max.0)?;
    check_positive("B_Y", scales.b_max.1)?;
    check_positive("u_X", scales.u_max.0)?;
    check_positive("u_Y", scales.u_max.1)?;
    let (mx, my) = scales.mu_max;
    if !(mx >= 0.0 && my >= 0.0) {
        return Err(invalid("mu_max", mx.min(my), "non-negative"));
    }
    let log = log_tests(dims, alpha)?;
    let (uj, um) = (scales.u_min_joint, scales.u_min_marginal);
    let scale = f3(sg, &scales);
    let rate = (log / ((dims.n as f64 - 1.0) * (uj * uj).min(um.powi(4)))).sqrt();
    let g = g3(sg, &scales);
    let holds = (dims.n as f64 - 1.0) / log >= d3 / (g * uj.min(um * um));
    Ok(ThresholdPlan {
        dims,
        alpha,
        constant: c3,
        scale,
        rate,
        cutoff: c3 * scale * rate,
        condition: condition(holds),
        subgaussian_regime: None,
    })
}
