//! `E1`/`E2` assemblers. Each returns every constituent term so the maxima
//! can be audited term by term.

use serde::Serialize;

use super::{BoundEvaluation, ErrorBounds, MeanVectors, SubGaussianParams};
use crate::error::{check_len, check_positive, check_probability, Result};
use crate::norms::{diag_scale, pi_frobenius, CoefficientMatrix, MaskMoments};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub label: &'static str,
    pub value: f64,
}

/// The terms whose maxima are `E1` and `E2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTerms {
    pub e1_terms: Vec<Term>,
    pub e2_terms: Vec<Term>,
}

impl BoundTerms {
    pub fn e1(&self) -> f64 {
        self.e1_terms.iter().fold(0.0, |m, t| m.max(t.value))
    }

    pub fn e2(&self) -> f64 {
        self.e2_terms.iter().fold(0.0, |m, t| m.max(t.value))
    }

    pub fn e1_e2(&self) -> (f64, f64) {
        (self.e1(), self.e2())
    }

    pub fn evaluation(&self, c: f64, d: f64) -> Result<BoundEvaluation> {
        BoundEvaluation::new(self.e1(), self.e2(), c, d)
    }

    pub fn e1_term(&self, label: &str) -> Option<f64> {
        self.e1_terms.iter().find(|t| t.label == label).map(|t| t.value)
    }

    pub fn e2_term(&self, label: &str) -> Option<f64> {
        self.e2_terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

fn term(label: &'static str, value: f64) -> Term {
    Term { label, value }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn abs(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

fn sqrt(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.sqrt()).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(*x))
}

/// `weight · f()`, skipping the evaluation when the weight vanishes.
fn weighted(weight: f64, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
    if weight == 0.0 {
        Ok(0.0)
    } else {
        Ok(weight * f()?)
    }
}

fn fro_sq(a: &CoefficientMatrix, left: &[f64], right: &[f64]) -> Result<f64> {
    Ok(diag_scale(a, left, right)?.frobenius().powi(2))
}

fn op(a: &CoefficientMatrix, left: &[f64], right: &[f64]) -> Result<f64> {
    diag_scale(a, left, right)?.operator_norm()
}

/// Terms of the non-centered Bernoulli-masked bound: eight for `E1`, four
/// for `E2`, with `V_i = max_j πij(1 − πij)`.
pub fn e1_e2_noncentered(
    sg: SubGaussianParams,
    a: &CoefficientMatrix,
    mu: &MeanVectors,
    m: &MaskMoments,
) -> Result<BoundTerms> {
    let n = a.n();
    check_len("mu1", n, mu.mu1.len())?;
    check_len("mu2", n, mu.mu2.len())?;
    check_len("mask moments", n, m.n())?;
    let (k1, k2) = (sg.k1(), sg.k2());
    let (v1, v2) = (m.v1(), m.v2());
    let ones = vec![1.0; n];
    let mu1_pi1 = hadamard(&mu.mu1, m.pi1());
    let mu2_pi2 = hadamard(&mu.mu2, m.pi2());
    let a_mu2_pi2 = a.mul_vec(&mu2_pi2)?;
    let a_mu1_pi1 = a.mul_vec(&mu1_pi1)?;

    let e1_terms = vec![
        term("K1²K2²‖A‖²_Fπ", (k1 * k2).powi(2) * pi_frobenius(a, m)?.powi(2)),
        term(
            "V1²V2²‖D(μ1)AD(μ2)‖²_F",
            weighted((v1 * v2).powi(2), || fro_sq(a, &mu.mu1, &mu.mu2))?,
        ),
        term(
            "V1²K2²‖D(|μ1|)AD(π2)^½‖²_F",
            weighted((v1 * k2).powi(2), || fro_sq(a, &abs(&mu.mu1), &sqrt(m.pi2())))?,
        ),
        term(
            "V2²K1²‖D(π1)^½AD(|μ2|)‖²_F",
            weighted((v2 * k1).powi(2), || fro_sq(a, &sqrt(m.pi1()), &abs(&mu.mu2)))?,
        ),
        term("K2²‖Aᵀ(μ1∗π1)‖²", k2 * k2 * sq_norm(&a.tr_mul_vec(&mu1_pi1)?)),
        term("K1²‖A(μ2∗π2)‖²", k1 * k1 * sq_norm(&a_mu2_pi2)),
        term(
            "V1²‖(A(μ2∗π2))∗μ1‖²",
            v1 * v1 * sq_norm(&hadamard(&a_mu2_pi2, &mu.mu1)),
        ),
        term(
            "V2²‖(A(μ1∗π1))∗μ2‖²",
            v2 * v2 * sq_norm(&hadamard(&a_mu1_pi1, &mu.mu2)),
        ),
    ];
    let e2_terms = vec![
        term("K1K2‖A‖₂", k1 * k2 * a.operator_norm()?),
        term(
            "V1V2‖D(μ1)AD(μ2)‖₂",
            weighted(v1 * v2, || op(a, &mu.mu1, &mu.mu2))?,
        ),
        term("V1K2‖D(μ1)A‖₂", weighted(v1 * k2, || op(a, &mu.mu1, &ones))?),
        term("V2K1‖AD(μ2)‖₂", weighted(v2 * k1, || op(a, &ones, &mu.mu2))?),
    ];
    Ok(BoundTerms { e1_terms, e2_terms })
}

/// Terms of the non-centered bounded-multiplier bound: six for `E1`, three
/// for `E2`. `u` holds the multiplier means `E γ1j`, `E γ2j`.
pub fn e1_e2_bounded_error(
    sg: SubGaussianParams,
    a: &CoefficientMatrix,
    mu: &MeanVectors,
    b: &ErrorBounds,
    u: &MeanVectors,
) -> Result<BoundTerms> {
    let n = a.n();
    check_len("mu1", n, mu.mu1.len())?;
    check_len("mu2", n, mu.mu2.len())?;
    check_len("B1", n, b.b1.len())?;
    check_len("B2", n, b.b2.len())?;
    check_len("u1", n, u.mu1.len())?;
    check_len("u2", n, u.mu2.len())?;
    let (k1, k2) = (sg.k1(), sg.k2());
    let (b1_max, b2_max) = (max_of(&b.b1), max_of(&b.b2));
    let ones = vec![1.0; n];
    let mu1_u1 = hadamard(&mu.mu1, &u.mu1);
    let mu2_u2 = hadamard(&mu.mu2, &u.mu2);

    let e1_terms = vec![
        term(
            "K1²K2²‖D(B1)AD(B2)‖²_F",
            (k1 * k2).powi(2) * fro_sq(a, &b.b1, &b.b2)?,
        ),
        term(
            "maxB1²K2²‖D(|μ1|)AD(B2)^½‖²_F",
            (b1_max * k2).powi(2) * fro_sq(a, &abs(&mu.mu1), &sqrt(&b.b2))?,
        ),
        term(
            "maxB2²K1²‖D(B1)^½AD(|μ2|)‖²_F",
            (b2_max * k1).powi(2) * fro_sq(a, &sqrt(&b.b1), &abs(&mu.mu2))?,
        ),
        term(
            "K2²‖(Aᵀ(μ1∗u1))∗B2‖²",
            k2 * k2 * sq_norm(&hadamard(&a.tr_mul_vec(&mu1_u1)?, &b.b2)),
        ),
        term(
            "K1²‖(A(μ2∗u2))∗B1‖²",
            k1 * k1 * sq_norm(&hadamard(&a.mul_vec(&mu2_u2)?, &b.b1)),
        ),
        term(
            "maxB1²maxB2²‖D(μ1)AD(μ2)‖²_F",
            (b1_max * b2_max).powi(2) * fro_sq(a, &mu.mu1, &mu.mu2)?,
        ),
    ];
    let e2_terms = vec![
        term("K1K2‖A‖₂", k1 * k2 * a.operator_norm()?),
        term(
            "maxB1K2‖D(μ1)A‖₂",
            weighted(b1_max * k2, || op(a, &mu.mu1, &ones))?,
        ),
        term(
            "maxB2K1‖AD(μ2)‖₂",
            weighted(b2_max * k1, || op(a, &ones, &mu.mu2))?,
        ),
    ];
    Ok(BoundTerms { e1_terms, e2_terms })
}

/// Entrywise `E1,kl`, `E2,kl` for the inverse-probability-weighted estimator
/// `s̃_kl`. `mu = (μ_k^X, μ_l^Y)`, `pis = (π_kl, π_k^X, π_l^Y)`.
///
/// `E1` has two branches (the mean-free part and the joint/marginal
/// mismatch part); `E2` a single product.
pub fn e1_e2_missing_entry(
    n: usize,
    sg: SubGaussianParams,
    mu: (f64, f64),
    pis: (f64, f64, f64),
) -> Result<BoundTerms> {
    if n < 2 {
        return Err(crate::error::invalid("n", n as f64, "at least 2"));
    }
    let (pj, px, py) = pis;
    check_probability("pi_joint", pj)?;
    check_probability("pi_x", px)?;
    check_probability("pi_y", py)?;
    let nf = n as f64;
    let (kx, ky) = (sg.k1(), sg.k2());
    let (mx, my) = (mu.0.abs(), mu.1.abs());

    let scale_sq = [kx * kx * ky * ky, kx * kx * my * my, mx * mx * ky * ky, mx * mx * my * my]
        .into_iter()
        .fold(0.0_f64, f64::max);
    let spread = 1.0 / (nf * pj * pj) + 1.0 / (nf * (nf - 1.0) * (px * py).powi(2));
    let mismatch_scale = [kx * kx * my * my, mx * mx * ky * ky, mx.powi(4), my.powi(4)]
        .into_iter()
        .fold(0.0_f64, f64::max);
    let mismatch = (1.0 / pj - 1.0 / (px * py)).powi(2) / nf;

    let scale = [kx * ky, kx * my, mx * ky, mx * my]
        .into_iter()
        .fold(0.0_f64, f64::max);
    let weight = 1.0 / (nf * pj) + 1.0 / (nf * (nf - 1.0) * px * py);

    Ok(BoundTerms {
        e1_terms: vec![
            term("max{K²,Kμ,μK,μ²}·(1/(nπkl²)+1/(n(n−1)πk²πl²))", scale_sq * spread),
            term("max{Kμ,μK,μ⁴}·(1/πkl−1/(πkπl))²/n", mismatch_scale * mismatch),
        ],
        e2_terms: vec![term(
            "max{KK,Kμ,μK,μμ}·(1/(nπkl)+1/(n(n−1)πkπl))",
            scale * weight,
        )],
    })
}

/// Entrywise `E1,kl`, `E2,kl` for the measurement-error estimator `š_kl`.
/// `us = (u_kl, u_k^X, u_l^Y)`, `bs = (B_k^X, B_l^Y)`.
pub fn e1_e2_me_entry(
    n: usize,
    sg: SubGaussianParams,
    mu: (f64, f64),
    us: (f64, f64, f64),
    bs: (f64, f64),
) -> Result<BoundTerms> {
    if n < 2 {
        return Err(crate::error::invalid("n", n as f64, "at least 2"));
    }
    let (uj, ux, uy) = us;
    check_positive("u_joint", uj)?;
    check_positive("u_x", ux)?;
    check_positive("u_y", uy)?;
    let (bx, by) = bs;
    check_positive("B_x", bx)?;
    check_positive("B_y", by)?;
    let nf = n as f64;
    let (kx, ky) = (sg.k1(), sg.k2());
    let (mx, my) = (mu.0.abs(), mu.1.abs());

    let scale_sq = [
        (kx * ky * bx * by).powi(2),
        mx * mx * ky * ky * bx * bx * by,
        kx * kx * my * my * bx * by * by,
        (mx * my * bx * by).powi(2),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    let spread = 1.0 / (nf * uj * uj) + 1.0 / (nf * (nf - 1.0) * (ux * uy).powi(2));
    let mismatch_scale = [
        (kx * my * bx * uy).powi(2),
        (mx * ky * ux * by).powi(2),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    let mismatch = (1.0 / uj - 1.0 / (ux * uy)).powi(2) / nf;

    let scale = [kx * ky, kx * my * bx, mx * ky * by]
        .into_iter()
        .fold(0.0_f64, f64::max);
    let weight = 1.0 / (nf * uj) + 1.0 / (nf * (nf - 1.0) * ux * uy);

    Ok(BoundTerms {
        e1_terms: vec![
            term("max{K²B²,…}·(1/(nukl²)+1/(n(n−1)uk²ul²))", scale_sq * spread),
            term("max{KμBu,μKuB}²·(1/ukl−1/(ukul))²/n", mismatch_scale * mismatch),
        ],
        e2_terms: vec![term(
            "max{KK,KμB,μKB}·(1/(nukl)+1/(n(n−1)ukul))",
            scale * weight,
        )],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sg(k1: f64, k2: f64) -> SubGaussianParams {
        SubGaussianParams::new(k1, k2).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    fn sample_matrix() -> CoefficientMatrix {
        CoefficientMatrix::from_rows(&[
            vec![0.4, -0.1, 0.2],
            vec![0.3, 0.5, -0.6],
            vec![-0.2, 0.05, 0.1],
        ])
        .unwrap()
    }

    #[test]
    fn zero_mean_collapse_noncentered() {
        let a = sample_matrix();
        let m = MaskMoments::new(
            vec![0.6, 0.7, 0.8],
            vec![0.5, 0.9, 0.4],
            vec![0.4, 0.65, 0.3],
        )
        .unwrap();
        let s = sg(1.3, 0.7);
        let terms = e1_e2_noncentered(s, &a, &MeanVectors::zeros(3), &m).unwrap();
        let kk = 1.3 * 0.7;
        assert!(close(terms.e1(), kk * kk * pi_frobenius(&a, &m).unwrap().powi(2), 1e-14));
        assert!(close(terms.e2(), kk * a.operator_norm().unwrap(), 1e-12));
    }

    #[test]
    fn degenerate_bernoulli_variance_vanishes() {
        let a = sample_matrix();
        let mu = MeanVectors::new(vec![1.0, -2.0, 0.5], vec![0.3, 0.3, -1.0]).unwrap();
        let m = MaskMoments::new(vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0])
            .unwrap();
        assert_eq!(m.v1(), 0.0);
        let terms = e1_e2_noncentered(sg(1.0, 1.0), &a, &mu, &m).unwrap();
        for label in [
            "V1²V2²‖D(μ1)AD(μ2)‖²_F",
            "V1²K2²‖D(|μ1|)AD(π2)^½‖²_F",
            "V2²K1²‖D(π1)^½AD(|μ2|)‖²_F",
            "V1²‖(A(μ2∗π2))∗μ1‖²",
            "V2²‖(A(μ1∗π1))∗μ2‖²",
        ] {
            assert_eq!(terms.e1_term(label), Some(0.0), "{label}");
        }
        for label in ["V1V2‖D(μ1)AD(μ2)‖₂", "V1K2‖D(μ1)A‖₂", "V2K1‖AD(μ2)‖₂"] {
            assert_eq!(terms.e2_term(label), Some(0.0), "{label}");
        }
    }

    #[test]
    fn identity_unit_means_hand_evaluated() {
        // A = I₂, K = 1, μ = (1,1), all π = 1: V = 0, so E1 = max{2, 2, 2} = 2
        // (‖A‖²_F = 2, ‖Aᵀμ‖² = 2, ‖Aμ‖² = 2) and E2 = ‖I‖₂ = 1.
        let a = CoefficientMatrix::identity(2).unwrap();
        let mu = MeanVectors::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let terms = e1_e2_noncentered(sg(1.0, 1.0), &a, &mu, &MaskMoments::complete(2)).unwrap();
        let expected = [2.0, 0.0, 0.0, 0.0, 2.0, 2.0, 0.0, 0.0];
        for (t, e) in terms.e1_terms.iter().zip(expected) {
            assert!((t.value - e).abs() < 1e-14, "{}: {}", t.label, t.value);
        }
        assert!(close(terms.e1(), 2.0, 1e-14));
        assert!(close(terms.e2(), 1.0, 1e-12));
    }

    #[test]
    fn bounded_error_zero_mean_collapse() {
        let a = sample_matrix();
        let b = ErrorBounds::new(vec![1.5, 2.0, 0.5], vec![1.0, 3.0, 2.0]).unwrap();
        let u = MeanVectors::new(vec![0.7, 1.0, 0.2], vec![0.5, 2.0, 1.0]).unwrap();
        let terms =
            e1_e2_bounded_error(sg(0.8, 1.1), &a, &MeanVectors::zeros(3), &b, &u).unwrap();
        let kk = 0.8 * 1.1;
        let scaled = diag_scale(&a, &b.b1, &b.b2).unwrap();
        assert!(close(terms.e1(), kk * kk * scaled.frobenius().powi(2), 1e-14));
        assert!(close(terms.e2(), kk * a.operator_norm().unwrap(), 1e-12));
    }

    #[test]
    fn bounded_error_shares_terms_with_unit_masks() {
        let a = sample_matrix();
        let mu = MeanVectors::new(vec![0.4, -1.0, 2.0], vec![1.5, 0.2, -0.3]).unwrap();
        let s = sg(0.9, 1.2);
        let bern = e1_e2_noncentered(s, &a, &mu, &MaskMoments::complete(3)).unwrap();
        let bounded = e1_e2_bounded_error(
            s,
            &a,
            &mu,
            &ErrorBounds::ones(3),
            &MeanVectors::new(vec![1.0; 3], vec![1.0; 3]).unwrap(),
        )
        .unwrap();
        let pairs = [
            ("K1²K2²‖A‖²_Fπ", "K1²K2²‖D(B1)AD(B2)‖²_F"),
            ("K2²‖Aᵀ(μ1∗π1)‖²", "K2²‖(Aᵀ(μ1∗u1))∗B2‖²"),
            ("K1²‖A(μ2∗π2)‖²", "K1²‖(A(μ2∗u2))∗B1‖²"),
        ];
        for (l, r) in pairs {
            assert!(close(bern.e1_term(l).unwrap(), bounded.e1_term(r).unwrap(), 1e-13));
        }
        assert!(close(
            bern.e2_term("K1K2‖A‖₂").unwrap(),
            bounded.e2_term("K1K2‖A‖₂").unwrap(),
            1e-15
        ));
    }

    #[test]
    fn bounded_error_identity_unit_e2() {
        let a = CoefficientMatrix::identity(2).unwrap();
        let ones = MeanVectors::new(vec![1.0; 2], vec![1.0; 2]).unwrap();
        let terms =
            e1_e2_bounded_error(sg(1.0, 1.0), &a, &ones, &ErrorBounds::ones(2), &ones).unwrap();
        let values: Vec<f64> = terms.e2_terms.iter().map(|t| t.value).collect();
        assert_eq!(values, vec![1.0, 1.0, 1.0]);
        assert_eq!(terms.e2(), 1.0);
    }

    #[test]
    fn missing_entry_examples() {
        let n = 25;
        let t = e1_e2_missing_entry(n, sg(1.5, 0.8), (0.0, 0.0), (1.0, 1.0, 1.0)).unwrap();
        let expected = (1.5_f64 * 0.8).powi(2) / (n as f64 - 1.0);
        assert!(close(t.e1(), expected, 1e-14));
        assert_eq!(t.e1_terms[1].value, 0.0);

        // independent masks cancel the mismatch branch
        let t = e1_e2_missing_entry(n, sg(1.0, 1.0), (2.0, -1.0), (0.42, 0.7, 0.6)).unwrap();
        assert!(t.e1_terms[1].value < 1e-28);

        assert!(e1_e2_missing_entry(n, sg(1.0, 1.0), (0.0, 0.0), (0.0, 0.5, 0.5)).is_err());
    }

    #[test]
    fn me_entry_examples() {
        let n = 12;
        let t = e1_e2_me_entry(n, sg(1.0, 1.0), (1.0, 1.0), (1.0, 1.0, 1.0), (1.0, 1.0)).unwrap();
        assert!(close(t.e1(), 1.0 / 11.0, 1e-14));
        assert_eq!(t.e1_terms[1].value, 0.0);

        let t = e1_e2_me_entry(n, sg(1.0, 2.0), (0.0, 0.0), (0.5, 0.8, 0.9), (1.5, 2.5)).unwrap();
        let spread = 1.0 / (12.0 * 0.25) + 1.0 / (12.0 * 11.0 * (0.72_f64).powi(2));
        assert!(close(t.e1(), (2.0_f64 * 1.5 * 2.5).powi(2) * spread, 1e-14));

        let t = e1_e2_me_entry(n, sg(1.0, 1.0), (1.0, 3.0), (0.72, 0.8, 0.9), (1.0, 1.0)).unwrap();
        assert!(t.e1_terms[1].value < 1e-28);

        assert!(e1_e2_me_entry(n, sg(1.0, 1.0), (0.0, 0.0), (0.0, 1.0, 1.0), (1.0, 1.0)).is_err());
    }
}
