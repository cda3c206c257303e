//! Data, mask and error generators.
//!
//! Each generator draws from a caller-supplied RNG in a fixed order, so a
//! replicate is a pure function of its stream.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::SampleMatrixPair;
use crate::matrix::Matrix;
use crate::simulation::model::{
    ErrorDependence, MeasurementErrorSpec, MissingSpec, PopulationFamily, PopulationSpec,
    ScaledBetaQuantile,
};

/// Independent, reproducible RNG streams indexed by replicate.
///
/// Stream `i` of seed `s` is ChaCha8 keyed by `s` with stream id `i`, so it
/// depends only on `(s, i)` and never on scheduling.
#[derive(Debug, Clone)]
pub struct RngStreams {
    base: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}

/// `n` independent draws of `(X, Y)` with the specified moments.
pub fn gen_population<R: Rng + ?Sized>(
    spec: &PopulationSpec,
    n: usize,
    rng: &mut R,
) -> Result<SampleMatrixPair> {
    let (p, q) = (spec.p(), spec.q());
    let d = p + q;
    let l = spec.factor();
    let mut x = Matrix::zeros(n, p);
    let mut y = Matrix::zeros(n, q);
    let mut xi = vec![0.0; d];
    for i in 0..n {
        for v in xi.iter_mut() {
            *v = match spec.family() {
                PopulationFamily::Gaussian => rng.sample(StandardNormal),
                PopulationFamily::RademacherMixture => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
        }
        for r in 0..d {
            let lr = l.row(r);
            let mut v: f64 = lr[..=r].iter().zip(&xi).map(|(a, b)| a * b).sum();
            if r < p {
                v += spec.mu_x()[r];
                x[(i, r)] = v;
            } else {
                v += spec.mu_y()[r - p];
                y[(i, r - p)] = v;
            }
        }
    }
    SampleMatrixPair::new(x, y)
}

/// Mask generator with exact pairwise joints `P(δ_k^X = 1, δ_ℓ^Y = 1) = π_kℓ`.
///
/// Each sample draws two uniforms `U`, `V`. The X-mask is
/// `δ_k^X = 1{U < π_k^X}`, so X columns are nested by their marginals. The
/// Y-mask is `δ_ℓ^Y = 1{V < h_ℓ(U)}`, where `h_ℓ` is piecewise constant
/// between consecutive distinct values of `π^X` and chosen so that
/// `∫_0^{π_k^X} h_ℓ = π_kℓ`. Tables needing `h_ℓ` outside `[0, 1]`, or
/// different joints for columns with equal marginals, are rejected.
#[derive(Debug, Clone)]
pub struct MaskSampler {
    pi_x: Vec<f64>,
    breaks: Vec<f64>,
    /// `levels[ℓ][j]` is `h_ℓ` on `[breaks[j-1], breaks[j])`, `breaks[-1] = 0`.
    levels: Vec<Vec<f64>>,
}

const REPRESENTABLE_SLACK: f64 = 1e-9;

impl MaskSampler {
    pub fn new(spec: &MissingSpec) -> Result<Self> {
        let (p, q) = (spec.p(), spec.q());
        let pi_x = spec.pi_x().to_vec();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| pi_x[a].total_cmp(&pi_x[b]));
        // Distinct breakpoints with a representative column each.
        let mut breaks: Vec<f64> = Vec::new();
        let mut reps: Vec<Option<usize>> = Vec::new();
        for &k in &order {
            let b = pi_x[k];
            match breaks.last() {
                Some(&last) if last == b => {
                    let r = reps.last().copied().flatten().expect("representative set");
                    for l in 0..q {
                        let (a, c) = (spec.pi_xy()[(r, l)], spec.pi_xy()[(k, l)]);
                        if (a - c).abs() > REPRESENTABLE_SLACK {
                            return Err(Error::UnrepresentableJoint {
                                row: k,
                                col: l,
                                detail: format!(
                                    "column {r} has the same marginal {b} but joint {a} instead of {c}"
                                ),
                            });
                        }
                    }
                }
                _ => {
                    breaks.push(b);
                    reps.push(Some(k));
                }
            }
        }
        if breaks.last() != Some(&1.0) {
            breaks.push(1.0);
            reps.push(None);
        }
        let mut levels = vec![Vec::with_capacity(breaks.len()); q];
        for (l, lev) in levels.iter_mut().enumerate() {
            let (mut prev_b, mut prev_g) = (0.0, 0.0);
            for (&b, rep) in breaks.iter().zip(&reps) {
                let g = match rep {
                    Some(k) => spec.pi_xy()[(*k, l)],
                    None => spec.pi_y()[l],
                };
                let width = b - prev_b;
                let h = (g - prev_g) / width;
                if !(-REPRESENTABLE_SLACK..=1.0 + REPRESENTABLE_SLACK).contains(&h) {
                    let row = rep.unwrap_or_else(|| order[order.len() - 1]);
                    return Err(Error::UnrepresentableJoint {
                        row,
                        col: l,
                        detail: format!(
                            "the joint table increases by {} over a marginal step of {width}",
                            g - prev_g
                        ),
                    });
                }
                lev.push(h.clamp(0.0, 1.0));
                prev_b = b;
                prev_g = g;
            }
        }
        Ok(MaskSampler {
            pi_x,
            breaks,
            levels,
        })
    }

    /// Draws one sample's masks into the given rows.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, dx: &mut [f64], dy: &mut [f64]) {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        for (d, &pi) in dx.iter_mut().zip(&self.pi_x) {
            *d = if u < pi { 1.0 } else { 0.0 };
        }
        let segment = self.breaks.partition_point(|&b| b <= u).min(self.breaks.len() - 1);
        for (d, lev) in dy.iter_mut().zip(&self.levels) {
            *d = if v < lev[segment] { 1.0 } else { 0.0 };
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Matrix, Matrix) {
        let q = self.levels.len();
        let mut dx = Matrix::zeros(n, self.pi_x.len());
        let mut dy = Matrix::zeros(n, q);
        let mut row_y = vec![0.0; q];
        for i in 0..n {
            self.sample_row(rng, dx.row_mut(i), &mut row_y);
            dy.row_mut(i).copy_from_slice(&row_y);
        }
        (dx, dy)
    }
}

/// `n` i.i.d. MCAR mask rows `(δ^X, δ^Y)`.
pub fn gen_masks<R: Rng + ?Sized>(
    spec: &MissingSpec,
    n: usize,
    rng: &mut R,
) -> Result<(Matrix, Matrix)> {
    Ok(MaskSampler::new(spec)?.sample(n, rng))
}

/// Generator of bounded multiplicative errors.
#[derive(Debug, Clone)]
pub enum ErrorSampler {
    Bernoulli(MaskSampler),
    BetaCopula {
        r: f64,
        sign: f64,
        x: Vec<ScaledBetaQuantile>,
        y: Vec<ScaledBetaQuantile>,
    },
}

impl ErrorSampler {
    pub fn new(spec: &MeasurementErrorSpec) -> Result<Self> {
        match spec.dependence() {
            ErrorDependence::Bernoulli => {
                let m = spec.as_missing().expect("Bernoulli specs encode a missing spec");
                Ok(ErrorSampler::Bernoulli(MaskSampler::new(&m)?))
            }
            ErrorDependence::BetaCopula { dispersion, rho } => {
                let build = |u: &[f64], b: &[f64]| {
                    u.iter()
                        .zip(b)
                        .map(|(&ui, &bi)| ScaledBetaQuantile::new(ui, bi, dispersion))
                        .collect()
                };
                Ok(ErrorSampler::BetaCopula {
                    r: rho.abs().sqrt(),
                    sign: if rho < 0.0 { -1.0 } else { 1.0 },
                    x: build(spec.u_x(), spec.b_x()),
                    y: build(spec.u_y(), spec.b_y()),
                })
            }
            ErrorDependence::Unspecified => Err(Error::InfeasibleErrorMoments {
                index: 0,
                detail: "explicit moment tables carry no generator; use the Beta copula or Bernoulli construction".into(),
            }),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Matrix, Matrix) {
        match self {
            ErrorSampler::Bernoulli(m) => m.sample(n, rng),
            ErrorSampler::BetaCopula { r, sign, x, y } => {
                let s = (1.0 - r * r).sqrt();
                let mut dx = Matrix::zeros(n, x.len());
                let mut dy = Matrix::zeros(n, y.len());
                for i in 0..n {
                    let f: f64 = rng.sample(StandardNormal);
                    for (k, qk) in x.iter().enumerate() {
                        let e: f64 = rng.sample(StandardNormal);
                        dx[(i, k)] = qk.at_latent(r * f + s * e);
                    }
                    for (l, ql) in y.iter().enumerate() {
                        let e: f64 = rng.sample(StandardNormal);
                        dy[(i, l)] = ql.at_latent(sign * r * f + s * e);
                    }
                }
                (dx, dy)
            }
        }
    }
}

/// `n` i.i.d. error rows `(δ^X, δ^Y)` with `0 ≤ δ ≤ B` and the specified
/// moments.
pub fn gen_errors<R: Rng + ?Sized>(
    spec: &MeasurementErrorSpec,
    n: usize,
    rng: &mut R,
) -> Result<(Matrix, Matrix)> {
    Ok(ErrorSampler::new(spec)?.sample(n, rng))
}
