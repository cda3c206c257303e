//! Cross-covariance experiments: one replicate draws a population sample,
//! applies masks or errors and evaluates the matching estimator.

use rand::Rng;
use serde::Serialize;

use crate::bounds::{
    threshold_complete, threshold_me, threshold_missing, Dimensions, ErrorScales, MissingScales,
    SubGaussianParams, ThresholdPlan,
};
use crate::error::{check_len, invalid, Error, Result};
use crate::estimators::{
    ipw_cross_cov, me_cross_cov, sample_cross_cov, threshold_matrix, EstimateMatrix,
    MaskedSamplePair,
};
use crate::simulation::generate::{gen_population, ErrorSampler, MaskSampler};
use crate::simulation::model::{MeasurementErrorSpec, MissingSpec, PopulationSpec};
use crate::simulation::tail::{binomial_se, quantile, run_replicates, FwerEstimate, PowerEntry};

/// Minimum replicate count of a calibration run.
pub const MIN_CALIBRATION_REPS: usize = 500;

/// How the data are observed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Observation {
    Complete,
    Missing { spec: MissingSpec },
    BoundedError { spec: MeasurementErrorSpec },
}

#[derive(Debug, Clone)]
enum ObservationSampler {
    Complete,
    Missing(MaskSampler),
    BoundedError(ErrorSampler),
}

/// A full cross-covariance experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    n: usize,
    population: PopulationSpec,
    observation: Observation,
    sampler: ObservationSampler,
}

impl Scenario {
    pub fn new(n: usize, population: PopulationSpec, observation: Observation) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", n as f64, "at least 2"));
        }
        let sampler = match &observation {
            Observation::Complete => ObservationSampler::Complete,
            Observation::Missing { spec } => {
                check_len("missing spec p", population.p(), spec.p())?;
                check_len("missing spec q", population.q(), spec.q())?;
                ObservationSampler::Missing(MaskSampler::new(spec)?)
            }
            Observation::BoundedError { spec } => {
                check_len("error spec p", population.p(), spec.p())?;
                check_len("error spec q", population.q(), spec.q())?;
                ObservationSampler::BoundedError(ErrorSampler::new(spec)?)
            }
        };
        Ok(Scenario {
            n,
            population,
            observation,
            sampler,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn population(&self) -> &PopulationSpec {
        &self.population
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn dims(&self) -> Result<Dimensions> {
        Dimensions::new(self.n, self.population.p(), self.population.q())
    }

    pub fn subgaussian(&self) -> Result<SubGaussianParams> {
        SubGaussianParams::new(self.population.k_x(), self.population.k_y())
    }

    /// One replicate's estimate of `Σ_XY`.
    pub fn estimate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EstimateMatrix> {
        let full = gen_population(&self.population, self.n, rng)?;
        match (&self.sampler, &self.observation) {
            (ObservationSampler::Complete, _) => sample_cross_cov(&full),
            (ObservationSampler::Missing(s), Observation::Missing { spec }) => {
                let (dx, dy) = s.sample(self.n, rng);
                ipw_cross_cov(&MaskedSamplePair::from_full(&full, dx, dy)?, spec)
            }
            (ObservationSampler::BoundedError(s), Observation::BoundedError { spec }) => {
                let (dx, dy) = s.sample(self.n, rng);
                me_cross_cov(&MaskedSamplePair::from_full(&full, dx, dy)?, spec)
            }
            _ => unreachable!("sampler is built from the observation"),
        }
    }

    /// `max_kℓ |ŝ_kℓ − σ_kℓ|` for one replicate.
    pub fn max_deviation<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let est = self.estimate(rng)?;
        let sigma = self.population.sigma_xy();
        Ok(est
            .values
            .as_slice()
            .iter()
            .zip(sigma.as_slice())
            .fold(0.0_f64, |m, (e, s)| m.max((e - s).abs())))
    }

    /// The threshold rule matching the observation model.
    pub fn threshold_plan(&self, alpha: f64, constant: f64, d_cond: f64) -> Result<ThresholdPlan> {
        let dims = self.dims()?;
        let sg = self.subgaussian()?;
        let mu_max = (max_abs(self.population.mu_x()), max_abs(self.population.mu_y()));
        match &self.observation {
            Observation::Complete => threshold_complete(dims, alpha, sg, constant, d_cond),
            Observation::Missing { spec } => {
                let scales = MissingScales {
                    mu_max,
                    pi_min_joint: min_of(spec.pi_xy().as_slice()),
                    pi_min_marginal: min_of(spec.pi_x()).min(min_of(spec.pi_y())),
                };
                threshold_missing(dims, alpha, sg, scales, constant, d_cond)
            }
            Observation::BoundedError { spec } => {
                let scales = ErrorScales {
                    mu_max,
                    b_max: (max_abs(spec.b_x()), max_abs(spec.b_y())),
                    u_min_joint: min_of(spec.u_xy().as_slice()),
                    u_min_marginal: min_of(spec.u_x()).min(min_of(spec.u_y())),
                    u_max: (max_abs(spec.u_x()), max_abs(spec.u_y())),
                };
                threshold_me(dims, alpha, sg, scales, constant, d_cond)
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Result of a threshold-constant calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    /// Smallest constant whose cutoff reaches the empirical quantile.
    pub constant: f64,
    /// Empirical `(1 − α)` quantile of `max_kℓ |ŝ_kℓ − σ_kℓ|`.
    pub quantile: f64,
    /// Cutoff of the threshold rule with unit constant.
    pub unit_cutoff: f64,
}

impl Calibration {
    pub fn cutoff(&self) -> f64 {
        self.constant * self.unit_cutoff
    }
}

/// Quantile divided by the unit cutoff. Scaling the rate by `s` scales the
/// constant by `1/s`.
pub fn constant_from_quantile(quantile: f64, unit_cutoff: f64) -> Result<f64> {
    if !(unit_cutoff > 0.0 && unit_cutoff.is_finite()) {
        return Err(invalid("unit cutoff", unit_cutoff, "finite and strictly positive"));
    }
    Ok(quantile / unit_cutoff)
}

/// Calibrates the numerical constant of the scenario's threshold rule on
/// `reps` replicates: the empirical `(1 − α)` quantile of the maximal
/// deviation, interpolated between order statistics, divided by the rule's
/// cutoff at unit constant.
pub fn calibrate_constant(scenario: &Scenario, alpha: f64, reps: usize, seed: u64) -> Result<Calibration> {
    if reps < MIN_CALIBRATION_REPS {
        return Err(invalid("reps", reps as f64, "at least 500"));
    }
    let plan = scenario.threshold_plan(alpha, 1.0, 1.0)?;
    let deviations = run_replicates(reps, seed, |rng, _| scenario.max_deviation(rng))?;
    let q = quantile(&deviations, 1.0 - alpha);
    Ok(Calibration {
        constant: constant_from_quantile(q, plan.unit_cutoff())?,
        quantile: q,
        unit_cutoff: plan.unit_cutoff(),
    })
}

/// Family-wise error and per-signal power of a thresholding rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FwerReport {
    pub cutoff: f64,
    pub reps: usize,
    pub seed: u64,
    pub fwer: FwerEstimate,
    pub power: Vec<PowerEntry>,
}

/// Fraction of replicates with a rejection inside the null set
/// `{σ_kℓ = 0}`, and rejection frequency for every signal entry.
pub fn estimate_fwer(scenario: &Scenario, cutoff: f64, reps: usize, seed: u64) -> Result<FwerReport> {
    let sigma = scenario.population.sigma_xy();
    let null = scenario.population.null_set();
    if null.is_empty() {
        return Err(Error::EmptyNullSet);
    }
    if reps == 0 {
        return Err(invalid("reps", 0.0, "at least 1"));
    }
    let signals: Vec<(usize, usize)> = (0..sigma.rows())
        .flat_map(|k| (0..sigma.cols()).map(move |l| (k, l)))
        .filter(|&(k, l)| sigma[(k, l)] != 0.0)
        .collect();
    let outcomes = run_replicates(reps, seed, |rng, _| {
        let decisions = threshold_matrix(&scenario.estimate(rng)?, cutoff)?;
        let false_rejection = null.iter().any(|&(k, l)| decisions[k][l]);
        let hits: Vec<bool> = signals.iter().map(|&(k, l)| decisions[k][l]).collect();
        Ok((false_rejection, hits))
    })?;
    let r = reps as f64;
    let fwer = outcomes.iter().filter(|o| o.0).count() as f64 / r;
    let power = signals
        .iter()
        .enumerate()
        .map(|(j, &(k, l))| PowerEntry {
            k,
            l,
            sigma: sigma[(k, l)],
            power: outcomes.iter().filter(|o| o.1[j]).count() as f64 / r,
        })
        .collect();
    Ok(FwerReport {
        cutoff,
        reps,
        seed,
        fwer: FwerEstimate {
            fwer,
            se: binomial_se(fwer, r),
        },
        power,
    })
}
