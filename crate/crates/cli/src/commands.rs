//! The subcommands. Each one computes all of its artifacts in memory and
//! reports whether its checks passed; nothing touches the disk here.

use serde::Serialize;
use serde_json::json;
use sparsehw::bounds::{
    centered_evaluation, e1_e2_me_entry, e1_e2_missing_entry, BoundEvaluation, Structure,
    SubGaussianParams,
};
use sparsehw::estimators::format_value;
use sparsehw::norms::{centering_coefficient_matrix, ipw_coefficient_matrix, pi_frobenius};
use sparsehw::simulation::bilinear::{
    calibrate_exponent_constant, calibration_grid, domination, DominationRow, LinearSetting,
};
use sparsehw::simulation::mgf::{lambda_limit, mgf_bound_check, GaussianPair, MgfReport};
use sparsehw::simulation::tail::{run_replicates, TailCurve, MIN_TAIL_REPS};
use sparsehw::simulation::{calibrate_constant, estimate_fwer, Observation};
use sparsehw::{CoefficientMatrix, MaskMoments};

use crate::config::{read_constants, ConstantsFile, ExperimentConfig};

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Everything a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub passed: bool,
    /// One-line human-readable result.
    pub summary: String,
}

/// Seed and config hash stamped on every artifact.
struct Stamp {
    seed: u64,
    hash: String,
}

impl Stamp {
    fn new(cfg: &ExperimentConfig) -> Self {
        Stamp {
            seed: cfg.seed,
            hash: cfg.content_hash(),
        }
    }

    /// A CSV file: one `#` comment line with seed and hash, a header, rows.
    fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Artifact {
        let mut out = format!("# seed={} config_sha256={}\n{}\n", self.seed, self.hash, header.join(","));
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Artifact {
            name: name.into(),
            contents: out.into_bytes(),
        }
    }

    fn json(&self, name: &str, body: serde_json::Value) -> Artifact {
        let mut value = json!({ "seed": self.seed, "config_sha256": self.hash });
        if let (Some(target), serde_json::Value::Object(fields)) = (value.as_object_mut(), body) {
            target.extend(fields);
        }
        let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
        text.push('\n');
        Artifact {
            name: name.into(),
            contents: text.into_bytes(),
        }
    }
}

fn f(v: f64) -> String {
    format_value(v)
}

fn validation_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

/// Exponent constant and threshold constant after applying a constants file.
fn constants(cfg: &ExperimentConfig) -> anyhow::Result<(f64, f64)> {
    let c = &cfg.raw.constants;
    match &c.file {
        Some(path) => {
            let file = read_constants(&cfg.base_dir, path)?;
            Ok((file.c.unwrap_or(c.c), file.big_c))
        }
        None => Ok((c.c, c.big_c)),
    }
}

/// `E1`, `E2` of the tail bound for the configured entry, with exponent
/// constant `c`.
fn entry_evaluation(cfg: &ExperimentConfig, c: f64) -> anyhow::Result<BoundEvaluation> {
    let [k, l] = cfg.raw.experiment.entry;
    let n = cfg.raw.experiment.n;
    let pop = cfg.scenario.population();
    let sg = SubGaussianParams::new(pop.k_x(), pop.k_y())?;
    let mu = (pop.mu_x()[k], pop.mu_y()[l]);
    let d = cfg.d();
    let ev = match cfg.scenario.observation() {
        Observation::Complete => {
            let a = centering_coefficient_matrix(n)?;
            let base = centered_evaluation(sg, &a, &MaskMoments::complete(n), c, Structure::Full)?;
            BoundEvaluation::new(base.e1, base.e2, c, d)?
        }
        Observation::Missing { spec } => e1_e2_missing_entry(
            n,
            sg,
            mu,
            (spec.pi_xy()[(k, l)], spec.pi_x()[k], spec.pi_y()[l]),
        )?
        .evaluation(c, d)?,
        Observation::BoundedError { spec } => e1_e2_me_entry(
            n,
            sg,
            mu,
            (spec.u_xy()[(k, l)], spec.u_x()[k], spec.u_y()[l]),
            (spec.b_x()[k], spec.b_y()[l]),
        )?
        .evaluation(c, d)?,
    };
    Ok(ev)
}

fn entry_deviations(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Vec<f64>> {
    let [k, l] = cfg.raw.experiment.entry;
    let sigma = cfg.scenario.population().sigma_xy()[(k, l)];
    let reps = cfg.raw.experiment.reps;
    if reps < MIN_TAIL_REPS {
        anyhow::bail!("experiment.reps = {reps}: the tail command needs at least {MIN_TAIL_REPS} replicates");
    }
    Ok(run_replicates(reps, seed, |rng, _| {
        Ok(cfg.scenario.estimate(rng)?.get(k, l) - sigma)
    })?)
}

fn tail_rows(rows: &[DominationRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| vec![f(r.t), f(r.frequency), f(r.se), f(r.bound)])
        .collect()
}

/// Empirical tail of `ŝ_kℓ − σ_kℓ` for the configured entry against the
/// matching bound. With `constants.calibrate` the exponent constant is
/// fitted on the run seed and the comparison uses the next seed.
pub fn tail(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let stamp = Stamp::new(cfg);
    let reps = cfg.raw.experiment.reps;
    let points = cfg.raw.tail.points;
    let min_tail = 20.0 / reps as f64;
    let (c_config, _) = constants(cfg)?;
    let base = entry_evaluation(cfg, c_config)?;

    let first = entry_deviations(cfg, cfg.seed)?;
    let grid = match &cfg.raw.tail.grid {
        Some(g) => g.clone(),
        None => calibration_grid(&first, points, min_tail),
    };
    let (c, devs, eval_seed) = if cfg.raw.constants.calibrate {
        let curve = TailCurve::from_deviations(&first, &grid);
        let c = calibrate_exponent_constant(&curve, reps, base.d, |t| base.rate(t))?;
        let seed = validation_seed(cfg.seed);
        (c, entry_deviations(cfg, seed)?, seed)
    } else {
        (c_config, first, cfg.seed)
    };
    let ev = base.with_c(c);
    let curve = TailCurve::from_deviations(&devs, &grid);
    let rows = domination(&curve, |t| ev.tail(t).value());
    let passed = rows.iter().all(|r| r.dominated);
    let violations = rows.iter().filter(|r| !r.dominated).count();

    let csv = stamp.csv("tail.csv", &["t", "frequency", "se", "bound"], tail_rows(&rows));
    let summary = stamp.json(
        "tail.json",
        json!({
            "command": "tail",
            "kind": cfg.kind().as_str(),
            "entry": cfg.raw.experiment.entry,
            "reps": reps,
            "evaluation_seed": eval_seed,
            "calibrated": cfg.raw.constants.calibrate,
            "c": c,
            "d": ev.d,
            "e1": ev.e1,
            "e2": ev.e2,
            "tail": to_json(&curve),
            "bound": rows.iter().map(|r| r.bound).collect::<Vec<_>>(),
            "violations": violations,
            "passed": passed,
        }),
    );
    Ok(Outcome {
        artifacts: vec![csv, summary],
        passed,
        summary: format!(
            "tail: {} grid points, c = {c:.6e}, {violations} above the bound -> {}",
            grid.len(),
            verdict(passed)
        ),
    })
}

/// Fits the threshold constant `C` and writes it as a constants file.
pub fn calibrate(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let stamp = Stamp::new(cfg);
    let e = &cfg.raw.experiment;
    let cal = calibrate_constant(&cfg.scenario, e.alpha, e.reps, cfg.seed)?;
    let file = ConstantsFile {
        seed: cfg.seed,
        config_sha256: stamp.hash.clone(),
        alpha: e.alpha,
        reps: e.reps,
        big_c: cal.constant,
        quantile: cal.quantile,
        unit_cutoff: cal.unit_cutoff,
        cutoff: cal.cutoff(),
        c: None,
    };
    let text = toml::to_string(&file)?;
    Ok(Outcome {
        artifacts: vec![Artifact {
            name: "constants.toml".into(),
            contents: text.into_bytes(),
        }],
        passed: true,
        summary: format!(
            "calibrate: C = {:.6e} (quantile {:.6e}, cutoff {:.6e})",
            cal.constant,
            cal.quantile,
            cal.cutoff()
        ),
    })
}

/// Family-wise error and power of the threshold rule. With
/// `constants.calibrate` the constant is fitted on the run seed first and
/// the rule is evaluated on the next seed.
pub fn fwer(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let stamp = Stamp::new(cfg);
    let e = &cfg.raw.experiment;
    let (_, configured) = constants(cfg)?;
    let (constant, eval_seed) = if cfg.raw.constants.calibrate {
        let cal = calibrate_constant(&cfg.scenario, e.alpha, e.reps, cfg.seed)?;
        (cal.constant, validation_seed(cfg.seed))
    } else {
        (configured, cfg.seed)
    };
    let plan = cfg
        .scenario
        .threshold_plan(e.alpha, constant, cfg.raw.constants.d_cond)?;
    let report = estimate_fwer(&cfg.scenario, plan.cutoff, e.reps, eval_seed)?;
    let limit = e.alpha + 2.0 * report.fwer.se;
    let passed = report.fwer.fwer <= limit;

    let csv = stamp.csv(
        "power.csv",
        &["k", "l", "sigma", "power"],
        report
            .power
            .iter()
            .map(|p| vec![p.k.to_string(), p.l.to_string(), f(p.sigma), f(p.power)]),
    );
    let summary = stamp.json(
        "fwer.json",
        json!({
            "command": "fwer",
            "kind": cfg.kind().as_str(),
            "reps": e.reps,
            "evaluation_seed": eval_seed,
            "calibrated": cfg.raw.constants.calibrate,
            "alpha": e.alpha,
            "constant": constant,
            "plan": to_json(&plan),
            "fwer": report.fwer.fwer,
            "se": report.fwer.se,
            "limit": limit,
            "power": to_json(&report.power),
            "passed": passed,
        }),
    );
    Ok(Outcome {
        artifacts: vec![csv, summary],
        passed,
        summary: format!(
            "fwer: {:.4} ± {:.4} at cutoff {:.6e} (limit {:.4}) -> {}",
            report.fwer.fwer,
            report.fwer.se,
            plan.cutoff,
            limit,
            verdict(passed)
        ),
    })
}

fn norm_row(name: String, n: usize, a: &CoefficientMatrix, weighted: f64) -> anyhow::Result<Vec<String>> {
    Ok(vec![name, n.to_string(), f(a.frobenius()), f(a.operator_norm()?), f(weighted)])
}

/// Norms of the coefficient matrices behind the scenario's estimators.
/// `weighted_frobenius` is `‖A‖_{F,π}` for missing data,
/// `‖D(B) A D(B)‖_F` for bounded errors and `‖A‖_F` otherwise.
pub fn norms(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let stamp = Stamp::new(cfg);
    let mut rows = Vec::new();
    for &n in &cfg.raw.norms.sizes {
        let a = centering_coefficient_matrix(n)?;
        rows.push(norm_row("centering".into(), n, &a, a.frobenius())?);
    }
    let n = cfg.raw.experiment.n;
    match cfg.scenario.observation() {
        Observation::Complete => {}
        Observation::Missing { spec } => {
            for k in 0..spec.p() {
                for l in 0..spec.q() {
                    let (pj, px, py) = (spec.pi_xy()[(k, l)], spec.pi_x()[k], spec.pi_y()[l]);
                    let a = ipw_coefficient_matrix(n, pj, px, py)?;
                    let m = MaskMoments::new(vec![px; n], vec![py; n], vec![pj; n])?;
                    rows.push(norm_row(format!("ipw[{k}][{l}]"), n, &a, pi_frobenius(&a, &m)?)?);
                }
            }
        }
        Observation::BoundedError { spec } => {
            for k in 0..spec.p() {
                for l in 0..spec.q() {
                    let a = ipw_coefficient_matrix(n, spec.u_xy()[(k, l)], spec.u_x()[k], spec.u_y()[l])?;
                    let weighted = spec.b_x()[k] * spec.b_y()[l] * a.frobenius();
                    rows.push(norm_row(format!("me[{k}][{l}]"), n, &a, weighted)?);
                }
            }
        }
    }
    let count = rows.len();
    let csv = stamp.csv(
        "norms.csv",
        &["matrix", "n", "frobenius", "operator_norm", "weighted_frobenius"],
        rows,
    );
    Ok(Outcome {
        artifacts: vec![csv],
        passed: true,
        summary: format!("norms: {count} rows"),
    })
}

/// The moment generating function bound for Gaussian pairs on a grid of
/// `(a, λ)`, and the Hoeffding bound for a masked linear statistic after a
/// one-seed calibration of its constant.
pub fn check_mgf(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let stamp = Stamp::new(cfg);
    let m = &cfg.raw.check_mgf;
    let pair = GaussianPair { rho: m.rho };
    let mut reports: Vec<MgfReport> = Vec::new();
    for &a in &m.a {
        let limit = lambda_limit(a, m.k, m.k);
        for &frac in &m.lambda_fractions {
            reports.push(mgf_bound_check(frac * limit, a, &pair, m.k, m.k, m.reps, cfg.seed)?);
        }
    }
    let mgf_passed = reports.iter().all(|r| r.pass);
    let mut artifacts = vec![stamp.csv(
        "mgf.csv",
        &["lambda", "a", "lhs", "se", "rhs", "pass"],
        reports.iter().map(|r| {
            vec![f(r.lambda), f(r.a), f(r.lhs), f(r.se), f(r.rhs), r.pass.to_string()]
        }),
    )];

    let mut hoeffding = serde_json::Value::Null;
    let mut hoeffding_passed = true;
    if m.hoeffding {
        let reps = cfg.raw.experiment.reps;
        if reps < MIN_TAIL_REPS {
            anyhow::bail!("experiment.reps = {reps}: the Hoeffding check needs at least {MIN_TAIL_REPS} replicates");
        }
        let alpha: Vec<f64> = (0..m.hoeffding_n).map(|j| 1.0 + (j % 3) as f64 / 2.0).collect();
        let setting = LinearSetting::new(alpha, vec![m.hoeffding_pi; m.hoeffding_n])?;
        let d = sparsehw::bounds::DEFAULT_D;
        let first = run_replicates(reps, cfg.seed, |rng, _| Ok(setting.sample(rng)))?;
        let grid = calibration_grid(&first, cfg.raw.tail.points, 20.0 / reps as f64);
        let c = calibrate_exponent_constant(&TailCurve::from_deviations(&first, &grid), reps, d, |t| {
            setting.rate(t)
        })?;
        let eval_seed = validation_seed(cfg.seed);
        let second = run_replicates(reps, eval_seed, |rng, _| Ok(setting.sample(rng)))?;
        let curve = TailCurve::from_deviations(&second, &grid);
        let rows = domination(&curve, |t| (d * (-c * setting.rate(t)).exp()).min(1.0));
        hoeffding_passed = rows.iter().all(|r| r.dominated);
        artifacts.push(stamp.csv("hoeffding.csv", &["t", "frequency", "se", "bound"], tail_rows(&rows)));
        hoeffding = json!({
            "reps": reps,
            "evaluation_seed": eval_seed,
            "c": c,
            "d": d,
            "violations": rows.iter().filter(|r| !r.dominated).count(),
            "passed": hoeffding_passed,
        });
    }
    let passed = mgf_passed && hoeffding_passed;
    artifacts.push(stamp.json(
        "check-mgf.json",
        json!({
            "command": "check-mgf",
            "reps": m.reps,
            "mgf": to_json(&reports),
            "mgf_passed": mgf_passed,
            "hoeffding": hoeffding,
            "passed": passed,
        }),
    ));
    Ok(Outcome {
        artifacts,
        passed,
        summary: format!(
            "check-mgf: {}/{} MGF checks pass, Hoeffding {} -> {}",
            reports.iter().filter(|r| r.pass).count(),
            reports.len(),
            if m.hoeffding { verdict(hoeffding_passed) } else { "skipped" },
            verdict(passed)
        ),
    })
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}
