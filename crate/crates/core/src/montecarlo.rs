//! Monte Carlo estimation of `E[f(ξ^ε_{t/ε²})]`, ε-sweeps, and an
//! Euler-Maruyama reference for Heisenberg horizontal Brownian motion.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`
//! and per-path results are reduced in index order with pairwise summation,
//! so reports are bit-identical for any worker count.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{Polynomial, ScalarField};
use crate::geometry::ManifoldModel;
use crate::stats::{moment_report, Estimate};
use crate::walker::{run_walk, LegMode, WalkConfig};

pub use crate::stats::{pairwise_sum, MomentSummary};

/// Largest tolerated fraction of failed paths.
pub const FAILURE_BUDGET: f64 = 1e-3;

/// Stream offset separating oracle paths from walk paths under one seed.
const ORACLE_STREAM_BASE: u64 = 1 << 63;

/// Random stream for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `job(i)` for `i in 0..n`, returning results in index order.
fn par_map<T, F>(n: usize, workers: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&job).collect::<Vec<T>>();
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| invalid("workers", e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Settings shared by [`estimate_semigroup`] and [`convergence_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    /// Diffusion time; walks run for `t / ε²` on the walk clock.
    pub t: f64,
    pub epsilon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub step: f64,
    pub leg_mode: LegMode,
    /// Worker threads; `None` uses the global pool. Never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl EstimatorSettings {
    pub fn new(t: f64, epsilon: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            t,
            epsilon,
            n_paths,
            seed,
            step: 1e-2,
            leg_mode: LegMode::Exact,
            workers: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(invalid("t", format!("must be positive, got {}", self.t)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.n_paths < 2 {
            return Err(invalid(
                "n_paths",
                format!("must be at least 2, got {}", self.n_paths),
            ));
        }
        Ok(())
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            epsilon: self.epsilon,
            horizon: self.t / (self.epsilon * self.epsilon),
            step: self.step,
            leg_mode: self.leg_mode,
        }
    }
}

/// Inputs echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorEcho {
    pub model: String,
    pub field: String,
    pub x0: Vec<f64>,
    pub t: f64,
    pub epsilon: f64,
    pub step: f64,
    pub leg_mode: LegMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub stderr: f64,
    /// Paths that contributed.
    pub n_paths: usize,
    pub n_failed: usize,
    pub seed: u64,
    pub config: EstimatorEcho,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub elapsed: f64,
}

/// Estimates `E[f(ξ^ε_{t/ε²})]` for walks started at `x0`.
pub fn estimate_semigroup(
    model: &dyn ManifoldModel,
    f: &dyn ScalarField,
    x0: &DVector<f64>,
    settings: &EstimatorSettings,
) -> Result<EstimatorReport> {
    Ok(estimate_semigroup_many(model, &[f], x0, settings)?.remove(0))
}

/// Like [`estimate_semigroup`] for several fields evaluated on the same walks.
pub fn estimate_semigroup_many(
    model: &dyn ManifoldModel,
    fields: &[&dyn ScalarField],
    x0: &DVector<f64>,
    settings: &EstimatorSettings,
) -> Result<Vec<EstimatorReport>> {
    settings.validate()?;
    if fields.is_empty() {
        return Err(invalid("fields", "at least one field is required"));
    }
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x0.len(),
        });
    }
    let started = Instant::now();
    let cfg = settings.walk_config();
    let outcomes = par_map(settings.n_paths, settings.workers, |i| {
        let mut rng = path_rng(settings.seed, i as u64);
        run_walk(model, x0, None, &cfg, &mut rng, |_, _| {})
            .map(|end| fields.iter().map(|f| f.value(&end.q)).collect::<Vec<f64>>())
    })?;

    let mut failed = 0usize;
    let mut first_failure = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(settings.n_paths); fields.len()];
    for outcome in outcomes {
        match outcome {
            Ok(values) if values.iter().all(|v| v.is_finite()) => {
                for (col, v) in columns.iter_mut().zip(values) {
                    col.push(v);
                }
            }
            Ok(_) => {
                failed += 1;
                first_failure.get_or_insert(Error::NonFinite {
                    what: "test function at walk endpoint",
                    point: Vec::new(),
                });
            }
            Err(e) => {
                failed += 1;
                first_failure.get_or_insert(e);
            }
        }
    }
    if failed as f64 > FAILURE_BUDGET * settings.n_paths as f64 || columns[0].len() < 2 {
        return Err(Error::TooManyFailures {
            failed,
            total: settings.n_paths,
            first: Box::new(first_failure.expect("failures recorded")),
        });
    }
    let elapsed = started.elapsed().as_secs_f64();
    fields
        .iter()
        .zip(columns)
        .map(|(f, col)| {
            let est = Estimate::from_samples(&col)?;
            Ok(EstimatorReport {
                estimate: est.mean,
                stderr: est.stderr,
                n_paths: est.n,
                n_failed: failed,
                seed: settings.seed,
                config: EstimatorEcho {
                    model: model.name().to_string(),
                    field: f.name(),
                    x0: x0.iter().copied().collect(),
                    t: settings.t,
                    epsilon: settings.epsilon,
                    step: settings.step,
                    leg_mode: settings.leg_mode,
                },
                elapsed,
            })
        })
        .collect()
}

/// Where a reference value came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    pub stderr: Option<f64>,
    /// `analytic` for closed-form constants, `sde-oracle` for simulated values.
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub model: String,
    pub field: String,
    pub x0: Vec<f64>,
    pub t: f64,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    pub reference: Option<Reference>,
}

impl ConvergenceTable {
    /// `|estimate − reference|` per row, when a reference is attached.
    pub fn deviations(&self) -> Option<Vec<f64>> {
        let r = self.reference.as_ref()?;
        Some(
            self.rows
                .iter()
                .map(|row| (row.estimate - r.value).abs())
                .collect(),
        )
    }
}

/// One [`estimate_semigroup`] row per ε, in the given (strictly decreasing)
/// order. Every row uses `base.seed`.
pub fn convergence_sweep(
    model: &dyn ManifoldModel,
    f: &dyn ScalarField,
    x0: &DVector<f64>,
    eps_list: &[f64],
    base: &EstimatorSettings,
    reference: Option<Reference>,
) -> Result<ConvergenceTable> {
    if eps_list.is_empty() {
        return Err(invalid("eps_list", "needs at least one value"));
    }
    if eps_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid("eps_list", "values must be strictly decreasing"));
    }
    let rows = eps_list
        .iter()
        .map(|&epsilon| {
            let r = estimate_semigroup(model, f, x0, &EstimatorSettings { epsilon, ..*base })?;
            Ok(ConvergenceRow {
                epsilon,
                estimate: r.estimate,
                stderr: r.stderr,
                n_paths: r.n_paths,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable {
        model: model.name().to_string(),
        field: f.name(),
        x0: x0.iter().copied().collect(),
        t: base.t,
        seed: base.seed,
        rows,
        reference,
    })
}

/// Exact `e^{t𝓛} f (x0)` on Euclidean `R^d`, where `𝓛 = Δ/d`: the mean of
/// `f` under `N(x0, (2t/d) I)`, computed from Gaussian moments.
pub fn euclidean_heat_reference(f: &Polynomial, x0: &DVector<f64>, t: f64) -> Result<f64> {
    let d = x0.len();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: f.dim(),
        });
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    let s = (2.0 * t / d as f64).sqrt();
    // E[(a + sZ)^k] = Σ_j C(k, j) a^{k−j} s^j E[Z^j], E[Z^j] = (j − 1)!! for even j.
    let shifted_moment = |a: f64, k: u32| {
        let mut total = 0.0;
        let mut binom = 1.0;
        let mut gauss = 1.0;
        for j in 0..=k {
            if j % 2 == 0 {
                total += binom * a.powi((k - j) as i32) * s.powi(j as i32) * gauss;
                gauss *= (j + 1) as f64;
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        total
    };
    Ok(f.terms()
        .iter()
        .map(|m| {
            m.powers
                .iter()
                .zip(x0.iter())
                .fold(m.coef, |acc, (&k, &a)| acc * shifted_moment(a, k))
        })
        .sum())
}

/// A variance estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Settings for [`heisenberg_sde_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub t: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Frequency `λ` in the reported `E[cos(λ z)]`.
    pub cos_frequency: f64,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl OracleSettings {
    pub fn new(t: f64, n_paths: usize, dt: f64, seed: u64) -> Self {
        Self {
            t,
            n_paths,
            dt,
            seed,
            cos_frequency: 1.0,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub settings: OracleSettings,
    pub steps: usize,
    pub x_sq: Estimate,
    pub y_sq: Estimate,
    pub z_mean: Estimate,
    pub z_var: VarianceEstimate,
    pub cos_z: Estimate,
}

impl OracleReport {
    /// Reference value for a built-in test field, when the report covers it:
    /// `xsq`, `ysq`, `z` or `zsq`.
    pub fn reference_for(&self, field: &str) -> Option<Reference> {
        let (value, stderr) = match field {
            "xsq" | "x1sq" => (self.x_sq.mean, self.x_sq.stderr),
            "ysq" => (self.y_sq.mean, self.y_sq.stderr),
            "z" => (self.z_mean.mean, self.z_mean.stderr),
            "zsq" => (
                self.z_var.value + self.z_mean.mean * self.z_mean.mean,
                self.z_var.stderr,
            ),
            _ => return None,
        };
        Some(Reference {
            value,
            stderr: Some(stderr),
            provenance: "sde-oracle".into(),
        })
    }
}

/// Euler-Maruyama simulation from the origin of
/// `dx = dW¹, dy = dW², dz = ½ (x dW² − y dW¹)`,
/// the diffusion generated by `½(X² + Y²)` on the Heisenberg group.
pub fn heisenberg_sde_oracle(settings: &OracleSettings) -> Result<OracleReport> {
    if !(settings.t > 0.0) || !(settings.dt > 0.0) {
        return Err(invalid("t/dt", "must be positive"));
    }
    if settings.n_paths < 2 {
        return Err(invalid("n_paths", "must be at least 2"));
    }
    let steps = (settings.t / settings.dt).round().max(1.0) as usize;
    let h = settings.t / steps as f64;
    let sd = h.sqrt();
    let endpoints = par_map(settings.n_paths, settings.workers, |i| {
        let mut rng = path_rng(settings.seed, ORACLE_STREAM_BASE + i as u64);
        let (mut x, mut y, mut z) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..steps {
            let dw1: f64 = sd * rng.sample::<f64, _>(StandardNormal);
            let dw2: f64 = sd * rng.sample::<f64, _>(StandardNormal);
            z += 0.5 * (x * dw2 - y * dw1);
            x += dw1;
            y += dw2;
        }
        [x, y, z]
    })?;
    let column = |f: &dyn Fn(&[f64; 3]) -> f64| endpoints.iter().map(f).collect::<Vec<f64>>();
    let z = column(&|e| e[2]);
    let z_summary = moment_report(&z)?;
    let w = settings.cos_frequency;
    Ok(OracleReport {
        settings: *settings,
        steps,
        x_sq: Estimate::from_samples(&column(&|e| e[0] * e[0]))?,
        y_sq: Estimate::from_samples(&column(&|e| e[1] * e[1]))?,
        z_mean: Estimate::from_samples(&z)?,
        z_var: VarianceEstimate {
            value: z_summary.variance,
            stderr: z_summary.stderr_variance,
        },
        cos_z: Estimate::from_samples(&column(&|e| (w * e[2]).cos()))?,
    })
}
