//! The ε-scaled piecewise-Hamiltonian random walk.
//!
//! Legs are separated by independent Exp(1) clock rings on the walk clock.
//! Leg `k` starts at `(x_k, G(x_k) v_k)` with `v_k` uniform on the horizontal
//! unit sphere and follows `s ↦ Φ_{ε s}` until the next ring, where the
//! momentum is redrawn and the position carries over.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    check_dim, metric_eval, sampling_frame, unit_sphere_sample, ManifoldModel, PhaseState,
};
use crate::hamiltonian::flow;

/// How a leg of the walk is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LegMode {
    /// The model's closed-form flow when it has one, Runge-Kutta otherwise.
    #[default]
    Exact,
    /// Always integrate with fixed-step RK4.
    RungeKutta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub epsilon: f64,
    /// Total walk-clock time.
    pub horizon: f64,
    /// Upper bound on the RK4 step; each leg also uses at most a tenth of its duration.
    pub step: f64,
    pub leg_mode: LegMode,
}

impl WalkConfig {
    pub fn new(epsilon: f64, horizon: f64) -> Self {
        Self {
            epsilon,
            horizon,
            step: 1e-2,
            leg_mode: LegMode::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(invalid(
                "horizon",
                format!("must be finite and >= 0, got {}", self.horizon),
            ));
        }
        if !(self.step > 0.0) {
            return Err(invalid(
                "step",
                format!("must be positive, got {}", self.step),
            ));
        }
        Ok(())
    }
}

/// One realization of the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub config: WalkConfig,
    /// `τ_0 = 0 < τ_1 < …`, one per leg.
    pub jump_times: Vec<f64>,
    /// Initial phase state `(x_k, G(x_k) v_k)` of each leg.
    pub leg_starts: Vec<PhaseState>,
    /// State at exactly the horizon.
    pub final_state: PhaseState,
}

impl WalkPath {
    pub fn leg_count(&self) -> usize {
        self.leg_starts.len()
    }
}

/// Flows one leg for flow time `duration` (already multiplied by ε).
pub fn leg_flow(
    model: &dyn ManifoldModel,
    state: &PhaseState,
    duration: f64,
    cfg: &WalkConfig,
) -> Result<PhaseState> {
    if duration == 0.0 {
        return Ok(state.clone());
    }
    if cfg.leg_mode == LegMode::Exact {
        if let Some(s) = model.exact_flow(state, duration) {
            return if s.is_finite() {
                Ok(s)
            } else {
                Err(Error::Integration { time: duration })
            };
        }
    }
    let step = cfg.step.min(duration / 10.0);
    Ok(flow(model, state, duration, step)?.final_state)
}

fn redirect<R: Rng + ?Sized>(
    model: &dyn ManifoldModel,
    q: DVector<f64>,
    rng: &mut R,
) -> Result<PhaseState> {
    let frame = sampling_frame(model, &q)?;
    let v = &frame * unit_sphere_sample(frame.ncols(), rng);
    let p = metric_eval(model, &q)? * v;
    Ok(PhaseState::new(q, p))
}

/// Runs one walk, calling `on_leg(τ_k, start_k)` at the start of every leg,
/// and returns the state at the horizon.
pub(crate) fn run_walk<R, F>(
    model: &dyn ManifoldModel,
    x0: &DVector<f64>,
    v0: Option<&DVector<f64>>,
    cfg: &WalkConfig,
    rng: &mut R,
    mut on_leg: F,
) -> Result<PhaseState>
where
    R: Rng + ?Sized,
    F: FnMut(f64, &PhaseState),
{
    cfg.validate()?;
    check_dim(model, x0)?;
    let wrap = |leg: usize| {
        move |e: Error| Error::Walk {
            leg,
            source: Box::new(e),
        }
    };
    let mut state = match v0 {
        Some(v) => {
            check_dim(model, v)?;
            PhaseState::new(x0.clone(), metric_eval(model, x0)? * v)
        }
        None => redirect(model, x0.clone(), rng).map_err(wrap(0))?,
    };
    let mut tau = 0.0;
    let mut leg = 0usize;
    loop {
        on_leg(tau, &state);
        let e: f64 = rng.sample(Exp1);
        let ring = tau + e;
        if ring >= cfg.horizon {
            return leg_flow(model, &state, cfg.epsilon * (cfg.horizon - tau), cfg)
                .map_err(wrap(leg));
        }
        let end = leg_flow(model, &state, cfg.epsilon * e, cfg).map_err(wrap(leg))?;
        leg += 1;
        state = redirect(model, end.q, rng).map_err(wrap(leg))?;
        tau = ring;
    }
}

/// Samples one walk from `x0`. When `v0` is `None` the initial direction is
/// drawn uniformly from the horizontal unit sphere at `x0`; a given `v0`
/// should be a unit horizontal vector.
pub fn sample_walk<R: Rng + ?Sized>(
    model: &dyn ManifoldModel,
    x0: &DVector<f64>,
    v0: Option<&DVector<f64>>,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<WalkPath> {
    let mut jump_times = Vec::new();
    let mut leg_starts = Vec::new();
    let final_state = run_walk(model, x0, v0, cfg, rng, |t, s| {
        jump_times.push(t);
        leg_starts.push(s.clone());
    })?;
    Ok(WalkPath {
        config: *cfg,
        jump_times,
        leg_starts,
        final_state,
    })
}

/// Base point `ξ_t` of a recorded walk, recomputed from the stored start of
/// the leg containing `t`.
pub fn walk_position_at(
    path: &WalkPath,
    model: &dyn ManifoldModel,
    t: f64,
) -> Result<DVector<f64>> {
    if !(0.0..=path.config.horizon).contains(&t) {
        return Err(invalid(
            "t",
            format!("must lie in [0, {}], got {t}", path.config.horizon),
        ));
    }
    let k = path
        .jump_times
        .partition_point(|&tau| tau <= t)
        .saturating_sub(1);
    let start = &path.leg_starts[k];
    let tau = path.jump_times[k];
    Ok(leg_flow(model, start, path.config.epsilon * (t - tau), &path.config)?.q)
}
