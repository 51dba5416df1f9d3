//! The horizontal sub-Laplacian, evaluated two ways:
//!
//! * [`sublaplacian_sphere_avg`]: Monte Carlo average, over the horizontal
//!   unit sphere, of the second derivative of `f` along the Hamiltonian flow
//!   started at `(q, G v)`. The acceleration comes straight from the
//!   canonical vector field; no Christoffel symbols are involved.
//! * [`sublaplacian_local`]: the deterministic local-coordinate formula
//!   `(1/m) Σ_{ij} { β^{ij} ∂_{ij} f − Σ_k Γ^{ijk} [GBG]_{ij} ∂_k f }`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::field::{PhaseField, ScalarField};
use crate::geometry::{cometric_eval, horizontal_factor, metric_eval, ManifoldModel, PhaseState};
use crate::hamiltonian::{cometric_derivatives, flow, raised_christoffel};
use crate::stats::Estimate;

/// Default number of sphere samples.
pub const DEFAULT_SPHERE_SAMPLES: usize = 100_000;

/// Time step of the centered difference in [`dhj_derivative`].
pub const DHJ_STEP: f64 = 1e-4;

/// Signed-time flow. Backward time uses the reversal symmetry
/// `Φ_{−t}(q, p) = R Φ_t(q, −p)` with `R(q, p) = (q, −p)`.
pub(crate) fn evolve(model: &dyn ManifoldModel, state: &PhaseState, t: f64) -> Result<PhaseState> {
    if t < 0.0 {
        let reversed = PhaseState::new(state.q.clone(), -&state.p);
        let out = evolve(model, &reversed, -t)?;
        return Ok(PhaseState::new(out.q, -out.p));
    }
    match model.exact_flow(state, t) {
        Some(s) => Ok(s),
        None => Ok(flow(model, state, t, (t / 10.0).clamp(f64::MIN_POSITIVE, 1e-2))?.final_state),
    }
}

/// `d/dt F(Φ_t(state))` at `t = 0` by a centered difference with step
/// [`DHJ_STEP`].
pub fn dhj_derivative(
    model: &dyn ManifoldModel,
    field: &dyn PhaseField,
    state: &PhaseState,
) -> Result<f64> {
    let fwd = evolve(model, state, DHJ_STEP)?;
    let bwd = evolve(model, state, -DHJ_STEP)?;
    Ok((field.value(&fwd) - field.value(&bwd)) / (2.0 * DHJ_STEP))
}

/// Monte Carlo estimate of `𝒫F(q) = ∫ F(q, G(q) v) 𝕌_q(dv)`.
pub fn projection_p<R: Rng + ?Sized>(
    model: &dyn ManifoldModel,
    field: &dyn PhaseField,
    q: &DVector<f64>,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if n_samples < 2 {
        return Err(invalid(
            "n_samples",
            "at least 2 samples are needed for a standard error",
        ));
    }
    let factor = horizontal_factor(model, q)?;
    let g = metric_eval(model, q)?;
    let values: Vec<f64> = (0..n_samples)
        .map(|_| {
            let v = factor.sample(rng);
            field.value(&PhaseState::new(q.clone(), &g * v))
        })
        .collect();
    Estimate::from_samples(&values)
}

/// Quantities at `q` shared by every sphere sample.
struct FlowJet {
    b: DMatrix<f64>,
    g: DMatrix<f64>,
    /// `∂B/∂x^l` for each `l`.
    db: Vec<DMatrix<f64>>,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl FlowJet {
    fn new(model: &dyn ManifoldModel, f: &dyn ScalarField, q: &DVector<f64>) -> Result<Self> {
        let d = model.dim();
        let derivs = cometric_derivatives(model, q)?;
        Ok(Self {
            b: cometric_eval(model, q)?,
            g: metric_eval(model, q)?,
            db: (0..d).map(|l| derivs.slice(l)).collect(),
            grad: f.gradient(q),
            hess: f.hessian(q),
        })
    }

    /// `q̇ᵀ H q̇ + ∇f · q̈` where `q̇ = B p` and
    /// `q̈ = Σ_l q̇^l (∂_l B) p + B ṗ`, `ṗ_i = −½ pᵀ (∂_i B) p`.
    fn second_derivative(&self, p: &DVector<f64>) -> f64 {
        let velocity = &self.b * p;
        let pdot = DVector::from_fn(p.len(), |i, _| -0.5 * p.dot(&(&self.db[i] * p)));
        let mut accel = &self.b * pdot;
        for (l, dbl) in self.db.iter().enumerate() {
            accel += dbl * p * velocity[l];
        }
        velocity.dot(&(&self.hess * &velocity)) + self.grad.dot(&accel)
    }
}

/// The defining sphere average of the second derivative along the flow.
pub fn sublaplacian_sphere_avg<R: Rng + ?Sized>(
    model: &dyn ManifoldModel,
    f: &dyn ScalarField,
    q: &DVector<f64>,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if n_samples < 2 {
        return Err(invalid(
            "n_samples",
            "at least 2 samples are needed for a standard error",
        ));
    }
    let factor = horizontal_factor(model, q)?;
    let jet = FlowJet::new(model, f, q)?;
    let values: Vec<f64> = (0..n_samples)
        .map(|_| {
            let v = factor.sample(rng);
            jet.second_derivative(&(&jet.g * v))
        })
        .collect();
    let est = Estimate::from_samples(&values)?;
    if est.mean.is_finite() && est.stderr.is_finite() {
        Ok(est)
    } else {
        Err(Error::NonFinite {
            what: "sphere-averaged sub-Laplacian",
            point: q.iter().copied().collect(),
        })
    }
}

/// The local-coordinate formula for the sub-Laplacian.
pub fn sublaplacian_local(
    model: &dyn ManifoldModel,
    f: &dyn ScalarField,
    q: &DVector<f64>,
) -> Result<f64> {
    let b = cometric_eval(model, q)?;
    let g = metric_eval(model, q)?;
    let gamma = raised_christoffel(model, q)?;
    let gbg = &g * &b * &g;
    let hess = f.hessian(q);
    let grad = f.gradient(q);
    let second_order = b.component_mul(&hess).sum();
    let first_order = gamma.contract(&gbg).dot(&grad);
    let value = (second_order - first_order) / model.rank() as f64;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            what: "local sub-Laplacian",
            point: q.iter().copied().collect(),
        })
    }
}
