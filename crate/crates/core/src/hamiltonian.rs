//! The sub-Riemannian Hamiltonian `H(q,p) = ½ pᵀ B(q) p`, its canonical flow,
//! and the raised Christoffel symbols that describe the acceleration of
//! normal geodesics in momentum variables.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::field::ScalarField;
use crate::geometry::{check_dim, cometric_eval, CometricDerivatives, ManifoldModel, PhaseState};

/// Relative step for central differences of the cometric.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

/// Energy drift, relative to `max(1, |H₀|)`, at which RK4 is declared to have failed.
pub const ENERGY_FAILURE_TOL: f64 = 1e-4;

/// `½ pᵀ B(q) p`.
pub fn hamiltonian(model: &dyn ManifoldModel, state: &PhaseState) -> Result<f64> {
    state.check(model)?;
    let b = cometric_eval(model, &state.q)?;
    Ok(0.5 * state.p.dot(&(b * &state.p)))
}

/// `∂β^{ij}/∂x^l` at `q`: analytic when the model provides it, central
/// differences otherwise.
pub fn cometric_derivatives(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
) -> Result<CometricDerivatives> {
    check_dim(model, q)?;
    match model.analytic_cometric_derivatives(q) {
        Some(d) if d.is_finite() => Ok(d),
        Some(_) => Err(Error::NonFinite {
            what: "cometric derivatives",
            point: q.iter().copied().collect(),
        }),
        None => cometric_derivatives_fd(model, q),
    }
}

/// Central-difference `∂β^{ij}/∂x^l` with step `1e-5·(1+‖q‖)`, symmetrized
/// in `(i,j)`.
pub fn cometric_derivatives_fd(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
) -> Result<CometricDerivatives> {
    check_dim(model, q)?;
    let d = model.dim();
    let h = FD_RELATIVE_STEP * (1.0 + q.norm());
    let mut out = CometricDerivatives::zeros(d);
    for l in 0..d {
        let mut plus = q.clone();
        let mut minus = q.clone();
        plus[l] += h;
        minus[l] -= h;
        let bp = cometric_eval(model, &plus)?;
        let bm = cometric_eval(model, &minus)?;
        for i in 0..d {
            for j in 0..d {
                out.set(i, j, l, (bp[(i, j)] - bm[(i, j)]) / (2.0 * h));
            }
        }
    }
    out.symmetrize();
    Ok(out)
}

fn vector_field_with(
    b: &DMatrix<f64>,
    db: &CometricDerivatives,
    p: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let d = p.len();
    let dq = b * p;
    let dp = DVector::from_fn(d, |i, _| {
        let mut s = 0.0;
        for k in 0..d {
            for j in 0..d {
                s += p[k] * p[j] * db.get(k, j, i);
            }
        }
        -0.5 * s
    });
    (dq, dp)
}

/// The canonical equations `dq/dt = ∂H/∂p = B(q) p`,
/// `dp_i/dt = −∂H/∂x^i = −½ pᵀ (∂B/∂x^i) p`.
pub fn hj_vector_field(
    model: &dyn ManifoldModel,
    state: &PhaseState,
) -> Result<(DVector<f64>, DVector<f64>)> {
    state.check(model)?;
    let b = cometric_eval(model, &state.q)?;
    let db = cometric_derivatives(model, &state.q)?;
    Ok(vector_field_with(&b, &db, &state.p))
}

/// Output of [`flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub final_state: PhaseState,
    /// `(t, state)` samples including both endpoints, when requested.
    pub trace: Option<Vec<(f64, PhaseState)>>,
    /// `max_t |H(t) − H(0)|` over the integration grid.
    pub energy_drift: f64,
}

fn rk4_step(model: &dyn ManifoldModel, s: &PhaseState, h: f64) -> Result<PhaseState> {
    let f = |st: &PhaseState| -> Result<(DVector<f64>, DVector<f64>)> {
        let b = cometric_eval(model, &st.q)?;
        let db = cometric_derivatives(model, &st.q)?;
        Ok(vector_field_with(&b, &db, &st.p))
    };
    let shifted = |k: &(DVector<f64>, DVector<f64>), c: f64| PhaseState {
        q: &s.q + &k.0 * c,
        p: &s.p + &k.1 * c,
    };
    let k1 = f(s)?;
    let k2 = f(&shifted(&k1, 0.5 * h))?;
    let k3 = f(&shifted(&k2, 0.5 * h))?;
    let k4 = f(&shifted(&k3, h))?;
    let w = h / 6.0;
    Ok(PhaseState {
        q: &s.q + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * w,
        p: &s.p + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * w,
    })
}

/// Fixed-step classical Runge-Kutta integration of the Hamilton-Jacobi
/// flow over `[0, duration]`. The step count is `ceil(duration / step)` and
/// the interval is split evenly.
pub fn flow(
    model: &dyn ManifoldModel,
    state: &PhaseState,
    duration: f64,
    step: f64,
) -> Result<FlowResult> {
    integrate(model, state, duration, step, false)
}

/// [`flow`] that also records every integration grid point.
pub fn flow_traced(
    model: &dyn ManifoldModel,
    state: &PhaseState,
    duration: f64,
    step: f64,
) -> Result<FlowResult> {
    integrate(model, state, duration, step, true)
}

fn integrate(
    model: &dyn ManifoldModel,
    state: &PhaseState,
    duration: f64,
    step: f64,
    keep_trace: bool,
) -> Result<FlowResult> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(invalid(
            "duration",
            format!("must be finite and >= 0, got {duration}"),
        ));
    }
    if !(step > 0.0) {
        return Err(invalid("step", format!("must be > 0, got {step}")));
    }
    state.check(model)?;
    let h0 = hamiltonian(model, state)?;
    let n = (duration / step)
        .ceil()
        .max(if duration > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if n > 0 { duration / n as f64 } else { 0.0 };
    let mut trace = keep_trace.then(|| vec![(0.0, state.clone())]);
    let mut current = state.clone();
    let mut drift = 0.0_f64;
    for k in 0..n {
        let next = rk4_step(model, &current, dt);
        let t = (k + 1) as f64 * dt;
        let next = match next {
            Ok(s) if s.is_finite() => s,
            _ => return Err(Error::Integration { time: t }),
        };
        let e = hamiltonian(model, &next).map_err(|_| Error::Integration { time: t })?;
        drift = drift.max((e - h0).abs());
        if drift > ENERGY_FAILURE_TOL * h0.abs().max(1.0) {
            return Err(Error::Integration { time: t });
        }
        if let Some(tr) = trace.as_mut() {
            tr.push((t, next.clone()));
        }
        current = next;
    }
    Ok(FlowResult {
        final_state: current,
        trace,
        energy_drift: drift,
    })
}

/// Raised Christoffel symbols `Γ^{ijk}` at one point, symmetric in `(i,j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTensor {
    dim: usize,
    data: Vec<f64>,
}

impl ChristoffelTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    /// `Σ_{ij} Γ^{ijk} a_{ij}` for each `k`.
    pub fn contract(&self, a: &DMatrix<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += self.get(i, j, k) * a[(i, j)];
                }
            }
            s
        })
    }

    /// `Σ_{ij} Γ^{ijk} p_i p_j` for each `k`.
    pub fn contract_momentum(&self, p: &DVector<f64>) -> DVector<f64> {
        self.contract(&(p * p.transpose()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// `Γ^{ijk} = −½ Σ_l ( β^{il} ∂_l β^{jk} + β^{jl} ∂_l β^{ik} − β^{lk} ∂_l β^{ij} )`.
pub fn raised_christoffel(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
) -> Result<ChristoffelTensor> {
    let b = cometric_eval(model, q)?;
    let db = cometric_derivatives(model, q)?;
    let d = model.dim();
    let mut data = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for l in 0..d {
                    s += b[(i, l)] * db.get(j, k, l) + b[(j, l)] * db.get(i, k, l)
                        - b[(l, k)] * db.get(i, j, l);
                }
                data[(i * d + j) * d + k] = -0.5 * s;
            }
        }
    }
    for k in 0..d {
        for i in 0..d {
            for j in (i + 1)..d {
                let a = (i * d + j) * d + k;
                let c = (j * d + i) * d + k;
                let avg = 0.5 * (data[a] + data[c]);
                data[a] = avg;
                data[c] = avg;
            }
        }
    }
    Ok(ChristoffelTensor { dim: d, data })
}

/// `d²/dt² f(q(t))` at `t = 0` along `Φ_t(state)`, written as
/// `Σ_{ij} v^i v^j ∂_{ij} f − Σ_{ijk} Γ^{ijk} p_i p_j ∂_k f` with `v = B(q) p`.
pub fn second_derivative_along_flow(
    model: &dyn ManifoldModel,
    state: &PhaseState,
    f: &dyn ScalarField,
) -> Result<f64> {
    state.check(model)?;
    let b = cometric_eval(model, &state.q)?;
    let gamma = raised_christoffel(model, &state.q)?;
    let v = b * &state.p;
    let hess = f.hessian(&state.q);
    let grad = f.gradient(&state.q);
    let value = v.dot(&(hess * &v)) - gamma.contract_momentum(&state.p).dot(&grad);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            what: "second derivative along flow",
            point: state.q.iter().copied().collect(),
        })
    }
}
