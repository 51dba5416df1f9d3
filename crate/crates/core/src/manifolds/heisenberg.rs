use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::geometry::{CometricDerivatives, ManifoldModel, PhaseState};

/// The Heisenberg group `R^3` with horizontal frame
/// `X = ∂x − (y/2)∂z`, `Y = ∂y + (x/2)∂z` and the compatible metric making
/// `{X, Y, Z = ∂z}` orthogonal with `g(Z,Z) = λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergModel {
    lambda: f64,
    name: String,
}

impl HeisenbergModel {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(
                "lambda",
                format!("must be a positive number, got {lambda}"),
            ));
        }
        Ok(Self {
            lambda,
            name: format!("heisenberg(lambda={lambda})"),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `X(q)` in chart coordinates.
pub fn heisenberg_x(q: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[1.0, 0.0, -0.5 * q[1]])
}

/// `Y(q)` in chart coordinates.
pub fn heisenberg_y(q: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[0.0, 1.0, 0.5 * q[0]])
}

impl ManifoldModel for HeisenbergModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        3
    }

    fn rank(&self) -> usize {
        2
    }

    fn cometric(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let (x, y) = (q[0], q[1]);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0,
                0.0,
                -0.5 * y,
                0.0,
                1.0,
                0.5 * x,
                -0.5 * y,
                0.5 * x,
                0.25 * (x * x + y * y),
            ],
        )
    }

    fn metric(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let (x, y, l) = (q[0], q[1], self.lambda);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 + 0.25 * l * y * y,
                -0.25 * l * x * y,
                0.5 * l * y,
                -0.25 * l * x * y,
                1.0 + 0.25 * l * x * x,
                -0.5 * l * x,
                0.5 * l * y,
                -0.5 * l * x,
                l,
            ],
        )
    }

    fn analytic_cometric_derivatives(&self, q: &DVector<f64>) -> Option<CometricDerivatives> {
        let (x, y) = (q[0], q[1]);
        let mut d = CometricDerivatives::zeros(3);
        // β^{13} = -y/2, β^{23} = x/2, β^{33} = (x² + y²)/4
        d.set(0, 2, 1, -0.5);
        d.set(2, 0, 1, -0.5);
        d.set(1, 2, 0, 0.5);
        d.set(2, 1, 0, 0.5);
        d.set(2, 2, 0, 0.5 * x);
        d.set(2, 2, 1, 0.5 * y);
        Some(d)
    }

    fn analytic_frame(&self, q: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.0, 0.0, 1.0, -0.5 * q[1], 0.5 * q[0]],
        ))
    }

    fn exact_flow(&self, state: &PhaseState, t: f64) -> Option<PhaseState> {
        Some(heisenberg_flow_exact(state, t))
    }
}

/// Below this value of `|θ t|` the arc formulas switch to their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-6;

/// `(sin θt / θ, (1 − cos θt) / θ, (θt − sin θt) / θ²)`.
fn arc_integrals(theta: f64, t: f64) -> (f64, f64, f64) {
    let phi = theta * t;
    if phi.abs() < SERIES_THRESHOLD {
        let p2 = phi * phi;
        return (
            t * (1.0 - p2 / 6.0),
            t * phi * (0.5 - p2 / 24.0),
            t * t * phi * (1.0 / 6.0 - p2 / 120.0),
        );
    }
    let (s, _) = phi.sin_cos();
    let half = (0.5 * phi).sin();
    (
        s / theta,
        2.0 * half * half / theta,
        t * t * phi_minus_sin_over_cube(phi) * phi,
    )
}

/// `(φ − sin φ)/φ³`, free of cancellation for small `φ`.
fn phi_minus_sin_over_cube(phi: f64) -> f64 {
    if phi.abs() < 0.5 {
        let p2 = phi * phi;
        let mut term = 1.0 / 6.0;
        let mut sum = term;
        for k in 1..9 {
            let k = k as f64;
            term *= -p2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            sum += term;
        }
        sum
    } else {
        (phi - phi.sin()) / (phi * phi * phi)
    }
}

/// Closed-form Hamiltonian flow on the Heisenberg group.
///
/// `θ = p₃` is conserved and the horizontal velocity `w = a + ib`,
/// `a = p₁ − y p₃/2`, `b = p₂ + x p₃/2`, rotates as `w(t) = w₀ e^{iθt}`.
/// The planar position follows the arc `x + iy = ζ₀ + w₀ S(t)` with
/// `S(t) = (e^{iθt} − 1)/(iθ)`, and `z` accumulates half the signed area
/// `∫ (x b − y a) dt`.
pub fn heisenberg_flow_exact(state: &PhaseState, t: f64) -> PhaseState {
    let (x0, y0, z0) = (state.q[0], state.q[1], state.q[2]);
    let (p1, p2, theta) = (state.p[0], state.p[1], state.p[2]);
    let a0 = p1 - 0.5 * y0 * theta;
    let b0 = p2 + 0.5 * x0 * theta;
    let (s_re, s_im, area) = arc_integrals(theta, t);

    // ζ(t) = ζ₀ + w₀ S(t)
    let x = x0 + a0 * s_re - b0 * s_im;
    let y = y0 + a0 * s_im + b0 * s_re;

    // Im(conj(ζ₀) w₀ S) = Im((x0 − i y0)(a0 + i b0)(s_re + i s_im))
    let cw_re = x0 * a0 + y0 * b0;
    let cw_im = x0 * b0 - y0 * a0;
    let cross = cw_re * s_im + cw_im * s_re;
    let z = z0 + 0.5 * (cross + (a0 * a0 + b0 * b0) * area);

    let (sn, cs) = (theta * t).sin_cos();
    let a = a0 * cs - b0 * sn;
    let b = a0 * sn + b0 * cs;
    PhaseState {
        q: DVector::from_column_slice(&[x, y, z]),
        p: DVector::from_column_slice(&[a + 0.5 * y * theta, b - 0.5 * x * theta, theta]),
    }
}
