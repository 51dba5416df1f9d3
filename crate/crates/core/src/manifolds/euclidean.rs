use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::geometry::{CometricDerivatives, ManifoldModel, PhaseState};

/// Flat `R^d` with every direction horizontal.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanModel {
    dim: usize,
    name: String,
}

impl EuclideanModel {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        Ok(Self {
            dim,
            name: format!("euclidean(dim={dim})"),
        })
    }
}

impl ManifoldModel for EuclideanModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn rank(&self) -> usize {
        self.dim
    }

    fn cometric(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn metric(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn analytic_cometric_derivatives(&self, _q: &DVector<f64>) -> Option<CometricDerivatives> {
        Some(CometricDerivatives::zeros(self.dim))
    }

    fn analytic_frame(&self, _q: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim))
    }

    /// Straight lines: `q(t) = q + t p`, `p` constant.
    fn exact_flow(&self, state: &PhaseState, t: f64) -> Option<PhaseState> {
        Some(PhaseState {
            q: &state.q + &state.p * t,
            p: state.p.clone(),
        })
    }
}
