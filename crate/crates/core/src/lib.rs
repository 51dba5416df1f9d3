//! Horizontal sub-Laplacians and piecewise-Hamiltonian random walks on
//! sub-Riemannian charts.
//!
//! * [`geometry`]: cometric and metric evaluation, bundle maps, horizontal
//!   frames and uniform sampling on the horizontal unit sphere.
//! * [`hamiltonian`]: the Hamiltonian, its canonical flow, cometric
//!   derivatives and raised Christoffel symbols.
//! * [`sublaplacian`]: the sub-Laplacian as a sphere average and as a local
//!   second-order operator.
//! * [`manifolds`]: the Heisenberg group, Euclidean space and user charts
//!   loaded from text.
//! * [`walker`]: the ε-scaled random walk.
//! * [`montecarlo`]: semigroup estimates, ε-sweeps and an SDE reference for
//!   the Heisenberg group.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod geometry;
pub mod hamiltonian;
pub mod manifolds;
pub mod montecarlo;
pub mod stats;
pub mod sublaplacian;
pub mod walker;

pub use error::{Error, Result};
pub use field::{
    builtin_field, DerivativeMode, ExprField, Lifted, PhaseField, Polynomial, ScalarField,
};
pub use geometry::{HorizontalFactor, ManifoldModel, PhaseState};
pub use hamiltonian::{ChristoffelTensor, FlowResult};
pub use manifolds::{EuclideanModel, ExprModel, HeisenbergModel};
pub use montecarlo::{
    ConvergenceTable, EstimatorReport, EstimatorSettings, OracleReport, OracleSettings,
};
pub use stats::Estimate;
pub use walker::{LegMode, WalkConfig, WalkPath};
