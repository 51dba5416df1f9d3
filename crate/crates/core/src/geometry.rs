//! Chart-level linear algebra for a sub-Riemannian structure.
//!
//! A chart is described by two matrix-valued evaluators: the cometric `B(q)`
//! (entries `β^{ij}`, positive semi-definite of rank `m`) and a compatible
//! Riemannian metric `G(q)` (entries `g_{ij}`, positive definite). The bundle
//! map `β: T*M → TM` is `p ↦ B p`, and `g: TM → T*M` is `v ↦ G v`.
//! Compatibility means `B G` acts as the identity on the horizontal space
//! `range(B)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative eigenvalue threshold used to decide the numerical rank of `B(q)`.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Tolerance for algebraic identities on analytic models.
pub const ANALYTIC_TOL: f64 = 1e-9;

/// Tolerance for algebraic identities that go through finite differences.
pub const FD_TOL: f64 = 1e-6;

/// Dense `d×d×d` array holding `∂β^{ij}/∂x^l` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CometricDerivatives {
    dim: usize,
    data: Vec<f64>,
}

impl CometricDerivatives {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `∂β^{ij}/∂x^l`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, l: usize, value: f64) {
        self.data[(i * self.dim + j) * self.dim + l] = value;
    }

    /// The matrix `∂B/∂x^l`.
    pub fn slice(&self, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j, l))
    }

    /// Replaces each `(i,j)` pair with the average of `(i,j)` and `(j,i)`.
    pub fn symmetrize(&mut self) {
        for l in 0..self.dim {
            for i in 0..self.dim {
                for j in (i + 1)..self.dim {
                    let avg = 0.5 * (self.get(i, j, l) + self.get(j, i, l));
                    self.set(i, j, l, avg);
                    self.set(j, i, l, avg);
                }
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// A chart-level description of a sub-Riemannian manifold together with a
/// compatible Riemannian metric.
///
/// Only `cometric` and `metric` are required. Models may additionally supply
/// analytic cometric derivatives, an orthonormal horizontal frame, or a
/// closed-form Hamiltonian flow; callers fall back to finite differences,
/// eigendecomposition and Runge-Kutta integration respectively.
pub trait ManifoldModel: Send + Sync {
    fn name(&self) -> &str;

    /// Chart dimension `d`.
    fn dim(&self) -> usize;

    /// Horizontal rank `m`.
    fn rank(&self) -> usize;

    /// Raw cometric evaluator `q ↦ B(q)`.
    fn cometric(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// Raw metric evaluator `q ↦ G(q)`.
    fn metric(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// Analytic `∂β^{ij}/∂x^l`, if the model knows it.
    fn analytic_cometric_derivatives(&self, _q: &DVector<f64>) -> Option<CometricDerivatives> {
        None
    }

    /// A `d×m` matrix whose columns form an orthonormal frame of the
    /// horizontal space at `q`, if known in closed form.
    fn analytic_frame(&self, _q: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Closed-form Hamiltonian flow `Φ_t(state)`, if known.
    fn exact_flow(&self, _state: &PhaseState, _t: f64) -> Option<PhaseState> {
        None
    }
}

/// A point of the cotangent bundle in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhaseState {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Self {
        Self { q, p }
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Self {
        Self {
            q: DVector::from_column_slice(q),
            p: DVector::from_column_slice(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|x| x.is_finite())
    }

    /// Sup-norm distance over both position and momentum.
    pub fn sup_distance(&self, other: &PhaseState) -> f64 {
        let dq = (&self.q - &other.q).amax();
        let dp = (&self.p - &other.p).amax();
        dq.max(dp)
    }

    pub(crate) fn check(&self, model: &dyn ManifoldModel) -> Result<()> {
        check_dim(model, &self.q)?;
        check_dim(model, &self.p)?;
        if !self.is_finite() {
            return Err(Error::NonFinite {
                what: "phase state",
                point: self.q.iter().copied().collect(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_dim(model: &dyn ManifoldModel, v: &DVector<f64>) -> Result<()> {
    if v.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: v.len(),
        });
    }
    Ok(())
}

fn check_finite_matrix(
    what: &'static str,
    q: &DVector<f64>,
    m: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(m)
    } else {
        Err(Error::NonFinite {
            what,
            point: q.iter().copied().collect(),
        })
    }
}

/// `B(q)`, checked for dimension and finiteness.
pub fn cometric_eval(model: &dyn ManifoldModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dim(model, q)?;
    check_finite_matrix("cometric", q, model.cometric(q))
}

/// `G(q)`, checked for dimension and finiteness.
pub fn metric_eval(model: &dyn ManifoldModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dim(model, q)?;
    check_finite_matrix("metric", q, model.metric(q))
}

/// The bundle map `β_q(p) = B(q) p`.
pub fn beta_apply(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim(model, p)?;
    Ok(cometric_eval(model, q)? * p)
}

/// The bundle map `g_q(v) = G(q) v`.
pub fn g_apply(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim(model, v)?;
    Ok(metric_eval(model, q)? * v)
}

/// `vᵀ G(q) w`. No horizontality check; see [`horizontal_inner_diagnostic`].
pub fn horizontal_inner(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    check_dim(model, v)?;
    check_dim(model, w)?;
    let g = metric_eval(model, q)?;
    Ok(v.dot(&(g * w)))
}

/// Inner product plus a flag telling whether both inputs are horizontal,
/// i.e. fixed by `B G` within [`ANALYTIC_TOL`].
pub fn horizontal_inner_diagnostic(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<(f64, bool)> {
    let value = horizontal_inner(model, q, v, w)?;
    let bg = cometric_eval(model, q)? * metric_eval(model, q)?;
    let is_horizontal = |x: &DVector<f64>| {
        (&bg * x - x).norm() <= ANALYTIC_TOL * (1.0 + x.norm()) * (1.0 + bg.norm())
    };
    Ok((value, is_horizontal(v) && is_horizontal(w)))
}

/// `C` with `C Cᵀ = B(q)`; its columns are an orthonormal frame of the
/// horizontal space for the sub-Riemannian inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalFactor {
    pub c: DMatrix<f64>,
}

impl HorizontalFactor {
    pub fn rank(&self) -> usize {
        self.c.ncols()
    }

    /// Pushes a uniform point of the Euclidean unit sphere `S^{m-1}` forward
    /// through the frame.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let u = unit_sphere_sample(self.rank(), rng);
        &self.c * u
    }
}

/// Uniform sample on the unit sphere of `R^m` by normalizing a standard
/// Gaussian vector.
pub fn unit_sphere_sample<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = z.norm();
        if n > 0.0 {
            return z / n;
        }
    }
}

/// Eigen-factor of `B(q)` keeping the `m` positive eigenpairs,
/// `C = U_m Λ_m^{1/2}`, columns ordered by decreasing eigenvalue.
pub fn horizontal_factor(model: &dyn ManifoldModel, q: &DVector<f64>) -> Result<HorizontalFactor> {
    let b = cometric_eval(model, q)?;
    factor_cometric(&b, model.rank(), q)
}

pub(crate) fn factor_cometric(
    b: &DMatrix<f64>,
    rank: usize,
    q: &DVector<f64>,
) -> Result<HorizontalFactor> {
    let d = b.nrows();
    let sym = (b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let largest = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let threshold = RANK_THRESHOLD * largest;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let positive = order
        .iter()
        .filter(|&&k| eig.eigenvalues[k] > threshold)
        .count();
    let negative = order
        .iter()
        .filter(|&&k| eig.eigenvalues[k] < -threshold)
        .count();
    if positive != rank || negative > 0 || largest == 0.0 {
        return Err(Error::DegenerateRank {
            point: q.iter().copied().collect(),
            expected: rank,
            found: positive,
            eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        });
    }
    let c = DMatrix::from_fn(d, rank, |i, k| {
        let idx = order[k];
        eig.eigenvectors[(i, idx)] * eig.eigenvalues[idx].sqrt()
    });
    Ok(HorizontalFactor { c })
}

/// Frame used by samplers: the model's analytic frame when it has one,
/// otherwise the eigen-factor. Both give the same law on the unit sphere.
pub(crate) fn sampling_frame(model: &dyn ManifoldModel, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    match model.analytic_frame(q) {
        Some(c) => Ok(c),
        None => horizontal_factor(model, q).map(|f| f.c),
    }
}

/// A uniform sample from the unit sphere of the horizontal space at `q`.
pub fn sample_horizontal_sphere<R: Rng + ?Sized>(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(horizontal_factor(model, q)?.sample(rng))
}

/// Outcome of [`validate_compatibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub point: Vec<f64>,
    /// `max_c ‖B G c − c‖` over the frame columns.
    pub residual: f64,
    pub tolerance: f64,
    pub cometric_eigenvalues: Vec<f64>,
    pub metric_eigenvalues: Vec<f64>,
    pub cometric_asymmetry: f64,
    pub metric_asymmetry: f64,
    pub rank_found: usize,
    pub rank_expected: usize,
    pub failures: Vec<String>,
}

impl CompatibilityReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Checks symmetry, definiteness, rank and `β∘g|_H = Id_H` at one point.
/// Never fails; problems are collected in the report.
pub fn validate_compatibility(model: &dyn ManifoldModel, q: &DVector<f64>) -> CompatibilityReport {
    let mut report = CompatibilityReport {
        point: q.iter().copied().collect(),
        residual: f64::NAN,
        tolerance: ANALYTIC_TOL,
        cometric_eigenvalues: Vec::new(),
        metric_eigenvalues: Vec::new(),
        cometric_asymmetry: f64::NAN,
        metric_asymmetry: f64::NAN,
        rank_found: 0,
        rank_expected: model.rank(),
        failures: Vec::new(),
    };
    let (b, g) = match (cometric_eval(model, q), metric_eval(model, q)) {
        (Ok(b), Ok(g)) => (b, g),
        (Err(e), _) | (_, Err(e)) => {
            report.failures.push(e.to_string());
            return report;
        }
    };
    let scale = 1.0_f64.max(b.norm() * g.norm());
    report.tolerance = ANALYTIC_TOL * scale;
    report.cometric_asymmetry = (&b - b.transpose()).amax();
    report.metric_asymmetry = (&g - g.transpose()).amax();
    if report.cometric_asymmetry > report.tolerance {
        report.failures.push(format!(
            "cometric not symmetric ({:e})",
            report.cometric_asymmetry
        ));
    }
    if report.metric_asymmetry > report.tolerance {
        report.failures.push(format!(
            "metric not symmetric ({:e})",
            report.metric_asymmetry
        ));
    }
    report.cometric_eigenvalues = sorted_eigenvalues(&b);
    report.metric_eigenvalues = sorted_eigenvalues(&g);
    let largest = report
        .cometric_eigenvalues
        .iter()
        .fold(0.0_f64, |a, x| a.max(x.abs()));
    report.rank_found = report
        .cometric_eigenvalues
        .iter()
        .filter(|&&x| x > RANK_THRESHOLD * largest)
        .count();
    if report.metric_eigenvalues.iter().any(|&x| x <= 0.0) {
        report
            .failures
            .push("metric is not positive definite".into());
    }
    match factor_cometric(&b, model.rank(), q) {
        Ok(f) => {
            let bg = &b * &g;
            report.residual =
                f.c.column_iter()
                    .map(|c| (&bg * c - c).norm())
                    .fold(0.0, f64::max);
            if report.residual > report.tolerance {
                report.failures.push(format!(
                    "B·G is not the identity on the horizontal space (residual {:e} > {:e})",
                    report.residual, report.tolerance
                ));
            }
        }
        Err(e) => report.failures.push(e.to_string()),
    }
    report
}
