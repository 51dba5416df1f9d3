//! Test functions on the chart and on its cotangent bundle.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::geometry::PhaseState;
use crate::manifolds::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// A smooth function on the chart with first and second derivatives.
pub trait ScalarField: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn value(&self, q: &DVector<f64>) -> f64;
    fn gradient(&self, q: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, q: &DVector<f64>) -> DMatrix<f64>;
    fn mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
}

/// A function on phase space `(q, p)`.
pub trait PhaseField: Send + Sync {
    fn value(&self, state: &PhaseState) -> f64;
}

impl<F> PhaseField for F
where
    F: Fn(&PhaseState) -> f64 + Send + Sync,
{
    fn value(&self, state: &PhaseState) -> f64 {
        self(state)
    }
}

/// `f̃(q, p) = f(q)`.
pub struct Lifted<'a>(pub &'a dyn ScalarField);

impl PhaseField for Lifted<'_> {
    fn value(&self, state: &PhaseState) -> f64 {
        self.0.value(&state.q)
    }
}

/// One term `coef · Π x_i^{powers_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    fn value(&self, q: &DVector<f64>) -> f64 {
        self.powers
            .iter()
            .zip(q.iter())
            .fold(self.coef, |acc, (&k, &x)| acc * x.powi(k as i32))
    }

    /// `∂/∂x_i`, or `None` when it vanishes.
    fn derivative(&self, i: usize) -> Option<Monomial> {
        let k = self.powers[i];
        if k == 0 || self.coef == 0.0 {
            return None;
        }
        let mut powers = self.powers.clone();
        powers[i] -= 1;
        Some(Monomial {
            coef: self.coef * k as f64,
            powers,
        })
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// Real polynomial in `dim` variables with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
    label: Option<String>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            label: None,
        }
    }

    pub fn monomial(dim: usize, coef: f64, powers: &[u32]) -> Self {
        assert_eq!(powers.len(), dim, "monomial powers must match dimension");
        Self {
            dim,
            terms: vec![Monomial {
                coef,
                powers: powers.to_vec(),
            }],
            label: None,
        }
    }

    /// The coordinate function `x_i` (0-based `i`).
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut powers = vec![0; dim];
        powers[i] = 1;
        Self::monomial(dim, 1.0, &powers)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn plus(mut self, other: &Polynomial) -> Self {
        assert_eq!(self.dim, other.dim);
        self.terms.extend(other.terms.iter().cloned());
        self.label = None;
        self
    }

    pub fn scale(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.coef *= c;
        }
        self.label = None;
        self
    }

    /// Product with the monomial `coef · x_i` (0-based).
    pub fn times_coordinate(&self, i: usize, coef: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut powers = t.powers.clone();
                powers[i] += 1;
                Monomial {
                    coef: t.coef * coef,
                    powers,
                }
            })
            .collect();
        Self {
            dim: self.dim,
            terms,
            label: None,
        }
    }

    /// Symbolic partial derivative `∂/∂x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter_map(|t| t.derivative(i)).collect(),
            label: None,
        }
    }

    /// A random polynomial with up to `n_terms` monomials of total degree at
    /// most `max_degree` and coefficients in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(
        dim: usize,
        max_degree: u32,
        n_terms: usize,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zero(dim);
        for _ in 0..n_terms {
            let degree = rng.random_range(0..=max_degree);
            let mut powers = vec![0u32; dim];
            for _ in 0..degree {
                powers[rng.random_range(0..dim)] += 1;
            }
            p.terms.push(Monomial {
                coef: rng.random_range(-1.0..1.0),
                powers,
            });
        }
        p
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coef)?;
            for (i, &k) in t.powers.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, k)?,
                }
            }
        }
        Ok(())
    }
}

impl ScalarField for Polynomial {
    fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.to_string())
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, q: &DVector<f64>) -> f64 {
        self.terms.iter().map(|t| t.value(q)).sum()
    }

    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| {
            self.terms
                .iter()
                .filter_map(|t| t.derivative(i))
                .map(|t| t.value(q))
                .sum()
        })
    }

    fn hessian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let v: f64 = self
                    .terms
                    .iter()
                    .filter_map(|t| t.derivative(i))
                    .filter_map(|t| t.derivative(j))
                    .map(|t| t.value(q))
                    .sum();
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }
}

/// Wraps any field and replaces its derivatives by central differences of
/// its values.
pub struct FiniteDifferenceField<F> {
    inner: F,
}

impl<F: ScalarField> FiniteDifferenceField<F> {
    pub fn new(inner: F) -> Self {
        Self { inner }
    }

    fn step(q: &DVector<f64>, base: f64) -> f64 {
        base * (1.0 + q.amax())
    }
}

impl<F: ScalarField> ScalarField for FiniteDifferenceField<F> {
    fn name(&self) -> String {
        format!("fd({})", self.inner.name())
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, q: &DVector<f64>) -> f64 {
        self.inner.value(q)
    }

    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        let h = Self::step(q, 1e-5);
        DVector::from_fn(q.len(), |i, _| {
            let mut a = q.clone();
            let mut b = q.clone();
            a[i] += h;
            b[i] -= h;
            (self.inner.value(&a) - self.inner.value(&b)) / (2.0 * h)
        })
    }

    fn hessian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let h = Self::step(q, 1e-4);
        let d = q.len();
        let f = |shift: &[(usize, f64)]| {
            let mut x = q.clone();
            for &(i, s) in shift {
                x[i] += s;
            }
            self.inner.value(&x)
        };
        let f0 = f(&[]);
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = (f(&[(i, h)]) - 2.0 * f0 + f(&[(i, -h)])) / (h * h);
            for j in (i + 1)..d {
                let v = (f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)])
                    + f(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference
    }
}

/// A field given by an expression in `x1..xd`, differentiated symbolically.
#[derive(Debug, Clone)]
pub struct ExprField {
    dim: usize,
    source: String,
    expr: Expr,
    gradient: Vec<Expr>,
    hessian: Vec<Expr>,
}

impl ExprField {
    pub fn new(dim: usize, expr: Expr) -> crate::Result<Self> {
        if let Some(k) = expr.max_variable() {
            if k > dim {
                return Err(crate::Error::UnknownIdentifier(format!("x{k}")));
            }
        }
        let gradient: Vec<Expr> = (1..=dim).map(|i| expr.derivative(i)).collect();
        let hessian = (0..dim * dim)
            .map(|k| gradient[k / dim].derivative(k % dim + 1))
            .collect();
        Ok(Self {
            dim,
            source: expr.to_string(),
            expr,
            gradient,
            hessian,
        })
    }

    pub fn parse(dim: usize, text: &str) -> crate::Result<Self> {
        Self::new(dim, crate::manifolds::expr::parse_expression(text)?)
    }
}

impl ScalarField for ExprField {
    fn name(&self) -> String {
        self.source.clone()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, q: &DVector<f64>) -> f64 {
        self.expr.eval(q.as_slice())
    }

    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| self.gradient[i].eval(q.as_slice()))
    }

    fn hessian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let h = DMatrix::from_fn(self.dim, self.dim, |i, j| {
            self.hessian[i * self.dim + j].eval(q.as_slice())
        });
        (&h + h.transpose()) * 0.5
    }
}

/// Names accepted by [`builtin_field`].
pub const BUILTIN_FIELDS: &[&str] = &[
    "x", "y", "z", "xsq", "ysq", "zsq", "xy", "normsq", "quartic",
];

/// Built-in polynomial test fields. `x`, `y`, `z` are the first three
/// coordinates; `xN` (1-based) selects any coordinate.
pub fn builtin_field(name: &str, dim: usize) -> Option<Polynomial> {
    let coord = |i: usize| (i < dim).then(|| Polynomial::coordinate(dim, i));
    let square = |i: usize| {
        (i < dim).then(|| {
            let mut p = vec![0; dim];
            p[i] = 2;
            Polynomial::monomial(dim, 1.0, &p)
        })
    };
    let field = match name {
        "x" => coord(0),
        "y" => coord(1),
        "z" => coord(2),
        "xsq" => square(0),
        "ysq" => square(1),
        "zsq" => square(2),
        "xy" => (dim >= 2).then(|| coord(0).unwrap().times_coordinate(1, 1.0)),
        "normsq" => Some((0..dim).fold(Polynomial::zero(dim), |acc, i| {
            acc.plus(&square(i).unwrap())
        })),
        "quartic" => (dim >= 2).then(|| {
            // x^4 - 2 x^2 y z + 3 y^3 / 2 + x y
            let mut a = vec![0; dim];
            a[0] = 4;
            let mut p = Polynomial::monomial(dim, 1.0, &a);
            if dim >= 3 {
                let mut b = vec![0; dim];
                b[0] = 2;
                b[1] = 1;
                b[2] = 1;
                p = p.plus(&Polynomial::monomial(dim, -2.0, &b));
            }
            let mut c = vec![0; dim];
            c[1] = 3;
            p = p.plus(&Polynomial::monomial(dim, 1.5, &c));
            p.plus(&coord(0).unwrap().times_coordinate(1, 1.0))
        }),
        other => other
            .strip_prefix('x')
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .and_then(|k| coord(k - 1)),
    }?;
    Some(field.with_label(name))
}
