//! Text model files.
//!
//! ```text
//! # comments and blank lines are ignored
//! name heisenberg-file
//! dim 3
//! rank 2
//! beta 1 1 = 1
//! beta 1 3 = -x2/2
//! g 3 3 = 1
//! sample 0 0 0
//! sample 1.5 -0.5 2
//! ```
//!
//! Indices are 1-based and must satisfy `i <= j`; the lower triangle is the
//! mirror image and omitted entries are 0. At least one `sample` line is
//! required; the loaded model is validated at every sample point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{validate_compatibility, CometricDerivatives, ManifoldModel};
use crate::manifolds::expr::{parse_expression, Expr};

/// Parsed contents of a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub dim: usize,
    pub rank: usize,
    /// `(i, j, expr)` with 0-based `i <= j`.
    pub beta: Vec<(usize, usize, Expr)>,
    pub metric: Vec<(usize, usize, Expr)>,
    pub samples: Vec<Vec<f64>>,
}

fn spec_err(line: usize, message: impl Into<String>) -> Error {
    Error::Spec {
        line,
        message: message.into(),
    }
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut dim = None;
        let mut rank = None;
        let mut beta: Vec<(usize, usize, Expr, usize)> = Vec::new();
        let mut metric: Vec<(usize, usize, Expr, usize)> = Vec::new();
        let mut samples: Vec<(Vec<f64>, usize)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match keyword {
                "name" => {
                    if rest.is_empty() {
                        return Err(spec_err(line_no, "`name` needs a value"));
                    }
                    name = Some(rest.to_string());
                }
                "dim" | "rank" => {
                    let v: usize = rest.parse().map_err(|_| {
                        spec_err(line_no, format!("`{keyword}` needs a positive integer"))
                    })?;
                    if v == 0 {
                        return Err(spec_err(line_no, format!("`{keyword}` must be positive")));
                    }
                    if keyword == "dim" {
                        dim = Some(v);
                    } else {
                        rank = Some(v);
                    }
                }
                "beta" | "g" => {
                    let (lhs, rhs) = rest
                        .split_once('=')
                        .ok_or_else(|| spec_err(line_no, "expected `<i> <j> = <expr>`"))?;
                    let idx: Vec<usize> = lhs
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| spec_err(line_no, "indices must be positive integers"))?;
                    if idx.len() != 2 {
                        return Err(spec_err(line_no, "expected exactly two indices"));
                    }
                    let expr =
                        parse_expression(rhs).map_err(|e| spec_err(line_no, e.to_string()))?;
                    let entry = (idx[0], idx[1], expr, line_no);
                    if keyword == "beta" {
                        beta.push(entry);
                    } else {
                        metric.push(entry);
                    }
                }
                "sample" => {
                    let pt: Vec<f64> = rest
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| spec_err(line_no, "sample coordinates must be numbers"))?;
                    samples.push((pt, line_no));
                }
                other => return Err(spec_err(line_no, format!("unknown keyword `{other}`"))),
            }
        }

        let dim = dim.ok_or_else(|| spec_err(0, "missing `dim`"))?;
        let rank = rank.ok_or_else(|| spec_err(0, "missing `rank`"))?;
        if rank > dim {
            return Err(spec_err(0, format!("rank {rank} exceeds dim {dim}")));
        }
        if samples.is_empty() {
            return Err(spec_err(0, "at least one `sample` line is required"));
        }
        for (pt, line) in &samples {
            if pt.len() != dim {
                return Err(spec_err(
                    *line,
                    format!("sample has {} coordinates, expected {dim}", pt.len()),
                ));
            }
        }
        let check_entries =
            |entries: Vec<(usize, usize, Expr, usize)>| -> Result<Vec<(usize, usize, Expr)>> {
                let mut seen = std::collections::HashSet::new();
                entries
                    .into_iter()
                    .map(|(i, j, e, line)| {
                        if i == 0 || j == 0 || i > dim || j > dim {
                            return Err(spec_err(
                                line,
                                format!("index ({i}, {j}) out of range 1..={dim}"),
                            ));
                        }
                        if i > j {
                            return Err(spec_err(
                                line,
                                format!("entry ({i}, {j}) is below the diagonal"),
                            ));
                        }
                        if !seen.insert((i, j)) {
                            return Err(spec_err(line, format!("duplicate entry ({i}, {j})")));
                        }
                        if let Some(k) = e.max_variable() {
                            if k > dim {
                                return Err(spec_err(
                                    line,
                                    format!("variable x{k} exceeds dim {dim}"),
                                ));
                            }
                        }
                        Ok((i - 1, j - 1, e))
                    })
                    .collect()
            };
        Ok(Self {
            name: name.unwrap_or_else(|| "user-model".into()),
            dim,
            rank,
            beta: check_entries(beta)?,
            metric: check_entries(metric)?,
            samples: samples.into_iter().map(|(p, _)| p).collect(),
        })
    }
}

/// A model whose entries are expressions; cometric derivatives are symbolic.
#[derive(Debug, Clone)]
pub struct ExprModel {
    name: String,
    dim: usize,
    rank: usize,
    beta: Vec<(usize, usize, Expr)>,
    metric: Vec<(usize, usize, Expr)>,
    /// `(i, j, l, ∂β^{ij}/∂x^l)`, nonzero entries only.
    beta_derivatives: Vec<(usize, usize, usize, Expr)>,
    samples: Vec<Vec<f64>>,
}

impl ExprModel {
    pub fn from_spec(spec: ModelSpec) -> Self {
        let mut beta_derivatives = Vec::new();
        for (i, j, e) in &spec.beta {
            for l in 0..spec.dim {
                let d = e.derivative(l + 1);
                if d != Expr::Num(0.0) {
                    beta_derivatives.push((*i, *j, l, d));
                }
            }
        }
        Self {
            name: spec.name,
            dim: spec.dim,
            rank: spec.rank,
            beta: spec.beta,
            metric: spec.metric,
            beta_derivatives,
            samples: spec.samples,
        }
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    fn symmetric(&self, entries: &[(usize, usize, Expr)], q: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, e) in entries {
            let v = e.eval(q.as_slice());
            m[(*i, *j)] = v;
            m[(*j, *i)] = v;
        }
        m
    }
}

impl ManifoldModel for ExprModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn cometric(&self, q: &DVector<f64>) -> DMatrix<f64> {
        self.symmetric(&self.beta, q)
    }

    fn metric(&self, q: &DVector<f64>) -> DMatrix<f64> {
        self.symmetric(&self.metric, q)
    }

    fn analytic_cometric_derivatives(&self, q: &DVector<f64>) -> Option<CometricDerivatives> {
        let mut d = CometricDerivatives::zeros(self.dim);
        for (i, j, l, e) in &self.beta_derivatives {
            let v = e.eval(q.as_slice());
            d.set(*i, *j, *l, v);
            d.set(*j, *i, *l, v);
        }
        Some(d)
    }
}

/// Parses a model file, builds the model and validates it at every declared
/// sample point.
pub fn load_model(text: &str) -> Result<ExprModel> {
    let model = ExprModel::from_spec(ModelSpec::parse(text)?);
    for pt in model.samples() {
        let report = validate_compatibility(&model, &DVector::from_column_slice(pt));
        if !report.pass() {
            return Err(Error::Validation {
                point: pt.clone(),
                message: report.failures.join("; "),
            });
        }
    }
    Ok(model)
}

/// Model-file text describing the Heisenberg group with metric parameter `lambda`.
pub fn heisenberg_spec_text(lambda: f64) -> String {
    format!(
        "# Heisenberg group, horizontal frame X = d/dx1 - x2/2 d/dx3, Y = d/dx2 + x1/2 d/dx3\n\
         name heisenberg-file\n\
         dim 3\n\
         rank 2\n\
         beta 1 1 = 1\n\
         beta 2 2 = 1\n\
         beta 1 3 = -x2/2\n\
         beta 2 3 = x1/2\n\
         beta 3 3 = (x1^2 + x2^2)/4\n\
         g 1 1 = 1 + {l}*x2^2/4\n\
         g 1 2 = -{l}*x1*x2/4\n\
         g 1 3 = {l}*x2/2\n\
         g 2 2 = 1 + {l}*x1^2/4\n\
         g 2 3 = -{l}*x1/2\n\
         g 3 3 = {l}\n\
         sample 0 0 0\n\
         sample 1 2 5\n\
         sample -1.5 0.5 -2\n",
        l = lambda
    )
}
