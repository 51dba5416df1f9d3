//! Fully resolved run configurations. Every output embeds one, and
//! `subwalk replay` re-executes it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use subwalk_core::montecarlo::{OracleReport, Reference};
use subwalk_core::LegMode;

use crate::args::{
    BuiltinModel, Command, ConvergeArgs, FieldArgs, FlowArgs, Format, LaplacianArgs, ModelArgs,
    OracleArgs, VerifyArgs, WalkArgs,
};
use crate::error::CliError;
use crate::model::{build_model, field_dim_check};
use crate::output;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSource {
    Heisenberg {
        lambda: f64,
    },
    Euclidean {
        dim: usize,
    },
    /// A spec file, embedded verbatim so replays do not depend on the file.
    File {
        path: String,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldSource {
    Builtin { name: String },
    Expr { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceSource {
    None,
    /// Closed form on Euclidean models, an SDE oracle run on Heisenberg.
    Auto {
        oracle_paths: usize,
        oracle_dt: f64,
    },
    Given(Reference),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandConfig {
    Verify {
        model: ModelSource,
        points: usize,
        samples: usize,
    },
    Laplacian {
        model: ModelSource,
        field: FieldSource,
        points: Vec<Vec<f64>>,
        samples: usize,
    },
    Flow {
        model: ModelSource,
        point: Vec<f64>,
        momentum: Vec<f64>,
        t: f64,
        step: f64,
        compare_exact: bool,
        tolerance: f64,
    },
    Walk {
        model: ModelSource,
        point: Vec<f64>,
        epsilon: f64,
        t: f64,
        n_paths: usize,
        step: f64,
        leg_mode: LegMode,
    },
    Converge {
        model: ModelSource,
        field: FieldSource,
        point: Vec<f64>,
        eps_list: Vec<f64>,
        t: f64,
        n_paths: usize,
        step: f64,
        leg_mode: LegMode,
        reference: ReferenceSource,
    },
    Oracle {
        t: f64,
        n_paths: usize,
        dt: f64,
        cos_frequency: f64,
    },
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Verify { .. } => "verify",
            Self::Laplacian { .. } => "laplacian",
            Self::Flow { .. } => "flow",
            Self::Walk { .. } => "walk",
            Self::Converge { .. } => "converge",
            Self::Oracle { .. } => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: CommandConfig,
    pub seed: u64,
    pub format: Format,
    pub out: Option<String>,
    /// Only converge and oracle run in parallel; results never depend on it.
    pub workers: Option<usize>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(usage(format!(
            "--{name} must be a positive number, got {x}"
        )))
    }
}

fn at_least(name: &str, n: usize, min: usize) -> Result<usize, CliError> {
    if n >= min {
        Ok(n)
    } else {
        Err(usage(format!("--{name} must be at least {min}, got {n}")))
    }
}

fn model_source(args: &ModelArgs) -> Result<ModelSource, CliError> {
    if let Some(path) = &args.model_file {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        return Ok(ModelSource::File {
            path: path.display().to_string(),
            text,
        });
    }
    Ok(match args.model {
        BuiltinModel::Heisenberg => ModelSource::Heisenberg {
            lambda: positive("lambda", args.lambda)?,
        },
        BuiltinModel::Euclidean => ModelSource::Euclidean {
            dim: at_least("dim", args.dim, 1)?,
        },
    })
}

fn field_source(args: &FieldArgs) -> FieldSource {
    match &args.f_expr {
        Some(text) => FieldSource::Expr { text: text.clone() },
        None => FieldSource::Builtin {
            name: args.f.clone(),
        },
    }
}

/// Model dimension, used to fill in default points and check given ones.
fn model_dim(source: &ModelSource) -> Result<usize, CliError> {
    Ok(build_model(source, false)?.model.dim())
}

fn check_point(what: &str, point: &[f64], dim: usize) -> Result<(), CliError> {
    if point.len() == dim {
        Ok(())
    } else {
        Err(usage(format!(
            "--{what} has {} coordinates but the model has dimension {dim}",
            point.len()
        )))
    }
}

fn point_or_origin(point: Option<&crate::args::Coords>, dim: usize) -> Result<Vec<f64>, CliError> {
    match point {
        Some(c) => {
            check_point("point", &c.0, dim)?;
            Ok(c.0.clone())
        }
        None => Ok(vec![0.0; dim]),
    }
}

fn out_path(out: &Option<std::path::PathBuf>) -> Option<String> {
    out.as_ref().map(|p| p.display().to_string())
}

fn verify(a: &VerifyArgs) -> Result<RunConfig, CliError> {
    Ok(RunConfig {
        command: CommandConfig::Verify {
            model: model_source(&a.model)?,
            points: at_least("points", a.points, 1)?,
            samples: at_least("samples", a.samples, 2)?,
        },
        seed: a.seed,
        format: a.output.format.unwrap_or(Format::Csv),
        out: out_path(&a.output.out),
        workers: None,
    })
}

fn laplacian(a: &LaplacianArgs) -> Result<RunConfig, CliError> {
    let model = model_source(&a.model)?;
    let dim = model_dim(&model)?;
    let field = field_source(&a.field);
    field_dim_check(&field, dim)?;
    for p in &a.point {
        check_point("point", &p.0, dim)?;
    }
    Ok(RunConfig {
        command: CommandConfig::Laplacian {
            model,
            field,
            points: a.point.iter().map(|c| c.0.clone()).collect(),
            samples: at_least("samples", a.samples, 2)?,
        },
        seed: a.seed,
        format: a.output.format.unwrap_or(Format::Csv),
        out: out_path(&a.output.out),
        workers: None,
    })
}

fn flow(a: &FlowArgs) -> Result<RunConfig, CliError> {
    let model = model_source(&a.model)?;
    let dim = model_dim(&model)?;
    check_point("point", &a.point.0, dim)?;
    check_point("momentum", &a.momentum.0, dim)?;
    if !(a.t >= 0.0) || !a.t.is_finite() {
        return Err(usage(format!("--t must be finite and >= 0, got {}", a.t)));
    }
    Ok(RunConfig {
        command: CommandConfig::Flow {
            model,
            point: a.point.0.clone(),
            momentum: a.momentum.0.clone(),
            t: a.t,
            step: positive("step", a.step)?,
            compare_exact: a.compare_exact,
            tolerance: positive("tolerance", a.tolerance)?,
        },
        seed: a.seed,
        format: a.output.format.unwrap_or(Format::Csv),
        out: out_path(&a.output.out),
        workers: None,
    })
}

fn walk(a: &WalkArgs) -> Result<RunConfig, CliError> {
    let model = model_source(&a.model)?;
    let dim = model_dim(&model)?;
    Ok(RunConfig {
        command: CommandConfig::Walk {
            point: point_or_origin(a.point.as_ref(), dim)?,
            model,
            epsilon: positive("epsilon", a.epsilon)?,
            t: positive("t", a.t)?,
            n_paths: at_least("n-paths", a.n_paths, 1)?,
            step: positive("step", a.step)?,
            leg_mode: a.leg_mode.into(),
        },
        seed: a.seed,
        format: a.output.format.unwrap_or(Format::Csv),
        out: out_path(&a.output.out),
        workers: None,
    })
}

/// Reads the reference for `field` out of an oracle report written by `subwalk oracle`.
fn reference_from_file(path: &Path, field: &FieldSource) -> Result<Reference, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc =
        output::parse_json_output(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let report: OracleReport = serde_json::from_value(doc.result)
        .map_err(|e| usage(format!("{}: not an oracle report: {e}", path.display())))?;
    let name = match field {
        FieldSource::Builtin { name } => name.as_str(),
        FieldSource::Expr { .. } => "",
    };
    report.reference_for(name).ok_or_else(|| {
        usage(format!(
            "the oracle report has no moment for field {name:?}"
        ))
    })
}

fn converge(a: &ConvergeArgs) -> Result<RunConfig, CliError> {
    let model = model_source(&a.model)?;
    let dim = model_dim(&model)?;
    let field = field_source(&a.field);
    field_dim_check(&field, dim)?;
    let eps_list = match a.epsilon {
        Some(e) => vec![e],
        None => a.eps_list.clone(),
    };
    if eps_list.is_empty() {
        return Err(usage("--eps-list needs at least one value"));
    }
    for &e in &eps_list {
        positive("eps-list", e)?;
    }
    if eps_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(usage("--eps-list must be strictly decreasing"));
    }
    let reference = if a.no_reference {
        ReferenceSource::None
    } else if let Some(path) = &a.reference {
        ReferenceSource::Given(reference_from_file(path, &field)?)
    } else {
        ReferenceSource::Auto {
            oracle_paths: at_least("oracle-paths", a.oracle_paths, 2)?,
            oracle_dt: positive("oracle-dt", a.oracle_dt)?,
        }
    };
    Ok(RunConfig {
        command: CommandConfig::Converge {
            point: point_or_origin(a.point.as_ref(), dim)?,
            model,
            field,
            eps_list,
            t: positive("t", a.t)?,
            n_paths: at_least("n-paths", a.n_paths, 2)?,
            step: positive("step", a.step)?,
            leg_mode: a.leg_mode.into(),
            reference,
        },
        seed: a.seed,
        format: a.output.format.unwrap_or(Format::Csv),
        out: out_path(&a.output.out),
        workers: a.workers,
    })
}

fn oracle(a: &OracleArgs) -> Result<RunConfig, CliError> {
    Ok(RunConfig {
        command: CommandConfig::Oracle {
            t: positive("t", a.t)?,
            n_paths: at_least("n-paths", a.n_paths, 2)?,
            dt: positive("step", a.step)?,
            cos_frequency: a.lambda,
        },
        seed: a.seed,
        format: a.output.format.unwrap_or(Format::Json),
        out: out_path(&a.output.out),
        workers: a.workers,
    })
}

/// Resolves parsed arguments into a [`RunConfig`]. `Replay` has none.
pub fn resolve(command: &Command) -> Result<Option<RunConfig>, CliError> {
    Ok(Some(match command {
        Command::Verify(a) => verify(a)?,
        Command::Laplacian(a) => laplacian(a)?,
        Command::Flow(a) => flow(a)?,
        Command::Walk(a) => walk(a)?,
        Command::Converge(a) => converge(a)?,
        Command::Oracle(a) => oracle(a)?,
        Command::Replay(_) => return Ok(None),
    }))
}
