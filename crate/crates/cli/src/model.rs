use subwalk_core::field::BUILTIN_FIELDS;
use subwalk_core::manifolds::{load_model, ExprModel, ModelSpec};
use subwalk_core::{
    builtin_field, EuclideanModel, ExprField, HeisenbergModel, ManifoldModel, Polynomial,
    ScalarField,
};

use crate::config::{FieldSource, ModelSource};
use crate::error::CliError;

pub struct BuiltModel {
    pub model: Box<dyn ManifoldModel>,
    /// Declared sample points of a spec file.
    pub samples: Vec<Vec<f64>>,
    pub heisenberg_lambda: Option<f64>,
}

/// Builds the model. With `validate`, spec files must pass the
/// compatibility checks at their sample points.
pub fn build_model(source: &ModelSource, validate: bool) -> Result<BuiltModel, CliError> {
    Ok(match source {
        ModelSource::Heisenberg { lambda } => BuiltModel {
            model: Box::new(HeisenbergModel::new(*lambda)?),
            samples: Vec::new(),
            heisenberg_lambda: Some(*lambda),
        },
        ModelSource::Euclidean { dim } => BuiltModel {
            model: Box::new(EuclideanModel::new(*dim)?),
            samples: Vec::new(),
            heisenberg_lambda: None,
        },
        ModelSource::File { text, .. } => {
            let model = if validate {
                load_model(text)?
            } else {
                ExprModel::from_spec(ModelSpec::parse(text)?)
            };
            BuiltModel {
                samples: model.samples().to_vec(),
                model: Box::new(model),
                heisenberg_lambda: None,
            }
        }
    })
}

pub enum BuiltField {
    Polynomial(Polynomial),
    Expr(ExprField),
}

impl BuiltField {
    pub fn as_field(&self) -> &dyn ScalarField {
        match self {
            Self::Polynomial(p) => p,
            Self::Expr(e) => e,
        }
    }
}

pub fn build_field(source: &FieldSource, dim: usize) -> Result<BuiltField, CliError> {
    match source {
        FieldSource::Builtin { name } => builtin_field(name, dim)
            .map(BuiltField::Polynomial)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown field {name:?} for dimension {dim}; built-ins are {} and xN",
                    BUILTIN_FIELDS.join(", ")
                ))
            }),
        FieldSource::Expr { text } => ExprField::parse(dim, text)
            .map(BuiltField::Expr)
            .map_err(|e| CliError::Usage(format!("--f-expr: {e}"))),
    }
}

pub fn field_dim_check(source: &FieldSource, dim: usize) -> Result<(), CliError> {
    build_field(source, dim).map(|_| ())
}
