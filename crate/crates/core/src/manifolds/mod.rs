//! Concrete models: the Heisenberg group, Euclidean space, and user charts
//! loaded from text files.

mod euclidean;
pub mod expr;
mod heisenberg;
mod spec_file;

pub use euclidean::EuclideanModel;
pub use expr::{diff_expression, parse_expression, Expr, Func};
pub use heisenberg::{heisenberg_flow_exact, heisenberg_x, heisenberg_y, HeisenbergModel};
pub use spec_file::{heisenberg_spec_text, load_model, ExprModel, ModelSpec};
