pub mod cases;
pub mod cli;
pub mod compare;
pub mod field;
pub mod graph;
pub mod matrix;
pub mod mpnn;
pub mod scalar;
pub mod synthesis;
pub mod wl;

pub use field::{ExactScalar, Rational};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type SurdMatrix = Matrix<ExactScalar>;
pub type RationalMatrix = Matrix<Rational>;
pub type F64Matrix = Matrix<f64>;

pub use graph::{LabelledGraph, Labelling, Partition};

pub type SurdGraph = LabelledGraph<ExactScalar>;
pub type F64Graph = LabelledGraph<f64>;
