pub mod bench;
pub mod deadline;
pub mod display;
pub mod error;
pub mod ilp;
pub mod oracle;
pub mod parser;
pub mod rewrite;
pub mod rules;
pub mod sat;
pub mod scalar;
pub mod size;
pub mod term;

pub use deadline::Deadline;
pub use error::{ModelError, ParseError, Timeout};
pub use parser::{parse, parse_formula};
pub use rewrite::{sat_card, AnswerFormula, GoalState, SolveOptions, SolveResult};
pub use scalar::ExactField;
pub use term::{Constraint, Formula, LinForm, Sort, Substitution, Term, Var};

/// Default exact scalar.
pub type Rational = num_rational::BigRational;
pub type LinProblem = ilp::LinProblem<Rational>;
pub type LinConstraint = ilp::LinConstraint<Rational>;
