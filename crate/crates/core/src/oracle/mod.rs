//! Reference semantics: property graphs, a bag evaluator, a small-graph
//! enumerator and the differential checker built on them.

mod diff;
mod enumerate;
mod eval;
mod graph;
mod value;

pub use diff::{compare_on, differential_check, differential_check_mapped, DiffOutcome, OracleConfig};
pub use enumerate::{enumerate_graphs, sample_graph, Bounds, GraphStream};
pub(crate) use eval::aggregate;
pub use eval::{evaluate, EvalError, ResultBag, Row};
pub use graph::{GraphError, Node, PropertyGraph, Rel};
pub use value::Value;
