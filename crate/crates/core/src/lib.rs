//! Equivalence prover for a fragment of Cypher.
//!
//! Queries are parsed ([`frontend`]), normalized ([`normalize`]), compiled to
//! U-semiring G-expressions ([`gexpr`]) and compared by an SMT solver
//! ([`decide`]). The [`oracle`] evaluates queries on concrete property graphs
//! and enumerates small graphs to cross-check every verdict.

pub mod decide;
pub mod frontend;
pub mod gen;
pub mod gexpr;
pub mod mutate;
pub mod normalize;
pub mod oracle;
pub mod pairfile;
