//! Decentralized portfolio SAT solving.
//!
//! Several CDCL core solvers, each started with a different configuration and
//! phase seeding, search the same formula. At a fixed interval every process
//! contributes a fixed-size buffer of short learned clauses to a synchronizing
//! all-gather and imports what the others found, filtered through Bloom
//! filters so no solver sees the same clause twice.

pub mod batch;
pub mod cdcl;
pub mod dimacs;
pub mod diversify;
pub mod exchange;
pub mod generators;
pub mod metrics;
pub mod oracle;
pub mod orchestrator;
pub mod par;
pub mod solver;
pub mod transport;
pub mod types;

pub use cdcl::CdclSolver;
pub use orchestrator::{run_local, start_node, Node, NodeOutcome, ProcessConfig};
pub use solver::{CoreSolver, LearnedClauseSink, SolverError};
pub use types::{Assignment, Clause, Formula, Lit, SatResult, Status, Value};
