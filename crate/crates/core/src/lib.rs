//! Obvious strategy-proofness toolkit.
//!
//! Given a finite choice rule as payoff and choice tables, this crate
//! decides whether an obviously strategy-proof extensive-form mechanism
//! exists, constructs a verified mechanism when one does, and produces a
//! machine-checkable non-existence certificate when one does not.
//!
//! The decision procedure walks the rule's obvious directed acyclic graph
//! greedily, splitting each vertex along the finest obvious question any
//! agent can still be asked; the graph is nicely connected exactly when
//! that walk reaches every singleton. An exponential-time oracle
//! materializes the graph at desk scale for cross-validation.

pub mod bench;
pub mod certify;
pub mod decide;
pub mod error;
pub mod generators;
pub mod instance;
pub mod mechanism;
pub mod odag;
pub mod oracle;
pub mod sp;
pub mod sweep;
mod union_find;
pub mod vertex;

pub use crate::certify::{extract, verify as verify_certificate, NonOspCertificate, WitnessTuple};
pub use crate::decide::{
    decide, decide_only, decide_parallel, decide_with, DecideOptions, DecisionResult,
    SelectionPolicy,
};
pub use crate::error::{Error, Result};
pub use crate::generators::{gen_dictatorship, gen_random, gen_sat, BoolExpr, BooleanFormula};
pub use crate::instance::{
    index_profile, profile_index, ChoiceInstance, InstanceStats, TypeProfile,
};
pub use crate::mechanism::{
    verify_osp, verify_wellformed, MechanismNode, MechanismTree, OspReport, OspViolation,
    WellformednessViolation,
};
pub use crate::odag::{answer_partition, divergence_graph, AnswerPartition, DivergenceGraph};
pub use crate::oracle::{ExplicitOdag, Oracle, OracleMode};
pub use crate::sp::{check_sp, SpReport, SpViolation};
pub use crate::vertex::ProductVertex;
