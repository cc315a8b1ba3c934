//! A workbench for first-order set theory with primitive pairs.

pub mod abbrev;
pub mod catalog;
pub mod checker;
pub mod hf;
pub mod hierarchy;
pub mod logic;
pub mod semantics;
pub mod syntax;

pub use abbrev::Dialect;
pub use catalog::{AxiomId, AxiomName};
pub use checker::{
    accidental_suite, check_all, check_axiom, cross_validate, CheckError, CheckPlan, CheckReport,
    Mode, Model, Status,
};
pub use hf::HfSet;
pub use hierarchy::{build_w, WUniverse};
pub use logic::{Formula, Pred, Term, Var};
pub use semantics::{Env, Structure, TermValue};
