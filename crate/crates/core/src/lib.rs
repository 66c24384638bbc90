//! Detection of global-constraint structure in MIP instances and
//! semantics-aware bound propagation over the detected records.
//!
//! The pipeline is `mps` → [`detect`] → [`propagate`], with [`synth`] and
//! [`verify`] providing planted instances and enumeration-based checks, and
//! [`search`] / [`bench`] measuring the effect of the propagators.

pub mod bench;
pub mod detect;
pub mod ext_real;
pub mod model;
pub mod mps;
pub mod outcome;
pub mod propagate;
pub mod search;
pub mod synth;
pub mod verify;

pub use model::{DomainBox, LinearRow, MipModel, ObjectiveSense, RowId, Tolerances, VarId, VarType, Variable};
pub use outcome::{BoundChange, BoundSide, PropagationOutcome};
