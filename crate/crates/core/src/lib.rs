//! Alternating projections through constraint dissolving maps.
//!
//! Finds points of `X ∩ {x : c(x) = 0}` where `X` is a projective set: a closed set with a cheap
//! projection and a PSD operator `Q(x)` whose null space is the range of the normal cone at `x`.
//! Each step moves along `-Q(x) J (J^T Q J + tau I)^{-1} c` and projects back onto `X`, which gives
//! local quadratic convergence; a projected-gradient line search globalizes the method.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a < b)` is how NaN gets rejected

pub mod bregman;
pub mod certify;
pub mod config;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod sets;
pub mod solver;
pub mod system;
pub mod trace;

pub use config::{SolverConfig, TauRule};
pub use error::{ApError, Result};
pub use sets::{CatalogSet, Projection, ProjectiveMap, ProjectiveSet, SetKind};
pub use system::{assemble_gram, AffineProjector, ConstraintSystem, GramSystem, Point, SparseVec};
pub use trace::{IterRecord, IterateTrace, SolveOutput, Status, StepType};
