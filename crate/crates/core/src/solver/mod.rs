//! Dissolving steps, the globalized solver and its baselines.

mod aphl;
mod apm;
mod diagnostics;
mod dissolve;
mod linesearch;

pub use aphl::{solve_aphl, solve_plain_ap};
pub use apm::solve_apm;
pub use diagnostics::{
    distance_bounds_check, jacobian_sigma_max, jacobian_sigma_min, nondegeneracy_report, DistanceBounds,
    NondegeneracyReport, DEGENERACY_REL,
};
pub use dissolve::{ap_step, dissolving_direction, dissolving_direction_with_map, ApStep, StepReport, FEASIBLE_GUARD};
pub use linesearch::{pg_step, PgStep};

pub(crate) use aphl::{terminal, wall_ms};
