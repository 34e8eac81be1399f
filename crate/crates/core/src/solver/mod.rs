//! Forward solver on a characteristic lattice, lifespan measurement by
//! threshold crossing, and an independent Duhamel fixed-point oracle.

mod grid;
mod lifespan;
mod picard;

pub use grid::{
    diamond_step, first_row, first_row_linear, free_scheme_error, norms, row_norms, solve_grid, CharGrid, FullGrid,
};
pub use lifespan::{
    run_lifespan, run_lifespan_refined, LifespanStatus, RefinedLifespan, SolverOutcome, DEFAULT_BLOWUP_FACTOR,
    REFINE_TOL,
};
pub use picard::{picard_oracle, PicardOutcome};
