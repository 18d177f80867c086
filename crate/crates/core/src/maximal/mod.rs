//! Maximal operators on grid models of real hyperbolic spaces.
//!
//! * `M1`: centred ball averages;
//! * `M2`: averages over balls containing the point, from the centred balls
//!   and the balls centred on a subgrid of every fourth cell;
//! * `M̃2`: `sup_{r ≥ 1} |B(z, r)|^{−1/2} ∫_{B(z,r)} f`;
//! * `M3`: slice averages over `v`-balls, the nilpotent maximal function.
//!
//! Balls are cell sets: a cell belongs to `B(c, r)` when its centre does.
//! Balls are never clipped; a ball that leaves the box is rejected, and
//! field evaluations use only the radii that fit at each cell.

mod covering;
mod grid;
mod operators;
mod weak;

pub use covering::{covering_select, CoveringReport};
pub use grid::{
    ball_cells, quarter_octave_radii, BallCells, BallSpec, FieldGrid, GridModel, Run, Stencil, StencilTable,
};
pub use operators::{
    default_u_list, m1_centered, m1_field, m2_candidates, m2_field, m2_noncentered, m2_tilde, m2_tilde_field, m3_field,
    m3_nilpotent, MaximalField, SUBGRID_STRIDE,
};
pub use weak::{
    pointwise_domination_check, random_balls, random_multi_ball_indicator, separation_family, separation_sweep,
    shells_probe, split_comparison, weak_type_row, DominationReport, SeparationConfig, ShellsConfig, SplitReport,
    WeakTypeRow,
};
