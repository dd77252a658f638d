//! Numeric upper bounds on widths of finite point sets, for cross-checks on
//! small shapes.

mod dist;
mod sampling;
mod sandwich;
mod subspace;
mod width;

pub use dist::{dist_to_subspace, DIST_MAX_ITER};
pub use sampling::ball_boundary_sample;
pub use sandwich::{sandwich_check, SandwichReport, SANDWICH_MAX_VERTICES, SANDWICH_SAMPLES, SANDWICH_TOL};
pub use subspace::{Subspace, ORTHO_TOL};
pub use width::{estimate_width, width_profile, Budget, PointSource, WidthResult, WidthRun};
