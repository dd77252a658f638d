//! Kolmogorov widths of mixed-norm balls and of intersections of two such
//! balls: order formulas with constants suppressed, extremal-set lower-bound
//! witnesses, and a desk-scale numeric width estimator for cross-checks.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod extremal;
pub mod mixed_norm;
pub mod numeric;
pub mod suites;

pub use error::{Error, Result};
pub use estimates::{
    identity_1234_values, intersection_width_estimate, lambda_pq, phi_all, phi_j,
    predict_active_term, solve_lambda_tilde, solve_mu_tilde, solve_phi5_lambda,
    theorem_a_estimate, OrderEstimate, WidthQuery,
};
pub use extremal::{
    apply_gamma, averaging_bound, build_witness, e_matrix, orbit_vertices,
    proposition1_lower_bound, solve_alpha, verify_witness, SignedPermutation, VertexFamily,
    Witness,
};
pub use mixed_norm::{
    ball_membership, interpolation_inequality_gap, mixed_norm, BallSpec, Exponent,
    ExponentPair, MixedMatrix, Shape,
};
pub use numeric::{
    ball_boundary_sample, dist_to_subspace, estimate_width, sandwich_check, Budget, Subspace,
    WidthRun,
};
