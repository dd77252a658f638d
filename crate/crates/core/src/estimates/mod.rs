//! Order formulas with constants suppressed: `λ_{p,q}`, the three-branch
//! width order of a single ball, the five candidate terms for an
//! intersection, and the case-analysis prediction of the active term.

mod cases;
mod interp;
mod phi;
mod theorem_a;

pub use cases::{
    predict_active_term, Breakpoint, CaseId, LemmaId, LemmaRef, Prediction, Subcase, BAND_TOL,
};
pub use interp::{
    solve_lambda_tilde, solve_mu_tilde, solve_phi5_lambda, InterpolationKind,
    InterpolationSolution,
};
pub use phi::{intersection_width_estimate, phi_all, phi_j, WidthQuery, TIE_TOL};
pub use theorem_a::{
    identity_1234_values, lambda_pq, theorem_a_estimate, Branch, Display, OrderEstimate,
    Thresholds,
};

pub(crate) use cases::predict_frame;
pub(crate) use phi::{argmin_log, Frame};
pub(crate) use theorem_a::{check_target, Geometry};

/// `log Φ_j` for `j = 1..5` (`+∞` when absent) evaluated at a real `n`.
pub fn log_phis_at(query: &WidthQuery, n: f64) -> crate::Result<[f64; 5]> {
    query.validate()?;
    query.require_two_balls()?;
    let mut f = Frame::from_query(query);
    f.g.n = n;
    Ok(f.log_phis())
}
