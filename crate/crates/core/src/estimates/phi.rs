use serde::{Deserialize, Serialize};

use super::interp::{solve_lambda_tilde, solve_mu_tilde, solve_phi5_lambda, InterpolationSolution};
use super::theorem_a::{
    check_ball_exponents, check_n, check_target, log_dn, theorem_a_unchecked, Branch, Display,
    Geometry, OrderEstimate,
};
use crate::error::{invalid, Result};
use crate::mixed_norm::{BallSpec, Exponent, ExponentPair, Shape};

/// Relative slack under which two Φ values count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthQuery {
    pub shape: Shape,
    pub n: u64,
    pub target: ExponentPair,
    pub balls: Vec<BallSpec>,
}

impl WidthQuery {
    pub fn new(
        shape: Shape,
        n: u64,
        target: ExponentPair,
        balls: &[(f64, ExponentPair)],
    ) -> Result<Self> {
        let balls = balls
            .iter()
            .map(|&(nu, e)| BallSpec::new(nu, e, shape))
            .collect::<Result<Vec<_>>>()?;
        let q = WidthQuery { shape, n, target, balls };
        q.validate()?;
        Ok(q)
    }

    /// Checks the two-sided estimate hypotheses.
    pub fn validate(&self) -> Result<()> {
        if self.balls.is_empty() || self.balls.len() > 2 {
            return Err(invalid(format!("a query needs one or two balls, got {}", self.balls.len())));
        }
        check_target(self.target)?;
        for b in &self.balls {
            if b.shape != self.shape {
                return Err(invalid("ball shape differs from query shape"));
            }
            if !(b.nu > 0.0 && b.nu.is_finite()) {
                return Err(invalid(format!("radius {} must be positive and finite", b.nu)));
            }
            check_ball_exponents(b.exps, self.target)?;
        }
        check_n(self.shape, self.n)
    }

    pub fn is_two_ball(&self) -> bool {
        self.balls.len() == 2
    }

    pub(crate) fn require_two_balls(&self) -> Result<()> {
        if !self.is_two_ball() {
            return Err(invalid("this operation needs a two-ball query"));
        }
        Ok(())
    }
}

/// A two-ball query in evaluation form; transforms act on it directly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Frame {
    pub g: Geometry,
    pub nu: [f64; 2],
    pub e: [ExponentPair; 2],
}

impl Frame {
    pub fn from_query(q: &WidthQuery) -> Frame {
        let g = Geometry::new(q.shape, q.n as f64, q.target);
        let b2 = q.balls.get(1).unwrap_or(&q.balls[0]);
        Frame { g, nu: [q.balls[0].nu, b2.nu], e: [q.balls[0].exps, b2.exps] }
    }

    /// Swaps the roles of rows and columns.
    pub fn transpose(self) -> Frame {
        Frame {
            g: self.g.transpose(),
            nu: self.nu,
            e: [self.e[0].transpose(), self.e[1].transpose()],
        }
    }

    /// Swaps ball 1 and ball 2.
    pub fn swap(self) -> Frame {
        Frame { g: self.g, nu: [self.nu[1], self.nu[0]], e: [self.e[1], self.e[0]] }
    }

    pub fn apply(self, transpose: bool, swap: bool) -> Frame {
        let f = if transpose { self.transpose() } else { self };
        if swap {
            f.swap()
        } else {
            f
        }
    }

    pub fn target(&self) -> ExponentPair {
        ExponentPair::from_exponents(
            Exponent::from_recip_clamped(self.g.rq),
            Exponent::from_recip_clamped(self.g.rs),
        )
    }

    pub fn lambda_tilde(&self) -> Option<InterpolationSolution> {
        solve_lambda_tilde(self.e[0], self.e[1])
    }

    pub fn mu_tilde(&self) -> Option<InterpolationSolution> {
        solve_mu_tilde(self.e[0], self.e[1])
    }

    pub fn phi5(&self) -> Option<InterpolationSolution> {
        solve_phi5_lambda(self.e[0], self.e[1], self.target())
    }

    fn log_mix(&self, t: f64) -> f64 {
        (1.0 - t) * self.nu[0].ln() + t * self.nu[1].ln()
    }

    /// `log Φ_j` with the Theorem A branch used; `None` means `+∞`.
    pub fn log_phi(&self, j: usize) -> Option<(f64, Display, u8)> {
        let dn = |e: ExponentPair| log_dn(&self.g, e.p.recip(), e.theta.recip());
        let (base, e) = match j {
            1 => (self.nu[0].ln(), self.e[0]),
            2 => (self.nu[1].ln(), self.e[1]),
            3 => {
                let s = self.lambda_tilde()?;
                (self.log_mix(s.parameter), s.derived_exponents)
            }
            4 => {
                let s = self.mu_tilde()?;
                (self.log_mix(s.parameter), s.derived_exponents)
            }
            5 => {
                let s = self.phi5()?;
                (self.log_mix(s.parameter), s.derived_exponents)
            }
            _ => return None,
        };
        let (v, d, r) = dn(e);
        Some((base + v, d, r))
    }

    pub fn log_phis(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.log_phi(i + 1).map_or(f64::INFINITY, |x| x.0))
    }
}

/// Index of the smallest value, ties toward the smaller index.
pub(crate) fn argmin_log(v: &[f64; 5]) -> usize {
    let mut best = 0;
    for j in 1..5 {
        if v[j] < v[best] - TIE_TOL {
            best = j;
        }
    }
    best + 1
}

pub fn phi_j(query: &WidthQuery, j: usize) -> Result<f64> {
    if !(1..=5).contains(&j) {
        return Err(invalid(format!("term index {j} outside 1..5")));
    }
    Ok(phi_all(query)?[j - 1])
}

pub fn phi_all(query: &WidthQuery) -> Result<[f64; 5]> {
    query.validate()?;
    let f = Frame::from_query(query);
    if !query.is_two_ball() {
        let mut out = [f64::INFINITY; 5];
        out[0] = f.log_phi(1).map_or(f64::INFINITY, |x| x.0.exp());
        return Ok(out);
    }
    Ok(f.log_phis().map(f64::exp))
}

/// `min_j Φ_j` with the argmin and the underlying Theorem A branch.
pub fn intersection_width_estimate(query: &WidthQuery) -> Result<OrderEstimate> {
    query.validate()?;
    let f = Frame::from_query(query);
    if !query.is_two_ball() {
        let mut est = theorem_a_unchecked(&f.g, f.e[0]);
        est.value *= f.nu[0];
        est.branch.active = Some(1);
        return Ok(est);
    }
    let logs = f.log_phis();
    let j = argmin_log(&logs);
    let (lv, display, row) = f.log_phi(j).expect("the minimum is finite");
    let mut inner = Branch::new(display, row);
    inner.notes.push("order constants set to 1".into());
    let mut branch = Branch::new(Display::PhiMin, row);
    branch.active = Some(j);
    branch.inner = Some(Box::new(inner));
    Ok(OrderEstimate { value: lv.exp(), branch, thresholds: f.g.thresholds() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(p: f64, t: f64) -> ExponentPair {
        ExponentPair::new(p, t).unwrap()
    }

    #[test]
    fn identical_balls_tie() {
        let s = Shape::new(10, 6).unwrap();
        let q = WidthQuery::new(s, 20, pair(4.0, 3.0), &[(1.5, pair(3.0, 2.5)), (1.5, pair(3.0, 2.5))])
            .unwrap();
        let v = phi_all(&q).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(intersection_width_estimate(&q).unwrap().branch.active, Some(1));
    }

    #[test]
    fn phi3_absent_without_half() {
        let s = Shape::new(10, 6).unwrap();
        let q = WidthQuery::new(s, 20, pair(4.0, 4.0), &[(1.0, pair(3.0, 1.0)), (2.0, pair(3.0, 4.0))])
            .unwrap();
        assert_eq!(phi_j(&q, 3).unwrap(), f64::INFINITY);
        assert!(phi_j(&q, 6).is_err());
    }

    #[test]
    fn one_ball_matches_theorem_a() {
        let s = Shape::new(16, 4).unwrap();
        let t = pair(4.0, 4.0);
        let e = pair(3.0, 2.5);
        let q = WidthQuery::new(s, 12, t, &[(1.0, e)]).unwrap();
        let a = super::super::theorem_a_estimate(s, 12, e, t).unwrap();
        assert_eq!(intersection_width_estimate(&q).unwrap().value, a.value);
    }

    #[test]
    fn huge_second_radius_leaves_ball_one() {
        let s = Shape::new(12, 9).unwrap();
        let q = WidthQuery::new(s, 30, pair(5.0, 5.0), &[(1.0, pair(2.5, 3.0)), (1e9, pair(1.5, 4.0))])
            .unwrap();
        assert_eq!(intersection_width_estimate(&q).unwrap().branch.active, Some(1));
    }

    #[test]
    fn rejects_bad_queries() {
        let s = Shape::new(4, 4).unwrap();
        assert!(WidthQuery::new(s, 2, pair(4.0, 4.0), &[]).is_err());
        assert!(WidthQuery::new(s, 2, pair(4.0, 4.0), &[(1.0, pair(5.0, 1.0))]).is_err());
        assert!(WidthQuery::new(s, 2, pair(4.0, 4.0), &[(0.0, pair(2.0, 1.0))]).is_err());
        assert!(WidthQuery::new(s, 9, pair(4.0, 4.0), &[(1.0, pair(2.0, 1.0))]).is_err());
    }
}
