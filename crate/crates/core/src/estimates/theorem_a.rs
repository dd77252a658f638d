use serde::Serialize;

use crate::error::{domain, Result};
use crate::mixed_norm::{Exponent, ExponentPair, Shape};

/// Relative agreement demanded between the two middle formulas when
/// `λ_{p,q} = λ_{θ,σ}`.
pub const BRANCH_AGREEMENT_TOL: f64 = 1e-9;

pub fn lambda_pq(p: Exponent, q: Exponent) -> Result<f64> {
    if q.recip() > 0.5 {
        return Err(domain(format!("q = {q} must be at least 2")));
    }
    if p.recip() < q.recip() {
        return Err(domain(format!("p = {p} exceeds q = {q}")));
    }
    Ok(lambda_recip(p.recip(), q.recip()))
}

/// `λ_{p,q}` on reciprocals, no domain checks.
pub(crate) fn lambda_recip(rp: f64, rq: f64) -> f64 {
    if rq >= 0.5 {
        return 1.0;
    }
    ((rp - rq) / (0.5 - rq)).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// `m^{2/q} k^{2/σ}`
    pub lower: f64,
    /// `m k^{2/σ}`
    pub rows_full: f64,
    /// `k m^{2/q}`
    pub cols_full: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Display {
    #[serde(rename = "dn_1")]
    Dn1,
    #[serde(rename = "dn_2")]
    Dn2,
    #[serde(rename = "dn_3")]
    Dn3,
    #[serde(rename = "phi_min")]
    PhiMin,
    #[serde(rename = "proposition_lower")]
    PropositionLower,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub display: Display,
    /// n-regime row of the display, counted from 1.
    pub row: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<Box<Branch>>,
    pub notes: Vec<String>,
}

impl Branch {
    pub(crate) fn new(display: Display, row: u8) -> Self {
        Branch { display, row, active: None, inner: None, notes: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub value: f64,
    pub branch: Branch,
    pub thresholds: Thresholds,
}

/// Everything the displays need, with exponents as reciprocals and `n` real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Geometry {
    pub m: f64,
    pub k: f64,
    pub n: f64,
    pub rq: f64,
    pub rs: f64,
}

impl Geometry {
    pub fn new(shape: Shape, n: f64, target: ExponentPair) -> Self {
        Geometry {
            m: shape.m as f64,
            k: shape.k as f64,
            n,
            rq: target.p.recip(),
            rs: target.theta.recip(),
        }
    }

    pub fn transpose(self) -> Self {
        Geometry { m: self.k, k: self.m, n: self.n, rq: self.rs, rs: self.rq }
    }

    pub fn thresholds(&self) -> Thresholds {
        let (lm, lk) = (self.m.ln(), self.k.ln());
        Thresholds {
            lower: (2.0 * self.rq * lm + 2.0 * self.rs * lk).exp(),
            rows_full: (lm + 2.0 * self.rs * lk).exp(),
            cols_full: (lk + 2.0 * self.rq * lm).exp(),
        }
    }

    /// Log thresholds, same order as [`Thresholds`].
    pub fn log_thresholds(&self) -> (f64, f64, f64) {
        let (lm, lk) = (self.m.ln(), self.k.ln());
        (
            2.0 * self.rq * lm + 2.0 * self.rs * lk,
            lm + 2.0 * self.rs * lk,
            lk + 2.0 * self.rq * lm,
        )
    }

    /// `log(n^{-1/2} m^{1/q} k^{1/σ})`
    pub fn log_s(&self) -> f64 {
        -0.5 * self.n.ln() + self.rq * self.m.ln() + self.rs * self.k.ln()
    }
}

/// Log of the Theorem A order for `B_{p,θ}` with constants suppressed, plus
/// the display and row used.
pub(crate) fn log_dn(g: &Geometry, rp: f64, rt: f64) -> (f64, Display, u8) {
    let lp = lambda_recip(rp, g.rq);
    let lt = lambda_recip(rt, g.rs);
    if rp >= 0.5 && rt >= 0.5 {
        return log_dn1(g);
    }
    if lp <= lt {
        log_dn2(g, rp, lp, lt)
    } else {
        log_dn3(g, rt, lp, lt)
    }
}

pub(crate) fn log_dn1(g: &Geometry) -> (f64, Display, u8) {
    let (la, _, _) = g.log_thresholds();
    if g.n <= 0.0 || g.n.ln() <= la {
        (0.0, Display::Dn1, 1)
    } else {
        (g.log_s(), Display::Dn1, 2)
    }
}

pub(crate) fn log_dn2(g: &Geometry, rp: f64, lp: f64, lt: f64) -> (f64, Display, u8) {
    let (la, lb, _) = g.log_thresholds();
    if g.n <= 0.0 || g.n.ln() <= la {
        return (0.0, Display::Dn2, 1);
    }
    let ln = g.n.ln();
    if ln <= lb {
        return (lp * g.log_s(), Display::Dn2, 2);
    }
    let (lm, lk) = (g.m.ln(), g.k.ln());
    let v = (g.rq - rp) * lm + lt * (-0.5 * ln + 0.5 * lm + g.rs * lk);
    (v, Display::Dn2, 3)
}

pub(crate) fn log_dn3(g: &Geometry, rt: f64, lp: f64, lt: f64) -> (f64, Display, u8) {
    let (la, _, lc) = g.log_thresholds();
    if g.n <= 0.0 || g.n.ln() <= la {
        return (0.0, Display::Dn3, 1);
    }
    let ln = g.n.ln();
    if ln <= lc {
        return (lt * g.log_s(), Display::Dn3, 2);
    }
    let (lm, lk) = (g.m.ln(), g.k.ln());
    let v = (g.rs - rt) * lk + lp * (-0.5 * ln + 0.5 * lk + g.rq * lm);
    (v, Display::Dn3, 3)
}

pub(crate) fn check_target(target: ExponentPair) -> Result<()> {
    let (q, s) = (target.p, target.theta);
    if q.recip() > 0.5 || q.is_infinite() {
        return Err(domain(format!("q = {q} must satisfy 2 <= q < inf")));
    }
    if s.recip() > 0.5 || s.is_infinite() {
        return Err(domain(format!("sigma = {s} must satisfy 2 <= sigma < inf")));
    }
    Ok(())
}

pub(crate) fn check_ball_exponents(e: ExponentPair, target: ExponentPair) -> Result<()> {
    if e.p.recip() < target.p.recip() {
        return Err(domain(format!("p = {} exceeds q = {}", e.p, target.p)));
    }
    if e.theta.recip() < target.theta.recip() {
        return Err(domain(format!("theta = {} exceeds sigma = {}", e.theta, target.theta)));
    }
    Ok(())
}

pub(crate) fn check_n(shape: Shape, n: u64) -> Result<()> {
    if 2 * n > shape.len() as u64 {
        return Err(domain(format!("n = {n} exceeds mk/2 = {}", shape.len() as f64 / 2.0)));
    }
    Ok(())
}

pub fn theorem_a_estimate(
    shape: Shape,
    n: u64,
    e: ExponentPair,
    target: ExponentPair,
) -> Result<OrderEstimate> {
    check_target(target)?;
    check_ball_exponents(e, target)?;
    check_n(shape, n)?;
    let g = Geometry::new(shape, n as f64, target);
    Ok(theorem_a_unchecked(&g, e))
}

pub(crate) fn theorem_a_unchecked(g: &Geometry, e: ExponentPair) -> OrderEstimate {
    let (rp, rt) = (e.p.recip(), e.theta.recip());
    let (lv, display, row) = log_dn(g, rp, rt);
    let mut branch = Branch::new(display, row);
    branch.notes.push("order constants set to 1".into());
    let lp = lambda_recip(rp, g.rq);
    let lt = lambda_recip(rt, g.rs);
    if display != Display::Dn1 && lp == lt {
        let (a, _, _) = log_dn2(g, rp, lp, lt);
        let (b, _, _) = log_dn3(g, rt, lp, lt);
        let rel = (a - b).exp() - 1.0;
        assert!(
            rel.abs() <= BRANCH_AGREEMENT_TOL,
            "middle formulas disagree at equal lambdas: relative gap {rel}"
        );
        branch.notes.push(format!("equal lambdas: dn_2 and dn_3 agree (relative gap {rel:.1e})"));
    }
    OrderEstimate { value: lv.exp(), branch, thresholds: g.thresholds() }
}

/// The four expressions that coincide when `λ_{p,q} = λ_{θ,σ}` with
/// `2 ≤ p ≤ q`, `2 ≤ θ ≤ σ`.
pub fn identity_1234_values(
    p: Exponent,
    theta: Exponent,
    q: Exponent,
    sigma: Exponent,
    m: usize,
    k: usize,
    n: u64,
) -> Result<[f64; 4]> {
    let target = ExponentPair::from_exponents(q, sigma);
    check_target(target)?;
    if p.recip() > 0.5 || p.recip() < q.recip() {
        return Err(domain(format!("p = {p} must satisfy 2 <= p <= q")));
    }
    if theta.recip() > 0.5 || theta.recip() < sigma.recip() {
        return Err(domain(format!("theta = {theta} must satisfy 2 <= theta <= sigma")));
    }
    if n == 0 {
        return Err(domain("n must be positive"));
    }
    let lp = lambda_pq(p, q)?;
    let lt = lambda_pq(theta, sigma)?;
    if (lp - lt).abs() > 1e-12 {
        return Err(domain(format!("lambda_(p,q) = {lp} differs from lambda_(theta,sigma) = {lt}")));
    }
    let (mf, kf, nf) = (m as f64, k as f64, n as f64);
    let (rp, rt, rq, rs) = (p.recip(), theta.recip(), q.recip(), sigma.recip());
    let base = nf.powf(-0.5) * mf.powf(rq) * kf.powf(rs);
    Ok([
        base.powf(lp),
        mf.powf(rq - rp) * (nf.powf(-0.5) * mf.sqrt() * kf.powf(rs)).powf(lt),
        base.powf(lt),
        kf.powf(rs - rt) * (nf.powf(-0.5) * kf.sqrt() * mf.powf(rq)).powf(lp),
    ])
}
