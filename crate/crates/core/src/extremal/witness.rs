use rayon::prelude::*;
use serde::Serialize;

use super::orbit::{orbit_patterns, Enumeration, VertexFamily, VertexPattern};
use super::prop1::log_prop1;
use crate::error::{invalid, Result};
use crate::estimates::{
    predict_frame, Frame, InterpolationKind, LemmaId, LemmaRef, Prediction, WidthQuery,
};
use crate::mixed_norm::{BallSpec, ExponentPair, Shape};

pub const WITNESS_VERSION: u32 = 1;
const ALPHA_TOL: f64 = 1e-12;
/// Relative slack, in log space, for band endpoints and regime side conditions.
const SIDE_TOL: f64 = 1e-9;

/// Solves `log(ν1/ν2) = dp·log r̃(α) + dt·log l̃(α)` on `[0,1]` by bisection.
///
/// `ln_r` and `ln_l` give `log r̃(α)` and `log l̃(α)`. Returns `None` when the
/// ratio is outside the range swept by `α ∈ [0,1]`.
pub fn solve_alpha(
    e1: ExponentPair,
    e2: ExponentPair,
    nu1: f64,
    nu2: f64,
    ln_r: impl Fn(f64) -> f64,
    ln_l: impl Fn(f64) -> f64,
) -> Option<f64> {
    let dp = e1.p.recip() - e2.p.recip();
    let dt = e1.theta.recip() - e2.theta.recip();
    let target = (nu1 / nu2).ln();
    let tol = SIDE_TOL * target.abs().max(1.0);
    let h = |a: f64| {
        let mut v = -target;
        if dp != 0.0 {
            v += dp * ln_r(a);
        }
        if dt != 0.0 {
            v += dt * ln_l(a);
        }
        v
    };
    let (h0, h1) = (h(0.0), h(1.0));
    if h0.abs() <= tol {
        return Some(0.0);
    }
    if h1.abs() <= tol {
        return Some(1.0);
    }
    if !(h0.is_finite() && h1.is_finite()) || (h0 > 0.0) == (h1 > 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let rising = h1 > h0;
    while hi - lo > ALPHA_TOL {
        let mid = 0.5 * (lo + hi);
        if (h(mid) < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    Ceil,
    Floor,
    /// No rounding; `r`, `l` are fixed by the construction.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Interpolation parameter of the scale and which equation fixed it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<(InterpolationKind, f64)>,
    pub r_tilde: f64,
    pub l_tilde: f64,
    pub rounding: Rounding,
    /// `(p, θ)` entering the scale.
    pub exponents: ExponentPair,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// Family in the query's own orientation.
    pub family: VertexFamily,
    pub scale: f64,
    /// Construction as applied to the query: assertion 2 means transposed.
    pub lemma_id: LemmaRef,
    /// Construction as it appears in the tabulated case.
    pub tabulated: LemmaRef,
    pub mirrored: bool,
    /// `c·V ⊂ factor·(ν1 B1 ∩ ν2 B2)`
    pub factor: f64,
    pub params: WitnessParams,
    /// Scale times the lower order of `d_n(V_{r,l})`.
    pub claimed_value: f64,
    pub prop1_row: u8,
    /// Row the construction needs; `None` when either is fine.
    pub expected_row: Option<u8>,
    pub regime_consistent: bool,
    pub predicted_j: usize,
    pub label: String,
}

impl Witness {
    pub fn r(&self) -> usize {
        self.family.r
    }

    pub fn l(&self) -> usize {
        self.family.l
    }

    pub fn with_scale(&self, scale: f64) -> Witness {
        Witness { scale, ..self.clone() }
    }
}

struct Built {
    ln_r: f64,
    ln_l: f64,
    r: usize,
    l: usize,
    rounding: Rounding,
    alpha: Option<f64>,
    lambda: Option<(InterpolationKind, f64)>,
    exps: ExponentPair,
    ln_scale: f64,
    factor: f64,
    row: Option<u8>,
    notes: Vec<String>,
}

/// Integer from `exp(ln x)` with near-integers snapped first.
fn round_log(ln_x: f64, rounding: Rounding, max: usize) -> usize {
    let x = ln_x.exp();
    let near = x.round();
    let x = if (x - near).abs() <= 1e-9 * near.max(1.0) { near } else { x };
    let v = match rounding {
        Rounding::Ceil => x.ceil(),
        Rounding::Floor => x.floor(),
        Rounding::Fixed => x.round(),
    };
    (v.max(1.0) as usize).min(max)
}

fn safe_div(x: f64, d: f64) -> f64 {
    if d > 1e-15 {
        x / d
    } else if x <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Logs used by the constructions, in one frame.
struct Logs {
    lm: f64,
    lk: f64,
    lt: f64,
    ltm: f64,
    ltk: f64,
    a: f64,
    b: f64,
}

impl Logs {
    fn new(f: &Frame) -> Logs {
        let g = &f.g;
        let (lm, lk) = (g.m.ln(), g.k.ln());
        let ln = g.n.ln();
        Logs {
            lm,
            lk,
            lt: 0.5 * ln - g.rq * lm - g.rs * lk,
            ltm: 0.5 * ln - 0.5 * lm - g.rs * lk,
            ltk: 0.5 * ln - g.rq * lm - 0.5 * lk,
            a: 0.5 - g.rq,
            b: 0.5 - g.rs,
        }
    }
}

fn interp_scale(f: &Frame, lambda: f64, r: usize, l: usize) -> (ExponentPair, f64) {
    let e = ExponentPair::interpolate(f.e[0], f.e[1], lambda);
    let ln = (1.0 - lambda) * f.nu[0].ln() + lambda * f.nu[1].ln()
        - e.p.recip() * (r as f64).ln()
        - e.theta.recip() * (l as f64).ln();
    (e, ln)
}

fn clamp_log(x: f64, max: f64, what: &str, notes: &mut Vec<String>) -> f64 {
    let c = x.clamp(0.0, max);
    if (c - x).abs() > SIDE_TOL * max.max(1.0) {
        notes.push(format!("{what} clamped from {:.6e} into range", x.exp()));
    }
    c
}

/// Assertion 1 of `lemma` with the balls as given, in frame `f`.
fn construct(lemma: LemmaId, f: &Frame, shape: Shape) -> Option<Built> {
    let lg = Logs::new(f);
    let (m, k) = (shape.m, shape.k);
    let (lm, lk) = (lg.lm, lg.lk);
    let mut notes = Vec::new();
    let simple = |ln_r: f64, ln_l: f64, r: usize, l: usize, rounding, exps: ExponentPair, ln_scale, factor, row, notes| Built {
        ln_r,
        ln_l,
        r,
        l,
        rounding,
        alpha: None,
        lambda: None,
        exps,
        ln_scale,
        factor,
        row,
        notes,
    };
    match lemma {
        LemmaId::SingleEntry => {
            let i = if f.nu[0] <= f.nu[1] { 0 } else { 1 };
            Some(simple(0.0, 0.0, 1, 1, Rounding::Fixed, f.e[i], f.nu[i].ln(), 1.0, None, notes))
        }
        LemmaId::CeilBlock => {
            let ln_r = clamp_log(safe_div(lg.lt, lg.a), lm, "r~", &mut notes);
            let r = round_log(ln_r, Rounding::Ceil, m);
            let ln_scale = f.nu[0].ln() - f.e[0].p.recip() * (r as f64).ln();
            Some(simple(ln_r, 0.0, r, 1, Rounding::Ceil, f.e[0], ln_scale, 2.0, Some(1), notes))
        }
        LemmaId::FullSideCeilBlock => {
            let ln_l = clamp_log(safe_div(lg.ltm, lg.b), lk, "l~", &mut notes);
            let l = round_log(ln_l, Rounding::Ceil, k);
            let ln_scale = f.nu[0].ln()
                - f.e[0].p.recip() * lm
                - f.e[0].theta.recip() * (l as f64).ln();
            Some(simple(lm, ln_l, m, l, Rounding::Ceil, f.e[0], ln_scale, 2.0, Some(1), notes))
        }
        LemmaId::FullSideLine => {
            let ln_scale = f.nu[1].ln() - f.e[1].p.recip() * lm;
            Some(simple(lm, 0.0, m, 1, Rounding::Fixed, f.e[1], ln_scale, 1.0, Some(2), notes))
        }
        LemmaId::Central | LemmaId::Transition | LemmaId::Upper => {
            let (ua, ub) = (safe_div(1.0, lg.a), safe_div(1.0, lg.b));
            let (lt, ltm, ltk) = (lg.lt, lg.ltm, lg.ltk);
            let ln_r = move |al: f64| match lemma {
                LemmaId::Central => (1.0 - al) * lt * ua,
                LemmaId::Transition => (1.0 - al) * lt * ua + al * ltk * ua,
                _ => (1.0 - al) * lm + al * ltk * ua,
            };
            let ln_l = move |al: f64| match lemma {
                LemmaId::Central => al * lt * ub,
                LemmaId::Transition => al * lk,
                _ => (1.0 - al) * ltm * ub + al * lk,
            };
            let alpha = solve_alpha(f.e[0], f.e[1], f.nu[0], f.nu[1], ln_r, ln_l)?;
            let lr = clamp_log(ln_r(alpha), lm, "r~", &mut notes);
            let ll = clamp_log(ln_l(alpha), lk, "l~", &mut notes);
            let r = round_log(lr, Rounding::Ceil, m);
            let l = round_log(ll, Rounding::Ceil, k);
            let lambda = match f.phi5() {
                Some(s) => s.parameter,
                None => {
                    notes.push("no interpolation with equal lambdas; using 0".into());
                    0.0
                }
            };
            let (exps, ln_scale) = interp_scale(f, lambda, r, l);
            Some(Built {
                ln_r: lr,
                ln_l: ll,
                r,
                l,
                rounding: Rounding::Ceil,
                alpha: Some(alpha),
                lambda: Some((InterpolationKind::Phi5Lambda, lambda)),
                exps,
                ln_scale,
                factor: 4.0,
                row: Some(1),
                notes,
            })
        }
        LemmaId::FullSideTildeInterp => {
            let ub = safe_div(1.0, lg.b);
            let ltm = lg.ltm;
            let ln_l = move |al: f64| (1.0 - al) * ltm * ub;
            let alpha = solve_alpha(f.e[0], f.e[1], f.nu[0], f.nu[1], |_| lm, ln_l)?;
            let ll = clamp_log(ln_l(alpha), lk, "l~", &mut notes);
            let l = round_log(ll, Rounding::Floor, k);
            let mu = match f.mu_tilde() {
                Some(s) => s.parameter,
                None => {
                    notes.push("no mu~ solution; using 0".into());
                    0.0
                }
            };
            let (exps, ln_scale) = interp_scale(f, mu, m, l);
            Some(Built {
                ln_r: lm,
                ln_l: ll,
                r: m,
                l,
                rounding: Rounding::Floor,
                alpha: Some(alpha),
                lambda: Some((InterpolationKind::MuTilde, mu)),
                exps,
                ln_scale,
                factor: 4.0,
                row: Some(2),
                notes,
            })
        }
        LemmaId::TildeInterpLow | LemmaId::TildeInterpHigh => {
            let (lt, ua) = (lg.lt, safe_div(1.0, lg.a));
            let ln_r = move |al: f64| {
                if lemma == LemmaId::TildeInterpLow {
                    al * lt * ua
                } else {
                    al * lm
                }
            };
            let alpha = solve_alpha(f.e[0], f.e[1], f.nu[0], f.nu[1], ln_r, |_| 0.0)?;
            let lr = clamp_log(ln_r(alpha), lm, "r~", &mut notes);
            let r = round_log(lr, Rounding::Floor, m);
            let lam = match f.lambda_tilde() {
                Some(s) => s.parameter,
                None => {
                    notes.push("no lambda~ solution; using 0".into());
                    0.0
                }
            };
            let (exps, ln_scale) = interp_scale(f, lam, r, 1);
            Some(Built {
                ln_r: lr,
                ln_l: 0.0,
                r,
                l: 1,
                rounding: Rounding::Floor,
                alpha: Some(alpha),
                lambda: Some((InterpolationKind::LambdaTilde, lam)),
                exps,
                ln_scale,
                factor: 4.0,
                row: Some(2),
                notes,
            })
        }
    }
}

/// Witness for the predicted band with the default vertex enumeration.
pub fn build_witness(query: &WidthQuery) -> Result<Option<Witness>> {
    build_witness_with(query, Enumeration::default())
}

pub fn build_witness_with(query: &WidthQuery, enumeration: Enumeration) -> Result<Option<Witness>> {
    query.validate()?;
    query.require_two_balls()?;
    let orig = Frame::from_query(query);
    let pred = predict_frame(&orig);
    Ok(witness_for(query, &orig, &pred, enumeration))
}

pub(crate) fn witness_for(
    query: &WidthQuery,
    orig: &Frame,
    pred: &Prediction,
    enumeration: Enumeration,
) -> Option<Witness> {
    let tab = pred.lemma;
    let tt = pred.transposed ^ (tab.assertion == 2);
    let ts = pred.swapped ^ tab.swapped;
    let f = orig.apply(tt, ts);
    let lshape = if tt { query.shape.transpose() } else { query.shape };
    let b = construct(tab.lemma, &f, lshape)?;
    let (log_v, row) = log_prop1(&f.g, b.r as f64, b.l as f64);
    let regime_consistent = match b.row {
        None => true,
        Some(want) => {
            let (la, ..) = f.g.log_thresholds();
            let thr = la + (1.0 - 2.0 * f.g.rq) * (b.r as f64).ln()
                + (1.0 - 2.0 * f.g.rs) * (b.l as f64).ln();
            let ln = f.g.n.ln();
            let slack = SIDE_TOL * thr.abs().max(1.0);
            if want == 1 {
                ln <= thr + slack
            } else {
                ln >= thr - slack
            }
        }
    };
    let (r, l, r_tilde, l_tilde, exps) = if tt {
        (b.l, b.r, b.ln_l.exp(), b.ln_r.exp(), b.exps.transpose())
    } else {
        (b.r, b.l, b.ln_r.exp(), b.ln_l.exp(), b.exps)
    };
    let family = VertexFamily { shape: query.shape, r, l, enumeration };
    let lambda = b.lambda.map(|(kind, v)| (kind, if ts { 1.0 - v } else { v }));
    let scale = b.ln_scale.exp();
    Some(Witness {
        family,
        scale,
        lemma_id: LemmaRef { lemma: tab.lemma, assertion: 1 + u8::from(tt), swapped: ts },
        tabulated: tab,
        mirrored: pred.mirrored,
        factor: b.factor,
        params: WitnessParams {
            alpha: b.alpha,
            lambda,
            r_tilde,
            l_tilde,
            rounding: b.rounding,
            exponents: exps,
            notes: b.notes,
        },
        claimed_value: scale * log_v.exp(),
        prop1_row: row,
        expected_row: b.row,
        regime_consistent,
        predicted_j: pred.j,
        label: pred.label.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub checked: usize,
    /// Largest `‖c·v‖_i / (factor·ν_i)` seen.
    pub worst_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offending: Option<VertexPattern>,
}

fn pattern_key(v: &VertexPattern) -> (&[usize], &[usize], &[i8], &[i8]) {
    (&v.rows, &v.cols, &v.row_signs, &v.col_signs)
}

/// Checks `‖c·v‖_{p_i,θ_i} ≤ factor·ν_i(1+tol)` for every visited vertex.
pub fn verify_witness(w: &Witness, balls: &[BallSpec], tol: f64) -> bool {
    verify_witness_detailed(w, balls, tol).is_ok_and(|v| v.passed)
}

pub fn verify_witness_detailed(w: &Witness, balls: &[BallSpec], tol: f64) -> Result<Verification> {
    if balls.is_empty() {
        return Err(invalid("no balls to verify against"));
    }
    if balls.iter().any(|b| b.shape != w.family.shape) {
        return Err(invalid("ball shape differs from witness family"));
    }
    let c = w.scale;
    let factor = w.factor;
    let ratio = |v: &VertexPattern| {
        balls
            .iter()
            .map(|b| v.scaled_norm(c, b.exps) / (factor * b.nu))
            .fold(0.0_f64, f64::max)
    };
    let (checked, worst, bad) = orbit_patterns(&w.family)
        .par_bridge()
        .map(|v| {
            let r = ratio(&v);
            (1usize, r, (r > 1.0 + tol).then_some(v))
        })
        .reduce(
            || (0, 0.0, None),
            |a, b| {
                // smallest offender so the report does not depend on scheduling
                let bad = match (a.2, b.2) {
                    (Some(x), Some(y)) => Some(if pattern_key(&y) < pattern_key(&x) { y } else { x }),
                    (x, y) => x.or(y),
                };
                (a.0 + b.0, a.1.max(b.1), bad)
            },
        );
    Ok(Verification { passed: bad.is_none(), checked, worst_ratio: worst, offending: bad })
}

/// Versioned serialized form of a witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessDocument {
    pub version: u32,
    pub lemma_id: LemmaId,
    pub assertion: u8,
    pub balls_swapped: bool,
    pub mirrored: bool,
    pub m: usize,
    pub k: usize,
    pub r: usize,
    pub l: usize,
    pub n: u64,
    pub q: f64,
    pub sigma: f64,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub r_tilde: f64,
    pub l_tilde: f64,
    pub rounding: Rounding,
    pub scale: f64,
    pub factor: f64,
    pub claimed_value: f64,
    pub prop1_row: u8,
    pub regime_consistent: bool,
    pub verified: bool,
    pub vertices_checked: usize,
    pub seed: Option<u64>,
    pub label: String,
    pub notes: Vec<String>,
}

impl WitnessDocument {
    pub fn new(w: &Witness, query: &WidthQuery, v: &Verification) -> Self {
        WitnessDocument {
            version: WITNESS_VERSION,
            lemma_id: w.lemma_id.lemma,
            assertion: w.lemma_id.assertion,
            balls_swapped: w.lemma_id.swapped,
            mirrored: w.mirrored,
            m: w.family.shape.m,
            k: w.family.shape.k,
            r: w.family.r,
            l: w.family.l,
            n: query.n,
            q: query.target.p.value(),
            sigma: query.target.theta.value(),
            alpha: w.params.alpha,
            lambda: w.params.lambda.map(|x| x.1),
            r_tilde: w.params.r_tilde,
            l_tilde: w.params.l_tilde,
            rounding: w.params.rounding,
            scale: w.scale,
            factor: w.factor,
            claimed_value: w.claimed_value,
            prop1_row: w.prop1_row,
            regime_consistent: w.regime_consistent,
            verified: v.passed,
            vertices_checked: v.checked,
            seed: w.family.seed(),
            label: w.label.clone(),
            notes: w.params.notes.clone(),
        }
    }
}
