use serde::Serialize;

use super::theorem_a::lambda_recip;
use crate::mixed_norm::{Exponent, ExponentPair};

const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationKind {
    LambdaTilde,
    MuTilde,
    Phi5Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationSolution {
    pub kind: InterpolationKind,
    pub parameter: f64,
    /// `(2, θ̃)`, `(p̃, 2)` or `(p, θ)` depending on the kind.
    pub derived_exponents: ExponentPair,
    /// Full solution set when it is an interval (only for `Phi5Lambda`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
}

/// Solves `1/2 = (1-t)/a1 + t/a2` on reciprocals.
fn solve_half(r1: f64, r2: f64) -> Option<f64> {
    if r1 == r2 {
        return (r1 == 0.5).then_some(0.0);
    }
    let t = (r1 - 0.5) / (r1 - r2);
    if t < -EPS || t > 1.0 + EPS {
        return None;
    }
    Some(t.clamp(0.0, 1.0))
}

/// `λ̃` with `1/2 = (1-λ̃)/p1 + λ̃/p2`, and `θ̃` from the θ's.
pub fn solve_lambda_tilde(e1: ExponentPair, e2: ExponentPair) -> Option<InterpolationSolution> {
    let t = solve_half(e1.p.recip(), e2.p.recip())?;
    Some(InterpolationSolution {
        kind: InterpolationKind::LambdaTilde,
        parameter: t,
        derived_exponents: ExponentPair::from_exponents(
            Exponent::TWO,
            Exponent::interpolate(e1.theta, e2.theta, t),
        ),
        interval: None,
    })
}

/// `μ̃` with `1/2 = (1-μ̃)/θ1 + μ̃/θ2`, and `p̃` from the p's.
pub fn solve_mu_tilde(e1: ExponentPair, e2: ExponentPair) -> Option<InterpolationSolution> {
    let t = solve_half(e1.theta.recip(), e2.theta.recip())?;
    Some(InterpolationSolution {
        kind: InterpolationKind::MuTilde,
        parameter: t,
        derived_exponents: ExponentPair::from_exponents(
            Exponent::interpolate(e1.p, e2.p, t),
            Exponent::TWO,
        ),
        interval: None,
    })
}

/// `{t ∈ [0,1] : lo ≤ c0 + t(c1-c0) ≤ hi}` as an interval.
fn affine_window(c0: f64, c1: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let d = c1 - c0;
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    if d.abs() < 1e-15 {
        if c0 < lo - EPS || c0 > hi + EPS {
            return None;
        }
    } else {
        let t_lo = (lo - c0) / d;
        let t_hi = (hi - c0) / d;
        let (u, v) = if d > 0.0 { (t_lo, t_hi) } else { (t_hi, t_lo) };
        a = a.max(u);
        b = b.min(v);
    }
    (a <= b + EPS).then_some((a, b.max(a)))
}

/// `λ ∈ [0,1]` with `p(λ) ∈ [2,q]`, `θ(λ) ∈ [2,σ]` and `λ_{p,q} = λ_{θ,σ}`.
/// When the solutions form an interval, the smallest point is returned and
/// the interval is attached.
pub fn solve_phi5_lambda(
    e1: ExponentPair,
    e2: ExponentPair,
    target: ExponentPair,
) -> Option<InterpolationSolution> {
    let (rq, rs) = (target.p.recip(), target.theta.recip());
    let wp = affine_window(e1.p.recip(), e2.p.recip(), rq, 0.5)?;
    let wt = affine_window(e1.theta.recip(), e2.theta.recip(), rs, 0.5)?;
    let (lo, hi) = (wp.0.max(wt.0), wp.1.min(wt.1));
    if lo > hi + EPS {
        return None;
    }
    let hi = hi.max(lo);
    // Both sides are affine in λ on the window; at q = 2 the p side is 1.
    let side = |r1: f64, r2: f64, rt: f64, t: f64| {
        if rt >= 0.5 {
            1.0
        } else {
            ((1.0 - t) * r1 + t * r2 - rt) / (0.5 - rt)
        }
    };
    let g = |t: f64| {
        side(e1.p.recip(), e2.p.recip(), rq, t) - side(e1.theta.recip(), e2.theta.recip(), rs, t)
    };
    let (g0, g1) = (g(0.0), g(1.0));
    let slope = g1 - g0;
    let (t, interval) = if slope.abs() < 1e-13 {
        if g0.abs() > 1e-12 {
            return None;
        }
        (lo, Some((lo, hi)))
    } else {
        let t = -g0 / slope;
        if t < lo - EPS || t > hi + EPS {
            return None;
        }
        let t = t.clamp(lo, hi);
        (t, Some((t, t)))
    };
    let derived = ExponentPair::interpolate(e1, e2, t);
    let lp = lambda_recip(derived.p.recip(), rq);
    let lt = lambda_recip(derived.theta.recip(), rs);
    if (lp - lt).abs() > 1e-9 {
        return None;
    }
    Some(InterpolationSolution {
        kind: InterpolationKind::Phi5Lambda,
        parameter: t,
        derived_exponents: derived,
        interval,
    })
}
