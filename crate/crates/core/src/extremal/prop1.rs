use crate::error::{invalid, Result};
use crate::estimates::{check_target, Branch, Display, Geometry, OrderEstimate};
use crate::mixed_norm::{ExponentPair, Shape};

/// Root mean square `l_{2,2}` distance from the full orbit of `V_{r,l}` to
/// the best `n`-dimensional subspace is at least this.
pub fn averaging_bound(m: usize, k: usize, r: usize, l: usize, n: u64) -> f64 {
    let mk = (m * k) as f64;
    ((r * l) as f64 * (1.0 - n as f64 / mk)).max(0.0).sqrt()
}

/// `log` of the regime threshold `m^{2/q}k^{2/σ}r^{1-2/q}l^{1-2/σ}`.
fn log_threshold(g: &Geometry, r: f64, l: f64) -> f64 {
    2.0 * g.rq * g.m.ln()
        + 2.0 * g.rs * g.k.ln()
        + (1.0 - 2.0 * g.rq) * r.ln()
        + (1.0 - 2.0 * g.rs) * l.ln()
}

pub(crate) fn log_prop1(g: &Geometry, r: f64, l: f64) -> (f64, u8) {
    let first = g.rq * r.ln() + g.rs * l.ln();
    if g.n <= 0.0 || g.n.ln() <= log_threshold(g, r, l) {
        (first, 1)
    } else {
        (g.log_s() + 0.5 * (r.ln() + l.ln()), 2)
    }
}

/// Lower order for `d_n(V_{r,l}, l_{q,σ})`, constants suppressed.
pub fn proposition1_lower_bound(
    shape: Shape,
    r: usize,
    l: usize,
    n: u64,
    target: ExponentPair,
) -> Result<OrderEstimate> {
    check_target(target)?;
    if r == 0 || r > shape.m || l == 0 || l > shape.k {
        return Err(invalid(format!("block {r}x{l} does not fit in {}x{}", shape.m, shape.k)));
    }
    if 2 * n > shape.len() as u64 {
        return Err(invalid(format!("n = {n} exceeds mk/2")));
    }
    let g = Geometry::new(shape, n as f64, target);
    let (lv, row) = log_prop1(&g, r as f64, l as f64);
    let mut branch = Branch::new(Display::PropositionLower, row);
    let thr = log_threshold(&g, r as f64, l as f64).exp();
    branch.notes.push(format!("regime threshold {thr}"));
    if row == 2 {
        branch.notes.push("constant-dependent regime".into());
    }
    branch.notes.push(format!(
        "averaging bound (l_2,2) {}",
        averaging_bound(shape.m, shape.k, r, l, n)
    ));
    Ok(OrderEstimate { value: lv.exp(), branch, thresholds: g.thresholds() })
}
