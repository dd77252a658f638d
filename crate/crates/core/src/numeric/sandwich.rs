use serde::Serialize;

use super::sampling::ball_boundary_sample;
use super::width::{estimate_width, Budget, PointSource};
use super::WidthRun;
use crate::error::Result;
use crate::extremal::{averaging_bound, build_witness_with, orbit_patterns, Enumeration, VertexFamily};
use crate::mixed_norm::{mixed_norm, MixedMatrix};
use crate::estimates::WidthQuery;

/// Orbits larger than this fall back to the axis certificate.
pub const SANDWICH_MAX_VERTICES: u128 = 2000;
/// Boundary directions drawn per ball.
pub const SANDWICH_SAMPLES: usize = 8;
pub const SANDWICH_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub m: usize,
    pub k: usize,
    pub n: u64,
    /// "witness", "axis" (no witness) or "axis-capped" (witness orbit too large).
    pub certificate: String,
    pub r: usize,
    pub l: usize,
    pub scale: f64,
    /// `ℓ_{2,2} → ℓ_{q,σ}` comparison constant.
    pub nesting: f64,
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub budget: Budget,
    pub seed: u64,
    pub tol: f64,
    pub passed: bool,
}

/// Lower certificate `A` from the averaging bound on a scaled vertex set
/// contained in the point set, against the numeric upper bound `U` on the
/// same point set; passes when `A ≤ U(1 + tol)`.
pub fn sandwich_check(query: &WidthQuery, budget: Budget, seed: u64) -> Result<SandwichReport> {
    query.validate()?;
    let shape = query.shape;
    let (m, k) = (shape.m, shape.k);
    let e = query.target;
    let witness = build_witness_with(query, Enumeration::Full)?;
    let (certificate, family, scale) = match witness {
        Some(w) if w.family.distinct_vertex_count().is_some_and(|c| c <= SANDWICH_MAX_VERTICES) => {
            ("witness", w.family.clone(), w.scale)
        }
        other => {
            // ±E_ij has unit norm in every ball
            let s = query.balls.iter().map(|b| b.nu).fold(f64::INFINITY, f64::min);
            let tag = if other.is_some() { "axis-capped" } else { "axis" };
            (tag, VertexFamily::new(shape, 1, 1, Enumeration::Full)?, s)
        }
    };
    let mut points: Vec<MixedMatrix> =
        orbit_patterns(&family).map(|v| v.to_matrix(shape).scaled(scale)).collect();
    for (i, b) in query.balls.iter().enumerate() {
        for x in ball_boundary_sample(b, SANDWICH_SAMPLES, seed.wrapping_add(i as u64)) {
            let c = query
                .balls
                .iter()
                .map(|o| {
                    let v = mixed_norm(&x, o.exps);
                    if v > o.nu { o.nu / v } else { 1.0 }
                })
                .fold(1.0, f64::min);
            points.push(x.scaled(c));
        }
    }
    // axis samples scaled into the intersection often repeat witness vertices
    let mut unique: Vec<MixedMatrix> = Vec::with_capacity(points.len());
    for x in points {
        let close = |y: &MixedMatrix| {
            x.as_slice().iter().zip(y.as_slice()).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300))
        };
        if !unique.iter().any(close) {
            unique.push(x);
        }
    }
    let points = unique;
    let npts = points.len();
    let nesting = (m as f64).powf((e.p.recip() - 0.5).min(0.0))
        * (k as f64).powf((e.theta.recip() - 0.5).min(0.0));
    let lower = scale * averaging_bound(m, k, family.r, family.l, query.n) * nesting;
    let n = query.n.min(shape.len() as u64) as usize;
    let run = WidthRun::new(PointSource::explicit(points)?, n, e, budget, seed);
    let upper = estimate_width(run)?.value().unwrap_or(0.0);
    Ok(SandwichReport {
        m,
        k,
        n: query.n,
        certificate: certificate.to_string(),
        r: family.r,
        l: family.l,
        scale,
        nesting,
        lower,
        upper,
        points: npts,
        budget,
        seed,
        tol: SANDWICH_TOL,
        passed: lower <= upper * (1.0 + SANDWICH_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixed_norm::{ExponentPair, Shape};

    fn pair(p: f64, t: f64) -> ExponentPair {
        ExponentPair::new(p, t).unwrap()
    }

    #[test]
    fn euclidean_octahedron_is_tight() {
        let q = WidthQuery::new(
            Shape::new(2, 2).unwrap(),
            2,
            pair(2.0, 2.0),
            &[(1.0, pair(1.0, 1.0)), (1.0, pair(2.0, 2.0))],
        )
        .unwrap();
        let r = sandwich_check(&q, Budget::new(8, 400).unwrap(), 3).unwrap();
        assert!(r.passed);
        assert!((r.lower - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(r.upper - r.lower < 5e-3, "{r:?}");
    }

    #[test]
    fn n_zero_gives_max_norm() {
        let q = WidthQuery::new(
            Shape::new(3, 4).unwrap(),
            0,
            pair(4.0, 4.0),
            &[(1.0, pair(1.0, 2.0)), (0.5, pair(3.0, 3.0))],
        )
        .unwrap();
        let r = sandwich_check(&q, Budget::new(1, 1).unwrap(), 0).unwrap();
        assert!(r.passed, "{r:?}");
        let want = r.scale * ((r.r * r.l) as f64).sqrt() * r.nesting;
        assert!((r.lower - want).abs() < 1e-12);
    }
}
