use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use super::query::{parse_exponent, QueryArgs, QueryRecord};
use crate::error::{invalid, Result};
use crate::estimates::{argmin_log, log_phis_at, predict_active_term};
use crate::mixed_norm::Exponent;

pub const SWEEP_VERSION: u32 = 1;

/// Column order of sweep CSV version 1.
pub const SWEEP_COLUMNS: [&str; 24] = [
    "m", "k", "n", "q", "sigma", "nu1", "p1", "theta1", "nu2", "p2", "theta2", "phi1", "phi2",
    "phi3", "phi4", "phi5", "argmin", "predicted", "case", "subcase", "mirrored", "boundary",
    "label", "seed",
];

#[derive(Args, Clone, Debug, Default)]
pub struct GridArgs {
    /// n values: `a,b,c`, `lo:hi` or `lo:hi:step`.
    #[arg(long = "n-grid")]
    pub n_grid: Option<String>,
    /// ν1/ν2 values: `a,b,c` or `lo:hi:count` (geometric).
    #[arg(long = "ratio-grid")]
    pub ratio_grid: Option<String>,
    /// Exponent values: `2,3,inf,8/3` or `lo:hi:count` (even in 1/p).
    #[arg(long = "p1-grid")]
    pub p1_grid: Option<String>,
    #[arg(long = "theta1-grid")]
    pub theta1_grid: Option<String>,
    #[arg(long = "p2-grid")]
    pub p2_grid: Option<String>,
    #[arg(long = "theta2-grid")]
    pub theta2_grid: Option<String>,
}

fn range_parts(s: &str) -> Option<Vec<&str>> {
    s.contains(':').then(|| s.split(':').map(str::trim).collect())
}

fn list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| f(t.trim())).collect()
}

fn count(s: &str) -> Result<usize> {
    s.parse().map_err(|_| invalid(format!("bad grid count {s:?}")))
}

pub(crate) fn n_grid(s: &str) -> Result<Vec<u64>> {
    let int = |t: &str| t.parse::<u64>().map_err(|_| invalid(format!("bad n value {t:?}")));
    match range_parts(s) {
        Some(p) if p.len() == 2 || p.len() == 3 => {
            let (lo, hi) = (int(p[0])?, int(p[1])?);
            let step = if p.len() == 3 { int(p[2])? } else { 1 };
            if step == 0 {
                return Err(invalid("n step must be positive"));
            }
            Ok((lo..=hi).step_by(step as usize).collect())
        }
        Some(_) => Err(invalid(format!("bad n grid {s:?}"))),
        None => list(s, int),
    }
}

pub(crate) fn ratio_grid(s: &str) -> Result<Vec<f64>> {
    let real = |t: &str| -> Result<f64> {
        let v: f64 = t.parse().map_err(|_| invalid(format!("bad ratio {t:?}")))?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(invalid(format!("ratio {t} must be positive and finite")))
        }
    };
    match range_parts(s) {
        Some(p) if p.len() == 3 => {
            let (lo, hi, c) = (real(p[0])?, real(p[1])?, count(p[2])?);
            Ok(match c {
                0 => vec![],
                1 => vec![lo],
                _ => (0..c)
                    .map(|i| match i {
                        0 => lo,
                        i if i == c - 1 => hi,
                        i => lo * (hi / lo).powf(i as f64 / (c - 1) as f64),
                    })
                    .collect(),
            })
        }
        Some(_) => Err(invalid(format!("bad ratio grid {s:?}"))),
        None => list(s, real),
    }
}

pub(crate) fn exponent_grid(s: &str) -> Result<Vec<Exponent>> {
    let e = |t: &str| parse_exponent(t).map_err(invalid);
    match range_parts(s) {
        Some(p) if p.len() == 3 => {
            let (lo, hi, c) = (e(p[0])?.recip(), e(p[1])?.recip(), count(p[2])?);
            match c {
                0 => Ok(vec![]),
                1 => Ok(vec![Exponent::from_recip(lo)?]),
                _ => (0..c)
                    .map(|i| Exponent::from_recip(lo + (hi - lo) * i as f64 / (c - 1) as f64))
                    .collect(),
            }
        }
        Some(_) => Err(invalid(format!("bad exponent grid {s:?}"))),
        None => list(s, e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub k: usize,
    pub n: u64,
    pub q: String,
    pub sigma: String,
    pub nu1: f64,
    pub p1: String,
    pub theta1: String,
    pub nu2: f64,
    pub p2: String,
    pub theta2: String,
    pub phi1: String,
    pub phi2: String,
    pub phi3: String,
    pub phi4: String,
    pub phi5: String,
    pub argmin: usize,
    pub predicted: usize,
    pub case: String,
    pub subcase: String,
    pub mirrored: bool,
    pub boundary: bool,
    pub label: String,
    pub seed: u64,
}

fn real_cell(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:e}")
    }
}

fn row(rec: &QueryRecord, seed: u64) -> Result<SweepRow> {
    let q = rec.to_query()?;
    q.require_two_balls()?;
    let logs = log_phis_at(&q, q.n as f64)?;
    let p = predict_active_term(&q)?;
    let phi: Vec<String> = logs.iter().map(|l| real_cell(l.exp())).collect();
    let (b1, b2) = (&rec.balls[0], &rec.balls[1]);
    Ok(SweepRow {
        m: rec.m,
        k: rec.k,
        n: rec.n,
        q: rec.q.to_string(),
        sigma: rec.sigma.to_string(),
        nu1: b1.nu,
        p1: b1.p.to_string(),
        theta1: b1.theta.to_string(),
        nu2: b2.nu,
        p2: b2.p.to_string(),
        theta2: b2.theta.to_string(),
        phi1: phi[0].clone(),
        phi2: phi[1].clone(),
        phi3: phi[2].clone(),
        phi4: phi[3].clone(),
        phi5: phi[4].clone(),
        argmin: argmin_log(&logs),
        predicted: p.j,
        case: p.case.label().to_string(),
        subcase: serde_json::to_value(p.subcase).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        mirrored: p.mirrored,
        boundary: p.boundary,
        label: p.label,
        seed,
    })
}

/// Grid points in row order: n, ratio, p1, θ1, p2, θ2 (last varies fastest).
pub fn sweep_records(base: &QueryArgs, grid: &GridArgs) -> Result<Vec<QueryRecord>> {
    let ns = match &grid.n_grid {
        Some(s) => n_grid(s)?,
        None => vec![base.n.ok_or_else(|| invalid("missing -n or --n-grid"))?],
    };
    let proto = base.record(Some(ns.first().copied().unwrap_or(0)))?;
    if proto.balls.len() != 2 {
        return Err(invalid("a sweep needs two --ball arguments"));
    }
    let (b1, b2) = (proto.balls[0], proto.balls[1]);
    let nu1s: Vec<f64> = match &grid.ratio_grid {
        Some(s) => ratio_grid(s)?.into_iter().map(|r| r * b2.nu).collect(),
        None => vec![b1.nu],
    };
    let ex = |g: &Option<String>, d: Exponent| -> Result<Vec<Exponent>> {
        g.as_deref().map_or(Ok(vec![d]), exponent_grid)
    };
    let (p1s, t1s) = (ex(&grid.p1_grid, b1.p)?, ex(&grid.theta1_grid, b1.theta)?);
    let (p2s, t2s) = (ex(&grid.p2_grid, b2.p)?, ex(&grid.theta2_grid, b2.theta)?);
    let axes = [ns.len(), nu1s.len(), p1s.len(), t1s.len(), p2s.len(), t2s.len()];
    if axes.contains(&0) {
        return Err(invalid("empty grid"));
    }
    let mut out = Vec::with_capacity(axes.iter().product());
    for &n in &ns {
        for &nu1 in &nu1s {
            for &p1 in &p1s {
                for &t1 in &t1s {
                    for &p2 in &p2s {
                        for &t2 in &t2s {
                            let mut rec = proto.clone();
                            rec.n = n;
                            rec.balls[0].nu = nu1;
                            rec.balls[0].p = p1;
                            rec.balls[0].theta = t1;
                            rec.balls[1].p = p2;
                            rec.balls[1].theta = t2;
                            out.push(rec);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn sweep_rows(records: &[QueryRecord], seed: u64) -> Result<Vec<SweepRow>> {
    records.par_iter().map(|r| row(r, seed)).collect()
}
