//! Seeded property suites behind `widthlab verify`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::estimates::{
    identity_1234_values, log_phis_at, phi_all, predict_active_term, solve_phi5_lambda,
    theorem_a_estimate, CaseId, WidthQuery,
};
use crate::extremal::{build_witness, verify_witness_detailed, Enumeration, VertexFamily};
use crate::mixed_norm::{interpolation_inequality_gap, Exponent, ExponentPair, MixedMatrix, Shape};
use crate::numeric::{sandwich_check, width_profile, Budget, PointSource, Subspace};

pub const REPORT_VERSION: u32 = 1;
const MAX_EXAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Holder,
    Identity4,
    Averaging,
    Witnesses,
    Sandwich,
    Thresholds,
    Octahedron,
    Monotonicity,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Holder,
        Suite::Identity4,
        Suite::Averaging,
        Suite::Witnesses,
        Suite::Sandwich,
        Suite::Thresholds,
        Suite::Octahedron,
        Suite::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Holder => "holder",
            Suite::Identity4 => "identity4",
            Suite::Averaging => "averaging",
            Suite::Witnesses => "witnesses",
            Suite::Sandwich => "sandwich",
            Suite::Thresholds => "thresholds",
            Suite::Octahedron => "octahedron",
            Suite::Monotonicity => "monotonicity",
        }
    }

    /// Case count used when none is given.
    pub fn default_cases(self) -> usize {
        match self {
            Suite::Holder => 10_000,
            Suite::Identity4 => 1_000,
            Suite::Averaging => 1_000,
            Suite::Witnesses => 2_000,
            Suite::Sandwich => 1,
            Suite::Thresholds => 10_000,
            Suite::Octahedron => 4,
            Suite::Monotonicity => 200,
        }
    }

    pub fn default_budget(self) -> Budget {
        match self {
            Suite::Octahedron => Budget { restarts: 8, iterations: 600 },
            Suite::Monotonicity => Budget { restarts: 3, iterations: 100 },
            _ => Budget { restarts: 2, iterations: 100 },
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                invalid(format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub budget: Option<Budget>,
    /// Overrides the suite's case count (per-grid-point count for averaging
    /// and sandwich grids).
    pub cases: Option<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, budget: None, cases: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub version: u32,
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    pub failure_examples: Vec<String>,
    pub details: serde_json::Value,
    pub elapsed_ms: u128,
}

struct Tally {
    cases: usize,
    failures: usize,
    examples: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, failures: 0, examples: Vec::new() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(what());
            }
        }
    }

    fn merge(&mut self, o: Tally) {
        self.cases += o.cases;
        self.failures += o.failures;
        for e in o.examples {
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(e);
            }
        }
    }
}

pub(crate) fn case_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Reciprocal in `[lo, hi]` with atoms at both ends and at 1/2 when inside.
fn recip_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    if u < 0.08 {
        lo
    } else if u < 0.16 {
        hi
    } else if u < 0.26 && (lo..=hi).contains(&0.5) {
        0.5
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Admissible two-ball query with sides up to `max_side`.
pub(crate) fn random_query(rng: &mut impl Rng, max_side: usize) -> WidthQuery {
    loop {
        let m = rng.random_range(1..=max_side);
        let k = rng.random_range(1..=max_side);
        if m * k < 2 {
            continue;
        }
        let n = rng.random_range(0..=(m * k / 2) as u64);
        let rq = rng.random_range(0.125..=0.5);
        let rs = rng.random_range(0.125..=0.5);
        let ball = |rng: &mut _| -> Result<ExponentPair> {
            Ok(ExponentPair::from_exponents(
                Exponent::from_recip(recip_in(rng, rq, 1.0))?,
                Exponent::from_recip(recip_in(rng, rs, 1.0))?,
            ))
        };
        let (Ok(e1), Ok(e2)) = (ball(rng), ball(rng)) else { continue };
        let nu2 = rng.random_range(-6.0..6.0f64).exp();
        let target = ExponentPair::from_exponents(
            Exponent::from_recip(rq).expect("in range"),
            Exponent::from_recip(rs).expect("in range"),
        );
        if let Ok(q) = WidthQuery::new(Shape::new(m, k).expect("positive"), n, target, &[(1.0, e1), (nu2, e2)]) {
            return q;
        }
    }
}

fn finish(suite: Suite, opts: &SuiteOptions, t: Tally, ok_extra: bool, details: serde_json::Value, start: Instant) -> SuiteReport {
    SuiteReport {
        version: REPORT_VERSION,
        suite,
        seed: opts.seed,
        passed: t.failures == 0 && ok_extra && t.cases > 0,
        cases: t.cases,
        failures: t.failures,
        failure_examples: t.examples,
        details,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    let start = Instant::now();
    let cases = opts.cases.unwrap_or(suite.default_cases());
    if cases == 0 {
        return Err(invalid("case count must be positive"));
    }
    let budget = opts.budget.unwrap_or(suite.default_budget());
    Budget::new(budget.restarts, budget.iterations)?;
    match suite {
        Suite::Holder => holder(opts, cases, start),
        Suite::Identity4 => identity4(opts, cases, start),
        Suite::Averaging => averaging(opts, cases, start),
        Suite::Witnesses => witnesses(opts, cases, start),
        Suite::Sandwich => sandwich(opts, budget, start),
        Suite::Thresholds => thresholds(opts, cases, start),
        Suite::Octahedron => octahedron(opts, budget, start),
        Suite::Monotonicity => monotonicity(opts, cases, budget, start),
    }
}

fn holder(opts: &SuiteOptions, cases: usize, start: Instant) -> Result<SuiteReport> {
    let rows: Vec<(bool, f64, String)> = (0..cases as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(opts.seed, i);
            let shape = Shape::new(rng.random_range(1..=8), rng.random_range(1..=8)).expect("positive");
            let spread = rng.random_range(-2.0..2.0f64).exp();
            let x = MixedMatrix::from_fn(shape, |_, _| {
                if rng.random::<f64>() < 0.2 {
                    0.0
                } else {
                    spread * rng.sample::<f64, _>(StandardNormal)
                }
            });
            let pair = |rng: &mut ChaCha8Rng| {
                ExponentPair::from_exponents(
                    Exponent::from_recip(recip_in(rng, 0.0, 1.0)).expect("in range"),
                    Exponent::from_recip(recip_in(rng, 0.0, 1.0)).expect("in range"),
                )
            };
            let (e1, e2) = (pair(&mut rng), pair(&mut rng));
            let lambda = recip_in(&mut rng, 0.0, 1.0);
            let gap = interpolation_inequality_gap(&x, e1, e2, lambda).expect("valid lambda");
            (gap >= -1e-9, gap, format!("case {i}: gap {gap:e} at {e1:?} {e2:?} lambda {lambda}"))
        })
        .collect();
    let mut t = Tally::new();
    let mut worst = f64::INFINITY;
    for (ok, gap, msg) in rows {
        worst = worst.min(gap);
        t.record(ok, || msg);
    }
    Ok(finish(Suite::Holder, opts, t, true, json!({ "min_gap": worst, "tolerance": 1e-9 }), start))
}

fn identity4(opts: &SuiteOptions, cases: usize, start: Instant) -> Result<SuiteReport> {
    let rows: Vec<(bool, f64, String)> = (0..cases as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(opts.seed, i);
            loop {
                let rq = rng.random_range(0.05..=0.5);
                let rs = rng.random_range(0.05..=0.5);
                let target = ExponentPair::from_exponents(
                    Exponent::from_recip(rq).expect("in range"),
                    Exponent::from_recip(rs).expect("in range"),
                );
                let ball = |rng: &mut ChaCha8Rng| {
                    ExponentPair::from_exponents(
                        Exponent::from_recip(rng.random_range(rq..=1.0)).expect("in range"),
                        Exponent::from_recip(rng.random_range(rs..=1.0)).expect("in range"),
                    )
                };
                let (e1, e2) = (ball(&mut rng), ball(&mut rng));
                let Some(sol) = solve_phi5_lambda(e1, e2, target) else { continue };
                let d = sol.derived_exponents;
                let m = rng.random_range(1..=500usize);
                let k = rng.random_range(1..=500usize);
                let n = rng.random_range(1..=(m * k) as u64);
                let Ok(v) = identity_1234_values(d.p, d.theta, target.p, target.theta, m, k, n) else {
                    continue;
                };
                let hi = v.iter().copied().fold(f64::MIN, f64::max);
                let lo = v.iter().copied().fold(f64::MAX, f64::min);
                let rel = hi / lo - 1.0;
                return (rel <= 1e-12, rel, format!("case {i}: values {v:?} at {d:?}, {m}x{k}, n={n}"));
            }
        })
        .collect();
    let mut t = Tally::new();
    let mut worst = 0.0_f64;
    for (ok, rel, msg) in rows {
        worst = worst.max(rel);
        t.record(ok, || msg);
    }
    Ok(finish(Suite::Identity4, opts, t, true, json!({ "max_relative_spread": worst, "tolerance": 1e-12 }), start))
}

/// `E[x x^T]` over the signed orbit of the `r`-row block pattern in
/// dimension `m`: subsets are enumerated, and independent uniform signs
/// leave only the diagonal of each subset.
fn side_moment(m: usize, r: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(m, m);
    let mut count = 0.0;
    for rows in itertools::Itertools::combinations(0..m, r) {
        for &i in &rows {
            acc[(i, i)] += 1.0;
        }
        count += 1.0;
    }
    acc / count
}

pub(crate) fn tiny_shapes(max_len: usize) -> Vec<Shape> {
    (1..=max_len)
        .flat_map(|m| (1..=max_len / m).map(move |k| (m, k)))
        .filter(|&(m, k)| m * k >= 2)
        .map(|(m, k)| Shape::new(m, k).expect("positive"))
        .collect()
}

fn averaging(opts: &SuiteOptions, per_n: usize, start: Instant) -> Result<SuiteReport> {
    let grid: Vec<(Shape, usize)> = tiny_shapes(16)
        .into_iter()
        .flat_map(|s| (0..=s.len()).map(move |n| (s, n)))
        .collect();
    let mut sides: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
    for s in tiny_shapes(16) {
        for (d, r) in (1..=s.m).map(|r| (s.m, r)).chain((1..=s.k).map(|l| (s.k, l))) {
            sides.entry((d, r)).or_insert_with(|| side_moment(d, r));
        }
    }
    let rows: Vec<(Tally, f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(gi, &(shape, n))| {
            let (m, k) = (shape.m, shape.k);
            let d = m * k;
            // second moment of V_{r,l} is the Kronecker product of the side moments
            let moments: Vec<(usize, usize, DMatrix<f64>)> = (1..=m)
                .flat_map(|r| (1..=k).map(move |l| (r, l)))
                .map(|(r, l)| (r, l, sides[&(k, l)].kronecker(&sides[&(m, r)])))
                .collect();
            let mut rng = case_rng(opts.seed, gi as u64);
            let mut t = Tally::new();
            let mut slack = f64::INFINITY;
            for s in 0..per_n {
                let b = Subspace::random(d, n, &mut rng);
                let p = b.basis() * b.basis().transpose();
                for (r, l, mm) in &moments {
                    let mean = mm.trace() - mm.dot(&p);
                    let want = (r * l) as f64 * (1.0 - n as f64 / d as f64);
                    slack = slack.min(mean - want);
                    t.record(mean >= want - 1e-9, || {
                        format!("{m}x{k} n={n} r={r} l={l} subspace {s}: mean {mean} < {want}")
                    });
                }
            }
            (t, slack)
        })
        .collect();
    let mut t = Tally::new();
    let mut slack = f64::INFINITY;
    for (x, s) in rows {
        t.merge(x);
        slack = slack.min(s);
    }
    let details = json!({ "grid_points": grid.len(), "subspaces_per_point": per_n, "min_slack": slack });
    Ok(finish(Suite::Averaging, opts, t, true, details, start))
}

fn witnesses(opts: &SuiteOptions, cases: usize, start: Instant) -> Result<SuiteReport> {
    const BATCH: usize = 500;
    const HARD_CAP: usize = 40_000;
    let mut t = Tally::new();
    let mut by_case: BTreeMap<String, usize> = BTreeMap::new();
    let mut by_sub: BTreeMap<String, usize> = BTreeMap::new();
    let mut inconsistent = 0;
    let mut worst: f64 = 0.0;
    let mut control: Option<(bool, f64)> = None;
    let mut next = 0usize;
    let covered = |c: &BTreeMap<String, usize>| CaseId::ALL.iter().all(|id| c.contains_key(id.label()));
    while next < HARD_CAP && (t.cases < cases || !covered(&by_case)) {
        let rows: Vec<_> = (next..next + BATCH)
            .into_par_iter()
            .map(|i| {
                let mut rng = case_rng(opts.seed, i as u64);
                let q = random_query(&mut rng, 40);
                let p = predict_active_term(&q)?;
                let w = build_witness(&q)?;
                let v = match &w {
                    Some(w) => Some(verify_witness_detailed(w, &q.balls, 1e-9)?),
                    None => None,
                };
                Ok((i, q, p, w, v))
            })
            .collect::<Result<Vec<_>>>()?;
        next += BATCH;
        for (i, q, p, w, v) in rows {
            *by_case.entry(p.case.label().to_string()).or_default() += 1;
            let key = format!("{}{}/{:?}", p.case.label(), if p.mirrored { "m" } else { "" }, p.subcase);
            *by_sub.entry(key).or_default() += 1;
            match (w, v) {
                (Some(w), Some(v)) => {
                    worst = worst.max(v.worst_ratio);
                    inconsistent += usize::from(!w.regime_consistent);
                    t.record(v.passed, || format!("case {i}: {} ratio {} for {q:?}", w.label, v.worst_ratio));
                    if control.is_none() && v.passed && v.worst_ratio > 0.0 {
                        // push the vertex norm to twice the allowance
                        let bad = w.with_scale(w.scale * 2.0 / v.worst_ratio);
                        let c = verify_witness_detailed(&bad, &q.balls, 1e-9)?;
                        control = Some((!c.passed && c.offending.is_some(), c.worst_ratio));
                    }
                }
                _ => t.record(false, || format!("case {i}: no witness for {} {q:?}", p.label)),
            }
        }
    }
    let missing: Vec<&str> =
        CaseId::ALL.iter().map(|c| c.label()).filter(|c| !by_case.contains_key(*c)).collect();
    let control_ok = control.is_some_and(|c| c.0);
    let details = json!({
        "cases_by_id": by_case,
        "cases_by_subcase": by_sub,
        "missing_cases": missing,
        "worst_ratio": worst,
        "regime_inconsistent": inconsistent,
        "negative_control": { "rejected": control_ok, "ratio": control.map(|c| c.1) },
        "tolerance": 1e-9,
    });
    Ok(finish(Suite::Witnesses, opts, t, missing.is_empty() && control_ok, details, start))
}

fn sandwich(opts: &SuiteOptions, budget: Budget, start: Instant) -> Result<SuiteReport> {
    let grid: Vec<(Shape, u64)> = tiny_shapes(16)
        .into_iter()
        .flat_map(|s| (0..=(s.len() / 2) as u64).map(move |n| (s, n)))
        .collect();
    let per_point = opts.cases.unwrap_or(1);
    let jobs: Vec<(usize, Shape, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(gi, &(s, n))| (0..per_point).map(move |j| (gi * per_point + j, s, n)))
        .collect();
    let rows: Vec<_> = jobs
        .par_iter()
        .map(|&(i, shape, n)| {
            let mut rng = case_rng(opts.seed, i as u64);
            let q = loop {
                let mut c = random_query(&mut rng, 4);
                c.shape = shape;
                c.n = n;
                for b in &mut c.balls {
                    b.shape = shape;
                }
                if c.validate().is_ok() {
                    break c;
                }
            };
            sandwich_check(&q, budget, opts.seed.wrapping_add(i as u64)).map(|r| (i, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    let mut by_cert: BTreeMap<String, usize> = BTreeMap::new();
    let mut tight = 0.0_f64;
    for (i, r) in rows {
        *by_cert.entry(r.certificate.clone()).or_default() += 1;
        if r.upper > 0.0 {
            tight = tight.max(r.lower / r.upper);
        }
        t.record(r.passed, || format!("query {i} ({}x{}, n={}): A {} > U {}", r.m, r.k, r.n, r.lower, r.upper));
    }
    let details = json!({
        "grid_points": grid.len(),
        "queries_per_point": per_point,
        "budget": budget.to_string(),
        "certificates": by_cert,
        "max_lower_over_upper": tight,
        "tolerance": crate::numeric::SANDWICH_TOL,
    });
    Ok(finish(Suite::Sandwich, opts, t, true, details, start))
}

/// `log` of `(n^{1/2} m^{-1/q} k^{-1/σ})^{Δ/(1/2 - 1/t)}` for reciprocal gap `Δ`.
fn log_ratio_threshold(q: &WidthQuery, delta: f64, rt: f64) -> f64 {
    let (m, k, n) = (q.shape.m as f64, q.shape.k as f64, q.n as f64);
    let ls = 0.5 * n.ln() - q.target.p.recip() * m.ln() - q.target.theta.recip() * k.ln();
    ls * delta / (0.5 - rt)
}

/// Log ratio `ν1/ν2` at which `log Φ_a - log Φ_b` changes sign, by bisection.
fn flip_point(q: &WidthQuery, a: usize, b: usize, lo: f64, hi: f64) -> Result<f64> {
    let diff = |lr: f64| -> Result<f64> {
        let mut c = q.clone();
        c.balls[0].nu = lr.exp();
        c.balls[1].nu = 1.0;
        let v = log_phis_at(&c, c.n as f64)?;
        Ok(v[a - 1] - v[b - 1])
    };
    let (mut lo, mut hi) = (lo, hi);
    let dlo = diff(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (diff(mid)? < 0.0) == (dlo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Case-3 query in the central regime, with `λ` kept away from 0 and 1.
fn central_case3(rng: &mut impl Rng) -> Option<(WidthQuery, f64)> {
    let rq = rng.random_range(0.1..0.45);
    let rs = rng.random_range(0.1..0.45);
    let recip = |lam: f64, rt: f64| rt + lam * (0.5 - rt);
    let (a1, b1): (f64, f64) = (rng.random(), rng.random());
    let (a2, b2): (f64, f64) = (rng.random(), rng.random());
    // λ_{p1,q} < λ_{θ1,σ}, λ_{p2,q} > λ_{θ2,σ}
    let (a1, b1) = (a1.min(b1), a1.max(b1));
    let (a2, b2) = (a2.max(b2), a2.min(b2));
    if b1 - a1 < 0.05 || a2 - b2 < 0.05 {
        return None;
    }
    let mk = |lp, lt| {
        ExponentPair::from_exponents(
            Exponent::from_recip(recip(lp, rq)).expect("in range"),
            Exponent::from_recip(recip(lt, rs)).expect("in range"),
        )
    };
    let (e1, e2) = (mk(a1, b1), mk(a2, b2));
    let target = ExponentPair::from_exponents(
        Exponent::from_recip(rq).expect("in range"),
        Exponent::from_recip(rs).expect("in range"),
    );
    let lam = solve_phi5_lambda(e1, e2, target)?.parameter;
    if !(0.02..=0.98).contains(&lam) {
        return None;
    }
    let m = rng.random_range(8..=400usize) as f64;
    let k = rng.random_range(8..=400usize) as f64;
    let a = m.powf(2.0 * rq) * k.powf(2.0 * rs);
    let hi = (m * k.powf(2.0 * rs)).min(k * m.powf(2.0 * rq)).min(m * k / 2.0);
    let (lo, hi) = (a.ceil() as u64 + 1, hi.floor() as u64);
    if lo + 1 >= hi {
        return None;
    }
    let n = rng.random_range(lo..hi);
    let shape = Shape::new(m as usize, k as usize).expect("positive");
    let q = WidthQuery::new(shape, n, target, &[(1.0, e1), (1.0, e2)]).ok()?;
    Some((q, lam))
}

fn thresholds(opts: &SuiteOptions, cases: usize, start: Instant) -> Result<SuiteReport> {
    // flip locations of Φ1 vs Φ5 and Φ5 vs Φ2 in the central regime of case 3
    let flips: Vec<(Tally, f64)> = (0..cases as u64)
        .into_par_iter()
        .map(|i| -> Result<(Tally, f64)> {
            let mut rng = case_rng(opts.seed, i);
            let (q, _) = loop {
                if let Some(x) = central_case3(&mut rng) {
                    break x;
                }
            };
            let (e1, e2) = (q.balls[0].exps, q.balls[1].exps);
            let r1 = log_ratio_threshold(&q, e1.p.recip() - e2.p.recip(), q.target.p.recip());
            let r2 = log_ratio_threshold(&q, e1.theta.recip() - e2.theta.recip(), q.target.theta.recip());
            let mut t = Tally::new();
            let mut worst = 0.0_f64;
            for (a, b, r) in [(1, 5, r1), (5, 2, r2)] {
                let found = flip_point(&q, a, b, r - 2.0, r + 2.0)?;
                let rel = (found - r).exp() - 1.0;
                worst = worst.max(rel.abs());
                t.record(rel.abs() <= 1e-9, || format!("case {i}: Φ{a}/Φ{b} flips at {found} not {r}"));
                for (off, want_le) in [(-0.5, true), (0.5, false)] {
                    let mut c = q.clone();
                    c.balls[0].nu = (r + off).exp();
                    let v = log_phis_at(&c, c.n as f64)?;
                    let le = v[a - 1] <= v[b - 1];
                    t.record(le == want_le, || format!("case {i}: wrong side of Φ{a}/Φ{b} at offset {off}"));
                }
            }
            Ok((t, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let preds: Vec<(Tally, bool)> = (0..cases as u64)
        .into_par_iter()
        .map(|i| -> Result<(Tally, bool)> {
            let mut rng = case_rng(opts.seed ^ 0x5eed, i);
            let q = random_query(&mut rng, 60);
            let p = predict_active_term(&q)?;
            let mut t = Tally::new();
            if !p.boundary {
                let phis = phi_all(&q)?;
                let min = phis.iter().copied().fold(f64::INFINITY, f64::min);
                let ok = phis[p.j - 1] <= min * (1.0 + 1e-9);
                t.record(ok, || format!("case {i}: predicted Φ{} = {} above min {min} ({})", p.j, phis[p.j - 1], p.label));
            }
            Ok((t, p.boundary))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally::new();
    let mut worst = 0.0_f64;
    for (x, w) in flips {
        t.merge(x);
        worst = worst.max(w);
    }
    let mut boundary = 0;
    let mut checked = 0;
    for (x, b) in preds {
        checked += x.cases;
        boundary += usize::from(b);
        t.merge(x);
    }
    let details = json!({
        "flip_queries": cases,
        "max_relative_flip_error": worst,
        "prediction_queries": cases,
        "prediction_checked": checked,
        "prediction_boundary_skipped": boundary,
    });
    Ok(finish(Suite::Thresholds, opts, t, true, details, start))
}

fn octahedron(opts: &SuiteOptions, budget: Budget, start: Instant) -> Result<SuiteReport> {
    let f = VertexFamily::new(Shape::new(2, 2)?, 1, 1, Enumeration::Full)?;
    let e = ExponentPair::new(2.0, 2.0)?;
    let mut t = Tally::new();
    let mut values = Vec::new();
    for n in 0..4usize {
        let run = crate::numeric::WidthRun::new(PointSource::Vertices { family: f.clone(), scale: 1.0 }, n, e, budget, opts.seed);
        let got = crate::numeric::estimate_width(run)?.value().unwrap_or(f64::NAN);
        let want = (1.0 - n as f64 / 4.0).sqrt();
        values.push(json!({ "n": n, "estimate": got, "exact": want }));
        t.record(got >= want - 1e-9 && got - want <= 5e-3, || format!("n={n}: {got} vs {want}"));
    }
    Ok(finish(Suite::Octahedron, opts, t, true, json!({ "values": values, "budget": budget.to_string() }), start))
}

fn monotonicity(opts: &SuiteOptions, cases: usize, budget: Budget, start: Instant) -> Result<SuiteReport> {
    let mut t = Tally::new();
    // order formula over the full n range
    let rows: Vec<Tally> = (0..cases as u64)
        .into_par_iter()
        .map(|i| -> Result<Tally> {
            let mut rng = case_rng(opts.seed, i);
            let q = random_query(&mut rng, 30);
            let mut t = Tally::new();
            for b in &q.balls {
                let mut prev = f64::INFINITY;
                for n in 0..=(q.shape.len() / 2) as u64 {
                    let v = theorem_a_estimate(q.shape, n, b.exps, q.target)?.value;
                    t.record(v <= prev * (1.0 + 1e-12), || format!("case {i}: d_n rises at n={n}: {prev} -> {v}"));
                    prev = v;
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    for x in rows {
        t.merge(x);
    }
    // numeric estimate over the full n range on small sets
    let s23 = Shape::new(2, 3)?;
    let sources = [
        (PointSource::Vertices { family: VertexFamily::new(Shape::new(2, 2)?, 1, 1, Enumeration::Full)?, scale: 1.0 }, ExponentPair::new(2.0, 2.0)?),
        (PointSource::Vertices { family: VertexFamily::new(s23, 1, 2, Enumeration::Full)?, scale: 1.0 }, ExponentPair::new(3.0, 4.0)?),
        (
            PointSource::BallBoundary {
                ball: crate::mixed_norm::BallSpec::new(1.0, ExponentPair::new(1.5, 3.0)?, s23)?,
                count: 6,
                seed: opts.seed,
            },
            ExponentPair::new(4.0, 4.0)?,
        ),
    ];
    let mut profiles = Vec::new();
    for (src, e) in sources {
        let d = src.shape().len();
        let runs = width_profile(src, 0..=d, e, budget, opts.seed)?;
        let vals: Vec<f64> = runs.iter().map(|r| r.value().unwrap_or(f64::NAN)).collect();
        for w in vals.windows(2) {
            t.record(w[1] <= w[0] + 1e-9, || format!("width rises: {} -> {}", w[0], w[1]));
        }
        profiles.push(vals);
    }
    Ok(finish(Suite::Monotonicity, opts, t, true, json!({ "formula_queries": cases, "width_profiles": profiles }), start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn side_moment_matches_signed_enumeration() {
        for (m, r) in [(5, 2), (4, 4), (6, 1), (3, 2)] {
            let mut acc = DMatrix::<f64>::zeros(m, m);
            let mut count = 0.0;
            for rows in itertools::Itertools::combinations(0..m, r) {
                for mask in 0..(1u32 << r) {
                    let x: Vec<f64> = (0..r).map(|b| if mask >> b & 1 == 1 { -1.0 } else { 1.0 }).collect();
                    for (a, &i) in rows.iter().enumerate() {
                        for (b, &j) in rows.iter().enumerate() {
                            acc[(i, j)] += x[a] * x[b];
                        }
                    }
                    count += 1.0;
                }
            }
            assert!((side_moment(m, r) - acc / count).norm() < 1e-14);
        }
    }

    #[test]
    fn small_runs_pass() {
        for s in [Suite::Holder, Suite::Identity4, Suite::Thresholds] {
            let r = run_suite(s, &SuiteOptions { seed: 3, budget: None, cases: Some(50) }).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
