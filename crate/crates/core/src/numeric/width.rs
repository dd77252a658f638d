use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{solve_dist, DistSolve};
use super::sampling::ball_boundary_sample;
use super::subspace::{orthonormalize, Subspace};
use crate::error::{invalid, Result};
use crate::extremal::{orbit_patterns, VertexFamily};
use crate::mixed_norm::{BallSpec, ExponentPair, MixedMatrix, Shape};

const INNER_TOL: f64 = 1e-10;
const INNER_MAX_ITER: usize = 200;
// inner solves during descent; any coefficients give a valid upper bound
const DESCENT_TOL: f64 = 1e-7;
const DESCENT_MAX_ITER: usize = 25;
const PLATEAU_WINDOW: usize = 50;
const PLATEAU_REL: f64 = 1e-7;

/// Restarts × iterations per restart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Budget {
    pub const DEFAULT: Budget = Budget { restarts: 32, iterations: 2000 };

    pub fn new(restarts: usize, iterations: usize) -> Result<Self> {
        if restarts == 0 || iterations == 0 {
            return Err(invalid("budget must have at least one restart and one iteration"));
        }
        Ok(Budget { restarts, iterations })
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.restarts, self.iterations)
    }
}

impl FromStr for Budget {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| invalid(format!("budget {s:?} is not of the form RxI")))?;
        let parse = |t: &str| {
            t.trim().parse::<usize>().map_err(|_| invalid(format!("bad budget component {t:?}")))
        };
        Budget::new(parse(a)?, parse(b)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointSource {
    /// `scale·V_{r,l}`; certified only when the family is fully enumerated.
    Vertices { family: VertexFamily, scale: f64 },
    /// Boundary sample of one ball; the result is heuristic.
    BallBoundary { ball: BallSpec, count: usize, seed: u64 },
    Explicit {
        shape: Shape,
        #[serde(skip)]
        points: Vec<MixedMatrix>,
        count: usize,
    },
}

impl PointSource {
    pub fn explicit(points: Vec<MixedMatrix>) -> Result<Self> {
        let shape = points.first().ok_or_else(|| invalid("no points"))?.shape();
        if points.iter().any(|p| p.shape() != shape) {
            return Err(invalid("points have different shapes"));
        }
        Ok(PointSource::Explicit { shape, count: points.len(), points })
    }

    pub fn shape(&self) -> Shape {
        match self {
            PointSource::Vertices { family, .. } => family.shape,
            PointSource::BallBoundary { ball, .. } => ball.shape,
            PointSource::Explicit { shape, .. } => *shape,
        }
    }

    pub fn points(&self) -> Vec<MixedMatrix> {
        match self {
            PointSource::Vertices { family, scale } => orbit_patterns(family)
                .map(|v| v.to_matrix(family.shape).scaled(*scale))
                .collect(),
            PointSource::BallBoundary { ball, count, seed } => {
                ball_boundary_sample(ball, *count, *seed)
            }
            PointSource::Explicit { points, .. } => points.clone(),
        }
    }

    /// Whether the sup over the points is the sup over the whole set.
    pub fn is_exhaustive(&self) -> bool {
        match self {
            PointSource::Vertices { family, .. } => family.is_full(),
            PointSource::BallBoundary { .. } => false,
            PointSource::Explicit { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WidthResult {
    /// `max_x dist(x, L)` at the best subspace found.
    pub value: f64,
    pub subspace: Subspace,
    pub restart_best: Vec<f64>,
    /// Best-so-far value per iteration, one trace per restart.
    pub logs: Vec<Vec<f64>>,
    /// "certified upper bound" or "heuristic upper bound".
    pub bound_kind: String,
    pub inner_nonconverged: usize,
    #[serde(skip)]
    pub(crate) coeffs: Vec<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WidthRun {
    pub source: PointSource,
    pub n: usize,
    pub target: ExponentPair,
    pub budget: Budget,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<WidthResult>,
}

impl WidthRun {
    pub fn new(source: PointSource, n: usize, target: ExponentPair, budget: Budget, seed: u64) -> Self {
        WidthRun { source, n, target, budget, seed, result: None }
    }

    pub fn value(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.value)
    }
}

fn restart_rng(seed: u64, n: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | restart as u64);
    rng
}

struct Problem<'a> {
    points: &'a [DVector<f64>],
    m: usize,
    e: ExponentPair,
}

impl Problem<'_> {
    fn eval(&self, b: &DMatrix<f64>, warm: Option<&[DVector<f64>]>, tight: bool) -> Vec<DistSolve> {
        let (tol, cap) = if tight { (INNER_TOL, INNER_MAX_ITER) } else { (DESCENT_TOL, DESCENT_MAX_ITER) };
        self.points
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let w = warm.map(|w| &w[i]);
                solve_dist(x, b, self.m, self.e, tol, w, cap)
            })
            .collect()
    }
}

fn max_value(s: &[DistSolve]) -> f64 {
    s.iter().map(|d| d.value).fold(0.0, f64::max)
}

fn soft_max(s: &[DistSolve], temp: f64) -> f64 {
    let top = max_value(s);
    let z: f64 = s.iter().map(|d| ((d.value - top) / temp).exp()).sum();
    top + temp * z.ln()
}

struct RestartOut {
    best: f64,
    basis: DMatrix<f64>,
    coeffs: Vec<DVector<f64>>,
    log: Vec<f64>,
    nonconverged: usize,
}

/// Soft-max descent over orthonormal bases with adaptive steps.
fn descend(
    prob: &Problem,
    init: DMatrix<f64>,
    warm: Option<&[DVector<f64>]>,
    iterations: usize,
) -> RestartOut {
    let mut b = init;
    let mut sols = prob.eval(&b, warm, false);
    let mut best = max_value(&sols);
    let mut best_b = b.clone();
    let mut best_c: Vec<DVector<f64>> = sols.iter().map(|s| s.coeffs.clone()).collect();
    let mut log = vec![best];
    let mut temp = 0.1 * best;
    let mut eta = 0.1;
    let mut plateau_ref = best;
    for it in 1..=iterations {
        if best <= 1e-14 || b.ncols() == 0 {
            break;
        }
        let top = max_value(&sols);
        let w: Vec<f64> = sols.iter().map(|s| ((s.value - top) / temp).exp()).collect();
        let z: f64 = w.iter().sum();
        let mut g = DMatrix::<f64>::zeros(b.nrows(), b.ncols());
        for (s, wi) in sols.iter().zip(&w) {
            if *wi / z > 1e-16 {
                g.ger(-wi / z, &s.norm_grad, &s.coeffs, 1.0);
            }
        }
        let btg = b.transpose() * &g;
        g -= &b * btg;
        let gn = g.norm();
        if gn > 1e-300 {
            let trial = orthonormalize(&b - &g * (eta / gn));
            let cw: Vec<DVector<f64>> = sols.iter().map(|s| s.coeffs.clone()).collect();
            let tsols = prob.eval(&trial, Some(&cw), false);
            if soft_max(&tsols, temp) < soft_max(&sols, temp) {
                b = trial;
                sols = tsols;
                eta = (eta * 1.5).min(1.0);
                let v = max_value(&sols);
                if v < best {
                    best = v;
                    best_b = b.clone();
                    best_c = sols.iter().map(|s| s.coeffs.clone()).collect();
                }
            } else {
                eta *= 0.5;
            }
        }
        if eta < 1e-9 || gn <= 1e-300 {
            eta = 0.05;
            temp *= 0.5;
        }
        log.push(best);
        if it % PLATEAU_WINDOW == 0 {
            if plateau_ref - best < PLATEAU_REL * plateau_ref {
                temp *= 0.5;
            }
            plateau_ref = best;
        }
    }
    let final_sols = prob.eval(&best_b, Some(&best_c), true);
    let nonconverged = final_sols.iter().filter(|s| !s.converged).count();
    let v = max_value(&final_sols);
    // re-evaluation from the stored coefficients can only lower the values
    if v <= best {
        best = v;
        best_c = final_sols.into_iter().map(|s| s.coeffs).collect();
    }
    RestartOut { best, basis: best_b, coeffs: best_c, log, nonconverged }
}

fn run_core(
    run: &WidthRun,
    start: Option<(&Subspace, &[DVector<f64>])>,
) -> Result<WidthResult> {
    let shape = run.source.shape();
    let d = shape.len();
    let points: Vec<DVector<f64>> =
        run.source.points().iter().map(|x| DVector::from_column_slice(x.as_slice())).collect();
    if points.is_empty() {
        return Err(invalid("point source is empty"));
    }
    let bound_kind = if run.source.is_exhaustive() {
        "certified upper bound"
    } else {
        "heuristic upper bound"
    }
    .to_string();
    if run.n >= d {
        return Ok(WidthResult {
            value: 0.0,
            subspace: Subspace::from_orthonormal_unchecked(DMatrix::identity(d, d)),
            restart_best: vec![0.0],
            logs: vec![vec![0.0]],
            bound_kind,
            inner_nonconverged: 0,
            coeffs: points.clone(),
        });
    }
    let prob = Problem { points: &points, m: shape.m, e: run.target };
    let restarts = if run.n == 0 { 1 } else { run.budget.restarts };
    let outs: Vec<RestartOut> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(run.seed, run.n, i);
            match (i, start) {
                (0, Some((s, c))) => {
                    let ext = s.extended(&mut rng).expect("n < mk");
                    let warm: Vec<DVector<f64>> = c
                        .iter()
                        .map(|v| {
                            let mut w = DVector::zeros(run.n);
                            w.rows_mut(0, v.len()).copy_from(v);
                            w
                        })
                        .collect();
                    descend(&prob, ext.basis().clone(), Some(&warm), run.budget.iterations)
                }
                _ => {
                    let s = Subspace::random(d, run.n, &mut rng);
                    descend(&prob, s.basis().clone(), None, run.budget.iterations)
                }
            }
        })
        .collect();
    let mut best_i = 0;
    for (i, o) in outs.iter().enumerate() {
        if o.best < outs[best_i].best {
            best_i = i;
        }
    }
    let restart_best = outs.iter().map(|o| o.best).collect();
    let inner_nonconverged = outs[best_i].nonconverged;
    let logs = outs.iter().map(|o| o.log.clone()).collect();
    let o = outs.into_iter().nth(best_i).expect("at least one restart");
    Ok(WidthResult {
        value: o.best,
        subspace: Subspace::from_orthonormal_unchecked(o.basis),
        restart_best,
        logs,
        bound_kind,
        inner_nonconverged,
        coeffs: o.coeffs,
    })
}

/// Upper bound on `d_n` of the point set: the best `max_x dist(x, L)` found
/// by soft-max descent over random restarts.
pub fn estimate_width(mut run: WidthRun) -> Result<WidthRun> {
    Budget::new(run.budget.restarts, run.budget.iterations)?;
    run.result = Some(run_core(&run, None)?);
    Ok(run)
}

/// Runs `n = lo..=hi`, seeding the first restart at `n+1` with the best
/// subspace at `n` plus one direction, so values never increase with `n`.
pub fn width_profile(
    source: PointSource,
    ns: std::ops::RangeInclusive<usize>,
    target: ExponentPair,
    budget: Budget,
    seed: u64,
) -> Result<Vec<WidthRun>> {
    Budget::new(budget.restarts, budget.iterations)?;
    let mut out: Vec<WidthRun> = Vec::new();
    for n in ns {
        let mut run = WidthRun::new(source.clone(), n, target, budget, seed);
        let prev = out.last().and_then(|r: &WidthRun| {
            let res = r.result.as_ref()?;
            (r.n + 1 == n && res.subspace.dim() == r.n).then_some(res)
        });
        let start = prev.map(|res| (&res.subspace, res.coeffs.as_slice()));
        run.result = Some(run_core(&run, start)?);
        out.push(run);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::Enumeration;

    fn octa(n: usize, budget: Budget) -> f64 {
        let f = VertexFamily::new(Shape::new(2, 2).unwrap(), 1, 1, Enumeration::Full).unwrap();
        let src = PointSource::Vertices { family: f, scale: 1.0 };
        let run = WidthRun::new(src, n, ExponentPair::new(2.0, 2.0).unwrap(), budget, 11);
        estimate_width(run).unwrap().value().unwrap()
    }

    #[test]
    fn budget_parsing() {
        assert_eq!("4x200".parse::<Budget>().unwrap(), Budget { restarts: 4, iterations: 200 });
        assert!("0x5".parse::<Budget>().is_err());
        assert!("12".parse::<Budget>().is_err());
        assert_eq!(Budget::DEFAULT.to_string(), "32x2000");
    }

    #[test]
    fn octahedron_widths() {
        let b = Budget::new(8, 600).unwrap();
        for n in 0..4 {
            let want = (1.0 - n as f64 / 4.0).sqrt();
            let got = octa(n, b);
            assert!(got >= want - 1e-9, "n={n}: {got} below the exact width {want}");
            assert!(got - want < 5e-3, "n={n}: {got} vs {want}");
        }
        assert_eq!(octa(4, b), 0.0);
    }

    #[test]
    fn zero_dim_is_max_norm() {
        let f = VertexFamily::new(Shape::new(3, 3).unwrap(), 2, 3, Enumeration::Full).unwrap();
        let e = ExponentPair::new(4.0, 3.0).unwrap();
        let run = WidthRun::new(PointSource::Vertices { family: f, scale: 1.0 }, 0, e, Budget::new(2, 5).unwrap(), 0);
        let v = estimate_width(run).unwrap().value().unwrap();
        assert!((v - 2f64.powf(0.25) * 3f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_logs() {
        let f = VertexFamily::new(Shape::new(2, 3).unwrap(), 1, 2, Enumeration::Full).unwrap();
        let e = ExponentPair::new(3.0, 4.0).unwrap();
        let mk = || {
            let run = WidthRun::new(PointSource::Vertices { family: f, scale: 1.0 }, 2, e, Budget::new(3, 60).unwrap(), 9);
            estimate_width(run).unwrap().result.unwrap()
        };
        let (a, b) = (mk(), mk());
        assert_eq!(a.logs, b.logs);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        for l in &a.logs {
            assert!(l.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn profile_is_monotone() {
        let f = VertexFamily::new(Shape::new(2, 3).unwrap(), 1, 1, Enumeration::Full).unwrap();
        let e = ExponentPair::new(4.0, 4.0).unwrap();
        let runs = width_profile(PointSource::Vertices { family: f, scale: 1.0 }, 0..=6, e, Budget::new(2, 80).unwrap(), 3)
            .unwrap();
        let v: Vec<f64> = runs.iter().map(|r| r.value().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
        assert_eq!(v[6], 0.0);
    }

    #[test]
    fn empty_budget_is_an_error() {
        let f = VertexFamily::new(Shape::new(2, 2).unwrap(), 1, 1, Enumeration::Full).unwrap();
        let run = WidthRun::new(
            PointSource::Vertices { family: f, scale: 1.0 },
            1,
            ExponentPair::new(2.0, 2.0).unwrap(),
            Budget { restarts: 0, iterations: 10 },
            0,
        );
        assert!(estimate_width(run).is_err());
    }
}
