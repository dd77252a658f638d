use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use widthlab::extremal::Enumeration;
use widthlab::{
    apply_gamma, averaging_bound, build_witness, dist_to_subspace, e_matrix,
    identity_1234_values, interpolation_inequality_gap, intersection_width_estimate, mixed_norm,
    orbit_vertices, phi_all, predict_active_term, proposition1_lower_bound, solve_alpha,
    solve_lambda_tilde, solve_mu_tilde, solve_phi5_lambda, theorem_a_estimate, Exponent,
    ExponentPair, MixedMatrix, Shape, SignedPermutation, Subspace, VertexFamily, WidthQuery,
};

type Q = BigRational;

fn q(a: i64, b: i64) -> Q {
    Q::new(BigInt::from(a), BigInt::from(b))
}

fn qf(x: &Q) -> f64 {
    x.to_f64().unwrap()
}

/// A positive real `∏ p^e` with rational exponents, kept exact.
#[derive(Clone, Debug, PartialEq)]
struct Pp(BTreeMap<u64, Q>);

impl Pp {
    fn one() -> Pp {
        Pp(BTreeMap::new())
    }

    fn int(mut n: u64) -> Pp {
        assert!(n > 0);
        let mut out = BTreeMap::new();
        let mut p = 2;
        while n > 1 {
            while n % p == 0 {
                *out.entry(p).or_insert_with(Q::zero) += Q::one();
                n /= p;
            }
            p += 1;
        }
        Pp(out)
    }

    fn ratio(a: u64, b: u64) -> Pp {
        Pp::int(a).mul(&Pp::int(b).pow(&q(-1, 1)))
    }

    fn mul(&self, o: &Pp) -> Pp {
        let mut out = self.0.clone();
        for (p, e) in &o.0 {
            *out.entry(*p).or_insert_with(Q::zero) += e;
        }
        out.retain(|_, e| !e.is_zero());
        Pp(out)
    }

    fn pow(&self, e: &Q) -> Pp {
        let mut out: BTreeMap<u64, Q> = self.0.iter().map(|(p, x)| (*p, x * e)).collect();
        out.retain(|_, e| !e.is_zero());
        Pp(out)
    }

    fn ln(&self) -> f64 {
        self.0.iter().map(|(p, e)| qf(e) * (*p as f64).ln()).sum()
    }

    fn value(&self) -> f64 {
        self.ln().exp()
    }

    /// Exact when the exponent vectors coincide, otherwise by logarithms.
    fn cmp(&self, o: &Pp) -> Ordering {
        if self == o {
            return Ordering::Equal;
        }
        self.ln().partial_cmp(&o.ln()).unwrap()
    }

    fn min(self, o: Pp) -> Pp {
        if self.cmp(&o) == Ordering::Greater {
            o
        } else {
            self
        }
    }
}

fn half() -> Q {
    q(1, 2)
}

fn lam(rp: &Q, rq: &Q) -> Q {
    if *rq == half() {
        return Q::one();
    }
    ((rp - rq) / (half() - rq)).min(Q::one())
}

/// Theorem A with constants set to 1, evaluated on prime-power exponents.
fn dn(m: u64, k: u64, n: u64, rp: &Q, rt: &Q, rq: &Q, rs: &Q) -> Pp {
    if n == 0 {
        return Pp::one();
    }
    let (mm, kk, nn) = (Pp::int(m), Pp::int(k), Pp::int(n));
    let s = nn.pow(&q(-1, 2)).mul(&mm.pow(rq)).mul(&kk.pow(rs));
    if *rp >= half() && *rt >= half() {
        return Pp::one().min(s);
    }
    let (lp, lt) = (lam(rp, rq), lam(rt, rs));
    let low = mm.pow(&(rq * q(2, 1))).mul(&kk.pow(&(rs * q(2, 1))));
    if nn.cmp(&low) != Ordering::Greater {
        return Pp::one();
    }
    if lp <= lt {
        if nn.cmp(&mm.mul(&kk.pow(&(rs * q(2, 1))))) != Ordering::Greater {
            s.pow(&lp)
        } else {
            let inner = nn.pow(&q(-1, 2)).mul(&mm.pow(&half())).mul(&kk.pow(rs));
            mm.pow(&(rq - rp)).mul(&inner.pow(&lt))
        }
    } else if nn.cmp(&kk.mul(&mm.pow(&(rq * q(2, 1))))) != Ordering::Greater {
        s.pow(&lt)
    } else {
        let inner = nn.pow(&q(-1, 2)).mul(&kk.pow(&half())).mul(&mm.pow(rq));
        kk.pow(&(rs - rt)).mul(&inner.pow(&lp))
    }
}

/// `t` with `1/2 = (1-t) r1 + t r2`, `t = 0` when both sides are `1/2`.
fn half_solve(r1: &Q, r2: &Q) -> Option<Q> {
    if r1 == r2 {
        return (*r1 == half()).then(Q::zero);
    }
    let t = (r1 - half()) / (r1 - r2);
    (t >= Q::zero() && t <= Q::one()).then_some(t)
}

/// Smallest `λ` in `[0,1]` meeting the box and balance conditions of `Φ5`.
fn phi5_solve(r1: &Q, r2: &Q, t1: &Q, t2: &Q, rq: &Q, rs: &Q) -> Option<Q> {
    // feasible interval from lo ≤ a + bλ ≤ hi, one constraint at a time
    let (mut lo, mut hi) = (Q::zero(), Q::one());
    for (a, b, l, h) in [(r1, r2 - r1, rq, half()), (t1, t2 - t1, rs, half())] {
        for (bound, upper) in [(l.clone(), false), (h.clone(), true)] {
            // a + bλ ≥ bound (or ≤ when upper)
            let sign = if upper { -Q::one() } else { Q::one() };
            let (ca, cb) = ((a - &bound) * &sign, &b * &sign);
            if cb.is_zero() {
                if ca.is_negative() {
                    return None;
                }
            } else if cb.is_positive() {
                lo = lo.max(-&ca / &cb);
            } else {
                hi = hi.min(-&ca / &cb);
            }
        }
    }
    if lo > hi {
        return None;
    }
    let affine = |r0: &Q, d: Q, rx: &Q| -> (Q, Q) {
        if *rx == half() {
            (Q::one(), Q::zero())
        } else {
            let den = half() - rx;
            ((r0 - rx) / &den, d / den)
        }
    };
    let (pa, pb) = affine(r1, r2 - r1, rq);
    let (ta, tb) = affine(t1, t2 - t1, rs);
    let (a, b) = (pa - ta, pb - tb);
    if b.is_zero() {
        return a.is_zero().then_some(lo);
    }
    let x = -a / b;
    (x >= lo && x <= hi).then_some(x)
}

struct Case {
    m: u64,
    k: u64,
    n: u64,
    rq: Q,
    rs: Q,
    nu: [(u64, u64); 2],
    e: [(Q, Q); 2],
}

impl Case {
    fn nu(&self, i: usize) -> Pp {
        Pp::ratio(self.nu[i].0, self.nu[i].1)
    }

    fn d(&self, rp: &Q, rt: &Q) -> Pp {
        dn(self.m, self.k, self.n, rp, rt, &self.rq, &self.rs)
    }

    fn mix(&self, t: &Q) -> Pp {
        self.nu(0).pow(&(Q::one() - t)).mul(&self.nu(1).pow(t))
    }

    fn phis(&self) -> [Option<Pp>; 5] {
        let [(r1, t1), (r2, t2)] = &self.e;
        let at = |t: &Q, a: &Q, b: &Q| a * (Q::one() - t) + b * t;
        let p3 = half_solve(r1, r2).map(|t| self.mix(&t).mul(&self.d(&half(), &at(&t, t1, t2))));
        let p4 = half_solve(t1, t2).map(|t| self.mix(&t).mul(&self.d(&at(&t, r1, r2), &half())));
        let p5 = phi5_solve(r1, r2, t1, t2, &self.rq, &self.rs)
            .map(|t| self.mix(&t).mul(&self.d(&at(&t, r1, r2), &at(&t, t1, t2))));
        [
            Some(self.nu(0).mul(&self.d(r1, t1))),
            Some(self.nu(1).mul(&self.d(r2, t2))),
            p3,
            p4,
            p5,
        ]
    }

    fn query(&self) -> WidthQuery {
        let pair = |a: &Q, b: &Q| {
            ExponentPair::from_exponents(Exponent::from_recip(qf(a)).unwrap(), Exponent::from_recip(qf(b)).unwrap())
        };
        WidthQuery::new(
            Shape::new(self.m as usize, self.k as usize).unwrap(),
            self.n,
            pair(&self.rq, &self.rs),
            &[
                (self.nu[0].0 as f64 / self.nu[0].1 as f64, pair(&self.e[0].0, &self.e[0].1)),
                (self.nu[1].0 as f64 / self.nu[1].1 as f64, pair(&self.e[1].0, &self.e[1].1)),
            ],
        )
        .unwrap()
    }
}

fn pair(p: f64, t: f64) -> ExponentPair {
    ExponentPair::new(p, t).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn check_phis(c: &Case) {
    let lib = phi_all(&c.query()).unwrap();
    for (j, (got, want)) in lib.iter().zip(c.phis()).enumerate() {
        match want {
            None => assert!(got.is_infinite(), "phi{} should be absent, got {got}", j + 1),
            Some(w) => assert!(rel(*got, w.value()) <= 1e-12, "phi{}: {got} vs {}", j + 1, w.value()),
        }
    }
}

#[test]
fn norm_of_block_e4321() {
    // ‖x‖^4 summed exactly over the entries, then the fourth root
    let x = e_matrix(4, 3, 2, 1).unwrap();
    let exact: Q = (0..4)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| {
            let v = Q::from_float(x.get(i, j)).unwrap();
            &v * &v * &v * &v
        })
        .sum();
    assert_eq!(exact, q(2, 1));
    let got = mixed_norm(&x, pair(4.0, 4.0));
    assert!(rel(got, qf(&exact).powf(0.25)) <= 1e-15);
    assert!(rel(got, 2f64.powf(0.25)) <= 1e-15);
}

#[test]
fn interpolation_gap_on_a_3x2_matrix() {
    let x = MixedMatrix::from_rows(&[vec![0.3, -1.7], vec![2.2, 0.0], vec![-0.9, 1.1]]).unwrap();
    let lam = 0.4;
    let direct = |p: f64, t: f64| {
        let cols: Vec<f64> = (0..2)
            .map(|j| (0..3).map(|i| x.get(i, j).abs().powf(p)).sum::<f64>().powf(1.0 / p))
            .collect();
        cols.iter().map(|c| c.powf(t)).sum::<f64>().powf(1.0 / t)
    };
    let p = 1.0 / ((1.0 - lam) / 1.0 + lam / 4.0);
    let t = 1.0 / ((1.0 - lam) / 2.0 + lam / 3.0);
    let want = direct(1.0, 2.0).powf(1.0 - lam) * direct(4.0, 3.0).powf(lam) - direct(p, t);
    let gap = interpolation_inequality_gap(&x, pair(1.0, 2.0), pair(4.0, 3.0), lam).unwrap();
    assert!(want >= 0.0 && gap >= 0.0);
    assert!((gap - want).abs() <= 1e-12);
}

#[test]
fn theorem_a_first_branch_example() {
    // n = 8 sits on the first threshold m^{1/2}k^{1/2} = 8; value 1
    let e = theorem_a_estimate(Shape::new(16, 4).unwrap(), 8, pair(1.0, 1.0), pair(4.0, 4.0)).unwrap();
    assert!(rel(e.value, 1.0) <= 1e-12);
    let s = 8f64.powf(-0.5) * 16f64.powf(0.25) * 4f64.powf(0.25);
    assert!(rel(s, 1.0) <= 1e-12);
}

#[test]
fn theorem_a_third_row_example() {
    let want = dn(16, 4, 32, &q(1, 4), &q(1, 4), &q(1, 4), &q(1, 4));
    assert_eq!(want, Pp::one());
    let e = theorem_a_estimate(Shape::new(16, 4).unwrap(), 32, pair(4.0, 4.0), pair(4.0, 4.0)).unwrap();
    assert!(rel(e.value, 1.0) <= 1e-12);
}

#[test]
fn theorem_a_matches_prime_power_oracle() {
    let recips = [q(1, 1), q(3, 4), q(2, 3), q(1, 2), q(2, 5), q(1, 3), q(1, 4), q(1, 5), q(1, 6), q(1, 8)];
    let targets = [q(1, 2), q(1, 3), q(1, 4), q(1, 6), q(1, 8)];
    let mut checked = 0;
    for (m, k) in [(2, 2), (16, 4), (4, 16), (27, 8), (12, 18), (64, 9), (5, 20)] {
        for n in (0..=m * k / 2).step_by(((m * k / 2) / 13).max(1) as usize) {
            for rq in &targets {
                for rs in &targets {
                    for rp in recips.iter().filter(|r| *r >= rq) {
                        for rt in recips.iter().filter(|r| *r >= rs) {
                            let want = dn(m, k, n, rp, rt, rq, rs).value();
                            let e = theorem_a_estimate(
                                Shape::new(m as usize, k as usize).unwrap(),
                                n,
                                ExponentPair::from_exponents(Exponent::from_recip(qf(rp)).unwrap(), Exponent::from_recip(qf(rt)).unwrap()),
                                ExponentPair::from_exponents(Exponent::from_recip(qf(rq)).unwrap(), Exponent::from_recip(qf(rs)).unwrap()),
                            )
                            .unwrap();
                            assert!(rel(e.value, want) <= 1e-12, "m={m} k={k} n={n} rp={rp} rt={rt} rq={rq} rs={rs}: {} vs {want}", e.value);
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 50_000);
}

#[test]
fn identity_four_exact_example() {
    // q = σ = 6, p = θ = 3, m = 27, k = 8, n = 100
    let (rq, rp) = (q(1, 6), q(1, 3));
    let l = lam(&rp, &rq);
    assert_eq!(l, q(1, 2));
    let (m, k, n) = (Pp::int(27), Pp::int(8), Pp::int(100));
    let s = n.pow(&q(-1, 2)).mul(&m.pow(&rq)).mul(&k.pow(&rq));
    let exact = [
        s.pow(&l),
        m.pow(&(&rq - &rp)).mul(&n.pow(&q(-1, 2)).mul(&m.pow(&half())).mul(&k.pow(&rq)).pow(&l)),
        s.pow(&l),
        k.pow(&(&rq - &rp)).mul(&n.pow(&q(-1, 2)).mul(&k.pow(&half())).mul(&m.pow(&rq)).pow(&l)),
    ];
    for v in &exact[1..] {
        assert_eq!(*v, exact[0]);
    }
    let lib = identity_1234_values(
        Exponent::new(3.0).unwrap(),
        Exponent::new(3.0).unwrap(),
        Exponent::new(6.0).unwrap(),
        Exponent::new(6.0).unwrap(),
        27,
        8,
        100,
    )
    .unwrap();
    for v in lib {
        assert!(rel(v, exact[0].value()) <= 1e-12);
    }
}

#[test]
fn lambda_tilde_exact() {
    let want = (q(1, 1) - half()) / (q(1, 1) - q(1, 4));
    assert_eq!(want, q(2, 3));
    let s = solve_lambda_tilde(pair(1.0, 3.0), pair(4.0, 5.0)).unwrap();
    assert!((s.parameter - qf(&want)).abs() <= 1e-15);
    let t = s.parameter;
    assert!((1.0 / s.derived_exponents.theta.value() - ((1.0 - t) / 3.0 + t / 5.0)).abs() <= 1e-12);
    assert_eq!(s.derived_exponents.p.value(), 2.0);
}

#[test]
fn mu_tilde_exact() {
    let want = (half() - half()) / (half() - q(1, 6));
    assert!(want.is_zero());
    let s = solve_mu_tilde(pair(3.0, 2.0), pair(1.5, 6.0)).unwrap();
    assert_eq!(s.parameter, 0.0);
    assert!((s.derived_exponents.p.value() - 3.0).abs() <= 1e-12);
}

#[test]
fn phi5_lambda_by_grid_scan() {
    let (e1, e2, target) = (pair(2.0, 4.0), pair(4.0, 2.0), pair(4.0, 4.0));
    let lam_of = |rp: f64, rq: f64| ((rp - rq) / (0.5 - rq)).min(1.0);
    let f = |t: f64| {
        let rp = (1.0 - t) / 2.0 + t / 4.0;
        let rt = (1.0 - t) / 4.0 + t / 2.0;
        lam_of(rp, 0.25) - lam_of(rt, 0.25)
    };
    let steps = 1_000_000;
    let mut bracket = None;
    for i in 0..steps {
        let (a, b) = (i as f64 / steps as f64, (i + 1) as f64 / steps as f64);
        if f(a) == 0.0 || f(a).signum() != f(b).signum() {
            bracket = Some((a, b));
            break;
        }
    }
    let (a, b) = bracket.expect("a sign change");
    let s = solve_phi5_lambda(e1, e2, target).unwrap();
    assert!(a <= s.parameter && s.parameter <= b, "{} outside [{a}, {b}]", s.parameter);
    assert!((s.parameter - 0.5).abs() <= 1e-12);
    assert!((s.derived_exponents.p.value() - 8.0 / 3.0).abs() <= 1e-12);
    assert!((s.derived_exponents.theta.value() - 8.0 / 3.0).abs() <= 1e-12);
    assert_eq!(phi5_solve(&q(1, 2), &q(1, 4), &q(1, 4), &q(1, 2), &q(1, 4), &q(1, 4)), Some(q(1, 2)));
}

#[test]
fn phi3_absent_when_half_unreachable() {
    let qy = WidthQuery::new(Shape::new(8, 8).unwrap(), 10, pair(4.0, 4.0), &[(1.0, pair(3.0, 2.0)), (1.0, pair(3.0, 3.0))]).unwrap();
    assert!(phi_all(&qy).unwrap()[2].is_infinite());
}

#[test]
fn five_phis_on_powers_of_two() {
    let c = Case {
        m: 16,
        k: 16,
        n: 64,
        rq: q(1, 4),
        rs: q(1, 4),
        nu: [(1, 1), (2, 1)],
        e: [(q(1, 2), q(1, 4)), (q(1, 4), q(1, 2))],
    };
    let phis = c.phis();
    assert!(phis.iter().all(|p| p.is_some()));
    check_phis(&c);
}

#[test]
fn phis_match_prime_power_oracle() {
    let recips = [q(1, 1), q(2, 3), q(1, 2), q(2, 5), q(1, 3), q(1, 4), q(1, 6)];
    let mut checked = 0;
    for (m, k) in [(16, 4), (27, 8), (9, 25), (32, 32)] {
        for n in [1, m * k / 7, m * k / 4, m * k / 2] {
            for (rq, rs) in [(q(1, 4), q(1, 4)), (q(1, 3), q(1, 6)), (q(1, 2), q(1, 4)), (q(1, 6), q(1, 2))] {
                for nu in [(1, 4), (1, 1), (9, 2)] {
                    let ok = |r: &&Q, t: &Q| **r >= *t;
                    let ps: Vec<&Q> = recips.iter().filter(|r| ok(r, &rq)).collect();
                    let ts: Vec<&Q> = recips.iter().filter(|r| ok(r, &rs)).collect();
                    let combos = [ps.clone(), ts.clone(), ps.clone(), ts.clone()].into_iter().multi_cartesian_product();
                    for (i, c) in combos.enumerate() {
                        let (p1, t1, p2, t2) = (c[0], c[1], c[2], c[3]);
                        if i % 5 != 0 {
                            continue;
                        }
                        let c = Case {
                            m,
                            k,
                            n,
                            rq: rq.clone(),
                            rs: rs.clone(),
                            nu: [(1, 1), nu],
                            e: [(p1.clone(), t1.clone()), (p2.clone(), t2.clone())],
                        };
                        check_phis(&c);
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn case_three_below_threshold_picks_ball_one() {
    // p1 = 4, θ1 = 3: λ_p = 0 < λ_θ = 1/3; p2 = 3, θ2 = 4: λ_p = 1/3 > λ_θ = 0
    let (m, k, n) = (64u64, 64u64, 256u64);
    let base = |rq: f64| (n as f64).sqrt() * (m as f64).powf(-rq) * (k as f64).powf(-rq);
    let thr = base(0.25).powf((0.25 - 1.0 / 3.0) / 0.25);
    let nu1 = 0.5 * thr;
    let c = Case {
        m,
        k,
        n,
        rq: q(1, 4),
        rs: q(1, 4),
        nu: [(1, 1), (1, 1)],
        e: [(q(1, 4), q(1, 3)), (q(1, 3), q(1, 4))],
    };
    let qy = WidthQuery::new(
        Shape::new(64, 64).unwrap(),
        n,
        pair(4.0, 4.0),
        &[(nu1, pair(4.0, 3.0)), (1.0, pair(3.0, 4.0))],
    )
    .unwrap();
    let phi = phi_all(&qy).unwrap();
    // Φ1 ≤ Φ5 from the oracle, with ν1 applied afterwards
    let o = c.phis();
    let p1 = nu1 * o[0].as_ref().unwrap().value();
    let lam = phi5_solve(&q(1, 4), &q(1, 3), &q(1, 3), &q(1, 4), &q(1, 4), &q(1, 4)).unwrap();
    let p5 = nu1.powf(1.0 - qf(&lam)) * o[4].as_ref().unwrap().value();
    assert!(p1 <= p5);
    assert!(rel(phi[0], p1) <= 1e-12 && rel(phi[4], p5) <= 1e-12);
    let est = intersection_width_estimate(&qy).unwrap();
    assert!(rel(est.value, phi[0]) <= 1e-12);
    assert_eq!(predict_active_term(&qy).unwrap().j, 1);
}

#[test]
fn case_one_picks_smaller_ball() {
    let qy = WidthQuery::new(
        Shape::new(20, 10).unwrap(),
        30,
        pair(4.0, 6.0),
        &[(1.0, pair(1.0, 2.0)), (3.0, pair(2.0, 1.5))],
    )
    .unwrap();
    let p = predict_active_term(&qy).unwrap();
    assert_eq!(p.j, 1);
    let phi = phi_all(&qy).unwrap();
    let s = (30f64).powf(-0.5) * 20f64.powf(0.25) * 10f64.powf(1.0 / 6.0);
    assert!(rel(phi[0], s.min(1.0)) <= 1e-12);
    assert!(rel(phi[1], 3.0 * s.min(1.0)) <= 1e-12);
}

#[test]
fn case_4a_upper_band_picks_ball_two() {
    // n = mk^{2/σ} = 32 = mk/2; ν1/ν2 = 1 ≥ m^{1/4-1/2} = 1/2
    let qy = WidthQuery::new(
        Shape::new(16, 4).unwrap(),
        32,
        pair(4.0, 4.0),
        &[(1.0, pair(4.0, 4.0)), (1.0, pair(2.0, 1.0))],
    )
    .unwrap();
    let p = predict_active_term(&qy).unwrap();
    assert_eq!(p.j, 2, "{}", p.label);
    let want = 16f64.powf(0.25 - 0.5 + 0.5) * 4f64.powf(0.25) * 32f64.powf(-0.5);
    let phi = phi_all(&qy).unwrap();
    assert!(rel(phi[1], want) <= 1e-12);
    let min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(rel(min, want) <= 1e-12);
}

#[test]
fn gamma_moves_entry_by_index_arithmetic() {
    let x = e_matrix(2, 2, 1, 1).unwrap();
    let g = SignedPermutation::new(vec![1, 0], vec![0, 1], vec![1, 1], vec![1, 1]).unwrap();
    let y = apply_gamma(&g, &x).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let src = [1, 0][i];
            assert_eq!(y.get(i, j), x.get(src, j));
        }
    }
    assert_eq!(y.get(1, 0), 1.0);
    assert_eq!(y.get(0, 0), 0.0);
}

#[test]
fn v22_in_2x2_from_all_group_elements() {
    let perms = [[0usize, 1], [1, 0]];
    let mut seen = HashSet::new();
    for t1 in perms {
        for t2 in perms {
            for s1 in 0..4u32 {
                for s2 in 0..4u32 {
                    let sign = |s: u32, i: usize| if s >> i & 1 == 1 { -1i8 } else { 1 };
                    // e is all ones, so γ(e)_{ij} = ε1_i ε2_j whatever the permutations
                    let _ = (t1, t2);
                    let v: Vec<i8> = (0..2).flat_map(|j| (0..2).map(move |i| sign(s1, i) * sign(s2, j))).collect();
                    seen.insert(v);
                }
            }
        }
    }
    assert_eq!(seen.len(), 8);
    let f = VertexFamily::new(Shape::new(2, 2).unwrap(), 2, 2, Enumeration::Full).unwrap();
    let lib: HashSet<Vec<i8>> = orbit_vertices(&f).map(|v| v.as_slice().iter().map(|&t| t as i8).collect()).collect();
    assert_eq!(lib, seen);
}

#[test]
fn alpha_by_grid_scan() {
    let (e1, e2) = (pair(2.0, 3.0), pair(4.0, 2.0));
    let (a, b) = (0.5 - 0.25, 1.0 / 3.0 - 0.5);
    let ln_r = |t: f64| t * 30f64.ln();
    let ln_l = |t: f64| (1.0 - t) * 5f64.ln();
    let h = |t: f64, target: f64| a * ln_r(t) + b * ln_l(t) - target;
    let target = 0.3 * (h(0.0, 0.0) + h(1.0, 0.0)) + 0.1 * h(1.0, 0.0);
    let alpha = solve_alpha(e1, e2, target.exp(), 1.0, ln_r, ln_l).unwrap();
    assert!(h(alpha, target).abs() <= 1e-10);
    let steps = 1_000_000;
    let mut hit = None;
    for i in 0..steps {
        let (x, y) = (i as f64 / steps as f64, (i + 1) as f64 / steps as f64);
        if h(x, target).signum() != h(y, target).signum() {
            hit = Some((x, y));
            break;
        }
    }
    let (x, y) = hit.unwrap();
    assert!(x - 1e-12 <= alpha && alpha <= y + 1e-12);
    // degenerate: equal pairs and ν1 = ν2
    assert_eq!(solve_alpha(e1, e1, 1.0, 1.0, ln_r, ln_l), Some(0.0));
}

#[test]
fn witness_first_regime_uses_single_entries() {
    let qy = WidthQuery::new(Shape::new(16, 4).unwrap(), 5, pair(4.0, 4.0), &[(0.7, pair(2.0, 3.0)), (1.3, pair(3.0, 2.0))]).unwrap();
    let w = build_witness(&qy).unwrap().unwrap();
    assert_eq!((w.family.r, w.family.l), (1, 1));
    assert!(rel(w.scale, 0.7) <= 1e-12);
}

#[test]
fn witness_middle_regime_row_block() {
    // m^{1/2}k^{1/2} = 16 ≤ n = 50 ≤ mk^{1/2} = 128; band value (√50/4)^{-1} ≈ 0.566
    let qy = WidthQuery::new(Shape::new(64, 4).unwrap(), 50, pair(4.0, 4.0), &[(0.25, pair(4.0, 4.0)), (1.0, pair(2.0, 1.0))]).unwrap();
    let base: f64 = 50f64.sqrt() * 64f64.powf(-0.25) * 4f64.powf(-0.25);
    let r = base.powf(1.0 / 0.25).ceil() as usize;
    assert_eq!(r, 10);
    let w = build_witness(&qy).unwrap().unwrap();
    assert_eq!((w.family.r, w.family.l), (r, 1));
    assert!(rel(w.scale, 0.25 * (r as f64).powf(-0.25)) <= 1e-12);
}

#[test]
fn witness_full_column_block() {
    let qy = WidthQuery::new(Shape::new(16, 4).unwrap(), 32, pair(4.0, 4.0), &[(1.0, pair(4.0, 4.0)), (1.0, pair(2.0, 1.0))]).unwrap();
    let w = build_witness(&qy).unwrap().unwrap();
    assert_eq!((w.family.r, w.family.l), (16, 1));
    assert!(rel(w.scale, 16f64.powf(-0.5)) <= 1e-12);
}

#[test]
fn projection_example_and_prop1_at_q_two() {
    let x = MixedMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let l = Subspace::from_columns(nalgebra::DMatrix::from_element(4, 1, 0.5)).unwrap();
    assert!(dist_to_subspace(&x, &l, pair(2.0, 2.0), 1e-12).unwrap() <= 1e-12);

    // threshold mk = 4 ≥ n = 2, so the first row r^{1/2}l^{1/2} = 1 applies
    let e = proposition1_lower_bound(Shape::new(2, 2).unwrap(), 1, 1, 2, pair(2.0, 2.0)).unwrap();
    assert!(rel(e.value, 1.0) <= 1e-12);
    let a = averaging_bound(2, 2, 1, 1, 2);
    assert!(rel(a, 0.5f64.sqrt()) <= 1e-15);
    assert!(a <= e.value);
}
