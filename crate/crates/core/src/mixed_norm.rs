//! Mixed norms `l_{p,θ}^{m,k}` on m×k real arrays.
//!
//! The inner index `i` runs over the `m` rows and the outer index `j` over the
//! `k` columns: `‖x‖_{p,θ} = (Σ_j (Σ_i |x_ij|^p)^{θ/p})^{1/θ}`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Policy cap on `m·k`.
pub const MAX_ENTRIES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub m: usize,
    pub k: usize,
}

impl Shape {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(invalid(format!("shape {m}x{k}: m and k must be positive")));
        }
        if m.checked_mul(k).is_none_or(|mk| mk > MAX_ENTRIES) {
            return Err(invalid(format!("shape {m}x{k} exceeds the m*k cap of {MAX_ENTRIES}")));
        }
        Ok(Shape { m, k })
    }

    pub fn len(&self) -> usize {
        self.m * self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn transpose(&self) -> Shape {
        Shape { m: self.k, k: self.m }
    }
}

/// An exponent in `[1, ∞]`, stored as its reciprocal (`1/∞ = 0`).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent {
    recip: f64,
}

impl Exponent {
    pub const INFINITY: Exponent = Exponent { recip: 0.0 };
    pub const ONE: Exponent = Exponent { recip: 1.0 };
    pub const TWO: Exponent = Exponent { recip: 0.5 };

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(invalid(format!("exponent {p} must lie in [1, inf]")));
        }
        Ok(Exponent { recip: if p.is_infinite() { 0.0 } else { 1.0 / p } })
    }

    pub fn from_recip(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid(format!("reciprocal exponent {r} must lie in [0, 1]")));
        }
        Ok(Exponent { recip: r })
    }

    /// Clamps tiny rounding excursions outside `[0, 1]`.
    pub(crate) fn from_recip_clamped(r: f64) -> Self {
        Exponent { recip: r.clamp(0.0, 1.0) }
    }

    pub fn recip(self) -> f64 {
        self.recip
    }

    pub fn value(self) -> f64 {
        if self.recip == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.recip
        }
    }

    pub fn is_infinite(self) -> bool {
        self.recip == 0.0
    }

    /// Harmonic interpolation `1/p = (1-λ)/p1 + λ/p2`.
    pub fn interpolate(a: Exponent, b: Exponent, lambda: f64) -> Exponent {
        Exponent::from_recip_clamped((1.0 - lambda) * a.recip + lambda * b.recip)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.value())
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    /// Accepts `inf`, decimals, and fractions such as `8/3`. A fraction's
    /// reciprocal is formed from the integer parts, so `8/3` stores exactly
    /// the double nearest to `3/8`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Exponent::INFINITY),
            _ => {}
        }
        if t.contains('/') {
            let r: Ratio<i64> = t
                .parse()
                .map_err(|_| invalid(format!("cannot parse exponent '{s}'")))?;
            if *r.denom() == 0 || r < Ratio::from_integer(1) {
                return Err(invalid(format!("exponent {s} must lie in [1, inf]")));
            }
            return Exponent::from_recip(*r.denom() as f64 / *r.numer() as f64);
        }
        let v: f64 = t.parse().map_err(|_| invalid(format!("cannot parse exponent '{s}'")))?;
        Exponent::new(v)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.value())
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Exponent::new(v).map_err(de::Error::custom),
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: Exponent,
    pub theta: Exponent,
}

impl ExponentPair {
    pub fn new(p: f64, theta: f64) -> Result<Self> {
        Ok(ExponentPair { p: Exponent::new(p)?, theta: Exponent::new(theta)? })
    }

    pub fn from_exponents(p: Exponent, theta: Exponent) -> Self {
        ExponentPair { p, theta }
    }

    pub fn interpolate(a: ExponentPair, b: ExponentPair, lambda: f64) -> ExponentPair {
        ExponentPair {
            p: Exponent::interpolate(a.p, b.p, lambda),
            theta: Exponent::interpolate(a.theta, b.theta, lambda),
        }
    }

    pub fn transpose(self) -> ExponentPair {
        ExponentPair { p: self.theta, theta: self.p }
    }
}

/// Dense m×k array stored column by column, so each inner block is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedMatrix {
    shape: Shape,
    data: Vec<f64>,
}

impl MixedMatrix {
    pub fn zeros(shape: Shape) -> Self {
        MixedMatrix { shape, data: vec![0.0; shape.len()] }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for j in 0..shape.k {
            for i in 0..shape.m {
                data.push(f(i, j));
            }
        }
        MixedMatrix { shape, data }
    }

    /// Builds from column-major data (`data[j*m + i]`).
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for shape {}x{}",
                data.len(),
                shape.m,
                shape.k
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(MixedMatrix { shape, data })
    }

    /// Builds from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        let shape = Shape::new(m, k)?;
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        MixedMatrix::from_vec(shape, (0..k).flat_map(|j| rows.iter().map(move |r| r[j])).collect())
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.shape.m + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.shape.m + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.shape.m..(j + 1) * self.shape.m]
    }

    pub fn scaled(&self, c: f64) -> MixedMatrix {
        MixedMatrix { shape: self.shape, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn transpose(&self) -> MixedMatrix {
        MixedMatrix::from_fn(self.shape.transpose(), |i, j| self.get(j, i))
    }

    pub fn add(&self, other: &MixedMatrix) -> Result<MixedMatrix> {
        self.check_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(MixedMatrix { shape: self.shape, data })
    }

    pub fn check_shape(&self, other: &MixedMatrix) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.shape.m, self.shape.k, other.shape.m, other.shape.k
            )));
        }
        Ok(())
    }
}

/// `(Σ |v|^p)^{1/p}` over one block, with max for `p = ∞`. Entries are
/// rescaled by the block maximum so large exponents cannot overflow.
pub(crate) fn lp_norm(v: impl Iterator<Item = f64> + Clone, p: Exponent) -> f64 {
    let top = v.clone().fold(0.0_f64, |a, x| a.max(x.abs()));
    if top == 0.0 || p.is_infinite() {
        return top;
    }
    let r = p.recip();
    if r == 1.0 {
        return v.map(f64::abs).sum();
    }
    let pe = 1.0 / r;
    let s: f64 = v.map(|x| (x.abs() / top).powf(pe)).sum();
    top * s.powf(r)
}

/// Mixed norm over column-major data of the given shape.
pub(crate) fn mixed_norm_slice(data: &[f64], m: usize, e: ExponentPair) -> f64 {
    let inner = data.chunks(m).map(|col| lp_norm(col.iter().copied(), e.p));
    let inner: Vec<f64> = inner.collect();
    lp_norm(inner.iter().copied(), e.theta)
}

pub fn mixed_norm(x: &MixedMatrix, e: ExponentPair) -> f64 {
    mixed_norm_slice(&x.data, x.shape.m, e)
}

/// The set `ν·B_{p,θ}^{m,k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub nu: f64,
    pub exps: ExponentPair,
    pub shape: Shape,
}

impl BallSpec {
    pub fn new(nu: f64, exps: ExponentPair, shape: Shape) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid(format!("radius {nu} must be positive and finite")));
        }
        Ok(BallSpec { nu, exps, shape })
    }
}

pub fn ball_membership(x: &MixedMatrix, b: &BallSpec, tol: f64) -> Result<bool> {
    if x.shape != b.shape {
        return Err(Error::ShapeMismatch(format!(
            "point {}x{} vs ball {}x{}",
            x.shape.m, x.shape.k, b.shape.m, b.shape.k
        )));
    }
    Ok(mixed_norm(x, b.exps) <= b.nu * (1.0 + tol))
}

/// `‖x‖_{e1}^{1-λ} ‖x‖_{e2}^λ − ‖x‖_{e(λ)}`, where `e(λ)` interpolates the
/// reciprocals. Hölder's inequality makes this nonnegative.
pub fn interpolation_inequality_gap(
    x: &MixedMatrix,
    e1: ExponentPair,
    e2: ExponentPair,
    lambda: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("lambda {lambda} outside [0, 1]")));
    }
    let e = ExponentPair::interpolate(e1, e2, lambda);
    let n1 = mixed_norm(x, e1);
    let n2 = mixed_norm(x, e2);
    let lhs = if lambda == 0.0 {
        n1
    } else if lambda == 1.0 {
        n2
    } else {
        n1.powf(1.0 - lambda) * n2.powf(lambda)
    };
    Ok(lhs - mixed_norm(x, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(m: usize, k: usize) -> MixedMatrix {
        MixedMatrix::from_fn(Shape::new(m, k).unwrap(), |_, _| 1.0)
    }

    #[test]
    fn all_ones_norms() {
        let x = ones(2, 2);
        assert_eq!(mixed_norm(&x, ExponentPair::new(1.0, 1.0).unwrap()), 4.0);
        assert!((mixed_norm(&x, ExponentPair::new(2.0, 2.0).unwrap()) - 2.0).abs() < 1e-15);
        assert_eq!(mixed_norm(&x, ExponentPair::new(f64::INFINITY, 1.0).unwrap()), 2.0);
        assert_eq!(mixed_norm(&x, ExponentPair::new(1.0, f64::INFINITY).unwrap()), 2.0);
    }

    #[test]
    fn inner_index_is_rows() {
        // one column holding (3,4): inner l2 gives 5, outer l1 keeps it
        let x = MixedMatrix::from_rows(&[vec![3.0, 0.0], vec![4.0, 0.0]]).unwrap();
        assert!((mixed_norm(&x, ExponentPair::new(2.0, 1.0).unwrap()) - 5.0).abs() < 1e-15);
        assert_eq!(mixed_norm(&x, ExponentPair::new(1.0, 2.0).unwrap()), 7.0);
    }

    #[test]
    fn membership() {
        let x = ones(2, 2);
        let s = x.shape();
        let b = BallSpec::new(3.0, ExponentPair::new(1.0, 1.0).unwrap(), s).unwrap();
        assert!(!ball_membership(&x, &b, 0.0).unwrap());
        let b4 = BallSpec::new(4.0, b.exps, s).unwrap();
        assert!(ball_membership(&x, &b4, 0.0).unwrap());
        assert!(ball_membership(&MixedMatrix::zeros(s), &b, 0.0).unwrap());
        let other = BallSpec::new(4.0, b.exps, Shape::new(1, 4).unwrap()).unwrap();
        assert!(ball_membership(&x, &other, 0.0).is_err());
    }

    #[test]
    fn holder_equality_case() {
        let x = ones(2, 2);
        let e1 = ExponentPair::new(1.0, 1.0).unwrap();
        let e2 = ExponentPair::new(f64::INFINITY, f64::INFINITY).unwrap();
        assert!(interpolation_inequality_gap(&x, e1, e2, 0.5).unwrap().abs() < 1e-14);
        assert_eq!(interpolation_inequality_gap(&x, e1, e2, 0.0).unwrap(), 0.0);
        assert!(interpolation_inequality_gap(&x, e1, e2, 1.5).is_err());
    }

    #[test]
    fn exponent_parsing() {
        assert!("inf".parse::<Exponent>().unwrap().is_infinite());
        assert_eq!("8/3".parse::<Exponent>().unwrap().recip(), 3.0 / 8.0);
        assert_eq!("2.5".parse::<Exponent>().unwrap().value(), 2.5);
        assert!("1/2".parse::<Exponent>().is_err());
        assert!("0.5".parse::<Exponent>().is_err());
        assert!("abc".parse::<Exponent>().is_err());
        let v: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(v.is_infinite());
        let v: Exponent = serde_json::from_str("4").unwrap();
        assert_eq!(v.value(), 4.0);
        assert_eq!(serde_json::to_string(&Exponent::INFINITY).unwrap(), "\"inf\"");
    }

    #[test]
    fn large_exponents_do_not_overflow() {
        let x = MixedMatrix::from_rows(&[vec![1e200, 1e200]]).unwrap();
        let v = mixed_norm(&x, ExponentPair::new(400.0, 400.0).unwrap());
        assert!(v.is_finite() && v >= 1e200);
    }
}
