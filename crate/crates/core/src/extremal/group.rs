use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixed_norm::{MixedMatrix, Shape};

/// `γ(x)_{ij} = ε1_i ε2_j x_{τ1(i), τ2(j)}`, indices 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedPermutation {
    pub tau1: Vec<usize>,
    pub tau2: Vec<usize>,
    pub eps1: Vec<i8>,
    pub eps2: Vec<i8>,
}

fn is_permutation(t: &[usize]) -> bool {
    let mut seen = vec![false; t.len()];
    for &i in t {
        if i >= t.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

impl SignedPermutation {
    pub fn new(tau1: Vec<usize>, tau2: Vec<usize>, eps1: Vec<i8>, eps2: Vec<i8>) -> Result<Self> {
        if !is_permutation(&tau1) || !is_permutation(&tau2) {
            return Err(invalid("tau1 and tau2 must be permutations"));
        }
        if eps1.len() != tau1.len() || eps2.len() != tau2.len() {
            return Err(invalid("sign vectors must match the permutation lengths"));
        }
        if eps1.iter().chain(&eps2).any(|&s| s != 1 && s != -1) {
            return Err(invalid("signs must be +1 or -1"));
        }
        Ok(SignedPermutation { tau1, tau2, eps1, eps2 })
    }

    pub fn identity(shape: Shape) -> Self {
        SignedPermutation {
            tau1: (0..shape.m).collect(),
            tau2: (0..shape.k).collect(),
            eps1: vec![1; shape.m],
            eps2: vec![1; shape.k],
        }
    }

    pub fn shape(&self) -> Shape {
        Shape { m: self.tau1.len(), k: self.tau2.len() }
    }
}

pub fn apply_gamma(g: &SignedPermutation, x: &MixedMatrix) -> Result<MixedMatrix> {
    if g.shape() != x.shape() {
        return Err(Error::ShapeMismatch(format!(
            "group element {}x{} vs matrix {}x{}",
            g.tau1.len(),
            g.tau2.len(),
            x.shape().m,
            x.shape().k
        )));
    }
    Ok(MixedMatrix::from_fn(x.shape(), |i, j| {
        f64::from(g.eps1[i] * g.eps2[j]) * x.get(g.tau1[i], g.tau2[j])
    }))
}

/// Top-left r×l block of ones.
pub fn e_matrix(m: usize, k: usize, r: usize, l: usize) -> Result<MixedMatrix> {
    let shape = Shape::new(m, k)?;
    if r == 0 || r > m || l == 0 || l > k {
        return Err(invalid(format!("block {r}x{l} does not fit in {m}x{k}")));
    }
    Ok(MixedMatrix::from_fn(shape, |i, j| if i < r && j < l { 1.0 } else { 0.0 }))
}
