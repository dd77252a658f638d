use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mixed_norm::{lp_norm, ExponentPair, MixedMatrix, Shape};

pub const ENUMERATION_CAP: u64 = 200_000;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Enumeration {
    /// Full orbit up to `cap` distinct vertices, otherwise `samples` draws.
    Auto { cap: u64, samples: usize, seed: u64 },
    Full,
    Sampled { count: usize, seed: u64 },
}

impl Default for Enumeration {
    fn default() -> Self {
        Enumeration::Auto { cap: ENUMERATION_CAP, samples: DEFAULT_SAMPLES, seed: 0 }
    }
}

/// `V_{r,l}^{m,k}` together with how its vertices are visited.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexFamily {
    pub shape: Shape,
    pub r: usize,
    pub l: usize,
    pub enumeration: Enumeration,
}

impl VertexFamily {
    pub fn new(shape: Shape, r: usize, l: usize, enumeration: Enumeration) -> Result<Self> {
        if r == 0 || r > shape.m || l == 0 || l > shape.k {
            return Err(invalid(format!("block {r}x{l} does not fit in {}x{}", shape.m, shape.k)));
        }
        Ok(VertexFamily { shape, r, l, enumeration })
    }

    /// `C(m,r)·C(k,l)·2^{r+l-1}`, or `None` past `u128`.
    pub fn distinct_vertex_count(&self) -> Option<u128> {
        let c1 = binomial(self.shape.m as u128, self.r as u128)?;
        let c2 = binomial(self.shape.k as u128, self.l as u128)?;
        let bits = (self.r + self.l - 1) as u32;
        let signs = 1u128.checked_shl(bits).filter(|_| bits < 127)?;
        c1.checked_mul(c2)?.checked_mul(signs)
    }

    /// Whether the orbit is enumerated exhaustively.
    pub fn is_full(&self) -> bool {
        match self.enumeration {
            Enumeration::Full => true,
            Enumeration::Sampled { .. } => false,
            Enumeration::Auto { cap, .. } => {
                self.distinct_vertex_count().is_some_and(|c| c <= cap as u128)
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.enumeration {
            Enumeration::Full => None,
            Enumeration::Sampled { seed, .. } | Enumeration::Auto { seed, .. } => {
                (!self.is_full()).then_some(seed)
            }
        }
    }

    pub fn transpose(&self) -> VertexFamily {
        VertexFamily { shape: self.shape.transpose(), r: self.l, l: self.r, ..*self }
    }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// One vertex: signs `row_signs[a]·col_signs[b]` on `rows × cols`, zero elsewhere.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexPattern {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub row_signs: Vec<i8>,
    pub col_signs: Vec<i8>,
}

impl VertexPattern {
    pub fn to_matrix(&self, shape: Shape) -> MixedMatrix {
        let mut x = MixedMatrix::zeros(shape);
        for (a, &i) in self.rows.iter().enumerate() {
            for (b, &j) in self.cols.iter().enumerate() {
                x.set(i, j, f64::from(self.row_signs[a] * self.col_signs[b]));
            }
        }
        x
    }

    /// Mixed norm of `c` times this vertex, evaluated over the support only.
    pub fn scaled_norm(&self, c: f64, e: ExponentPair) -> f64 {
        let inner: Vec<f64> = self
            .col_signs
            .iter()
            .map(|&sb| {
                lp_norm(self.row_signs.iter().map(move |&sa| c * f64::from(sa * sb)), e.p)
            })
            .collect();
        lp_norm(inner.iter().copied(), e.theta)
    }
}

fn signs_from_mask(mask: u64, len: usize) -> Vec<i8> {
    (0..len).map(|b| if mask >> b & 1 == 1 { -1 } else { 1 }).collect()
}

/// Distinct vertex patterns, or seeded draws when the orbit is too large.
pub fn orbit_patterns(f: &VertexFamily) -> Box<dyn Iterator<Item = VertexPattern> + Send> {
    let (m, k, r, l) = (f.shape.m, f.shape.k, f.r, f.l);
    if f.is_full() {
        // the global sign is fixed by col_signs[0] = +1
        let it = (0..m).combinations(r).flat_map(move |rows| {
            (0..k).combinations(l).flat_map(move |cols| {
                let rows = rows.clone();
                (0..1u64 << r).flat_map(move |rm| {
                    let rows = rows.clone();
                    let cols = cols.clone();
                    (0..1u64 << (l - 1)).map(move |cm| VertexPattern {
                        rows: rows.clone(),
                        cols: cols.clone(),
                        row_signs: signs_from_mask(rm, r),
                        col_signs: signs_from_mask(cm << 1, l),
                    })
                })
            })
        });
        return Box::new(it);
    }
    let (count, seed) = match f.enumeration {
        Enumeration::Sampled { count, seed } => (count, seed),
        Enumeration::Auto { samples, seed, .. } => (samples, seed),
        Enumeration::Full => unreachable!(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Box::new((0..count).map(move |_| {
        let mut rows = sample(&mut rng, m, r).into_vec();
        let mut cols = sample(&mut rng, k, l).into_vec();
        rows.sort_unstable();
        cols.sort_unstable();
        let row_signs = (0..r).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let mut col_signs: Vec<i8> =
            (0..l).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        col_signs[0] = 1;
        VertexPattern { rows, cols, row_signs, col_signs }
    }))
}

pub fn orbit_vertices(f: &VertexFamily) -> impl Iterator<Item = MixedMatrix> + Send {
    let shape = f.shape;
    orbit_patterns(f).map(move |v| v.to_matrix(shape))
}
