use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution};

use crate::extremal::{apply_gamma, e_matrix, SignedPermutation};
use crate::mixed_norm::{mixed_norm, BallSpec, MixedMatrix};

/// 1, 2, 4, ... below `n`, then `n`.
fn ladder(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = std::iter::successors(Some(1usize), |x| Some(x * 2))
        .take_while(|&x| x < n)
        .collect();
    v.push(n);
    v
}

fn normalized(x: MixedMatrix, b: &BallSpec) -> Option<MixedMatrix> {
    let v = mixed_norm(&x, b.exps);
    (v > 0.0 && v.is_finite()).then(|| x.scaled(b.nu / v))
}

/// Points on the sphere of radius `ν`: the signed axis points, block
/// patterns `e(r,l)` for `r`, `l` on a doubling ladder each with one random
/// signed-permutation image, then `count` normalized Cauchy directions.
pub fn ball_boundary_sample(b: &BallSpec, count: usize, seed: u64) -> Vec<MixedMatrix> {
    let (m, k) = (b.shape.m, b.shape.k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * m * k + count);
    for j in 0..k {
        for i in 0..m {
            for s in [1.0, -1.0] {
                let mut x = MixedMatrix::zeros(b.shape);
                x.set(i, j, s * b.nu);
                out.push(x);
            }
        }
    }
    for &r in &ladder(m) {
        for &l in &ladder(k) {
            let e = e_matrix(m, k, r, l).expect("block fits");
            let mut t1: Vec<usize> = (0..m).collect();
            let mut t2: Vec<usize> = (0..k).collect();
            t1.shuffle(&mut rng);
            t2.shuffle(&mut rng);
            let e1 = (0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let e2 = (0..k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let g = SignedPermutation::new(t1, t2, e1, e2).expect("valid element");
            let ge = apply_gamma(&g, &e).expect("shapes match");
            out.extend(normalized(e, b));
            out.extend(normalized(ge, b));
        }
    }
    let cauchy = Cauchy::new(0.0, 1.0).expect("valid scale");
    let mut made = 0;
    while made < count {
        let x = MixedMatrix::from_fn(b.shape, |_, _| cauchy.sample(&mut rng));
        if let Some(y) = normalized(x, b) {
            out.push(y);
            made += 1;
        }
    }
    out
}
