use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};

pub const ORTHO_TOL: f64 = 1e-10;

/// An `n`-dimensional subspace of `R^{mk}` given by orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Subspace", 3)?;
        st.serialize_field("ambient_dim", &self.ambient_dim())?;
        st.serialize_field("dim", &self.dim())?;
        let cols: Vec<Vec<f64>> =
            self.basis.column_iter().map(|c| c.iter().copied().collect()).collect();
        st.serialize_field("basis", &cols)?;
        st.end()
    }
}

/// Thin QR with the sign convention `R_ii ≥ 0`.
pub(crate) fn orthonormalize(a: DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return a;
    }
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl Subspace {
    /// The zero subspace.
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { basis: DMatrix::zeros(ambient_dim, 0) }
    }

    /// Orthonormalizes the given columns; fails on rank deficiency.
    pub fn from_columns(a: DMatrix<f64>) -> Result<Self> {
        if a.ncols() > a.nrows() {
            return Err(invalid(format!("{} columns in dimension {}", a.ncols(), a.nrows())));
        }
        let scale = a.norm().max(f64::MIN_POSITIVE);
        let r = a.clone().qr().r();
        if (0..a.ncols()).any(|j| r[(j, j)].abs() <= 1e-10 * scale) {
            return Err(invalid("columns are not linearly independent"));
        }
        let q = orthonormalize(a);
        Ok(Subspace { basis: q })
    }

    /// Takes columns that are already orthonormal to [`ORTHO_TOL`].
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let s = Subspace { basis };
        if s.orthonormality_error() > ORTHO_TOL {
            return Err(invalid("basis is not orthonormal"));
        }
        Ok(s)
    }

    pub(crate) fn from_orthonormal_unchecked(basis: DMatrix<f64>) -> Self {
        Subspace { basis }
    }

    /// Gaussian columns, orthonormalized.
    pub fn random(ambient_dim: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let a = DMatrix::from_fn(ambient_dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        Subspace { basis: orthonormalize(a) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `max |BᵀB - I|`
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis;
        let n = g.nrows();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * x)
    }

    /// Adds one random direction orthogonal to the current span, keeping the
    /// existing columns bit-for-bit.
    pub fn extended(&self, rng: &mut impl Rng) -> Result<Subspace> {
        let d = self.ambient_dim();
        if self.dim() >= d {
            return Err(invalid("subspace already spans the ambient space"));
        }
        for _ in 0..16 {
            let mut v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                let c = self.basis.transpose() * &v;
                v -= &self.basis * c;
            }
            let nv = v.norm();
            if nv > 1e-6 {
                v /= nv;
                let mut b = self.basis.clone().insert_column(self.dim(), 0.0);
                b.set_column(self.dim(), &v);
                return Ok(Subspace { basis: b });
            }
        }
        Err(invalid("could not extend the subspace"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (d, n) in [(4, 2), (16, 7), (9, 9), (5, 0)] {
            let s = Subspace::random(d, n, &mut rng);
            assert_eq!((s.ambient_dim(), s.dim()), (d, n));
            assert!(s.orthonormality_error() < 1e-12);
        }
    }

    #[test]
    fn extension_keeps_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Subspace::random(6, 3, &mut rng);
        let t = s.extended(&mut rng).unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.basis().columns(0, 3), s.basis().columns(0, 3));
        assert!(t.orthonormality_error() < 1e-12);
    }

    #[test]
    fn rejects_dependent_columns() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!(Subspace::from_columns(a).is_err());
        let b = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let s = Subspace::from_columns(b).unwrap();
        assert!((s.basis()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!(Subspace::from_orthonormal(DMatrix::from_element(2, 1, 1.0)).is_err());
    }
}
