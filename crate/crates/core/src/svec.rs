//! Isometric vectorization of symmetric matrices.
//!
//! A symmetric d×d matrix maps to a vector of length d(d+1)/2: diagonal
//! entries as-is, off-diagonal entries scaled by √2. The scaling makes the
//! map a linear isometry from (𝕊^d, Frobenius) to Euclidean space, so a
//! self-adjoint operator on 𝕊^d matricizes to a plain symmetric matrix.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Vector length for dimension `d`.
pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Encodes a symmetric matrix; the caller guarantees symmetry.
///
/// Entry order: row-major upper triangle, i.e. (0,0), (0,1), ..., (0,d-1),
/// (1,1), (1,2), ...
pub fn svec(a: &DMatrix<f64>) -> DVector<f64> {
    let d = a.nrows();
    let mut out = DVector::zeros(svec_len(d));
    let mut k = 0;
    for i in 0..d {
        out[k] = a[(i, i)];
        k += 1;
        for j in (i + 1)..d {
            out[k] = SQRT2 * a[(i, j)];
            k += 1;
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &DVector<f64>, d: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), svec_len(d), "svec length does not match dimension");
    let mut a = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        a[(i, i)] = v[k];
        k += 1;
        for j in (i + 1)..d {
            let x = v[k] / SQRT2;
            a[(i, j)] = x;
            a[(j, i)] = x;
            k += 1;
        }
    }
    a
}

/// A symmetric matrix together with its isometric vectorization.
#[derive(Debug, Clone)]
pub struct SymMatrixVec {
    entries: DMatrix<f64>,
    vec: DVector<f64>,
}

impl SymMatrixVec {
    /// Validates symmetry (within 1e-8 Frobenius), symmetrizes, and encodes.
    ///
    /// Asymmetry beyond the tolerance signals a bug upstream and is a data
    /// error rather than something to silently repair.
    pub fn encode(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Parameter(format!(
                "matrix is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        let skew = (a - a.transpose()).norm();
        if skew > 1e-8 {
            return Err(Error::Data(format!(
                "asymmetry {skew:.3e} exceeds 1e-8 in Frobenius norm"
            )));
        }
        let sym = (a + a.transpose()) * 0.5;
        let vec = svec(&sym);
        Ok(Self { entries: sym, vec })
    }

    /// Wraps a matrix that is symmetric by construction.
    pub(crate) fn from_symmetric(sym: DMatrix<f64>) -> Self {
        let vec = svec(&sym);
        Self { entries: sym, vec }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }
}
