//! Deterministic, seedable subspace kernels: uniform orthonormal-basis
//! sampling on (constrained) Grassmannians, projector application through
//! low-rank factors, and principal angles.
//!
//! Sampling follows the Gaussian-then-orthonormalize protocol: draw a
//! d×(m+5) standard-Gaussian matrix (clamped to d columns), project the
//! constraints, orthonormalize, keep the first m columns, and repeat the
//! whole draw on numerical rank deficiency. Orthonormalization is two-pass
//! modified Gram–Schmidt in column order (a fixed-pivot convention), so a
//! given input matrix always produces the same basis.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Column norm below which a draw counts as numerically rank-deficient.
const RANK_DEFICIENCY_TOL: f64 = 1e-8;
/// Consecutive rank-deficient redraws tolerated before giving up.
const MAX_RETRIES: usize = 64;

/// An orthonormal basis of an m-dimensional subspace of R^d.
///
/// Invariant: columnsᵀ·columns = I_m within 1e-10 Frobenius; 0 ≤ m ≤ d.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    columns: DMatrix<f64>,
}

impl SubspaceBasis {
    /// Wraps a matrix after checking orthonormality of its columns.
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        let m = columns.ncols();
        let gram = columns.transpose() * &columns;
        let dev = (&gram - DMatrix::identity(m, m)).norm();
        if dev > 1e-10 {
            return Err(Error::Parameter(format!(
                "columns are not orthonormal: ||QᵀQ - I|| = {dev:.3e}"
            )));
        }
        Ok(Self { columns })
    }

    /// Wraps a matrix whose columns were just orthonormalized internally.
    pub(crate) fn new_unchecked(columns: DMatrix<f64>) -> Self {
        Self { columns }
    }

    /// The empty basis of the zero subspace of R^d.
    pub fn empty(d: usize) -> Self {
        Self { columns: DMatrix::zeros(d, 0) }
    }

    /// Basis spanned by the given standard coordinate vectors.
    pub fn coordinate(d: usize, coords: &[usize]) -> Self {
        let mut columns = DMatrix::zeros(d, coords.len());
        for (j, &i) in coords.iter().enumerate() {
            assert!(i < d, "coordinate out of range");
            columns[(i, j)] = 1.0;
        }
        Self { columns }
    }

    /// Ambient dimension d.
    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Subspace dimension m.
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Projects `v` onto the subspace: Q(Qᵀv), cost O(d·m).
    pub fn project_onto(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient_dim());
        }
        let coeffs = self.columns.transpose() * v;
        &self.columns * coeffs
    }
}

/// A constraint restricting where a subspace may be sampled.
#[derive(Debug, Clone, Copy)]
pub enum Constraint<'a> {
    /// The subspace must be orthogonal to this (nonzero) vector.
    OrthogonalTo(&'a DVector<f64>),
    /// The subspace must lie inside the span of this basis.
    Inside(&'a SubspaceBasis),
}

/// Draws an orthonormal basis of an m-dimensional subspace uniformly
/// (rotation-invariantly) from the Grassmannian cut out by `constraints`,
/// applied in order.
pub fn sample_orthonormal_basis<R: Rng + ?Sized>(
    d: usize,
    m: usize,
    constraints: &[Constraint<'_>],
    rng: &mut R,
) -> Result<SubspaceBasis> {
    if d == 0 || m == 0 || m > d {
        return Err(Error::Parameter(format!(
            "invalid dimensions: d = {d}, m = {m} (need 0 < m <= d)"
        )));
    }
    let mut free_dim = d;
    for c in constraints {
        match c {
            Constraint::OrthogonalTo(u) => {
                if u.len() != d {
                    return Err(Error::Parameter(format!(
                        "constraint vector has length {}, ambient dimension is {d}",
                        u.len()
                    )));
                }
                if u.norm() == 0.0 {
                    return Err(Error::Parameter("constraint vector is zero".into()));
                }
                free_dim = free_dim.saturating_sub(1);
            }
            Constraint::Inside(r) => {
                if r.ambient_dim() != d {
                    return Err(Error::Parameter(format!(
                        "constraint basis lives in R^{}, ambient dimension is {d}",
                        r.ambient_dim()
                    )));
                }
                free_dim = free_dim.min(r.dim());
            }
        }
    }
    if m > free_dim {
        return Err(Error::Parameter(format!(
            "m = {m} exceeds the constrained dimension {free_dim}"
        )));
    }

    // Surplus of 5 columns, clamped to d total.
    let cols = (m + 5).min(d);
    for _ in 0..MAX_RETRIES {
        let mut g = DMatrix::from_fn(d, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        for c in constraints {
            match c {
                Constraint::OrthogonalTo(u) => {
                    let un = *u / u.norm();
                    let coeffs = un.transpose() * &g;
                    g -= &un * coeffs;
                }
                Constraint::Inside(r) => {
                    let coeffs = r.columns().transpose() * &g;
                    g = r.columns() * coeffs;
                }
            }
        }
        if let Some(q) = orthonormalize_first_columns(&g, m) {
            return Ok(SubspaceBasis::new_unchecked(q));
        }
    }
    Err(Error::SamplingFailure(format!(
        "{MAX_RETRIES} consecutive rank-deficient draws (d = {d}, m = {m}); \
         the constraint set is degenerate"
    )))
}

/// Two-pass Gram–Schmidt on the first `m` columns of `g`, in column order
/// (a fixed-pivot convention); the second projection pass restores
/// orthogonality to machine precision.
///
/// Returns `None` when a column norm falls below the rank-deficiency
/// threshold before normalization.
fn orthonormalize_first_columns(g: &DMatrix<f64>, m: usize) -> Option<DMatrix<f64>> {
    let d = g.nrows();
    let mut q = DMatrix::zeros(d, m);
    let mut coeffs = DVector::zeros(m);
    for j in 0..m {
        let mut v = g.column(j).clone_owned();
        for _pass in 0..2 {
            if j > 0 {
                let prev = q.columns(0, j);
                let mut c = coeffs.rows_mut(0, j);
                c.gemv_tr(1.0, &prev, &v, 0.0);
                v.gemv(-1.0, &prev, &c, 1.0);
            }
            if v.norm() < RANK_DEFICIENCY_TOL {
                return None;
            }
        }
        let norm = v.norm();
        q.set_column(j, &(v / norm));
    }
    Some(q)
}

/// Applies the complementary projector: (I - QQᵀ)v through the low-rank
/// factor, never materializing the d×d projector. Cost O(d·m).
pub fn project_off(q: &SubspaceBasis, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != q.ambient_dim() {
        return Err(Error::Parameter(format!(
            "vector length {} does not match ambient dimension {}",
            v.len(),
            q.ambient_dim()
        )));
    }
    if q.dim() == 0 {
        return Ok(v.clone());
    }
    let coeffs = q.columns().transpose() * v;
    Ok(v - q.columns() * coeffs)
}

/// Squared principal-angle cosines between the subspaces spanned by `e`
/// and `n`: the eigenvalues of Uᵀ P_N U, sorted descending.
pub fn principal_cos2(e: &SubspaceBasis, n: &SubspaceBasis) -> Result<Vec<f64>> {
    if e.ambient_dim() != n.ambient_dim() {
        return Err(Error::Parameter(format!(
            "ambient dimensions differ: {} vs {}",
            e.ambient_dim(),
            n.ambient_dim()
        )));
    }
    if e.dim() == 0 {
        return Err(Error::Parameter("first subspace has dimension 0".into()));
    }
    if n.dim() == 0 {
        return Ok(vec![0.0; e.dim()]);
    }
    // Uᵀ P_N U = WᵀW with W = NᵀU, so the eigenvalues are the squared
    // singular values of W; the Gram form keeps everything symmetric PSD.
    let w = n.columns().transpose() * e.columns();
    let gram = w.transpose() * w;
    let mut vals: Vec<f64> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&x| x.clamp(0.0, 1.0))
        .collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Deterministic orthonormal basis of the orthogonal complement of the
/// span of `basis`.
///
/// Projects the standard basis off the subspace and runs Gram–Schmidt with
/// greedy max-norm pivoting, so the result depends only on the input matrix.
pub fn orthonormal_complement(basis: &SubspaceBasis) -> SubspaceBasis {
    let d = basis.ambient_dim();
    let m = basis.dim();
    let want = d - m;
    if want == 0 {
        return SubspaceBasis::empty(d);
    }
    // Residuals of the standard basis: columns of I - QQᵀ.
    let mut cand = DMatrix::identity(d, d);
    if m > 0 {
        let coeffs = basis.columns().transpose() * &cand;
        cand -= basis.columns() * coeffs;
    }
    let mut out = DMatrix::zeros(d, want);
    let mut norms: Vec<f64> = (0..d).map(|j| cand.column(j).norm_squared()).collect();
    let mut used = vec![false; d];
    for k in 0..want {
        let mut best = usize::MAX;
        let mut best_norm = -1.0;
        for j in 0..d {
            if !used[j] && norms[j] > best_norm {
                best_norm = norms[j];
                best = j;
            }
        }
        let mut v = cand.column(best).clone_owned();
        // Re-orthogonalize against already accepted columns for stability.
        for i in 0..k {
            let qi = out.column(i).clone_owned();
            let c = qi.dot(&v);
            v.axpy(-c, &qi, 1.0);
        }
        let norm = v.norm();
        debug_assert!(norm > 1e-12, "complement pivot collapsed");
        v /= norm;
        for j in 0..d {
            if !used[j] {
                let c = v.dot(&cand.column(j).clone_owned());
                let mut col = cand.column_mut(j);
                col.axpy(-c, &v, 1.0);
                norms[j] = col.norm_squared();
            }
        }
        out.set_column(k, &v);
        used[best] = true;
    }
    SubspaceBasis::new_unchecked(out)
}

/// Orthonormal basis of u^⊥ for a single nonzero vector, via the
/// Householder reflection that maps e₁ to ±u. Cost O(d²).
pub fn hyperplane_basis(u: &DVector<f64>) -> Result<SubspaceBasis> {
    let d = u.len();
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::Parameter("direction vector is zero".into()));
    }
    let un = u / norm;
    // v = un + sign(un[0]) e1 avoids cancellation.
    let sign = if un[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = un.clone();
    v[0] += sign;
    let vn2 = v.norm_squared();
    // Columns 2..d of H = I - 2vvᵀ/‖v‖² are an orthonormal basis of un^⊥.
    let mut out = DMatrix::zeros(d, d - 1);
    for j in 1..d {
        let mut col = DVector::zeros(d);
        col[j] = 1.0;
        let c = 2.0 * v[j] / vn2;
        col.axpy(-c, &v, 1.0);
        out.set_column(j - 1, &col);
    }
    Ok(SubspaceBasis::new_unchecked(out))
}
