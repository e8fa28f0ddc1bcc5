//! One regression task, stored as an orthonormal visible basis plus a row
//! scale. The visible basis Q spans the row space (X = σ·Qᵀ up to row count),
//! the null-space projector is P = I − QQᵀ, and the visible covariance is
//! C = (σ²/n)·QQᵀ. P never depends on the scale; only the loss does.

use crate::subspace::SubspaceBasis;
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct Task {
    /// Orthonormal basis of the visible (row) space; d×r.
    pub visible: SubspaceBasis,
    /// Row scale σ > 0.
    pub scale: f64,
    /// Row count n; equals the rank for the built-in families, 0 for
    /// rank-0 tasks (whose loss is 0 by convention).
    pub rows: usize,
}

impl Task {
    /// Unit-scale task whose row count equals its rank.
    pub fn from_visible(visible: SubspaceBasis) -> Self {
        let rows = visible.dim();
        Self { visible, scale: 1.0, rows }
    }

    pub fn ambient_dim(&self) -> usize {
        self.visible.ambient_dim()
    }

    /// rank(X) = dim of the visible subspace.
    pub fn rank(&self) -> usize {
        self.visible.dim()
    }

    /// Dense visible covariance C = (σ²/n)·QQᵀ; zero for rank-0 tasks.
    pub fn covariance(&self) -> DMatrix<f64> {
        let d = self.ambient_dim();
        if self.rank() == 0 || self.rows == 0 {
            return DMatrix::zeros(d, d);
        }
        let q = self.visible.columns();
        (q * q.transpose()) * (self.scale * self.scale / self.rows as f64)
    }

    /// ‖C‖_F = σ²·√r/n (0 for rank-0 tasks).
    pub fn covariance_fro(&self) -> f64 {
        if self.rank() == 0 || self.rows == 0 {
            return 0.0;
        }
        self.scale * self.scale * (self.rank() as f64).sqrt() / self.rows as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::root_stream;
    use crate::subspace::sample_orthonormal_basis;
    use approx::assert_relative_eq;

    #[test]
    fn covariance_norm_matches_closed_form() {
        let mut rng = root_stream(21);
        let q = sample_orthonormal_basis(9, 4, &[], &mut rng).unwrap();
        let t = Task { visible: q, scale: 0.7, rows: 4 };
        assert_relative_eq!(t.covariance().norm(), t.covariance_fro(), epsilon = 1e-12);
        // (σ²/n)·√r with σ=1, n=r gives 1/√r.
        let t1 = Task { visible: t.visible.clone(), scale: 1.0, rows: 4 };
        assert_relative_eq!(t1.covariance_fro(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rank_zero_task_has_zero_covariance() {
        let t = Task { visible: SubspaceBasis::empty(3), scale: 1.0, rows: 0 };
        assert_eq!(t.covariance(), DMatrix::zeros(3, 3));
        assert_eq!(t.covariance_fro(), 0.0);
    }
}
