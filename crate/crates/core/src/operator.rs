//! Representations of the task-averaged conjugation operator
//! S(A) = E[P A P] on symmetric matrices, where P is the null-space
//! projector of a random task.
//!
//! Two sources: an exact weighted atom list (enumerable families) and a bag
//! of Monte Carlo task samples. Either source can additionally be matricized
//! into a dense D×D matrix in svec coordinates (D = d(d+1)/2), which is
//! symmetric exactly when the operator is self-adjoint.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::family::TaskFamily;
use crate::stream::substream;
use crate::subspace::{orthonormal_complement, principal_cos2, SubspaceBasis};
use crate::svec::{smat, svec, svec_len, SymMatrixVec};
use crate::task::Task;
use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;

/// Hard cap from D = d(d+1)/2 <= 40000.
const MATRICIZE_ABSOLUTE_CAP: usize = 282;
/// Practical default cap for dense matricization.
pub const MATRICIZE_DEFAULT_CAP: usize = 64;

#[derive(Debug, Clone)]
pub enum OperatorSource {
    Exact { atoms: Vec<(f64, Task)> },
    MonteCarlo { samples: Vec<Task>, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SuperoperatorRep {
    d: usize,
    source: OperatorSource,
    matricized: Option<DMatrix<f64>>,
}

/// How to build a [`SuperoperatorRep`] from a family.
#[derive(Debug, Clone, Copy)]
pub enum OperatorBuild {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Whether to assemble the dense matricized form.
#[derive(Debug, Clone, Copy)]
pub enum Matricize {
    Skip,
    Dense { dim_cap: usize },
}

impl Matricize {
    /// Dense matricization at the practical default cap.
    pub fn dense() -> Self {
        Matricize::Dense { dim_cap: MATRICIZE_DEFAULT_CAP }
    }
}

/// Applies P A P through the low-rank visible factor, never materializing
/// the projector; O(d²·r). The result is re-symmetrized to kill rounding
/// skew between the two cross terms.
pub(crate) fn conjugate_by_null_projector(q: &SubspaceBasis, a: &DMatrix<f64>) -> DMatrix<f64> {
    if q.dim() == 0 {
        return a.clone();
    }
    let qc = q.columns();
    let w = qc.transpose() * a; // r×d
    let wq = &w * qc; // r×r
    let t1 = qc * &w; // QQᵀA
    let t3 = qc * wq * qc.transpose(); // QQᵀAQQᵀ
    let b = a - &t1 - t1.transpose() + t3;
    (&b + b.transpose()) * 0.5
}

impl SuperoperatorRep {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn source(&self) -> &OperatorSource {
        &self.source
    }

    pub fn matricized(&self) -> Option<&DMatrix<f64>> {
        self.matricized.as_ref()
    }

    pub(crate) fn from_atoms(d: usize, atoms: Vec<(f64, Task)>) -> Self {
        Self { d, source: OperatorSource::Exact { atoms }, matricized: None }
    }

    /// One application of the operator to a dense symmetric matrix.
    pub(crate) fn apply_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        if let Some(m) = &self.matricized {
            return smat(&(m * svec(a)), self.d);
        }
        self.apply_matrix_by_averaging(a)
    }

    fn apply_matrix_by_averaging(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.source {
            OperatorSource::Exact { atoms } => {
                let mut out = DMatrix::zeros(self.d, self.d);
                for (w, t) in atoms {
                    out += conjugate_by_null_projector(&t.visible, a) * *w;
                }
                out
            }
            OperatorSource::MonteCarlo { samples, .. } => {
                let parts = map_indexed(Execution::Parallel, samples.len(), |i| {
                    conjugate_by_null_projector(&samples[i].visible, a)
                });
                let mut out = DMatrix::zeros(self.d, self.d);
                for p in &parts {
                    out += p;
                }
                out / samples.len() as f64
            }
        }
    }

    /// Weighted tasks behind the operator (weight 1/M for samples).
    pub fn weighted_tasks(&self) -> Vec<(f64, &Task)> {
        match &self.source {
            OperatorSource::Exact { atoms } => atoms.iter().map(|(w, t)| (*w, t)).collect(),
            OperatorSource::MonteCarlo { samples, .. } => {
                let w = 1.0 / samples.len() as f64;
                samples.iter().map(|t| (w, t)).collect()
            }
        }
    }
}

/// Builds the operator representation for a family.
pub fn build_operator(
    family: &TaskFamily,
    build: OperatorBuild,
    matricize: Matricize,
) -> Result<SuperoperatorRep> {
    let d = family.dim();
    let source = match build {
        OperatorBuild::Exact => OperatorSource::Exact { atoms: family.enumerate_atoms()? },
        OperatorBuild::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Parameter("need at least one operator sample".into()));
            }
            let tasks = map_indexed(Execution::Parallel, samples, |i| {
                family.sample_task(&mut substream(seed, i as u64))
            });
            OperatorSource::MonteCarlo { samples: tasks, seed }
        }
    };
    let mut op = SuperoperatorRep { d, source, matricized: None };
    if let Matricize::Dense { dim_cap } = matricize {
        let cap = dim_cap.min(MATRICIZE_ABSOLUTE_CAP);
        if d > cap {
            return Err(Error::Size(format!(
                "matricization needs d <= {cap}, got d = {d} (D would be {})",
                svec_len(d)
            )));
        }
        op.matricized = Some(matricize_operator(&op));
    }
    Ok(op)
}

/// Dense svec-coordinate matrix: column j is svec(S(smat(e_j))).
fn matricize_operator(op: &SuperoperatorRep) -> DMatrix<f64> {
    let d = op.dim();
    let dd = svec_len(d);
    let cols = map_indexed(Execution::Parallel, dd, |j| {
        let mut unit = DVector::zeros(dd);
        unit[j] = 1.0;
        let basis_mat = smat(&unit, d);
        svec(&op.apply_matrix_by_averaging(&basis_mat))
    });
    let mut m = DMatrix::zeros(dd, dd);
    for (j, col) in cols.iter().enumerate() {
        m.set_column(j, col);
    }
    m
}

/// m-fold application of the operator; m = 0 is the identity.
pub fn apply_operator(op: &SuperoperatorRep, a: &SymMatrixVec, power: usize) -> Result<SymMatrixVec> {
    if a.dim() != op.dim() {
        return Err(Error::Parameter(format!(
            "matrix dimension {} does not match operator dimension {}",
            a.dim(),
            op.dim()
        )));
    }
    if power == 0 {
        return Ok(a.clone());
    }
    let mut cur = a.entries().clone();
    for _ in 0..power {
        cur = op.apply_matrix(&cur);
    }
    Ok(SymMatrixVec::from_symmetric(cur))
}

/// Result of power iteration for the operator norm.
#[derive(Debug, Clone, Copy)]
pub struct RhoEstimate {
    pub rho: f64,
    pub iterations: usize,
    /// Rayleigh-quotient change at the final iteration.
    pub residual: f64,
    pub converged: bool,
}

/// Largest eigenvalue of the self-adjoint PSD operator by power iteration,
/// started from I plus a small seeded symmetric perturbation. The returned
/// Rayleigh quotient never exceeds the represented operator's true norm.
pub fn estimate_rho(op: &SuperoperatorRep, max_iters: usize, tol: f64) -> Result<RhoEstimate> {
    if max_iters < 1 {
        return Err(Error::Parameter("need at least one power iteration".into()));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let d = op.dim();
    let mut rng = substream(0x9e37_79b9_7f4a_7c15, 0);
    let mut pert = DMatrix::from_fn(d, d, |_, _| {
        rand::Rng::sample::<f64, _>(&mut rng, StandardNormal)
    });
    pert = (&pert + pert.transpose()) * 0.5e-3;
    let mut a = DMatrix::identity(d, d) + pert;
    a /= a.norm();

    let mut prev = f64::NAN;
    let mut rho = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        let b = op.apply_matrix(&a);
        rho = a.dot(&b);
        residual = if prev.is_nan() { f64::INFINITY } else { (rho - prev).abs() };
        let bnorm = b.norm();
        if bnorm == 0.0 {
            // The operator annihilates the iterate: norm 0.
            return Ok(RhoEstimate { rho: 0.0, iterations: it, residual: 0.0, converged: true });
        }
        if residual <= tol {
            return Ok(RhoEstimate { rho, iterations: it, residual, converged: true });
        }
        prev = rho;
        a = b / bnorm;
    }
    Ok(RhoEstimate { rho, iterations: max_iters, residual, converged: false })
}

/// Normalized second-order invisibility score ⟨A, S(A)⟩_F / ‖A‖_F².
pub fn invisibility_score(op: &SuperoperatorRep, a: &SymMatrixVec) -> Result<f64> {
    let n2 = a.entries().norm_squared();
    if n2 == 0.0 {
        return Err(Error::Parameter("invisibility score of the zero matrix".into()));
    }
    let sa = op.apply_matrix(a.entries());
    Ok(a.entries().dot(&sa) / n2)
}

/// Invisibility score of a subspace pattern Π_E, computed two ways.
#[derive(Debug, Clone, Copy)]
pub struct SubspaceInvisibility {
    /// Rayleigh form ⟨Π_E, S(Π_E)⟩/m.
    pub score: f64,
    /// Principal-angle form (1/m)·avg Σ_j cos⁴θ_j over atoms/samples.
    pub principal_angle_score: f64,
}

/// Computes the invisibility of Π_E via the Rayleigh quotient and,
/// independently, via principal angles against each task null space; the
/// two routes agree up to numerical error on the same task bag.
pub fn invisibility_score_subspace(
    op: &SuperoperatorRep,
    e: &SubspaceBasis,
) -> Result<SubspaceInvisibility> {
    if e.dim() == 0 {
        return Err(Error::Parameter("invisibility score of the zero subspace".into()));
    }
    if e.ambient_dim() != op.dim() {
        return Err(Error::Parameter("ambient dimension mismatch".into()));
    }
    let proj = e.columns() * e.columns().transpose();
    let score = invisibility_score(op, &SymMatrixVec::from_symmetric(proj))?;

    let m = e.dim() as f64;
    let mut angle_score = 0.0;
    for (w, task) in op.weighted_tasks() {
        let null = orthonormal_complement(&task.visible);
        let quartic: f64 = principal_cos2(e, &null)?.iter().map(|c| c * c).sum();
        angle_score += w * quartic / m;
    }
    let denom = score.abs().max(angle_score.abs()).max(1e-12);
    if (score - angle_score).abs() / denom > 1e-8 {
        return Err(Error::Data(format!(
            "invisibility routes disagree: rayleigh {score}, angles {angle_score}"
        )));
    }
    Ok(SubspaceInvisibility { score, principal_angle_score: angle_score })
}
