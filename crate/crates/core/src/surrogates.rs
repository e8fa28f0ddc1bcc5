//! Projection-based surrogate ladder: mean projector statistics, the
//! Frobenius chain, the residual surrogate, the transfer / coarse /
//! exponential bounds, closed forms for commuting, rank-one, and mixture
//! laws, and the scale-blindness demonstration.
//!
//! These quantities see only the projector law. They bound the actual
//! forgetting from above but cannot determine its scale: rescaling every
//! task leaves all of them unchanged while the loss scales quadratically.

use crate::dynamics::{rollout_forgetting, ForgettingCurve, RolloutOptions};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::family::TaskFamily;
use crate::operator::{build_operator, estimate_rho, Matricize, OperatorBuild, SuperoperatorRep};
use crate::stream::substream;
use crate::task::Task;
use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;

/// Mean projector P̄ = E[P] with its trace and spectral norm.
#[derive(Debug, Clone)]
pub struct MeanProjectorStats {
    pub p_bar: DMatrix<f64>,
    /// ν = tr(P̄).
    pub nu: f64,
    /// λ = ‖P̄‖₂.
    pub lambda: f64,
    pub source: String,
}

/// Frobenius chain f₀..f_M and partial traces κ₁..κ_{M+1}.
#[derive(Debug, Clone)]
pub struct ChainSequence {
    pub f: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// P̄ as a weighted or empirical average of null projectors.
pub fn mean_projector(family: &TaskFamily, build: OperatorBuild) -> Result<MeanProjectorStats> {
    let op = build_operator(family, build, Matricize::Skip)?;
    Ok(mean_projector_of(&op))
}

/// P̄ = S(I) for the operator's own task bag.
pub fn mean_projector_of(op: &SuperoperatorRep) -> MeanProjectorStats {
    let d = op.dim();
    let p_bar = op.apply_matrix(&DMatrix::identity(d, d));
    let nu = p_bar.trace();
    let lambda = p_bar
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    let source = match op.source() {
        crate::operator::OperatorSource::Exact { atoms } => format!("exact-atoms({})", atoms.len()),
        crate::operator::OperatorSource::MonteCarlo { samples, .. } => {
            format!("monte-carlo({})", samples.len())
        }
    };
    MeanProjectorStats { p_bar, nu, lambda, source }
}

/// f_m = tr(S^m(I − P̄)) for m = 0..M and κ_m = tr(S^{m−1}(P̄)) for
/// m = 1..M+1, both through repeated operator application.
pub fn chain_f(family: &TaskFamily, max_index: usize, build: OperatorBuild) -> Result<ChainSequence> {
    let op = build_operator(family, build, Matricize::Skip)?;
    chain_f_of(&op, max_index)
}

pub fn chain_f_of(op: &SuperoperatorRep, max_index: usize) -> Result<ChainSequence> {
    if max_index < 1 {
        return Err(Error::Parameter("chain needs at least one step".into()));
    }
    let d = op.dim();
    let p_bar = op.apply_matrix(&DMatrix::identity(d, d));

    let mut f = Vec::with_capacity(max_index + 1);
    let mut a = DMatrix::identity(d, d) - &p_bar;
    f.push(a.trace());
    for _ in 1..=max_index {
        a = op.apply_matrix(&a);
        f.push(a.trace());
    }

    let mut kappa = Vec::with_capacity(max_index + 1);
    let mut b = p_bar;
    kappa.push(b.trace());
    for _ in 2..=max_index + 1 {
        b = op.apply_matrix(&b);
        kappa.push(b.trace());
    }
    Ok(ChainSequence { f, kappa })
}

/// Monte Carlo estimate of the residual surrogate together with a flag for
/// the normalization precondition (task scales ≤ 1).
#[derive(Debug, Clone, Copy)]
pub struct ResidualEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Set when the family can emit scales above 1, in which case the
    /// surrogate no longer upper-bounds the forgetting loss.
    pub normalization_warning: bool,
}

/// Power-iteration controls for the spectral norms inside the residual
/// surrogate (the quantity is defined without an estimator; these are ours).
const RESIDUAL_POWER_ITERS: usize = 30;
const RESIDUAL_POWER_TOL: f64 = 1e-10;

/// R(k) = E[(1/k)·Σ_{t=1}^{k−1} ‖(I−P_t)·P_k⋯P_1‖₂²], with each spectral
/// norm taken by power iteration and every projector applied as a low-rank
/// update. Task sequences match [`rollout_forgetting`] under the same run
/// seed, so the surrogate can be compared against forgetting per
/// realization.
///
/// For commuting laws the product contains P_t itself, so every term is
/// identically zero; positive surrogate values there live in the chain
/// bound 4·f_h, not in R.
pub fn residual_surrogate(
    family: &TaskFamily,
    k: usize,
    n_traj: usize,
    run_seed: u64,
    step_budget: Option<f64>,
) -> Result<ResidualEstimate> {
    if k < 2 {
        return Err(Error::Parameter("residual surrogate needs k >= 2".into()));
    }
    if n_traj == 0 {
        return Err(Error::Parameter("need at least one trajectory".into()));
    }
    if let Some(budget) = step_budget {
        let cost = residual_cost(family, k, n_traj);
        if cost > budget {
            return Err(Error::Budget(format!(
                "estimated {cost:.3e} projector flops exceed the budget {budget:.3e}"
            )));
        }
    }
    let normalization_warning = family.max_scale() > 1.0 + 1e-12;

    let per_traj: Vec<f64> = map_indexed(Execution::Parallel, n_traj, |j| {
        let mut rng = substream(run_seed, j as u64);
        let tasks: Vec<Task> = (0..k).map(|_| family.sample_task(&mut rng)).collect();
        let d = family.dim();
        let start = DVector::from_fn(d, |_, _| {
            rand::Rng::sample::<f64, _>(&mut rng, StandardNormal)
        });
        let mut acc = 0.0;
        for t in 0..k - 1 {
            acc += product_spectral_norm_sq(&tasks, t, &start);
        }
        acc / k as f64
    });

    let n = n_traj as f64;
    let mean = per_traj.iter().sum::<f64>() / n;
    let stderr = if n_traj > 1 {
        let var = per_traj.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(ResidualEstimate { mean, stderr, normalization_warning })
}

/// ‖(I−P_t)·P_k⋯P_1‖₂² via power iteration on BᵀB, applying the product as
/// a sequence of low-rank updates.
fn product_spectral_norm_sq(tasks: &[Task], t: usize, start: &DVector<f64>) -> f64 {
    let apply_b = |v: &DVector<f64>| -> DVector<f64> {
        let mut x = v.clone();
        for task in tasks {
            x = crate::subspace::project_off(&task.visible, &x).unwrap();
        }
        // (I − P_t) = projection onto the visible subspace of task t.
        tasks[t].visible.project_onto(&x)
    };
    let apply_bt = |v: &DVector<f64>| -> DVector<f64> {
        let mut x = tasks[t].visible.project_onto(v);
        for task in tasks.iter().rev() {
            x = crate::subspace::project_off(&task.visible, &x).unwrap();
        }
        x
    };

    let mut v = start.clone();
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut lambda = 0.0;
    let mut prev = f64::NAN;
    for _ in 0..RESIDUAL_POWER_ITERS {
        let w = apply_b(&v);
        lambda = w.norm_squared();
        if lambda == 0.0 {
            return 0.0;
        }
        if !prev.is_nan() && (lambda - prev).abs() <= RESIDUAL_POWER_TOL * lambda.max(1.0) {
            return lambda;
        }
        prev = lambda;
        let back = apply_bt(&w);
        let bn = back.norm();
        if bn == 0.0 {
            return lambda;
        }
        v = back / bn;
    }
    lambda
}

/// Flop estimate for the budget guard.
pub fn residual_cost(family: &TaskFamily, k: usize, n_traj: usize) -> f64 {
    let d = family.dim() as f64;
    let r = family.fixed_rank().unwrap_or(family.dim()) as f64;
    n_traj as f64 * (k as f64 - 1.0) * RESIDUAL_POWER_ITERS as f64 * 2.0 * k as f64 * d * r
}

/// The three projection bounds at horizon k.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateBounds {
    /// 4·f_h with h = ⌈(k−1)/2⌉.
    pub transfer: f64,
    /// 8ν/(k−1).
    pub coarse: f64,
    /// 4·λ^{h−1}·f₁.
    pub exponential: f64,
}

pub fn surrogate_bounds(
    stats: &MeanProjectorStats,
    chain: &ChainSequence,
    k: usize,
) -> Result<SurrogateBounds> {
    if k < 2 {
        return Err(Error::Parameter("bounds need k >= 2".into()));
    }
    let h = k / 2; // ⌈(k−1)/2⌉
    if chain.f.len() <= h {
        return Err(Error::Parameter(format!(
            "chain reaches f_{}, need f_{h} for k = {k}",
            chain.f.len() - 1
        )));
    }
    Ok(SurrogateBounds {
        transfer: 4.0 * chain.f[h],
        coarse: 8.0 * stats.nu / (k as f64 - 1.0),
        exponential: 4.0 * stats.lambda.powi(h as i32 - 1) * chain.f[1],
    })
}

/// Closed form for commuting laws: f_m = Σ_i p_i^m·(1−p_i).
pub fn commuting_f(retain_probs: &[f64], m: usize) -> Result<f64> {
    for &p in retain_probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("retention probability {p} outside [0, 1]")));
        }
    }
    Ok(retain_probs.iter().map(|&p| p.powi(m as i32) * (1.0 - p)).sum())
}

/// Rank-one chain value through the fourth-moment matrix in plain
/// (unscaled) Kronecker vectorization, plus the pairwise-overlap f₁.
#[derive(Debug, Clone, Copy)]
pub struct RankOneChain {
    /// ⟨vec(I), H^m·vec(I−M)⟩.
    pub f_m: f64,
    /// 1 − tr(M²).
    pub f1: f64,
}

pub fn rank_one_chain(directions: &[(f64, DVector<f64>)], m: usize) -> Result<RankOneChain> {
    if directions.is_empty() {
        return Err(Error::Parameter("empty direction set".into()));
    }
    let d = directions[0].1.len();
    if d > 16 {
        return Err(Error::Size(format!(
            "fourth-moment matrix is d²×d²; cap is d <= 16, got d = {d}"
        )));
    }
    let mut weight_sum = 0.0;
    for (w, u) in directions {
        if u.len() != d {
            return Err(Error::Parameter("directions have mixed dimensions".into()));
        }
        if (u.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter("directions must be unit vectors".into()));
        }
        if *w < 0.0 {
            return Err(Error::Parameter("negative weight".into()));
        }
        weight_sum += w;
    }
    if (weight_sum - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("weights sum to {weight_sum}")));
    }

    let mut second = DMatrix::<f64>::zeros(d, d);
    let mut fourth = DMatrix::<f64>::zeros(d * d, d * d);
    for (w, u) in directions {
        let p = u * u.transpose();
        second += &p * *w;
        fourth += p.kronecker(&p) * *w;
    }
    let f1 = 1.0 - (&second * &second).trace();

    let ident = DMatrix::<f64>::identity(d, d);
    let vec_of = |a: &DMatrix<f64>| DVector::from_column_slice(a.as_slice());
    let mut x = vec_of(&(&ident - &second));
    for _ in 0..m {
        x = &fourth * x;
    }
    let f_m = vec_of(&ident).dot(&x);
    Ok(RankOneChain { f_m, f1 })
}

/// Two-component mixture decomposition of the one-step surrogate.
pub fn mixture_f1(
    q: f64,
    stats_a: &MeanProjectorStats,
    stats_b: &MeanProjectorStats,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Parameter(format!("mixture weight q = {q} outside [0, 1]")));
    }
    if stats_a.p_bar.nrows() != stats_b.p_bar.nrows() {
        return Err(Error::Parameter("mixture components have different dimensions".into()));
    }
    let kappa_aa = (&stats_a.p_bar * &stats_a.p_bar).trace();
    let kappa_bb = (&stats_b.p_bar * &stats_b.p_bar).trace();
    let kappa_ab = (&stats_a.p_bar * &stats_b.p_bar).trace();
    Ok(q * stats_a.nu + (1.0 - q) * stats_b.nu
        - (q * q * kappa_aa + (1.0 - q) * (1.0 - q) * kappa_bb + 2.0 * q * (1.0 - q) * kappa_ab))
}

/// Matched-seed comparison of a family against its rescaled wrapper.
#[derive(Debug, Clone)]
pub struct ScaleBlindnessReport {
    pub epsilon: f64,
    /// P̄ agrees bitwise between base and rescaled.
    pub p_bar_identical: bool,
    /// Power-iteration ρ̂ agrees bitwise.
    pub rho_identical: bool,
    /// f₁..f₈ agree bitwise.
    pub chain_identical: bool,
    /// max over horizons of |scaled/(ε²·base) − 1| for the curve means.
    pub max_ratio_deviation: f64,
    pub base_curve: ForgettingCurve,
    pub scaled_curve: ForgettingCurve,
}

/// Runs matched-seed rollouts and operator estimates for `family` and
/// rescaled(family, ε): projector-level outputs must agree bitwise and the
/// forgetting curve must scale by exactly ε² up to relative rounding.
pub fn scale_blindness_check(
    family: &TaskFamily,
    epsilon: f64,
    horizons: Vec<usize>,
    n_traj: usize,
    run_seed: u64,
    build: OperatorBuild,
) -> Result<ScaleBlindnessReport> {
    let scaled_family = TaskFamily::rescaled(family.clone(), epsilon)?;

    let op_base = build_operator(family, build, Matricize::Skip)?;
    let op_scaled = build_operator(&scaled_family, build, Matricize::Skip)?;
    let stats_base = mean_projector_of(&op_base);
    let stats_scaled = mean_projector_of(&op_scaled);
    let p_bar_identical = stats_base.p_bar == stats_scaled.p_bar;

    let rho_base = estimate_rho(&op_base, 500, 1e-13)?;
    let rho_scaled = estimate_rho(&op_scaled, 500, 1e-13)?;
    let rho_identical = rho_base.rho == rho_scaled.rho;

    let chain_base = chain_f_of(&op_base, 8)?;
    let chain_scaled = chain_f_of(&op_scaled, 8)?;
    let chain_identical = chain_base.f == chain_scaled.f;

    let w = family.default_w_star().clone();
    let opts = RolloutOptions::new(horizons, n_traj, run_seed);
    let base_curve = rollout_forgetting(family, &w, &opts)?;
    let scaled_curve = rollout_forgetting(&scaled_family, &w, &opts)?;

    let eps2 = epsilon * epsilon;
    let mut max_ratio_deviation = 0.0f64;
    for (b, s) in base_curve.mean.iter().zip(&scaled_curve.mean) {
        if *b != 0.0 {
            max_ratio_deviation = max_ratio_deviation.max((s / (eps2 * b) - 1.0).abs());
        } else if *s != 0.0 {
            max_ratio_deviation = f64::INFINITY;
        }
    }

    Ok(ScaleBlindnessReport {
        epsilon,
        p_bar_identical,
        rho_identical,
        chain_identical,
        max_ratio_deviation,
        base_curve,
        scaled_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::subspace::SubspaceBasis;
    use approx::assert_relative_eq;

    #[test]
    fn mean_projector_examples() {
        // Atoms with null spans e1 / e2, weight ½ each.
        let t1 = Task::from_visible(SubspaceBasis::coordinate(2, &[1]));
        let t2 = Task::from_visible(SubspaceBasis::coordinate(2, &[0]));
        let f = TaskFamily::finite_support(2, vec![(0.5, t1), (0.5, t2)], 0).unwrap();
        let stats = mean_projector(&f, OperatorBuild::Exact).unwrap();
        assert_relative_eq!(stats.nu, 1.0, epsilon = 1e-14);
        assert_relative_eq!(stats.lambda, 0.5, epsilon = 1e-14);
        assert_relative_eq!(stats.p_bar[(0, 0)], 0.5, epsilon = 1e-15);

        // Every projector of a fixed-rank family has trace d − r.
        let spike = TaskFamily::shared_null_spike(12, 4, 0.7, 5000).unwrap();
        let mc = mean_projector(&spike, OperatorBuild::MonteCarlo { samples: 16, seed: 3 }).unwrap();
        assert_relative_eq!(mc.nu, 8.0, epsilon = 1e-10);

        // A single rank-0 atom gives the identity mean projector.
        let rank0 = Task::from_visible(SubspaceBasis::empty(3));
        let f0 = TaskFamily::finite_support(3, vec![(1.0, rank0)], 0).unwrap();
        let s0 = mean_projector(&f0, OperatorBuild::Exact).unwrap();
        assert_relative_eq!(s0.nu, 3.0);
        assert_relative_eq!(s0.lambda, 1.0);
    }

    #[test]
    fn chain_matches_commuting_closed_form() {
        let probs = vec![0.5, 0.5];
        let f = TaskFamily::commuting_diagonal(probs.clone(), 0).unwrap();
        let chain = chain_f(&f, 8, OperatorBuild::Exact).unwrap();
        for m in 0..=8usize {
            let closed = commuting_f(&probs, m).unwrap();
            assert_relative_eq!(chain.f[m], closed, epsilon = 1e-12);
            assert_relative_eq!(closed, 0.5f64.powi(m as i32), epsilon = 1e-15);
        }
    }

    #[test]
    fn chain_identities_hold_on_fixtures() {
        for (name, family) in fixtures::enumerable_fixtures() {
            let chain = chain_f(&family, 8, OperatorBuild::Exact).unwrap();
            let stats = mean_projector(&family, OperatorBuild::Exact).unwrap();
            // f_m = κ_m − κ_{m+1}; f₁ = ν − tr(P̄²); monotone; ν/m cap;
            // λ-geometric cap.
            for m in 1..=7usize {
                assert!(
                    (chain.f[m] - (chain.kappa[m - 1] - chain.kappa[m])).abs() <= 1e-10,
                    "{name}: f_{m} vs kappa difference"
                );
                assert!(chain.f[m] <= chain.f[m - 1] + 1e-10, "{name}: f increased at {m}");
                assert!(chain.f[m] >= -1e-10, "{name}: negative f_{m}");
                assert!(chain.f[m] <= stats.nu / m as f64 + 1e-10, "{name}: f_{m} above nu/m");
                assert!(
                    chain.f[m] <= stats.lambda.powi(m as i32 - 1) * chain.f[1] + 1e-10,
                    "{name}: f_{m} above geometric cap"
                );
            }
            let tr_p2 = (&stats.p_bar * &stats.p_bar).trace();
            assert!(
                (chain.f[1] - (stats.nu - tr_p2)).abs() <= 1e-10,
                "{name}: f1 vs nu - tr(P̄²)"
            );
            // Eigenvalue form of f₁.
            let eig_sum: f64 = stats
                .p_bar
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|&l| l * (1.0 - l))
                .sum();
            assert!((chain.f[1] - eig_sum).abs() <= 1e-10, "{name}: f1 eigenvalue form");
        }
    }

    #[test]
    fn commuting_f_examples() {
        assert_relative_eq!(commuting_f(&[0.5, 0.5], 1).unwrap(), 0.5);
        assert_relative_eq!(commuting_f(&[1.0, 1.0, 1.0], 7).unwrap(), 0.0);
        assert_relative_eq!(commuting_f(&[0.5, 0.25], 2).unwrap(), 0.171875);
        assert!(commuting_f(&[1.5], 1).is_err());
    }

    #[test]
    fn rank_one_chain_examples() {
        let s = 1.0 / 2.0_f64.sqrt();
        let dirs = vec![
            (0.5, DVector::from_vec(vec![1.0, 0.0])),
            (0.5, DVector::from_vec(vec![s, s])),
        ];
        let r = rank_one_chain(&dirs, 1).unwrap();
        assert_relative_eq!(r.f1, 0.25, epsilon = 1e-14);

        // One fixed direction: nothing is ever forgotten after step one.
        let single = vec![(1.0, DVector::from_vec(vec![0.0, 1.0]))];
        for m in 1..5 {
            assert!(rank_one_chain(&single, m).unwrap().f_m.abs() <= 1e-14);
        }

        // Agreement with the operator chain on the matching family.
        let family = fixtures::rank_one_fixture();
        let chain = chain_f(&family, 6, OperatorBuild::Exact).unwrap();
        for m in 0..=6usize {
            let v = rank_one_chain(&dirs, m).unwrap().f_m;
            assert!(
                (v - chain.f[m]).abs() <= 1e-10,
                "m = {m}: kronecker {v} vs chain {}",
                chain.f[m]
            );
        }

        let big = vec![(1.0, DVector::from_element(17, 1.0 / 17.0_f64.sqrt()))];
        assert!(matches!(rank_one_chain(&big, 1), Err(Error::Size(_))));
    }

    #[test]
    fn mixture_f1_examples() {
        let mk = |diag: Vec<f64>| {
            let nu = diag.iter().sum();
            let p_bar = DMatrix::from_diagonal(&DVector::from_vec(diag));
            let lambda = p_bar.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
            MeanProjectorStats { p_bar, nu, lambda, source: "test".into() }
        };
        let a = mk(vec![1.0, 0.0]);
        let b = mk(vec![0.0, 1.0]);
        assert_relative_eq!(mixture_f1(0.5, &a, &b).unwrap(), 0.5, epsilon = 1e-14);
        // Degenerate mixtures reduce to the single component's f₁.
        let f1_of = |s: &MeanProjectorStats| s.nu - (&s.p_bar * &s.p_bar).trace();
        assert_relative_eq!(mixture_f1(0.0, &a, &b).unwrap(), f1_of(&b), epsilon = 1e-14);
        assert_relative_eq!(mixture_f1(1.0, &a, &b).unwrap(), f1_of(&a), epsilon = 1e-14);

        // Against the operator chain on the mixture fixture.
        let family = fixtures::mixture_fixture();
        let (q, fa, fb) = match family.kind() {
            crate::family::FamilyKind::TwoComponentMixture { q, a, b } => (*q, a, b),
            _ => unreachable!(),
        };
        let sa = mean_projector(fa, OperatorBuild::Exact).unwrap();
        let sb = mean_projector(fb, OperatorBuild::Exact).unwrap();
        let closed = mixture_f1(q, &sa, &sb).unwrap();
        let chain = chain_f(&family, 2, OperatorBuild::Exact).unwrap();
        assert!((closed - chain.f[1]).abs() <= 1e-10);
    }

    #[test]
    fn mixture_f1_rejects_dimension_mismatch() {
        let mk = |d: usize| MeanProjectorStats {
            p_bar: DMatrix::identity(d, d),
            nu: d as f64,
            lambda: 1.0,
            source: "test".into(),
        };
        assert!(mixture_f1(0.5, &mk(2), &mk(3)).is_err());
        assert!(mixture_f1(1.5, &mk(2), &mk(2)).is_err());
    }

    #[test]
    fn surrogate_bounds_examples() {
        // Coarse baseline at the protocol dimensions: 8·144/64 = 18.
        let spike = TaskFamily::shared_null_spike(192, 48, 0.4, 5000).unwrap();
        let stats = mean_projector(&spike, OperatorBuild::MonteCarlo { samples: 3, seed: 1 }).unwrap();
        let chain = ChainSequence { f: vec![0.0; 33], kappa: vec![0.0; 33] };
        let b = surrogate_bounds(&stats, &chain, 65).unwrap();
        assert_relative_eq!(b.coarse, 18.0, epsilon = 1e-9);

        // Transfer bound from the commuting closed form: k = 5, h = 2.
        let f = TaskFamily::commuting_diagonal(vec![0.5, 0.5], 0).unwrap();
        let chain = chain_f(&f, 4, OperatorBuild::Exact).unwrap();
        let stats = mean_projector(&f, OperatorBuild::Exact).unwrap();
        let b = surrogate_bounds(&stats, &chain, 5).unwrap();
        assert_relative_eq!(b.transfer, 1.0, epsilon = 1e-12);

        // Chain too short for the requested horizon.
        let short = ChainSequence { f: vec![1.0, 0.5], kappa: vec![1.0, 0.5] };
        assert!(surrogate_bounds(&stats, &short, 9).is_err());
    }

    #[test]
    fn residual_zero_for_single_atom() {
        let mut rng = crate::stream::root_stream(70);
        let q = crate::subspace::sample_orthonormal_basis(5, 2, &[], &mut rng).unwrap();
        let f =
            TaskFamily::finite_support(5, vec![(1.0, Task::from_visible(q))], 0).unwrap();
        let r = residual_surrogate(&f, 2, 8, 71, None).unwrap();
        assert!(r.mean.abs() <= 1e-12, "R = {}", r.mean);
    }

    #[test]
    fn residual_dominates_forgetting_on_matched_seeds() {
        let family = fixtures::three_atom_fixture();
        let w = family.default_w_star().clone();
        let k = 6;
        let opts = RolloutOptions::new(vec![k], 300, 72);
        let curve = rollout_forgetting(&family, &w, &opts).unwrap();
        let res = residual_surrogate(&family, k, 300, 72, None).unwrap();
        let combined = (curve.stderr[0].powi(2) + res.stderr.powi(2)).sqrt();
        assert!(
            curve.mean[0] <= res.mean + 3.0 * combined,
            "F {} vs R {} (combined stderr {combined})",
            curve.mean[0],
            res.mean
        );
        assert!(!res.normalization_warning);
    }

    #[test]
    fn residual_vanishes_on_commuting_laws_while_transfer_stays_positive() {
        // The product contains P_t itself, so commuting laws zero out every
        // term; the looseness witness lives in the chain bound.
        let probs = vec![0.5, 0.5, 0.5, 0.5];
        let family = TaskFamily::commuting_diagonal(probs.clone(), 73).unwrap();
        let k = 5;
        let res = residual_surrogate(&family, k, 64, 74, None).unwrap();
        assert!(res.mean.abs() <= 1e-15, "commuting residual {}", res.mean);
        let chain = chain_f(&family, 4, OperatorBuild::Exact).unwrap();
        let stats = mean_projector(&family, OperatorBuild::Exact).unwrap();
        let bounds = surrogate_bounds(&stats, &chain, k).unwrap();
        assert!(bounds.transfer > 0.05, "transfer bound {}", bounds.transfer);
    }

    #[test]
    fn residual_budget_guard() {
        let family = fixtures::three_atom_fixture();
        assert!(matches!(
            residual_surrogate(&family, 4, 10, 0, Some(1.0)),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn residual_warns_on_oversized_scales() {
        let family = TaskFamily::rescaled(fixtures::three_atom_fixture(), 3.0).unwrap();
        let r = residual_surrogate(&family, 3, 4, 75, None).unwrap();
        assert!(r.normalization_warning);
    }

    #[test]
    fn scale_blindness_identity_and_quadratic_scaling() {
        let family = fixtures::three_atom_fixture();
        for eps in [1.0, 0.1, 3.0] {
            let report = scale_blindness_check(
                &family,
                eps,
                vec![2, 4, 8],
                64,
                76,
                OperatorBuild::Exact,
            )
            .unwrap();
            assert!(report.p_bar_identical, "eps {eps}: mean projector drifted");
            assert!(report.rho_identical, "eps {eps}: rho drifted");
            assert!(report.chain_identical, "eps {eps}: chain drifted");
            assert!(
                report.max_ratio_deviation <= 1e-12,
                "eps {eps}: ratio deviation {}",
                report.max_ratio_deviation
            );
        }
    }
}
