//! Cross-module verification suite on the built-in fixtures. Each check
//! reports a pass flag and its worst measured residual.

use crate::json::{CsvCell, CsvTable, Json};
use forgetting_core::dynamics::{rollout_forgetting, RolloutOptions};
use forgetting_core::error::{Error, Result};
use forgetting_core::family::TaskFamily;
use forgetting_core::fixtures;
use forgetting_core::operator::{
    build_operator, estimate_rho, invisibility_score, invisibility_score_subspace, Matricize,
    OperatorBuild,
};
use forgetting_core::oracle::enumerate_sequence_forgetting;
use forgetting_core::spectral::{
    forgetting_identity, spectral_decompose, spectral_forgetting, top_coefficient_matrix,
    upper_bound, IdentityMode,
};
use forgetting_core::stream::substream;
use forgetting_core::subspace::{
    principal_cos2, sample_orthonormal_basis,
};
use forgetting_core::svec::{smat, svec, SymMatrixVec};
use forgetting_core::surrogates::{
    chain_f, commuting_f, mean_projector, mixture_f1, rank_one_chain, residual_surrogate,
    scale_blindness_check, surrogate_bounds,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual observed, on the check's own scale.
    pub residual: f64,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, residual: f64, detail: impl Into<String>) -> Self {
        Self { name, passed: true, residual, detail: detail.into() }
    }

    fn fail(name: &'static str, residual: f64, detail: impl Into<String>) -> Self {
        Self { name, passed: false, residual, detail: detail.into() }
    }
}

pub const CHECK_NAMES: [&str; 9] = [
    "thm1-triple-agreement",
    "thm4-bound-dominance",
    "lemma-a2-operator",
    "lemma-a3-angles",
    "prop5-rayleigh",
    "prop6-zero-forgetting",
    "propb4-top-matrix",
    "appendix-c-ladder",
    "propc10-scale-blindness",
];

/// Runs the suite, optionally restricted to one named check.
pub fn run_checks(only: Option<&str>) -> Result<Vec<CheckResult>> {
    if let Some(name) = only {
        if !CHECK_NAMES.contains(&name) {
            return Err(Error::Parameter(format!(
                "unknown check '{name}'; available: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let mut results = Vec::new();
    for name in CHECK_NAMES {
        if only.is_some_and(|o| o != name) {
            continue;
        }
        let result = match name {
            "thm1-triple-agreement" => triple_agreement(),
            "thm4-bound-dominance" => bound_dominance(),
            "lemma-a2-operator" => operator_checks(),
            "lemma-a3-angles" => angle_identity(),
            "prop5-rayleigh" => rayleigh_dominance(),
            "prop6-zero-forgetting" => zero_forgetting(),
            "propb4-top-matrix" => top_matrix_psd(),
            "appendix-c-ladder" => appendix_c_ladder(),
            "propc10-scale-blindness" => scale_blindness(),
            _ => unreachable!(),
        };
        results.push(result);
    }
    Ok(results)
}

pub fn results_record(results: &[CheckResult], only: Option<&str>) -> (Json, CsvTable, bool) {
    let all_passed = results.iter().all(|r| r.passed);
    let mut record = Json::obj();
    record.push("schema_version", Json::UInt(1));
    record.push("command", Json::Str("verify".into()));
    let mut cfg = Json::obj();
    cfg.push("only", only.map_or(Json::Null, |s| Json::Str(s.to_string())));
    record.push("config", cfg);
    let mut checks = Vec::new();
    let mut csv = CsvTable::new(&["check", "passed", "residual"]);
    for r in results {
        let mut c = Json::obj();
        c.push("name", Json::Str(r.name.to_string()));
        c.push("passed", Json::Bool(r.passed));
        c.push("residual", Json::Float(r.residual));
        c.push("detail", Json::Str(r.detail.clone()));
        checks.push(c);
        csv.rows.push(vec![
            CsvCell::Str(r.name.to_string()),
            CsvCell::Str(r.passed.to_string()),
            CsvCell::Float(r.residual),
        ]);
    }
    record.push("checks", Json::Arr(checks));
    record.push("all_passed", Json::Bool(all_passed));
    (record, csv, all_passed)
}

fn triple_agreement() -> CheckResult {
    let name = "thm1-triple-agreement";
    let mut worst = 0.0f64;
    for (fixture, family) in fixtures::enumerable_fixtures() {
        let atoms = family.enumerate_atoms().unwrap();
        let w = family.default_w_star().clone();
        let op = match build_operator(&family, OperatorBuild::Exact, Matricize::dense()) {
            Ok(op) => op,
            Err(e) => return CheckResult::fail(name, f64::INFINITY, e.to_string()),
        };
        let decomp = spectral_decompose(&op, 1e-8).unwrap();
        for k in 2..=6usize {
            // Exhaustive enumeration is capped; identity and expansion are
            // always compared.
            let brute = (atoms.len().pow(k as u32) <= 2_000_000)
                .then(|| enumerate_sequence_forgetting(&atoms, &w, k));
            let ident = forgetting_identity(&family, &w, k, IdentityMode::Exact).unwrap();
            let (spect, _) = spectral_forgetting(&decomp, &family, &w, k).unwrap();
            let mut spread = (ident - spect).abs();
            if let Some(b) = brute {
                spread = spread.max((b - ident).abs()).max((b - spect).abs());
            }
            worst = worst.max(spread);
            if spread > 1e-9 {
                return CheckResult::fail(
                    name,
                    spread,
                    format!("{fixture} at k = {k}: routes disagree beyond 1e-9"),
                );
            }
        }
    }
    CheckResult::pass(name, worst, "enumeration = identity = spectral expansion on all fixtures")
}

fn bound_dominance() -> CheckResult {
    let name = "thm4-bound-dominance";
    let mut worst = f64::NEG_INFINITY;
    for (fixture, family) in fixtures::enumerable_fixtures() {
        let w = family.default_w_star().clone();
        let op = build_operator(&family, OperatorBuild::Exact, Matricize::dense()).unwrap();
        let rho = estimate_rho(&op, 5000, 1e-14).unwrap().rho;
        let c_fro = family.expected_c_fro(0, 0).value;
        let decomp = spectral_decompose(&op, 1e-8).unwrap();
        for k in 2..=10usize {
            let f = forgetting_identity(&family, &w, k, IdentityMode::Exact).unwrap();
            let (spect, _) = spectral_forgetting(&decomp, &family, &w, k).unwrap();
            let u = upper_bound(rho, w.norm_squared(), c_fro, k).unwrap();
            let excess = (f - u).max(spect - u);
            worst = worst.max(excess);
            if excess > 1e-12 {
                return CheckResult::fail(
                    name,
                    excess,
                    format!("{fixture} at k = {k}: forgetting above bound {u}"),
                );
            }
        }
    }
    CheckResult::pass(name, worst.max(0.0), "identity below the exponential bound on all fixtures")
}

/// Self-adjointness, positivity, and PSD preservation for one matricized
/// operator. Public so a negative control can inject a broken matrix.
pub fn lemma_a2_on_matrix(m: &DMatrix<f64>, d: usize, label: &str) -> CheckResult {
    let name = "lemma-a2-operator";
    let skew = (m - m.transpose()).norm() / m.norm().max(1.0);
    if skew > 1e-10 {
        return CheckResult::fail(name, skew, format!("{label}: matricized skew {skew:.3e}"));
    }
    let mut rng = substream(881, 0);
    let mut worst = skew;
    for _ in 0..100 {
        let g = DMatrix::from_fn(d, d, |_, _| rng.gen::<f64>() - 0.5);
        let a = (&g + g.transpose()) * 0.5;
        let v = svec(&a);
        let quad = v.dot(&(m * &v));
        let floor = -1e-9 * a.norm_squared();
        worst = worst.max(-quad);
        if quad < floor {
            return CheckResult::fail(name, -quad, format!("{label}: negative quadratic form"));
        }
    }
    for _ in 0..20 {
        let g = DMatrix::from_fn(d, d, |_, _| rng.gen::<f64>() - 0.5);
        let psd = &g * g.transpose();
        let out = smat(&(m * svec(&psd)), d);
        let min_eig = out
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < -1e-8 * psd.norm() {
            return CheckResult::fail(
                name,
                -min_eig,
                format!("{label}: PSD input mapped to min eigenvalue {min_eig:.3e}"),
            );
        }
    }
    CheckResult::pass(name, worst.max(0.0), format!("{label}: self-adjoint, positive, PSD-preserving"))
}

fn operator_checks() -> CheckResult {
    let name = "lemma-a2-operator";
    let mut worst = 0.0f64;
    for (fixture, family) in fixtures::enumerable_fixtures() {
        let op = build_operator(&family, OperatorBuild::Exact, Matricize::dense()).unwrap();
        let result = lemma_a2_on_matrix(op.matricized().unwrap(), family.dim(), fixture);
        if !result.passed {
            return result;
        }
        worst = worst.max(result.residual);
    }
    CheckResult::pass(name, worst, "all fixtures: self-adjoint, positive, PSD-preserving")
}

fn angle_identity() -> CheckResult {
    let name = "lemma-a3-angles";
    let mut rng = substream(882, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = 4 + (rng.gen::<u64>() % 5) as usize;
        let me = 1 + (rng.gen::<u64>() % (d as u64 - 1)) as usize;
        let mn = 1 + (rng.gen::<u64>() % (d as u64 - 1)) as usize;
        let e = sample_orthonormal_basis(d, me, &[], &mut rng).unwrap();
        let n = sample_orthonormal_basis(d, mn, &[], &mut rng).unwrap();
        let quartic: f64 = principal_cos2(&e, &n).unwrap().iter().map(|c| c * c).sum();
        // ‖Uᵀ·P_N·U‖_F² computed directly from the projector.
        let p = n.columns() * n.columns().transpose();
        let upu = e.columns().transpose() * p * e.columns();
        let direct = upu.norm_squared();
        let dev = (quartic - direct).abs();
        worst = worst.max(dev);
        if dev > 1e-10 {
            return CheckResult::fail(name, dev, "principal-angle identity violated");
        }
    }
    // Dual-route invisibility on a fixture ties the identity to the operator.
    let family = fixtures::three_atom_fixture();
    let op = build_operator(&family, OperatorBuild::Exact, Matricize::Skip).unwrap();
    let e = sample_orthonormal_basis(6, 2, &[], &mut rng).unwrap();
    match invisibility_score_subspace(&op, &e) {
        Ok(inv) => {
            let dev = (inv.score - inv.principal_angle_score).abs();
            worst = worst.max(dev);
            CheckResult::pass(name, worst, "Σ cos⁴θ matches ‖UᵀPU‖_F² and the Rayleigh route")
        }
        Err(e) => CheckResult::fail(name, f64::INFINITY, e.to_string()),
    }
}

fn rayleigh_dominance() -> CheckResult {
    let name = "prop5-rayleigh";
    let mut rng = substream(883, 0);
    let mut worst = 0.0f64;
    for (fixture, family) in fixtures::enumerable_fixtures() {
        let d = family.dim();
        let op = build_operator(&family, OperatorBuild::Exact, Matricize::dense()).unwrap();
        let rho = estimate_rho(&op, 5000, 1e-14).unwrap().rho;
        for _ in 0..100 {
            let g = DMatrix::from_fn(d, d, |_, _| rng.gen::<f64>() - 0.5);
            let a = SymMatrixVec::encode(&(&g + g.transpose())).unwrap();
            let score = invisibility_score(&op, &a).unwrap();
            if !(0.0 - 1e-12..=1.0 + 1e-9).contains(&score) {
                return CheckResult::fail(name, score, format!("{fixture}: score outside [0, 1]"));
            }
            let excess = score - rho;
            worst = worst.max(excess);
            if excess > 1e-9 {
                return CheckResult::fail(
                    name,
                    excess,
                    format!("{fixture}: score {score} above rho {rho}"),
                );
            }
        }
    }
    CheckResult::pass(name, worst.max(0.0), "invisibility scores in [0, 1] and below the norm")
}

fn zero_forgetting() -> CheckResult {
    let name = "prop6-zero-forgetting";
    let family = TaskFamily::commuting_diagonal(vec![0.3, 0.8, 0.5, 0.6, 0.9], 884).unwrap();
    let w = family.default_w_star().clone();
    let curve =
        rollout_forgetting(&family, &w, &RolloutOptions::new(vec![2, 4, 8, 16, 32], 100, 885))
            .unwrap();
    let worst_mean = curve.mean.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if worst_mean > 1e-18 {
        return CheckResult::fail(name, worst_mean, "commuting rollout mean above 1e-18");
    }
    let mut worst = worst_mean;
    for k in [2usize, 3, 4] {
        let v = forgetting_identity(&family, &w, k, IdentityMode::Exact).unwrap().abs();
        worst = worst.max(v);
        if v > 1e-12 {
            return CheckResult::fail(name, v, format!("identity not zero at k = {k}"));
        }
    }
    CheckResult::pass(name, worst, "commuting law: rollout and identity both vanish")
}

fn top_matrix_psd() -> CheckResult {
    let name = "propb4-top-matrix";
    let mut rng = substream(886, 0);
    let mut worst = 0.0f64;
    for (fixture, family) in fixtures::enumerable_fixtures() {
        let d = family.dim();
        let op = build_operator(&family, OperatorBuild::Exact, Matricize::dense()).unwrap();
        let decomp = spectral_decompose(&op, 1e-8).unwrap();
        let m_top = match top_coefficient_matrix(&family, &decomp) {
            Ok(m) => m,
            Err(e) => return CheckResult::fail(name, f64::INFINITY, e.to_string()),
        };
        let min_eig = m_top
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        worst = worst.max(-min_eig);
        if min_eig < -1e-8 {
            return CheckResult::fail(
                name,
                -min_eig,
                format!("{fixture}: M_top min eigenvalue {min_eig:.3e}"),
            );
        }
        for _ in 0..100 {
            let mut u = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            u /= u.norm();
            let c = (u.transpose() * &m_top * &u)[(0, 0)];
            worst = worst.max(-c);
            if c < -1e-9 {
                return CheckResult::fail(name, -c, format!("{fixture}: c_top(u) = {c:.3e}"));
            }
        }
    }
    CheckResult::pass(name, worst.max(0.0), "top coefficient matrices PSD on all fixtures")
}

fn appendix_c_ladder() -> CheckResult {
    let name = "appendix-c-ladder";
    let mut worst = 0.0f64;
    for (fixture, family) in fixtures::enumerable_fixtures() {
        let chain = chain_f(&family, 8, OperatorBuild::Exact).unwrap();
        let stats = mean_projector(&family, OperatorBuild::Exact).unwrap();
        for m in 1..=7usize {
            let split = (chain.f[m] - (chain.kappa[m - 1] - chain.kappa[m])).abs();
            let mono = chain.f[m] - chain.f[m - 1];
            let coarse = chain.f[m] - stats.nu / m as f64;
            let geo = chain.f[m] - stats.lambda.powi(m as i32 - 1) * chain.f[1];
            worst = worst.max(split).max(mono).max(coarse).max(geo);
            if split > 1e-10 || mono > 1e-10 || coarse > 1e-10 || geo > 1e-10 {
                return CheckResult::fail(name, worst, format!("{fixture}: chain identity broken at m = {m}"));
            }
        }
        let f1_dev =
            (chain.f[1] - (stats.nu - (&stats.p_bar * &stats.p_bar).trace())).abs();
        worst = worst.max(f1_dev);
        if f1_dev > 1e-10 {
            return CheckResult::fail(name, f1_dev, format!("{fixture}: f1 identity broken"));
        }
    }

    // Closed forms against the operator chain.
    let com_probs = vec![0.5, 0.25, 0.9];
    let com = TaskFamily::commuting_diagonal(com_probs.clone(), 300).unwrap();
    let com_chain = chain_f(&com, 8, OperatorBuild::Exact).unwrap();
    for m in 0..=8usize {
        let dev = (com_chain.f[m] - commuting_f(&com_probs, m).unwrap()).abs();
        worst = worst.max(dev);
        if dev > 1e-10 {
            return CheckResult::fail(name, dev, format!("commuting closed form off at m = {m}"));
        }
    }
    let s = 1.0 / 2.0_f64.sqrt();
    let dirs = vec![
        (0.5, DVector::from_vec(vec![1.0, 0.0])),
        (0.5, DVector::from_vec(vec![s, s])),
    ];
    let ro_chain = chain_f(&fixtures::rank_one_fixture(), 8, OperatorBuild::Exact).unwrap();
    for m in 0..=8usize {
        let dev = (ro_chain.f[m] - rank_one_chain(&dirs, m).unwrap().f_m).abs();
        worst = worst.max(dev);
        if dev > 1e-10 {
            return CheckResult::fail(name, dev, format!("rank-one closed form off at m = {m}"));
        }
    }
    let mixture = fixtures::mixture_fixture();
    if let forgetting_core::family::FamilyKind::TwoComponentMixture { q, a, b } = mixture.kind() {
        let sa = mean_projector(a, OperatorBuild::Exact).unwrap();
        let sb = mean_projector(b, OperatorBuild::Exact).unwrap();
        let dev = (chain_f(&mixture, 2, OperatorBuild::Exact).unwrap().f[1]
            - mixture_f1(*q, &sa, &sb).unwrap())
        .abs();
        worst = worst.max(dev);
        if dev > 1e-10 {
            return CheckResult::fail(name, dev, "mixture f1 decomposition off");
        }
    }

    // Matched-seed F ≤ R, and the commuting looseness witness.
    let three = fixtures::three_atom_fixture();
    let w = three.default_w_star().clone();
    let curve =
        rollout_forgetting(&three, &w, &RolloutOptions::new(vec![6], 200, 887)).unwrap();
    let res = residual_surrogate(&three, 6, 200, 887, None).unwrap();
    let combined = (curve.stderr[0].powi(2) + res.stderr.powi(2)).sqrt();
    if curve.mean[0] > res.mean + 3.0 * combined {
        return CheckResult::fail(
            name,
            curve.mean[0] - res.mean,
            "forgetting above the residual surrogate",
        );
    }
    let witness = TaskFamily::commuting_diagonal(vec![0.5; 4], 888).unwrap();
    let w_curve =
        rollout_forgetting(&witness, witness.default_w_star(), &RolloutOptions::new(vec![5], 100, 889))
            .unwrap();
    let w_chain = chain_f(&witness, 4, OperatorBuild::Exact).unwrap();
    let w_stats = mean_projector(&witness, OperatorBuild::Exact).unwrap();
    let w_bounds = surrogate_bounds(&w_stats, &w_chain, 5).unwrap();
    if w_curve.mean[0] != 0.0 || w_bounds.transfer <= 0.05 {
        return CheckResult::fail(
            name,
            w_bounds.transfer,
            "looseness witness failed (commuting F = 0 with a large chain bound)",
        );
    }
    CheckResult::pass(
        name,
        worst,
        format!(
            "chain identities, closed forms, F <= R; witness: F = 0 while 4 f_h = {:.3}",
            w_bounds.transfer
        ),
    )
}

fn scale_blindness() -> CheckResult {
    let name = "propc10-scale-blindness";
    let family = fixtures::three_atom_fixture();
    let mut worst = 0.0f64;
    for eps in [0.1, 3.0] {
        let report =
            match scale_blindness_check(&family, eps, vec![2, 4, 8], 100, 890, OperatorBuild::Exact)
            {
                Ok(r) => r,
                Err(e) => return CheckResult::fail(name, f64::INFINITY, e.to_string()),
            };
        if !(report.p_bar_identical && report.rho_identical && report.chain_identical) {
            return CheckResult::fail(
                name,
                f64::INFINITY,
                format!("eps {eps}: projector-level outputs not bitwise identical"),
            );
        }
        worst = worst.max(report.max_ratio_deviation);
        if report.max_ratio_deviation > 1e-12 {
            return CheckResult::fail(
                name,
                report.max_ratio_deviation,
                format!("eps {eps}: forgetting ratio deviates from eps²"),
            );
        }
    }
    CheckResult::pass(name, worst, "projector stats bitwise stable; loss scales by eps²")
}
