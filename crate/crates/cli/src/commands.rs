//! Experiment drivers: each command validates its full configuration,
//! checks the step budget, runs, and assembles a deterministic record.

use crate::args::{FamilyArg, RunArgs};
use crate::json::{CsvCell, CsvTable, Json};
use forgetting_core::dynamics::{
    local_decay_rate, rollout_cost, rollout_forgetting, ForgettingCurve, RolloutOptions,
};
use forgetting_core::error::{Error, Result};
use forgetting_core::family::{FamilyKind, TaskFamily};
use forgetting_core::fixtures;
use forgetting_core::operator::{
    build_operator, estimate_rho, invisibility_score, invisibility_score_subspace, Matricize,
    OperatorBuild, SuperoperatorRep, MATRICIZE_DEFAULT_CAP,
};
use forgetting_core::spectral::{
    analytic_rho_shared_null_spike, spectral_decompose, upper_bound,
};
use forgetting_core::stream::root_stream;
use forgetting_core::subspace::SubspaceBasis;
use forgetting_core::surrogates::{
    chain_f_of, commuting_f, mean_projector_of, mixture_f1, rank_one_chain, residual_cost,
    residual_surrogate, surrogate_bounds,
};
use forgetting_core::svec::SymMatrixVec;
use nalgebra::DMatrix;
use rand::Rng;

pub struct CommandOutput {
    pub record: Json,
    pub csv: CsvTable,
}

const BOUND_HORIZONS: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];
const RICHNESS_HORIZONS: [usize; 9] = [4, 8, 16, 32, 64, 128, 256, 512, 1024];
const SURROGATE_HORIZONS: [usize; 4] = [2, 4, 8, 16];

/// Builds the family selected by the flags; fixtures ignore d/r and seeds.
fn build_family(args: &RunArgs, alpha: f64, family_seed: u64) -> Result<TaskFamily> {
    let base = match args.family {
        FamilyArg::SharedNullSpike => {
            TaskFamily::shared_null_spike(args.d, args.r, alpha, family_seed)?
        }
        FamilyArg::Isotropic => TaskFamily::isotropic(args.d, args.r, family_seed)?,
        FamilyArg::AngleRichness => {
            let l = *args
                .reservoir_dim
                .first()
                .unwrap_or(&(args.d.saturating_sub(args.r)));
            TaskFamily::angle_richness(args.d, args.r, args.theta_deg, l, family_seed)?
        }
        FamilyArg::CommutingDiagonal => {
            // Retention probabilities drawn once from the family seed.
            let mut rng = root_stream(family_seed);
            let probs: Vec<f64> = (0..args.d).map(|_| rng.gen::<f64>()).collect();
            TaskFamily::commuting_diagonal(probs, family_seed)?
        }
        FamilyArg::TwoAtomFixture => fixtures::two_atom_fixture(),
        FamilyArg::ThreeAtomFixture => fixtures::three_atom_fixture(),
    };
    match args.epsilon {
        Some(eps) => TaskFamily::rescaled(base, eps),
        None => Ok(base),
    }
}

fn config_echo(args: &RunArgs, command: &str, extra: Vec<(&str, Json)>) -> Json {
    let mut cfg = Json::obj();
    cfg.push("command", Json::Str(command.to_string()));
    cfg.push("family", Json::Str(format!("{:?}", args.family)));
    cfg.push("d", Json::UInt(args.d as u64));
    cfg.push("r", Json::UInt(args.r as u64));
    cfg.push("theta_deg", Json::Float(args.theta_deg));
    cfg.push("family_seed_base", Json::UInt(args.family_seed));
    cfg.push("run_seed_base", Json::UInt(args.run_seed));
    cfg.push("operator_samples", Json::UInt(args.operator_samples as u64));
    cfg.push("power_iters", Json::UInt(args.power_iters as u64));
    cfg.push("power_tol", Json::Float(args.power_tol));
    cfg.push("epsilon", Json::opt_float(args.epsilon));
    cfg.push("budget", Json::Float(args.budget));
    cfg.push(
        "seed_scheme",
        Json::Str("alpha grid: family_seed_base+i / run_seed_base+i; substreams: worker j uses stream j+1".into()),
    );
    for (k, v) in extra {
        cfg.push(k, v);
    }
    cfg
}

fn record_shell(command: &str, config: Json) -> Json {
    let mut rec = Json::obj();
    rec.push("schema_version", Json::UInt(1));
    rec.push("command", Json::Str(command.to_string()));
    rec.push("config", config);
    rec
}

fn horizons_json(h: &[usize]) -> Json {
    Json::Arr(h.iter().map(|&k| Json::UInt(k as u64)).collect())
}

fn curve_rows_json(curve: &ForgettingCurve, extra: impl Fn(usize, usize) -> Vec<(&'static str, Json)>) -> Json {
    let mut rows = Vec::new();
    for (i, &k) in curve.horizons.iter().enumerate() {
        let mut row = Json::obj();
        row.push("k", Json::UInt(k as u64));
        row.push("f_hat", Json::Float(curve.mean[i]));
        row.push("stderr", Json::Float(curve.stderr[i]));
        for (key, v) in extra(i, k) {
            row.push(key, v);
        }
        rows.push(row);
    }
    Json::Arr(rows)
}

/// Forgetting curves vs. the exponential bound and the coarse baseline.
pub fn bound_compare(args: &RunArgs) -> Result<CommandOutput> {
    let horizons = args.horizons_or(&BOUND_HORIZONS);
    let n_traj = args.n_traj.unwrap_or(400);
    let alpha_grid = args.family == FamilyArg::SharedNullSpike;
    let alphas: Vec<Option<f64>> = if alpha_grid {
        args.alphas().into_iter().map(Some).collect()
    } else {
        vec![None]
    };

    // Validate everything and price the whole run before any computation.
    let mut blocks = Vec::new();
    let mut total_cost = 0.0;
    for (i, alpha) in alphas.iter().enumerate() {
        let family_seed = args.family_seed + i as u64;
        let run_seed = args.run_seed + i as u64;
        let family = build_family(args, alpha.unwrap_or(0.0), family_seed)?;
        total_cost += rollout_cost(&family, &horizons, n_traj);
        blocks.push((*alpha, family_seed, run_seed, family));
    }
    if total_cost > args.budget {
        return Err(Error::Budget(format!(
            "estimated {total_cost:.3e} projector flops exceed the budget {:.3e}",
            args.budget
        )));
    }

    let mut results = Vec::new();
    let mut csv = CsvTable::new(&["alpha", "k", "f_hat", "stderr", "bound", "coarse"]);
    for (alpha, family_seed, run_seed, family) in &blocks {
        let w = family.default_w_star().clone();
        let opts = RolloutOptions::new(horizons.clone(), n_traj, *run_seed);
        let curve = rollout_forgetting(family, &w, &opts)?;

        let (rho, rho_source) = match alpha {
            Some(a) => (analytic_rho_shared_null_spike(args.d, args.r, *a)?, "analytic"),
            None => {
                let op = build_operator(
                    family,
                    OperatorBuild::MonteCarlo { samples: args.operator_samples, seed: *run_seed },
                    Matricize::Skip,
                )?;
                (estimate_rho(&op, args.power_iters, args.power_tol)?.rho, "power-iteration")
            }
        };
        let c_fro = family.expected_c_fro(4096, run_seed + 777);
        let x_fro = w.norm_squared();
        let nu = match family.fixed_rank() {
            Some(r) => (family.dim() - r) as f64,
            None => mean_projector_of(&build_operator(
                family,
                OperatorBuild::MonteCarlo { samples: args.operator_samples, seed: run_seed + 1 },
                Matricize::Skip,
            )?)
            .nu,
        };

        let mut block = Json::obj();
        block.push("alpha", Json::opt_float(*alpha));
        block.push("family", Json::Str(family.describe()));
        block.push("family_seed", Json::UInt(*family_seed));
        block.push("run_seed", Json::UInt(*run_seed));
        block.push("n_traj", Json::UInt(n_traj as u64));
        block.push("rho", Json::Float(rho));
        block.push("rho_source", Json::Str(rho_source.to_string()));
        block.push("expected_c_fro", Json::Float(c_fro.value));
        block.push("expected_c_fro_stderr", Json::opt_float(c_fro.stderr));
        block.push("nu", Json::Float(nu));
        let rows = curve_rows_json(&curve, |_, k| {
            let bound = upper_bound(rho, x_fro, c_fro.value, k).expect("k >= 2 validated");
            let bound_stderr = c_fro
                .stderr
                .map(|s| upper_bound(rho, x_fro, s, k).expect("k >= 2 validated"));
            let coarse = 8.0 * nu / (k as f64 - 1.0);
            vec![
                ("bound", Json::Float(bound)),
                ("bound_stderr", Json::opt_float(bound_stderr)),
                ("coarse", Json::Float(coarse)),
            ]
        });
        block.push("rows", rows);
        results.push(block);

        for (i, &k) in curve.horizons.iter().enumerate() {
            let bound = upper_bound(rho, x_fro, c_fro.value, k)?;
            let coarse = 8.0 * nu / (k as f64 - 1.0);
            csv.rows.push(vec![
                alpha.map_or(CsvCell::Null, CsvCell::Float),
                CsvCell::UInt(k as u64),
                CsvCell::Float(curve.mean[i]),
                CsvCell::Float(curve.stderr[i]),
                CsvCell::Float(bound),
                CsvCell::Float(coarse),
            ]);
        }
    }

    let config = config_echo(
        args,
        "bound-compare",
        vec![
            ("alphas", Json::Arr(alphas.iter().map(|a| Json::opt_float(*a)).collect())),
            ("horizons", horizons_json(&horizons)),
            ("n_traj", Json::UInt(n_traj as u64)),
        ],
    );
    let mut record = record_shell("bound-compare", config);
    record.push("results", Json::Arr(results));
    record.push("estimated_projector_flops", Json::Float(total_cost));
    Ok(CommandOutput { record, csv })
}

/// Local decay rates vs. the closed-form rate, per alpha.
pub fn rho_compare(args: &RunArgs) -> Result<CommandOutput> {
    if args.family != FamilyArg::SharedNullSpike {
        return Err(Error::Parameter(
            "rho-compare evaluates the closed-form rate, which exists only for the shared-null-spike family".into(),
        ));
    }
    let horizons = args.horizons_or(&BOUND_HORIZONS);
    if horizons.len() < 2 {
        return Err(Error::Parameter(
            "rho-compare needs at least two horizons to form a decay interval".into(),
        ));
    }
    let n_traj = args.n_traj.unwrap_or(400);

    let mut blocks = Vec::new();
    let mut total_cost = 0.0;
    for (i, alpha) in args.alphas().into_iter().enumerate() {
        let family_seed = args.family_seed + i as u64;
        let run_seed = args.run_seed + i as u64;
        let family = build_family(args, alpha, family_seed)?;
        total_cost += rollout_cost(&family, &horizons, n_traj);
        blocks.push((alpha, family_seed, run_seed, family));
    }
    if total_cost > args.budget {
        return Err(Error::Budget(format!(
            "estimated {total_cost:.3e} projector flops exceed the budget {:.3e}",
            args.budget
        )));
    }

    let mut results = Vec::new();
    let mut csv = CsvTable::new(&["alpha", "k_lo", "k_hi", "rho_loc", "rho_analytic"]);
    for (alpha, family_seed, run_seed, family) in &blocks {
        let w = family.default_w_star().clone();
        let curve =
            rollout_forgetting(family, &w, &RolloutOptions::new(horizons.clone(), n_traj, *run_seed))?;
        let rho = analytic_rho_shared_null_spike(args.d, args.r, *alpha)?;
        let rates = local_decay_rate(&curve);

        let mut block = Json::obj();
        block.push("alpha", Json::Float(*alpha));
        block.push("family_seed", Json::UInt(*family_seed));
        block.push("run_seed", Json::UInt(*run_seed));
        block.push("rho_analytic", Json::Float(rho));
        let mut intervals = Vec::new();
        for ((k_lo, k_hi), rate) in &rates {
            let mut iv = Json::obj();
            iv.push("k_lo", Json::UInt(*k_lo as u64));
            iv.push("k_hi", Json::UInt(*k_hi as u64));
            iv.push("rho_loc", Json::opt_float(*rate));
            intervals.push(iv);
            csv.rows.push(vec![
                CsvCell::Float(*alpha),
                CsvCell::UInt(*k_lo as u64),
                CsvCell::UInt(*k_hi as u64),
                rate.map_or(CsvCell::Null, CsvCell::Float),
                CsvCell::Float(rho),
            ]);
        }
        block.push("intervals", Json::Arr(intervals));
        // Headline comparison: the largest interval, with the reliability
        // filter on its endpoint means.
        let n = curve.horizons.len();
        let ((k_lo, k_hi), rate) = *rates.last().expect("at least two horizons");
        let reliable = curve.mean[n - 2] > 10.0 * curve.stderr[n - 2]
            && curve.mean[n - 1] > 10.0 * curve.stderr[n - 1];
        let mut headline = Json::obj();
        headline.push("k_lo", Json::UInt(k_lo as u64));
        headline.push("k_hi", Json::UInt(k_hi as u64));
        headline.push("rho_loc", Json::opt_float(rate));
        headline.push("abs_error", Json::opt_float(rate.map(|r| (r - rho).abs())));
        headline.push("endpoint_means_above_10_stderr", Json::Bool(reliable));
        block.push("headline", headline);
        block.push("curve", curve_rows_json(&curve, |_, _| vec![]));
        results.push(block);
    }

    let config = config_echo(
        args,
        "rho-compare",
        vec![
            ("alphas", Json::Arr(args.alphas().iter().map(|&a| Json::Float(a)).collect())),
            ("horizons", horizons_json(&horizons)),
            ("n_traj", Json::UInt(n_traj as u64)),
        ],
    );
    let mut record = record_shell("rho-compare", config);
    record.push("results", Json::Arr(results));
    record.push("estimated_projector_flops", Json::Float(total_cost));
    Ok(CommandOutput { record, csv })
}

/// Rate and long-horizon forgetting across reservoir dimensions. Always
/// runs the angle-richness family.
pub fn richness_sweep(args: &RunArgs) -> Result<CommandOutput> {
    let horizons = args.horizons_or(&RICHNESS_HORIZONS);
    let n_traj = args.n_traj.unwrap_or(24);
    let grid = args.reservoir_grid();

    let mut families = Vec::new();
    let mut total_cost = 0.0;
    for &l in &grid {
        let family =
            TaskFamily::angle_richness(args.d, args.r, args.theta_deg, l, args.family_seed)?;
        let family = match args.epsilon {
            Some(eps) => TaskFamily::rescaled(family, eps)?,
            None => family,
        };
        total_cost += rollout_cost(&family, &horizons, n_traj);
        families.push((l, family));
    }
    if total_cost > args.budget {
        return Err(Error::Budget(format!(
            "estimated {total_cost:.3e} projector flops exceed the budget {:.3e}",
            args.budget
        )));
    }

    let mut results = Vec::new();
    let mut csv = CsvTable::new(&["L", "rho_hat", "k", "f_hat", "stderr"]);
    for (idx, (l, family)) in families.iter().enumerate() {
        let op_seed = args.run_seed + idx as u64;
        let op = build_operator(
            family,
            OperatorBuild::MonteCarlo { samples: args.operator_samples, seed: op_seed },
            Matricize::Skip,
        )?;
        let rho = estimate_rho(&op, args.power_iters, args.power_tol)?;
        let w = family.default_w_star().clone();
        let curve = rollout_forgetting(
            family,
            &w,
            &RolloutOptions::new(horizons.clone(), n_traj, args.run_seed),
        )?;

        let mut block = Json::obj();
        block.push("L", Json::UInt(*l as u64));
        block.push("operator_seed", Json::UInt(op_seed));
        block.push("rho_hat", Json::Float(rho.rho));
        block.push("rho_iterations", Json::UInt(rho.iterations as u64));
        block.push("rho_converged", Json::Bool(rho.converged));
        block.push("f_hat_final", Json::Float(*curve.mean.last().unwrap()));
        block.push("curve", curve_rows_json(&curve, |_, _| vec![]));
        results.push(block);

        for (i, &k) in curve.horizons.iter().enumerate() {
            csv.rows.push(vec![
                CsvCell::UInt(*l as u64),
                CsvCell::Float(rho.rho),
                CsvCell::UInt(k as u64),
                CsvCell::Float(curve.mean[i]),
                CsvCell::Float(curve.stderr[i]),
            ]);
        }
    }

    let config = config_echo(
        args,
        "richness-sweep",
        vec![
            ("family_note", Json::Str("richness-sweep always runs the angle-richness family".into())),
            ("reservoir_dims", Json::Arr(grid.iter().map(|&l| Json::UInt(l as u64)).collect())),
            ("horizons", horizons_json(&horizons)),
            ("n_traj", Json::UInt(n_traj as u64)),
        ],
    );
    let mut record = record_shell("richness-sweep", config);
    record.push("results", Json::Arr(results));
    record.push("estimated_projector_flops", Json::Float(total_cost));
    Ok(CommandOutput { record, csv })
}

/// Projection ladder: mean projector, chain, bounds, residual surrogate.
pub fn surrogates_cmd(args: &RunArgs) -> Result<CommandOutput> {
    let horizons = args.horizons_or(&SURROGATE_HORIZONS);
    let n_traj = args.n_traj.unwrap_or(100);
    let family = build_family(args, args.alphas()[0], args.family_seed)?;

    let max_h = horizons.iter().map(|&k| k / 2).max().unwrap_or(4);
    let chain_len = max_h.max(8);
    let mut total_cost = rollout_cost(&family, &horizons, n_traj);
    for &k in &horizons {
        total_cost += residual_cost(&family, k, n_traj);
    }
    if total_cost > args.budget {
        return Err(Error::Budget(format!(
            "estimated {total_cost:.3e} projector flops exceed the budget {:.3e}",
            args.budget
        )));
    }

    let build = if family.enumerate_atoms().is_ok() {
        OperatorBuild::Exact
    } else {
        OperatorBuild::MonteCarlo { samples: args.operator_samples, seed: args.run_seed }
    };
    let op = build_operator(&family, build, Matricize::Skip)?;
    let stats = mean_projector_of(&op);
    let chain = chain_f_of(&op, chain_len)?;
    let w = family.default_w_star().clone();
    let curve =
        rollout_forgetting(&family, &w, &RolloutOptions::new(horizons.clone(), n_traj, args.run_seed))?;

    let mut per_k = Vec::new();
    for (i, &k) in horizons.iter().enumerate() {
        let bounds = surrogate_bounds(&stats, &chain, k)?;
        let residual = residual_surrogate(&family, k, n_traj, args.run_seed, None)?;
        let mut row = Json::obj();
        row.push("k", Json::UInt(k as u64));
        row.push("f_hat", Json::Float(curve.mean[i]));
        row.push("f_hat_stderr", Json::Float(curve.stderr[i]));
        row.push("residual_mean", Json::Float(residual.mean));
        row.push("residual_stderr", Json::Float(residual.stderr));
        row.push("normalization_warning", Json::Bool(residual.normalization_warning));
        row.push("transfer_bound", Json::Float(bounds.transfer));
        row.push("coarse_bound", Json::Float(bounds.coarse));
        row.push("exponential_bound", Json::Float(bounds.exponential));
        per_k.push(row);
    }

    let mut closed_forms = Json::obj();
    match family.kind() {
        FamilyKind::CommutingDiagonal { retain_probs } => {
            let vals: Vec<Json> = (0..=chain_len)
                .map(|m| Json::Float(commuting_f(retain_probs, m).expect("validated probs")))
                .collect();
            closed_forms.push("commuting_f", Json::Arr(vals));
        }
        FamilyKind::RankOneDirections { directions } if family.dim() <= 16 => {
            let vals: Vec<Json> = (0..=chain_len)
                .map(|m| Json::Float(rank_one_chain(directions, m).expect("validated dirs").f_m))
                .collect();
            closed_forms.push("rank_one_f", Json::Arr(vals));
        }
        FamilyKind::TwoComponentMixture { q, a, b } => {
            if let (Ok(opa), Ok(opb)) = (
                build_operator(a, OperatorBuild::Exact, Matricize::Skip),
                build_operator(b, OperatorBuild::Exact, Matricize::Skip),
            ) {
                let sa = mean_projector_of(&opa);
                let sb = mean_projector_of(&opb);
                closed_forms.push(
                    "mixture_f1",
                    Json::Float(mixture_f1(*q, &sa, &sb).expect("validated mixture")),
                );
            }
        }
        _ => {}
    }

    let mut record = record_shell(
        "surrogates",
        config_echo(
            args,
            "surrogates",
            vec![
                ("horizons", horizons_json(&horizons)),
                ("n_traj", Json::UInt(n_traj as u64)),
                ("chain_len", Json::UInt(chain_len as u64)),
            ],
        ),
    );
    record.push("family", Json::Str(family.describe()));
    record.push("source", Json::Str(stats.source.clone()));
    record.push("nu", Json::Float(stats.nu));
    record.push("lambda", Json::Float(stats.lambda));
    record.push("chain_f", Json::Arr(chain.f.iter().map(|&v| Json::Float(v)).collect()));
    record.push("chain_kappa", Json::Arr(chain.kappa.iter().map(|&v| Json::Float(v)).collect()));
    record.push("per_horizon", Json::Arr(per_k));
    record.push("closed_forms", closed_forms);
    record.push("estimated_projector_flops", Json::Float(total_cost));

    let mut csv = CsvTable::new(&["m", "f_m", "kappa_m", "nu", "lambda"]);
    for (m, &f) in chain.f.iter().enumerate() {
        csv.rows.push(vec![
            CsvCell::UInt(m as u64),
            CsvCell::Float(f),
            if m >= 1 { CsvCell::Float(chain.kappa[m - 1]) } else { CsvCell::Null },
            CsvCell::Float(stats.nu),
            CsvCell::Float(stats.lambda),
        ]);
    }
    Ok(CommandOutput { record, csv })
}

/// Operator construction, norm estimate, and (when available) spectral
/// levels from the dense matricized form.
pub fn operator_cmd(args: &RunArgs) -> Result<CommandOutput> {
    let family = build_family(args, args.alphas()[0], args.family_seed)?;
    let d = family.dim();
    let enumerable = family.enumerate_atoms().is_ok();
    let dense = enumerable && d <= MATRICIZE_DEFAULT_CAP;
    let (op, source): (SuperoperatorRep, &str) = if enumerable {
        let mat = if dense { Matricize::dense() } else { Matricize::Skip };
        (build_operator(&family, OperatorBuild::Exact, mat)?, "exact")
    } else {
        (
            build_operator(
                &family,
                OperatorBuild::MonteCarlo { samples: args.operator_samples, seed: args.run_seed },
                Matricize::Skip,
            )?,
            "monte-carlo",
        )
    };

    let rho = estimate_rho(&op, args.power_iters, args.power_tol)?;
    let w = family.default_w_star().clone();
    let target_pattern = SymMatrixVec::encode(&(&w * w.transpose()))?;
    let target_score = invisibility_score(&op, &target_pattern)?;
    let span_w = SubspaceBasis::new(DMatrix::from_column_slice(d, 1, w.as_slice()))?;
    let span_score = invisibility_score_subspace(&op, &span_w)?;

    let mut record = record_shell(
        "operator",
        config_echo(args, "operator", vec![("source", Json::Str(source.to_string()))]),
    );
    record.push("family", Json::Str(family.describe()));
    record.push("rho_hat", Json::Float(rho.rho));
    record.push("rho_iterations", Json::UInt(rho.iterations as u64));
    record.push("rho_residual", Json::Float(rho.residual));
    record.push("rho_converged", Json::Bool(rho.converged));
    record.push("target_invisibility", Json::Float(target_score));
    record.push("target_span_invisibility", Json::Float(span_score.score));
    record.push(
        "target_span_invisibility_angles",
        Json::Float(span_score.principal_angle_score),
    );

    let mut csv = CsvTable::new(&["level", "value", "multiplicity"]);
    if dense {
        let decomp = spectral_decompose(&op, 1e-8)?;
        let mut levels = Vec::new();
        for (i, level) in decomp.levels().iter().enumerate() {
            let mut lv = Json::obj();
            lv.push("value", Json::Float(level.value));
            lv.push("multiplicity", Json::UInt(level.basis.ncols() as u64));
            levels.push(lv);
            csv.rows.push(vec![
                CsvCell::UInt(i as u64),
                CsvCell::Float(level.value),
                CsvCell::UInt(level.basis.ncols() as u64),
            ]);
        }
        record.push("rho", Json::Float(decomp.rho()));
        record.push("eta", Json::Float(decomp.eta()));
        record.push("levels", Json::Arr(levels));
    } else {
        record.push("rho", Json::Null);
        record.push("eta", Json::Null);
        record.push("levels", Json::Arr(vec![]));
        csv.rows.push(vec![CsvCell::Null, CsvCell::Float(rho.rho), CsvCell::Null]);
    }
    Ok(CommandOutput { record, csv })
}
