//! Sequential exact-fit process in error coordinates, with horizon
//! checkpointing for empirical forgetting curves.
//!
//! In error coordinates e_t = w_t − w★ the exact-fit update is e_t = P_t
//! e_{t−1}, an orthogonal projection, so the error norm never increases and
//! the final task of each checkpoint is interpolated exactly. One rollout is
//! carried to the largest horizon and all requested horizons are read off at
//! checkpoints; this reuses a single task sequence across horizons, which
//! correlates the per-horizon estimates with each other (the per-horizon
//! standard errors remain valid marginally).

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::family::TaskFamily;
use crate::stream::substream;
use crate::task::Task;
use nalgebra::DVector;

/// Empirical forgetting curve with per-horizon Monte Carlo standard errors.
#[derive(Debug, Clone)]
pub struct ForgettingCurve {
    pub horizons: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_traj: usize,
    pub family_seed: u64,
    pub run_seed: u64,
    pub family: String,
}

/// Rollout controls beyond the family and target.
#[derive(Debug, Clone)]
pub struct RolloutOptions {
    pub horizons: Vec<usize>,
    pub n_traj: usize,
    pub run_seed: u64,
    /// Flop guard: projector applications × d × r; `None` disables it.
    pub step_budget: Option<f64>,
    pub execution: Execution,
}

impl RolloutOptions {
    pub fn new(horizons: Vec<usize>, n_traj: usize, run_seed: u64) -> Self {
        Self { horizons, n_traj, run_seed, step_budget: None, execution: Execution::Parallel }
    }
}

/// One exact-fit update in error coordinates: e ← e − Q(Qᵀe).
///
/// Independent of the task scale by construction.
pub fn exact_fit_step(e: &DVector<f64>, task: &Task) -> Result<DVector<f64>> {
    crate::subspace::project_off(&task.visible, e)
}

/// Task loss at error e: (σ²/n)·‖Qᵀe‖₂²; 0 for rank-0 tasks.
pub fn task_loss(task: &Task, e: &DVector<f64>) -> f64 {
    if task.rank() == 0 || task.rows == 0 {
        return 0.0;
    }
    let visible_part = task.visible.columns().transpose() * e;
    task.scale * task.scale * (visible_part.norm_squared() / task.rows as f64)
}

/// Rolls out `n_traj` independent trajectories to the largest horizon and
/// records (1/k)Σ_{t≤k} ℓ_t(w_k) at each checkpoint.
///
/// Trajectory j draws from the substream (run_seed, j); the reduction over
/// trajectories is sequential in j, so parallel and serial execution agree
/// bitwise.
pub fn rollout_forgetting(
    family: &TaskFamily,
    w_star: &DVector<f64>,
    opts: &RolloutOptions,
) -> Result<ForgettingCurve> {
    let d = family.dim();
    if w_star.len() != d {
        return Err(Error::Parameter(format!(
            "w_star has length {}, family dimension is {d}",
            w_star.len()
        )));
    }
    if opts.horizons.is_empty() {
        return Err(Error::Parameter("empty horizon list".into()));
    }
    if !opts.horizons.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Parameter("horizons must be strictly ascending".into()));
    }
    let k_max = *opts.horizons.last().unwrap();
    if k_max < 2 {
        return Err(Error::Parameter("largest horizon must be at least 2".into()));
    }
    if opts.n_traj == 0 {
        return Err(Error::Parameter("need at least one trajectory".into()));
    }
    if let Some(budget) = opts.step_budget {
        let cost = rollout_cost(family, &opts.horizons, opts.n_traj);
        if cost > budget {
            return Err(Error::Budget(format!(
                "estimated {cost:.3e} projector flops exceed the budget {budget:.3e}"
            )));
        }
    }

    let per_traj: Vec<Vec<f64>> = map_indexed(opts.execution, opts.n_traj, |j| {
        let mut rng = substream(opts.run_seed, j as u64);
        rollout_single(family, w_star, &opts.horizons, &mut rng)
    });

    let n = opts.n_traj as f64;
    let mut mean = vec![0.0; opts.horizons.len()];
    for values in &per_traj {
        for (m, v) in mean.iter_mut().zip(values) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut stderr = vec![0.0; opts.horizons.len()];
    if opts.n_traj > 1 {
        for values in &per_traj {
            for ((s, v), m) in stderr.iter_mut().zip(values).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stderr {
            *s = (*s / (n - 1.0) / n).sqrt();
        }
    }

    Ok(ForgettingCurve {
        horizons: opts.horizons.clone(),
        mean,
        stderr,
        n_traj: opts.n_traj,
        family_seed: family.family_seed(),
        run_seed: opts.run_seed,
        family: family.describe(),
    })
}

fn rollout_single(
    family: &TaskFamily,
    w_star: &DVector<f64>,
    horizons: &[usize],
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<f64> {
    let k_max = *horizons.last().unwrap();
    let mut e = -w_star;
    let mut tasks: Vec<Task> = Vec::with_capacity(k_max);
    let mut out = Vec::with_capacity(horizons.len());
    let mut next = 0;
    for t in 1..=k_max {
        let task = family.sample_task(rng);
        e = exact_fit_step(&e, &task).expect("dimensions agree along a rollout");
        tasks.push(task);
        if horizons[next] == t {
            let total: f64 = tasks.iter().map(|task| task_loss(task, &e)).sum();
            out.push(total / t as f64);
            next += 1;
            if next == horizons.len() {
                break;
            }
        }
    }
    out
}

/// Projector-application flop estimate for the budget guard. A checkpoint
/// loss evaluation needs only the analysis half (Qᵀe) of an application,
/// hence the factor ½ on the checkpoint sum.
pub fn rollout_cost(family: &TaskFamily, horizons: &[usize], n_traj: usize) -> f64 {
    let d = family.dim() as f64;
    let r = family.fixed_rank().unwrap_or(family.dim()) as f64;
    let k_max = *horizons.last().unwrap_or(&0) as f64;
    let checkpoint: f64 = horizons.iter().map(|&k| k as f64).sum();
    n_traj as f64 * d * r * (k_max + 0.5 * checkpoint)
}

/// Local geometric decay rate between adjacent horizons; `None` marks
/// intervals whose endpoint means are not strictly positive (all-zero
/// curves from commuting families land here).
pub fn local_decay_rate(curve: &ForgettingCurve) -> Vec<((usize, usize), Option<f64>)> {
    curve
        .horizons
        .windows(2)
        .zip(curve.mean.windows(2))
        .map(|(ks, ms)| {
            let interval = (ks[0], ks[1]);
            if ms[0] > 0.0 && ms[1] > 0.0 {
                let rate = ((ms[1].ln() - ms[0].ln()) / (ks[1] - ks[0]) as f64).exp();
                (interval, Some(rate))
            } else {
                (interval, None)
            }
        })
        .collect()
}
