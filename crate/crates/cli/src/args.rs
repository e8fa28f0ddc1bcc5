//! Command-line surface.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "forgetlab",
    version,
    about = "Exact-fit forgetting laboratory: Monte Carlo experiments, operator spectra, and projection surrogates for i.i.d. task streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Empirical forgetting curves against the exponential bound and the
    /// coarse O(1/k) baseline, per alpha.
    BoundCompare(RunArgs),
    /// Empirical local decay rates against the closed-form rate, per alpha.
    RhoCompare(RunArgs),
    /// Rate and long-horizon forgetting across reservoir dimensions.
    RichnessSweep(RunArgs),
    /// Mean-projector statistics, the Frobenius chain, projection bounds,
    /// and the residual surrogate.
    Surrogates(RunArgs),
    /// Operator construction, norm estimation, and spectral levels.
    Operator(RunArgs),
    /// Cross-module verification suite on built-in fixtures.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyArg {
    #[value(name = "shared-null-spike")]
    SharedNullSpike,
    #[value(name = "isotropic")]
    Isotropic,
    #[value(name = "angle-richness")]
    AngleRichness,
    #[value(name = "commuting-diagonal")]
    CommutingDiagonal,
    #[value(name = "two-atom-fixture")]
    TwoAtomFixture,
    #[value(name = "three-atom-fixture")]
    ThreeAtomFixture,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Task distribution.
    #[arg(long, value_enum, default_value = "shared-null-spike")]
    pub family: FamilyArg,

    /// Ambient dimension.
    #[arg(long, default_value_t = 192)]
    pub d: usize,

    /// Visible rank.
    #[arg(long, default_value_t = 48)]
    pub r: usize,

    /// Spike-hiding probability; repeat for a grid (default 0.2 0.4 0.6 0.8).
    #[arg(long = "alpha")]
    pub alpha: Vec<f64>,

    /// Tilt angle for the angle-richness family, in degrees.
    #[arg(long = "theta-deg", default_value_t = 30.0)]
    pub theta_deg: f64,

    /// Reservoir dimension L; repeat for a sweep (default: 30 values
    /// spanning [d-r, d-1]).
    #[arg(long = "reservoir-dim")]
    pub reservoir_dim: Vec<usize>,

    /// Comma-separated checkpoint horizons.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Vec<usize>,

    /// Trajectories per Monte Carlo estimate (command-specific default).
    #[arg(long = "n-traj")]
    pub n_traj: Option<usize>,

    /// Base seed for frozen family quantities (alpha grids add the index).
    #[arg(long = "family-seed", default_value_t = 5000)]
    pub family_seed: u64,

    /// Base seed for run randomness (alpha grids add the index).
    #[arg(long = "run-seed", default_value_t = 7000)]
    pub run_seed: u64,

    /// Projector samples for Monte Carlo operator estimates.
    #[arg(long = "operator-samples", default_value_t = 32)]
    pub operator_samples: usize,

    /// Power-iteration step cap.
    #[arg(long = "power-iters", default_value_t = 200)]
    pub power_iters: usize,

    /// Power-iteration Rayleigh-quotient tolerance.
    #[arg(long = "power-tol", default_value_t = 1e-10)]
    pub power_tol: f64,

    /// Wrap the family so every task scale is multiplied by this factor.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,

    /// Projector-application flop budget per command.
    #[arg(long, default_value_t = 2e10)]
    pub budget: f64,
}

impl RunArgs {
    pub fn alphas(&self) -> Vec<f64> {
        if self.alpha.is_empty() {
            vec![0.2, 0.4, 0.6, 0.8]
        } else {
            self.alpha.clone()
        }
    }

    pub fn horizons_or(&self, default: &[usize]) -> Vec<usize> {
        if self.horizons.is_empty() {
            default.to_vec()
        } else {
            self.horizons.clone()
        }
    }

    pub fn reservoir_grid(&self) -> Vec<usize> {
        if !self.reservoir_dim.is_empty() {
            return self.reservoir_dim.clone();
        }
        // 30 evenly spaced integers across the feasible interval.
        let lo = self.d.saturating_sub(self.r);
        let hi = self.d.saturating_sub(1);
        let n = 30usize.min(hi.saturating_sub(lo) + 1);
        if n <= 1 {
            return vec![lo];
        }
        let mut grid: Vec<usize> = (0..n)
            .map(|i| lo + (i as f64 * (hi - lo) as f64 / (n - 1) as f64).round() as usize)
            .collect();
        grid.dedup();
        grid
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Run only the named check (e.g. thm1-triple-agreement).
    #[arg(long)]
    pub only: Option<String>,

    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}
