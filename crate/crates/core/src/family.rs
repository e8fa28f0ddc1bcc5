//! The catalogue of i.i.d. task distributions: seedable samplers, with exact
//! finite-support enumeration where the law permits it.
//!
//! Frozen quantities (the spike direction, the reservoir basis, the default
//! shared target) are drawn once at construction from the family seed; all
//! per-task randomness comes from a separately passed run stream, so families
//! are immutable and sampling is pure given a stream.

use crate::error::{Error, Result};
use crate::stream::root_stream;
use crate::subspace::{
    hyperplane_basis, orthonormal_complement, sample_orthonormal_basis, Constraint, SubspaceBasis,
};
use crate::task::Task;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Atom-count cap for product-Bernoulli enumeration (2^d atoms).
const COMMUTING_ENUM_MAX_D: usize = 20;

#[derive(Debug, Clone)]
pub enum FamilyKind {
    /// Visible subspace uniform among rank-r subspaces.
    IsotropicFixedRank { r: usize },
    /// With probability α the visible subspace avoids the spike direction.
    SharedNullSpike { r: usize, alpha: f64, spike: DVector<f64> },
    /// Null spaces tilt toward the spike at a fixed angle; the rest of the
    /// null space lives in an L-dimensional reservoir inside spike^⊥.
    AngleRichness {
        r: usize,
        theta_deg: f64,
        spike: DVector<f64>,
        reservoir: SubspaceBasis,
    },
    /// Coordinate i is retained in the null space with probability p_i,
    /// independently.
    CommutingDiagonal { retain_probs: Vec<f64> },
    /// Null space is a single direction drawn from a weighted finite set.
    RankOneDirections { directions: Vec<(f64, DVector<f64>)> },
    /// Bernoulli(q) mixture of two sub-families.
    TwoComponentMixture { q: f64, a: Box<TaskFamily>, b: Box<TaskFamily> },
    /// Explicit weighted atom list.
    FiniteSupport { atoms: Vec<(f64, Task)> },
    /// Wrapper multiplying each sampled task's scale by ε; bases untouched.
    Rescaled { inner: Box<TaskFamily>, epsilon: f64 },
}

#[derive(Debug, Clone)]
pub struct TaskFamily {
    kind: FamilyKind,
    d: usize,
    family_seed: u64,
    w_star: DVector<f64>,
}

fn check_rank(d: usize, r: usize) -> Result<()> {
    if r < 1 || r >= d {
        return Err(Error::Parameter(format!(
            "rank r = {r} must satisfy 1 <= r < d = {d}"
        )));
    }
    Ok(())
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if w < 0.0 {
            return Err(Error::Parameter(format!("negative weight {w}")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "weights sum to {sum}, expected 1 within 1e-12"
        )));
    }
    Ok(())
}

fn seeded_unit_vector(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

impl TaskFamily {
    pub fn isotropic(d: usize, r: usize, family_seed: u64) -> Result<Self> {
        check_rank(d, r)?;
        let mut rng = root_stream(family_seed);
        let w_star = seeded_unit_vector(d, &mut rng);
        Ok(Self { kind: FamilyKind::IsotropicFixedRank { r }, d, family_seed, w_star })
    }

    /// The spike u is sampled from the family seed and doubles as the
    /// default shared target.
    pub fn shared_null_spike(d: usize, r: usize, alpha: f64, family_seed: u64) -> Result<Self> {
        check_rank(d, r)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parameter(format!("alpha = {alpha} outside [0, 1]")));
        }
        let mut rng = root_stream(family_seed);
        let spike = seeded_unit_vector(d, &mut rng);
        let w_star = spike.clone();
        Ok(Self { kind: FamilyKind::SharedNullSpike { r, alpha, spike }, d, family_seed, w_star })
    }

    /// Reservoir dimension L must leave room for an (m−1)-dimensional
    /// complement inside R_L ∩ v^⊥, with m = d − r: d−r ≤ L ≤ d−1.
    pub fn angle_richness(
        d: usize,
        r: usize,
        theta_deg: f64,
        reservoir_dim: usize,
        family_seed: u64,
    ) -> Result<Self> {
        check_rank(d, r)?;
        if !(theta_deg > 0.0 && theta_deg <= 90.0) {
            return Err(Error::Parameter(format!(
                "theta = {theta_deg} degrees outside (0, 90]"
            )));
        }
        let m = d - r;
        if reservoir_dim < m || reservoir_dim > d - 1 {
            return Err(Error::Parameter(format!(
                "reservoir dimension L = {reservoir_dim} outside [{m}, {}]",
                d - 1
            )));
        }
        let mut rng = root_stream(family_seed);
        let spike = seeded_unit_vector(d, &mut rng);
        let reservoir = sample_orthonormal_basis(
            d,
            reservoir_dim,
            &[Constraint::OrthogonalTo(&spike)],
            &mut rng,
        )?;
        let w_star = spike.clone();
        Ok(Self {
            kind: FamilyKind::AngleRichness { r, theta_deg, spike, reservoir },
            d,
            family_seed,
            w_star,
        })
    }

    pub fn commuting_diagonal(retain_probs: Vec<f64>, family_seed: u64) -> Result<Self> {
        let d = retain_probs.len();
        if d == 0 {
            return Err(Error::Parameter("empty retention probability list".into()));
        }
        for &p in &retain_probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!("retention probability {p} outside [0, 1]")));
            }
        }
        let mut rng = root_stream(family_seed);
        let w_star = seeded_unit_vector(d, &mut rng);
        Ok(Self { kind: FamilyKind::CommutingDiagonal { retain_probs }, d, family_seed, w_star })
    }

    pub fn rank_one(directions: Vec<(f64, DVector<f64>)>, family_seed: u64) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::Parameter("empty direction set".into()));
        }
        let d = directions[0].1.len();
        if d < 2 {
            return Err(Error::Parameter("rank-one law needs d >= 2".into()));
        }
        check_weights(directions.iter().map(|(w, _)| *w))?;
        for (_, u) in &directions {
            if u.len() != d {
                return Err(Error::Parameter("directions have mixed dimensions".into()));
            }
            if (u.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Parameter(format!(
                    "direction has norm {}, expected a unit vector",
                    u.norm()
                )));
            }
        }
        let mut rng = root_stream(family_seed);
        let w_star = seeded_unit_vector(d, &mut rng);
        Ok(Self { kind: FamilyKind::RankOneDirections { directions }, d, family_seed, w_star })
    }

    pub fn mixture(q: f64, a: TaskFamily, b: TaskFamily) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Parameter(format!("mixture weight q = {q} outside [0, 1]")));
        }
        if a.d != b.d {
            return Err(Error::Parameter(format!(
                "mixture components have different ambient dimensions: {} vs {}",
                a.d, b.d
            )));
        }
        let d = a.d;
        let family_seed = a.family_seed;
        let mut rng = root_stream(family_seed);
        let w_star = seeded_unit_vector(d, &mut rng);
        Ok(Self {
            kind: FamilyKind::TwoComponentMixture { q, a: Box::new(a), b: Box::new(b) },
            d,
            family_seed,
            w_star,
        })
    }

    pub fn finite_support(d: usize, atoms: Vec<(f64, Task)>, family_seed: u64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Parameter("empty atom list".into()));
        }
        check_weights(atoms.iter().map(|(w, _)| *w))?;
        for (_, t) in &atoms {
            if t.ambient_dim() != d {
                return Err(Error::Parameter(format!(
                    "atom has ambient dimension {}, family has {d}",
                    t.ambient_dim()
                )));
            }
            if t.scale <= 0.0 {
                return Err(Error::Parameter("atom scale must be positive".into()));
            }
            if t.rows == 0 && t.rank() > 0 {
                return Err(Error::Parameter("positive-rank atom with zero rows".into()));
            }
        }
        let mut rng = root_stream(family_seed);
        let w_star = seeded_unit_vector(d, &mut rng);
        Ok(Self { kind: FamilyKind::FiniteSupport { atoms }, d, family_seed, w_star })
    }

    pub fn rescaled(inner: TaskFamily, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!("epsilon = {epsilon} must be positive")));
        }
        let d = inner.d;
        let family_seed = inner.family_seed;
        let w_star = inner.w_star.clone();
        Ok(Self {
            kind: FamilyKind::Rescaled { inner: Box::new(inner), epsilon },
            d,
            family_seed,
            w_star,
        })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn family_seed(&self) -> u64 {
        self.family_seed
    }

    /// Default shared target: the spike for spike-based families, otherwise
    /// a unit vector sampled from the family seed. Operations accept an
    /// explicit override.
    pub fn default_w_star(&self) -> &DVector<f64> {
        &self.w_star
    }

    /// Visible rank when it is the same for every draw.
    pub fn fixed_rank(&self) -> Option<usize> {
        match &self.kind {
            FamilyKind::IsotropicFixedRank { r }
            | FamilyKind::SharedNullSpike { r, .. }
            | FamilyKind::AngleRichness { r, .. } => Some(*r),
            FamilyKind::CommutingDiagonal { .. } => None,
            FamilyKind::RankOneDirections { .. } => Some(self.d - 1),
            FamilyKind::TwoComponentMixture { a, b, .. } => match (a.fixed_rank(), b.fixed_rank())
            {
                (Some(ra), Some(rb)) if ra == rb => Some(ra),
                _ => None,
            },
            FamilyKind::FiniteSupport { atoms } => {
                let r0 = atoms[0].1.rank();
                atoms.iter().all(|(_, t)| t.rank() == r0).then_some(r0)
            }
            FamilyKind::Rescaled { inner, .. } => inner.fixed_rank(),
        }
    }

    /// Largest task scale the family can emit (normalization checks).
    pub fn max_scale(&self) -> f64 {
        match &self.kind {
            FamilyKind::IsotropicFixedRank { .. }
            | FamilyKind::SharedNullSpike { .. }
            | FamilyKind::AngleRichness { .. }
            | FamilyKind::CommutingDiagonal { .. }
            | FamilyKind::RankOneDirections { .. } => 1.0,
            FamilyKind::TwoComponentMixture { a, b, .. } => a.max_scale().max(b.max_scale()),
            FamilyKind::FiniteSupport { atoms } => {
                atoms.iter().map(|(_, t)| t.scale).fold(0.0, f64::max)
            }
            FamilyKind::Rescaled { inner, epsilon } => inner.max_scale() * epsilon,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FamilyKind::IsotropicFixedRank { r } => {
                format!("isotropic-fixed-rank(d={}, r={r})", self.d)
            }
            FamilyKind::SharedNullSpike { r, alpha, .. } => {
                format!("shared-null-spike(d={}, r={r}, alpha={alpha})", self.d)
            }
            FamilyKind::AngleRichness { r, theta_deg, reservoir, .. } => format!(
                "angle-richness(d={}, r={r}, theta={theta_deg}deg, L={})",
                self.d,
                reservoir.dim()
            ),
            FamilyKind::CommutingDiagonal { retain_probs } => {
                format!("commuting-diagonal(d={})", retain_probs.len())
            }
            FamilyKind::RankOneDirections { directions } => {
                format!("rank-one-directions(d={}, atoms={})", self.d, directions.len())
            }
            FamilyKind::TwoComponentMixture { q, a, b } => {
                format!("mixture(q={q}, {}, {})", a.describe(), b.describe())
            }
            FamilyKind::FiniteSupport { atoms } => {
                format!("finite-support(d={}, atoms={})", self.d, atoms.len())
            }
            FamilyKind::Rescaled { inner, epsilon } => {
                format!("rescaled(eps={epsilon}, {})", inner.describe())
            }
        }
    }

    /// One i.i.d. draw from the family.
    pub fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> Task {
        match &self.kind {
            FamilyKind::IsotropicFixedRank { r } => {
                let visible = sample_orthonormal_basis(self.d, *r, &[], rng)
                    .expect("validated family cannot fail to sample");
                Task::from_visible(visible)
            }
            FamilyKind::SharedNullSpike { r, alpha, spike } => {
                let constrained = rng.gen_bool(*alpha);
                let visible = if constrained {
                    sample_orthonormal_basis(self.d, *r, &[Constraint::OrthogonalTo(spike)], rng)
                } else {
                    sample_orthonormal_basis(self.d, *r, &[], rng)
                }
                .expect("validated family cannot fail to sample");
                Task::from_visible(visible)
            }
            FamilyKind::AngleRichness { r, theta_deg, spike, reservoir } => {
                let m = self.d - r;
                // Uniform unit vector in the reservoir.
                let v = loop {
                    let z = DVector::from_fn(reservoir.dim(), |_, _| {
                        rng.sample::<f64, _>(StandardNormal)
                    });
                    let n = z.norm();
                    if n > 1e-8 {
                        break reservoir.columns() * (z / n);
                    }
                };
                let theta = theta_deg.to_radians();
                let tilt = spike * theta.cos() + &v * theta.sin();
                let null_rest = if m > 1 {
                    sample_orthonormal_basis(
                        self.d,
                        m - 1,
                        &[Constraint::Inside(reservoir), Constraint::OrthogonalTo(&v)],
                        rng,
                    )
                    .expect("validated family cannot fail to sample")
                } else {
                    SubspaceBasis::empty(self.d)
                };
                // tilt ⊥ null_rest: the spike is orthogonal to the reservoir
                // and v is projected off, so [tilt | H] is orthonormal.
                let mut null_cols = DMatrix::zeros(self.d, m);
                null_cols.set_column(0, &tilt);
                for j in 0..m - 1 {
                    null_cols.set_column(j + 1, &null_rest.columns().column(j).clone_owned());
                }
                let null = SubspaceBasis::new_unchecked(null_cols);
                let visible = orthonormal_complement(&null);
                Task::from_visible(visible)
            }
            FamilyKind::CommutingDiagonal { retain_probs } => {
                let visible_coords: Vec<usize> = retain_probs
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &p)| (!rng.gen_bool(p)).then_some(i))
                    .collect();
                Task::from_visible(SubspaceBasis::coordinate(self.d, &visible_coords))
            }
            FamilyKind::RankOneDirections { directions } => {
                let u = &directions[categorical(rng, directions.iter().map(|(w, _)| *w))].1;
                Task::from_visible(hyperplane_basis(u).expect("validated unit direction"))
            }
            FamilyKind::TwoComponentMixture { q, a, b } => {
                if rng.gen_bool(*q) {
                    a.sample_task(rng)
                } else {
                    b.sample_task(rng)
                }
            }
            FamilyKind::FiniteSupport { atoms } => {
                atoms[categorical(rng, atoms.iter().map(|(w, _)| *w))].1.clone()
            }
            FamilyKind::Rescaled { inner, epsilon } => {
                let mut t = inner.sample_task(rng);
                t.scale *= epsilon;
                t
            }
        }
    }

    /// Complete weighted atom list for finitely supported laws.
    pub fn enumerate_atoms(&self) -> Result<Vec<(f64, Task)>> {
        match &self.kind {
            FamilyKind::FiniteSupport { atoms } => Ok(atoms.clone()),
            FamilyKind::RankOneDirections { directions } => Ok(directions
                .iter()
                .map(|(w, u)| (*w, Task::from_visible(hyperplane_basis(u).unwrap())))
                .collect()),
            FamilyKind::CommutingDiagonal { retain_probs } => {
                let d = retain_probs.len();
                if d > COMMUTING_ENUM_MAX_D {
                    return Err(Error::Size(format!(
                        "commuting-diagonal enumeration needs 2^{d} atoms; cap is d <= {COMMUTING_ENUM_MAX_D}"
                    )));
                }
                let mut atoms = Vec::with_capacity(1 << d);
                for pattern in 0u64..(1 << d) {
                    let mut weight = 1.0;
                    let mut visible_coords = Vec::new();
                    for (i, &p) in retain_probs.iter().enumerate() {
                        if pattern >> i & 1 == 1 {
                            weight *= p;
                        } else {
                            weight *= 1.0 - p;
                            visible_coords.push(i);
                        }
                    }
                    if weight > 0.0 {
                        atoms.push((
                            weight,
                            Task::from_visible(SubspaceBasis::coordinate(d, &visible_coords)),
                        ));
                    }
                }
                Ok(atoms)
            }
            FamilyKind::TwoComponentMixture { q, a, b } => {
                let mut atoms = Vec::new();
                if *q > 0.0 {
                    for (w, t) in a.enumerate_atoms()? {
                        atoms.push((q * w, t));
                    }
                }
                if *q < 1.0 {
                    for (w, t) in b.enumerate_atoms()? {
                        atoms.push(((1.0 - q) * w, t));
                    }
                }
                Ok(atoms)
            }
            FamilyKind::Rescaled { inner, epsilon } => {
                let mut atoms = inner.enumerate_atoms()?;
                for (_, t) in &mut atoms {
                    t.scale *= epsilon;
                }
                Ok(atoms)
            }
            FamilyKind::IsotropicFixedRank { .. }
            | FamilyKind::SharedNullSpike { .. }
            | FamilyKind::AngleRichness { .. } => Err(Error::NotEnumerable(format!(
                "{} has continuous support",
                self.describe()
            ))),
        }
    }

    /// E‖C_t‖_F, exact where enumeration or a constant-rank closed form is
    /// available, otherwise a Monte Carlo estimate with its standard error.
    pub fn expected_c_fro(&self, mc_samples: usize, seed: u64) -> CFroEstimate {
        match &self.kind {
            FamilyKind::IsotropicFixedRank { r }
            | FamilyKind::SharedNullSpike { r, .. }
            | FamilyKind::AngleRichness { r, .. } => {
                CFroEstimate::exact(1.0 / (*r as f64).sqrt())
            }
            FamilyKind::RankOneDirections { .. } => {
                CFroEstimate::exact(1.0 / ((self.d - 1) as f64).sqrt())
            }
            FamilyKind::Rescaled { inner, epsilon } => {
                // C scales by ε².
                inner.expected_c_fro(mc_samples, seed).scaled(epsilon * epsilon)
            }
            _ => {
                if let Ok(atoms) = self.enumerate_atoms() {
                    let v = atoms.iter().map(|(w, t)| w * t.covariance_fro()).sum();
                    return CFroEstimate::exact(v);
                }
                let mut rng = crate::stream::substream(seed, 0);
                let vals: Vec<f64> =
                    (0..mc_samples).map(|_| self.sample_task(&mut rng).covariance_fro()).collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                CFroEstimate { value: mean, stderr: Some((var / n).sqrt()) }
            }
        }
    }
}

/// E‖C_t‖_F with a standard error when estimated by Monte Carlo.
#[derive(Debug, Clone, Copy)]
pub struct CFroEstimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

impl CFroEstimate {
    fn exact(value: f64) -> Self {
        Self { value, stderr: None }
    }

    fn scaled(self, factor: f64) -> Self {
        Self { value: self.value * factor, stderr: self.stderr.map(|s| s * factor) }
    }
}

fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if x < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::substream;
    use approx::assert_relative_eq;

    #[test]
    fn spike_family_has_unit_spike_target() {
        let f = TaskFamily::shared_null_spike(192, 48, 0.4, 5001).unwrap();
        assert_relative_eq!(f.default_w_star().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_richness_reservoir_floor() {
        // L = 143 < d - r = 144 is infeasible.
        match TaskFamily::angle_richness(192, 48, 30.0, 143, 5000) {
            Err(Error::Parameter(_)) => {}
            other => panic!("expected parameter error, got {other:?}"),
        }
        assert!(TaskFamily::angle_richness(192, 48, 30.0, 144, 5000).is_ok());
    }

    #[test]
    fn rescaled_wrapper_changes_scale_only() {
        let base = TaskFamily::isotropic(8, 3, 17).unwrap();
        let scaled = TaskFamily::rescaled(base.clone(), 0.1).unwrap();
        let t0 = base.sample_task(&mut substream(99, 0));
        let t1 = scaled.sample_task(&mut substream(99, 0));
        assert_eq!(t0.visible.columns(), t1.visible.columns());
        assert_relative_eq!(t1.scale, 0.1);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(TaskFamily::shared_null_spike(8, 3, 1.5, 0).is_err());
        assert!(TaskFamily::isotropic(8, 8, 0).is_err());
        assert!(TaskFamily::isotropic(8, 0, 0).is_err());
        assert!(TaskFamily::angle_richness(8, 3, 0.0, 5, 0).is_err());
        assert!(TaskFamily::angle_richness(8, 3, 120.0, 5, 0).is_err());
        assert!(TaskFamily::commuting_diagonal(vec![0.5, 1.2], 0).is_err());
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert!(TaskFamily::rank_one(vec![(1.0, &e1 * 2.0)], 0).is_err());
        assert!(TaskFamily::rank_one(vec![(0.6, e1)], 0).is_err());
        let a = TaskFamily::isotropic(4, 1, 0).unwrap();
        let b = TaskFamily::isotropic(5, 1, 0).unwrap();
        assert!(TaskFamily::mixture(0.5, a, b).is_err());
    }

    #[test]
    fn finite_support_rejects_mismatched_dimensions() {
        let t2 = Task::from_visible(SubspaceBasis::coordinate(2, &[0]));
        let t3 = Task::from_visible(SubspaceBasis::coordinate(3, &[0]));
        assert!(TaskFamily::finite_support(2, vec![(0.5, t2), (0.5, t3)], 0).is_err());
    }

    #[test]
    fn alpha_one_spike_always_hidden() {
        let f = TaskFamily::shared_null_spike(12, 4, 1.0, 5000).unwrap();
        let spike = f.default_w_star().clone();
        let mut rng = substream(7000, 0);
        for _ in 0..50 {
            let t = f.sample_task(&mut rng);
            let overlap = (t.visible.columns().transpose() * &spike).norm();
            assert!(overlap <= 1e-10, "visible overlap with spike: {overlap}");
        }
    }

    #[test]
    fn alpha_fraction_matches_binomial_oracle() {
        let alpha = 0.3;
        let n = 10_000;
        let f = TaskFamily::shared_null_spike(12, 4, alpha, 5002).unwrap();
        let spike = f.default_w_star().clone();
        let mut rng = substream(7002, 0);
        let mut hidden = 0usize;
        for _ in 0..n {
            let t = f.sample_task(&mut rng);
            if (t.visible.columns().transpose() * &spike).norm() <= 1e-10 {
                hidden += 1;
            }
        }
        let frac = hidden as f64 / n as f64;
        let se = (alpha * (1.0 - alpha) / n as f64).sqrt();
        assert!((frac - alpha).abs() <= 3.0 * se, "fraction {frac}, alpha {alpha}");
    }

    #[test]
    fn commuting_degenerate_probabilities() {
        let f = TaskFamily::commuting_diagonal(vec![1.0, 0.0], 0).unwrap();
        let mut rng = substream(1, 0);
        let t = f.sample_task(&mut rng);
        // Coordinate 0 always retained (null), coordinate 1 always visible.
        assert_eq!(t.rank(), 1);
        assert_eq!(t.visible.columns()[(1, 0)], 1.0);
    }

    #[test]
    fn angle_richness_top_angle_matches_theta() {
        let f = TaskFamily::angle_richness(12, 4, 30.0, 9, 5000).unwrap();
        let spike_basis = SubspaceBasis::new(DMatrix::from_column_slice(
            12,
            1,
            f.default_w_star().as_slice(),
        ))
        .unwrap();
        let mut rng = substream(7000, 0);
        for _ in 0..20 {
            let t = f.sample_task(&mut rng);
            let null = orthonormal_complement(&t.visible);
            let vals = crate::subspace::principal_cos2(&spike_basis, &null).unwrap();
            let expect = 30.0_f64.to_radians().cos().powi(2);
            assert_relative_eq!(vals[0], expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn fixed_rank_null_dimension() {
        let cases = [
            TaskFamily::isotropic(10, 3, 1).unwrap(),
            TaskFamily::shared_null_spike(10, 3, 0.5, 1).unwrap(),
            TaskFamily::angle_richness(10, 3, 45.0, 8, 1).unwrap(),
        ];
        let mut rng = substream(2, 0);
        for f in &cases {
            for _ in 0..5 {
                let t = f.sample_task(&mut rng);
                assert_eq!(t.rank(), 3);
                assert_eq!(t.ambient_dim() - t.rank(), 7);
            }
        }
    }

    #[test]
    fn enumerate_commuting_product_bernoulli() {
        let f = TaskFamily::commuting_diagonal(vec![0.5, 0.5], 0).unwrap();
        let atoms = f.enumerate_atoms().unwrap();
        assert_eq!(atoms.len(), 4);
        for (w, _) in &atoms {
            assert_relative_eq!(*w, 0.25);
        }
        let total: f64 = atoms.iter().map(|(w, _)| w).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn enumerate_rejects_continuous_families() {
        let f = TaskFamily::shared_null_spike(8, 2, 0.3, 0).unwrap();
        match f.enumerate_atoms() {
            Err(Error::NotEnumerable(_)) => {}
            other => panic!("expected not-enumerable, got {other:?}"),
        }
        let big = TaskFamily::commuting_diagonal(vec![0.5; 21], 0).unwrap();
        match big.enumerate_atoms() {
            Err(Error::Size(_)) => {}
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn finite_support_enumeration_is_identity() {
        let t1 = Task::from_visible(SubspaceBasis::coordinate(2, &[0]));
        let t2 = Task::from_visible(SubspaceBasis::coordinate(2, &[1]));
        let f = TaskFamily::finite_support(2, vec![(0.5, t1), (0.5, t2)], 0).unwrap();
        let atoms = f.enumerate_atoms().unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].1.visible.columns()[(0, 0)], 1.0);
    }

    #[test]
    fn isotropic_invisibility_moment_matches_closed_form() {
        // E‖P_t u‖₂⁴ = (d−r)(d−r+2)/(d(d+2)) for the isotropic fixed-rank
        // model; d=8, r=2 gives 0.6. Monte Carlo is the independent oracle.
        let (d, r, n) = (8, 2, 20_000);
        let f = TaskFamily::isotropic(d, r, 31).unwrap();
        let u = f.default_w_star().clone();
        let mut rng = substream(32, 0);
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let t = f.sample_task(&mut rng);
                let pu = crate::subspace::project_off(&t.visible, &u).unwrap();
                pu.norm_squared().powi(2)
            })
            .collect();
        let nf = n as f64;
        let mean = vals.iter().sum::<f64>() / nf;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
        let se = (var / nf).sqrt();
        let expect = ((d - r) * (d - r + 2)) as f64 / (d * (d + 2)) as f64;
        assert_relative_eq!(expect, 0.6, epsilon = 1e-15);
        assert!((mean - expect).abs() <= 3.0 * se, "mean {mean}, expect {expect}, se {se}");
    }

    #[test]
    fn expected_c_fro_exact_for_unit_rank_families() {
        let f = TaskFamily::shared_null_spike(192, 48, 0.4, 5001).unwrap();
        let e = f.expected_c_fro(0, 0);
        assert!(e.stderr.is_none());
        assert_relative_eq!(e.value, 1.0 / 48.0_f64.sqrt(), epsilon = 1e-15);
    }
}
