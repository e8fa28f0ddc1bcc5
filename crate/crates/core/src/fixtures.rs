//! Built-in finite-support fixtures shared by the verification suite and
//! the acceptance tests.

use crate::family::TaskFamily;
use crate::stream::substream;
use crate::subspace::{sample_orthonormal_basis, SubspaceBasis};
use crate::task::Task;
use nalgebra::DMatrix;

/// Two non-commuting atoms in d = 2, weight ½ each: null spaces span{e₁}
/// and span{(e₁+e₂)/√2}.
pub fn two_atom_fixture() -> TaskFamily {
    let s = 1.0 / 2.0_f64.sqrt();
    let t1 = Task::from_visible(SubspaceBasis::coordinate(2, &[1]));
    let visible2 = SubspaceBasis::new(DMatrix::from_vec(2, 1, vec![s, -s])).unwrap();
    let t2 = Task::from_visible(visible2);
    TaskFamily::finite_support(2, vec![(0.5, t1), (0.5, t2)], 200).unwrap()
}

/// Three non-commuting rank-deficient atoms in d = 6 (visible rank 2),
/// weights 0.5/0.3/0.2, with a unit default target.
pub fn three_atom_fixture() -> TaskFamily {
    let weights = [0.5, 0.3, 0.2];
    let atoms = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut rng = substream(424_242, i as u64);
            let visible = sample_orthonormal_basis(6, 2, &[], &mut rng).unwrap();
            (w, Task::from_visible(visible))
        })
        .collect();
    TaskFamily::finite_support(6, atoms, 600).unwrap()
}

/// Small commuting-diagonal law with mixed retention probabilities.
pub fn commuting_fixture() -> TaskFamily {
    TaskFamily::commuting_diagonal(vec![0.5, 0.25, 0.9], 300).unwrap()
}

/// Rank-one law over {e₁, (e₁+e₂)/√2} in d = 2, weight ½ each.
pub fn rank_one_fixture() -> TaskFamily {
    let s = 1.0 / 2.0_f64.sqrt();
    let e1 = nalgebra::DVector::from_vec(vec![1.0, 0.0]);
    let diag = nalgebra::DVector::from_vec(vec![s, s]);
    TaskFamily::rank_one(vec![(0.5, e1), (0.5, diag)], 400).unwrap()
}

/// Mixture (q = 0.3) of a commuting-diagonal law and a rotated two-atom
/// law in d = 3.
pub fn mixture_fixture() -> TaskFamily {
    let a = TaskFamily::commuting_diagonal(vec![0.5, 0.25, 0.75], 500).unwrap();
    let mut rng = substream(505_050, 0);
    let v1 = sample_orthonormal_basis(3, 1, &[], &mut rng).unwrap();
    let v2 = sample_orthonormal_basis(3, 2, &[], &mut rng).unwrap();
    let b = TaskFamily::finite_support(
        3,
        vec![(0.4, Task::from_visible(v1)), (0.6, Task::from_visible(v2))],
        501,
    )
    .unwrap();
    TaskFamily::mixture(0.3, a, b).unwrap()
}

/// Every enumerable fixture with a short name, for sweep-style checks.
pub fn enumerable_fixtures() -> Vec<(&'static str, TaskFamily)> {
    vec![
        ("two-atom", two_atom_fixture()),
        ("three-atom", three_atom_fixture()),
        ("commuting", commuting_fixture()),
        ("rank-one", rank_one_fixture()),
        ("mixture", mixture_fixture()),
    ]
}
