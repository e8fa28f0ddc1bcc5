//! Brute-force expectation of the forgetting quantity by exhaustive
//! enumeration of task sequences.
//!
//! This path uses only the trajectory primitives (projection step and task
//! loss) and touches none of the operator or spectral machinery, so it
//! serves as an independent oracle for both.

use crate::dynamics::{exact_fit_step, task_loss};
use crate::task::Task;
use nalgebra::DVector;

/// E[(1/k)Σ_{t≤k} ℓ_t(w_k)] by summing over all |atoms|^k sequences.
pub fn enumerate_sequence_forgetting(
    atoms: &[(f64, Task)],
    w_star: &DVector<f64>,
    k: usize,
) -> f64 {
    assert!(k >= 1, "horizon must be at least 1");
    let a = atoms.len();
    let total = a.checked_pow(k as u32).expect("sequence count overflow");
    let mut acc = 0.0;
    let mut sequence = vec![0usize; k];
    for code in 0..total {
        let mut c = code;
        for slot in sequence.iter_mut() {
            *slot = c % a;
            c /= a;
        }
        let mut weight = 1.0;
        let mut e = -w_star;
        for &idx in &sequence {
            weight *= atoms[idx].0;
            e = exact_fit_step(&e, &atoms[idx].1).expect("fixture dimensions agree");
        }
        if weight == 0.0 {
            continue;
        }
        let loss_sum: f64 = sequence.iter().map(|&idx| task_loss(&atoms[idx].1, &e)).sum();
        acc += weight * loss_sum / k as f64;
    }
    acc
}
