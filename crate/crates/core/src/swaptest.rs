//! Shot-based overlap and purity estimation with the destructive swap test.
//!
//! Two copies sit side by side: copy one on qubits `0..n`, copy two on
//! `n..2n`. For each compared pair `(i, n + i)` the circuit applies
//! `CNOT(i -> n + i)` followed by `H(i)`, then measures everything. A shot
//! scores `prod_i (-1)^(x_i * y_i)` over the compared pairs, whose mean is
//! `Tr(rho sigma)`: the pure-state fidelity `|<a|b>|^2` when all pairs are
//! compared, and `Tr(rho_keep^2)` when two copies of one state are compared
//! only on the kept register.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{kernels, QubitPartition, StateVector, Subsystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotBudget {
    pub shots: usize,
    pub seed: u64,
}

impl ShotBudget {
    pub fn new(shots: usize, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Config("shot budget must be at least 1".into()));
        }
        Ok(Self { shots, seed })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapTestResult {
    /// Mean shot score clamped to `[0, 1]`.
    pub estimate: f64,
    /// Unclamped mean shot score, in `[-1, 1]`.
    pub raw_mean: f64,
    pub shots_used: usize,
    /// Sample standard deviation of the shot scores over `sqrt(shots)`.
    pub standard_error: f64,
}

/// Running totals of swap-test usage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotTally {
    pub estimates: usize,
    pub shots: usize,
}

impl ShotTally {
    pub fn record(&mut self, result: &SwapTestResult) {
        self.estimates += 1;
        self.shots += result.shots_used;
    }
}

/// Estimates `|<a|b>|^2`.
pub fn destructive_swap_test(
    a: &StateVector,
    b: &StateVector,
    budget: ShotBudget,
) -> Result<SwapTestResult> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: a.n_qubits(),
            found: b.n_qubits(),
        });
    }
    let pairs: Vec<usize> = (0..a.n_qubits()).collect();
    run(&a.tensor(b), a.n_qubits(), &pairs, budget)
}

/// Estimates `Tr(rho_keep^2)` from two copies of `state`.
pub fn estimate_purity(
    state: &StateVector,
    partition: &QubitPartition,
    keep: Subsystem,
    budget: ShotBudget,
) -> Result<SwapTestResult> {
    partition.check_state(state)?;
    run(
        &state.tensor(state),
        state.n_qubits(),
        partition.qubits(keep),
        budget,
    )
}

/// Exact expectation of the shot score; used to validate the estimator.
pub fn exact_score(a: &StateVector, b: &StateVector, compared: &[usize]) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: a.n_qubits(),
            found: b.n_qubits(),
        });
    }
    let n = a.n_qubits();
    let joint = prepare(&a.tensor(b), n, compared);
    Ok(joint
        .probabilities()
        .iter()
        .enumerate()
        .map(|(x, p)| p * score(x, n, compared))
        .sum())
}

fn prepare(joint: &StateVector, n: usize, compared: &[usize]) -> StateVector {
    let mut s = joint.clone();
    let total = 2 * n;
    for &q in compared {
        kernels::cnot(s.amplitudes_mut(), total, q, n + q);
        kernels::hadamard(s.amplitudes_mut(), total, q);
    }
    s
}

fn score(outcome: usize, n: usize, compared: &[usize]) -> f64 {
    let total = 2 * n;
    let odd = compared
        .iter()
        .filter(|&&q| {
            outcome & kernels::bit(total, q) != 0 && outcome & kernels::bit(total, n + q) != 0
        })
        .count();
    if odd % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn run(joint: &StateVector, n: usize, compared: &[usize], budget: ShotBudget) -> Result<SwapTestResult> {
    let budget = ShotBudget::new(budget.shots, budget.seed)?;
    let probs = prepare(joint, n, compared).probabilities();
    let cdf: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let total = *cdf.last().expect("nonempty state");
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..budget.shots {
        let r = rng.gen::<f64>() * total;
        let outcome = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
        let v = score(outcome, n, compared);
        sum += v;
        sum_sq += v * v;
    }
    let shots = budget.shots as f64;
    let mean = sum / shots;
    let var = if budget.shots > 1 {
        ((sum_sq - shots * mean * mean) / (shots - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SwapTestResult {
        estimate: mean.clamp(0.0, 1.0),
        raw_mean: mean,
        shots_used: budget.shots,
        standard_error: (var / shots).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{fidelity_pure, partial_trace, purity};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn exact_score_is_overlap_and_purity() {
        let mut r = rng(1);
        let a = StateVector::random(3, &mut r);
        let b = StateVector::random(3, &mut r);
        let exact = exact_score(&a, &b, &[0, 1, 2]).unwrap();
        assert!((exact - fidelity_pure(&a, &b).unwrap()).abs() < 1e-12);

        let psi = StateVector::random(4, &mut r);
        let p = QubitPartition::halves(4).unwrap();
        let exact = exact_score(&psi, &psi, p.subsystem_a()).unwrap();
        let rho = partial_trace(&psi, &p, Subsystem::A).unwrap();
        assert!((exact - purity(&rho)).abs() < 1e-12);
    }

    #[test]
    fn identical_states() {
        let psi = StateVector::random(3, &mut rng(2));
        let res = destructive_swap_test(&psi, &psi, ShotBudget::new(10_000, 4).unwrap()).unwrap();
        assert!((res.estimate - 1.0).abs() <= 3.0 * res.standard_error + 1e-12);
        assert_eq!(res.shots_used, 10_000);
    }

    #[test]
    fn orthogonal_states() {
        let a = StateVector::basis(2, 1);
        let b = StateVector::basis(2, 2);
        let res = destructive_swap_test(&a, &b, ShotBudget::new(10_000, 5).unwrap()).unwrap();
        assert!(res.raw_mean.abs() <= 3.0 * res.standard_error);
    }

    #[test]
    fn random_pair_within_three_sigma() {
        let mut r = rng(6);
        let a = StateVector::random(3, &mut r);
        let b = StateVector::random(3, &mut r);
        let res = destructive_swap_test(&a, &b, ShotBudget::new(10_000, 7).unwrap()).unwrap();
        let exact = fidelity_pure(&a, &b).unwrap();
        assert!((res.raw_mean - exact).abs() <= 3.0 * res.standard_error);
    }

    #[test]
    fn purity_of_product_and_bell() {
        let mut r = rng(8);
        let prod = StateVector::random(1, &mut r).tensor(&StateVector::random(1, &mut r));
        let p = QubitPartition::halves(2).unwrap();
        let b = ShotBudget::new(4000, 9).unwrap();
        let res = estimate_purity(&prod, &p, Subsystem::A, b).unwrap();
        assert!((res.estimate - 1.0).abs() <= 3.0 * res.standard_error + 1e-12);
        let bell = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let res = estimate_purity(&bell, &p, Subsystem::A, b).unwrap();
        assert!((res.raw_mean - 0.5).abs() <= 3.0 * res.standard_error);
    }

    #[test]
    fn tally_counts_shots() {
        let psi = StateVector::zero(1);
        let mut tally = ShotTally::default();
        for seed in 0..4 {
            let res = destructive_swap_test(&psi, &psi, ShotBudget::new(1000, seed).unwrap()).unwrap();
            tally.record(&res);
        }
        assert_eq!(tally, ShotTally { estimates: 4, shots: 4000 });
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ShotBudget::new(0, 1).is_err());
        assert!(destructive_swap_test(
            &StateVector::zero(1),
            &StateVector::zero(2),
            ShotBudget { shots: 10, seed: 0 }
        )
        .is_err());
    }
}
