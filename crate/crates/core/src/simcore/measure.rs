use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{kernels, StateVector};
use crate::error::{Error, Result};

/// Outcomes below this probability cannot be post-selected.
pub const MIN_POSTSELECT_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureMode {
    /// Draw the outcome from the Born distribution with a seeded generator.
    Sampled(u64),
    /// Force the given outcome, failing if it is (numerically) impossible.
    Postselect(usize),
}

/// Result of measuring a set of qubits in the computational basis.
///
/// The measured qubits are removed from `post_state`; the remaining qubits
/// keep their relative order.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub basis_index: usize,
    pub probability: f64,
    pub post_state: StateVector,
}

pub fn measure_subsystem(
    state: &StateVector,
    qubits: &[usize],
    mode: MeasureMode,
) -> Result<MeasurementOutcome> {
    match mode {
        MeasureMode::Sampled(seed) => {
            sample_subsystem(state, qubits, &mut ChaCha8Rng::seed_from_u64(seed))
        }
        MeasureMode::Postselect(outcome) => {
            let probs = outcome_probabilities(state, qubits)?;
            if outcome >= probs.len() {
                return Err(Error::ImpossibleOutcome {
                    outcome,
                    probability: 0.0,
                });
            }
            collapse(state, qubits, outcome, probs[outcome])
        }
    }
}

/// Sampled measurement drawing from a caller-supplied generator.
pub fn sample_subsystem<R: Rng + ?Sized>(
    state: &StateVector,
    qubits: &[usize],
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let probs = outcome_probabilities(state, qubits)?;
    let r: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut outcome = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc && p > 0.0 {
            outcome = k;
            break;
        }
    }
    collapse(state, qubits, outcome, probs[outcome])
}

/// Marginal distribution over the measured register.
pub(crate) fn outcome_probabilities(state: &StateVector, qubits: &[usize]) -> Result<Vec<f64>> {
    let n = state.n_qubits();
    let mut seen = vec![false; n];
    for &q in qubits {
        if q >= n {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits: n });
        }
        if std::mem::replace(&mut seen[q], true) {
            return Err(Error::InvalidGate(format!("qubit {q} measured twice")));
        }
    }
    let mut probs = vec![0.0; 1 << qubits.len()];
    for (x, a) in state.amplitudes().iter().enumerate() {
        probs[kernels::gather_bits(x, n, qubits)] += a.norm_sqr();
    }
    Ok(probs)
}

fn collapse(
    state: &StateVector,
    qubits: &[usize],
    outcome: usize,
    probability: f64,
) -> Result<MeasurementOutcome> {
    if probability <= MIN_POSTSELECT_PROBABILITY {
        return Err(Error::ImpossibleOutcome {
            outcome,
            probability,
        });
    }
    let n = state.n_qubits();
    let rest: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    let fixed = kernels::scatter_bits(outcome, n, qubits);
    let scale = 1.0 / probability.sqrt();
    let amps: Vec<Complex64> = (0..1usize << rest.len())
        .map(|r| state.amplitudes()[fixed | kernels::scatter_bits(r, n, &rest)] * scale)
        .collect();
    Ok(MeasurementOutcome {
        basis_index: outcome,
        probability,
        post_state: StateVector::from_raw_unchecked(rest.len(), amps),
    })
}
