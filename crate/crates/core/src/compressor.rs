//! Stage 2: product state to compact `(|0>|phi> + |1>|eta>)/sqrt(2)`.
//!
//! The compression circuit works on `2m + 1` qubits where `m` is the size of
//! the larger subsystem: the ancilla is qubit 0, register one (`phi`) holds
//! qubits `1..=m` and register two (`eta`) holds `m+1..=2m`. A smaller
//! subsystem is padded with trailing `|0>` qubits. The ancilla starts in
//! `(c e^{i alpha}|0> + |1>)/sqrt(1 + c^2)`, a register-wise CSWAP exchanges
//! the registers on the `|1>` branch, and register two is post-selected onto
//! the garbage outcome `g`. With `c e^{i alpha} = <g|phi>/<g|eta>` the two
//! branches come out with equal weight.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use crate::ansatz::{LayeredAnsatz, ParamVector};
use crate::encoder::state_purities;
use crate::error::{Error, Result};
use crate::simcore::{
    kernels, measure_subsystem, MeasureMode, QubitPartition, StateVector, Subsystem,
};

/// Overlaps at or below this magnitude count as zero when choosing `g`.
pub const OVERLAP_FLOOR: f64 = 1e-10;

/// Minimum mass of each ancilla branch accepted by [`decompress`].
pub const MIN_BRANCH_MASS: f64 = 1e-12;

const PAIR_ITERS: usize = 500;

/// Dominant Schmidt factors of a (near-)product state.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductCertificate {
    pub phi: StateVector,
    pub eta: StateVector,
    /// `2 - Tr(rho_A^2) - Tr(rho_B^2)` of the source state.
    pub residual: f64,
    /// Largest Schmidt coefficient; its square is the product fidelity.
    pub schmidt_coefficient: f64,
}

/// Returns the dominant Schmidt pair, failing if the purity residual
/// exceeds `tolerance`.
///
/// The global phase is fixed so that the largest-magnitude amplitude of
/// `phi` (first on ties) is real and positive.
pub fn split_subsystems(
    state: &StateVector,
    partition: &QubitPartition,
    tolerance: f64,
) -> Result<ProductCertificate> {
    partition.check_state(state)?;
    let (pa, pb) = state_purities(state, partition)?;
    let residual = 2.0 - pa - pb;
    if residual > tolerance {
        return Err(Error::NotProduct {
            residual,
            tolerance,
        });
    }
    let dim_b = 1 << partition.subsystem_b().len();
    let m = partition.coefficient_matrix(state.amplitudes());
    let (mut phi, mut eta, schmidt) = leading_pair(&m, dim_b);
    let lead = phi
        .iter()
        .enumerate()
        .fold(0, |best, (i, a)| if a.norm() > phi[best].norm() { i } else { best });
    let gauge = phi[lead].conj() / phi[lead].norm();
    phi.iter_mut().for_each(|a| *a *= gauge);
    eta.iter_mut().for_each(|a| *a /= gauge);
    Ok(ProductCertificate {
        phi: StateVector::normalized(phi)?,
        eta: StateVector::normalized(eta)?,
        residual,
        schmidt_coefficient: schmidt,
    })
}

/// Leading singular pair of the row-major `rows x dim_b` matrix `m` by
/// alternating rank-one updates, started from its heaviest column.
fn leading_pair(m: &[Complex64], dim_b: usize) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    let rows = m.len() / dim_b;
    let column = |j: usize| (0..rows).map(move |i| m[i * dim_b + j]);
    let start = (0..dim_b)
        .map(|j| column(j).map(|a| a.norm_sqr()).sum::<f64>())
        .enumerate()
        .fold((0, -1.0), |best, (j, w)| if w > best.1 { (j, w) } else { best })
        .0;
    let mut phi: Vec<Complex64> = column(start).collect();
    let mut eta = vec![Complex64::new(0.0, 0.0); dim_b];
    let mut sigma = 0.0;
    for _ in 0..PAIR_ITERS {
        normalize(&mut phi);
        for (j, e) in eta.iter_mut().enumerate() {
            *e = column(j).zip(&phi).map(|(a, p)| p.conj() * a).sum();
        }
        let next = normalize(&mut eta);
        for (i, p) in phi.iter_mut().enumerate() {
            *p = m[i * dim_b..(i + 1) * dim_b]
                .iter()
                .zip(&eta)
                .map(|(a, e)| a * e.conj())
                .sum();
        }
        let settled = (next - sigma).abs() <= 1e-15 * next.max(1.0);
        sigma = next;
        if settled {
            break;
        }
    }
    normalize(&mut phi);
    (phi, eta, sigma)
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    norm
}

/// Garbage outcome and ancilla ratio chosen for a pair of factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GarbageChoice {
    pub index: usize,
    /// `c = |<g|phi>| / |<g|eta>|`.
    pub ratio: f64,
    /// `alpha = arg(<g|phi> / <g|eta>)`.
    pub phase: f64,
    /// `(|<g|eta>|^2 + |<g|phi>|^2) / 2`.
    pub probability: f64,
}

/// Picks the basis index `g` maximizing `(|<g|eta>|^2 + |<g|phi>|^2)/2`
/// among indices where both overlaps exceed [`OVERLAP_FLOOR`].
pub fn select_garbage_basis(phi: &StateVector, eta: &StateVector) -> Result<GarbageChoice> {
    if phi.n_qubits() != eta.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: phi.n_qubits(),
            found: eta.n_qubits(),
        });
    }
    let mut best: Option<GarbageChoice> = None;
    for (g, (&p, &e)) in phi.amplitudes().iter().zip(eta.amplitudes()).enumerate() {
        if p.norm() <= OVERLAP_FLOOR || e.norm() <= OVERLAP_FLOOR {
            continue;
        }
        let probability = 0.5 * (p.norm_sqr() + e.norm_sqr());
        if best.map_or(true, |b| probability > b.probability) {
            let r = p / e;
            best = Some(GarbageChoice {
                index: g,
                ratio: r.norm(),
                phase: r.arg(),
                probability,
            });
        }
    }
    best.ok_or(Error::OrthogonalSupports)
}

/// Rotations applied to the `|1>` branch register before compression.
/// Empty when the supports already overlap.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Decorrelation {
    pub qubits: Vec<usize>,
    pub angle: f64,
}

impl Decorrelation {
    pub fn is_identity(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        for &q in &self.qubits {
            state.apply_ry(q, self.angle)?;
        }
        Ok(())
    }

    pub fn invert(&self, state: &mut StateVector) -> Result<()> {
        for &q in self.qubits.iter().rev() {
            state.apply_ry(q, -self.angle)?;
        }
        Ok(())
    }
}

/// Rotates `eta` with `Ry(pi/4)` on qubits `0, 1, ...` until its support
/// overlaps that of `phi`.
pub fn decorrelate(phi: &StateVector, eta: &StateVector) -> Result<(Decorrelation, StateVector)> {
    let mut record = Decorrelation {
        qubits: Vec::new(),
        angle: FRAC_PI_4,
    };
    let mut out = eta.clone();
    loop {
        match select_garbage_basis(phi, &out) {
            Ok(_) => return Ok((record, out)),
            Err(Error::OrthogonalSupports) if record.qubits.len() < eta.n_qubits() => {
                let q = record.qubits.len();
                out.apply_ry(q, FRAC_PI_4)?;
                record.qubits.push(q);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Output of [`compress`].
#[derive(Clone, Debug, PartialEq)]
pub struct CompactState {
    /// `max(n_a, n_b) + 1` qubits, ancilla first.
    pub state: StateVector,
    pub garbage: GarbageChoice,
    pub decorrelation: Decorrelation,
    pub n_a: usize,
    pub n_b: usize,
    /// Success probability of the rebalanced post-selection.
    pub postselect_probability: f64,
    /// Success probability the same circuit would have with a `|+>` ancilla.
    pub plus_probability: f64,
}

impl CompactState {
    pub fn n_qubits(&self) -> usize {
        self.state.n_qubits()
    }

    /// Squared norms of the ancilla `|0>` and `|1>` branches.
    pub fn branch_masses(&self) -> (f64, f64) {
        let (b0, b1) = self.state.amplitudes().split_at(self.state.dim() / 2);
        (kernels::norm_sqr(b0), kernels::norm_sqr(b1))
    }
}

fn pad(state: &StateVector, width: usize) -> StateVector {
    let extra = width - state.n_qubits();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << width];
    for (i, &a) in state.amplitudes().iter().enumerate() {
        amps[i << extra] = a;
    }
    StateVector::from_raw_unchecked(width, amps)
}

fn unpad(amps: &[Complex64], width: usize) -> Result<StateVector> {
    let extra = amps.len().trailing_zeros() as usize - width;
    StateVector::normalized((0..1 << width).map(|i| amps[i << extra]).collect())
}

/// Runs the CSWAP compression circuit on a certified product.
pub fn compress(cert: &ProductCertificate) -> Result<CompactState> {
    let (n_a, n_b) = (cert.phi.n_qubits(), cert.eta.n_qubits());
    let m = n_a.max(n_b);
    let phi = pad(&cert.phi, m);
    let (decorrelation, eta) = decorrelate(&phi, &pad(&cert.eta, m))?;
    let garbage = select_garbage_basis(&phi, &eta)?;

    let c = Complex64::from_polar(garbage.ratio, garbage.phase);
    let norm = (1.0 + garbage.ratio * garbage.ratio).sqrt();
    let rebalanced = StateVector::from_raw_unchecked(1, vec![c / norm, Complex64::new(1.0 / norm, 0.0)]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::from_raw_unchecked(1, vec![Complex64::new(h, 0.0); 2]);

    let run = |ancilla: &StateVector| -> Result<(StateVector, f64)> {
        let mut joint = ancilla.tensor(&phi).tensor(&eta);
        for q in 1..=m {
            joint.apply_cswap(0, q, q + m)?;
        }
        let register: Vec<usize> = (m + 1..=2 * m).collect();
        let out = measure_subsystem(&joint, &register, MeasureMode::Postselect(garbage.index))?;
        Ok((out.post_state, out.probability))
    };
    let (state, postselect_probability) = run(&rebalanced)?;
    let (_, plus_probability) = run(&plus)?;

    let lead = phi.amplitudes()[garbage.index];
    let state = state.with_global_phase(-lead.arg());
    Ok(CompactState {
        state,
        garbage,
        decorrelation,
        n_a,
        n_b,
        postselect_probability,
        plus_probability,
    })
}

/// The two normalized factors stored in a compact state, with padding and
/// decorrelation undone.
pub fn extract_factors(compact: &CompactState) -> Result<(StateVector, StateVector)> {
    let m = compact.n_a.max(compact.n_b);
    if compact.state.n_qubits() != m + 1 {
        return Err(Error::CorruptCompactState(format!(
            "{} qubits for subsystems of {} and {}",
            compact.state.n_qubits(),
            compact.n_a,
            compact.n_b
        )));
    }
    let (mass0, mass1) = compact.branch_masses();
    for mass in [mass0, mass1] {
        if mass < MIN_BRANCH_MASS {
            return Err(Error::CorruptCompactState(format!(
                "ancilla branch mass {mass:e}"
            )));
        }
    }
    let (b0, b1) = compact.state.amplitudes().split_at(1 << m);
    let phi = StateVector::normalized(b0.to_vec())?;
    let mut eta = StateVector::normalized(b1.to_vec())?;
    compact.decorrelation.invert(&mut eta)?;
    Ok((
        unpad(phi.amplitudes(), compact.n_a)?,
        unpad(eta.amplitudes(), compact.n_b)?,
    ))
}

/// Rebuilds `|psi> = U(theta)^dagger (|phi> ⊗ |eta>)`.
pub fn decompress(
    compact: &CompactState,
    ansatz: &LayeredAnsatz,
    params: &ParamVector,
    partition: &QubitPartition,
) -> Result<StateVector> {
    if partition.qubits(Subsystem::A).len() != compact.n_a
        || partition.qubits(Subsystem::B).len() != compact.n_b
    {
        return Err(Error::DimensionMismatch {
            expected: compact.n_a + compact.n_b,
            found: partition.n_qubits(),
        });
    }
    let (phi, eta) = extract_factors(compact)?;
    ansatz.apply_adjoint(params, &partition.combine(&phi, &eta)?)
}
