//! Dense statevector engine.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index,
//! so `|q0 q1 ... q(n-1)>` has index `q0 * 2^(n-1) + ... + q(n-1)`. A
//! [`QubitPartition`] built with [`QubitPartition::split_at`] places
//! subsystem A on the low-indexed (leading) qubits. Every module in the
//! crate follows this convention.

mod density;
pub(crate) mod kernels;
mod measure;

pub use density::{partial_trace, purity, von_neumann_entropy, DensityMatrix};
pub use measure::{measure_subsystem, sample_subsystem, MeasureMode, MeasurementOutcome};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the l2-norm for states that claim to be normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// A normalized pure state over `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros state `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index>`.
    ///
    /// Panics if `index >= 2^n_qubits`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Wraps amplitudes that are already normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let norm = kernels::norm_sqr(&amps).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes and wraps arbitrary nonzero amplitudes.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let norm = kernels::norm_sqr(&amps).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotNormalized(norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n_qubits, amps })
    }

    /// Real nonnegative or signed amplitudes, normalized.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::normalized(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// A random state with independent Gaussian real and imaginary parts,
    /// which is Haar distributed after normalization.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let amps = (0..1usize << n_qubits)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        Self::normalized(amps).expect("gaussian amplitudes are nonzero almost surely")
    }

    pub(crate) fn from_raw_unchecked(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        kernels::norm_sqr(&self.amps).sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Self::from_raw_unchecked(self.n_qubits + other.n_qubits, amps)
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(mut self, phase: f64) -> Self {
        let f = Complex64::from_polar(1.0, phase);
        self.amps.iter_mut().for_each(|a| *a *= f);
        self
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies `Ry(angle) = exp(-i angle Y / 2)` to `qubit`.
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        kernels::ry(&mut self.amps, self.n_qubits, qubit, angle);
        Ok(())
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        kernels::hadamard(&mut self.amps, self.n_qubits, qubit);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidGate(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        kernels::cnot(&mut self.amps, self.n_qubits, control, target);
        Ok(())
    }

    /// Fredkin gate: exchanges `target_a` and `target_b` when `control` is set.
    pub fn apply_cswap(&mut self, control: usize, target_a: usize, target_b: usize) -> Result<()> {
        for q in [control, target_a, target_b] {
            self.check_qubit(q)?;
        }
        if control == target_a || control == target_b || target_a == target_b {
            return Err(Error::InvalidGate(format!(
                "CSWAP needs three distinct qubits, got ({control}, {target_a}, {target_b})"
            )));
        }
        kernels::cswap(&mut self.amps, self.n_qubits, control, target_a, target_b);
        Ok(())
    }

    pub fn apply_controlled_ry(&mut self, control: usize, target: usize, angle: f64) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidGate(format!(
                "controlled Ry control and target are both qubit {control}"
            )));
        }
        kernels::controlled_ry(&mut self.amps, self.n_qubits, control, target, angle);
        Ok(())
    }

    /// `<Z>` on a single qubit.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        Ok(z_expectation_raw(&self.amps, self.n_qubits, qubit))
    }
}

pub(crate) fn z_expectation_raw(amps: &[Complex64], n_qubits: usize, qubit: usize) -> f64 {
    let mask = kernels::bit(n_qubits, qubit);
    amps.iter()
        .enumerate()
        .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(kernels::dot(&a.amps, &b.amps))
}

/// `|<a|b>|^2`.
pub fn fidelity_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(inner_product(a, b)?.norm_sqr().min(1.0))
}

/// Which side of a [`QubitPartition`] to act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    pub fn other(self) -> Self {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }
}

/// A bipartition of the qubits `0..n_qubits` into two ordered lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitPartition {
    subsystem_a: Vec<usize>,
    subsystem_b: Vec<usize>,
}

impl QubitPartition {
    pub fn new(subsystem_a: Vec<usize>, subsystem_b: Vec<usize>) -> Result<Self> {
        let n = subsystem_a.len() + subsystem_b.len();
        let mut seen = vec![false; n];
        for &q in subsystem_a.iter().chain(&subsystem_b) {
            if q >= n {
                return Err(Error::InvalidPartition(format!(
                    "qubit {q} outside 0..{n}"
                )));
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::InvalidPartition(format!("qubit {q} listed twice")));
            }
        }
        if subsystem_a.is_empty() || subsystem_b.is_empty() {
            return Err(Error::InvalidPartition("empty subsystem".into()));
        }
        Ok(Self {
            subsystem_a,
            subsystem_b,
        })
    }

    /// A = `0..n_a`, B = `n_a..n_qubits`.
    pub fn split_at(n_qubits: usize, n_a: usize) -> Result<Self> {
        Self::new((0..n_a).collect(), (n_a..n_qubits).collect())
    }

    /// Equal halves; odd counts give B the extra qubit.
    pub fn halves(n_qubits: usize) -> Result<Self> {
        Self::split_at(n_qubits, n_qubits / 2)
    }

    pub fn n_qubits(&self) -> usize {
        self.subsystem_a.len() + self.subsystem_b.len()
    }

    pub fn qubits(&self, side: Subsystem) -> &[usize] {
        match side {
            Subsystem::A => &self.subsystem_a,
            Subsystem::B => &self.subsystem_b,
        }
    }

    pub fn subsystem_a(&self) -> &[usize] {
        &self.subsystem_a
    }

    pub fn subsystem_b(&self) -> &[usize] {
        &self.subsystem_b
    }

    pub(crate) fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                found: state.n_qubits(),
            });
        }
        Ok(())
    }

    /// Reshapes `state` into the coefficient matrix `M[a][b]` with
    /// `|psi> = sum M[a][b] |a>_A |b>_B`, stored row-major.
    pub(crate) fn coefficient_matrix(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_qubits();
        let dim_b = 1 << self.subsystem_b.len();
        let mut m = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (x, &amp) in amps.iter().enumerate() {
            let ia = kernels::gather_bits(x, n, &self.subsystem_a);
            let ib = kernels::gather_bits(x, n, &self.subsystem_b);
            m[ia * dim_b + ib] = amp;
        }
        m
    }

    /// Inverse of `coefficient_matrix`.
    pub(crate) fn from_coefficient_matrix(&self, m: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_qubits();
        let dim_b = 1 << self.subsystem_b.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); m.len()];
        for (k, &v) in m.iter().enumerate() {
            let (ia, ib) = (k / dim_b, k % dim_b);
            let x = kernels::scatter_bits(ia, n, &self.subsystem_a)
                | kernels::scatter_bits(ib, n, &self.subsystem_b);
            amps[x] = v;
        }
        amps
    }

    /// Places `phi` on subsystem A and `eta` on subsystem B.
    pub fn combine(&self, phi: &StateVector, eta: &StateVector) -> Result<StateVector> {
        for (side, s) in [(Subsystem::A, phi), (Subsystem::B, eta)] {
            if s.n_qubits() != self.qubits(side).len() {
                return Err(Error::DimensionMismatch {
                    expected: self.qubits(side).len(),
                    found: s.n_qubits(),
                });
            }
        }
        let m = phi.tensor(eta);
        Ok(StateVector::from_raw_unchecked(
            self.n_qubits(),
            self.from_coefficient_matrix(m.amplitudes()),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ry_identity_and_pi() {
        let mut s = StateVector::zero(1);
        s.apply_ry(0, 0.0).unwrap();
        assert_eq!(s, StateVector::zero(1));
        s.apply_ry(0, PI).unwrap();
        let f = fidelity_pure(&s, &StateVector::basis(1, 1)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ry_half_pi_matches_rotation_matrix() {
        let mut s = StateVector::zero(1);
        s.apply_ry(0, PI / 2.0).unwrap();
        assert!(close(s.amplitudes(), &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)], 1e-10));
    }

    #[test]
    fn ry_rejects_bad_qubit() {
        let mut s = StateVector::zero(2);
        assert!(matches!(
            s.apply_ry(2, 0.1),
            Err(Error::QubitOutOfRange { qubit: 2, n_qubits: 2 })
        ));
    }

    #[test]
    fn cnot_truth_table() {
        let mut s = StateVector::basis(2, 0b10);
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11));

        let mut s = StateVector::zero(2);
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::zero(2));

        let mut s = StateVector::from_real(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        s.apply_cnot(0, 1).unwrap();
        let bell = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(close(s.amplitudes(), bell.amplitudes(), 1e-15));

        assert!(matches!(s.apply_cnot(1, 1), Err(Error::InvalidGate(_))));
    }

    #[test]
    fn cswap_truth_table() {
        let mut s = StateVector::basis(3, 0b101);
        s.apply_cswap(0, 1, 2).unwrap();
        assert_eq!(s, StateVector::basis(3, 0b110));

        let mut s = StateVector::basis(3, 0b001);
        s.apply_cswap(0, 1, 2).unwrap();
        assert_eq!(s, StateVector::basis(3, 0b001));

        assert!(matches!(s.apply_cswap(0, 1, 1), Err(Error::InvalidGate(_))));
        assert!(matches!(s.apply_cswap(2, 1, 2), Err(Error::InvalidGate(_))));
    }

    #[test]
    fn cswap_register_superposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let phi = StateVector::random(2, &mut rng);
        let eta = StateVector::random(2, &mut rng);
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        let mut s = plus.tensor(&phi).tensor(&eta);
        for k in 0..2 {
            s.apply_cswap(0, 1 + k, 3 + k).unwrap();
        }
        let zero = StateVector::zero(1).tensor(&phi).tensor(&eta);
        let one = StateVector::basis(1, 1).tensor(&eta).tensor(&phi);
        let expected: Vec<_> = zero
            .amplitudes()
            .iter()
            .zip(one.amplitudes())
            .map(|(a, b)| (a + b) * FRAC_1_SQRT_2)
            .collect();
        assert!(close(s.amplitudes(), &expected, 1e-12));
    }

    #[test]
    fn gates_are_undone_by_adjoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let input = StateVector::random(4, &mut rng);
        let mut s = input.clone();
        s.apply_ry(1, 0.7).unwrap();
        s.apply_cnot(2, 0).unwrap();
        s.apply_cswap(3, 0, 1).unwrap();
        s.apply_hadamard(2).unwrap();
        s.apply_controlled_ry(0, 3, -1.3).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-10);
        s.apply_controlled_ry(0, 3, 1.3).unwrap();
        s.apply_hadamard(2).unwrap();
        s.apply_cswap(3, 0, 1).unwrap();
        s.apply_cnot(2, 0).unwrap();
        s.apply_ry(1, -0.7).unwrap();
        assert!(close(s.amplitudes(), input.amplitudes(), 1e-10));
    }

    #[test]
    fn inner_products() {
        let zero = StateVector::zero(1);
        let one = StateVector::basis(1, 1);
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(fidelity_pure(&zero, &zero).unwrap(), 1.0);
        assert_eq!(fidelity_pure(&zero, &one).unwrap(), 0.0);
        assert!((fidelity_pure(&plus, &zero).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            inner_product(&zero, &StateVector::zero(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        let i = Complex64::new(0.0, 1.0);
        let a = StateVector::normalized(vec![i, c(0.0)]).unwrap();
        assert!((inner_product(&a, &zero).unwrap() - (-i)).norm() < 1e-15);
    }

    #[test]
    fn partition_validation() {
        assert!(QubitPartition::new(vec![0, 1], vec![1, 2]).is_err());
        assert!(QubitPartition::new(vec![0, 3], vec![1]).is_err());
        assert!(QubitPartition::new(vec![], vec![0]).is_err());
        let p = QubitPartition::new(vec![2, 0], vec![1, 3]).unwrap();
        assert_eq!(p.n_qubits(), 4);
    }

    #[test]
    fn combine_places_factors_on_their_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = StateVector::random(1, &mut rng);
        let eta = StateVector::random(2, &mut rng);
        let p = QubitPartition::split_at(3, 1).unwrap();
        assert_eq!(p.combine(&phi, &eta).unwrap(), phi.tensor(&eta));

        // A on the middle qubit: index bits are (b0, a0, b1).
        let p = QubitPartition::new(vec![1], vec![0, 2]).unwrap();
        let s = p.combine(&phi, &eta).unwrap();
        for x in 0..8usize {
            let a = (x >> 1) & 1;
            let b = ((x >> 2) << 1) | (x & 1);
            let expect = phi.amplitudes()[a] * eta.amplitudes()[b];
            assert!((s.amplitudes()[x] - expect).norm() < 1e-15);
        }
    }
}
