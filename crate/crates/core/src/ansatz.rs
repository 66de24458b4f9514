//! Layered Ry / CNOT-ladder circuits and their gradients.
//!
//! One layer is a column of `Ry` rotations (one independent angle per qubit)
//! followed by the ladder `CNOT(0,1), CNOT(1,2), ..., CNOT(n-2,n-1)`. There
//! is no trailing rotation column, so a depth-`D` circuit on `n` qubits has
//! exactly `n * D` parameters, indexed `layer * n + qubit`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{kernels, StateVector};

/// Trainable rotation angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "angle {k} is not finite ({})",
                values[k]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Uniform in `[-pi, pi]`, reproducible from `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self((0..len).map(|_| rng.gen_range(-PI..=PI)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Ry { qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

/// The layered encoder circuit `U(theta)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredAnsatz {
    n_qubits: usize,
    depth: usize,
    /// CNOT pairs applied after each rotation column, in order.
    ladder: Vec<(usize, usize)>,
}

impl LayeredAnsatz {
    pub fn new(n_qubits: usize, depth: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Config("ansatz needs at least one qubit".into()));
        }
        Ok(Self {
            n_qubits,
            depth,
            ladder: (0..n_qubits.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn ladder(&self) -> &[(usize, usize)] {
        &self.ladder
    }

    pub fn n_params(&self) -> usize {
        self.n_qubits * self.depth
    }

    /// Checks that a deserialized descriptor has the canonical ladder.
    pub fn validate(&self) -> Result<()> {
        let canonical = Self::new(self.n_qubits, self.depth)?;
        if canonical.ladder != self.ladder {
            return Err(Error::Format(format!(
                "ladder {:?} is not the ascending nearest-neighbour ladder",
                self.ladder
            )));
        }
        Ok(())
    }

    fn ops(&self) -> impl DoubleEndedIterator<Item = Op> + '_ {
        (0..self.depth).flat_map(move |layer| {
            (0..self.n_qubits)
                .map(move |q| Op::Ry {
                    qubit: q,
                    param: layer * self.n_qubits + q,
                })
                .chain(self.ladder.iter().map(|&(c, t)| Op::Cnot {
                    control: c,
                    target: t,
                }))
        })
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Parameter(format!(
                "ansatz takes {} angles, got {}",
                self.n_params(),
                params.len()
            )));
        }
        Ok(())
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: state.n_qubits(),
            });
        }
        Ok(())
    }

    /// `U(theta) |psi>`.
    pub fn apply(&self, params: &ParamVector, state: &StateVector) -> Result<StateVector> {
        self.check_params(params.as_slice())?;
        self.check_state(state)?;
        let mut out = state.clone();
        self.forward_raw(params.as_slice(), out.amplitudes_mut());
        Ok(out)
    }

    /// `U(theta)^dagger |psi>`.
    pub fn apply_adjoint(&self, params: &ParamVector, state: &StateVector) -> Result<StateVector> {
        self.check_params(params.as_slice())?;
        self.check_state(state)?;
        let mut out = state.clone();
        self.backward_raw(params.as_slice(), out.amplitudes_mut());
        Ok(out)
    }

    pub(crate) fn forward_raw(&self, params: &[f64], amps: &mut [Complex64]) {
        for op in self.ops() {
            self.apply_op(op, params, amps, false);
        }
    }

    pub(crate) fn backward_raw(&self, params: &[f64], amps: &mut [Complex64]) {
        for op in self.ops().rev() {
            self.apply_op(op, params, amps, true);
        }
    }

    fn apply_op(&self, op: Op, params: &[f64], amps: &mut [Complex64], inverse: bool) {
        match op {
            Op::Ry { qubit, param } => {
                let angle = if inverse { -params[param] } else { params[param] };
                kernels::ry(amps, self.n_qubits, qubit, angle);
            }
            Op::Cnot { control, target } => kernels::cnot(amps, self.n_qubits, control, target),
        }
    }

    /// Reverse-mode derivative through the circuit.
    ///
    /// Runs `input` (any vector, normalized or not) forward to
    /// `out = U(theta) input`, asks `cotangent` for a vector `lambda` given
    /// `out`, and returns `out` together with `Re <lambda | d out / d theta_k>`
    /// for every parameter `k`.
    pub(crate) fn vjp_raw<F>(
        &self,
        params: &[f64],
        input: &[Complex64],
        cotangent: F,
    ) -> (Vec<Complex64>, Vec<f64>)
    where
        F: FnOnce(&[Complex64]) -> Vec<Complex64>,
    {
        let mut psi = input.to_vec();
        self.forward_raw(params, &mut psi);
        let out = psi.clone();
        let mut lambda = cotangent(&out);
        let mut grad = vec![0.0; params.len()];
        for op in self.ops().rev() {
            if let Op::Ry { qubit, param } = op {
                // d/dtheta Ry(theta) = (1/2) Ry(pi) Ry(theta); psi is the state
                // just after this gate.
                grad[param] += kernels::ry_derivative_overlap(&lambda, &psi, self.n_qubits, qubit);
            }
            self.apply_op(op, params, &mut psi, true);
            self.apply_op(op, params, &mut lambda, true);
        }
        (out, grad)
    }
}

/// Parameter-shift gradient of a cost built from `Ry` rotations.
///
/// `cost` receives one angle vector per circuit copy; every copy starts from
/// `params`. For each parameter `k` and each copy `c` the `k`-th angle of copy
/// `c` alone is shifted by `+-pi/2`, and the contributions
/// `[cost(+) - cost(-)] / 2` are summed over copies. With `copies = 1` this
/// is the ordinary two-term shift rule.
pub fn parameter_shift_gradient<F>(params: &ParamVector, copies: usize, cost: F) -> Result<Vec<f64>>
where
    F: Fn(&[ParamVector]) -> Result<f64>,
{
    let base = vec![params.clone(); copies];
    let eval = |c: usize, k: usize, shift: f64| -> Result<f64> {
        let mut shifted = base.clone();
        shifted[c].as_mut_slice()[k] += shift;
        let v = cost(&shifted)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "cost evaluated to {v} with angle {k} of copy {c} shifted by {shift}"
            )));
        }
        Ok(v)
    };
    (0..params.len())
        .map(|k| {
            (0..copies).try_fold(0.0, |acc, c| {
                Ok(acc + (eval(c, k, FRAC_PI_2)? - eval(c, k, -FRAC_PI_2)?) / 2.0)
            })
        })
        .collect()
}

/// Central finite differences with step `h`; test and diagnostic use only.
pub fn finite_difference_gradient<F>(params: &ParamVector, h: f64, cost: F) -> Result<Vec<f64>>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    (0..params.len())
        .map(|k| {
            let mut plus = params.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = params.clone();
            minus.as_mut_slice()[k] -= h;
            Ok((cost(&plus)? - cost(&minus)?) / (2.0 * h))
        })
        .collect()
}

/// `|0><0| ⊗ V0(params0) + |1><1| ⊗ V1(params1)` with the index on
/// `index_qubit` and both blocks acting on the remaining qubits in ascending
/// order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDiagonalAnsatz {
    index_qubit: usize,
    block0: LayeredAnsatz,
    block1: LayeredAnsatz,
}

impl BlockDiagonalAnsatz {
    pub fn new(index_qubit: usize, block0: LayeredAnsatz, block1: LayeredAnsatz) -> Result<Self> {
        if block0.n_qubits() != block1.n_qubits() {
            return Err(Error::Config(format!(
                "blocks act on {} and {} qubits",
                block0.n_qubits(),
                block1.n_qubits()
            )));
        }
        if index_qubit > block0.n_qubits() {
            return Err(Error::QubitOutOfRange {
                qubit: index_qubit,
                n_qubits: block0.n_qubits() + 1,
            });
        }
        Ok(Self {
            index_qubit,
            block0,
            block1,
        })
    }

    /// Both blocks are depth-`depth` layered circuits on `n_qubits - 1` qubits.
    pub fn layered(n_qubits: usize, index_qubit: usize, depth: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::Config("block-diagonal ansatz needs two qubits".into()));
        }
        let block = LayeredAnsatz::new(n_qubits - 1, depth)?;
        Self::new(index_qubit, block.clone(), block)
    }

    pub fn n_qubits(&self) -> usize {
        self.block0.n_qubits() + 1
    }

    pub fn index_qubit(&self) -> usize {
        self.index_qubit
    }

    pub fn block(&self, branch: usize) -> &LayeredAnsatz {
        if branch == 0 {
            &self.block0
        } else {
            &self.block1
        }
    }

    fn check(&self, params0: &ParamVector, params1: &ParamVector, state: &StateVector) -> Result<()> {
        self.block0.check_params(params0.as_slice())?;
        self.block1.check_params(params1.as_slice())?;
        if state.n_qubits() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                found: state.n_qubits(),
            });
        }
        Ok(())
    }

    /// Splits amplitudes by the index qubit into two unnormalized branch
    /// vectors over the remaining qubits.
    pub(crate) fn split(&self, amps: &[Complex64]) -> [Vec<Complex64>; 2] {
        let n = self.n_qubits();
        let mask = kernels::bit(n, self.index_qubit);
        let rest: Vec<usize> = (0..n).filter(|&q| q != self.index_qubit).collect();
        let half = amps.len() / 2;
        let mut branches = [
            vec![Complex64::new(0.0, 0.0); half],
            vec![Complex64::new(0.0, 0.0); half],
        ];
        for (x, &a) in amps.iter().enumerate() {
            let b = usize::from(x & mask != 0);
            branches[b][kernels::gather_bits(x, n, &rest)] = a;
        }
        branches
    }

    pub(crate) fn merge(&self, branches: &[Vec<Complex64>; 2]) -> Vec<Complex64> {
        let n = self.n_qubits();
        let mask = kernels::bit(n, self.index_qubit);
        let rest: Vec<usize> = (0..n).filter(|&q| q != self.index_qubit).collect();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (b, branch) in branches.iter().enumerate() {
            for (r, &a) in branch.iter().enumerate() {
                let x = kernels::scatter_bits(r, n, &rest) | if b == 1 { mask } else { 0 };
                amps[x] = a;
            }
        }
        amps
    }

    /// Maps a qubit of the full register to its position inside a block.
    pub(crate) fn block_qubit(&self, qubit: usize) -> Option<usize> {
        match qubit.cmp(&self.index_qubit) {
            std::cmp::Ordering::Less => Some(qubit),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(qubit - 1),
        }
    }

    pub fn apply(
        &self,
        params0: &ParamVector,
        params1: &ParamVector,
        state: &StateVector,
    ) -> Result<StateVector> {
        self.check(params0, params1, state)?;
        let mut branches = self.split(state.amplitudes());
        self.block0.forward_raw(params0.as_slice(), &mut branches[0]);
        self.block1.forward_raw(params1.as_slice(), &mut branches[1]);
        Ok(StateVector::from_raw_unchecked(
            self.n_qubits(),
            self.merge(&branches),
        ))
    }
}
