//! Binary classification of compact states by the sign of a single-qubit
//! `Z` expectation.
//!
//! The cost is `sum_i (l_i - <Z>_i)^2` with labels `l = +1` (bars) and
//! `-1` (stripes). Two ansatz families are supported: a layered circuit over
//! the whole register, and a block-diagonal circuit that applies separate
//! blocks to the two branches of the index (ancilla) qubit. Block-diagonal
//! parameters are stored as one vector, block 0 first.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{parameter_shift_gradient, BlockDiagonalAnsatz, LayeredAnsatz, ParamVector};
use crate::bas::Label;
use crate::error::{Error, Result};
use crate::simcore::{kernels, z_expectation_raw, StateVector};
use crate::swaptest::ShotBudget;

/// Branch weights below this cannot be reweighted.
pub const MIN_BRANCH_WEIGHT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState {
    pub state: StateVector,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ClassifierAnsatz {
    Generic(LayeredAnsatz),
    BlockDiagonal(BlockDiagonalAnsatz),
}

impl ClassifierAnsatz {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Generic(a) => a.n_qubits(),
            Self::BlockDiagonal(b) => b.n_qubits(),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Self::Generic(a) => a.n_params(),
            Self::BlockDiagonal(b) => b.block(0).n_params() + b.block(1).n_params(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Generic(a) => a.validate(),
            Self::BlockDiagonal(b) => {
                b.block(0).validate()?;
                b.block(1).validate()?;
                BlockDiagonalAnsatz::new(b.index_qubit(), b.block(0).clone(), b.block(1).clone())
                    .map(|_| ())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub ansatz: ClassifierAnsatz,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub readout_qubit: usize,
    /// Seed for the uniform `[-pi, pi]` initial angles.
    pub seed: u64,
    /// Block-diagonal mode only: train on gradients with the index
    /// register reweighted to equal branch masses.
    #[serde(default)]
    pub reweight: bool,
}

impl ClassifierConfig {
    /// Layered ansatz over all `n_qubits`, read out on qubit 1 (the first
    /// qubit after the index qubit of a compact state).
    pub fn generic(n_qubits: usize, depth: usize) -> Result<Self> {
        Ok(Self {
            ansatz: ClassifierAnsatz::Generic(LayeredAnsatz::new(n_qubits, depth)?),
            learning_rate: 0.05,
            max_iters: 100,
            readout_qubit: 1.min(n_qubits - 1),
            seed: 0,
            reweight: false,
        })
    }

    /// Block-diagonal ansatz with the index on qubit 0, read out on the
    /// last qubit.
    pub fn block_diagonal(n_qubits: usize, depth: usize) -> Result<Self> {
        Ok(Self {
            ansatz: ClassifierAnsatz::BlockDiagonal(BlockDiagonalAnsatz::layered(n_qubits, 0, depth)?),
            learning_rate: 0.05,
            max_iters: 100,
            readout_qubit: n_qubits - 1,
            seed: 0,
            reweight: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.ansatz.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        let n = self.ansatz.n_qubits();
        if self.readout_qubit >= n {
            return Err(Error::QubitOutOfRange {
                qubit: self.readout_qubit,
                n_qubits: n,
            });
        }
        if let ClassifierAnsatz::BlockDiagonal(b) = &self.ansatz {
            if b.index_qubit() == self.readout_qubit {
                return Err(Error::Config("readout qubit cannot be the index qubit".into()));
            }
        } else if self.reweight {
            return Err(Error::Config("reweighting needs the block-diagonal ansatz".into()));
        }
        Ok(())
    }

    fn check(&self, params: &ParamVector, state: &StateVector) -> Result<()> {
        if params.len() != self.ansatz.n_params() {
            return Err(Error::Parameter(format!(
                "classifier takes {} angles, got {}",
                self.ansatz.n_params(),
                params.len()
            )));
        }
        if state.n_qubits() != self.ansatz.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.ansatz.n_qubits(),
                found: state.n_qubits(),
            });
        }
        Ok(())
    }
}

/// `<Z>` on the readout qubit after the classifier circuit.
pub fn z_expectation(state: &StateVector, params: &ParamVector, config: &ClassifierConfig) -> Result<f64> {
    config.check(params, state)?;
    let (amps, params, readout) = (state.amplitudes(), params.as_slice(), config.readout_qubit);
    Ok(match &config.ansatz {
        ClassifierAnsatz::Generic(a) => {
            let mut out = amps.to_vec();
            a.forward_raw(params, &mut out);
            z_expectation_raw(&out, a.n_qubits(), readout)
        }
        ClassifierAnsatz::BlockDiagonal(b) => {
            let q = b.block_qubit(readout).expect("readout differs from index");
            let (p0, p1) = params.split_at(b.block(0).n_params());
            let mut branches = b.split(amps);
            b.block(0).forward_raw(p0, &mut branches[0]);
            b.block(1).forward_raw(p1, &mut branches[1]);
            let m = b.n_qubits() - 1;
            z_expectation_raw(&branches[0], m, q) + z_expectation_raw(&branches[1], m, q)
        }
    })
}

/// Forward pass plus `sum_k dcost/dz * dz/dtheta_k`, where `dcost_dz` maps
/// the expectation to the outer derivative. Works on unnormalized input.
fn z_and_gradient(
    amps: &[Complex64],
    params: &[f64],
    config: &ClassifierConfig,
    dcost_dz: impl Fn(f64) -> f64,
) -> (f64, Vec<f64>) {
    let readout = config.readout_qubit;
    match &config.ansatz {
        ClassifierAnsatz::Generic(a) => {
            let n = a.n_qubits();
            let mut z = 0.0;
            let (_, grad) = a.vjp_raw(params, amps, |out| {
                z = z_expectation_raw(out, n, readout);
                z_cotangent(out, n, readout, 2.0 * dcost_dz(z))
            });
            (z, grad)
        }
        ClassifierAnsatz::BlockDiagonal(b) => {
            let q = b.block_qubit(readout).expect("readout differs from index");
            let split = b.block(0).n_params();
            let (p0, p1) = params.split_at(split);
            let branches = b.split(amps);
            let mut outs = branches.clone();
            b.block(0).forward_raw(p0, &mut outs[0]);
            b.block(1).forward_raw(p1, &mut outs[1]);
            let m = b.n_qubits() - 1;
            let z = z_expectation_raw(&outs[0], m, q) + z_expectation_raw(&outs[1], m, q);
            let scale = 2.0 * dcost_dz(z);
            let mut grad = Vec::with_capacity(params.len());
            for (k, p) in [p0, p1].into_iter().enumerate() {
                let (_, g) = b.block(k).vjp_raw(p, &branches[k], |out| z_cotangent(out, m, q, scale));
                grad.extend(g);
            }
            (z, grad)
        }
    }
}

fn z_cotangent(out: &[Complex64], n: usize, qubit: usize, scale: f64) -> Vec<Complex64> {
    let mask = kernels::bit(n, qubit);
    out.iter()
        .enumerate()
        .map(|(i, &a)| if i & mask == 0 { a * scale } else { -a * scale })
        .collect()
}

fn check_data(data: &[LabeledState]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Config("labeled dataset is empty".into()));
    }
    Ok(())
}

/// `sum_i (l_i - <Z>_i)^2`.
pub fn classification_cost(
    params: &ParamVector,
    data: &[LabeledState],
    config: &ClassifierConfig,
) -> Result<f64> {
    check_data(data)?;
    let terms: Vec<f64> = data
        .par_iter()
        .map(|s| Ok((s.label.value() - z_expectation(&s.state, params, config)?).powi(2)))
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// Cost and its exact gradient.
pub fn classification_cost_gradient(
    params: &ParamVector,
    data: &[LabeledState],
    config: &ClassifierConfig,
) -> Result<(f64, Vec<f64>)> {
    check_data(data)?;
    for s in data {
        config.check(params, &s.state)?;
    }
    let per_sample: Vec<(f64, Vec<f64>)> = data
        .par_iter()
        .map(|s| {
            let l = s.label.value();
            let (z, g) = z_and_gradient(s.state.amplitudes(), params.as_slice(), config, |z| {
                -2.0 * (l - z)
            });
            ((l - z).powi(2), g)
        })
        .collect();
    Ok(sum_terms(per_sample, params.len()))
}

fn sum_terms(terms: Vec<(f64, Vec<f64>)>, len: usize) -> (f64, Vec<f64>) {
    terms
        .into_iter()
        .fold((0.0, vec![0.0; len]), |(c, mut g), (ci, gi)| {
            g.iter_mut().zip(&gi).for_each(|(a, b)| *a += b);
            (c + ci, g)
        })
}

/// Gradient of the cost with each `d<Z>_i/dtheta` taken from the two-term
/// shift rule and combined through `dcost/d<Z>_i = -2 (l_i - <Z>_i)`.
pub fn classification_shift_gradient(
    params: &ParamVector,
    data: &[LabeledState],
    config: &ClassifierConfig,
) -> Result<Vec<f64>> {
    check_data(data)?;
    let mut total = vec![0.0; params.len()];
    for s in data {
        let l = s.label.value();
        let z = z_expectation(&s.state, params, config)?;
        let dz = parameter_shift_gradient(params, 1, |p| z_expectation(&s.state, &p[0], config))?;
        total.iter_mut().zip(&dz).for_each(|(t, d)| *t += -2.0 * (l - z) * d);
    }
    Ok(total)
}

pub fn predict(state: &StateVector, params: &ParamVector, config: &ClassifierConfig) -> Result<Label> {
    Ok(Label::from_expectation(z_expectation(state, params, config)?))
}

/// Squared norms of the index-qubit `|0>` and `|1>` branches.
pub fn branch_weights(state: &StateVector, index_qubit: usize) -> Result<(f64, f64)> {
    let one = state.expectation_z(index_qubit)?;
    Ok(((1.0 + one) / 2.0, (1.0 - one) / 2.0))
}

/// Shot estimate of [`branch_weights`] from measuring the index qubit.
pub fn estimate_branch_weights(state: &StateVector, index_qubit: usize, budget: ShotBudget) -> Result<(f64, f64)> {
    let budget = ShotBudget::new(budget.shots, budget.seed)?;
    let (p0, _) = branch_weights(state, index_qubit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let zeros = (0..budget.shots).filter(|_| rng.gen::<f64>() < p0).count();
    let w0 = zeros as f64 / budget.shots as f64;
    Ok((w0, 1.0 - w0))
}

/// Per-sample cost gradient after reweighting the index register.
///
/// Branch `b` is scaled by `1 / sqrt(2 w_b)` and the state renormalized, so
/// with exact weights both branches carry mass `1/2` and the gradient equals
/// `-(l - (e0 + e1)/2) [grad e0; grad e1]`, with `e_b` the readout
/// expectation of the normalized branch `b` under block `b`. The result
/// depends on neither the branch amplitudes nor their relative phase.
pub fn reweighted_gradient(
    sample: &LabeledState,
    params: &ParamVector,
    config: &ClassifierConfig,
    weights: (f64, f64),
) -> Result<Vec<f64>> {
    let ClassifierAnsatz::BlockDiagonal(b) = &config.ansatz else {
        return Err(Error::Config("reweighting needs the block-diagonal ansatz".into()));
    };
    config.check(params, &sample.state)?;
    for w in [weights.0, weights.1] {
        if !(w >= MIN_BRANCH_WEIGHT) {
            return Err(Error::DegenerateBranch(w));
        }
    }
    let mut branches = b.split(sample.state.amplitudes());
    for (branch, w) in branches.iter_mut().zip([weights.0, weights.1]) {
        let s = 1.0 / (2.0 * w).sqrt();
        branch.iter_mut().for_each(|a| *a *= s);
    }
    let merged = b.merge(&branches);
    let norm = kernels::norm_sqr(&merged).sqrt();
    let amps: Vec<Complex64> = merged.iter().map(|a| a / norm).collect();
    let l = sample.label.value();
    Ok(z_and_gradient(&amps, params.as_slice(), config, |z| -2.0 * (l - z)).1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRecord {
    pub iteration: usize,
    pub cost: f64,
    pub grad_l1: f64,
    pub cum_delta_theta_l1: f64,
}

/// Gradient descent on the mean per-sample cost; the trace records the
/// summed cost.
pub fn train_classifier(
    train: &[LabeledState],
    config: &ClassifierConfig,
) -> Result<(ParamVector, Vec<ClassifierRecord>)> {
    config.validate()?;
    check_data(train)?;
    let mut params = ParamVector::random(config.ansatz.n_params(), config.seed);
    let mut records: Vec<ClassifierRecord> = Vec::with_capacity(config.max_iters);
    let mut travelled = 0.0;
    let n = train.len() as f64;
    for iteration in 0..config.max_iters {
        let (cost, mut grad) = classification_cost_gradient(&params, train, config)?;
        if config.reweight {
            grad = reweighted_sum(&params, train, config)?;
        }
        if !cost.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            let mut costs: Vec<f64> = records.iter().map(|r| r.cost).collect();
            costs.push(cost);
            return Err(Error::Divergence {
                stage: "classifier",
                iteration,
                costs,
            });
        }
        let grad_l1 = grad.iter().map(|g| g.abs()).sum::<f64>() / n;
        records.push(ClassifierRecord {
            iteration,
            cost,
            grad_l1,
            cum_delta_theta_l1: travelled,
        });
        for (p, g) in params.as_mut_slice().iter_mut().zip(&grad) {
            *p -= config.learning_rate * g / n;
        }
        travelled += config.learning_rate * grad_l1;
    }
    Ok((params, records))
}

fn reweighted_sum(params: &ParamVector, data: &[LabeledState], config: &ClassifierConfig) -> Result<Vec<f64>> {
    let ClassifierAnsatz::BlockDiagonal(b) = &config.ansatz else {
        return Err(Error::Config("reweighting needs the block-diagonal ansatz".into()));
    };
    let grads: Vec<Vec<f64>> = data
        .par_iter()
        .map(|s| reweighted_gradient(s, params, config, branch_weights(&s.state, b.index_qubit())?))
        .collect::<Result<_>>()?;
    Ok(sum_terms(grads.into_iter().map(|g| (0.0, g)).collect(), params.len()).1)
}

/// First iteration whose cost lies within `fraction` of the total drop
/// above the final cost.
pub fn saturation_iteration(costs: &[f64], fraction: f64) -> Option<usize> {
    let (first, last) = (*costs.first()?, *costs.last()?);
    let band = fraction * (first - last).max(0.0);
    costs.iter().position(|&c| c - last <= band)
}

/// Confusion counts indexed `[true label][predicted label]`, bars first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub bars_as_bars: usize,
    pub bars_as_stripes: usize,
    pub stripes_as_bars: usize,
    pub stripes_as_stripes: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.bars_as_bars + self.bars_as_stripes + self.stripes_as_bars + self.stripes_as_stripes
    }

    pub fn correct(&self) -> usize {
        self.bars_as_bars + self.stripes_as_stripes
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `None` when the class is absent from the evaluated set.
    pub bars_accuracy: Option<f64>,
    pub stripes_accuracy: Option<f64>,
    pub confusion: Confusion,
    pub cost: f64,
    pub trace: Vec<ClassifierRecord>,
}

pub fn evaluate(
    params: &ParamVector,
    data: &[LabeledState],
    config: &ClassifierConfig,
    trace: &[ClassifierRecord],
) -> Result<EvalReport> {
    check_data(data)?;
    let mut confusion = Confusion::default();
    let mut cost = 0.0;
    for s in data {
        let z = z_expectation(&s.state, params, config)?;
        cost += (s.label.value() - z).powi(2);
        match (s.label, Label::from_expectation(z)) {
            (Label::Bars, Label::Bars) => confusion.bars_as_bars += 1,
            (Label::Bars, Label::Stripes) => confusion.bars_as_stripes += 1,
            (Label::Stripes, Label::Bars) => confusion.stripes_as_bars += 1,
            (Label::Stripes, Label::Stripes) => confusion.stripes_as_stripes += 1,
        }
    }
    let ratio = |hit: usize, miss: usize| {
        (hit + miss > 0).then(|| hit as f64 / (hit + miss) as f64)
    };
    Ok(EvalReport {
        accuracy: confusion.accuracy(),
        bars_accuracy: ratio(confusion.bars_as_bars, confusion.bars_as_stripes),
        stripes_accuracy: ratio(confusion.stripes_as_stripes, confusion.stripes_as_bars),
        confusion,
        cost,
        trace: trace.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::finite_difference_gradient;
    use nalgebra::DMatrix;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn labeled(state: StateVector, label: Label) -> LabeledState {
        LabeledState { state, label }
    }

    fn random_data(n_qubits: usize, count: usize, seed: u64) -> Vec<LabeledState> {
        let mut r = rng(seed);
        (0..count)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Bars } else { Label::Stripes };
                labeled(StateVector::random(n_qubits, &mut r), label)
            })
            .collect()
    }

    fn identity_config(n: usize) -> (ClassifierConfig, ParamVector) {
        let mut c = ClassifierConfig::generic(n, 1).unwrap();
        c.readout_qubit = 0;
        (c, ParamVector::zeros(n))
    }

    #[test]
    fn identity_readout() {
        let (c, p) = identity_config(1);
        assert_eq!(z_expectation(&StateVector::basis(1, 0), &p, &c).unwrap(), 1.0);
        assert_eq!(z_expectation(&StateVector::basis(1, 1), &p, &c).unwrap(), -1.0);
        let mut c3 = ClassifierConfig::generic(3, 0).unwrap();
        c3.readout_qubit = 0;
        let rest = StateVector::random(2, &mut rng(0));
        let psi = StateVector::basis(1, 1).tensor(&rest);
        assert!((z_expectation(&psi, &ParamVector::zeros(0), &c3).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_dense_operator() {
        let c = ClassifierConfig::generic(3, 2).unwrap();
        let p = ParamVector::random(6, 1);
        let psi = StateVector::random(3, &mut rng(2));
        let out = match &c.ansatz {
            ClassifierAnsatz::Generic(a) => a.apply(&p, &psi).unwrap(),
            _ => unreachable!(),
        };
        let z = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_fn(8, |i, _| {
            if i & 0b010 == 0 { 1.0 } else { -1.0 }
        }));
        let v = nalgebra::DVector::from_iterator(8, out.amplitudes().iter().copied());
        let dense = (v.adjoint() * z.map(|x| Complex64::new(x, 0.0)) * &v)[(0, 0)].re;
        assert!((z_expectation(&psi, &p, &c).unwrap() - dense).abs() < 1e-10);
    }

    #[test]
    fn cost_trivial_values() {
        let (c, p) = identity_config(1);
        let perfect = vec![
            labeled(StateVector::basis(1, 0), Label::Bars),
            labeled(StateVector::basis(1, 1), Label::Stripes),
        ];
        assert_eq!(classification_cost(&p, &perfect, &c).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(&[h, h]).unwrap();
        let flat = vec![labeled(plus.clone(), Label::Bars), labeled(plus, Label::Stripes)];
        assert!((classification_cost(&p, &flat, &c).unwrap() - 2.0).abs() < 1e-12);
        assert!(classification_cost(&p, &[], &c).is_err());
    }

    #[test]
    fn prediction_sign_and_tie() {
        assert_eq!(Label::from_expectation(0.8), Label::Bars);
        assert_eq!(Label::from_expectation(-0.3), Label::Stripes);
        assert_eq!(Label::from_expectation(0.0), Label::Bars);
        let (c, p) = identity_config(1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(&[h, h]).unwrap();
        assert_eq!(predict(&plus, &p, &c).unwrap(), Label::Bars);
    }

    #[test]
    fn gradients_agree_generic_and_block() {
        let data = random_data(4, 6, 3);
        for c in [
            ClassifierConfig::generic(4, 3).unwrap(),
            ClassifierConfig::block_diagonal(4, 3).unwrap(),
        ] {
            let p = ParamVector::random(c.ansatz.n_params(), 4);
            let (_, exact) = classification_cost_gradient(&p, &data, &c).unwrap();
            let shift = classification_shift_gradient(&p, &data, &c).unwrap();
            let fd = finite_difference_gradient(&p, 1e-5, |q| classification_cost(q, &data, &c)).unwrap();
            for k in 0..exact.len() {
                assert!((exact[k] - shift[k]).abs() < 1e-10);
                assert!((exact[k] - fd[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn block_cost_is_phase_invariant() {
        let c = ClassifierConfig::block_diagonal(4, 2).unwrap();
        let p = ParamVector::random(c.ansatz.n_params(), 5);
        let data = random_data(4, 5, 6);
        let base = classification_cost(&p, &data, &c).unwrap();
        for gamma in [0.3, 1.7, -2.9] {
            let f = Complex64::from_polar(1.0, gamma);
            let shifted: Vec<LabeledState> = data
                .iter()
                .map(|s| {
                    let mut amps = s.state.amplitudes().to_vec();
                    amps[8..].iter_mut().for_each(|a| *a *= f);
                    labeled(StateVector::from_amplitudes(amps).unwrap(), s.label)
                })
                .collect();
            assert!((classification_cost(&p, &shifted, &c).unwrap() - base).abs() <= 1e-12);
        }
    }

    fn branch_state(phi: &StateVector, eta: &StateVector, c: f64, alpha: f64) -> StateVector {
        let w = Complex64::from_polar(c, alpha);
        let mut amps: Vec<Complex64> = phi.amplitudes().iter().map(|a| a * w).collect();
        amps.extend_from_slice(eta.amplitudes());
        StateVector::normalized(amps).unwrap()
    }

    #[test]
    fn reweighted_gradient_is_amplitude_free() {
        let c = ClassifierConfig::block_diagonal(4, 2).unwrap();
        let p = ParamVector::random(c.ansatz.n_params(), 7);
        let mut r = rng(8);
        let (phi, eta) = (StateVector::random(3, &mut r), StateVector::random(3, &mut r));
        let grad = |cc: f64, alpha: f64| {
            let s = labeled(branch_state(&phi, &eta, cc, alpha), Label::Stripes);
            let w = branch_weights(&s.state, 0).unwrap();
            reweighted_gradient(&s, &p, &c, w).unwrap()
        };
        let g0 = grad(1.0, 0.0);
        for (cc, alpha) in [(0.2, 1.1), (3.5, -0.4), (1.0, 2.0)] {
            let g = grad(cc, alpha);
            assert!(g0.iter().zip(&g).all(|(a, b)| (a - b).abs() <= 1e-10));
        }
    }

    #[test]
    fn reweighted_gradient_matches_branch_costs() {
        let c = ClassifierConfig::block_diagonal(4, 2).unwrap();
        let p = ParamVector::random(c.ansatz.n_params(), 9);
        let mut r = rng(10);
        let (phi, eta) = (StateVector::random(3, &mut r), StateVector::random(3, &mut r));
        let s = labeled(branch_state(&phi, &eta, 0.4, 0.7), Label::Bars);
        let g = reweighted_gradient(&s, &p, &c, branch_weights(&s.state, 0).unwrap()).unwrap();

        let ClassifierAnsatz::BlockDiagonal(b) = &c.ansatz else { unreachable!() };
        let half = b.block(0).n_params();
        let branch_z = |k: usize, q: &ParamVector| {
            let input = if k == 0 { &phi } else { &eta };
            b.block(k).apply(q, input).unwrap().expectation_z(2).unwrap()
        };
        let p0 = ParamVector::new(p.as_slice()[..half].to_vec()).unwrap();
        let p1 = ParamVector::new(p.as_slice()[half..].to_vec()).unwrap();
        let (e0, e1) = (branch_z(0, &p0), branch_z(1, &p1));
        let outer = -(1.0 - 0.5 * (e0 + e1));
        let mut expected = parameter_shift_gradient(&p0, 1, |q| Ok(branch_z(0, &q[0]))).unwrap();
        expected.extend(parameter_shift_gradient(&p1, 1, |q| Ok(branch_z(1, &q[0]))).unwrap());
        for (a, e) in g.iter().zip(&expected) {
            assert!((a - outer * e).abs() < 1e-10);
        }

        let balanced = labeled(branch_state(&phi, &eta, 1.0, 0.0), Label::Bars);
        let plain = classification_cost_gradient(&p, &[balanced.clone()], &c).unwrap().1;
        let rw = reweighted_gradient(&balanced, &p, &c, (0.5, 0.5)).unwrap();
        assert!(plain.iter().zip(&rw).all(|(a, b)| (a - b).abs() < 1e-10));

        assert!(matches!(
            reweighted_gradient(&balanced, &p, &c, (1.0, 0.0)),
            Err(Error::DegenerateBranch(_))
        ));
    }

    #[test]
    fn separable_toy_set() {
        let mut r = rng(11);
        let data: Vec<LabeledState> = (0..20)
            .map(|i| {
                let rest = StateVector::random(2, &mut r);
                let (bit, label) = if i % 2 == 0 { (0, Label::Bars) } else { (1, Label::Stripes) };
                labeled(StateVector::basis(1, 0).tensor(&StateVector::basis(1, bit)).tensor(&rest), label)
            })
            .collect();
        let mut c = ClassifierConfig::generic(4, 1).unwrap();
        c.max_iters = 50;
        c.learning_rate = 0.5;
        let (p, trace) = train_classifier(&data, &c).unwrap();
        let report = evaluate(&p, &data, &c, &trace).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.confusion.total(), 20);
        assert_eq!(report.accuracy, report.confusion.accuracy());

        let (_, again) = train_classifier(&data, &c).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn saturation_definition() {
        assert_eq!(saturation_iteration(&[10.0, 5.0, 2.0, 1.1, 1.0], 0.05), Some(3));
        assert_eq!(saturation_iteration(&[10.0, 1.2, 1.0, 1.0], 0.05), Some(1));
        assert_eq!(saturation_iteration(&[], 0.05), None);
    }

    #[test]
    fn config_errors() {
        let mut c = ClassifierConfig::generic(3, 1).unwrap();
        c.readout_qubit = 3;
        assert!(c.validate().is_err());
        let mut c = ClassifierConfig::block_diagonal(3, 1).unwrap();
        c.readout_qubit = 0;
        assert!(c.validate().is_err());
        let mut c = ClassifierConfig::generic(3, 1).unwrap();
        c.reweight = true;
        assert!(c.validate().is_err());
    }
}
