//! Stage 1: train a shared `U(theta)` that maps every input to a product
//! state across a bipartition, by maximizing the dataset-averaged purity
//! sum `C_AB = < Tr(rho_A^2) + Tr(rho_B^2) >`.
//!
//! `C_AB` lies in `(0, 2]` and equals 2 exactly when every output is a
//! product state. Training runs plain gradient ascent with a constant rate;
//! gradients are taken in reverse mode through the statevector, and the
//! two-copy parameter-shift construction is available as a cross-check.

use num_complex::Complex64;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{parameter_shift_gradient, LayeredAnsatz, ParamVector};
use crate::error::{Error, Result};
use crate::simcore::{partial_trace, von_neumann_entropy, QubitPartition, StateVector, Subsystem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Batch {
    Full,
    Minibatch { size: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage1Config {
    pub depth: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Training stops once `2 - C_AB` falls below this.
    pub convergence_tol: f64,
    pub batch: Batch,
    /// Seed for the uniform `[-pi, pi]` initial angles.
    pub seed: u64,
    /// Overrides the random initialization when set.
    #[serde(default)]
    pub initial_params: Option<ParamVector>,
    /// Size of subsystem A; `None` means equal halves.
    #[serde(default)]
    pub subsystem_a_qubits: Option<usize>,
    /// Independent initializations to try, seeded `seed, seed + 1, ...`.
    /// Each gets the full `max_iters` budget; the first to converge wins,
    /// otherwise the lowest final residual.
    #[serde(default = "one")]
    pub restarts: usize,
    /// An attempt that still has restarts behind it is abandoned when its
    /// residual improves by less than `stall_tol` over `stall_window`
    /// iterations.
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
    #[serde(default = "default_stall_tol")]
    pub stall_tol: f64,
}

fn one() -> usize {
    1
}

fn default_stall_window() -> usize {
    50
}

fn default_stall_tol() -> f64 {
    1e-4
}

impl Default for Stage1Config {
    fn default() -> Self {
        Self {
            depth: 3,
            learning_rate: 0.05,
            max_iters: 500,
            convergence_tol: 1e-3,
            batch: Batch::Full,
            seed: 0,
            initial_params: None,
            subsystem_a_qubits: None,
            restarts: 1,
            stall_window: default_stall_window(),
            stall_tol: default_stall_tol(),
        }
    }
}

impl Stage1Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.depth == 0 || self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::Config(
                "depth, max_iters and restarts must be positive".into(),
            ));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::Config("convergence tolerance must be nonnegative".into()));
        }
        if let Batch::Minibatch { size: 0, .. } = self.batch {
            return Err(Error::Config("minibatch size must be positive".into()));
        }
        Ok(())
    }

    pub fn partition(&self, n_qubits: usize) -> Result<QubitPartition> {
        match self.subsystem_a_qubits {
            Some(n_a) => QubitPartition::split_at(n_qubits, n_a),
            None if n_qubits % 2 == 0 => QubitPartition::halves(n_qubits),
            None => Err(Error::Config(format!(
                "{n_qubits} qubits cannot be split into equal halves; set the subsystem size"
            ))),
        }
    }
}

/// One optimizer iteration. `cum_delta_theta_l1` is the total l1 distance
/// travelled before this iteration's cost was measured; `step_l1` is the
/// size of the update taken after it (zero on the final record).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage1Record {
    pub iteration: usize,
    pub cost: f64,
    pub residual: f64,
    pub grad_l1: f64,
    pub step_l1: f64,
    pub cum_delta_theta_l1: f64,
}

impl Stage1Record {
    /// `(2 - C_AB) / 2`, the residual rescaled to `[0, 1)`.
    pub fn normalized_residual(&self) -> f64 {
        self.residual / 2.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Iterations of the selected attempt.
    pub records: Vec<Stage1Record>,
    pub converged: bool,
    /// Every initialization tried, in order; the last converged one or the
    /// best one is the selected attempt.
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub seed: u64,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub abandoned: bool,
}

impl TrainTrace {
    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }
}

/// `Tr(rho_A^2)` and `Tr(rho_B^2)` of a single (already transformed) state.
pub fn state_purities(state: &StateVector, partition: &QubitPartition) -> Result<(f64, f64)> {
    partition.check_state(state)?;
    let r = Reduced::new(state.amplitudes(), partition);
    Ok((r.purity_a(), r.purity_b()))
}

fn check_dataset(dataset: &[StateVector], ansatz: &LayeredAnsatz) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    if let Some(s) = dataset.iter().find(|s| s.n_qubits() != ansatz.n_qubits()) {
        return Err(Error::DimensionMismatch {
            expected: ansatz.n_qubits(),
            found: s.n_qubits(),
        });
    }
    Ok(())
}

/// `C_AB(theta)`: the mean of `Tr(rho_A^2) + Tr(rho_B^2)` over the dataset.
pub fn purity_cost(
    ansatz: &LayeredAnsatz,
    params: &ParamVector,
    dataset: &[StateVector],
    partition: &QubitPartition,
) -> Result<f64> {
    check_dataset(dataset, ansatz)?;
    ansatz.check_params(params.as_slice())?;
    let terms: Vec<f64> = dataset
        .par_iter()
        .map(|s| {
            let out = ansatz.apply(params, s)?;
            let (a, b) = state_purities(&out, partition)?;
            Ok(a + b)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum::<f64>() / dataset.len() as f64)
}

/// Smallest value `C_AB` can take on pure states: `2 / min(d_A, d_B)`.
pub fn purity_cost_floor(partition: &QubitPartition) -> f64 {
    let smaller = partition.subsystem_a().len().min(partition.subsystem_b().len());
    2.0 / (1usize << smaller) as f64
}

/// Mean von Neumann entropy of the `keep` subsystem after `U(theta)`.
/// Diagnostic only; training never differentiates it.
pub fn entropy_cost(
    ansatz: &LayeredAnsatz,
    params: &ParamVector,
    dataset: &[StateVector],
    partition: &QubitPartition,
    keep: Subsystem,
) -> Result<f64> {
    check_dataset(dataset, ansatz)?;
    let terms: Vec<f64> = dataset
        .par_iter()
        .map(|s| von_neumann_entropy(&partial_trace(&ansatz.apply(params, s)?, partition, keep)?))
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum::<f64>() / dataset.len() as f64)
}

/// `C_AB` and its exact gradient, averaged over `dataset`.
pub fn purity_cost_gradient(
    ansatz: &LayeredAnsatz,
    params: &ParamVector,
    dataset: &[StateVector],
    partition: &QubitPartition,
) -> Result<(f64, Vec<f64>)> {
    check_dataset(dataset, ansatz)?;
    ansatz.check_params(params.as_slice())?;
    if partition.n_qubits() != ansatz.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: ansatz.n_qubits(),
            found: partition.n_qubits(),
        });
    }
    let per_sample: Vec<(f64, Vec<f64>)> = dataset
        .par_iter()
        .map(|s| sample_cost_gradient(ansatz, params.as_slice(), s.amplitudes(), partition))
        .collect();
    // fixed-order reduction keeps runs bit-reproducible
    let n = dataset.len() as f64;
    let mut cost = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (c, g) in per_sample {
        cost += c;
        grad.iter_mut().zip(g).for_each(|(acc, x)| *acc += x);
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((cost / n, grad))
}

fn sample_cost_gradient(
    ansatz: &LayeredAnsatz,
    params: &[f64],
    input: &[Complex64],
    partition: &QubitPartition,
) -> (f64, Vec<f64>) {
    let mut cost = 0.0;
    let (_, grad) = ansatz.vjp_raw(params, input, |out| {
        let r = Reduced::new(out, partition);
        cost = r.purity_a() + r.purity_b();
        // d Tr(rho^2) = 4 Re <G | d psi> for each side
        let g: Vec<Complex64> = r
            .cotangent_a()
            .iter()
            .zip(r.cotangent_b())
            .map(|(a, b)| (a + b) * 4.0)
            .collect();
        partition.from_coefficient_matrix(&g)
    });
    (cost, grad)
}

/// Two-copy form of the cost: the mean of `Tr(rho_A rho_A') + Tr(rho_B rho_B')`
/// where the primed matrices come from the second angle vector. On the
/// diagonal it reduces to `C_AB`; each copy enters linearly, which is what
/// the shift rule needs.
pub fn purity_overlap_cost(
    ansatz: &LayeredAnsatz,
    first: &ParamVector,
    second: &ParamVector,
    dataset: &[StateVector],
    partition: &QubitPartition,
) -> Result<f64> {
    check_dataset(dataset, ansatz)?;
    let terms: Vec<f64> = dataset
        .par_iter()
        .map(|s| {
            let x = ansatz.apply(first, s)?;
            let y = ansatz.apply(second, s)?;
            let rx = Reduced::new(x.amplitudes(), partition);
            let ry = Reduced::new(y.amplitudes(), partition);
            Ok(trace_product(&rx.rho_a, &ry.rho_a) + trace_product(&rx.rho_b, &ry.rho_b))
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum::<f64>() / dataset.len() as f64)
}

/// Parameter-shift gradient of `C_AB`: every angle appears once in each of
/// the two copies, and both copies are shifted independently.
pub fn purity_shift_gradient(
    ansatz: &LayeredAnsatz,
    params: &ParamVector,
    dataset: &[StateVector],
    partition: &QubitPartition,
) -> Result<Vec<f64>> {
    parameter_shift_gradient(params, 2, |copies| {
        purity_overlap_cost(ansatz, &copies[0], &copies[1], dataset, partition)
    })
}

/// Cumulative l1 norm of a sequence of parameter updates, inclusive of the
/// current step.
pub fn cumulative_l1(steps: &[Vec<f64>]) -> Vec<f64> {
    steps
        .iter()
        .scan(0.0, |acc, step| {
            *acc += step.iter().map(|x| x.abs()).sum::<f64>();
            Some(*acc)
        })
        .collect()
}

/// Running total of the per-iteration update sizes recorded in `trace`.
pub fn delta_theta_l1(trace: &TrainTrace) -> Vec<f64> {
    trace
        .records
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r.step_l1;
            Some(*acc)
        })
        .collect()
}

/// Gradient ascent on `C_AB` with a constant learning rate, optionally
/// over several initializations.
pub fn train_stage1(
    dataset: &[StateVector],
    config: &Stage1Config,
) -> Result<(LayeredAnsatz, ParamVector, TrainTrace)> {
    config.validate()?;
    let n_qubits = dataset
        .first()
        .ok_or_else(|| Error::Config("dataset is empty".into()))?
        .n_qubits();
    let partition = config.partition(n_qubits)?;
    let ansatz = LayeredAnsatz::new(n_qubits, config.depth)?;
    check_dataset(dataset, &ansatz)?;
    if let Some(p) = &config.initial_params {
        ansatz.check_params(p.as_slice())?;
    }

    let mut attempts = Vec::with_capacity(config.restarts);
    let mut best: Option<(ParamVector, Vec<Stage1Record>)> = None;
    for k in 0..config.restarts {
        let seed = config.seed.wrapping_add(k as u64);
        let init = match (&config.initial_params, k) {
            (Some(p), 0) => p.clone(),
            _ => ParamVector::random(ansatz.n_params(), seed),
        };
        let may_abandon = k + 1 < config.restarts;
        let run = run_attempt(dataset, config, &ansatz, &partition, init, may_abandon)?;
        let final_residual = run.records.last().map_or(f64::INFINITY, |r| r.residual);
        attempts.push(Attempt {
            seed,
            iterations: run.records.len(),
            final_residual,
            converged: run.converged,
            abandoned: run.abandoned,
        });
        let better = best.as_ref().map_or(true, |(_, recs)| {
            final_residual < recs.last().map_or(f64::INFINITY, |r| r.residual)
        });
        if better {
            best = Some((run.params, run.records));
        }
        if run.converged {
            break;
        }
    }
    let (params, records) = best.expect("at least one attempt runs");
    let converged = attempts.iter().any(|a| a.converged);
    Ok((
        ansatz,
        params,
        TrainTrace {
            records,
            converged,
            attempts,
        },
    ))
}

struct AttemptRun {
    params: ParamVector,
    records: Vec<Stage1Record>,
    converged: bool,
    abandoned: bool,
}

fn run_attempt(
    dataset: &[StateVector],
    config: &Stage1Config,
    ansatz: &LayeredAnsatz,
    partition: &QubitPartition,
    mut params: ParamVector,
    may_abandon: bool,
) -> Result<AttemptRun> {
    let mut batch_rng = match config.batch {
        Batch::Minibatch { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Batch::Full => None,
    };
    let mut records: Vec<Stage1Record> = Vec::new();
    let mut travelled = 0.0;

    for iteration in 0..config.max_iters {
        let (cost, grad) = match (&config.batch, batch_rng.as_mut()) {
            (Batch::Minibatch { size, .. }, Some(rng)) if *size < dataset.len() => {
                let mut picked = index::sample(rng, dataset.len(), *size).into_vec();
                picked.sort_unstable();
                let batch: Vec<StateVector> = picked.iter().map(|&i| dataset[i].clone()).collect();
                let (_, grad) = purity_cost_gradient(ansatz, &params, &batch, partition)?;
                (purity_cost(ansatz, &params, dataset, partition)?, grad)
            }
            _ => purity_cost_gradient(ansatz, &params, dataset, partition)?,
        };
        if !cost.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            let mut costs: Vec<f64> = records.iter().map(|r| r.cost).collect();
            costs.push(cost);
            return Err(Error::Divergence {
                stage: "stage1",
                iteration,
                costs,
            });
        }
        let residual = 2.0 - cost;
        let grad_l1: f64 = grad.iter().map(|g| g.abs()).sum();
        let converged = residual < config.convergence_tol;
        let stalled = may_abandon
            && !converged
            && iteration >= config.stall_window
            && records[iteration - config.stall_window].residual - residual < config.stall_tol;
        let stop = converged || stalled;
        let step_l1 = if stop {
            0.0
        } else {
            config.learning_rate * grad_l1
        };
        records.push(Stage1Record {
            iteration,
            cost,
            residual,
            grad_l1,
            step_l1,
            cum_delta_theta_l1: travelled,
        });
        if stop {
            return Ok(AttemptRun {
                params,
                records,
                converged,
                abandoned: stalled,
            });
        }
        for (p, g) in params.as_mut_slice().iter_mut().zip(&grad) {
            *p += config.learning_rate * g;
        }
        travelled += step_l1;
    }
    Ok(AttemptRun {
        params,
        records,
        converged: false,
        abandoned: false,
    })
}

/// Reduced matrices of one pure state, with the vectors needed for the
/// purity gradient.
struct Reduced {
    dim_a: usize,
    dim_b: usize,
    /// coefficient matrix, `dim_a x dim_b` row-major
    m: Vec<Complex64>,
    rho_a: Vec<Complex64>,
    rho_b: Vec<Complex64>,
}

impl Reduced {
    fn new(amps: &[Complex64], partition: &QubitPartition) -> Self {
        let dim_a = 1usize << partition.subsystem_a().len();
        let dim_b = 1usize << partition.subsystem_b().len();
        let m = partition.coefficient_matrix(amps);
        let zero = Complex64::new(0.0, 0.0);
        let mut rho_a = vec![zero; dim_a * dim_a];
        for i in 0..dim_a {
            for j in 0..dim_a {
                rho_a[i * dim_a + j] = (0..dim_b)
                    .map(|t| m[i * dim_b + t] * m[j * dim_b + t].conj())
                    .sum();
            }
        }
        let mut rho_b = vec![zero; dim_b * dim_b];
        for i in 0..dim_b {
            for j in 0..dim_b {
                rho_b[i * dim_b + j] = (0..dim_a)
                    .map(|t| m[t * dim_b + i] * m[t * dim_b + j].conj())
                    .sum();
            }
        }
        Self {
            dim_a,
            dim_b,
            m,
            rho_a,
            rho_b,
        }
    }

    fn purity_a(&self) -> f64 {
        self.rho_a.iter().map(|z| z.norm_sqr()).sum()
    }

    fn purity_b(&self) -> f64 {
        self.rho_b.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `rho_A M`
    fn cotangent_a(&self) -> Vec<Complex64> {
        let (da, db) = (self.dim_a, self.dim_b);
        (0..da * db)
            .map(|k| {
                let (i, t) = (k / db, k % db);
                (0..da).map(|j| self.rho_a[i * da + j] * self.m[j * db + t]).sum()
            })
            .collect()
    }

    /// `M rho_B^T`
    fn cotangent_b(&self) -> Vec<Complex64> {
        let (da, db) = (self.dim_a, self.dim_b);
        (0..da * db)
            .map(|k| {
                let (t, i) = (k / db, k % db);
                (0..db).map(|j| self.m[t * db + j] * self.rho_b[i * db + j]).sum()
            })
            .collect()
    }
}

/// `Tr(X Y)` for square row-major matrices.
fn trace_product(x: &[Complex64], y: &[Complex64]) -> f64 {
    let d = (x.len() as f64).sqrt() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += x[i * d + j] * y[j * d + i];
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::finite_difference_gradient;
    use crate::simcore::purity;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_dataset(n_qubits: usize, count: usize, seed: u64) -> Vec<StateVector> {
        let mut r = rng(seed);
        (0..count).map(|_| StateVector::random(n_qubits, &mut r)).collect()
    }

    #[test]
    fn bell_input_with_identity_circuit() {
        let a = LayeredAnsatz::new(2, 1).unwrap();
        // Ry(0) then CNOT(0,1) maps |00>+|11> to |00>+|10>, a product; use
        // a depth-0 circuit for the identity instead.
        let id = LayeredAnsatz::new(2, 0).unwrap();
        let bell = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = QubitPartition::halves(2).unwrap();
        let c = purity_cost(&id, &ParamVector::zeros(0), &[bell.clone()], &p).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
        let c = purity_cost(&a, &ParamVector::zeros(2), &[bell], &p).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn product_outputs_reach_two() {
        let mut r = rng(4);
        let data: Vec<_> = (0..5)
            .map(|_| StateVector::random(2, &mut r).tensor(&StateVector::random(2, &mut r)))
            .collect();
        let id = LayeredAnsatz::new(4, 0).unwrap();
        let p = QubitPartition::halves(4).unwrap();
        let c = purity_cost(&id, &ParamVector::zeros(0), &data, &p).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
        let s = entropy_cost(&id, &ParamVector::zeros(0), &data, &p, Subsystem::B).unwrap();
        assert!(s.abs() < 1e-8);
    }

    #[test]
    fn entropy_of_maximally_mixed_qubit() {
        let id = LayeredAnsatz::new(2, 0).unwrap();
        let bell = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = QubitPartition::halves(2).unwrap();
        let s = entropy_cost(&id, &ParamVector::zeros(0), &[bell], &p, Subsystem::A).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn cost_matches_density_matrix_route() {
        let a = LayeredAnsatz::new(4, 2).unwrap();
        let params = ParamVector::random(a.n_params(), 3);
        let data = random_dataset(4, 6, 5);
        let p = QubitPartition::halves(4).unwrap();
        let fast = purity_cost(&a, &params, &data, &p).unwrap();
        let slow: f64 = data
            .iter()
            .map(|s| {
                let out = a.apply(&params, s).unwrap();
                purity(&partial_trace(&out, &p, Subsystem::A).unwrap())
                    + purity(&partial_trace(&out, &p, Subsystem::B).unwrap())
            })
            .sum::<f64>()
            / data.len() as f64;
        assert!((fast - slow).abs() < 1e-10);
        assert!(fast > 0.0 && fast <= 2.0 + 1e-12);
    }

    #[test]
    fn schmidt_symmetry_per_sample() {
        let p = QubitPartition::new(vec![0, 3], vec![1, 2, 4]).unwrap();
        for s in random_dataset(5, 10, 9) {
            let (a, b) = state_purities(&s, &p).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reverse_mode_matches_shift_and_finite_differences() {
        let a = LayeredAnsatz::new(4, 2).unwrap();
        let p = QubitPartition::halves(4).unwrap();
        let data = random_dataset(4, 3, 21);
        for seed in 0..3 {
            let params = ParamVector::random(a.n_params(), seed);
            let (_, adj) = purity_cost_gradient(&a, &params, &data, &p).unwrap();
            let shift = purity_shift_gradient(&a, &params, &data, &p).unwrap();
            let fd = finite_difference_gradient(&params, 1e-5, |x| {
                purity_cost(&a, x, &data, &p)
            })
            .unwrap();
            for k in 0..adj.len() {
                assert!((adj[k] - shift[k]).abs() < 1e-12, "k={k}");
                assert!((adj[k] - fd[k]).abs() < 1e-8, "k={k}");
            }
        }
    }

    #[test]
    fn overlap_cost_reduces_to_purity_cost() {
        let a = LayeredAnsatz::new(4, 1).unwrap();
        let p = QubitPartition::halves(4).unwrap();
        let data = random_dataset(4, 4, 2);
        let x = ParamVector::random(4, 8);
        let c = purity_cost(&a, &x, &data, &p).unwrap();
        let o = purity_overlap_cost(&a, &x, &x, &data, &p).unwrap();
        assert!((c - o).abs() < 1e-12);
    }

    #[test]
    fn l1_bookkeeping() {
        assert_eq!(cumulative_l1(&[vec![0.1, -0.2]]), vec![0.30000000000000004]);
        let flat = cumulative_l1(&[vec![0.0; 3], vec![0.0; 3]]);
        assert_eq!(flat, vec![0.0, 0.0]);
    }

    #[test]
    fn product_dataset_converges_immediately() {
        let plus = StateVector::from_real(&[1.0; 4]).unwrap();
        let data = vec![plus.tensor(&plus), StateVector::zero(4)];
        let cfg = Stage1Config {
            depth: 2,
            initial_params: Some(ParamVector::zeros(8)),
            ..Stage1Config::default()
        };
        let (_, _, trace) = train_stage1(&data, &cfg).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.records.len(), 1);
        assert!(trace.records[0].residual < 1e-10);
    }

    #[test]
    fn small_rate_ascent_is_monotone() {
        let data = random_dataset(4, 8, 31);
        let cfg = Stage1Config {
            depth: 2,
            learning_rate: 1e-3,
            max_iters: 200,
            convergence_tol: 0.0,
            seed: 5,
            ..Stage1Config::default()
        };
        let (_, _, trace) = train_stage1(&data, &cfg).unwrap();
        let costs: Vec<f64> = trace.records.iter().map(|r| r.cost).collect();
        let up = costs.windows(2).filter(|w| w[1] >= w[0]).count();
        assert!(up as f64 >= 0.95 * (costs.len() - 1) as f64);
        let series = delta_theta_l1(&trace);
        assert!(series.windows(2).all(|w| w[1] >= w[0]));
        let total: f64 = trace.records.iter().map(|r| r.step_l1).sum();
        assert!((series.last().unwrap() - total).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let data = random_dataset(4, 6, 1);
        let cfg = Stage1Config {
            depth: 2,
            max_iters: 20,
            batch: Batch::Minibatch { size: 3, seed: 9 },
            ..Stage1Config::default()
        };
        let a = train_stage1(&data, &cfg).unwrap();
        let b = train_stage1(&data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_errors() {
        let data = random_dataset(3, 2, 1);
        assert!(matches!(
            train_stage1(&data, &Stage1Config::default()),
            Err(Error::Config(_))
        ));
        let cfg = Stage1Config {
            learning_rate: -1.0,
            ..Stage1Config::default()
        };
        assert!(train_stage1(&random_dataset(2, 1, 1), &cfg).is_err());
        assert!(matches!(train_stage1(&[], &Stage1Config::default()), Err(Error::Config(_))));
        let a = LayeredAnsatz::new(2, 1).unwrap();
        let p = QubitPartition::halves(2).unwrap();
        assert!(purity_cost(&a, &ParamVector::zeros(2), &[], &p).is_err());
    }

    #[test]
    fn maximally_entangled_states_sit_on_the_floor() {
        for (n, n_a) in [(4, 2), (5, 2), (6, 3)] {
            let p = QubitPartition::split_at(n, n_a).unwrap();
            let k = n_a.min(n - n_a);
            let mut amps = vec![0.0; 1 << n];
            for i in 0..1usize << k {
                // |i> on A, |i> on the last k qubits of B
                amps[(i << (n - n_a)) | i] = 1.0;
            }
            let psi = StateVector::from_real(&amps).unwrap();
            let (a, b) = state_purities(&psi, &p).unwrap();
            assert!((a + b - purity_cost_floor(&p)).abs() < 1e-12);
        }
    }
}
