use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{QubitPartition, StateVector, Subsystem};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-CLAMP_TOL, 0)` are treated as zero; anything more
/// negative is rejected.
const CLAMP_TOL: f64 = 1e-10;
/// Eigenvalues below this contribute nothing to the entropy.
const ENTROPY_CUTOFF: f64 = 1e-12;

/// A reduced density matrix over `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim != entries.ncols() || dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}x{} is not 2^n x 2^n",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..dim {
            for j in i..dim {
                if (entries[(i, j)] - entries[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        let trace = entries.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            entries,
        })
    }

    /// `|psi><psi|`.
    pub fn pure(state: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            n_qubits: state.n_qubits(),
            entries: &v * v.adjoint(),
        }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            entries: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Eigenvalues in ascending order, with small negative values clamped.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = self.entries.clone().symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        for v in values.iter_mut() {
            if *v < -CLAMP_TOL {
                return Err(Error::InvalidDensityMatrix(format!(
                    "negative eigenvalue {v:e}"
                )));
            }
            *v = v.max(0.0);
        }
        Ok(values)
    }
}

/// Reduced density matrix on the `keep` side of `partition`, by direct
/// summation over the traced register:
/// `rho[i][j] = sum_t psi(i, t) * conj(psi(j, t))`.
pub fn partial_trace(
    state: &StateVector,
    partition: &QubitPartition,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    partition.check_state(state)?;
    let m = partition.coefficient_matrix(state.amplitudes());
    let dim_a = 1usize << partition.subsystem_a().len();
    let dim_b = 1usize << partition.subsystem_b().len();
    // M is dim_a x dim_b row-major
    let entries = match keep {
        Subsystem::A => DMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b)
                .map(|t| m[i * dim_b + t] * m[j * dim_b + t].conj())
                .sum()
        }),
        Subsystem::B => DMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a)
                .map(|t| m[t * dim_b + i] * m[t * dim_b + j].conj())
                .sum()
        }),
    };
    Ok(DensityMatrix {
        n_qubits: partition.qubits(keep).len(),
        entries,
    })
}

/// `Tr(rho^2)`, which for Hermitian `rho` is the squared Frobenius norm.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.entries.iter().map(|z| z.norm_sqr()).sum()
}

/// `S(rho) = -Tr(rho ln rho)` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(rho
        .eigenvalues()?
        .into_iter()
        .filter(|&l| l >= ENTROPY_CUTOFF)
        .map(|l| -l * l.ln())
        .sum())
}
