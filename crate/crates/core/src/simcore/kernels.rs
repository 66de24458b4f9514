//! Raw gate kernels over amplitude slices.
//!
//! Qubit 0 is the most significant bit of the basis index. None of these
//! functions validate their arguments; callers in `StateVector` do that.

use num_complex::Complex64;

#[inline]
pub(crate) fn bit(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

pub(crate) fn ry(amps: &mut [Complex64], n_qubits: usize, qubit: usize, angle: f64) {
    let mask = bit(n_qubits, qubit);
    let (s, c) = (angle / 2.0).sin_cos();
    for_each_pair(amps.len(), mask, |i, j| {
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = a0 * c - a1 * s;
        amps[j] = a0 * s + a1 * c;
    });
}

/// Visits every index pair `(i, i | mask)` with the mask bit clear in `i`.
#[inline(always)]
pub(crate) fn for_each_pair(len: usize, mask: usize, mut f: impl FnMut(usize, usize)) {
    for base in (0..len).step_by(2 * mask) {
        for i in base..base + mask {
            f(i, i | mask);
        }
    }
}

/// `Re <lambda | (1/2) Ry(pi) psi>` on `qubit`, the contribution of one
/// rotation angle to a reverse-mode gradient.
pub(crate) fn ry_derivative_overlap(
    lambda: &[Complex64],
    psi: &[Complex64],
    n_qubits: usize,
    qubit: usize,
) -> f64 {
    let mask = bit(n_qubits, qubit);
    let mut acc = 0.0;
    for_each_pair(psi.len(), mask, |i, j| {
        acc += (lambda[j].conj() * psi[i] - lambda[i].conj() * psi[j]).re;
    });
    0.5 * acc
}

pub(crate) fn hadamard(amps: &mut [Complex64], n_qubits: usize, qubit: usize) {
    let mask = bit(n_qubits, qubit);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for_each_pair(amps.len(), mask, |i, j| {
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = (a0 + a1) * h;
        amps[j] = (a0 - a1) * h;
    });
}

pub(crate) fn cnot(amps: &mut [Complex64], n_qubits: usize, control: usize, target: usize) {
    let cmask = bit(n_qubits, control);
    let tmask = bit(n_qubits, target);
    for_each_pair(amps.len(), tmask, |i, j| {
        if i & cmask != 0 {
            amps.swap(i, j);
        }
    });
}

pub(crate) fn cswap(amps: &mut [Complex64], n_qubits: usize, control: usize, a: usize, b: usize) {
    let cmask = bit(n_qubits, control);
    let amask = bit(n_qubits, a);
    let bmask = bit(n_qubits, b);
    for i in 0..amps.len() {
        if i & cmask != 0 && i & amask != 0 && i & bmask == 0 {
            amps.swap(i, (i ^ amask) | bmask);
        }
    }
}

pub(crate) fn controlled_ry(
    amps: &mut [Complex64],
    n_qubits: usize,
    control: usize,
    target: usize,
    angle: f64,
) {
    let cmask = bit(n_qubits, control);
    let tmask = bit(n_qubits, target);
    let (s, c) = (angle / 2.0).sin_cos();
    for i in 0..amps.len() {
        if i & cmask == 0 || i & tmask != 0 {
            continue;
        }
        let j = i | tmask;
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = a0 * c - a1 * s;
        amps[j] = a0 * s + a1 * c;
    }
}

/// Collects the bits of `index` found at `qubits` into a compact integer,
/// first listed qubit most significant.
#[inline]
pub(crate) fn gather_bits(index: usize, n_qubits: usize, qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |acc, &q| {
        (acc << 1) | usize::from(index & bit(n_qubits, q) != 0)
    })
}

/// Inverse of [`gather_bits`]: places the bits of `value` at `qubits`.
#[inline]
pub(crate) fn scatter_bits(value: usize, n_qubits: usize, qubits: &[usize]) -> usize {
    let m = qubits.len();
    qubits.iter().enumerate().fold(0, |acc, (k, &q)| {
        if value & (1 << (m - 1 - k)) != 0 {
            acc | bit(n_qubits, q)
        } else {
            acc
        }
    })
}

pub(crate) fn norm_sqr(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// `<a|b>`, conjugating the first argument.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
