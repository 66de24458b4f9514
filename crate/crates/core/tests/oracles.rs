use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subpure::bas::{enumerate_bas, PatternKind};
use subpure::encoder::state_purities;
use subpure::simcore::{partial_trace, purity, QubitPartition, StateVector, Subsystem};
use subpure::swaptest::exact_score;

/// Reduced density matrix by explicit index bookkeeping over every basis pair.
fn brute_reduced(state: &StateVector, keep: &[usize]) -> Vec<Vec<Complex64>> {
    let n = state.n_qubits();
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    let label = |i: usize| keep.iter().fold(0, |acc, &q| (acc << 1) | bit(i, q));
    let rest = |i: usize| {
        (0..n)
            .filter(|q| !keep.contains(q))
            .fold(0, |acc, q| (acc << 1) | bit(i, q))
    };
    let d = 1 << keep.len();
    let mut rho = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    let a = state.amplitudes();
    for i in 0..a.len() {
        for j in 0..a.len() {
            if rest(i) == rest(j) {
                rho[label(i)][label(j)] += a[i] * a[j].conj();
            }
        }
    }
    rho
}

#[test]
fn partial_trace_matches_index_bookkeeping() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let n_a = rng.gen_range(1..n);
        let mut qubits: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            qubits.swap(i, rng.gen_range(0..=i));
        }
        let mut a = qubits[..n_a].to_vec();
        let mut b = qubits[n_a..].to_vec();
        a.sort_unstable();
        b.sort_unstable();
        let partition = QubitPartition::new(a.clone(), b.clone()).unwrap();
        let psi = StateVector::random(n, &mut rng);
        for (side, keep) in [(Subsystem::A, &a), (Subsystem::B, &b)] {
            let rho = partial_trace(&psi, &partition, side).unwrap();
            let brute = brute_reduced(&psi, keep);
            for (r, row) in brute.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    assert!((rho.entries()[(r, c)] - v).norm() < 1e-12);
                }
            }
            let p: f64 = brute.iter().flatten().map(|v| v.norm_sqr()).sum();
            assert!((purity(&rho) - p).abs() < 1e-12);
        }
    }
}

#[test]
fn pattern_counts_follow_closed_form() {
    for side in [2usize, 4, 8] {
        let all = enumerate_bas(side).unwrap();
        assert_eq!(all.len(), 2 * ((1 << side) - 2));
        let bars = all.iter().filter(|s| s.grid.kind() == PatternKind::Bars).count();
        assert_eq!(bars, (1 << side) - 2);
        let mut masks: Vec<_> = all.iter().map(|s| s.grid.pixels()).collect();
        masks.sort();
        masks.dedup();
        assert_eq!(masks.len(), all.len());
    }
}

#[test]
fn every_pattern_is_a_product_across_rows_and_columns() {
    for s in enumerate_bas(8).unwrap() {
        let psi = s.state();
        let partition = QubitPartition::halves(psi.n_qubits()).unwrap();
        let (pa, pb) = state_purities(&psi, &partition).unwrap();
        assert!((pa - 1.0).abs() < 1e-12 && (pb - 1.0).abs() < 1e-12);
    }
}

#[test]
fn swap_score_equals_reduced_overlap() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let partition = QubitPartition::halves(4).unwrap();
    for _ in 0..10 {
        let a = StateVector::random(4, &mut rng);
        let b = StateVector::random(4, &mut rng);
        let ra = brute_reduced(&a, &[0, 1]);
        let rb = brute_reduced(&b, &[0, 1]);
        let mut overlap = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                overlap += ra[i][j] * rb[j][i];
            }
        }
        let score = exact_score(&a, &b, partition.subsystem_a()).unwrap();
        assert!((score - overlap.re).abs() < 1e-12);
    }
}
