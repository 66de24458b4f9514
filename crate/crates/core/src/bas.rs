//! Bars-and-Stripes grids and their amplitude encodings.
//!
//! A grid of side `s` is described by a line mask: for bars, bit `c` of the
//! mask lights column `c`; for stripes, bit `r` lights row `r`. The all-off
//! and all-on masks are excluded because they belong to both classes, which
//! leaves `2^s - 2` patterns per class.
//!
//! Pixels are flattened row-major (index `row * side + col`), so the leading
//! `log2(side)` qubits address rows and the trailing ones address columns.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Bars,
    Stripes,
}

/// Class label: `+1` for bars, `-1` for stripes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Bars,
    Stripes,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Bars => 1.0,
            Label::Stripes => -1.0,
        }
    }

    /// Sign readout with ties going to bars.
    pub fn from_expectation(z: f64) -> Self {
        if z >= 0.0 {
            Label::Bars
        } else {
            Label::Stripes
        }
    }
}

impl From<PatternKind> for Label {
    fn from(kind: PatternKind) -> Self {
        match kind {
            PatternKind::Bars => Label::Bars,
            PatternKind::Stripes => Label::Stripes,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Bars => 1,
            Label::Stripes => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Label::Bars),
            -1 => Ok(Label::Stripes),
            other => Err(Error::Format(format!("label must be +1 or -1, got {other}"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Bars => "bars",
            Label::Stripes => "stripes",
        })
    }
}

/// A square binary grid where either whole columns (bars) or whole rows
/// (stripes) are lit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasGrid {
    side: usize,
    kind: PatternKind,
    mask: u64,
}

impl BasGrid {
    pub fn new(side: usize, kind: PatternKind, mask: u64) -> Result<Self> {
        check_side(side)?;
        let full = (1u64 << side) - 1;
        if mask == 0 || mask >= full {
            return Err(Error::Config(format!(
                "line mask {mask:#x} is empty, full, or out of range for side {side}"
            )));
        }
        Ok(Self { side, kind, mask })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn pixel(&self, row: usize, col: usize) -> bool {
        let line = match self.kind {
            PatternKind::Bars => col,
            PatternKind::Stripes => row,
        };
        self.mask >> line & 1 == 1
    }

    /// Row-major pixel values.
    pub fn pixels(&self) -> Vec<u8> {
        (0..self.side * self.side)
            .map(|i| u8::from(self.pixel(i / self.side, i % self.side)))
            .collect()
    }

    pub fn lit_count(&self) -> usize {
        self.mask.count_ones() as usize * self.side
    }
}

/// A grid with its label. The amplitude encoding is computed on demand
/// because the 16x16 enumeration would otherwise hold half a gigabyte of
/// amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasSample {
    pub grid: BasGrid,
    pub label: Label,
}

impl BasSample {
    pub fn new(grid: BasGrid) -> Self {
        Self {
            label: grid.kind().into(),
            grid,
        }
    }

    pub fn state(&self) -> StateVector {
        encode_amplitude(&self.grid).expect("enumerated grids are never empty")
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.grid.side().trailing_zeros() as usize
    }
}

fn check_side(side: usize) -> Result<()> {
    if side < 2 || !side.is_power_of_two() || side > 32 {
        return Err(Error::Config(format!(
            "grid side must be a power of two in 2..=32, got {side}"
        )));
    }
    Ok(())
}

/// Number of patterns for a given side: `2 * (2^side - 2)`.
pub fn pattern_count(side: usize) -> Result<usize> {
    check_side(side)?;
    Ok(2 * ((1usize << side) - 2))
}

/// All patterns: bars by ascending mask, then stripes by ascending mask.
pub fn enumerate_bas(side: usize) -> Result<Vec<BasSample>> {
    check_side(side)?;
    let masks = 1..(1u64 << side) - 1;
    Ok([PatternKind::Bars, PatternKind::Stripes]
        .into_iter()
        .flat_map(|kind| {
            masks
                .clone()
                .map(move |m| BasSample::new(BasGrid { side, kind, mask: m }))
        })
        .collect())
}

/// Amplitude at `row * side + col` is `pixel / sqrt(lit count)`.
pub fn encode_amplitude(grid: &BasGrid) -> Result<StateVector> {
    let lit = grid.lit_count();
    if lit == 0 {
        return Err(Error::Config("cannot encode an all-zero grid".into()));
    }
    let scale = 1.0 / (lit as f64).sqrt();
    let values: Vec<f64> = grid
        .pixels()
        .into_iter()
        .map(|p| f64::from(p) * scale)
        .collect();
    StateVector::from_real(&values)
}

/// `n` distinct patterns drawn uniformly without replacement, returned in
/// enumeration order.
pub fn sample_dataset(side: usize, n: usize, seed: u64) -> Result<Vec<BasSample>> {
    let all = enumerate_bas(side)?;
    if n > all.len() {
        return Err(Error::Sampling {
            requested: n,
            available: all.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, all.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i]).collect())
}

/// Stratified split: each class is shuffled and contributes
/// `round(train_count * class_share)` samples to the training part, so both
/// parts keep the source label ratio.
pub fn split_train_test<T: Clone>(
    samples: &[T],
    label_of: impl Fn(&T) -> Label,
    train_count: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if train_count >= samples.len() {
        return Err(Error::Config(format!(
            "train count {train_count} must be below the dataset size {}",
            samples.len()
        )));
    }
    let mut by_class: HashMap<bool, Vec<usize>> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_class.entry(label_of(s) == Label::Bars).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = samples.len() as f64;
    let bars = by_class.remove(&true).unwrap_or_default();
    let stripes = by_class.remove(&false).unwrap_or_default();
    let bars_train = ((train_count as f64 * bars.len() as f64 / total).round() as usize)
        .min(bars.len())
        .max(train_count.saturating_sub(stripes.len()));
    let stripes_train = train_count - bars_train;

    let mut train = Vec::with_capacity(train_count);
    let mut test = Vec::with_capacity(samples.len() - train_count);
    for (mut idx, k) in [(bars, bars_train), (stripes, stripes_train)] {
        idx.shuffle(&mut rng);
        train.extend(idx[..k].iter().copied());
        test.extend(idx[k..].iter().copied());
    }
    train.shuffle(&mut rng);
    test.sort_unstable();
    Ok((
        train.into_iter().map(|i| samples[i].clone()).collect(),
        test.into_iter().map(|i| samples[i].clone()).collect(),
    ))
}
