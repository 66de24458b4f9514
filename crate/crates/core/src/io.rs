//! Plain-text artifacts: JSON Lines for datasets and compact states, JSON
//! for checkpoints and reports, CSV for training traces.
//!
//! Floats are written in shortest round-trip form, so every artifact reads
//! back bit-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ansatz::{LayeredAnsatz, ParamVector};
use crate::bas::{BasGrid, BasSample, Label, PatternKind};
use crate::classifier::{ClassifierConfig, ClassifierRecord};
use crate::compressor::{CompactState, Decorrelation, GarbageChoice};
use crate::encoder::Stage1Record;
use crate::error::{Error, Result};
use crate::simcore::{QubitPartition, StateVector};

pub const DATASET_SCHEMA: u32 = 1;
pub const CHECKPOINT_SCHEMA: u32 = 1;
pub const COMPACT_SCHEMA: u32 = 1;
pub const TRACE_SCHEMA: u32 = 1;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    BufReader::new(File::open(path)?)
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|(i, line)| {
            serde_json::from_str(&line?)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub index: usize,
    pub side: usize,
    pub kind: PatternKind,
    pub mask: u64,
    pub label: Label,
}

impl DatasetRecord {
    pub fn from_sample(index: usize, s: &BasSample) -> Self {
        Self {
            index,
            side: s.grid.side(),
            kind: s.grid.kind(),
            mask: s.grid.mask(),
            label: s.label,
        }
    }

    pub fn to_sample(&self) -> Result<BasSample> {
        let sample = BasSample::new(BasGrid::new(self.side, self.kind, self.mask)?);
        if sample.label != self.label {
            return Err(Error::Format(format!(
                "record {} labels a {:?} grid as {:?}",
                self.index, self.kind, self.label
            )));
        }
        Ok(sample)
    }
}

pub fn write_dataset(path: &Path, samples: &[BasSample]) -> Result<()> {
    let records: Vec<DatasetRecord> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| DatasetRecord::from_sample(i, s))
        .collect();
    write_jsonl(path, &records)
}

pub fn read_dataset(path: &Path) -> Result<Vec<BasSample>> {
    let records: Vec<DatasetRecord> = read_jsonl(path)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.index != i {
                return Err(Error::Format(format!("record {i} carries index {}", r.index)));
            }
            r.to_sample()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderCheckpoint {
    pub schema: u32,
    pub ansatz: LayeredAnsatz,
    pub partition: QubitPartition,
    pub params: ParamVector,
}

impl EncoderCheckpoint {
    pub fn new(ansatz: LayeredAnsatz, partition: QubitPartition, params: ParamVector) -> Self {
        Self {
            schema: CHECKPOINT_SCHEMA,
            ansatz,
            partition,
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_schema("encoder checkpoint", self.schema, CHECKPOINT_SCHEMA)?;
        self.ansatz.validate()?;
        if self.params.len() != self.ansatz.n_params() {
            return Err(Error::Format(format!(
                "checkpoint has {} angles for an ansatz taking {}",
                self.params.len(),
                self.ansatz.n_params()
            )));
        }
        if self.partition.n_qubits() != self.ansatz.n_qubits() {
            return Err(Error::Format("partition and ansatz disagree on qubit count".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = read_json(path)?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierCheckpoint {
    pub schema: u32,
    pub config: ClassifierConfig,
    pub params: ParamVector,
}

impl ClassifierCheckpoint {
    pub fn new(config: ClassifierConfig, params: ParamVector) -> Self {
        Self {
            schema: CHECKPOINT_SCHEMA,
            config,
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_schema("classifier checkpoint", self.schema, CHECKPOINT_SCHEMA)?;
        self.config.validate()?;
        if self.params.len() != self.config.ansatz.n_params() {
            return Err(Error::Format(format!(
                "checkpoint has {} angles for an ansatz taking {}",
                self.params.len(),
                self.config.ansatz.n_params()
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = read_json(path)?;
        c.validate()?;
        Ok(c)
    }
}

fn check_schema(what: &str, found: u32, expected: u32) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!(
            "{what} schema {found}, expected {expected}"
        )));
    }
    Ok(())
}

/// One compressed sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactRecord {
    pub index: usize,
    pub label: Label,
    /// `[re, im]` pairs, ancilla first.
    pub amplitudes: Vec<[f64; 2]>,
    pub garbage: GarbageChoice,
    pub decorrelation: Decorrelation,
    pub n_a: usize,
    pub n_b: usize,
    pub residual: f64,
    pub postselect_probability: f64,
    pub plus_probability: f64,
    pub round_trip_fidelity: f64,
    /// File name of the encoder checkpoint the sample was compressed with.
    pub encoder_checkpoint: String,
}

impl CompactRecord {
    pub fn compact_state(&self) -> Result<CompactState> {
        let amps: Vec<Complex64> = self
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Ok(CompactState {
            state: StateVector::from_amplitudes(amps)?,
            garbage: self.garbage,
            decorrelation: self.decorrelation.clone(),
            n_a: self.n_a,
            n_b: self.n_b,
            postselect_probability: self.postselect_probability,
            plus_probability: self.plus_probability,
        })
    }
}

pub fn amplitude_pairs(state: &StateVector) -> Vec<[f64; 2]> {
    state.amplitudes().iter().map(|a| [a.re, a.im]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Stage1Row {
    iteration: usize,
    cost: f64,
    residual: f64,
    normalized_residual: f64,
    grad_l1: f64,
    cum_delta_theta_l1: f64,
}

pub fn write_stage1_trace(path: &Path, records: &[Stage1Record]) -> Result<()> {
    let rows = records.iter().map(|r| Stage1Row {
        iteration: r.iteration,
        cost: r.cost,
        residual: r.residual,
        normalized_residual: r.normalized_residual(),
        grad_l1: r.grad_l1,
        cum_delta_theta_l1: r.cum_delta_theta_l1,
    });
    write_csv(path, rows)
}

/// Reads back `(iteration, cost, residual, grad_l1, cum_delta_theta_l1)`;
/// `step_l1` is recovered from consecutive cumulative values.
pub fn read_stage1_trace(path: &Path) -> Result<Vec<Stage1Record>> {
    let rows: Vec<Stage1Row> = read_csv(path)?;
    Ok(rows
        .iter()
        .enumerate()
        .map(|(i, r)| Stage1Record {
            iteration: r.iteration,
            cost: r.cost,
            residual: r.residual,
            grad_l1: r.grad_l1,
            step_l1: rows
                .get(i + 1)
                .map_or(0.0, |next| next.cum_delta_theta_l1 - r.cum_delta_theta_l1),
            cum_delta_theta_l1: r.cum_delta_theta_l1,
        })
        .collect())
}

pub fn write_classifier_trace(path: &Path, records: &[ClassifierRecord]) -> Result<()> {
    write_csv(path, records.iter())
}

pub fn read_classifier_trace(path: &Path) -> Result<Vec<ClassifierRecord>> {
    read_csv(path)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    csv::Reader::from_path(path)
        .map_err(csv_error)?
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}
