//! End-to-end runs: dataset, encoder training, compression, classifier
//! training, evaluation and the shot-budget report.
//!
//! Every stage reads its inputs from and writes its outputs to
//! `out_dir/run_id`, so stages can be run one at a time. The run manifest
//! (`manifest.json`) records the configuration, every seed and the status
//! of each stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bas::{enumerate_bas, sample_dataset, split_train_test, BasSample};
use crate::classifier::{
    evaluate as evaluate_classifier, train_classifier as fit_classifier, ClassifierConfig,
    EvalReport, LabeledState,
};
use crate::compressor::{compress as compress_state, decompress, split_subsystems};
use crate::encoder::{train_stage1, Attempt, Stage1Config};
use crate::error::{Error, Result};
use crate::io::{self, ClassifierCheckpoint, CompactRecord, EncoderCheckpoint};
use crate::simcore::{fidelity_pure, Subsystem};
use crate::swaptest::{estimate_purity, ShotBudget, ShotTally};

pub const MANIFEST_SCHEMA: u32 = 1;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const ENCODER_FILE: &str = "encoder.json";
pub const STAGE1_TRACE_FILE: &str = "stage1_trace.csv";
pub const STAGE1_ATTEMPTS_FILE: &str = "stage1_attempts.json";
pub const COMPACT_FILE: &str = "compact.jsonl";
pub const SWAPTEST_FILE: &str = "swaptest.jsonl";
pub const SPLIT_FILE: &str = "split.json";
pub const CLASSIFIER_FILE: &str = "classifier.json";
pub const CLASSIFIER_TRACE_FILE: &str = "classifier_trace.csv";
pub const EVAL_FILE: &str = "eval_report.json";
pub const BUDGET_FILE: &str = "shot_budget.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const STAGES: [&str; 6] = [
    "gen-data",
    "train-encoder",
    "compress",
    "train-classifier",
    "evaluate",
    "report",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzMode {
    Generic,
    BlockDiagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSettings {
    pub mode: AnsatzMode,
    pub depth: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// `None` picks the mode's default readout qubit.
    pub readout: Option<usize>,
    pub seed: u64,
    pub reweight: bool,
}

impl ClassifierSettings {
    pub fn config(&self, n_qubits: usize) -> Result<ClassifierConfig> {
        let mut c = match self.mode {
            AnsatzMode::Generic => ClassifierConfig::generic(n_qubits, self.depth)?,
            AnsatzMode::BlockDiagonal => ClassifierConfig::block_diagonal(n_qubits, self.depth)?,
        };
        c.learning_rate = self.learning_rate;
        c.max_iters = self.max_iters;
        c.seed = self.seed;
        c.reweight = self.reweight;
        if let Some(q) = self.readout {
            c.readout_qubit = q;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub run_id: String,
    pub out_dir: PathBuf,
    pub side: usize,
    /// `None` uses every pattern.
    pub samples: Option<usize>,
    pub data_seed: u64,
    /// `None` keeps the 400-of-508 training share.
    pub train_count: Option<usize>,
    pub split_seed: u64,
    pub stage1: Stage1Config,
    /// Largest per-sample purity residual accepted for compression.
    pub compress_tolerance: f64,
    pub classifier: ClassifierSettings,
    /// Shots per swap-test purity estimate; `None` disables swap-test mode.
    pub shots: Option<usize>,
    pub shot_seed: u64,
}

impl PipelineConfig {
    /// Defaults for a grid side: the full 8x8 set with a depth-3 encoder,
    /// or 1000 sampled 16x16 patterns with depth 5.
    pub fn for_side(side: usize) -> Self {
        let large = side >= 16;
        Self {
            run_id: format!("bas{side}"),
            out_dir: PathBuf::from("out"),
            side,
            samples: large.then_some(1000),
            data_seed: 0,
            train_count: None,
            split_seed: 0,
            stage1: Stage1Config {
                depth: if large { 5 } else { 3 },
                learning_rate: if large { 0.5 } else { 0.3 },
                restarts: if large { 30 } else { 20 },
                max_iters: if large { 150 } else { 500 },
                stall_window: if large { 25 } else { 50 },
                stall_tol: if large { 1e-3 } else { 1e-4 },
                ..Stage1Config::default()
            },
            compress_tolerance: 0.02,
            classifier: ClassifierSettings {
                mode: AnsatzMode::BlockDiagonal,
                depth: 3,
                learning_rate: 0.5,
                max_iters: 100,
                readout: None,
                seed: 0,
                reweight: false,
            },
            shots: None,
            shot_seed: 0,
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.run_id)
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.side.trailing_zeros() as usize
    }

    pub fn sample_count(&self) -> Result<usize> {
        match self.samples {
            Some(n) => Ok(n),
            None => crate::bas::pattern_count(self.side),
        }
    }

    pub fn train_count(&self) -> Result<usize> {
        match self.train_count {
            Some(n) => Ok(n),
            None => Ok(((self.sample_count()? * 400) as f64 / 508.0).round() as usize),
        }
    }

    /// Every failure is reported as [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn check(&self) -> Result<()> {
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid run id {:?}", self.run_id)));
        }
        let total = crate::bas::pattern_count(self.side)?;
        let n = self.sample_count()?;
        if n < 2 || n > total {
            return Err(Error::Config(format!(
                "sample count {n} outside 2..={total}"
            )));
        }
        let train = self.train_count()?;
        if train == 0 || train >= n {
            return Err(Error::Config(format!(
                "train count {train} must lie in 1..{n}"
            )));
        }
        self.stage1.validate()?;
        self.stage1.partition(self.n_qubits())?;
        if !(self.compress_tolerance >= 0.0) {
            return Err(Error::Config("compression tolerance must be nonnegative".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be positive".into()));
        }
        let compact_qubits = self.n_qubits() - self.n_qubits() / 2 + 1;
        self.classifier.config(compact_qubits)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageState {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub state: StageState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub crate_version: String,
    pub artifact_schemas: BTreeMap<String, u32>,
    pub config: PipelineConfig,
    /// Every seed that drives a random draw in the run.
    pub seeds: BTreeMap<String, u64>,
    pub stages: BTreeMap<String, StageStatus>,
}

impl Manifest {
    fn new(config: &PipelineConfig) -> Self {
        let schemas = [
            ("dataset", io::DATASET_SCHEMA),
            ("checkpoint", io::CHECKPOINT_SCHEMA),
            ("compact", io::COMPACT_SCHEMA),
            ("trace", io::TRACE_SCHEMA),
        ];
        let mut seeds = BTreeMap::from([
            ("data".to_string(), config.data_seed),
            ("split".to_string(), config.split_seed),
            ("stage1_init".to_string(), config.stage1.seed),
            ("classifier_init".to_string(), config.classifier.seed),
            ("swaptest".to_string(), config.shot_seed),
        ]);
        if let crate::encoder::Batch::Minibatch { seed, .. } = config.stage1.batch {
            seeds.insert("stage1_minibatch".into(), seed);
        }
        Self {
            schema: MANIFEST_SCHEMA,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            artifact_schemas: schemas.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            config: config.clone(),
            seeds,
            stages: BTreeMap::new(),
        }
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        io::read_json(&run_dir.join(MANIFEST_FILE))
    }

    fn update(config: &PipelineConfig, stage: &str, status: StageStatus) -> Result<()> {
        let dir = config.run_dir();
        let mut m = match Self::load(&dir) {
            Ok(old) if old.config == *config => old,
            _ => Self::new(config),
        };
        m.stages.insert(stage.to_string(), status);
        io::write_json(&dir.join(MANIFEST_FILE), &m)
    }
}

/// Runs one named stage, recording its outcome in the manifest.
pub fn run_stage(config: &PipelineConfig, stage: &str) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(config.run_dir())?;
    let result = match stage {
        "gen-data" => gen_data(config),
        "train-encoder" => train_encoder(config),
        "compress" => compress(config),
        "train-classifier" => train_classifier(config),
        "evaluate" => evaluate(config),
        "report" => report(config),
        other => return Err(Error::Config(format!("unknown stage {other}"))),
    };
    let status = match &result {
        Ok(()) => StageStatus {
            state: StageState::Ok,
            error: None,
        },
        Err(e) => StageStatus {
            state: StageState::Failed,
            error: Some(e.to_string()),
        },
    };
    Manifest::update(config, stage, status)?;
    result.map_err(|e| Error::Stage {
        stage: stage.to_string(),
        source: Box::new(e),
    })
}

/// All stages in order; after a failure the remaining stages are marked
/// skipped and the failure is returned.
pub fn run_pipeline(config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    for (i, stage) in STAGES.iter().enumerate() {
        if let Err(e) = run_stage(config, stage) {
            for later in &STAGES[i + 1..] {
                Manifest::update(
                    config,
                    later,
                    StageStatus {
                        state: StageState::Skipped,
                        error: None,
                    },
                )?;
            }
            return Err(e);
        }
    }
    Ok(())
}

fn load_dataset(config: &PipelineConfig) -> Result<Vec<BasSample>> {
    let samples = io::read_dataset(&config.run_dir().join(DATASET_FILE))?;
    if samples.iter().any(|s| s.grid.side() != config.side) {
        return Err(Error::Format("dataset grid side differs from the configuration".into()));
    }
    Ok(samples)
}

pub fn gen_data(config: &PipelineConfig) -> Result<()> {
    let samples = match config.samples {
        Some(n) => sample_dataset(config.side, n, config.data_seed)?,
        None => enumerate_bas(config.side)?,
    };
    io::write_dataset(&config.run_dir().join(DATASET_FILE), &samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage1Summary {
    pub converged: bool,
    pub final_residual: f64,
    pub selected_iterations: usize,
    pub total_iterations: usize,
    pub attempts: Vec<Attempt>,
}

pub fn train_encoder(config: &PipelineConfig) -> Result<()> {
    let dir = config.run_dir();
    let states: Vec<_> = load_dataset(config)?.iter().map(|s| s.state()).collect();
    let (ansatz, params, trace) = train_stage1(&states, &config.stage1)?;
    let partition = config.stage1.partition(ansatz.n_qubits())?;
    io::write_stage1_trace(&dir.join(STAGE1_TRACE_FILE), &trace.records)?;
    io::write_json(
        &dir.join(STAGE1_ATTEMPTS_FILE),
        &Stage1Summary {
            converged: trace.converged,
            final_residual: trace.final_residual().unwrap_or(f64::INFINITY),
            selected_iterations: trace.records.len(),
            total_iterations: trace.attempts.iter().map(|a| a.iterations).sum(),
            attempts: trace.attempts,
        },
    )?;
    io::write_json(
        &dir.join(ENCODER_FILE),
        &EncoderCheckpoint::new(ansatz, partition, params),
    )
}

/// Swap-test purity estimates for one encoded sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapTestRecord {
    pub index: usize,
    pub exact_a: f64,
    pub estimate_a: f64,
    pub standard_error_a: f64,
    pub exact_b: f64,
    pub estimate_b: f64,
    pub standard_error_b: f64,
    pub shots: usize,
}

pub fn compress(config: &PipelineConfig) -> Result<()> {
    let dir = config.run_dir();
    let samples = load_dataset(config)?;
    let ckpt = EncoderCheckpoint::load(&dir.join(ENCODER_FILE))?;
    let records: Vec<CompactRecord> = samples
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let psi = s.state();
            let out = ckpt.ansatz.apply(&ckpt.params, &psi)?;
            let cert = split_subsystems(&out, &ckpt.partition, config.compress_tolerance)?;
            let compact = compress_state(&cert)?;
            let back = decompress(&compact, &ckpt.ansatz, &ckpt.params, &ckpt.partition)?;
            Ok(CompactRecord {
                index,
                label: s.label,
                amplitudes: io::amplitude_pairs(&compact.state),
                garbage: compact.garbage,
                decorrelation: compact.decorrelation,
                n_a: compact.n_a,
                n_b: compact.n_b,
                residual: cert.residual,
                postselect_probability: compact.postselect_probability,
                plus_probability: compact.plus_probability,
                round_trip_fidelity: fidelity_pure(&back, &psi)?,
                encoder_checkpoint: ENCODER_FILE.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    io::write_jsonl(&dir.join(COMPACT_FILE), &records)?;

    if let Some(shots) = config.shots {
        let rows: Vec<SwapTestRecord> = samples
            .par_iter()
            .enumerate()
            .map(|(index, s)| {
                let out = ckpt.ansatz.apply(&ckpt.params, &s.state())?;
                let (exact_a, exact_b) = crate::encoder::state_purities(&out, &ckpt.partition)?;
                let seed = config.shot_seed.wrapping_add(2 * index as u64);
                let a = estimate_purity(&out, &ckpt.partition, Subsystem::A, ShotBudget::new(shots, seed)?)?;
                let b = estimate_purity(
                    &out,
                    &ckpt.partition,
                    Subsystem::B,
                    ShotBudget::new(shots, seed.wrapping_add(1))?,
                )?;
                Ok(SwapTestRecord {
                    index,
                    exact_a,
                    estimate_a: a.estimate,
                    standard_error_a: a.standard_error,
                    exact_b,
                    estimate_b: b.estimate,
                    standard_error_b: b.standard_error,
                    shots: a.shots_used + b.shots_used,
                })
            })
            .collect::<Result<_>>()?;
        io::write_jsonl(&dir.join(SWAPTEST_FILE), &rows)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn load_compact(config: &PipelineConfig) -> Result<Vec<LabeledState>> {
    let records: Vec<CompactRecord> = io::read_jsonl(&config.run_dir().join(COMPACT_FILE))?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.index != i {
                return Err(Error::Format(format!("compact record {i} carries index {}", r.index)));
            }
            Ok(LabeledState {
                state: r.compact_state()?.state,
                label: r.label,
            })
        })
        .collect()
}

fn pick(data: &[LabeledState], idx: &[usize]) -> Result<Vec<LabeledState>> {
    idx.iter()
        .map(|&i| {
            data.get(i)
                .cloned()
                .ok_or_else(|| Error::Format(format!("split index {i} out of range")))
        })
        .collect()
}

pub fn train_classifier(config: &PipelineConfig) -> Result<()> {
    let dir = config.run_dir();
    let data = load_compact(config)?;
    let indices: Vec<usize> = (0..data.len()).collect();
    let (train, test) = split_train_test(
        &indices,
        |&i| data[i].label,
        config.train_count()?,
        config.split_seed,
    )?;
    io::write_json(
        &dir.join(SPLIT_FILE),
        &Split {
            seed: config.split_seed,
            train: train.clone(),
            test,
        },
    )?;
    let n_qubits = data.first().map_or(0, |s| s.state.n_qubits());
    let clf = config.classifier.config(n_qubits)?;
    let (params, trace) = fit_classifier(&pick(&data, &train)?, &clf)?;
    io::write_classifier_trace(&dir.join(CLASSIFIER_TRACE_FILE), &trace)?;
    io::write_json(&dir.join(CLASSIFIER_FILE), &ClassifierCheckpoint::new(clf, params))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub test: EvalReport,
    /// Training-set figures, without the trace.
    pub train: EvalReport,
    pub mean_round_trip_fidelity: f64,
    pub min_round_trip_fidelity: f64,
}

pub fn evaluate(config: &PipelineConfig) -> Result<()> {
    let dir = config.run_dir();
    let data = load_compact(config)?;
    let split: Split = io::read_json(&dir.join(SPLIT_FILE))?;
    let ckpt = ClassifierCheckpoint::load(&dir.join(CLASSIFIER_FILE))?;
    let trace = io::read_classifier_trace(&dir.join(CLASSIFIER_TRACE_FILE))?;
    let records: Vec<CompactRecord> = io::read_jsonl(&dir.join(COMPACT_FILE))?;
    let fids: Vec<f64> = records.iter().map(|r| r.round_trip_fidelity).collect();
    let summary = EvalSummary {
        test: evaluate_classifier(&ckpt.params, &pick(&data, &split.test)?, &ckpt.config, &trace)?,
        train: evaluate_classifier(&ckpt.params, &pick(&data, &split.train)?, &ckpt.config, &[])?,
        mean_round_trip_fidelity: fids.iter().sum::<f64>() / fids.len() as f64,
        min_round_trip_fidelity: fids.iter().copied().fold(f64::INFINITY, f64::min),
    };
    io::write_json(&dir.join(EVAL_FILE), &summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitCount {
    pub samples: usize,
    pub parameters: usize,
    /// `samples * (2 * parameters + 1)`: one unshifted evaluation plus two
    /// shifted evaluations per parameter, for every sample.
    pub evaluations_per_iteration: usize,
    pub iterations: usize,
    pub total_evaluations: usize,
}

impl CircuitCount {
    pub fn new(samples: usize, parameters: usize, iterations: usize) -> Self {
        let per = samples * (2 * parameters + 1);
        Self {
            samples,
            parameters,
            evaluations_per_iteration: per,
            iterations,
            total_evaluations: per * iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostselectRow {
    pub index: usize,
    pub postselect_probability: f64,
    pub plus_probability: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShotBudgetReport {
    pub stage1: Option<CircuitCount>,
    pub classifier: Option<CircuitCount>,
    pub swap_test: Option<ShotTally>,
    pub postselect: Vec<PostselectRow>,
    /// Ingredients that could not be found.
    pub gaps: Vec<String>,
}

/// Collects whatever counters the run directory holds.
pub fn report_shot_budget(run_dir: &Path) -> ShotBudgetReport {
    let mut r = ShotBudgetReport::default();
    let dataset = io::read_dataset(&run_dir.join(DATASET_FILE));
    let encoder = EncoderCheckpoint::load(&run_dir.join(ENCODER_FILE));
    let attempts: Result<Stage1Summary> = io::read_json(&run_dir.join(STAGE1_ATTEMPTS_FILE));
    match (&dataset, &encoder, &attempts) {
        (Ok(d), Ok(e), Ok(a)) => {
            r.stage1 = Some(CircuitCount::new(d.len(), e.ansatz.n_params(), a.total_iterations));
        }
        _ => r.gaps.push("stage1: dataset, encoder checkpoint or attempt log missing".into()),
    }
    let split: Result<Split> = io::read_json(&run_dir.join(SPLIT_FILE));
    let clf = ClassifierCheckpoint::load(&run_dir.join(CLASSIFIER_FILE));
    let ctrace = io::read_classifier_trace(&run_dir.join(CLASSIFIER_TRACE_FILE));
    match (&split, &clf, &ctrace) {
        (Ok(s), Ok(c), Ok(t)) => {
            r.classifier = Some(CircuitCount::new(s.train.len(), c.params.len(), t.len()));
        }
        _ => r.gaps.push("classifier: split, checkpoint or trace missing".into()),
    }
    match io::read_jsonl::<CompactRecord>(&run_dir.join(COMPACT_FILE)) {
        Ok(recs) => {
            r.postselect = recs
                .iter()
                .map(|c| PostselectRow {
                    index: c.index,
                    postselect_probability: c.postselect_probability,
                    plus_probability: c.plus_probability,
                })
                .collect();
        }
        Err(_) => r.gaps.push("compression: compact archive missing".into()),
    }
    match io::read_jsonl::<SwapTestRecord>(&run_dir.join(SWAPTEST_FILE)) {
        Ok(rows) => {
            r.swap_test = Some(ShotTally {
                estimates: 2 * rows.len(),
                shots: rows.iter().map(|s| s.shots).sum(),
            });
        }
        Err(_) => r.gaps.push("swap test: not run in this pipeline".into()),
    }
    r
}

pub fn report(config: &PipelineConfig) -> Result<()> {
    let dir = config.run_dir();
    io::write_json(&dir.join(BUDGET_FILE), &report_shot_budget(&dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path) -> PipelineConfig {
        let mut c = PipelineConfig::for_side(2);
        c.out_dir = dir.to_path_buf();
        c.run_id = "tiny".into();
        c.train_count = Some(2);
        c.shots = Some(100);
        c
    }

    #[test]
    fn side_two_runs_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny(dir.path());
        let t = std::time::Instant::now();
        run_pipeline(&c).unwrap();
        assert!(t.elapsed().as_secs_f64() < 1.0);
        let m = Manifest::load(&c.run_dir()).unwrap();
        assert!(STAGES.iter().all(|s| m.stages[*s].state == StageState::Ok));
        let recs: Vec<CompactRecord> = io::read_jsonl(&c.run_dir().join(COMPACT_FILE)).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.amplitudes.len() == 4 && r.round_trip_fidelity > 0.99));
        let budget: ShotBudgetReport = io::read_json(&c.run_dir().join(BUDGET_FILE)).unwrap();
        assert_eq!(budget.postselect.len(), 4);
        assert_eq!(budget.swap_test.unwrap().shots, 4 * 2 * 100);
        assert!(budget.gaps.is_empty());
    }

    #[test]
    fn rerun_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny(dir.path());
        run_pipeline(&c).unwrap();
        let files = [STAGE1_TRACE_FILE, CLASSIFIER_TRACE_FILE, COMPACT_FILE, MANIFEST_FILE];
        let first: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(c.run_dir().join(f)).unwrap()).collect();
        run_pipeline(&c).unwrap();
        for (f, before) in files.iter().zip(first) {
            assert_eq!(std::fs::read(c.run_dir().join(f)).unwrap(), before, "{f}");
        }
    }

    #[test]
    fn failure_marks_downstream_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(dir.path());
        c.stage1.max_iters = 1;
        c.stage1.initial_params = Some(crate::ansatz::ParamVector::new(vec![1.0, 0.3, 0.2, 2.0, 0.1, 0.7]).unwrap());
        c.stage1.restarts = 1;
        c.compress_tolerance = 0.0;
        let err = run_pipeline(&c).unwrap_err();
        assert!(matches!(&err, Error::Stage { stage, .. } if stage == "compress"));
        let m = Manifest::load(&c.run_dir()).unwrap();
        assert_eq!(m.stages["compress"].state, StageState::Failed);
        assert_eq!(m.stages["evaluate"].state, StageState::Skipped);
    }

    #[test]
    fn report_flags_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let r = report_shot_budget(dir.path());
        assert_eq!(r.gaps.len(), 4);
    }

    #[test]
    fn evaluation_count_formula() {
        let c = CircuitCount::new(508, 18, 10);
        assert_eq!(c.evaluations_per_iteration, 508 * (6 * 3 * 2 + 1));
        assert_eq!(c.total_evaluations, 10 * 508 * 37);
    }

    #[test]
    fn config_errors() {
        let mut c = PipelineConfig::for_side(8);
        c.samples = Some(600);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = PipelineConfig::for_side(6);
        c.run_id = "x".into();
        assert!(c.validate().is_err());
    }
}
