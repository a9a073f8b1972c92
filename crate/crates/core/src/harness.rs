//! Experiment harness: runs the full estimation pipeline over pose grids or
//! random perturbations, the no-preprocessing 3D baseline, and writes
//! CSV/JSON reports.
//!
//! Determinism contract: every trial derives its seeds from the master seed
//! and its trial index, trials execute independently (possibly in
//! parallel), and aggregation walks records in trial order, so repeated
//! runs of the same configuration produce byte-identical `trials.csv`.
//! Wall-clock timings are kept out of that file; they appear only in the
//! summary, which is not covered by the byte-identity contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud3;
use crate::error::{Error, Result};
use crate::pipeline::{flip_z, preprocess_pair, PipelineParams};
use crate::recon::{height_to_cloud, integrate_gradients};
use crate::registration::{multi_init_register, IcpParams};
use crate::registration3d::icp_3d;
use crate::se2::{rot_error, trans_error, Pose2, PoseRecord, SymmetryGroup};
use crate::shapes::{preset_by_name, ConnectorPreset};
use crate::sim::{
    perturbation_grid, random_perturbation, render_hole_contact, render_peg_contact,
    ContactObservation, SensorModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PresetSource {
    Name(String),
    Inline(ConnectorPreset),
}

impl Default for PresetSource {
    fn default() -> Self {
        PresetSource::Name("usbc-like".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Grid,
    Random { trials: usize },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    Full,
    NoPreprocess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub preset: PresetSource,
    pub sensor: SensorModel,
    pub pipeline: Option<PipelineParams>,
    pub icp: IcpParams,
    /// Overrides `sensor.gradient_noise_sigma` when set.
    pub noise_sigma: Option<f64>,
    pub seed: u64,
    pub mode: Mode,
    pub baseline: Baseline,
    pub out_dir: Option<PathBuf>,
    pub dump_stages: bool,
    pub dump_candidates: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: PresetSource::default(),
            sensor: SensorModel::default(),
            pipeline: None,
            icp: IcpParams::default(),
            noise_sigma: None,
            seed: 0,
            mode: Mode::default(),
            baseline: Baseline::default(),
            out_dir: None,
            dump_stages: false,
            dump_candidates: false,
        }
    }
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let preset = match &self.preset {
            PresetSource::Name(name) => preset_by_name(name)?,
            PresetSource::Inline(p) => p.clone(),
        };
        preset.validate()?;
        let mut sensor = self.sensor;
        if let Some(sigma) = self.noise_sigma {
            if sigma < 0.0 {
                return Err(Error::Config("noise sigma must be >= 0".into()));
            }
            sensor.gradient_noise_sigma = sigma;
        }
        sensor.validate()?;
        let pipeline = self.pipeline.unwrap_or_else(|| PipelineParams::for_sensor(&sensor));
        pipeline.validate()?;
        self.icp.validate()?;
        if let Mode::Random { trials } = self.mode {
            if trials == 0 {
                return Err(Error::Config("random mode needs at least one trial".into()));
            }
        }
        Ok(ResolvedConfig {
            preset,
            sensor,
            pipeline,
            icp: self.icp,
            seed: self.seed,
            mode: self.mode,
            baseline: self.baseline,
            dump_stages: self.dump_stages,
            dump_candidates: self.dump_candidates,
            out_dir: self.out_dir.clone(),
        })
    }
}

/// Fully validated configuration with the preset and defaults filled in.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub preset: ConnectorPreset,
    pub sensor: SensorModel,
    pub pipeline: PipelineParams,
    pub icp: IcpParams,
    pub seed: u64,
    pub mode: Mode,
    pub baseline: Baseline,
    pub dump_stages: bool,
    pub dump_candidates: bool,
    pub out_dir: Option<PathBuf>,
}

/// Seed derivation: SplitMix64 over the master seed and a stream index.
/// Documented so external tooling can reproduce per-trial noise.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(master ^ splitmix64(stream))
}

const PEG_SEED_STREAM: u64 = 0;

fn hole_noise_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, 1 + 2 * trial as u64)
}

fn random_offset_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, 2 + 2 * trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub render_ms: f64,
    pub reconstruct_ms: f64,
    pub preprocess_ms: f64,
    pub register_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub stage: &'static str,
    pub category: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub alpha_deg: f64,
    pub theta_deg: f64,
    pub tx_mm: f64,
    pub ty_mm: f64,
    pub inlier_ratio: f64,
    pub rmse_mm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub true_offset: PoseRecord,
    /// Absent on failed trials.
    pub estimate: Option<PoseRecord>,
    pub trans_error_mm: Option<f64>,
    /// Absent for circular symmetry and on failed trials.
    pub rot_error_deg: Option<f64>,
    pub inlier_ratio: Option<f64>,
    /// Wall-clock diagnostics; excluded from trials.csv so reruns stay
    /// byte-identical.
    pub timings: StageTimings,
    pub failure: Option<TrialFailure>,
    /// Per-initialization diagnostics, populated only when candidate
    /// dumping is enabled.
    pub candidates: Option<Vec<CandidateRecord>>,
}

impl TrialRecord {
    /// Equality of everything that is part of the determinism contract
    /// (i.e. everything except wall-clock timings).
    pub fn content_eq(&self, other: &TrialRecord) -> bool {
        self.trial == other.trial
            && self.true_offset == other.true_offset
            && self.estimate == other.estimate
            && self.trans_error_mm == other.trans_error_mm
            && self.rot_error_deg == other.rot_error_deg
            && self.inlier_ratio == other.inlier_ratio
            && self.failure == other.failure
            && self.candidates == other.candidates
    }

    fn failed(trial: usize, true_offset: Pose2, stage: &'static str, err: &Error, timings: StageTimings) -> Self {
        TrialRecord {
            trial,
            true_offset: true_offset.to_record(),
            estimate: None,
            trans_error_mm: None,
            rot_error_deg: None,
            inlier_ratio: None,
            timings,
            failure: Some(TrialFailure {
                stage,
                category: err.category(),
                message: err.to_string(),
            }),
            candidates: None,
        }
    }
}

/// Per-connector aggregate statistics over successful trials. Standard
/// deviations are population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub preset: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_trans_error_mm: Option<f64>,
    pub std_trans_error_mm: Option<f64>,
    pub mean_rot_error_deg: Option<f64>,
    pub std_rot_error_deg: Option<f64>,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn summarize(preset: &ConnectorPreset, records: &[TrialRecord]) -> SummaryStats {
    let trans: Vec<f64> = records.iter().filter_map(|r| r.trans_error_mm).collect();
    let rot: Vec<f64> = records.iter().filter_map(|r| r.rot_error_deg).collect();
    let failures = records.iter().filter(|r| r.failure.is_some()).count();
    let (mean_t, std_t) = mean_std(&trans).map_or((None, None), |(m, s)| (Some(m), Some(s)));
    let (mean_r, std_r) = mean_std(&rot).map_or((None, None), |(m, s)| (Some(m), Some(s)));
    SummaryStats {
        preset: preset.name.clone(),
        trials: records.len(),
        failures,
        mean_trans_error_mm: mean_t,
        std_trans_error_mm: std_t,
        mean_rot_error_deg: mean_r,
        std_rot_error_deg: std_r,
    }
}

/// Shared per-experiment state: the peg is grasped once, so its observation
/// and reconstruction are computed once and reused by every trial.
pub struct PegContext {
    pub observation: ContactObservation,
    pub cloud: PointCloud3,
}

pub fn prepare_peg(config: &ResolvedConfig) -> Result<PegContext> {
    let seed = derive_seed(config.seed, PEG_SEED_STREAM);
    let observation =
        render_peg_contact(&config.preset.peg, Pose2::identity(), &config.sensor, seed)
            .map_err(|e| e.in_stage("peg_render"))?;
    let height = integrate_gradients(&observation.gradients)
        .map_err(|e| e.in_stage("peg_reconstruct"))?;
    let (cx, cy) = config.sensor.center_offset_mm();
    let cloud = height_to_cloud(&height).translated_xy(-cx, -cy);
    Ok(PegContext { observation, cloud })
}

/// Run one end-to-end trial at a known true offset. Stage errors are
/// captured in the record; the function itself only observes the
/// configuration.
pub fn run_trial(
    preset: &ConnectorPreset,
    true_offset: Pose2,
    config: &ExperimentConfig,
) -> Result<TrialRecord> {
    let mut resolved = config.resolve()?;
    resolved.preset = preset.clone();
    let peg = prepare_peg(&resolved)?;
    Ok(run_trial_with_peg(&resolved, &peg, true_offset, 0, None))
}

fn run_trial_with_peg(
    config: &ResolvedConfig,
    peg: &PegContext,
    true_offset: Pose2,
    trial: usize,
    dump_dir: Option<&Path>,
) -> TrialRecord {
    let mut timings = StageTimings::default();
    let noise_seed = hole_noise_seed(config.seed, trial);

    let t0 = Instant::now();
    let hole_obs =
        match render_hole_contact(&config.preset.hole, true_offset, &config.sensor, noise_seed) {
            Ok(obs) => obs,
            Err(e) => return TrialRecord::failed(trial, true_offset, "render", &e, timings),
        };
    timings.render_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t0 = Instant::now();
    let hole_height = match integrate_gradients(&hole_obs.gradients) {
        Ok(h) => h,
        Err(e) => return TrialRecord::failed(trial, true_offset, "reconstruct", &e, timings),
    };
    let (cx, cy) = config.sensor.center_offset_mm();
    let hole_cloud = height_to_cloud(&hole_height).translated_xy(-cx, -cy);
    timings.reconstruct_ms = t0.elapsed().as_secs_f64() * 1e3;

    match config.baseline {
        Baseline::Full => {
            let t0 = Instant::now();
            let processed = preprocess_pair(&peg.cloud, &hole_cloud, &config.pipeline);
            let (peg_flat, hole_flat) = match processed {
                Ok(pair) => pair,
                Err(e) => return TrialRecord::failed(trial, true_offset, "preprocess", &e, timings),
            };
            timings.preprocess_ms = t0.elapsed().as_secs_f64() * 1e3;
            if let Some(dir) = dump_dir {
                let _ = crate::io::write_cloud2_csv(&dir.join(format!("{trial}_peg_flat.csv")), &peg_flat);
                let _ = crate::io::write_cloud2_csv(&dir.join(format!("{trial}_hole_clean.csv")), &hole_flat);
            }

            let t0 = Instant::now();
            let registration = match multi_init_register(&peg_flat, &hole_flat, &config.icp) {
                Ok(r) => r,
                Err(e) => return TrialRecord::failed(trial, true_offset, "register", &e, timings),
            };
            timings.register_ms = t0.elapsed().as_secs_f64() * 1e3;

            let estimate = registration.best;
            let candidates = config.dump_candidates.then(|| {
                registration
                    .candidates
                    .iter()
                    .map(|(alpha, r)| CandidateRecord {
                        alpha_deg: *alpha,
                        theta_deg: r.pose.theta_deg(),
                        tx_mm: r.pose.translation().x,
                        ty_mm: r.pose.translation().y,
                        inlier_ratio: r.inlier_ratio,
                        rmse_mm: r.rmse,
                        iterations: r.iterations,
                    })
                    .collect()
            });
            finish_record(
                config,
                trial,
                true_offset,
                estimate,
                Some(registration.best_inlier_ratio),
                timings,
                candidates,
            )
        }
        Baseline::NoPreprocess => {
            // Ablation: only flipping is applied to the hole cloud; both
            // raw 3D clouds go straight into 3D point-to-point ICP.
            let t0 = Instant::now();
            let hole_flipped = match flip_z(&hole_cloud) {
                Ok(c) => c,
                Err(e) => return TrialRecord::failed(trial, true_offset, "preprocess", &e, timings),
            };
            timings.preprocess_ms = t0.elapsed().as_secs_f64() * 1e3;

            let t0 = Instant::now();
            let result = match icp_3d(&peg.cloud, &hole_flipped, &config.icp) {
                Ok(r) => r,
                Err(e) => return TrialRecord::failed(trial, true_offset, "register", &e, timings),
            };
            timings.register_ms = t0.elapsed().as_secs_f64() * 1e3;
            let estimate = result.transform.to_se2();
            finish_record(config, trial, true_offset, estimate, None, timings, None)
        }
    }
}

fn finish_record(
    config: &ResolvedConfig,
    trial: usize,
    true_offset: Pose2,
    estimate: Pose2,
    inlier_ratio: Option<f64>,
    timings: StageTimings,
    candidates: Option<Vec<CandidateRecord>>,
) -> TrialRecord {
    let te = trans_error(&estimate, &true_offset);
    let re = rot_error(&estimate, &true_offset, config.preset.symmetry);
    TrialRecord {
        trial,
        true_offset: true_offset.to_record(),
        estimate: Some(estimate.to_record()),
        trans_error_mm: Some(te),
        rot_error_deg: re,
        inlier_ratio,
        timings,
        failure: None,
        candidates,
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub stats: SummaryStats,
    pub records: Vec<TrialRecord>,
}

/// Run the configured experiment: all 512 grid poses or the configured
/// number of random perturbations, full pipeline or ablation baseline.
/// Trials run in parallel with per-trial seeds, so results do not depend on
/// scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let resolved = config.resolve()?;
    let peg = prepare_peg(&resolved)?;

    let offsets: Vec<Pose2> = match resolved.mode {
        Mode::Grid => perturbation_grid(),
        Mode::Random { trials } => (0..trials)
            .map(|i| random_perturbation(random_offset_seed(resolved.seed, i)))
            .collect(),
    };
    let dump_dir = if resolved.dump_stages {
        resolved.out_dir.clone()
    } else {
        None
    };
    if let Some(dir) = &dump_dir {
        fs::create_dir_all(dir)?;
    }

    let records: Vec<TrialRecord> = offsets
        .par_iter()
        .enumerate()
        .map(|(i, offset)| run_trial_with_peg(&resolved, &peg, *offset, i, dump_dir.as_deref()))
        .collect();

    let stats = summarize(&resolved.preset, &records);
    Ok(ExperimentOutput { stats, records })
}

/// Grid experiment with the full pipeline.
pub fn run_grid_experiment(preset_name: &str, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut cfg = config.clone();
    cfg.preset = PresetSource::Name(preset_name.into());
    cfg.mode = Mode::Grid;
    cfg.baseline = Baseline::Full;
    run_experiment(&cfg)
}

/// Grid experiment with the no-preprocessing 3D baseline.
pub fn run_baseline_no_preprocess(preset_name: &str, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut cfg = config.clone();
    cfg.preset = PresetSource::Name(preset_name.into());
    cfg.mode = Mode::Grid;
    cfg.baseline = Baseline::NoPreprocess;
    run_experiment(&cfg)
}

/// trials.csv column order; timings are deliberately excluded (see module
/// docs).
pub const TRIALS_CSV_HEADER: &str =
    "trial,dx_mm,dy_mm,dtheta_deg,est_theta_deg,est_tx_mm,est_ty_mm,trans_error_mm,rot_error_deg,inlier_ratio,status,failure_stage";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 96);
    out.push_str(TRIALS_CSV_HEADER);
    out.push('\n');
    for r in records {
        let (status, stage) = match &r.failure {
            None => ("ok", String::new()),
            Some(f) => ("failed", f.stage.to_string()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.trial,
            r.true_offset.tx_mm,
            r.true_offset.ty_mm,
            r.true_offset.theta_deg,
            opt(r.estimate.map(|e| e.theta_deg)),
            opt(r.estimate.map(|e| e.tx_mm)),
            opt(r.estimate.map(|e| e.ty_mm)),
            opt(r.trans_error_mm),
            opt(r.rot_error_deg),
            opt(r.inlier_ratio),
            status,
            stage,
        ));
    }
    out
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    artifact: &'static str,
    version: &'static str,
    config: &'a ResolvedConfig,
    stats: &'a SummaryStats,
    timing_totals_ms: StageTimings,
}

/// Write trials.csv, summary.json, and optional candidate dumps into `dir`.
pub fn emit_reports(output: &ExperimentOutput, config: &ResolvedConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trials.csv"), trials_csv(&output.records))?;

    let mut totals = StageTimings::default();
    for r in &output.records {
        totals.render_ms += r.timings.render_ms;
        totals.reconstruct_ms += r.timings.reconstruct_ms;
        totals.preprocess_ms += r.timings.preprocess_ms;
        totals.register_ms += r.timings.register_ms;
    }
    let doc = SummaryDocument {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        stats: &output.stats,
        timing_totals_ms: totals,
    };
    let mut json = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Config(format!("summary serialization failed: {e}")))?;
    json.push('\n');
    fs::write(dir.join("summary.json"), json)?;

    if config.dump_candidates {
        for r in &output.records {
            if let Some(cands) = &r.candidates {
                let mut csv = String::from("alpha,theta,tx,ty,inlier_ratio,rmse,iters\n");
                for c in cands {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        c.alpha_deg, c.theta_deg, c.tx_mm, c.ty_mm, c.inlier_ratio, c.rmse_mm, c.iterations
                    ));
                }
                fs::write(dir.join(format!("{}_candidates.csv", r.trial)), csv)?;
            }
        }
    }
    Ok(())
}
