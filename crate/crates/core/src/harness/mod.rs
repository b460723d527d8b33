//! Config-driven experiment runs with persisted, resumable stages.

mod config;
mod report;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

pub use config::{describe, ExperimentConfig, ModelSource, PerQubit, Settings, SpamSpec};
pub use report::{
    AlphaErrorSummary, EffectiveConstants, RunReport, StageRecord, StageStatus, StructureVerdict,
};

use crate::channel::{batch_simulate, PauliChannel, ScheduleEntry, ShotBank, SpamModel};
use crate::coeffs::{diamond_distance, learn_all_coefficients, CoefficientConfig};
use crate::error::Error;
use crate::estimate::{
    batch_estimate_prepared, default_k_grid, AlphaEstimator, AlphaTable, PreparedBank,
};
use crate::model::{
    compute_constants, generate_model, structure_budget_ln, validate_conditions, GibbsNoiseModel,
    ModelConstants, ModelFile,
};
use crate::pauli::{pauli_count, PauliString, Region, ENUMERATION_CAP};
use crate::rng::{derive, tag};
use crate::structure::{
    learn_graph, ExactProvider, LearnedStructure, MarginalProvider, ProtocolProvider, ProviderMode,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Model,
    Simulate,
    Estimate,
    Structure,
    Coefficients,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Model,
        Stage::Simulate,
        Stage::Estimate,
        Stage::Structure,
        Stage::Coefficients,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Model => "model",
            Stage::Simulate => "simulate",
            Stage::Estimate => "estimate",
            Stage::Structure => "structure",
            Stage::Coefficients => "coefficients",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// File names inside the output directory.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.dir.join("config.json")
    }
    pub fn model(&self) -> PathBuf {
        self.dir.join("model.json")
    }
    pub fn bank(&self) -> PathBuf {
        self.dir.join("shots.txt")
    }
    pub fn alphas(&self) -> PathBuf {
        self.dir.join("alphas.tsv")
    }
    pub fn structure(&self) -> PathBuf {
        self.dir.join("structure.json")
    }
    pub fn learned(&self) -> PathBuf {
        self.dir.join("learned_model.json")
    }
    pub fn report_json(&self) -> PathBuf {
        self.dir.join("report.json")
    }
    pub fn report_text(&self) -> PathBuf {
        self.dir.join("report.txt")
    }
    pub fn timings(&self) -> PathBuf {
        self.dir.join("timings.json")
    }
}

/// How a stage got its result, for the timing log.
#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub loaded: bool,
    pub seconds: f64,
}

/// State shared by the stages of one run.
pub struct Run {
    pub config: ExperimentConfig,
    pub artifacts: Artifacts,
    pub report: RunReport,
    pub timings: Vec<StageTiming>,
    model: Option<GibbsNoiseModel>,
    constants: Option<ModelConstants>,
    alpha: f64,
    estimator: Option<Arc<AlphaEstimator>>,
    structure: Option<LearnedStructure>,
    learned: Option<GibbsNoiseModel>,
}

fn stage_err(stage: Stage) -> impl Fn(Error) -> HarnessError {
    move |source| HarnessError::Stage { stage, source }
}

/// Every Pauli on `n` qubits with weight between 1 and `w`.
pub fn paulis_up_to_weight(n: usize, w: usize) -> Vec<PauliString> {
    let mut out = Vec::new();
    fn supports(n: usize, start: usize, w: usize, cur: &mut Vec<usize>, out: &mut Vec<Region>) {
        if !cur.is_empty() {
            out.push(Region::from_qubits(cur.iter().copied()).expect("distinct"));
        }
        if cur.len() == w {
            return;
        }
        for q in start..n {
            cur.push(q);
            supports(n, q + 1, w, cur, out);
            cur.pop();
        }
    }
    let mut regions = Vec::new();
    supports(n, 0, w, &mut Vec::new(), &mut regions);
    for region in regions {
        let m = region.len();
        for idx in 0..pauli_count(m) {
            let local = PauliString::from_index(m, idx);
            if local.weight() == m {
                out.push(local.embed(&region, n).expect("fits"));
            }
        }
    }
    out.sort();
    out
}

impl Run {
    pub fn new(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let artifacts = Artifacts::new(&config.output_dir);
        std::fs::create_dir_all(&artifacts.dir)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", artifacts.dir.display())))?;
        std::fs::write(artifacts.config(), config.to_json())
            .map_err(|e| HarnessError::Config(format!("{}: {e}", artifacts.config().display())))?;
        let report = RunReport {
            seed: config.seed,
            provider: Some(config.provider),
            ..RunReport::default()
        };
        Ok(Self {
            config,
            artifacts,
            report,
            timings: Vec::new(),
            model: None,
            constants: None,
            alpha: 0.0,
            estimator: None,
            structure: None,
            learned: None,
        })
    }

    fn timed<T>(
        &mut self,
        stage: Stage,
        loaded: bool,
        f: impl FnOnce(&mut Self) -> Result<T, HarnessError>,
    ) -> Result<T, HarnessError> {
        let t0 = Instant::now();
        let out = f(self);
        self.timings.push(StageTiming {
            stage,
            loaded,
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    fn model(&self) -> &GibbsNoiseModel {
        self.model.as_ref().expect("model stage ran")
    }

    /// Loads or generates the ground-truth model and fixes the constants.
    pub fn stage_model(&mut self) -> Result<(), HarnessError> {
        if self.model.is_some() {
            return Ok(());
        }
        let path = self.artifacts.model();
        let exists = path.exists();
        self.timed(Stage::Model, exists, |run| {
            let err = stage_err(Stage::Model);
            let file = if exists {
                ModelFile::load(&path).map_err(&err)?
            } else {
                let file = match &run.config.model {
                    ModelSource::Spec(spec) => {
                        let model = generate_model(spec, &mut derive(run.config.seed, &[tag::MODEL]))
                            .map_err(|e| match e {
                                Error::Config(m) => HarnessError::Config(m),
                                other => err(other),
                            })?;
                        ModelFile {
                            alpha: Some(spec.alpha),
                            beta: Some(spec.beta),
                            seed: Some(run.config.seed),
                            ..ModelFile::from_model(&model)
                        }
                    }
                    ModelSource::File(f) => ModelFile::load(f).map_err(&err)?,
                };
                file.save(&path).map_err(&err)?;
                file
            };
            let model = file.to_model().map_err(&err)?;
            let strengths: Vec<f64> = model
                .potentials()
                .iter()
                .filter(|t| model.hypergraph().is_maximal(t.hyperedge()))
                .map(|t| t.max_abs())
                .collect();
            let alpha = file
                .alpha
                .unwrap_or_else(|| strengths.iter().copied().fold(f64::INFINITY, f64::min));
            let beta = file
                .beta
                .unwrap_or_else(|| strengths.iter().copied().fold(0.0, f64::max));
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            let conditions = validate_conditions(&model, alpha, beta);
            let constants = compute_constants(&model, alpha, beta, run.config.settings.overrides());
            let s = &run.config.settings;
            run.report.n = Some(model.n());
            run.report.conditions = Some(conditions);
            run.report.constants = Some(EffectiveConstants {
                gamma: constants.gamma,
                eta: constants.eta,
                tau: constants.tau,
                l: constants.l,
                rho_min: s.rho_min,
                groups: s.groups,
                fit: s.fit,
                gauge: s.gauge,
                symmetrization: s.symmetrization,
                spurious_threshold: s.spurious_threshold.unwrap_or(alpha / 2.0),
            });
            run.alpha = alpha;
            run.constants = Some(constants);
            run.model = Some(model);
            Ok(())
        })
    }

    /// The configured schedule, or the formula budget scaled down and capped.
    pub fn schedule(&mut self) -> Result<Vec<ScheduleEntry>, HarnessError> {
        self.stage_model()?;
        if let Some(s) = &self.config.schedule {
            return Ok(s.clone());
        }
        let model = self.model();
        let n = model.n();
        let r = model.hypergraph().r();
        let constants = self.constants.expect("model stage ran");
        let settings = &self.config.settings;
        let p0 = if n <= ENUMERATION_CAP {
            model
                .dense()
                .map_err(stage_err(Stage::Simulate))?
                .probability(&PauliString::identity(n))
        } else {
            0.5
        };
        let ks = default_k_grid(p0, 0.0, 64);
        let spam = self.config.spam.build(n)?;
        let worst_q = spam
            .prep
            .iter()
            .chain(&spam.meas)
            .map(|c| 1.0 - c.fidelity(crate::pauli::Pauli1::X).min(c.fidelity(crate::pauli::Pauli1::Z)))
            .fold(0.0, f64::max);
        let weight = (r as u64 + constants.l.min(n as u64)).min(n as u64) as i32;
        let c_spam = (1.0 - worst_q).max(1e-12).powi(2 * weight);
        let ln_budget = structure_budget_ln(&constants, n, r, p0, c_spam, 0.05);
        let raw = (ln_budget - settings.desk_scale.ln()).exp();
        let cap = settings.max_shots as f64 / ks.len() as f64;
        let capped = !(raw <= cap);
        let per_k = raw.min(cap).max(1.0).round() as u64;
        self.report.budget_capped = Some(capped);
        Ok(ks.into_iter().map(|k| ScheduleEntry { k, shots: per_k }).collect())
    }

    fn spam(&self) -> Result<SpamModel, HarnessError> {
        self.config.spam.build(self.model().n())
    }

    /// Loads or simulates the shot bank.
    pub fn stage_simulate(&mut self) -> Result<Option<ShotBank>, HarnessError> {
        self.stage_model()?;
        if self.config.provider == ProviderMode::Exact {
            return Ok(None);
        }
        let schedule = self.schedule()?;
        self.report.schedule = schedule.clone();
        self.report.shots_consumed = schedule.iter().map(|e| e.shots).sum();
        let path = self.artifacts.bank();
        let exists = path.exists();
        self.timed(Stage::Simulate, exists, |run| {
            let err = stage_err(Stage::Simulate);
            if exists {
                let bank = ShotBank::load(&path).map_err(&err)?;
                if bank.header().schedule != schedule || bank.header().seed != run.config.seed {
                    return Err(err(Error::Config(format!(
                        "{} was produced by a different config",
                        path.display()
                    ))));
                }
                return Ok(Some(bank));
            }
            let spam = run.spam()?;
            let channel = PauliChannel::from_model(run.model().clone(), None).map_err(&err)?;
            let bank = batch_simulate(&channel, &spam, &schedule, run.config.seed).map_err(&err)?;
            bank.save(&path).map_err(&err)?;
            Ok(Some(bank))
        })
    }

    fn estimator(&mut self) -> Result<Arc<AlphaEstimator>, HarnessError> {
        if let Some(e) = &self.estimator {
            return Ok(e.clone());
        }
        let bank = self.stage_simulate()?.expect("protocol mode");
        let alphas = self.artifacts.alphas();
        let exists = alphas.exists();
        let est = self.timed(Stage::Estimate, exists, |run| {
            let err = stage_err(Stage::Estimate);
            let prepared = PreparedBank::new(&bank, run.config.settings.groups).map_err(&err)?;
            let est = AlphaEstimator::new(prepared, run.config.settings.estimator());
            Ok(if exists {
                est.with_table(&AlphaTable::load(&alphas).map_err(&err)?)
            } else {
                est
            })
        })?;
        let est = Arc::new(est);
        self.estimator = Some(est.clone());
        Ok(est)
    }

    fn provider(&mut self) -> Result<Box<dyn MarginalProvider>, HarnessError> {
        self.stage_model()?;
        match self.config.provider {
            ProviderMode::Exact => Ok(Box::new(
                ExactProvider::new(self.model()).map_err(stage_err(Stage::Estimate))?,
            )),
            ProviderMode::Protocol => Ok(Box::new(ProtocolProvider::with_floor_scale(
                self.estimator()?,
                self.config.settings.rho_min,
            ))),
        }
    }

    /// Eagerly estimates every Pauli up to the weight cap.
    pub fn stage_estimate_all(&mut self) -> Result<AlphaTable, HarnessError> {
        self.stage_model()?;
        if self.config.provider == ProviderMode::Exact {
            return Err(HarnessError::Config("estimation needs the protocol provider".into()));
        }
        let n = self.model().n();
        let w = self
            .config
            .settings
            .w_cap
            .unwrap_or(self.model().hypergraph().r())
            .min(n);
        let bank = self.stage_simulate()?.expect("protocol mode");
        let table = self.timed(Stage::Estimate, false, |run| {
            let err = stage_err(Stage::Estimate);
            let prepared = PreparedBank::new(&bank, run.config.settings.groups).map_err(&err)?;
            let table =
                batch_estimate_prepared(&paulis_up_to_weight(n, w), &prepared, &run.config.settings.estimator())
                    .map_err(&err)?;
            table.save(run.artifacts.alphas()).map_err(&err)?;
            Ok(table)
        })?;
        self.note_table(&table);
        Ok(table)
    }

    fn note_table(&mut self, table: &AlphaTable) {
        self.report.estimated_paulis = table.len();
        self.report.estimated_supports = table
            .entries()
            .iter()
            .map(|e| e.pauli.support_mask())
            .collect::<BTreeSet<_>>()
            .len();
        if let Some(model) = &self.model {
            if model.n() <= ENUMERATION_CAP {
                if let Ok(dense) = model.dense() {
                    let errors: Vec<f64> = table
                        .entries()
                        .iter()
                        .filter_map(|e| dense.eigenvalue(&e.pauli).ok().map(|a| (e.alpha_hat - a).abs()))
                        .collect();
                    if !errors.is_empty() {
                        self.report.alpha_errors = Some(AlphaErrorSummary {
                            count: errors.len(),
                            flagged: table.flagged(),
                            max_abs_error: errors.iter().copied().fold(0.0, f64::max),
                            rms_error: (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64)
                                .sqrt(),
                        });
                    }
                }
            }
        }
    }

    /// Loads or learns the structure.
    pub fn stage_structure(&mut self) -> Result<(), HarnessError> {
        if self.structure.is_some() {
            return Ok(());
        }
        self.stage_model()?;
        let path = self.artifacts.structure();
        let exists = path.exists();
        let provider = if exists { None } else { Some(self.provider()?) };
        let structure = self.timed(Stage::Structure, exists, |run| {
            let err = stage_err(Stage::Structure);
            if let Some(p) = provider {
                let c = run.constants.expect("model stage ran");
                let s = learn_graph(
                    p.as_ref(),
                    run.model().hypergraph().r(),
                    c.l,
                    c.tau,
                    run.config.settings.symmetrization,
                )
                .map_err(&err)?;
                s.save(&path).map_err(&err)?;
                Ok(s)
            } else {
                LearnedStructure::load(&path).map_err(&err)
            }
        })?;
        let truth = self.model().hypergraph().derived_graph();
        let learned: BTreeSet<(usize, usize)> = structure.graph.edges().into_iter().collect();
        let want: BTreeSet<(usize, usize)> = truth.edges().into_iter().collect();
        self.report.structure = Some(StructureVerdict {
            exact: learned == want,
            missing_edges: want.difference(&learned).copied().collect(),
            extra_edges: learned.difference(&want).copied().collect(),
            asymmetry_warnings: structure.warnings.len(),
        });
        self.structure = Some(structure);
        Ok(())
    }

    /// Loads or learns the coefficients on the learned structure.
    pub fn stage_coefficients(&mut self) -> Result<(), HarnessError> {
        if self.learned.is_some() {
            return Ok(());
        }
        self.stage_structure()?;
        let path = self.artifacts.learned();
        let exists = path.exists();
        let provider = if exists { None } else { Some(self.provider()?) };
        let threshold = self
            .report
            .constants
            .as_ref()
            .map(|c| c.spurious_threshold)
            .unwrap_or(0.0);
        let file = self.timed(Stage::Coefficients, exists, |run| {
            let err = stage_err(Stage::Coefficients);
            let Some(p) = provider else {
                return ModelFile::load(&path).map_err(&err);
            };
            let config = CoefficientConfig {
                gauge: run.config.settings.gauge,
                spurious_threshold: threshold,
            };
            let structure = run.structure.as_ref().expect("structure stage ran");
            let learned = learn_all_coefficients(structure, p.as_ref(), config).map_err(&err)?;
            let c = run.constants.expect("model stage ran");
            let file = learned.to_model_file(serde_json::json!({
                "seed": run.config.seed,
                "shots": run.report.shots_consumed,
                "tau": c.tau,
                "l": c.l,
            }));
            file.save(&path).map_err(&err)?;
            Ok(file)
        })?;
        self.report.spurious = file
            .provenance
            .as_ref()
            .and_then(|p| serde_json::from_value(p["spurious"].clone()).ok())
            .unwrap_or_default();
        let learned = file.to_model().map_err(stage_err(Stage::Coefficients))?;
        self.report.theta_error = Some(max_theta_error(self.model(), &learned).map_err(stage_err(Stage::Coefficients))?);
        // Persist every eigenvalue the lazy estimator produced so reruns agree.
        if let Some(est) = &self.estimator {
            let table = est.table();
            if !self.artifacts.alphas().exists() {
                table.save(self.artifacts.alphas()).map_err(stage_err(Stage::Estimate))?;
            }
        }
        if self.artifacts.alphas().exists() {
            let table = AlphaTable::load(self.artifacts.alphas()).map_err(stage_err(Stage::Estimate))?;
            self.note_table(&table);
        }
        self.learned = Some(learned);
        Ok(())
    }

    /// Distances between the true and learned channels.
    pub fn stage_evaluate(&mut self) -> Result<(), HarnessError> {
        self.stage_coefficients()?;
        let d = self.timed(Stage::Evaluate, false, |run| {
            diamond_distance(run.model(), run.learned.as_ref().expect("coefficients ran"))
                .map_err(stage_err(Stage::Evaluate))
        })?;
        self.report.distance = Some(d);
        Ok(())
    }

    /// Runs every stage up to `last`, recording the outcome of each.
    pub fn run_until(&mut self, last: Stage) -> Result<(), HarnessError> {
        let result = match last {
            Stage::Model => self.stage_model(),
            Stage::Simulate => self.stage_simulate().map(|_| ()),
            Stage::Estimate => self.stage_estimate_all().map(|_| ()),
            Stage::Structure => self.stage_structure(),
            Stage::Coefficients => self.stage_coefficients(),
            Stage::Evaluate => self.stage_evaluate(),
        };
        let failed_at = match &result {
            Err(HarnessError::Stage { stage, .. }) => Some(*stage),
            _ => None,
        };
        let exact = self.config.provider == ProviderMode::Exact;
        self.report.stages = Stage::ALL
            .iter()
            .filter(|s| **s <= last)
            .map(|&s| {
                let status = match (failed_at, &result) {
                    (Some(f), Err(e)) if f == s => StageStatus::Failed(e.to_string()),
                    (Some(f), _) if s > f => StageStatus::Skipped,
                    _ if exact && matches!(s, Stage::Simulate | Stage::Estimate) => StageStatus::Skipped,
                    _ => StageStatus::Ok,
                };
                StageRecord {
                    stage: s.name().to_string(),
                    status,
                }
            })
            .collect();
        self.write_report().map_err(|e| HarnessError::Config(e.to_string()))?;
        result
    }

    fn write_report(&self) -> std::io::Result<()> {
        std::fs::write(self.artifacts.report_json(), self.report.to_json())?;
        std::fs::write(self.artifacts.report_text(), self.report.to_text())?;
        std::fs::write(
            self.artifacts.timings(),
            serde_json::to_string_pretty(&self.timings).expect("timings serialize") + "\n",
        )
    }
}

/// `max_h ||theta_hat^h - theta^h||_inf` over both hyperedge sets.
pub fn max_theta_error(truth: &GibbsNoiseModel, learned: &GibbsNoiseModel) -> crate::Result<f64> {
    let mut worst: f64 = 0.0;
    for t in truth.potentials() {
        worst = worst.max(match learned.potential(t.hyperedge()) {
            Some(hat) => hat.sup_distance(t)?,
            None => t.max_abs(),
        });
    }
    for t in learned.potentials() {
        if truth.potential(t.hyperedge()).is_none() {
            worst = worst.max(t.max_abs());
        }
    }
    Ok(worst)
}

/// Runs the whole pipeline for a config file.
pub fn run_pipeline(config: ExperimentConfig) -> Result<RunReport, HarnessError> {
    let mut run = Run::new(config)?;
    run.run_until(Stage::Evaluate)?;
    Ok(run.report)
}

/// Artifacts directory of a config, for callers that only need paths.
pub fn artifacts_for(config: &ExperimentConfig) -> Artifacts {
    Artifacts::new(Path::new(&config.output_dir))
}

#[cfg(test)]
mod tests;
