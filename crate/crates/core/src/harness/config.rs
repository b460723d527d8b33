use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::channel::{LocalPauliChannel, ScheduleEntry, SpamModel};
use crate::estimate::{default_groups, AlphaFit, EstimatorConfig, DEFAULT_DELTA};
use crate::model::{ConstantOverrides, Gauge, ModelSpec, Topology};
use crate::structure::{ProviderMode, Symmetrization};

/// Where the ground-truth model comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSource {
    /// Generated from the master seed.
    Spec(ModelSpec),
    /// A model file, relative paths resolved against the config file.
    File(PathBuf),
}

/// One depolarizing strength for every qubit, or one per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerQubit {
    Uniform(f64),
    Each(Vec<f64>),
}

impl Default for PerQubit {
    fn default() -> Self {
        PerQubit::Uniform(0.0)
    }
}

impl PerQubit {
    fn expand(&self, n: usize) -> Result<Vec<f64>, HarnessError> {
        match self {
            PerQubit::Uniform(q) => Ok(vec![*q; n]),
            PerQubit::Each(v) if v.len() == n => Ok(v.clone()),
            PerQubit::Each(v) => Err(HarnessError::Config(format!(
                "{} SPAM strengths given for {n} qubits",
                v.len()
            ))),
        }
    }
}

/// Depolarizing preparation and measurement noise.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamSpec {
    #[serde(default)]
    pub prep: PerQubit,
    #[serde(default)]
    pub meas: PerQubit,
}

impl SpamSpec {
    pub fn build(&self, n: usize) -> Result<SpamModel, HarnessError> {
        let local = |qs: Vec<f64>| -> Result<Vec<LocalPauliChannel>, HarnessError> {
            qs.into_iter()
                .map(|q| LocalPauliChannel::depolarizing(q).map_err(|e| HarnessError::Config(e.to_string())))
                .collect()
        };
        SpamModel::new(local(self.prep.expand(n)?)?, local(self.meas.expand(n)?)?)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// Learning constants. Unset values take their computed defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub tau: Option<f64>,
    pub l: Option<u64>,
    /// Marginal floor is `rho_min * 4^-|A|`.
    pub rho_min: f64,
    /// Largest Pauli weight estimated by the `estimate` stage.
    pub w_cap: Option<usize>,
    pub groups: usize,
    pub fit: AlphaFit,
    pub symmetrization: Symmetrization,
    pub gauge: Gauge,
    /// Defaults to half the model's minimum interaction strength.
    pub spurious_threshold: Option<f64>,
    /// The default shot budget is the formula budget divided by this.
    pub desk_scale: f64,
    /// Ceiling on the default shot budget, over all repetition counts.
    pub max_shots: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tau: None,
            l: None,
            rho_min: 1e-6,
            w_cap: None,
            groups: default_groups(DEFAULT_DELTA),
            fit: AlphaFit::Decay,
            symmetrization: Symmetrization::And,
            gauge: Gauge::Canonical,
            spurious_threshold: None,
            desk_scale: 1e3,
            max_shots: 10_000_000,
        }
    }
}

impl Settings {
    pub fn overrides(&self) -> ConstantOverrides {
        ConstantOverrides {
            tau: self.tau,
            l: self.l,
        }
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            groups: self.groups,
            fit: self.fit,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("run")
}

fn default_provider() -> ProviderMode {
    ProviderMode::Protocol
}

/// Everything a run depends on. The seed is mandatory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelSource,
    #[serde(default)]
    pub spam: SpamSpec,
    /// Repetition counts and shots; computed from the model when absent.
    #[serde(default)]
    pub schedule: Option<Vec<ScheduleEntry>>,
    #[serde(default = "default_provider")]
    pub provider: ProviderMode,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// A small complete config with every default spelled out.
    pub fn example() -> Self {
        Self {
            seed: 1,
            model: ModelSource::Spec(ModelSpec::chain(6, 0.4, 0.4)),
            spam: SpamSpec::default(),
            schedule: Some(vec![
                ScheduleEntry { k: 1, shots: 100_000 },
                ScheduleEntry { k: 2, shots: 100_000 },
            ]),
            provider: ProviderMode::Protocol,
            settings: Settings::default(),
            output_dir: default_output(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let c: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if c.output_dir.is_relative() {
            c.output_dir = base.join(&c.output_dir);
        }
        if let ModelSource::File(f) = &mut c.model {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if let ModelSource::Spec(s) = &self.model {
            if !(s.alpha > 0.0) || s.alpha > s.beta {
                return bad(format!("need 0 < alpha <= beta, got {} and {}", s.alpha, s.beta));
            }
            if s.n == 0 || s.r == 0 {
                return bad("n and r must be positive".into());
            }
            if let Topology::RandomBoundedDegree { degree } = s.topology {
                if degree + 1 < s.r {
                    return bad(format!("degree {degree} cannot hold hyperedges of size {}", s.r));
                }
            }
        }
        if let Some(schedule) = &self.schedule {
            if schedule.is_empty() {
                return bad("schedule is empty".into());
            }
            let mut seen = BTreeSet::new();
            for e in schedule {
                if e.k == 0 || e.shots == 0 {
                    return bad(format!("schedule entry k={} shots={} must be positive", e.k, e.shots));
                }
                if !seen.insert(e.k) {
                    return bad(format!("repetition count {} listed twice", e.k));
                }
            }
        }
        let s = &self.settings;
        if let Some(t) = s.tau {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("tau must lie in (0, 1], got {t}"));
            }
        }
        if s.l == Some(0) {
            return bad("L must be at least 1".into());
        }
        if !(s.rho_min >= 0.0 && s.rho_min < 1.0) {
            return bad(format!("rho_min must lie in [0, 1), got {}", s.rho_min));
        }
        if s.groups == 0 {
            return bad("groups must be at least 1".into());
        }
        if !(s.desk_scale > 0.0) || s.max_shots == 0 {
            return bad("desk_scale and max_shots must be positive".into());
        }
        Ok(())
    }
}

/// Annotated defaults for `--describe`.
pub fn describe() -> String {
    let mut out = String::new();
    out.push_str("Experiment config (JSON). Required: seed, model.\n\n");
    out.push_str("  seed            master seed; every random stream is derived from it\n");
    out.push_str("  model           {\"spec\": {topology, n, r, alpha, beta}} or {\"file\": path}\n");
    out.push_str("                  topology kinds: chain, cycle, random-bounded-degree {degree}, explicit {hyperedges}\n");
    out.push_str("  spam            {prep, meas}: depolarizing strength, one number or one per qubit (default 0)\n");
    out.push_str("  schedule        [{k, shots}]; default: k in {1, 2, 4, ...} with the formula budget / desk_scale\n");
    out.push_str("  provider        protocol | exact (exact skips simulation and uses true marginals)\n");
    out.push_str("  settings.tau    neighbourhood threshold (default: computed from the model)\n");
    out.push_str("  settings.l      neighbourhood size cap (default: ceil(8 ln 4 / tau^2))\n");
    out.push_str("  settings.rho_min        marginal floor scale, floor = rho_min * 4^-|A|\n");
    out.push_str("  settings.w_cap          largest weight for the estimate stage (default r)\n");
    out.push_str("  settings.groups         median-of-means blocks\n");
    out.push_str("  settings.fit            decay | first-point\n");
    out.push_str("  settings.symmetrization and | or\n");
    out.push_str("  settings.gauge          canonical | full\n");
    out.push_str("  settings.spurious_threshold  default alpha / 2\n");
    out.push_str("  settings.desk_scale, settings.max_shots  default budget scaling and ceiling\n");
    out.push_str("  output_dir      artifacts directory, relative to the config file\n\n");
    out.push_str("Defaults:\n");
    out.push_str(&ExperimentConfig::example().to_json());
    out
}
