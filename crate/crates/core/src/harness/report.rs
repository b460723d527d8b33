use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::channel::ScheduleEntry;
use crate::coeffs::DistanceReport;
use crate::estimate::AlphaFit;
use crate::model::{ConditionReport, Gauge};
use crate::pauli::Region;
use crate::structure::{ProviderMode, Symmetrization};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConstants {
    pub gamma: f64,
    pub eta: f64,
    pub tau: f64,
    pub l: u64,
    pub rho_min: f64,
    pub groups: usize,
    pub fit: AlphaFit,
    pub gauge: Gauge,
    pub symmetrization: Symmetrization,
    pub spurious_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaErrorSummary {
    pub count: usize,
    pub flagged: usize,
    pub max_abs_error: f64,
    pub rms_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureVerdict {
    pub exact: bool,
    pub missing_edges: Vec<(usize, usize)>,
    pub extra_edges: Vec<(usize, usize)>,
    pub asymmetry_warnings: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "kebab-case")]
pub enum StageStatus {
    Ok,
    Skipped,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    #[serde(flatten)]
    pub status: StageStatus,
}

/// Outcome of a run. Holds no timings, so reruns reproduce it exactly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub n: Option<usize>,
    pub provider: Option<ProviderMode>,
    pub constants: Option<EffectiveConstants>,
    pub conditions: Option<ConditionReport>,
    pub schedule: Vec<ScheduleEntry>,
    pub shots_consumed: u64,
    /// Whether the default budget hit `max_shots`.
    pub budget_capped: Option<bool>,
    pub estimated_paulis: usize,
    pub estimated_supports: usize,
    pub alpha_errors: Option<AlphaErrorSummary>,
    pub structure: Option<StructureVerdict>,
    pub theta_error: Option<f64>,
    pub spurious: Vec<Region>,
    pub distance: Option<DistanceReport>,
    pub stages: Vec<StageRecord>,
}

impl RunReport {
    pub fn failed(&self) -> Option<&StageRecord> {
        self.stages
            .iter()
            .find(|s| matches!(s.status, StageStatus::Failed(_)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Plain-text rendering of the same numbers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run report (seed {})", self.seed);
        if let (Some(n), Some(p)) = (self.n, self.provider) {
            let _ = writeln!(s, "  qubits: {n}, provider: {p:?}");
        }
        if let Some(c) = &self.constants {
            let _ = writeln!(
                s,
                "  constants: gamma={:.4} eta={:.4} tau={:.3e} L={} rho_min={:.1e} groups={} fit={:?}",
                c.gamma, c.eta, c.tau, c.l, c.rho_min, c.groups, c.fit
            );
        }
        if let Some(c) = &self.conditions {
            let _ = writeln!(s, "  model conditions: {} violation(s)", c.violations.len());
        }
        if !self.schedule.is_empty() {
            let ks: Vec<String> = self.schedule.iter().map(|e| format!("k={}:{}", e.k, e.shots)).collect();
            let _ = writeln!(s, "  schedule: {} (total {} shots)", ks.join(" "), self.shots_consumed);
        }
        if self.estimated_paulis > 0 {
            let _ = writeln!(
                s,
                "  estimated eigenvalues: {} over {} supports",
                self.estimated_paulis, self.estimated_supports
            );
        }
        if let Some(a) = &self.alpha_errors {
            let _ = writeln!(
                s,
                "  eigenvalue error: max {:.5}, rms {:.5}, flagged {}",
                a.max_abs_error, a.rms_error, a.flagged
            );
        }
        if let Some(v) = &self.structure {
            let _ = writeln!(
                s,
                "  structure: {} (missing {:?}, extra {:?}, {} asymmetry warning(s))",
                if v.exact { "exact" } else { "mismatch" },
                v.missing_edges,
                v.extra_edges,
                v.asymmetry_warnings
            );
        }
        if let Some(e) = self.theta_error {
            let _ = writeln!(s, "  max coefficient error: {e:.6}");
        }
        if !self.spurious.is_empty() {
            let sp: Vec<String> = self.spurious.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(s, "  weak candidates: {}", sp.join(" "));
        }
        if let Some(d) = &self.distance {
            let _ = writeln!(
                s,
                "  tv: {:.6}, diamond: {:.6}{}",
                d.tv,
                d.diamond,
                if d.proxy { " (regional proxy)" } else { "" }
            );
        }
        for st in &self.stages {
            let status = match &st.status {
                StageStatus::Ok => "ok".to_string(),
                StageStatus::Skipped => "skipped".to_string(),
                StageStatus::Failed(m) => format!("FAILED: {m}"),
            };
            let _ = writeln!(s, "  [{}] {status}", st.stage);
        }
        s
    }
}
