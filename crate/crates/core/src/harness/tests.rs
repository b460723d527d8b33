use super::*;
use crate::channel::ScheduleEntry;
use crate::model::ModelSpec;

fn config(dir: &Path, provider: ProviderMode) -> ExperimentConfig {
    ExperimentConfig {
        seed: 7,
        model: ModelSource::Spec(ModelSpec::chain(4, 0.4, 0.4)),
        spam: SpamSpec::default(),
        schedule: Some(vec![
            ScheduleEntry { k: 1, shots: 20_000 },
            ScheduleEntry { k: 2, shots: 20_000 },
        ]),
        provider,
        settings: Settings {
            tau: Some(0.004),
            l: Some(3),
            ..Settings::default()
        },
        output_dir: dir.to_path_buf(),
    }
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn reruns_reproduce_every_artifact() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_pipeline(config(a.path(), ProviderMode::Protocol)).unwrap();
    let rb = run_pipeline(config(b.path(), ProviderMode::Protocol)).unwrap();
    assert_eq!(ra, rb);
    let (fa, fb) = (Artifacts::new(a.path()), Artifacts::new(b.path()));
    for (x, y) in [
        (fa.model(), fb.model()),
        (fa.bank(), fb.bank()),
        (fa.alphas(), fb.alphas()),
        (fa.structure(), fb.structure()),
        (fa.learned(), fb.learned()),
        (fa.report_json(), fb.report_json()),
        (fa.report_text(), fb.report_text()),
    ] {
        assert_eq!(read(x), read(y));
    }
    assert!(ra.failed().is_none());
    assert_eq!(ra.shots_consumed, 40_000);
    assert!(ra.estimated_paulis > 0);
    assert!(ra.alpha_errors.is_some());
}

#[test]
fn resuming_reuses_artifacts_and_matches() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_pipeline(config(dir.path(), ProviderMode::Protocol)).unwrap();
    let art = Artifacts::new(dir.path());
    let report = read(art.report_json());
    std::fs::remove_file(art.report_json()).unwrap();
    std::fs::remove_file(art.learned()).unwrap();
    let mut run = Run::new(config(dir.path(), ProviderMode::Protocol)).unwrap();
    run.run_until(Stage::Evaluate).unwrap();
    assert_eq!(run.report, first);
    assert_eq!(read(art.report_json()), report);
    let loaded: Vec<Stage> = run.timings.iter().filter(|t| t.loaded).map(|t| t.stage).collect();
    assert!(loaded.contains(&Stage::Model));
    assert!(loaded.contains(&Stage::Simulate));
    assert!(loaded.contains(&Stage::Structure));
    assert!(!loaded.contains(&Stage::Coefficients));
}

#[test]
fn stale_bank_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path(), ProviderMode::Protocol);
    Run::new(c.clone()).unwrap().run_until(Stage::Simulate).unwrap();
    c.schedule = Some(vec![ScheduleEntry { k: 1, shots: 10 }]);
    let err = Run::new(c).unwrap().run_until(Stage::Simulate).unwrap_err();
    assert!(matches!(err, HarnessError::Stage { stage: Stage::Simulate, .. }));
    let report: RunReport = serde_json::from_str(&read(Artifacts::new(dir.path()).report_json())).unwrap();
    assert!(matches!(report.failed().unwrap().status, StageStatus::Failed(_)));
}

#[test]
fn exact_provider_skips_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(config(dir.path(), ProviderMode::Exact)).unwrap();
    let art = Artifacts::new(dir.path());
    assert!(!art.bank().exists());
    assert!(!art.alphas().exists());
    assert!(report.structure.as_ref().unwrap().exact, "{}", report.to_text());
    assert!(report.theta_error.unwrap() < 1e-10, "{}", report.to_text());
    assert!(report.distance.unwrap().tv < 1e-10);
    let skipped: Vec<&str> = report
        .stages
        .iter()
        .filter(|s| s.status == StageStatus::Skipped)
        .map(|s| s.stage.as_str())
        .collect();
    assert_eq!(skipped, ["simulate", "estimate"]);
}

#[test]
fn estimate_stage_covers_all_low_weight_paulis() {
    let dir = tempfile::tempdir().unwrap();
    let mut run = Run::new(config(dir.path(), ProviderMode::Protocol)).unwrap();
    let table = run.stage_estimate_all().unwrap();
    // 4 * 3 weight-one plus 6 * 9 weight-two.
    assert_eq!(table.len(), 66);
    assert_eq!(paulis_up_to_weight(4, 2).len(), 66);
    assert_eq!(run.report.estimated_supports, 10);
    assert!(Artifacts::new(dir.path()).alphas().exists());
}

#[test]
fn default_schedule_is_capped() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path(), ProviderMode::Protocol);
    c.schedule = None;
    c.settings.max_shots = 30_000;
    let mut run = Run::new(c).unwrap();
    let schedule = run.schedule().unwrap();
    assert!(!schedule.is_empty());
    assert!(schedule.iter().map(|e| e.shots).sum::<u64>() <= 30_000);
    assert_eq!(schedule[0].k, 1);
    assert_eq!(run.report.budget_capped, Some(true));
}

#[test]
fn invalid_configs_are_rejected() {
    let ok = ExperimentConfig::example().to_json();
    assert_eq!(ExperimentConfig::from_json(&ok).unwrap(), ExperimentConfig::example());
    for bad in [
        r#"{"model": {"spec": {"topology": {"kind": "chain"}, "n": 4, "r": 2, "alpha": 0.4, "beta": 0.4}}}"#,
        r#"{"seed": 1, "model": {"spec": {"topology": {"kind": "chain"}, "n": 4, "r": 2, "alpha": 0.5, "beta": 0.4}}}"#,
        r#"{"seed": 1, "model": {"file": "m.json"}, "schedule": []}"#,
        r#"{"seed": 1, "model": {"file": "m.json"}, "schedule": [{"k": 1, "shots": 5}, {"k": 1, "shots": 5}]}"#,
        r#"{"seed": 1, "model": {"file": "m.json"}, "settings": {"tau": 2.0}}"#,
        r#"{"seed": 1, "model": {"file": "m.json"}, "colour": "blue"}"#,
    ] {
        assert!(matches!(ExperimentConfig::from_json(bad), Err(HarnessError::Config(_))), "{bad}");
    }
    let spam = SpamSpec {
        prep: PerQubit::Each(vec![0.01, 0.02]),
        meas: PerQubit::Uniform(0.0),
    };
    assert!(spam.build(3).is_err());
    assert!(spam.build(2).is_ok());
}

#[test]
fn relative_paths_follow_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::example();
    c.model = ModelSource::File("truth.json".into());
    let path = dir.path().join("exp.json");
    std::fs::write(&path, c.to_json()).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!(loaded.output_dir, dir.path().join("run"));
    assert_eq!(loaded.model, ModelSource::File(dir.path().join("truth.json")));
}

#[test]
fn describe_lists_the_defaults() {
    let text = describe();
    assert!(text.contains("\"seed\": 1"));
    assert!(text.contains("settings.gauge"));
}
