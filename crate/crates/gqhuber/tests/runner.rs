use std::path::Path;

use gqhuber::config::{ExperimentConfig, Plan};
use gqhuber::records::{read_records, to_csv_bytes};
use gqhuber::runner::{
    assemble, run_plan, run_single, write_outputs, RunOutcome, RECORDS_FILE, SUMMARY_FILE,
};
use gqhuber::summary::{read_summary, STATUS_FAILED, STATUS_OK};

fn plan(arms: &str, epochs: usize, seeds: usize) -> Plan {
    let text = format!(
        r#"{{
  "environment": {{ "kind": "chain", "length": 3, "rewards": [[-1, 0.5], [1, 0.5]] }},
  "arms": [{arms}],
  "train": {{ "epochs": {epochs}, "steps_per_epoch": 20, "n_quantiles": 8 }},
  "seeds": {seeds},
  "threshold": {{ "metric": "w1_oracle", "value": 0.5, "direction": "below" }}
}}"#
    );
    ExperimentConfig::parse(&text, "t.json")
        .unwrap()
        .resolve(Path::new("."))
        .unwrap()
}

const TWO: &str = r#"{ "variant": "qr" }, { "variant": "gl", "adaptive": true }"#;
const THREE: &str = r#"{ "variant": "qr" }, { "variant": "quantile_huber", "threshold": 0.5 }, { "variant": "gl", "adaptive": true }"#;

#[test]
fn one_row_per_arm_seed_epoch() {
    let p = plan(TWO, 7, 5);
    let out = run_plan(&p, Some(3)).unwrap();
    assert_eq!(out.rows.len(), 2 * 5 * 7);
    assert!(out.failures.is_empty());
    assert!(!out.all_failed());
    let mut expected = Vec::new();
    for arm in ["qr", "gl-adaptive"] {
        for seed in 0..5u64 {
            for epoch in 1..=7 {
                expected.push((arm.to_string(), seed, epoch));
            }
        }
    }
    let got: Vec<_> = out
        .rows
        .iter()
        .map(|r| (r.arm.clone(), r.seed, r.epoch))
        .collect();
    assert_eq!(got, expected);
    assert!(out.rows.iter().all(|r| r.ms == 0 && r.w1_oracle.is_some()));
}

#[test]
fn worker_count_does_not_change_results() {
    let p = plan(TWO, 4, 3);
    let a = to_csv_bytes(&run_plan(&p, Some(1)).unwrap().rows).unwrap();
    let b = to_csv_bytes(&run_plan(&p, Some(4)).unwrap().rows).unwrap();
    let c = to_csv_bytes(&run_plan(&p, None).unwrap().rows).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn adding_an_arm_leaves_others_untouched() {
    let small = run_plan(&plan(TWO, 5, 2), Some(2)).unwrap();
    let big = run_plan(&plan(THREE, 5, 2), Some(2)).unwrap();
    for arm in ["qr", "gl-adaptive"] {
        let a: Vec<_> = small
            .rows
            .iter()
            .filter(|r| r.arm == arm)
            .cloned()
            .collect();
        let b: Vec<_> = big.rows.iter().filter(|r| r.arm == arm).cloned().collect();
        assert!(!a.is_empty());
        assert_eq!(
            to_csv_bytes(&a).unwrap(),
            to_csv_bytes(&b).unwrap(),
            "arm {arm}"
        );
    }
}

#[test]
fn failed_arm_is_isolated() {
    let p = plan(THREE, 3, 2);
    let outcomes: Vec<RunOutcome> = p
        .runs()
        .into_iter()
        .map(|(arm, seed)| RunOutcome {
            arm,
            seed,
            result: if arm == 1 && seed == 1 {
                Err("diverged".to_string())
            } else {
                Ok(run_single(&p, arm, seed).unwrap())
            },
        })
        .collect();
    let out = assemble(&p, outcomes);
    assert_eq!(out.rows.len(), 2 * 2 * 3);
    assert!(out.rows.iter().all(|r| r.arm != "qh-k0.5"));
    assert_eq!(out.summary[1].status, STATUS_FAILED);
    assert_eq!(out.summary[1].error, "seed 1: diverged");
    assert_eq!(out.summary[0].status, STATUS_OK);
    assert_eq!(out.summary[2].status, STATUS_OK);
    assert!(!out.all_failed());
    let reference = run_plan(&p, Some(2)).unwrap();
    let kept: Vec<_> = reference
        .rows
        .into_iter()
        .filter(|r| r.arm != "qh-k0.5")
        .collect();
    assert_eq!(out.rows, kept);
}

#[test]
fn all_failed_when_every_arm_fails() {
    let p = plan(TWO, 2, 1);
    let outcomes = p
        .runs()
        .into_iter()
        .map(|(arm, seed)| RunOutcome {
            arm,
            seed,
            result: Err("x".into()),
        })
        .collect();
    let out = assemble(&p, outcomes);
    assert!(out.all_failed());
    assert!(out.rows.is_empty());
}

#[test]
fn outputs_round_trip_through_files() {
    let p = plan(TWO, 3, 2);
    let out = run_plan(&p, Some(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(dir.path(), &p, &out).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            RECORDS_FILE,
            SUMMARY_FILE,
            "chart_loss.svg",
            "chart_w1_oracle.svg",
            "chart_risk.svg",
            "chart_b.svg"
        ]
    );
    assert_eq!(
        read_records(&dir.path().join(RECORDS_FILE)).unwrap(),
        out.rows
    );
    assert_eq!(
        read_summary(&dir.path().join(SUMMARY_FILE)).unwrap(),
        out.summary
    );
}
