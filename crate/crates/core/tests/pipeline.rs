use std::process::Command;

use proptest::prelude::*;
use topoforge::classifier::DesignDatabase;
use topoforge::config::{Band, RunConfig};
use topoforge::export::{export, Artifact};
use topoforge::pipeline::{fit_scaling, run_full, run_with, RunReport, StartSource};
use topoforge::simbackend::{load_tabulated, EvalCount, Simulator};

fn config(dir: &std::path::Path, seed: u64) -> RunConfig {
    RunConfig {
        seed,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn same_seed_gives_the_same_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_full(&config(a.path(), 4)).unwrap();
    let rb = run_full(&config(b.path(), 4)).unwrap();
    assert_eq!(ra.hash().unwrap(), rb.hash().unwrap());
    let reloaded = RunReport::load(&a.path().join("report.json")).unwrap();
    assert_eq!(reloaded.hash().unwrap(), ra.hash().unwrap());
}

#[test]
fn reported_costs_match_the_counter() {
    let cfg = RunConfig::default();
    let sim = Simulator::mock();
    let model = fit_scaling(&cfg, &sim).unwrap();
    let scaling = sim.counts();
    let mut db = DesignDatabase::in_memory();
    let r = run_with(&cfg, &sim, &mut db, &model, scaling).unwrap();
    let c = &r.costs;
    assert_eq!(c.total, sim.counts());
    assert_eq!(c.scaling + c.classification + c.optimization, c.total);
    // A generated start point also needs its initial coarse response, which
    // is charged to optimization ahead of the stages.
    let stage_sum = r.stages.iter().fold(EvalCount::default(), |acc, s| acc + s.counts);
    let initial = match r.start.source {
        StartSource::Generated => EvalCount { n_coarse: 1, n_fine: 0 },
        StartSource::WarmStart => EvalCount::default(),
    };
    assert_eq!(stage_sum + initial, c.optimization);
    assert!((c.fine_equivalent - (c.total.n_coarse as f64 * 60.0 / 110.0 + c.total.n_fine as f64)).abs() <= 1e-9);
}

#[test]
fn exported_curves_match_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_full(&config(dir.path(), 1)).unwrap();
    let out = dir.path().join("artifacts");
    let files = export(&r, Artifact::Curves, &out, "x_f").unwrap();
    assert_eq!(files.len(), 3);
    let fine = load_tabulated(&out.join("fine-opt.csv")).unwrap();
    assert_eq!(fine.freqs, r.curves.frequencies);
    assert_eq!(fine.values, r.curves.fine_opt);
    let table = export(&r, Artifact::Table, &out, "x_f").unwrap();
    let text = std::fs::read_to_string(&table[0]).unwrap();
    assert!(text.starts_with("design,a1_mm,f_low_ghz,f_high_ghz,bw_ghz,bw_percent"));
    let geometry = export(&r, Artifact::Geometry, &out, "x_f").unwrap();
    assert!(std::fs::read_to_string(&geometry[0]).unwrap().contains("<polygon"));
}

#[test]
fn cli_exit_code_reflects_the_goal() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_topoforge");
    let ok = Command::new(bin)
        .args(["--seed", "0", "--output-dir"])
        .arg(dir.path().join("ok"))
        .arg("run")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    // An unreachable goal with a small budget must report failure.
    let fail = Command::new(bin)
        .args(["--seed", "0", "--r-max", "-39.5", "--r-goal", "-39", "--budget-coarse-eq", "400", "--output-dir"])
        .arg(dir.path().join("fail"))
        .arg("run")
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(2));
    let report = RunReport::load(&dir.path().join("fail/report.json")).unwrap();
    assert!(!report.meets_goal);
}

#[test]
fn cli_rejects_bad_arguments() {
    let bin = env!("CARGO_BIN_EXE_topoforge");
    let out = Command::new(bin).args(["--band", "6:5", "run"]).output().unwrap();
    assert!(!out.status.success());
    let out = Command::new(bin).args(["yield", "--dist", "gaussian:-1", "--design", "1 2 3"]).output().unwrap();
    assert!(!out.status.success());
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    (
        (1.0f64..8.0, 0.2f64..2.0),
        -9.0f64..-1.0,
        (-20.0f64..-12.0, 0.0f64..3.0),
        20.0f64..40.0,
        0..=i64::MAX as u64,
        (0.005f64..0.05, 0.5f64..2.0),
        (100.0f64..5000.0, 1usize..2000),
    )
        .prop_map(|(band, e_t, (r_max, gap), c0, seed, (sigma, lambda0), (budget, cands))| {
            let mut cfg = RunConfig {
                band: Band::new(band.0, band.0 + band.1).unwrap(),
                e_t,
                r_max,
                r_goal: r_max + gap,
                c0,
                seed,
                sigma,
                lambda0,
                ..RunConfig::default()
            };
            cfg.budgets.total_coarse_eq = budget;
            cfg.budgets.max_candidates = cands;
            cfg
        })
}

#[test]
fn seeds_beyond_the_config_format_are_rejected() {
    let cfg = RunConfig { seed: u64::MAX, ..RunConfig::default() };
    assert!(cfg.validate().is_err());
}

proptest! {
    #[test]
    fn config_text_round_trips(cfg in run_config()) {
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}
