use std::path::PathBuf;
use std::sync::atomic::AtomicBool;

use proptest::prelude::*;
use resilient_nc::adversary::StrategyKind;
use resilient_nc::harness::{self, run_sweep, run_trial, Executor, Grid, Plan, Report, TrialConfig};

fn topologies() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../topologies")
}

fn config(scheme: &str, topo: &str, settings: &[(&str, &str)]) -> TrialConfig {
    let mut c = TrialConfig::default();
    c.set("scheme", scheme).unwrap();
    c.load_topology(topologies().join(topo)).unwrap();
    for (k, v) in settings {
        c.set(k, v).unwrap();
    }
    c
}

#[test]
fn zero_trials_report_empty_metrics() {
    let r = harness::run(&config("rs", "c3.topo", &[("trials", "0")]), Executor::default()).unwrap();
    let m = &r.metrics;
    assert_eq!((m.completed_trials, m.total.trials, m.e_bad_count), (0, 0, 0));
    assert_eq!((m.success_rate, m.wrong_message_rate, m.decode_failure_rate), (0.0, 0.0, 0.0));
    assert!(!m.interrupted);
}

#[test]
fn report_starts_with_the_fixed_fields() {
    let r = harness::run(&config("omn", "c3.topo", &[("trials", "3")]), Executor::default()).unwrap();
    let keys: Vec<String> = r.lines().into_iter().take(14).map(|(k, _)| k).collect();
    let expected = [
        "scheme", "q", "b", "n", "C", "delta_latency", "z", "trials", "success_rate",
        "wrong_message_rate", "decode_failure_rate", "achieved_rate", "e_bad_count", "seed",
    ];
    assert_eq!(keys, expected);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["metrics"]["C"], 3);
    assert_eq!(json["config"]["scheme"], "omn");
}

#[test]
fn reports_rerun_byte_identically() {
    for c in [
        config("rs", "c3.topo", &[("adversary", "random,forger"), ("trials", "25"), ("seed", "17")]),
        config("co", "c4.topo", &[("n", "128"), ("trials", "10")]),
        config("session", "c3.topo", &[("sessions", "4"), ("trials", "10")]),
    ] {
        let text = harness::run(&c, Executor::Parallel).unwrap().to_text();
        assert_eq!(harness::rerun(&text, Executor::Sequential).unwrap().to_text(), text);
        assert_eq!(Report::parse_config(&text).unwrap(), c);
    }
}

#[test]
fn cancelled_runs_write_a_partial_report() {
    let c = config("rs", "c3.topo", &[("trials", "20")]);
    let r = harness::run_with_cancel(&c, Executor::Sequential, &AtomicBool::new(true)).unwrap();
    assert!(r.metrics.interrupted);
    assert_eq!(r.metrics.completed_trials, 0);
    assert!(r.to_text().contains("interrupted: true\n"));
}

#[test]
fn sweep_over_z_covers_every_cell() {
    let grid = Grid::parse(
        "[base]\ntopology = \"c3.topo\"\ntrials = 20\nadversary = \"random\"\n\n[grid]\nscheme = [\"omn\", \"rs\"]\nz = [0, 1]\n",
        topologies(),
    )
    .unwrap();
    let table = run_sweep(&grid, Executor::default()).unwrap();
    assert_eq!(table.cells.len(), 4);
    let text = table.to_text();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("scheme\tz\tsuccess_rate"));
    for cell in &table.cells {
        let m = &cell.report.metrics;
        assert_eq!(m.z.to_string(), cell.assignments[1].1);
        if m.z == 0 {
            assert!(m.controlled_edges.is_empty());
            assert_eq!(m.wrong_message_rate, 0.0);
        }
    }
}

#[test]
fn empty_grid_has_no_cells() {
    let grid = Grid::parse("[base]\nscheme = \"rs\"\n", topologies()).unwrap();
    assert!(run_sweep(&grid, Executor::default()).unwrap().cells.is_empty());
    assert!(Grid::parse("", ".").unwrap().cells().unwrap().is_empty());
}

#[test]
fn invalid_sweep_cells_fail_before_running() {
    let grid = Grid::parse("[base]\nscheme = \"omn\"\ntopology = \"c3.topo\"\n[grid]\nz = [1, 2]\n", topologies()).unwrap();
    assert!(run_sweep(&grid, Executor::default()).unwrap_err().is_config());
    assert!(Grid::parse("[grid]\nz = 1\n", ".").is_err());
    assert!(Grid::parse("[other]\n", ".").is_err());
}

#[test]
fn long_sessions_stay_correct() {
    let r = harness::run(
        &config("session", "c3.topo", &[("sessions", "20"), ("q", "65521"), ("trials", "10")]),
        Executor::default(),
    )
    .unwrap();
    let t = &r.metrics.total;
    assert_eq!(t.executions, 200);
    assert!(t.execution_success_rate() >= 0.95, "{}", t.execution_success_rate());
}

#[test]
fn causal_adversary_against_co_decodes() {
    let r = harness::run(
        &config("co", "c4.topo", &[("q", "65521"), ("n", "128"), ("adversary", "random,forger"), ("trials", "100")]),
        Executor::default(),
    )
    .unwrap();
    assert!(r.metrics.knowledge.starts_with("causal("), "{}", r.metrics.knowledge);
    assert!(r.metrics.success_rate >= 0.99);
}

#[test]
fn stolen_secret_key_breaks_pk() {
    let run = |knowledge: &str| {
        harness::run(
            &config(
                "pk",
                "c4.topo",
                &[("b", "4"), ("q", "65521"), ("n", "256"), ("adversary", "forger"), ("knowledge", knowledge), ("trials", "200")],
            ),
            Executor::default(),
        )
        .unwrap()
        .metrics
    };
    let blind = run("secret-excluded");
    let keyed = run("omniscient");
    assert!(blind.wrong_message_rate <= 0.01, "{}", blind.wrong_message_rate);
    assert!(keyed.wrong_message_rate >= 0.5, "{}", keyed.wrong_message_rate);
}

#[test]
fn rs_survives_replay_and_blind_forging() {
    let r = harness::run(
        &config("rs", "c3.topo", &[("n", "32"), ("adversary", "replay,forger"), ("trials", "1000"), ("seed", "1")]),
        Executor::default(),
    )
    .unwrap();
    assert_eq!(r.metrics.knowledge, "secret-excluded");
    assert!(r.metrics.e <= 0.01);
    let replay = r.metrics.strategy("replay").unwrap();
    assert!(replay.success_rate() >= 0.95, "{}", replay.success_rate());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trials_are_pure_functions_of_config_and_index(seed in any::<u64>(), index in 0u64..1000, k in 0usize..5) {
        let mut c = config("rs", "c3.topo", &[]);
        c.seed = seed;
        let plan = Plan::new(&c).unwrap();
        let kind = StrategyKind::ALL[k];
        prop_assert_eq!(run_trial(&plan, kind, index).unwrap(), run_trial(&plan, kind, index).unwrap());
    }

    #[test]
    fn executors_agree(seed in any::<u64>(), trials in 0u64..12) {
        let mut c = config("sc", "c3.topo", &[("adversary", "random,additive")]);
        c.seed = seed;
        c.trials = trials;
        prop_assert_eq!(
            harness::run(&c, Executor::Sequential).unwrap(),
            harness::run(&c, Executor::Parallel).unwrap()
        );
    }
}
