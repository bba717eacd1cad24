use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn topology(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../topologies").join(name)
}

fn rnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnc")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_a_report_that_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("rs.txt");
    let json = dir.path().join("rs.json");
    let topo = topology("c3.topo");
    let out = rnc(&[
        "run", "--scheme", "rs", "--topology", path(&topo), "--trials", "20", "--adversary", "random,replay",
        "--seed", "9", "--out", path(&report), "--json", path(&json),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("scheme: rs\nq: 251\n"));
    assert!(text.contains("\nseed: 9\n"));
    let value: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(value["metrics"]["trials"], 20);

    let check = rnc(&["rerun", path(&report), "--check", "--sequential", "--out", path(&dir.path().join("again.txt"))]);
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));

    std::fs::write(&report, text.replace("\nsuccess_rate: ", "\nsuccess_rate: 9")).unwrap();
    let tampered = rnc(&["rerun", path(&report), "--check", "--out", path(&dir.path().join("third.txt"))]);
    assert_eq!(tampered.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_status_two() {
    let topo = topology("c3.topo");
    for args in [
        vec!["run", "--scheme", "nope", "--topology", path(&topo)],
        vec!["run", "--scheme", "omn", "--topology", path(&topo), "--z", "2"],
        vec!["run", "--scheme", "rs", "--topology", "/nonexistent.topo"],
        vec!["run", "--scheme", "rs", "--topology", path(&topo), "--adversary", "mystery"],
        vec!["run", "--scheme", "rs", "--topology", path(&topo), "--q", "250"],
    ] {
        let out = rnc(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn sweep_prints_a_table_and_cell_reports() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(
        &grid,
        format!(
            "[base]\nscheme = \"omn\"\ntopology = \"{}\"\ntrials = 10\n\n[grid]\nz = [0, 1]\n",
            path(&topology("c3.topo"))
        ),
    )
    .unwrap();
    let reports = dir.path().join("cells");
    let out = rnc(&["sweep", "--grid", path(&grid), "--reports", path(&reports)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(reports.join("cell-001.txt").exists());
}

#[test]
fn profile_and_keygen() {
    let out = rnc(&["profile", "--topology", path(&topology("butterfly.topo"))]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("C: 2\nsink_capacities: 2,2\n"));

    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("alice");
    let out = rnc(&["keygen", "--k", "32", "--seed", "4", "--out", path(&prefix)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sk = std::fs::read_to_string(dir.path().join("alice.sk")).unwrap();
    let pk = std::fs::read_to_string(dir.path().join("alice.pk")).unwrap();
    let sk = resilient_nc::cryptokit::SecretKey::from_file_str(&sk).unwrap();
    assert_eq!(sk.public_key().to_file_string(), pk);
}
