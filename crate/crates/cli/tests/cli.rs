//! End-to-end runs of the `asep` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use asep_cli::output::{read_manifest, read_rows, MANIFEST, RESULTS};

const MIXING: &str = "\
experiment = mixing-scaling
reps = 20
master_seed = 11
# small decks keep this quick
[params]
N = 4, 8
p = 0.75
[thresholds]
ratio_min = 0
ratio_max = 100
slope_min = -10
slope_max = 10
";

fn asep(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asep"))
        .args(args)
        .env("ASEP_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn same_config_gives_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.conf", MIXING);
    let (r1, r2) = (tmp.path().join("one"), tmp.path().join("two"));
    assert_eq!(asep(&r1, &["run", &cfg]).status.code(), Some(0));
    assert_eq!(asep(&r2, &["run", &cfg]).status.code(), Some(0));
    let csv = |r: &Path| fs::read(r.join("mixing-scaling").join(RESULTS)).unwrap();
    assert_eq!(csv(&r1), csv(&r2));

    // the thread count never changes the bytes
    let single = write_config(
        tmp.path(),
        "b.conf",
        &MIXING.replace("reps = 20", "reps = 20\nthreads = 1"),
    );
    let r3 = tmp.path().join("three");
    assert_eq!(asep(&r3, &["run", &single]).status.code(), Some(0));
    assert_eq!(csv(&r1), csv(&r3));

    let m1 = read_manifest(&r1.join("mixing-scaling")).unwrap();
    let m2 = read_manifest(&r2.join("mixing-scaling")).unwrap();
    assert_eq!(m1.seeds, m2.seeds);
    assert_eq!(m1.files, m2.files);
    assert_eq!(m1.seeds.len(), 20);
    assert_eq!(m1.seeds[3], asep_core::stream::replica_seed(11, 3));
}

#[test]
fn zero_reps_still_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "z.conf", &MIXING.replace("reps = 20", "reps = 0"));
    let out = asep(tmp.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dir = tmp.path().join("mixing-scaling");
    let m = read_manifest(&dir).unwrap();
    assert!(m.seeds.is_empty());
    assert!(read_rows(&dir.join(RESULTS)).unwrap().is_empty());
}

#[test]
fn exact_crosscheck_reproduces_three_site_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "x.conf",
        "experiment = exact-crosscheck\nreps = 0\nmaster_seed = 1\n[params]\nchain = exclusion\nN = 3\nk = 1\np = 0.6666666666666666\n",
    );
    let out = asep(tmp.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = read_rows(&tmp.path().join("exact-crosscheck").join(RESULTS)).unwrap();
    for (label, w) in [("100", 4.0 / 7.0), ("010", 2.0 / 7.0), ("001", 1.0 / 7.0)] {
        let pi = rows.iter().find(|r| r.metric == format!("pi:{label}")).unwrap();
        assert!((pi.value - w).abs() < 1e-9, "{label}: {}", pi.value);
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.conf", &MIXING.replace("p = 0.75", "p = 1.5"));
    let out = asep(tmp.path(), &["run", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("line 7") && stderr(&out).contains("`p`"),
        "{}",
        stderr(&out)
    );

    let failing = write_config(
        tmp.path(),
        "fail.conf",
        &MIXING.replace("slope_max = 10", "slope_max = 0.1"),
    );
    assert_eq!(asep(tmp.path(), &["run", &failing]).status.code(), Some(1));
    // the verdict is reproduced from disk
    assert_eq!(
        asep(tmp.path(), &["summarize", tmp.path().to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    assert_eq!(asep(tmp.path(), &["run", "/nonexistent/config"]).status.code(), Some(2));
    assert_eq!(asep(tmp.path(), &[]).status.code(), Some(2));
    assert_eq!(asep(tmp.path(), &["oracle", "dice"]).status.code(), Some(2));
}

#[test]
fn corrupted_csv_is_a_schema_error_with_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.conf", MIXING);
    assert_eq!(asep(tmp.path(), &["run", &cfg]).status.code(), Some(0));
    let csv = tmp.path().join("mixing-scaling").join(RESULTS);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[4] = "3,17,N=4;p=0.75,coalesce_time,not-a-number,0".into();
    fs::write(&csv, lines.join("\n") + "\n").unwrap();
    let out = asep(tmp.path(), &["summarize", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 5"), "{}", stderr(&out));
}

#[test]
fn summarize_of_an_empty_directory_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = asep(tmp.path(), &["summarize", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn incomplete_directories_are_ignored() {
    let tmp = tempfile::tempdir().unwrap();
    let failing = write_config(
        tmp.path(),
        "f.conf",
        &MIXING.replace("slope_max = 10", "slope_max = 0.1"),
    );
    assert_eq!(asep(tmp.path(), &["run", &failing]).status.code(), Some(1));
    fs::remove_file(tmp.path().join("mixing-scaling").join(MANIFEST)).unwrap();
    let out = asep(tmp.path(), &["summarize", tmp.path().to_str().unwrap()]);
    // the failing run no longer counts
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("incomplete"));
    assert!(out.stdout.is_empty());
}

#[test]
fn summarize_rebuilds_the_run_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.conf", MIXING);
    let run = asep(tmp.path(), &["run", &cfg]);
    let sum = asep(
        tmp.path(),
        &["summarize", tmp.path().join("mixing-scaling").to_str().unwrap()],
    );
    assert_eq!(sum.status.code(), Some(0));
    let table = String::from_utf8_lossy(&sum.stdout);
    assert!(String::from_utf8_lossy(&run.stdout).starts_with(table.as_ref()));
    assert!(table.contains("log-log slope"));
}

#[test]
fn tampered_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.conf", MIXING);
    assert_eq!(asep(tmp.path(), &["run", &cfg]).status.code(), Some(0));
    let saved = tmp.path().join("mixing-scaling").join("config.txt");
    fs::write(&saved, MIXING.replace("slope_max = 10", "slope_max = 11")).unwrap();
    let out = asep(tmp.path(), &["summarize", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("hash"), "{}", stderr(&out));
}

#[test]
fn oracle_prints_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = asep(tmp.path(), &["oracle", "cards", "N=3", "p=0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["states"], 6);
    assert!((v["stationary"]["1,2,3"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    let out = asep(tmp.path(), &["oracle", "blocking", "p=0.75", "n_max=3"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let tail: Vec<f64> = (0..4)
        .map(|n| v["tail"][n]["P(rightmost particle > n)"].as_f64().unwrap())
        .collect();
    assert!(tail.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "{tail:?}");
}
