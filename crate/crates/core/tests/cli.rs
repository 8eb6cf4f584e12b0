use std::path::Path;
use std::process::{Command, Output};

fn lowzero(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowzero")).args(args).env_remove("LOWZERO_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn omega_min_default_is_the_closed_form() {
    let o = lowzero(&["omega-min"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.250000");
}

#[test]
fn even_omega_level_is_a_usage_error() {
    let o = lowzero(&["omega-min", "--n-level", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("odd"));
}

#[test]
fn percent_cells() {
    let o = lowzero(&["percent", "--n-level", "2", "--r", "6", "--rho", "0.4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.111085");

    let o = lowzero(&["percent", "--n-level", "4", "--r", "2", "--rho", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim().starts_with("N/A"));

    let o = lowzero(&["percent", "--n-level", "2", "--r", "3", "--rho", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r is an even number"), "{}", stderr(&o));
}

#[test]
fn bad_flags_and_help() {
    assert_eq!(lowzero(&["percent", "--rho", "0.4"]).status.code(), Some(2));
    assert_eq!(lowzero(&["table", "--table", "4"]).status.code(), Some(2));
    assert_eq!(lowzero(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(lowzero(&["--help"]).status.code(), Some(0));
}

#[test]
fn table_csv_and_figure_data() {
    let dir = tempfile::tempdir().unwrap();
    let fig = dir.path().join("fig");
    let o = lowzero(&["table", "--table", "2", "--figure-data", fig.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "r,level2,level4,level6");
    assert_eq!(lines.count(), 9);
    for n in [2, 4, 6] {
        let body = std::fs::read_to_string(fig.join(format!("level{n}.csv"))).unwrap();
        assert_eq!(body.lines().next().unwrap(), "r,percent");
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn rmt_check_is_reproducible() {
    let args = ["rmt-check", "--matrix-size", "6", "--samples", "200", "--seed", "3"];
    let a = lowzero(&args);
    let b = lowzero(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("\"comparisons\""));
}

#[test]
fn manifest_replay_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let manifest = dir.path().join("run.json");
    let o = lowzero(&[
        "percent",
        "--n-level",
        "2,4",
        "--rho",
        "0.2",
        "--output",
        out.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = read(&out);
    let json: serde_json::Value = serde_json::from_str(&read(&manifest)).unwrap();
    assert_eq!(json["subcommand"], "percent");
    assert!(json["tool_version"].is_string());
    assert!(json["wall_clock_seconds"].is_number());

    std::fs::remove_file(&out).unwrap();
    let o = lowzero(&["replay", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(&out), first);
}

#[test]
fn default_manifest_sits_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.txt");
    let o = lowzero(&["omega-min", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read(&out).trim(), "0.250000");
    assert!(dir.path().join("w.txt.manifest.json").exists());
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["percent", "--n-level", "2,4,6", "--rho", "0.4"];
    let base = lowzero(&args);
    let mut one = vec!["--threads", "1"];
    one.extend(args);
    let single = lowzero(&one);
    let env = Command::new(env!("CARGO_BIN_EXE_lowzero")).args(args).env("LOWZERO_THREADS", "3").output().unwrap();
    assert_eq!(base.status.code(), Some(0));
    assert_eq!(base.stdout, single.stdout);
    assert_eq!(base.stdout, env.stdout);

    let rmt = ["rmt-check", "--matrix-size", "5", "--samples", "120"];
    let mut rmt1 = vec!["--threads", "1"];
    rmt1.extend(rmt);
    let mut rmt4 = vec!["--threads", "4"];
    rmt4.extend(rmt);
    assert_eq!(lowzero(&rmt1).stdout, lowzero(&rmt4).stdout);
}

#[test]
fn quick_selftest_passes() {
    let o = lowzero(&["selftest", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
