use std::path::Path;
use std::process::Command;

fn pentrack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pentrack"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_csv_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "horizon = 300\nmetric_stride = 100\nnoise = \"gaussian\"\nnoise_std = 0.1\n");
    let out = dir.path().join("m.csv");
    let run = |seed: &str| {
        let st = pentrack()
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--seed", seed, "--out"])
            .arg(&out)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        std::fs::read_to_string(&out).unwrap()
    };
    let a = run("3");
    assert_eq!(a.lines().count(), 1 + 4);
    assert!(a.starts_with("t,gamma,phi_y,phi_proj,dist_G_sq,a_t,lemma1_resid,global_viol,local_viol_max\n"));
    assert_eq!(run("3"), a);
    assert_ne!(run("4"), a);
}

#[test]
fn bad_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "alpha = 0.5\nwhat = 1\n");
    let o = pentrack().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Assumption 4: alpha must be in (0.5, 1]"), "{err}");
    assert!(err.contains("unknown key `what`"), "{err}");

    let o = pentrack()
        .args(["run", "--allow-nonstandard-steps", "--config"])
        .arg(write(dir.path(), "d.toml", "alpha = 0.5\nhorizon = 10\n"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_reports_named_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "g.toml", "validate_samples = 100\n");
    let o = pentrack().args(["validate", "--config"]).arg(&good).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PASS Assumption 3"));

    let bad = write(dir.path(), "b.toml", "validate_samples = 100\ntopology = \"identity\"\n");
    let o = pentrack().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL Assumption 3 (Q-strong connectivity)"));
}

#[test]
fn oracle_then_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "targets = [6, 7, 8]\ncaps = [5, 5, 5]\nbudget = 9\nhorizon = 40\nmetric_stride = 20\n",
    );
    let o = pentrack()
        .args(["oracle", "--config"])
        .arg(&cfg)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("phi_star="));
    assert!(dir.path().join("oracle.toml").exists());

    let out = dir.path().join("s.csv");
    let o = pentrack()
        .args(["sweep", "--axis", "mu", "--values", "1,10,100", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3);

    let o = pentrack()
        .args(["sweep", "--axis", "lambda", "--values", "1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
