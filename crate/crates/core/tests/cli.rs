use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glueshadow"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run_with(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.conf");
    std::fs::write(&path, body).unwrap();
    path
}

const NON_FULL: &str = "map.kind = piecewise_linear\nmap.a = 0.9\nmap.b = 2\nmap.c = 0.5\n\
glue.x0 = 0\nglue.y0 = 1\nglue.back_len = 20\nglue.fwd_len = 4\nglue.x_path = left\nrun.task = glue\n";

#[test]
fn shipped_configs_pass() {
    for name in [
        "shadow_doubling.conf",
        "glue_affine.conf",
        "rates_neutral.conf",
        "lemmas.conf",
        "envelope.conf",
    ] {
        let out = tempfile::tempdir().unwrap();
        let o = run_with(&config(name), out.path(), &[]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.starts_with("task,map,epsilon,D,seed,window,"), "{stdout}");
        assert!(stdout.trim_end().ends_with(",true"), "{name}: {stdout}");
        let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
        assert_eq!(summary, stdout);
    }
}

#[test]
fn seed_override_is_reproducible_and_changes_output() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let cfg = config("shadow_doubling.conf");
    run_with(&cfg, dirs[0].path(), &["--seed", "5", "--quiet"]);
    run_with(&cfg, dirs[1].path(), &["--seed", "5", "--quiet"]);
    let o = run_with(&cfg, dirs[2].path(), &["--seed", "6", "--quiet"]);
    assert!(o.stdout.is_empty());
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    for f in ["summary.csv", "shadow.csv", "levels.csv"] {
        assert_eq!(read(&dirs[0], f), read(&dirs[1], f), "{f}");
    }
    assert_ne!(read(&dirs[0], "shadow.csv"), read(&dirs[2], "shadow.csv"));
    assert!(String::from_utf8(read(&dirs[0], "summary.csv"))
        .unwrap()
        .contains(",5,"));
}

#[test]
fn usage_errors_exit_2() {
    let o = bin().output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.conf");
    assert_eq!(run_with(&missing, dir.path(), &[]).status.code(), Some(2));

    let cfg = write_config(
        dir.path(),
        "map.kind = doubling\nmap.colour = red\nrun.task = envelope\n",
    );
    let o = run_with(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let cfg = write_config(dir.path(), "run.task = envelope\n");
    assert_eq!(run_with(&cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn strict_gluing_on_non_full_map_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NON_FULL);
    let o = run_with(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().ends_with(",fail"), "{summary}");
}

#[test]
fn nearest_preimage_runs_but_fails_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{NON_FULL}glue.policy = nearest\n"));
    let o = run_with(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("glue.csv")).unwrap();
    assert!(csv.starts_with("k,error,bound_strong,bound_weak\n"));
}
