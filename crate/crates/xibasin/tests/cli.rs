//! Exercises the installed binary: argument handling, exit codes, and the
//! files a run leaves behind.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xibasin"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn tmpdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("xibasin-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn solve_writes_outputs_and_exits_zero() {
    let dir = tmpdir("solve");
    let cfg = write_config(&dir, "function=sin\nseeds=3,0.2\nmax_iter=60\n");
    let out = dir.join("out");
    let status = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{status:?}");
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("converged-root"));
    for f in ["config.txt", "summary.csv", "trajectory_000.csv", "report.txt"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    // resolved config echo round-trips through another run
    let echoed = out.join("config.txt");
    let out2 = dir.join("out2");
    let rerun = bin()
        .args(["solve", "--config"])
        .arg(&echoed)
        .arg("--out")
        .arg(&out2)
        .output()
        .unwrap();
    assert!(rerun.status.success());
    assert_eq!(
        std::fs::read(out.join("summary.csv")).unwrap(),
        std::fs::read(out2.join("summary.csv")).unwrap()
    );
}

#[test]
fn malformed_config_exits_2_naming_key() {
    let dir = tmpdir("badcfg");
    let cfg = write_config(&dir, "dps=abc\n");
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dps"));
}

#[test]
fn unknown_key_and_zero_grid_exit_2() {
    let dir = tmpdir("badkeys");
    let cfg = write_config(&dir, "frobnicate=1\n");
    let out = bin().args(["basins", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(&dir, "function=poly\npoly_roots=1,0;-1,0\nnx=0\n");
    let out = bin().args(["basins", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gated_experiment_exits_3() {
    let dir = tmpdir("gated");
    let cfg = write_config(&dir, "preset=exp2\n");
    let out = bin()
        .args(["experiment", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gated: long-running"));
}

#[test]
fn verify_rect_counts_roots() {
    let dir = tmpdir("verify");
    let cfg = write_config(
        &dir,
        "function=poly\npoly_roots=1,0;-1,0\nrect=0,2,-1,1\n",
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains(": 1"));
}

#[test]
fn verify_boundary_proximity_exits_1() {
    let dir = tmpdir("boundary");
    // second root hugs the contour just above the sample floor
    let cfg = write_config(
        &dir,
        "function=poly\npoly_roots=1,0;2.00000000000000000001,0.01\nrect=0,2,-1,1\ndps=50\n",
    );
    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary proximity"));
}

#[test]
fn missing_config_option_exits_2() {
    let out = bin().arg("solve").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn basins_render_matches_seeded_rerun() {
    let dir = tmpdir("basins");
    let cfg = write_config(
        &dir,
        "function=poly\npoly_roots=1,0;-1,0\nnx=8\nny=8\nx_min=-2\nx_max=2\ny_min=-2\ny_max=2\nmethod=bnqn\n",
    );
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out_dir in [&a, &b] {
        let out = bin()
            .args(["basins", "--config"])
            .arg(&cfg)
            .args(["--seed", "7", "--out"])
            .arg(out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{out:?}");
    }
    assert_eq!(
        std::fs::read(a.join("basins_bnqn.ppm")).unwrap(),
        std::fs::read(b.join("basins_bnqn.ppm")).unwrap()
    );
}
