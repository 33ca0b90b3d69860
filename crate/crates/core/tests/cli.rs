use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn umc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_umc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("UMC_OUT")
        .output()
        .expect("binary runs")
}

const SYNTH: &str = r#"
[dataset]
seed = 4

[synthetic]
k = 3
dims = [4, 6]
samples_per_cluster = 10
separation = 8.0
std = 1.0

[train]
epochs = 4
batch_size = 16
hidden = [8]
latent_dim = 4
final_restarts = 2
"#;

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), config).unwrap();
    dir
}

#[test]
fn generate_is_reproducible() {
    let d = setup(SYNTH);
    let p = d.path();
    assert!(umc(&["generate", "--config", "c.toml", "--out", "a", "--quiet"], p).status.success());
    assert!(umc(&["generate", "--config", "c.toml", "--out", "b", "--quiet"], p).status.success());
    let mut names: Vec<String> = fs::read_dir(p.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["labels.csv", "manifest.toml", "view0.csv", "view1.csv"]);
    for n in &names {
        assert_eq!(fs::read(p.join("a").join(n)).unwrap(), fs::read(p.join("b").join(n)).unwrap());
    }
}

#[test]
fn missing_section_exits_with_config_error() {
    let d = setup("[train]\nepochs = 4\n");
    let out = umc(&["generate", "--config", "c.toml", "--out", "a"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("synthetic"));
    let d = setup("[train]\nepohcs = 4\n");
    let out = umc(&["train", "--config", "c.toml", "--out", "r"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epohcs"));
}

#[test]
fn train_writes_a_complete_run_directory() {
    let d = setup(SYNTH);
    let p = d.path();
    let out = umc(&["train", "--config", "c.toml", "--out", "run"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = String::from_utf8_lossy(&out.stderr);
    assert_eq!(log.lines().filter(|l| l.starts_with("epoch=")).count(), 4);
    for f in [
        "config.toml",
        "checkpoint.bin",
        "loss_curve.csv",
        "metrics.json",
        "metrics.csv",
        "embeddings.csv",
        "run_info.json",
    ] {
        assert!(p.join("run").join(f).exists(), "{f} missing");
    }
    let curve = fs::read_to_string(p.join("run/loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 5);
    let emb = fs::read_to_string(p.join("run/embeddings.csv")).unwrap();
    assert_eq!(emb.lines().count(), 61);
    assert_eq!(emb.lines().next().unwrap().split(',').count(), 4 + 4);

    // an existing run directory is refused without --force
    let again = umc(&["train", "--config", "c.toml", "--out", "run", "--quiet"], p);
    assert_eq!(again.status.code(), Some(2));

    // eval reproduces the metrics; the resolved config re-runs identically
    let metrics = fs::read(p.join("run/metrics.json")).unwrap();
    assert!(umc(&["eval", "run"], p).status.success());
    assert_eq!(fs::read(p.join("run/metrics.json")).unwrap(), metrics);
    let rerun = umc(&["train", "--config", "run/config.toml", "--out", "rerun", "--quiet"], p);
    assert!(rerun.status.success());
    assert_eq!(fs::read(p.join("rerun/metrics.json")).unwrap(), metrics);
}

#[test]
fn seed_override_changes_outputs_deterministically() {
    let d = setup(SYNTH);
    let p = d.path();
    for (dir, seed) in [("s1", "1"), ("s1b", "1"), ("s2", "2")] {
        let o = umc(&["train", "--config", "c.toml", "--out", dir, "--seed", seed, "--quiet"], p);
        assert!(o.status.success());
    }
    let read = |d: &str| fs::read(p.join(d).join("embeddings.csv")).unwrap();
    assert_eq!(read("s1"), read("s1b"));
    assert_ne!(read("s1"), read("s2"));
}

#[test]
fn out_root_from_environment() {
    let d = setup(SYNTH);
    let p = d.path();
    let o = Command::new(env!("CARGO_BIN_EXE_umc"))
        .args(["train", "--config", "c.toml", "--quiet"])
        .current_dir(p)
        .env("UMC_OUT", p.join("root"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(p.join("root/c/metrics.json").exists());
}

#[test]
fn sweep_grid_and_single_point() {
    let cfg = format!("{SYNTH}\n[sweep]\nlambda2 = [0.0, 0.01, 0.1]\nlambda4 = [0.0, 10.0, 1000.0]\n");
    let d = setup(&cfg);
    let p = d.path();
    let o = umc(&["sweep", "--config", "c.toml", "--out", "sw", "--jobs", "2", "--quiet"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(p.join("sw/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 10);
    assert!(summary.lines().skip(1).all(|l| l.contains(",ok,")));
    for i in 0..9 {
        assert!(p.join(format!("sw/point_{i:03}/metrics.json")).exists());
    }

    // one grid point equals a plain train run with those weights
    let one = format!("{SYNTH}\n[sweep]\nlambda2 = [0.01]\n");
    fs::write(p.join("one.toml"), one).unwrap();
    assert!(umc(&["sweep", "--config", "one.toml", "--out", "sw1", "--quiet"], p).status.success());
    assert!(umc(&["train", "--config", "c.toml", "--out", "t1", "--quiet"], p).status.success());
    assert_eq!(
        fs::read(p.join("sw1/point_000/embeddings.csv")).unwrap(),
        fs::read(p.join("t1/embeddings.csv")).unwrap()
    );
}

#[test]
fn numerical_failure_exits_with_code_three() {
    let cfg = SYNTH.replace("epochs = 4", "epochs = 4\nlearning_rate = 1e300");
    let d = setup(&cfg);
    let o = umc(&["train", "--config", "c.toml", "--out", "r", "--quiet"], d.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unpair_splits_a_paired_manifest() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::create_dir(p.join("paired")).unwrap();
    fs::write(p.join("paired/labels.csv"), "0,0\n1,0\n2,1\n3,1\n").unwrap();
    fs::write(p.join("paired/a.csv"), "0,1.0\n1,2.0\n2,3.0\n3,4.0\n").unwrap();
    fs::write(p.join("paired/b.csv"), "0,5.0,1\n1,6.0,1\n2,7.0,1\n3,8.0,1\n").unwrap();
    fs::write(
        p.join("paired/manifest.toml"),
        "name = \"toy\"\nk = 2\nlabels = \"labels.csv\"\npaired = true\n\n[[views]]\nid = 0\nfeatures = \"a.csv\"\ndim = 1\n\n[[views]]\nid = 1\nfeatures = \"b.csv\"\ndim = 2\n",
    )
    .unwrap();
    fs::write(p.join("c.toml"), "[dataset]\nmanifest = \"paired/manifest.toml\"\n").unwrap();
    let o = umc(&["unpair", "--config", "c.toml", "--out", "u", "--quiet"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = fs::read_to_string(p.join("u/manifest.toml")).unwrap();
    assert!(!m.contains("paired = true"));
    let rows: usize = ["u/view0.csv", "u/view1.csv"]
        .iter()
        .map(|f| fs::read_to_string(p.join(f)).unwrap().lines().count())
        .sum();
    assert_eq!(rows, 4);
}
