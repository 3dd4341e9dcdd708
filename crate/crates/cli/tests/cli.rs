use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ldpcq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldpcq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TRAIN: &str = "scheme = \"CN-WS\"\nbatch = 8\nepochs = 3\nlearning_rate = 0.01\n";

#[test]
fn info_reports_rate_half_dimensions() {
    let o = ldpcq(&["info"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("N_vn=308"), "{out}");
    assert!(out.contains("N_msg=946"), "{out}");
    assert!(out.contains("NoWS params=19228"), "{out}");
    assert!(out.contains("BG-WS params=874"), "{out}");
    assert!(out.contains("CN-WS params=161"), "{out}");
}

#[test]
fn missing_bitwidth_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, "decoder = \"bitwidths\"\nfile = \"absent.toml\"\nebno_db = [3.0]\n").unwrap();
    let out = dir.path().join("r.csv");
    let o = ldpcq(&["eval", "--config", p(&cfg), "--out", p(&out), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("file not found"), "{err}");
    assert!(!out.exists());
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.toml");
    fs::write(&cfg, "batch = 0\n").unwrap();
    let o = ldpcq(&["train", "--config", p(&cfg), "--out", p(&dir.path().join("run")), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
    fs::write(&cfg, "batch = [\n").unwrap();
    let o = ldpcq(&["train", "--config", p(&cfg), "--out", p(&dir.path().join("run")), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_convert_info_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.toml");
    fs::write(&cfg, TRAIN).unwrap();
    let run = dir.path().join("run");
    let o = ldpcq(&["train", "--config", p(&cfg), "--out", p(&run), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["config.toml", "history.csv", "params.toml", "bitwidths.toml"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let history = fs::read_to_string(run.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 4);
    assert!(history.starts_with("epoch,loss,bce,complexity,mean_bitwidth\n"));
    let echo = fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(echo.contains("seed = 3"), "{echo}");

    let trained = stdout(&o);
    let reported = trained.split("converted mean bitwidth = ").nth(1).unwrap().trim();

    let conv = dir.path().join("bw.toml");
    let o = ldpcq(&["convert", "--params", p(&run.join("params.toml")), "--out", p(&conv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(&conv).unwrap(),
        fs::read_to_string(run.join("bitwidths.toml")).unwrap()
    );
    let o = ldpcq(&["info", "--file", p(&conv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let info = stdout(&o);
    assert!(info.contains(&format!("mean bitwidth = {reported}")), "{info} vs {reported}");

    let o = ldpcq(&["info", "--file", p(&run.join("params.toml"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("scheme = CN-WS"));
}

#[test]
fn eval_with_trained_bitwidths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.toml");
    fs::write(&cfg, TRAIN).unwrap();
    let run = dir.path().join("run");
    assert!(ldpcq(&["train", "--config", p(&cfg), "--out", p(&run), "--seed", "3"]).status.success());
    let sweep = dir.path().join("sweep.toml");
    fs::write(
        &sweep,
        "decoder = \"bitwidths\"\nebno_db = [3.0]\nmin_frame_errors = 5\nmax_frames = 200\n",
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    let o = ldpcq(&[
        "eval",
        "--config",
        p(&sweep),
        "--out",
        p(&out),
        "--seed",
        "1",
        "--decoder-file",
        p(&run.join("bitwidths.toml")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("ebno_db,frames,bit_errors,frame_errors,ber,bler\n"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn outputs_are_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.toml");
    fs::write(
        &sweep,
        "decoder = \"uniform\"\nbits = 3\nebno_db = [2.0, 2.5]\nmin_frame_errors = 30\nmax_frames = 3000\n",
    )
    .unwrap();
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.csv"));
        let o = ldpcq(&[
            "eval", "--config", p(&sweep), "--out", p(&out), "--seed", "9", "--workers", workers,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        csvs.push(fs::read(&out).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);

    let cfg = dir.path().join("train.toml");
    fs::write(&cfg, TRAIN).unwrap();
    let mut runs = Vec::new();
    for (i, workers) in ["1", "1", "2"].iter().enumerate() {
        let run = dir.path().join(format!("run{i}"));
        let o = ldpcq(&[
            "train", "--config", p(&cfg), "--out", p(&run), "--seed", "5", "--workers", workers,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        runs.push(
            ["history.csv", "params.toml", "bitwidths.toml"]
                .map(|f| fs::read(run.join(f)).unwrap()),
        );
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}
