use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use rnerf_cli::commands::{history_path, pgm_path, ReportPaths};
use rnerf_cli::{
    cmd_eval, cmd_field, cmd_gen_data, cmd_predict, cmd_train, GridSpec, Plane, RunConfig,
};
use rnerf_core::autodiff::Regressor;
use rnerf_core::geometry::Point3;
use rnerf_core::network::checkpoint::load_checkpoint;
use rnerf_core::network::predict_strength;
use rnerf_core::scene::Placement;

const SMOKE: &str = "\
rays.count = 4
rays.samples = 4
encoding.levels = 4
network.tn_depth = 4
network.tn_width = 16
network.feature_dim = 16
network.rn_width1 = 16
network.rn_width2 = 8
oracle.rows = 4
oracle.cols = 4
train.epochs = 20
train.batch_size = 32
train.learning_rate = 0.005
data.count = 200
";

fn rnerf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnerf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn smoke_config(dir: &Path, extra: &str) -> (PathBuf, RunConfig) {
    let path = dir.join("smoke.cfg");
    let key = |l: &str| l.split('=').next().unwrap_or("").trim().to_string();
    let overridden: Vec<String> = extra.lines().map(key).collect();
    let base: String = SMOKE
        .lines()
        .filter(|l| !overridden.contains(&key(l)))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&path, format!("{base}{extra}")).unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    (path, cfg)
}

fn stderr_line(out: &Output) -> String {
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    let lines: Vec<&str> = err
        .lines()
        .filter(|l| l.starts_with("rnerf: error"))
        .collect();
    assert_eq!(lines.len(), 1, "stderr: {err}");
    lines[0].to_string()
}

#[test]
fn gen_data_writes_header_and_rows_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg_path, _) = smoke_config(dir.path(), "");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = rnerf(&[
            "--config",
            cfg_path.to_str().unwrap(),
            "gen-data",
            "--out",
            out.to_str().unwrap(),
            "--count",
            "100",
            "--seed",
            "7",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(String::from_utf8_lossy(&text).lines().count(), 101);
    assert_eq!(text, fs::read(&b).unwrap());
}

#[test]
fn unknown_config_key_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "rays.count = 4\ntrain.momentum = 0.9\n").unwrap();
    let out = dir.path().join("d.csv");
    let o = rnerf(&[
        "--config",
        cfg.to_str().unwrap(),
        "gen-data",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let line = stderr_line(&o);
    assert!(line.starts_with("rnerf: error[config]:"), "{line}");
    assert!(line.contains("train.momentum"), "{line}");
    assert!(!out.exists());
}

#[test]
fn missing_data_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let ckpt = dir.path().join("m.ckpt");
    let o = rnerf(&[
        "train",
        "--data",
        missing.to_str().unwrap(),
        "--checkpoint-out",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let line = stderr_line(&o);
    assert!(
        line.starts_with("rnerf: error[input]:") && line.contains("nope.csv"),
        "{line}"
    );
}

#[test]
fn malformed_arguments_exit_nonzero_with_one_line() {
    let o = rnerf(&[
        "field",
        "--ris",
        "1,2",
        "--at",
        "0",
        "--u-range",
        "0,1",
        "--v-range",
        "0,1",
        "--out",
        "x.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("rnerf: error[usage]:"));
    let o = rnerf(&[
        "predict",
        "--checkpoint",
        "/nonexistent/m.ckpt",
        "--tx",
        "0,0,0",
        "--ris",
        "1,1,1",
        "--rx",
        "2,2,2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    stderr_line(&o);
}

#[test]
fn smoke_train_then_resume_then_eval_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = smoke_config(dir.path(), "");
    let data = dir.path().join("data.csv");
    cmd_gen_data(&cfg, &data, None, None).unwrap();

    let ckpt = dir.path().join("m.ckpt");
    let start = Instant::now();
    let first = cmd_train(&cfg, &data, &ckpt, None).unwrap();
    assert!(
        start.elapsed().as_secs_f64() < 60.0,
        "smoke training took {:?}",
        start.elapsed()
    );
    assert!(ckpt.is_file());
    let history = fs::read_to_string(history_path(&ckpt)).unwrap();
    assert_eq!(history.lines().count(), 1 + first.epochs_run);
    assert!(history.starts_with("epoch,train_loss,validation_mae\n"));

    // Resuming keeps counting optimizer steps from the checkpoint.
    let ckpt2 = dir.path().join("m2.ckpt");
    let second = cmd_train(&cfg, &data, &ckpt2, Some(&ckpt)).unwrap();
    assert!(second.optimizer_step > first.optimizer_step);
    let steps_per_epoch = first.optimizer_step / first.epochs_run as u64;
    assert_eq!(
        second.optimizer_step,
        first.optimizer_step + steps_per_epoch * second.epochs_run as u64
    );
    let h2 = fs::read_to_string(history_path(&ckpt2)).unwrap();
    assert!(h2
        .lines()
        .nth(1)
        .unwrap()
        .starts_with(&format!("{},", first.epochs_run)));

    // Evaluation with baselines.
    let prefix = dir.path().join("report");
    let rows = cmd_eval(&cfg, &ckpt, &data, &prefix, true, false).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["r-nerf", "mri", "mlp", "single-stage"]);
    let paths = ReportPaths::new(&prefix);
    let text = fs::read_to_string(&paths.text).unwrap();
    assert!(text.contains("MAE") && text.contains("MED") && text.contains("RMSE"));
    let csv = fs::read_to_string(&paths.csv).unwrap();
    for metric in [
        "r-nerf,mae,",
        "r-nerf,med,",
        "r-nerf,rmse,",
        "mri,mae,",
        "single-stage,rmse,",
    ] {
        assert!(csv.contains(metric), "{metric} missing from {csv}");
    }
    for name in names {
        let cdf = fs::read_to_string(ReportPaths::cdf(&prefix, name)).unwrap();
        let fractions: Vec<f64> = cdf
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(fractions.len(), 81);
        assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
        assert!(*fractions.last().unwrap() <= 1.0);
    }

    // Field export: shape, per-RIS files and consistency with direct prediction.
    let grid = GridSpec {
        plane: Plane::Xz,
        at: 6.0,
        u_range: (1.0, 2.5),
        v_range: (-1.5, 1.5),
        rows: 2,
        cols: 2,
    };
    let ris_a = Point3::new(-0.5, 0.0, 0.3);
    let ris_b = Point3::new(0.6, 0.0, -0.4);
    let fa = dir.path().join("field_a.csv");
    let fb = dir.path().join("field_b.csv");
    let field_a = cmd_field(&ckpt, cfg.layout.tx, ris_a, &grid, &fa).unwrap();
    cmd_field(&ckpt, cfg.layout.tx, ris_b, &grid, &fb).unwrap();
    let matrix = fs::read_to_string(&fa).unwrap();
    assert_eq!(matrix.lines().count(), 2);
    assert!(matrix.lines().all(|l| l.split(',').count() == 2));
    assert_ne!(matrix, fs::read_to_string(&fb).unwrap());
    let pgm = fs::read_to_string(pgm_path(&fa)).unwrap();
    assert!(pgm.starts_with("P2\n") && pgm.contains("dB"));

    let model = load_checkpoint(&ckpt).unwrap().model;
    let c = *model.config();
    for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let rx = grid.point(i, j);
        let direct = predict_strength(
            &model.params,
            cfg.layout.tx,
            ris_a,
            rx,
            &c.rays,
            &c.encoding,
            &c.bounds,
        )
        .unwrap()
            + model.scaling().mean;
        assert!((field_a.values[i][j] - direct).abs() < 1e-9);
        let p = cmd_predict(
            &ckpt,
            &[Placement {
                tx: cfg.layout.tx,
                ris: ris_a,
                rx,
            }],
        )
        .unwrap();
        assert_eq!(p[0], field_a.values[i][j]);
    }
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg_path, _) = smoke_config(dir.path(), "train.epochs = 2\n");
    let cfg = cfg_path.to_str().unwrap();
    let data = dir.path().join("d.csv");
    let ckpt = dir.path().join("m.ckpt");
    let report = dir.path().join("r");
    let field = dir.path().join("f.csv");
    let d = data.to_str().unwrap();
    let k = ckpt.to_str().unwrap();
    for args in [
        vec!["--config", cfg, "gen-data", "--out", d],
        vec!["--config", cfg, "train", "--data", d, "--checkpoint-out", k],
        vec![
            "--config",
            cfg,
            "eval",
            "--checkpoint",
            k,
            "--data",
            d,
            "--report-out",
            report.to_str().unwrap(),
        ],
        vec![
            "--config",
            cfg,
            "field",
            "--checkpoint",
            k,
            "--ris",
            "0,0,0",
            "--plane",
            "xz",
            "--at",
            "6",
            "--u-range",
            "1,2.5",
            "--v-range",
            "-1.5,1.5",
            "--rows",
            "3",
            "--cols",
            "4",
            "--out",
            field.to_str().unwrap(),
        ],
    ] {
        let o = rnerf(&args);
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = rnerf(&[
        "--config",
        cfg,
        "predict",
        "--checkpoint",
        k,
        "--tx",
        "1.5,-1.5,0",
        "--ris",
        "0,0,0",
        "--rx",
        "2,6,0",
    ]);
    assert!(o.status.success());
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!(v.is_finite());
    let m = fs::read_to_string(&field).unwrap();
    assert_eq!(m.lines().count(), 3);
    assert!(m.lines().all(|l| l.split(',').count() == 4));
}
