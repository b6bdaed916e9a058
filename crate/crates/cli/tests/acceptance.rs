//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails. Criteria can be selected by number:
//! `cargo test --release --test acceptance -- 1 2 6`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnerf_cli::commands::{cmd_field, GridSpec, Plane};
use rnerf_cli::RunConfig;
use rnerf_core::autodiff::{check_gradient, train, Regressor, TargetScaling, TrainConfig};
use rnerf_core::encoding::{positional_encode, EncodingConfig, InputEncoding};
use rnerf_core::evaluation::{
    error_cdf, evaluate, fraction_sweep, metrics, run_ablation, AblationConfig, DirectMlp,
    ExperimentConfig, MriBaseline,
};
use rnerf_core::geometry::{Point3, RayTracingConfig};
use rnerf_core::network::checkpoint::{from_bytes, save_checkpoint, to_bytes};
use rnerf_core::network::{ModelConfig, NetworkShape, Parameters, RNerfModel};
use rnerf_core::radiometry::{
    analytic_transmission, render_stage, PhasorSignal, RadioConstants, VoxelField,
};
use rnerf_core::scene::{
    generate_dataset, oracle_clean_strength, parse_dataset, split_dataset, write_dataset,
    OracleConfig, Placement, SceneLayout, SceneSample,
};

const SEEDS: [u64; 3] = [0, 1, 2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

// Criterion 1

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let rays = rng.random_range(1..=12);
        let samples = rng.random_range(1..=12);
        let n = rays * samples;
        let phasor = |rng: &mut ChaCha8Rng| {
            PhasorSignal::new(rng.random_range(0.0..3.0), rng.random_range(-10.0..10.0)).unwrap()
        };
        let signals: Vec<PhasorSignal> = (0..n).map(|_| phasor(&mut rng)).collect();
        let transmissions: Vec<PhasorSignal> = (0..n).map(|_| phasor(&mut rng)).collect();
        let (mut re, mut im) = (0.0, 0.0);
        for (s, t) in signals.iter().zip(&transmissions) {
            let a = s.amplitude * t.amplitude;
            let p = s.phase + t.phase;
            re += a * p.cos();
            im += a * p.sin();
        }
        let got =
            render_stage(&VoxelField::new(rays, samples, signals, transmissions).unwrap()).unwrap();
        let (gr, gi) = (
            got.amplitude * got.phase.cos(),
            got.amplitude * got.phase.sin(),
        );
        let err = (gr - re).hypot(gi - im) / re.hypot(im).max(1e-300);
        worst = worst.max(err);
    }
    let render_ok = worst <= 1e-12;

    let mut dims_ok = true;
    for l in 1..=12 {
        let raw =
            positional_encode(&[0.1, -0.2, 0.3], &EncodingConfig::new(l, true).unwrap()).len();
        let pos = InputEncoding::new(l, true).unwrap().position_len();
        dims_ok &= raw == 6 * l + 3 && pos == 6 * l + 3;
    }

    let mut worst_t = 0.0f64;
    for _ in 0..1000 {
        let c = RadioConstants {
            amplitude_coefficient: rng.random_range(0.1..3.0),
            phase_coefficient: rng.random_range(0.1..3.0),
            wavelength: rng.random_range(0.01..1.0),
        };
        let d = rng.random_range(1e-3..20.0);
        let t = analytic_transmission(d, &c).unwrap();
        let amp = c.amplitude_coefficient / d;
        let phase = 2.0 * PI * c.phase_coefficient * d / c.wavelength;
        worst_t = worst_t
            .max(((t.amplitude - amp) / amp).abs())
            .max(((t.phase - phase) / phase).abs());
    }
    let transmission_ok = worst_t <= 1e-12;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        render_ok && dims_ok && transmission_ok && secs < 10.0,
        format!(
            "render max rel err {worst:.2e} (<= 1e-12), encoding dims 6L+3 for L=1..12: {dims_ok}, \
             transmission max rel err {worst_t:.2e}, {secs:.1}s (< 10s)"
        ),
    )
}

// Criterion 2

fn tiny_model(seed: u64) -> RNerfModel {
    let cfg = ModelConfig::new(
        RayTracingConfig::new(2, 2, 0.0, 1.0).unwrap(),
        InputEncoding::new(2, true).unwrap(),
        NetworkShape::uniform(3, 8),
        SceneLayout::default().bounds().unwrap(),
    );
    RNerfModel::new(cfg, seed).unwrap()
}

fn small_scene(count: usize, seed: u64) -> Vec<SceneSample> {
    let oracle = OracleConfig {
        rows: 2,
        cols: 2,
        ..OracleConfig::default()
    };
    generate_dataset(&SceneLayout::default(), count, &oracle, seed).unwrap()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 0..5 {
        let mut model = tiny_model(seed);
        // Move parameters off exact ReLU kinks left by zero biases.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in model.params_mut().param_slices_mut() {
            s.iter_mut()
                .for_each(|v| *v += rng.random_range(-1e-2..1e-2));
        }
        let mut batch = small_scene(6, 100 + seed);
        let pred = model.predict_samples(&batch).unwrap();
        for (s, p) in batch.iter_mut().zip(pred) {
            s.strength = p + rng.random_range(-3.0..3.0);
        }
        model.set_scaling(TargetScaling::fit(&batch));
        // Components below the floor are compared in absolute terms, where
        // central-difference rounding noise (about 1e-9 here) would dominate.
        let check = check_gradient(&model, &batch, 1e-5, 1, 1e-4).unwrap();
        worst = worst.max(check.max_relative_error);
        checked += check.checked;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-4 && secs < 60.0,
        format!("max rel err {worst:.2e} (< 1e-4) over {checked} parameters, 5 seeds, {secs:.1}s (< 60s)"),
    )
}

// Criteria 3, 4, 5 and 7 share trained models.

struct Scene {
    cfg: RunConfig,
    samples: Vec<SceneSample>,
    train: Vec<SceneSample>,
    test: Vec<SceneSample>,
}

impl Scene {
    fn load() -> Self {
        let cfg = RunConfig::load(
            &Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/acceptance.cfg"),
        )
        .unwrap();
        let samples =
            generate_dataset(&cfg.layout, cfg.data_count, &cfg.oracle, cfg.data_seed).unwrap();
        let (train, test) = split_dataset(&samples, &cfg.split).unwrap();
        Self {
            cfg,
            samples,
            train,
            test,
        }
    }

    fn experiment(&self, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            model: self.cfg.model_config(),
            train: TrainConfig {
                seed,
                ..self.cfg.train
            },
            init_seed: seed,
        }
    }
}

#[derive(Default)]
struct Runs {
    /// Test MAE keyed by (ray tracing, positional encoding, seed).
    mae: HashMap<(bool, bool, u64), f64>,
    /// Two-stage model with PE trained with seed 0.
    model: Option<RNerfModel>,
    seconds: HashMap<(bool, bool), f64>,
}

impl Runs {
    fn mae(&mut self, scene: &Scene, rt: bool, pe: bool, seed: u64) -> f64 {
        if let Some(&m) = self.mae.get(&(rt, pe, seed)) {
            return m;
        }
        let start = Instant::now();
        let exp = scene.experiment(seed);
        let m = if rt && pe {
            let out = train(
                RNerfModel::new(exp.model, exp.init_seed).unwrap(),
                &scene.train,
                &exp.train,
            )
            .unwrap();
            let m = evaluate(&out.model, &scene.test).unwrap().0.mae;
            if seed == 0 {
                self.model = Some(out.model);
            }
            m
        } else {
            let grid = [AblationConfig {
                use_ray_tracing: rt,
                use_pe: pe,
            }];
            run_ablation(&scene.train, &scene.test, &grid, &exp).unwrap()[0]
                .report
                .mae
        };
        let secs = start.elapsed().as_secs_f64();
        *self.seconds.entry((rt, pe)).or_default() += secs;
        eprintln!("  trained rt={rt} pe={pe} seed={seed}: test MAE {m:.3} dB in {secs:.0}s");
        self.mae.insert((rt, pe, seed), m);
        m
    }

    fn maes(&mut self, scene: &Scene, rt: bool, pe: bool) -> Vec<f64> {
        SEEDS.iter().map(|&s| self.mae(scene, rt, pe, s)).collect()
    }
}

fn criterion_3(scene: &Scene, runs: &mut Runs) -> Outcome {
    let rt = runs.maes(scene, true, true);
    let mlp: Vec<f64> = SEEDS
        .iter()
        .map(|&seed| {
            let exp = scene.experiment(seed);
            let m = &exp.model;
            let model = DirectMlp::new(&m.shape, m.encoding, m.bounds, exp.init_seed).unwrap();
            let out = train(model, &scene.train, &exp.train).unwrap();
            let mae = evaluate(&out.model, &scene.test).unwrap().0.mae;
            runs.mae.insert((false, true, seed), mae);
            mae
        })
        .collect();
    let (r, b) = (median(rt.clone()), median(mlp.clone()));
    let secs = runs.seconds[&(true, true)];
    outcome(
        r <= 3.0 && r <= 0.5 * b,
        format!(
            "two-stage median MAE {r:.3} dB [{}] (<= 3), direct MLP median {b:.3} dB [{}], ratio {:.3} (<= 0.5), \
             two-stage training {secs:.0}s",
            fmt_list(&rt),
            fmt_list(&mlp),
            r / b
        ),
    )
}

fn criterion_4(scene: &Scene, runs: &mut Runs) -> Outcome {
    let rows = [(true, true), (true, false), (false, true), (false, false)];
    let med: Vec<f64> = rows
        .iter()
        .map(|&(rt, pe)| median(runs.maes(scene, rt, pe)))
        .collect();
    let pass = med[0] <= med[1] && med[1] < med[2] && med[1] < med[3];
    outcome(
        pass,
        format!(
            "median MAE: rt+pe {:.3}, rt {:.3}, mlp+pe {:.3}, mlp {:.3} (need rt+pe <= rt < both mlp rows)",
            med[0], med[1], med[2], med[3]
        ),
    )
}

fn criterion_5(scene: &Scene) -> Outcome {
    let start = Instant::now();
    let fractions = [0.1, 0.3, 0.5, 0.7];
    let points = fraction_sweep(
        &scene.samples,
        &fractions,
        scene.cfg.split.seed,
        &scene.experiment(0),
    )
    .unwrap();
    let mae: Vec<f64> = points.iter().map(|p| p.report.mae).collect();
    let pass = mae[0].is_finite() && mae.windows(2).all(|w| w[1] <= w[0] + 0.2);
    outcome(
        pass,
        format!(
            "MAE at 10/30/50/70%: [{}] dB (non-increasing within 0.2 dB), {:.0}s",
            fmt_list(&mae),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_7(scene: &Scene, runs: &mut Runs) -> Outcome {
    runs.mae(scene, true, true, 0);
    let model = runs.model.as_ref().expect("seed 0 model");
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("acceptance.ckpt");
    save_checkpoint(&ckpt, model, None).unwrap();
    let grid = GridSpec {
        plane: Plane::Xz,
        at: 6.0,
        u_range: (1.0, 2.5),
        v_range: (-1.5, 1.5),
        rows: 20,
        cols: 20,
    };
    let tx = scene.cfg.layout.tx;
    let positions = [
        Point3::new(-0.6, 0.0, -0.6),
        Point3::new(0.0, 0.0, 0.5),
        Point3::new(0.6, 0.0, -0.2),
    ];
    let mut cells = Vec::new();
    let mut oracle_cells = Vec::new();
    for (k, &ris) in positions.iter().enumerate() {
        let out = dir.path().join(format!("field{k}.csv"));
        cells.push(cmd_field(&ckpt, tx, ris, &grid, &out).unwrap().argmax());
        let mut best = (f64::NEG_INFINITY, (0, 0));
        for i in 0..grid.rows {
            for j in 0..grid.cols {
                let v =
                    oracle_clean_strength(tx, ris, grid.point(i, j), &scene.cfg.oracle).unwrap();
                if v > best.0 {
                    best = (v, (i, j));
                }
            }
        }
        oracle_cells.push(best.1);
    }
    let distinct = cells[0] != cells[1] && cells[0] != cells[2] && cells[1] != cells[2];
    outcome(
        distinct,
        format!(
            "20x20 argmax cells {cells:?} (oracle {oracle_cells:?}), pairwise distinct: {distinct}"
        ),
    )
}

// Criterion 6

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures: Vec<&str> = Vec::new();

    let thresholds: Vec<f64> = (0..=80).map(|i| i as f64 * 0.25).collect();
    let (mut cdf_ok, mut jensen_ok) = (true, true);
    for _ in 0..2000 {
        let n = rng.random_range(1..50);
        let truth: Vec<f64> = (0..n).map(|_| rng.random_range(-120.0..-20.0)).collect();
        let pred: Vec<f64> = truth
            .iter()
            .map(|t| t + rng.random_range(-25.0..25.0))
            .collect();
        let cdf = error_cdf(&pred, &truth, &thresholds).unwrap();
        cdf_ok &=
            cdf.windows(2).all(|w| w[0] <= w[1]) && cdf.iter().all(|f| (0.0..=1.0).contains(f));
        let r = metrics(&pred, &truth).unwrap();
        jensen_ok &= r.rmse >= r.mae;
    }
    if !cdf_ok {
        failures.push("cdf monotonicity");
    }
    if !jensen_ok {
        failures.push("rmse >= mae");
    }

    let samples = small_scene(300, 3);
    let mri = MriBaseline::fit(&samples).unwrap();
    let placements: Vec<Placement> = samples.iter().map(SceneSample::placement).collect();
    let mri_ok = mri
        .predict_all(&placements)
        .iter()
        .zip(&samples)
        .all(|(p, s)| (p - s.strength).abs() <= 1e-9 * s.strength.abs().max(1.0));
    if !mri_ok {
        failures.push("mri exactness");
    }

    let mut buf = Vec::new();
    write_dataset(&samples, &mut buf).unwrap();
    let back = parse_dataset(std::str::from_utf8(&buf).unwrap(), Path::new("memory")).unwrap();
    if back != samples {
        failures.push("dataset round trip");
    }

    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let (fit, test) = split_dataset(
        &samples,
        &rnerf_core::scene::DatasetSplit::new(0.8, 1).unwrap(),
    )
    .unwrap();
    let a = train(tiny_model(4), &fit, &cfg).unwrap();
    let b = train(tiny_model(4), &fit, &cfg).unwrap();
    let bytes = to_bytes(&a.model, Some(&a.optimizer)).unwrap();
    let restored = from_bytes(&bytes).unwrap();
    let bits = |m: &RNerfModel| -> Vec<u64> {
        m.params()
            .param_slices()
            .iter()
            .flat_map(|s| s.iter().map(|v| v.to_bits()))
            .collect()
    };
    if bits(&restored.model) != bits(&a.model)
        || restored.optimizer.as_ref() != Some(&a.optimizer)
        || to_bytes(&restored.model, restored.optimizer.as_ref()).unwrap() != bytes
    {
        failures.push("checkpoint round trip");
    }
    let (ea, eb) = (
        evaluate(&a.model, &test).unwrap(),
        evaluate(&b.model, &test).unwrap(),
    );
    if bits(&a.model) != bits(&b.model) || a.history != b.history || ea.1 != eb.1 {
        failures.push("seed determinism");
    }

    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        failures.push("runtime");
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("cdf, rmse >= mae, mri exactness, dataset and checkpoint round trips, determinism ok, {secs:.1}s (< 60s)")
        } else {
            format!("failed: {}, {secs:.1}s", failures.join(", "))
        },
    )
}

fn main() {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |c: u32| selected.is_empty() || selected.contains(&c);
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |c: u32, o: Outcome| {
        println!(
            "criterion {c}: {} {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((c, o));
    };

    for (c, f) in [
        (1, criterion_1 as fn() -> Outcome),
        (2, criterion_2),
        (6, criterion_6),
    ] {
        if wanted(c) {
            report(c, f());
        }
    }
    if [3, 4, 5, 7].iter().any(|&c| wanted(c)) {
        let scene = Scene::load();
        let mut runs = Runs::default();
        if wanted(3) {
            report(3, criterion_3(&scene, &mut runs));
        }
        if wanted(4) {
            report(4, criterion_4(&scene, &mut runs));
        }
        if wanted(7) {
            report(7, criterion_7(&scene, &mut runs));
        }
        if wanted(5) {
            report(5, criterion_5(&scene));
        }
    }

    let failed: Vec<u32> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(c, _)| *c)
        .collect();
    if failed.is_empty() {
        println!("acceptance: {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
