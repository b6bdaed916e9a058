use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rnerf_cli::{
    cmd_eval, cmd_field, cmd_gen_data, cmd_predict, cmd_train, CliError, GridSpec, Plane, RunConfig,
};
use rnerf_core::geometry::Point3;
use rnerf_core::scene::{Placement, SceneSample};

#[derive(Parser)]
#[command(
    name = "rnerf",
    version,
    about = "Two-stage neural radiance field for RIS signal strength prediction"
)]
struct Cli {
    /// Run configuration (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset from the analytic oracle.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the two-stage model and write a checkpoint plus loss history.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        checkpoint_out: Option<PathBuf>,
        /// Continue from this checkpoint's weights and optimizer state.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a checkpoint on the test split.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Prefix for `<prefix>.txt`, `<prefix>.csv` and `<prefix>.cdf*.csv`.
        #[arg(long)]
        report_out: PathBuf,
        /// Also train and score the MRI, direct MLP and single-stage baselines.
        #[arg(long)]
        baselines: bool,
        /// Also run the four-row ray tracing x PE ablation.
        #[arg(long)]
        ablation: bool,
    },
    /// Predict strength for one placement or for every row of a dataset file.
    Predict {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_parser = parse_point, requires_all = ["ris", "rx"])]
        tx: Option<Point3>,
        #[arg(long, value_parser = parse_point)]
        ris: Option<Point3>,
        #[arg(long, value_parser = parse_point)]
        rx: Option<Point3>,
        /// Dataset whose placements are predicted; labels are ignored.
        #[arg(long, conflicts_with = "tx")]
        data: Option<PathBuf>,
        /// Output CSV for `--data` predictions; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a predicted strength grid on an axis-aligned plane.
    Field {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_parser = parse_point)]
        ris: Point3,
        /// Transmitter position; defaults to the configured scene TX.
        #[arg(long, value_parser = parse_point)]
        tx: Option<Point3>,
        /// One of xy, xz, yz.
        #[arg(long, default_value = "xy")]
        plane: Plane,
        /// Offset along the plane normal.
        #[arg(long, allow_negative_numbers = true)]
        at: f64,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        u_range: (f64, f64),
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        v_range: (f64, f64),
        #[arg(long, default_value_t = 20)]
        rows: usize,
        #[arg(long, default_value_t = 20)]
        cols: usize,
        /// CSV matrix output; the image goes next to it with a `.pgm` extension.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_numbers(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(format!(
            "expected {n} comma-separated finite numbers, got {s:?}"
        ));
    }
    Ok(v)
}

fn parse_point(s: &str) -> Result<Point3, String> {
    parse_numbers(s, 3).map(|v| Point3::new(v[0], v[1], v[2]))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    parse_numbers(s, 2).map(|v| (v[0], v[1]))
}

fn required(
    path: Option<PathBuf>,
    fallback: &Option<PathBuf>,
    flag: &str,
) -> Result<PathBuf, CliError> {
    path.or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Usage(format!("missing --{flag} (or its paths.* config key)")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::GenData { out, count, seed } => {
            let n = cmd_gen_data(&cfg, &out, count, seed)?;
            println!("wrote {n} samples to {}", out.display());
        }
        Command::Train {
            data,
            checkpoint_out,
            resume,
        } => {
            let data = required(data, &cfg.data_path, "data")?;
            let ckpt = required(checkpoint_out, &cfg.checkpoint_path, "checkpoint-out")?;
            let s = cmd_train(&cfg, &data, &ckpt, resume.as_deref())?;
            println!(
                "trained {} epochs on {} samples (best epoch {}, optimizer step {}); checkpoint {}",
                s.epochs_run,
                s.train_count,
                s.best_epoch,
                s.optimizer_step,
                ckpt.display()
            );
        }
        Command::Eval {
            checkpoint,
            data,
            report_out,
            baselines,
            ablation,
        } => {
            let ckpt = required(checkpoint, &cfg.checkpoint_path, "checkpoint")?;
            let data = required(data, &cfg.data_path, "data")?;
            let rows = cmd_eval(&cfg, &ckpt, &data, &report_out, baselines, ablation)?;
            let mut out = std::io::stdout().lock();
            rnerf_core::evaluation::write_report_text(&rows, &mut out)?;
        }
        Command::Predict {
            checkpoint,
            tx,
            ris,
            rx,
            data,
            out,
        } => {
            let ckpt = required(checkpoint, &cfg.checkpoint_path, "checkpoint")?;
            let placements: Vec<Placement> = match (tx, ris, rx, data) {
                (Some(tx), Some(ris), Some(rx), None) => vec![Placement { tx, ris, rx }],
                (None, None, None, Some(path)) => {
                    if !path.is_file() {
                        return Err(CliError::Input(format!(
                            "data file {} does not exist",
                            path.display()
                        )));
                    }
                    rnerf_core::scene::load_dataset(&path)?
                        .iter()
                        .map(SceneSample::placement)
                        .collect()
                }
                _ => {
                    return Err(CliError::Usage(
                        "give either --tx/--ris/--rx or --data".into(),
                    ))
                }
            };
            let pred = cmd_predict(&ckpt, &placements)?;
            write_predictions(&placements, &pred, out.as_deref())?;
        }
        Command::Field {
            checkpoint,
            ris,
            tx,
            plane,
            at,
            u_range,
            v_range,
            rows,
            cols,
            out,
        } => {
            let ckpt = required(checkpoint, &cfg.checkpoint_path, "checkpoint")?;
            let grid = GridSpec {
                plane,
                at,
                u_range,
                v_range,
                rows,
                cols,
            };
            let field = cmd_field(&ckpt, tx.unwrap_or(cfg.layout.tx), ris, &grid, &out)?;
            println!(
                "wrote {}x{} field to {} (min {:.3} dB, max {:.3} dB)",
                rows,
                cols,
                out.display(),
                field.min_db,
                field.max_db
            );
        }
    }
    Ok(())
}

fn write_predictions(
    placements: &[Placement],
    pred: &[f64],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    if placements.len() == 1 && out.is_none() {
        writeln!(w, "{}", pred[0])?;
    } else {
        writeln!(
            w,
            "tx_x,tx_y,tx_z,ris_x,ris_y,ris_z,rx_x,rx_y,rx_z,rss_db_pred"
        )?;
        for (p, v) in placements.iter().zip(pred) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{v}",
                p.tx.x, p.tx.y, p.tx.z, p.ris.x, p.ris.y, p.ris.z, p.rx.x, p.rx.y, p.rx.z
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(rnerf_cli::LOG_ENV, "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail
                .lines()
                .next()
                .unwrap_or(&msg)
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).one_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
