use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use posflow::workers::{benchmark, benchmark_csv, BenchConfig};
use posflow_sphero::{evaluate_with, run, Rect, ScenarioConfig, SourceKind, Track};

#[derive(Parser)]
#[command(name = "sphero-sim", version, about = "Rolling robot fusion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a run and write the fused trajectory as CSV.
    Run {
        /// `key=value` scenario file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Camera blind spot `x,y,w,h` in cm. May repeat.
        #[arg(long = "blind-spot", value_name = "X,Y,W,H")]
        blind_spots: Vec<Rect>,
        /// video, sphero_position, input or sphero_velocity. May repeat.
        #[arg(long = "disable-source", value_name = "NAME")]
        disabled: Vec<SourceKind>,
        /// Turn every noise level to zero.
        #[arg(long)]
        noiseless: bool,
        #[arg(long, short, default_value = "position.csv")]
        output: PathBuf,
        /// Also write the ground truth trajectory here.
        #[arg(long = "ground-truth", value_name = "FILE")]
        ground_truth: Option<PathBuf>,
        /// Also write one CSV per source branch into this directory.
        #[arg(long, value_name = "DIR")]
        traces: Option<PathBuf>,
    },
    /// Average and maximum distance between two trajectories at the key points.
    Evaluate {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Frames per second of a prime-computing graph with and without workers.
    Bench {
        /// Pool sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        workers: Vec<usize>,
        #[arg(long = "duration-ms", default_value_t = 2000)]
        duration_ms: u64,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 5000)]
        primes: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ScenarioConfig::parse(&text).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(ScenarioConfig::default()),
    }
}

fn write_track(track: &Track, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    track.write_csv(file)?;
    Ok(())
}

fn read_track(path: &Path) -> Result<Track> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Track::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            blind_spots,
            disabled,
            noiseless,
            output,
            ground_truth,
            traces,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.blind_spots.extend(blind_spots);
            cfg.disabled.extend(disabled);
            if noiseless {
                cfg = cfg.noiseless();
            }
            cfg.validate()?;
            let out = run(&cfg)?;
            write_track(&out.fused, &output)?;
            if let Some(p) = ground_truth {
                write_track(&out.ground_truth, &p)?;
            }
            if let Some(dir) = traces {
                fs::create_dir_all(&dir)?;
                for (kind, t) in &out.traces {
                    write_track(t, &dir.join(format!("{kind}.csv")))?;
                }
            }
            println!(
                "wrote {} rows to {} (max gap {:.1} ms)",
                out.fused.len(),
                output.display(),
                out.fused.max_gap_us() as f64 / 1000.0
            );
            match evaluate_with(&cfg, &out.fused, &out.ground_truth) {
                Ok(e) => println!(
                    "error vs ground truth: avg {:.2} cm, max {:.2} cm",
                    e.avg, e.max
                ),
                Err(e) => println!("error vs ground truth: {e}"),
            }
            for e in out.errors.iter().take(5) {
                eprintln!("error event: {e}");
            }
        }
        Command::Evaluate { a, b, config } => {
            let cfg = load_config(config.as_deref())?;
            let e = evaluate_with(&cfg, &read_track(&a)?, &read_track(&b)?)?;
            println!("avg {:.2} cm, max {:.2} cm", e.avg, e.max);
        }
        Command::Bench {
            workers,
            duration_ms,
            repetitions,
            primes,
            output,
        } => {
            let rows = benchmark(&BenchConfig {
                pool_sizes: workers,
                duration: Duration::from_millis(duration_ms),
                repetitions,
                primes,
            })?;
            let csv = benchmark_csv(&rows);
            print!("{csv}");
            if let Some(p) = output {
                fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?;
            }
        }
    }
    Ok(())
}
