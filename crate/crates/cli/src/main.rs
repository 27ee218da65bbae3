use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use aerogym::bench::{run_bench, BenchSpec};
use aerogym::env::{run_episode, DroneEnv, EnvError, EvalSummary, PolicyKind, VisionFrame};
use aerogym::sensing::{write_depth_pgm, write_segmentation_pgm};
use aerogym::{Config, ConfigError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aerogym", version, about = "Quadrotor simulator benchmarks, scripted rollouts and config checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure physics-only and physics+depth throughput.
    Bench {
        #[arg(long, default_value_t = 100)]
        agents: usize,
        #[arg(long, default_value_t = 1)]
        scenes: usize,
        /// Depth image size, WxH.
        #[arg(long, default_value = "64x64", value_parser = parse_resolution)]
        res: (usize, usize),
        /// Measured seconds per phase.
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
        #[arg(long, default_value_t = 1.0)]
        warmup: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON report path.
        #[arg(long, default_value = "bench_report.json")]
        report: PathBuf,
    },
    /// Run seeded episodes with a scripted policy and export logs.
    Rollout {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Episodes with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        episodes: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write every rendered frame as 16-bit PGM.
        #[arg(long)]
        frames: bool,
    },
    /// Parse and cross-check a config, then print the effective config.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad size `{v}`: {e}"));
    Ok((parse(w)?, parse(h)?))
}

/// Failure with its exit code: 2 for configuration problems, 1 otherwise.
struct Failure {
    code: u8,
    message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<EnvError> for Failure {
    fn from(e: EnvError) -> Self {
        let code = match e {
            EnvError::Config(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn io_context(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Bench {
            agents,
            scenes,
            res,
            duration,
            warmup,
            seed,
            report,
        } => bench(agents, scenes, res, duration, warmup, seed, &report),
        Cmd::Rollout {
            config,
            policy,
            seed,
            episodes,
            out,
            frames,
        } => rollout(&config, policy, seed, episodes, &out, frames),
        Cmd::Validate { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn seconds(field: &str, v: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(v).map_err(|_| {
        Failure::from(ConfigError::Invalid {
            field: field.to_string(),
            reason: format!("{v} is not a valid number of seconds"),
        })
    })
}

fn bench(
    agents: usize,
    scenes: usize,
    res: (usize, usize),
    duration: f64,
    warmup: f64,
    seed: u64,
    report_path: &Path,
) -> Result<(), Failure> {
    let spec = BenchSpec {
        agents,
        scenes,
        width: res.0,
        height: res.1,
        duration: seconds("duration", duration)?,
        warmup: seconds("warmup", warmup)?,
        seed,
    };
    spec.validate()?;
    let report = run_bench(&spec)?;
    print!("{}", report.to_key_values());
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(report_path, json + "\n").map_err(io_context(report_path))?;
    Ok(())
}

fn rollout(
    config_path: &Path,
    policy: PolicyKind,
    seed: u64,
    episodes: u64,
    out: &Path,
    frames: bool,
) -> Result<(), Failure> {
    let config = Config::from_file(config_path)?;
    config.validate()?;
    let mut env = DroneEnv::new(&config)?;
    let mut policy = policy.build();
    fs::create_dir_all(out).map_err(io_context(out))?;
    let frame_dir = out.join("frames");
    if frames {
        fs::create_dir_all(&frame_dir).map_err(io_context(&frame_dir))?;
    }
    let mut outcomes = Vec::new();
    for episode_seed in seed..seed + episodes {
        env.enable_log();
        let mut frame_error: Option<Failure> = None;
        let outcome = run_episode(&mut env, &mut *policy, episode_seed, |env, r| {
            if !frames || frame_error.is_some() {
                return;
            }
            for (agent, obs) in r.observations.iter().enumerate() {
                let step = env.episode_step(agent);
                for (k, frame) in obs.vision.iter().enumerate() {
                    if let Err(e) = write_frame(&frame_dir, episode_seed, step, agent, k, frame) {
                        frame_error = Some(e);
                        return;
                    }
                }
            }
        })?;
        if let Some(e) = frame_error {
            return Err(e);
        }
        let log_path = out.join(format!("episode_{episode_seed}.jsonl"));
        let file = File::create(&log_path).map_err(io_context(&log_path))?;
        let mut w = BufWriter::new(file);
        for record in env.take_log() {
            serde_json::to_writer(&mut w, &record).expect("log record serializes");
            w.write_all(b"\n")?;
        }
        w.flush()?;
        outcomes.push(outcome);
    }
    let summary = EvalSummary::from_outcomes(&outcomes);
    let line = format!(
        "episodes: {} success_rate: {:.4} mean_episode_length: {:.2} collision_rate: {:.4}",
        summary.episodes, summary.success_rate, summary.mean_episode_length, summary.collision_rate
    );
    println!("{line}");
    let summary_path = out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(io_context(&summary_path))?;
    Ok(())
}

fn write_frame(
    dir: &Path,
    seed: u64,
    step: usize,
    agent: usize,
    sensor: usize,
    frame: &VisionFrame,
) -> Result<(), Failure> {
    let (kind, write): (&str, &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>) = match frame {
        VisionFrame::Depth(img) => ("depth", &|w| write_depth_pgm(w, img)),
        VisionFrame::Segmentation(img) => ("seg", &|w| write_segmentation_pgm(w, img)),
    };
    let path = dir.join(format!("ep{seed}_step{step:05}_agent{agent:03}_{kind}{sensor}.pgm"));
    let file = File::create(&path).map_err(io_context(&path))?;
    let mut w = BufWriter::new(file);
    write(&mut w).map_err(io_context(&path))?;
    w.flush().map_err(io_context(&path))?;
    Ok(())
}

fn validate(config_path: &Path) -> Result<(), Failure> {
    let config = Config::from_file(config_path)?;
    config.validate()?;
    print!("{}", config.to_toml_string());
    Ok(())
}
