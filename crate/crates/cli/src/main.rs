//! `cvnn`: backend verification, benchmarks, the toy GAN comparison and the
//! mini-vocoder smoke test.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cvnn::experiments::toygan::write_samples_csv;
use cvnn::experiments::{
    default_signal, mini_vocoder_overfit, sample_target, summarize, train_toy_gan, GanConfig, Mode, ModeSummary, RunReport,
};
use cvnn::signal::io::{read_wav, write_wav};
use cvnn::verify::{self, Fault};
use rayon::prelude::*;
use serde::Serialize;

use config::FileConfig;
use output::OutDir;

#[derive(Parser, Debug)]
#[command(name = "cvnn", version, about = "Complex-valued network backends: verify, bench, toygan, smoke")]
struct Cli {
    /// Base RNG seed; overrides any seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-threaded; reports are bitwise reproducible.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Print the report as JSON on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// TOML file with [vocoder], [toygan], [spiral] and [bench] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Backend equivalence and finite-difference checks on random layers.
    Verify {
        /// Random configurations per layer type.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Node counts and forward/backward times per backend.
    Bench {
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// CVNN vs RVNN on the spiral target over several seeds.
    Toygan {
        /// Number of consecutive seeds starting at --seed.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Overfit the mini-vocoder to one signal.
    Smoke {
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        pq_levels: Option<u32>,
        /// PCM16 mono WAV to fit instead of the built-in test signal.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    GaussLinear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when a checked tolerance or threshold was missed.
fn run(cli: Cli) -> Result<bool> {
    if cli.deterministic {
        rayon::ThreadPoolBuilder::new().num_threads(1).build_global().context("pinning the thread pool")?;
    }
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match &cli.cmd {
        Cmd::Verify { trials, inject_fault } => {
            let fault = match inject_fault {
                Some(FaultArg::GaussLinear) => Fault::GaussLinear,
                None => Fault::None,
            };
            cmd_verify(&cli, *trials, fault)
        }
        Cmd::Bench { repeats } => {
            let mut b = cfg.bench;
            b.repeats = repeats.unwrap_or(b.repeats);
            b.seed = cli.seed.unwrap_or(b.seed);
            cmd_bench(&cli, b)
        }
        Cmd::Toygan { seeds, steps } => {
            let mut c = cfg;
            c.toygan.steps = steps.unwrap_or(c.toygan.steps);
            cmd_toygan(&cli, &c, *seeds)
        }
        Cmd::Smoke { steps, pq_levels, input } => {
            let mut v = cfg.vocoder;
            v.steps = steps.unwrap_or(v.steps);
            v.pq_levels = pq_levels.unwrap_or(v.pq_levels);
            v.seed = cli.seed.unwrap_or(v.seed);
            cmd_smoke(&cli, v, input.as_deref())
        }
    }
}

fn emit_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_verify(cli: &Cli, trials: usize, fault: Fault) -> Result<bool> {
    let out = cli.out.as_ref().map(|d| OutDir::prepare(d, cli.force, &["verify.json"])).transpose()?;
    let report = verify::run(cli.seed.unwrap_or(0), trials, fault)?;
    if let Some(out) = &out {
        out.write_json("verify.json", &report)?;
    }
    if cli.json {
        emit_json(&report)?;
    } else {
        println!("{:<10} {:<12} {:<16} {:>11} {:>7}", "layer", "backends", "metric", "max |diff|", "tol");
        for r in &report.equivalence {
            let pair = format!("{}/{}", r.lhs, r.rhs);
            let mark = if r.passed { "ok" } else { "FAIL" };
            println!(
                "{:<10} {:<12} {:<16} {:>11.3e} {:>7.0e} {mark}",
                r.layer.name(),
                pair,
                r.metric.label(),
                r.max_abs_diff,
                r.tolerance
            );
        }
        println!();
        println!("{:<12} {:<8} {:>14}", "gradcheck", "backend", "max rel error");
        for r in &report.gradcheck {
            let b = r.backend.map_or("-".to_string(), |b| b.to_string());
            let mark = if r.passed { "ok" } else { "FAIL" };
            println!("{:<12} {:<8} {:>14.3e} {mark}", r.subject, b, r.max_rel_error);
        }
    }
    for f in report.failures() {
        eprintln!("tolerance breached: {f}");
    }
    Ok(report.passed())
}

fn cmd_bench(cli: &Cli, cfg: cvnn::bench::BenchConfig) -> Result<bool> {
    let out = cli.out.as_ref().map(|d| OutDir::prepare(d, cli.force, &["bench.json"])).transpose()?;
    let report = cvnn::bench::run(&cfg)?;
    if let Some(out) = &out {
        out.write_json("bench.json", &report)?;
    }
    if cli.json {
        emit_json(&report)?;
    } else {
        for stack in [&report.generator, &report.discriminator] {
            println!("{}", stack.name);
            println!("  {:<8} {:>6} {:>12} {:>12}", "backend", "nodes", "fwd ms", "bwd ms");
            for t in &stack.timings {
                println!(
                    "  {:<8} {:>6} {:>12.3} {:>12.3}",
                    t.backend.name(),
                    t.nodes,
                    t.forward_median_s * 1e3,
                    t.backward_median_s * 1e3
                );
            }
        }
        println!("medians over {} repeats after {} warmup", cfg.repeats, cfg.warmup);
        for c in report.checks() {
            let mark = if c.passed { "ok" } else { "FAIL" };
            println!("{:<42} {:.3} <= {:.2} {mark}", c.name, c.value, c.limit);
        }
    }
    Ok(report.passed())
}

#[derive(Serialize)]
struct ToyganSummary {
    seeds: Vec<u64>,
    steps: usize,
    cvnn: ModeSummary,
    rvnn: ModeSummary,
    failed_seeds: Vec<u64>,
}

fn cmd_toygan(cli: &Cli, cfg: &FileConfig, n_seeds: usize) -> Result<bool> {
    anyhow::ensure!(n_seeds >= 1, "--seeds must be at least 1");
    let base = cli.seed.unwrap_or(0);
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| base + i).collect();
    let modes = [Mode::Cvnn, Mode::Rvnn];
    let mut files = vec!["runs.csv".to_string(), "summary.csv".to_string(), "summary.json".to_string()];
    for s in &seeds {
        for m in modes {
            files.push(format!("seed{s}_{m}_samples.csv"));
            files.push(format!("seed{s}_{m}_losses.csv"));
        }
    }
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    let out = OutDir::prepare(&out_dir(cli, "toygan"), cli.force, &names)?;

    let target = sample_target(&cfg.spiral)?;
    let jobs: Vec<(u64, Mode)> = seeds.iter().flat_map(|&s| modes.map(|m| (s, m))).collect();
    let reports: Vec<RunReport> = jobs
        .par_iter()
        .map(|&(seed, mode)| {
            let r = train_toy_gan(&GanConfig::new(mode, cfg.toygan.clone(), seed), &target)?;
            if !cli.json {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
                eprintln!("seed {seed} {mode}: jsd mag {} phase {}", fmt(r.jsd_mag), fmt(r.jsd_phase));
            }
            Ok(r)
        })
        .collect::<cvnn::Result<_>>()?;

    for r in &reports {
        if let Some(z) = &r.samples {
            write_samples_csv(z, out.create(&format!("seed{}_{}_samples.csv", r.seed, r.mode))?)?;
        }
        let mut w = csv::Writer::from_writer(out.create(&format!("seed{}_{}_losses.csv", r.seed, r.mode))?);
        w.write_record(["step", "d_loss", "g_loss"])?;
        for (i, (d, g)) in r.d_loss.iter().zip(&r.g_loss).enumerate() {
            w.write_record([i.to_string(), format!("{d:?}"), format!("{g:?}")])?;
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_writer(out.create("runs.csv")?);
    w.write_record(["seed", "model", "steps_completed", "jsd_mag", "jsd_phase", "failure"])?;
    for r in &reports {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        w.write_record([
            r.seed.to_string(),
            r.mode.to_string(),
            r.steps_completed.to_string(),
            opt(r.jsd_mag),
            opt(r.jsd_phase),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let failed_seeds: Vec<u64> =
        seeds.iter().copied().filter(|s| reports.iter().any(|r| r.seed == *s && !r.succeeded())).collect();
    let summary = ToyganSummary {
        seeds: seeds.clone(),
        steps: cfg.toygan.steps,
        cvnn: summarize(&reports, Mode::Cvnn),
        rvnn: summarize(&reports, Mode::Rvnn),
        failed_seeds,
    };
    let mut w = csv::Writer::from_writer(out.create("summary.csv")?);
    w.write_record(["model", "n", "jsd_mag_median", "jsd_mag_std", "jsd_phase_median", "jsd_phase_std", "failed"])?;
    for m in [&summary.rvnn, &summary.cvnn] {
        let med = |s: Option<cvnn::experiments::Spread>| s.map_or(String::new(), |s| format!("{:?}", s.median));
        let std = |s: Option<cvnn::experiments::Spread>| s.and_then(|s| s.std).map_or(String::new(), |v| format!("{v:?}"));
        let n = m.jsd_mag.map_or(0, |s| s.n);
        w.write_record([
            m.mode.to_string().to_uppercase(),
            n.to_string(),
            med(m.jsd_mag),
            std(m.jsd_mag),
            med(m.jsd_phase),
            std(m.jsd_phase),
            m.failed.to_string(),
        ])?;
    }
    w.flush()?;
    out.write_json("summary.json", &summary)?;

    if cli.json {
        emit_json(&summary)?;
    } else {
        println!("{} seed(s), {} steps", seeds.len(), cfg.toygan.steps);
        println!("{:<6} {:<24} {:<24}", "model", "JSD(mag)", "JSD(phase)");
        for m in [&summary.rvnn, &summary.cvnn] {
            let f = |s: Option<cvnn::experiments::Spread>| s.map_or("-".to_string(), |s| s.to_string());
            println!("{:<6} {:<24} {:<24}", m.mode.to_string().to_uppercase(), f(m.jsd_mag), f(m.jsd_phase));
        }
        if !summary.failed_seeds.is_empty() {
            println!("failed seeds: {:?}", summary.failed_seeds);
        }
        println!("wrote {}", out.path().display());
    }
    Ok(summary.failed_seeds.len() * 2 <= seeds.len())
}

fn cmd_smoke(cli: &Cli, cfg: cvnn::experiments::MiniVocoderConfig, input: Option<&Path>) -> Result<bool> {
    let out = OutDir::prepare(&out_dir(cli, "smoke"), cli.force, &["loss.csv", "output.wav", "smoke.json"])?;
    let wave = match input {
        Some(p) => {
            let (w, sr) = read_wav(p).with_context(|| format!("reading {}", p.display()))?;
            anyhow::ensure!(sr == cfg.sample_rate, "{} is {sr} Hz, config expects {} Hz", p.display(), cfg.sample_rate);
            w
        }
        None => default_signal(cfg.sample_rate),
    };
    let report = mini_vocoder_overfit(&cfg, &wave)?;
    let mut w = csv::Writer::from_writer(out.create("loss.csv")?);
    w.write_record(["step", "mel_l1"])?;
    for (i, l) in report.losses.iter().enumerate() {
        w.write_record([i.to_string(), format!("{l:?}")])?;
    }
    w.flush()?;
    if let Some(y) = &report.wave {
        write_wav(out.path().join("output.wav"), y.data(), cfg.sample_rate)?;
    }
    out.write_json("smoke.json", &report)?;
    if cli.json {
        emit_json(&report)?;
    } else {
        println!("steps {} pq_levels {}", report.steps, report.pq_levels);
        println!("mel-L1 {:.6} -> {:.6} ({:.1}% drop)", report.initial_loss, report.final_loss, 100.0 * report.reduction());
        println!("MR-STFT error {:.4}", report.mr_stft);
        if let Some(f) = &report.failure {
            println!("failure: {f}");
        }
        println!("wrote {}", out.path().display());
    }
    Ok(report.passed())
}

fn out_dir(cli: &Cli, command: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("cvnn_out").join(command))
}
