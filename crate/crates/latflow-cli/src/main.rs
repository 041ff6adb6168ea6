//! Experiment harness: run Monte Carlo plans, verify the geometric
//! property suite, and re-render plots from recorded samples.

mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::{RunConfig, Verification};
use latflow::capacity::CapacityField;
use latflow::estimator::{flow_constant_estimate, run_plan, SampleSeries};
use latflow::lattice::AmbientWindow;
use latflow::patch::canonical_min_cut;
use latflow::suite::{run_suite, SuiteConfig, SuiteReport};

#[derive(Parser)]
#[command(name = "latflow", version, about = "Lattice flow-constant experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the plan: samples.jsonl, summary.csv, manifest.json, plots.
    Run(CommonArgs),
    /// Run the per-realization property suite; nonzero exit on violations.
    Verify(CommonArgs),
    /// Re-render SVGs from an existing output directory.
    Plot(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode) = match &cli.command {
        Command::Run(a) => (a, "run"),
        Command::Verify(a) => (a, "verify"),
        Command::Plot(a) => (a, "plot"),
    };
    let mut cfg = match config::parse_file(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(w) = args.workers {
        cfg.workers = w.max(1);
    }
    if let Some(s) = args.seed {
        cfg.plan.master_seed = s;
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));

    let result = match mode {
        "run" => cmd_run(&cfg, &out_dir),
        "verify" => cmd_verify(&cfg),
        _ => cmd_plot(&cfg, &out_dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(cfg: &RunConfig, out_dir: &Path) -> anyhow::Result<ExitCode> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let started = std::time::Instant::now();
    let series = run_plan(&cfg.plan, cfg.workers).map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut lemma_checks: Option<SuiteReport> = None;
    if cfg.verification != Verification::Off {
        let report = run_verification(cfg)?;
        print_suite(&report);
        lemma_checks = Some(report);
    }

    if cfg.formats.iter().any(|f| f == "jsonl") {
        std::fs::write(out_dir.join("samples.jsonl"), series.to_jsonl())?;
    }
    if cfg.formats.iter().any(|f| f == "csv") {
        std::fs::write(out_dir.join("summary.csv"), series.to_summary_csv())?;
    }
    if cfg.formats.iter().any(|f| f == "svg") {
        write_svgs(cfg, &series, out_dir)?;
    }
    write_manifest(cfg, lemma_checks.as_ref(), started.elapsed(), out_dir)?;

    match flow_constant_estimate(&series) {
        Ok(est) => {
            println!(
                "flow constant estimate: {:.6} (95% CI [{:.6}, {:.6}])",
                est.nu_hat, est.ci_low, est.ci_high
            );
            for (i, mean, lo, hi) in &est.table {
                let r = &cfg.plan.rungs[*i];
                println!("  rung {} {}: ratio {mean:.6} [{lo:.6}, {hi:.6}]", i, r.label());
            }
            if est.single_rung_warning {
                println!("  warning: single rung, no convergence evidence");
            }
        }
        Err(e) => println!("no estimate: {e}"),
    }
    println!("artifacts in {}", out_dir.display());

    if lemma_checks.as_ref().is_some_and(|r| !r.ok()) {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verification(cfg: &RunConfig) -> anyhow::Result<SuiteReport> {
    let mut suite = SuiteConfig::default_for_dim(cfg.plan.dim);
    if let Some(rung) = cfg.plan.rungs.first() {
        // keep the suite box modest: the checks are window-wide
        suite.box_sides = rung.sides.iter().map(|&k| k.min(8).max(2)).collect();
        suite.height = rung.height.min(8).max(2);
    }
    suite.dist = cfg.plan.dist.clone();
    suite.gamma_p_open = cfg.verify_gamma_p;
    suite.t = cfg.plan.t;
    suite.epsilon = cfg.plan.epsilon;
    suite.delta = cfg.plan.delta;
    suite.beta_bar = cfg.plan.beta_bar;
    suite.realizations = cfg.verify_realizations;
    suite.master_seed = cfg.plan.master_seed;
    suite.tamper = cfg.tamper;
    if cfg.verification == Verification::Full && cfg.plan.dim == 2 {
        // full level doubles the budget; the d = 2 dual oracle runs anyway
        suite.realizations = suite.realizations.saturating_mul(2);
    }
    run_suite(&suite, cfg.workers).map_err(|e| anyhow::anyhow!("{e}"))
}

fn print_suite(report: &SuiteReport) {
    for c in &report.counts {
        println!(
            "[{}] {}: pass {} fail {} skip {}",
            if c.fail == 0 { "ok" } else { "FAIL" },
            c.name,
            c.pass,
            c.fail,
            c.skip
        );
    }
    for v in report.violations.iter().take(10) {
        println!("  violation: {v}");
    }
}

fn cmd_verify(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    if cfg.verify_realizations == 0 {
        println!("warning: empty verification budget, nothing checked");
        return Ok(ExitCode::SUCCESS);
    }
    let report = run_verification(cfg)?;
    print_suite(&report);
    if report.ok() {
        println!(
            "all {} checks passed over {} realizations",
            report.counts.len(),
            cfg.verify_realizations
        );
        Ok(ExitCode::SUCCESS)
    } else {
        let first = report
            .violations
            .first()
            .cloned()
            .unwrap_or_else(|| "unknown".into());
        eprintln!("verification failed: {first}");
        Ok(ExitCode::from(1))
    }
}

fn cmd_plot(cfg: &RunConfig, out_dir: &Path) -> anyhow::Result<ExitCode> {
    let path = out_dir.join("samples.jsonl");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}; run the plan first", path.display()))?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line).context("parsing samples.jsonl")?);
    }
    let series = rebuild_series(cfg, records);
    write_svgs(cfg, &series, out_dir)?;
    println!("plots written to {}", out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn rebuild_series(
    cfg: &RunConfig,
    records: Vec<latflow::estimator::SampleRecord>,
) -> SampleSeries {
    // summaries are recomputed from the records
    let mut series = SampleSeries {
        plan: cfg.plan.clone(),
        records,
        summaries: Vec::new(),
    };
    let plan = cfg.plan.clone();
    for i in 0..plan.rungs.len() {
        let recs: Vec<latflow::estimator::SampleRecord> = series
            .records
            .iter()
            .filter(|r| r.rung == i)
            .cloned()
            .collect();
        if recs.is_empty() {
            continue;
        }
        let tmp = run_summary(&plan, i, &recs);
        series.summaries.push(tmp);
    }
    series
}

fn run_summary(
    plan: &latflow::estimator::ExperimentPlan,
    index: usize,
    records: &[latflow::estimator::SampleRecord],
) -> latflow::estimator::RungSummary {
    let rung = &plan.rungs[index];
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.ratio).sum::<f64>() / n;
    let var = if records.len() > 1 {
        records.iter().map(|r| (r.ratio - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sd = var.sqrt();
    let half = 1.96 * sd / n.sqrt();
    latflow::estimator::RungSummary {
        rung_index: index,
        dim: plan.dim,
        sides: rung.sides.clone(),
        height: rung.height,
        replicates: records.len() as u32,
        mean_ratio: mean,
        sd_ratio: sd,
        ci_low: mean - half,
        ci_high: mean + half,
        zero_fraction: records.iter().filter(|r| r.zero_cut).count() as f64 / n,
        mean_nbar: records.iter().map(|r| r.nbar as f64).sum::<f64>() / n,
        oversize_count: records.iter().filter(|r| r.oversize).count() as u64,
        skipped: false,
        skip_reason: None,
    }
}

fn write_svgs(cfg: &RunConfig, series: &SampleSeries, out_dir: &Path) -> anyhow::Result<()> {
    std::fs::write(out_dir.join("convergence.svg"), svg::convergence_svg(series))?;
    if cfg.plan.dim == 2 {
        if let Some(rung) = cfg.plan.rungs.first() {
            let box_spec = rung.box_spec(cfg.plan.dim).map_err(|e| anyhow::anyhow!("{e}"))?;
            let field = CapacityField::sample(
                AmbientWindow::new(box_spec.clone(), 0),
                cfg.plan.dist.clone(),
                cfg.plan.master_seed,
                0,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            let cut = canonical_min_cut(&box_spec, &field).map_err(|e| anyhow::anyhow!("{e}"))?;
            std::fs::write(out_dir.join("cut.svg"), svg::cut_svg(&box_spec, &field, &cut))?;
        }
    }
    Ok(())
}

fn write_manifest(
    cfg: &RunConfig,
    lemma_checks: Option<&SuiteReport>,
    elapsed: std::time::Duration,
    out_dir: &Path,
) -> anyhow::Result<()> {
    let mut manifest = serde_json::json!({
        "tool": "latflow",
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": cfg.plan.master_seed,
        "quantum_bits": latflow::DEFAULT_QUANTUM_BITS,
        "workers": cfg.workers,
        "wall_time_s": elapsed.as_secs_f64(),
        "config": cfg.raw,
    });
    if let Some(report) = lemma_checks {
        manifest["lemma_checks"] = report.to_json();
    }
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}
