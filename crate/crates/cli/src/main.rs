//! `setid`: run the credible-set experiments and write CSV reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use setid::harness::{
    fmt_g, init_threads, run_hj_application, run_hj_study, run_missing_data_coverage, run_projection_study, run_selftest, run_timing_bench,
    run_uniformity_study, write_projection, write_timing, ConfigMap, CoverageConfig, CoverageReport, HjConfig, ProjectionConfig,
    TimingConfig, UniformityConfig,
};
use setid::Error;

#[derive(Parser)]
#[command(name = "setid", version, about = "Bayesian credible sets for partially identified models")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SETID_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for CSV output.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    /// The single cell from the config.
    Config,
    /// n ∈ {500, 1000} × B ∈ {50, 100, 200} × (K, M) ∈ {(50, 30), (100, 50), (500, 100)}.
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Missing-data coverage of the two-sided band, one block per prior.
    Coverage(Common),
    /// Coverage as the identified set shrinks to a point.
    Uniformity(Common),
    /// Marginal credible sets in the interval regression.
    Project(Common),
    /// Wall time of projected BCS versus projected FCS.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "config")]
        grid: Grid,
    },
    /// SDF mean-variance bound study and plotting bundle.
    Hj(Common),
    /// Quick invariant checks.
    Selftest,
}

fn load(common: &Common) -> Result<ConfigMap, Error> {
    let mut map = match &common.config {
        Some(p) => ConfigMap::from_path(p)?,
        None => ConfigMap::default(),
    };
    if let Some(s) = common.seed {
        map.set("seed", s);
    }
    Ok(map)
}

fn print_coverage(reports: &[CoverageReport]) {
    println!("{:<28} {:>6} {:>9} {:>9} {:>9} {:>11} {:>8}", "label", "reps", "lower", "upper", "two-sided", "inner-empty", "mean q");
    for r in reports {
        let s = &r.summary;
        println!(
            "{:<28} {:>6} {:>9} {:>9} {:>9} {:>11} {:>8}",
            r.label,
            s.replications,
            fmt_g(s.lower.p),
            fmt_g(s.upper.p),
            fmt_g(s.two_sided.p),
            fmt_g(s.inner_empty.p),
            fmt_g(s.mean_q)
        );
    }
}

fn written(paths: &[&Path]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    if let Some(t) = cli.threads {
        init_threads(t)?;
    }
    match cli.command {
        Command::Coverage(c) => {
            let cfg = CoverageConfig::from_map(&load(&c)?)?;
            let reports = run_missing_data_coverage(&cfg)?;
            let (rows, sum) = (c.out.join("coverage_rows.csv"), c.out.join("coverage_summary.csv"));
            CoverageReport::write_all(&reports, &rows, &sum)?;
            print_coverage(&reports);
            written(&[&rows, &sum]);
        }
        Command::Uniformity(c) => {
            let cfg = UniformityConfig::from_map(&load(&c)?)?;
            let reports = run_uniformity_study(&cfg)?;
            let (rows, sum) = (c.out.join("uniformity_rows.csv"), c.out.join("uniformity_summary.csv"));
            CoverageReport::write_all(&reports, &rows, &sum)?;
            print_coverage(&reports);
            written(&[&rows, &sum]);
        }
        Command::Project(c) => {
            let cfg = ProjectionConfig::from_map(&load(&c)?)?;
            let cells = run_projection_study(&cfg)?;
            let (sum, rows) = (c.out.join("projection_summary.csv"), c.out.join("projection_rows.csv"));
            write_projection(&cells, &sum, &rows)?;
            for cell in &cells {
                println!(
                    "n={} K={} B={}: marginal set [{}, {}], theta BCS [{}, {}], truth [{}, {}]",
                    cell.n,
                    cell.truncation,
                    cell.draws,
                    fmt_g(cell.set_lo),
                    fmt_g(cell.set_hi),
                    fmt_g(cell.theta_lo),
                    fmt_g(cell.theta_hi),
                    fmt_g(cell.truth[0]),
                    fmt_g(cell.truth[1])
                );
            }
            written(&[&sum, &rows]);
        }
        Command::Bench { common, grid } => {
            let mut cfg = TimingConfig::from_map(&load(&common)?)?;
            if let Grid::Paper = grid {
                cfg.cells = TimingConfig::paper_grid();
            }
            let results = run_timing_bench(&cfg)?;
            let path = common.out.join("timing.csv");
            write_timing(&results, &path)?;
            println!("FCS sup over the estimated set: multi-start Frank-Wolfe, not the shared sample lattice");
            for r in &results {
                println!(
                    "n={} B={} K={} M={}: BCS {} s, FCS {} s, ratio {}",
                    r.cell.n,
                    r.cell.draws,
                    r.cell.truncation,
                    r.cell.samples,
                    fmt_g(r.bcs_mean.as_secs_f64()),
                    fmt_g(r.fcs_mean.as_secs_f64()),
                    fmt_g(r.ratio())
                );
            }
            written(&[&path]);
        }
        Command::Hj(c) => {
            let cfg = HjConfig::from_map(&load(&c)?)?;
            let study = run_hj_study(&cfg)?;
            let path = c.out.join("hj_seeds.csv");
            study.write_rows(&path)?;
            run_hj_application(&cfg, 0, &c.out)?;
            let infeasible: usize = study.rows.iter().map(|r| r.infeasible_draws).sum();
            println!(
                "truth inside outer boundary: {} (se {}) over {} seeds; two-sided {}",
                fmt_g(study.outer.p),
                fmt_g(study.outer.se),
                study.rows.len(),
                fmt_g(study.two_sided.p)
            );
            println!("infeasible draws flagged: {infeasible}; S(0,1) = var_max for every feasible draw: {}", study.top_exact());
            written(&[
                &path,
                &c.out.join("hj_theta_draws.csv"),
                &c.out.join("hj_support_curves.csv"),
                &c.out.join("hj_boundaries.csv"),
            ]);
        }
        Command::Selftest => {
            let checks = run_selftest()?;
            let mut ok = true;
            for c in &checks {
                println!("{} {}  {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e @ Error::Config(_)) => {
            eprintln!("setid: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("setid: {e}");
            ExitCode::from(3)
        }
    }
}
