//! Wall time of the projected BCS against the projected criterion-function set.
//!
//! Both pipelines start from the same simulated data. The BCS side covers posterior
//! sampling and band calibration; the FCS side covers the bootstrap, the sup over the
//! estimated set and the acceptance test on `M` box samples.

use std::path::Path;
use std::time::{Duration, Instant};

use super::config::{check_positive, check_tau, ConfigMap};
use super::projection::{regression_posterior, ProjectionConfig};
use super::report::{fmt_g, write_table};
use crate::credible::bcs_for_projection;
use crate::error::{Error, Result};
use crate::fcs::{project_fcs, CriterionConfig};
use crate::samplekit::RngStream;

/// One `(n, B, K, M)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingCell {
    pub n: usize,
    /// Posterior draws and bootstrap draws.
    pub draws: usize,
    pub truncation: usize,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct TimingConfig {
    pub cells: Vec<TimingCell>,
    pub replications: usize,
    pub d: usize,
    pub tau: f64,
    pub nu0: f64,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            cells: vec![TimingCell { n: 500, draws: 100, truncation: 100, samples: 50 }],
            replications: 50,
            d: 10,
            tau: 0.1,
            nu0: 3.0,
            seed: 1,
        }
    }
}

impl TimingConfig {
    pub const KEYS: &'static [&'static str] = &["n", "B", "K", "M", "replications", "d", "tau", "nu0", "seed"];

    /// `n × B × (K, M)` with `K` and `M` paired by position.
    pub fn paper_grid() -> Vec<TimingCell> {
        let mut cells = Vec::new();
        for n in [500, 1000] {
            for draws in [50, 100, 200] {
                for (truncation, samples) in [(50, 30), (100, 50), (500, 100)] {
                    cells.push(TimingCell { n, draws, truncation, samples });
                }
            }
        }
        cells
    }

    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        m.reject_unknown(Self::KEYS)?;
        let d = Self::default();
        let base = d.cells[0];
        let one = |key: &str, v: usize| -> Result<usize> { check_positive(key, m.get_or(key, v)?) };
        let cfg = Self {
            cells: vec![TimingCell {
                n: one("n", base.n)?,
                draws: one("B", base.draws)?,
                truncation: one("K", base.truncation)?,
                samples: one("M", base.samples)?,
            }],
            replications: one("replications", d.replications)?,
            d: one("d", d.d)?,
            tau: check_tau(m.get_or("tau", d.tau)?)?,
            nu0: m.get_or("nu0", d.nu0)?,
            seed: m.get_or("seed", d.seed)?,
        };
        if cfg.cells[0].draws < 50 {
            return Err(Error::Config("B must be at least 50".into()));
        }
        if !(cfg.nu0 > 0.0) {
            return Err(Error::Config("nu0 must be positive".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingResult {
    pub cell: TimingCell,
    pub replications: usize,
    pub bcs_mean: Duration,
    pub fcs_mean: Duration,
}

impl TimingResult {
    /// FCS time over BCS time.
    pub fn ratio(&self) -> f64 {
        self.fcs_mean.as_secs_f64() / self.bcs_mean.as_secs_f64().max(1e-12)
    }

    pub const HEADER: [&'static str; 8] = ["n", "B", "K", "M", "replications", "bcs_seconds", "fcs_seconds", "ratio"];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.cell.n.to_string(),
            self.cell.draws.to_string(),
            self.cell.truncation.to_string(),
            self.cell.samples.to_string(),
            self.replications.to_string(),
            fmt_g(self.bcs_mean.as_secs_f64()),
            fmt_g(self.fcs_mean.as_secs_f64()),
            fmt_g(self.ratio()),
        ]
    }
}

pub fn write_timing(results: &[TimingResult], path: &Path) -> Result<()> {
    let header: Vec<String> = TimingResult::HEADER.map(String::from).to_vec();
    write_table(path, &header, &results.iter().map(TimingResult::record).collect::<Vec<_>>())
}

fn time_once(cfg: &TimingConfig, proj: &ProjectionConfig, cell: TimingCell, r: u64) -> Result<(Duration, Duration)> {
    let model = proj.model()?;
    let stream = RngStream::new(cfg.seed, r);
    let data = proj.dgp().simulate(&mut stream.labelled("data"), cell.n)?;

    let start = Instant::now();
    let draws = regression_posterior(&model, &stream.labelled("posterior"), &data, cfg.nu0, cell.truncation, cell.draws)?;
    let phi_hat = draws.mean();
    bcs_for_projection(&model, &draws, &phi_hat, cell.n, 1.0 - cfg.tau, 0)?;
    let bcs = start.elapsed();

    let fcfg = CriterionConfig { boot_draws: cell.draws, projection_samples: cell.samples, ..CriterionConfig::default() };
    let start = Instant::now();
    project_fcs(&model, &data, &fcfg, cfg.tau, 0, &stream.labelled("fcs"))?;
    let fcs = start.elapsed();
    Ok((bcs, fcs))
}

/// Mean wall times per cell. Replications run one after another (each pipeline
/// parallelizes internally); a warm-up run on stream `R` is discarded.
pub fn run_timing_bench(cfg: &TimingConfig) -> Result<Vec<TimingResult>> {
    let proj = ProjectionConfig { d: cfg.d, ..ProjectionConfig::default() };
    cfg.cells
        .iter()
        .map(|&cell| {
            time_once(cfg, &proj, cell, cfg.replications as u64)?;
            let (mut bcs, mut fcs) = (Duration::ZERO, Duration::ZERO);
            for r in 0..cfg.replications {
                let (b, f) = time_once(cfg, &proj, cell, r as u64)?;
                bcs += b;
                fcs += f;
            }
            let reps = cfg.replications as u32;
            Ok(TimingResult { cell, replications: cfg.replications, bcs_mean: bcs / reps, fcs_mean: fcs / reps })
        })
        .collect()
}
