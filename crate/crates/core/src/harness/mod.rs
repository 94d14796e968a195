//! Monte Carlo experiments, their configuration files and CSV reports.
//!
//! Replication `r` always draws from `RngStream::new(seed, r)`, so output does not
//! depend on the number of threads.

pub mod config;
pub mod coverage;
pub mod hj;
pub mod projection;
pub mod report;
pub mod selftest;
pub mod timing;
pub mod uniformity;

pub use config::ConfigMap;
pub use coverage::{run_missing_data_coverage, CoverageConfig, PointChoice};
pub use hj::{run_hj_application, run_hj_study, HjConfig, HjRow, HjStudy};
pub use projection::{run_projection_study, write_projection, ProjectionCell, ProjectionConfig};
pub use report::{fmt_g, CoverageReport, CoverageRow, CoverageSummary, Frequency};
pub use selftest::{run_selftest, Check};
pub use timing::{run_timing_bench, write_timing, TimingCell, TimingConfig, TimingResult};
pub use uniformity::{run_uniformity_study, uniformity_phi0, UniformityConfig};

use rayon::prelude::*;

use crate::error::Result;

/// Runs `f(0..reps)` in parallel and returns results in replication order.
pub(crate) fn run_reps<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    (0..reps).into_par_iter().map(&f).collect()
}

/// Fixes the size of the global worker pool; call once, before any experiment runs.
pub fn init_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(crate::Error::Config("thread count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))
}
