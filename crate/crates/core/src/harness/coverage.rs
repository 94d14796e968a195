//! Frequentist coverage of the two-sided band in the missing-data model.

use std::time::Instant;

use super::config::{check_positive, check_tau, ConfigMap};
use super::report::{CoverageReport, CoverageRow};
use super::run_reps;
use crate::credible::{band_to_intervals, bcs_for_identified_set, Sided};
use crate::error::{Error, Result};
use crate::models::{BetaPrior, MissingCounts, MissingData};
use crate::samplekit::RngStream;
use crate::setgeom::{IntervalSet, SphereGrid};

/// Which posterior summary serves as `φ̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointChoice {
    Mode,
    Mean,
}

impl std::str::FromStr for PointChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Self::Mode),
            "mean" => Ok(Self::Mean),
            other => Err(Error::Config(format!("phi_hat must be mode or mean, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub n: usize,
    pub replications: usize,
    pub draws: usize,
    pub tau: f64,
    pub priors: Vec<BetaPrior>,
    pub phi0: [f64; 2],
    pub point: PointChoice,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            n: 500,
            replications: 500,
            draws: 1000,
            tau: 0.05,
            priors: vec![BetaPrior::symmetric(1.0, 1.0)],
            phi0: [0.7, 0.5],
            point: PointChoice::Mode,
            seed: 1,
        }
    }
}

pub(crate) fn parse_priors(s: &str) -> Result<Vec<BetaPrior>> {
    s.split(',')
        .map(|p| {
            let (a, b) = p.trim().split_once(':').ok_or_else(|| Error::Config(format!("prior {p:?} must be alpha:beta")))?;
            let a: f64 = a.trim().parse().map_err(|_| Error::Config(format!("bad prior alpha {a:?}")))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::Config(format!("bad prior beta {b:?}")))?;
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Config("prior shapes must be positive".into()));
            }
            Ok(BetaPrior::symmetric(a, b))
        })
        .collect()
}

impl CoverageConfig {
    pub const KEYS: &'static [&'static str] = &["n", "replications", "draws", "tau", "priors", "phi1", "phi2", "phi_hat", "seed"];

    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        m.reject_unknown(Self::KEYS)?;
        let d = Self::default();
        let phi0 = [m.get_or("phi1", d.phi0[0])?, m.get_or("phi2", d.phi0[1])?];
        if phi0.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("phi1, phi2 must lie in [0,1]".into()));
        }
        Ok(Self {
            n: check_positive("n", m.get_or("n", d.n)?)?,
            replications: check_positive("replications", m.get_or("replications", d.replications)?)?,
            draws: check_positive("draws", m.get_or("draws", d.draws)?)?,
            tau: check_tau(m.get_or("tau", d.tau)?)?,
            priors: match m.raw("priors") {
                Some(s) => parse_priors(s)?,
                None => d.priors,
            },
            phi0,
            point: m.get_or("phi_hat", d.point)?,
            seed: m.get_or("seed", d.seed)?,
        })
    }
}

pub fn prior_label(p: &BetaPrior) -> String {
    format!("beta({}:{})", p.a1, p.b1)
}

/// `Θ(φ₀) = [φ₁φ₂, φ₁φ₂ + 1 − φ₁]`.
pub fn missing_data_truth(phi0: [f64; 2]) -> IntervalSet<f64> {
    let lo = phi0[0] * phi0[1];
    IntervalSet::from_bounds(lo, lo + 1.0 - phi0[0])
}

/// One report per prior; replication `r` draws its data from `RngStream::new(seed, r)`,
/// shared across priors.
pub fn run_missing_data_coverage(cfg: &CoverageConfig) -> Result<Vec<CoverageReport>> {
    let model = MissingData::<f64>::new();
    let truth = missing_data_truth(cfg.phi0);
    let grid = SphereGrid::for_dim(1)?;
    cfg.priors
        .iter()
        .map(|prior| {
            let rows = run_reps(cfg.replications, |r| {
                let start = Instant::now();
                let stream = RngStream::new(cfg.seed, r as u64);
                let data = MissingData::simulate(&mut stream.labelled("data"), cfg.n, cfg.phi0)?;
                let counts = MissingCounts::from_data(&data)?;
                let phi_hat = match cfg.point {
                    PointChoice::Mode => counts.posterior_mode(prior).phi,
                    PointChoice::Mean => counts.posterior_mean(prior),
                };
                let draws = counts.posterior(&stream.labelled("posterior"), prior, cfg.draws)?;
                let band = bcs_for_identified_set(&model, &draws, &phi_hat, cfg.n, 1.0 - cfg.tau, &grid, Sided::TwoSided)?;
                let (inner, outer) = band_to_intervals(&band, &model)?;
                let lower = inner.is_subset_of(&truth);
                let upper = truth.is_subset_of(&outer);
                Ok(CoverageRow {
                    rep: r,
                    covered_lower: lower,
                    covered_upper: upper,
                    covered_two_sided: lower && upper,
                    inner_empty: inner.is_empty(),
                    q: band.q,
                    phi_hat,
                    wall_time: start.elapsed(),
                })
            })?;
            Ok(CoverageReport::new(prior_label(prior), rows))
        })
        .collect()
}
