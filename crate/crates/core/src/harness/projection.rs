//! Marginal credible sets for one coordinate of the interval-regression θ.

use super::config::{check_positive, check_tau, ConfigMap};
use super::report::{fmt_g, write_table};
use super::run_reps;
use crate::credible::{bcs_for_projection, bcs_for_theta, project_marginal_set, sample_theta_draws};
use crate::dpposterior::{sample_phi_posterior, DataMatrix, DpConfig, PosteriorDraws};
use crate::error::{Error, Result};
use crate::models::{IntervalRegression, MeanFunctional, ModelTag, RegressionDgp, ThetaBox};
use crate::samplekit::RngStream;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct ProjectionConfig {
    pub d: usize,
    /// Sample sizes; one report line per `(n, K, B)` combination.
    pub ns: Vec<usize>,
    pub truncations: Vec<usize>,
    pub draws: Vec<usize>,
    pub replications: usize,
    pub tau: f64,
    pub nu0: f64,
    /// Coordinate of θ to project on (0-based).
    pub coordinate: usize,
    /// Θ = [−box, box]^d.
    pub half_width: f64,
    pub v_noise: f64,
    pub seed: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            d: 10,
            ns: vec![500],
            truncations: vec![50],
            draws: vec![100],
            replications: 50,
            tau: 0.1,
            nu0: 3.0,
            coordinate: 0,
            half_width: 2.0,
            v_noise: RegressionDgp::default().v_noise,
            seed: 1,
        }
    }
}

impl ProjectionConfig {
    pub const KEYS: &'static [&'static str] =
        &["d", "n", "K", "B", "replications", "tau", "nu0", "coordinate", "box", "v_noise", "seed"];

    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        m.reject_unknown(Self::KEYS)?;
        let d = Self::default();
        let cfg = Self {
            d: check_positive("d", m.get_or("d", d.d)?)?,
            ns: m.get_list("n")?.unwrap_or(d.ns),
            truncations: m.get_list("K")?.unwrap_or(d.truncations),
            draws: m.get_list("B")?.unwrap_or(d.draws),
            replications: check_positive("replications", m.get_or("replications", d.replications)?)?,
            tau: check_tau(m.get_or("tau", d.tau)?)?,
            nu0: m.get_or("nu0", d.nu0)?,
            coordinate: m.get_or("coordinate", d.coordinate)?,
            half_width: m.get_or("box", d.half_width)?,
            v_noise: m.get_or("v_noise", d.v_noise)?,
            seed: m.get_or("seed", d.seed)?,
        };
        if cfg.coordinate >= cfg.d {
            return Err(Error::Config(format!("coordinate must be below d = {}", cfg.d)));
        }
        for (name, v) in [("n", &cfg.ns), ("K", &cfg.truncations), ("B", &cfg.draws)] {
            if v.is_empty() || v.contains(&0) {
                return Err(Error::Config(format!("{name} must list positive integers")));
            }
        }
        if !(cfg.nu0 > 0.0) || !(cfg.half_width > 0.0) || !(cfg.v_noise >= 0.0) {
            return Err(Error::Config("nu0 and box must be positive, v_noise nonnegative".into()));
        }
        Ok(cfg)
    }

    pub fn dgp(&self) -> RegressionDgp {
        RegressionDgp { d: self.d, v_noise: self.v_noise, ..RegressionDgp::default() }
    }

    pub fn model(&self) -> Result<IntervalRegression<f64>> {
        Ok(IntervalRegression::new(ThetaBox::cube(self.d, -self.half_width, self.half_width)?))
    }
}

/// DP posterior draws of the interval-regression φ.
pub fn regression_posterior(
    model: &IntervalRegression<f64>,
    stream: &RngStream,
    data: &DataMatrix,
    nu0: f64,
    truncation: usize,
    draws: usize,
) -> Result<PosteriorDraws> {
    sample_phi_posterior(stream, data, &DpConfig::new(nu0, truncation), draws, ModelTag::IntervalRegression, |m| model.phi_from_means(m))
}

/// One replication's marginal-set BCS and θ-BCS endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionRow {
    pub rep: usize,
    pub set_lo: f64,
    pub set_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub q: f64,
    pub skipped_theta: usize,
}

/// Endpoint averages for one `(n, K, B)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCell {
    pub n: usize,
    pub truncation: usize,
    pub draws: usize,
    pub rows: Vec<ProjectionRow>,
    pub truth: [f64; 2],
    pub set_lo: f64,
    pub set_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl ProjectionCell {
    fn new(n: usize, truncation: usize, draws: usize, rows: Vec<ProjectionRow>, truth: [f64; 2]) -> Self {
        let mean = |f: fn(&ProjectionRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
        Self {
            n,
            truncation,
            draws,
            truth,
            set_lo: mean(|r| r.set_lo),
            set_hi: mean(|r| r.set_hi),
            theta_lo: mean(|r| r.theta_lo),
            theta_hi: mean(|r| r.theta_hi),
            rows,
        }
    }

    pub const HEADER: [&'static str; 11] =
        ["n", "K", "B", "replications", "set_lo", "set_hi", "theta_lo", "theta_hi", "truth_lo", "truth_hi", "mean_q"];

    pub fn record(&self) -> Vec<String> {
        let mean_q = self.rows.iter().map(|r| r.q).sum::<f64>() / self.rows.len() as f64;
        vec![
            self.n.to_string(),
            self.truncation.to_string(),
            self.draws.to_string(),
            self.rows.len().to_string(),
            fmt_g(self.set_lo),
            fmt_g(self.set_hi),
            fmt_g(self.theta_lo),
            fmt_g(self.theta_hi),
            fmt_g(self.truth[0]),
            fmt_g(self.truth[1]),
            fmt_g(mean_q),
        ]
    }
}

pub fn write_projection(cells: &[ProjectionCell], summary: &Path, rows: &Path) -> Result<()> {
    let header: Vec<String> = ProjectionCell::HEADER.map(String::from).to_vec();
    write_table(summary, &header, &cells.iter().map(ProjectionCell::record).collect::<Vec<_>>())?;
    let rh: Vec<String> =
        ["n", "K", "B", "rep", "set_lo", "set_hi", "theta_lo", "theta_hi", "q", "skipped_theta"].map(String::from).to_vec();
    let recs: Vec<Vec<String>> = cells
        .iter()
        .flat_map(|c| {
            c.rows.iter().map(move |r| {
                vec![
                    c.n.to_string(),
                    c.truncation.to_string(),
                    c.draws.to_string(),
                    r.rep.to_string(),
                    fmt_g(r.set_lo),
                    fmt_g(r.set_hi),
                    fmt_g(r.theta_lo),
                    fmt_g(r.theta_hi),
                    fmt_g(r.q),
                    r.skipped_theta.to_string(),
                ]
            })
        })
        .collect();
    write_table(rows, &rh, &recs)
}

/// Every `(n, K, B)` cell; replication `r` shares its data stream across cells with equal `n`.
pub fn run_projection_study(cfg: &ProjectionConfig) -> Result<Vec<ProjectionCell>> {
    let model = cfg.model()?;
    let dgp = cfg.dgp();
    let j = cfg.coordinate;
    let truth = project_marginal_set(&model, &dgp.true_phi(), j)?
        .bounds()
        .ok_or_else(|| Error::Numeric("true identified set is empty".into()))?;
    let level = 1.0 - cfg.tau;
    let mut cells = Vec::new();
    for &n in &cfg.ns {
        for &k in &cfg.truncations {
            for &b in &cfg.draws {
                let rows = run_reps(cfg.replications, |r| {
                    let stream = RngStream::new(cfg.seed, r as u64);
                    let data = dgp.simulate(&mut stream.labelled("data"), n)?;
                    let draws = regression_posterior(&model, &stream.labelled("posterior"), &data, cfg.nu0, k, b)?;
                    let phi_hat = draws.mean();
                    let (band, set) = bcs_for_projection(&model, &draws, &phi_hat, n, level, j)?;
                    let (set_lo, set_hi) =
                        set.bounds().ok_or_else(|| Error::Numeric(format!("rep {r}: empty marginal set at φ̂")))?;
                    let theta = sample_theta_draws(&model, &draws, &stream.labelled("theta"))?;
                    let t = bcs_for_theta(&theta.coordinate(j), level)?;
                    Ok(ProjectionRow { rep: r, set_lo, set_hi, theta_lo: t.lo, theta_hi: t.hi, q: band.q, skipped_theta: theta.skipped })
                })?;
                cells.push(ProjectionCell::new(n, k, b, rows, [truth.0, truth.1]));
            }
        }
    }
    Ok(cells)
}
