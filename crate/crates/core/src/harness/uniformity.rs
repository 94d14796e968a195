//! Coverage near point identification: `Θ(φ₀)` of length `Δ` shrinking to a point.
//!
//! Both events use the one-sided upper quantile `q̃`: the upper event is
//! `Θ(φ₀) ⊆ Θ(φ̂)^{q̃/√n}` and the lower event records whether `Θ(φ̂)^{−q̃/√n}` is empty.

use std::time::Instant;

use super::config::{check_positive, check_tau, ConfigMap};
use super::coverage::{missing_data_truth, parse_priors};
use super::report::{fmt_g, CoverageReport, CoverageRow};
use super::run_reps;
use crate::credible::{band_to_intervals, bcs_for_identified_set, Sided};
use crate::error::{Error, Result};
use crate::models::{BetaPrior, GaussianLocation, IntervalMean, MissingCounts, MissingData, ModelTag, MomentModel};
use crate::samplekit::RngStream;
use crate::setgeom::{IntervalSet, SphereGrid};

#[derive(Debug, Clone)]
pub struct UniformityConfig {
    /// `MissingData` or `IntervalMean` (the Gaussian location model).
    pub model: ModelTag,
    pub n: usize,
    pub deltas: Vec<f64>,
    pub replications: usize,
    pub draws: usize,
    pub tau: f64,
    pub prior: BetaPrior,
    pub seed: u64,
}

impl Default for UniformityConfig {
    fn default() -> Self {
        Self {
            model: ModelTag::MissingData,
            n: 100,
            deltas: vec![0.1, 0.05, 0.01, 0.0],
            replications: 1000,
            draws: 1000,
            tau: 0.05,
            prior: BetaPrior::symmetric(1.0, 1.0),
            seed: 1,
        }
    }
}

impl UniformityConfig {
    pub const KEYS: &'static [&'static str] = &["model", "n", "deltas", "replications", "draws", "tau", "prior", "seed"];

    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        m.reject_unknown(Self::KEYS)?;
        let d = Self::default();
        let model = m.get_or("model", d.model)?;
        if !matches!(model, ModelTag::MissingData | ModelTag::IntervalMean) {
            return Err(Error::Config(format!("uniformity study supports missing-data and gaussian, got {model}")));
        }
        let deltas = m.get_list("deltas")?.unwrap_or(d.deltas);
        if deltas.is_empty() || deltas.iter().any(|x: &f64| !(*x >= 0.0) || (model == ModelTag::MissingData && *x > 1.0)) {
            return Err(Error::Config("deltas must be nonnegative (and at most 1 for missing-data)".into()));
        }
        let prior = match m.raw("prior") {
            Some(s) => *parse_priors(s)?.first().ok_or_else(|| Error::Config("empty prior".into()))?,
            None => d.prior,
        };
        Ok(Self {
            model,
            n: check_positive("n", m.get_or("n", d.n)?)?,
            deltas,
            replications: check_positive("replications", m.get_or("replications", d.replications)?)?,
            draws: check_positive("draws", m.get_or("draws", d.draws)?)?,
            tau: check_tau(m.get_or("tau", d.tau)?)?,
            prior,
            seed: m.get_or("seed", d.seed)?,
        })
    }
}

/// True φ for a given `Δ`: `(1 − Δ, 0.5)` for missing data, `(1, 1 + Δ)` for the Gaussian model.
pub fn uniformity_phi0(model: ModelTag, delta: f64) -> [f64; 2] {
    match model {
        ModelTag::MissingData => [1.0 - delta, 0.5],
        _ => [1.0, 1.0 + delta],
    }
}

fn one_rep(cfg: &UniformityConfig, delta: f64, r: usize) -> Result<CoverageRow> {
    let start = Instant::now();
    let stream = RngStream::new(cfg.seed, r as u64);
    let phi0 = uniformity_phi0(cfg.model, delta);
    let grid = SphereGrid::for_dim(1)?;
    let level = 1.0 - cfg.tau;
    let (band, inner, outer, truth) = match cfg.model {
        ModelTag::MissingData => {
            let model = MissingData::<f64>::new();
            let data = MissingData::simulate(&mut stream.labelled("data"), cfg.n, phi0)?;
            let counts = MissingCounts::from_data(&data)?;
            let phi_hat = counts.posterior_mode(&cfg.prior).phi;
            let draws = counts.posterior(&stream.labelled("posterior"), &cfg.prior, cfg.draws)?;
            let band = bcs_for_identified_set(&model, &draws, &phi_hat, cfg.n, level, &grid, Sided::Upper)?;
            let (inner, outer) = band_to_intervals(&band, &model)?;
            (band, inner, outer, missing_data_truth(phi0))
        }
        _ => {
            let model = IntervalMean::<f64>::default();
            let data = GaussianLocation::simulate(&mut stream.labelled("data"), cfg.n, phi0)?;
            let phi_hat = GaussianLocation::point_estimate(&data);
            let draws = GaussianLocation::posterior(&stream.labelled("posterior"), &data, cfg.draws)?;
            debug_assert_eq!(draws.tag, model.tag());
            let band = bcs_for_identified_set(&model, &draws, &phi_hat, cfg.n, level, &grid, Sided::Upper)?;
            let (inner, outer) = band_to_intervals(&band, &model)?;
            (band, inner, outer, IntervalSet::from_bounds(phi0[0], phi0[1]))
        }
    };
    let lower = inner.is_subset_of(&truth);
    let upper = truth.is_subset_of(&outer);
    Ok(CoverageRow {
        rep: r,
        covered_lower: lower,
        covered_upper: upper,
        covered_two_sided: lower && upper,
        inner_empty: inner.is_empty(),
        q: band.q,
        phi_hat: band.phi_hat.values,
        wall_time: start.elapsed(),
    })
}

/// One report per `Δ`, labelled `delta=<Δ>`.
pub fn run_uniformity_study(cfg: &UniformityConfig) -> Result<Vec<CoverageReport>> {
    cfg.deltas
        .iter()
        .map(|&delta| {
            let rows = run_reps(cfg.replications, |r| one_rep(cfg, delta, r))?;
            Ok(CoverageReport::new(format!("{}:delta={}", cfg.model, fmt_g(delta)), rows))
        })
        .collect()
}
