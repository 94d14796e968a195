//! Mean–variance SDF bound: posterior draws, support curves and band boundaries.

use std::path::Path;

use super::config::{check_positive, check_tau, ConfigMap};
use super::report::{fmt_g, write_table, Frequency};
use super::run_reps;
use crate::credible::{bcs_for_identified_set, hj_band_boundary, hj_boundary_polygon, sample_theta_draws, Sided};
use crate::dpposterior::{DpConfig, PosteriorDraws};
use crate::error::{Error, Result};
use crate::models::{HansenJagannathan, HjDgp};
use crate::samplekit::{EmpiricalSample, RngStream};
use crate::setgeom::{support_excess, support_value, Direction, SphereGrid};

#[derive(Debug, Clone)]
pub struct HjConfig {
    pub dgp: HjDgp,
    pub n: usize,
    pub draws: usize,
    pub nu0: f64,
    pub truncation: usize,
    pub tau: f64,
    pub mu_max: f64,
    pub var_max: f64,
    /// Number of seeds (replications); loadings are redrawn for each.
    pub replications: usize,
    /// Directions on the circle used to calibrate the band.
    pub band_directions: usize,
    /// Directions used for the containment check.
    pub check_directions: usize,
    pub mu_points: usize,
    pub seed: u64,
}

impl Default for HjConfig {
    fn default() -> Self {
        Self {
            dgp: HjDgp::default(),
            n: 200,
            draws: 1000,
            nu0: 3.0,
            truncation: 50,
            tau: 0.05,
            mu_max: 1.4,
            var_max: 6.0,
            replications: 50,
            band_directions: 256,
            check_directions: 2048,
            mu_points: 200,
            seed: 1,
        }
    }
}

impl HjConfig {
    pub const KEYS: &'static [&'static str] = &[
        "assets",
        "factors",
        "shift",
        "half_width",
        "n",
        "draws",
        "nu0",
        "K",
        "tau",
        "mu_max",
        "var_max",
        "replications",
        "band_directions",
        "check_directions",
        "mu_points",
        "seed",
    ];

    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        m.reject_unknown(Self::KEYS)?;
        let d = Self::default();
        let pos = |key: &str, v: usize| -> Result<usize> { check_positive(key, m.get_or(key, v)?) };
        let cfg = Self {
            dgp: HjDgp {
                assets: pos("assets", d.dgp.assets)?,
                factors: pos("factors", d.dgp.factors)?,
                shift: m.get_or("shift", d.dgp.shift)?,
                half_width: m.get_or("half_width", d.dgp.half_width)?,
            },
            n: pos("n", d.n)?,
            draws: pos("draws", d.draws)?,
            nu0: m.get_or("nu0", d.nu0)?,
            truncation: pos("K", d.truncation)?,
            tau: check_tau(m.get_or("tau", d.tau)?)?,
            mu_max: m.get_or("mu_max", d.mu_max)?,
            var_max: m.get_or("var_max", d.var_max)?,
            replications: pos("replications", d.replications)?,
            band_directions: pos("band_directions", d.band_directions)?,
            check_directions: pos("check_directions", d.check_directions)?,
            mu_points: pos("mu_points", d.mu_points)?,
            seed: m.get_or("seed", d.seed)?,
        };
        if !(cfg.nu0 > 0.0 && cfg.mu_max > 0.0 && cfg.var_max > 0.0 && cfg.dgp.half_width > 0.0) {
            return Err(Error::Config("nu0, mu_max, var_max and half_width must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<HansenJagannathan<f64>> {
        HansenJagannathan::new(self.mu_max, self.var_max)
    }
}

/// One seed of the HJ study.
#[derive(Debug, Clone, PartialEq)]
pub struct HjRow {
    pub rep: usize,
    /// `Θ(φ₀) ⊆ Θ(φ̂)^{q/√n}`.
    pub truth_inside_outer: bool,
    /// `Θ(φ̂)^{−q/√n} ⊆ Θ(φ₀)`.
    pub inner_inside_truth: bool,
    pub q: f64,
    pub phi_hat: Vec<f64>,
    /// Draws with an empty `Θ(φ⁽ⁱ⁾)`.
    pub infeasible_draws: usize,
    /// Feasible draws whose `S(0, 1)` differs from `σ̄²`.
    pub top_mismatches: usize,
}

#[derive(Debug, Clone)]
pub struct HjStudy {
    pub rows: Vec<HjRow>,
    pub outer: Frequency,
    pub two_sided: Frequency,
}

impl HjStudy {
    pub fn top_exact(&self) -> bool {
        self.rows.iter().all(|r| r.top_mismatches == 0)
    }

    pub fn write_rows(&self, path: &Path) -> Result<()> {
        let k = self.rows.first().map_or(0, |r| r.phi_hat.len());
        let mut header: Vec<String> =
            ["rep", "truth_inside_outer", "inner_inside_truth", "q", "infeasible_draws", "top_mismatches"].map(String::from).to_vec();
        header.extend((1..=k).map(|i| format!("phi_hat_{i}")));
        let recs: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut v = vec![
                    r.rep.to_string(),
                    u8::from(r.truth_inside_outer).to_string(),
                    u8::from(r.inner_inside_truth).to_string(),
                    fmt_g(r.q),
                    r.infeasible_draws.to_string(),
                    r.top_mismatches.to_string(),
                ];
                v.extend(r.phi_hat.iter().map(|&x| fmt_g(x)));
                v
            })
            .collect();
        write_table(path, &header, &recs)
    }
}

struct SeedRun {
    model: HansenJagannathan<f64>,
    phi0: Vec<f64>,
    draws: PosteriorDraws,
    band: crate::credible::CredibleBand,
    stream: RngStream,
}

fn run_seed(cfg: &HjConfig, r: usize) -> Result<(HjRow, SeedRun)> {
    let model = cfg.model()?;
    let stream = RngStream::new(cfg.seed, r as u64);
    let rep = cfg.dgp.replication(&mut stream.labelled("loadings"))?;
    let phi0 = rep.true_phi()?;
    let data = rep.simulate(&mut stream.labelled("data"), cfg.n)?;
    let draws =
        HansenJagannathan::posterior(&stream.labelled("posterior"), &data, &DpConfig::new(cfg.nu0, cfg.truncation), cfg.draws)?;
    let phi_hat = draws.mean();
    let grid = SphereGrid::with_size(2, cfg.band_directions)?.with_axes();
    let band = bcs_for_identified_set(&model, &draws, &phi_hat, cfg.n, 1.0 - cfg.tau, &grid, Sided::TwoSided)?;
    let check = SphereGrid::with_size(2, cfg.check_directions)?;
    let radius = band.radius();
    let excess = |a: &[f64], b: &[f64]| match support_excess(&model, a, b, &check) {
        Ok(e) => Ok(Some(e)),
        Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    };
    if support_value(&model, &phi0, &Direction::axis(2, 1, true)).is_err() {
        return Err(Error::Numeric(format!("seed {r}: the true identified set is empty")));
    }
    let outer = excess(&phi0, &phi_hat)?;
    let inner = excess(&phi_hat, &phi0)?;
    let up = Direction::axis(2, 1, true);
    let (mut infeasible, mut mismatches) = (0, 0);
    for phi in &draws.draws {
        match support_value(&model, phi, &up) {
            Ok(s) if s == cfg.var_max => {}
            Ok(_) => mismatches += 1,
            Err(Error::Infeasible) => infeasible += 1,
            Err(e) => return Err(e),
        }
    }
    let row = HjRow {
        rep: r,
        truth_inside_outer: outer.is_some_and(|e| e <= radius),
        inner_inside_truth: inner.is_some_and(|e| e <= radius),
        q: band.q,
        phi_hat,
        infeasible_draws: infeasible,
        top_mismatches: mismatches,
    };
    Ok((row, SeedRun { model, phi0, draws, band, stream }))
}

/// Coverage over seeds `0..R`.
pub fn run_hj_study(cfg: &HjConfig) -> Result<HjStudy> {
    let rows = run_reps(cfg.replications, |r| run_seed(cfg, r).map(|(row, _)| row))?;
    let hits = rows.iter().filter(|r| r.truth_inside_outer).count();
    let both = rows.iter().filter(|r| r.truth_inside_outer && r.inner_inside_truth).count();
    Ok(HjStudy { outer: Frequency::of(hits, rows.len()), two_sided: Frequency::of(both, rows.len()), rows })
}

/// Writes the plotting inputs for seed `rep` into `dir`:
/// `hj_theta_draws.csv`, `hj_support_curves.csv` and `hj_boundaries.csv`.
pub fn run_hj_application(cfg: &HjConfig, rep: usize, dir: &Path) -> Result<HjRow> {
    let (row, run) = run_seed(cfg, rep)?;
    let SeedRun { model, phi0, draws, band, stream } = run;

    let theta = sample_theta_draws(&model, &draws, &stream.labelled("theta"))?;
    let recs: Vec<Vec<String>> = theta.values.iter().map(|t| vec![fmt_g(t[0]), fmt_g(t[1])]).collect();
    write_table(&dir.join("hj_theta_draws.csv"), &["mu".into(), "sigma2".into()], &recs)?;

    let arc = SphereGrid::with_size(2, 180)?;
    let mut recs = Vec::with_capacity(arc.len());
    for nu in arc.iter() {
        let feasible: Vec<f64> = draws.draws.iter().filter_map(|phi| support_value(&model, phi, nu).ok()).collect();
        let s = EmpiricalSample::new(feasible)?;
        let angle = nu.as_slice()[1].atan2(nu.as_slice()[0]);
        recs.push(vec![
            fmt_g(angle),
            fmt_g(nu.as_slice()[0]),
            fmt_g(nu.as_slice()[1]),
            fmt_g(support_value(&model, &phi0, nu)?),
            fmt_g(support_value(&model, &row.phi_hat, nu)?),
            fmt_g(s.quantile(cfg.tau / 2.0)?),
            fmt_g(s.quantile(1.0 - cfg.tau / 2.0)?),
        ]);
    }
    let header = ["angle", "nu1", "nu2", "s_true", "s_hat", "s_draws_lo", "s_draws_hi"].map(String::from).to_vec();
    write_table(&dir.join("hj_support_curves.csv"), &header, &recs)?;

    let mut recs = Vec::new();
    let mut push = |curve: &str, pts: Vec<(f64, f64, bool)>| {
        for (i, (mu, s, below)) in pts.into_iter().enumerate() {
            recs.push(vec![curve.to_string(), i.to_string(), fmt_g(mu), fmt_g(s), u8::from(below).to_string()]);
        }
    };
    let poly = |phi: &[f64]| -> Result<Vec<(f64, f64, bool)>> {
        Ok(hj_boundary_polygon(&model, phi, cfg.mu_points)?.into_iter().map(|[m, s]| (m, s, s < 0.0)).collect())
    };
    push("truth", poly(&phi0)?);
    push("estimate", poly(&row.phi_hat)?);
    push(
        "outer",
        hj_band_boundary(&band, &model, cfg.mu_points)?.into_iter().map(|p| (p.mu, p.sigma2, p.below_zero)).collect(),
    );
    let header = ["curve", "index", "mu", "sigma2", "below_zero"].map(String::from).to_vec();
    write_table(&dir.join("hj_boundaries.csv"), &header, &recs)?;
    Ok(row)
}
