//! Credible bands for `Θ(φ)` calibrated by the posterior of the `J` statistic, equal-tailed
//! credible intervals for θ, and marginal projections.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dpposterior::PosteriorDraws;
use crate::error::{param, Error, Result};
use crate::models::{HansenJagannathan, ModelTag, MomentModel, PhiVector, ThetaPrior};
use crate::samplekit::{EmpiricalSample, RngStream};
use crate::setgeom::{hj_feasible_mu, support_value, Direction, IntervalSet, SphereGrid};

/// Smallest number of posterior draws accepted for a quantile.
pub const MIN_DRAWS: usize = 50;

/// Largest admissible fraction of draws with an empty identified set.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

/// Which support-function gaps enter `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sided {
    /// `√n sup|S_φ − S_φ̂|`: calibrates both inner and outer sets.
    TwoSided,
    /// `√n sup(S_φ − S_φ̂)`: calibrates `Θ(φ) ⊆ Θ(φ̂)^{q/√n}` alone.
    Upper,
    /// `√n sup(S_φ̂ − S_φ)`: calibrates `Θ(φ̂)^{−q/√n} ⊆ Θ(φ)` alone.
    Lower,
}

impl Sided {
    pub fn name(self) -> &'static str {
        match self {
            Self::TwoSided => "two-sided",
            Self::Upper => "upper",
            Self::Lower => "lower",
        }
    }

    fn gap(self, s: f64, s_hat: f64) -> f64 {
        match self {
            Self::TwoSided => (s - s_hat).abs(),
            Self::Upper => s - s_hat,
            Self::Lower => s_hat - s,
        }
    }
}

impl fmt::Display for Sided {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sided {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(Self::TwoSided),
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            other => Err(Error::Config(format!("unknown band kind {other:?}"))),
        }
    }
}

/// Support values of `Θ(φ̂)` on a fixed grid, shared by every `J` evaluation.
#[derive(Debug, Clone)]
pub struct SupportProfile {
    pub grid: SphereGrid<f64>,
    pub values: Vec<f64>,
}

impl SupportProfile {
    pub fn new<M: MomentModel<f64> + ?Sized>(model: &M, phi: &[f64], grid: SphereGrid<f64>) -> Result<Self> {
        if grid.dim() != model.dim_theta() {
            return param(format!("grid dimension {} does not match θ dimension {}", grid.dim(), model.dim_theta()));
        }
        let values = grid.iter().map(|nu| support_value(model, phi, nu)).collect::<Result<_>>()?;
        Ok(Self { grid, values })
    }
}

/// `J(φ)` against a precomputed profile of `φ̂`. An empty `Θ(φ)` gives `Err(Infeasible)`.
pub fn j_against_profile<M: MomentModel<f64> + ?Sized>(
    model: &M,
    phi: &[f64],
    profile: &SupportProfile,
    n: usize,
    sided: Sided,
) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for (nu, &s_hat) in profile.grid.iter().zip(&profile.values) {
        sup = sup.max(sided.gap(support_value(model, phi, nu)?, s_hat));
    }
    Ok((n as f64).sqrt() * sup)
}

pub fn j_statistic<M: MomentModel<f64> + ?Sized>(
    model: &M,
    phi: &[f64],
    phi_hat: &[f64],
    n: usize,
    grid: &SphereGrid<f64>,
    sided: Sided,
) -> Result<f64> {
    let profile = SupportProfile::new(model, phi_hat, grid.clone())?;
    j_against_profile(model, phi, &profile, n, sided)
}

/// `Θ(φ̂)^{−q/√n} ⊆ Θ(φ) ⊆ Θ(φ̂)^{q/√n}` with posterior probability `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand {
    pub phi_hat: PhiVector<f64>,
    pub q: f64,
    pub n: usize,
    pub level: f64,
    pub kind: Sided,
    /// Draws whose identified set was empty (`J = +∞`).
    pub excluded_draws: usize,
    pub total_draws: usize,
}

impl CredibleBand {
    /// Offset `q/√n`.
    pub fn radius(&self) -> f64 {
        self.q / (self.n as f64).sqrt()
    }
}

/// All `J(φ⁽ⁱ⁾)` values; draws with empty sets become `+∞`.
pub fn j_sample<M: MomentModel<f64> + ?Sized>(
    model: &M,
    draws: &PosteriorDraws,
    profile: &SupportProfile,
    n: usize,
    sided: Sided,
) -> Result<(Vec<f64>, usize)> {
    let js: Vec<Result<Option<f64>>> = draws
        .draws
        .par_iter()
        .map(|phi| match j_against_profile(model, phi, profile, n, sided) {
            Ok(j) => Ok(Some(j)),
            Err(Error::Infeasible) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut out = Vec::with_capacity(js.len());
    let mut excluded = 0;
    for j in js {
        match j? {
            Some(v) => out.push(v),
            None => {
                excluded += 1;
                out.push(f64::INFINITY);
            }
        }
    }
    Ok((out, excluded))
}

/// Band whose `q` is the `level` posterior quantile of `J`.
pub fn bcs_for_identified_set<M: MomentModel<f64> + ?Sized>(
    model: &M,
    draws: &PosteriorDraws,
    phi_hat: &[f64],
    n: usize,
    level: f64,
    grid: &SphereGrid<f64>,
    sided: Sided,
) -> Result<CredibleBand> {
    bcs_with_min_draws(model, draws, phi_hat, n, level, grid, sided, MIN_DRAWS)
}

#[allow(clippy::too_many_arguments)]
pub fn bcs_with_min_draws<M: MomentModel<f64> + ?Sized>(
    model: &M,
    draws: &PosteriorDraws,
    phi_hat: &[f64],
    n: usize,
    level: f64,
    grid: &SphereGrid<f64>,
    sided: Sided,
    min_draws: usize,
) -> Result<CredibleBand> {
    if draws.len() < min_draws.max(1) {
        return param(format!("{} posterior draws, need at least {min_draws}", draws.len()));
    }
    if !(level > 0.0 && level < 1.0) {
        return param(format!("level must lie in (0,1), got {level}"));
    }
    if n == 0 {
        return param("sample size must be positive");
    }
    if draws.tag != model.tag() && draws.tag != ModelTag::Custom {
        return param(format!("draws are for {}, model is {}", draws.tag, model.tag()));
    }
    let profile = SupportProfile::new(model, phi_hat, grid.clone())?;
    let (js, excluded) = j_sample(model, draws, &profile, n, sided)?;
    if excluded as f64 > MAX_EXCLUDED_FRACTION * draws.len() as f64 {
        return Err(Error::Numeric(format!(
            "{excluded} of {} posterior draws have an empty identified set (limit {:.0}%)",
            draws.len(),
            100.0 * MAX_EXCLUDED_FRACTION
        )));
    }
    let q = EmpiricalSample::new(js)?.quantile(level)?.max(0.0);
    Ok(CredibleBand {
        phi_hat: PhiVector::new(model.tag(), phi_hat.to_vec()),
        q,
        n,
        level,
        kind: sided,
        excluded_draws: excluded,
        total_draws: draws.len(),
    })
}

/// `(inner, outer)` contraction and envelope of `Θ(φ̂) = [−S(−1), S(1)]` by `q/√n` (d = 1).
///
/// Support values are used directly, so a formally inverted `Θ(φ̂)` still yields a
/// nonempty outer set.
pub fn band_to_intervals<M: MomentModel<f64> + ?Sized>(
    band: &CredibleBand,
    model: &M,
) -> Result<(IntervalSet<f64>, IntervalSet<f64>)> {
    if model.dim_theta() != 1 {
        return Err(Error::Domain("band_to_intervals needs a scalar θ; use hj_band_boundary or support values".into()));
    }
    let phi = &band.phi_hat.values;
    let hi = support_value(model, phi, &Direction::axis(1, 0, true))?;
    let lo = -support_value(model, phi, &Direction::axis(1, 0, false))?;
    let r = band.radius();
    Ok((IntervalSet::from_bounds(lo + r, hi - r), IntervalSet::from_bounds(lo - r, hi + r)))
}

/// `[−S_φ(−e_j), S_φ(e_j)]`.
pub fn project_marginal_set<M: MomentModel<f64> + ?Sized>(model: &M, phi: &[f64], j: usize) -> Result<IntervalSet<f64>> {
    let d = model.dim_theta();
    if j >= d {
        return param(format!("coordinate {j} out of range for θ of dimension {d}"));
    }
    let dom = |e: Error| match e {
        Error::Infeasible => Error::Domain("projection of an empty identified set".into()),
        other => other,
    };
    let hi = support_value(model, phi, &Direction::axis(d, j, true)).map_err(dom)?;
    let lo = -support_value(model, phi, &Direction::axis(d, j, false)).map_err(dom)?;
    if lo > hi {
        // Singleton sets can come back inverted by solver round-off.
        let mid = 0.5 * (lo + hi);
        if lo - hi <= 1e-7 * (1.0 + mid.abs()) {
            return IntervalSet::new(mid, mid);
        }
        return Err(Error::Domain(format!("projection bounds inverted: [{lo}, {hi}]")));
    }
    IntervalSet::new(lo, hi)
}

/// Projection BCS for `θ_j`: a one-sided band calibrated on `{e_j, −e_j}`, giving
/// `[−Ŝ(−e_j) − q/√n, Ŝ(e_j) + q/√n]`.
pub fn bcs_for_projection<M: MomentModel<f64> + ?Sized>(
    model: &M,
    draws: &PosteriorDraws,
    phi_hat: &[f64],
    n: usize,
    level: f64,
    j: usize,
) -> Result<(CredibleBand, IntervalSet<f64>)> {
    let d = model.dim_theta();
    if j >= d {
        return param(format!("coordinate {j} out of range for θ of dimension {d}"));
    }
    let band = bcs_for_identified_set(model, draws, phi_hat, n, level, &SphereGrid::projection(d, j), Sided::Upper)?;
    let base = project_marginal_set(model, phi_hat, j)?;
    Ok((band.clone(), base.envelope(band.radius())))
}

/// Equal-tailed interval for a scalar component of θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaCredibleInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// θ draws paired with posterior φ draws; `skipped` counts φ with an empty `Θ(φ)`.
#[derive(Debug, Clone)]
pub struct ThetaDraws {
    pub values: Vec<Vec<f64>>,
    pub skipped: usize,
}

impl ThetaDraws {
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|t| t[j]).collect()
    }
}

/// One `θ⁽ⁱ⁾ ~ π(θ | φ⁽ⁱ⁾)` per posterior draw, draw `i` on substream `i`.
pub fn sample_theta_draws<P: ThetaPrior + ?Sized>(prior: &P, draws: &PosteriorDraws, stream: &RngStream) -> Result<ThetaDraws> {
    let res: Vec<Result<Option<Vec<f64>>>> = draws
        .draws
        .par_iter()
        .enumerate()
        .map(|(i, phi)| prior.sample_theta(&mut stream.substream(i as u64), phi))
        .collect();
    let mut values = Vec::with_capacity(res.len());
    let mut skipped = 0;
    for r in res {
        match r? {
            Some(t) => values.push(t),
            None => skipped += 1,
        }
    }
    Ok(ThetaDraws { values, skipped })
}

/// `[θ^(τ/2), θ^(1−τ/2)]` from the empirical quantiles of the draws.
pub fn bcs_for_theta(theta_draws: &[f64], level: f64) -> Result<ThetaCredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return param(format!("level must lie in (0,1), got {level}"));
    }
    let s = EmpiricalSample::new(theta_draws.to_vec())?;
    let tau = 1.0 - level;
    Ok(ThetaCredibleInterval { lo: s.quantile(tau / 2.0)?, hi: s.quantile(1.0 - tau / 2.0)?, level })
}

/// One vertex of the offset HJ boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub mu: f64,
    pub sigma2: f64,
    /// Set when the offset dips below `σ² = 0`; such points are kept as they are.
    pub below_zero: bool,
}

/// Vertices of `∂Θ(φ)` in counter-clockwise order: the lower arc `max(σ²_φ(μ), 0)` on
/// `mu_points` values across the feasible μ-interval, then the two top corners.
pub fn hj_boundary_polygon(model: &HansenJagannathan<f64>, phi: &[f64], mu_points: usize) -> Result<Vec<[f64; 2]>> {
    let (lo, hi) = hj_feasible_mu(phi, model.theta_box())?.ok_or(Error::Infeasible)?;
    let m = mu_points.max(2);
    let top = model.var_max();
    let mut pts: Vec<[f64; 2]> = (0..m)
        .map(|i| {
            let mu = lo + (hi - lo) * i as f64 / (m - 1) as f64;
            [mu, HansenJagannathan::frontier(phi, mu).clamp(0.0, top)]
        })
        .collect();
    pts.push([hi, top]);
    pts.push([lo, top]);
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    if pts.len() > 1 && pts[0] == pts[pts.len() - 1] {
        pts.pop();
    }
    Ok(pts)
}

/// Outer boundary `∂Θ(φ̂)^{q/√n}`: each polygon vertex is pushed out by `q/√n`, with a
/// circular fan across the normal cone at corners.
pub fn hj_band_boundary(band: &CredibleBand, model: &HansenJagannathan<f64>, mu_points: usize) -> Result<Vec<BoundaryPoint>> {
    if band.phi_hat.tag != ModelTag::HansenJagannathan {
        return param("hj_band_boundary needs an HJ band");
    }
    let poly = hj_boundary_polygon(model, &band.phi_hat.values, mu_points)?;
    let r = band.radius();
    let point = |mu: f64, s: f64| BoundaryPoint { mu, sigma2: s, below_zero: s < 0.0 };
    if r == 0.0 || poly.len() < 3 {
        if poly.len() < 3 && r > 0.0 {
            // Degenerate segment: offset as a stadium.
            return Ok(stadium(&poly, r).into_iter().map(|[a, b]| point(a, b)).collect());
        }
        return Ok(poly.into_iter().map(|[a, b]| point(a, b)).collect());
    }
    let k = poly.len();
    let normal = |a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    };
    let max_step = 2f64.to_radians();
    let mut out = Vec::new();
    for i in 0..k {
        let prev = poly[(i + k - 1) % k];
        let v = poly[i];
        let next = poly[(i + 1) % k];
        let n0 = normal(prev, v);
        let n1 = normal(v, next);
        let a0 = n0[1].atan2(n0[0]);
        let mut turn = n1[1].atan2(n1[0]) - a0;
        while turn < 0.0 {
            turn += std::f64::consts::TAU;
        }
        if turn > std::f64::consts::PI {
            // Reflex turns cannot occur on a convex polygon; treat as round-off.
            turn = 0.0;
        }
        let steps = (turn / max_step).ceil().max(1.0) as usize;
        for s in 0..=steps {
            if s > 0 && turn == 0.0 {
                break;
            }
            let a = a0 + turn * s as f64 / steps as f64;
            out.push(point(v[0] + r * a.cos(), v[1] + r * a.sin()));
        }
    }
    Ok(out)
}

fn stadium(poly: &[[f64; 2]], r: f64) -> Vec<[f64; 2]> {
    let a = poly[0];
    let b = *poly.last().expect("nonempty");
    let base = (b[1] - a[1]).atan2(b[0] - a[0]);
    let mut out = Vec::new();
    for (c, start) in [(b, base - std::f64::consts::FRAC_PI_2), (a, base + std::f64::consts::FRAC_PI_2)] {
        for s in 0..=90 {
            let t = start + std::f64::consts::PI * s as f64 / 90.0;
            out.push([c[0] + r * t.cos(), c[1] + r * t.sin()]);
        }
    }
    out
}
