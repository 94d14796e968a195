//! Criterion-function confidence sets: `Q_n(θ) = Σⱼ wⱼ max(Ψⱼ(θ, φ̂), 0)²`, a recentred
//! row bootstrap for the critical value, and projection by uniform sampling of the box.

use rayon::prelude::*;

use crate::dpposterior::DataMatrix;
use crate::error::{param, Error, Result};
use crate::linalg::Matrix;
use crate::models::{MeanFunctional, ModelTag, MomentModel, ThetaBox};
use crate::samplekit::{EmpiricalSample, RngStream};
use crate::scalar::dot;
use crate::setgeom::{Direction, IntervalSet, SolveStatus, SolverOptions, SupportSolver};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct CriterionConfig {
    /// Per-inequality weights; `None` means all ones.
    pub weights: Option<Vec<f64>>,
    pub boot_draws: usize,
    /// Slack of the estimated set `{√n·Q_n ≤ t_n}`; `None` means `ln n`.
    pub slack: Option<f64>,
    /// Uniform box samples used for projection.
    pub projection_samples: usize,
    /// Frank–Wolfe iterations per bootstrap sup.
    pub ascent_iters: usize,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self { weights: None, boot_draws: 100, slack: None, projection_samples: 50, ascent_iters: 10 }
    }
}

impl CriterionConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.boot_draws < 50 {
            return param(format!("need at least 50 bootstrap draws, got {}", self.boot_draws));
        }
        if let Some(t) = self.slack {
            if !(t > 0.0 && t.is_finite()) {
                return param("slack t_n must be positive");
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != k || w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return param(format!("need {k} nonnegative finite weights"));
            }
        }
        if self.projection_samples == 0 {
            return param("need at least one projection sample");
        }
        Ok(())
    }

    pub fn slack_for(&self, n: usize) -> f64 {
        self.slack.unwrap_or_else(|| (n as f64).ln())
    }

    fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }
}

/// `Σⱼ wⱼ max(Ψⱼ(θ, φ̂), 0)²`.
pub fn criterion<M: MomentModel<f64> + ?Sized>(model: &M, theta: &[f64], phi_hat: &[f64], cfg: &CriterionConfig) -> f64 {
    model
        .psi(theta, phi_hat)
        .iter()
        .enumerate()
        .map(|(j, &p)| cfg.weight(j) * p.max(0.0).powi(2))
        .sum()
}

/// `{θ ∈ Θ : √n·Q_n(θ) ≤ t_n}` as a one-constraint model, so the support solver applies.
struct EstimatedSet<'a, M: ?Sized> {
    model: &'a M,
    phi_hat: &'a [f64],
    cfg: &'a CriterionConfig,
    root_n: f64,
    slack: f64,
}

impl<M: MomentModel<f64> + ?Sized> MomentModel<f64> for EstimatedSet<'_, M> {
    fn tag(&self) -> ModelTag {
        ModelTag::Custom
    }
    fn dim_theta(&self) -> usize {
        self.model.dim_theta()
    }
    fn dim_phi(&self) -> usize {
        0
    }
    fn num_inequalities(&self) -> usize {
        1
    }
    fn theta_box(&self) -> &ThetaBox<f64> {
        self.model.theta_box()
    }

    fn psi(&self, theta: &[f64], _phi: &[f64]) -> Vec<f64> {
        vec![self.root_n * criterion(self.model, theta, self.phi_hat, self.cfg) - self.slack]
    }

    fn grad_theta_psi(&self, theta: &[f64], _phi: &[f64]) -> Matrix<f64> {
        let d = self.dim_theta();
        let psi = self.model.psi(theta, self.phi_hat);
        let jac = self.model.grad_theta_psi(theta, self.phi_hat);
        let mut g = vec![0.0; d];
        for (j, &p) in psi.iter().enumerate() {
            if p > 0.0 {
                let c = 2.0 * self.root_n * self.cfg.weight(j) * p;
                g.iter_mut().zip(jac.row(j)).for_each(|(a, &b)| *a += c * b);
            }
        }
        Matrix::from_vec(1, d, g).expect("1×d")
    }

    fn hess_theta_psi(&self, theta: &[f64], _phi: &[f64], _i: usize) -> Matrix<f64> {
        let d = self.dim_theta();
        let psi = self.model.psi(theta, self.phi_hat);
        let jac = self.model.grad_theta_psi(theta, self.phi_hat);
        let affine = self.model.affine_in_theta();
        let mut h = Matrix::zeros(d, d);
        for (j, &p) in psi.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let c = 2.0 * self.root_n * self.cfg.weight(j);
            let r = jac.row(j);
            for a in 0..d {
                for b in 0..d {
                    h[(a, b)] += c * r[a] * r[b];
                }
            }
            if !affine {
                let hj = self.model.hess_theta_psi(theta, self.phi_hat, j);
                for a in 0..d {
                    for b in 0..d {
                        h[(a, b)] += c * p * hj[(a, b)];
                    }
                }
            }
        }
        h
    }

    fn grad_phi_psi(&self, _theta: &[f64], _phi: &[f64]) -> Matrix<f64> {
        Matrix::zeros(1, 0)
    }
}

/// Uniform draws on the box, shared by the bootstrap starts and the projection.
pub fn box_samples(bbox: &ThetaBox<f64>, m: usize, stream: &RngStream) -> Vec<Vec<f64>> {
    let mut s = stream.labelled("fcs-box-samples");
    (0..m).map(|_| bbox.sample_uniform(&mut s)).collect()
}

/// Bootstrap distribution of `sup_{θ∈Θ̂} √n Σⱼ wⱼ max(Ψⱼ(θ, φ̂*) − Ψⱼ(θ, φ̂), 0)²`.
#[derive(Debug, Clone)]
pub struct BootstrapDistribution {
    pub stats: EmpiricalSample<f64>,
    /// `Θ̂` was empty and the sup ran over the whole box.
    pub estimated_set_empty: bool,
    pub phi_hat: Vec<f64>,
    pub n: usize,
}

impl BootstrapDistribution {
    /// `c_τ`, the `1 − τ` quantile.
    pub fn critical_value(&self, tau: f64) -> Result<f64> {
        self.stats.quantile(1.0 - tau)
    }
}

/// Linear maximisation oracle over `Θ̂`, or over the box when `Θ̂` is empty.
enum Oracle<'a, M: ?Sized> {
    Set(SupportSolver<'a, f64, EstimatedSet<'a, M>>),
    Box(&'a ThetaBox<f64>),
}

impl<M: MomentModel<f64> + ?Sized> Oracle<'_, M> {
    fn argmax(&self, dir: &[f64]) -> Result<Option<Vec<f64>>> {
        let Ok(nu) = Direction::new(dir.to_vec()) else {
            return Ok(None);
        };
        match self {
            Self::Set(s) => {
                let r = s.solve(&nu)?;
                Ok((r.status != SolveStatus::Infeasible).then_some(r.maximizer))
            }
            Self::Box(b) => Ok(Some(
                nu.as_slice()
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| if v >= 0.0 { b.hi()[j] } else { b.lo()[j] })
                    .collect(),
            )),
        }
    }
}

/// Value and θ-gradient of the recentred bootstrap objective.
fn boot_objective<M: MomentModel<f64> + ?Sized>(
    model: &M,
    theta: &[f64],
    phi_hat: &[f64],
    phi_star: &[f64],
    cfg: &CriterionConfig,
    root_n: f64,
) -> (f64, Vec<f64>) {
    let ps = model.psi(theta, phi_star);
    let ph = model.psi(theta, phi_hat);
    let js = model.grad_theta_psi(theta, phi_star);
    let jh = model.grad_theta_psi(theta, phi_hat);
    let mut val = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for j in 0..ps.len() {
        let dj = ps[j] - ph[j];
        if dj > 0.0 {
            let w = cfg.weight(j);
            val += w * dj * dj;
            for (g, (a, b)) in grad.iter_mut().zip(js.row(j).iter().zip(jh.row(j))) {
                *g += 2.0 * root_n * w * dj * (a - b);
            }
        }
    }
    (root_n * val, grad)
}

/// Direction of steepest growth of `Ψⱼ(·, φ̂*) − Ψⱼ(·, φ̂)` at θ.
fn moment_gap_gradient<M: MomentModel<f64> + ?Sized>(model: &M, theta: &[f64], phi_hat: &[f64], phi_star: &[f64], j: usize) -> Vec<f64> {
    let js = model.grad_theta_psi(theta, phi_star);
    let jh = model.grad_theta_psi(theta, phi_hat);
    js.row(j).iter().zip(jh.row(j)).map(|(a, b)| a - b).collect()
}

#[allow(clippy::too_many_arguments)]
fn sup_over_estimated_set<M: MomentModel<f64> + ?Sized>(
    model: &M,
    oracle: &Oracle<'_, M>,
    interior: &[f64],
    shared: &[Vec<f64>],
    phi_hat: &[f64],
    phi_star: &[f64],
    cfg: &CriterionConfig,
    root_n: f64,
) -> Result<f64> {
    let eval = |t: &[f64]| boot_objective(model, t, phi_hat, phi_star, cfg, root_n);
    let mut best_theta = interior.to_vec();
    let mut best = eval(interior).0;
    let consider = |t: Vec<f64>, best: &mut f64, best_theta: &mut Vec<f64>| {
        let v = eval(&t).0;
        if v > *best {
            *best = v;
            *best_theta = t;
        }
    };
    for t in shared {
        consider(t.clone(), &mut best, &mut best_theta);
    }
    for j in 0..model.num_inequalities() {
        let g = moment_gap_gradient(model, interior, phi_hat, phi_star, j);
        if let Some(t) = oracle.argmax(&g)? {
            consider(t, &mut best, &mut best_theta);
        }
    }
    // Frank–Wolfe ascent: for a convex objective the linearised maximiser never decreases it.
    for _ in 0..cfg.ascent_iters {
        let (v, g) = eval(&best_theta);
        if dot(&g, &g) == 0.0 {
            break;
        }
        let Some(t) = oracle.argmax(&g)? else { break };
        let vt = eval(&t).0;
        if vt <= v * (1.0 + 1e-12) {
            break;
        }
        best = vt;
        best_theta = t;
    }
    Ok(best)
}

/// Sample means of rows drawn with replacement.
fn resampled_means(data: &DataMatrix, stream: &mut RngStream) -> Vec<f64> {
    let (n, p) = (data.n(), data.p());
    let mut m = vec![0.0; p];
    for _ in 0..n {
        let r = data.row(stream.random_range(0..n));
        m.iter_mut().zip(r).for_each(|(a, &x)| *a += x);
    }
    m.iter_mut().for_each(|a| *a /= n as f64);
    m
}

/// Bootstrap draw `b` uses substream `b` of `stream`.
pub fn bootstrap_distribution<M>(model: &M, data: &DataMatrix, cfg: &CriterionConfig, stream: &RngStream) -> Result<BootstrapDistribution>
where
    M: MomentModel<f64> + MeanFunctional + ?Sized,
{
    let shared = box_samples(model.theta_box(), cfg.projection_samples, stream);
    bootstrap_with_samples(model, data, cfg, stream, &shared)
}

fn bootstrap_with_samples<M>(
    model: &M,
    data: &DataMatrix,
    cfg: &CriterionConfig,
    stream: &RngStream,
    shared: &[Vec<f64>],
) -> Result<BootstrapDistribution>
where
    M: MomentModel<f64> + MeanFunctional + ?Sized,
{
    cfg.validate(model.num_inequalities())?;
    let n = data.n();
    let phi_hat = model.phi_from_means(&data.column_means())?;
    model.check_phi(&phi_hat)?;
    let root_n = (n as f64).sqrt();
    let slack = cfg.slack_for(n);
    let set = EstimatedSet { model, phi_hat: &phi_hat, cfg, root_n, slack };
    let solver = SupportSolver::new(&set, &[], SolverOptions::with_tol(1e-7))?;
    let (oracle, interior, empty) = match solver.interior_point() {
        Some(p) if solver.is_feasible() => (Oracle::Set(solver), p, false),
        _ => (Oracle::Box(model.theta_box()), model.theta_box().center(), true),
    };
    let in_set: Vec<Vec<f64>> = shared
        .iter()
        .filter(|t| empty || root_n * criterion(model, t, &phi_hat, cfg) <= slack)
        .cloned()
        .collect();
    let stats: Vec<Result<f64>> = (0..cfg.boot_draws as u64)
        .into_par_iter()
        .map(|b| {
            let mut s = stream.substream(b);
            let means = resampled_means(data, &mut s);
            let phi_star = match model.phi_from_means(&means) {
                Ok(p) => p,
                // A resample with no information on some moment contributes nothing.
                Err(Error::Numeric(_)) => return Ok(0.0),
                Err(e) => return Err(e),
            };
            sup_over_estimated_set(model, &oracle, &interior, &in_set, &phi_hat, &phi_star, cfg, root_n)
        })
        .collect();
    Ok(BootstrapDistribution {
        stats: EmpiricalSample::new(stats.into_iter().collect::<Result<_>>()?)?,
        estimated_set_empty: empty,
        phi_hat,
        n,
    })
}

/// `c_τ` from a fresh bootstrap.
pub fn bootstrap_critical_value<M>(model: &M, data: &DataMatrix, cfg: &CriterionConfig, tau: f64, stream: &RngStream) -> Result<f64>
where
    M: MomentModel<f64> + MeanFunctional + ?Sized,
{
    bootstrap_distribution(model, data, cfg, stream)?.critical_value(tau)
}

#[derive(Debug, Clone)]
pub struct FcsProjection {
    pub interval: IntervalSet<f64>,
    pub critical_value: f64,
    pub accepted: usize,
    pub samples: usize,
    pub estimated_set_empty: bool,
}

impl FcsProjection {
    /// No sample passed the test; `interval` is empty.
    pub fn is_empty(&self) -> bool {
        self.accepted == 0
    }
}

/// `[min, max]` of `θ_j` over the samples with `√n·Q_n(θ) ≤ c`.
pub fn project_accepted<M: MomentModel<f64> + ?Sized>(
    model: &M,
    phi_hat: &[f64],
    n: usize,
    samples: &[Vec<f64>],
    c: f64,
    cfg: &CriterionConfig,
    j: usize,
) -> (IntervalSet<f64>, usize) {
    let root_n = (n as f64).sqrt();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut count = 0;
    for t in samples {
        if root_n * criterion(model, t, phi_hat, cfg) <= c {
            lo = lo.min(t[j]);
            hi = hi.max(t[j]);
            count += 1;
        }
    }
    (IntervalSet::from_bounds(lo, hi), count)
}

/// Projected FCS for `θ_j` at level `1 − τ`.
pub fn project_fcs<M>(
    model: &M,
    data: &DataMatrix,
    cfg: &CriterionConfig,
    tau: f64,
    j: usize,
    stream: &RngStream,
) -> Result<FcsProjection>
where
    M: MomentModel<f64> + MeanFunctional + ?Sized,
{
    if j >= model.dim_theta() {
        return param(format!("coordinate {j} out of range"));
    }
    let samples = box_samples(model.theta_box(), cfg.projection_samples, stream);
    let boot = bootstrap_with_samples(model, data, cfg, stream, &samples)?;
    let c = boot.critical_value(tau)?;
    let (interval, accepted) = project_accepted(model, &boot.phi_hat, data.n(), &samples, c, cfg, j);
    Ok(FcsProjection { interval, critical_value: c, accepted, samples: samples.len(), estimated_set_empty: boot.estimated_set_empty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{IntervalMean, MissingData};

    #[test]
    fn criterion_examples() {
        let m = IntervalMean::<f64>::default();
        let cfg = CriterionConfig::default();
        assert_eq!(criterion(&m, &[0.5], &[0.0, 1.0], &cfg), 0.0);
        assert_eq!(criterion(&m, &[1.5], &[0.0, 1.0], &cfg), 0.25);
        let w = CriterionConfig { weights: Some(vec![1.0, 2.0]), ..CriterionConfig::default() };
        assert_eq!(criterion(&m, &[1.5], &[0.0, 1.0], &w), 0.5);
    }

    #[test]
    fn zero_variance_data_gives_zero_critical_value() {
        let flat = DataMatrix::from_vec(40, 2, [1.0, 1.0].repeat(40)).unwrap();
        let m = MissingData::<f64>::new();
        let c = bootstrap_critical_value(&m, &flat, &CriterionConfig::default(), 0.1, &RngStream::new(1, 0)).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn huge_critical_value_accepts_whole_box() {
        let m = MissingData::<f64>::new();
        let samples = box_samples(m.theta_box(), 2000, &RngStream::new(2, 0));
        let cfg = CriterionConfig::default();
        let (iv, k) = project_accepted(&m, &[0.7, 0.5], 100, &samples, 1e12, &cfg, 0);
        assert_eq!(k, 2000);
        let (lo, hi) = iv.bounds().unwrap();
        assert!(lo < 0.01 && hi > 0.99);
        let (small, _) = project_accepted(&m, &[0.7, 0.5], 100, &samples, 0.0, &cfg, 0);
        let (lo2, hi2) = small.bounds().unwrap();
        assert!(lo2 >= lo && hi2 <= hi && lo2 > 0.34 && hi2 < 0.66);
    }

    #[test]
    fn fcs_contains_identified_set_for_missing_data() {
        let m = MissingData::<f64>::new();
        let data = MissingData::simulate(&mut RngStream::new(3, 0), 500, [0.7, 0.5]).unwrap();
        let cfg = CriterionConfig { projection_samples: 2000, ..CriterionConfig::default() };
        let p = project_fcs(&m, &data, &cfg, 0.1, 0, &RngStream::new(3, 1)).unwrap();
        assert!(!p.estimated_set_empty && p.critical_value > 0.0);
        let (lo, hi) = p.interval.bounds().unwrap();
        assert!(lo < 0.37 && hi > 0.63, "[{lo}, {hi}]");
        let dist = bootstrap_distribution(&m, &data, &cfg, &RngStream::new(3, 1)).unwrap();
        assert!(dist.critical_value(0.05).unwrap() >= dist.critical_value(0.2).unwrap());
    }
}
