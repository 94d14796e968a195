//! Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;

use setid::credible::{bcs_for_identified_set, project_marginal_set, Sided};
use setid::dpposterior::DataMatrix;
use setid::harness::{
    run_hj_study, run_missing_data_coverage, run_projection_study, run_timing_bench, run_uniformity_study, CoverageConfig,
    HjConfig, ProjectionConfig, TimingCell, TimingConfig, UniformityConfig,
};
use setid::linalg::Matrix;
use setid::models::{
    BetaPrior, GaussianLocation, HansenJagannathan, HjDgp, IntervalMean, IntervalRegression, MissingCounts, MissingData, ModelTag,
    MomentModel, Polytope, RegressionDgp, ThetaBox,
};
use setid::samplekit::{draw_std_normal, draw_uniform, std_normal_quantile, EmpiricalSample, RngStream};
use setid::setgeom::{hausdorff_via_support, linearization_coeffs, support_solve, support_value, Direction, SphereGrid};
use setid::Result;

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome>;

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

/// Coverage frequencies in the missing-data model at n = 500.
fn c1_missing_data_coverage() -> Result<Outcome> {
    let cfg = CoverageConfig {
        priors: vec![BetaPrior::symmetric(1.0, 1.0), BetaPrior::symmetric(0.1, 0.1), BetaPrior::symmetric(2.0, 2.0)],
        ..CoverageConfig::default()
    };
    let start = std::time::Instant::now();
    let reports = run_missing_data_coverage(&cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let p: Vec<f64> = reports.iter().map(|r| r.summary.two_sided.p).collect();
    let ok = (0.92..=0.97).contains(&p[0]) && (p[1] - 0.950).abs() <= 0.03 && (p[2] - 0.956).abs() <= 0.03 && secs < 120.0;
    outcome(ok, format!("two-sided (1,1) {:.3}, (0.1,0.1) {:.3}, (2,2) {:.3} in {secs:.1} s", p[0], p[1], p[2]))
}

/// Near point identification, both models at n = 100.
fn c2_uniformity() -> Result<Outcome> {
    let md = run_uniformity_study(&UniformityConfig { deltas: vec![0.0], ..UniformityConfig::default() })?;
    let g = run_uniformity_study(&UniformityConfig { model: ModelTag::IntervalMean, deltas: vec![0.01], ..UniformityConfig::default() })?;
    let (up, empty, gup) = (md[0].summary.upper.p, md[0].summary.inner_empty.p, g[0].summary.upper.p);
    let ok = (0.93..=0.975).contains(&up) && empty >= 0.99 && (0.93..=0.98).contains(&gup);
    outcome(ok, format!("missing-data upper {up:.3}, lower empty {empty:.3}; gaussian upper {gup:.3}"))
}

/// Averaged marginal-set endpoints in the 10-dimensional interval regression.
fn c3_projection() -> Result<Outcome> {
    let cells = run_projection_study(&ProjectionConfig::default())?;
    let c = &cells[0];
    let model = IntervalRegression::<f64>::with_cube(10)?;
    let truth = project_marginal_set(&model, &RegressionDgp::default().true_phi(), 0)?.bounds().expect("nonempty");
    let truth_ok = truth.0.abs() <= 1e-9 && (truth.1 - 5.0 / 3.0).abs() <= 1e-9;
    let ok = (c.set_lo + 0.174).abs() <= 0.06 && (c.set_hi - 1.844).abs() <= 0.06 && truth_ok;
    outcome(ok, format!("set BCS [{:.4}, {:.4}], truth [{:.10}, {:.10}]", c.set_lo, c.set_hi, truth.0, truth.1))
}

/// One-sided quantile of the conjugate Gaussian posterior against its closed form.
fn c4_gaussian_quantile() -> Result<Outcome> {
    let n = 100;
    let stream = RngStream::new(4, 0);
    let data = GaussianLocation::simulate(&mut stream.labelled("data"), n, [1.0, 1.0])?;
    let draws = GaussianLocation::posterior(&stream.labelled("posterior"), &data, 100_000)?;
    let phi_hat = GaussianLocation::point_estimate(&data);
    let band = bcs_for_identified_set(&IntervalMean::<f64>::default(), &draws, &phi_hat, n, 0.95, &SphereGrid::for_dim(1)?, Sided::Upper)?;
    let nf = n as f64;
    let closed = (nf / (1.0 + nf)).sqrt() * std_normal_quantile(0.95f64.sqrt())?;
    outcome((band.q - closed).abs() <= 0.02, format!("empirical {:.4}, closed form {closed:.4}", band.q))
}

fn random_direction(s: &mut RngStream, d: usize) -> Result<Direction<f64>> {
    Direction::new((0..d).map(|_| draw_std_normal(s)).collect())
}

/// Worst ratio of the linearization remainder to its allowance over 100 draws.
fn remainder_ratio<M: MomentModel<f64>>(model: &M, s: &mut RngStream, mut center: impl FnMut(&mut RngStream) -> Vec<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let phi0 = center(s);
        let nu = random_direction(s, model.dim_theta())?;
        let lin = linearization_coeffs(model, &phi0, &nu)?;
        let s0 = support_value(model, &phi0, &nu)?;
        let u = random_direction(s, phi0.len())?;
        for norm in [1e-2, 1e-3] {
            let phi: Vec<f64> = phi0.iter().zip(u.as_slice()).map(|(p, d)| p + norm * d).collect();
            let s1 = support_value(model, &phi, &nu)?;
            let pred: f64 = lin.iter().zip(u.as_slice()).map(|(l, d)| l * norm * d).sum();
            worst = worst.max((s1 - s0 - pred).abs() / (1e-3 * norm + 5.0 * norm * norm));
        }
    }
    Ok(worst)
}

fn jitter(s: &mut RngStream, base: &[f64], w: f64) -> Vec<f64> {
    base.iter().map(|&b| b + draw_uniform(s, -w, w)).collect()
}

fn c5_linearization() -> Result<Outcome> {
    let mut s = RngStream::new(5, 0);
    let mut ratios = Vec::new();
    ratios.push(("interval-mean", remainder_ratio(&IntervalMean::<f64>::default(), &mut s, |s| jitter(s, &[0.0, 1.0], 0.2))?));
    ratios.push(("missing-data", remainder_ratio(&MissingData::<f64>::new(), &mut s, |s| jitter(s, &[0.7, 0.5], 0.1))?));
    let ir = IntervalRegression::<f64>::with_cube(2)?;
    let ir_truth = RegressionDgp { d: 2, ..RegressionDgp::default() }.true_phi();
    ratios.push(("interval-regression", remainder_ratio(&ir, &mut s, |s| jitter(s, &ir_truth, 0.05))?));
    let hj = HansenJagannathan::<f64>::default();
    let hj_truth = HjDgp::default().replication(&mut RngStream::new(5, 1))?.true_phi()?;
    ratios.push(("hj", remainder_ratio(&hj, &mut s, |s| jitter(s, &hj_truth, 0.05))?));
    let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]])?;
    let poly = Polytope::new(g, Some(Matrix::from_rows(&[vec![1.0, 1.0]])?), ThetaBox::cube(2, -5.0, 5.0)?)?;
    ratios.push(("polytope", remainder_ratio(&poly, &mut s, |s| jitter(s, &[1.0, 1.0, 0.0, 0.0, 0.6], 0.1))?));
    let ok = ratios.iter().all(|(_, r)| *r <= 1.0);
    let detail = ratios.iter().map(|(m, r)| format!("{m} {r:.3}")).collect::<Vec<_>>().join(", ");
    outcome(ok, format!("worst remainder / allowance: {detail}"))
}

/// Posterior variance of √n·S(1) against the delta-method variance at φ₀.
fn c6_bvm_variance() -> Result<Outcome> {
    let (n, phi0) = (2000, [0.7, 0.5]);
    let stream = RngStream::new(6, 0);
    let data = MissingData::simulate(&mut stream.labelled("data"), n, phi0)?;
    let counts = MissingCounts::from_data(&data)?;
    let draws = counts.posterior(&stream.labelled("posterior"), &BetaPrior::symmetric(1.0, 1.0), 4000)?;
    let model = MissingData::<f64>::new();
    let up = Direction::axis(1, 0, true);
    let vals: Vec<f64> = draws.draws.iter().map(|p| support_value(&model, p, &up).map(|v| v * (n as f64).sqrt())).collect::<Result<_>>()?;
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
    let l = linearization_coeffs(&model, &phi0, &up)?;
    let info = MissingData::fisher_information(&phi0);
    let target: f64 = (0..2).map(|i| l[i] * l[i] / info[(i, i)]).sum();
    outcome((var / target - 1.0).abs() <= 0.15, format!("posterior {var:.4}, asymptotic {target:.4}"))
}

/// Independent HJ oracle: 2000 points across the feasible μ-range.
fn hj_grid_oracle(phi: &[f64], nu: &[f64], mu_max: f64, var_max: f64) -> Option<f64> {
    let f = |mu: f64| phi[0] * mu * mu - 2.0 * phi[1] * mu + phi[2];
    // Feasible μ solve f(μ) ≤ var_max on [0, μ̄].
    let (a, b, c) = (phi[0], -2.0 * phi[1], phi[2] - var_max);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    let (lo, hi) = ((-b - r) / (2.0 * a), (-b + r) / (2.0 * a));
    let (lo, hi) = (lo.max(0.0), hi.min(mu_max));
    if lo > hi {
        return None;
    }
    let best = (0..2000)
        .map(|k| {
            let mu = lo + (hi - lo) * k as f64 / 1999.0;
            let s2 = if nu[1] >= 0.0 { var_max } else { f(mu).max(0.0) };
            nu[0] * mu + nu[1] * s2
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Some(best)
}

fn solver_gap<M: MomentModel<f64>>(model: &M, s: &mut RngStream, mut phi: impl FnMut(&mut RngStream) -> Vec<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = phi(s);
        let nu = random_direction(s, model.dim_theta())?;
        let closed = model.closed_support(&p, &nu).expect("closed form applies")?;
        worst = worst.max((support_solve(model, &p, &nu, 1e-10)?.value - closed).abs());
    }
    Ok(worst)
}

fn c7_oracle_equivalence() -> Result<Outcome> {
    let mut s = RngStream::new(7, 0);
    let im = solver_gap(&IntervalMean::<f64>::default(), &mut s, |s| {
        let a = draw_uniform(s, -3.0, 3.0);
        vec![a, a + draw_uniform(s, 0.05, 3.0)]
    })?;
    let md = solver_gap(&MissingData::<f64>::new(), &mut s, |s| vec![draw_uniform(s, 0.05, 0.95), draw_uniform(s, 0.05, 0.95)])?;
    let ir_model = IntervalRegression::<f64>::with_cube(2)?;
    let ir_truth = RegressionDgp { d: 2, ..RegressionDgp::default() }.true_phi();
    let ir = solver_gap(&ir_model, &mut s, |s| jitter(s, &ir_truth, 0.2))?;
    let hj_model = HansenJagannathan::<f64>::default();
    let hj_phi = |s: &mut RngStream| vec![draw_uniform(s, 0.5, 15.0), draw_uniform(s, 0.2, 6.0), draw_uniform(s, 0.1, 3.0)];
    let mut hj = 0.0f64;
    let mut hj_grid = 0.0f64;
    let mut tried = 0;
    while tried < 100 {
        let p = hj_phi(&mut s);
        let nu = random_direction(&mut s, 2)?;
        let Some(g) = hj_grid_oracle(&p, nu.as_slice(), 1.4, 6.0) else { continue };
        tried += 1;
        let closed = hj_model.closed_support(&p, &nu).expect("closed form")?;
        let solved = support_solve(&hj_model, &p, &nu, 1e-10)?.value;
        hj = hj.max((solved - closed).abs());
        hj_grid = hj_grid.max((solved - g).abs());
    }
    let ok = im <= 1e-6 && md <= 1e-6 && ir <= 1e-6 && hj <= 1e-6 && hj_grid <= 1e-3;
    outcome(ok, format!("max gaps: interval-mean {im:.1e}, missing-data {md:.1e}, interval-regression {ir:.1e}, hj {hj:.1e}, hj grid {hj_grid:.1e}"))
}

/// Hausdorff distance of the plug-in set at n = 2000 versus the first 500 rows.
fn c8_consistency() -> Result<Outcome> {
    let model = MissingData::<f64>::new();
    let phi0 = [0.7, 0.5];
    let prior = BetaPrior::symmetric(1.0, 1.0);
    let grid = SphereGrid::for_dim(1)?;
    let mut small = Vec::new();
    let mut large = Vec::new();
    for r in 0..50 {
        let data = MissingData::simulate(&mut RngStream::new(8, r).labelled("data"), 2000, phi0)?;
        let head: DataMatrix = data.head(500)?;
        for (d, out) in [(&head, &mut small), (&data, &mut large)] {
            let phi_hat = MissingCounts::from_data(d)?.posterior_mode(&prior).phi;
            out.push(hausdorff_via_support(&model, &phi_hat, &phi0, &grid)?);
        }
    }
    let med = |v: Vec<f64>| EmpiricalSample::new(v).and_then(|s| s.quantile(0.5));
    let (ms, ml) = (med(small)?, med(large)?);
    outcome(ml <= 0.55 * ms, format!("median d_H n=500 {ms:.4}, n=2000 {ml:.4}, ratio {:.3}", ml / ms))
}

fn c9_timing() -> Result<Outcome> {
    let cfg = TimingConfig {
        cells: vec![TimingCell { n: 500, draws: 100, truncation: 100, samples: 50 }],
        replications: 3,
        ..TimingConfig::default()
    };
    let r = &run_timing_bench(&cfg)?[0];
    outcome(
        r.ratio() >= 10.0,
        format!("BCS {:.4} s, FCS {:.3} s, ratio {:.1}", r.bcs_mean.as_secs_f64(), r.fcs_mean.as_secs_f64(), r.ratio()),
    )
}

fn c10_hj() -> Result<Outcome> {
    let study = run_hj_study(&HjConfig::default())?;
    let ok = study.outer.p >= 0.9 && study.top_exact();
    let infeasible: usize = study.rows.iter().map(|r| r.infeasible_draws).sum();
    outcome(
        ok,
        format!(
            "truth inside outer boundary in {:.2} of {} seeds; S(0,1) exact: {}; infeasible draws {infeasible}",
            study.outer.p,
            study.rows.len(),
            study.top_exact()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("1 missing-data coverage", c1_missing_data_coverage),
        ("2 uniformity", c2_uniformity),
        ("3 projection", c3_projection),
        ("4 gaussian quantile identity", c4_gaussian_quantile),
        ("5 linearization", c5_linearization),
        ("6 posterior variance", c6_bvm_variance),
        ("7 solver oracle equivalence", c7_oracle_equivalence),
        ("8 posterior consistency", c8_consistency),
        ("9 timing ratio", c9_timing),
        ("10 hj pipeline", c10_hj),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(o) => {
                println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
                failed += usize::from(!o.passed);
            }
            Err(e) => {
                println!("FAIL criterion {name}: error {e}");
                failed += 1;
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
