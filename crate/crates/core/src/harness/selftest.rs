//! Fast invariant checks run by `setid selftest`.

use crate::credible::{bcs_for_identified_set, Sided};
use crate::dpposterior::{stick_weights, DataMatrix};
use crate::error::Result;
use crate::models::{BetaPrior, HansenJagannathan, IntervalRegression, MissingCounts, MissingData, MomentModel};
use crate::samplekit::{draw_uniform, std_normal_cdf, std_normal_quantile, EmpiricalSample, RngStream};
use crate::setgeom::{support_solve, support_value, Direction, IntervalSet, SphereGrid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check { name, passed, detail: detail.into() }
}

fn closed_vs_solver<M: MomentModel<f64>>(model: &M, phis: &[Vec<f64>], grid: &SphereGrid<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for phi in phis {
        for nu in grid.iter() {
            let Some(closed) = model.closed_support(phi, nu) else { continue };
            let closed = closed?;
            let solved = support_solve(model, phi, nu, 1e-9)?.value;
            worst = worst.max((closed - solved).abs());
        }
    }
    Ok(worst)
}

pub fn run_selftest() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut s = RngStream::new(2024, 0);

    let w = stick_weights(&mut s, 3.0, 50)?;
    let sum: f64 = w.iter().sum();
    out.push(check("stick weights on the simplex", w.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() < 1e-12, format!("sum {sum}")));

    let mut worst = 0.0f64;
    for p in [0.001, 0.025, 0.3, 0.5, 0.9, 0.999] {
        worst = worst.max((std_normal_cdf(std_normal_quantile(p)?) - p).abs());
    }
    out.push(check("normal cdf inverts quantile", worst < 1e-12, format!("max error {worst:e}")));

    let e = EmpiricalSample::new((0..101).map(f64::from).collect())?;
    let qs: Vec<f64> = [0.1, 0.5, 0.9].iter().map(|&p| e.quantile(p)).collect::<Result<_>>()?;
    out.push(check("empirical quantiles monotone", qs.windows(2).all(|w| w[0] <= w[1]), format!("{qs:?}")));

    let iv = IntervalSet::from_bounds(0.2, 0.6);
    out.push(check(
        "envelope and contraction nest",
        iv.contraction(0.1).is_subset_of(&iv) && iv.is_subset_of(&iv.envelope(0.1)) && iv.contraction(0.3).is_empty(),
        "",
    ));

    let md = MissingData::<f64>::new();
    let phis: Vec<Vec<f64>> = (0..10).map(|_| vec![draw_uniform(&mut s, 0.05, 0.95), draw_uniform(&mut s, 0.05, 0.95)]).collect();
    let gap = closed_vs_solver(&md, &phis, &SphereGrid::for_dim(1)?)?;
    out.push(check("missing-data solver matches closed form", gap < 1e-6, format!("max gap {gap:e}")));

    let hj = HansenJagannathan::<f64>::default();
    let phis = vec![vec![0.5, 0.4, 1.0], vec![1.0, 0.5, 0.3], vec![2.0, 1.5, 1.5]];
    let gap = closed_vs_solver(&hj, &phis, &SphereGrid::with_size(2, 16)?)?;
    out.push(check("hj solver matches closed form", gap < 1e-5, format!("max gap {gap:e}")));
    let top = support_value(&hj, &phis[0], &Direction::axis(2, 1, true))?;
    out.push(check("hj support at (0, 1) is the box top", top == 6.0, format!("{top}")));

    let ir = IntervalRegression::<f64>::with_cube(1)?;
    let s_up = support_value(&ir, &[0.0, 3.0, 5.0], &Direction::axis(1, 0, true))?;
    let s_dn = support_value(&ir, &[0.0, 3.0, 5.0], &Direction::axis(1, 0, false))?;
    out.push(check("interval regression [0, 5/3]", (s_up - 5.0 / 3.0).abs() < 1e-12 && s_dn.abs() < 1e-12, format!("{s_up} {s_dn}")));

    let (a, b) = (Direction::new(vec![1.0, 0.3])?, Direction::new(vec![-0.2, 1.0])?);
    let sum_dir = Direction::new(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + y).collect())?;
    let lhs = support_value(&hj, &phis[1], &sum_dir)?;
    let rhs = support_value(&hj, &phis[1], &a)? + support_value(&hj, &phis[1], &b)?;
    // S(a + b) = |a + b| S(unit) must not exceed S(a) + S(b).
    let scale = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    let lhs = scale * lhs;
    out.push(check("support function subadditive", lhs <= rhs + 1e-9, format!("{lhs} <= {rhs}")));

    let counts = MissingCounts::new(500, 350, 175)?;
    let prior = BetaPrior::symmetric(1.0, 1.0);
    let draws = counts.posterior(&RngStream::new(7, 0), &prior, 200)?;
    let grid1 = SphereGrid::for_dim(1)?;
    let phi_hat = counts.posterior_mode(&prior).phi;
    let lo = bcs_for_identified_set(&md, &draws, &phi_hat, 500, 0.8, &grid1, Sided::TwoSided)?;
    let hi = bcs_for_identified_set(&md, &draws, &phi_hat, 500, 0.95, &grid1, Sided::TwoSided)?;
    out.push(check("band radius grows with level", lo.q <= hi.q, format!("{} <= {}", lo.q, hi.q)));

    let data = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]])?;
    let m = data.column_means();
    out.push(check("column means", m == vec![2.0, 3.0], format!("{m:?}")));
    Ok(out)
}
