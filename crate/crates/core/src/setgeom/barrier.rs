//! Support function of `{θ ∈ Θ : Ψ(θ, φ) ≤ 0, C θ = e}` by log-barrier continuation.
//!
//! Equalities are eliminated by a null-space parametrisation `θ = θ₀ + N z`; the box
//! enters as ordinary barrier terms. A phase-one problem `min u s.t. gᵢ(z) ≤ u`
//! locates a strictly feasible start or certifies (near) infeasibility.

use crate::error::{numeric, param, Error, Result};
use crate::linalg::{AffineSubspace, Matrix};
use crate::models::MomentModel;
use crate::scalar::{dot, norm2, Scalar};

use super::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Optimum found with θ* in the interior of the box.
    Converged,
    /// Optimum found with at least one box bound binding.
    BoundaryOfTheta,
    /// `Θ(φ)` is empty; `value` is `−∞`.
    Infeasible,
    /// `Θ(φ)` is nonempty but has no strictly feasible point; solved on a slightly relaxed set.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct SupportSolveResult<T> {
    pub value: T,
    pub maximizer: Vec<T>,
    /// λ for the moment inequalities (nonnegative).
    pub multipliers: Vec<T>,
    /// Multipliers of the lower and upper box bounds, per coordinate.
    pub box_multipliers: Vec<(T, T)>,
    /// Free-sign multipliers of the equalities `C θ − e = 0`.
    pub eq_multipliers: Vec<T>,
    pub active_set: Vec<usize>,
    pub status: SolveStatus,
    /// Norm of `ν − Σλᵢ∇Ψᵢ − box terms − Cᵀμ` at θ*.
    pub kkt_residual: T,
    /// Largest `|λᵢ Ψᵢ(θ*)|`.
    pub complementarity: T,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    /// Target accuracy of the optimal value.
    pub tol: T,
    pub t_start: T,
    pub t_factor: T,
    /// Barrier weight at which continuation stops at the latest.
    pub t_min: T,
    pub max_newton: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self::with_tol(T::lit(1e-8))
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, t_start: T::one(), t_factor: T::lit(0.1), t_min: T::lit(1e-8), max_newton: 200 }
    }

    fn t_end(&self, constraints: usize) -> T {
        let floor = T::epsilon() * T::lit(10.0);
        self.t_min.min(self.tol / T::from_usize_lossy(constraints.max(1))).max(floor)
    }

    fn newton_tol(&self) -> T {
        T::lit(1e-12).max(T::epsilon() * T::lit(100.0))
    }
}

/// Constraint values, z-space gradients and (optional) Hessians at one point.
struct Eval<T> {
    g: Vec<T>,
    grad: Vec<Vec<T>>,
    hess: Vec<Option<Matrix<T>>>,
}

impl<T: Scalar> Eval<T> {
    fn new() -> Self {
        Self { g: Vec::new(), grad: Vec::new(), hess: Vec::new() }
    }

    fn max_g(&self) -> T {
        self.g.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }
}

/// The barrier problem in reduced coordinates for fixed (model, φ).
struct Reduced<'a, T, M: ?Sized> {
    model: &'a M,
    phi: &'a [T],
    sub: Option<AffineSubspace<T>>,
    d: usize,
    k: usize,
    /// Uniform relaxation `gᵢ ≤ δ` used for degenerate sets.
    relax: T,
}

impl<'a, T: Scalar, M: MomentModel<T> + ?Sized> Reduced<'a, T, M> {
    fn zdim(&self) -> usize {
        self.sub.as_ref().map_or(self.d, AffineSubspace::dim)
    }

    fn n_cons(&self) -> usize {
        self.k + 2 * self.d
    }

    fn theta(&self, z: &[T]) -> Vec<T> {
        match &self.sub {
            Some(s) => s.point(z),
            None => z.to_vec(),
        }
    }

    fn to_z(&self, theta: &[T]) -> Vec<T> {
        match &self.sub {
            Some(s) => s.coords(theta),
            None => theta.to_vec(),
        }
    }

    fn reduce_grad(&self, g: &[T]) -> Vec<T> {
        match &self.sub {
            Some(s) => s.basis.tmatvec(g),
            None => g.to_vec(),
        }
    }

    fn reduce_hess(&self, h: Matrix<T>) -> Matrix<T> {
        match &self.sub {
            Some(s) => {
                let hn = h.matmul(&s.basis).expect("d×d · d×m");
                s.basis.transpose().matmul(&hn).expect("m×d · d×m")
            }
            None => h,
        }
    }

    fn eval(&self, z: &[T], want_hess: bool, out: &mut Eval<T>) {
        let theta = self.theta(z);
        let bx = self.model.theta_box();
        out.g.clear();
        out.grad.clear();
        out.hess.clear();
        let psi = self.model.psi(&theta, self.phi);
        let jac = self.model.grad_theta_psi(&theta, self.phi);
        let affine = self.model.affine_in_theta();
        for (i, &v) in psi.iter().enumerate() {
            out.g.push(v - self.relax);
            out.grad.push(self.reduce_grad(jac.row(i)));
            out.hess.push(if want_hess && !affine {
                Some(self.reduce_hess(self.model.hess_theta_psi(&theta, self.phi, i)))
            } else {
                None
            });
        }
        for j in 0..self.d {
            let mut e = vec![T::zero(); self.d];
            e[j] = -T::one();
            out.g.push(bx.lo()[j] - theta[j]);
            out.grad.push(self.reduce_grad(&e));
            out.hess.push(None);
            e[j] = T::one();
            out.g.push(theta[j] - bx.hi()[j]);
            out.grad.push(self.reduce_grad(&e));
            out.hess.push(None);
        }
    }
}

type EvalFn<'a, T> = dyn Fn(&[T], bool, &mut Eval<T>) + 'a;

/// Minimises `s·cᵀy − Σ log(−hᵢ(y))` by damped Newton from a strictly feasible `y`.
#[allow(clippy::too_many_arguments)]
fn center<T: Scalar>(
    eval: &EvalFn<'_, T>,
    c: &[T],
    s: T,
    y: &mut [T],
    opts: &SolverOptions<T>,
    newton_tol: T,
    work: &mut Eval<T>,
    trial: &mut Eval<T>,
) -> Result<usize> {
    let n = y.len();
    let half = T::lit(0.5);
    for it in 0..opts.max_newton {
        eval(y, true, work);
        let mut grad: Vec<T> = c.iter().map(|&ci| s * ci).collect();
        let mut h = Matrix::zeros(n, n);
        for ((&gi, gr), hs) in work.g.iter().zip(&work.grad).zip(&work.hess) {
            let inv = T::one() / (-gi);
            for a in 0..n {
                grad[a] += inv * gr[a];
                let ga = inv * inv * gr[a];
                if ga != T::zero() {
                    let row = h.row_mut(a);
                    for b in 0..n {
                        row[b] += ga * gr[b];
                    }
                }
            }
            if let Some(hi) = hs {
                for a in 0..n {
                    for b in 0..n {
                        h[(a, b)] += inv * hi[(a, b)];
                    }
                }
            }
        }
        let step = newton_step(&h, &grad)?;
        let dec = -dot(&grad, &step);
        if !(dec >= T::zero()) || !dec.is_finite() {
            return numeric("barrier Newton direction is not a descent direction");
        }
        if dec * half <= newton_tol {
            return Ok(it);
        }
        let cstep = dot(c, &step);
        let mut alpha = T::one();
        let mut accepted = false;
        let mut ynew = vec![T::zero(); n];
        for _ in 0..80 {
            for ((yn, &yi), &st) in ynew.iter_mut().zip(y.iter()).zip(&step) {
                *yn = yi + alpha * st;
            }
            eval(&ynew, false, trial);
            if trial.g.iter().all(|&v| v < T::zero()) {
                // Change in the objective computed directly to avoid cancellation at large s.
                let df = s * alpha * cstep
                    - trial.g.iter().zip(&work.g).map(|(&a, &b)| (a / b).ln()).sum::<T>();
                if df <= -T::lit(0.25) * alpha * dec || dec < T::lit(1e-8).max(T::epsilon().sqrt()) {
                    accepted = true;
                    break;
                }
            }
            alpha *= half;
        }
        if !accepted {
            // No progress possible at working precision; the point is as centred as it gets.
            return Ok(it);
        }
        y.copy_from_slice(&ynew);
    }
    Ok(opts.max_newton)
}

fn newton_step<T: Scalar>(h: &Matrix<T>, grad: &[T]) -> Result<Vec<T>> {
    let n = grad.len();
    let neg: Vec<T> = grad.iter().map(|&g| -g).collect();
    if let Ok(x) = h.solve_spd(&neg) {
        return Ok(x);
    }
    let scale = (0..n).fold(T::zero(), |m, i| m.max(h[(i, i)].abs())).max(T::one());
    let mut ridge = scale * T::epsilon().sqrt();
    for _ in 0..30 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Ok(x) = hr.solve_spd(&neg) {
            return Ok(x);
        }
        ridge *= T::lit(10.0);
    }
    numeric("barrier Hessian could not be regularised")
}

/// Phase-one outcome.
#[derive(Debug, Clone)]
enum Start<T> {
    Interior(Vec<T>),
    Degenerate(Vec<T>, T),
    Infeasible,
}

/// Reusable solver for one `(model, φ)`: phase one runs once, then any number of directions.
pub struct SupportSolver<'a, T, M: ?Sized> {
    problem: Reduced<'a, T, M>,
    opts: SolverOptions<T>,
    start: Start<T>,
    newton_steps: usize,
}

impl<'a, T: Scalar, M: MomentModel<T> + ?Sized> SupportSolver<'a, T, M> {
    pub fn new(model: &'a M, phi: &'a [T], opts: SolverOptions<T>) -> Result<Self> {
        Self::with_start(model, phi, opts, None)
    }

    /// As [`Self::new`], trying `theta0` as the starting point first.
    pub fn with_start(model: &'a M, phi: &'a [T], opts: SolverOptions<T>, theta0: Option<&[T]>) -> Result<Self> {
        model.check_phi(phi)?;
        let d = model.dim_theta();
        let sub = match model.equalities(phi) {
            Some((c, e)) => {
                if c.rows() != model.num_equalities() || c.cols() != d {
                    return param("equality matrix has the wrong shape");
                }
                Some(AffineSubspace::new(&c, &e)?)
            }
            None => None,
        };
        let problem = Reduced { model, phi, sub, d, k: model.num_inequalities(), relax: T::zero() };
        let mut solver = Self { problem, opts, start: Start::Infeasible, newton_steps: 0 };
        solver.start = solver.phase_one(theta0)?;
        if let Start::Degenerate(_, delta) = solver.start {
            solver.problem.relax = delta;
        }
        Ok(solver)
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self.start, Start::Infeasible)
    }

    /// A strictly feasible point (of the relaxed set when degenerate).
    pub fn interior_point(&self) -> Option<Vec<T>> {
        match &self.start {
            Start::Interior(z) | Start::Degenerate(z, _) => Some(self.problem.theta(z)),
            Start::Infeasible => None,
        }
    }

    fn phase_one(&mut self, theta0: Option<&[T]>) -> Result<Start<T>> {
        let p = &self.problem;
        let m = p.zdim();
        let mut work = Eval::new();
        let feas_tol = T::feas_tol();
        let z0 = match theta0 {
            Some(t) if t.len() == p.d => p.to_z(t),
            _ => p.to_z(&p.model.theta_box().center()),
        };
        if m == 0 {
            p.eval(&z0, false, &mut work);
            let mg = work.max_g();
            return Ok(if mg < -feas_tol {
                Start::Interior(z0)
            } else if mg <= feas_tol {
                Start::Degenerate(z0, feas_tol * T::lit(10.0))
            } else {
                Start::Infeasible
            });
        }
        p.eval(&z0, false, &mut work);
        let mg = work.max_g();
        if mg < T::zero() {
            return Ok(Start::Interior(z0));
        }
        // Augmented variable y = (z, u) with constraints gᵢ(z) − u < 0; minimise u.
        let eval = |y: &[T], want_hess: bool, out: &mut Eval<T>| {
            p.eval(&y[..m], want_hess, out);
            let u = y[m];
            for (g, gr) in out.g.iter_mut().zip(out.grad.iter_mut()) {
                *g -= u;
                gr.push(-T::one());
            }
            for h in out.hess.iter_mut().flatten() {
                let mut big = Matrix::zeros(m + 1, m + 1);
                for a in 0..m {
                    for b in 0..m {
                        big[(a, b)] = h[(a, b)];
                    }
                }
                *h = big;
            }
        };
        let mut y = z0;
        y.push(mg + mg.abs().max(T::one()));
        let mut c = vec![T::zero(); m + 1];
        c[m] = T::one();
        let n_cons = T::from_usize_lossy(p.n_cons());
        let mut t = self.opts.t_start;
        let mut trial = Eval::new();
        loop {
            self.newton_steps +=
                center(&eval, &c, T::one() / t, &mut y, &self.opts, self.opts.newton_tol(), &mut work, &mut trial)?;
            p.eval(&y[..m], false, &mut work);
            let mg = work.max_g();
            if mg < T::zero() {
                y.truncate(m);
                return Ok(Start::Interior(y));
            }
            // u* ≥ u − (#constraints)·t on the central path.
            let lower = y[m] - n_cons * t;
            if lower > feas_tol {
                return Ok(Start::Infeasible);
            }
            if n_cons * t < feas_tol * T::lit(0.01) || t <= T::epsilon() {
                y.truncate(m);
                return Ok(if mg <= feas_tol {
                    Start::Degenerate(y, (mg.max(T::zero()) * T::lit(2.0)).max(feas_tol * T::lit(10.0)))
                } else {
                    Start::Infeasible
                });
            }
            t *= self.opts.t_factor;
        }
    }

    pub fn solve(&self, nu: &Direction<T>) -> Result<SupportSolveResult<T>> {
        let p = &self.problem;
        if nu.dim() != p.d {
            return param(format!("direction has dimension {}, θ has {}", nu.dim(), p.d));
        }
        let (z0, degenerate) = match &self.start {
            Start::Interior(z) => (z.clone(), false),
            Start::Degenerate(z, _) => (z.clone(), true),
            Start::Infeasible => {
                return Ok(SupportSolveResult {
                    value: T::neg_infinity(),
                    maximizer: Vec::new(),
                    multipliers: Vec::new(),
                    box_multipliers: Vec::new(),
                    eq_multipliers: Vec::new(),
                    active_set: Vec::new(),
                    status: SolveStatus::Infeasible,
                    kkt_residual: T::zero(),
                    complementarity: T::zero(),
                    newton_steps: self.newton_steps,
                })
            }
        };
        let mut z = z0;
        let c: Vec<T> = p.reduce_grad(nu.as_slice()).into_iter().map(|v| -v).collect();
        let t_end = self.opts.t_end(p.n_cons());
        let mut work = Eval::new();
        let mut trial = Eval::new();
        let eval = |y: &[T], want_hess: bool, out: &mut Eval<T>| p.eval(y, want_hess, out);
        let mut steps = 0;
        let mut t = self.opts.t_start;
        if p.zdim() > 0 {
            loop {
                // The last stage is driven to working precision so the multipliers are sharp.
                let last = t <= t_end;
                let ntol = if last { T::epsilon() * T::epsilon() } else { self.opts.newton_tol() };
                steps += center(&eval, &c, T::one() / t, &mut z, &self.opts, ntol, &mut work, &mut trial)?;
                if last {
                    break;
                }
                t = (t * self.opts.t_factor).max(t_end);
            }
        }
        p.eval(&z, false, &mut work);
        if work.g.iter().any(|v| !v.is_finite()) {
            return numeric("constraint values became non-finite");
        }
        let theta = p.theta(&z);
        let value = nu.dot(&theta);
        let k = p.k;
        let lambda_all: Vec<T> = if p.zdim() > 0 {
            work.g.iter().map(|&g| t / (-g)).collect()
        } else {
            vec![T::zero(); work.g.len()]
        };
        let mut multipliers = lambda_all[..k].to_vec();
        let mut box_multipliers: Vec<(T, T)> = (0..p.d).map(|j| (lambda_all[k + 2 * j], lambda_all[k + 2 * j + 1])).collect();
        let complementarity = lambda_all
            .iter()
            .zip(&work.g)
            .fold(T::zero(), |m, (&l, &g)| m.max((l * (g + p.relax)).abs()));
        // Stationarity residual in θ-space; equality multipliers absorb the part in row(C).
        let jac = p.model.grad_theta_psi(&theta, p.phi);
        let mut r = nu.as_slice().to_vec();
        for (i, &l) in multipliers.iter().enumerate() {
            for (rj, &gij) in r.iter_mut().zip(jac.row(i)) {
                *rj -= l * gij;
            }
        }
        for (j, &(lo, hi)) in box_multipliers.iter().enumerate() {
            r[j] -= hi - lo;
        }
        let equalities = p.model.equalities(p.phi);
        let mut eq_multipliers = match &equalities {
            Some((cm, _)) => {
                let cct = cm.matmul(&cm.transpose())?;
                let mu = cct.solve_spd(&cm.matvec(&r))?;
                let ctmu = cm.tmatvec(&mu);
                r.iter_mut().zip(ctmu).for_each(|(a, b)| *a -= b);
                mu
            }
            None => Vec::new(),
        };
        let mut kkt_residual = norm2(&r);
        let act_tol = t_end.sqrt().max(T::feas_tol());
        let active_set: Vec<usize> = (0..k).filter(|&i| work.g[i] + p.relax >= -act_tol).collect();
        let active_box: Vec<(usize, bool)> = (0..p.d)
            .flat_map(|j| [(j, false), (j, true)])
            .filter(|&(j, hi)| work.g[k + 2 * j + usize::from(hi)] >= -act_tol)
            .collect();
        let on_box = !active_box.is_empty();
        if !degenerate {
            let cm = equalities.as_ref().map(|(cm, _)| cm);
            if let Some(pol) = polish_multipliers(nu.as_slice(), &jac, cm, &active_set, &active_box) {
                if pol.residual < kkt_residual {
                    multipliers = vec![T::zero(); k];
                    active_set.iter().zip(&pol.psi).for_each(|(&i, &l)| multipliers[i] = l);
                    box_multipliers = vec![(T::zero(), T::zero()); p.d];
                    for (&(j, hi), &l) in active_box.iter().zip(&pol.bounds) {
                        if hi {
                            box_multipliers[j].1 = l;
                        } else {
                            box_multipliers[j].0 = l;
                        }
                    }
                    eq_multipliers = pol.eq;
                    kkt_residual = pol.residual;
                }
            }
        }
        let status = if degenerate {
            SolveStatus::Degenerate
        } else if on_box {
            SolveStatus::BoundaryOfTheta
        } else {
            SolveStatus::Converged
        };
        Ok(SupportSolveResult {
            value,
            maximizer: theta,
            multipliers,
            box_multipliers,
            eq_multipliers,
            active_set,
            status,
            kkt_residual,
            complementarity,
            newton_steps: self.newton_steps + steps,
        })
    }
}

/// `sup{νᵀθ : Ψ(θ,φ) ≤ 0, θ ∈ Θ}` by the generic barrier method, to accuracy `tol`.
struct Polished<T> {
    psi: Vec<T>,
    bounds: Vec<T>,
    eq: Vec<T>,
    residual: T,
}

/// Exact multipliers on the active set: least-squares solution of
/// `ν = Σ λ_i ∇_θΨ_i ± box terms + Cᵀμ`, kept only if it is unique and `λ ≥ 0`.
fn polish_multipliers<T: Scalar>(
    nu: &[T],
    jac: &Matrix<T>,
    cm: Option<&Matrix<T>>,
    active: &[usize],
    active_box: &[(usize, bool)],
) -> Option<Polished<T>> {
    let d = nu.len();
    let mut cols: Vec<Vec<T>> = active.iter().map(|&i| jac.row(i).to_vec()).collect();
    for &(j, hi) in active_box {
        let mut e = vec![T::zero(); d];
        e[j] = if hi { T::one() } else { -T::one() };
        cols.push(e);
    }
    let n_ineq = cols.len();
    if let Some(cm) = cm {
        cols.extend((0..cm.rows()).map(|r| cm.row(r).to_vec()));
    }
    if cols.is_empty() || cols.len() > d {
        return None;
    }
    let gram = Matrix::from_rows(&cols.iter().map(|a| cols.iter().map(|b| dot(a, b)).collect()).collect::<Vec<_>>()).ok()?;
    let rhs: Vec<T> = cols.iter().map(|a| dot(a, nu)).collect();
    let x = gram.solve_spd(&rhs).ok()?;
    let tol = T::epsilon().sqrt();
    if x[..n_ineq].iter().any(|&l| !(l >= -tol)) {
        return None;
    }
    let mut r = nu.to_vec();
    for (a, &l) in cols.iter().zip(&x) {
        r.iter_mut().zip(a).for_each(|(ri, &ai)| *ri -= l * ai);
    }
    let clamp = |v: &[T]| v.iter().map(|&l| l.max(T::zero())).collect::<Vec<T>>();
    Some(Polished {
        psi: clamp(&x[..active.len()]),
        bounds: clamp(&x[active.len()..n_ineq]),
        eq: x[n_ineq..].to_vec(),
        residual: norm2(&r),
    })
}

pub fn support_solve<T: Scalar, M: MomentModel<T> + ?Sized>(
    model: &M,
    phi: &[T],
    nu: &Direction<T>,
    tol: T,
) -> Result<SupportSolveResult<T>> {
    SupportSolver::new(model, phi, SolverOptions::with_tol(tol))?.solve(nu)
}

/// Support value: the model's closed form where available, the barrier solver otherwise.
///
/// An empty identified set yields [`Error::Infeasible`].
pub fn support_value<T: Scalar, M: MomentModel<T> + ?Sized>(model: &M, phi: &[T], nu: &Direction<T>) -> Result<T> {
    if let Some(v) = model.closed_support(phi, nu) {
        return v;
    }
    let res = support_solve(model, phi, nu, T::lit(1e-8).max(T::epsilon().sqrt()))?;
    match res.status {
        SolveStatus::Infeasible => Err(Error::Infeasible),
        _ => Ok(res.value),
    }
}

/// Derivative of `φ ↦ S_φ(ν)` at `φ₀`: `−λᵀ∇_φΨ(θ*, φ₀) − μᵀ∇_φ(Cθ* − e)`.
pub fn linearization_coeffs<T: Scalar, M: MomentModel<T> + ?Sized>(
    model: &M,
    phi0: &[T],
    nu: &Direction<T>,
) -> Result<Vec<T>> {
    let res = support_solve(model, phi0, nu, T::lit(1e-10).max(T::epsilon().sqrt()))?;
    match res.status {
        SolveStatus::Infeasible => return Err(Error::Infeasible),
        SolveStatus::Degenerate => {
            return Err(Error::Domain("support function is not differentiable at a set without interior".into()))
        }
        _ => {}
    }
    let gp = model.grad_phi_psi(&res.maximizer, phi0);
    let mut out = gp.tmatvec(&res.multipliers);
    if let Some(ge) = model.grad_phi_equalities(&res.maximizer, phi0) {
        let add = ge.tmatvec(&res.eq_multipliers);
        out.iter_mut().zip(add).for_each(|(a, b)| *a += b);
    }
    out.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}
