//! Pseudo-arclength path following of solution branches, fold detection and
//! refinement, branch starts at the trivial line and on the minimal branch,
//! and the metric ε → 0 limiting procedure.
//!
//! The (u, λ) space carries the inner product
//! ⟨(du,dλ),(dv,dμ)⟩ = (Σ w_i du_i dv_i)/|Ω| + dλ dμ, so arclength is
//! resolution-independent.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, solve_bordered};
use crate::problem::{classify_regime, jacobian, residual, residual_dlambda, ProblemSpec};
use crate::solvers::{gamma1, newton_solve, Solution};

/// Normalized direction in (u, λ) space.
#[derive(Debug, Clone)]
pub struct Tangent {
    pub du: Vec<f64>,
    pub dlambda: f64,
}

/// One accepted point of a traced branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    /// accumulated arclength
    pub s: f64,
    pub solution: Solution,
    pub tangent: Tangent,
    pub is_fold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchStatus {
    WindowExit,
    FoldLimit,
    MaxPoints,
    Stagnated,
}

/// Ordered, arclength-parameterized list of solutions: the numerical
/// analogue of a subcontinuum.
#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub eps: f64,
    /// indices of fold-flagged points
    pub folds: Vec<usize>,
    pub lambda0_estimate: Option<f64>,
    pub status: BranchStatus,
}

impl Branch {
    pub fn lambda_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.solution.lambda).collect()
    }
}

/// Trace controls shared by `trace_branch` and `whyburn_limit`.
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub ds: f64,
    pub lambda_window: (f64, f64),
    pub max_points: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// stop after this many folds, if set
    pub max_folds: Option<usize>,
}

impl TraceOptions {
    pub fn new(ds: f64, lambda_window: (f64, f64), max_points: usize) -> Self {
        TraceOptions {
            ds,
            lambda_window,
            max_points,
            newton_tol: 1e-10,
            max_newton: 12,
            max_folds: None,
        }
    }
}

fn domain_measure(spec: &ProblemSpec) -> f64 {
    spec.mesh.bounds.measure()
}

fn arc_inner(spec: &ProblemSpec, du: &[f64], dl: f64, dv: &[f64], dm: f64) -> f64 {
    let vol = domain_measure(spec);
    let mut s = 0.0;
    for i in 0..du.len() {
        s += spec.mesh.weights[i] * du[i] * dv[i];
    }
    s / vol + dl * dm
}

fn arc_norm(spec: &ProblemSpec, du: &[f64], dl: f64) -> f64 {
    arc_inner(spec, du, dl, du, dl).sqrt()
}

/// Corrector: Newton on [R(u,λ); ⟨t, (u,λ) − (u,λ)_pred⟩] = 0 with the
/// same positivity safeguard as the plain Newton solver.
fn correct(
    spec: &ProblemSpec,
    tangent: &Tangent,
    u_pred: &[f64],
    lambda_pred: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    let nn = spec.mesh.num_nodes();
    let vol = domain_measure(spec);
    let floor = if spec.eps > 0.0 { -1e-12 } else { crate::problem::U_FLOOR };
    let mut u = u_pred.to_vec();
    for i in 0..nn {
        if u[i] < floor.max(0.0) {
            u[i] = floor.max(0.0);
        }
    }
    let mut lambda = lambda_pred;
    let row: Vec<f64> = (0..nn)
        .map(|i| spec.mesh.weights[i] * tangent.du[i] / vol)
        .collect();
    let constraint = |u: &[f64], l: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..nn {
            s += row[i] * (u[i] - u_pred[i]);
        }
        s + tangent.dlambda * (l - lambda_pred)
    };
    let merit = |r: &[f64], c: f64| inf_norm(r) + c.abs();

    let mut r = residual(spec, lambda, &u)?;
    let mut c = constraint(&u, lambda);
    let mut m = merit(&r, c);
    for iter in 0..max_iter {
        if inf_norm(&r) <= tol && c.abs() <= 1e-10 {
            return Ok(Solution {
                u,
                lambda,
                eps: spec.eps,
                residual_norm: inf_norm(&r),
                gamma1: None,
                stability: None,
                newton_iters: iter,
            });
        }
        let j = jacobian(spec, lambda, &u)?;
        let rl = residual_dlambda(spec, &u);
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = solve_bordered(&j, &rl, &row, tangent.dlambda, &neg_r, -c)?;
        let mut t = 1.0_f64;
        let mut accepted = false;
        for _ in 0..30 {
            let cand_u: Vec<f64> = u.iter().zip(&step.x).map(|(ui, di)| ui + t * di).collect();
            let cand_l = lambda + t * step.xl;
            if cand_u.iter().cloned().fold(f64::MAX, f64::min) < floor {
                t *= 0.5;
                continue;
            }
            if let Ok(rc) = residual(spec, cand_l, &cand_u) {
                let cc = constraint(&cand_u, cand_l);
                let mc = merit(&rc, cc);
                if mc < m {
                    u = cand_u;
                    lambda = cand_l;
                    r = rc;
                    c = cc;
                    m = mc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Stagnation(format!(
                "corrector stalled at merit {m:e}"
            )));
        }
    }
    if inf_norm(&r) <= tol && c.abs() <= 1e-10 {
        return Ok(Solution {
            u,
            lambda,
            eps: spec.eps,
            residual_norm: inf_norm(&r),
            gamma1: None,
            stability: None,
            newton_iters: max_iter,
        });
    }
    Err(Error::NoConvergence(format!(
        "corrector: residual {:e}, constraint {:e} after {max_iter} iterations",
        inf_norm(&r),
        c.abs()
    )))
}

/// Tangent at (u, λ): solve [J Rλ; t_prev] t = [0; 1], normalized and
/// oriented along the previous tangent.
fn compute_tangent(
    spec: &ProblemSpec,
    lambda: f64,
    u: &[f64],
    prev: &Tangent,
) -> Result<Tangent> {
    let nn = spec.mesh.num_nodes();
    let vol = domain_measure(spec);
    let j = jacobian(spec, lambda, u)?;
    let rl = residual_dlambda(spec, u);
    let row: Vec<f64> = (0..nn)
        .map(|i| spec.mesh.weights[i] * prev.du[i] / vol)
        .collect();
    let sol = solve_bordered(&j, &rl, &row, prev.dlambda, &vec![0.0; nn], 1.0)?;
    let nrm = arc_norm(spec, &sol.x, sol.xl);
    if !(nrm > 0.0) || !nrm.is_finite() {
        return Err(Error::Singular("degenerate tangent".into()));
    }
    let du: Vec<f64> = sol.x.iter().map(|v| v / nrm).collect();
    Ok(Tangent {
        du,
        dlambda: sol.xl / nrm,
    })
}

/// First point off the trivial line of the regularized problem.
///
/// The predictor is the constant principal mode of the ε-eigenproblem at
/// λ = 0, scaled so the (u, λ) predictor has arc-step ds; the corrector
/// fixes the amplitude and lets λ adjust.
pub fn start_from_zero(
    spec: &ProblemSpec,
    dlambda_sign: f64,
    ds: f64,
    newton_tol: f64,
) -> Result<BranchPoint> {
    if !(spec.eps > 0.0) {
        return Err(Error::Contract("start_from_zero requires eps > 0".into()));
    }
    if !(ds > 0.0) {
        return Err(Error::Contract("start_from_zero: ds must be positive".into()));
    }
    let sign = if dlambda_sign >= 0.0 { 1.0 } else { -1.0 };
    let nn = spec.mesh.num_nodes();
    // principal mode of the eps-eigenproblem at lambda = 0 is constant
    let kappa = 0.1_f64;
    let cu = 1.0 / (1.0 + kappa * kappa).sqrt();
    let cl = kappa / (1.0 + kappa * kappa).sqrt();
    let u_pred = vec![cu * ds; nn];
    let lambda_pred = sign * cl * ds;
    let t0 = Tangent {
        du: vec![cu; nn],
        dlambda: sign * cl,
    };
    let sol = correct(spec, &t0, &u_pred, lambda_pred, newton_tol, 25)
        .map_err(|e| Error::Start(format!("corrector failed ({e}); try a smaller ds")))?;
    if !(sol.u_min() > 0.0) {
        return Err(Error::Start(
            "corrected start is not positive; try a smaller ds".into(),
        ));
    }
    let tangent = compute_tangent(spec, sol.lambda, &sol.u, &t0)?;
    let mut sol = sol;
    gamma1(spec, &mut sol)?;
    Ok(BranchPoint {
        s: ds,
        solution: sol,
        tangent,
        is_fold: false,
    })
}

/// Minimal-branch start from the small-λ asymptotics u ≈ c* λ^{1/(p−q)}.
pub fn start_from_asymptotic(spec: &ProblemSpec, lambda_small: f64) -> Result<Solution> {
    if spec.eps != 0.0 {
        return Err(Error::Contract("start_from_asymptotic requires eps = 0".into()));
    }
    if !(lambda_small > 0.0 && lambda_small <= 0.1) {
        return Err(Error::Contract(
            "start_from_asymptotic: lambda must be in (0, 0.1]".into(),
        ));
    }
    let regime = classify_regime(spec);
    let c_star = regime.c_star.ok_or_else(|| {
        Error::Domain("start_from_asymptotic requires ∫a < 0".into())
    })?;
    let scale = c_star * lambda_small.powf(1.0 / (spec.p - spec.q));
    let u0 = vec![scale; spec.mesh.num_nodes()];
    let mut sol = newton_solve(spec, lambda_small, &u0, 1e-10, 60)
        .map_err(|e| Error::Start(format!("Newton failed ({e}); try a smaller lambda")))?;
    let g = gamma1(spec, &mut sol)?;
    if !(g > 0.0) {
        return Err(Error::Verification(format!(
            "asymptotic start is not on the stable minimal branch (gamma1 = {g})"
        )));
    }
    Ok(sol)
}

/// Turns a standalone solution into a branch start, oriented so λ initially
/// moves in `lambda_direction`.
pub fn branch_point_from_solution(
    spec: &ProblemSpec,
    mut solution: Solution,
    lambda_direction: f64,
) -> Result<BranchPoint> {
    let nn = spec.mesh.num_nodes();
    let seed = Tangent {
        du: vec![0.0; nn],
        dlambda: if lambda_direction >= 0.0 { 1.0 } else { -1.0 },
    };
    let tangent = compute_tangent(spec, solution.lambda, &solution.u, &seed)?;
    if solution.gamma1.is_none() {
        gamma1(spec, &mut solution)?;
    }
    Ok(BranchPoint {
        s: 0.0,
        solution,
        tangent,
        is_fold: false,
    })
}

fn in_window(lambda: f64, window: (f64, f64)) -> bool {
    lambda >= window.0 && lambda <= window.1
}

/// Classical pseudo-arclength tracer with adaptive step, tangent
/// continuity, fold flags and a principal eigenvalue at every accepted
/// point.
pub fn trace_branch(
    spec: &ProblemSpec,
    start: BranchPoint,
    opts: &TraceOptions,
) -> Result<Branch> {
    if !(opts.ds > 0.0) {
        return Err(Error::Contract("trace_branch: ds must be positive".into()));
    }
    if start.solution.residual_norm > opts.newton_tol * 10.0 {
        return Err(Error::Trace(format!(
            "start residual {:e} above tolerance",
            start.solution.residual_norm
        )));
    }
    let ds0 = opts.ds;
    let mut ds = ds0;
    let mut easy_streak = 0usize;
    let mut points = vec![start];
    let mut folds: Vec<usize> = Vec::new();
    let mut first_failure: Option<Error> = None;
    let status = loop {
        if points.len() >= opts.max_points {
            break BranchStatus::MaxPoints;
        }
        let last = points.last().unwrap().clone();
        let u_pred: Vec<f64> = last
            .solution
            .u
            .iter()
            .zip(&last.tangent.du)
            .map(|(ui, ti)| ui + ds * ti)
            .collect();
        let l_pred = last.solution.lambda + ds * last.tangent.dlambda;
        match correct(spec, &last.tangent, &u_pred, l_pred, opts.newton_tol, opts.max_newton) {
            Ok(mut sol) => {
                if !in_window(sol.lambda, opts.lambda_window) {
                    break BranchStatus::WindowExit;
                }
                let tangent = compute_tangent(spec, sol.lambda, &sol.u, &last.tangent)?;
                let is_fold = tangent.dlambda * last.tangent.dlambda < 0.0;
                let easy = sol.newton_iters <= 3;
                gamma1(spec, &mut sol)?;
                let s = last.s + ds;
                points.push(BranchPoint {
                    s,
                    solution: sol,
                    tangent,
                    is_fold,
                });
                if is_fold {
                    folds.push(points.len() - 1);
                    if let Some(maxf) = opts.max_folds {
                        if folds.len() >= maxf {
                            break BranchStatus::FoldLimit;
                        }
                    }
                }
                if easy {
                    easy_streak += 1;
                    if easy_streak >= 3 {
                        ds = (ds * 1.3).min(4.0 * ds0);
                        easy_streak = 0;
                    }
                } else {
                    easy_streak = 0;
                }
            }
            Err(e) => {
                easy_streak = 0;
                if ds <= ds0 / 32.0 + 1e-300 {
                    if points.len() == 1 {
                        return Err(Error::Trace(format!(
                            "corrector failed at the start point: {e}"
                        )));
                    }
                    first_failure = Some(e);
                    break BranchStatus::Stagnated;
                }
                ds = (ds * 0.5).max(ds0 / 32.0);
            }
        }
    };
    drop(first_failure);
    Ok(Branch {
        points,
        eps: spec.eps,
        folds,
        lambda0_estimate: None,
        status,
    })
}

/// Refines a flagged fold by bisection on the arclength between its
/// bracketing points until the tangent's λ-component is below 1e-8.
/// Returns the refined Λ₀ estimate and the fold solution with its
/// principal eigenvalue attached.
pub fn locate_fold(
    spec: &ProblemSpec,
    branch: &Branch,
    fold_index: usize,
    newton_tol: f64,
) -> Result<(f64, Solution)> {
    if !branch.folds.contains(&fold_index) || fold_index == 0 {
        return Err(Error::Contract(format!(
            "no flagged fold at index {fold_index}"
        )));
    }
    let before = &branch.points[fold_index - 1];
    let after = &branch.points[fold_index];
    let gap = after.s - before.s;
    let sign_lo = before.tangent.dlambda.signum();
    let mut lo = 0.0_f64;
    let mut hi = gap;
    let mut best: Option<(f64, Solution, Tangent)> = None;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let u_pred: Vec<f64> = before
            .solution
            .u
            .iter()
            .zip(&before.tangent.du)
            .map(|(ui, ti)| ui + mid * ti)
            .collect();
        let l_pred = before.solution.lambda + mid * before.tangent.dlambda;
        let sol = correct(spec, &before.tangent, &u_pred, l_pred, newton_tol, 25)
            .map_err(|e| Error::FoldRefine(format!("corrector failed in bisection: {e}")))?;
        let tangent = compute_tangent(spec, sol.lambda, &sol.u, &before.tangent)?;
        let dl = tangent.dlambda;
        let done = dl.abs() <= 1e-8;
        match &best {
            Some((bdl, _, _)) if dl.abs() >= bdl.abs() => {}
            _ => best = Some((dl, sol.clone(), tangent.clone())),
        }
        if done {
            break;
        }
        if dl.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * gap.max(1.0) {
            break;
        }
    }
    let (dl, mut sol, _) = best.ok_or_else(|| Error::FoldRefine("bracket lost".into()))?;
    if dl.abs() > 1e-8 {
        return Err(Error::FoldRefine(format!(
            "tangent dlambda {dl:e} did not reach 1e-8"
        )));
    }
    gamma1(spec, &mut sol)?;
    Ok((sol.lambda, sol))
}

/// One ε slice of a Whyburn report.
#[derive(Debug, Clone)]
pub struct WhyburnFailure {
    pub eps: f64,
    pub message: String,
}

/// Result of the ε → 0 limiting procedure: per-ε branches, matched-λ
/// sup-distances between consecutive slices and a convergence verdict.
#[derive(Debug, Clone)]
pub struct WhyburnReport {
    pub eps_schedule: Vec<f64>,
    pub branches: Vec<Branch>,
    pub pairwise_distances: Vec<f64>,
    pub converged: bool,
    /// nodes with u below the dead-core threshold, per point of the
    /// smallest-ε branch
    pub dead_core_counts: Vec<usize>,
    pub failure: Option<WhyburnFailure>,
}

impl WhyburnReport {
    /// The smallest-ε branch actually traced.
    pub fn limit_branch(&self) -> Option<&Branch> {
        self.branches.last()
    }
}

pub const WHYBURN_TOL: f64 = 1e-2;
pub const DEAD_CORE_TOL: f64 = 1e-6;

/// Traces one branch per ε in the schedule with identical windows and
/// measures the matched-λ sup-distance between consecutive slices.
pub fn whyburn_limit(
    spec_template: &ProblemSpec,
    eps_schedule: &[f64],
    dlambda_sign: f64,
    opts: &TraceOptions,
) -> Result<WhyburnReport> {
    if eps_schedule.len() < 2 {
        return Err(Error::Contract(
            "whyburn_limit: schedule needs at least 2 entries".into(),
        ));
    }
    for w in eps_schedule.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Contract(
                "whyburn_limit: schedule must be strictly decreasing".into(),
            ));
        }
    }
    if !(eps_schedule[0] <= 1.0 && *eps_schedule.last().unwrap() > 0.0) {
        return Err(Error::Contract(
            "whyburn_limit: schedule must lie in (0, 1]".into(),
        ));
    }
    let mut branches: Vec<Branch> = Vec::new();
    let mut failure = None;
    for &eps in eps_schedule {
        let spec = spec_template.with_eps(eps)?;
        let traced = start_from_zero(&spec, dlambda_sign, opts.ds, opts.newton_tol)
            .and_then(|start| trace_branch(&spec, start, opts));
        match traced {
            Ok(b) => branches.push(b),
            Err(e) => {
                failure = Some(WhyburnFailure {
                    eps,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    let mut distances = Vec::new();
    for pair in branches.windows(2) {
        distances.push(branch_distance(&pair[0], &pair[1]));
    }
    let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let converged = failure.is_none()
        && branches.len() == eps_schedule.len()
        && !distances.is_empty()
        && strictly_decreasing
        && distances.last().map(|&d| d <= WHYBURN_TOL).unwrap_or(false);
    let dead_core_counts = branches
        .last()
        .map(|b| {
            b.points
                .iter()
                .map(|p| p.solution.u.iter().filter(|&&v| v < DEAD_CORE_TOL).count())
                .collect()
        })
        .unwrap_or_default();
    Ok(WhyburnReport {
        eps_schedule: eps_schedule.to_vec(),
        branches,
        pairwise_distances: distances,
        converged,
        dead_core_counts,
        failure,
    })
}

/// Splits a branch at its fold indices into λ-monotone sub-branches; the
/// fold point closes one segment and opens the next.
fn segments(branch: &Branch) -> Vec<&[BranchPoint]> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for &f in &branch.folds {
        out.push(&branch.points[start..=f]);
        start = f;
    }
    out.push(&branch.points[start..]);
    out.retain(|s| s.len() >= 2);
    out
}

/// Linear interpolation of the nodal vector at λ inside a segment.
fn sample_segment(seg: &[BranchPoint], lambda: f64) -> Option<Vec<f64>> {
    for w in seg.windows(2) {
        let (l0, l1) = (w[0].solution.lambda, w[1].solution.lambda);
        let (lo, hi) = if l0 <= l1 { (l0, l1) } else { (l1, l0) };
        if lambda >= lo && lambda <= hi {
            let t = if (l1 - l0).abs() < 1e-300 {
                0.0
            } else {
                (lambda - l0) / (l1 - l0)
            };
            return Some(
                w[0].solution
                    .u
                    .iter()
                    .zip(&w[1].solution.u)
                    .map(|(a, b)| a + t * (b - a))
                    .collect(),
            );
        }
    }
    None
}

/// Sup-distance between two branches over a matched λ grid, fold-split into
/// sub-branches paired in order.
pub fn branch_distance(b0: &Branch, b1: &Branch) -> f64 {
    let segs0 = segments(b0);
    let segs1 = segments(b1);
    let npairs = segs0.len().min(segs1.len());
    let mut dist = 0.0_f64;
    for k in 0..npairs {
        let range = |seg: &[BranchPoint]| {
            let mut lo = f64::MAX;
            let mut hi = f64::MIN;
            for p in seg {
                lo = lo.min(p.solution.lambda);
                hi = hi.max(p.solution.lambda);
            }
            (lo, hi)
        };
        let (lo0, hi0) = range(segs0[k]);
        let (lo1, hi1) = range(segs1[k]);
        let lo = lo0.max(lo1);
        let hi = hi0.min(hi1);
        if !(hi > lo) {
            continue;
        }
        let m = 101;
        for i in 0..m {
            let lambda = lo + (hi - lo) * (i as f64) / ((m - 1) as f64);
            if let (Some(u0), Some(u1)) = (
                sample_segment(segs0[k], lambda),
                sample_segment(segs1[k], lambda),
            ) {
                for (a, b) in u0.iter().zip(&u1) {
                    dist = dist.max((a - b).abs());
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::field_from_text;
    use crate::mesh::{assemble_neumann_laplacian, build_mesh, Bounds};
    use crate::problem::ProblemSpec;
    use std::sync::Arc;

    fn spec_1d(a: &str, b: &str, p: f64, q: f64, eps: f64, n: usize) -> ProblemSpec {
        let mesh = Arc::new(build_mesh(Bounds::interval(0.0, 1.0), n).unwrap());
        let op = Arc::new(assemble_neumann_laplacian(&mesh));
        let af = field_from_text(a, &mesh).unwrap();
        let bf = field_from_text(b, &mesh).unwrap();
        ProblemSpec::new(mesh, op, af, bf, p, q, eps, None).unwrap()
    }

    #[test]
    fn asymptotic_start_constant_coefficients() {
        let spec = spec_1d("-1", "1", 4.0, 1.5, 0.0, 32);
        let sol = start_from_asymptotic(&spec, 0.01).unwrap();
        let expect = 0.01_f64.powf(0.4);
        for ui in &sol.u {
            assert!((ui - expect).abs() < 1e-10);
        }
        assert!(sol.gamma1.unwrap() > 0.0);
        assert!(start_from_asymptotic(&spec, -1.0).is_err());
    }

    #[test]
    fn asymptotic_limit_nonconstant() {
        let spec = spec_1d("-1+0.5*cos(2*pi*x)", "1", 4.0, 1.5, 0.0, 64);
        let sol = start_from_asymptotic(&spec, 0.01).unwrap();
        // c* = 1 since int a = -1, int b = 1
        let mut err = 0.0_f64;
        let scale = 0.01_f64.powf(-0.4);
        for ui in &sol.u {
            err = err.max((scale * ui - 1.0).abs());
        }
        assert!(err <= 0.05, "asymptotic error {err}");
    }

    #[test]
    fn start_from_zero_sign_behavior() {
        // int a < 0: bifurcation goes to lambda > 0
        let spec = spec_1d("-1", "1", 4.0, 1.5, 1e-3, 32);
        let pt = start_from_zero(&spec, 1.0, 0.05, 1e-10).unwrap();
        assert!(pt.solution.lambda > 0.0, "lambda = {}", pt.solution.lambda);
        assert!(pt.solution.u_min() > 0.0);

        // int a = 0: both predictors land at lambda < 0
        let spec = spec_1d("cos(2*pi*x)", "1", 4.0, 1.5, 1e-2, 32);
        for sign in [1.0, -1.0] {
            let pt = start_from_zero(&spec, sign, 0.05, 1e-10).unwrap();
            assert!(
                pt.solution.lambda < 0.0,
                "sign {sign}: lambda = {}",
                pt.solution.lambda
            );
        }
        assert!(start_from_zero(&spec, 1.0, 0.0, 1e-10).is_err());
    }

    #[test]
    fn trace_h02_branch_monotone_stable() {
        // closed-form branch u = lambda^{0.4}: no folds, all stable
        let spec = spec_1d("-1", "1", 4.0, 1.5, 0.0, 32);
        let sol = start_from_asymptotic(&spec, 0.05).unwrap();
        let start = branch_point_from_solution(&spec, sol, 1.0).unwrap();
        let opts = TraceOptions::new(0.1, (0.0, 5.0), 400);
        let branch = trace_branch(&spec, start, &opts).unwrap();
        assert_eq!(branch.status, BranchStatus::WindowExit);
        assert!(branch.folds.is_empty());
        assert!(branch.points.len() > 10);
        let mut prev_lambda = 0.0;
        for p in &branch.points {
            let l = p.solution.lambda;
            assert!(l > prev_lambda, "lambda not increasing");
            prev_lambda = l;
            let expect = l.powf(0.4);
            assert!((p.solution.u_max() - expect).abs() < 1e-7);
            assert!(p.solution.gamma1.unwrap() > 0.0);
        }
        // tangent continuity along the branch
        for w in branch.points.windows(2) {
            let dot = arc_inner(
                &spec,
                &w[0].tangent.du,
                w[0].tangent.dlambda,
                &w[1].tangent.du,
                w[1].tangent.dlambda,
            );
            assert!(dot > 0.0);
        }
    }

    #[test]
    fn fold_detected_and_refined() {
        let spec = spec_1d("cos(2*pi*x)-0.1", "1", 4.0, 1.5, 1e-3, 48);
        let start = start_from_zero(&spec, 1.0, 0.02, 1e-10).unwrap();
        let mut opts = TraceOptions::new(0.02, (0.0, 3.0), 600);
        opts.max_folds = Some(2);
        let branch = trace_branch(&spec, start, &opts).unwrap();
        assert_eq!(branch.folds.len(), 1, "status {:?}, {} points, folds {:?}",
            branch.status, branch.points.len(), branch.folds);
        let idx = branch.folds[0];
        // bracketing tangents change sign in dlambda
        assert!(
            branch.points[idx - 1].tangent.dlambda * branch.points[idx].tangent.dlambda < 0.0
        );
        let (lambda0, fold_sol) = locate_fold(&spec, &branch, idx, 1e-10).unwrap();
        assert!(lambda0 > 0.0 && lambda0 <= 3.0);
        let lo = branch.points[idx - 1].solution.lambda;
        let hi = branch.points[idx].solution.lambda;
        assert!(lambda0 >= lo.min(hi) - 0.05 && lambda0 >= hi.min(lo) - 0.05);
        assert!(lambda0 >= lo.max(hi) - 1e-6, "fold should be past both brackets");
        // gamma1 near zero at the fold
        let g = fold_sol.gamma1.unwrap();
        assert!(g.abs() < 0.05, "gamma1 at fold = {g}");
        // no folds -> precondition error
        let plain = spec_1d("-1", "1", 4.0, 1.5, 0.0, 32);
        let sol = start_from_asymptotic(&plain, 0.05).unwrap();
        let start = branch_point_from_solution(&plain, sol, 1.0).unwrap();
        let b2 = trace_branch(&plain, start, &TraceOptions::new(0.1, (0.0, 2.0), 200)).unwrap();
        assert!(locate_fold(&plain, &b2, 1, 1e-10).is_err());
    }

    #[test]
    fn whyburn_schedule_preconditions() {
        let spec = spec_1d("cos(2*pi*x)", "1", 4.0, 1.5, 1e-2, 24);
        let opts = TraceOptions::new(0.05, (-2.0, 0.0), 200);
        assert!(whyburn_limit(&spec, &[1e-2], -1.0, &opts).is_err());
        assert!(whyburn_limit(&spec, &[1e-3, 1e-2], -1.0, &opts).is_err());
    }

    #[test]
    fn whyburn_figure1_converges() {
        let spec = spec_1d("cos(2*pi*x)", "1", 4.0, 1.5, 1e-1, 32);
        let opts = TraceOptions::new(0.05, (-2.0, 0.0), 500);
        let report = whyburn_limit(&spec, &[1e-1, 1e-2, 1e-3], -1.0, &opts).unwrap();
        assert!(report.failure.is_none(), "failure: {:?}", report.failure);
        assert_eq!(report.branches.len(), 3);
        for b in &report.branches {
            for p in &b.points {
                assert!(p.solution.lambda < 0.0);
            }
        }
        assert_eq!(report.pairwise_distances.len(), 2);
        assert!(
            report.pairwise_distances[1] < report.pairwise_distances[0],
            "distances {:?}",
            report.pairwise_distances
        );
    }
}
