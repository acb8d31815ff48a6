//! Computable identities, bounds and constructions that the solution set
//! must satisfy, implemented as standalone diagnostics: a nonexistence
//! integral identity, positivity floors, max-norm lower bounds, an explicit
//! supersolution certificate, a discrete comparison-principle check, the
//! small-λ asymptotics table, and stability classification.

use serde::Serialize;
use std::sync::Arc;

use crate::continuation::Branch;
use crate::error::{Error, Result};
use crate::linalg::inf_norm;
use crate::mesh::{integrate, solve_dirichlet_poisson, Mesh, NeumannOperator};
use crate::problem::{classify_regime, ProblemSpec, U_FLOOR};
use crate::solvers::{
    classify_stability, gamma1, monotone_iterate, newton_solve, sigma_lambda, Direction,
    Solution, Stability,
};

/// Evaluable reaction term f(x_i, t) addressed by node index.
pub type Reaction = Box<dyn Fn(usize, f64) -> f64>;

/// Discrete comparison problem: −Δu = f(x, u) with u = C₁ on the masked
/// node set and a natural-boundary reaction g(x, u) on the rest of the
/// boundary.
pub struct ComparisonProblem {
    pub mesh: Arc<Mesh>,
    pub op: Arc<NeumannOperator>,
    /// Γ₀: nodes carrying the Dirichlet value C₁ (may be empty)
    pub dirichlet_mask: Vec<bool>,
    pub c1: f64,
    pub f: Reaction,
    pub g: Reaction,
}

impl ComparisonProblem {
    pub fn new(
        mesh: Arc<Mesh>,
        op: Arc<NeumannOperator>,
        dirichlet_mask: Vec<bool>,
        c1: f64,
        f: Reaction,
        g: Reaction,
    ) -> Result<Self> {
        if dirichlet_mask.len() != mesh.num_nodes() {
            return Err(Error::Contract("dirichlet mask length mismatch".into()));
        }
        if !(c1 >= 0.0) {
            return Err(Error::Contract("C1 must be nonnegative".into()));
        }
        Ok(ComparisonProblem {
            mesh,
            op,
            dirichlet_mask,
            c1,
            f,
            g,
        })
    }
}

/// Explicit a priori bound certificate: w₁ = C(1 + w₀) dominates every
/// nonnegative solution with |λ| ≤ Λ on the masked region.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub c: f64,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub lambda_window: f64,
    pub c1: f64,
    /// stored ingredients of the C formula, for exact recomputation
    pub max_b: f64,
    pub max_w0: f64,
    pub q: f64,
}

impl BoundCertificate {
    /// Re-evaluates C^{2−q} = max{C₁^{2−q}, Λ(max b)(1 + max w₀)^{q−1}}
    /// from the stored ingredients; must reproduce `c` bitwise.
    pub fn recompute_c(&self) -> f64 {
        compute_c(self.c1, self.lambda_window, self.max_b, self.max_w0, self.q)
    }
}

fn compute_c(c1: f64, lambda_window: f64, max_b: f64, max_w0: f64, q: f64) -> f64 {
    let lhs = c1.powf(2.0 - q);
    let rhs = lambda_window * max_b * (1.0 + max_w0).powf(q - 1.0);
    lhs.max(rhs).powf(1.0 / (2.0 - q))
}

/// Integral identity every nonconstant positive solution must satisfy
/// strictly: returns I = ∫a + λ ∫ b g_ε(u) u^{1−p}, which is
/// ∫a + λ ∫ b u^{q−p} at ε = 0; the caller asserts I < 0. Using the
/// problem's own concave term keeps the identity discrete-exact on
/// regularized solutions, where the unregularized form is off by O(ε) near
/// zero amplitude.
pub fn nonexistence_identity(spec: &ProblemSpec, lambda: f64, solution: &Solution) -> Result<f64> {
    let u = &solution.u;
    if u.len() != spec.mesh.num_nodes() {
        return Err(Error::Contract("solution length mismatch".into()));
    }
    if !(solution.u_min() > U_FLOOR) {
        return Err(Error::Domain(
            "nonexistence identity requires a strictly positive solution".into(),
        ));
    }
    let mean = integrate(&spec.mesh, u)? / spec.mesh.bounds.measure();
    let dev = u.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    if dev <= 1e-8 * inf_norm(u) {
        return Err(Error::Inapplicable(
            "identity is strict only for nonconstant solutions".into(),
        ));
    }
    let vals: Vec<f64> = (0..u.len())
        .map(|i| {
            spec.a.samples[i]
                + lambda * spec.b.samples[i] * spec.g_eps(u[i]) * u[i].powf(1.0 - spec.p)
        })
        .collect();
    integrate(&spec.mesh, &vals)
}

/// Uniform positivity floor: c = min_i u_i / φ_{Λ,i} with φ_Λ the principal
/// eigenfunction of the weighted eigenproblem at Λ.
pub fn positivity_floor(spec: &ProblemSpec, lambda_cap: f64, solution: &Solution) -> Result<f64> {
    if !(lambda_cap > 0.0) {
        return Err(Error::Contract("positivity_floor: Lambda must be positive".into()));
    }
    if solution.lambda < lambda_cap {
        return Err(Error::Contract(
            "positivity_floor: solution must have lambda >= Lambda".into(),
        ));
    }
    if !(solution.u_min() > 0.0) {
        return Err(Error::Domain(
            "positivity_floor requires a positive solution".into(),
        ));
    }
    let phi = sigma_lambda(&spec.mesh, &spec.op, &spec.b, lambda_cap)?.vector;
    if phi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Verification(
            "principal eigenfunction is not positive".into(),
        ));
    }
    let c = solution
        .u
        .iter()
        .zip(&phi)
        .map(|(u, p)| u / p)
        .fold(f64::MAX, f64::min);
    if !(c > 0.0) {
        return Err(Error::Verification(format!("positivity floor c = {c}")));
    }
    Ok(c)
}

/// Empirical max-norm floor δ̂₀ = min over branch points with λ ≤ −Λ of
/// max(u); +∞ when no point qualifies.
pub fn lower_bound_scan(branch: &Branch, lambda_cap: f64) -> f64 {
    branch
        .points
        .iter()
        .filter(|p| p.solution.lambda <= -lambda_cap)
        .map(|p| p.solution.u_max())
        .fold(f64::INFINITY, f64::min)
}

/// Builds and validates the explicit supersolution w₁ = C(1 + w₀) on the
/// masked region where a < 0, with w₀ solving −Δw₀ = 1 there (zero on the
/// discrete boundary of the mask).
pub fn build_supersolution(
    spec: &ProblemSpec,
    lambda_window: f64,
    c1: f64,
    mask: &[bool],
) -> Result<BoundCertificate> {
    let nn = spec.mesh.num_nodes();
    if mask.len() != nn {
        return Err(Error::Contract("mask length mismatch".into()));
    }
    if !(lambda_window >= 0.0) || !(c1 >= 0.0) {
        return Err(Error::Contract(
            "build_supersolution: Lambda and C1 must be nonnegative".into(),
        ));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Config("empty subdomain mask".into()));
    }
    for i in 0..nn {
        if mask[i] && !(spec.a.samples[i] < 0.0) {
            return Err(Error::Contract(format!(
                "a must be negative on the masked set (a = {} at node {i})",
                spec.a.samples[i]
            )));
        }
    }
    let rhs = vec![1.0; nn];
    let w0 = solve_dirichlet_poisson(&spec.mesh, &spec.op, mask, &rhs)?;
    // closure of the masked set: masked nodes and their neighbors
    let mut closure = mask.to_vec();
    for i in 0..nn {
        if mask[i] {
            for j in spec.mesh.neighbors(i) {
                closure[j] = true;
            }
        }
    }
    let mut max_b = f64::MIN;
    let mut max_w0 = f64::MIN;
    for i in 0..nn {
        if closure[i] {
            max_b = max_b.max(spec.b.samples[i]);
            max_w0 = max_w0.max(w0[i]);
        }
    }
    let c = compute_c(c1, lambda_window, max_b, max_w0, spec.q);
    let w1: Vec<f64> = w0.iter().map(|v| c * (1.0 + v)).collect();
    // discrete supersolution inequality at the range endpoints
    let lap_w1 = spec.op.apply_laplacian(&w1);
    for &lambda in &[0.0, lambda_window] {
        for &eps in &[0.0, 1.0] {
            for i in 0..nn {
                if !mask[i] {
                    continue;
                }
                let a_minus = (-spec.a.samples[i]).max(0.0);
                let concave = if w1[i] > 0.0 || eps > 0.0 {
                    (w1[i] + eps).powf(spec.q - 2.0) * w1[i]
                } else {
                    0.0
                };
                let lhs = lap_w1[i] + a_minus * w1[i].powf(spec.p - 1.0)
                    - lambda * spec.b.samples[i] * concave;
                if !(lhs >= -1e-10) {
                    return Err(Error::Certificate(format!(
                        "supersolution inequality fails at node {i} (lambda = {lambda}, \
                         eps = {eps}): {lhs:e}; the mesh may be too coarse"
                    )));
                }
            }
        }
    }
    Ok(BoundCertificate {
        c,
        w0,
        w1,
        lambda_window,
        c1,
        max_b,
        max_w0,
        q: spec.q,
    })
}

/// Outcome of a comparison-principle check.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonVerdict {
    pub verdict: bool,
    /// worst conclusion gap max_i (u_i − v_i)
    pub max_violation: f64,
    /// which hypothesis or conclusion failed, if any
    pub failing: Option<String>,
}

fn boundary_measure(mesh: &Mesh) -> Vec<f64> {
    let n = mesh.n;
    let nn = mesh.num_nodes();
    let mut out = vec![0.0; nn];
    if mesh.dim() == 1 {
        out[0] = 1.0;
        out[n - 1] = 1.0;
    } else {
        for ix in 0..n {
            for iy in 0..n {
                let idx = mesh.index(ix, iy);
                let mut w = 0.0;
                if ix == 0 || ix == n - 1 {
                    w += if iy == 0 || iy == n - 1 {
                        mesh.h[1] / 2.0
                    } else {
                        mesh.h[1]
                    };
                }
                if iy == 0 || iy == n - 1 {
                    w += if ix == 0 || ix == n - 1 {
                        mesh.h[0] / 2.0
                    } else {
                        mesh.h[0]
                    };
                }
                out[idx] = w;
            }
        }
    }
    out
}

/// Checks the discrete weak sub/supersolution inequalities of u and v
/// against every nonnegative nodal basis function off the Dirichlet set,
/// then the ordering conclusion u ≤ v.
pub fn comparison_check(
    problem: &ComparisonProblem,
    u: &[f64],
    v: &[f64],
) -> Result<ComparisonVerdict> {
    let nn = problem.mesh.num_nodes();
    if u.len() != nn || v.len() != nn {
        return Err(Error::Contract("comparison_check: shape mismatch".into()));
    }
    if u.iter().chain(v.iter()).any(|&t| t < 0.0) {
        return Err(Error::Domain("comparison_check: u, v must be nonnegative".into()));
    }
    for i in 0..nn {
        if !problem.dirichlet_mask[i] && !(v[i] > 0.0) {
            return Err(Error::Domain(format!(
                "comparison_check: v must be positive off the Dirichlet set (node {i})"
            )));
        }
    }
    let bnd = boundary_measure(&problem.mesh);
    let au = problem.op.a.matvec(u);
    let av = problem.op.a.matvec(v);
    let residual = |i: usize, w: &[f64], aw: &[f64]| -> f64 {
        aw[i] - problem.mesh.weights[i] * (problem.f)(i, w[i]) - bnd[i] * (problem.g)(i, w[i])
    };
    let mut scale = 1.0_f64;
    for i in 0..nn {
        if problem.dirichlet_mask[i] {
            continue;
        }
        scale = scale
            .max(au[i].abs())
            .max(av[i].abs())
            .max((problem.mesh.weights[i] * (problem.f)(i, u[i])).abs())
            .max((problem.mesh.weights[i] * (problem.f)(i, v[i])).abs());
    }
    let tol = 1e-9 * scale;
    let mut failing: Option<String> = None;
    for i in 0..nn {
        if problem.dirichlet_mask[i] {
            if u[i] > problem.c1 + tol {
                failing = Some(format!("u exceeds C1 on the Dirichlet set at node {i}"));
                break;
            }
            if v[i] < problem.c1 - tol {
                failing = Some(format!("v below C1 on the Dirichlet set at node {i}"));
                break;
            }
            continue;
        }
        let ru = residual(i, u, &au);
        if ru > tol {
            failing = Some(format!(
                "subsolution inequality fails at node {i}: residual {ru:e}"
            ));
            break;
        }
        let rv = residual(i, v, &av);
        if rv < -tol {
            failing = Some(format!(
                "supersolution inequality fails at node {i}: residual {rv:e}"
            ));
            break;
        }
    }
    let max_violation = u
        .iter()
        .zip(v)
        .map(|(a, b)| a - b)
        .fold(f64::MIN, f64::max);
    let verdict = failing.is_none() && max_violation <= 1e-9;
    let failing = failing.or_else(|| {
        if max_violation > 1e-9 {
            Some(format!("ordering conclusion fails: max(u - v) = {max_violation:e}"))
        } else {
            None
        }
    });
    Ok(ComparisonVerdict {
        verdict,
        max_violation,
        failing,
    })
}

/// One row of the small-λ asymptotics table.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticRow {
    pub lambda: f64,
    /// ‖λ^{−1/(p−q)} u_λ − c*‖_∞
    pub e: Option<f64>,
    pub u_max: Option<f64>,
    /// sup-distance between Newton and monotone-iteration solutions
    pub cross_check: Option<f64>,
    /// nodewise u_λ ≤ u_{λ_prev} for the next-larger λ in the list
    pub monotone_in_lambda: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticTable {
    pub c_star: f64,
    pub rows: Vec<AsymptoticRow>,
}

/// Minimal solution at small λ: Newton from the asymptotic constant,
/// validated stable. Shared by `start_from_asymptotic`-style callers that
/// need λ up to 0.2.
fn minimal_solution(spec: &ProblemSpec, lambda: f64, c_star: f64) -> Result<Solution> {
    let scale = c_star * lambda.powf(1.0 / (spec.p - spec.q));
    let u0 = vec![scale; spec.mesh.num_nodes()];
    let mut sol = newton_solve(spec, lambda, &u0, 1e-10, 60)?;
    let g = gamma1(spec, &mut sol)?;
    if !(g > 0.0) {
        return Err(Error::Verification(format!(
            "Newton limit is not on the stable minimal branch (gamma1 = {g})"
        )));
    }
    Ok(sol)
}

/// Tabulates e(λ) = ‖λ^{−1/(p−q)} u_λ − c*‖_∞ over a decreasing λ list,
/// cross-checking each minimal solution with a downward monotone sweep and
/// flagging nodewise monotonicity in λ.
pub fn asymptotic_check(spec: &ProblemSpec, lambda_list: &[f64]) -> Result<AsymptoticTable> {
    if lambda_list.len() < 3 {
        return Err(Error::Contract(
            "asymptotic_check: need at least 3 lambda values".into(),
        ));
    }
    for w in lambda_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Contract(
                "asymptotic_check: lambda list must be strictly decreasing".into(),
            ));
        }
    }
    if !(lambda_list[0] <= 0.2 && *lambda_list.last().unwrap() > 0.0) {
        return Err(Error::Contract(
            "asymptotic_check: lambda values must lie in (0, 0.2]".into(),
        ));
    }
    if spec.eps != 0.0 {
        return Err(Error::Contract("asymptotic_check requires eps = 0".into()));
    }
    let regime = classify_regime(spec);
    let c_star = regime
        .c_star
        .ok_or_else(|| Error::Domain("asymptotic_check requires ∫a < 0".into()))?;
    let exponent = 1.0 / (spec.p - spec.q);
    let min_neg_a = spec
        .a
        .samples
        .iter()
        .fold(f64::MAX, |m, &v| m.min(-v));
    let max_b = spec.b.samples.iter().fold(f64::MIN, |m, &v| m.max(v));
    let mut rows: Vec<AsymptoticRow> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for &lambda in lambda_list {
        match minimal_solution(spec, lambda, c_star) {
            Ok(sol) => {
                let scale = lambda.powf(-exponent);
                let e = sol
                    .u
                    .iter()
                    .fold(0.0_f64, |m, &v| m.max((scale * v - c_star).abs()));
                // downward sweep from a constant supersolution, when one exists
                let cross_check = if min_neg_a > 0.0 {
                    let sup = 1.05 * (lambda * max_b / min_neg_a).powf(exponent).max(sol.u_max());
                    monotone_iterate(
                        spec,
                        lambda,
                        &vec![sup; spec.mesh.num_nodes()],
                        None,
                        Direction::Down,
                        1e-10,
                        20_000,
                    )
                    .ok()
                    .map(|m| {
                        m.u.iter()
                            .zip(&sol.u)
                            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
                    })
                } else {
                    None
                };
                let monotone_in_lambda = prev.as_ref().map(|pu| {
                    sol.u.iter().zip(pu).all(|(lo, hi)| *lo <= hi + 1e-10)
                });
                prev = Some(sol.u.clone());
                rows.push(AsymptoticRow {
                    lambda,
                    e: Some(e),
                    u_max: Some(sol.u_max()),
                    cross_check,
                    monotone_in_lambda,
                    error: None,
                });
            }
            Err(err) => {
                prev = None;
                rows.push(AsymptoticRow {
                    lambda,
                    e: None,
                    u_max: None,
                    cross_check: None,
                    monotone_in_lambda: None,
                    error: Some(err.to_string()),
                });
            }
        }
    }
    Ok(AsymptoticTable { c_star, rows })
}

/// Stability tag from the principal eigenvalue of the linearization.
pub fn stability_classify(gamma1: f64, scale: f64) -> Result<Stability> {
    if !(scale > 0.0) {
        return Err(Error::Contract("stability_classify: scale must be positive".into()));
    }
    Ok(classify_stability(gamma1, scale))
}
