//! Run orchestration: builds the discrete problem from a `RunPlan`,
//! dispatches the subcommands, applies the predicted-property checks whose
//! violation means a verification failure, and writes CSV/JSON/SVG
//! artifacts. Exit statuses: 0 success, 1 configuration error, 2 solver
//! non-convergence, 3 verification failure.

use serde_json::{json, Value};
use std::sync::Arc;

use crate::coeff::field_from_text;
use crate::config::{Command, RunPlan};
use crate::continuation::{
    branch_point_from_solution, locate_fold, start_from_asymptotic, start_from_zero,
    trace_branch, whyburn_limit, Branch, BranchPoint, Tangent, TraceOptions, WhyburnReport,
};
use crate::error::{Error, Result};
use crate::mesh::{assemble_neumann_laplacian, build_mesh};
use crate::problem::{classify_regime, Diagram, ProblemSpec, Regime};
use crate::report::{
    branch_svg, branches_to_csv, solutions_to_csv, stability_label, whyburn_svg,
};
use crate::solvers::{gamma1, newton_solve, sigma_eps, sigma_lambda, Solution};
use crate::verify::{asymptotic_check, build_supersolution};

/// Maps errors onto the documented process exit statuses.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Contract(_) | Error::Parse { .. } | Error::Eval(_)
        | Error::Io(_) | Error::Json(_) => 1,
        Error::NoConvergence(_)
        | Error::Stagnation(_)
        | Error::Singular(_)
        | Error::Start(_)
        | Error::Trace(_)
        | Error::FoldRefine(_)
        | Error::Domain(_)
        | Error::Monotonicity(_) => 2,
        Error::Verification(_) | Error::Certificate(_) | Error::Inapplicable(_) => 3,
    }
}

/// Builds the discrete problem described by the plan (at `plan.eps`).
pub fn build_spec(plan: &RunPlan) -> Result<ProblemSpec> {
    let mesh = Arc::new(build_mesh(plan.bounds, plan.n)?);
    let op = Arc::new(assemble_neumann_laplacian(&mesh));
    let a = field_from_text(&plan.a, &mesh)?;
    let b = field_from_text(&plan.b, &mesh)?;
    ProblemSpec::new(mesh, op, a, b, plan.p, plan.q, plan.eps, plan.gamma_decay)
}

/// When ∫a ≥ 0 every positive solution must have λ < 0; a branch point at
/// λ ≥ 0 is a verification failure.
pub fn check_figure1_law(regime: &Regime, branch: &Branch) -> Result<()> {
    if regime.predicted_diagram != Diagram::Figure1 {
        return Ok(());
    }
    for (k, p) in branch.points.iter().enumerate() {
        if !(p.solution.lambda < 0.0) {
            return Err(Error::Verification(format!(
                "predicted-property violation: branch point {k} has lambda = {} >= 0 \
                 although ∫a >= 0",
                p.solution.lambda
            )));
        }
    }
    Ok(())
}

fn regime_json(regime: &Regime) -> Value {
    serde_json::to_value(regime).unwrap_or(Value::Null)
}

fn solution_json(sol: &Solution) -> Value {
    json!({
        "lambda": sol.lambda,
        "eps": sol.eps,
        "u_max": sol.u_max(),
        "u_min": sol.u_min(),
        "residual_norm": sol.residual_norm,
        "gamma1": sol.gamma1,
        "stability": stability_label(sol.stability),
        "newton_iters": sol.newton_iters,
    })
}

fn write_if(path: &Option<std::path::PathBuf>, content: &str) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, content)?;
    }
    Ok(())
}

fn write_json(plan: &RunPlan, summary: &Value) -> Result<()> {
    if let Some(p) = &plan.out_json {
        std::fs::write(p, format!("{}\n", serde_json::to_string_pretty(summary)?))?;
    }
    Ok(())
}

fn single_point_branch(sol: Solution, eps: f64) -> Branch {
    let n = sol.u.len();
    Branch {
        points: vec![BranchPoint {
            s: 0.0,
            solution: sol,
            tangent: Tangent {
                du: vec![0.0; n],
                dlambda: 0.0,
            },
            is_fold: false,
        }],
        eps,
        folds: Vec::new(),
        lambda0_estimate: None,
        status: crate::continuation::BranchStatus::MaxPoints,
    }
}

fn trace_options(plan: &RunPlan) -> TraceOptions {
    let window = plan.lambda_window.expect("window checked at parse time");
    let mut opts = TraceOptions::new(plan.ds, window, plan.max_points);
    opts.newton_tol = plan.newton_tol;
    opts
}

fn run_solve(plan: &RunPlan, spec: &ProblemSpec, regime: &Regime) -> Result<Value> {
    let lambda = plan.lambda.expect("lambda checked at parse time");
    // default start: asymptotic constant on the minimal branch when it
    // exists, otherwise a fixed mid-range constant
    let u0_val = match regime.c_star {
        Some(cs) if lambda > 0.0 => cs * lambda.powf(1.0 / (spec.p - spec.q)),
        _ => 0.5,
    };
    let u0 = vec![u0_val; spec.mesh.num_nodes()];
    let mut sol = newton_solve(spec, lambda, &u0, plan.newton_tol, 60)?;
    gamma1(spec, &mut sol)?;
    let summary = json!({
        "command": "solve",
        "regime": regime_json(regime),
        "solution": solution_json(&sol),
    });
    let branch = single_point_branch(sol, spec.eps);
    write_if(&plan.out_csv, &branches_to_csv(&[&branch], &spec.mesh.weights))?;
    if plan.dump_solutions {
        if let Some(p) = &plan.out_csv {
            let side = p.with_extension("solutions.csv");
            std::fs::write(side, solutions_to_csv(&branch, &spec.mesh.nodes))?;
        }
    }
    write_if(&plan.out_svg, &branch_svg(&branch))?;
    Ok(summary)
}

fn run_branch(plan: &RunPlan, spec: &ProblemSpec, regime: &Regime) -> Result<Value> {
    let opts = trace_options(plan);
    let window = opts.lambda_window;
    let start = if spec.eps > 0.0 {
        let sign = if window.1 <= 0.0 { -1.0 } else { 1.0 };
        start_from_zero(spec, sign, opts.ds, opts.newton_tol)?
    } else {
        let lambda_start = 0.05_f64.min(0.5 * window.1).max(1e-3);
        let sol = start_from_asymptotic(spec, lambda_start)?;
        branch_point_from_solution(spec, sol, 1.0)?
    };
    let mut branch = trace_branch(spec, start, &opts)?;
    let mut fold_json = Value::Null;
    if let Some(&first) = branch.folds.first() {
        let (lambda0, fold_sol) = locate_fold(spec, &branch, first, opts.newton_tol)?;
        branch.lambda0_estimate = Some(lambda0);
        fold_json = json!({
            "lambda0_estimate": lambda0,
            "solution": solution_json(&fold_sol),
        });
    }
    let fig1 = check_figure1_law(regime, &branch);
    let summary = json!({
        "command": "branch",
        "regime": regime_json(regime),
        "eps": spec.eps,
        "points": branch.points.len(),
        "folds": branch.folds,
        "fold": fold_json,
        "lambda0_estimate": branch.lambda0_estimate,
        "status": format!("{:?}", branch.status),
        "figure1_law": fig1.as_ref().map(|_| "ok").unwrap_or("violated"),
    });
    write_if(&plan.out_csv, &branches_to_csv(&[&branch], &spec.mesh.weights))?;
    if plan.dump_solutions {
        if let Some(p) = &plan.out_csv {
            let side = p.with_extension("solutions.csv");
            std::fs::write(side, solutions_to_csv(&branch, &spec.mesh.nodes))?;
        }
    }
    write_if(&plan.out_svg, &branch_svg(&branch))?;
    write_json(plan, &summary)?;
    fig1?;
    Ok(summary)
}

fn run_whyburn(plan: &RunPlan, spec: &ProblemSpec, regime: &Regime) -> Result<Value> {
    let opts = trace_options(plan);
    let window = opts.lambda_window;
    let schedule = plan
        .eps_schedule
        .as_deref()
        .expect("schedule checked at parse time");
    let sign = if window.1 <= 0.0 { -1.0 } else { 1.0 };
    let report: WhyburnReport = whyburn_limit(spec, schedule, sign, &opts)?;
    let mut fig1 = Ok(());
    for b in &report.branches {
        if fig1.is_ok() {
            fig1 = check_figure1_law(regime, b);
        }
    }
    let summary = json!({
        "command": "whyburn",
        "regime": regime_json(regime),
        "eps_schedule": report.eps_schedule,
        "branches": report.branches.iter().map(|b| json!({
            "eps": b.eps,
            "points": b.points.len(),
            "folds": b.folds,
            "status": format!("{:?}", b.status),
        })).collect::<Vec<_>>(),
        "pairwise_distances": report.pairwise_distances,
        "converged": report.converged,
        "dead_core_counts": report.dead_core_counts,
        "failure": report.failure.as_ref().map(|f| json!({
            "eps": f.eps,
            "message": f.message,
        })),
        "figure1_law": fig1.as_ref().map(|_| "ok").unwrap_or("violated"),
    });
    let refs: Vec<&Branch> = report.branches.iter().collect();
    write_if(&plan.out_csv, &branches_to_csv(&refs, &spec.mesh.weights))?;
    write_if(&plan.out_svg, &whyburn_svg(&report))?;
    write_json(plan, &summary)?;
    fig1?;
    if let Some(f) = &report.failure {
        return Err(Error::NoConvergence(format!(
            "whyburn trace failed at eps = {}: {}",
            f.eps, f.message
        )));
    }
    Ok(summary)
}

fn run_eigen(plan: &RunPlan, spec: &ProblemSpec) -> Result<Value> {
    let lambda = plan.lambda.expect("lambda checked at parse time");
    let sl = sigma_lambda(&spec.mesh, &spec.op, &spec.b, lambda)?;
    let se = if spec.eps > 0.0 {
        let r = sigma_eps(&spec.mesh, &spec.op, &spec.b, lambda, spec.eps, spec.q)?;
        json!({ "value": r.value, "iterations": r.iterations })
    } else {
        Value::Null
    };
    Ok(json!({
        "command": "eigen",
        "lambda": lambda,
        "sigma_lambda": { "value": sl.value, "iterations": sl.iterations },
        "sigma_eps": se,
    }))
}

fn run_verify(plan: &RunPlan, spec: &ProblemSpec, regime: &Regime) -> Result<Value> {
    let lambda = plan.lambda.unwrap_or(1.0);
    let mut checks: Vec<Value> = Vec::new();
    let mut first_failure: Option<Error> = None;
    match sigma_lambda(&spec.mesh, &spec.op, &spec.b, lambda) {
        Ok(r) => checks.push(json!({
            "check": "sigma_lambda_sign",
            "ok": true,
            "value": r.value,
        })),
        Err(e) => {
            checks.push(json!({
                "check": "sigma_lambda_sign",
                "ok": false,
                "error": e.to_string(),
            }));
            first_failure.get_or_insert(e);
        }
    }
    if regime.c_star.is_some() && spec.eps == 0.0 {
        match asymptotic_check(spec, &[0.2, 0.1, 0.05]) {
            Ok(table) => {
                let es: Vec<Option<f64>> = table.rows.iter().map(|r| r.e).collect();
                let ok = table.rows.iter().all(|r| r.error.is_none());
                checks.push(json!({
                    "check": "small_lambda_asymptotics",
                    "ok": ok,
                    "c_star": table.c_star,
                    "e": es,
                }));
                if !ok {
                    first_failure.get_or_insert(Error::Verification(
                        "asymptotics table contains failed rows".into(),
                    ));
                }
            }
            Err(e) => {
                checks.push(json!({
                    "check": "small_lambda_asymptotics",
                    "ok": false,
                    "error": e.to_string(),
                }));
                first_failure.get_or_insert(e);
            }
        }
    }
    let mask: Vec<bool> = spec.a.samples.iter().map(|&v| v < -1e-8).collect();
    let mask_usable = mask.iter().any(|&m| m) && mask.iter().any(|&m| !m);
    if mask_usable {
        let window = plan.lambda_window.map(|w| w.1.abs()).unwrap_or(2.0);
        match build_supersolution(spec, window, 1.0, &mask) {
            Ok(cert) => checks.push(json!({
                "check": "supersolution_certificate",
                "ok": true,
                "C": cert.c,
                "lambda_window": cert.lambda_window,
            })),
            Err(e) => {
                checks.push(json!({
                    "check": "supersolution_certificate",
                    "ok": false,
                    "error": e.to_string(),
                }));
                first_failure.get_or_insert(e);
            }
        }
    }
    let summary = json!({
        "command": "verify",
        "regime": regime_json(regime),
        "checks": checks,
    });
    write_json(plan, &summary)?;
    if let Some(e) = first_failure {
        return Err(e);
    }
    Ok(summary)
}

/// Executes a plan, writes its artifacts and returns the JSON summary.
pub fn run_plan(plan: &RunPlan) -> Result<Value> {
    let spec = build_spec(plan)?;
    let regime = classify_regime(&spec);
    let summary = match plan.command {
        Command::Classify => json!({
            "command": "classify",
            "regime": regime_json(&regime),
        }),
        Command::Solve => run_solve(plan, &spec, &regime)?,
        Command::Eigen => run_eigen(plan, &spec)?,
        Command::Branch => return run_branch(plan, &spec, &regime),
        Command::Whyburn => return run_whyburn(plan, &spec, &regime),
        Command::Verify => return run_verify(plan, &spec, &regime),
    };
    write_json(plan, &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn plan(text: &str) -> RunPlan {
        parse_config(text).unwrap()
    }

    #[test]
    fn classify_constant_coefficients() {
        let p = plan("command = classify\np = 4\nq = 1.5\na = -1\nb = 1\nn = 16\n");
        let v = run_plan(&p).unwrap();
        let regime = &v["regime"];
        assert_eq!(regime["predicted_diagram"], "Figure2");
        assert_eq!(regime["h02"], true);
        assert!((regime["c_star"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_minimal_constant() {
        let p = plan("command = solve\nlambda = 1\np = 4\nq = 1.5\na = -1\nb = 1\nn = 32\n");
        let v = run_plan(&p).unwrap();
        let sol = &v["solution"];
        assert!((sol["u_max"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(sol["stability"], "stable");
    }

    #[test]
    fn eigen_constant_weight() {
        let p = plan("command = eigen\nlambda = 1\np = 4\nq = 1.5\na = -1\nb = 1\nn = 32\n");
        let v = run_plan(&p).unwrap();
        let val = v["sigma_lambda"]["value"].as_f64().unwrap();
        assert!((val + 1.0).abs() < 1e-9, "sigma = {val}");
    }

    #[test]
    fn branch_fold_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("branch.csv");
        let jsn = dir.path().join("branch.json");
        let svg = dir.path().join("branch.svg");
        let text = format!(
            "command = branch\nn = 48\np = 4\nq = 1.5\na = cos(2*pi*x)-0.1\nb = 1\n\
             eps = 1e-3\nlambda_window = 0, 3\nds = 0.02\nmax_points = 400\n\
             out_csv = {}\nout_json = {}\nout_svg = {}\n",
            csv.display(),
            jsn.display(),
            svg.display()
        );
        let p = plan(&text);
        let v = run_plan(&p).unwrap();
        assert!(v["lambda0_estimate"].as_f64().unwrap() > 0.0);
        assert_eq!(v["folds"].as_array().unwrap().len(), 1);
        let csv_text = std::fs::read_to_string(&csv).unwrap();
        let rows = crate::report::parse_branch_csv(&csv_text).unwrap();
        assert_eq!(rows.iter().filter(|r| r.is_fold).count(), 1);
        let json_text = std::fs::read_to_string(&jsn).unwrap();
        assert!(json_text.contains("lambda0_estimate"));
        assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
    }

    #[test]
    fn figure1_law_stub_maps_to_exit_3() {
        let p = plan("command = classify\np = 4\nq = 1.5\na = cos(2*pi*x)\nb = 1\nn = 16\n");
        let spec = build_spec(&p).unwrap();
        let regime = classify_regime(&spec);
        assert_eq!(regime.predicted_diagram, Diagram::Figure1);
        // stub branch carrying a lambda > 0 point through the same check path
        let sol = Solution {
            u: vec![0.5; spec.mesh.num_nodes()],
            lambda: 0.25,
            eps: 1e-2,
            residual_norm: 0.0,
            gamma1: Some(-1.0),
            stability: None,
            newton_iters: 0,
        };
        let branch = single_point_branch(sol, 1e-2);
        let err = check_figure1_law(&regime, &branch).unwrap_err();
        assert_eq!(exit_code(&err), 3);
    }

    #[test]
    fn exit_code_contract() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::NoConvergence("x".into())), 2);
        assert_eq!(exit_code(&Error::Verification("x".into())), 3);
    }

    #[test]
    fn whyburn_short_schedule_is_config_error() {
        let err = parse_config(
            "command = whyburn\nlambda_window = -2, 0\neps_schedule = 0.1\n\
             p = 4\nq = 1.5\na = cos(2*pi*x)\nb = 1\n",
        )
        .unwrap_err();
        assert_eq!(exit_code(&err), 1);
    }
}
