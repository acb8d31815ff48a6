//! The discretized problem and its regularization: residual and Jacobian
//! assembly, regime classification and the closed-form constants.
//!
//! The equation is −Δu = λ b(x) g_ε(u) + a(x) u^{p−1} with Neumann boundary
//! conditions, where g_ε(u) = (u+ε)^{q−2} u smooths the concave term at
//! u = 0 and recovers u^{q−1} as ε → 0.

use std::sync::Arc;

use serde::Serialize;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::SymBanded;
use crate::mesh::{integrate, Mesh, NeumannOperator};

/// Below this floor the ε = 0 linearization weight u^{q−2} is treated as
/// singular.
pub const U_FLOOR: f64 = 1e-10;

/// Nodewise sign-set threshold.
pub const SIGN_TOL: f64 = 1e-12;

/// Full datum of the (regularized) problem on a mesh.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub mesh: Arc<Mesh>,
    pub op: Arc<NeumannOperator>,
    pub a: CoefficientField,
    pub b: CoefficientField,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    /// user-asserted decay exponent of a⁺ near ∂Ω^a_+
    pub gamma_decay: Option<f64>,
}

impl ProblemSpec {
    pub fn new(
        mesh: Arc<Mesh>,
        op: Arc<NeumannOperator>,
        a: CoefficientField,
        b: CoefficientField,
        p: f64,
        q: f64,
        eps: f64,
        gamma_decay: Option<f64>,
    ) -> Result<Self> {
        if !(q > 1.0 && q < 2.0 && p > 2.0) {
            return Err(Error::Config(format!(
                "requires 1 < q < 2 < p, got q = {q}, p = {p}"
            )));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Config(format!("requires 0 <= eps <= 1, got {eps}")));
        }
        if a.samples.len() != mesh.num_nodes() || b.samples.len() != mesh.num_nodes() {
            return Err(Error::Contract("coefficient sample length mismatch".into()));
        }
        if b.samples.iter().any(|&v| v < -SIGN_TOL) {
            return Err(Error::Config("b must be nonnegative".into()));
        }
        if !b.samples.iter().any(|&v| v > SIGN_TOL) {
            return Err(Error::Config("b must not vanish identically".into()));
        }
        if !a.samples.iter().any(|&v| v.abs() > SIGN_TOL) {
            return Err(Error::Config("a must not vanish identically".into()));
        }
        if let Some(g) = gamma_decay {
            if !(g > 0.0) {
                return Err(Error::Config("gamma_decay must be positive".into()));
            }
        }
        Ok(ProblemSpec {
            mesh,
            op,
            a,
            b,
            p,
            q,
            eps,
            gamma_decay,
        })
    }

    /// Same spec at a different regularization parameter.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut s = self.clone();
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Config(format!("requires 0 <= eps <= 1, got {eps}")));
        }
        s.eps = eps;
        Ok(s)
    }

    /// g_ε(t) = (t+ε)^{q−2} t, with g_0(0) = 0.
    pub fn g_eps(&self, t: f64) -> f64 {
        if t + self.eps <= 0.0 {
            0.0
        } else {
            (t + self.eps).powf(self.q - 2.0) * t
        }
    }

    /// g_ε'(t) = (q−2)(t+ε)^{q−3} t + (t+ε)^{q−2}.
    pub fn g_eps_prime(&self, t: f64) -> f64 {
        let s = t + self.eps;
        (self.q - 2.0) * s.powf(self.q - 3.0) * t + s.powf(self.q - 2.0)
    }
}

/// R(u) = A u − W (λ b g_ε(u) + a u^{p−1}); R = 0 characterizes a discrete
/// solution.
pub fn residual(spec: &ProblemSpec, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
    let nn = spec.mesh.num_nodes();
    if u.len() != nn || u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("residual: bad state vector".into()));
    }
    if spec.eps == 0.0 {
        if let Some(i) = u.iter().position(|&v| v < 0.0) {
            return Err(Error::Domain(format!(
                "residual at eps = 0 needs u >= 0; u[{i}] = {}",
                u[i]
            )));
        }
    }
    let mut r = spec.op.apply(u);
    for i in 0..nn {
        let f = lambda * spec.b.samples[i] * spec.g_eps(u[i])
            + spec.a.samples[i] * power_term(u[i], spec.p - 1.0);
        r[i] -= spec.mesh.weights[i] * f;
    }
    Ok(r)
}

fn power_term(u: f64, e: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        u.powf(e)
    }
}

/// Diagonal weight of the linearization, m = λ b g_ε'(u) + (p−1) a u^{p−2}
/// (for ε = 0 the q-term weight is λ(q−1) b u^{q−2}).
pub fn linearization_weight(spec: &ProblemSpec, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
    let nn = spec.mesh.num_nodes();
    if u.len() != nn {
        return Err(Error::Contract("linearization: length mismatch".into()));
    }
    let mut m = Vec::with_capacity(nn);
    for i in 0..nn {
        let qw = if spec.eps > 0.0 {
            lambda * spec.b.samples[i] * spec.g_eps_prime(u[i])
        } else {
            if u[i] < U_FLOOR {
                return Err(Error::Domain(format!(
                    "eps = 0 linearization singular at node {i}: u = {}",
                    u[i]
                )));
            }
            lambda * (spec.q - 1.0) * spec.b.samples[i] * u[i].powf(spec.q - 2.0)
        };
        let pw = (spec.p - 1.0) * spec.a.samples[i] * power_term(u[i], spec.p - 2.0);
        m.push(qw + pw);
    }
    Ok(m)
}

/// J = A − W diag(m) with m from `linearization_weight`.
pub fn jacobian(spec: &ProblemSpec, lambda: f64, u: &[f64]) -> Result<SymBanded> {
    let m = linearization_weight(spec, lambda, u)?;
    let d: Vec<f64> = m
        .iter()
        .zip(&spec.mesh.weights)
        .map(|(mi, wi)| -wi * mi)
        .collect();
    Ok(spec.op.a.plus_diag(&d))
}

/// ∂R/∂λ = −W (b ⊙ g_ε(u)).
pub fn residual_dlambda(spec: &ProblemSpec, u: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|i| -spec.mesh.weights[i] * spec.b.samples[i] * spec.g_eps(u[i]))
        .collect()
}

/// Predicted bifurcation diagram shape: branches confined to λ < 0
/// (`Figure1`) versus a fold into λ > 0 (`Figure2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Diagram {
    Figure1,
    Figure2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntSign {
    Nonneg,
    Negative,
}

/// Classification record of the coefficient data.
#[derive(Debug, Clone, Serialize)]
pub struct Regime {
    pub int_a: f64,
    pub int_b: f64,
    pub sign_int_a: IntSign,
    /// Ω^a_+ ∩ Ω^b_+ nonempty on nodes
    pub h01: bool,
    /// Ω^a_+ empty on nodes
    pub h02: bool,
    /// subcriticality test from the user-asserted decay exponent; only
    /// meaningful in dimension >= 2
    pub h2_ok: Option<bool>,
    pub c_star: Option<f64>,
    pub predicted_diagram: Diagram,
}

/// Classifies the data: integrals, node-level sign sets, c*, predicted
/// diagram shape.
pub fn classify_regime(spec: &ProblemSpec) -> Regime {
    let int_a = integrate(&spec.mesh, &spec.a.samples).expect("validated lengths");
    let int_b = integrate(&spec.mesh, &spec.b.samples).expect("validated lengths");
    let abs_a: Vec<f64> = spec.a.samples.iter().map(|v| v.abs()).collect();
    let scale = 1.0 + integrate(&spec.mesh, &abs_a).expect("validated lengths");
    let nonneg = int_a >= -1e-10 * scale;
    let a_pos = |i: usize| spec.a.samples[i] > SIGN_TOL;
    let b_pos = |i: usize| spec.b.samples[i] > SIGN_TOL;
    let h01 = (0..spec.mesh.num_nodes()).any(|i| a_pos(i) && b_pos(i));
    let h02 = !(0..spec.mesh.num_nodes()).any(a_pos);
    let h2_ok = match (spec.gamma_decay, spec.mesh.dim()) {
        (Some(g), d) if d >= 2 => {
            let n = d as f64;
            let crit_sobolev = if n > 2.0 { 2.0 * n / (n - 2.0) } else { f64::INFINITY };
            let crit_decay = (2.0 * n + g) / (n - 1.0);
            Some(spec.p < crit_sobolev.min(crit_decay))
        }
        _ => None,
    };
    let (sign_int_a, c_star) = if nonneg {
        (IntSign::Nonneg, None)
    } else {
        (
            IntSign::Negative,
            Some((int_b / -int_a).powf(1.0 / (spec.p - spec.q))),
        )
    };
    Regime {
        int_a,
        int_b,
        sign_int_a,
        h01,
        h02,
        h2_ok,
        c_star,
        predicted_diagram: if nonneg { Diagram::Figure1 } else { Diagram::Figure2 },
    }
}

/// c* = (∫b / −∫a)^{1/(p−q)}, defined for ∫a < 0.
pub fn c_star(spec: &ProblemSpec) -> Result<f64> {
    let regime = classify_regime(spec);
    match regime.c_star {
        Some(c) => Ok(c),
        None => Err(Error::Domain(format!(
            "c* requires ∫a < 0, got ∫a = {}",
            regime.int_a
        ))),
    }
}
