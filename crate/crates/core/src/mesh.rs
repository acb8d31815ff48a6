//! Structured meshes on intervals and axis-aligned rectangles, the discrete
//! Neumann Laplacian, lumped trapezoid quadrature and Dirichlet sub-solves
//! on node masks.
//!
//! The stencil is the classical second-order one (3-point in 1D, 5-point in
//! 2D) with ghost-node reflection folded into the boundary rows. The stored
//! operator is the symmetrized form `A = W L` with `W = diag(weights)`; its
//! row sums vanish, constants span its kernel and the off-diagonal entries
//! are nonpositive (M-matrix).

use crate::error::{Error, Result};
use crate::linalg::{solve_sym, SymBanded};

/// Domain description: an interval or an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub dim: usize,
    /// x extent; also the only extent in 1D.
    pub x: (f64, f64),
    /// y extent, ignored in 1D.
    pub y: (f64, f64),
}

impl Bounds {
    pub fn interval(a: f64, b: f64) -> Self {
        Bounds {
            dim: 1,
            x: (a, b),
            y: (0.0, 0.0),
        }
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Self {
        Bounds { dim: 2, x, y }
    }

    pub fn measure(&self) -> f64 {
        let lx = self.x.1 - self.x.0;
        if self.dim == 1 {
            lx
        } else {
            lx * (self.y.1 - self.y.0)
        }
    }
}

/// Discretized domain with nodes, quadrature weights and grid spacings.
///
/// Nodes are ordered lexicographically by (x, y); in 2D the flat index is
/// `ix * n + iy`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub bounds: Bounds,
    /// nodes per axis
    pub n: usize,
    /// node coordinates, `[x, y]` with y = 0 in 1D
    pub nodes: Vec<[f64; 2]>,
    /// lumped trapezoid weight per node
    pub weights: Vec<f64>,
    /// grid spacing per axis
    pub h: [f64; 2],
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.bounds.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Flat index of the 2D grid point (ix, iy).
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.n + iy
    }

    /// Grid neighbors of a node (2 to 4 of them).
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(4);
        if self.dim() == 1 {
            if idx > 0 {
                out.push(idx - 1);
            }
            if idx + 1 < self.n {
                out.push(idx + 1);
            }
        } else {
            let (ix, iy) = (idx / self.n, idx % self.n);
            if ix > 0 {
                out.push(self.index(ix - 1, iy));
            }
            if ix + 1 < self.n {
                out.push(self.index(ix + 1, iy));
            }
            if iy > 0 {
                out.push(self.index(ix, iy - 1));
            }
            if iy + 1 < self.n {
                out.push(self.index(ix, iy + 1));
            }
        }
        out
    }
}

/// Discrete −Δ with natural (Neumann) boundary treatment, stored as the
/// weighted-symmetric form `A = W L`.
#[derive(Debug, Clone)]
pub struct NeumannOperator {
    pub a: SymBanded,
    pub weights: Vec<f64>,
}

impl NeumannOperator {
    /// A u (the symmetrized form used in every eigenproblem).
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.a.matvec(u)
    }

    /// Nodal values of −Δu, i.e. `W^{-1} A u`.
    pub fn apply_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.a.matvec(u);
        for (vi, wi) in v.iter_mut().zip(&self.weights) {
            *vi /= *wi;
        }
        v
    }
}

/// Dirichlet restriction of the operator to a node subset.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    /// symmetric positive definite block `A_SS`
    pub a: SymBanded,
    /// full-mesh indices of the active nodes, increasing
    pub active: Vec<usize>,
}

/// Builds a structured mesh. `n` is the node count per axis.
pub fn build_mesh(bounds: Bounds, n: usize) -> Result<Mesh> {
    if n < 3 {
        return Err(Error::Config(format!("n = {n} < 3")));
    }
    if !(bounds.x.1 > bounds.x.0) || (bounds.dim == 2 && !(bounds.y.1 > bounds.y.0)) {
        return Err(Error::Config("degenerate bounds".into()));
    }
    if bounds.dim != 1 && bounds.dim != 2 {
        return Err(Error::Config(format!("dim = {} not supported", bounds.dim)));
    }
    let hx = (bounds.x.1 - bounds.x.0) / (n - 1) as f64;
    let axis = |a: f64, h: f64, i: usize| a + h * i as f64;
    let trap = |i: usize, h: f64| if i == 0 || i == n - 1 { h / 2.0 } else { h };
    if bounds.dim == 1 {
        let nodes: Vec<[f64; 2]> = (0..n).map(|i| [axis(bounds.x.0, hx, i), 0.0]).collect();
        let weights: Vec<f64> = (0..n).map(|i| trap(i, hx)).collect();
        Ok(Mesh {
            bounds,
            n,
            nodes,
            weights,
            h: [hx, 0.0],
        })
    } else {
        let hy = (bounds.y.1 - bounds.y.0) / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for ix in 0..n {
            for iy in 0..n {
                nodes.push([axis(bounds.x.0, hx, ix), axis(bounds.y.0, hy, iy)]);
                weights.push(trap(ix, hx) * trap(iy, hy));
            }
        }
        Ok(Mesh {
            bounds,
            n,
            nodes,
            weights,
            h: [hx, hy],
        })
    }
}

/// Assembles the Neumann Laplacian as a graph Laplacian over grid edges;
/// ghost-node reflection at the boundary is what the lumped boundary weights
/// encode.
pub fn assemble_neumann_laplacian(mesh: &Mesh) -> NeumannOperator {
    let nn = mesh.num_nodes();
    let bw = if mesh.dim() == 1 { 1 } else { mesh.n };
    let mut a = SymBanded::zeros(nn, bw);
    let add_edge = |i: usize, j: usize, c: f64, a: &mut SymBanded| {
        a.add(i, i, c);
        a.add(j, j, c);
        a.add(i, j, -c);
    };
    if mesh.dim() == 1 {
        let c = 1.0 / mesh.h[0];
        for i in 0..nn - 1 {
            add_edge(i, i + 1, c, &mut a);
        }
    } else {
        let n = mesh.n;
        let (hx, hy) = (mesh.h[0], mesh.h[1]);
        let trap = |i: usize, h: f64| if i == 0 || i == n - 1 { h / 2.0 } else { h };
        for ix in 0..n {
            for iy in 0..n {
                let idx = mesh.index(ix, iy);
                if ix + 1 < n {
                    add_edge(idx, mesh.index(ix + 1, iy), trap(iy, hy) / hx, &mut a);
                }
                if iy + 1 < n {
                    add_edge(idx, mesh.index(ix, iy + 1), trap(ix, hx) / hy, &mut a);
                }
            }
        }
    }
    NeumannOperator {
        a,
        weights: mesh.weights.clone(),
    }
}

/// Lumped trapezoid quadrature of nodal values.
pub fn integrate(mesh: &Mesh, values: &[f64]) -> Result<f64> {
    if values.len() != mesh.num_nodes() {
        return Err(Error::Contract(format!(
            "integrate: {} values on a {}-node mesh",
            values.len(),
            mesh.num_nodes()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("integrate: nonfinite value".into()));
    }
    Ok(values
        .iter()
        .zip(&mesh.weights)
        .map(|(v, w)| v * w)
        .sum())
}

/// Builds the SPD Dirichlet block of the operator on the masked node set.
pub fn assemble_dirichlet(
    mesh: &Mesh,
    op: &NeumannOperator,
    mask: &[bool],
) -> Result<DirichletOperator> {
    if mask.len() != mesh.num_nodes() {
        return Err(Error::Contract("mask length mismatch".into()));
    }
    let active: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if active.is_empty() {
        return Err(Error::Config("empty subdomain mask".into()));
    }
    // the discrete boundary: unmasked nodes adjacent to the set
    let has_boundary = active
        .iter()
        .any(|&i| mesh.neighbors(i).iter().any(|&j| !mask[j]));
    if !has_boundary {
        return Err(Error::Config(
            "mask covers the whole mesh; no Dirichlet nodes".into(),
        ));
    }
    let mut compressed = vec![usize::MAX; mask.len()];
    for (c, &i) in active.iter().enumerate() {
        compressed[i] = c;
    }
    let mut bw = 0usize;
    for &i in &active {
        for j in mesh.neighbors(i) {
            if mask[j] {
                bw = bw.max(compressed[i].abs_diff(compressed[j]));
            }
        }
    }
    let mut a = SymBanded::zeros(active.len(), bw.max(1));
    for (c, &i) in active.iter().enumerate() {
        a.add(c, c, op.a.get(i, i));
        for j in mesh.neighbors(i) {
            if mask[j] && compressed[j] < c {
                a.add(c, compressed[j], op.a.get(i, j));
            }
        }
    }
    Ok(DirichletOperator { a, active })
}

/// Solves −Δw = rhs on the masked set with w = 0 on its discrete boundary
/// (and everywhere outside). Returns the full-mesh nodal vector.
pub fn solve_dirichlet_poisson(
    mesh: &Mesh,
    op: &NeumannOperator,
    mask: &[bool],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    if rhs.len() != mesh.num_nodes() || rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("rhs length mismatch or nonfinite".into()));
    }
    let dir = assemble_dirichlet(mesh, op, mask)?;
    let b: Vec<f64> = dir.active.iter().map(|&i| mesh.weights[i] * rhs[i]).collect();
    let x = solve_sym(&dir.a, &b)?;
    let mut w = vec![0.0; mesh.num_nodes()];
    for (c, &i) in dir.active.iter().enumerate() {
        w[i] = x[c];
    }
    Ok(w)
}
