//! Symmetric banded matrices, an LDL^T direct solver and bordered-system
//! support. Meshes here are small (<= 10^4 nodes) and structured, so a
//! banded factorization with a dense LU fallback covers every solve in the
//! pipeline.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Symmetric banded matrix, lower bands stored row-major.
///
/// Entry `(i, i-k)` for `k = 0..=bw` lives at `data[i*(bw+1) + k]`.
#[derive(Debug, Clone)]
pub struct SymBanded {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bw {
            0.0
        } else {
            self.data[hi * (self.bw + 1) + k]
        }
    }

    /// Sets the symmetric pair (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= self.bw, "entry outside band");
        self.data[hi * (self.bw + 1) + k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// y = M x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        let w = self.bw + 1;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = row[0] * x[i];
            let kmax = self.bw.min(i);
            for k in 1..=kmax {
                let j = i - k;
                acc += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// M + diag(d), entrywise on the main diagonal.
    pub fn plus_diag(&self, d: &[f64]) -> SymBanded {
        assert_eq!(d.len(), self.n);
        let mut m = self.clone();
        let w = self.bw + 1;
        for i in 0..self.n {
            m.data[i * w] += d[i];
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let v = self.get(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Unpivoted banded LDL^T. Fails on a pivot below `1e-14 * scale`.
    pub fn factor(&self) -> Result<BandedLdlt> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let scale = (0..n)
            .map(|i| self.data[i * w].abs())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        // l[i*w + k] holds L(i, i-k); d[i] the diagonal of D.
        let mut l = vec![0.0; n * w];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            for j in jmin..i {
                let k = i - j;
                let mut s = self.data[i * w + k];
                let mmin = jmin.max(j.saturating_sub(bw));
                for m in mmin..j {
                    s -= l[i * w + (i - m)] * d[m] * l[j * w + (j - m)];
                }
                l[i * w + k] = s / d[j];
            }
            let mut s = self.data[i * w];
            for m in jmin..i {
                let lv = l[i * w + (i - m)];
                s -= lv * lv * d[m];
            }
            if s.abs() < 1e-14 * scale {
                return Err(Error::Singular(format!(
                    "pivot {:e} below threshold at row {}",
                    s, i
                )));
            }
            d[i] = s;
        }
        Ok(BandedLdlt { n, bw, l, d })
    }
}

/// Banded LDL^T factors.
#[derive(Debug, Clone)]
pub struct BandedLdlt {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl BandedLdlt {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let w = self.bw + 1;
        let mut x = rhs.to_vec();
        // L y = rhs
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.bw);
            let mut s = x[i];
            for j in jmin..i {
                s -= self.l[i * w + (i - j)] * x[j];
            }
            x[i] = s;
        }
        // D z = y
        for i in 0..self.n {
            x[i] /= self.d[i];
        }
        // L^T x = z
        for i in (0..self.n).rev() {
            let jmax = (i + self.bw).min(self.n - 1);
            let mut s = x[i];
            for j in (i + 1)..=jmax {
                s -= self.l[j * w + (j - i)] * x[j];
            }
            x[i] = s;
        }
        x
    }
}

/// Solves M x = rhs to a relative residual of 1e-12, with one step of
/// iterative refinement. Errors if the factorization hits a tiny pivot.
pub fn solve_sym(m: &SymBanded, rhs: &[f64]) -> Result<Vec<f64>> {
    let f = m.factor()?;
    let mut x = f.solve(rhs);
    // refinement
    for _ in 0..2 {
        let mx = m.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&mx).map(|(b, a)| b - a).collect();
        let rn = inf_norm(&r);
        let bn = inf_norm(rhs).max(1e-300);
        if rn <= 1e-13 * bn {
            break;
        }
        let dx = f.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    Ok(x)
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}

/// Solution of the bordered system
/// `[ M  col ] [x ]   [rhs ]`
/// `[ row  d ] [xl] = [rhsl]`.
pub struct BorderedSolution {
    pub x: Vec<f64>,
    pub xl: f64,
}

/// Solves the bordered system above. Tries block elimination on the banded
/// block first; falls back to a dense LU of the full (n+1) matrix when the
/// block is singular or the bordered residual is poor (the banded block is
/// exactly singular at a fold while the bordered matrix stays regular).
pub fn solve_bordered(
    m: &SymBanded,
    col: &[f64],
    row: &[f64],
    d: f64,
    rhs: &[f64],
    rhsl: f64,
) -> Result<BorderedSolution> {
    let n = m.n;
    assert_eq!(col.len(), n);
    assert_eq!(row.len(), n);
    assert_eq!(rhs.len(), n);

    if let Ok(f) = m.factor() {
        let z1 = f.solve(rhs);
        let z2 = f.solve(col);
        let denom = d - dot(row, &z2);
        if denom.abs() > 1e-300 {
            let xl = (rhsl - dot(row, &z1)) / denom;
            let x: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a - xl * b).collect();
            // residual check of the full bordered system
            let mx = m.matvec(&x);
            let mut rn = 0.0_f64;
            for i in 0..n {
                rn = rn.max((rhs[i] - mx[i] - xl * col[i]).abs());
            }
            rn = rn.max((rhsl - dot(row, &x) - d * xl).abs());
            let scale = inf_norm(rhs).max(rhsl.abs()).max(1.0);
            if rn <= 1e-8 * scale {
                return Ok(BorderedSolution { x, xl });
            }
        }
    }

    // dense fallback
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in i.saturating_sub(m.bw)..=i {
            let v = m.get(i, j);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a[(i, n)] = col[i];
        a[(n, i)] = row[i];
    }
    a[(n, n)] = d;
    let mut b = DVector::zeros(n + 1);
    for i in 0..n {
        b[i] = rhs[i];
    }
    b[n] = rhsl;
    let lu = a.lu();
    let sol = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("bordered system singular".into()))?;
    Ok(BorderedSolution {
        x: sol.as_slice()[..n].to_vec(),
        xl: sol[n],
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
