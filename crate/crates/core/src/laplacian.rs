//! The discrete Dirichlet Laplacian `L ≈ −Δ_D` (3-point stencil in 1D,
//! 5-point in 2D) and solvers for the shifted systems
//! `(I + τ(L + diag w)) x = b` that make up one implicit time step.

use crate::error::{invalid, Error, Result};
use crate::mesh::{same_grid, Field, Grid};

/// Relative residual target of every shifted solve.
pub const SOLVE_RTOL: f64 = 1e-10;

/// CG iteration cap, as a multiple of the number of unknowns.
pub const CG_MAX_ITER_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletLaplacian {
    grid: Grid,
    diag: f64,
    off: [f64; 2],
}

impl DirichletLaplacian {
    pub fn assemble(grid: Grid) -> Self {
        let mut off = [0.0; 2];
        let mut diag = 0.0;
        for (axis, o) in off.iter_mut().enumerate().take(grid.dim()) {
            let h = grid.h(axis);
            diag += 2.0 / (h * h);
            *o = -1.0 / (h * h);
        }
        DirichletLaplacian { grid, diag, off }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Diagonal entry `Σ 2/h_a²`, shared by every row.
    pub fn diagonal(&self) -> f64 {
        self.diag
    }

    /// Coupling `−1/h_a²` to a neighbour along `axis`.
    pub fn off_diagonal(&self, axis: usize) -> f64 {
        assert!(axis < self.grid.dim());
        self.off[axis]
    }

    /// Nonzero entries `(column, value)` of row `idx`, diagonal first.
    pub fn row(&self, idx: usize) -> Vec<(usize, f64)> {
        let mut entries = vec![(idx, self.diag)];
        let m = self.grid.multi_index(idx);
        for axis in 0..self.grid.dim() {
            let stride = self.grid.stride(axis);
            if m[axis] > 0 {
                entries.push((idx - stride, self.off[axis]));
            }
            if m[axis] + 1 < self.grid.n()[axis] {
                entries.push((idx + stride, self.off[axis]));
            }
        }
        entries
    }

    /// Closed-form smallest eigenvalue `Σ (4/h²) sin²(πh/(2L))` of the stencil.
    pub fn smallest_eigenvalue(&self) -> f64 {
        (0..self.grid.dim())
            .map(|a| {
                let h = self.grid.h(a);
                let s = (std::f64::consts::PI * h / (2.0 * self.grid.lengths()[a])).sin();
                4.0 / (h * h) * s * s
            })
            .sum()
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.check_grid(f)?;
        let mut out = vec![0.0; f.len()];
        self.apply_into(f.values(), &mut out);
        Ok(Field::from_parts(self.grid, out))
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let grid = &self.grid;
        for (idx, o) in out.iter_mut().enumerate() {
            let m = grid.multi_index(idx);
            let mut acc = self.diag * x[idx];
            for axis in 0..grid.dim() {
                let stride = grid.stride(axis);
                if m[axis] > 0 {
                    acc += self.off[axis] * x[idx - stride];
                }
                if m[axis] + 1 < grid.n()[axis] {
                    acc += self.off[axis] * x[idx + stride];
                }
            }
            *o = acc;
        }
    }

    /// `x + σ (L + diag w) x`; with σ = −Δt/2 this is the explicit half of a
    /// Crank–Nicolson step.
    pub fn apply_shifted(&self, w: &Field, sigma: f64, x: &Field) -> Result<Field> {
        self.check_grid(w)?;
        same_grid(w, x)?;
        let mut lx = vec![0.0; x.len()];
        self.apply_into(x.values(), &mut lx);
        let values = lx
            .iter()
            .zip(x.values())
            .zip(w.values())
            .map(|((l, xi), wi)| xi + sigma * (l + wi * xi))
            .collect();
        Ok(Field::from_parts(self.grid, values))
    }

    /// Solves `(I + τ(L + diag w)) x = b`.
    pub fn solve_shifted(&self, w: &Field, tau: f64, b: &Field) -> Result<Field> {
        ShiftedSystem::new(self, w, tau)?.solve(b)
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch(
                "field does not live on the operator's grid".into(),
            ));
        }
        Ok(())
    }
}

/// A shifted operator `I + τ(L + diag w)` prepared for repeated solves.
///
/// In 1D the tridiagonal factorization is computed once; in 2D each solve
/// runs unpreconditioned CG.
#[derive(Debug, Clone)]
pub struct ShiftedSystem<'a> {
    laplacian: &'a DirichletLaplacian,
    w: Vec<f64>,
    tau: f64,
    factor: Option<TridiagonalFactor>,
}

impl<'a> ShiftedSystem<'a> {
    pub fn new(laplacian: &'a DirichletLaplacian, w: &Field, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(
                "tau",
                format!("time step must be positive, got {tau}"),
            ));
        }
        laplacian.check_grid(w)?;
        let factor = (laplacian.grid.dim() == 1).then(|| {
            let off = tau * laplacian.off[0];
            let diag: Vec<f64> = w
                .values()
                .iter()
                .map(|wi| 1.0 + tau * (laplacian.diag + wi))
                .collect();
            TridiagonalFactor::new(off, &diag)
        });
        Ok(ShiftedSystem {
            laplacian,
            w: w.values().to_vec(),
            tau,
            factor,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn solve(&self, b: &Field) -> Result<Field> {
        self.laplacian.check_grid(b)?;
        let x = match &self.factor {
            Some(f) => f.solve(b.values()),
            None => self.conjugate_gradient(b.values())?,
        };
        Ok(Field::from_parts(self.laplacian.grid, x))
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.laplacian.apply_into(x, out);
        for ((o, xi), wi) in out.iter_mut().zip(x).zip(&self.w) {
            *o = xi + self.tau * (*o + wi * xi);
        }
    }

    fn conjugate_gradient(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let b_norm = dot(b, b).sqrt();
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let target = SOLVE_RTOL * b_norm;
        let max_iter = CG_MAX_ITER_FACTOR * n;

        // the previous state is a good first guess for a time step
        let mut x = b.to_vec();
        let mut ap = vec![0.0; n];
        self.apply(&x, &mut ap);
        let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        for it in 0..=max_iter {
            if rr.sqrt() <= target {
                return Ok(x);
            }
            if it == max_iter {
                break;
            }
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_next = dot(&r, &r);
            let beta = rr_next / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_next;
        }
        Err(Error::SolverFailure {
            iterations: max_iter,
            residual: rr.sqrt() / b_norm,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LU factors of a symmetric tridiagonal matrix with constant off-diagonal.
#[derive(Debug, Clone)]
struct TridiagonalFactor {
    off: f64,
    // modified super-diagonal c'_i and reciprocal pivots 1/m_i
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalFactor {
    fn new(off: f64, diag: &[f64]) -> Self {
        let n = diag.len();
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_upper = 0.0;
        for i in 0..n {
            let m = diag[i] - off * prev_upper;
            inv_pivot[i] = 1.0 / m;
            upper[i] = off / m;
            prev_upper = upper[i];
        }
        TridiagonalFactor {
            off,
            upper,
            inv_pivot,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            x[i] = (rhs[i] - self.off * prev) * self.inv_pivot[i];
            prev = x[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
        x
    }
}
