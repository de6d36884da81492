//! Uniform Cartesian grids on intervals and rectangles, grid functions and
//! the discrete norms and quadratures used throughout the solver.
//!
//! Only interior nodes carry unknowns. Boundary nodes hold the homogeneous
//! Dirichlet value 0 and get zero quadrature weight, so every spatial sum is
//! a Riemann sum over the interior with cell measure `h₁·h₂`.
//!
//! In two dimensions values are stored row-major: node `(i, j)` with `i`
//! along axis 0 and `j` along axis 1 lives at `i * n[1] + j`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A uniform grid of the interval `(0, L)` or the rectangle `(0, L₁) × (0, L₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    n: [usize; 2],
}

impl Grid {
    /// Interval `(0, length)` with `n` interior nodes.
    pub fn line(length: f64, n: usize) -> Result<Self> {
        Self::new(&[length], &[n])
    }

    /// Rectangle `(0, lengths[0]) × (0, lengths[1])`.
    pub fn rectangle(lengths: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::new(&lengths, &n)
    }

    pub fn new(lengths: &[f64], n: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if !(1..=2).contains(&dim) {
            return Err(invalid(
                "lengths",
                format!("expected 1 or 2 axes, got {dim}"),
            ));
        }
        if n.len() != dim {
            return Err(invalid(
                "n",
                format!("{} node counts given for {dim} axes", n.len()),
            ));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(invalid(
                "lengths",
                format!("axis length must be positive, got {l}"),
            ));
        }
        if n.contains(&0) {
            return Err(invalid("n", "every axis needs at least one interior node"));
        }
        let mut grid = Grid {
            dim,
            lengths: [1.0; 2],
            n: [1; 2],
        };
        grid.lengths[..dim].copy_from_slice(lengths);
        grid.n[..dim].copy_from_slice(n);
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    /// Interior node counts per axis.
    pub fn n(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    /// Spacing `L / (n + 1)` along `axis`.
    pub fn h(&self, axis: usize) -> f64 {
        assert!(
            axis < self.dim,
            "axis {axis} out of range for a {}D grid",
            self.dim
        );
        self.lengths[axis] / (self.n[axis] + 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim).map(|a| self.h(a)).collect()
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.n().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one interior node, `Π h`.
    pub fn cell_measure(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).product()
    }

    /// Measure of the interior node cloud, `len() · cell_measure()`.
    pub fn interior_measure(&self) -> f64 {
        self.len() as f64 * self.cell_measure()
    }

    /// Flat index stride of `axis`.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        match (self.dim, axis) {
            (2, 0) => self.n[1],
            _ => 1,
        }
    }

    /// Multi-index of a flat node index (second entry 0 in 1D).
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n[1], idx % self.n[1]]
        }
    }

    /// Physical coordinates of interior node `idx`; only the first `dim()`
    /// entries are meaningful.
    pub fn coordinates(&self, idx: usize) -> [f64; 2] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = (m[a] + 1) as f64 * self.h(a);
        }
        x
    }

    /// The grid with spacing halved along every axis; its nodes contain
    /// this grid's nodes at even multi-indices.
    pub fn refined(&self) -> Grid {
        let n: Vec<usize> = self.n().iter().map(|&n| 2 * (n + 1) - 1).collect();
        Grid::new(self.lengths(), &n).expect("refinement of a valid grid is valid")
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            lengths: self.lengths().to_vec(),
            n: self.n().to_vec(),
            h: self.spacings(),
        }
    }
}

/// Serializable description of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub n: Vec<usize>,
    #[serde(default, skip_deserializing)]
    pub h: Vec<f64>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Grid> {
        if spec.dim != spec.lengths.len() {
            return Err(invalid("dim", "does not match the number of lengths"));
        }
        Grid::new(&spec.lengths, &spec.n)
    }
}

/// Real values at the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} interior nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(
                "values",
                format!("non-finite entry {} at node {i}", values[i]),
            ));
        }
        Ok(Field { grid, values })
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// already-validated fields.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Field::from_parts(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Field::new(grid, vec![c; grid.len()])
    }

    /// Samples `f` at the interior node coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coordinates(i))).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Field::from_parts(self.grid, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, -1.0)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(Field::from_parts(self.grid, values))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Injection onto a coarser grid whose nodes sit at the even
    /// multi-indices of this grid (see [`Grid::refined`]).
    pub fn restrict_to(&self, coarse: &Grid) -> Result<Field> {
        if coarse.refined() != self.grid {
            return Err(Error::GridMismatch(
                "restriction target is not the next coarser grid".into(),
            ));
        }
        let values = (0..coarse.len())
            .map(|c| {
                let [i, j] = coarse.multi_index(c);
                let fine = if coarse.dim() == 1 {
                    2 * i + 1
                } else {
                    (2 * i + 1) * self.grid.n()[1] + (2 * j + 1)
                };
                self.values[fine]
            })
            .collect();
        Ok(Field::from_parts(*coarse, values))
    }
}

pub(crate) fn same_grid(f: &Field, g: &Field) -> Result<()> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            f.grid.n(),
            g.grid.n()
        )));
    }
    Ok(())
}

/// Discrete `L^p` norm `(Π h · Σ|f_i|^p)^{1/p}`; pass `f64::INFINITY` for
/// the max norm.
pub fn norm_lp(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", format!("norm exponent must be ≥ 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let w = f.grid.cell_measure();
    if p == 1.0 {
        return Ok(w * f.values.iter().map(|v| v.abs()).sum::<f64>());
    }
    if p == 2.0 {
        return Ok((w * f.values.iter().map(|v| v * v).sum::<f64>()).sqrt());
    }
    // scale by the max to keep |f|^p in range for large p
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = f.values.iter().map(|v| (v.abs() / m).powf(p)).sum();
    Ok(m * (w * s).powf(1.0 / p))
}

/// Discrete `L²` norm; shorthand for `norm_lp(f, 2.0)`.
pub fn norm_l2(f: &Field) -> f64 {
    norm_lp(f, 2.0).expect("p = 2 is valid")
}

/// `(Π h) Σ f_i g_i`.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    same_grid(f, g)?;
    let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(f.grid.cell_measure() * s)
}

/// `‖∇f‖₂²` as a sum over grid edges, including the edges that connect
/// interior nodes to the (zero) boundary. Equals `⟨f, L f⟩` for the
/// Dirichlet stencil by summation by parts.
pub fn h1_seminorm_sq(f: &Field) -> f64 {
    let grid = &f.grid;
    let v = &f.values;
    let mut total = 0.0;
    for axis in 0..grid.dim() {
        let h = grid.h(axis);
        let stride = grid.stride(axis);
        let n_axis = grid.n()[axis];
        let mut sum = 0.0;
        for idx in 0..v.len() {
            let pos = grid.multi_index(idx)[axis];
            let prev = if pos == 0 { 0.0 } else { v[idx - stride] };
            let d = v[idx] - prev;
            sum += d * d;
            if pos + 1 == n_axis {
                // closing edge to the far boundary
                sum += v[idx] * v[idx];
            }
        }
        total += sum / (h * h);
    }
    total * grid.cell_measure()
}

/// Pointwise trapezoidal rule over `(t_k, u_k)` samples starting at `t = 0`.
pub fn trapezoid_time_integral(samples: &[(f64, Field)]) -> Result<Field> {
    trapezoid_refs(samples.iter().map(|(t, f)| (*t, f)))
}

pub(crate) fn trapezoid_refs<'a>(
    samples: impl ExactSizeIterator<Item = (f64, &'a Field)>,
) -> Result<Field> {
    if samples.len() < 2 {
        return Err(invalid(
            "samples",
            format!("need at least 2 time samples, got {}", samples.len()),
        ));
    }
    let mut samples = samples.peekable();
    let (t0, first) = *samples.peek().expect("non-empty");
    if t0 != 0.0 {
        return Err(invalid(
            "samples",
            format!("first time must be 0, got {t0}"),
        ));
    }
    let grid = *first.grid();
    let mut acc = vec![0.0; grid.len()];
    let mut prev: Option<(f64, &Field)> = None;
    for (t, f) in samples {
        if f.grid != grid {
            return Err(Error::GridMismatch(
                "time samples live on different grids".into(),
            ));
        }
        if let Some((tp, fp)) = prev {
            if !(t > tp) {
                return Err(invalid(
                    "samples",
                    format!("times must be strictly increasing ({tp} then {t})"),
                ));
            }
            let half = 0.5 * (t - tp);
            for ((a, x), y) in acc.iter_mut().zip(&fp.values).zip(&f.values) {
                *a += half * (x + y);
            }
        }
        prev = Some((t, f));
    }
    Ok(Field::from_parts(grid, acc))
}
