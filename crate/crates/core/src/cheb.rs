//! Chebyshev grids and the spectral matrices built on them.
//!
//! Nodes are the extrema of `T_{k-1}` listed in ascending order,
//! `t_j = cos((k - j) pi / (k - 1))` for `j = 1..k`. Tensor grids are stored
//! as flat vectors with the x-index running fastest, so entry `i + k * j`
//! (zero-based) holds the point `(t_i, t_j)`.
//!
//! Every matrix here acts in reference coordinates on `[-1, 1]`; callers apply
//! the chain-rule factor `2 / (b - a)` when working on a physical interval.
//! Grids and differentiation matrices for small `k` are cached process-wide.

use std::f64::consts::PI;
use std::ops::{Add, Mul};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::rect::{map_to_interval, Rectangle};

/// Largest order served from the process-wide cache.
const CACHE_LIMIT: usize = 64;

/// The `k`-point Chebyshev grid on `[-1, 1]`, with its barycentric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid1D {
    k: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebGrid1D {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Barycentric weights `(-1)^j`, halved at both endpoints.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Builds the `k`-point Chebyshev grid.
pub fn cheb_nodes(k: usize) -> Result<ChebGrid1D> {
    if k < 2 {
        return invalid(format!("Chebyshev grid needs k >= 2, got {k}"));
    }
    let n = (k - 1) as f64;
    // sin form of -cos(m pi / n): exact endpoints, exact zero and exact symmetry
    let nodes = (0..k).map(|m| (PI * (2.0 * m as f64 - n) / (2.0 * n)).sin()).collect();
    let weights = (0..k)
        .map(|m| {
            let s = if m % 2 == 0 { 1.0 } else { -1.0 };
            if m == 0 || m == k - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    Ok(ChebGrid1D { k, nodes, weights })
}

/// Cached variant of [`cheb_nodes`].
pub fn cheb_grid(k: usize) -> Result<Arc<ChebGrid1D>> {
    static CACHE: [OnceLock<Arc<ChebGrid1D>>; CACHE_LIMIT] = [const { OnceLock::new() }; CACHE_LIMIT];
    if (2..CACHE_LIMIT).contains(&k) {
        return Ok(CACHE[k].get_or_init(|| Arc::new(cheb_nodes(k).unwrap())).clone());
    }
    cheb_nodes(k).map(Arc::new)
}

/// A `k x k` Chebyshev grid mapped onto a physical rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    k: usize,
    rect: Rectangle,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TensorGrid {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rect(&self) -> Rectangle {
        self.rect
    }

    /// Physical x-coordinates of the grid columns.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Physical y-coordinates of the grid rows.
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.k * self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The point with flat index `idx = i + k * j`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.xs[idx % self.k], self.ys[idx / self.k])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ys.iter().flat_map(move |&y| self.xs.iter().map(move |&x| (x, y)))
    }
}

pub fn tensor_grid(k: usize, rect: Rectangle) -> Result<TensorGrid> {
    if !(rect.a < rect.b && rect.c < rect.d) {
        return invalid(format!("degenerate rectangle {rect:?}"));
    }
    let grid = cheb_grid(k)?;
    let xs = grid.nodes().iter().map(|&t| map_to_interval(t, rect.a, rect.b)).collect();
    let ys = grid.nodes().iter().map(|&t| map_to_interval(t, rect.c, rect.d)).collect();
    Ok(TensorGrid { k, rect, xs, ys })
}

/// Samples of a complex field on a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub grid: TensorGrid,
    pub values: Vec<Complex64>,
}

impl NodalField {
    pub fn new(grid: TensorGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("nodal field has {} values for a grid of {}", values.len(), grid.len()));
        }
        Ok(NodalField { grid, values })
    }

    pub fn sample(grid: TensorGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let values = grid.points().map(|(x, y)| f(x, y)).collect();
        NodalField { grid, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Dense row-major real matrix of the spectral operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn apply<T>(&self, v: &[T]) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
    {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(T::default(), |acc, (&m, &x)| acc + x * m))
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// The `k x k` Chebyshev differentiation matrix on `[-1, 1]`.
pub type DiffMatrix = DenseMatrix;

/// The `k^2 x l^2` tensor interpolation matrix from the `l`-grid to the `k`-grid.
pub type InterpMatrix = DenseMatrix;

pub fn diff_matrix(k: usize) -> Result<DiffMatrix> {
    let grid = cheb_nodes(k)?;
    let x = grid.nodes();
    let w = grid.weights();
    let mut entries = vec![0.0; k * k];
    for i in 0..k {
        let mut diag = 0.0;
        for j in 0..k {
            if i != j {
                let v = (w[j] / w[i]) / (x[i] - x[j]);
                entries[i * k + j] = v;
                diag -= v;
            }
        }
        entries[i * k + i] = diag;
    }
    Ok(DenseMatrix { rows: k, cols: k, entries })
}

/// Cached variant of [`diff_matrix`].
pub fn diff_matrix_cached(k: usize) -> Result<Arc<DiffMatrix>> {
    static CACHE: [OnceLock<Arc<DiffMatrix>>; CACHE_LIMIT] = [const { OnceLock::new() }; CACHE_LIMIT];
    if (2..CACHE_LIMIT).contains(&k) {
        return Ok(CACHE[k].get_or_init(|| Arc::new(diff_matrix(k).unwrap())).clone());
    }
    diff_matrix(k).map(Arc::new)
}

/// Values at `t` of the Lagrange basis polynomials of the grid.
pub fn lagrange_basis(grid: &ChebGrid1D, t: f64) -> Vec<f64> {
    let x = grid.nodes();
    let w = grid.weights();
    if let Some(hit) = x.iter().position(|&xj| xj == t) {
        let mut out = vec![0.0; grid.k];
        out[hit] = 1.0;
        return out;
    }
    let terms: Vec<f64> = x.iter().zip(w).map(|(&xj, &wj)| wj / (t - xj)).collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / denom).collect()
}

/// 1D interpolation matrix from the `l`-point grid to the `k`-point grid.
fn interp_matrix_1d(k: usize, l: usize) -> Result<DenseMatrix> {
    let src = cheb_nodes(l)?;
    let dst = cheb_nodes(k)?;
    let mut entries = Vec::with_capacity(k * l);
    for &t in dst.nodes() {
        entries.extend(lagrange_basis(&src, t));
    }
    Ok(DenseMatrix { rows: k, cols: l, entries })
}

pub fn interp_matrix(k: usize, l: usize) -> Result<InterpMatrix> {
    if l < 2 || k < l {
        return invalid(format!("interpolation matrix needs k >= l >= 2, got k={k}, l={l}"));
    }
    let one = interp_matrix_1d(k, l)?;
    let (kk, ll) = (k * k, l * l);
    let mut entries = vec![0.0; kk * ll];
    for j in 0..k {
        for i in 0..k {
            let row = &mut entries[(i + k * j) * ll..(i + k * j + 1) * ll];
            for jj in 0..l {
                let wy = one.get(j, jj);
                if wy == 0.0 {
                    continue;
                }
                for ii in 0..l {
                    row[ii + l * jj] = one.get(i, ii) * wy;
                }
            }
        }
    }
    Ok(DenseMatrix {
        rows: kk,
        cols: ll,
        entries,
    })
}

/// Evaluates the interpolant through `values` (given at the grid nodes) at
/// the reference point `t` with the second barycentric formula.
pub fn bary_eval(grid: &ChebGrid1D, values: &[Complex64], t: f64) -> Complex64 {
    debug_assert_eq!(values.len(), grid.k);
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for ((&xj, &wj), &v) in grid.nodes.iter().zip(&grid.weights).zip(values) {
        let diff = t - xj;
        if diff == 0.0 {
            return v;
        }
        let c = wj / diff;
        num += v * c;
        den += c;
    }
    num / den
}

/// Chebyshev coefficients `c_0 .. c_{k-1}` of the interpolant through the
/// nodal values, via the type-I discrete cosine transform.
pub fn cheb_coeffs(values: &[Complex64]) -> Vec<Complex64> {
    let k = values.len();
    assert!(k >= 2, "need at least two nodal values");
    let n = k - 1;
    let nf = n as f64;
    // node m (ascending) is cos((n - m) pi / n)
    (0..k)
        .map(|deg| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &v) in values.iter().enumerate() {
                let j = n - m;
                let mut term = v * (PI * ((deg * j) % (2 * n)) as f64 / nf).cos();
                if j == 0 || j == n {
                    term *= 0.5;
                }
                acc += term;
            }
            let scale = if deg == 0 || deg == n { 1.0 / nf } else { 2.0 / nf };
            acc * scale
        })
        .collect()
}

/// Evaluates `sum c_n T_n(t)` by Clenshaw recurrence.
pub fn cheb_eval(coeffs: &[Complex64], t: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + b1 * (2.0 * t) - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or_default() + b1 * t - b2
}
