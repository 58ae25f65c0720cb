//! Fixed-order Levin estimates of `int int f exp(i g)` over one rectangle.
//!
//! The delaminating estimate solves the Levin PDE one grid line ("fiber") at
//! a time along the axis where `g` varies fastest, then reduces the volume
//! integral to two boundary integrals over the opposite edges which are
//! evaluated with the adaptive univariate method. The monolithic variant
//! enforces the PDE on the `(2k-1) x (2k-1)` grid with one rectangular system.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::{bary_eval, cheb_grid, diff_matrix_cached, interp_matrix, tensor_grid, DenseMatrix, DiffMatrix, TensorGrid};
use crate::error::{invalid, Error, Result};
use crate::levin1d::{levin1d_adaptive, Levin1DConfig, Levin1DResult, Oscillator1D};
use crate::linsolve::{solve_levin_system, solve_truncated, CMatrix, SolveConfig};
use crate::rect::{map_to_reference, Rectangle};

/// A bivariate oscillatory integrand `f(x, y) exp(i g(x, y))`.
pub trait Integrand2D: Sync {
    fn amplitude(&self, x: f64, y: f64) -> Complex64;
    fn phase(&self, x: f64, y: f64) -> f64;
    fn domain(&self) -> Rectangle;
}

/// [`Integrand2D`] assembled from two closures.
#[derive(Debug, Clone, Copy)]
pub struct FnIntegrand<F, G> {
    pub amplitude: F,
    pub phase: G,
    pub domain: Rectangle,
}

impl<F, G> FnIntegrand<F, G>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    pub fn new(amplitude: F, phase: G, domain: Rectangle) -> Self {
        FnIntegrand { amplitude, phase, domain }
    }
}

impl<F, G> Integrand2D for FnIntegrand<F, G>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    fn amplitude(&self, x: f64, y: f64) -> Complex64 {
        (self.amplitude)(x, y)
    }

    fn phase(&self, x: f64, y: f64) -> f64 {
        (self.phase)(x, y)
    }

    fn domain(&self) -> Rectangle {
        self.domain
    }
}

/// Axis along which the fibers run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::X => "x",
            Direction::Y => "y",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Direction::X),
            "y" => Ok(Direction::Y),
            other => invalid(format!("unknown direction '{other}'")),
        }
    }
}

/// Parameters of a single-rectangle estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevinParams {
    /// Collocation order of the bivariate grid.
    pub k: usize,
    /// Truncation threshold relative to `||A||_2`, shared with the boundary solves.
    pub eps_trunc_rel: f64,
    /// Safety factor on the boundary subdivision tolerance.
    pub beta: f64,
    /// Subdivision tolerance of the surrounding 2D driver.
    pub eps_sub: f64,
    pub k1d: usize,
    pub max_depth_1d: usize,
    pub solver: SolveConfig,
}

impl Default for LevinParams {
    fn default() -> Self {
        LevinParams {
            k: 7,
            eps_trunc_rel: 5e-13,
            beta: 0.1,
            eps_sub: 1e-12,
            k1d: 12,
            max_depth_1d: 60,
            solver: SolveConfig::default(),
        }
    }
}

impl LevinParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return invalid(format!("k must be at least 3, got {}", self.k));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return invalid(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.eps_sub > 0.0) {
            return invalid("eps_sub must be positive");
        }
        self.solver().validate()?;
        self.boundary_config(1.0).validate()
    }

    fn solver(&self) -> SolveConfig {
        SolveConfig {
            threshold_rel: self.eps_trunc_rel,
            ..self.solver
        }
    }

    fn boundary_config(&self, amplification: f64) -> Levin1DConfig {
        Levin1DConfig {
            k1d: self.k1d,
            eps_sub: self.beta * amplification.max(1.0) * self.eps_sub,
            eps_trunc_rel: self.eps_trunc_rel,
            max_depth: self.max_depth_1d,
            solver: self.solver,
        }
    }
}

/// Per-rectangle estimate and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RectEstimate {
    pub value: Complex64,
    pub direction: Direction,
    /// Largest nodal magnitude of the Levin solution.
    pub p_sup: f64,
    /// Largest nodal magnitude of the amplitude.
    pub f_sup: f64,
    /// Nodal values of the Levin solution on the `k x k` grid (x fastest).
    pub p_hat: Vec<Complex64>,
    /// Kept rank of each fiber system (delaminating mode).
    pub fiber_ranks: Vec<usize>,
    /// Kept rank of the monolithic system (non-delaminating mode).
    pub system_rank: Option<usize>,
    /// Accepted boundary sub-intervals summed over both edges.
    pub boundary_subints: usize,
    pub boundary_depth_exceeded: bool,
    /// max / min of `|dg/dv|` over the grid along the fiber direction `v`.
    pub grad_ratio: f64,
    /// Largest `|dg/dx|`, `|dg/dy|` over the grid in reference coordinates.
    pub ref_grad_max: [f64; 2],
    pub fevals: usize,
}

impl RectEstimate {
    /// Both reference-coordinate partials stay below 1/4.
    pub fn low_freq(&self) -> bool {
        self.ref_grad_max[0] < 0.25 && self.ref_grad_max[1] < 0.25
    }

    fn zero(k: usize, fevals: usize) -> Self {
        RectEstimate {
            value: Complex64::new(0.0, 0.0),
            direction: Direction::X,
            p_sup: 0.0,
            f_sup: 0.0,
            p_hat: vec![Complex64::new(0.0, 0.0); k * k],
            fiber_ranks: Vec::new(),
            system_rank: None,
            boundary_subints: 0,
            boundary_depth_exceeded: false,
            grad_ratio: f64::NAN,
            ref_grad_max: [0.0, 0.0],
            fevals,
        }
    }
}

fn sample<I: Integrand2D + ?Sized>(integrand: &I, grid: &TensorGrid) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let mut f = Vec::with_capacity(grid.len());
    let mut g = Vec::with_capacity(grid.len());
    for (x, y) in grid.points() {
        let fv = integrand.amplitude(x, y);
        let gv = integrand.phase(x, y);
        if !(fv.re.is_finite() && fv.im.is_finite() && gv.is_finite()) {
            return Err(Error::Evaluation(format!("({x}, {y})")));
        }
        f.push(fv);
        g.push(gv);
    }
    Ok((f, g))
}

/// Reference-coordinate partial derivatives of tensor-grid samples.
fn reference_partials(d: &DiffMatrix, k: usize, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; k * k];
    let mut gy = vec![0.0; k * k];
    for j in 0..k {
        for i in 0..k {
            let row = d.row(i);
            gx[i + k * j] = (0..k).map(|m| row[m] * values[m + k * j]).sum();
            let row = d.row(j);
            gy[i + k * j] = (0..k).map(|m| row[m] * values[i + k * m]).sum();
        }
    }
    (gx, gy)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn pick_direction(gx_ref: &[f64], gy_ref: &[f64], rect: &Rectangle) -> Direction {
    let gx = max_abs(gx_ref) * 2.0 / rect.width();
    let gy = max_abs(gy_ref) * 2.0 / rect.height();
    if gy > gx {
        Direction::Y
    } else {
        Direction::X
    }
}

/// Picks the axis with the larger maximal partial derivative of the phase
/// over the grid. Ties go to `x`.
pub fn choose_direction(grid: &TensorGrid, g: &[f64]) -> Result<Direction> {
    let k = grid.k();
    if g.len() != k * k {
        return invalid(format!("expected {} phase samples, got {}", k * k, g.len()));
    }
    let d = diff_matrix_cached(k)?;
    let (gx, gy) = reference_partials(&d, k, g);
    Ok(pick_direction(&gx, &gy, &grid.rect()))
}

fn grad_ratio(gv: &[f64]) -> f64 {
    let max = max_abs(gv);
    let min = gv.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn check_rect<I: Integrand2D + ?Sized>(integrand: &I, rect: &Rectangle, params: &LevinParams) -> Result<()> {
    params.validate()?;
    if !(rect.a < rect.b && rect.c < rect.d) {
        return invalid(format!("degenerate rectangle {rect:?}"));
    }
    if !integrand.domain().contains(rect) {
        return invalid(format!("rectangle {rect:?} leaves the integrand domain"));
    }
    Ok(())
}

struct Boundary {
    value: Complex64,
    subints: usize,
    fevals: usize,
    depth_exceeded: bool,
}

/// Evaluates the two edge integrals of `p_hat exp(i g)` transverse to `direction`.
fn boundary_integrals<I: Integrand2D + ?Sized>(
    integrand: &I,
    rect: &Rectangle,
    k: usize,
    direction: Direction,
    p_hat: &[Complex64],
    cfg: &Levin1DConfig,
) -> Result<Boundary> {
    let grid = cheb_grid(k)?;
    let (near, far): (Vec<Complex64>, Vec<Complex64>) = (0..k)
        .map(|t| match direction {
            Direction::X => (p_hat[k * t], p_hat[k - 1 + k * t]),
            Direction::Y => (p_hat[t], p_hat[t + k * (k - 1)]),
        })
        .unzip();
    let (lo, hi, fixed_near, fixed_far) = match direction {
        Direction::X => (rect.c, rect.d, rect.a, rect.b),
        Direction::Y => (rect.a, rect.b, rect.c, rect.d),
    };

    let edge = |values: &[Complex64], fixed: f64| -> Result<Levin1DResult> {
        if values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            return Ok(Levin1DResult {
                value: Complex64::new(0.0, 0.0),
                sub_intervals: 0,
                fevals: 0,
                depth_exceeded: false,
            });
        }
        let amplitude = |s: f64| bary_eval(&grid, values, map_to_reference(s, lo, hi));
        let phase = |s: f64| match direction {
            Direction::X => integrand.phase(fixed, s),
            Direction::Y => integrand.phase(s, fixed),
        };
        levin1d_adaptive(&Oscillator1D::new(amplitude, phase, (lo, hi)), (lo, hi), cfg)
    };

    let n = edge(&near, fixed_near)?;
    let f = edge(&far, fixed_far)?;
    Ok(Boundary {
        value: f.value - n.value,
        subints: n.sub_intervals + f.sub_intervals,
        fevals: n.fevals + f.fevals,
        depth_exceeded: n.depth_exceeded || f.depth_exceeded,
    })
}

/// Delaminating Levin estimate over `rect`.
pub fn delaminated_estimate<I: Integrand2D + ?Sized>(integrand: &I, rect: Rectangle, params: &LevinParams) -> Result<RectEstimate> {
    check_rect(integrand, &rect, params)?;
    let k = params.k;
    let grid = tensor_grid(k, rect)?;
    let (f, g) = sample(integrand, &grid)?;
    let f_sup = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if f_sup == 0.0 {
        return Ok(RectEstimate::zero(k, grid.len()));
    }

    let d = diff_matrix_cached(k)?;
    let (gx, gy) = reference_partials(&d, k, &g);
    let direction = pick_direction(&gx, &gy, &rect);
    let solver = params.solver();

    let mut p_hat = vec![Complex64::new(0.0, 0.0); k * k];
    let mut fiber_ranks = Vec::with_capacity(k);
    let (half, stride, step, dg_all) = match direction {
        // fiber j holds the nodes i + k j, i = 0..k
        Direction::X => (0.5 * rect.width(), 1, k, &gx),
        Direction::Y => (0.5 * rect.height(), k, 1, &gy),
    };
    for fiber in 0..k {
        let idx = |i: usize| fiber * step + i * stride;
        let dg: Vec<f64> = (0..k).map(|i| dg_all[idx(i)]).collect();
        let rhs: Vec<Complex64> = (0..k).map(|i| f[idx(i)] * half).collect();
        let sol = solve_levin_system(&d, &dg, &rhs, &solver)?;
        for (i, p) in sol.solution.into_iter().enumerate() {
            p_hat[idx(i)] = p;
        }
        fiber_ranks.push(sol.rank);
    }

    let gv = match direction {
        Direction::X => &gx,
        Direction::Y => &gy,
    };
    let mut est = finish(integrand, rect, params, direction, p_hat, f_sup, grid.len())?;
    est.fiber_ranks = fiber_ranks;
    est.grad_ratio = grad_ratio(gv);
    est.ref_grad_max = [max_abs(&gx), max_abs(&gy)];
    Ok(est)
}

fn finish<I: Integrand2D + ?Sized>(
    integrand: &I,
    rect: Rectangle,
    params: &LevinParams,
    direction: Direction,
    p_hat: Vec<Complex64>,
    f_sup: f64,
    grid_evals: usize,
) -> Result<RectEstimate> {
    let p_sup = p_hat.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cfg = params.boundary_config(p_sup / f_sup);
    let boundary = boundary_integrals(integrand, &rect, params.k, direction, &p_hat, &cfg)?;
    Ok(RectEstimate {
        value: boundary.value,
        direction,
        p_sup,
        f_sup,
        p_hat,
        fiber_ranks: Vec::new(),
        system_rank: None,
        boundary_subints: boundary.subints,
        boundary_depth_exceeded: boundary.depth_exceeded,
        grad_ratio: f64::NAN,
        ref_grad_max: [0.0, 0.0],
        fevals: grid_evals + boundary.fevals,
    })
}

fn interp_cached(k: usize) -> Result<Arc<DenseMatrix>> {
    const LIMIT: usize = 32;
    static CACHE: [OnceLock<Arc<DenseMatrix>>; LIMIT] = [const { OnceLock::new() }; LIMIT];
    if k < LIMIT {
        if let Some(m) = CACHE[k].get() {
            return Ok(m.clone());
        }
        let m = Arc::new(interp_matrix(2 * k - 1, k)?);
        return Ok(CACHE[k].get_or_init(|| m).clone());
    }
    interp_matrix(2 * k - 1, k).map(Arc::new)
}

/// Levin estimate from one rectangular system collocated on the
/// `(2k-1) x (2k-1)` grid, with the solution represented on the `k x k` grid.
pub fn nondelaminated_estimate<I: Integrand2D + ?Sized>(integrand: &I, rect: Rectangle, params: &LevinParams) -> Result<RectEstimate> {
    check_rect(integrand, &rect, params)?;
    let k = params.k;
    let n = 2 * k - 1;
    let fine = tensor_grid(n, rect)?;
    let (f, g) = sample(integrand, &fine)?;
    let f_sup = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if f_sup == 0.0 {
        return Ok(RectEstimate::zero(k, fine.len()));
    }

    // the k-grid is the even-indexed subset of the (2k-1)-grid
    let g_coarse: Vec<f64> = (0..k * k).map(|idx| g[2 * (idx % k) + n * 2 * (idx / k)]).collect();
    let d = diff_matrix_cached(k)?;
    let (gx, gy) = reference_partials(&d, k, &g_coarse);
    let direction = pick_direction(&gx, &gy, &rect);

    let d_fine = diff_matrix_cached(n)?;
    let (fx, fy) = reference_partials(&d_fine, n, &g);
    let (g_fine, half) = match direction {
        Direction::X => (&fx, 0.5 * rect.width()),
        Direction::Y => (&fy, 0.5 * rect.height()),
    };

    let p = interp_cached(k)?;
    let (rows, cols) = (n * n, k * k);
    let a = CMatrix::from_fn(rows, cols, |r, col| {
        let (ci, cj) = (col % k, col / k);
        // (P * D_v)[r, col]
        let pd: f64 = match direction {
            Direction::X => (0..k).map(|i| p.get(r, i + k * cj) * d.get(i, ci)).sum(),
            Direction::Y => (0..k).map(|j| p.get(r, ci + k * j) * d.get(j, cj)).sum(),
        };
        Complex64::new(pd, g_fine[r] * p.get(r, col))
    });
    let rhs: Vec<Complex64> = f.iter().map(|v| v * half).collect();
    let sol = solve_truncated(&a, &rhs, &params.solver())?;

    let gv = match direction {
        Direction::X => &gx,
        Direction::Y => &gy,
    };
    let mut est = finish(integrand, rect, params, direction, sol.solution, f_sup, fine.len())?;
    est.system_rank = Some(sol.rank);
    est.grad_ratio = grad_ratio(gv);
    est.ref_grad_max = [max_abs(&gx), max_abs(&gy)];
    Ok(est)
}
