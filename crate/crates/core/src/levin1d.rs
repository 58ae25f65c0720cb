//! Univariate Levin method for `int f(t) exp(i g(t)) dt`.
//!
//! On each interval the ODE `p' + i g' p = f` is collocated on a Chebyshev
//! grid and solved in the truncated least-squares sense; the integral is then
//! `p(hi) exp(i g(hi)) - p(lo) exp(i g(lo))`. The adaptive driver bisects
//! until the whole-interval estimate agrees with the sum over its halves.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::{cheb_grid, diff_matrix_cached};
use crate::error::{invalid, Error, Result};
use crate::linsolve::{solve_levin_system, SolveConfig};
use crate::rect::map_to_interval;

/// An oscillatory integrand `f(t) exp(i g(t))` on a closed interval.
#[derive(Debug, Clone, Copy)]
pub struct Oscillator1D<F, G> {
    pub amplitude: F,
    pub phase: G,
    pub domain: (f64, f64),
}

impl<F, G> Oscillator1D<F, G>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> f64,
{
    pub fn new(amplitude: F, phase: G, domain: (f64, f64)) -> Self {
        Oscillator1D { amplitude, phase, domain }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Levin1DConfig {
    /// Collocation order.
    pub k1d: usize,
    /// Absolute acceptance tolerance for the whole-vs-halves test.
    pub eps_sub: f64,
    /// Truncation threshold relative to `||A||_2`.
    pub eps_trunc_rel: f64,
    pub max_depth: usize,
    pub solver: SolveConfig,
}

impl Default for Levin1DConfig {
    fn default() -> Self {
        Levin1DConfig {
            k1d: 12,
            eps_sub: 1e-13,
            eps_trunc_rel: 5e-13,
            max_depth: 60,
            solver: SolveConfig::default(),
        }
    }
}

impl Levin1DConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k1d < 3 {
            return invalid(format!("k1d must be at least 3, got {}", self.k1d));
        }
        if !(self.eps_sub > 0.0) || !(self.eps_trunc_rel > 0.0) {
            return invalid("1D tolerances must be positive");
        }
        Ok(())
    }

    fn solver(&self) -> SolveConfig {
        SolveConfig {
            threshold_rel: self.eps_trunc_rel,
            ..self.solver
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Levin1DResult {
    pub value: Complex64,
    /// Number of accepted intervals.
    pub sub_intervals: usize,
    /// Number of `(f, g)` point evaluations.
    pub fevals: usize,
    /// Some interval hit `max_depth` and was accepted unconverged.
    pub depth_exceeded: bool,
}

fn check_interval<F, G>(osc: &Oscillator1D<F, G>, lo: f64, hi: f64) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return invalid(format!("invalid interval [{lo}, {hi}]"));
    }
    let (dlo, dhi) = osc.domain;
    if lo < dlo || hi > dhi {
        return invalid(format!("interval [{lo}, {hi}] leaves the domain [{dlo}, {dhi}]"));
    }
    Ok(())
}

fn fixed_estimate<F, G>(osc: &Oscillator1D<F, G>, lo: f64, hi: f64, k: usize, solver: &SolveConfig) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> f64,
{
    let grid = cheb_grid(k)?;
    let d = diff_matrix_cached(k)?;
    let half = 0.5 * (hi - lo);
    let mut f = Vec::with_capacity(k);
    let mut g = Vec::with_capacity(k);
    for &t in grid.nodes() {
        let x = map_to_interval(t, lo, hi);
        let fv = (osc.amplitude)(x);
        let gv = (osc.phase)(x);
        if !(fv.re.is_finite() && fv.im.is_finite() && gv.is_finite()) {
            return Err(Error::Evaluation(format!("t = {x}")));
        }
        f.push(fv * half);
        g.push(gv);
    }
    if f.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let dg = d.apply(&g);
    let p = solve_levin_system(&d, &dg, &f, solver)?.solution;
    Ok(p[k - 1] * Complex64::from_polar(1.0, g[k - 1]) - p[0] * Complex64::from_polar(1.0, g[0]))
}

/// Fixed-order Levin estimate over `[lo, hi]`.
pub fn levin1d_fixed<F, G>(osc: &Oscillator1D<F, G>, interval: (f64, f64), k1d: usize, eps_trunc_rel: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> f64,
{
    let (lo, hi) = interval;
    check_interval(osc, lo, hi)?;
    if k1d < 3 {
        return invalid(format!("k1d must be at least 3, got {k1d}"));
    }
    let solver = SolveConfig {
        threshold_rel: eps_trunc_rel,
        ..SolveConfig::default()
    };
    solver.validate()?;
    fixed_estimate(osc, lo, hi, k1d, &solver)
}

/// Adaptive Levin quadrature by bisection with a LIFO worklist.
pub fn levin1d_adaptive<F, G>(osc: &Oscillator1D<F, G>, interval: (f64, f64), cfg: &Levin1DConfig) -> Result<Levin1DResult>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> f64,
{
    cfg.validate()?;
    let (lo, hi) = interval;
    check_interval(osc, lo, hi)?;
    let solver = cfg.solver();
    let k = cfg.k1d;

    let mut fevals = k;
    let root = fixed_estimate(osc, lo, hi, k, &solver)?;
    let mut stack = vec![(lo, hi, 0usize, root)];
    let mut value = Complex64::new(0.0, 0.0);
    let mut sub_intervals = 0;
    let mut depth_exceeded = false;

    while let Some((a, b, depth, whole)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let left = fixed_estimate(osc, a, mid, k, &solver)?;
        let right = fixed_estimate(osc, mid, b, k, &solver)?;
        fevals += 2 * k;
        let converged = (whole - (left + right)).norm() < cfg.eps_sub;
        let too_deep = depth >= cfg.max_depth || !(a < mid && mid < b);
        if converged || too_deep {
            depth_exceeded |= !converged;
            value += whole;
            sub_intervals += 1;
        } else {
            stack.push((a, mid, depth + 1, left));
            stack.push((mid, b, depth + 1, right));
        }
    }
    Ok(Levin1DResult {
        value,
        sub_intervals,
        fevals,
        depth_exceeded,
    })
}
