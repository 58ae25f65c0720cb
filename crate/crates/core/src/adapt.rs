//! Adaptive quad-tree integration with per-rectangle Levin estimates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::tensor_grid;
use crate::driver::{drive, DriverConfig, RectRule};
use crate::error::{invalid, Error, Result};
use crate::levin2d::{delaminated_estimate, nondelaminated_estimate, Direction, Integrand2D, LevinParams, RectEstimate};
use crate::linsolve::SolveConfig;
use crate::rect::Rectangle;

/// Cap on the relative truncation threshold when `||f||_inf` is tiny.
const MAX_EPS_TRUNC: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    /// Chebyshev points per axis on each rectangle.
    pub k: usize,
    /// Subdivision tolerance.
    pub eps_sub: f64,
    /// Scales the truncation threshold `beta0 * eps_sub / ||f||_inf`.
    pub beta0: f64,
    /// Safety factor for the boundary-integral tolerance.
    pub beta: f64,
    /// Collocation order of the univariate boundary solver.
    pub k1d: usize,
    pub max_depth: usize,
    pub max_depth_1d: usize,
    pub solver: SolveConfig,
    pub use_nondelaminating: bool,
    /// Walk the tree with rayon when the crate is built with `parallel`.
    pub parallel: bool,
    /// Hand quadrant estimates down instead of recomputing them.
    pub reuse_child_estimates: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            k: 7,
            eps_sub: 1e-12,
            beta0: 0.5,
            beta: 0.1,
            k1d: 12,
            max_depth: 40,
            max_depth_1d: 60,
            solver: SolveConfig::default(),
            use_nondelaminating: false,
            parallel: true,
            reuse_child_estimates: true,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return invalid(format!("beta0 must be positive, got {}", self.beta0));
        }
        self.levin_params(MAX_EPS_TRUNC).validate()
    }

    fn levin_params(&self, eps_trunc_rel: f64) -> LevinParams {
        LevinParams {
            k: self.k,
            eps_trunc_rel,
            beta: self.beta,
            eps_sub: self.eps_sub,
            k1d: self.k1d,
            max_depth_1d: self.max_depth_1d,
            solver: self.solver,
        }
    }
}

/// One accepted rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshRecord {
    pub rect: Rectangle,
    pub depth: usize,
    pub direction: Direction,
    pub grad_ratio: f64,
    pub low_freq: bool,
    pub value: Complex64,
    /// False when accepted at `max_depth` without meeting the tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub value: Complex64,
    /// Accepted rectangles in acceptance order.
    pub mesh: Vec<MeshRecord>,
    /// Rectangle estimates computed, including discarded ones.
    pub rect_evals: usize,
    pub fevals: usize,
    /// Accepted boundary sub-intervals over all estimates.
    pub subints: usize,
    pub depth_exceeded: bool,
    pub boundary_depth_exceeded: bool,
    /// Truncation threshold used for every collocation solve.
    pub eps_trunc: f64,
}

impl AdaptiveResult {
    pub fn rect_count(&self) -> usize {
        self.mesh.len()
    }

    /// Either the quad-tree or a boundary integral stopped at its depth limit.
    pub fn partial(&self) -> bool {
        self.depth_exceeded || self.boundary_depth_exceeded
    }
}

/// Flat mesh row for plotting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshRow {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub depth: usize,
    pub direction: Direction,
    pub grad_ratio: f64,
    pub low_freq: bool,
}

pub fn mesh_dump(result: &AdaptiveResult) -> Vec<MeshRow> {
    result
        .mesh
        .iter()
        .map(|m| MeshRow {
            x0: m.rect.a,
            x1: m.rect.b,
            y0: m.rect.c,
            y1: m.rect.d,
            depth: m.depth,
            direction: m.direction,
            grad_ratio: m.grad_ratio,
            low_freq: m.low_freq,
        })
        .collect()
}

struct LevinRule<'a, I: ?Sized> {
    integrand: &'a I,
    params: LevinParams,
    nondelaminating: bool,
}

impl<I: Integrand2D + ?Sized> RectRule for LevinRule<'_, I> {
    type Estimate = RectEstimate;

    fn estimate(&self, rect: Rectangle) -> Result<RectEstimate> {
        if self.nondelaminating {
            nondelaminated_estimate(self.integrand, rect, &self.params)
        } else {
            delaminated_estimate(self.integrand, rect, &self.params)
        }
    }

    fn value(est: &RectEstimate) -> Complex64 {
        est.value
    }

    fn fevals(est: &RectEstimate) -> usize {
        est.fevals
    }

    fn subints(est: &RectEstimate) -> usize {
        est.boundary_subints
    }
}

/// Sup of `|f|` over the `k x k` Chebyshev grid on `rect`.
pub fn amplitude_sup<I: Integrand2D + ?Sized>(integrand: &I, rect: Rectangle, k: usize) -> Result<f64> {
    let grid = tensor_grid(k, rect)?;
    let mut sup = 0.0f64;
    for (x, y) in grid.points() {
        let v = integrand.amplitude(x, y);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Evaluation(format!("({x}, {y})")));
        }
        sup = sup.max(v.norm());
    }
    Ok(sup)
}

pub(crate) fn check_root<I: Integrand2D + ?Sized>(integrand: &I, root: &Rectangle) -> Result<()> {
    let dom = integrand.domain();
    if root.a < dom.a || root.b > dom.b || root.c < dom.c || root.d > dom.d {
        return invalid(format!("{root:?} is not contained in the integrand domain {dom:?}"));
    }
    Ok(())
}

/// Integrates `f exp(i g)` over `root` by adaptive subdivision.
pub fn adaptive_integrate<I: Integrand2D + ?Sized>(integrand: &I, root: Rectangle, cfg: &AdaptiveConfig) -> Result<AdaptiveResult> {
    cfg.validate()?;
    check_root(integrand, &root)?;

    let f_sup = amplitude_sup(integrand, root, cfg.k)?;
    if f_sup == 0.0 {
        let mesh = vec![MeshRecord {
            rect: root,
            depth: 0,
            direction: Direction::X,
            grad_ratio: f64::NAN,
            low_freq: true,
            value: Complex64::new(0.0, 0.0),
            converged: true,
        }];
        return Ok(AdaptiveResult {
            value: Complex64::new(0.0, 0.0),
            mesh,
            rect_evals: 0,
            fevals: cfg.k * cfg.k,
            subints: 0,
            depth_exceeded: false,
            boundary_depth_exceeded: false,
            eps_trunc: f64::NAN,
        });
    }

    let eps_trunc = (cfg.beta0 * cfg.eps_sub / f_sup).min(MAX_EPS_TRUNC);
    let rule = LevinRule {
        integrand,
        params: cfg.levin_params(eps_trunc),
        nondelaminating: cfg.use_nondelaminating,
    };
    rule.params.validate()?;
    let dcfg = DriverConfig {
        tol: cfg.eps_sub,
        max_depth: cfg.max_depth,
        parallel: cfg.parallel,
        reuse_children: cfg.reuse_child_estimates,
    };
    let out = drive(&rule, root, &dcfg)?;

    let boundary_depth_exceeded = out.accepted.iter().any(|a| a.estimate.boundary_depth_exceeded);
    let mesh = out
        .accepted
        .iter()
        .map(|a| MeshRecord {
            rect: a.rect,
            depth: a.depth,
            direction: a.estimate.direction,
            grad_ratio: a.estimate.grad_ratio,
            low_freq: a.estimate.low_freq(),
            value: a.estimate.value,
            converged: a.converged,
        })
        .collect();
    Ok(AdaptiveResult {
        value: out.value,
        mesh,
        rect_evals: out.rect_evals,
        fevals: out.fevals + cfg.k * cfg.k,
        subints: out.subints,
        depth_exceeded: out.depth_exceeded,
        boundary_depth_exceeded,
        eps_trunc,
    })
}
