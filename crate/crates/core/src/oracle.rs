//! Adaptive tensor-product Gauss-Legendre quadrature used as a reference.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adapt::check_root;
use crate::driver::{drive, DriverConfig, RectRule};
use crate::error::{invalid, Error, Result};
use crate::levin2d::Integrand2D;
use crate::rect::{map_to_interval, Rectangle};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_rule(n: usize) -> Result<GaussRule> {
    if n < 1 {
        return invalid("Gauss rule needs at least one point");
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let nf = n as f64;
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(GaussRule { n, nodes, weights })
}

/// Tensor-product Gauss estimate of `int int f exp(i g)` over `rect`.
pub fn gauss_rect<I: Integrand2D + ?Sized>(integrand: &I, rect: Rectangle, rule: &GaussRule) -> Result<Complex64> {
    let xs: Vec<f64> = rule.nodes.iter().map(|&t| map_to_interval(t, rect.a, rect.b)).collect();
    let ys: Vec<f64> = rule.nodes.iter().map(|&t| map_to_interval(t, rect.c, rect.d)).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, &y) in ys.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (i, &x) in xs.iter().enumerate() {
            let f = integrand.amplitude(x, y);
            let g = integrand.phase(x, y);
            if !(f.re.is_finite() && f.im.is_finite() && g.is_finite()) {
                return Err(Error::Evaluation(format!("({x}, {y})")));
            }
            row += f * Complex64::from_polar(rule.weights[i], g);
        }
        sum += row * rule.weights[j];
    }
    Ok(sum * (0.25 * rect.area()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub tol: f64,
    /// Gauss points per axis.
    pub n: usize,
    pub max_depth: usize,
    pub parallel: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            tol: 1e-14,
            n: 10,
            max_depth: 40,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: Complex64,
    pub rect_count: usize,
    pub rect_evals: usize,
    pub fevals: usize,
    pub depth_exceeded: bool,
}

struct GaussTensor<'a, I: ?Sized> {
    integrand: &'a I,
    rule: GaussRule,
}

impl<I: Integrand2D + ?Sized> RectRule for GaussTensor<'_, I> {
    type Estimate = (Complex64, usize);

    fn estimate(&self, rect: Rectangle) -> Result<(Complex64, usize)> {
        Ok((gauss_rect(self.integrand, rect, &self.rule)?, self.rule.n * self.rule.n))
    }

    fn value(est: &(Complex64, usize)) -> Complex64 {
        est.0
    }

    fn fevals(est: &(Complex64, usize)) -> usize {
        est.1
    }
}

pub fn adaptive_gauss_with<I: Integrand2D + ?Sized>(integrand: &I, root: Rectangle, cfg: &OracleConfig) -> Result<OracleResult> {
    if !(cfg.tol > 0.0) {
        return invalid(format!("oracle tolerance must be positive, got {}", cfg.tol));
    }
    check_root(integrand, &root)?;
    let rule = GaussTensor {
        integrand,
        rule: gauss_rule(cfg.n)?,
    };
    let dcfg = DriverConfig {
        tol: cfg.tol,
        max_depth: cfg.max_depth,
        parallel: cfg.parallel,
        reuse_children: true,
    };
    let out = drive(&rule, root, &dcfg)?;
    Ok(OracleResult {
        value: out.value,
        rect_count: out.accepted.len(),
        rect_evals: out.rect_evals,
        fevals: out.fevals,
        depth_exceeded: out.depth_exceeded,
    })
}

/// Adaptive 10 x 10 Gauss-Legendre quadrature to absolute tolerance `tol`.
pub fn adaptive_gauss<I: Integrand2D + ?Sized>(integrand: &I, root: Rectangle, tol: f64) -> Result<Complex64> {
    let cfg = OracleConfig {
        tol,
        ..OracleConfig::default()
    };
    Ok(adaptive_gauss_with(integrand, root, &cfg)?.value)
}
