//! Property checks shared by the proptest suites and the acceptance run.
//! Each check takes plain inputs (or a seed for matrix-valued ones) and
//! returns `Err` with a description on the first violated bound.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashSet;

use delaminating_levin::adapt::{adaptive_integrate, AdaptiveConfig, AdaptiveResult};
use delaminating_levin::cheb::{bary_eval, cheb_nodes, diff_matrix, interp_matrix, lagrange_basis, tensor_grid};
use delaminating_levin::levin1d::{levin1d_adaptive, Levin1DConfig, Oscillator1D};
use delaminating_levin::levin2d::{choose_direction, delaminated_estimate, Direction, FnIntegrand, Integrand2D, LevinParams};
use delaminating_levin::linsolve::{levin_matrix, rrqr_solve, thin_svd, tsvd_solve, tsvd_solve_rel, two_norm, CMatrix};
use delaminating_levin::oracle::{gauss_rect, gauss_rule};
use delaminating_levin::{Complex64, Rectangle};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(m, &c)| m as f64 * c).collect()
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(r: &mut ChaCha8Rng) -> Complex64 {
    c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

// ---------------------------------------------------------------- cheb

/// The differentiation matrix reproduces derivatives of degree `< k`
/// polynomials given by monomial coefficients.
pub fn spectral_exactness(coeffs: &[f64]) -> Check {
    let k = coeffs.len();
    let grid = cheb_nodes(k).map_err(|e| e.to_string())?;
    let d = diff_matrix(k).map_err(|e| e.to_string())?;
    let vals: Vec<f64> = grid.nodes().iter().map(|&t| horner(coeffs, t)).collect();
    let dc = derivative(coeffs);
    let scale = dc.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    for (i, got) in d.apply(&vals).into_iter().enumerate() {
        let want = horner(&dc, grid.nodes()[i]);
        ensure!((got - want).abs() <= 1e-11 * scale, "k={k} node {i}: {got} vs {want}");
    }
    Ok(())
}

/// `sup |f| <= Lambda_k^2 max |f(nodes)|` for the tensor interpolant of
/// arbitrary nodal values, sampled on a uniform grid.
pub fn lebesgue_bound(k: usize, values: &[Complex64], samples: usize) -> Check {
    let grid = cheb_nodes(k).map_err(|e| e.to_string())?;
    let ts: Vec<f64> = (0..samples).map(|i| -1.0 + 2.0 * i as f64 / (samples - 1) as f64).collect();
    let basis: Vec<Vec<f64>> = ts.iter().map(|&t| lagrange_basis(&grid, t)).collect();
    let lambda = basis.iter().map(|l| l.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    ensure!(lambda >= 1.0, "Lebesgue constant below one: {lambda}");
    let fmax = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for ly in &basis {
        // contract along y first, then x
        let row: Vec<Complex64> = (0..k).map(|i| (0..k).map(|j| values[i + k * j] * ly[j]).sum()).collect();
        for lx in &basis {
            let f: Complex64 = (0..k).map(|i| row[i] * lx[i]).sum();
            ensure!(
                f.norm() <= lambda * lambda * fmax * (1.0 + 1e-12),
                "|f| = {} exceeds bound {}",
                f.norm(),
                lambda * lambda * fmax
            );
        }
    }
    Ok(())
}

/// Interpolating `l x l` values onto the `k x k` grid and evaluating back at
/// the `l`-grid reproduces the input.
pub fn interp_idempotence(k: usize, l: usize, values: &[Complex64]) -> Check {
    let p = interp_matrix(k, l).map_err(|e| e.to_string())?;
    let fine = p.apply(values);
    let gk = cheb_nodes(k).map_err(|e| e.to_string())?;
    let gl = cheb_nodes(l).map_err(|e| e.to_string())?;
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for (j, &ty) in gl.nodes().iter().enumerate() {
        for (i, &tx) in gl.nodes().iter().enumerate() {
            let rows: Vec<Complex64> = (0..k).map(|jj| bary_eval(&gk, &fine[k * jj..k * (jj + 1)], tx)).collect();
            let back = bary_eval(&gk, &rows, ty);
            let want = values[i + l * j];
            ensure!((back - want).norm() <= 1e-12 * scale, "k={k} l={l} ({i},{j}): {back} vs {want}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- linsolve

fn random_unitary(n: usize, r: &mut ChaCha8Rng) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| random_complex(r));
    m.qr().q()
}

/// Random `m x n` matrix with singular values spread over `[1e-16, 1]`,
/// some of them exactly zero when `rank < n`.
pub fn random_matrix(m: usize, n: usize, rank: usize, r: &mut ChaCha8Rng) -> CMatrix {
    let u = random_unitary(m, r);
    let v = random_unitary(n, r);
    let mut s = CMatrix::zeros(m, n);
    for i in 0..rank.min(n) {
        s[(i, i)] = c(10f64.powf(-16.0 * r.random::<f64>()), 0.0);
    }
    u * s * v.adjoint()
}

pub struct LsqCase {
    pub a: CMatrix,
    pub b: Vec<Complex64>,
    pub tau: f64,
}

pub fn lsq_case(seed: u64) -> LsqCase {
    let mut r = rng(seed);
    let n = r.random_range(1..=9);
    let m = r.random_range(n..=n + 4);
    let rank = r.random_range(0..=n);
    let a = random_matrix(m, n, rank, &mut r);
    let b: Vec<Complex64> = (0..m).map(|_| random_complex(&mut r)).collect();
    let sigma1 = two_norm(&a);
    let tau = if sigma1 > 0.0 {
        sigma1 * 10f64.powf(-2.0 * r.random::<f64>()) * 0.5
    } else {
        1e-8
    };
    LsqCase { a, b, tau }
}

/// `A x` is the orthogonal projection of `b` onto the kept left singular
/// vectors, and `||x|| <= ||b|| / tau`.
pub fn tsvd_projection_and_norm(case: &LsqCase) -> Check {
    let LsqCase { a, b, tau } = case;
    let s = tsvd_solve(a, b, *tau).map_err(|e| e.to_string())?;
    let svd = thin_svd(a).map_err(|e| e.to_string())?;
    let u = &svd.u;
    let bv = DVector::from_column_slice(b);
    let mut proj = DVector::<Complex64>::zeros(b.len());
    let mut kept = 0;
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma >= *tau && sigma > 0.0 {
            let ui = u.column(i);
            proj += ui * ui.dotc(&bv);
            kept += 1;
        }
    }
    ensure!(kept == s.rank, "rank {} vs {kept} kept singular values", s.rank);
    let ax = a * DVector::from_column_slice(&s.solution);
    let bn = norm2(b);
    ensure!((ax - proj).norm() <= 1e-12 * bn.max(1.0), "A x differs from the projection of b");
    if s.rank == 0 {
        ensure!(s.solution.iter().all(|z| *z == c(0.0, 0.0)), "rank 0 but nonzero solution");
    } else {
        ensure!(s.sigma_min_kept >= *tau, "kept sigma {} below threshold {tau}", s.sigma_min_kept);
        ensure!(norm2(&s.solution) <= bn / tau * (1.0 + 1e-12), "norm bound violated");
    }
    ensure!(
        (s.residual_norm - (a * DVector::from_column_slice(&s.solution) - &bv).norm()).abs() <= 1e-12 * bn.max(1.0),
        "residual mismatch"
    );
    Ok(())
}

/// Scaling `b` scales the solution: bitwise for powers of two, to rounding
/// for general complex factors, with the rank unchanged.
pub fn tsvd_homogeneity(case: &LsqCase, alpha: Complex64, pow2: i32) -> Check {
    let LsqCase { a, b, tau } = case;
    let base = tsvd_solve(a, b, *tau).map_err(|e| e.to_string())?;

    let two = 2f64.powi(pow2);
    let scaled: Vec<Complex64> = b.iter().map(|z| z * two).collect();
    let s2 = tsvd_solve(a, &scaled, *tau).map_err(|e| e.to_string())?;
    ensure!(s2.rank == base.rank, "rank changed under scaling by 2^{pow2}");
    for (x, y) in base.solution.iter().zip(&s2.solution) {
        ensure!(x * two == *y, "scaling by 2^{pow2} not exact: {} vs {}", x * two, y);
    }

    let scaled: Vec<Complex64> = b.iter().map(|z| z * alpha).collect();
    let sa = tsvd_solve(a, &scaled, *tau).map_err(|e| e.to_string())?;
    ensure!(sa.rank == base.rank, "rank changed under complex scaling");
    let bound = if base.rank == 0 {
        0.0
    } else {
        1e-13 * alpha.norm() * norm2(b) / base.sigma_min_kept
    };
    for (x, y) in base.solution.iter().zip(&sa.solution) {
        ensure!((x * alpha - y).norm() <= bound, "complex scaling off by {}", (x * alpha - y).norm());
    }
    Ok(())
}

/// Random fiber system `(D + i diag(D g)) p = f` with smooth `g`, `f`.
pub struct FiberCase {
    pub g: Vec<f64>,
    pub f: Vec<Complex64>,
}

pub fn fiber_case(seed: u64, k: usize) -> FiberCase {
    let mut r = rng(seed);
    let grid = cheb_nodes(k).unwrap();
    let lambda = 10f64.powf(r.random_range(-2.0..3.0));
    let gc: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
    let fc: Vec<Complex64> = (0..4).map(|_| random_complex(&mut r)).collect();
    let g = grid.nodes().iter().map(|&t| lambda * horner(&gc, t)).collect();
    let f = grid
        .nodes()
        .iter()
        .map(|&t| fc.iter().rev().fold(c(0.0, 0.0), |acc, &z| acc * t + z))
        .collect();
    FiberCase { g, f }
}

/// The boundary contributions `p(1) e^{i g(1)} - p(-1) e^{i g(-1)}` of the SVD
/// and RRQR solutions agree to `10 eps0 ||b||`.
pub fn solver_agreement(case: &FiberCase, eps0: f64) -> Check {
    let k = case.g.len();
    let d = diff_matrix(k).map_err(|e| e.to_string())?;
    let a = levin_matrix(&d, &d.apply(&case.g));
    let svd = tsvd_solve_rel(&a, &case.f, eps0).map_err(|e| e.to_string())?;
    let qr = rrqr_solve(&a, &case.f, eps0 * two_norm(&a)).map_err(|e| e.to_string())?;
    let value = |p: &[Complex64]| p[k - 1] * Complex64::from_polar(1.0, case.g[k - 1]) - p[0] * Complex64::from_polar(1.0, case.g[0]);
    let diff = (value(&svd.solution) - value(&qr.solution)).norm();
    let bound = 10.0 * eps0 * norm2(&case.f);
    ensure!(
        diff <= bound,
        "svd/rrqr values differ by {diff:e} > {bound:e} (ranks {} / {})",
        svd.rank,
        qr.rank
    );
    Ok(())
}

// ---------------------------------------------------------------- levin1d

/// Without oscillation the method integrates polynomials of degree
/// `< k1d - 1` exactly.
pub fn levin1d_polynomial_exactness(coeffs: &[f64], lo: f64, hi: f64) -> Check {
    let cf = coeffs.to_vec();
    let osc = Oscillator1D::new(move |t| c(horner(&cf, t), 0.0), |_| 0.0, (lo, hi));
    let r = levin1d_adaptive(&osc, (lo, hi), &Levin1DConfig::default()).map_err(|e| e.to_string())?;
    let anti: Vec<f64> = std::iter::once(0.0)
        .chain(coeffs.iter().enumerate().map(|(m, &c)| c / (m + 1) as f64))
        .collect();
    let exact = horner(&anti, hi) - horner(&anti, lo);
    let scale: f64 = anti
        .iter()
        .enumerate()
        .map(|(m, a)| a.abs() * lo.abs().max(hi.abs()).powi(m as i32))
        .sum();
    ensure!(
        (r.value - exact).norm() <= 1e-12 * scale.max(exact.abs()),
        "got {} want {exact}",
        r.value
    );
    Ok(())
}

// ---------------------------------------------------------------- levin2d

/// `g = lambda (x^n + y^n)` on a first-quadrant rectangle with `b > d` is
/// delaminated along `x`.
pub fn direction_consistency(lambda: f64, n: i32, rect: Rectangle) -> Check {
    let grid = tensor_grid(7, rect).map_err(|e| e.to_string())?;
    let g: Vec<f64> = grid.points().map(|(x, y)| lambda * (x.powi(n) + y.powi(n))).collect();
    let dir = choose_direction(&grid, &g).map_err(|e| e.to_string())?;
    ensure!(dir == Direction::X, "{rect:?} n={n}: chose {dir:?}");
    Ok(())
}

pub struct SmoothCase {
    pub lambda: f64,
    pub gc: [f64; 5],
    pub fc: [Complex64; 3],
    pub rect: Rectangle,
}

pub fn smooth_case(seed: u64, max_lambda: f64) -> SmoothCase {
    let mut r = rng(seed);
    let a = r.random_range(-1.0..0.5);
    let b = a + r.random_range(0.1..1.0);
    let cc = r.random_range(-1.0..0.5);
    let d = cc + r.random_range(0.1..1.0);
    SmoothCase {
        lambda: r.random_range(0.5..max_lambda),
        gc: std::array::from_fn(|_| r.random_range(-1.0..1.0)),
        fc: std::array::from_fn(|_| random_complex(&mut r)),
        rect: Rectangle::new(a, b, cc, d).unwrap(),
    }
}

impl SmoothCase {
    pub fn amplitude(&self, scale: Complex64) -> impl Fn(f64, f64) -> Complex64 + Sync + Copy {
        let fc = self.fc;
        move |x: f64, y: f64| (fc[0] + fc[1] * x * y + fc[2] * (x - y).cos()) * scale
    }

    pub fn phase(&self) -> impl Fn(f64, f64) -> f64 + Sync + Copy {
        let (l, g) = (self.lambda, self.gc);
        move |x: f64, y: f64| l * (g[0] * x + g[1] * y + g[2] * x * x + g[3] * x * y + g[4] * y * y)
    }

    pub fn integrand(&self, scale: Complex64) -> impl Integrand2D + Copy {
        FnIntegrand::new(self.amplitude(scale), self.phase(), Rectangle::new(-2.0, 2.0, -2.0, 2.0).unwrap())
    }
}

/// A fiber matrix, its right side and the grid indices of its nodes.
type FiberSystem = (CMatrix, Vec<Complex64>, Vec<usize>);

/// Rebuilds the fiber systems behind `est`.
fn fiber_systems<I: Integrand2D>(
    f: &I,
    rect: Rectangle,
    est: &delaminating_levin::RectEstimate,
    k: usize,
) -> Result<Vec<FiberSystem>, String> {
    let grid = tensor_grid(k, rect).map_err(|e| e.to_string())?;
    let d = diff_matrix(k).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = grid.points().collect();
    let half = match est.direction {
        Direction::X => 0.5 * rect.width(),
        Direction::Y => 0.5 * rect.height(),
    };
    Ok((0..k)
        .map(|fiber| {
            let idx: Vec<usize> = match est.direction {
                Direction::X => (0..k).map(|i| i + k * fiber).collect(),
                Direction::Y => (0..k).map(|j| fiber + k * j).collect(),
            };
            let g: Vec<f64> = idx.iter().map(|&i| f.phase(pts[i].0, pts[i].1)).collect();
            let rhs: Vec<Complex64> = idx.iter().map(|&i| f.amplitude(pts[i].0, pts[i].1) * half).collect();
            (levin_matrix(&d, &d.apply(&g)), rhs, idx)
        })
        .collect())
}

/// Every fiber solve has residual at most `||rhs||` and norm at most
/// `||rhs|| / (eps0 ||A_j||)`.
pub fn fiber_residual_bounds(case: &SmoothCase) -> Check {
    let params = LevinParams::default();
    let f = case.integrand(c(1.0, 0.0));
    let est = delaminated_estimate(&f, case.rect, &params).map_err(|e| e.to_string())?;
    for (fiber, (a, rhs, idx)) in fiber_systems(&f, case.rect, &est, params.k)?.into_iter().enumerate() {
        let p: Vec<Complex64> = idx.iter().map(|&i| est.p_hat[i]).collect();
        let res = (&a * DVector::from_column_slice(&p) - DVector::from_column_slice(&rhs)).norm();
        let rn = norm2(&rhs);
        ensure!(est.fiber_ranks[fiber] <= params.k, "rank out of range");
        ensure!(res <= rn * (1.0 + 1e-10), "fiber {fiber}: residual {res} > {rn}");
        let tau = params.eps_trunc_rel * two_norm(&a);
        ensure!(norm2(&p) <= rn / tau * (1.0 + 1e-10), "fiber {fiber}: norm bound violated");
    }
    Ok(())
}

/// Scaling the amplitude by `2^pow2` scales the fiber solutions exactly and
/// the value to within the boundary-integration budget. A general complex
/// factor does the same up to the rounding of each fiber solve, which is
/// carried into the value through the boundary interpolant.
pub fn amplitude_homogeneity(case: &SmoothCase, alpha: Complex64, pow2: i32) -> Check {
    let params = LevinParams::default();
    let k = params.k;
    let f = case.integrand(c(1.0, 0.0));
    let base = delaminated_estimate(&f, case.rect, &params).map_err(|e| e.to_string())?;
    let tol1d = params.beta * (base.p_sup / base.f_sup).max(1.0) * params.eps_sub;
    // the univariate rule is absolute per sub-interval
    let budget = |scale: f64, other: &delaminating_levin::RectEstimate| {
        (scale * base.boundary_subints as f64 + other.boundary_subints as f64) * tol1d
    };

    let two = 2f64.powi(pow2);
    let s2 = delaminated_estimate(&case.integrand(c(two, 0.0)), case.rect, &params).map_err(|e| e.to_string())?;
    for (x, y) in base.p_hat.iter().zip(&s2.p_hat) {
        ensure!(x * two == *y, "fiber solutions not scaled exactly by 2^{pow2}");
    }
    let diff = (s2.value - base.value * two).norm();
    ensure!(diff <= budget(two, &s2), "value off by {diff:e} under scaling by 2^{pow2}");

    let sa = delaminated_estimate(&case.integrand(alpha), case.rect, &params).map_err(|e| e.to_string())?;
    ensure!(sa.fiber_ranks == base.fiber_ranks, "fiber ranks changed under complex scaling");
    let mut nodal = 0.0f64;
    for (a, rhs, idx) in fiber_systems(&f, case.rect, &base, k)? {
        let s = tsvd_solve_rel(&a, &rhs, params.eps_trunc_rel).map_err(|e| e.to_string())?;
        let bound = if s.rank == 0 {
            0.0
        } else {
            1e-13 * alpha.norm() * norm2(&rhs) / s.sigma_min_kept
        };
        nodal = nodal.max(bound);
        for &i in &idx {
            let off = (base.p_hat[i] * alpha - sa.p_hat[i]).norm();
            ensure!(
                off <= bound,
                "fiber solution off by {off:e} under complex scaling (bound {bound:e})"
            );
        }
    }
    let edge = match base.direction {
        Direction::X => case.rect.height(),
        Direction::Y => case.rect.width(),
    };
    let lebesgue = 2.0 / std::f64::consts::PI * ((k - 1) as f64).ln() + 1.0;
    let rounding = 2.0 * edge * lebesgue * nodal;
    let diff = (sa.value - base.value * alpha).norm();
    let allowed = budget(alpha.norm(), &sa) + rounding;
    ensure!(diff <= allowed, "value off by {diff:e} under complex scaling (allowed {allowed:e})");
    Ok(())
}

// ---------------------------------------------------------------- oracle

/// The `n`-point tensor rule integrates `x^i y^j`, `i, j <= 2n - 1`, exactly.
pub fn gauss_exactness(n: usize, coeffs: &[f64], rect: Rectangle) -> Check {
    let deg = 2 * n;
    assert_eq!(coeffs.len(), deg * deg);
    let rule = gauss_rule(n).map_err(|e| e.to_string())?;
    let cf = coeffs.to_vec();
    let f = FnIntegrand::new(
        move |x: f64, y: f64| {
            let mut s = 0.0;
            for j in 0..deg {
                s += horner(&cf[deg * j..deg * (j + 1)], x) * y.powi(j as i32);
            }
            c(s, 0.0)
        },
        |_, _| 0.0,
        rect,
    );
    let got = gauss_rect(&f, rect, &rule).map_err(|e| e.to_string())?;
    let mono = |m: usize, lo: f64, hi: f64| (hi.powi(m as i32 + 1) - lo.powi(m as i32 + 1)) / (m + 1) as f64;
    let mono_abs = |m: usize, lo: f64, hi: f64| (hi - lo) * lo.abs().max(hi.abs()).powi(m as i32);
    let (mut exact, mut scale) = (0.0, 0.0);
    for j in 0..deg {
        for i in 0..deg {
            let cij = coeffs[i + deg * j];
            exact += cij * mono(i, rect.a, rect.b) * mono(j, rect.c, rect.d);
            scale += cij.abs() * mono_abs(i, rect.a, rect.b) * mono_abs(j, rect.c, rect.d);
        }
    }
    ensure!((got - exact).norm() <= 1e-13 * scale, "n={n}: {got} vs {exact} (scale {scale})");
    Ok(())
}

// ---------------------------------------------------------------- adapt

fn overlap(p: &Rectangle, q: &Rectangle) -> f64 {
    let w = p.b.min(q.b) - p.a.max(q.a);
    let h = p.d.min(q.d) - p.c.max(q.c);
    if w > 0.0 && h > 0.0 {
        w * h
    } else {
        0.0
    }
}

/// Accepted rectangles cover the root without overlaps, sit on the dyadic
/// grid of their depth, and sum to the reported value in order.
pub fn tiling(result: &AdaptiveResult, root: Rectangle) -> Check {
    let area: f64 = result.mesh.iter().map(|m| m.rect.area()).sum();
    ensure!((area - root.area()).abs() <= 1e-12 * root.area(), "area {area} vs {}", root.area());
    for (i, p) in result.mesh.iter().enumerate() {
        ensure!(root.contains(&p.rect), "{:?} leaves the root", p.rect);
        let scale = 0.5f64.powi(p.depth as i32);
        ensure!(
            (p.rect.width() - root.width() * scale).abs() <= 1e-12 * root.width(),
            "width does not match depth"
        );
        for q in &result.mesh[i + 1..] {
            ensure!(
                overlap(&p.rect, &q.rect) <= 1e-14 * root.area(),
                "{:?} overlaps {:?}",
                p.rect,
                q.rect
            );
        }
    }
    let mut sum = c(0.0, 0.0);
    for m in &result.mesh {
        sum += m.value;
    }
    ensure!(sum == result.value, "value is not the ordered mesh sum");
    Ok(())
}

fn same_run(a: &AdaptiveResult, b: &AdaptiveResult, what: &str) -> Check {
    ensure!(a.value == b.value, "{what}: values differ ({} vs {})", a.value, b.value);
    ensure!(a.mesh.len() == b.mesh.len(), "{what}: mesh sizes differ");
    for (x, y) in a.mesh.iter().zip(&b.mesh) {
        ensure!(
            x.rect == y.rect && x.depth == y.depth && x.value == y.value,
            "{what}: meshes differ"
        );
    }
    Ok(())
}

/// Repeated runs, the parallel tree walk and the recompute-children mode all
/// reproduce the sequential result bit for bit.
pub fn determinism<I: Integrand2D>(f: &I, root: Rectangle, cfg: &AdaptiveConfig) -> Check {
    let seq = AdaptiveConfig {
        parallel: false,
        reuse_child_estimates: true,
        ..*cfg
    };
    let base = adaptive_integrate(f, root, &seq).map_err(|e| e.to_string())?;
    same_run(&base, &adaptive_integrate(f, root, &seq).map_err(|e| e.to_string())?, "repeat")?;
    let par = AdaptiveConfig { parallel: true, ..seq };
    same_run(&base, &adaptive_integrate(f, root, &par).map_err(|e| e.to_string())?, "parallel")?;
    let fresh = AdaptiveConfig {
        reuse_child_estimates: false,
        ..seq
    };
    let recomputed = adaptive_integrate(f, root, &fresh).map_err(|e| e.to_string())?;
    same_run(&base, &recomputed, "recompute")?;
    ensure!(
        recomputed.rect_evals >= base.rect_evals,
        "recompute mode evaluated fewer rectangles"
    );
    tiling(&base, root)
}

/// Every split rectangle on the path to an accepted one failed the
/// whole-vs-quadrants test, and every converged accepted rectangle passed it.
pub fn acceptance_consistency<I: Integrand2D>(f: &I, root: Rectangle, cfg: &AdaptiveConfig, result: &AdaptiveResult) -> Check {
    let params = LevinParams {
        k: cfg.k,
        eps_trunc_rel: result.eps_trunc,
        beta: cfg.beta,
        eps_sub: cfg.eps_sub,
        k1d: cfg.k1d,
        max_depth_1d: cfg.max_depth_1d,
        solver: cfg.solver,
    };
    let discrepancy = |r: Rectangle| -> Result<f64, String> {
        let est = |q| delaminated_estimate(f, q, &params).map(|e| e.value).map_err(|e| e.to_string());
        let whole = est(r)?;
        let mut sum = c(0.0, 0.0);
        for q in r.quadrants() {
            sum += est(q)?;
        }
        Ok((whole - sum).norm())
    };
    let mut split = HashSet::new();
    for m in &result.mesh {
        let (cx, cy) = (0.5 * (m.rect.a + m.rect.b), 0.5 * (m.rect.c + m.rect.d));
        let mut r = root;
        for _ in 0..m.depth {
            if split.insert(format!("{r:?}")) {
                let gap = discrepancy(r)?;
                ensure!(gap >= cfg.eps_sub, "{r:?} was split with discrepancy {gap:e}");
            }
            let mx = 0.5 * (r.a + r.b);
            let my = 0.5 * (r.c + r.d);
            let q = r.quadrants();
            r = q[usize::from(cx > mx) + 2 * usize::from(cy > my)];
        }
        ensure!(r == m.rect, "replayed path ends at {r:?}, mesh has {:?}", m.rect);
        if m.converged {
            let gap = discrepancy(r)?;
            ensure!(gap < cfg.eps_sub, "{r:?} accepted with discrepancy {gap:e}");
        }
    }
    Ok(())
}
