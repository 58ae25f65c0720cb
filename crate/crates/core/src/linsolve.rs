//! Truncated least-squares solvers for small collocation systems.
//!
//! Both solvers discard directions whose singular value (or pivoted `|R_ii|`)
//! falls below an absolute threshold. The caller scales that threshold by
//! `||A||_2`, which keeps the solution norm below `||b|| / threshold` and
//! suppresses the discretised null space of the Levin operator.

use nalgebra::DMatrix;
use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::DiffMatrix;
use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Result of a truncated solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSolve {
    pub solution: Vec<Complex64>,
    /// Number of singular values (or pivots) kept.
    pub rank: usize,
    /// Largest singular value; `|R_11|` for the QR route.
    pub sigma_max: f64,
    /// Smallest kept singular value (or pivot); 0 when `rank == 0`.
    pub sigma_min_kept: f64,
    pub residual_norm: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Svd,
    Rrqr,
}

impl std::str::FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(SolveMethod::Svd),
            "rrqr" => Ok(SolveMethod::Rrqr),
            other => invalid(format!("unknown solver '{other}' (expected svd or rrqr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub method: SolveMethod,
    /// Truncation threshold relative to `||A||_2`.
    pub threshold_rel: f64,
    /// Try the diagonal-dominance iteration before factorising.
    pub iteration_enabled: bool,
    pub iteration_max: usize,
    pub iteration_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            method: SolveMethod::Svd,
            threshold_rel: 5e-13,
            iteration_enabled: false,
            iteration_max: 200,
            iteration_tol: 1e-15,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_rel > 0.0 && self.threshold_rel < 1.0) {
            return invalid(format!("threshold_rel must lie in (0, 1), got {}", self.threshold_rel));
        }
        if self.iteration_enabled && !(self.iteration_tol > 0.0 && self.iteration_max > 0) {
            return invalid("iteration needs a positive tolerance and step limit");
        }
        Ok(())
    }
}

fn check_system(a: &CMatrix, b: &[Complex64], threshold: f64) -> Result<()> {
    let (m, n) = a.shape();
    if n == 0 || m < n {
        return invalid(format!("truncated solve needs m >= n >= 1, got {m}x{n}"));
    }
    if b.len() != m {
        return invalid(format!("right side has length {}, expected {m}", b.len()));
    }
    if !(threshold >= 0.0) {
        return invalid(format!("threshold must be non-negative, got {threshold}"));
    }
    let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
    if !a.iter().all(finite) || !b.iter().all(finite) {
        return invalid("non-finite entry in collocation system");
    }
    Ok(())
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(a: &CMatrix, x: &[Complex64], b: &[Complex64]) -> f64 {
    let (m, n) = a.shape();
    let mut acc = 0.0;
    for i in 0..m {
        let mut r = -b[i];
        for j in 0..n {
            r += a[(i, j)] * x[j];
        }
        acc += r.norm_sqr();
    }
    acc.sqrt()
}

/// Thin singular value decomposition `A = U diag(s) V^H`, singular values
/// in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v_t: CMatrix,
}

fn to_ndarray(a: &CMatrix) -> Array2<Complex64> {
    // nalgebra storage is column-major
    Array2::from_shape_vec(a.shape().f(), a.as_slice().to_vec()).expect("shape matches storage")
}

fn to_nalgebra(a: &Array2<Complex64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// LAPACK divide-and-conquer SVD (`zgesdd`).
pub fn thin_svd(a: &CMatrix) -> Result<ThinSvd> {
    let (u, s, vt) = to_ndarray(a).svddc(JobSvd::Some).map_err(|e| Error::LinearAlgebra(e.to_string()))?;
    Ok(ThinSvd {
        u: to_nalgebra(&u.expect("left vectors requested")),
        singular_values: s.to_vec(),
        v_t: to_nalgebra(&vt.expect("right vectors requested")),
    })
}

/// Largest singular value of `a`.
pub fn two_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    match to_ndarray(a).svddc(JobSvd::None) {
        Ok((_, s, _)) => s.iter().copied().fold(0.0, f64::max),
        // zgesdd convergence failures are rare; fall back to the QR-iteration SVD
        Err(_) => a.singular_values().iter().copied().fold(0.0, f64::max),
    }
}

/// Minimum-norm least-squares solution with singular values below
/// `threshold_abs` discarded.
pub fn tsvd_solve(a: &CMatrix, b: &[Complex64], threshold_abs: f64) -> Result<TruncatedSolve> {
    check_system(a, b, threshold_abs)?;
    tsvd_core(a, b, |_| threshold_abs)
}

/// As [`tsvd_solve`] with the threshold given relative to `||A||_2`, which is
/// read off the same decomposition.
pub fn tsvd_solve_rel(a: &CMatrix, b: &[Complex64], threshold_rel: f64) -> Result<TruncatedSolve> {
    check_system(a, b, threshold_rel)?;
    tsvd_core(a, b, |smax| threshold_rel * smax)
}

fn tsvd_core(a: &CMatrix, b: &[Complex64], threshold: impl Fn(f64) -> f64) -> Result<TruncatedSolve> {
    let n = a.ncols();
    let svd = thin_svd(a)?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let tau = threshold(sigma_max);

    let mut solution = vec![Complex64::new(0.0, 0.0); n];
    let mut rank = 0;
    let mut sigma_min_kept = 0.0;
    for (idx, &s) in sigma.iter().enumerate() {
        if !(s >= tau && s > 0.0) {
            break;
        }
        let coef = svd.u.column(idx).iter().zip(b).map(|(ui, bi)| ui.conj() * bi).sum::<Complex64>() / s;
        for (x, vij) in solution.iter_mut().zip(svd.v_t.row(idx).iter()) {
            *x += coef * vij.conj();
        }
        rank += 1;
        sigma_min_kept = s;
    }

    let residual_norm = residual(a, &solution, b);
    debug_assert!(
        rank == 0 || norm2(&solution) <= norm2(b) / sigma_min_kept * (1.0 + 1e-10) + f64::MIN_POSITIVE,
        "truncated solution violates the norm bound"
    );
    Ok(TruncatedSolve {
        solution,
        rank,
        sigma_max,
        sigma_min_kept,
        residual_norm,
        threshold: tau,
    })
}

/// Truncated solve through column-pivoted Householder QR. The rank is the
/// number of leading pivots with `|R_ii| >= threshold_abs`; the returned
/// vector is the basic solution with the remaining unknowns set to zero.
pub fn rrqr_solve(a: &CMatrix, b: &[Complex64], threshold_abs: f64) -> Result<TruncatedSolve> {
    check_system(a, b, threshold_abs)?;
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut qb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diag = Vec::with_capacity(n);

    for j in 0..n {
        // pivot on the largest remaining column norm
        let (p, pnorm) = (j..n)
            .map(|c| (c, (j..m).map(|i| r[(i, c)].norm_sqr()).sum::<f64>()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p != j {
            r.swap_columns(j, p);
            perm.swap(j, p);
        }
        let xnorm = pnorm.sqrt();
        if xnorm == 0.0 {
            diag.extend(std::iter::repeat_n(0.0, n - j));
            break;
        }
        let x0 = r[(j, j)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (j..m).map(|i| r[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm = norm2(&v);
        if vnorm > 0.0 {
            v.iter_mut().for_each(|z| *z /= vnorm);
            for c in j..n {
                let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * r[(j + t, c)]).sum();
                for (t, vi) in v.iter().enumerate() {
                    r[(j + t, c)] -= *vi * dot * 2.0;
                }
            }
            let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * qb[j + t]).sum();
            for (t, vi) in v.iter().enumerate() {
                qb[j + t] -= *vi * dot * 2.0;
            }
        }
        diag.push(r[(j, j)].norm());
    }

    let rank = diag.iter().take_while(|&&d| d >= threshold_abs && d > 0.0).count();
    let mut z = vec![Complex64::new(0.0, 0.0); rank];
    for i in (0..rank).rev() {
        let mut s = qb[i];
        for c in i + 1..rank {
            s -= r[(i, c)] * z[c];
        }
        z[i] = s / r[(i, i)];
    }
    let mut solution = vec![Complex64::new(0.0, 0.0); n];
    for (i, zi) in z.into_iter().enumerate() {
        solution[perm[i]] = zi;
    }
    let residual_norm = residual(a, &solution, b);
    Ok(TruncatedSolve {
        solution,
        rank,
        sigma_max: diag.first().copied().unwrap_or(0.0),
        sigma_min_kept: if rank > 0 { diag[rank - 1] } else { 0.0 },
        residual_norm,
        threshold: threshold_abs,
    })
}

/// Outcome of the diagonal-dominance iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSolve {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
}

/// Solves `(D + G) p = b` for diagonal `G` by the fixed-point iteration
/// `p <- G^{-1} (b - D p)` starting from zero.
///
/// Returns `Ok(None)` when `||G^{-1}||_inf ||D||_inf > 1/2`, in which case the
/// iteration is not guaranteed to contract and the caller should factorise.
pub fn diag_iteration_solve(
    d: &DiffMatrix,
    g_diag: &[Complex64],
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<Option<IterationSolve>> {
    let k = d.rows();
    if g_diag.len() != k || b.len() != k {
        return invalid("diagonal and right side must match the differentiation matrix");
    }
    if g_diag.iter().any(|g| g.norm() == 0.0) {
        return Ok(None);
    }
    let ginv_norm = g_diag.iter().map(|g| 1.0 / g.norm()).fold(0.0, f64::max);
    if ginv_norm * d.inf_norm() > 0.5 {
        return Ok(None);
    }
    let bnorm = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut p = vec![Complex64::new(0.0, 0.0); k];
    for it in 1..=max_iter {
        let dp = d.apply(&p);
        let next: Vec<Complex64> = (0..k).map(|i| (b[i] - dp[i]) / g_diag[i]).collect();
        let change = next.iter().zip(&p).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        p = next;
        if change <= tol * bnorm {
            return Ok(Some(IterationSolve {
                solution: p,
                iterations: it,
            }));
        }
    }
    Err(Error::ConvergenceFailure(max_iter))
}

/// Solution of one Levin collocation system `(D + i diag(g')) p = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSolve {
    pub solution: Vec<Complex64>,
    /// Kept rank; `k` when the iteration path was taken.
    pub rank: usize,
    pub iterated: bool,
}

/// Builds `D + i diag(dg)` in reference coordinates.
pub fn levin_matrix(d: &DiffMatrix, dg: &[f64]) -> CMatrix {
    let k = d.rows();
    CMatrix::from_fn(k, k, |i, j| {
        let re = d.get(i, j);
        if i == j {
            Complex64::new(re, dg[i])
        } else {
            Complex64::new(re, 0.0)
        }
    })
}

/// Solves a square Levin system, trying the iteration first when enabled and
/// falling back to the configured truncated factorisation.
pub fn solve_levin_system(d: &DiffMatrix, dg: &[f64], rhs: &[Complex64], cfg: &SolveConfig) -> Result<CollocationSolve> {
    if cfg.iteration_enabled {
        let g: Vec<Complex64> = dg.iter().map(|&v| Complex64::new(0.0, v)).collect();
        match diag_iteration_solve(d, &g, rhs, cfg.iteration_tol, cfg.iteration_max) {
            Ok(Some(it)) => {
                return Ok(CollocationSolve {
                    solution: it.solution,
                    rank: d.rows(),
                    iterated: true,
                });
            }
            Ok(None) | Err(Error::ConvergenceFailure(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let a = levin_matrix(d, dg);
    let ts = solve_truncated(&a, rhs, cfg)?;
    Ok(CollocationSolve {
        solution: ts.solution,
        rank: ts.rank,
        iterated: false,
    })
}

/// Dispatches to the configured solver with threshold `threshold_rel * ||A||_2`.
pub fn solve_truncated(a: &CMatrix, rhs: &[Complex64], cfg: &SolveConfig) -> Result<TruncatedSolve> {
    match cfg.method {
        SolveMethod::Svd => tsvd_solve_rel(a, rhs, cfg.threshold_rel),
        SolveMethod::Rrqr => rrqr_solve(a, rhs, cfg.threshold_rel * two_norm(a)),
    }
}
