//! Verification bench for the weighted functional inequalities attached to
//! the coefficient pair (a, h): the classical Hardy inequality, its
//! coefficient form (d+γ)∫hφ² ≤ 4∫a|∇φ|², the Rayleigh eigenvalue
//!
//! ```text
//! Λ_iso(f) = inf_φ ∫a[f]|∇φ|² dv / ∫h[f]φ² dv  ≥  (d+γ)/4,
//! ```
//!
//! the weighted ball quotient |B|^{2/d}∫_B h / ∫_B a, Sawyer–Wheeden cube
//! averages σ_{r,s}, a weighted Sobolev inequality, its space-time variant,
//! and the ε-split Poincaré inequality. Every check returns the measured
//! quantities; asserting the theorem-backed direction is the caller's job.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use crate::evolve::{stiffness, SolverState};
use crate::grid::{RadialField, RadialGrid};
use crate::linalg::{inverse_iteration, Tridiag};
use crate::params::{sphere_area, Params};
use crate::potentials::{gauss_legendre, PotentialPair};
use crate::{CoreError, Result};

/// How a test function was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Bump,
    RandomSmooth,
    OptimizerOutput,
}

/// A (possibly signed) compactly supported radial test function.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub field: RadialField,
    /// Support radius: the values vanish at and beyond this radius.
    pub r_supp: f64,
    pub family: Family,
}

impl TestFunction {
    /// Gaussian e^{−r²/(2σ²)} truncated where it is below machine noise.
    pub fn gaussian(grid: Arc<RadialGrid>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(CoreError::Domain(format!(
                "TestFunction::gaussian: sigma = {sigma} must be positive"
            )));
        }
        let r_supp = (10.0 * sigma).min(grid.r_max);
        let values: Vec<f64> = grid
            .r
            .iter()
            .map(|&r| {
                if r >= r_supp {
                    0.0
                } else {
                    libm::exp(-0.5 * (r / sigma) * (r / sigma))
                }
            })
            .collect();
        let field = RadialField::new(grid, values, false)?;
        Ok(TestFunction {
            field,
            r_supp,
            family: Family::Gaussian,
        })
    }

    /// Standard bump exp(1 − 1/(1 − (r/R)²)) supported in B_R.
    pub fn bump(grid: Arc<RadialGrid>, r_supp: f64) -> Result<Self> {
        if !(r_supp > 0.0 && r_supp <= grid.r_max) {
            return Err(CoreError::Domain(format!(
                "TestFunction::bump: R = {r_supp} outside (0, r_max]"
            )));
        }
        let values: Vec<f64> = grid.r.iter().map(|&r| bump_profile(r / r_supp)).collect();
        let field = RadialField::new(grid, values, false)?;
        Ok(TestFunction {
            field,
            r_supp,
            family: Family::Bump,
        })
    }

    /// Low-pass node noise (a short random cosine series) multiplied by the
    /// bump envelope; deterministic in the seed.
    pub fn random_smooth(grid: Arc<RadialGrid>, r_supp: f64, seed: u64) -> Result<Self> {
        if !(r_supp > 0.0 && r_supp <= grid.r_max) {
            return Err(CoreError::Domain(format!(
                "TestFunction::random_smooth: R = {r_supp} outside (0, r_max]"
            )));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut unif = move || 2.0 * (rng.next_u64() as f64 / u64::MAX as f64) - 1.0;
        const MODES: usize = 6;
        let mut coef = [0.0; MODES];
        let mut phase = [0.0; MODES];
        for k in 0..MODES {
            coef[k] = unif() / (k as f64 + 1.0);
            phase[k] = core::f64::consts::PI * unif();
        }
        let values: Vec<f64> = grid
            .r
            .iter()
            .map(|&r| {
                let env = bump_profile(r / r_supp);
                if env == 0.0 {
                    return 0.0;
                }
                let mut s = 0.0;
                for k in 0..MODES {
                    s += coef[k]
                        * libm::cos((k + 1) as f64 * core::f64::consts::PI * r / r_supp + phase[k]);
                }
                env * s
            })
            .collect();
        let field = RadialField::new(grid, values, false)?;
        Ok(TestFunction {
            field,
            r_supp,
            family: Family::RandomSmooth,
        })
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let r_supp = grid.r_max;
        TestFunction {
            field: RadialField::zeros(grid),
            r_supp,
            family: Family::Bump,
        }
    }
}

fn bump_profile(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        libm::exp(1.0 - 1.0 / (1.0 - x * x))
    }
}

/// An axis-aligned cube in ℝ^d.
#[derive(Debug, Clone)]
pub struct CubeSpec {
    pub center: Vec<f64>,
    pub side: f64,
    /// Dyadic level (side = 2^{−level} in the standard suite).
    pub level: u32,
}

/// A ball in ℝ^d for the weighted quotient.
#[derive(Debug, Clone)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Output of the σ_{r,s} cube-average machinery.
#[derive(Debug, Clone)]
pub struct SigmaReport {
    pub s: f64,
    pub r: f64,
    /// Sup of σ over the supplied cubes.
    pub sigma_value: f64,
    /// η = 2 − d/s.
    pub eta: f64,
    /// p(γ,d,s) = ds/(d + s(d+γ)).
    pub p_of_s: f64,
    /// Least-squares slope of log σ² against log side.
    pub slope_estimate: f64,
}

/// Output of the Λ_iso eigensolve (radial-restricted).
#[derive(Debug, Clone)]
pub struct EigenReport {
    pub lambda_iso: f64,
    /// (d+γ)/4.
    pub lower_bound: f64,
    pub minimizer: TestFunction,
    pub iterations: usize,
    pub residual: f64,
}

/// Per-ε margins of the split Poincaré inequality.
#[derive(Debug, Clone)]
pub struct EpsPoincareReport {
    /// (ε, K(ε)) with K the minimal constant in
    /// ∫hφ² ≤ ε∫a|∇φ|² + K∫aφ², floored at 0.
    pub margins: Vec<(f64, f64)>,
    /// Fitted slope of log K against log ε over the positive margins.
    pub slope: f64,
}

fn same_grid(a: &RadialGrid, b: &RadialGrid) -> bool {
    core::ptr::eq(a, b) || (a.n == b.n && a.d == b.d && a.r == b.r)
}

fn check_grids(phi: &TestFunction, pair: &PotentialPair, what: &str) -> Result<()> {
    if !same_grid(&phi.field.grid, &pair.a.grid) {
        return Err(CoreError::Grid(format!("{what}: mismatched grids")));
    }
    Ok(())
}

/// Σ w_i x_i y_i z_i, the nodal quadrature of ∫ x y z dv.
fn vol_dot3(grid: &RadialGrid, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..grid.n {
        acc += grid.w[i] * x[i] * y[i] * z[i];
    }
    acc
}

/// Hardy inequality (d+γ)²∫|v|^γφ² ≤ 4∫|v|^{2+γ}|∇φ|²: returns (lhs, rhs).
pub fn hardy_check(phi: &TestFunction, gamma: f64, d: usize) -> Result<(f64, f64)> {
    let grid = &phi.field.grid;
    let dd = d as f64;
    if grid.d != d {
        return Err(CoreError::Grid(format!(
            "hardy_check: grid dimension {} != {d}",
            grid.d
        )));
    }
    if !(gamma > -dd) {
        return Err(CoreError::Domain(format!(
            "hardy_check: gamma = {gamma} <= -{dd} makes |v|^gamma phi^2 non-integrable"
        )));
    }
    let sq: Vec<f64> = phi.field.values.iter().map(|&v| v * v).collect();
    let sq_field = RadialField::new(Arc::clone(grid), sq, true)?;
    let lhs = (dd + gamma) * (dd + gamma) * sq_field.integrate_radial(gamma)?;
    let grad = phi.field.gradient();
    let gsq: Vec<f64> = grad.iter().map(|&g| g * g).collect();
    let gsq_field = RadialField::new(Arc::clone(grid), gsq, true)?;
    let rhs = 4.0 * gsq_field.integrate_radial(2.0 + gamma)?;
    Ok((lhs, rhs))
}

/// Coefficient Hardy form (d+γ)∫hφ² ≤ 4∫a|∇φ|²: returns (lhs, rhs).
pub fn lemma21_check(
    phi: &TestFunction,
    pair: &PotentialPair,
    params: &Params,
) -> Result<(f64, f64)> {
    check_grids(phi, pair, "lemma21_check")?;
    let grid = &phi.field.grid;
    let dd = params.d as f64;
    let lhs = (dd + params.gamma) * vol_dot3(grid, &pair.h.values, &phi.field.values, &phi.field.values);
    let grad = phi.field.gradient();
    let rhs = 4.0 * vol_dot3(grid, &pair.a.values, &grad, &grad);
    Ok((lhs, rhs))
}

/// Count of eigenvalues of the pencil (A, B) strictly below `lam`, by the
/// Sturm sequence of the LDLᵀ pivots of A − λB.
fn count_below(a: &Tridiag, b_diag: &[f64], lam: f64) -> usize {
    let n = a.n();
    let mut count = 0usize;
    let mut prev = a.diag[0] - lam * b_diag[0];
    if prev < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let e = a.off[i - 1];
        let denom = if prev == 0.0 { 1e-300 } else { prev };
        let piv = a.diag[i] - lam * b_diag[i] - e * e / denom;
        if piv < 0.0 {
            count += 1;
        }
        prev = piv;
    }
    count
}

/// Smallest radial Rayleigh quotient ∫a|∇φ|² / ∫hφ² over φ vanishing at
/// r_max, by shifted inverse iteration with a Sturm-bisection fallback.
pub fn rayleigh_lambda_iso(pair: &PotentialPair, params: &Params) -> Result<EigenReport> {
    let grid = Arc::clone(&pair.a.grid);
    let n = grid.n;
    let m = n - 1; // interior nodes; the last carries the Dirichlet condition
    let full = stiffness(&grid, &pair.a.values);
    let a_mat = Tridiag {
        diag: full.diag[..m].to_vec(),
        off: full.off[..m - 1].to_vec(),
    };
    let mut b_diag = vec![0.0; m];
    for i in 0..m {
        b_diag[i] = grid.w[i] * pair.h.values[i];
        if !(b_diag[i] > 0.0) {
            return Err(CoreError::Domain(format!(
                "rayleigh_lambda_iso: degenerate form, h({}) = {}",
                grid.r[i], pair.h.values[i]
            )));
        }
    }
    // cancellation-free Rayleigh quotient from positive cell sums
    let rayleigh = |x: &[f64]| -> f64 {
        let mut num = 0.0;
        for i in 0..m {
            let xr = if i + 1 < m { x[i + 1] } else { 0.0 };
            let h = grid.r[i + 1] - grid.r[i];
            let c = 0.5 * (pair.a.values[i] + pair.a.values[i + 1]);
            let mu = sphere_area(grid.d)
                * (libm::pow(grid.r[i + 1], grid.d as f64) - libm::pow(grid.r[i], grid.d as f64))
                / grid.d as f64;
            let dx = (xr - x[i]) / h;
            num += c * mu * dx * dx;
        }
        let den: f64 = (0..m).map(|i| b_diag[i] * x[i] * x[i]).sum();
        num / den
    };
    let lower_bound = 0.25 * (params.d as f64 + params.gamma);
    let shift = 0.9 * lower_bound;
    let x0 = vec![1.0; m];
    let solved = inverse_iteration(&a_mat, &b_diag, shift, &x0, rayleigh, 1e-8, 400);
    let pair_out = match solved {
        Ok(p) => p,
        Err(_) => {
            // bracket the smallest eigenvalue by Sturm bisection, then one
            // targeted inverse iteration for the vector
            let mut lo = 0.0;
            let mut hi = rayleigh(&x0);
            for _ in 0..120 {
                let mid = 0.5 * (lo + hi);
                if count_below(&a_mat, &b_diag, mid) == 0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            inverse_iteration(&a_mat, &b_diag, lo * (1.0 - 1e-8), &x0, rayleigh, 1e-8, 400)?
        }
    };
    let mut minimizer_vals = pair_out.vector.clone();
    minimizer_vals.push(0.0);
    let minimizer = TestFunction {
        field: RadialField::new(Arc::clone(&grid), minimizer_vals, false)?,
        r_supp: grid.r_max,
        family: Family::OptimizerOutput,
    };
    Ok(EigenReport {
        lambda_iso: pair_out.lambda,
        lower_bound,
        minimizer,
        iterations: pair_out.iterations,
        residual: pair_out.residual,
    })
}

/// Width of the grid cell containing radius `rho`.
fn local_spacing(grid: &RadialGrid, rho: f64) -> f64 {
    let idx = grid.r.partition_point(|&r| r < rho);
    if idx == 0 {
        grid.r[0]
    } else if idx >= grid.n {
        grid.r[grid.n - 1] - grid.r[grid.n - 2]
    } else {
        grid.r[idx] - grid.r[idx - 1]
    }
}

fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|&c| c * c).sum())
}

/// Tensor Gauss quadrature of `g(|x|)·χ(x)` over the cube
/// `center + [−half, half]^d`, with `nodes` points per axis.
fn tensor_integral(
    center: &[f64],
    half: f64,
    d: usize,
    nodes: usize,
    g: impl Fn(f64) -> Result<f64>,
    indicator: impl Fn(&[f64]) -> bool,
) -> Result<f64> {
    let (x1, w1) = gauss_legendre(nodes);
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut acc = 0.0;
    loop {
        let mut wt = 1.0;
        for k in 0..d {
            point[k] = center[k] + half * x1[idx[k]];
            wt *= w1[idx[k]];
        }
        if indicator(&point) {
            acc += wt * g(norm(&point))?;
        }
        // odometer over the d-fold index
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return Ok(acc * libm::pow(half, d as f64));
            }
        }
    }
}

/// Max over balls of |B|^{2/d} ∫_B h / ∫_B a. Origin-centered balls are
/// integrated exactly against the piecewise-linear fields; off-origin balls
/// by tensor quadrature of the monotone-cubic interpolants.
pub fn weighted_quotient(pair: &PotentialPair, balls: &[BallSpec]) -> Result<f64> {
    let grid = &pair.a.grid;
    let d = grid.d;
    let dd = d as f64;
    let omega = sphere_area(d);
    let h_interp = pair.h.interpolant();
    let a_interp = pair.a.interpolant();
    let mut best = 0.0_f64;
    for ball in balls {
        if ball.center.len() != d {
            return Err(CoreError::Domain(format!(
                "weighted_quotient: center has {} coordinates, grid dimension is {d}",
                ball.center.len()
            )));
        }
        let e = norm(&ball.center);
        if !(ball.radius > 0.0) || e + ball.radius > grid.r_max {
            return Err(CoreError::Domain(format!(
                "weighted_quotient: ball (|c| = {e}, radius = {}) outside the resolved domain",
                ball.radius
            )));
        }
        if 2.0 * ball.radius < 2.0 * local_spacing(grid, e + ball.radius) {
            return Err(CoreError::Grid(format!(
                "weighted_quotient: ball of radius {} unresolved (side below 2 cells)",
                ball.radius
            )));
        }
        let (num, den) = if e == 0.0 {
            (
                grid.ball_integral(&pair.h.values, ball.radius),
                grid.ball_integral(&pair.a.values, ball.radius),
            )
        } else {
            let rad = ball.radius;
            let c = &ball.center;
            let inside = |x: &[f64]| {
                let mut s = 0.0;
                for k in 0..d {
                    let t = x[k] - c[k];
                    s += t * t;
                }
                s <= rad * rad
            };
            let num = tensor_integral(c, rad, d, 16, |r| Ok(h_interp.eval(r)), &inside)?;
            let den = tensor_integral(c, rad, d, 16, |r| Ok(a_interp.eval(r)), &inside)?;
            (num, den)
        };
        let q = if den > 0.0 {
            let vol = omega / dd * libm::pow(ball.radius, dd);
            libm::pow(vol, 2.0 / dd) * num / den
        } else {
            0.0
        };
        best = best.max(q);
    }
    Ok(best)
}

/// σ_{r,s}(Q) = |Q|^{1/d − 1/2 + 1/r} (⨍_Q w1^s)^{1/(rs)} (⨍_Q w2^{−s})^{1/(2s)}.
pub fn sigma(
    q: &CubeSpec,
    w1: &RadialField,
    w2: &RadialField,
    r_exp: f64,
    s: f64,
    d: usize,
) -> Result<f64> {
    if !(s > 0.0) || !(r_exp > 0.0) {
        return Err(CoreError::Domain(format!(
            "sigma: exponents s = {s}, r = {r_exp} must be positive"
        )));
    }
    if q.center.len() != d || !(q.side > 0.0) {
        return Err(CoreError::Domain("sigma: malformed cube".to_string()));
    }
    let grid = &w1.grid;
    let e = norm(&q.center);
    if q.side < 2.0 * local_spacing(grid, e) {
        return Err(CoreError::Grid(format!(
            "sigma: cube side {} unresolved (below 2 cells)",
            q.side
        )));
    }
    let w1i = w1.interpolant();
    let w2i = w2.interpolant();
    let half = 0.5 * q.side;
    let vol = libm::pow(q.side, d as f64);
    let avg1 = tensor_integral(&q.center, half, d, 8, |r| Ok(libm::pow(w1i.eval(r), s)), |_| true)?
        / vol;
    let avg2 = tensor_integral(
        &q.center,
        half,
        d,
        8,
        |r| {
            let v = w2i.eval(r);
            if !(v > 0.0) {
                return Err(CoreError::Domain(format!(
                    "sigma: w2 = {v} not positive on the cube"
                )));
            }
            Ok(libm::pow(v, -s))
        },
        |_| true,
    )? / vol;
    let prefactor = libm::pow(vol, 1.0 / d as f64 - 0.5 + 1.0 / r_exp);
    Ok(prefactor * libm::pow(avg1, 1.0 / (r_exp * s)) * libm::pow(avg2, 0.5 / s))
}

/// Unweighted least-squares slope of ln y against ln x.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (libm::log(x), libm::log(y)))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Evaluate σ over a cube suite and report the sup together with the
/// log–log slope of σ² against the side length.
pub fn sigma_report(
    cubes: &[CubeSpec],
    w1: &RadialField,
    w2: &RadialField,
    r_exp: f64,
    s: f64,
    params: &Params,
) -> Result<SigmaReport> {
    let d = params.d;
    let dd = d as f64;
    let mut sup = 0.0_f64;
    let mut pts = Vec::with_capacity(cubes.len());
    for q in cubes {
        let v = sigma(q, w1, w2, r_exp, s, d)?;
        sup = sup.max(v);
        pts.push((q.side, v * v));
    }
    let eta = 2.0 - dd / s;
    let p_of_s = dd * s / (dd + s * (dd + params.gamma));
    if s > dd / 2.0 && !(p_of_s > params.p_min_linfty) {
        return Err(CoreError::Invariant(format!(
            "sigma_report: p(gamma,d,s) = {p_of_s} not above {}",
            params.p_min_linfty
        )));
    }
    Ok(SigmaReport {
        s,
        r: r_exp,
        sigma_value: sup,
        eta,
        p_of_s,
        slope_estimate: fit_loglog_slope(&pts),
    })
}

/// Weighted Sobolev: lhs = (∫a^m φ^{2m})^{1/m}, rhs = ∫a|∇φ|²,
/// min_constant = lhs/rhs (0 when both vanish).
pub fn weighted_sobolev_check(
    phi: &TestFunction,
    pair: &PotentialPair,
    params: &Params,
) -> Result<(f64, f64, f64)> {
    check_grids(phi, pair, "weighted_sobolev_check")?;
    let grid = &phi.field.grid;
    let m = params.m_exp;
    let mut lhs_acc = 0.0;
    for i in 0..grid.n {
        lhs_acc += grid.w[i]
            * libm::pow(pair.a.values[i], m)
            * libm::pow(phi.field.values[i].abs(), 2.0 * m);
    }
    let lhs = libm::pow(lhs_acc, 1.0 / m);
    let grad = phi.field.gradient();
    let rhs = vol_dot3(grid, &pair.a.values, &grad, &grad);
    let min_constant = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok((lhs, rhs, min_constant))
}

/// Space-time Sobolev: lhs = ∫∫a|φ|^q, rhs = (∫∫a|∇φ|² + sup_t∫φ²)^{q/2},
/// time integrals by trapezoid over the snapshots.
pub fn space_time_check(
    trajectory: &[SolverState],
    phis: &[TestFunction],
    params: &Params,
) -> Result<(f64, f64, f64)> {
    if trajectory.len() < 2 {
        return Err(CoreError::TooFewRecords {
            got: trajectory.len(),
            need: 2,
        });
    }
    if phis.len() != trajectory.len() {
        return Err(CoreError::Domain(format!(
            "space_time_check: {} test functions for {} snapshots",
            phis.len(),
            trajectory.len()
        )));
    }
    let q = params.q_exp;
    let m = params.m_exp;
    // exponent identity q/2 = 2 − 1/m underlying the statement
    if (0.5 * q - (2.0 - 1.0 / m)).abs() > 1e-14 {
        return Err(CoreError::Invariant(format!(
            "space_time_check: q/2 = {} but 2 - 1/m = {}",
            0.5 * q,
            2.0 - 1.0 / m
        )));
    }
    let mut a_terms = Vec::with_capacity(trajectory.len());
    let mut g_terms = Vec::with_capacity(trajectory.len());
    let mut sup_p = 0.0_f64;
    for (state, phi) in trajectory.iter().zip(phis.iter()) {
        check_grids(phi, &state.pair, "space_time_check")?;
        let grid = &phi.field.grid;
        let mut at = 0.0;
        let mut pt = 0.0;
        for i in 0..grid.n {
            let v = phi.field.values[i];
            at += grid.w[i] * state.pair.a.values[i] * libm::pow(v.abs(), q);
            pt += grid.w[i] * v * v;
        }
        let grad = phi.field.gradient();
        g_terms.push(vol_dot3(grid, &state.pair.a.values, &grad, &grad));
        a_terms.push(at);
        sup_p = sup_p.max(pt);
    }
    let trapz = |ys: &[f64]| -> f64 {
        let mut acc = 0.0;
        for k in 0..ys.len() - 1 {
            acc += 0.5 * (ys[k] + ys[k + 1]) * (trajectory[k + 1].t - trajectory[k].t);
        }
        acc
    };
    let lhs = trapz(&a_terms);
    let base = trapz(&g_terms) + sup_p;
    let rhs = libm::pow(base, 0.5 * q);
    let min_constant = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok((lhs, rhs, min_constant))
}

/// For each ε: the minimal K with ∫hφ² ≤ ε∫a|∇φ|² + K∫aφ², floored at 0,
/// plus the fitted exponent of K against ε.
pub fn eps_poincare_check(
    phi: &TestFunction,
    pair: &PotentialPair,
    eps_list: &[f64],
    r_ball: f64,
    _params: &Params,
) -> Result<EpsPoincareReport> {
    check_grids(phi, pair, "eps_poincare_check")?;
    if phi.r_supp > r_ball {
        return Err(CoreError::Domain(format!(
            "eps_poincare_check: support radius {} exceeds R = {r_ball}",
            phi.r_supp
        )));
    }
    let grid = &phi.field.grid;
    let h_q = vol_dot3(grid, &pair.h.values, &phi.field.values, &phi.field.values);
    let grad = phi.field.gradient();
    let g_q = vol_dot3(grid, &pair.a.values, &grad, &grad);
    let p_q = vol_dot3(grid, &pair.a.values, &phi.field.values, &phi.field.values);
    let mut margins = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > 0.0) {
            return Err(CoreError::Domain(format!(
                "eps_poincare_check: eps = {eps} must be positive"
            )));
        }
        let k = if p_q > 0.0 {
            ((h_q - eps * g_q) / p_q).max(0.0)
        } else {
            0.0
        };
        margins.push((eps, k));
    }
    Ok(EpsPoincareReport {
        slope: fit_loglog_slope(&margins),
        margins,
    })
}
