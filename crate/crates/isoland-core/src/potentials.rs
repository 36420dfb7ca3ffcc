//! The coefficients a[f] = c_{d,γ}(f ∗ |v|^{2+γ}) and h[f] = C(d,d+γ)(f ∗ |v|^γ)
//! for radial f, via the exact 1-D reduction of the spherical convolution,
//! together with the explicit upper and lower bounds on a[f].
//!
//! For d = 3 the reduced kernel has a closed form and every source cell is
//! integrated analytically against piecewise-linear data, with the singular
//! diagonal split at s = r. The only places where the naive formulas lose
//! digits, the far field (min(r,s)/max(r,s) tiny) and nearly equal moment
//! endpoints, are routed through expm1/log1p forms.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::RadialField;
use crate::params::{sphere_area, Params};
use crate::{CoreError, Result};

/// The pair (a[f], h[f]) sampled on the source grid.
#[derive(Debug, Clone)]
pub struct PotentialPair {
    pub a: RadialField,
    pub h: RadialField,
    pub gamma: f64,
    /// ‖f‖₁ of the source at evaluation time.
    pub source_mass: f64,
}

/// The quantities of the pointwise lower bound a[f] ≥ ℓ⟨v⟩^{2+γ}.
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundRecord {
    pub ell: f64,
    /// Concentration radius r = 2‖f‖_{L¹₂}/‖f‖_{L¹}.
    pub r_concentration: f64,
    /// θ = |2+γ|p′/d for the reported exponent.
    pub theta: f64,
    pub p_used: f64,
}

const GAUSS4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_W: [f64; 4] = [
    0.347_854_845_137_453_85,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_85,
];

/// ∫_{u0}^{u1} u^{μ+k} du for k = 0,1,2; 0 ≤ u0 ≤ u1, μ > −1, stable when
/// u1 ≈ u0. The three moments share one log1p and one base power.
fn tri_pmom(u0: f64, u1: f64, mu: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    if u0 == 0.0 {
        let base = libm::pow(u1, mu + 1.0);
        let mut uk = base;
        for (k, o) in out.iter_mut().enumerate() {
            *o = uk / (mu + 1.0 + k as f64);
            uk *= u1;
        }
        return out;
    }
    let t = libm::log1p((u1 - u0) / u0);
    let base = libm::pow(u0, mu + 1.0);
    let mut uk = base;
    for (k, o) in out.iter_mut().enumerate() {
        let p = mu + 1.0 + k as f64;
        let pt = p * t;
        *o = if pt.abs() < 30.0 {
            uk * libm::expm1(pt) / p
        } else {
            (libm::pow(u1, p) - libm::pow(u0, p)) / p
        };
        uk *= u0;
    }
    out
}

/// ∫_{u0}^{u1} (c0 + c1 u + c2 u²) u^μ du.
fn quad_power_moment(c: [f64; 3], u0: f64, u1: f64, mu: f64) -> f64 {
    let m = tri_pmom(u0, u1, mu);
    c[0] * m[0] + c[1] * m[1] + c[2] * m[2]
}

/// ∫_{u0}^{u1} (c0 + c1 u + c2 u²) ln u du.
fn quad_log_moment(c: [f64; 3], u0: f64, u1: f64) -> f64 {
    if u1 <= 0.0 {
        return 0.0;
    }
    if u0 == 0.0 {
        let l = libm::log(u1);
        return c[0] * u1 * (l - 1.0)
            + c[1] * u1 * u1 / 2.0 * (l - 0.5)
            + c[2] * u1 * u1 * u1 / 3.0 * (l - 1.0 / 3.0);
    }
    // ln u = ln u0 + log1p((u − u0)/u0); the second part is smooth and small
    let base = libm::log(u0) * quad_power_moment(c, u0, u1, 0.0);
    let half = 0.5 * (u1 - u0);
    let mid = 0.5 * (u0 + u1);
    let mut corr = 0.0;
    for (x, w) in GAUSS4_X.iter().zip(GAUSS4_W.iter()) {
        let u = mid + half * x;
        let poly = c[0] + c[1] * u + c[2] * u * u;
        corr += w * poly * libm::log1p((u - u0) / u0);
    }
    base + corr * half
}

/// Stable (r+s)^μ − |r−s|^μ.
fn bracket_power(r: f64, s: f64, mu: f64) -> f64 {
    let lo = (r - s).abs();
    let hi = r + s;
    if lo == 0.0 {
        return libm::pow(hi, mu);
    }
    let t = libm::log1p(2.0 * r.min(s) / lo);
    let mt = mu * t;
    if mt.abs() < 30.0 {
        libm::pow(lo, mu) * libm::expm1(mt)
    } else {
        libm::pow(hi, mu) - libm::pow(lo, mu)
    }
}

/// Stable ln(r+s) − ln|r−s|.
fn bracket_log(r: f64, s: f64) -> f64 {
    libm::log1p(2.0 * r.min(s) / (r - s).abs())
}

/// Reduced kernel: (f ∗ |v|^λ)(r) = ∫₀^∞ f(s) k_λ(r,s) s^{d−1} ds.
///
/// d = 3 uses the closed form; other dimensions integrate the sphere
/// average by Gauss quadrature in the polar angle.
pub fn radial_kernel(lambda: f64, r: f64, s: f64, d: usize) -> Result<f64> {
    let dd = d as f64;
    if !(lambda > -dd) {
        return Err(CoreError::Domain(format!(
            "radial_kernel: lambda = {lambda} not above -d = {}",
            -dd
        )));
    }
    if !(r > 0.0 && s > 0.0) {
        return Err(CoreError::Domain(format!(
            "radial_kernel: radii must be positive, got ({r}, {s})"
        )));
    }
    if d == 3 {
        let mu = lambda + 2.0;
        if mu == 0.0 {
            return Ok(2.0 * core::f64::consts::PI * bracket_log(r, s) / (r * s));
        }
        return Ok(2.0 * core::f64::consts::PI * bracket_power(r, s, mu) / (r * s * mu));
    }
    let (x, w) = gauss_legendre(64);
    Ok(kernel_quadrature(lambda, r, s, d, &x, &w))
}

/// Sphere-average quadrature ω_{d−2} ∫₀^π (r²+s²−2rs cosθ)^{λ/2} sin^{d−2}θ dθ
/// on precomputed Gauss–Legendre nodes, with panel subdivision toward θ = 0
/// where the integrand is near singular for r ≈ s.
fn kernel_quadrature(lambda: f64, r: f64, s: f64, d: usize, x: &[f64], w: &[f64]) -> f64 {
    let pi = core::f64::consts::PI;
    let near = (r - s).abs() < 0.05 * (r + s);
    let mut panels: Vec<(f64, f64)> = Vec::new();
    if near {
        // grade panels toward θ = 0 where the distance degenerates
        let mut hi = 0.3;
        for _ in 0..40 {
            let lo = 0.5 * hi;
            panels.push((lo, hi));
            hi = lo;
        }
        panels.push((0.0, hi));
        panels.push((0.3, pi));
    } else {
        panels.push((0.0, pi));
    }
    let pow_sin = (d - 2) as f64;
    let mut total = 0.0;
    for (lo, hi) in panels {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w.iter()) {
            let theta = mid + half * xi;
            let sin = libm::sin(theta);
            // ρ² = (r−s)² + 4rs sin²(θ/2), grouped to avoid cancellation
            let sh = libm::sin(0.5 * theta);
            let rho2 = (r - s) * (r - s) + 4.0 * r * s * sh * sh;
            acc += wi * libm::pow(rho2, lambda / 2.0) * libm::pow(sin, pow_sin);
        }
        total += acc * half;
    }
    sphere_area(d - 1) * total
}

/// Gauss–Legendre nodes/weights on [−1, 1] by Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pi = core::f64::consts::PI;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(pi * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// One analytic cell piece [alpha, beta] (entirely on one side of r) of
/// ∫ f(s)·s·[(r+s)^μ − |r−s|^μ] ds with f linear on the parent cell [a, b].
/// `mu = None` selects the λ = −2 log bracket.
#[allow(clippy::too_many_arguments)]
fn analytic_piece(
    r: f64,
    alpha: f64,
    beta: f64,
    a: f64,
    fa: f64,
    mf: f64,
    mu: Option<f64>,
) -> f64 {
    if beta <= alpha {
        return 0.0;
    }
    // f(s)·s = A1 s + A2 s²
    let a1 = fa - mf * a;
    let a2 = mf;
    // plus factor, u = r + s
    let cp = [-a1 * r + a2 * r * r, a1 - 2.0 * a2 * r, a2];
    let (pu0, pu1) = (r + alpha, r + beta);
    // minus factor, u = |r − s|
    let (cm, mu0, mu1) = if beta <= r {
        (
            [a1 * r + a2 * r * r, -a1 - 2.0 * a2 * r, a2],
            r - beta,
            r - alpha,
        )
    } else {
        (
            [a1 * r + a2 * r * r, a1 + 2.0 * a2 * r, a2],
            alpha - r,
            beta - r,
        )
    };
    match mu {
        Some(mu) => {
            quad_power_moment(cp, pu0, pu1, mu) - quad_power_moment(cm, mu0, mu1, mu)
        }
        None => quad_log_moment(cp, pu0, pu1) - quad_log_moment(cm, mu0, mu1),
    }
}

/// (f ∗ |·|^λ) evaluated at arbitrary positive radii, λ ∈ (−d, 0].
pub fn convolve_power_at(f: &RadialField, lambda: f64, targets: &[f64]) -> Result<Vec<f64>> {
    let grid = &f.grid;
    let dd = grid.d as f64;
    if !(lambda > -dd && lambda <= 0.0) {
        return Err(CoreError::Domain(format!(
            "convolve_power: lambda = {lambda} outside (-{dd}, 0]"
        )));
    }
    if !f.nonneg {
        return Err(CoreError::Domain(
            "convolve_power: source must be a non-negative density".to_string(),
        ));
    }
    if targets.iter().any(|&r| !(r > 0.0)) {
        return Err(CoreError::Domain(
            "convolve_power: target radii must be positive".to_string(),
        ));
    }
    if lambda == 0.0 {
        // f ∗ 1 ≡ ‖f‖₁ (the quadrature reproduces the mass weights exactly)
        let mass = f.mass();
        return Ok(vec![mass; targets.len()]);
    }
    let n = grid.n;
    // cells of the piecewise representation: constant on [0, r0], linear
    // between nodes
    let mut cells = Vec::with_capacity(n);
    cells.push((0.0, grid.r[0], f.values[0], f.values[0]));
    for i in 0..n - 1 {
        cells.push((grid.r[i], grid.r[i + 1], f.values[i], f.values[i + 1]));
    }
    Ok(if grid.d == 3 {
        convolve_d3(targets, &cells, lambda)
    } else {
        convolve_general(targets, &cells, lambda, grid.d)
    })
}

/// (f ∗ |·|^λ)(r) on the source grid, λ ∈ (−d, 0].
pub fn convolve_power(f: &RadialField, lambda: f64) -> Result<RadialField> {
    let grid = &f.grid;
    let values = convolve_power_at(f, lambda, grid.r.as_slice())?;
    // clamp quadrature roundoff, error on anything structural
    let scale = values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let mut out = values;
    for v in out.iter_mut() {
        if *v < 0.0 {
            if *v >= -1e-10 * scale {
                *v = 0.0;
            } else {
                return Err(CoreError::Invariant(format!(
                    "convolve_power produced negative value {v} (scale {scale})"
                )));
            }
        }
    }
    RadialField::with_tol(Arc::clone(grid), out, true, 0.0)
}

fn convolve_d3(targets: &[f64], cells: &[(f64, f64, f64, f64)], lambda: f64) -> Vec<f64> {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mu = lambda + 2.0;
    let is_log = mu == 0.0;
    let mu_opt = if is_log { None } else { Some(mu) };
    targets
        .iter()
        .map(|&r| {
            let mut acc = 0.0;
            for &(a, b, fa, fb) in cells {
                let mf = if b > a { (fb - fa) / (b - a) } else { 0.0 };
                if a <= r && r <= b {
                    acc += analytic_piece(r, a, r, a, fa, mf, mu_opt);
                    acc += analytic_piece(r, r, b, a, fa, mf, mu_opt);
                    continue;
                }
                let mid = 0.5 * (a + b);
                let ratio = r.min(mid) / r.max(mid);
                if ratio > 1e-3 {
                    acc += analytic_piece(r, a, b, a, fa, mf, mu_opt);
                } else {
                    // far field: the bracket is smooth, Gauss does better
                    // than differencing two huge moments
                    let half = 0.5 * (b - a);
                    let mut g = 0.0;
                    for (x, w) in GAUSS4_X.iter().zip(GAUSS4_W.iter()) {
                        let s = mid + half * x;
                        let fv = fa + mf * (s - a);
                        let br = if is_log {
                            bracket_log(r, s)
                        } else {
                            bracket_power(r, s, mu)
                        };
                        g += w * fv * s * br;
                    }
                    acc += g * half;
                }
            }
            if is_log {
                two_pi * acc / r
            } else {
                two_pi * acc / (r * mu)
            }
        })
        .collect()
}

fn convolve_general(
    targets: &[f64],
    cells: &[(f64, f64, f64, f64)],
    lambda: f64,
    d: usize,
) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(64);
    let dm1 = (d - 1) as f64;
    let segment = |r: f64, lo: f64, hi: f64, a: f64, fa: f64, mf: f64| -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut g = 0.0;
        for (x, w) in GAUSS4_X.iter().zip(GAUSS4_W.iter()) {
            let s = mid + half * x;
            let fv = fa + mf * (s - a);
            g += w * fv * kernel_quadrature(lambda, r, s, d, &gx, &gw) * libm::pow(s, dm1);
        }
        g * half
    };
    targets
        .iter()
        .map(|&r| {
            let mut acc = 0.0;
            for &(a, b, fa, fb) in cells {
                let mf = if b > a { (fb - fa) / (b - a) } else { 0.0 };
                if a <= r && r <= b {
                    // grade panels into the integrable diagonal singularity
                    for (lo, hi) in [(a, r), (r, b)] {
                        if hi <= lo {
                            continue;
                        }
                        let mut width = hi - lo;
                        let toward_r = lo == r;
                        for _ in 0..30 {
                            let next = width * 0.5;
                            let (plo, phi) = if toward_r {
                                (lo + next, lo + width)
                            } else {
                                (hi - width, hi - next)
                            };
                            acc += segment(r, plo, phi, a, fa, mf);
                            width = next;
                        }
                    }
                } else {
                    acc += segment(r, a, b, a, fa, mf);
                }
            }
            acc
        })
        .collect()
}

/// Tail mass ∫_{r > 0.9 r_max} f dv; large values mean the far-field
/// truncation pollutes the potentials.
pub fn tail_mass(f: &RadialField) -> f64 {
    f.mass() - f.grid.ball_integral(&f.values, 0.9 * f.grid.r_max)
}

/// Both coefficients of the equation for the given source.
///
/// At the Coulomb endpoint γ = −d the Riesz constant degenerates and the
/// variant equation uses h := f with unit constants.
pub fn compute_potentials(f: &RadialField, params: &Params) -> Result<PotentialPair> {
    if params.d != f.grid.d {
        return Err(CoreError::Grid(format!(
            "compute_potentials: params d = {} vs grid d = {}",
            params.d, f.grid.d
        )));
    }
    let mass = f.mass();
    let gamma = params.gamma;
    let a_raw = convolve_power(f, 2.0 + gamma)?;
    let mut a_vals = a_raw.values;
    for v in a_vals.iter_mut() {
        *v *= params.c_coupling;
    }
    let a = RadialField::with_tol(Arc::clone(&f.grid), a_vals, true, 0.0)?;
    let h = if gamma == -(params.d as f64) {
        f.clone()
    } else {
        let h_raw = convolve_power(f, gamma)?;
        let mut h_vals = h_raw.values;
        for v in h_vals.iter_mut() {
            *v *= params.c_riesz;
        }
        RadialField::with_tol(Arc::clone(&f.grid), h_vals, true, 0.0)?
    };
    Ok(PotentialPair {
        a,
        h,
        gamma,
        source_mass: mass,
    })
}

/// Relative interior residual of the identity Δa[f] = −|2+γ| h[f]
/// (the sign that goes with the positive coupling constant).
pub fn delta_identity_residual(
    pair: &PotentialPair,
    f: &RadialField,
    params: &Params,
) -> Result<f64> {
    if pair.a.grid != f.grid {
        return Err(CoreError::Grid(
            "delta_identity_residual: pair and source on different grids".to_string(),
        ));
    }
    if params.gamma == -2.0 {
        // the reaction coefficient vanishes identically at the endpoint
        return Ok(0.0);
    }
    let coeff = (2.0 + params.gamma).abs();
    let lap = pair.a.laplacian();
    let grid = &f.grid;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut count = 0usize;
    for i in 1..grid.n - 2 {
        if grid.r[i] > 0.9 * grid.r_max {
            break;
        }
        let target = coeff * pair.h.values[i];
        let res = lap[i] + target;
        num += grid.w[i] * res * res;
        den += grid.w[i] * target * target;
        count += 1;
    }
    if count < 32 {
        return Err(CoreError::Grid(format!(
            "delta_identity_residual: only {count} interior nodes"
        )));
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(libm::sqrt(num / den))
}

/// Explicit sup bound: min over s of
/// c‖f‖_p (∫_{B_s}|w|^{(2+γ)p′} dw)^{1/p′} + c s^{2+γ} ‖f‖₁,
/// equal to C_{d,γ,p} ‖f‖_p^θ ‖f‖₁^{1−θ} with θ = |2+γ|p′/d.
pub fn a_sup_bound(f: &RadialField, p: f64, params: &Params) -> Result<f64> {
    let dd = params.d as f64;
    let kappa = (2.0 + params.gamma).abs();
    if !(p > 1.0) || !(p > params.p_min_linfty) {
        return Err(CoreError::Domain(format!(
            "a_sup_bound: p = {p} not above the threshold d/(d+gamma+2) = {}",
            params.p_min_linfty
        )));
    }
    let pprime = p / (p - 1.0);
    let kpow = (2.0 + params.gamma) * pprime + dd;
    debug_assert!(kpow > 0.0);
    let mass = f.mass();
    if mass == 0.0 {
        return Ok(0.0);
    }
    let c = params.c_coupling;
    let a_coef = c * f.lp_norm(p)? * libm::pow(params.omega() / kpow, 1.0 / pprime);
    let b_coef = c * mass;
    let beta = kpow / pprime;
    let s_star = libm::pow(kappa * b_coef / (beta * a_coef), pprime / dd);
    Ok(a_coef * libm::pow(s_star, beta) + b_coef * libm::pow(s_star, -kappa))
}

/// ℓ of the pointwise lower bound a[f](v) ≥ ℓ⟨v⟩^{2+γ}, from the
/// concentration radius r = 2‖f‖_{L¹₂}/‖f‖_{L¹}. Verifies the bound
/// against a[f] at every node before returning.
pub fn a_lower_bound(f: &RadialField, params: &Params) -> Result<LowerBoundRecord> {
    let mass = f.mass();
    if !(mass > 0.0) {
        return Err(CoreError::Domain(
            "a_lower_bound: source has no mass".to_string(),
        ));
    }
    let dd = params.d as f64;
    let kappa = (2.0 + params.gamma).abs();
    let l12 = mass + f.integrate_radial(2.0)?;
    let r_conc = 2.0 * l12 / mass;
    let ell = 0.5 * params.c_coupling * mass * libm::pow(r_conc, 2.0 + params.gamma);
    let p_used = (2.0 * params.p_min_linfty).max(2.0);
    let pprime = p_used / (p_used - 1.0);
    let theta = kappa * pprime / dd;
    let pair = compute_potentials(f, params)?;
    for (i, &r) in f.grid.r.iter().enumerate() {
        let floor = ell * libm::pow(1.0 + r * r, 0.5 * (2.0 + params.gamma));
        if pair.a.values[i] < floor * (1.0 - 1e-9) {
            return Err(CoreError::Invariant(format!(
                "lower bound violated at r = {r}: a = {} < {floor}",
                pair.a.values[i]
            )));
        }
    }
    Ok(LowerBoundRecord {
        ell,
        r_concentration: r_conc,
        theta,
        p_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_values, make_grid, Grading, RadialGrid};
    use core::f64::consts::PI;
    use rand_core::{RngCore, SeedableRng};

    fn grid(d: usize, r_max: f64, n: usize, g: Grading) -> Arc<RadialGrid> {
        Arc::new(make_grid(d, r_max, n, g).unwrap())
    }

    fn gauss_field(g: &Arc<RadialGrid>, sigma: f64) -> RadialField {
        RadialField::new(Arc::clone(g), gaussian_values(g, sigma), true).unwrap()
    }

    #[test]
    fn kernel_closed_forms() {
        // constant kernel
        assert!((radial_kernel(0.0, 0.7, 5.3, 3).unwrap() - 4.0 * PI).abs() < 1e-12);
        // Newton's theorem
        for (r, s) in [(1.0, 2.0), (2.0, 1.0), (0.3, 7.0)] {
            let k = radial_kernel(-1.0, r, s, 3).unwrap();
            assert!((k - 4.0 * PI / r.max(s)).abs() < 1e-12, "({r},{s})");
        }
    }

    #[test]
    fn kernel_symmetry() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut unif = move || rng.next_u64() as f64 / u64::MAX as f64;
        for _ in 0..50 {
            let r = 0.01 + 10.0 * unif();
            let s = 0.01 + 10.0 * unif();
            let lam = -2.9 + 2.9 * unif();
            let k1 = radial_kernel(lam, r, s, 3).unwrap();
            let k2 = radial_kernel(lam, s, r, 3).unwrap();
            assert!(k1 >= 0.0);
            assert!(((k1 - k2) / k1.max(1e-300)).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_matches_sphere_quadrature() {
        // closed form vs the brute-force polar-angle quadrature
        let (x, w) = gauss_legendre(64);
        for (lam, r, s) in [
            (-0.5, 1.0, 2.0),
            (-1.7, 0.5, 0.52),
            (-2.5, 3.0, 1.0),
            (-2.0, 1.0, 1.5),
        ] {
            let exact = radial_kernel(lam, r, s, 3).unwrap();
            let quad = kernel_quadrature(lam, r, s, 3, &x, &w);
            assert!(
                ((exact - quad) / exact).abs() < 1e-8,
                "lam={lam} r={r} s={s}: {exact} vs {quad}"
            );
        }
    }

    #[test]
    fn kernel_domain_errors() {
        assert!(radial_kernel(-3.0, 1.0, 1.0, 3).is_err());
        assert!(radial_kernel(-3.5, 1.0, 1.0, 3).is_err());
        assert!(radial_kernel(-1.0, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn convolve_mass_consistency() {
        let g = grid(3, 12.0, 512, Grading::Geometric(1.01));
        let f = gauss_field(&g, 1.0);
        let mass = f.mass();
        let conv = convolve_power(&f, 0.0).unwrap();
        for &v in conv.values.iter() {
            assert!(((v - mass) / mass).abs() < 1e-12, "{v} vs {mass}");
        }
    }

    #[test]
    fn coulomb_potential_of_gaussian() {
        // (f ∗ |v|^{−1})(r) = erf(r/√2)/r for the unit Gaussian
        let g = grid(3, 12.0, 4096, Grading::Uniform);
        let f = gauss_field(&g, 1.0);
        let conv = convolve_power(&f, -1.0).unwrap();
        let mut worst = 0.0_f64;
        for (i, &r) in g.r.iter().enumerate() {
            if r > 0.8 * g.r_max {
                break;
            }
            let exact = libm::erf(r / libm::sqrt(2.0)) / r;
            worst = worst.max((conv.values[i] - exact).abs());
        }
        assert!(worst < 1e-6, "worst pointwise error {worst}");
    }

    #[test]
    fn dirac_limit_newton() {
        let g = grid(3, 10.0, 1024, Grading::Geometric(1.01));
        let f = gauss_field(&g, 0.02);
        // the discrete spike carries mass() exactly, so far from the core
        // the Newton potential is mass/r to quadrature roundoff
        let mass = f.mass();
        assert!((mass - 1.0).abs() < 1e-3);
        let conv = convolve_power(&f, -1.0).unwrap();
        for (i, &r) in g.r.iter().enumerate() {
            if !(1.0..8.0).contains(&r) {
                continue;
            }
            assert!(
                (conv.values[i] * r / mass - 1.0).abs() < 1e-8,
                "r={r}: {}",
                conv.values[i]
            );
        }
    }

    #[test]
    fn convolve_rejects_bad_lambda() {
        let g = grid(3, 10.0, 64, Grading::Uniform);
        let f = gauss_field(&g, 1.0);
        assert!(convolve_power(&f, -3.0).is_err());
        assert!(convolve_power(&f, 0.5).is_err());
    }

    #[test]
    fn self_adjointness() {
        // by Fubini the form ∫∫ g(r)r²k(r,s)f(s)s² is exactly symmetric in
        // the piecewise-linear data, so the asymmetry measures only the
        // outer quadrature; a Simpson outer rule makes it negligible
        let g = grid(3, 10.0, 512, Grading::Uniform);
        let omega = sphere_area(3);
        let mut targets = vec![0.5 * g.r[0]];
        for i in 0..g.n - 1 {
            targets.push(0.5 * (g.r[i] + g.r[i + 1]));
        }
        let pair_with = |field: &RadialField, lam: f64| -> (Vec<f64>, Vec<f64>) {
            let nodes = convolve_power(field, lam).unwrap().values;
            let mids = convolve_power_at(field, lam, &targets).unwrap();
            (nodes, mids)
        };
        let simpson = |outer: &RadialField, nodes: &[f64], mids: &[f64]| -> f64 {
            let w = |r: f64, gv: f64, kv: f64| omega * r * r * gv * kv;
            // [0, r0]: outer field constant, integrand vanishes at 0
            let r0 = g.r[0];
            let mut acc = r0 / 6.0
                * (4.0 * w(0.5 * r0, outer.values[0], mids[0])
                    + w(r0, outer.values[0], nodes[0]));
            for i in 0..g.n - 1 {
                let (a, b) = (g.r[i], g.r[i + 1]);
                let gm = 0.5 * (outer.values[i] + outer.values[i + 1]);
                acc += (b - a) / 6.0
                    * (w(a, outer.values[i], nodes[i])
                        + 4.0 * w(0.5 * (a + b), gm, mids[i + 1])
                        + w(b, outer.values[i + 1], nodes[i + 1]));
            }
            acc
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut unif = move || rng.next_u64() as f64 / u64::MAX as f64;
        for _ in 0..3 {
            let (c1, w1, c2, w2) = (1.0 + 5.0 * unif(), 0.3 + unif(), 1.0 + 5.0 * unif(), 0.3 + unif());
            let f = RadialField::from_fn(Arc::clone(&g), true, |r| {
                libm::exp(-(r - c1) * (r - c1) / (w1 * w1))
            })
            .unwrap();
            let hf = RadialField::from_fn(Arc::clone(&g), true, |r| {
                libm::exp(-(r - c2) * (r - c2) / (w2 * w2))
            })
            .unwrap();
            let lam = -1.2;
            let (cf_nodes, cf_mids) = pair_with(&f, lam);
            let (cg_nodes, cg_mids) = pair_with(&hf, lam);
            let lhs = simpson(&hf, &cf_nodes, &cf_mids);
            let rhs = simpson(&f, &cg_nodes, &cg_mids);
            assert!(((lhs - rhs) / lhs).abs() < 1e-8, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn convolve_refinement_order() {
        // pointwise error against the closed-form Coulomb potential
        let mut errs = Vec::new();
        for n in [128usize, 256, 512] {
            let g = grid(3, 12.0, n, Grading::Uniform);
            let f = gauss_field(&g, 1.0);
            let conv = convolve_power(&f, -1.0).unwrap();
            let mut worst = 0.0_f64;
            for (i, &r) in g.r.iter().enumerate() {
                if r > 8.0 {
                    break;
                }
                let exact = libm::erf(r / libm::sqrt(2.0)) / r;
                worst = worst.max((conv.values[i] - exact).abs());
            }
            errs.push(worst);
        }
        let order = libm::log2(errs[0] / errs[2]) / 2.0;
        assert!(order >= 1.5, "order {order}, errors {errs:?}");
    }

    #[test]
    fn potentials_of_zero_and_spike() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = grid(3, 10.0, 512, Grading::Geometric(1.02));
        let zero = RadialField::zeros(Arc::clone(&g));
        let pair = compute_potentials(&zero, &params).unwrap();
        assert!(pair.a.values.iter().all(|&v| v == 0.0));
        assert!(pair.h.values.iter().all(|&v| v == 0.0));
        assert_eq!(pair.source_mass, 0.0);

        // narrow spike: a ≈ c r^{2+γ}, h ≈ C r^{γ} away from the core
        let spike = gauss_field(&g, 0.02);
        let pair = compute_potentials(&spike, &params).unwrap();
        for (i, &r) in g.r.iter().enumerate() {
            if !(0.5..7.0).contains(&r) {
                continue;
            }
            let ea = params.c_coupling * libm::pow(r, -0.5);
            let eh = params.c_riesz * libm::pow(r, -2.5);
            assert!(((pair.a.values[i] - ea) / ea).abs() < 1e-2, "a at r={r}");
            assert!(((pair.h.values[i] - eh) / eh).abs() < 1e-2, "h at r={r}");
        }
    }

    #[test]
    fn potentials_positive_for_positive_mass() {
        let params = Params::new(3, -2.25, 1.0).unwrap();
        let g = grid(3, 10.0, 256, Grading::Uniform);
        let f = RadialField::from_fn(Arc::clone(&g), true, |r| {
            if (2.0..3.0).contains(&r) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let pair = compute_potentials(&f, &params).unwrap();
        assert!(pair.a.values.iter().all(|&v| v > 0.0));
        assert!(pair.h.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn delta_identity_on_gaussian() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let mut residuals = Vec::new();
        for n in [256usize, 512] {
            let g = grid(3, 12.0, n, Grading::Uniform);
            let f = gauss_field(&g, 1.0);
            let pair = compute_potentials(&f, &params).unwrap();
            residuals.push(delta_identity_residual(&pair, &f, &params).unwrap());
        }
        assert!(residuals[1] <= 1e-2, "residual {}", residuals[1]);
        let order = libm::log2(residuals[0] / residuals[1]);
        assert!(order >= 1.5, "order {order}, residuals {residuals:?}");
    }

    #[test]
    fn delta_identity_endpoint_and_zero() {
        let g = grid(3, 12.0, 256, Grading::Uniform);
        let zero = RadialField::zeros(Arc::clone(&g));
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let pair = compute_potentials(&zero, &params).unwrap();
        assert_eq!(delta_identity_residual(&pair, &zero, &params).unwrap(), 0.0);
        let heat = Params::new(3, -2.0, 1.0).unwrap();
        let f = gauss_field(&g, 1.0);
        let pair = compute_potentials(&f, &heat).unwrap();
        assert_eq!(delta_identity_residual(&pair, &f, &heat).unwrap(), 0.0);
    }

    #[test]
    fn sup_bound_dominates_random_bumps() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = grid(3, 10.0, 256, Grading::Uniform);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut unif = move || rng.next_u64() as f64 / u64::MAX as f64;
        for _ in 0..20 {
            let (c, wdt, amp) = (4.0 * unif(), 0.2 + 1.5 * unif(), 0.1 + 3.0 * unif());
            let f = RadialField::from_fn(Arc::clone(&g), true, |r| {
                amp * libm::exp(-(r - c) * (r - c) / (wdt * wdt))
            })
            .unwrap();
            let bound = a_sup_bound(&f, 2.0, &params).unwrap();
            let pair = compute_potentials(&f, &params).unwrap();
            let amax = pair.a.lp_norm(f64::INFINITY).unwrap();
            assert!(amax <= bound, "{amax} vs bound {bound}");
        }
    }

    #[test]
    fn sup_bound_homogeneity_and_optimum() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = grid(3, 10.0, 256, Grading::Uniform);
        let f = gauss_field(&g, 1.0);
        let b1 = a_sup_bound(&f, 2.0, &params).unwrap();
        let scaled =
            RadialField::new(Arc::clone(&g), f.values.iter().map(|v| 3.0 * v).collect(), true)
                .unwrap();
        let b3 = a_sup_bound(&scaled, 2.0, &params).unwrap();
        assert!(((b3 - 3.0 * b1) / (3.0 * b1)).abs() < 1e-12);

        // the closed-form optimum matches a log-grid scan
        let c = params.c_coupling;
        let pprime = 2.0;
        let kpow = -2.5 * pprime + 3.0 + 2.0 * pprime;
        let a_coef = c * f.lp_norm(2.0).unwrap() * libm::pow(params.omega() / kpow, 0.5);
        let b_coef = c * f.mass();
        let mut scan = f64::INFINITY;
        for i in 0..4000 {
            let s = libm::exp(-8.0 + 16.0 * i as f64 / 3999.0);
            scan = scan.min(a_coef * libm::pow(s, kpow / pprime) + b_coef * libm::pow(s, -0.5));
        }
        assert!((b1 - scan).abs() / scan < 1e-6, "{b1} vs scan {scan}");
    }

    #[test]
    fn sup_bound_rejects_low_p() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = grid(3, 10.0, 64, Grading::Uniform);
        let f = gauss_field(&g, 1.0);
        // threshold is d/(d+γ+2) = 3/2.5 = 1.2
        assert!(a_sup_bound(&f, 1.1, &params).is_err());
        assert!(a_sup_bound(&f, 1.3, &params).is_ok());
    }

    #[test]
    fn lower_bound_gaussian_and_monotonicity() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = grid(3, 12.0, 512, Grading::Uniform);
        let f = gauss_field(&g, 1.0);
        let rec = a_lower_bound(&f, &params).unwrap();
        assert!(rec.ell > 0.0);
        assert!(rec.r_concentration > 0.0);
        assert!(rec.theta > 0.0 && rec.theta < 1.0);

        // mass up at fixed shape: ℓ strictly increases
        let doubled =
            RadialField::new(Arc::clone(&g), f.values.iter().map(|v| 2.0 * v).collect(), true)
                .unwrap();
        let rec2 = a_lower_bound(&doubled, &params).unwrap();
        assert!(rec2.ell > rec.ell);

        // spread at fixed mass: r up, ℓ down
        let wide = gauss_field(&g, 2.0);
        let rec3 = a_lower_bound(&wide, &params).unwrap();
        assert!(rec3.r_concentration > rec.r_concentration);
        assert!(rec3.ell < rec.ell);
    }

    #[test]
    fn lower_bound_rejects_zero_mass() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = grid(3, 10.0, 64, Grading::Uniform);
        let zero = RadialField::zeros(g);
        assert!(a_lower_bound(&zero, &params).is_err());
    }

    #[test]
    fn tail_mass_reporting() {
        let g = grid(3, 10.0, 256, Grading::Uniform);
        let tight = gauss_field(&g, 1.0);
        assert!(tail_mass(&tight) < 1e-12);
        let wide = gauss_field(&g, 4.0);
        assert!(tail_mass(&wide) > 1e-3);
    }

    #[test]
    fn general_dimension_mass_consistency() {
        let g = grid(4, 8.0, 64, Grading::Uniform);
        let f = gauss_field(&g, 1.0);
        let conv = convolve_power(&f, 0.0).unwrap();
        let mass = f.mass();
        for &v in conv.values.iter() {
            assert!(((v - mass) / mass).abs() < 1e-8, "{v} vs {mass}");
        }
    }
}
