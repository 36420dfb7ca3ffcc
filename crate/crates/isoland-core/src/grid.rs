//! Radial grids, quadrature, and sampled radial fields.
//!
//! A grid holds `n` strictly increasing nodes on (0, r_max] with the first
//! node at half the first cell width and the last node exactly at `r_max`.
//! Quadrature weights come from integrating the piecewise-linear hat basis
//! (constant-extended on [0, r_0], matching the even extension f'(0) = 0)
//! against the measure `ω_{d−1} r^{d−1} dr`, with analytic cell moments, so
//! integration is exact for piecewise-linear fields even on graded grids.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::params::sphere_area;
use crate::{CoreError, Result};

/// Default tolerance below which negative density values are clamped to 0.
pub const DEFAULT_TOL_NEG: f64 = 1e-9;

/// Node grading descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Cell widths grow geometrically by the given ratio (> 1 clusters
    /// nodes near the origin).
    Geometric(f64),
}

/// 1-D radial discretization of ℝ^d with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    /// Strictly increasing node radii, r[0] > 0, r[n−1] = r_max.
    pub r: Vec<f64>,
    /// Weights: Σ w_i g(r_i) ≈ ω_{d−1} ∫₀^{r_max} g(r) r^{d−1} dr.
    pub w: Vec<f64>,
    pub r_max: f64,
    pub n: usize,
    pub d: usize,
    pub stretch: Grading,
}

/// Moments ∫_a^b r^{p−1} dr and ∫_a^b r^p dr for p > 0.
fn cell_moments_pow(a: f64, b: f64, p: f64) -> (f64, f64) {
    let md = (libm::pow(b, p) - libm::pow(a, p)) / p;
    let md1 = (libm::pow(b, p + 1.0) - libm::pow(a, p + 1.0)) / (p + 1.0);
    (md, md1)
}

/// Moments ∫_a^b r^{d−1} dr and ∫_a^b r^d dr.
fn cell_moments(a: f64, b: f64, d: usize) -> (f64, f64) {
    cell_moments_pow(a, b, d as f64)
}

/// Build a radial grid with the requested grading.
pub fn make_grid(d: usize, r_max: f64, n: usize, stretch: Grading) -> Result<RadialGrid> {
    if d < 3 {
        return Err(CoreError::Domain(format!("make_grid: d = {d} < 3")));
    }
    if !(r_max > 0.0) {
        return Err(CoreError::Domain(format!(
            "make_grid: r_max = {r_max} must be positive"
        )));
    }
    if n < 16 {
        return Err(CoreError::Domain(format!("make_grid: n = {n} < 16")));
    }
    let q = match stretch {
        Grading::Uniform => 1.0,
        Grading::Geometric(q) => {
            if !(q > 0.0) || !q.is_finite() {
                return Err(CoreError::Domain(format!(
                    "make_grid: geometric ratio {q} must be positive"
                )));
            }
            q
        }
    };
    // cell centers of n geometric cells, then scale so the last node
    // lands exactly on r_max
    let mut centers = Vec::with_capacity(n);
    let mut x = 0.0_f64;
    let mut h = 1.0_f64;
    for _ in 0..n {
        centers.push(x + 0.5 * h);
        x += h;
        h *= q;
    }
    let scale = r_max / centers[n - 1];
    let r: Vec<f64> = centers.iter().map(|c| c * scale).collect();
    for i in 1..n {
        if !(r[i] > r[i - 1]) {
            return Err(CoreError::Grid(format!(
                "make_grid: nodes not strictly increasing at index {i} (grading too steep for f64)"
            )));
        }
    }

    // hat-basis weights against ω r^{d−1} dr
    let omega = sphere_area(d);
    let mut w = vec![0.0_f64; n];
    // constant extension of the first hat on [0, r_0]
    let (m0, _) = cell_moments(0.0, r[0], d);
    w[0] += m0;
    for i in 0..n - 1 {
        let (a, b) = (r[i], r[i + 1]);
        let (md, md1) = cell_moments(a, b, d);
        let inv = 1.0 / (b - a);
        w[i] += (b * md - md1) * inv;
        w[i + 1] += (md1 - a * md) * inv;
    }
    for wi in w.iter_mut() {
        *wi *= omega;
        if !(*wi > 0.0) {
            return Err(CoreError::Grid(format!(
                "make_grid: non-positive quadrature weight {wi}"
            )));
        }
    }
    Ok(RadialGrid {
        r,
        w,
        r_max,
        n,
        d,
        stretch,
    })
}

impl RadialGrid {
    /// Exact integral of a piecewise-linear field times `ω r^{d−1}` over
    /// `[0, min(rho, r_max)]` (partial cells split analytically).
    pub fn ball_integral(&self, values: &[f64], rho: f64) -> f64 {
        let omega = sphere_area(self.d);
        let rho = rho.min(self.r_max);
        if rho <= 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        // constant part on [0, min(rho, r0)]
        let (m0, _) = cell_moments(0.0, rho.min(self.r[0]), self.d);
        total += values[0] * m0;
        for i in 0..self.n - 1 {
            let (a, b) = (self.r[i], self.r[i + 1]);
            if rho <= a {
                break;
            }
            let hi = rho.min(b);
            let (md, md1) = cell_moments(a, hi, self.d);
            let inv = 1.0 / (b - a);
            // linear g on [a, b]: g(r) = ga (b−r)/(b−a) + gb (r−a)/(b−a)
            total += values[i] * (b * md - md1) * inv + values[i + 1] * (md1 - a * md) * inv;
        }
        total * omega
    }
}

/// A radially symmetric function sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    /// Enforced non-negativity (densities). Test functions leave it unset.
    pub nonneg: bool,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, nonneg: bool) -> Result<Self> {
        Self::with_tol(grid, values, nonneg, DEFAULT_TOL_NEG)
    }

    /// As [`RadialField::new`] with an explicit clamping tolerance:
    /// values in [−tol_neg, 0) are clamped to 0, anything below is an error.
    pub fn with_tol(
        grid: Arc<RadialGrid>,
        mut values: Vec<f64>,
        nonneg: bool,
        tol_neg: f64,
    ) -> Result<Self> {
        if values.len() != grid.n {
            return Err(CoreError::Grid(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.n
            )));
        }
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(CoreError::Invariant(format!("non-finite field value {v}")));
            }
            if nonneg && *v < 0.0 {
                if *v >= -tol_neg {
                    *v = 0.0;
                } else {
                    return Err(CoreError::Invariant(format!(
                        "negative density value {v} below clamp tolerance {tol_neg}"
                    )));
                }
            }
        }
        Ok(RadialField {
            grid,
            values,
            nonneg,
        })
    }

    /// Construct from a closure of the radius.
    pub fn from_fn(grid: Arc<RadialGrid>, nonneg: bool, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.r.iter().map(|&r| f(r)).collect();
        Self::new(grid, values, nonneg)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n;
        RadialField {
            grid,
            values: vec![0.0; n],
            nonneg: true,
        }
    }

    /// ∫ g(|v|)|v|^k dv = ω_{d−1} ∫ g(r) r^{k+d−1} dr, with the weight
    /// r^{k+d−1} integrated exactly per cell against piecewise-linear g.
    pub fn integrate_radial(&self, k: f64) -> Result<f64> {
        let dd = self.grid.d as f64;
        let p = k + dd;
        if !(p > 0.0) {
            return Err(CoreError::Domain(format!(
                "integrate_radial: exponent k = {k} gives non-integrable r^{{k+d-1}} near 0"
            )));
        }
        if k == 0.0 {
            return Ok(self.mass());
        }
        let r = &self.grid.r;
        let v = &self.values;
        let (m0, _) = cell_moments_pow(0.0, r[0], p);
        let mut acc = v[0] * m0;
        for i in 0..self.grid.n - 1 {
            let (a, b) = (r[i], r[i + 1]);
            let (md, md1) = cell_moments_pow(a, b, p);
            let inv = 1.0 / (b - a);
            acc += v[i] * (b * md - md1) * inv + v[i + 1] * (md1 - a * md) * inv;
        }
        Ok(acc * sphere_area(self.grid.d))
    }

    /// L^p norm over ℝ^d; `p = f64::INFINITY` gives the sup of |values|.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self
                .values
                .iter()
                .fold(0.0_f64, |acc, &v| acc.max(v.abs())));
        }
        if !(p >= 1.0) {
            return Err(CoreError::Domain(format!("lp_norm: p = {p} < 1")));
        }
        let mut acc = 0.0;
        for (&w, &g) in self.grid.w.iter().zip(self.values.iter()) {
            acc += w * libm::pow(g.abs(), p);
        }
        Ok(libm::pow(acc, 1.0 / p))
    }

    /// Total mass ∫ g dv.
    pub fn mass(&self) -> f64 {
        self.grid
            .w
            .iter()
            .zip(self.values.iter())
            .map(|(&w, &g)| w * g)
            .sum()
    }

    /// Centered second-order derivative on the graded grid; even extension
    /// at the origin, one-sided at r_max.
    pub fn gradient(&self) -> Vec<f64> {
        let r = &self.grid.r;
        let v = &self.values;
        let n = self.grid.n;
        let mut g = vec![0.0; n];
        // even extension: mirror node at −r_0 carries v[0]
        {
            let hl = 2.0 * r[0];
            let hr = r[1] - r[0];
            g[0] = three_point_derivative(hl, hr, v[0], v[0], v[1]);
        }
        for i in 1..n - 1 {
            let hl = r[i] - r[i - 1];
            let hr = r[i + 1] - r[i];
            g[i] = three_point_derivative(hl, hr, v[i - 1], v[i], v[i + 1]);
        }
        {
            // one-sided second order at the boundary
            let h1 = r[n - 1] - r[n - 2];
            let h2 = r[n - 2] - r[n - 3];
            let a = (2.0 * h1 + h2) / (h1 * (h1 + h2));
            let b = -(h1 + h2) / (h1 * h2);
            let c = h1 / (h2 * (h1 + h2));
            g[n - 1] = a * v[n - 1] + b * v[n - 2] + c * v[n - 3];
        }
        g
    }

    /// Radial Laplacian Δ g = g'' + (d−1) g'/r by centered second-order
    /// differences with exact metric terms; even extension at the origin.
    pub fn laplacian(&self) -> Vec<f64> {
        let r = &self.grid.r;
        let v = &self.values;
        let n = self.grid.n;
        let dm1 = (self.grid.d - 1) as f64;
        let grad = self.gradient();
        let mut lap = vec![0.0; n];
        for i in 0..n {
            let (hl, vl) = if i == 0 {
                (2.0 * r[0], v[0])
            } else {
                (r[i] - r[i - 1], v[i - 1])
            };
            let (hr, vr) = if i == n - 1 {
                // reuse the left spacing with a linear extrapolation ghost
                let h = r[i] - r[i - 1];
                (h, v[i] + (v[i] - v[i - 1]))
            } else {
                (r[i + 1] - r[i], v[i + 1])
            };
            let second = 2.0 * (hl * vr + hr * vl - (hl + hr) * v[i]) / (hl * hr * (hl + hr));
            lap[i] = second + dm1 * grad[i] / r[i];
        }
        lap
    }

    /// Monotone cubic (Fritsch–Carlson) interpolant of the field.
    pub fn interpolant(&self) -> Interpolant {
        Interpolant::new(self)
    }
}

fn three_point_derivative(hl: f64, hr: f64, vl: f64, vc: f64, vr: f64) -> f64 {
    -hr / (hl * (hl + hr)) * vl + (hr - hl) / (hl * hr) * vc + hl / (hr * (hl + hr)) * vr
}

/// Monotone cubic Hermite interpolant in r, with an even-extension node at
/// r = 0 and zero extension beyond r_max.
#[derive(Debug, Clone)]
pub struct Interpolant {
    x: Vec<f64>,
    y: Vec<f64>,
    dydx: Vec<f64>,
}

impl Interpolant {
    fn new(field: &RadialField) -> Self {
        let r = &field.grid.r;
        let v = &field.values;
        let n = field.grid.n;
        // prepend r = 0 with the even-extension value (zero slope at 0)
        let f0 = {
            let (r0, r1) = (r[0], r[1]);
            (v[0] * r1 * r1 - v[1] * r0 * r0) / (r1 * r1 - r0 * r0)
        };
        let mut x = Vec::with_capacity(n + 1);
        let mut y = Vec::with_capacity(n + 1);
        x.push(0.0);
        y.push(f0);
        x.extend_from_slice(r);
        y.extend_from_slice(v);
        let m = x.len();
        // Fritsch–Carlson slopes
        let mut delta = vec![0.0; m - 1];
        for i in 0..m - 1 {
            delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        }
        let mut dydx = vec![0.0; m];
        dydx[0] = 0.0; // even extension
        for i in 1..m - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                dydx[i] = 0.0;
            } else {
                let w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
                let w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
                dydx[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        dydx[m - 1] = delta[m - 2];
        Interpolant { x, y, dydx }
    }

    /// Evaluate at radius `r` (≥ 0); returns 0 beyond the last node.
    pub fn eval(&self, r: f64) -> f64 {
        let m = self.x.len();
        if r <= 0.0 {
            return self.y[0];
        }
        if r > self.x[m - 1] {
            return 0.0;
        }
        let mut lo = 0usize;
        let mut hi = m - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.x[hi] - self.x[lo];
        let t = (r - self.x[lo]) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * self.y[lo] + h10 * h * self.dydx[lo] + h01 * self.y[hi] + h11 * h * self.dydx[hi]
    }
}

/// Unit-mass Gaussian density in d dimensions with per-coordinate
/// standard deviation `sigma`, as a radial profile.
pub fn gaussian_values(grid: &RadialGrid, sigma: f64) -> Vec<f64> {
    let dd = grid.d as f64;
    let log_norm = -0.5 * dd * libm::log(2.0 * core::f64::consts::PI * sigma * sigma);
    grid.r
        .iter()
        .map(|&r| {
            let lg = log_norm - r * r / (2.0 * sigma * sigma);
            if lg < -745.0 {
                0.0
            } else {
                libm::exp(lg)
            }
        })
        .collect()
}
