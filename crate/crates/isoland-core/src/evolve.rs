//! Semi-implicit time integration of the radial equation, either in
//! divergence form ∂t f = div(a∇f − f∇a) (a lumped finite-element flux
//! discretization that conserves mass to roundoff) or in non-divergence
//! form ∂t f = aΔf + α|2+γ| f h (finite differences). In both schemes the
//! coefficients a, h are frozen at the beginning of the step and the
//! diffusion is implicit, so the step cost is one tridiagonal solve plus
//! one potential evaluation.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{RadialField, RadialGrid};
use crate::linalg::{GenTridiag, Tridiag};
use crate::params::{sphere_area, Params};
use crate::potentials::{compute_potentials, PotentialPair};
use crate::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Divergence,
    NonDivergence,
}

/// Solution plus lagged coefficients at one time level.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub f: RadialField,
    /// Coefficients evaluated from `f` (the freeze point of the next step).
    pub pair: PotentialPair,
    pub step_index: usize,
    /// Cumulative mass removed by negativity clamping.
    pub clamped_mass: f64,
}

impl SolverState {
    /// Initial state with freshly computed potentials.
    pub fn new(f: RadialField, params: &Params) -> Result<Self> {
        let pair = compute_potentials(&f, params)?;
        Ok(SolverState {
            t: 0.0,
            f,
            pair,
            step_index: 0,
            clamped_mass: 0.0,
        })
    }
}

/// Conserved/monitored quantities at one time level.
#[derive(Debug, Clone)]
pub struct MonitorRecord {
    pub t: f64,
    pub mass: f64,
    /// |∫ v f dv|: identically zero for the radial representation, kept as
    /// a symmetry placeholder in the record layout.
    pub m1: f64,
    pub m2: f64,
    /// 2(d+2+γ)∫ f a dv, the exact rate of the second moment.
    pub m2_rhs: f64,
    pub lp: Vec<(f64, f64)>,
    pub sup_f: f64,
    /// min over nodes of a(r)/⟨r⟩^{2+γ}.
    pub a_min_ratio: f64,
    /// ℓ of the pointwise lower bound (evaluated, not verified).
    pub ell: f64,
}

/// Integration controls for [`run`].
#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub monitor_every: usize,
    pub snapshot_count: usize,
    pub p_list: Vec<f64>,
}

fn weighted_dot(grid: &RadialGrid, x: &[f64], y: &[f64]) -> f64 {
    grid.w
        .iter()
        .zip(x.iter())
        .zip(y.iter())
        .map(|((&w, &a), &b)| w * a * b)
        .sum()
}

/// Cell measures ∫_{r_i}^{r_{i+1}} ω r^{d−1} dr, length n−1.
fn cell_measures(grid: &RadialGrid) -> Vec<f64> {
    let omega = sphere_area(grid.d);
    let dd = grid.d as f64;
    (0..grid.n - 1)
        .map(|i| omega * (libm::pow(grid.r[i + 1], dd) - libm::pow(grid.r[i], dd)) / dd)
        .collect()
}

/// Stiffness form ∫ c |∇φ|² dμ for the hat basis with a cell-averaged
/// coefficient, Dirichlet row at r_max.
pub(crate) fn stiffness(grid: &RadialGrid, coeff: &[f64]) -> Tridiag {
    let n = grid.n;
    let mu = cell_measures(grid);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let h = grid.r[i + 1] - grid.r[i];
        let c = 0.5 * (coeff[i] + coeff[i + 1]);
        let s = c * mu[i] / (h * h);
        diag[i] += s;
        diag[i + 1] += s;
        off[i] -= s;
    }
    Tridiag { diag, off }
}

/// Non-uniform second-order radial Laplacian rows (even extension at the
/// origin); the last row is left to the caller's boundary handling.
fn laplacian_matrix(grid: &RadialGrid) -> GenTridiag {
    let n = grid.n;
    let r = &grid.r;
    let dm1 = (grid.d - 1) as f64;
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let (hl, mirror) = if i == 0 {
            (2.0 * r[0], true)
        } else {
            (r[i] - r[i - 1], false)
        };
        let hr = r[i + 1] - r[i];
        let cl = 2.0 / (hl * (hl + hr));
        let cc = -2.0 / (hl * hr);
        let cr = 2.0 / (hr * (hl + hr));
        let gl = -hr / (hl * (hl + hr));
        let gc = (hr - hl) / (hl * hr);
        let gr = hl / (hr * (hl + hr));
        let m = dm1 / r[i];
        let (al, ac, ar) = (cl + m * gl, cc + m * gc, cr + m * gr);
        if mirror {
            diag[i] = al + ac;
            upper[i] = ar;
        } else {
            lower[i - 1] = al;
            diag[i] = ac;
            upper[i] = ar;
        }
    }
    GenTridiag { lower, diag, upper }
}

/// One semi-implicit step: coefficients from `state.pair`, implicit
/// diffusion, explicit drift/reaction, Dirichlet f = 0 at r_max, clamp,
/// recompute potentials.
pub fn step(state: &SolverState, dt: f64, scheme: Scheme, params: &Params) -> Result<SolverState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::Domain(format!("step: dt = {dt} must be positive")));
    }
    let grid = &state.f.grid;
    let n = grid.n;
    let f = &state.f.values;
    let a = &state.pair.a.values;
    let h = &state.pair.h.values;
    let kappa_react = (2.0 + params.gamma).abs() * params.alpha;

    let mut new_vals = match scheme {
        Scheme::Divergence => {
            // (M + dt S_a) f⁺ = M f + dt D, D_i = ∫ f ∇a·∇φ_i dμ
            let mut sys = stiffness(grid, a);
            let mu = cell_measures(grid);
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                rhs[i] = grid.w[i] * f[i];
            }
            for i in 0..n - 1 {
                let hcell = grid.r[i + 1] - grid.r[i];
                let da = a[i + 1] - a[i];
                let fc = 0.5 * (f[i] + f[i + 1]);
                let flux = fc * da * mu[i] / (hcell * hcell);
                rhs[i] -= dt * flux;
                rhs[i + 1] += dt * flux;
            }
            for i in 0..n {
                sys.diag[i] = grid.w[i] + dt * sys.diag[i];
            }
            for o in sys.off.iter_mut() {
                *o *= dt;
            }
            // Dirichlet at the outer boundary
            sys.diag[n - 1] = 1.0;
            sys.off[n - 2] = 0.0;
            rhs[n - 1] = 0.0;
            sys.solve(&rhs).map_err(|e| match e {
                CoreError::Numerical { what, .. } => CoreError::Numerical {
                    step: state.step_index,
                    what,
                },
                other => other,
            })?
        }
        Scheme::NonDivergence => {
            // (I − dt diag(a) L) f⁺ = f + dt α|2+γ| f h
            let lap = laplacian_matrix(grid);
            let mut sys = GenTridiag {
                lower: vec![0.0; n - 1],
                diag: vec![0.0; n],
                upper: vec![0.0; n - 1],
            };
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                sys.diag[i] = 1.0 - dt * a[i] * lap.diag[i];
                if i > 0 {
                    sys.lower[i - 1] = -dt * a[i] * lap.lower[i - 1];
                }
                if i + 1 < n {
                    sys.upper[i] = -dt * a[i] * lap.upper[i];
                }
                rhs[i] = f[i] + dt * kappa_react * f[i] * h[i];
            }
            sys.diag[n - 1] = 1.0;
            sys.lower[n - 2] = 0.0;
            rhs[n - 1] = 0.0;
            sys.solve(&rhs).map_err(|e| match e {
                CoreError::Numerical { what, .. } => CoreError::Numerical {
                    step: state.step_index,
                    what,
                },
                other => other,
            })?
        }
    };

    // clamp with accounting
    let mut clamped = 0.0;
    for (i, v) in new_vals.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(CoreError::Numerical {
                step: state.step_index,
                what: format!("non-finite value {v} at node {i}"),
            });
        }
        if *v < 0.0 {
            clamped += grid.w[i] * (-*v);
            *v = 0.0;
        }
    }
    let f_new = RadialField::with_tol(Arc::clone(grid), new_vals, true, 0.0)?;
    let pair = compute_potentials(&f_new, params)?;
    Ok(SolverState {
        t: state.t + dt,
        f: f_new,
        pair,
        step_index: state.step_index + 1,
        clamped_mass: state.clamped_mass + clamped,
    })
}

/// Monitor quantities of a state.
pub fn monitor(state: &SolverState, params: &Params, p_list: &[f64]) -> Result<MonitorRecord> {
    let f = &state.f;
    let grid = &f.grid;
    let mass = f.mass();
    let m2 = f.integrate_radial(2.0)?;
    let dd = params.d as f64;
    let m2_rhs = 2.0 * (dd + 2.0 + params.gamma) * weighted_dot(grid, &f.values, &state.pair.a.values);
    let mut lp = Vec::with_capacity(p_list.len());
    for &p in p_list {
        lp.push((p, f.lp_norm(p)?));
    }
    let sup_f = f.lp_norm(f64::INFINITY)?;
    let e = 0.5 * (2.0 + params.gamma);
    let a_min_ratio = grid
        .r
        .iter()
        .zip(state.pair.a.values.iter())
        .map(|(&r, &a)| a / libm::pow(1.0 + r * r, e))
        .fold(f64::INFINITY, f64::min);
    let ell = if mass > 0.0 {
        let l12 = mass + f.integrate_radial(2.0)?;
        let r_conc = 2.0 * l12 / mass;
        0.5 * params.c_coupling * mass * libm::pow(r_conc, 2.0 + params.gamma)
    } else {
        0.0
    };
    let rec = MonitorRecord {
        t: state.t,
        mass,
        m1: 0.0,
        m2,
        m2_rhs,
        lp,
        sup_f,
        a_min_ratio,
        ell,
    };
    if !(rec.mass.is_finite() && rec.m2.is_finite() && rec.m2_rhs.is_finite()) {
        return Err(CoreError::Numerical {
            step: state.step_index,
            what: "non-finite monitor entry".to_string(),
        });
    }
    Ok(rec)
}

/// Integrate to `t_end` with fixed dt; snapshots are evenly spaced in step
/// index (first and last always included), monitors every `monitor_every`
/// steps (and at the final step).
pub fn run(
    f0: RadialField,
    params: &Params,
    cfg: &EvolveConfig,
) -> Result<(Vec<SolverState>, Vec<MonitorRecord>)> {
    if !(cfg.t_end > 0.0) || !(cfg.dt > 0.0) {
        return Err(CoreError::Domain(format!(
            "run: dt = {} and t_end = {} must be positive",
            cfg.dt, cfg.t_end
        )));
    }
    if cfg.monitor_every == 0 || cfg.snapshot_count < 2 {
        return Err(CoreError::Domain(
            "run: monitor_every must be >= 1 and snapshot_count >= 2".to_string(),
        ));
    }
    let total_steps = libm::ceil(cfg.t_end / cfg.dt - 1e-9) as usize;
    let snap_at = |k: usize| -> usize {
        (k * total_steps).div_euclid(cfg.snapshot_count - 1)
    };
    let mut state = SolverState::new(f0, params)?;
    let mut snapshots = Vec::with_capacity(cfg.snapshot_count);
    let mut monitors = Vec::new();
    monitors.push(monitor(&state, params, &cfg.p_list)?);
    let mut next_snap = 0usize;
    while next_snap < cfg.snapshot_count && snap_at(next_snap) == 0 {
        snapshots.push(state.clone());
        next_snap += 1;
    }
    for s in 1..=total_steps {
        state = step(&state, cfg.dt, cfg.scheme, params)?;
        if s % cfg.monitor_every == 0 || s == total_steps {
            monitors.push(monitor(&state, params, &cfg.p_list)?);
        }
        while next_snap < cfg.snapshot_count && snap_at(next_snap) == s {
            snapshots.push(state.clone());
            next_snap += 1;
        }
    }
    Ok((snapshots, monitors))
}

/// Max relative residual of dM₂/dt against 2(d+2+γ)∫fa over interior
/// monitor records (centered differences).
pub fn second_moment_residual(monitors: &[MonitorRecord]) -> Result<f64> {
    if monitors.len() < 3 {
        return Err(CoreError::TooFewRecords {
            got: monitors.len(),
            need: 3,
        });
    }
    let mut worst = 0.0_f64;
    for i in 1..monitors.len() - 1 {
        let rhs = monitors[i].m2_rhs;
        if rhs == 0.0 {
            continue;
        }
        let slope = (monitors[i + 1].m2 - monitors[i - 1].m2)
            / (monitors[i + 1].t - monitors[i - 1].t);
        worst = worst.max(((slope - rhs) / rhs).abs());
    }
    Ok(worst)
}

/// Per-interval L^p increments against the monotonicity tolerance.
#[derive(Debug, Clone)]
pub struct LpReport {
    pub p: f64,
    /// Whether p lies in the admissible range [1, (d+γ)/(−2−γ)].
    pub in_range: bool,
    /// 4(p−1)[1/p − (−2−γ)/(d+γ)], nonnegative exactly on the admissible range.
    pub dissipation_factor: f64,
    /// Relative increments (‖f‖_p(t_{k+1}) − ‖f‖_p(t_k))/‖f‖_p(t_k).
    pub increments: Vec<f64>,
    pub flagged: usize,
    pub max_increment: f64,
    pub tol_per_interval: f64,
}

pub fn lp_monotonicity_report(
    monitors: &[MonitorRecord],
    p: f64,
    params: &Params,
    tol_mono: f64,
) -> Result<LpReport> {
    let series: Vec<f64> = monitors
        .iter()
        .map(|m| {
            m.lp.iter()
                .find(|(q, _)| *q == p)
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    CoreError::Domain(format!("lp_monotonicity_report: p = {p} not monitored"))
                })
        })
        .collect::<Result<_>>()?;
    let dd = params.d as f64;
    let dissipation_factor =
        4.0 * (p - 1.0) * (1.0 / p - (-2.0 - params.gamma) / (dd + params.gamma));
    let in_range = (1.0..=params.p_max_monotone).contains(&p);
    let mut increments = Vec::with_capacity(series.len().saturating_sub(1));
    let mut flagged = 0usize;
    let mut max_increment = f64::NEG_INFINITY;
    for k in 0..series.len() - 1 {
        let inc = if series[k] > 0.0 {
            (series[k + 1] - series[k]) / series[k]
        } else {
            0.0
        };
        if inc > tol_mono {
            flagged += 1;
        }
        max_increment = max_increment.max(inc);
        increments.push(inc);
    }
    Ok(LpReport {
        p,
        in_range,
        dissipation_factor,
        increments,
        flagged,
        max_increment,
        tol_per_interval: tol_mono,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_values, make_grid, Grading};
    use core::f64::consts::PI;

    fn heat_setup(n: usize) -> (Params, SolverState) {
        let params = Params::new(3, -2.0, 1.0).unwrap();
        let g = Arc::new(make_grid(3, 12.0, n, Grading::Uniform).unwrap());
        let f = RadialField::new(g.clone(), gaussian_values(&g, 1.0), true).unwrap();
        (params, SolverState::new(f, &params).unwrap())
    }

    #[test]
    fn heat_step_matches_manual_implicit_euler() {
        // γ = −2: a ≡ c‖f‖₁, divergence step must equal the hand-built
        // implicit heat step bit for bit
        let (params, state) = heat_setup(256);
        let dt = 1e-4;
        let next = step(&state, dt, Scheme::Divergence, &params).unwrap();

        let grid = &state.f.grid;
        let n = grid.n;
        let kappa = params.c_coupling * state.f.mass();
        let coeff = vec![kappa; n];
        let mut sys = stiffness(grid, &coeff);
        let mut rhs: Vec<f64> = (0..n).map(|i| grid.w[i] * state.f.values[i]).collect();
        for i in 0..n {
            sys.diag[i] = grid.w[i] + dt * sys.diag[i];
        }
        for o in sys.off.iter_mut() {
            *o *= dt;
        }
        sys.diag[n - 1] = 1.0;
        sys.off[n - 2] = 0.0;
        rhs[n - 1] = 0.0;
        let manual = sys.solve(&rhs).unwrap();
        for i in 0..n {
            assert_eq!(next.f.values[i], manual[i].max(0.0), "node {i}");
        }
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = Arc::new(make_grid(3, 10.0, 64, Grading::Uniform).unwrap());
        let f = RadialField::zeros(g);
        let cfg = EvolveConfig {
            scheme: Scheme::Divergence,
            dt: 1e-3,
            t_end: 5e-3,
            monitor_every: 1,
            snapshot_count: 2,
            p_list: vec![1.0],
        };
        let (snaps, mons) = run(f, &params, &cfg).unwrap();
        assert!(snaps.last().unwrap().f.values.iter().all(|&v| v == 0.0));
        assert!(mons.iter().all(|m| m.mass == 0.0));
    }

    #[test]
    fn heat_variance_growth() {
        // M₂(t) = M₂(0) + 2d κ t with κ = c_{3,−2}‖f‖₁ = 1/(2π²)
        let (params, state) = heat_setup(256);
        let cfg = EvolveConfig {
            scheme: Scheme::Divergence,
            dt: 5e-4,
            t_end: 0.05,
            monitor_every: 10,
            snapshot_count: 2,
            p_list: vec![],
        };
        let (_, mons) = run(state.f.clone(), &params, &cfg).unwrap();
        let kappa = 1.0 / (2.0 * PI * PI);
        let expected = 6.0 * kappa * 0.05;
        let measured = mons.last().unwrap().m2 - mons[0].m2;
        assert!(
            ((measured - expected) / expected).abs() < 1e-2,
            "{measured} vs {expected}"
        );
        // the rate is 3/π² · mass², with mass = 1 up to quadrature error
        let mass = mons[0].mass;
        assert!((mons[0].m2_rhs - 3.0 / (PI * PI) * mass * mass).abs() < 1e-12);
        assert!((mons[0].m2_rhs - 3.0 / (PI * PI)).abs() < 3e-3);
        // and the centered-difference residual is within 1%
        assert!(second_moment_residual(&mons).unwrap() < 1e-2);
    }

    #[test]
    fn mass_conservation_divergence() {
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let g = Arc::new(make_grid(3, 12.0, 256, Grading::Uniform).unwrap());
        let f = RadialField::new(g.clone(), gaussian_values(&g, 1.0), true).unwrap();
        let cfg = EvolveConfig {
            scheme: Scheme::Divergence,
            dt: 1e-3,
            t_end: 0.05,
            monitor_every: 5,
            snapshot_count: 2,
            p_list: vec![],
        };
        let (snaps, mons) = run(f, &params, &cfg).unwrap();
        let m0 = mons[0].mass;
        for m in mons.iter() {
            assert!((m.mass / m0 - 1.0).abs() < 1e-12, "t={}: {}", m.t, m.mass);
        }
        assert!(snaps.last().unwrap().clamped_mass <= 1e-8 * m0);
    }

    #[test]
    fn schemes_cross_validate() {
        // the two schemes split the first-order terms differently, so their
        // cross-difference carries O(dt) plus spatial error that is slowest
        // at the origin node; refine dt and h together over three levels
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let mut diffs = Vec::new();
        let mut sup0 = 0.0_f64;
        for (n, dt, steps) in [
            (128usize, 5e-4, 20usize),
            (256, 2.5e-4, 40),
            (512, 1.25e-4, 80),
        ] {
            let g = Arc::new(make_grid(3, 12.0, n, Grading::Uniform).unwrap());
            let f = RadialField::new(g.clone(), gaussian_values(&g, 1.0), true).unwrap();
            let mut sd = SolverState::new(f.clone(), &params).unwrap();
            let mut sn = SolverState::new(f, &params).unwrap();
            for _ in 0..steps {
                sd = step(&sd, dt, Scheme::Divergence, &params).unwrap();
                sn = step(&sn, dt, Scheme::NonDivergence, &params).unwrap();
            }
            let diff = sd
                .f
                .values
                .iter()
                .zip(sn.f.values.iter())
                .fold(0.0_f64, |m, (&x, &y)| m.max((x - y).abs()));
            if diffs.is_empty() {
                sup0 = sd.f.lp_norm(f64::INFINITY).unwrap();
            }
            diffs.push(diff);
        }
        assert!(
            diffs[0] < 5e-4 * sup0,
            "schemes disagree too much: {diffs:?} vs sup {sup0}"
        );
        assert!(
            diffs[2] < diffs[0] / 1.5,
            "cross-difference not shrinking: {diffs:?}"
        );
    }

    #[test]
    fn lp_monotonicity_gamma_225() {
        let params = Params::new(3, -2.25, 1.0).unwrap();
        let g = Arc::new(make_grid(3, 12.0, 192, Grading::Uniform).unwrap());
        let f = RadialField::new(g.clone(), gaussian_values(&g, 1.0), true).unwrap();
        let cfg = EvolveConfig {
            scheme: Scheme::Divergence,
            dt: 1e-3,
            t_end: 0.05,
            monitor_every: 1,
            snapshot_count: 2,
            p_list: vec![1.0, 2.0, 3.0, 4.0],
        };
        let (_, mons) = run(f, &params, &cfg).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let rep = lp_monotonicity_report(&mons, p, &params, 1e-8).unwrap();
            assert!(rep.in_range, "p={p}");
            assert_eq!(rep.flagged, 0, "p={p}: max inc {}", rep.max_increment);
            assert!(rep.dissipation_factor >= -1e-12);
        }
        let outside = lp_monotonicity_report(&mons, 4.0, &params, 1e-8).unwrap();
        assert!(!outside.in_range);
        assert!(outside.dissipation_factor < 0.0);
        assert!(lp_monotonicity_report(&mons, 2.5, &params, 1e-8).is_err());
    }

    #[test]
    fn step_rejects_bad_dt_and_detects_nan() {
        let (params, state) = heat_setup(64);
        assert!(step(&state, -1.0, Scheme::Divergence, &params).is_err());
        assert!(step(&state, 0.0, Scheme::Divergence, &params).is_err());
    }

    #[test]
    fn run_snapshot_cadence() {
        let (params, state) = heat_setup(64);
        let cfg = EvolveConfig {
            scheme: Scheme::Divergence,
            dt: 1e-3,
            t_end: 1e-2,
            monitor_every: 2,
            snapshot_count: 5,
            p_list: vec![1.0],
        };
        let (snaps, mons) = run(state.f.clone(), &params, &cfg).unwrap();
        assert_eq!(snaps.len(), 5);
        assert_eq!(snaps[0].step_index, 0);
        assert_eq!(snaps[4].step_index, 10);
        assert!(mons.len() >= 6);
        // monotone times
        for w in snaps.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }
}
