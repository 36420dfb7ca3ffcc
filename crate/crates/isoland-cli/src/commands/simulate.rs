//! `isoland simulate`: integrate the equation and write monitors.csv,
//! snapshot files, and manifest.json.

use std::time::Instant;

use isoland_core::evolve::{
    lp_monotonicity_report, run, second_moment_residual, EvolveConfig, Scheme,
};

use crate::config::{RunConfig, SchemeKind};
use crate::io::{fmt_float, write_csv, Manifest};
use crate::{CliError, CliResult};

use super::{build_field, ensure_out_dir, setup};

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<()> {
    let (params, grid) = setup(cfg)?;
    let dir = ensure_out_dir(cfg)?;
    let f0 = build_field(cfg, &grid)?;
    let scheme = match cfg.scheme {
        SchemeKind::Divergence => Scheme::Divergence,
        SchemeKind::NonDivergence => Scheme::NonDivergence,
    };
    let ecfg = EvolveConfig {
        scheme,
        dt: cfg.dt,
        t_end: cfg.t_end,
        monitor_every: cfg.monitor_every,
        snapshot_count: cfg.snapshot_count,
        p_list: cfg.p_list.clone(),
    };
    let started = Instant::now();
    let (states, monitors) = run(f0, &params, &ecfg)?;
    let wall = started.elapsed().as_secs_f64();

    // monitors.csv with one lp column per requested exponent
    let mut header: Vec<String> = vec!["t".into(), "mass".into(), "m1".into(), "m2".into(), "m2_rhs".into()];
    for &p in &cfg.p_list {
        header.push(format!("lp_{p}"));
    }
    header.extend(["sup_f".into(), "ell".into(), "a_min_ratio".into()]);
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = monitors
        .iter()
        .map(|m| {
            let mut row = vec![
                fmt_float(m.t),
                fmt_float(m.mass),
                fmt_float(m.m1),
                fmt_float(m.m2),
                fmt_float(m.m2_rhs),
            ];
            for &(_, v) in &m.lp {
                row.push(fmt_float(v));
            }
            row.push(fmt_float(m.sup_f));
            row.push(fmt_float(m.ell));
            row.push(fmt_float(m.a_min_ratio));
            row
        })
        .collect();
    write_csv(&dir.join("monitors.csv"), &header_refs, &rows)?;

    let snap_files = crate::io::write_snapshots(&dir, &states, cfg.grid_stretch)?;

    let mut manifest = Manifest::new("simulate", cfg, &params);
    manifest.wall_clock_secs = wall;

    // conservation and diagnostic outcomes
    let mass0 = monitors[0].mass;
    let mass_drift = monitors
        .iter()
        .map(|m| (m.mass - mass0).abs())
        .fold(0.0_f64, f64::max)
        / mass0.max(f64::MIN_POSITIVE);
    manifest
        .outcomes
        .insert("mass_drift_rel".into(), fmt_float(mass_drift));
    let clamped = states
        .iter()
        .map(|s| s.clamped_mass)
        .fold(0.0_f64, f64::max);
    manifest
        .outcomes
        .insert("clamped_mass_max".into(), fmt_float(clamped));
    if monitors.len() >= 3 {
        match second_moment_residual(&monitors) {
            Ok(r) => {
                manifest
                    .outcomes
                    .insert("second_moment_residual".into(), fmt_float(r));
            }
            Err(e) => {
                manifest
                    .outcomes
                    .insert("second_moment_residual".into(), format!("skipped: {e}"));
            }
        }
    }
    for &p in &cfg.p_list {
        let rep = lp_monotonicity_report(&monitors, p, &params, cfg.tol_mono)?;
        let verdict = if !rep.in_range {
            format!("outside monotone range (1, {}]", params.p_max_monotone)
        } else if rep.flagged == 0 {
            "monotone".into()
        } else {
            format!(
                "{} intervals above tolerance (max increase {})",
                rep.flagged,
                fmt_float(rep.max_increment)
            )
        };
        manifest.outcomes.insert(format!("lp_{p}"), verdict);
    }
    if cfg.gamma < params.gamma_star {
        manifest.warnings.push(format!(
            "gamma = {} is below gamma_star = {}: uniform boundedness is not guaranteed in this regime",
            cfg.gamma, params.gamma_star
        ));
    }

    manifest.add_file(&dir, "monitors.csv")?;
    for name in &snap_files {
        manifest.add_file(&dir, name)?;
    }
    manifest.write(&dir)?;

    if matches!(cfg.scheme, SchemeKind::Divergence) && mass_drift > 1e-6 {
        return Err(CliError::Invariant(format!(
            "divergence-form mass drift {mass_drift:e} exceeds 1e-6"
        )));
    }
    println!(
        "simulate: {} steps to t = {}, {} snapshots, mass drift {:.3e} ({:.2}s)",
        states.last().map(|s| s.step_index).unwrap_or(0),
        cfg.t_end,
        states.len(),
        mass_drift,
        wall
    );
    Ok(())
}
