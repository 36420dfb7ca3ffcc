//! `isoland moser`: run the iteration diagnostic on a stored trajectory
//! and write moser.csv.

use isoland_core::moser::{cascade_lower_bound_margins, moser_diagnostic};

use crate::config::RunConfig;
use crate::io::{fmt_float, read_snapshots, write_csv, Manifest};
use crate::{CliError, CliResult};

use super::ensure_out_dir;

pub fn cmd_moser(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate().map_err(CliError::Config)?;
    let params = isoland_core::Params::new(cfg.d, cfg.gamma, cfg.alpha)?;
    let dir = ensure_out_dir(cfg)?;
    let trajectory = read_snapshots(&dir, &params)?;
    if trajectory.len() < 3 {
        return Err(CliError::Config(format!(
            "stored trajectory has only {} snapshots; the diagnostic needs at least 3",
            trajectory.len()
        )));
    }
    let mut n_max = cfg.moser_n_max;
    let mut warnings = Vec::new();
    if n_max > 8 {
        eprintln!("warning: moser_n_max = {n_max} clipped to 8 (p_n growth limit)");
        warnings.push(format!("moser_n_max = {n_max} clipped to 8"));
        n_max = 8;
    }
    let t_final = if cfg.moser_t > 0.0 {
        cfg.moser_t
    } else {
        trajectory.last().unwrap().t
    };
    let schedule = moser_diagnostic(&trajectory, cfg.moser_p0, cfg.moser_r, t_final, n_max, &params)?;
    let margins = cascade_lower_bound_margins(&trajectory, &schedule)?;

    let mut rows = Vec::with_capacity(schedule.p_n.len());
    for n in 0..schedule.p_n.len() {
        rows.push(vec![
            n.to_string(),
            fmt_float(schedule.t_n[n]),
            fmt_float(schedule.r_n[n]),
            fmt_float(schedule.p_n[n]),
            fmt_float(schedule.log_e_n[n]),
            if n > 0 {
                fmt_float(schedule.ratios[n - 1])
            } else {
                String::new()
            },
            fmt_float(margins[n]),
        ]);
    }
    write_csv(
        &dir.join("moser.csv"),
        &["n", "t_n", "r_n", "p_n", "log_e_n", "ratio", "lower_bound_margin"],
        &rows,
    )?;

    let mut manifest = Manifest::new("moser", cfg, &params);
    manifest.warnings = warnings;
    manifest
        .outcomes
        .insert("extrapolated_sup".into(), fmt_float(schedule.extrapolated_sup));
    manifest
        .outcomes
        .insert("direct_sup".into(), fmt_float(schedule.direct_sup));
    let worst = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    manifest
        .outcomes
        .insert("worst_lower_bound_margin".into(), fmt_float(worst));
    manifest.add_file(&dir, "moser.csv")?;
    manifest.write(&dir)?;

    if worst < -1e-6 {
        return Err(CliError::Invariant(format!(
            "cascade lower-bound fact violated by {:e} in log scale",
            -worst
        )));
    }
    println!(
        "moser: {} levels, extrapolated sup {:.6e}, direct sup {:.6e}",
        schedule.p_n.len(),
        schedule.extrapolated_sup,
        schedule.direct_sup
    );
    Ok(())
}
