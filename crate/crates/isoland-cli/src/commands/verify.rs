//! `isoland verify`: evaluate the inequality suite against the configured
//! density, writing inequalities.csv and summary.json.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use isoland_core::inequalities::{
    eps_poincare_check, hardy_check, lemma21_check, sigma_report, weighted_quotient,
    weighted_sobolev_check, BallSpec, CubeSpec, Family, TestFunction,
};
use isoland_core::potentials::compute_potentials;
use isoland_core::CoreError;

use crate::config::RunConfig;
use crate::io::{fmt_float, write_csv, Manifest};
use crate::{CliError, CliResult};

use super::{build_field, ensure_out_dir, setup};

const REL_TOL: f64 = 1e-8;

#[derive(Serialize)]
struct Summary {
    functions: usize,
    checks: usize,
    violations: usize,
    hardy_min_margin: f64,
    lemma21_min_margin: f64,
    sobolev_max_constant: f64,
    eps_poincare_slope: f64,
    sigma_sup: f64,
    sigma_slope: f64,
    sigma_eta: f64,
    sigma_p_of_s: f64,
    cubes_evaluated: usize,
    cubes_skipped_unresolved: usize,
    weighted_quotient: f64,
    weighted_quotient_floor: f64,
    weighted_quotient_above_floor: bool,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult<()> {
    let (params, grid) = setup(cfg)?;
    let dir = ensure_out_dir(cfg)?;
    let density = build_field(cfg, &grid)?;
    if density.mass() <= 0.0 {
        return Err(CliError::Config(
            "config field initial: verify needs a density with positive mass".into(),
        ));
    }
    let pair = compute_potentials(&density, &params)?;

    // Seeded test-function suite cycling the three families.
    let nfun = cfg.suite_functions.max(3);
    let mut suite: Vec<TestFunction> = Vec::with_capacity(nfun);
    let r_bump_max = cfg.r_max / 3.0;
    for i in 0..nfun {
        let frac = i as f64 / (nfun - 1) as f64;
        let phi = match i % 3 {
            0 => {
                let sigma = 0.03 * (3.0 / 0.03_f64).powf(frac);
                TestFunction::gaussian(Arc::clone(&grid), sigma)?
            }
            1 => {
                let r = 0.5 * (r_bump_max / 0.5).powf(frac);
                TestFunction::bump(Arc::clone(&grid), r)?
            }
            _ => TestFunction::random_smooth(Arc::clone(&grid), r_bump_max, cfg.seed + i as u64)?,
        };
        suite.push(phi);
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut violations = 0usize;
    let mut hardy_min = f64::INFINITY;
    let mut lemma_min = f64::INFINITY;
    let mut sob_max = 0.0_f64;
    let record = |rows: &mut Vec<Vec<String>>,
                      idx: usize,
                      family: &str,
                      scale: f64,
                      check: &str,
                      lhs: f64,
                      rhs: f64|
     -> bool {
        let ok = lhs <= rhs * (1.0 + REL_TOL) + f64::MIN_POSITIVE;
        rows.push(vec![
            idx.to_string(),
            family.into(),
            fmt_float(scale),
            check.into(),
            fmt_float(lhs),
            fmt_float(rhs),
            if ok { "1".into() } else { "0".into() },
        ]);
        ok
    };
    for (i, phi) in suite.iter().enumerate() {
        let family = match phi.family {
            Family::Gaussian => "gaussian",
            Family::Bump => "bump",
            Family::RandomSmooth => "random_smooth",
            Family::OptimizerOutput => "optimizer",
        };
        let (hl, hr) = hardy_check(phi, params.gamma, params.d)?;
        if !record(&mut rows, i, family, phi.r_supp, "hardy", hl, hr) {
            violations += 1;
        }
        if hr > 0.0 {
            hardy_min = hardy_min.min((hr - hl) / hr);
        }
        let (ll, lr) = lemma21_check(phi, &pair, &params)?;
        if !record(&mut rows, i, family, phi.r_supp, "coefficient_hardy", ll, lr) {
            violations += 1;
        }
        if lr > 0.0 {
            lemma_min = lemma_min.min((lr - ll) / lr);
        }
        let (sl, sr, sc) = weighted_sobolev_check(phi, &pair, &params)?;
        rows.push(vec![
            i.to_string(),
            family.into(),
            fmt_float(phi.r_supp),
            "weighted_sobolev".into(),
            fmt_float(sl),
            fmt_float(sr),
            "1".into(),
        ]);
        sob_max = sob_max.max(sc);
    }

    // ε-Poincaré envelope on a moderately concentrated test function.
    let phi_eps = TestFunction::gaussian(Arc::clone(&grid), 0.1)?;
    let eps_list = [1.0, 0.3, 0.1, 0.03, 0.01];
    let eps_rep = eps_poincare_check(&phi_eps, &pair, &eps_list, phi_eps.r_supp, &params)?;
    for (k, &(eps, kval)) in eps_rep.margins.iter().enumerate() {
        rows.push(vec![
            (suite.len() + k).to_string(),
            "gaussian".into(),
            fmt_float(eps),
            "eps_poincare_k".into(),
            fmt_float(kval),
            fmt_float(f64::INFINITY),
            "1".into(),
        ]);
    }

    // Random dyadic cube suite inside B_4; unresolved cubes are skipped.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5161_6d61_4375_6265);
    let mut cubes: Vec<CubeSpec> = Vec::new();
    let mut skipped = 0usize;
    let center_bound = cfg.r_max.min(4.0);
    let s = 1.6;
    let r_exp = 2.0;
    for j in 0..cfg.suite_cubes {
        let level = 1 + (j % 6) as u32;
        let side = (0.5_f64).powi(level as i32);
        let mut center = vec![0.0; params.d];
        loop {
            let mut norm2 = 0.0;
            for c in center.iter_mut() {
                *c = uniform(&mut rng, -center_bound, center_bound);
                norm2 += *c * *c;
            }
            if norm2.sqrt() + side <= center_bound {
                break;
            }
        }
        let q = CubeSpec {
            center,
            side,
            level,
        };
        match isoland_core::inequalities::sigma(&q, &pair.h, &pair.a, r_exp, s, params.d) {
            Ok(_) => cubes.push(q),
            Err(CoreError::Grid(_)) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if cubes.len() < 3 {
        return Err(CliError::Config(format!(
            "only {} of {} cubes are resolved on this grid; refine n_cells",
            cubes.len(),
            cfg.suite_cubes
        )));
    }
    let sig = sigma_report(&cubes, &pair.h, &pair.a, r_exp, s, &params)?;

    // Weighted spectral quotient over representative balls.
    let balls = vec![
        BallSpec {
            center: vec![0.0; params.d],
            radius: 0.5,
        },
        BallSpec {
            center: vec![0.0; params.d],
            radius: 1.0,
        },
        BallSpec {
            center: {
                let mut c = vec![0.0; params.d];
                c[0] = 1.0;
                c
            },
            radius: 0.5,
        },
    ];
    let wq = weighted_quotient(&pair, &balls)?;
    let wq_floor = 1.0 / 96.0;

    write_csv(
        &dir.join("inequalities.csv"),
        &["index", "family", "scale", "check", "lhs", "rhs", "satisfied"],
        &rows,
    )?;
    let summary = Summary {
        functions: suite.len(),
        checks: rows.len(),
        violations,
        hardy_min_margin: hardy_min,
        lemma21_min_margin: lemma_min,
        sobolev_max_constant: sob_max,
        eps_poincare_slope: eps_rep.slope,
        sigma_sup: sig.sigma_value,
        sigma_slope: sig.slope_estimate,
        sigma_eta: sig.eta,
        sigma_p_of_s: sig.p_of_s,
        cubes_evaluated: cubes.len(),
        cubes_skipped_unresolved: skipped,
        weighted_quotient: wq,
        weighted_quotient_floor: wq_floor,
        weighted_quotient_above_floor: wq >= wq_floor,
    };
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Config(format!("summary serialization: {e}")))?;
    std::fs::write(dir.join("summary.json"), text)
        .map_err(|e| CliError::Config(format!("cannot write summary: {e}")))?;

    let mut manifest = Manifest::new("verify", cfg, &params);
    manifest
        .outcomes
        .insert("violations".into(), violations.to_string());
    manifest.add_file(&dir, "inequalities.csv")?;
    manifest.add_file(&dir, "summary.json")?;
    manifest.write(&dir)?;

    if violations > 0 {
        return Err(CliError::Invariant(format!(
            "{violations} inequality checks failed (see inequalities.csv)"
        )));
    }
    println!(
        "verify: {} functions, {} checks, 0 violations; sigma sup {:.6e}, quotient {:.6e}",
        suite.len(),
        rows.len(),
        sig.sigma_value,
        wq
    );
    Ok(())
}
