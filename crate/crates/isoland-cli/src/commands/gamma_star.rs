//! `isoland gamma-star`: print the critical exponent and the admissibility
//! table for a given dimension.

use isoland_core::params::{gamma_star, gamma_star_bisect};
use isoland_core::Params;

use crate::{CliError, CliResult};

pub fn cmd_gamma_star(d: usize) -> CliResult<()> {
    if d < 3 {
        return Err(CliError::Config(format!(
            "dimension d = {d} must be >= 3"
        )));
    }
    let closed = gamma_star(d)?;
    let bisect = gamma_star_bisect(d)?;
    println!("d = {d}");
    println!("gamma_star (closed form) = {closed:.12}");
    println!("gamma_star (bisection)   = {bisect:.12}");
    println!("agreement                = {:.3e}", (closed - bisect).abs());
    println!();
    println!(
        "{:>10} {:>10} {:>10} {:>16} {:>14} {:>12}",
        "gamma", "m", "q", "p_max_monotone", "p_min_linfty", "admissible"
    );
    let dd = d as f64;
    // Sample gamma from the mild end down to the Coulomb endpoint.
    let samples = 9usize;
    for k in 0..samples {
        let gamma = -2.0 + (k as f64 / (samples - 1) as f64) * (-dd + 2.0);
        let p = Params::new(d, gamma, 1.0)?;
        let p_max = if p.p_max_monotone.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.6}", p.p_max_monotone)
        };
        println!(
            "{:>10.4} {:>10.6} {:>10.6} {:>16} {:>14.6} {:>12}",
            gamma,
            p.m_exp,
            p.q_exp,
            p_max,
            p.p_min_linfty,
            if gamma >= closed { "yes" } else { "no" }
        );
    }
    Ok(())
}
