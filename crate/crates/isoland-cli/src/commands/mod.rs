//! The five subcommands behind the `isoland` binary.

mod eigen;
mod gamma_star;
mod moser;
mod simulate;
mod verify;

pub use eigen::cmd_eigen;
pub use gamma_star::cmd_gamma_star;
pub use moser::cmd_moser;
pub use simulate::cmd_simulate;
pub use verify::cmd_verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use isoland_core::grid::{gaussian_values, make_grid, RadialField, RadialGrid};
use isoland_core::Params;

use crate::config::{Initial, RunConfig};
use crate::{CliError, CliResult};

/// Build physical parameters and the radial grid from a validated config.
pub fn setup(cfg: &RunConfig) -> CliResult<(Params, Arc<RadialGrid>)> {
    cfg.validate().map_err(CliError::Config)?;
    let params = Params::new(cfg.d, cfg.gamma, cfg.alpha)?;
    let grid = Arc::new(make_grid(cfg.d, cfg.r_max, cfg.n_cells, cfg.grading())?);
    Ok((params, grid))
}

/// Materialize the configured initial condition on a grid.
pub fn build_field(cfg: &RunConfig, grid: &Arc<RadialGrid>) -> CliResult<RadialField> {
    let field = match &cfg.initial {
        Initial::Gaussian(sigma) => {
            if !(*sigma > 0.0) {
                return Err(CliError::Config(format!(
                    "config field initial: gaussian width {sigma} must be positive"
                )));
            }
            RadialField::new(Arc::clone(grid), gaussian_values(grid, *sigma), true)?
        }
        Initial::Bump(radius) => {
            if !(*radius > 0.0) || *radius > grid.r_max {
                return Err(CliError::Config(format!(
                    "config field initial: bump radius {radius} outside (0, r_max]"
                )));
            }
            let rr = *radius;
            RadialField::from_fn(Arc::clone(grid), true, |r| {
                let x = r / rr;
                if x < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp() * std::f64::consts::E
                } else {
                    0.0
                }
            })?
        }
        Initial::TwoBumps => {
            let narrow = gaussian_values(grid, 0.5);
            let values: Vec<f64> = grid
                .r
                .iter()
                .zip(&narrow)
                .map(|(&r, &g)| g + 0.3 * (-(r - 2.0) * (r - 2.0) / 0.5).exp())
                .collect();
            RadialField::new(Arc::clone(grid), values, true)?
        }
        Initial::Zero => RadialField::zeros(Arc::clone(grid)),
        Initial::File(path) => {
            let bytes = fs::read(path).map_err(|e| {
                CliError::Config(format!("config field initial: cannot read {path}: {e}"))
            })?;
            if bytes.len() != grid.n * 8 {
                return Err(CliError::Config(format!(
                    "config field initial: {path} holds {} values, grid needs {}",
                    bytes.len() / 8,
                    grid.n
                )));
            }
            let values: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            RadialField::new(Arc::clone(grid), values, true)?
        }
    };
    Ok(field)
}

/// Create the output directory if needed and return its path.
pub fn ensure_out_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = Path::new(&cfg.output_dir).to_path_buf();
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}
