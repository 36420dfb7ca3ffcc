//! Output artifacts: CSV writing with 17-significant-digit floats,
//! SHA-256 file inventory, run manifest, and the flat binary snapshot
//! format with its JSON index.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use isoland_core::evolve::SolverState;
use isoland_core::grid::{make_grid, Grading, RadialField};
use isoland_core::potentials::compute_potentials;
use isoland_core::Params;

use crate::config::{fmt_f64, RunConfig};
use crate::{CliError, CliResult};

/// Canonical float formatting for every CSV cell.
pub fn fmt_float(x: f64) -> String {
    fmt_f64(x)
}

/// Write a CSV with a header row; the caller supplies cell text so that
/// formatting stays deterministic.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

/// Run manifest: the full configuration, tool version, wall-clock time,
/// check outcomes, the derived-constant table, and a checksummed file
/// inventory. Wall-clock never leaks into CSV output, so reruns with the
/// same config and seed reproduce the CSVs byte for byte.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: String,
    pub wall_clock_secs: f64,
    pub config: String,
    pub constants: BTreeMap<String, f64>,
    pub outcomes: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig, params: &Params) -> Self {
        let mut constants = BTreeMap::new();
        constants.insert("c_coupling".into(), params.c_coupling);
        constants.insert("c_riesz".into(), params.c_riesz);
        constants.insert("gamma_star".into(), params.gamma_star);
        constants.insert("m_exp".into(), params.m_exp);
        constants.insert("q_exp".into(), params.q_exp);
        constants.insert("p_max_monotone".into(), params.p_max_monotone);
        constants.insert("p_min_linfty".into(), params.p_min_linfty);
        Manifest {
            tool: "isoland".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: cfg.seed,
            threads: std::env::var("ISOLAND_THREADS").unwrap_or_else(|_| "1".into()),
            wall_clock_secs: 0.0,
            config: cfg.to_text(),
            constants,
            outcomes: BTreeMap::new(),
            warnings: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn add_file(&mut self, dir: &Path, name: &str) -> CliResult<()> {
        let sha = sha256_file(&dir.join(name))?;
        self.files.push(FileEntry {
            name: name.into(),
            sha256: sha,
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
        fs::write(dir.join("manifest.json"), text)
            .map_err(|e| CliError::Config(format!("cannot write manifest: {e}")))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub t: f64,
    pub file: String,
}

/// JSON index describing the grid shared by all snapshot files.
#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotIndex {
    pub d: usize,
    pub n: usize,
    pub r_max: f64,
    /// Geometric cell ratio; 1.0 means uniform.
    pub grid_stretch: f64,
    pub entries: Vec<SnapshotEntry>,
}

fn field_to_bytes(values: &[f64]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for &v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn bytes_to_field(bytes: &[u8]) -> CliResult<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(CliError::Config(
            "snapshot file length is not a multiple of 8".into(),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Write the trajectory as raw little-endian f64 files plus a JSON index.
/// Returns the file names written (index first).
pub fn write_snapshots(dir: &Path, states: &[SolverState], stretch: f64) -> CliResult<Vec<String>> {
    let grid = &states[0].f.grid;
    let mut entries = Vec::with_capacity(states.len());
    let mut names = Vec::with_capacity(states.len() + 1);
    for (i, s) in states.iter().enumerate() {
        let file = format!("snap_{i:03}.f64");
        fs::write(dir.join(&file), field_to_bytes(&s.f.values))
            .map_err(|e| CliError::Config(format!("cannot write snapshot: {e}")))?;
        entries.push(SnapshotEntry {
            index: s.step_index,
            t: s.t,
            file: file.clone(),
        });
        names.push(file);
    }
    let index = SnapshotIndex {
        d: grid.d,
        n: grid.n,
        r_max: grid.r_max,
        grid_stretch: stretch,
        entries,
    };
    let text = serde_json::to_string_pretty(&index)
        .map_err(|e| CliError::Config(format!("snapshot index serialization: {e}")))?;
    fs::write(dir.join("snapshots.json"), text)
        .map_err(|e| CliError::Config(format!("cannot write snapshot index: {e}")))?;
    names.insert(0, "snapshots.json".into());
    Ok(names)
}

/// Read a stored trajectory, recomputing the potentials for each snapshot.
pub fn read_snapshots(dir: &Path, params: &Params) -> CliResult<Vec<SolverState>> {
    let index_path: PathBuf = dir.join("snapshots.json");
    let text = fs::read_to_string(&index_path).map_err(|_| {
        CliError::Config(format!(
            "no stored trajectory: {} is missing (run `isoland simulate` first)",
            index_path.display()
        ))
    })?;
    let index: SnapshotIndex = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("snapshot index is corrupt: {e}")))?;
    if index.d != params.d {
        return Err(CliError::Config(format!(
            "stored trajectory has d = {}, config has d = {}",
            index.d, params.d
        )));
    }
    let grading = if index.grid_stretch == 1.0 {
        Grading::Uniform
    } else {
        Grading::Geometric(index.grid_stretch)
    };
    let grid = Arc::new(make_grid(index.d, index.r_max, index.n, grading)?);
    let mut states = Vec::with_capacity(index.entries.len());
    for e in &index.entries {
        let bytes = fs::read(dir.join(&e.file))
            .map_err(|err| CliError::Config(format!("cannot read {}: {err}", e.file)))?;
        let values = bytes_to_field(&bytes)?;
        if values.len() != index.n {
            return Err(CliError::Config(format!(
                "snapshot {} has {} values, expected {}",
                e.file,
                values.len(),
                index.n
            )));
        }
        let f = RadialField::new(Arc::clone(&grid), values, true)?;
        let pair = compute_potentials(&f, params)?;
        states.push(SolverState {
            t: e.t,
            f,
            pair,
            step_index: e.index,
            clamped_mass: 0.0,
        });
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use isoland_core::grid::gaussian_values;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let grid = Arc::new(make_grid(3, 8.0, 64, Grading::Uniform).unwrap());
        let f = RadialField::new(grid.clone(), gaussian_values(&grid, 1.0), true).unwrap();
        let s0 = SolverState::new(f, &params).unwrap();
        let mut s1 = s0.clone();
        s1.t = 0.5;
        s1.step_index = 10;
        write_snapshots(dir.path(), &[s0.clone(), s1.clone()], 1.0).unwrap();
        let back = read_snapshots(dir.path(), &params).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].f.values, s0.f.values);
        assert_eq!(back[1].t, 0.5);
        assert_eq!(back[1].step_index, 10);
        assert!(back[1]
            .pair
            .a
            .values
            .iter()
            .zip(&s1.pair.a.values)
            .all(|(x, y)| (x - y).abs() < 1e-14));
    }

    #[test]
    fn missing_trajectory_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let params = Params::new(3, -2.5, 1.0).unwrap();
        let err = read_snapshots(dir.path(), &params).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
