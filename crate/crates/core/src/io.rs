//! File formats: the phase-field checkpoint dump and the CSV ledgers.
//!
//! Checkpoint (textual, version 1):
//!
//! ```text
//!   acmcf-checkpoint 1
//!   <nx> <ny> <h> <eps> <t>
//!   <nx values of row j = 0, separated by spaces>
//!   ... (ny rows total, bottom to top)
//! ```
//!
//! Every CSV starts with a comment line `# acmcf-csv schema_version=1
//! kind=<name>` followed by a header row. Floats use the shortest
//! round-trippable representation, and writes are atomic
//! (write-then-rename), so identical runs produce byte-identical files.

use crate::error::Error;
use crate::field::Field;
use crate::grid::Grid;
use crate::solver::{PhaseField, Trajectory};
use crate::Result;

use std::fmt::Write as _;
use std::path::Path;

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CHECKPOINT_VERSION: u32 = 1;

/// Writes `contents` to `path` atomically (temp file + rename).
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Incremental CSV document with the schema preamble.
pub struct CsvDoc {
    buf: String,
}

impl CsvDoc {
    pub fn new(kind: &str, header: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# acmcf-csv schema_version={CSV_SCHEMA_VERSION} kind={kind}");
        let _ = writeln!(buf, "{}", header.join(","));
        CsvDoc { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn write(self, path: &Path) -> Result<()> {
        atomic_write(path, &self.buf)
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

pub fn write_checkpoint(path: &Path, state: &PhaseField) -> Result<()> {
    let g = state.grid;
    let mut buf = String::new();
    let _ = writeln!(buf, "acmcf-checkpoint {CHECKPOINT_VERSION}");
    let _ = writeln!(buf, "{} {} {} {} {}", g.nx, g.ny, g.h, state.eps, state.t);
    for j in 0..g.ny {
        let mut line = String::new();
        for i in 0..g.nx {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{}", state.u.at(i, j));
        }
        let _ = writeln!(buf, "{line}");
    }
    atomic_write(path, &buf)
}

pub fn read_checkpoint(path: &Path) -> Result<PhaseField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::Format("empty checkpoint".into()))?;
    if magic.trim() != format!("acmcf-checkpoint {CHECKPOINT_VERSION}") {
        return Err(Error::Format(format!("bad checkpoint magic: {magic}")));
    }
    let head = lines
        .next()
        .ok_or_else(|| Error::Format("missing checkpoint header".into()))?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(Error::Format("checkpoint header must have 5 fields".into()));
    }
    let nx: usize = parts[0].parse().map_err(|_| Error::Format("bad nx".into()))?;
    let ny: usize = parts[1].parse().map_err(|_| Error::Format("bad ny".into()))?;
    let h: f64 = parts[2].parse().map_err(|_| Error::Format("bad h".into()))?;
    let eps: f64 = parts[3].parse().map_err(|_| Error::Format("bad eps".into()))?;
    let t: f64 = parts[4].parse().map_err(|_| Error::Format("bad t".into()))?;
    let mut data = Vec::with_capacity(nx * ny);
    for (j, line) in lines.enumerate() {
        if j >= ny {
            break;
        }
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad value in row {j}")))?,
            );
        }
    }
    if data.len() != nx * ny {
        return Err(Error::Format(format!(
            "checkpoint has {} values, expected {}",
            data.len(),
            nx * ny
        )));
    }
    let grid = Grid { nx, ny, h };
    let mut s = PhaseField::new(grid, Field { nx, ny, data }, eps);
    s.t = t;
    Ok(s)
}

/// Energy ledger CSV: `(step, t, E_eps, bulk_E, boundary_E,
/// dissipation_increment)`.
pub fn energy_ledger_csv(traj: &Trajectory) -> CsvDoc {
    let mut doc = CsvDoc::new(
        "energy_ledger",
        &["step", "t", "E_eps", "bulk_E", "boundary_E", "dissipation_increment"],
    );
    for r in &traj.ledger {
        doc.row(&[
            r.step.to_string(),
            r.t.to_string(),
            r.e_eps.to_string(),
            r.bulk.to_string(),
            r.boundary.to_string(),
            r.dissipation_increment.to_string(),
        ]);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WallSpecs;
    use crate::solver::{run, SolverConfig};

    #[test]
    fn checkpoint_round_trip() {
        let g = Grid::build(1.0, 0.5, 1.0 / 16.0).unwrap();
        let u = PhaseField::well_prepared(g, 0.1, |x, y| x + y - 0.6);
        let dir = std::env::temp_dir().join("acmcf-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ckpt.txt");
        write_checkpoint(&path, &u).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.grid, g);
        assert_eq!(back.eps, 0.1);
        assert_eq!(back.u.data, u.u.data);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ledger_csv_shape() {
        let g = Grid::build(1.0, 1.0, 1.0 / 16.0).unwrap();
        let eps = 0.1;
        let cfg = SolverConfig::with_defaults(eps, 5.0 * eps * eps / 4.0);
        let u = PhaseField::well_prepared(g, eps, |x, _| x - 0.5);
        let traj = run(u, &cfg, &WallSpecs::all_neumann()).unwrap();
        let text = energy_ledger_csv(&traj).into_string();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# acmcf-csv schema_version=1"));
        assert_eq!(
            lines.next().unwrap(),
            "step,t,E_eps,bulk_E,boundary_E,dissipation_increment"
        );
        assert_eq!(lines.count(), traj.ledger.len());
    }
}
