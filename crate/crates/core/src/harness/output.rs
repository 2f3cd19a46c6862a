//! CSV emission with a fixed float format (17 significant digits) so that
//! identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::grids::{PhaseField, PhiGrid};

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table assembled in memory and written in one go.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    body: String,
    rows: usize,
}

pub enum Cell<'a> {
    Num(f64),
    Text(&'a str),
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), body: String::new(), rows: 0 }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.push_cells(&row.iter().map(|&v| Cell::Num(v)).collect::<Vec<_>>());
    }

    pub fn push_cells(&mut self, row: &[Cell<'_>]) {
        debug_assert_eq!(row.len(), self.header.len());
        for (k, c) in row.iter().enumerate() {
            if k > 0 {
                self.body.push(',');
            }
            match c {
                Cell::Num(v) => self.body.push_str(&fmt_float(*v)),
                Cell::Text(s) => self.body.push_str(s),
            }
        }
        self.body.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        out.push_str(&self.body);
        out
    }

    /// Writes `dir/name`, creating `dir`, and returns the path.
    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// `t,y,<value_name>` rows for every cell of every snapshot (y at the cell
/// centre, φ at the node).
pub fn field_table(times: &[f64], fields: &[&PhaseField], value_name: &str) -> Table {
    let mut t = Table::new(&["t", "y", "phi", value_name]);
    for (time, f) in times.iter().zip(fields) {
        let g = f.grid();
        let c = g.y.centers();
        for j in 0..g.n_phi() {
            let phi = g.phi.node(j);
            for (i, &y) in c.iter().enumerate() {
                t.push(&[*time, y, phi, f.get(i, j)]);
            }
        }
    }
    t
}

/// `t,phi,<value_name>` rows for angular profiles.
pub fn profile_table(times: &[f64], profiles: &[&[f64]], phi: &PhiGrid, value_name: &str) -> Table {
    let mut t = Table::new(&["t", "phi", value_name]);
    for (time, p) in times.iter().zip(profiles) {
        for (j, v) in p.iter().enumerate() {
            t.push(&[*time, phi.node(j), *v]);
        }
    }
    t
}

/// Human-readable summary line for a written artifact.
pub fn summary_line(path: &Path, table: &Table) -> String {
    let mut s = String::new();
    let _ = write!(s, "wrote {} ({} rows)", path.display(), table.rows());
    s
}
