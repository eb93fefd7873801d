//! Plain-text output formats. Every float is written with `{:.16e}`, which
//! round-trips a double exactly and does not depend on locale.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::bands::BandStructure;
use crate::error::Result;
use crate::grid::{grid_point, ComplexGrid, RealGrid};
use crate::lattice::Lattice;
use crate::neural::LossBreakdown;
use crate::spectral::ConvergenceRow;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(fmt_f64).collect::<Vec<_>>().join(",")
}

/// One comment line of metadata, then `s,kx,ky,E0,..`, one row per path sample.
pub fn band_csv(bs: &BandStructure) -> String {
    let m = &bs.metadata;
    let mut out = format!("# solver={} v0={} path={}", m.solver, fmt_f64(m.v0), bs.path.label_string());
    if let Some(c) = m.cutoff {
        let _ = write!(out, " cutoff={c}");
    }
    if let Some(ck) = &m.checkpoint {
        let _ = write!(out, " checkpoint={ck}");
    }
    for (k, v) in &m.notes {
        let _ = write!(out, " {k}={v}");
    }
    out.push('\n');
    out.push_str("s,kx,ky");
    for b in 0..bs.n_bands {
        let _ = write!(out, ",E{b}");
    }
    out.push('\n');
    for ((s, kp), row) in bs.path.s.iter().zip(&bs.path.samples).zip(&bs.energies) {
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(*s), fmt_f64(kp.k.x), fmt_f64(kp.k.y), join(row.iter().copied()));
    }
    out
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let n = rows.first().map_or(0, |r| r.energies.len());
    let mut out = String::from("cutoff");
    for b in 0..n {
        let _ = write!(out, ",E{b}");
    }
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{}", r.cutoff, join(r.energies.iter().copied()));
    }
    out
}

pub fn loss_csv(history: &[LossBreakdown]) -> String {
    let mut out = String::from("epoch,lr,total,pde,norm,bc\n");
    for h in history {
        let _ = writeln!(out, "{},{}", h.epoch, join([h.lr, h.total, h.pde, h.norm, h.bc].into_iter()));
    }
    out
}

/// `i,j,x,y,value` in row-major grid order.
pub fn real_grid_csv(grid: &RealGrid, lat: &Lattice) -> String {
    let mut out = String::from("i,j,x,y,value\n");
    for i in 0..grid.n {
        for j in 0..grid.n {
            let x = grid_point(lat, grid.n, i, j);
            let _ = writeln!(out, "{i},{j},{}", join([x.x, x.y, *grid.get(i, j)].into_iter()));
        }
    }
    out
}

/// `i,j,x,y,re,im` in row-major grid order.
pub fn complex_grid_csv(grid: &ComplexGrid, lat: &Lattice) -> String {
    let mut out = String::from("i,j,x,y,re,im\n");
    for i in 0..grid.n {
        for j in 0..grid.n {
            let x = grid_point(lat, grid.n, i, j);
            let u = grid.get(i, j);
            let _ = writeln!(out, "{i},{j},{}", join([x.x, x.y, u.re, u.im].into_iter()));
        }
    }
    out
}
