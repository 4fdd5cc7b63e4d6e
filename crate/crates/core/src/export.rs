//! CSV and JSON writers.
//!
//! CSV files open with `#`-prefixed provenance lines followed by a header row
//! and the data rows. Every file is written to a temporary sibling and renamed
//! into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::RegionRaster;
use crate::radial::{DensityGrid, RadialHistogram};
use crate::walk::Trajectory;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn comments(header: &[String]) -> String {
    header.iter().map(|l| format!("# {l}\n")).collect()
}

fn finish(header: &[String], w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    let body = w.into_inner().map_err(|e| invalid("csv", e.to_string()))?;
    let mut out = comments(header).into_bytes();
    out.extend(body);
    Ok(out)
}

/// `step,x1,...,xd,norm,sign`, one row per stored state. The step column is
/// the state's label; the sign is the one that produced the state, empty for
/// the start. Norms-only trajectories drop the coordinate columns.
pub fn trajectory_csv(traj: &Trajectory, header: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let full = traj.has_points();
    let mut cols = vec!["step".to_string()];
    if full {
        cols.extend((1..=traj.dim()).map(|i| format!("x{i}")));
    }
    cols.extend(["norm".to_string(), "sign".to_string()]);
    w.write_record(&cols)?;
    let signs = traj.signs();
    for (k, norm) in traj.norms().iter().enumerate() {
        let mut row = vec![traj.label(k).to_string()];
        if full {
            let s = traj.state_slice(k).expect("full storage");
            row.extend(s.iter().map(|c| c.to_string()));
        }
        row.push(norm.to_string());
        row.push(if k == 0 { String::new() } else { signs[k - 1].value().to_string() });
        w.write_record(&row)?;
    }
    finish(header, w)
}

/// Reservoir states of a norms-only run: `step,x1,...,xd,norm`.
pub fn reservoir_csv(traj: &Trajectory, header: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut cols = vec!["step".to_string()];
    cols.extend((1..=traj.dim()).map(|i| format!("x{i}")));
    cols.push("norm".to_string());
    w.write_record(&cols)?;
    for s in &traj.reservoir {
        let mut row = vec![(s.step as i64 + traj.start_index).to_string()];
        row.extend(s.point.coords().iter().map(|c| c.to_string()));
        row.push(s.point.norm().to_string());
        w.write_record(&row)?;
    }
    finish(header, w)
}

/// `bin_left,bin_right,count`.
pub fn histogram_csv(h: &RadialHistogram, header: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin_left", "bin_right", "count"])?;
    for (i, c) in h.counts.iter().enumerate() {
        w.write_record([
            h.bin_edges[i].to_string(),
            h.bin_edges[i + 1].to_string(),
            c.to_string(),
        ])?;
    }
    finish(header, w)
}

/// `node,value,weight`.
pub fn density_csv(g: &DensityGrid, header: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node", "value", "weight"])?;
    for ((x, v), q) in g.nodes.iter().zip(&g.values).zip(&g.quadrature_weights) {
        w.write_record([x.to_string(), v.to_string(), q.to_string()])?;
    }
    finish(header, w)
}

/// `x,y,periodic_flag,return_error`, flag 0 or 1.
pub fn region_csv(r: &RegionRaster, header: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "periodic_flag", "return_error"])?;
    for c in &r.cells {
        w.write_record([
            c.x.to_string(),
            c.y.to_string(),
            u8::from(c.periodic).to_string(),
            c.return_error.to_string(),
        ])?;
    }
    finish(header, w)
}

/// Numeric table with the given column names.
pub fn table_csv<R: AsRef<[f64]>>(columns: &[&str], rows: &[R], header: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for row in rows {
        let row = row.as_ref();
        if row.len() != columns.len() {
            return Err(invalid("rows", format!("expected {} columns, got {}", columns.len(), row.len())));
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    finish(header, w)
}

/// Splits CSV bytes into the provenance lines and the data section.
pub fn split_csv(bytes: &[u8]) -> (Vec<String>, &[u8]) {
    let mut lines = Vec::new();
    let mut rest = bytes;
    while rest.first() == Some(&b'#') {
        let end = rest.iter().position(|b| *b == b'\n').map_or(rest.len(), |i| i + 1);
        let line = String::from_utf8_lossy(&rest[..end]);
        lines.push(line.trim_start_matches('#').trim().to_string());
        rest = &rest[end..];
    }
    (lines, rest)
}
