//! Field snapshot formats.
//!
//! CSV: header `cell,x,value` (1D) or `cell,x,y,value` (2D), one row per cell.
//! Binary: little-endian `u64 dim`, `u64 cells`, `f64 dx`, then `cells^dim` `f64` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Real;

pub fn write_csv<T: Real, W: Write>(field: &Field<T>, out: W) -> Result<()> {
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    if grid.dim() == 1 {
        w.write_record(["cell", "x", "value"]).map_err(io)?;
    } else {
        w.write_record(["cell", "x", "y", "value"]).map_err(io)?;
    }
    for (k, v) in field.values().iter().enumerate() {
        let [x, y] = grid.center(k);
        let mut rec = vec![k.to_string(), x.to64().to_string()];
        if grid.dim() == 2 {
            rec.push(y.to64().to_string());
        }
        rec.push(v.to64().to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Field<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let dim = match headers.len() {
        3 => 1,
        4 => 2,
        n => return Err(Error::Format(format!("expected 3 or 4 CSV columns, found {n}"))),
    };
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Format("short CSV row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(e.to_string()))
        };
        xs.push(num(1)?);
        values.push(num(dim + 1)?);
    }
    let n = values.len();
    let cells = if dim == 1 { n } else { (n as f64).sqrt().round() as usize };
    if cells.pow(dim as u32) != n || cells < 2 {
        return Err(Error::Format(format!("{n} rows do not form a square {dim}D grid")));
    }
    let dx = xs[1] - xs[0];
    let grid = Grid::new(dim, 0.5 * dx * cells as f64, cells)?;
    Field::new(grid, values)
}

pub fn write_binary<T: Real, W: Write>(field: &Field<T>, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_all(&(grid.dim() as u64).to_le_bytes())?;
    out.write_all(&(grid.cells() as u64).to_le_bytes())?;
    out.write_all(&grid.dx().to64().to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.to64().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Field<f64>> {
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word).map_err(|e| Error::Format(format!("truncated binary snapshot: {e}")))?;
        Ok(word)
    };
    let dim = u64::from_le_bytes(next(&mut input)?) as usize;
    let cells = u64::from_le_bytes(next(&mut input)?) as usize;
    let dx = f64::from_le_bytes(next(&mut input)?);
    if dim != 1 && dim != 2 {
        return Err(Error::Format(format!("dimension {dim} in binary header")));
    }
    let grid = Grid::new(dim, 0.5 * dx * cells as f64, cells)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(f64::from_le_bytes(next(&mut input)?));
    }
    Field::new(grid, values)
}

/// Writes a snapshot, choosing the format from the extension (`.bin` or CSV otherwise).
pub fn save<T: Real>(field: &Field<T>, path: &Path) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        write_binary(field, out)
    } else {
        write_csv(field, out)
    }
}

pub fn load(path: &Path) -> Result<Field<f64>> {
    let input = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        read_binary(input)
    } else {
        read_csv(input)
    }
}
