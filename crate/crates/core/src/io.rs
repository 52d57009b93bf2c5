//! Text formats for fields and coefficient samples.
//!
//! Header `QFIELD,nx,ny,nz,h,ox,oy,oz` (or `COEFF,...`), then one line per node in
//! x-fastest order: `i,j,k,` followed by four (or one) values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{QField, ScalarField};
use crate::grid::{BoundaryKind, Grid};
use crate::quat::Quaternion;
use crate::scalar::Real;

fn header_line<S: Real>(tag: &str, g: &Grid<S>) -> String {
    format!("{tag},{},{},{},{},{},{},{}", g.nx, g.ny, g.nz, g.h, g.origin[0], g.origin[1], g.origin[2])
}

fn parse_header<S: Real>(tag: &str, line: &str, kind: BoundaryKind) -> Result<Grid<S>> {
    let perr = |msg: String| Error::Parse { line: 1, msg };
    let cols: Vec<&str> = line.trim().split(',').map(str::trim).collect();
    if cols.len() != 8 || cols[0] != tag {
        return Err(perr(format!("expected `{tag},nx,ny,nz,h,ox,oy,oz`")));
    }
    let dims = [1, 2, 3].map(|c| cols[c].parse::<usize>());
    let dims = match dims {
        [Ok(a), Ok(b), Ok(c)] => [a, b, c],
        _ => return Err(perr("node counts must be non-negative integers".into())),
    };
    let reals = [4, 5, 6, 7].map(|c| cols[c].parse::<S>());
    let [h, ox, oy, oz] = match reals {
        [Ok(a), Ok(b), Ok(c), Ok(d)] => [a, b, c, d],
        _ => return Err(perr("spacing and origin must be numbers".into())),
    };
    Grid::new(dims, h, [ox, oy, oz], kind).map_err(|e| perr(e.to_string()))
}

fn read_body<S: Real, R: BufRead>(reader: R, grid: &Grid<S>, width: usize) -> Result<Vec<Vec<S>>> {
    let mut rows = Vec::with_capacity(grid.len());
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        let node = rows.len();
        if node >= grid.len() {
            return Err(perr(format!("more than {} node lines", grid.len())));
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 + width {
            return Err(perr(format!("expected {} columns, got {}", 3 + width, cols.len())));
        }
        let want = grid.ijk(node);
        for a in 0..3 {
            let got: usize = cols[a].parse().map_err(|_| perr(format!("bad index `{}`", cols[a])))?;
            if got != want[a] {
                return Err(perr(format!("node {node} expected indices {want:?}")));
            }
        }
        let vals = cols[3..]
            .iter()
            .map(|c| c.parse::<S>().map_err(|_| perr(format!("bad number `{c}`"))))
            .collect::<Result<Vec<S>>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            let [i, j, k] = want;
            return Err(Error::NonFinite { node, i, j, k });
        }
        rows.push(vals);
    }
    if rows.len() != grid.len() {
        return Err(Error::Parse {
            line: rows.len() + 2,
            msg: format!("expected {} node lines, got {}", grid.len(), rows.len()),
        });
    }
    Ok(rows)
}

fn first_line<R: BufRead>(reader: &mut R) -> Result<String> {
    let mut header = String::new();
    if reader.read_line(&mut header)? == 0 {
        return Err(Error::Parse { line: 1, msg: "empty file".into() });
    }
    Ok(header)
}

pub fn write_field<S: Real, W: Write>(u: &QField<S>, mut w: W) -> Result<()> {
    let g = u.grid();
    writeln!(w, "{}", header_line("QFIELD", g))?;
    for (idx, q) in u.values().iter().enumerate() {
        let [i, j, k] = g.ijk(idx);
        writeln!(w, "{i},{j},{k},{},{},{},{}", q.q0, q.q1, q.q2, q.q3)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field; the boundary kind is not part of the file and is supplied here.
pub fn read_field<S: Real, R: BufRead>(mut r: R, kind: BoundaryKind) -> Result<QField<S>> {
    let grid = parse_header::<S>("QFIELD", &first_line(&mut r)?, kind)?;
    let rows = read_body(r, &grid, 4)?;
    let vals = rows.into_iter().map(|v| Quaternion::new(v[0], v[1], v[2], v[3])).collect();
    QField::from_values(&grid, vals)
}

pub fn save_field<S: Real>(u: &QField<S>, path: impl AsRef<Path>) -> Result<()> {
    write_field(u, BufWriter::new(File::create(path)?))
}

pub fn load_field<S: Real>(path: impl AsRef<Path>, kind: BoundaryKind) -> Result<QField<S>> {
    read_field(BufReader::new(File::open(path)?), kind)
}

pub fn write_coeff<S: Real, W: Write>(f: &ScalarField<S>, mut w: W) -> Result<()> {
    let g = f.grid();
    writeln!(w, "{}", header_line("COEFF", g))?;
    for (idx, v) in f.values().iter().enumerate() {
        let [i, j, k] = g.ijk(idx);
        writeln!(w, "{i},{j},{k},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coeff<S: Real, R: BufRead>(mut r: R, kind: BoundaryKind) -> Result<ScalarField<S>> {
    let grid = parse_header::<S>("COEFF", &first_line(&mut r)?, kind)?;
    let rows = read_body(r, &grid, 1)?;
    ScalarField::from_values(&grid, rows.into_iter().map(|v| v[0]).collect())
}

pub fn save_coeff<S: Real>(f: &ScalarField<S>, path: impl AsRef<Path>) -> Result<()> {
    write_coeff(f, BufWriter::new(File::create(path)?))
}

pub fn load_coeff<S: Real>(path: impl AsRef<Path>, kind: BoundaryKind) -> Result<ScalarField<S>> {
    read_coeff(BufReader::new(File::open(path)?), kind)
}
