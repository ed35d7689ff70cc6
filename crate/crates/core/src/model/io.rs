//! `.mrfdat` dataset files: a `rows cols n` header line followed by one
//! line of `d` characters `0`/`1` per configuration.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Configuration, Dataset, GridSpec};
use crate::error::{MrfError, Result};

pub const MRFDAT_EXTENSION: &str = "mrfdat";

pub fn write_dataset<W: Write>(mut out: W, grid: &GridSpec, data: &Dataset) -> Result<()> {
    if data.num_nodes() != grid.num_nodes() {
        return Err(MrfError::DimensionMismatch {
            expected: grid.num_nodes(),
            found: data.num_nodes(),
        });
    }
    writeln!(out, "{} {} {}", grid.rows(), grid.cols(), data.len())?;
    let mut line = String::with_capacity(grid.num_nodes() + 1);
    for x in data.points() {
        line.clear();
        line.extend(x.bits().iter().map(|&b| if b == 1 { '1' } else { '0' }));
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<(GridSpec, Dataset)> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| MrfError::Parse("missing header".into()))??;
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| MrfError::Parse(format!("bad header {header:?}: {e}")))?;
    let [rows, cols, n] = fields[..] else {
        return Err(MrfError::Parse(format!(
            "header must be `rows cols n`, got {header:?}"
        )));
    };
    let grid = GridSpec::new(rows, cols)?;
    let d = grid.num_nodes();
    let mut points = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        if line.len() != d {
            return Err(MrfError::Parse(format!(
                "line {} has {} characters, expected {d}",
                i + 2,
                line.len()
            )));
        }
        let bits = line
            .bytes()
            .map(|b| match b {
                b'0' => Ok(0u8),
                b'1' => Ok(1u8),
                other => Err(MrfError::Parse(format!(
                    "unexpected character {:?} on line {}",
                    other as char,
                    i + 2
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        points.push(Configuration(bits));
    }
    if points.len() != n {
        return Err(MrfError::Parse(format!(
            "header announces {n} points, found {}",
            points.len()
        )));
    }
    Ok((grid, Dataset::new(d, points)?))
}

pub fn write_mrfdat(path: &Path, grid: &GridSpec, data: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write_dataset(&mut out, grid, data)?;
    out.flush()?;
    Ok(())
}

pub fn read_mrfdat(path: &Path) -> Result<(GridSpec, Dataset)> {
    read_dataset(std::fs::File::open(path)?)
}
