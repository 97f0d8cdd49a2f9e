//! Field dumps: a JSON sidecar header next to the payload, which is either
//! row-major CSV or raw little-endian f64.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{CssError, Result};
use crate::grid::{Field2D, Grid};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub l: f64,
    pub n: usize,
    pub name: String,
    #[serde(default)]
    pub binary: bool,
}

fn payload_path(base: &Path, binary: bool) -> PathBuf {
    base.with_extension(if binary { "bin" } else { "csv" })
}

/// Write `name.json` plus `name.csv` (or `name.bin`) under the given base
/// path (extension ignored).
pub fn save_field(base: &Path, name: &str, u: &Field2D, binary: bool) -> Result<()> {
    let grid = u.grid();
    let header = FieldHeader { l: grid.half_width(), n: grid.n(), name: name.to_string(), binary };
    fs::write(base.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
    let mut w = BufWriter::new(fs::File::create(payload_path(base, binary))?);
    if binary {
        for &v in u.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    } else {
        for row in u.values().rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a field written by [`save_field`]; the header names the payload kind.
pub fn load_field(base: &Path) -> Result<(Field2D, FieldHeader)> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(base.with_extension("json"))?)?;
    let grid = Grid::new(header.l, header.n)?;
    let n = header.n;
    let mut values = Array2::zeros((n, n));
    if header.binary {
        let mut r = fs::File::open(payload_path(base, true))?;
        let mut buf = vec![0u8; n * n * 8];
        r.read_exact(&mut buf)?;
        for (i, chunk) in buf.chunks_exact(8).enumerate() {
            values[[i / n, i % n]] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    } else {
        let r = BufReader::new(fs::File::open(payload_path(base, false))?);
        let mut i = 0;
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for (j, tok) in line.split(',').enumerate() {
                if i >= n || j >= n {
                    return Err(CssError::InvalidParam(format!(
                        "field payload exceeds {n}x{n}"
                    )));
                }
                values[[i, j]] = tok.trim().parse::<f64>().map_err(|e| {
                    CssError::InvalidParam(format!("bad float at row {i} col {j}: {e}"))
                })?;
            }
            i += 1;
        }
        if i != n {
            return Err(CssError::InvalidParam(format!("expected {n} rows, got {i}")));
        }
    }
    Ok((Field2D::from_values(grid, values)?, header))
}
