//! Matrix Market coordinate files (`real general`), 1-based indices.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::linalg::sparse::from_triplets_rect;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_csr<W: Write>(a: &CsrMatrix<f64>, mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplet_iter() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Dense matrices are written with every entry, zeros included.
pub fn write_dense<W: Write>(a: &DMatrix<f64>, mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.len())?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, a[(i, j)])?;
        }
    }
    Ok(())
}

/// Reads a coordinate file; duplicate entries are summed. `symmetric` files
/// are expanded.
pub fn read<R: BufRead>(r: R) -> Result<CsrMatrix<f64>> {
    let mut lines = r.lines().enumerate();
    let parse_err = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
    let (_, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(parse_err(0, "expected a coordinate MatrixMarket header"));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(0, "only real or integer fields are supported"));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        _ => return Err(parse_err(0, "only general or symmetric storage is supported")),
    };
    let mut size = None;
    let mut triplets = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                let v: Vec<usize> = parts
                    .iter()
                    .map(|p| p.parse().map_err(|_| parse_err(no, "bad size line")))
                    .collect::<Result<_>>()?;
                if v.len() != 3 {
                    return Err(parse_err(no, "size line needs three integers"));
                }
                size = Some((v[0], v[1], v[2]));
                triplets.reserve(v[2]);
            }
            Some((nr, nc, _)) => {
                if parts.len() != 3 {
                    return Err(parse_err(no, "entry needs row, column and value"));
                }
                let i: usize = parts[0].parse().map_err(|_| parse_err(no, "bad row index"))?;
                let j: usize = parts[1].parse().map_err(|_| parse_err(no, "bad column index"))?;
                let v: f64 = parts[2].parse().map_err(|_| parse_err(no, "bad value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err(no, "index out of range"));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
    if stored != nnz {
        return Err(Error::Parse { line: 0, msg: format!("expected {nnz} entries, found {stored}") });
    }
    Ok(from_triplets_rect(nr, nc, &triplets))
}
