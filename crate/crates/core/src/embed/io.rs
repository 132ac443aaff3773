use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{Embedding, EmbeddingMethod, Scaling};
use crate::error::{Error, Result};

/// Write one row per node: `node,dim1,...,dimd`. The node column holds the
/// label when given, else the 0-based index.
pub fn write_embedding_csv<W: Write>(
    emb: &DMatrix<f64>,
    labels: Option<&[String]>,
    mut w: W,
) -> Result<()> {
    let header: Vec<String> = (1..=emb.ncols()).map(|c| format!("dim{c}")).collect();
    writeln!(w, "node,{}", header.join(","))?;
    for i in 0..emb.nrows() {
        let node = labels.map_or_else(|| i.to_string(), |l| l[i].clone());
        let row: Vec<String> = (0..emb.ncols()).map(|c| emb[(i, c)].to_string()).collect();
        writeln!(w, "{node},{}", row.join(","))?;
    }
    Ok(())
}

/// Read a numeric CSV matrix. A first line with any non-numeric cell is a
/// header; a header whose first cell is `node` or `label` marks a leading
/// identifier column, which is skipped.
pub fn read_embedding_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let mut skip_first = false;
    if let Some((_, first)) = lines.peek() {
        let cells: Vec<&str> = first.split(',').map(str::trim).collect();
        if cells.iter().any(|c| c.parse::<f64>().is_err()) {
            let key = cells[0].to_ascii_lowercase();
            skip_first = key == "node" || key == "label";
            lines.next();
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        let cells = line.split(',').skip(skip_first as usize);
        let row = cells
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("non-numeric cell {:?}", c.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let d = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

/// Load an externally computed embedding with exactly `expected_n` rows.
pub fn load_external_embedding(path: &Path, expected_n: usize) -> Result<Embedding> {
    let m = read_embedding_csv(path)?;
    if m.nrows() != expected_n {
        return Err(Error::DimensionMismatch {
            expected: expected_n,
            found: m.nrows(),
        });
    }
    Embedding::new(m, EmbeddingMethod::External, Scaling::SqrtSigma, 1)
}
