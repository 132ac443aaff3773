//! Two-dimensional node layouts.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embed::read_embedding_csv;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutSource {
    TsneInternal,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout2D {
    positions: DMatrix<f64>,
    source: LayoutSource,
}

impl Layout2D {
    /// Z-score each coordinate (population SD). Fails on a constant column.
    pub fn standardized(raw: DMatrix<f64>, source: LayoutSource) -> Result<Self> {
        if raw.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: raw.ncols(),
            });
        }
        if raw.nrows() < 2 {
            return Err(Error::invalid("a layout needs at least two nodes"));
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("layout contains non-finite coordinates"));
        }
        let mut positions = raw;
        let n = positions.nrows() as f64;
        for mut col in positions.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / n).sqrt();
            if sd == 0.0 {
                return Err(Error::invalid("layout coordinate has zero spread"));
            }
            col /= sd;
        }
        Ok(Self { positions, source })
    }

    /// Wrap coordinates without standardizing them.
    pub fn from_raw(positions: DMatrix<f64>, source: LayoutSource) -> Self {
        Self { positions, source }
    }

    pub fn n(&self) -> usize {
        self.positions.nrows()
    }

    pub fn positions(&self) -> &DMatrix<f64> {
        &self.positions
    }

    pub fn source(&self) -> LayoutSource {
        self.source
    }
}

/// `node,x,y` rows.
pub fn write_layout_csv<W: Write>(layout: &Layout2D, labels: Option<&[String]>, mut w: W) -> Result<()> {
    writeln!(w, "node,x,y")?;
    for (i, row) in layout.positions.row_iter().enumerate() {
        let name = labels.map_or_else(|| i.to_string(), |l| l[i].clone());
        writeln!(w, "{name},{},{}", row[0], row[1])?;
    }
    Ok(())
}

/// Read an external layout and standardize it.
pub fn read_layout_csv(path: &Path, expected_n: usize) -> Result<Layout2D> {
    let raw = read_embedding_csv(path)?;
    if raw.nrows() != expected_n {
        return Err(Error::DimensionMismatch {
            expected: expected_n,
            found: raw.nrows(),
        });
    }
    Layout2D::standardized(raw, LayoutSource::External)
}
