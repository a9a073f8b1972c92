//! Row-major scalar and gradient fields with physical pixel pitch.

use crate::error::{Error, Result};

/// Scalar field over the sensor pixel grid, units mm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub rows: usize,
    pub cols: usize,
    /// Pixel pitch (dx, dy) in mm.
    pub pitch_mm: (f64, f64),
    /// Row-major values, length `rows * cols`.
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(rows: usize, cols: usize, pitch_mm: (f64, f64)) -> Self {
        ScalarGrid {
            rows,
            cols,
            pitch_mm,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_values(rows: usize, cols: usize, pitch_mm: (f64, f64), values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols} = {} values", rows * cols),
                got: format!("{}", values.len()),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::GridFormat("non-finite scalar grid value".into()));
        }
        Ok(ScalarGrid { rows, cols, pitch_mm, values })
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.cols + col] = v;
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Two-channel gradient field (df/dx, df/dy), dimensionless slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientGrid {
    pub rows: usize,
    pub cols: usize,
    pub pitch_mm: (f64, f64),
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradientGrid {
    pub fn zeros(rows: usize, cols: usize, pitch_mm: (f64, f64)) -> Self {
        GradientGrid {
            rows,
            cols,
            pitch_mm,
            gx: vec![0.0; rows * cols],
            gy: vec![0.0; rows * cols],
        }
    }

    pub fn from_channels(
        rows: usize,
        cols: usize,
        pitch_mm: (f64, f64),
        gx: Vec<f64>,
        gy: Vec<f64>,
    ) -> Result<Self> {
        if gx.len() != rows * cols || gy.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols} = {} values per channel", rows * cols),
                got: format!("gx {} / gy {}", gx.len(), gy.len()),
            });
        }
        if !gx.iter().chain(gy.iter()).all(|v| v.is_finite()) {
            return Err(Error::GridFormat("non-finite gradient value".into()));
        }
        Ok(GradientGrid { rows, cols, pitch_mm, gx, gy })
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn same_shape(&self, other: &GradientGrid) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}
