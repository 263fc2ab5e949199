//! Flat little-endian `f64` binaries.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn write_f64s(path: &Path, values: impl IntoIterator<Item = f64>) -> Result<()> {
    let bytes: Vec<u8> = values.into_iter().flat_map(f64::to_le_bytes).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_f64s(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("length {} is not a multiple of 8", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_f64s(path, v.iter().copied())
}

pub fn read_vector(path: &Path, len: usize) -> Result<DVector<f64>> {
    let data = read_f64s(path)?;
    if data.len() != len {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected {len} values, found {}", data.len()),
        });
    }
    Ok(DVector::from_vec(data))
}

/// Row-major.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let (r, c) = m.shape();
    write_f64s(path, (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])))
}

/// Row-major.
pub fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let data = read_f64s(path)?;
    if data.len() != rows * cols {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected {rows}x{cols} values, found {}", data.len()),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_row_major() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, -0.1]);
        write_matrix(&path, &m).unwrap();
        assert_eq!(read_f64s(&path).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0, -0.1]);
        assert_eq!(read_matrix(&path, 2, 3).unwrap(), m);
        assert!(read_matrix(&path, 3, 3).is_err());
    }
}
