//! Row-major double-double matrices and the `DDM1` binary file format.

use sha2::{Digest, Sha256};

use crate::dd::DD;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DDM1";

/// A dense row-major matrix of [`DD`] values.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixDD {
    rows: usize,
    cols: usize,
    data: Vec<DD>,
}

impl MatrixDD {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixDD { rows, cols, data: vec![DD::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        MatrixDD::from_fn(n, n, |i, j| if i == j { DD::ONE } else { DD::ZERO })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<DD>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(MatrixDD { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> DD) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        MatrixDD { rows, cols, data }
    }

    /// Matrix of plain binary64 values (zero low limbs).
    pub fn from_f64(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        let data = values.iter().map(|&x| DD::from_f64(x)).collect::<Result<Vec<_>>>()?;
        MatrixDD::from_vec(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> DD {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: DD) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[DD] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [DD] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[DD] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> MatrixDD {
        MatrixDD::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Copy of the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatrixDD {
        MatrixDD::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Serializes to `DDM1`: magic, `u64` rows and cols, then row-major
    /// `(hi, lo)` pairs, all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 16 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.hi().to_le_bytes());
            out.extend_from_slice(&x.lo().to_le_bytes());
        }
        out
    }

    /// Parses a `DDM1` image. Rejects bad magic, truncated or oversized
    /// payloads, non-finite values and overlapping limb pairs.
    pub fn from_bytes(bytes: &[u8]) -> Result<MatrixDD> {
        if bytes.len() < 20 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing DDM1 header".into()));
        }
        let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let (rows, cols) = (word(4), word(12));
        let count = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(16))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        if (bytes.len() - 20) as u64 != count {
            return Err(Error::Format(format!(
                "payload is {} bytes, expected {count} for {rows}x{cols}",
                bytes.len() - 20
            )));
        }
        let f = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let (rows, cols) = (rows as usize, cols as usize);
        let mut data = Vec::with_capacity(rows * cols);
        for idx in 0..rows * cols {
            let (hi, lo) = (f(20 + 16 * idx), f(28 + 16 * idx));
            let x = DD::from_parts(hi, lo)
                .map_err(|e| Error::Format(format!("entry {idx}: {e}")))?;
            let changed = x.hi().to_bits() != hi.to_bits() || x.lo().to_bits() != lo.to_bits();
            if changed && !(hi == 0.0 && lo == 0.0) {
                return Err(Error::Format(format!("entry {idx}: limbs overlap")));
            }
            data.push(DD::from_raw(hi, lo));
        }
        Ok(MatrixDD { rows, cols, data })
    }

    /// SHA-256 of the `DDM1` encoding, as lowercase hex.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.hi().abs()))
    }
}
