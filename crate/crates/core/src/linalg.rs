//! Dense matrices over `F_q`: row reduction, rank, nullspaces and solves.
//!
//! Entries are packed field values (see [`crate::gf`]). Pivots are the first
//! nonzero entry in scan order, so every result is deterministic.

use rayon::prelude::*;
use thiserror::Error;

use crate::gf::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrices are over different fields")]
    FieldMismatch,
    #[error("solution failed verification")]
    Unverified,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Work above this many entries is split across the rayon pool.
const PAR_THRESHOLD: usize = 1 << 15;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatrixFq {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl MatrixFq {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        MatrixFq { field: field.clone(), rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Build from row-major packed entries.
    pub fn from_data(field: &FieldSpec, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(&x) = data.iter().find(|&&x| x >= field.q()) {
            return Err(LinalgError::Dimension(format!("entry {x} is not a packed element of {field}")));
        }
        Ok(MatrixFq { field: field.clone(), rows, cols, data })
    }

    pub fn from_rows(field: &FieldSpec, rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Self::from_data(field, rows.len(), cols, rows.concat())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(field: &FieldSpec, nrows: usize, columns: &[Vec<u32>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(LinalgError::Dimension("column length differs from row count".into()));
        }
        let mut m = Self::zeros(field, nrows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                m.data[i * m.cols + j] = x;
            }
        }
        Ok(m)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j) == u32::from(i == j)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a != 0 {
                    // dst += a * row_k(other)
                    f.sub_mul_assign(dst, other.row(k), f.neg(a));
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(LinalgError::Dimension(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        let f = &self.field;
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(0, |acc, (&a, &x)| f.add(acc, f.mul(a, x))))
            .collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::Dimension("shapes differ".into()));
        }
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Ok(MatrixFq { field: f.clone(), rows: self.rows, cols: self.cols, data })
    }

    /// `self - I` for a square matrix.
    pub fn minus_identity(&self) -> Self {
        assert_eq!(self.rows, self.cols, "minus_identity needs a square matrix");
        let mut m = self.clone();
        for i in 0..self.rows {
            let v = m.get(i, i);
            m.set(i, i, self.field.sub(v, 1));
        }
        m
    }

    /// Reduced row-echelon form and its pivot columns.
    pub fn rref(&self) -> (MatrixFq, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    fn rref_in_place(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self.data[i * cols + c] != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..cols {
                    self.data.swap(pr * cols + j, r * cols + j);
                }
            }
            let inv = f.inv(self.data[r * cols + c]).expect("pivot is nonzero");
            f.scale_slice(&mut self.data[r * cols..(r + 1) * cols], inv);
            let pivot_row: Vec<u32> = self.data[r * cols..(r + 1) * cols].to_vec();
            let eliminate = |i: usize, row: &mut [u32]| {
                if i != r {
                    let factor = row[c];
                    if factor != 0 {
                        f.sub_mul_assign(&mut row[c..], &pivot_row[c..], factor);
                    }
                }
            };
            if self.data.len() >= PAR_THRESHOLD {
                self.data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| eliminate(i, row));
            } else {
                self.data.chunks_mut(cols).enumerate().for_each(|(i, row)| eliminate(i, row));
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// A basis of `{v : self * v = 0}`, one vector per free column.
    pub fn nullspace_basis(&self) -> Vec<Vec<u32>> {
        let (red, pivots) = self.rref();
        let f = &self.field;
        let mut is_pivot = vec![None; self.cols];
        for (i, &c) in pivots.iter().enumerate() {
            is_pivot[c] = Some(i);
        }
        (0..self.cols)
            .filter(|&c| is_pivot[c].is_none())
            .map(|free| {
                let mut v = vec![0u32; self.cols];
                v[free] = 1;
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = f.neg(red.get(i, free));
                }
                debug_assert!(self.mul_vec(&v).unwrap().iter().all(|&x| x == 0));
                v
            })
            .collect()
    }

    /// Some `x` with `self * x = b`, or `None` when the system is inconsistent.
    pub fn solve(&self, b: &[u32]) -> Result<Option<Vec<u32>>> {
        if b.len() != self.rows {
            return Err(LinalgError::Dimension(format!("right-hand side of length {} for {} rows", b.len(), self.rows)));
        }
        let n = self.cols + 1;
        let mut aug = Self::zeros(&self.field, self.rows, n);
        for i in 0..self.rows {
            aug.data[i * n..i * n + self.cols].copy_from_slice(self.row(i));
            aug.data[i * n + self.cols] = b[i];
        }
        let pivots = aug.rref_in_place();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![0u32; self.cols];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(i, self.cols);
        }
        if self.mul_vec(&x)? != b {
            return Err(LinalgError::Unverified);
        }
        Ok(Some(x))
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(&self.field, n, 2 * n);
        for i in 0..n {
            aug.data[i * 2 * n..i * 2 * n + n].copy_from_slice(self.row(i));
            aug.data[i * 2 * n + n + i] = 1;
        }
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(&self.field, n, n);
        for i in 0..n {
            inv.data[i * n..(i + 1) * n].copy_from_slice(&aug.row(i)[n..]);
        }
        Some(inv)
    }
}

/// Vertical concatenation. The nullspace of the result is the intersection
/// of the nullspaces of the parts.
pub fn stack_rows(parts: &[MatrixFq]) -> Result<MatrixFq> {
    let first = parts.first().ok_or_else(|| LinalgError::Dimension("nothing to stack".into()))?;
    let cols = first.cols;
    let mut data = Vec::with_capacity(parts.iter().map(|m| m.data.len()).sum());
    for m in parts {
        if m.field != first.field {
            return Err(LinalgError::FieldMismatch);
        }
        if m.cols != cols {
            return Err(LinalgError::Dimension(format!("widths {} and {}", cols, m.cols)));
        }
        data.extend_from_slice(&m.data);
    }
    let rows = parts.iter().map(|m| m.rows).sum();
    Ok(MatrixFq { field: first.field.clone(), rows, cols, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fq(q: u32) -> FieldSpec {
        FieldSpec::of_order(q).unwrap()
    }

    #[test]
    fn identity_rref() {
        let f = fq(5);
        let id = MatrixFq::identity(&f, 4);
        let (r, piv) = id.rref();
        assert_eq!(r, id);
        assert_eq!(piv, vec![0, 1, 2, 3]);
        assert!(id.nullspace_basis().is_empty());
    }

    #[test]
    fn zero_matrix() {
        let f = fq(3);
        let z = MatrixFq::zeros(&f, 3, 4);
        assert_eq!(z.rref(), (z.clone(), vec![]));
        assert_eq!(z.nullspace_basis().len(), 4);
    }

    #[test]
    fn all_ones_row_over_f2() {
        let f = fq(2);
        let m = MatrixFq::from_rows(&f, &[vec![1, 1, 1, 1]]).unwrap();
        let ns = m.nullspace_basis();
        assert_eq!(ns.len(), 3);
        for v in ns {
            assert_eq!(m.mul_vec(&v).unwrap(), vec![0]);
        }
    }

    #[test]
    fn solve_cases() {
        let f = fq(7);
        let id = MatrixFq::identity(&f, 3);
        assert_eq!(id.solve(&[1, 2, 3]).unwrap(), Some(vec![1, 2, 3]));
        let m = MatrixFq::from_rows(&f, &[vec![1, 0], vec![0, 0]]).unwrap();
        assert_eq!(m.solve(&[0, 1]).unwrap(), None);
        assert!(m.solve(&[1]).is_err());
    }

    #[test]
    fn stacking() {
        let f = fq(5);
        let a = MatrixFq::from_rows(&f, &[vec![1, 2, 0]]).unwrap();
        let b = MatrixFq::from_rows(&f, &[vec![0, 1, 1]]).unwrap();
        assert_eq!(stack_rows(&[a.clone()]).unwrap(), a);
        assert_eq!(stack_rows(&[a.clone(), a.clone()]).unwrap().nullspace_basis(), a.nullspace_basis());
        let ab = stack_rows(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab.rows(), 2);
        let ns = ab.nullspace_basis();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).unwrap().iter().all(|&x| x == 0));
        assert!(b.mul_vec(&ns[0]).unwrap().iter().all(|&x| x == 0));
        let wide = MatrixFq::zeros(&f, 1, 4);
        assert!(stack_rows(&[a, wide]).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let f = fq(9);
        let m = MatrixFq::from_rows(&f, &[vec![1, 3, 0], vec![0, 1, 5], vec![2, 0, 1]]).unwrap();
        if let Some(inv) = m.inverse() {
            assert!(m.mul(&inv).unwrap().is_identity());
        } else {
            assert!(m.rank() < 3);
        }
        let sing = MatrixFq::from_rows(&f, &[vec![1, 2], vec![1, 2]]).unwrap();
        assert!(sing.inverse().is_none());
    }
}
