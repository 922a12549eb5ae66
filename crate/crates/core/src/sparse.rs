//! Row-compressed sparse matrices with the element-block structure of a
//! discontinuous Galerkin system.

use std::io::Write;

use rayon::prelude::*;

/// Square CSR matrix, 0-based, column indices sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    /// `y = A x`; rows are processed in parallel, each with a fixed
    /// summation order, so the result does not depend on scheduling.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T| / max |A|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.n)
            .into_par_iter()
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .map(|(&j, &a)| (a - self.get(j, i)).abs())
                    .fold(0.0_f64, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        worst / scale
    }

    /// Dense row-major copy; intended for small systems in tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                row[j] = a;
            }
        }
        d
    }

    /// MatrixMarket coordinate file, `real symmetric`, lower triangle,
    /// 1-based indices.
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        let lower: usize = (0..self.n)
            .map(|i| self.row(i).0.iter().filter(|&&j| j <= i).count())
            .sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, lower)?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                if j <= i {
                    writeln!(w, "{} {} {:.17e}", i + 1, j + 1, a)?;
                }
            }
        }
        Ok(())
    }
}

/// CSR pattern where row block `b` couples to a sorted list of column
/// blocks, all blocks `block x block` and dense.
#[derive(Debug, Clone)]
pub(crate) struct BlockPattern {
    block: usize,
    neighbors: Vec<Vec<usize>>,
    row_ptr: Vec<usize>,
}

impl BlockPattern {
    pub fn new(block: usize, mut neighbors: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(neighbors.len() * block + 1);
        row_ptr.push(0);
        for (b, list) in neighbors.iter_mut().enumerate() {
            list.push(b);
            list.sort_unstable();
            list.dedup();
            for _ in 0..block {
                row_ptr.push(row_ptr.last().unwrap() + list.len() * block);
            }
        }
        Self {
            block,
            neighbors,
            row_ptr,
        }
    }

    pub fn empty_matrix(&self) -> CsrMatrix {
        let n = self.neighbors.len() * self.block;
        let nnz = *self.row_ptr.last().unwrap();
        let mut col_idx = Vec::with_capacity(nnz);
        for list in &self.neighbors {
            for _ in 0..self.block {
                for &c in list {
                    col_idx.extend(c * self.block..(c + 1) * self.block);
                }
            }
        }
        CsrMatrix {
            n,
            row_ptr: self.row_ptr.clone(),
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Adds a dense `block x block` row-major array into block `(r, c)`.
    pub fn add_block(&self, m: &mut CsrMatrix, r: usize, c: usize, local: &[f64], stride: usize, offset: (usize, usize)) {
        let pos = self.neighbors[r]
            .binary_search(&c)
            .expect("block outside the sparsity pattern");
        let nb = self.block;
        for i in 0..nb {
            let start = self.row_ptr[r * nb + i] + pos * nb;
            let src = (offset.0 + i) * stride + offset.1;
            for j in 0..nb {
                m.values[start + j] += local[src + j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_pattern_layout() {
        let pattern = BlockPattern::new(2, vec![vec![1], vec![0], vec![]]);
        let mut m = pattern.empty_matrix();
        assert_eq!(m.n, 6);
        assert_eq!(m.nnz(), 4 * 2 + 4 * 2 + 4);
        let local = [1.0, 2.0, 3.0, 4.0];
        pattern.add_block(&mut m, 0, 1, &local, 2, (0, 0));
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(1, 3), 4.0);
        assert_eq!(m.get(4, 0), 0.0);
        assert_eq!(m.mul(&[0.0, 0.0, 1.0, 1.0, 0.0, 0.0])[..2], [3.0, 7.0]);
    }

    #[test]
    fn matrix_market_header() {
        let pattern = BlockPattern::new(1, vec![vec![1], vec![0]]);
        let mut m = pattern.empty_matrix();
        m.values.copy_from_slice(&[2.0, -1.0, -1.0, 2.0]);
        let mut out = Vec::new();
        m.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real symmetric");
        assert_eq!(lines[1], "2 2 3");
        assert_eq!(lines.len(), 5);
        assert_eq!(m.symmetry_defect(), 0.0);
    }
}
