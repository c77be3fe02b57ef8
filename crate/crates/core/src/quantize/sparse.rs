//! Row-oriented sparse complex matrices. The assembled operators are banded
//! (central differences along grid axes, finite Fourier convolutions across
//! modes), so products stay cheap at the sizes used here.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<BTreeMap<usize, Complex64>>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix { n, rows: vec![BTreeMap::new(); n] }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix::from_diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(values: &[Complex64]) -> Self {
        let mut m = SparseMatrix::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            if *v != Complex64::new(0.0, 0.0) {
                m.rows[i].insert(i, *v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i].get(&j).copied().unwrap_or_default()
    }

    /// Accumulates `v` into entry `(i, j)`.
    pub fn add_to(&mut self, i: usize, j: usize, v: Complex64) {
        *self.rows[i].entry(j).or_default() += v;
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |(&j, &v)| (i, j, v)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        SparseMatrix {
            n: self.n,
            rows: self.rows.iter().map(|r| r.iter().map(|(&j, &v)| (j, c * v)).collect()).collect(),
        }
    }

    /// Scaling by a real factor without routing through complex multiplication.
    pub fn scale_real(&self, c: f64) -> Self {
        SparseMatrix {
            n: self.n,
            rows: self.rows.iter().map(|r| r.iter().map(|(&j, &v)| (j, v * c)).collect()).collect(),
        }
    }

    pub fn add(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = self.clone();
        for (i, j, v) in other.entries() {
            out.add_to(i, j, v);
        }
        out
    }

    pub fn sub(&self, other: &SparseMatrix) -> Self {
        self.add(&other.scale_real(-1.0))
    }

    pub fn mul(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = SparseMatrix::zeros(self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let acc = &mut out.rows[i];
            for (&k, &a) in row {
                for (&j, &b) in &other.rows[k] {
                    *acc.entry(j).or_default() += a * b;
                }
            }
        }
        out
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &SparseMatrix) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = SparseMatrix::zeros(self.n);
        for (i, j, v) in self.entries() {
            out.rows[j].insert(i, v.conj());
        }
        out
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        self.rows.iter().map(|r| r.iter().map(|(&j, &v)| v * x[j]).sum()).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(i, j, v)| i == j || v == Complex64::new(0.0, 0.0))
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `max |A_ij − conj(A_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.entries() {
            worst = worst.max((v - self.get(j, i).conj()).norm());
        }
        worst
    }

    /// Max column-sum norm of the submatrix on the index set selected by `keep`
    /// (applied to both rows and columns).
    pub fn column_sum_norm(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let mut sums = vec![0.0f64; self.n];
        for (i, j, v) in self.entries() {
            if keep(i) && keep(j) {
                sums[j] += v.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        self.sub(other).entries().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn products_and_commutators() {
        let mut a = SparseMatrix::zeros(3);
        a.add_to(0, 1, c(1.0, 0.0));
        a.add_to(1, 2, c(0.0, 2.0));
        let b = SparseMatrix::from_diagonal(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let ab = a.mul(&b);
        assert_eq!(ab.get(0, 1), c(2.0, 0.0));
        assert_eq!(ab.get(1, 2), c(0.0, 6.0));
        let comm = a.commutator(&b);
        assert_eq!(comm.get(0, 1), c(1.0, 0.0));
        assert_eq!(comm.get(1, 2), c(0.0, 2.0));
        assert_eq!(a.adjoint().get(2, 1), c(0.0, -2.0));
        assert_eq!(a.apply(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]), vec![c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)]);
        assert!(b.is_diagonal() && !a.is_diagonal());
        assert_eq!(a.hermiticity_residual(), 2.0);
        assert_eq!(b.hermiticity_residual(), 0.0);
        assert_eq!(a.column_sum_norm(|_| true), 2.0);
        assert_eq!(a.column_sum_norm(|i| i < 2), 1.0);
        assert_eq!(SparseMatrix::identity(2).to_dense(), DMatrix::identity(2, 2));
    }
}
