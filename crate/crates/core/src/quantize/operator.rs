use num_complex::Complex64;

use super::{Basis, QuantizationParams, QuantizeError, Result, SparseMatrix, WaveFunction};

/// A truncated operator together with the parameters it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    matrix: SparseMatrix,
    params: QuantizationParams,
    description: String,
}

impl DiscreteOperator {
    pub fn new(matrix: SparseMatrix, params: QuantizationParams, description: String) -> Self {
        assert_eq!(matrix.dim(), Basis::new(&params).dim(), "matrix does not match the basis");
        DiscreteOperator { matrix, params, description }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn params(&self) -> &QuantizationParams {
        &self.params
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn basis(&self) -> Basis {
        Basis::new(&self.params)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.len() != self.dim() {
            return Err(QuantizeError::ShapeMismatch(psi.len(), self.dim()));
        }
        Ok(WaveFunction::from_values(self.matrix.apply(psi.values())))
    }

    /// Largest bandwidth in mode space: max `|n_μ − n'_μ|` over nonzero entries.
    pub fn mode_bandwidth(&self) -> usize {
        let b = self.basis();
        self.matrix
            .entries()
            .filter(|(_, _, v)| *v != Complex64::default())
            .map(|(i, j, _)| {
                let (mi, mj) = (b.mode(b.split(i).0), b.mode(b.split(j).0));
                mi.iter().zip(&mj).map(|(a, c)| (a - c).unsigned_abs() as usize).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.mode_bandwidth() == 0
    }

    /// Dense matrix as CSV, row-major, one `re,im` cell per entry.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut w = csv::Writer::from_writer(Vec::new());
        for i in 0..n {
            let row = (0..n).map(|j| {
                let v = self.matrix.get(i, j);
                format!("{:?},{:?}", v.re, v.im)
            });
            w.write_record(row).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 output")
    }
}
