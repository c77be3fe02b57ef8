use num_complex::Complex64;

use super::{GridSpec, QuantizationParams, SparseMatrix};

/// Flattened index space `(mode multi-index) × (grid multi-index)`.
///
/// Flat index = `mode * grid_len + grid`; modes and grid points are both
/// enumerated row-major with the first axis most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    kmax: usize,
    torus_rank: usize,
    grid: Vec<GridSpec>,
    mode_count: usize,
    grid_len: usize,
}

impl Basis {
    pub fn new(params: &QuantizationParams) -> Self {
        let torus_rank = params.phase_space.torus_rank();
        let mode_count = (2 * params.kmax + 1).pow(torus_rank as u32);
        let grid_len = params.grid.iter().map(|g| g.points).product();
        Basis { kmax: params.kmax, torus_rank, grid: params.grid.clone(), mode_count, grid_len }
    }

    pub fn dim(&self) -> usize {
        self.mode_count * self.grid_len
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn torus_rank(&self) -> usize {
        self.torus_rank
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn grid(&self) -> &[GridSpec] {
        &self.grid
    }

    pub fn index(&self, mode: usize, grid: usize) -> usize {
        mode * self.grid_len + grid
    }

    pub fn split(&self, flat: usize) -> (usize, usize) {
        (flat / self.grid_len, flat % self.grid_len)
    }

    /// Mode multi-index `n ∈ [−K, K]^r` of a mode position.
    pub fn mode(&self, mode: usize) -> Vec<i64> {
        let width = 2 * self.kmax + 1;
        let mut out = vec![0i64; self.torus_rank];
        let mut rest = mode;
        for slot in out.iter_mut().rev() {
            *slot = (rest % width) as i64 - self.kmax as i64;
            rest /= width;
        }
        out
    }

    pub fn mode_position(&self, n: &[i64]) -> Option<usize> {
        let k = self.kmax as i64;
        let width = 2 * k + 1;
        let mut pos = 0i64;
        for &m in n {
            if m.abs() > k {
                return None;
            }
            pos = pos * width + (m + k);
        }
        Some(pos as usize)
    }

    pub fn modes(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.mode_count).map(move |m| self.mode(m))
    }

    /// Grid multi-index of a grid position.
    pub fn grid_index(&self, grid: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.grid.len()];
        let mut rest = grid;
        for (slot, g) in out.iter_mut().zip(&self.grid).rev() {
            *slot = rest % g.points;
            rest /= g.points;
        }
        out
    }

    /// Coordinates of a grid position along each noncompact axis.
    pub fn grid_point(&self, grid: usize) -> Vec<f64> {
        self.grid_index(grid)
            .iter()
            .zip(&self.grid)
            .map(|(&j, g)| -g.half_width + j as f64 * g.spacing())
            .collect()
    }

    /// Trapezoid weight of a grid position.
    pub fn grid_weight(&self, grid: usize) -> f64 {
        self.grid_index(grid)
            .iter()
            .zip(&self.grid)
            .map(|(&j, g)| if j == 0 || j == g.points - 1 { 0.5 * g.spacing() } else { g.spacing() })
            .product()
    }

    /// True when the grid position is at least `layers` points away from every boundary.
    pub fn grid_interior(&self, grid: usize, layers: usize) -> bool {
        self.grid_index(grid).iter().zip(&self.grid).all(|(&j, g)| j >= layers && j + layers < g.points)
    }

    pub fn mode_interior(&self, mode: usize, band_margin: usize) -> bool {
        let limit = self.kmax as i64 - band_margin as i64;
        self.mode(mode).iter().all(|n| n.abs() <= limit)
    }

    /// Excludes the outer `band_margin` Fourier bands and the two outermost grid layers.
    pub fn interior(&self, flat: usize, band_margin: usize) -> bool {
        let (m, g) = self.split(flat);
        self.mode_interior(m, band_margin) && self.grid_interior(g, 2)
    }

    /// Second-order central difference `∂` along noncompact axis `axis`, with
    /// zero values assumed outside the grid.
    pub fn central_difference(&self, axis: usize) -> SparseMatrix {
        let spec = self.grid[axis];
        let inv = 1.0 / (2.0 * spec.spacing());
        let mut m = SparseMatrix::zeros(self.dim());
        for flat in 0..self.dim() {
            let (mode, grid) = self.split(flat);
            let idx = self.grid_index(grid);
            let stride: usize = self.grid[axis + 1..].iter().map(|g| g.points).product();
            if idx[axis] + 1 < spec.points {
                m.add_to(flat, self.index(mode, grid + stride), Complex64::new(inv, 0.0));
            }
            if idx[axis] > 0 {
                m.add_to(flat, self.index(mode, grid - stride), Complex64::new(-inv, 0.0));
            }
        }
        m
    }

    /// Diagonal of mode numbers `n_μ` along torus axis `axis`.
    pub fn mode_numbers(&self, axis: usize) -> Vec<f64> {
        (0..self.dim()).map(|flat| self.mode(self.split(flat).0)[axis] as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::PhaseSpace;

    #[test]
    fn layout_round_trips() {
        let p = QuantizationParams::uniform(PhaseSpace::canonical(), 2, 7, 3.0).unwrap();
        let b = p.basis();
        assert_eq!(b.dim(), 5 * 7);
        for m in 0..b.mode_count() {
            assert_eq!(b.mode_position(&b.mode(m)), Some(m));
        }
        assert_eq!(b.mode(0), vec![-2]);
        assert_eq!(b.grid_point(0), vec![-3.0]);
        assert_eq!(b.grid_point(6), vec![3.0]);
        assert_eq!(b.grid_point(3), vec![0.0]);
        assert_eq!(b.grid_weight(0), 0.5);
        assert_eq!(b.grid_weight(1), 1.0);
        assert!(!b.grid_interior(1, 2) && b.grid_interior(2, 2) && !b.grid_interior(5, 2));
        assert_eq!(b.mode_position(&[3]), None);
    }

    #[test]
    fn central_difference_is_antisymmetric_and_exact_on_lines() {
        let p = QuantizationParams::uniform(PhaseSpace::canonical().restrict(["q"]), 1, 9, 4.0).unwrap();
        let b = p.basis();
        let d = b.central_difference(0);
        assert_eq!(d.add(&d.adjoint()).nnz(), d.add(&d.adjoint()).entries().filter(|e| e.2.norm() == 0.0).count());
        let x: Vec<Complex64> = (0..9).map(|g| Complex64::new(b.grid_point(g)[0], 0.0)).collect();
        let dx = d.apply(&x);
        for g in 1..8 {
            assert!((dx[g].re - 1.0).abs() < 1e-15);
        }
    }
}
