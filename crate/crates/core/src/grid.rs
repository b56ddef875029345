//! Complex amplitudes over a 1–3 dimensional site lattice.
//!
//! Storage is row-major with the first axis (x) varying slowest, so a
//! flattened index matches the left-to-right order of Kronecker factors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

impl StateGrid {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            amps: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_amplitudes(dims: &[usize], amps: Vec<Complex64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if amps.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: amps.len(),
            });
        }
        Ok(Self {
            dims: dims.to_vec(),
            amps,
        })
    }

    /// Unit amplitude on a single site.
    pub fn delta(dims: &[usize], site: &[usize]) -> Result<Self> {
        let mut grid = Self::zeros(dims);
        let idx = grid.flat_index(site)?;
        grid.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(grid)
    }

    /// Outer product of per-axis component vectors, first factor slowest.
    pub fn outer(components: &[&[Complex64]]) -> Self {
        let dims: Vec<usize> = components.iter().map(|c| c.len()).collect();
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for comp in components {
            let mut next = Vec::with_capacity(amps.len() * comp.len());
            for a in &amps {
                next.extend(comp.iter().map(|c| a * c));
            }
            amps = next;
        }
        Self { dims, amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn flat_index(&self, site: &[usize]) -> Result<usize> {
        if site.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                actual: site.len(),
            });
        }
        let mut idx = 0;
        for (&s, &n) in site.iter().zip(&self.dims) {
            if s >= n {
                return Err(Error::Domain(format!(
                    "site {site:?} outside lattice {:?}",
                    self.dims
                )));
            }
            idx = idx * n + s;
        }
        Ok(idx)
    }

    pub fn site_of(&self, mut idx: usize) -> Vec<usize> {
        let mut site = vec![0; self.dims.len()];
        for (slot, &n) in site.iter_mut().zip(&self.dims).rev() {
            *slot = idx % n;
            idx /= n;
        }
        site
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Inverse participation ratio Σ|ψ|⁴ / (Σ|ψ|²)².
    pub fn ipr(&self) -> f64 {
        let total = self.norm_sqr();
        self.amps.iter().map(|a| a.norm_sqr().powi(2)).sum::<f64>() / (total * total)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateGrid) -> Result<Complex64> {
        self.check_same_shape(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn check_same_shape(&self, other: &StateGrid) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }

    /// Applies `mat` to every fiber along `axis`, leaving other indices alone.
    ///
    /// Zero matrix entries are skipped, so a tridiagonal factor costs
    /// O(3·len) instead of O(n·len).
    pub fn apply_along_axis(&self, mat: &DMatrix<Complex64>, axis: usize) -> Result<StateGrid> {
        let mut out = StateGrid::zeros(&self.dims);
        self.accumulate_along_axis(mat, axis, &mut out)?;
        Ok(out)
    }

    /// `out += (I ⊗ mat ⊗ I) · self` with `mat` acting on `axis`.
    pub fn accumulate_along_axis(
        &self,
        mat: &DMatrix<Complex64>,
        axis: usize,
        out: &mut StateGrid,
    ) -> Result<()> {
        let n = *self.dims.get(axis).ok_or_else(|| {
            Error::Domain(format!("axis {axis} out of range for {:?}", self.dims))
        })?;
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: mat.nrows(),
            });
        }
        self.check_same_shape(out)?;
        let outer: usize = self.dims[..axis].iter().product();
        let inner: usize = self.dims[axis + 1..].iter().product();
        let zero = Complex64::new(0.0, 0.0);
        for o in 0..outer {
            let base = o * n * inner;
            for i in 0..n {
                let dst = base + i * inner;
                for k in 0..n {
                    let m = mat[(i, k)];
                    if m == zero {
                        continue;
                    }
                    let src = base + k * inner;
                    for r in 0..inner {
                        out.amps[dst + r] += m * self.amps[src + r];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn index_round_trip() {
        let g = StateGrid::zeros(&[3, 4, 5]);
        for idx in 0..g.len() {
            let site = g.site_of(idx);
            assert_eq!(g.flat_index(&site).unwrap(), idx);
        }
        assert_eq!(g.flat_index(&[1, 0, 0]).unwrap(), 20);
    }

    #[test]
    fn out_of_range_site() {
        assert!(StateGrid::delta(&[3, 3], &[3, 0]).is_err());
        assert!(StateGrid::delta(&[3, 3], &[1]).is_err());
    }

    #[test]
    fn outer_product_of_deltas() {
        let a = [c(1.0), c(0.0)];
        let b = [c(1.0), c(0.0), c(0.0)];
        let g = StateGrid::outer(&[&a, &b]);
        assert_eq!(g.dims(), &[2, 3]);
        assert_eq!(g.amplitudes()[0], c(1.0));
        assert!((g.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ipr_of_uniform_state() {
        let mut g = StateGrid::from_amplitudes(&[4], vec![c(1.0); 4]).unwrap();
        g.normalize();
        assert!((g.ipr() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn apply_along_axis_swaps_rows() {
        // swap matrix on axis 0 of a 2x2 grid
        let swap = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let g = StateGrid::from_amplitudes(&[2, 2], vec![c(1.0), c(2.0), c(3.0), c(4.0)]).unwrap();
        let out = g.apply_along_axis(&swap, 0).unwrap();
        assert_eq!(out.amplitudes(), &[c(3.0), c(4.0), c(1.0), c(2.0)]);
        let out = g.apply_along_axis(&swap, 1).unwrap();
        assert_eq!(out.amplitudes(), &[c(2.0), c(1.0), c(4.0), c(3.0)]);
    }
}
