//! Dense Hermitian eigendecomposition and the 1D spectral analyses built on
//! it: edge-state classification, density of states, φ sweeps and band
//! partitioning.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_axis_hamiltonian, AxisModulation};

/// Largest tolerated |H − H†| entry before a matrix is rejected.
pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl EigenSolution {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn vector(&self, n: usize) -> Vec<Complex64> {
        self.vectors.column(n).iter().copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Columns `range` as a dim × len(range) matrix.
    pub fn frame(&self, range: Range<usize>) -> DMatrix<Complex64> {
        self.vectors.columns(range.start, range.len()).into_owned()
    }

    /// Multiplies eigenvector `n` by a unit phase; values are unaffected.
    pub fn rephase(&mut self, n: usize, phase: f64) {
        let p = Complex64::from_polar(1.0, phase);
        self.vectors.column_mut(n).iter_mut().for_each(|z| *z *= p);
    }

    /// Replaces each exactly degenerate cluster (|ΔE| ≤ `tol`) by the
    /// eigenbasis of the mirror reflection restricted to it, symmetric
    /// states first.
    pub fn symmetrize_degenerate(&mut self, tol: f64) {
        let n = self.values.len();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && self.values[end] - self.values[end - 1] <= tol {
                end += 1;
            }
            if end - start > 1 {
                self.mirror_rotate(start..end);
            }
            start = end;
        }
    }

    fn mirror_rotate(&mut self, range: Range<usize>) {
        let sub = self.frame(range.clone());
        let dim = sub.nrows();
        let mirrored = DMatrix::from_fn(dim, sub.ncols(), |i, j| sub[(dim - 1 - i, j)]);
        let restricted = sub.adjoint() * mirrored;
        let restricted = (&restricted + restricted.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(restricted);
        let mut order: Vec<usize> = (0..range.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let rotated = sub * eig.eigenvectors;
        for (slot, &src) in order.iter().enumerate() {
            let mut col = rotated.column(src).into_owned();
            fix_phase(col.as_mut_slice());
            self.vectors.set_column(range.start + slot, &col);
        }
    }
}

fn max_asymmetry(h: &DMatrix<Complex64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Rotates `v` so its first non-negligible component is real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-8 * max).copied() {
        let p = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= p);
    }
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Full eigendecomposition of a dense Hermitian matrix.
///
/// Values ascend; ties within 1e-12·max(1, ‖H‖) are ordered by the
/// lexicographic order of the phase-fixed eigenvectors.
pub fn eigensolve(h: &DMatrix<Complex64>) -> Result<EigenSolution> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            actual: h.ncols(),
        });
    }
    let asym = max_asymmetry(h);
    if asym > HERMITIAN_TOL {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (max asymmetry {asym:.3e})"
        )));
    }
    let n = h.nrows();
    let (raw_values, raw_vectors): (Vec<f64>, DMatrix<Complex64>) =
        if h.iter().all(|z| z.im == 0.0) {
            let eig = SymmetricEigen::new(h.map(|z| z.re));
            (
                eig.eigenvalues.iter().copied().collect(),
                eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
            )
        } else {
            let eig = SymmetricEigen::new(h.clone());
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        };

    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut c: Vec<Complex64> = raw_vectors.column(j).iter().copied().collect();
            fix_phase(&mut c);
            c
        })
        .collect();
    let scale = raw_values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let tie = 1e-12 * scale;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && raw_values[order[end]] - raw_values[order[end - 1]] <= tie {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| lexicographic(&cols[a], &cols[b]));
        start = end;
    }

    let values: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (slot, &src) in order.iter().enumerate() {
        let col = std::mem::take(&mut cols[src]);
        for (i, z) in col.into_iter().enumerate() {
            vectors[(i, slot)] = z;
        }
    }
    Ok(EigenSolution { values, vectors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Bulk,
    LeftEdge,
    RightEdge,
    BothEdges,
}

impl EdgeKind {
    pub fn is_edge(self) -> bool {
        self != EdgeKind::Bulk
    }

    pub fn label(self) -> &'static str {
        match self {
            EdgeKind::Bulk => "bulk",
            EdgeKind::LeftEdge => "left",
            EdgeKind::RightEdge => "right",
            EdgeKind::BothEdges => "both",
        }
    }
}

/// Mirror parity of a 1D state, when it is an eigenstate of reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

impl Parity {
    pub fn letter(self) -> char {
        match self {
            Parity::Symmetric => 'S',
            Parity::Antisymmetric => 'A',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateClassification {
    pub kind: EdgeKind,
    pub left_weight: f64,
    pub right_weight: f64,
    pub ipr: f64,
    /// Re⟨ψ|P|ψ⟩ for the site reflection P.
    pub mirror: f64,
}

impl StateClassification {
    pub fn parity(&self) -> Option<Parity> {
        if self.mirror > 1.0 - 1e-6 {
            Some(Parity::Symmetric)
        } else if self.mirror < -1.0 + 1e-6 {
            Some(Parity::Antisymmetric)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub edge_width: usize,
    pub weight_threshold: f64,
    /// A BothEdges state needs an IPR of at least `ipr_factor / N`.
    pub ipr_factor: f64,
    /// Rotate exactly degenerate clusters into mirror-parity states first.
    pub symmetrize: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            edge_width: 2,
            weight_threshold: 0.5,
            ipr_factor: 2.0,
            symmetrize: true,
        }
    }
}

pub fn classify_state(v: &[Complex64], opts: &ClassifyOptions) -> StateClassification {
    let n = v.len();
    let probs: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    let w = opts.edge_width.min(n);
    let left = probs[..w].iter().sum::<f64>() / total;
    let right = probs[n - w..].iter().sum::<f64>() / total;
    let ipr = probs.iter().map(|p| p * p).sum::<f64>() / (total * total);
    let mirror = (0..n).map(|i| (v[i].conj() * v[n - 1 - i]).re).sum::<f64>() / total;
    let th = opts.weight_threshold;
    let kind = if left >= th && right < th {
        EdgeKind::LeftEdge
    } else if right >= th && left < th {
        EdgeKind::RightEdge
    } else if left >= th / 2.0 && right >= th / 2.0 && ipr >= opts.ipr_factor / n as f64 {
        EdgeKind::BothEdges
    } else {
        EdgeKind::Bulk
    };
    StateClassification {
        kind,
        left_weight: left,
        right_weight: right,
        ipr,
        mirror,
    }
}

pub fn classify_edge_states(
    sol: &EigenSolution,
    opts: &ClassifyOptions,
) -> Result<Vec<StateClassification>> {
    let n = sol.dim();
    if 2 * opts.edge_width >= n || opts.edge_width == 0 {
        return Err(Error::Domain(format!(
            "edge width {} must be positive and below N/2 = {}",
            opts.edge_width,
            n as f64 / 2.0
        )));
    }
    Ok((0..sol.len())
        .map(|k| classify_state(sol.vectors().column(k).as_slice(), opts))
        .collect())
}

/// Energy interval between two consecutive bulk states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGap {
    pub lower: f64,
    pub upper: f64,
    /// Number of bulk states below the gap.
    pub bulk_below: usize,
}

impl EnergyGap {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, e: f64) -> bool {
        e > self.lower && e < self.upper
    }
}

/// An eigensolution with per-state edge classification.
#[derive(Debug, Clone)]
pub struct ClassifiedSpectrum {
    pub solution: EigenSolution,
    pub classes: Vec<StateClassification>,
}

impl ClassifiedSpectrum {
    pub fn new(mut solution: EigenSolution, opts: &ClassifyOptions) -> Result<Self> {
        if opts.symmetrize {
            let scale = solution.values().iter().map(|v| v.abs()).fold(1.0, f64::max);
            solution.symmetrize_degenerate(1e-10 * scale);
        }
        let classes = classify_edge_states(&solution, opts)?;
        Ok(Self { solution, classes })
    }

    pub fn values(&self) -> &[f64] {
        self.solution.values()
    }

    fn bulk_energies(&self) -> Vec<f64> {
        self.values()
            .iter()
            .zip(&self.classes)
            .filter(|(_, c)| !c.kind.is_edge())
            .map(|(&e, _)| e)
            .collect()
    }

    /// Gaps between consecutive bulk energies, in ascending energy.
    pub fn bulk_gaps(&self) -> Vec<EnergyGap> {
        let bulk = self.bulk_energies();
        bulk.windows(2)
            .enumerate()
            .map(|(i, w)| EnergyGap {
                lower: w[0],
                upper: w[1],
                bulk_below: i + 1,
            })
            .collect()
    }

    /// The widest bulk gap; near-ties go to the lowest energy.
    pub fn principal_gap(&self) -> Option<EnergyGap> {
        let gaps = self.bulk_gaps();
        let widest = gaps.iter().map(EnergyGap::width).fold(0.0, f64::max);
        gaps.into_iter()
            .find(|g| g.width() >= widest * (1.0 - 1e-9))
    }

    /// Edge-classified states whose energy lies inside `gap`.
    pub fn edge_modes_in(&self, gap: &EnergyGap) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&k| self.classes[k].kind.is_edge() && gap.contains(self.values()[k]))
            .collect()
    }

    /// Number of bulk states strictly below state `k`.
    pub fn gap_position(&self, k: usize) -> usize {
        let e = self.values()[k];
        self.bulk_energies().iter().filter(|&&b| b < e).count()
    }

    /// Edge states of the lowest occupied gap (smallest nonzero gap position).
    pub fn first_gap_edges(&self) -> Vec<usize> {
        let edges: Vec<usize> = (0..self.classes.len())
            .filter(|&k| self.classes[k].kind.is_edge())
            .collect();
        let first = edges
            .iter()
            .map(|&k| self.gap_position(k))
            .filter(|&p| p > 0)
            .min();
        match first {
            Some(p) => edges.into_iter().filter(|&k| self.gap_position(k) == p).collect(),
            None => Vec::new(),
        }
    }

    /// Highest state of the lowest run of bulk states.
    pub fn first_band_top(&self) -> Option<usize> {
        let run = self.classes.iter().take_while(|c| !c.kind.is_edge()).count();
        run.checked_sub(1)
    }
}

/// Builds, diagonalizes and classifies one chain.
pub fn analyze_chain(axis: &AxisModulation, opts: &ClassifyOptions) -> Result<ClassifiedSpectrum> {
    let h = build_axis_hamiltonian(axis);
    let sol = eigensolve(h.matrix())?;
    ClassifiedSpectrum::new(sol, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Lorentzian,
    Gaussian,
}

impl Kernel {
    fn eval(self, x: f64, eta: f64) -> f64 {
        match self {
            Kernel::Lorentzian => eta / (PI * (x * x + eta * eta)),
            Kernel::Gaussian => (-(x * x) / (2.0 * eta * eta)).exp() / (eta * (2.0 * PI).sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosCurve {
    pub energies: Vec<f64>,
    pub density: Vec<f64>,
    pub eta: f64,
    pub kernel: Kernel,
}

impl DosCurve {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.energies
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(e, d)| 0.5 * (e[1] - e[0]) * (d[0] + d[1]))
            .sum()
    }

    pub fn at(&self, e: f64) -> f64 {
        match self.energies.iter().position(|&x| x >= e) {
            Some(0) => self.density[0],
            Some(i) => {
                let (e0, e1) = (self.energies[i - 1], self.energies[i]);
                let f = (e - e0) / (e1 - e0);
                self.density[i - 1] * (1.0 - f) + self.density[i] * f
            }
            None => *self.density.last().unwrap_or(&0.0),
        }
    }
}

/// Uniform grid wide enough for Lorentzian tails to hold ≥ 99% of the weight.
pub fn default_energy_grid(values: &[f64], eta: f64) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 100.0 * eta;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 100.0 * eta;
    let step = eta / 4.0;
    let n = ((hi - lo) / step).ceil() as usize + 1;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

pub fn dos(values: &[f64], eta: f64, grid: &[f64], kernel: Kernel) -> Result<DosCurve> {
    if values.is_empty() {
        return Err(Error::Domain("density of states of an empty spectrum".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("broadening eta = {eta} must be > 0")));
    }
    let density = grid
        .iter()
        .map(|&e| values.iter().map(|&v| kernel.eval(e - v, eta)).sum())
        .collect();
    Ok(DosCurve {
        energies: grid.to_vec(),
        density,
        eta,
        kernel,
    })
}

#[derive(Debug, Clone)]
pub struct SpectrumSweep {
    pub phis: Vec<f64>,
    pub spectra: Vec<ClassifiedSpectrum>,
}

impl SpectrumSweep {
    /// N × len(phis) eigenvalues, one column per φ.
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let n = self.spectra.first().map_or(0, |s| s.values().len());
        DMatrix::from_fn(n, self.phis.len(), |i, j| self.spectra[j].values()[i])
    }

    pub fn points(&self) -> Vec<SpectrumPoint> {
        self.phis
            .iter()
            .zip(&self.spectra)
            .map(|(&phi, s)| SpectrumPoint {
                coords: vec![phi],
                values: s.values().to_vec(),
            })
            .collect()
    }
}

/// Diagonalizes the chain at each φ; φ points run in parallel.
pub fn spectrum_sweep(
    template: &AxisModulation,
    phis: &[f64],
    opts: &ClassifyOptions,
) -> Result<SpectrumSweep> {
    if phis.is_empty() {
        return Err(Error::Domain("empty phi list".into()));
    }
    template.validate()?;
    let spectra = phis
        .par_iter()
        .map(|&phi| analyze_chain(&template.clone().with_phi(phi), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweep {
        phis: phis.to_vec(),
        spectra,
    })
}

/// Sorted eigenvalues at one point of a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

/// Splits band indices into `count` contiguous ranges separated by the
/// widest gaps that stay open over every point.
pub fn band_subsets(
    points: &[SpectrumPoint],
    count: usize,
    gap_tol: f64,
) -> Result<Vec<Range<usize>>> {
    let n = points
        .first()
        .map(|p| p.values.len())
        .ok_or_else(|| Error::Domain("no spectra to partition".into()))?;
    if points.iter().any(|p| p.values.len() != n) {
        return Err(Error::Domain("spectra of unequal length".into()));
    }
    if count == 0 || count > n {
        return Err(Error::Domain(format!("cannot split {n} bands into {count} subsets")));
    }
    // (min gap over the grid, point where it is attained) for each of the n-1 gaps
    let gaps: Vec<(f64, usize)> = (0..n - 1)
        .map(|g| {
            points
                .iter()
                .enumerate()
                .map(|(p, pt)| (pt.values[g + 1] - pt.values[g], p))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("nonempty")
        })
        .collect();
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| gaps[b].0.total_cmp(&gaps[a].0).then(a.cmp(&b)));
    let mut cuts: Vec<usize> = order[..count - 1].to_vec();
    if let Some(&bad) = cuts.iter().find(|&&g| gaps[g].0 <= gap_tol) {
        let (gap, p) = gaps[bad];
        return Err(Error::GapClosing {
            location: format!(
                "between bands {bad} and {} at parameters {:?}",
                bad + 1,
                points[p].coords
            ),
            gap,
        });
    }
    cuts.sort_unstable();
    let mut ranges = Vec::with_capacity(count);
    let mut start = 0;
    for c in cuts {
        ranges.push(start..c + 1);
        start = c + 1;
    }
    ranges.push(start..n);
    Ok(ranges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Frequency;

    fn real(rows: usize, data: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(rows, rows, data).map(|x| Complex64::new(x, 0.0))
    }

    #[test]
    fn two_site_chain() {
        let sol = eigensolve(&real(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((sol.values()[0] + 1.0).abs() < 1e-14);
        assert!((sol.values()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_site_chain() {
        let sol = eigensolve(&real(3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0])).unwrap();
        let r2 = 2f64.sqrt();
        for (got, want) in sol.values().iter().zip([-r2, 0.0, r2]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let err = eigensolve(&real(2, &[0.0, 1.0, 0.5, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn complex_solution_invariants() {
        let axis = AxisModulation::new(1.0, 0.7, Frequency::golden(), 0.3, 12)
            .unwrap()
            .with_boundary(crate::lattice::Boundary::Twisted { theta: 0.9 });
        let h = axis.hamiltonian().into_matrix();
        let sol = eigensolve(&h).unwrap();
        let v = sol.vectors();
        let gram = v.adjoint() * v;
        let id = DMatrix::<Complex64>::identity(12, 12);
        assert!((gram - id).camax() < 1e-10);
        assert!(sol.values().windows(2).all(|w| w[0] <= w[1]));
        for k in 0..12 {
            let col = v.column(k);
            let r = &h * col - col * Complex64::new(sol.values()[k], 0.0);
            assert!(r.norm() < 1e-9 * h.norm());
        }
    }

    #[test]
    fn degenerate_ties_are_deterministic() {
        // two decoupled identical dimers: doubly degenerate levels
        let h = real(
            4,
            &[
                0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0,
            ],
        );
        let a = eigensolve(&h).unwrap();
        let b = eigensolve(&h).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thirty_site_chain_has_two_first_gap_states() {
        let axis = AxisModulation::new(1.0, 0.5, Frequency::rational(1, 3).unwrap(), 0.0, 30).unwrap();
        let cs = analyze_chain(&axis, &ClassifyOptions::default()).unwrap();
        let edges = cs.first_gap_edges();
        assert_eq!(edges, vec![9, 10]);
        // first gap: between the 9th and 12th levels
        let e = cs.values();
        assert!(e[9] > e[8] + 0.5 && e[10] < e[11] - 0.1);
        for &k in &edges {
            assert_eq!(cs.classes[k].kind, EdgeKind::BothEdges);
        }
        let parities: Vec<_> = edges.iter().map(|&k| cs.classes[k].parity()).collect();
        assert_eq!(parities, vec![Some(Parity::Symmetric), Some(Parity::Antisymmetric)]);
        assert_eq!(cs.first_band_top(), Some(8));
    }

    #[test]
    fn classify_delta_and_uniform() {
        let opts = ClassifyOptions::default();
        let mut delta = vec![Complex64::new(0.0, 0.0); 30];
        delta[0] = Complex64::new(1.0, 0.0);
        let c = classify_state(&delta, &opts);
        assert_eq!(c.kind, EdgeKind::LeftEdge);
        assert_eq!(c.left_weight, 1.0);

        let uniform = vec![Complex64::new((1.0f64 / 30.0).sqrt(), 0.0); 30];
        let c = classify_state(&uniform, &opts);
        assert_eq!(c.kind, EdgeKind::Bulk);
        assert!((c.left_weight - 2.0 / 30.0).abs() < 1e-12);
        assert!((c.right_weight - 2.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn classify_rejects_wide_window() {
        let sol = eigensolve(&real(4, &[0.0; 16])).unwrap();
        let opts = ClassifyOptions {
            edge_width: 2,
            ..Default::default()
        };
        assert!(classify_edge_states(&sol, &opts).is_err());
    }

    #[test]
    fn lorentzian_peak_height() {
        let eta = 0.1;
        let curve = dos(&[0.0], eta, &[0.0], Kernel::Lorentzian).unwrap();
        assert!((curve.density[0] - 1.0 / (PI * eta)).abs() < 1e-12);
        assert!(dos(&[], eta, &[0.0], Kernel::Lorentzian).is_err());
        assert!(dos(&[0.0], 0.0, &[0.0], Kernel::Lorentzian).is_err());
    }

    #[test]
    fn dos_integral_counts_states() {
        let values: Vec<f64> = (0..15).map(|i| -1.0 + i as f64 / 7.0).collect();
        for kernel in [Kernel::Lorentzian, Kernel::Gaussian] {
            let grid = default_energy_grid(&values, 0.025);
            let curve = dos(&values, 0.025, &grid, kernel).unwrap();
            assert!((curve.integral() - 15.0).abs() < 0.15, "{kernel:?} {}", curve.integral());
        }
    }

    #[test]
    fn flat_sweep_is_phi_independent() {
        let axis = AxisModulation::new(1.0, 0.0, Frequency::golden(), 0.0, 10).unwrap();
        let sweep = spectrum_sweep(&axis, &[0.0, 1.0, 2.0], &ClassifyOptions::default()).unwrap();
        let m = sweep.energy_matrix();
        for j in 1..3 {
            assert!((m.column(j) - m.column(0)).amax() < 1e-12);
        }
        assert!(spectrum_sweep(&axis, &[], &ClassifyOptions::default()).is_err());
    }

    #[test]
    fn subsets_with_one_persistent_gap() {
        let points: Vec<SpectrumPoint> = (0..20)
            .map(|p| {
                let s = (p as f64 * 0.37).sin() * 0.1;
                SpectrumPoint {
                    coords: vec![p as f64],
                    values: vec![-1.0 + s, -0.9 - s, -0.8, 1.0 + s, 1.1],
                }
            })
            .collect();
        let ranges = band_subsets(&points, 2, 1e-9).unwrap();
        assert_eq!(ranges, vec![0..3, 3..5]);
    }

    #[test]
    fn subsets_report_closing_gap() {
        let points = vec![
            SpectrumPoint {
                coords: vec![0.0],
                values: vec![0.0, 1.0, 2.0],
            },
            SpectrumPoint {
                coords: vec![0.5],
                values: vec![0.0, 0.0, 2.0],
            },
        ];
        let err = band_subsets(&points, 3, 1e-9).unwrap_err();
        match err {
            Error::GapClosing { location, .. } => assert!(location.contains("0.5")),
            e => panic!("unexpected {e:?}"),
        }
    }
}
