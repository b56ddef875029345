//! Chern numbers on discretized parameter tori by the link-variable
//! (plaquette) method.
//!
//! Two routes share one plaquette kernel:
//! * abelian: one Bloch band of a rationally modulated chain over (k, φ);
//! * non-Abelian: a contiguous subset of levels of a finite twisted chain
//!   over (θ, φ), with determinant link variables.
//!
//! The first torus coordinate (k or θ) is the first plaquette direction.

use std::f64::consts::{PI, TAU};
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{bloch_matrix, AxisModulation, Boundary, LatticeSpec};
use crate::spectral::{band_subsets, eigensolve, SpectrumPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernOptions {
    /// Initial (n₁, n₂) grid.
    pub grid: (usize, usize),
    /// Largest grid dimension reached by automatic doubling.
    pub max_grid: usize,
    /// Plaquette fluxes must stay strictly below this bound.
    pub flux_bound: f64,
    pub quantization_tol: f64,
    pub link_tol: f64,
    /// Minimum spectral separation of the band or subset from the rest.
    pub gap_tol: f64,
}

impl Default for ChernOptions {
    fn default() -> Self {
        Self {
            grid: (40, 40),
            max_grid: 320,
            flux_bound: PI,
            quantization_tol: 1e-6,
            link_tol: 1e-12,
            gap_tol: 1e-9,
        }
    }
}

impl ChernOptions {
    pub fn with_grid(mut self, n1: usize, n2: usize) -> Self {
        self.grid = (n1, n2);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernResult {
    /// Σ F / 2π
    pub raw_sum: f64,
    pub integer: i64,
    pub max_plaquette_flux: f64,
    pub grid: (usize, usize),
    /// Per-plaquette Berry flux, row-major over (first, second) coordinate.
    #[serde(skip)]
    pub flux: Vec<f64>,
}

/// Eigen-frames (columns = states of the band or subset) on an n₁ × n₂ grid.
struct FrameGrid {
    n1: usize,
    n2: usize,
    frames: Vec<DMatrix<Complex64>>,
}

fn unit_link(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64, at: impl Fn() -> String) -> Result<Complex64> {
    let det = (a.adjoint() * b).determinant();
    let mag = det.norm();
    if mag < tol {
        return Err(Error::DegenerateLink {
            magnitude: mag,
            location: at(),
        });
    }
    Ok(det / mag)
}

/// Berry flux through every plaquette of a periodic grid of frames.
///
/// `frames[i * n2 + j]` holds the states at grid point (i, j); indices wrap.
pub fn plaquette_fluxes(
    frames: &[DMatrix<Complex64>],
    n1: usize,
    n2: usize,
    link_tol: f64,
) -> Result<Vec<f64>> {
    if frames.len() != n1 * n2 {
        return Err(Error::DimensionMismatch {
            expected: n1 * n2,
            actual: frames.len(),
        });
    }
    let at = |i: usize, j: usize| &frames[(i % n1) * n2 + (j % n2)];
    (0..n1 * n2)
        .into_par_iter()
        .map(|p| {
            let (i, j) = (p / n2, p % n2);
            let loc = || format!("grid point ({i}, {j}) of {n1}x{n2}");
            let u1 = unit_link(at(i, j), at(i + 1, j), link_tol, loc)?;
            let u2 = unit_link(at(i + 1, j), at(i + 1, j + 1), link_tol, loc)?;
            let u3 = unit_link(at(i, j + 1), at(i + 1, j + 1), link_tol, loc)?;
            let u4 = unit_link(at(i, j), at(i, j + 1), link_tol, loc)?;
            Ok((u1 * u2 * u3.conj() * u4.conj()).arg())
        })
        .collect()
}

/// Pairwise summation; fixed association order independent of thread count.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn reduce(fluxes: Vec<f64>, n1: usize, n2: usize, opts: &ChernOptions) -> Result<ChernResult> {
    let max_flux = fluxes.iter().map(|f| f.abs()).fold(0.0, f64::max);
    if max_flux >= opts.flux_bound {
        return Err(Error::Refinement {
            flux: max_flux,
            n1,
            n2,
        });
    }
    let raw_sum = pairwise_sum(&fluxes) / TAU;
    let integer = raw_sum.round();
    let distance = (raw_sum - integer).abs();
    if distance > opts.quantization_tol {
        return Err(Error::Quantization { raw_sum, distance });
    }
    Ok(ChernResult {
        raw_sum,
        integer: integer as i64,
        max_plaquette_flux: max_flux,
        grid: (n1, n2),
        flux: fluxes,
    })
}

/// Solves `h_at(x1, x2)` on the grid, checking that `states` stays gapped
/// from the remaining levels.
fn frame_grid<F>(
    n1: usize,
    n2: usize,
    states: Range<usize>,
    gap_tol: f64,
    names: (&str, &str),
    h_at: F,
) -> Result<FrameGrid>
where
    F: Fn(f64, f64) -> Result<DMatrix<Complex64>> + Sync,
{
    let frames = (0..n1 * n2)
        .into_par_iter()
        .map(|p| {
            let (i, j) = (p / n2, p % n2);
            let (x1, x2) = (TAU * i as f64 / n1 as f64, TAU * j as f64 / n2 as f64);
            let sol = eigensolve(&h_at(x1, x2)?)?;
            let e = sol.values();
            if states.end > e.len() || states.is_empty() {
                return Err(Error::Domain(format!(
                    "state range {states:?} outside {} levels",
                    e.len()
                )));
            }
            let below = states.start.checked_sub(1).map(|k| e[states.start] - e[k]);
            let above = (states.end < e.len()).then(|| e[states.end] - e[states.end - 1]);
            for gap in [below, above].into_iter().flatten() {
                if gap <= gap_tol {
                    return Err(Error::GapClosing {
                        location: format!("{}={x1:.6}, {}={x2:.6}", names.0, names.1),
                        gap,
                    });
                }
            }
            Ok(sol.frame(states.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameGrid { n1, n2, frames })
}

fn with_refinement<F>(opts: &ChernOptions, compute: F) -> Result<ChernResult>
where
    F: Fn(usize, usize) -> Result<ChernResult>,
{
    let (mut n1, mut n2) = opts.grid;
    if n1 < 2 || n2 < 2 {
        return Err(Error::Domain(format!("grid {n1}x{n2} is too coarse")));
    }
    loop {
        match compute(n1, n2) {
            Err(Error::Refinement { .. } | Error::DegenerateLink { .. })
                if 2 * n1.max(n2) <= opts.max_grid =>
            {
                log::info!("refining Chern grid {n1}x{n2} -> {}x{}", 2 * n1, 2 * n2);
                n1 *= 2;
                n2 *= 2;
            }
            other => return other,
        }
    }
}

/// ν × ν Bloch Hamiltonian at quasi-momentum `k ∈ [0, 2π/ν)`.
pub fn build_bloch_hamiltonian(axis: &AxisModulation, k: f64) -> Result<DMatrix<Complex64>> {
    Ok(bloch_matrix(axis, k)?.into_matrix())
}

/// Chern number of Bloch band `band` over the (k, φ) torus.
pub fn abelian_chern(axis: &AxisModulation, band: usize, opts: &ChernOptions) -> Result<ChernResult> {
    let nu = axis.b.period().ok_or_else(|| {
        Error::Domain("abelian Chern numbers need a rational frequency; use nonabelian_chern".into())
    })?;
    if band >= nu {
        return Err(Error::Domain(format!("band {band} out of range for {nu} bands")));
    }
    with_refinement(opts, |n1, n2| {
        // K = k·ν sweeps [0, 2π)
        let grid = frame_grid(n1, n2, band..band + 1, opts.gap_tol, ("k*nu", "phi"), |kk, phi| {
            build_bloch_hamiltonian(&axis.clone().with_phi(phi), kk / nu as f64)
        })?;
        reduce(plaquette_fluxes(&grid.frames, grid.n1, grid.n2, opts.link_tol)?, n1, n2, opts)
    })
}

fn twisted(axis: &AxisModulation, theta: f64, phi: f64) -> DMatrix<Complex64> {
    axis.clone()
        .with_phi(phi)
        .with_boundary(Boundary::Twisted { theta })
        .hamiltonian()
        .into_matrix()
}

/// Total Chern number of the levels `subset` of the twisted finite chain
/// over the (θ, φ) torus.
pub fn nonabelian_chern(
    axis: &AxisModulation,
    subset: Range<usize>,
    opts: &ChernOptions,
) -> Result<ChernResult> {
    axis.validate()?;
    with_refinement(opts, |n1, n2| {
        let grid = frame_grid(n1, n2, subset.clone(), opts.gap_tol, ("theta", "phi"), |th, phi| {
            Ok(twisted(axis, th, phi))
        })?;
        reduce(plaquette_fluxes(&grid.frames, grid.n1, grid.n2, opts.link_tol)?, n1, n2, opts)
    })
}

/// Spectra of the twisted chain on the (θ, φ) grid, for band partitioning.
pub fn twisted_grid_spectra(axis: &AxisModulation, n1: usize, n2: usize) -> Result<Vec<SpectrumPoint>> {
    (0..n1 * n2)
        .into_par_iter()
        .map(|p| {
            let (theta, phi) = (TAU * (p / n2) as f64 / n1 as f64, TAU * (p % n2) as f64 / n2 as f64);
            let sol = eigensolve(&twisted(axis, theta, phi))?;
            Ok(SpectrumPoint {
                coords: vec![theta, phi],
                values: sol.values().to_vec(),
            })
        })
        .collect()
}

/// Auto-partition of the twisted-chain levels into `count` gapped subsets.
pub fn auto_subsets(axis: &AxisModulation, count: usize, opts: &ChernOptions) -> Result<Vec<Range<usize>>> {
    let points = twisted_grid_spectra(axis, opts.grid.0, opts.grid.1)?;
    band_subsets(&points, count, opts.gap_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SubsetSpec {
    Auto { count: usize },
    Explicit(Vec<Range<usize>>),
}

impl Default for SubsetSpec {
    fn default() -> Self {
        SubsetSpec::Auto { count: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisChern {
    pub subsets: Vec<Range<usize>>,
    pub auto_partitioned: bool,
    pub results: Vec<ChernResult>,
}

impl AxisChern {
    pub fn integers(&self) -> Vec<i64> {
        self.results.iter().map(|r| r.integer).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorChern {
    pub axes: Vec<AxisChern>,
}

impl VectorChern {
    pub fn integers(&self) -> Vec<Vec<i64>> {
        self.axes.iter().map(AxisChern::integers).collect()
    }
}

/// Per-axis non-Abelian Chern numbers; axes are never mixed.
pub fn vector_chern(spec: &LatticeSpec, subsets: &[SubsetSpec], opts: &ChernOptions) -> Result<VectorChern> {
    if subsets.len() != spec.axes().len() {
        return Err(Error::DimensionMismatch {
            expected: spec.axes().len(),
            actual: subsets.len(),
        });
    }
    let axes = spec
        .axes()
        .iter()
        .zip(subsets)
        .map(|(axis, sel)| {
            let (ranges, auto) = match sel {
                SubsetSpec::Auto { count } => (auto_subsets(axis, *count, opts)?, true),
                SubsetSpec::Explicit(r) => (r.clone(), false),
            };
            let results = ranges
                .iter()
                .map(|r| nonabelian_chern(axis, r.clone(), opts))
                .collect::<Result<Vec<_>>>()?;
            Ok(AxisChern {
                subsets: ranges,
                auto_partitioned: auto,
                results,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VectorChern { axes })
}
