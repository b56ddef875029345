//! Waveguide-style propagation and the windowed localization metric ξ.
//!
//! The Kronecker-sum terms commute, so `exp(−iHz)` factorizes into one
//! chain propagator per axis applied along lattice fibers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::lattice::{AxisModulation, LatticeSpec};
use crate::spectral::{eigensolve, EigenSolution};

fn check_distance(z: f64) -> Result<()> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("propagation distance {z} must be finite and >= 0")));
    }
    Ok(())
}

fn exp_from_eigen(sol: &EigenSolution, z: f64) -> DMatrix<Complex64> {
    let v = sol.vectors();
    let mut scaled = v.clone();
    for (k, &e) in sol.values().iter().enumerate() {
        let p = Complex64::from_polar(1.0, -e * z);
        scaled.column_mut(k).iter_mut().for_each(|x| *x *= p);
    }
    scaled * v.adjoint()
}

/// exp(−i·H_s·z) for one chain.
pub fn axis_propagator(axis: &AxisModulation, z: f64) -> Result<DMatrix<Complex64>> {
    check_distance(z)?;
    let sol = eigensolve(axis.hamiltonian().matrix())?;
    Ok(exp_from_eigen(&sol, z))
}

/// Per-axis eigendecompositions, computed once and reused for every z.
#[derive(Debug, Clone)]
pub struct Propagator {
    axes: Vec<EigenSolution>,
}

impl Propagator {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let axes = spec
            .axes()
            .iter()
            .map(|a| eigensolve(a.hamiltonian().matrix()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { axes })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(EigenSolution::dim).collect()
    }

    pub fn factors(&self, z: f64) -> Result<Vec<DMatrix<Complex64>>> {
        check_distance(z)?;
        Ok(self.axes.iter().map(|s| exp_from_eigen(s, z)).collect())
    }

    pub fn apply(&self, state: &StateGrid, z: f64) -> Result<StateGrid> {
        if state.dims() != self.dims().as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.dims().iter().product(),
                actual: state.len(),
            });
        }
        let mut out = state.clone();
        for (axis, u) in self.factors(z)?.iter().enumerate() {
            out = out.apply_along_axis(u, axis)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub initial_site: Option<Vec<usize>>,
    pub distances: Vec<f64>,
    pub states: Vec<StateGrid>,
    pub probabilities: Vec<Vec<f64>>,
}

impl EvolutionResult {
    pub fn dims(&self) -> &[usize] {
        self.states.first().map_or(&[], |s| s.dims())
    }
}

/// Evolves an arbitrary initial grid to each distance in `z_list`.
pub fn evolve_state(spec: &LatticeSpec, initial: &StateGrid, z_list: &[f64]) -> Result<EvolutionResult> {
    let prop = Propagator::new(spec)?;
    let states = z_list
        .par_iter()
        .map(|&z| prop.apply(initial, z))
        .collect::<Result<Vec<_>>>()?;
    let probabilities = states.iter().map(StateGrid::probabilities).collect();
    Ok(EvolutionResult {
        initial_site: None,
        distances: z_list.to_vec(),
        states,
        probabilities,
    })
}

/// Single-site coherent excitation evolved to each distance.
pub fn evolve(spec: &LatticeSpec, initial_site: &[usize], z_list: &[f64]) -> Result<EvolutionResult> {
    let start = StateGrid::delta(&spec.dims(), initial_site)?;
    let mut res = evolve_state(spec, &start, z_list)?;
    res.initial_site = Some(initial_site.to_vec());
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowShape {
    /// Chebyshev ball of half-width l around the center, clipped to the lattice.
    Square,
    /// Every site within l of the boundary along its normal.
    Strip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub xi: f64,
    pub center: Vec<usize>,
    pub half_width: usize,
    pub shape: WindowShape,
}

fn check_probs(probs: &[f64], dims: &[usize], center: &[usize]) -> Result<f64> {
    let len: usize = dims.iter().product();
    if probs.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: probs.len(),
        });
    }
    if center.len() != dims.len() || center.iter().zip(dims).any(|(&c, &n)| c >= n) {
        return Err(Error::Domain(format!("window center {center:?} outside lattice {dims:?}")));
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("probability distribution has zero mass".into()));
    }
    Ok(total)
}

fn windowed_mass(probs: &[f64], dims: &[usize], inside: impl Fn(&[usize]) -> bool) -> f64 {
    let mut site = vec![0usize; dims.len()];
    let mut mass = 0.0;
    for &p in probs {
        if inside(&site) {
            mass += p;
        }
        for a in (0..dims.len()).rev() {
            site[a] += 1;
            if site[a] < dims[a] {
                break;
            }
            site[a] = 0;
        }
    }
    mass
}

/// ξ: probability inside the clipped Chebyshev window `|x_a − c_a| ≤ l`.
pub fn corner_metric(probs: &[f64], dims: &[usize], center: &[usize], l: usize) -> Result<LocalizationReport> {
    let total = check_probs(probs, dims, center)?;
    let mass = windowed_mass(probs, dims, |s| s.iter().zip(center).all(|(&x, &c)| x.abs_diff(c) <= l));
    Ok(LocalizationReport {
        xi: (mass / total).clamp(0.0, 1.0),
        center: center.to_vec(),
        half_width: l,
        shape: WindowShape::Square,
    })
}

/// Boundaries of a 2D lattice; x is axis 0, y is axis 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundarySide {
    Left,
    Right,
    Bottom,
    Top,
}

impl BoundarySide {
    fn normal_axis(self) -> usize {
        match self {
            BoundarySide::Left | BoundarySide::Right => 0,
            BoundarySide::Bottom | BoundarySide::Top => 1,
        }
    }

    fn boundary_coord(self, dims: &[usize]) -> usize {
        match self {
            BoundarySide::Left | BoundarySide::Bottom => 0,
            BoundarySide::Right => dims[0] - 1,
            BoundarySide::Top => dims[1] - 1,
        }
    }
}

/// ξ for an injection on a 2D boundary site.
///
/// `Square` uses the same window as [`corner_metric`] around the injection
/// site; `Strip` takes the whole band of depth l + 1 along that boundary.
pub fn edge_metric(
    probs: &[f64],
    dims: &[usize],
    side: BoundarySide,
    center: &[usize],
    l: usize,
    shape: WindowShape,
) -> Result<LocalizationReport> {
    if dims.len() != 2 {
        return Err(Error::Domain(format!("edge windows are defined on 2D lattices, got {dims:?}")));
    }
    let total = check_probs(probs, dims, center)?;
    let axis = side.normal_axis();
    let edge = side.boundary_coord(dims);
    if center[axis] != edge {
        return Err(Error::Domain(format!("site {center:?} is not on the {side:?} boundary")));
    }
    let mass = match shape {
        WindowShape::Square => {
            windowed_mass(probs, dims, |s| s.iter().zip(center).all(|(&x, &c)| x.abs_diff(c) <= l))
        }
        WindowShape::Strip => windowed_mass(probs, dims, |s| s[axis].abs_diff(edge) <= l),
    };
    Ok(LocalizationReport {
        xi: (mass / total).clamp(0.0, 1.0),
        center: center.to_vec(),
        half_width: l,
        shape,
    })
}

/// Injection sites of the 2D experiment.
///
/// Corners run counterclockwise from the bottom-left (0, 0) with y pointing
/// up: C1 = (0, 0), C2 = (max, 0), C3 = (max, max), C4 = (0, max). Boundary
/// midpoints follow the same order starting at the bottom edge; T is the
/// center. C1 pairs left-edge factors on both axes, C3 right-edge factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeSite {
    C1,
    C2,
    C3,
    C4,
    B1,
    B2,
    B3,
    B4,
    T,
}

impl ProbeSite {
    pub const ALL: [ProbeSite; 9] = [
        ProbeSite::C1,
        ProbeSite::C2,
        ProbeSite::C3,
        ProbeSite::C4,
        ProbeSite::B1,
        ProbeSite::B2,
        ProbeSite::B3,
        ProbeSite::B4,
        ProbeSite::T,
    ];

    pub fn site(self, nx: usize, ny: usize) -> [usize; 2] {
        let (xm, ym) = ((nx - 1) / 2, (ny - 1) / 2);
        let (xe, ye) = (nx - 1, ny - 1);
        match self {
            ProbeSite::C1 => [0, 0],
            ProbeSite::C2 => [xe, 0],
            ProbeSite::C3 => [xe, ye],
            ProbeSite::C4 => [0, ye],
            ProbeSite::B1 => [xm, 0],
            ProbeSite::B2 => [xe, ym],
            ProbeSite::B3 => [xm, ye],
            ProbeSite::B4 => [0, ym],
            ProbeSite::T => [xm, ym],
        }
    }

    pub fn boundary(self) -> Option<BoundarySide> {
        match self {
            ProbeSite::B1 => Some(BoundarySide::Bottom),
            ProbeSite::B2 => Some(BoundarySide::Right),
            ProbeSite::B3 => Some(BoundarySide::Top),
            ProbeSite::B4 => Some(BoundarySide::Left),
            _ => None,
        }
    }

    pub fn is_corner(self) -> bool {
        matches!(self, ProbeSite::C1 | ProbeSite::C2 | ProbeSite::C3 | ProbeSite::C4)
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbeSite::C1 => "C1",
            ProbeSite::C2 => "C2",
            ProbeSite::C3 => "C3",
            ProbeSite::C4 => "C4",
            ProbeSite::B1 => "B1",
            ProbeSite::B2 => "B2",
            ProbeSite::B3 => "B3",
            ProbeSite::B4 => "B4",
            ProbeSite::T => "T",
        }
    }

    /// ξ of `probs` for an injection at this site, with the default square window.
    pub fn metric(self, probs: &[f64], dims: &[usize], l: usize) -> Result<LocalizationReport> {
        let site = self.site(dims[0], dims[1]);
        match self.boundary() {
            Some(side) => edge_metric(probs, dims, side, &site, l, WindowShape::Square),
            None => corner_metric(probs, dims, &site, l),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Frequency;

    fn uniform_axis(n: usize) -> AxisModulation {
        AxisModulation::new(1.0, 0.0, Frequency::golden(), 0.0, n).unwrap()
    }

    #[test]
    fn zero_distance_is_identity() {
        let u = axis_propagator(&uniform_axis(5), 0.0).unwrap();
        assert!((u - DMatrix::<Complex64>::identity(5, 5)).camax() < 1e-14);
        assert!(axis_propagator(&uniform_axis(5), -1.0).is_err());
    }

    #[test]
    fn rabi_transfer() {
        let j = 0.7;
        let axis = AxisModulation::new(j, 0.0, Frequency::golden(), 0.0, 2).unwrap();
        for z in [0.3, 1.1, 2.9] {
            let u = axis_propagator(&axis, z).unwrap();
            assert!((u[(1, 0)].norm_sqr() - (j * z).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn experimental_axis_unitary() {
        let axis = AxisModulation::new(0.3, 0.5, Frequency::golden(), 0.14 * std::f64::consts::PI, 16).unwrap();
        let u = axis_propagator(&axis, 40.0).unwrap();
        let err = (u.adjoint() * &u - DMatrix::<Complex64>::identity(16, 16)).camax();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn ballistic_spreading_is_mirror_symmetric() {
        let spec = LatticeSpec::new(vec![uniform_axis(21)]).unwrap();
        let res = evolve(&spec, &[10], &[0.5, 2.0, 5.0]).unwrap();
        for p in &res.probabilities {
            for i in 0..21 {
                assert!((p[i] - p[20 - i]).abs() < 1e-10);
            }
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        assert!(evolve(&spec, &[21], &[1.0]).is_err());
    }

    #[test]
    fn delta_window_is_one() {
        let dims = [16, 16];
        let g = StateGrid::delta(&dims, &[0, 0]).unwrap();
        let r = corner_metric(&g.probabilities(), &dims, &[0, 0], 3).unwrap();
        assert_eq!(r.xi, 1.0);
        let g = StateGrid::delta(&dims, &[7, 0]).unwrap();
        let r = edge_metric(&g.probabilities(), &dims, BoundarySide::Bottom, &[7, 0], 3, WindowShape::Square).unwrap();
        assert_eq!(r.xi, 1.0);
    }

    #[test]
    fn uniform_window_fractions() {
        let dims = [16, 16];
        let probs = vec![1.0 / 256.0; 256];
        let r = corner_metric(&probs, &dims, &[0, 0], 3).unwrap();
        assert!((r.xi - 0.0625).abs() < 1e-15);
        // boundary midpoint: 7 along the edge × 4 deep
        let r = edge_metric(&probs, &dims, BoundarySide::Bottom, &[7, 0], 3, WindowShape::Square).unwrap();
        assert!((r.xi - 28.0 / 256.0).abs() < 1e-15);
        let r = edge_metric(&probs, &dims, BoundarySide::Bottom, &[7, 0], 3, WindowShape::Strip).unwrap();
        assert!((r.xi - 64.0 / 256.0).abs() < 1e-15);
        assert!(edge_metric(&probs, &dims, BoundarySide::Top, &[7, 0], 3, WindowShape::Square).is_err());
    }

    #[test]
    fn probe_sites() {
        assert_eq!(ProbeSite::C3.site(16, 16), [15, 15]);
        assert_eq!(ProbeSite::B2.site(15, 15), [14, 7]);
        assert_eq!(ProbeSite::T.site(16, 16), [7, 7]);
        for p in ProbeSite::ALL {
            let [x, y] = p.site(16, 16);
            if let Some(side) = p.boundary() {
                let probs = StateGrid::delta(&[16, 16], &[x, y]).unwrap().probabilities();
                assert!(edge_metric(&probs, &[16, 16], side, &[x, y], 3, WindowShape::Square).is_ok());
            }
        }
    }
}
