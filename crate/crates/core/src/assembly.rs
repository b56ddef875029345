//! Corner, hinge and surface states assembled as tensor products of 1D
//! chain eigenstates.
//!
//! If each factor is an eigenstate of its axis Hamiltonian, the product is
//! an eigenstate of the Kronecker sum with the summed energy. Which factors
//! are edge states decides the geometric role of the product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::lattice::{KroneckerOperator, LatticeSpec};
use crate::spectral::{analyze_chain, ClassifiedSpectrum, ClassifyOptions, EdgeKind, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Both,
    /// Any edge-localized state.
    Any,
}

impl Side {
    fn matches(self, kind: EdgeKind) -> bool {
        match self {
            Side::Left => kind == EdgeKind::LeftEdge,
            Side::Right => kind == EdgeKind::RightEdge,
            Side::Both => kind == EdgeKind::BothEdges,
            Side::Any => kind.is_edge(),
        }
    }

    fn of(kind: EdgeKind) -> Option<Side> {
        match kind {
            EdgeKind::LeftEdge => Some(Side::Left),
            EdgeKind::RightEdge => Some(Side::Right),
            EdgeKind::BothEdges => Some(Side::Both),
            EdgeKind::Bulk => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisRole {
    Edge(Side),
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateRole {
    Corner,
    Hinge,
    Surface,
    Edge,
    Bulk,
}

impl StateRole {
    pub fn from_axes(roles: &[AxisRole]) -> Self {
        let edges = roles.iter().filter(|r| matches!(r, AxisRole::Edge(_))).count();
        match (roles.len(), edges) {
            (_, 0) => StateRole::Bulk,
            (1, _) => StateRole::Edge,
            (d, e) if d == e => StateRole::Corner,
            (2, 1) => StateRole::Edge,
            (3, 2) => StateRole::Hinge,
            _ => StateRole::Surface,
        }
    }
}

/// One eigenstate of one axis chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentState {
    pub axis: usize,
    pub index: usize,
    pub energy: f64,
    pub amplitudes: Vec<Complex64>,
    pub role: AxisRole,
    pub parity: Option<Parity>,
}

impl ComponentState {
    pub fn from_spectrum(axis: usize, spectrum: &ClassifiedSpectrum, index: usize) -> Self {
        let class = spectrum.classes[index];
        Self {
            axis,
            index,
            energy: spectrum.values()[index],
            amplitudes: spectrum.solution.vector(index),
            role: Side::of(class.kind).map_or(AxisRole::Extended, AxisRole::Edge),
            parity: class.parity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub components: Vec<ComponentState>,
    pub grid: StateGrid,
    pub energy: f64,
    pub role: StateRole,
}

impl ProductState {
    /// Parity letters of the factors (e.g. "SA"), when every factor has one.
    pub fn parity_label(&self) -> Option<String> {
        self.components
            .iter()
            .map(|c| c.parity.map(Parity::letter))
            .collect()
    }

    pub fn axis_roles(&self) -> Vec<AxisRole> {
        self.components.iter().map(|c| c.role).collect()
    }
}

pub fn product_state(spec: &LatticeSpec, components: Vec<ComponentState>) -> Result<ProductState> {
    let dims = spec.dims();
    if components.len() != dims.len() {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            actual: components.len(),
        });
    }
    for (c, &n) in components.iter().zip(&dims) {
        if c.amplitudes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: c.amplitudes.len(),
            });
        }
    }
    let slices: Vec<&[Complex64]> = components.iter().map(|c| c.amplitudes.as_slice()).collect();
    let grid = StateGrid::outer(&slices);
    let energy = components.iter().map(|c| c.energy).sum();
    let roles: Vec<AxisRole> = components.iter().map(|c| c.role).collect();
    Ok(ProductState {
        grid,
        energy,
        role: StateRole::from_axes(&roles),
        components,
    })
}

/// ‖H·ψ − E·ψ‖₂ through the matrix-free product.
pub fn verify_eigenpair(op: &KroneckerOperator, state: &StateGrid, energy: f64) -> Result<f64> {
    let hpsi = op.matvec(state)?;
    Ok(hpsi
        .amplitudes()
        .iter()
        .zip(state.amplitudes())
        .map(|(h, p)| (h - p * energy).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Which edge states of an axis qualify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapChoice {
    /// Only edge states in the lowest gap hosting any.
    First,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisSelection {
    Edge {
        side: Side,
        gap: GapChoice,
        parity: Option<Parity>,
    },
    /// A bulk state; defaults to the top of the lowest band.
    Extended { index: Option<usize> },
}

impl AxisSelection {
    pub fn edge(side: Side) -> Self {
        AxisSelection::Edge {
            side,
            gap: GapChoice::First,
            parity: None,
        }
    }

    pub fn extended() -> Self {
        AxisSelection::Extended { index: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRequest {
    pub axes: Vec<AxisSelection>,
}

impl RoleRequest {
    pub fn corner(sides: &[Side]) -> Self {
        Self {
            axes: sides.iter().map(|&s| AxisSelection::edge(s)).collect(),
        }
    }

    /// Edge factors on every axis except `along`, which is extended.
    pub fn hinge(dims: usize, along: usize, side: Side) -> Self {
        Self {
            axes: (0..dims)
                .map(|a| if a == along { AxisSelection::extended() } else { AxisSelection::edge(side) })
                .collect(),
        }
    }

    /// Edge factor on `normal`, extended on the others.
    pub fn surface(dims: usize, normal: usize, side: Side) -> Self {
        Self {
            axes: (0..dims)
                .map(|a| if a == normal { AxisSelection::edge(side) } else { AxisSelection::extended() })
                .collect(),
        }
    }

    /// Restricts every edge selection to one mirror parity.
    pub fn with_parity(mut self, parity: Parity) -> Self {
        for sel in &mut self.axes {
            if let AxisSelection::Edge { parity: p, .. } = sel {
                *p = Some(parity);
            }
        }
        self
    }
}

fn select_indices(axis: usize, spectrum: &ClassifiedSpectrum, sel: &AxisSelection) -> Result<Vec<usize>> {
    match *sel {
        AxisSelection::Extended { index } => {
            let k = match index {
                Some(k) if k < spectrum.values().len() => k,
                Some(k) => return Err(Error::Domain(format!("state index {k} out of range on axis {axis}"))),
                None => spectrum
                    .first_band_top()
                    .ok_or_else(|| Error::NotFound(format!("axis {axis} has no bulk band")))?,
            };
            Ok(vec![k])
        }
        AxisSelection::Edge { side, gap, parity } => {
            let pool: Vec<usize> = match gap {
                GapChoice::First => spectrum.first_gap_edges(),
                GapChoice::All => (0..spectrum.classes.len()).collect(),
            };
            let picked: Vec<usize> = pool
                .into_iter()
                .filter(|&k| side.matches(spectrum.classes[k].kind))
                .filter(|&k| parity.is_none_or(|p| spectrum.classes[k].parity() == Some(p)))
                .collect();
            if picked.is_empty() {
                let available: Vec<String> = spectrum
                    .classes
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.kind.is_edge())
                    .map(|(k, c)| format!("#{k} {} E={:.6}", c.kind.label(), spectrum.values()[k]))
                    .collect();
                return Err(Error::NotFound(format!(
                    "no {side:?} edge state ({gap:?} gap, parity {parity:?}) on axis {axis}; edge states available: [{}]",
                    available.join(", ")
                )));
            }
            Ok(picked)
        }
    }
}

/// Per-axis classified spectra of `spec`.
pub fn axis_spectra(spec: &LatticeSpec, opts: &ClassifyOptions) -> Result<Vec<ClassifiedSpectrum>> {
    spec.axes().iter().map(|a| analyze_chain(a, opts)).collect()
}

/// Every product state matching `request`, factors enumerated with the
/// last axis fastest.
pub fn construct_states(
    spec: &LatticeSpec,
    request: &RoleRequest,
    opts: &ClassifyOptions,
) -> Result<Vec<ProductState>> {
    let spectra = axis_spectra(spec, opts)?;
    construct_from_spectra(spec, &spectra, request)
}

pub fn construct_from_spectra(
    spec: &LatticeSpec,
    spectra: &[ClassifiedSpectrum],
    request: &RoleRequest,
) -> Result<Vec<ProductState>> {
    if request.axes.len() != spec.axes().len() || spectra.len() != spec.axes().len() {
        return Err(Error::DimensionMismatch {
            expected: spec.axes().len(),
            actual: request.axes.len(),
        });
    }
    let choices = request
        .axes
        .iter()
        .zip(spectra)
        .enumerate()
        .map(|(a, (sel, s))| select_indices(a, s, sel))
        .collect::<Result<Vec<_>>>()?;

    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for options in &choices {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |&k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|picks| {
            let comps = picks
                .iter()
                .enumerate()
                .map(|(a, &k)| {
                    let mut c = ComponentState::from_spectrum(a, &spectra[a], k);
                    if let AxisSelection::Extended { .. } = request.axes[a] {
                        c.role = AxisRole::Extended;
                    }
                    c
                })
                .collect();
            product_state(spec, comps)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{kron_sum, AxisModulation, Frequency};

    fn axis(lambda: f64, n: usize) -> AxisModulation {
        AxisModulation::new(1.0, lambda, Frequency::rational(1, 3).unwrap(), 0.0, n).unwrap()
    }

    fn delta(n: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn product_of_deltas() {
        let spec = LatticeSpec::new(vec![axis(0.5, 4), axis(0.5, 5)]).unwrap();
        let comps = (0..2)
            .map(|a| ComponentState {
                axis: a,
                index: 0,
                energy: 0.5,
                amplitudes: delta(4 + a),
                role: AxisRole::Edge(Side::Left),
                parity: None,
            })
            .collect();
        let p = product_state(&spec, comps).unwrap();
        assert_eq!(p.grid.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(p.energy, 1.0);
        assert_eq!(p.role, StateRole::Corner);
    }

    #[test]
    fn product_dimension_mismatch() {
        let spec = LatticeSpec::new(vec![axis(0.5, 4), axis(0.5, 5)]).unwrap();
        let c = ComponentState {
            axis: 0,
            index: 0,
            energy: 0.0,
            amplitudes: delta(4),
            role: AxisRole::Extended,
            parity: None,
        };
        assert!(product_state(&spec, vec![c.clone(), c.clone()]).is_err());
        assert!(product_state(&spec, vec![c]).is_err());
    }

    #[test]
    fn role_table() {
        use AxisRole::*;
        let e = Edge(Side::Left);
        assert_eq!(StateRole::from_axes(&[e, e]), StateRole::Corner);
        assert_eq!(StateRole::from_axes(&[e, Extended]), StateRole::Edge);
        assert_eq!(StateRole::from_axes(&[e, e, e]), StateRole::Corner);
        assert_eq!(StateRole::from_axes(&[e, e, Extended]), StateRole::Hinge);
        assert_eq!(StateRole::from_axes(&[Extended, e, Extended]), StateRole::Surface);
        assert_eq!(StateRole::from_axes(&[Extended, Extended]), StateRole::Bulk);
    }

    #[test]
    fn both_edge_axes_give_four_corners() {
        let spec = LatticeSpec::new(vec![axis(0.4, 30), axis(0.5, 30)]).unwrap();
        let states = construct_states(&spec, &RoleRequest::corner(&[Side::Both, Side::Both]), &ClassifyOptions::default()).unwrap();
        let labels: Vec<String> = states.iter().map(|s| s.parity_label().unwrap()).collect();
        assert_eq!(labels, vec!["SS", "SA", "AS", "AA"]);
        let op = kron_sum(&spec);
        for s in &states {
            assert!(verify_eigenpair(&op, &s.grid, s.energy).unwrap() < 1e-10 * op.norm_bound());
        }
    }

    #[test]
    fn missing_side_lists_available() {
        let spec = LatticeSpec::new(vec![axis(0.5, 30)]).unwrap();
        let err = construct_states(&spec, &RoleRequest::corner(&[Side::Left]), &ClassifyOptions::default()).unwrap_err();
        match err {
            Error::NotFound(msg) => assert!(msg.contains("both"), "{msg}"),
            e => panic!("{e:?}"),
        }
    }
}
