//! Modulated hopping chains and their Kronecker-sum assembly.
//!
//! Bond `j` (between sites `j` and `j + 1`, counted from `bond_origin`)
//! carries the coupling `t·(1 + λ·cos(2π·b·j + φ))`. A d-dimensional
//! lattice is the Kronecker sum of one such chain per axis, with x as the
//! leftmost (slowest-varying) factor.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StateGrid;

/// Default cap on the dimension of a materialized Kronecker sum.
pub const DEFAULT_MATERIALIZE_CAP: usize = 4096;

/// Modulation frequency `b`, kept exact when rational.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frequency {
    Rational { num: u64, den: u64 },
    Real(f64),
}

impl Frequency {
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("rational frequency with zero denominator".into()));
        }
        if gcd(num, den) != 1 {
            return Err(Error::Domain(format!(
                "rational frequency {num}/{den} is not in lowest terms"
            )));
        }
        Ok(Frequency::Rational { num, den })
    }

    /// (√5 + 1)/2
    pub fn golden() -> Self {
        Frequency::Real((5f64.sqrt() + 1.0) / 2.0)
    }

    pub fn value(&self) -> f64 {
        match *self {
            Frequency::Rational { num, den } => num as f64 / den as f64,
            Frequency::Real(v) => v,
        }
    }

    /// Unit-cell length ν for a rational frequency μ/ν.
    pub fn period(&self) -> Option<usize> {
        match *self {
            Frequency::Rational { den, .. } => Some(den as usize),
            Frequency::Real(_) => None,
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    Open,
    /// Periodic closure with phase `e^{iθ}` on the wrap bond (N → 1).
    Twisted { theta: f64 },
}

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisModulation {
    pub t: f64,
    pub lambda: f64,
    pub b: Frequency,
    pub phi: f64,
    pub n_sites: usize,
    pub bond_origin: i64,
    pub boundary: Boundary,
}

impl AxisModulation {
    /// Open chain with the default bond origin of 1.
    pub fn new(t: f64, lambda: f64, b: Frequency, phi: f64, n_sites: usize) -> Result<Self> {
        let axis = Self {
            t,
            lambda,
            b,
            phi,
            n_sites,
            bond_origin: 1,
            boundary: Boundary::Open,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_bond_origin(mut self, origin: i64) -> Self {
        self.bond_origin = origin;
        self
    }

    pub fn with_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::Domain(format!("n_sites = {} < 2", self.n_sites)));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::Domain(format!("mean coupling t = {} must be > 0", self.t)));
        }
        if !self.lambda.is_finite() || !self.phi.is_finite() || !self.b.value().is_finite() {
            return Err(Error::Domain("non-finite modulation parameter".into()));
        }
        if let Frequency::Rational { num, den } = self.b {
            Frequency::rational(num, den)?;
        }
        if let Boundary::Twisted { theta } = self.boundary {
            if !theta.is_finite() {
                return Err(Error::Domain("non-finite twist angle".into()));
            }
        }
        Ok(())
    }

    /// Phase reduced to `[0, 2π)`.
    pub fn reported_phi(&self) -> f64 {
        reduce_angle(self.phi)
    }

    /// Index of the wrap bond closing a twisted chain.
    pub fn wrap_bond(&self) -> i64 {
        self.bond_origin + self.n_sites as i64 - 1
    }

    pub fn bond_strength(&self, j: i64) -> Result<f64> {
        let first = self.bond_origin;
        let last = match self.boundary {
            Boundary::Open => self.bond_origin + self.n_sites as i64 - 2,
            Boundary::Twisted { .. } => self.wrap_bond(),
        };
        if j < first || j > last {
            return Err(Error::Domain(format!(
                "bond index {j} outside [{first}, {last}]"
            )));
        }
        Ok(self.coupling(j))
    }

    fn coupling(&self, j: i64) -> f64 {
        self.t * (1.0 + self.lambda * (TAU * self.b.value() * j as f64 + self.phi).cos())
    }

    /// True when some bond coupling is negative (possible for |λ| > 1).
    pub fn has_negative_couplings(&self) -> bool {
        let last = match self.boundary {
            Boundary::Open => self.n_sites as i64 - 2,
            Boundary::Twisted { .. } => self.n_sites as i64 - 1,
        };
        (0..=last).any(|r| self.coupling(self.bond_origin + r) < 0.0)
    }

    pub fn hamiltonian(&self) -> HoppingMatrix {
        build_axis_hamiltonian(self)
    }
}

/// Single-particle hopping matrix of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingMatrix(DMatrix<Complex64>);

impl HoppingMatrix {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    /// Upper bound on the spectral norm: the largest absolute row sum.
    pub fn norm_bound(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn build_axis_hamiltonian(axis: &AxisModulation) -> HoppingMatrix {
    if axis.has_negative_couplings() {
        log::warn!(
            "axis with t={}, lambda={} has negative couplings",
            axis.t,
            axis.lambda
        );
    }
    let n = axis.n_sites;
    let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for r in 0..n - 1 {
        let j = Complex64::new(axis.coupling(axis.bond_origin + r as i64), 0.0);
        h[(r + 1, r)] = j;
        h[(r, r + 1)] = j.conj();
    }
    if let Boundary::Twisted { theta } = axis.boundary {
        let w = axis.coupling(axis.wrap_bond()) * Complex64::from_polar(1.0, theta);
        // accumulate so that 2-site chains and 1-site Bloch cells stay correct
        h[(n - 1, 0)] += w;
        h[(0, n - 1)] += w.conj();
    }
    HoppingMatrix(h)
}

/// Bloch Hamiltonian of one unit cell of a rationally modulated chain.
///
/// The cell holds ν sites; the inter-cell bond carries `e^{i·k·ν}` with
/// `k ∈ [0, 2π/ν)`. For ν = 1 the wrap bond folds onto the diagonal.
pub fn bloch_matrix(axis: &AxisModulation, k: f64) -> Result<HoppingMatrix> {
    let nu = axis.b.period().ok_or_else(|| {
        Error::Domain(
            "Bloch Hamiltonian needs a rational frequency; use the twisted-boundary (non-Abelian) route for irrational b"
                .into(),
        )
    })?;
    let kphase = k * nu as f64;
    let mut h = DMatrix::from_element(nu, nu, Complex64::new(0.0, 0.0));
    for r in 0..nu {
        let j = axis.coupling(axis.bond_origin + r as i64);
        if r + 1 < nu {
            h[(r + 1, r)] += Complex64::new(j, 0.0);
            h[(r, r + 1)] += Complex64::new(j, 0.0);
        } else {
            let w = j * Complex64::from_polar(1.0, kphase);
            h[(nu - 1, 0)] += w;
            h[(0, nu - 1)] += w.conj();
        }
    }
    Ok(HoppingMatrix(h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    axes: Vec<AxisModulation>,
}

impl LatticeSpec {
    pub fn new(axes: Vec<AxisModulation>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::Domain(format!(
                "a lattice needs 1 to 3 axes, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[AxisModulation] {
        &self.axes
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_sites).collect()
    }

    /// Same lattice with every axis phase set to `phi`.
    pub fn with_phi(&self, phi: f64) -> Self {
        Self {
            axes: self.axes.iter().cloned().map(|a| a.with_phi(phi)).collect(),
        }
    }
}

/// Σ_s I ⊗ … ⊗ H_s ⊗ … ⊗ I, held as its per-axis factors.
#[derive(Debug, Clone)]
pub struct KroneckerOperator {
    factors: Vec<HoppingMatrix>,
}

pub fn kron_sum(spec: &LatticeSpec) -> KroneckerOperator {
    KroneckerOperator {
        factors: spec.axes().iter().map(build_axis_hamiltonian).collect(),
    }
}

impl KroneckerOperator {
    pub fn from_factors(factors: Vec<HoppingMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("Kronecker sum of zero factors".into()));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[HoppingMatrix] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(HoppingMatrix::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(HoppingMatrix::dim).product()
    }

    /// Upper bound on ‖H‖₂: the sum of per-axis row-sum norms.
    pub fn norm_bound(&self) -> f64 {
        self.factors.iter().map(HoppingMatrix::norm_bound).sum()
    }

    /// H·v, one axis at a time on lattice fibers.
    pub fn matvec(&self, v: &StateGrid) -> Result<StateGrid> {
        let dims = self.dims();
        if v.dims() != dims.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        let mut out = StateGrid::zeros(&dims);
        for (axis, f) in self.factors.iter().enumerate() {
            v.accumulate_along_axis(f.matrix(), axis, &mut out)?;
        }
        Ok(out)
    }

    pub fn materialize(&self) -> Result<DMatrix<Complex64>> {
        self.materialize_with_cap(DEFAULT_MATERIALIZE_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        let dim = self.dim();
        if dim > cap {
            return Err(Error::ResourceLimit { dim, cap });
        }
        let dims = self.dims();
        let mut total = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (axis, f) in self.factors.iter().enumerate() {
            let left: usize = dims[..axis].iter().product();
            let right: usize = dims[axis + 1..].iter().product();
            let term = DMatrix::<Complex64>::identity(left, left)
                .kronecker(f.matrix())
                .kronecker(&DMatrix::<Complex64>::identity(right, right));
            total += term;
        }
        Ok(total)
    }
}
