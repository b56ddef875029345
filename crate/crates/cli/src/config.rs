//! Versioned JSON run configuration.
//!
//! Angles are radians, or strings such as `"0.14pi"`, `"pi"` or `"-0.5π"`.
//! Frequencies are numbers, `"p/q"` strings, or `"golden"`.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use hoti_core::assembly::{AxisSelection, GapChoice, RoleRequest, Side};
use hoti_core::dynamics::{ProbeSite, WindowShape};
use hoti_core::spectral::{ClassifyOptions, Kernel, Parity};
use hoti_core::topology::{ChernOptions, SubsetSpec};
use hoti_core::{AxisModulation, Boundary, Frequency, LatticeSpec};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// An angle in radians, parsed from a number or a multiple-of-π string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl Angle {
    pub fn parse(s: &str) -> Option<f64> {
        let s = s.trim();
        let stripped = s.strip_suffix("pi").or_else(|| s.strip_suffix('π'));
        match stripped {
            Some(coef) => {
                let coef = coef.trim().trim_end_matches('*').trim();
                let c = match coef {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    c => c.parse::<f64>().ok()?,
                };
                Some(c * PI)
            }
            None => s.parse::<f64>().ok(),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or a string like \"0.14pi\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Angle, E> {
                Ok(Angle(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Angle, E> {
                Angle::parse(v)
                    .map(Angle)
                    .ok_or_else(|| E::custom(format!("cannot read {v:?} as an angle")))
            }
        }
        d.deserialize_any(V)
    }
}

/// Modulation frequency as written in a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyValue(pub Frequency);

impl Serialize for FrequencyValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Frequency::Rational { num, den } => s.serialize_str(&format!("{num}/{den}")),
            Frequency::Real(v) => s.serialize_f64(v),
        }
    }
}

impl<'de> Deserialize<'de> for FrequencyValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = FrequencyValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, a \"p/q\" string, or \"golden\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<FrequencyValue, E> {
                Ok(FrequencyValue(Frequency::Real(v)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<FrequencyValue, E> {
                Ok(FrequencyValue(Frequency::Real(v as f64)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<FrequencyValue, E> {
                Ok(FrequencyValue(Frequency::Real(v as f64)))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<FrequencyValue, E> {
                if v.trim() == "golden" {
                    return Ok(FrequencyValue(Frequency::golden()));
                }
                let (p, q) = v
                    .split_once('/')
                    .ok_or_else(|| E::custom(format!("cannot read {v:?} as a frequency")))?;
                let p: u64 = p.trim().parse().map_err(E::custom)?;
                let q: u64 = q.trim().parse().map_err(E::custom)?;
                Frequency::rational(p, q).map(FrequencyValue).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Open,
    Twisted { theta: Angle },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub t: f64,
    pub lambda: f64,
    pub b: FrequencyValue,
    #[serde(default = "zero_angle")]
    pub phi: Angle,
    pub n: usize,
    #[serde(default = "default_origin")]
    pub bond_origin: i64,
    #[serde(default = "open_boundary")]
    pub boundary: BoundaryConfig,
}

fn zero_angle() -> Angle {
    Angle(0.0)
}
fn default_origin() -> i64 {
    1
}
fn open_boundary() -> BoundaryConfig {
    BoundaryConfig::Open
}

impl AxisConfig {
    pub fn to_axis(&self) -> Result<AxisModulation, hoti_core::Error> {
        let boundary = match self.boundary {
            BoundaryConfig::Open => Boundary::Open,
            BoundaryConfig::Twisted { theta } => Boundary::Twisted { theta: theta.0 },
        };
        let axis = AxisModulation::new(self.t, self.lambda, self.b.0, self.phi.0, self.n)?
            .with_bond_origin(self.bond_origin)
            .with_boundary(boundary);
        axis.validate()?;
        Ok(axis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub axes: Vec<AxisConfig>,
    #[serde(default = "default_cap")]
    pub materialize_cap: usize,
}

fn default_cap() -> usize {
    hoti_core::lattice::DEFAULT_MATERIALIZE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub edge_width: usize,
    pub weight_threshold: f64,
    pub ipr_factor: f64,
    pub symmetrize: bool,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let d = ClassifyOptions::default();
        Self {
            edge_width: d.edge_width,
            weight_threshold: d.weight_threshold,
            ipr_factor: d.ipr_factor,
            symmetrize: d.symmetrize,
        }
    }
}

impl ClassifyConfig {
    pub fn options(&self) -> ClassifyOptions {
        ClassifyOptions {
            edge_width: self.edge_width,
            weight_threshold: self.weight_threshold,
            ipr_factor: self.ipr_factor,
            symmetrize: self.symmetrize,
        }
    }
}

/// Evenly spaced phases `start + k·(stop − start)/count`, `k < count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiRange {
    pub start: Angle,
    pub stop: Angle,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiList {
    List(Vec<Angle>),
    Range(PhiRange),
}

impl PhiList {
    pub fn values(&self) -> Vec<f64> {
        match self {
            PhiList::List(v) => v.iter().map(|a| a.0).collect(),
            PhiList::Range(r) => (0..r.count)
                .map(|k| r.start.0 + k as f64 * (r.stop.0 - r.start.0) / r.count as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Phases applied to every axis; absent means each axis keeps its own.
    #[serde(default)]
    pub phis: Option<PhiList>,
    /// Also diagonalize the materialized lattice operator.
    #[serde(default)]
    pub lattice: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelConfig {
    Lorentzian,
    Gaussian,
}

impl From<KernelConfig> for Kernel {
    fn from(k: KernelConfig) -> Self {
        match k {
            KernelConfig::Lorentzian => Kernel::Lorentzian,
            KernelConfig::Gaussian => Kernel::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosConfig {
    pub eta: f64,
    #[serde(default = "lorentzian")]
    pub kernel: KernelConfig,
    /// Energy grid step; defaults to η/4.
    #[serde(default)]
    pub step: Option<f64>,
}

fn lorentzian() -> KernelConfig {
    KernelConfig::Lorentzian
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChernMode {
    /// Per-band numbers over (k, φ) for commensurate axes.
    Abelian,
    /// Per-subset numbers over twisted-boundary (θ, φ) for each axis.
    Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubsetConfig {
    Count(usize),
    Explicit(Vec<[usize; 2]>),
}

impl SubsetConfig {
    pub fn spec(&self) -> SubsetSpec {
        match self {
            SubsetConfig::Count(c) => SubsetSpec::Auto { count: *c },
            SubsetConfig::Explicit(v) => SubsetSpec::Explicit(v.iter().map(|[a, b]| *a..*b).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChernConfig {
    pub mode: ChernMode,
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_max_grid")]
    pub max_grid: usize,
    /// One entry per axis, or a single entry applied to every axis.
    #[serde(default = "default_subsets")]
    pub subsets: Vec<SubsetConfig>,
    #[serde(default)]
    pub flux_csv: bool,
}

fn default_grid() -> [usize; 2] {
    [40, 40]
}
fn default_max_grid() -> usize {
    ChernOptions::default().max_grid
}
fn default_subsets() -> Vec<SubsetConfig> {
    vec![SubsetConfig::Count(3)]
}

impl ChernConfig {
    pub fn options(&self) -> ChernOptions {
        let mut o = ChernOptions::default().with_grid(self.grid[0], self.grid[1]);
        o.max_grid = self.max_grid;
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideConfig {
    Left,
    Right,
    Both,
    Any,
}

impl From<SideConfig> for Side {
    fn from(s: SideConfig) -> Self {
        match s {
            SideConfig::Left => Side::Left,
            SideConfig::Right => Side::Right,
            SideConfig::Both => Side::Both,
            SideConfig::Any => Side::Any,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityConfig {
    S,
    A,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisSelectionConfig {
    Edge {
        side: SideConfig,
        #[serde(default)]
        all_gaps: bool,
        #[serde(default)]
        parity: Option<ParityConfig>,
    },
    Extended {
        #[serde(default)]
        index: Option<usize>,
    },
}

impl AxisSelectionConfig {
    fn selection(&self) -> AxisSelection {
        match self {
            AxisSelectionConfig::Edge { side, all_gaps, parity } => AxisSelection::Edge {
                side: (*side).into(),
                gap: if *all_gaps { GapChoice::All } else { GapChoice::First },
                parity: parity.map(|p| match p {
                    ParityConfig::S => Parity::Symmetric,
                    ParityConfig::A => Parity::Antisymmetric,
                }),
            },
            AxisSelectionConfig::Extended { index } => AxisSelection::Extended { index: *index },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRequestConfig {
    pub name: String,
    pub axes: Vec<AxisSelectionConfig>,
}

impl StateRequestConfig {
    pub fn request(&self) -> RoleRequest {
        RoleRequest {
            axes: self.axes.iter().map(AxisSelectionConfig::selection).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssembleConfig {
    pub states: Vec<StateRequestConfig>,
    /// Compare energies against the materialized operator when it fits.
    #[serde(default)]
    pub dense_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InjectionConfig {
    Probe(ProbeSite),
    Site(Vec<usize>),
}

impl InjectionConfig {
    pub fn label(&self) -> String {
        match self {
            InjectionConfig::Probe(p) => p.name().to_string(),
            InjectionConfig::Site(s) => s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeConfig {
    Square,
    Strip,
}

impl From<ShapeConfig> for WindowShape {
    fn from(s: ShapeConfig) -> Self {
        match s {
            ShapeConfig::Square => WindowShape::Square,
            ShapeConfig::Strip => WindowShape::Strip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub injections: Vec<InjectionConfig>,
    pub z: Vec<f64>,
    /// Window half-width l in sites.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "square")]
    pub shape: ShapeConfig,
    /// Phases applied to every axis; absent means each axis keeps its own.
    #[serde(default)]
    pub phis: Option<PhiList>,
    /// Write the probability grid for every (φ, injection, z).
    #[serde(default = "yes")]
    pub grids: bool,
}

fn default_window() -> usize {
    3
}
fn square() -> ShapeConfig {
    ShapeConfig::Square
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Pgm => "pgm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dos: Option<DosConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chern: Option<ChernConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assemble: Option<AssembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses and validates; errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "version",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.version),
            ));
        }
        if self.lattice.axes.is_empty() || self.lattice.axes.len() > 3 {
            return Err(ConfigError::new(
                "lattice.axes",
                format!("axes must list 1 to 3 axes, got {}", self.lattice.axes.len()),
            ));
        }
        for (i, a) in self.lattice.axes.iter().enumerate() {
            a.to_axis()
                .map_err(|e| ConfigError::new(format!("lattice.axes[{i}]"), e.to_string()))?;
        }
        let c = &self.classify;
        if c.edge_width == 0 || !(c.weight_threshold > 0.0 && c.weight_threshold <= 1.0) || c.ipr_factor <= 0.0 {
            return Err(ConfigError::new(
                "classify",
                "edge_width must be positive, weight_threshold in (0, 1], ipr_factor positive",
            ));
        }
        if let Some(s) = &self.spectrum {
            check_phis(s.phis.as_ref(), "spectrum.phis")?;
        }
        if let Some(d) = &self.dos {
            if !(d.eta > 0.0 && d.eta.is_finite()) {
                return Err(ConfigError::new("dos.eta", "broadening must be positive"));
            }
            if let Some(step) = d.step {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(ConfigError::new("dos.step", "grid step must be positive"));
                }
            }
        }
        if let Some(ch) = &self.chern {
            if ch.grid[0] < 2 || ch.grid[1] < 2 {
                return Err(ConfigError::new("chern.grid", "grid needs at least 2 points per direction"));
            }
            if ch.subsets.len() != 1 && ch.subsets.len() != self.lattice.axes.len() {
                return Err(ConfigError::new(
                    "chern.subsets",
                    "give one subset definition, or one per axis",
                ));
            }
            if ch.mode == ChernMode::Abelian {
                for (i, a) in self.lattice.axes.iter().enumerate() {
                    if a.b.0.period().is_none() {
                        return Err(ConfigError::new(
                            format!("lattice.axes[{i}].b"),
                            "abelian mode needs a rational frequency \"p/q\"",
                        ));
                    }
                }
            }
        }
        if let Some(asm) = &self.assemble {
            if asm.states.is_empty() {
                return Err(ConfigError::new("assemble.states", "no states requested"));
            }
            for (i, s) in asm.states.iter().enumerate() {
                if s.axes.len() != self.lattice.axes.len() {
                    return Err(ConfigError::new(
                        format!("assemble.states[{i}].axes"),
                        format!("expected {} selections, one per lattice axis", self.lattice.axes.len()),
                    ));
                }
                if s.name.is_empty() || !s.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                    return Err(ConfigError::new(
                        format!("assemble.states[{i}].name"),
                        "names must be non-empty and use only [A-Za-z0-9_-]",
                    ));
                }
            }
        }
        if let Some(ev) = &self.evolve {
            if ev.injections.is_empty() {
                return Err(ConfigError::new("evolve.injections", "no injection sites"));
            }
            let dims: Vec<usize> = self.lattice.axes.iter().map(|a| a.n).collect();
            for (i, inj) in ev.injections.iter().enumerate() {
                let ok = match inj {
                    InjectionConfig::Probe(_) => dims.len() == 2,
                    InjectionConfig::Site(s) => s.len() == dims.len() && s.iter().zip(&dims).all(|(v, n)| v < n),
                };
                if !ok {
                    return Err(ConfigError::new(
                        format!("evolve.injections[{i}]"),
                        "named probes need a 2D lattice; explicit sites need one in-range index per axis",
                    ));
                }
            }
            if ev.z.is_empty() || ev.z.iter().any(|z| !(*z >= 0.0 && z.is_finite())) {
                return Err(ConfigError::new("evolve.z", "distances must be a non-empty list of finite values >= 0"));
            }
            check_phis(ev.phis.as_ref(), "evolve.phis")?;
        }
        Ok(())
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec, hoti_core::Error> {
        let axes = self
            .lattice
            .axes
            .iter()
            .map(AxisConfig::to_axis)
            .collect::<Result<Vec<_>, _>>()?;
        LatticeSpec::new(axes)
    }
}

fn check_phis(p: Option<&PhiList>, path: &str) -> Result<(), ConfigError> {
    if let Some(p) = p {
        let v = p.values();
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::new(path, "phase list must be non-empty and finite"));
        }
    }
    Ok(())
}
