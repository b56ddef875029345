//! One function per subcommand; each writes its files through an [`Emitter`].

use hoti_core::assembly::{axis_spectra, construct_from_spectra, verify_eigenpair, ProductState};
use hoti_core::dynamics::{corner_metric, edge_metric, evolve, WindowShape};
use hoti_core::spectral::{
    default_energy_grid, dos, eigensolve, spectrum_sweep, ClassifiedSpectrum, DosCurve,
};
use hoti_core::topology::{abelian_chern, vector_chern, ChernResult};
use hoti_core::{kron_sum, LatticeSpec, StateGrid};
use serde::Serialize;
use serde_json::json;

use crate::config::{ChernMode, Format, InjectionConfig, RunConfig};
use crate::emit::{csv_float, pgm, Emitter, Table};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn missing(section: &str) -> CliError {
    CliError::Config(crate::config::ConfigError::new(
        section,
        format!("this command needs a \"{section}\" section"),
    ))
}

fn spec_of(cfg: &RunConfig) -> Result<LatticeSpec> {
    cfg.lattice_spec().map_err(CliError::core("building the lattice"))
}

/// Phases to run: the explicit list, or `None` meaning "as configured".
fn phase_list(list: Option<&crate::config::PhiList>) -> Vec<Option<f64>> {
    match list {
        Some(p) => p.values().into_iter().map(Some).collect(),
        None => vec![None],
    }
}

fn spectrum_rows(table: &mut Table, phi: f64, cs: &ClassifiedSpectrum) {
    for (k, (e, c)) in cs.values().iter().zip(&cs.classes).enumerate() {
        table.push(vec![
            csv_float(phi),
            k.to_string(),
            csv_float(*e),
            c.kind.label().to_string(),
            csv_float(c.left_weight),
            csv_float(c.right_weight),
            csv_float(c.ipr),
        ]);
    }
}

#[derive(Serialize)]
struct SpectrumRecord<'a> {
    phi: f64,
    energies: &'a [f64],
    classes: &'a [hoti_core::spectral::StateClassification],
}

pub fn run_spectrum(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let sc = cfg.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
    let spec = spec_of(cfg)?;
    let opts = cfg.classify.options();
    let header = ["phi", "index", "energy", "kind", "left_weight", "right_weight", "ipr"];
    for (i, axis) in spec.axes().iter().enumerate() {
        let phis: Vec<f64> = match &sc.phis {
            Some(p) => p.values(),
            None => vec![axis.phi],
        };
        let sweep = spectrum_sweep(axis, &phis, &opts).map_err(CliError::core(format!("spectrum of axis {i}")))?;
        let mut table = Table::new(&header);
        for (phi, cs) in sweep.phis.iter().zip(&sweep.spectra) {
            spectrum_rows(&mut table, *phi, cs);
        }
        let params = json!({"axis": i, "n_sites": axis.n_sites, "phis": sweep.phis.len()});
        out.table(&format!("spectrum_axis{i}.csv"), "spectrum", params.clone(), &table)?;
        if cfg.output.formats.contains(&Format::Json) {
            let records: Vec<SpectrumRecord> = sweep
                .phis
                .iter()
                .zip(&sweep.spectra)
                .map(|(phi, cs)| SpectrumRecord {
                    phi: *phi,
                    energies: cs.values(),
                    classes: &cs.classes,
                })
                .collect();
            out.json(&format!("spectrum_axis{i}.json"), "spectrum", params, &records)?;
        }
    }
    if sc.lattice {
        let mut table = Table::new(&["phi", "index", "energy", "ipr"]);
        for phi in phase_list(sc.phis.as_ref()) {
            let s = phi.map_or_else(|| spec.clone(), |p| spec.with_phi(p));
            let dense = kron_sum(&s)
                .materialize_with_cap(cfg.lattice.materialize_cap)
                .map_err(CliError::core("materializing the lattice operator"))?;
            let sol = eigensolve(&dense).map_err(CliError::core("lattice spectrum"))?;
            let label = phi.unwrap_or(s.axes()[0].phi);
            for (k, e) in sol.values().iter().enumerate() {
                let ipr: f64 = sol.vectors().column(k).iter().map(|c| c.norm_sqr().powi(2)).sum();
                table.push(vec![csv_float(label), k.to_string(), csv_float(*e), csv_float(ipr)]);
            }
        }
        out.table(
            "spectrum_lattice.csv",
            "spectrum",
            json!({"dims": spec.dims(), "method": "dense"}),
            &table,
        )?;
    }
    Ok(())
}

fn dos_table(curve: &DosCurve) -> Table {
    let mut t = Table::new(&["energy", "density"]);
    for (e, d) in curve.energies.iter().zip(&curve.density) {
        t.push(vec![csv_float(*e), csv_float(*d)]);
    }
    t
}

fn energy_grid(values: &[f64], eta: f64, step: Option<f64>) -> Vec<f64> {
    match step {
        None => default_energy_grid(values, eta),
        Some(step) => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 100.0 * eta;
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 100.0 * eta;
            let n = ((hi - lo) / step).ceil() as usize + 1;
            (0..n).map(|i| lo + i as f64 * step).collect()
        }
    }
}

pub fn run_dos(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let dc = cfg.dos.as_ref().ok_or_else(|| missing("dos"))?;
    let spec = spec_of(cfg)?;
    let kernel = dc.kernel.into();
    let mut spectra = Vec::new();
    for (i, axis) in spec.axes().iter().enumerate() {
        let sol = eigensolve(axis.hamiltonian().matrix()).map_err(CliError::core(format!("spectrum of axis {i}")))?;
        let values = sol.values().to_vec();
        let curve = dos(&values, dc.eta, &energy_grid(&values, dc.eta, dc.step), kernel)
            .map_err(CliError::core(format!("density of states of axis {i}")))?;
        out.table(
            &format!("dos_axis{i}.csv"),
            "dos",
            json!({"axis": i, "eta": dc.eta, "kernel": dc.kernel, "states": values.len()}),
            &dos_table(&curve),
        )?;
        spectra.push(values);
    }
    if spec.axes().len() > 1 {
        let op = kron_sum(&spec);
        // Dense diagonalization when it fits; otherwise exact sums of axis levels.
        let (values, method) = match op.materialize_with_cap(cfg.lattice.materialize_cap) {
            Ok(dense) => (
                eigensolve(&dense).map_err(CliError::core("lattice spectrum"))?.values().to_vec(),
                "dense",
            ),
            Err(hoti_core::Error::ResourceLimit { .. }) => {
                let mut sums = vec![0.0];
                for s in &spectra {
                    sums = sums.iter().flat_map(|a| s.iter().map(move |b| a + b)).collect();
                }
                sums.sort_by(f64::total_cmp);
                (sums, "additive")
            }
            Err(e) => return Err(CliError::core("materializing the lattice operator")(e)),
        };
        let curve = dos(&values, dc.eta, &energy_grid(&values, dc.eta, dc.step), kernel)
            .map_err(CliError::core("lattice density of states"))?;
        out.table(
            "dos_lattice.csv",
            "dos",
            json!({"dims": spec.dims(), "eta": dc.eta, "kernel": dc.kernel, "method": method, "states": values.len()}),
            &dos_table(&curve),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SubsetRecord {
    levels: [usize; 2],
    integer: i64,
    raw_sum: f64,
    grid: [usize; 2],
    max_plaquette_flux: f64,
}

#[derive(Serialize)]
struct AxisRecord {
    axis: usize,
    auto_partitioned: bool,
    subsets: Vec<SubsetRecord>,
}

#[derive(Serialize)]
struct ChernReport {
    mode: ChernMode,
    integers: Vec<Vec<i64>>,
    axes: Vec<AxisRecord>,
}

fn record(levels: std::ops::Range<usize>, r: &ChernResult) -> SubsetRecord {
    SubsetRecord {
        levels: [levels.start, levels.end],
        integer: r.integer,
        raw_sum: r.raw_sum,
        grid: [r.grid.0, r.grid.1],
        max_plaquette_flux: r.max_plaquette_flux,
    }
}

pub fn run_chern(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let cc = cfg.chern.as_ref().ok_or_else(|| missing("chern"))?;
    let spec = spec_of(cfg)?;
    let opts = cc.options();
    let mut axes: Vec<(AxisRecord, Vec<Vec<f64>>)> = Vec::new();
    match cc.mode {
        ChernMode::Abelian => {
            for (i, axis) in spec.axes().iter().enumerate() {
                let nu = axis.b.period().expect("validated rational frequency");
                let mut subsets = Vec::new();
                let mut fluxes = Vec::new();
                for band in 0..nu {
                    let r = abelian_chern(axis, band, &opts)
                        .map_err(CliError::core(format!("abelian Chern number of axis {i}, band {band}")))?;
                    subsets.push(record(band..band + 1, &r));
                    fluxes.push(r.flux);
                }
                axes.push((
                    AxisRecord {
                        axis: i,
                        auto_partitioned: false,
                        subsets,
                    },
                    fluxes,
                ));
            }
        }
        ChernMode::Vector => {
            let defs: Vec<_> = (0..spec.axes().len())
                .map(|i| cc.subsets.get(i).unwrap_or(&cc.subsets[0]).spec())
                .collect();
            let v = vector_chern(&spec, &defs, &opts).map_err(CliError::core("vector Chern number"))?;
            for (i, ax) in v.axes.into_iter().enumerate() {
                let subsets = ax.subsets.iter().zip(&ax.results).map(|(s, r)| record(s.clone(), r)).collect();
                let fluxes = ax.results.into_iter().map(|r| r.flux).collect();
                axes.push((
                    AxisRecord {
                        axis: i,
                        auto_partitioned: ax.auto_partitioned,
                        subsets,
                    },
                    fluxes,
                ));
            }
        }
    }
    if cc.flux_csv {
        for (rec, fluxes) in &axes {
            for (j, (sub, flux)) in rec.subsets.iter().zip(fluxes).enumerate() {
                let (n1, n2) = (sub.grid[0], sub.grid[1]);
                let mut t = Table::new(&["i", "j", "flux"]);
                for (p, f) in flux.iter().enumerate() {
                    t.push(vec![(p / n2).to_string(), (p % n2).to_string(), csv_float(*f)]);
                }
                debug_assert_eq!(flux.len(), n1 * n2);
                out.table(
                    &format!("chern_flux_axis{}_subset{j}.csv", rec.axis),
                    "berry_flux",
                    json!({"axis": rec.axis, "levels": sub.levels, "grid": sub.grid}),
                    &t,
                )?;
            }
        }
    }
    let report = ChernReport {
        mode: cc.mode,
        integers: axes.iter().map(|(a, _)| a.subsets.iter().map(|s| s.integer).collect()).collect(),
        axes: axes.into_iter().map(|(a, _)| a).collect(),
    };
    out.json(
        "chern.json",
        "chern",
        json!({"mode": cc.mode, "grid": cc.grid, "max_grid": cc.max_grid}),
        &report,
    )?;
    Ok(())
}

#[derive(Serialize)]
struct StateRecord<'a> {
    name: &'a str,
    role: hoti_core::assembly::StateRole,
    parity: Option<String>,
    energy: f64,
    residual: f64,
    components: Vec<usize>,
    component_energies: Vec<f64>,
    state: &'a StateGrid,
}

fn probability_table(grid: &StateGrid, probs: &[f64]) -> Table {
    let axes = ["x", "y", "z"];
    let mut header: Vec<&str> = axes[..grid.dims().len()].to_vec();
    header.push("probability");
    let mut t = Table::new(&header);
    for (idx, p) in probs.iter().enumerate() {
        let mut row: Vec<String> = grid.site_of(idx).iter().map(|v| v.to_string()).collect();
        row.push(csv_float(*p));
        t.push(row);
    }
    t
}

fn emit_grid(
    out: &mut Emitter,
    formats: &[Format],
    stem: &str,
    kind: &str,
    params: serde_json::Value,
    grid: &StateGrid,
    json_value: &impl Serialize,
) -> Result<()> {
    let probs = grid.probabilities();
    for f in formats {
        let name = format!("{stem}.{}", f.extension());
        match f {
            Format::Csv => out.table(&name, kind, params.clone(), &probability_table(grid, &probs))?,
            Format::Json => out.json(&name, kind, params.clone(), json_value)?,
            Format::Pgm => {
                if grid.dims().len() == 2 {
                    let img = pgm(&probs, grid.dims()[0], grid.dims()[1]);
                    out.write(&name, kind, params.clone(), &img)?;
                } else {
                    log::warn!("skipping {name}: heatmaps need a 2D lattice");
                }
            }
        }
    }
    Ok(())
}

pub fn run_assemble(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let ac = cfg.assemble.as_ref().ok_or_else(|| missing("assemble"))?;
    let spec = spec_of(cfg)?;
    let opts = cfg.classify.options();
    let op = kron_sum(&spec);
    let spectra = axis_spectra(&spec, &opts).map_err(CliError::core("axis spectra"))?;
    let dense_levels = if ac.dense_check {
        let dense = op
            .materialize_with_cap(cfg.lattice.materialize_cap)
            .map_err(CliError::core("materializing the lattice operator for the dense check"))?;
        Some(eigensolve(&dense).map_err(CliError::core("dense lattice spectrum"))?.values().to_vec())
    } else {
        None
    };
    let mut header = vec!["name", "k", "role", "parity", "energy", "residual", "ipr", "components"];
    if dense_levels.is_some() {
        header.push("dense_deviation");
    }
    let mut summary = Table::new(&header);
    for (r, req) in ac.states.iter().enumerate() {
        let states: Vec<ProductState> = construct_from_spectra(&spec, &spectra, &req.request())
            .map_err(CliError::core(format!("assembling \"{}\"", req.name)))?;
        for (k, s) in states.iter().enumerate() {
            let residual = verify_eigenpair(&op, &s.grid, s.energy)
                .map_err(CliError::core(format!("verifying \"{}\" #{k}", req.name)))?;
            let components: Vec<usize> = s.components.iter().map(|c| c.index).collect();
            let mut row = vec![
                req.name.clone(),
                k.to_string(),
                format!("{:?}", s.role).to_lowercase(),
                s.parity_label().unwrap_or_default(),
                csv_float(s.energy),
                csv_float(residual),
                csv_float(s.grid.ipr()),
                components.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";"),
            ];
            if let Some(levels) = &dense_levels {
                let dev = levels.iter().map(|v| (v - s.energy).abs()).fold(f64::INFINITY, f64::min);
                row.push(csv_float(dev));
            }
            summary.push(row);
            let record = StateRecord {
                name: &req.name,
                role: s.role,
                parity: s.parity_label(),
                energy: s.energy,
                residual,
                component_energies: s.components.iter().map(|c| c.energy).collect(),
                components,
                state: &s.grid,
            };
            let params = json!({"request": r, "name": req.name, "k": k, "energy": s.energy, "residual": residual});
            emit_grid(out, &cfg.output.formats, &format!("state_{}_{k}", req.name), "state", params, &s.grid, &record)?;
        }
    }
    out.table("assemble.csv", "assembly_summary", json!({"dims": spec.dims()}), &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct ProbabilityRecord<'a> {
    phi: Option<f64>,
    injection: String,
    site: &'a [usize],
    z: f64,
    dims: &'a [usize],
    probabilities: &'a [f64],
}

pub fn run_evolve(cfg: &RunConfig, out: &mut Emitter) -> Result<()> {
    let ec = cfg.evolve.as_ref().ok_or_else(|| missing("evolve"))?;
    let base = spec_of(cfg)?;
    let dims = base.dims();
    let mut xi = Table::new(&["phi", "injection", "site", "z", "xi"]);
    for (pi, phi) in phase_list(ec.phis.as_ref()).into_iter().enumerate() {
        let spec = phi.map_or_else(|| base.clone(), |p| base.with_phi(p));
        for inj in &ec.injections {
            let (site, probe) = match inj {
                InjectionConfig::Probe(p) => (p.site(dims[0], dims[1]).to_vec(), Some(*p)),
                InjectionConfig::Site(s) => (s.clone(), None),
            };
            let label = inj.label();
            let res = evolve(&spec, &site, &ec.z).map_err(CliError::core(format!("propagating from {label}")))?;
            for (zi, (z, probs)) in res.distances.iter().zip(&res.probabilities).enumerate() {
                let report = match probe.and_then(|p| p.boundary()) {
                    Some(side) => edge_metric(probs, &dims, side, &site, ec.window, ec.shape.into()),
                    None => corner_metric(probs, &dims, &site, ec.window),
                }
                .map_err(CliError::core(format!("localization at {label}")))?;
                let phi_label = phi.unwrap_or(spec.axes()[0].phi);
                xi.push(vec![
                    csv_float(phi_label),
                    label.clone(),
                    site.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
                    csv_float(*z),
                    csv_float(report.xi),
                ]);
                if ec.grids {
                    let grid = &res.states[zi];
                    let record = ProbabilityRecord {
                        phi,
                        injection: label.clone(),
                        site: &site,
                        z: *z,
                        dims: &dims,
                        probabilities: probs,
                    };
                    let params = json!({"phi": phi_label, "injection": label, "z": z});
                    emit_grid(
                        out,
                        &cfg.output.formats,
                        &format!("prob_phi{pi}_{label}_z{zi}"),
                        "probability",
                        params,
                        grid,
                        &record,
                    )?;
                }
            }
        }
    }
    let shape = match WindowShape::from(ec.shape) {
        WindowShape::Square => "square",
        WindowShape::Strip => "strip",
    };
    out.table("xi.csv", "localization", json!({"window": ec.window, "edge_window": shape}), &xi)?;
    Ok(())
}
