// SPDX-License-Identifier: Apache-2.0

//! Design preparation and the bundled synthetic benchmark suite.
//!
//! A prepared [`Case`] fixes the initial sizing, the frozen voltage map
//! and the two reference delays: the critical delay of the initial sizing
//! at nominal supply (the default target) and under droop (the default
//! start of the clock schedule).

use eco_core::irgrid::{build_mesh, scale_mesh_to_target, solve_ir, MeshConfig, Pads};
use eco_core::netlist::{NetlistBuilder, NetlistGraph};
use eco_core::{compute_power, gen_synthetic_library, gen_synthetic_netlist, sta_full, Activity, CellLibrary, VoltageMap};

use crate::error::{EcoError, Result};
use crate::oracle::brute_force_oracle;

/// Mesh nodes per placement unit used unless configured otherwise.
pub const DEFAULT_MESH_PITCH: f64 = 2.0;
pub const DEFAULT_SHEET_RESISTANCE: f64 = 1.0;

/// Where the frozen rail voltages come from.
#[derive(Debug, Clone, PartialEq)]
pub enum VoltSource {
    Map(VoltageMap),
    /// Solve a corner-padded mesh scaled to this worst droop.
    Mesh { target_mv: f64, pitch: f64, sheet_resistance: f64, pads: Pads, dims: Option<(usize, usize)> },
}

impl VoltSource {
    pub fn mesh(target_mv: f64) -> Self {
        VoltSource::Mesh {
            target_mv,
            pitch: DEFAULT_MESH_PITCH,
            sheet_resistance: DEFAULT_SHEET_RESISTANCE,
            pads: Pads::Corners,
            dims: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub graph: NetlistGraph,
    pub volts: VoltageMap,
    pub activity: Activity,
    pub nominal_delay: f64,
    pub ir_delay: f64,
    pub target_delay: f64,
    pub initial_delay: f64,
    /// Total power of the initial sizing under droop; the objective's
    /// power divisor.
    pub initial_power: f64,
}

impl Case {
    pub fn worst_droop(&self, lib: &CellLibrary) -> f64 {
        self.volts.worst_droop(lib.nominal_vdd_mv)
    }
}

fn critical_delay(g: &NetlistGraph, lib: &CellLibrary, volts: &VoltageMap) -> Result<f64> {
    let t = sta_full(g, lib, volts, 0.0).map_err(eco_core::design::DesignError::from)?;
    Ok(t.critical_delay(g))
}

/// Solves the voltage map if needed and measures the reference delays.
pub fn prepare(
    name: &str,
    lib: &CellLibrary,
    graph: NetlistGraph,
    source: &VoltSource,
    activity: Activity,
    target_delay: Option<f64>,
    initial_delay: Option<f64>,
) -> Result<Case> {
    let n = graph.num_instances();
    let nominal = VoltageMap::uniform(n, lib.nominal_vdd_mv);
    let volts = match source {
        VoltSource::Map(v) => {
            if v.len() != n {
                return Err(EcoError::Config(format!("voltage map has {} entries, netlist {} instances", v.len(), n)));
            }
            v.clone()
        }
        VoltSource::Mesh { target_mv, pitch, sheet_resistance, pads, dims } => {
            let p0 = compute_power(&graph, lib, &nominal, &activity);
            let extent = graph.instances.iter().fold(0.0f64, |m, i| m.max(i.location.0).max(i.location.1));
            let mut cfg = MeshConfig::covering(extent, *pitch, *sheet_resistance);
            cfg.pads = pads.clone();
            if let Some((rows, cols)) = dims {
                cfg.rows = *rows;
                cfg.cols = *cols;
            }
            let mesh = build_mesh(&graph, &p0, lib.nominal_vdd_mv, &cfg)?;
            solve_ir(&scale_mesh_to_target(&mesh, *target_mv)?)?
        }
    };
    let nominal_delay = critical_delay(&graph, lib, &nominal)?;
    let ir_delay = critical_delay(&graph, lib, &volts)?;
    let target_delay = target_delay.unwrap_or(nominal_delay);
    let initial_delay = initial_delay.unwrap_or(ir_delay.max(target_delay));
    if !(target_delay > 0.0) {
        return Err(EcoError::Config(format!("target delay must be positive, got {target_delay}")));
    }
    if target_delay > initial_delay {
        return Err(EcoError::Config(format!("target delay {target_delay} exceeds initial delay {initial_delay}")));
    }
    let initial_power = compute_power(&graph, lib, &volts, &activity).total_power;
    Ok(Case {
        name: name.to_string(),
        graph,
        volts,
        activity,
        nominal_delay,
        ir_delay,
        target_delay,
        initial_delay,
        initial_power,
    })
}

/// Suite designs: name, gates, logic depth, netlist seed.
pub const SUITE: [(&str, usize, usize, u64); 7] = [
    ("syn50", 50, 8, 11),
    ("syn100", 100, 10, 12),
    ("syn200", 200, 12, 13),
    ("syn400", 400, 16, 14),
    ("syn700", 700, 20, 15),
    ("syn1000", 1000, 24, 16),
    ("syn2000", 2000, 30, 17),
];

/// Circuits small enough for exhaustive search, on [`oracle_library`].
pub const ORACLE_CASES: [&str; 3] = ["chain8", "tree10", "dag10"];

/// The two droop regimes, mV.
pub const DROOPS_MV: [f64; 2] = [5.0, 10.0];

/// 8 classes, 4 sizes each.
pub fn suite_library() -> CellLibrary {
    gen_synthetic_library(1, 8, 4)
}

/// INV, BUF and NAND2 with 3 sizes each.
pub fn oracle_library() -> CellLibrary {
    gen_synthetic_library(2, 3, 3)
}

pub fn is_oracle_case(name: &str) -> bool {
    ORACLE_CASES.contains(&name)
}

/// Library a bundled design is built on.
pub fn library_for(name: &str) -> Result<CellLibrary> {
    if is_oracle_case(name) {
        Ok(oracle_library())
    } else if SUITE.iter().any(|s| s.0 == name) {
        Ok(suite_library())
    } else {
        Err(unknown(name))
    }
}

fn unknown(name: &str) -> EcoError {
    let names: Vec<&str> = SUITE.iter().map(|s| s.0).chain(ORACLE_CASES).collect();
    EcoError::Config(format!("unknown suite design {name}; known: {}", names.join(", ")))
}

/// The initial netlist of a bundled design, built on `lib` from
/// [`library_for`].
pub fn suite_netlist(name: &str, lib: &CellLibrary) -> Result<NetlistGraph> {
    if let Some(&(_, n, depth, seed)) = SUITE.iter().find(|s| s.0 == name) {
        return Ok(gen_synthetic_netlist(seed, n, depth, lib));
    }
    let g = match name {
        "chain8" => chain(lib, 8)?,
        "tree10" => tree10(lib)?,
        "dag10" => gen_synthetic_netlist(5, 10, 4, lib),
        _ => return Err(unknown(name)),
    };
    presize(g, lib, ORACLE_PRESIZE_FACTOR)
}

/// Clock of the nominal-supply sizing of the oracle circuits, relative to
/// the delay of their all-minimum sizing.
pub const ORACLE_PRESIZE_FACTOR: f64 = 0.95;

/// Minimum-power sizing of `g` at nominal supply for a clock of `factor`
/// times the all-minimum critical delay: an input that closes timing
/// without droop, as a sizing-only synthesis run would deliver.
pub fn presize(mut g: NetlistGraph, lib: &CellLibrary, factor: f64) -> Result<NetlistGraph> {
    let n = g.num_instances();
    g.set_sizes(&vec![0; n])?;
    let nominal = VoltageMap::uniform(n, lib.nominal_vdd_mv);
    let clock = factor * critical_delay(&g, lib, &nominal)?;
    let best = brute_force_oracle(&g, lib, &nominal, &Activity::default(), clock)?
        .ok_or_else(|| EcoError::Infeasible(format!("no sizing meets {clock} ps at nominal supply")))?;
    g.set_sizes(&best.sizes)?;
    Ok(g)
}

fn chain(lib: &CellLibrary, n: usize) -> Result<NetlistGraph> {
    let mut b = NetlistBuilder::new(lib);
    b.input("n0");
    for k in 0..n {
        b.gate(&format!("u{k}"), "INV", 0, (k as f64, (k % 2) as f64), &[&format!("n{k}")], &format!("n{}", k + 1));
    }
    b.output(&format!("n{n}"));
    Ok(b.build()?)
}

/// Five leaf NAND2s, three in the middle, two at the top; no
/// reconvergence.
fn tree10(lib: &CellLibrary) -> Result<NetlistGraph> {
    let mut b = NetlistBuilder::new(lib);
    for k in 0..11 {
        b.input(&format!("i{k}"));
    }
    for k in 0..5 {
        let (a, c) = (format!("i{}", 2 * k), format!("i{}", 2 * k + 1));
        b.gate(&format!("l{k}"), "NAND2", 0, (2.0 * k as f64, 0.0), &[&a, &c], &format!("nl{k}"));
    }
    b.gate("m0", "NAND2", 0, (1.0, 2.0), &["nl0", "nl1"], "nm0");
    b.gate("m1", "NAND2", 0, (5.0, 2.0), &["nl2", "nl3"], "nm1");
    b.gate("m2", "NAND2", 0, (8.0, 2.0), &["nl4", "i10"], "nm2");
    b.gate("t0", "NAND2", 0, (3.0, 4.0), &["nm0", "nm1"], "nt0");
    b.gate("t1", "NAND2", 0, (6.0, 5.0), &["nt0", "nm2"], "out");
    b.output("out");
    Ok(b.build()?)
}

/// A bundled design at `droop_mv` worst droop with default delays.
pub fn suite_case(name: &str, lib: &CellLibrary, droop_mv: f64) -> Result<Case> {
    let g = suite_netlist(name, lib)?;
    prepare(name, lib, g, &VoltSource::mesh(droop_mv), Activity::default(), None, None)
}
