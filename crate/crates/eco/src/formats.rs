// SPDX-License-Identifier: Apache-2.0

//! Text formats for libraries, netlists and voltage maps, and the binary
//! model file.
//!
//! All formats are line-oriented UTF-8 with `#` comments. Numbers are
//! written with Rust's shortest round-trip formatting, so write → parse
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use eco_core::library::{CellLibrary, CellVariant, InputPin, Table2d, TimingArc};
use eco_core::netlist::{NetlistBuilder, NetlistGraph};
use eco_core::rl::{ModelError, QNetwork};
use eco_core::{FeatureSchema, VoltageMap};

use crate::error::{EcoError, Result};

struct Lines<'a> {
    origin: &'a str,
    iter: std::iter::Peekable<std::vec::IntoIter<(usize, Vec<&'a str>)>>,
}

impl<'a> Lines<'a> {
    fn new(origin: &'a str, text: &'a str) -> Self {
        let lines: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("");
                let toks: Vec<&str> = l.split_whitespace().collect();
                (!toks.is_empty()).then_some((i + 1, toks))
            })
            .collect();
        Self { origin, iter: lines.into_iter().peekable() }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> EcoError {
        EcoError::Parse { path: self.origin.to_string(), line, msg: msg.into() }
    }
}

fn num(l: &Lines<'_>, line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| l.err(line, format!("expected a number, got `{tok}`")))
}

fn list(l: &Lines<'_>, line: usize, tok: &str) -> Result<Vec<f64>> {
    tok.split(',').filter(|s| !s.is_empty()).map(|t| num(l, line, t)).collect()
}

fn keyword(l: &Lines<'_>, line: usize, toks: &[&str], at: usize, kw: &str) -> Result<()> {
    match toks.get(at) {
        Some(&t) if t == kw => Ok(()),
        Some(t) => Err(l.err(line, format!("expected `{kw}`, got `{t}`"))),
        None => Err(l.err(line, format!("expected `{kw}`"))),
    }
}

fn arg<'t>(l: &Lines<'_>, line: usize, toks: &[&'t str], at: usize) -> Result<&'t str> {
    toks.get(at).copied().ok_or_else(|| l.err(line, format!("missing field {at}")))
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses a library file. `origin` names the source in error messages.
pub fn parse_library(origin: &str, text: &str) -> Result<CellLibrary> {
    let mut l = Lines::new(origin, text);
    let (line, head) = l.iter.next().ok_or_else(|| l.err(0, "empty library file"))?;
    keyword(&l, line, &head, 0, "library")?;
    let name = arg(&l, line, &head, 1)?.to_string();
    keyword(&l, line, &head, 2, "vdd_mv")?;
    let vdd = num(&l, line, arg(&l, line, &head, 3)?)?;
    let mut variants: Vec<CellVariant> = Vec::new();
    while let Some((line, toks)) = l.iter.next() {
        match toks[0] {
            "cell" => {
                if toks.len() != 12 {
                    return Err(l.err(line, "cell line needs class, size, leak_uw, eint_fj, area and vsens_per_mv"));
                }
                keyword(&l, line, &toks, 2, "size")?;
                let size = toks[3].parse().map_err(|_| l.err(line, format!("bad size `{}`", toks[3])))?;
                for (at, kw) in [(4, "leak_uw"), (6, "eint_fj"), (8, "area"), (10, "vsens_per_mv")] {
                    keyword(&l, line, &toks, at, kw)?;
                }
                variants.push(CellVariant {
                    cell_class: toks[1].to_string(),
                    size_index: size,
                    input_pins: Vec::new(),
                    output_pin: String::new(),
                    arcs: Vec::new(),
                    leakage_uw: num(&l, line, toks[5])?,
                    internal_energy_fj: num(&l, line, toks[7])?,
                    area: num(&l, line, toks[9])?,
                    voltage_sensitivity_per_mv: num(&l, line, toks[11])?,
                });
            }
            "pincap" => {
                let v = variants.last_mut().ok_or_else(|| l.err(line, "pincap before any cell"))?;
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(l.err(line, "pincap needs <pin> <fF> pairs"));
                }
                for pair in toks[1..].chunks(2) {
                    let cap = num(&l, line, pair[1])?;
                    v.input_pins.push(InputPin { name: pair[0].to_string(), cap_ff: cap });
                }
            }
            "arc" => {
                if variants.is_empty() {
                    return Err(l.err(line, "arc before any cell"));
                }
                if toks.len() != 7 {
                    return Err(l.err(line, "arc line needs <in> <out> slew_axis <list> load_axis <list>"));
                }
                keyword(&l, line, &toks, 3, "slew_axis")?;
                keyword(&l, line, &toks, 5, "load_axis")?;
                let slew_axis = list(&l, line, toks[4])?;
                let load_axis = list(&l, line, toks[6])?;
                let mut tables = Vec::with_capacity(2);
                for kind in ["delay", "slew"] {
                    let mut values = Vec::with_capacity(slew_axis.len() * load_axis.len());
                    for _ in 0..slew_axis.len() {
                        let (row_line, row) = l.iter.next().ok_or_else(|| l.err(line, format!("missing {kind} row")))?;
                        keyword(&l, row_line, &row, 0, kind)?;
                        let vals: Vec<f64> = row[1..]
                            .iter()
                            .map(|t| list(&l, row_line, t))
                            .collect::<Result<Vec<_>>>()?
                            .concat();
                        if vals.len() != load_axis.len() {
                            return Err(l.err(
                                row_line,
                                format!("{kind} row has {} entries, load axis has {}", vals.len(), load_axis.len()),
                            ));
                        }
                        values.extend(vals);
                    }
                    tables.push(Table2d::new(slew_axis.clone(), load_axis.clone(), values));
                }
                let out_slew = tables.pop().expect("two tables");
                let delay = tables.pop().expect("two tables");
                let v = variants.last_mut().expect("checked above");
                if v.output_pin.is_empty() {
                    v.output_pin = toks[2].to_string();
                } else if v.output_pin != toks[2] {
                    return Err(l.err(line, format!("cell {} has a second output pin {}", v.name(), toks[2])));
                }
                v.arcs.push(TimingArc { from_pin: toks[1].to_string(), to_pin: toks[2].to_string(), delay, out_slew });
            }
            other => return Err(l.err(line, format!("unknown statement `{other}`"))),
        }
    }
    Ok(CellLibrary::new(name, vdd, variants)?)
}

pub fn write_library(lib: &CellLibrary) -> String {
    let mut s = String::new();
    writeln!(s, "library {} vdd_mv {}", lib.name, lib.nominal_vdd_mv).unwrap();
    for v in &lib.variants {
        writeln!(
            s,
            "cell {} size {} leak_uw {} eint_fj {} area {} vsens_per_mv {}",
            v.cell_class, v.size_index, v.leakage_uw, v.internal_energy_fj, v.area, v.voltage_sensitivity_per_mv
        )
        .unwrap();
        let caps: Vec<String> = v.input_pins.iter().map(|p| format!("{} {}", p.name, p.cap_ff)).collect();
        writeln!(s, "pincap {}", caps.join(" ")).unwrap();
        for a in &v.arcs {
            writeln!(
                s,
                "arc {} {} slew_axis {} load_axis {}",
                a.from_pin,
                a.to_pin,
                join(&a.delay.slew_axis),
                join(&a.delay.load_axis)
            )
            .unwrap();
            for (kind, t) in [("delay", &a.delay), ("slew", &a.out_slew)] {
                for row in t.values.chunks(t.cols()) {
                    writeln!(s, "{kind} {}", join(row)).unwrap();
                }
            }
        }
    }
    s
}

/// Parses a netlist file against `lib`.
///
/// Statements: `input <net>`, `output <net>`, `flop <name> d <net> q <net>`
/// and `gate <name> <class> size <k> at <x> <y> in <net,...> out <net>`.
pub fn parse_netlist(origin: &str, text: &str, lib: &CellLibrary) -> Result<NetlistGraph> {
    let l = Lines::new(origin, text);
    let mut b = NetlistBuilder::new(lib);
    for (line, toks) in l.iter.clone() {
        match toks[0] {
            "input" | "output" if toks.len() == 2 => {
                if toks[0] == "input" {
                    b.input(toks[1]);
                } else {
                    b.output(toks[1]);
                }
            }
            "flop" if toks.len() == 6 => {
                keyword(&l, line, &toks, 2, "d")?;
                keyword(&l, line, &toks, 4, "q")?;
                b.flop(toks[1], toks[3], toks[5]);
            }
            "gate" if toks.len() == 12 => {
                for (at, kw) in [(3, "size"), (5, "at"), (8, "in"), (10, "out")] {
                    keyword(&l, line, &toks, at, kw)?;
                }
                let size = toks[4].parse().map_err(|_| l.err(line, format!("bad size `{}`", toks[4])))?;
                let xy = (num(&l, line, toks[6])?, num(&l, line, toks[7])?);
                let ins: Vec<&str> = toks[9].split(',').filter(|s| !s.is_empty()).collect();
                b.gate(toks[1], toks[2], size, xy, &ins, toks[11]);
            }
            "input" | "output" | "flop" | "gate" => {
                return Err(l.err(line, format!("malformed `{}` statement", toks[0])));
            }
            other => return Err(l.err(line, format!("unknown statement `{other}`"))),
        }
    }
    Ok(b.build()?)
}

pub fn write_netlist(g: &NetlistGraph, lib: &CellLibrary) -> String {
    let mut s = String::new();
    for &n in &g.inputs {
        writeln!(s, "input {}", g.nets[n.index()].name).unwrap();
    }
    for &n in &g.outputs {
        writeln!(s, "output {}", g.nets[n.index()].name).unwrap();
    }
    for f in &g.flops {
        writeln!(s, "flop {} d {} q {}", f.name, g.nets[f.d.index()].name, g.nets[f.q.index()].name).unwrap();
    }
    for inst in &g.instances {
        let ins: Vec<&str> = inst.inputs.iter().map(|n| g.nets[n.index()].name.as_str()).collect();
        writeln!(
            s,
            "gate {} {} size {} at {} {} in {} out {}",
            inst.name,
            lib.class_name(inst.class),
            inst.size,
            inst.location.0,
            inst.location.1,
            ins.join(","),
            g.nets[inst.output.index()].name
        )
        .unwrap();
    }
    s
}

/// Instance-name keyed rail voltages as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedVolts {
    pub entries: Vec<(String, f64)>,
}

impl NamedVolts {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Orders the entries by instance id. Every instance of `g` needs
    /// exactly one entry.
    pub fn bind(&self, g: &NetlistGraph) -> Result<VoltageMap> {
        let mut v = vec![f64::NAN; g.num_instances()];
        for (name, mv) in &self.entries {
            let id = g
                .find_instance(name)
                .ok_or_else(|| EcoError::Config(format!("voltage map names unknown instance {name}")))?;
            if !v[id.index()].is_nan() {
                return Err(EcoError::Config(format!("voltage map lists {name} twice")));
            }
            v[id.index()] = *mv;
        }
        if let Some(id) = g.ids().find(|id| v[id.index()].is_nan()) {
            return Err(EcoError::Config(format!("voltage map misses instance {}", g.instance(id).name)));
        }
        Ok(VoltageMap::from_vec(v))
    }
}

/// Parses `volt <instance> <mV>` lines.
pub fn parse_volts(origin: &str, text: &str) -> Result<NamedVolts> {
    let l = Lines::new(origin, text);
    let mut entries = Vec::new();
    for (line, toks) in l.iter.clone() {
        if toks.len() != 3 || toks[0] != "volt" {
            return Err(l.err(line, "expected `volt <instance> <mV>`"));
        }
        let mv = num(&l, line, toks[2])?;
        if mv <= 0.0 {
            return Err(l.err(line, "voltage must be positive"));
        }
        entries.push((toks[1].to_string(), mv));
    }
    Ok(NamedVolts { entries })
}

pub fn write_volts(g: &NetlistGraph, volts: &VoltageMap) -> String {
    let mut s = String::new();
    for id in g.ids() {
        writeln!(s, "volt {} {}", g.instance(id).name, volts.get(id)).unwrap();
    }
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| EcoError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| EcoError::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| EcoError::io(path, e))
}

pub fn load_library(path: &Path) -> Result<CellLibrary> {
    parse_library(&path.display().to_string(), &read_text(path)?)
}

pub fn load_netlist(path: &Path, lib: &CellLibrary) -> Result<NetlistGraph> {
    parse_netlist(&path.display().to_string(), &read_text(path)?, lib)
}

pub fn load_volts(path: &Path, g: &NetlistGraph) -> Result<VoltageMap> {
    parse_volts(&path.display().to_string(), &read_text(path)?)?.bind(g)
}

pub fn save_model(path: &Path, net: &QNetwork, schema: &FeatureSchema) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| EcoError::io(dir, e))?;
        }
    }
    std::fs::write(path, net.to_bytes(schema.hash())).map_err(|e| EcoError::io(path, e))
}

/// Reads a model and checks it was trained on `schema`.
pub fn load_model(path: &Path, schema: &FeatureSchema) -> Result<QNetwork> {
    let bytes = std::fs::read(path).map_err(|e| EcoError::io(path, e))?;
    model_from_bytes(&bytes, schema)
}

pub fn model_from_bytes(bytes: &[u8], schema: &FeatureSchema) -> Result<QNetwork> {
    let (net, hash) = QNetwork::from_bytes(bytes)?;
    if hash != schema.hash() {
        return Err(ModelError::SchemaMismatch { model: hash, design: schema.hash() }.into());
    }
    if net.input_dim() != schema.dim() {
        return Err(ModelError::SchemaMismatch { model: hash, design: schema.hash() }.into());
    }
    Ok(net)
}
