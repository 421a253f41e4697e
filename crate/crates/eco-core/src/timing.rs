// SPDX-License-Identifier: Apache-2.0

//! Static timing analysis with rail-voltage delay scaling.
//!
//! Arrival, slew and load live on each gate's single output pin. A gate's
//! arc delay is looked up at (driver output slew, own load) and scaled by
//! `1 + sensitivity * (nominal_vdd - rail_voltage)`; slews are not scaled.
//! The arc with the latest arrival also supplies the output slew.
//! Startpoints (primary inputs, flop outputs) launch at time 0 with
//! [`INPUT_SLEW_PS`]; endpoints are required at the clock period.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::irgrid::VoltageMap;
use crate::library::CellLibrary;
use crate::netlist::{ChangeRecord, Driver, InstId, NetlistGraph, Sink};

/// Wire capacitance added per fanout edge.
pub const WIRE_CAP_PER_FANOUT_FF: f64 = 0.5;
/// Pin capacitance of primary outputs and flop data inputs.
pub const BOUNDARY_PIN_CAP_FF: f64 = 1.0;
/// Slew at primary inputs and flop outputs.
pub const INPUT_SLEW_PS: f64 = 20.0;
/// Slacks closer to zero than this are rounding noise from summing the
/// same arcs in a different order, and read as zero.
pub const SLACK_TOL_PS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimingError {
    #[error("voltage map covers {got} instances, netlist has {expected}")]
    MissingVoltage { expected: usize, got: usize },
    #[error("previous annotation covers {got} instances, netlist has {expected}")]
    StaleAnnotation { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingAnnotation {
    pub clock_period: f64,
    /// Per instance, at the output pin.
    pub arrival: Vec<f64>,
    pub required: Vec<f64>,
    pub out_slew: Vec<f64>,
    pub slack: Vec<f64>,
    pub load: Vec<f64>,
    /// Maximum slew over the input pins.
    pub in_slew: Vec<f64>,
    /// Input pin whose arc sets the arrival.
    pub critical_pin: Vec<usize>,
    /// Scaled arc delay per input pin, indexed by [`NetlistGraph::pin_index`].
    pub arc_delay: Vec<f64>,
    pub wns: f64,
    pub tns: f64,
    /// Instances whose forward timing was evaluated by the last update.
    pub forward_evals: usize,
}

impl TimingAnnotation {
    pub fn num_instances(&self) -> usize {
        self.arrival.len()
    }

    /// Worst arrival over gates that drive an endpoint.
    pub fn critical_delay(&self, g: &NetlistGraph) -> f64 {
        g.ids()
            .filter(|&i| drives_endpoint(g, i))
            .map(|i| self.arrival[i.index()])
            .fold(0.0, f64::max)
    }

    pub fn violations(&self) -> usize {
        self.slack.iter().filter(|s| **s < 0.0).count()
    }
}

pub fn drives_endpoint(g: &NetlistGraph, id: InstId) -> bool {
    g.nets[g.instance(id).output.index()]
        .sinks
        .iter()
        .any(|s| !matches!(s, Sink::Gate { .. }))
}

/// Capacitive load on the output of `id`, including wire caps.
pub fn output_load(g: &NetlistGraph, lib: &CellLibrary, id: InstId) -> f64 {
    let net = &g.nets[g.instance(id).output.index()];
    let mut load = 0.0;
    for s in &net.sinks {
        load += match *s {
            Sink::Gate { inst, pin } => {
                let i = g.instance(inst);
                lib.variant(i.class, i.size).pin_cap(pin)
            }
            Sink::Output | Sink::Flop(_) => BOUNDARY_PIN_CAP_FF,
        } + WIRE_CAP_PER_FANOUT_FF;
    }
    load
}

fn delay_scale(lib: &CellLibrary, g: &NetlistGraph, volts: &VoltageMap, id: InstId) -> f64 {
    let i = g.instance(id);
    let v = lib.variant(i.class, i.size);
    1.0 + v.voltage_sensitivity_per_mv * (lib.nominal_vdd_mv - volts.get(id))
}

struct Ctx<'a> {
    g: &'a NetlistGraph,
    lib: &'a CellLibrary,
    volts: &'a VoltageMap,
}

impl Ctx<'_> {
    /// Recomputes load, arc delays, arrival and slews of `id`. Returns
    /// whether arrival or output slew changed.
    fn forward(&self, t: &mut TimingAnnotation, id: InstId) -> bool {
        let (g, lib) = (self.g, self.lib);
        let inst = g.instance(id);
        let variant = lib.variant(inst.class, inst.size);
        let load = output_load(g, lib, id);
        let scale = delay_scale(lib, g, self.volts, id);
        let mut arrival = f64::NEG_INFINITY;
        let mut slew = 0.0;
        let mut in_slew: f64 = 0.0;
        let mut crit = 0;
        for (p, net) in inst.inputs.iter().enumerate() {
            let (src_arr, src_slew) = match g.nets[net.index()].driver {
                Driver::Gate(d) => (t.arrival[d.index()], t.out_slew[d.index()]),
                Driver::Input | Driver::Flop(_) => (0.0, INPUT_SLEW_PS),
            };
            let (d, s) = variant.arcs[p].eval(src_slew, load);
            let d = d * scale;
            t.arc_delay[g.pin_index(id, p)] = d;
            in_slew = in_slew.max(src_slew);
            if src_arr + d > arrival {
                arrival = src_arr + d;
                slew = s;
                crit = p;
            }
        }
        let k = id.index();
        let changed = t.arrival[k] != arrival || t.out_slew[k] != slew;
        t.arrival[k] = arrival;
        t.out_slew[k] = slew;
        t.load[k] = load;
        t.in_slew[k] = in_slew;
        t.critical_pin[k] = crit;
        changed
    }

    /// Recomputes the required time of `id` from its sinks.
    fn backward(&self, t: &mut TimingAnnotation, id: InstId) -> bool {
        let g = self.g;
        let mut req = f64::INFINITY;
        for s in &g.nets[g.instance(id).output.index()].sinks {
            let r = match *s {
                Sink::Gate { inst, pin } => t.required[inst.index()] - t.arc_delay[g.pin_index(inst, pin)],
                Sink::Output | Sink::Flop(_) => t.clock_period,
            };
            req = req.min(r);
        }
        let changed = t.required[id.index()] != req;
        t.required[id.index()] = req;
        changed
    }
}

fn summarize(t: &mut TimingAnnotation) {
    let mut wns = f64::INFINITY;
    let mut tns = 0.0;
    for (s, (r, a)) in t.slack.iter_mut().zip(t.required.iter().zip(&t.arrival)) {
        *s = r - a;
        if s.abs() < SLACK_TOL_PS {
            *s = 0.0;
        }
        wns = wns.min(*s);
        if *s < 0.0 {
            tns += *s;
        }
    }
    t.wns = if wns.is_finite() { wns } else { 0.0 };
    t.tns = tns;
}

fn check_volts(g: &NetlistGraph, volts: &VoltageMap) -> Result<(), TimingError> {
    if volts.len() != g.num_instances() {
        return Err(TimingError::MissingVoltage { expected: g.num_instances(), got: volts.len() });
    }
    Ok(())
}

/// Full forward/backward timing pass.
pub fn sta_full(
    g: &NetlistGraph,
    lib: &CellLibrary,
    volts: &VoltageMap,
    clock: f64,
) -> Result<TimingAnnotation, TimingError> {
    check_volts(g, volts)?;
    let n = g.num_instances();
    let mut t = TimingAnnotation {
        clock_period: clock,
        arrival: vec![0.0; n],
        required: vec![0.0; n],
        out_slew: vec![0.0; n],
        slack: vec![0.0; n],
        load: vec![0.0; n],
        in_slew: vec![0.0; n],
        critical_pin: vec![0; n],
        arc_delay: vec![0.0; g.num_pins()],
        wns: 0.0,
        tns: 0.0,
        forward_evals: n,
    };
    let ctx = Ctx { g, lib, volts };
    for &id in g.topo_order() {
        ctx.forward(&mut t, id);
    }
    for &id in g.topo_order().iter().rev() {
        ctx.backward(&mut t, id);
    }
    summarize(&mut t);
    Ok(t)
}

/// Updates `prev` after `change` has been applied to `g`.
///
/// Forward timing is re-evaluated on the changed gate, the drivers of its
/// inputs (their load changed) and whatever downstream gates see a new
/// arrival or slew. Required times are re-evaluated upstream of every gate
/// whose arc delays may have moved. The result is bit-identical to
/// [`sta_full`].
pub fn sta_incremental(
    g: &NetlistGraph,
    lib: &CellLibrary,
    volts: &VoltageMap,
    clock: f64,
    prev: &TimingAnnotation,
    change: &ChangeRecord,
) -> Result<TimingAnnotation, TimingError> {
    let mut t = prev.clone();
    update_in_place(g, lib, volts, clock, &mut t, change)?;
    Ok(t)
}

/// In-place form of [`sta_incremental`].
pub fn update_in_place(
    g: &NetlistGraph,
    lib: &CellLibrary,
    volts: &VoltageMap,
    clock: f64,
    t: &mut TimingAnnotation,
    change: &ChangeRecord,
) -> Result<(), TimingError> {
    let n = g.num_instances();
    if t.num_instances() != n {
        return Err(TimingError::StaleAnnotation { expected: n, got: t.num_instances() });
    }
    check_volts(g, volts)?;
    if t.clock_period != clock {
        *t = sta_full(g, lib, volts, clock)?;
        return Ok(());
    }
    if change.is_noop() {
        t.forward_evals = 0;
        return Ok(());
    }
    let ctx = Ctx { g, lib, volts };
    let mut queued = vec![false; n];
    let mut fwd: BinaryHeap<Reverse<(u32, u32)>> = BinaryHeap::new();
    let push_fwd = |h: &mut BinaryHeap<Reverse<(u32, u32)>>, q: &mut [bool], id: InstId| {
        if !q[id.index()] {
            q[id.index()] = true;
            h.push(Reverse((g.topo_pos(id), id.0)));
        }
    };
    push_fwd(&mut fwd, &mut queued, change.inst);
    for d in g.fanin_gates(change.inst) {
        push_fwd(&mut fwd, &mut queued, d);
    }
    let mut evaluated = Vec::new();
    while let Some(Reverse((_, raw))) = fwd.pop() {
        let id = InstId(raw);
        evaluated.push(id);
        if ctx.forward(t, id) {
            for &(s, _) in g.fanout(id) {
                push_fwd(&mut fwd, &mut queued, s);
            }
        }
    }
    t.forward_evals = evaluated.len();

    queued.iter_mut().for_each(|q| *q = false);
    let mut bwd: BinaryHeap<(u32, u32)> = BinaryHeap::new();
    let push_bwd = |h: &mut BinaryHeap<(u32, u32)>, q: &mut [bool], id: InstId| {
        if !q[id.index()] {
            q[id.index()] = true;
            h.push((g.topo_pos(id), id.0));
        }
    };
    for &id in &evaluated {
        for d in g.fanin_gates(id) {
            push_bwd(&mut bwd, &mut queued, d);
        }
    }
    while let Some((_, raw)) = bwd.pop() {
        let id = InstId(raw);
        if ctx.backward(t, id) {
            for d in g.fanin_gates(id) {
                push_bwd(&mut bwd, &mut queued, d);
            }
        }
    }
    summarize(t);
    Ok(())
}
