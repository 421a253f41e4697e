// SPDX-License-Identifier: Apache-2.0

//! Vectorless power: leakage, internal and switching, all in µW.

use alloc::vec;
use alloc::vec::Vec;

use crate::irgrid::VoltageMap;
use crate::library::CellLibrary;
use crate::netlist::{InstId, NetlistGraph};
use crate::timing::output_load;

/// Toggle rate per instance output, in toggles per ns.
#[derive(Debug, Clone, PartialEq)]
pub enum Activity {
    Uniform(f64),
    PerInstance(Vec<f64>),
}

impl Activity {
    pub const DEFAULT_RATE: f64 = 0.1;

    pub fn rate(&self, id: InstId) -> f64 {
        match self {
            Activity::Uniform(a) => *a,
            Activity::PerInstance(v) => v[id.index()],
        }
    }
}

impl Default for Activity {
    fn default() -> Self {
        Activity::Uniform(Self::DEFAULT_RATE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub leakage: Vec<f64>,
    pub internal: Vec<f64>,
    pub switching: Vec<f64>,
    pub total: Vec<f64>,
    pub total_power: f64,
}

impl PowerReport {
    fn eval(&mut self, g: &NetlistGraph, lib: &CellLibrary, volts: &VoltageMap, act: &Activity, id: InstId) {
        let inst = g.instance(id);
        let v = lib.variant(inst.class, inst.size);
        let a = act.rate(id);
        let k = id.index();
        self.leakage[k] = v.leakage_uw;
        // fJ per toggle at toggles/ns is µW.
        self.internal[k] = v.internal_energy_fj * a;
        self.switching[k] = switching_uw(output_load(g, lib, id), volts.get(id), a);
        self.total[k] = self.leakage[k] + self.internal[k] + self.switching[k];
    }

    fn resum(&mut self) {
        self.total_power = self.total.iter().sum();
    }

    /// Refreshes the entries a resize of `id` can affect: the instance
    /// itself and the drivers of its inputs, whose load changed.
    pub fn update_for_change(
        &mut self,
        g: &NetlistGraph,
        lib: &CellLibrary,
        volts: &VoltageMap,
        act: &Activity,
        id: InstId,
    ) {
        self.eval(g, lib, volts, act, id);
        for d in g.fanin_gates(id) {
            self.eval(g, lib, volts, act, d);
        }
        self.resum();
    }
}

/// `0.5 * C * V^2 * a` with C in fF, V in mV and a in toggles/ns.
pub fn switching_uw(load_ff: f64, v_mv: f64, activity: f64) -> f64 {
    let v = v_mv / 1000.0;
    0.5 * load_ff * v * v * activity
}

pub fn compute_power(g: &NetlistGraph, lib: &CellLibrary, volts: &VoltageMap, act: &Activity) -> PowerReport {
    let n = g.num_instances();
    let mut r = PowerReport {
        leakage: vec![0.0; n],
        internal: vec![0.0; n],
        switching: vec![0.0; n],
        total: vec![0.0; n],
        total_power: 0.0,
    };
    for id in g.ids() {
        r.eval(g, lib, volts, act, id);
    }
    r.resum();
    r
}
