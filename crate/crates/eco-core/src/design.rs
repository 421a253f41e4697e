// SPDX-License-Identifier: Apache-2.0

//! A netlist together with its current timing and power.

use alloc::vec::Vec;

use crate::irgrid::VoltageMap;
use crate::library::CellLibrary;
use crate::netlist::{ChangeRecord, InstId, NetlistError, NetlistGraph};
use crate::power::{compute_power, Activity, PowerReport};
use crate::timing::{sta_full, update_in_place, TimingAnnotation, TimingError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignError {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Timing(#[from] TimingError),
}

/// Keeps timing and power in sync with the sizes of `graph`. The voltage
/// map is frozen for the lifetime of the design.
#[derive(Debug, Clone)]
pub struct Design<'a> {
    pub lib: &'a CellLibrary,
    pub graph: NetlistGraph,
    pub volts: VoltageMap,
    pub activity: Activity,
    pub timing: TimingAnnotation,
    pub power: PowerReport,
}

impl<'a> Design<'a> {
    pub fn new(
        lib: &'a CellLibrary,
        graph: NetlistGraph,
        volts: VoltageMap,
        activity: Activity,
        clock: f64,
    ) -> Result<Self, DesignError> {
        let timing = sta_full(&graph, lib, &volts, clock)?;
        let power = compute_power(&graph, lib, &volts, &activity);
        Ok(Self { lib, graph, volts, activity, timing, power })
    }

    pub fn clock(&self) -> f64 {
        self.timing.clock_period
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.graph.sizes()
    }

    pub fn resize(&mut self, inst: InstId, new_size: usize) -> Result<ChangeRecord, DesignError> {
        let rec = self.graph.swap_size(inst, new_size)?;
        self.apply_change(&rec)?;
        Ok(rec)
    }

    pub fn step(&mut self, inst: InstId, up: bool) -> Result<ChangeRecord, DesignError> {
        let rec = self.graph.step_size(inst, up)?;
        self.apply_change(&rec)?;
        Ok(rec)
    }

    fn apply_change(&mut self, rec: &ChangeRecord) -> Result<(), DesignError> {
        let clock = self.clock();
        update_in_place(&self.graph, self.lib, &self.volts, clock, &mut self.timing, rec)?;
        if !rec.is_noop() {
            self.power.update_for_change(&self.graph, self.lib, &self.volts, &self.activity, rec.inst);
        }
        Ok(())
    }

    pub fn set_clock(&mut self, clock: f64) -> Result<(), DesignError> {
        if clock != self.clock() {
            self.timing = sta_full(&self.graph, self.lib, &self.volts, clock)?;
        }
        Ok(())
    }

    /// Overwrites all sizes and recomputes timing and power from scratch.
    pub fn apply_sizes(&mut self, sizes: &[usize]) -> Result<usize, DesignError> {
        let changed = self.graph.set_sizes(sizes)?.len();
        if changed > 0 {
            self.timing = sta_full(&self.graph, self.lib, &self.volts, self.clock())?;
            self.power = compute_power(&self.graph, self.lib, &self.volts, &self.activity);
        }
        Ok(changed)
    }
}
