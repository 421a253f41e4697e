// SPDX-License-Identifier: Apache-2.0

//! Sizing environment: one design, its multipliers and the running
//! objective.

use crate::design::{Design, DesignError};
use crate::features::FeatureSchema;
use crate::lagrangian::LagrangianContext;
use crate::netlist::InstId;

use super::mask::{build_action_mask, UP};
use super::state::{extract_state, StateSubgraph};
use super::RlError;

pub struct Env<'a> {
    pub design: Design<'a>,
    pub ctx: LagrangianContext,
    pub schema: FeatureSchema,
    objective: f64,
    /// Actions checked against their mask.
    pub mask_checks: u64,
}

impl<'a> Env<'a> {
    pub fn new(design: Design<'a>, ctx: LagrangianContext) -> Self {
        let schema = FeatureSchema::for_library(design.lib);
        let objective = ctx.value(&design.power, &design.timing);
        Self { design, ctx, schema, objective, mask_checks: 0 }
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    fn refresh(&mut self) {
        self.objective = self.ctx.value(&self.design.power, &self.design.timing);
    }

    pub fn observe(&self) -> StateSubgraph {
        let d = &self.design;
        let mut s = extract_state(&d.graph, d.lib, &d.timing, &d.volts, &self.schema);
        build_action_mask(&mut s, &d.graph, &d.timing);
        s
    }

    /// Applies `action` from `state` and returns `L_before - L_after`.
    ///
    /// # Panics
    ///
    /// If the action is masked out in `state`.
    pub fn step(&mut self, state: &StateSubgraph, action: (usize, usize)) -> Result<f64, RlError> {
        let (node, dir) = action;
        assert!(state.mask.is_valid(node, dir), "masked action emitted: node {node} dir {dir}");
        self.mask_checks += 1;
        let inst: InstId = state.nodes[node];
        self.design.step(inst, dir == UP)?;
        let before = self.objective;
        self.refresh();
        Ok(before - self.objective)
    }

    pub fn lm_update(&mut self) {
        self.ctx.update(&self.design.timing);
        self.refresh();
    }

    /// Restores `sizes` at `clock` and reseeds the multipliers.
    pub fn reset(&mut self, sizes: &[usize], clock: f64) -> Result<(), DesignError> {
        self.design.apply_sizes(sizes)?;
        self.design.set_clock(clock)?;
        self.ctx.reseed(&self.design.timing);
        self.refresh();
        Ok(())
    }

    pub fn tns(&self) -> f64 {
        self.design.timing.tns
    }
}
