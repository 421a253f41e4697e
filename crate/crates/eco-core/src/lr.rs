// SPDX-License-Identifier: Apache-2.0

//! Classical Lagrangian-relaxation sizing.
//!
//! Each pass visits the gates in topological order and moves every gate to
//! the size that minimizes the objective with all other sizes fixed,
//! measured by incremental timing. Multipliers are updated between passes.

use alloc::vec::Vec;

use crate::design::{Design, DesignError};
use crate::lagrangian::LagrangianContext;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrConfig {
    pub max_passes: usize,
    pub convergence_tol: f64,
    pub lm_update_every: usize,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self { max_passes: 20, convergence_tol: 1e-4, lm_update_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrPass {
    pub pass: usize,
    pub objective: f64,
    pub tns: f64,
    pub wns: f64,
    pub power: f64,
    pub moves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrOutcome {
    /// Best sizing seen: the lowest-power timing-clean one, else the one
    /// with the least negative TNS.
    pub sizes: Vec<usize>,
    pub trace: Vec<LrPass>,
    pub converged: bool,
    pub feasible: bool,
    pub power: f64,
    pub tns: f64,
}

struct Best {
    sizes: Vec<usize>,
    feasible: bool,
    power: f64,
    tns: f64,
}

impl Best {
    fn offer(&mut self, d: &Design<'_>) {
        let feasible = d.timing.tns == 0.0;
        let power = d.power.total_power;
        let tns = d.timing.tns;
        let better = match (feasible, self.feasible) {
            (true, false) => true,
            (true, true) => power < self.power,
            (false, false) => tns > self.tns,
            (false, true) => false,
        };
        if better {
            *self = Best { sizes: d.sizes(), feasible, power, tns };
        }
    }
}

/// One pass of local minimization. Returns the number of size changes.
pub fn lr_pass(design: &mut Design<'_>, ctx: &LagrangianContext) -> Result<usize, DesignError> {
    let order: Vec<_> = design.graph.topo_order().to_vec();
    let mut moves = 0;
    for id in order {
        let cur = design.graph.instance(id).size;
        let cur_obj = ctx.value(&design.power, &design.timing);
        let mut best = (cur_obj, cur);
        for s in 0..design.graph.num_sizes_of(id) {
            if s == cur {
                continue;
            }
            design.resize(id, s)?;
            let obj = ctx.value(&design.power, &design.timing);
            if obj < best.0 || (obj == best.0 && s < best.1) {
                best = (obj, s);
            }
        }
        design.resize(id, best.1)?;
        let after = ctx.value(&design.power, &design.timing);
        assert!(after <= cur_obj, "local move increased the objective: {cur_obj} -> {after}");
        if best.1 != cur {
            moves += 1;
        }
    }
    Ok(moves)
}

/// Runs passes until the objective settles or `max_passes` is reached,
/// then leaves `design` at the best sizing seen.
pub fn lr_size(design: &mut Design<'_>, ctx: &mut LagrangianContext, cfg: &LrConfig) -> Result<LrOutcome, DesignError> {
    assert!(cfg.max_passes >= 1 && cfg.lm_update_every >= 1);
    ctx.reseed(&design.timing);
    let mut best = Best { sizes: design.sizes(), feasible: false, power: f64::INFINITY, tns: f64::NEG_INFINITY };
    best.offer(design);
    let mut trace = Vec::with_capacity(cfg.max_passes);
    let mut prev = ctx.value(&design.power, &design.timing);
    let mut converged = false;
    for pass in 0..cfg.max_passes {
        let moves = lr_pass(design, ctx)?;
        let objective = ctx.value(&design.power, &design.timing);
        trace.push(LrPass {
            pass,
            objective,
            tns: design.timing.tns,
            wns: design.timing.wns,
            power: design.power.total_power,
            moves,
        });
        best.offer(design);
        let settled = moves == 0 || (objective - prev).abs() <= cfg.convergence_tol * prev.abs();
        if settled && design.timing.tns == 0.0 {
            converged = true;
            break;
        }
        prev = objective;
        if (pass + 1) % cfg.lm_update_every == 0 {
            ctx.update(&design.timing);
        }
    }
    design.apply_sizes(&best.sizes)?;
    Ok(LrOutcome {
        sizes: best.sizes,
        trace,
        converged,
        feasible: best.feasible,
        power: best.power,
        tns: best.tns,
    })
}
