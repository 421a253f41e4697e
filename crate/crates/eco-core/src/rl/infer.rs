// SPDX-License-Identifier: Apache-2.0

//! Greedy application of a trained policy, and fine-tuning.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::lagrangian::ClockSchedule;
use crate::netlist::InstId;

use super::dqn::{dqn_train, masked_argmax, Agent, BestSizing, TrainConfig, TrainOutcome};
use super::env::Env;
use super::mask::UP;
use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferConfig {
    pub step_cap: usize,
    pub lm_every: usize,
    /// Stop after this many steps without a better sizing.
    pub patience: usize,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self { step_cap: 1000, lm_every: 30, patience: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferStep {
    pub step: usize,
    pub action: (InstId, bool),
    pub reward: f64,
    pub tns: f64,
    pub wns: f64,
    pub power: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferOutcome {
    pub best: BestSizing,
    pub trace: Vec<InferStep>,
}

impl InferOutcome {
    pub fn actions(&self) -> usize {
        self.trace.len()
    }
}

/// Key of one (instance, size) pair in an order-free sizing hash.
fn zobrist(inst: usize, size: usize) -> u64 {
    let mut z = ((inst as u64) << 32 | size as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Greedy masked-argmax sizing at the environment's current clock. An
/// action that would return to a sizing already visited is skipped in
/// favour of the next best one, so the walk cannot cycle while a fresh
/// move exists. Leaves the environment at the best sizing seen.
pub fn infer(env: &mut Env<'_>, agent: &Agent, cfg: &InferConfig) -> Result<InferOutcome, RlError> {
    let clock = env.design.clock();
    env.ctx.reseed(&env.design.timing);
    let mut hash = env.design.graph.ids().fold(0u64, |h, id| h ^ zobrist(id.index(), env.design.graph.instance(id).size));
    let mut visited = BTreeSet::from([hash]);
    let mut best = BestSizing::of(env);
    let mut since_best = 0;
    let mut trace = Vec::new();
    for step in 0..cfg.step_cap {
        let state = env.observe();
        if state.is_empty() {
            break;
        }
        if !state.mask.any() {
            return Err(RlError::NoValidAction { tns: env.tns() });
        }
        let q = agent.policy.q_values(&state)?;
        let after = |&(k, d): &(usize, usize)| {
            let id = state.nodes[k];
            let size = env.design.graph.instance(id).size;
            let next = if d == UP { size + 1 } else { size - 1 };
            hash ^ zobrist(id.index(), size) ^ zobrist(id.index(), next)
        };
        let mut ranked: Vec<(usize, usize)> = state.mask.actions().collect();
        ranked.sort_by(|a, b| q[b.0][b.1].total_cmp(&q[a.0][a.1]));
        let action = match ranked.iter().find(|a| !visited.contains(&after(a))) {
            Some(&a) => a,
            None => masked_argmax(&q, &state).0,
        };
        hash = after(&action);
        visited.insert(hash);
        let inst = state.nodes[action.0];
        let reward = env.step(&state, action)?;
        if (step + 1) % cfg.lm_every == 0 {
            env.lm_update();
        }
        trace.push(InferStep {
            step,
            action: (inst, action.1 == UP),
            reward,
            tns: env.design.timing.tns,
            wns: env.design.timing.wns,
            power: env.design.power.total_power,
            objective: env.objective(),
        });
        let cand = BestSizing::of(env);
        if cand.improves_on(&best) {
            best = cand;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    env.reset(&best.sizes, clock)?;
    Ok(InferOutcome { best, trace })
}

/// Continues training a pretrained agent on new environments.
pub fn fine_tune(
    agent: &mut Agent,
    envs: &mut [Env<'_>],
    schedules: &[ClockSchedule],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, RlError> {
    dqn_train(agent, envs, schedules, cfg)
}
