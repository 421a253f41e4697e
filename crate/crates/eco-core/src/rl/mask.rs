// SPDX-License-Identifier: Apache-2.0

//! Valid (node, direction) actions: resizes on or near the critical path.

use alloc::vec::Vec;

use crate::netlist::{InstId, NetlistGraph};
use crate::timing::{drives_endpoint, TimingAnnotation};

use super::state::{neighborhood, StateSubgraph};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const MASK_HOPS: usize = 2;

/// Per local node: `[upsize valid, downsize valid]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionMask {
    pub valid: Vec<[bool; 2]>,
}

impl ActionMask {
    pub fn count(&self) -> usize {
        self.valid.iter().map(|v| v[0] as usize + v[1] as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.valid.iter().any(|v| v[0] || v[1])
    }

    pub fn is_valid(&self, node: usize, dir: usize) -> bool {
        self.valid.get(node).is_some_and(|v| v[dir])
    }

    pub fn candidates(&self) -> usize {
        self.valid.iter().filter(|v| v[0] || v[1]).count()
    }

    /// Valid actions in (node, direction) order.
    pub fn actions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.valid.iter().enumerate().flat_map(|(k, v)| {
            [(k, UP), (k, DOWN)].into_iter().filter(move |&(_, d)| v[d])
        })
    }
}

/// Gates on the worst path, from its endpoint back to a startpoint.
///
/// The endpoint is the endpoint driver with the lowest slack (lowest id on
/// ties); each step follows the input pin that set the arrival.
pub fn critical_path(g: &NetlistGraph, timing: &TimingAnnotation) -> Vec<InstId> {
    let mut end: Option<InstId> = None;
    for id in g.ids().filter(|&id| drives_endpoint(g, id)) {
        if end.is_none_or(|e| timing.slack[id.index()] < timing.slack[e.index()]) {
            end = Some(id);
        }
    }
    let mut path = Vec::new();
    let mut cur = end;
    while let Some(id) = cur {
        path.push(id);
        cur = g.fanin(id)[timing.critical_pin[id.index()]];
    }
    path
}

/// Marks candidates within two hops of the critical path, restricted to
/// the state's nodes, then drops size moves past either end of the class.
pub fn build_action_mask(state: &mut StateSubgraph, g: &NetlistGraph, timing: &TimingAnnotation) {
    for v in state.mask.valid.iter_mut() {
        *v = [false, false];
    }
    if state.is_empty() || timing.tns >= 0.0 {
        return;
    }
    let path = critical_path(g, timing);
    for id in neighborhood(g, &path, MASK_HOPS) {
        if let Some(k) = state.local_of(id) {
            let size = g.instance(id).size;
            state.mask.valid[k] = [size + 1 < g.num_sizes_of(id), size > 0];
        }
    }
}
