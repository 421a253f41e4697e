// SPDX-License-Identifier: Apache-2.0

//! Agent state: the violating instances and their two-hop neighborhood.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::features::{annotate_features, FeatureSchema, Normalizer};
use crate::irgrid::VoltageMap;
use crate::library::CellLibrary;
use crate::netlist::{InstId, NetlistGraph};
use crate::timing::TimingAnnotation;

use super::mask::ActionMask;

pub const STATE_HOPS: usize = 2;

/// Neighbor lists in compressed form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjacency {
    ptr: Vec<usize>,
    idx: Vec<u32>,
}

impl Adjacency {
    pub fn from_lists(lists: &[Vec<u32>]) -> Self {
        let mut ptr = Vec::with_capacity(lists.len() + 1);
        ptr.push(0);
        let mut idx = Vec::new();
        for l in lists {
            idx.extend_from_slice(l);
            ptr.push(idx.len());
        }
        Self { ptr, idx }
    }

    #[inline]
    pub fn of(&self, i: usize) -> &[u32] {
        &self.idx[self.ptr[i]..self.ptr[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.ptr.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Induced subgraph with normalized node features. Local node `k`
/// stands for `nodes[k]`; `fanin.of(k)` lists the local drivers of `k`
/// (one entry per connected pin) and `fanout.of(k)` its local sinks.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSubgraph {
    pub nodes: Vec<InstId>,
    pub dim: usize,
    pub features: Vec<f64>,
    pub fanin: Adjacency,
    pub fanout: Adjacency,
    pub mask: ActionMask,
}

impl StateSubgraph {
    pub fn empty(dim: usize) -> Self {
        Self {
            nodes: Vec::new(),
            dim,
            features: Vec::new(),
            fanin: Adjacency::from_lists(&[]),
            fanout: Adjacency::from_lists(&[]),
            mask: ActionMask::default(),
        }
    }

    /// Builds a state from raw parts; `edges` are local `(driver, sink)`.
    pub fn from_parts(features: Vec<f64>, dim: usize, edges: &[(usize, usize)]) -> Self {
        let n = features.len() / dim;
        let mut fi = vec![Vec::new(); n];
        let mut fo = vec![Vec::new(); n];
        for &(d, s) in edges {
            fo[d].push(s as u32);
            fi[s].push(d as u32);
        }
        Self {
            nodes: (0..n as u32).map(InstId).collect(),
            dim,
            features,
            fanin: Adjacency::from_lists(&fi),
            fanout: Adjacency::from_lists(&fo),
            mask: ActionMask { valid: vec![[true, true]; n] },
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.features[k * self.dim..(k + 1) * self.dim]
    }

    pub fn local_of(&self, id: InstId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    fn undirected(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.fanin.of(k).iter().chain(self.fanout.of(k)).map(|&j| j as usize)
    }

    /// Local nodes within `hops` undirected hops of `center`, ascending.
    pub fn ball(&self, center: usize, hops: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[center] = 0;
        let mut q = VecDeque::from([center]);
        let mut out = vec![center];
        while let Some(k) = q.pop_front() {
            if dist[k] == hops {
                continue;
            }
            for j in self.undirected(k) {
                if dist[j] == usize::MAX {
                    dist[j] = dist[k] + 1;
                    out.push(j);
                    q.push_back(j);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Induced subgraph on `keep` (ascending local ids).
    pub fn induced(&self, keep: &[usize]) -> StateSubgraph {
        let mut slot = vec![u32::MAX; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            slot[old] = new as u32;
        }
        let remap = |adj: &Adjacency, k: usize| -> Vec<u32> {
            adj.of(k).iter().map(|&j| slot[j as usize]).filter(|&j| j != u32::MAX).collect()
        };
        let fi: Vec<Vec<u32>> = keep.iter().map(|&k| remap(&self.fanin, k)).collect();
        let fo: Vec<Vec<u32>> = keep.iter().map(|&k| remap(&self.fanout, k)).collect();
        let mut features = Vec::with_capacity(keep.len() * self.dim);
        for &k in keep {
            features.extend_from_slice(self.row(k));
        }
        StateSubgraph {
            nodes: keep.iter().map(|&k| self.nodes[k]).collect(),
            dim: self.dim,
            features,
            fanin: Adjacency::from_lists(&fi),
            fanout: Adjacency::from_lists(&fo),
            mask: ActionMask { valid: keep.iter().map(|&k| self.mask.valid[k]).collect() },
        }
    }
}

/// Instances within `hops` undirected hops of any seed, ascending.
pub fn neighborhood(g: &NetlistGraph, seeds: &[InstId], hops: usize) -> Vec<InstId> {
    let n = g.num_instances();
    let mut dist = vec![usize::MAX; n];
    let mut q = VecDeque::new();
    for &s in seeds {
        if dist[s.index()] == usize::MAX {
            dist[s.index()] = 0;
            q.push_back(s);
        }
    }
    while let Some(id) = q.pop_front() {
        let d = dist[id.index()];
        if d == hops {
            continue;
        }
        let fanin = g.fanin_gates(id);
        let fanout = g.fanout(id).iter().map(|&(s, _)| s);
        for j in fanin.chain(fanout) {
            if dist[j.index()] == usize::MAX {
                dist[j.index()] = d + 1;
                q.push_back(j);
            }
        }
    }
    (0..n as u32).map(InstId).filter(|id| dist[id.index()] != usize::MAX).collect()
}

/// Violators and their two-hop neighborhood, with normalized features.
/// The mask is left all-invalid; see [`super::mask::build_action_mask`].
pub fn extract_state(
    g: &NetlistGraph,
    lib: &CellLibrary,
    timing: &TimingAnnotation,
    volts: &VoltageMap,
    schema: &FeatureSchema,
) -> StateSubgraph {
    let violators: Vec<InstId> = g.ids().filter(|id| timing.slack[id.index()] < 0.0).collect();
    if violators.is_empty() {
        return StateSubgraph::empty(schema.dim());
    }
    let nodes = neighborhood(g, &violators, STATE_HOPS);
    let mut slot = vec![u32::MAX; g.num_instances()];
    for (k, id) in nodes.iter().enumerate() {
        slot[id.index()] = k as u32;
    }
    let fv = annotate_features(g, timing, volts);
    let norm = Normalizer { clock: timing.clock_period, max_load: lib.max_table_load(), nominal_vdd: lib.nominal_vdd_mv };
    let dim = schema.dim();
    let mut features = vec![0.0; nodes.len() * dim];
    let mut fi = Vec::with_capacity(nodes.len());
    let mut fo = Vec::with_capacity(nodes.len());
    for (k, &id) in nodes.iter().enumerate() {
        fv[id.index()].write_normalized(schema, &norm, &mut features[k * dim..(k + 1) * dim]);
        fi.push(g.fanin_gates(id).map(|j| slot[j.index()]).filter(|&j| j != u32::MAX).collect());
        fo.push(g.fanout(id).iter().map(|&(s, _)| slot[s.index()]).filter(|&j| j != u32::MAX).collect());
    }
    StateSubgraph {
        mask: ActionMask { valid: vec![[false, false]; nodes.len()] },
        nodes,
        dim,
        features,
        fanin: Adjacency::from_lists(&fi),
        fanout: Adjacency::from_lists(&fo),
    }
}
