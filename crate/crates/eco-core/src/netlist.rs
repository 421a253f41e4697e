// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlist as a directed relational graph.
//!
//! Nodes are gate instances. Every net with one driver and `k` gate sinks
//! becomes `k` fanout edges from the driver (star expansion); fanin edges
//! are their reversals. Primary inputs and flop outputs are timing
//! startpoints, primary outputs and flop inputs are endpoints, so the
//! gate graph is combinational and must be acyclic.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::library::{CellLibrary, ClassId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstId(pub u32);

impl InstId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(pub u32);

impl NetId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetlistError {
    #[error("instance {inst}: unknown cell {class} size {size}")]
    UnknownCell { inst: String, class: String, size: usize },
    #[error("instance {inst}: cell {class} has {expected} inputs, got {got}")]
    PinCount { inst: String, class: String, expected: usize, got: usize },
    #[error("duplicate name {0}")]
    Duplicate(String),
    #[error("net {0} has more than one driver")]
    MultipleDrivers(String),
    #[error("net {0} has no driver")]
    Undriven(String),
    #[error("net {0} has no sinks")]
    Dangling(String),
    #[error("combinational cycle through {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("instance {inst}: size {size} out of range (class has {available})")]
    InvalidSize { inst: String, size: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub class: ClassId,
    pub size: usize,
    pub location: (f64, f64),
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Driver {
    Input,
    Flop(usize),
    Gate(InstId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sink {
    Gate { inst: InstId, pin: usize },
    Output,
    Flop(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub name: String,
    pub driver: Driver,
    pub sinks: Vec<Sink>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flop {
    pub name: String,
    pub d: NetId,
    pub q: NetId,
}

/// Edge direction as seen from a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Fanin,
    Fanout,
}

/// Size change applied by [`NetlistGraph::swap_size`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChangeRecord {
    pub inst: InstId,
    pub old_size: usize,
    pub new_size: usize,
}

impl ChangeRecord {
    pub fn is_noop(&self) -> bool {
        self.old_size == self.new_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetlistGraph {
    pub instances: Vec<Instance>,
    pub nets: Vec<Net>,
    pub inputs: Vec<NetId>,
    pub outputs: Vec<NetId>,
    pub flops: Vec<Flop>,
    class_sizes: Vec<usize>,
    fanout: Vec<Vec<(InstId, usize)>>,
    fanin: Vec<Vec<Option<InstId>>>,
    pin_base: Vec<usize>,
    num_pins: usize,
    topo: Vec<InstId>,
    topo_pos: Vec<u32>,
}

impl NetlistGraph {
    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    #[inline]
    pub fn instance(&self, id: InstId) -> &Instance {
        &self.instances[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = InstId> + '_ {
        (0..self.instances.len() as u32).map(InstId)
    }

    pub fn find_instance(&self, name: &str) -> Option<InstId> {
        self.instances.iter().position(|i| i.name == name).map(|i| InstId(i as u32))
    }

    /// Gate sinks of `id`'s output net as `(sink, pin)`.
    #[inline]
    pub fn fanout(&self, id: InstId) -> &[(InstId, usize)] {
        &self.fanout[id.index()]
    }

    /// Gate driver of each input pin of `id` (`None` for startpoints).
    #[inline]
    pub fn fanin(&self, id: InstId) -> &[Option<InstId>] {
        &self.fanin[id.index()]
    }

    pub fn fanin_gates(&self, id: InstId) -> impl Iterator<Item = InstId> + '_ {
        self.fanin[id.index()].iter().flatten().copied()
    }

    pub fn neighbors(&self, id: InstId, rel: Relation) -> Vec<InstId> {
        match rel {
            Relation::Fanout => self.fanout(id).iter().map(|&(s, _)| s).collect(),
            Relation::Fanin => self.fanin_gates(id).collect(),
        }
    }

    /// Iterator over star-expanded fanout edges `(driver, sink, sink_pin)`.
    pub fn edges(&self) -> impl Iterator<Item = (InstId, InstId, usize)> + '_ {
        self.ids().flat_map(move |d| self.fanout(d).iter().map(move |&(s, p)| (d, s, p)))
    }

    pub fn num_edges(&self) -> usize {
        self.fanout.iter().map(Vec::len).sum()
    }

    /// Flat index of input pin `pin` of `id`.
    #[inline]
    pub fn pin_index(&self, id: InstId, pin: usize) -> usize {
        self.pin_base[id.index()] + pin
    }

    pub fn num_pins(&self) -> usize {
        self.num_pins
    }

    pub fn topo_order(&self) -> &[InstId] {
        &self.topo
    }

    #[inline]
    pub fn topo_pos(&self, id: InstId) -> u32 {
        self.topo_pos[id.index()]
    }

    pub fn class_size_count(&self, class: ClassId) -> usize {
        self.class_sizes[class.index()]
    }

    pub fn num_sizes_of(&self, id: InstId) -> usize {
        self.class_size_count(self.instance(id).class)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.size).collect()
    }

    /// Overwrites every size; returns the records of instances that changed.
    pub fn set_sizes(&mut self, sizes: &[usize]) -> Result<Vec<ChangeRecord>, NetlistError> {
        assert_eq!(sizes.len(), self.instances.len(), "size vector length");
        let mut changes = Vec::new();
        for (i, &s) in sizes.iter().enumerate() {
            if self.instances[i].size != s {
                changes.push(self.swap_size(InstId(i as u32), s)?);
            }
        }
        Ok(changes)
    }

    /// Sets the size of one instance. Touches nothing else.
    pub fn swap_size(&mut self, inst: InstId, new_size: usize) -> Result<ChangeRecord, NetlistError> {
        let available = self.num_sizes_of(inst);
        let node = &mut self.instances[inst.index()];
        if new_size >= available {
            return Err(NetlistError::InvalidSize { inst: node.name.clone(), size: new_size, available });
        }
        let old_size = node.size;
        node.size = new_size;
        Ok(ChangeRecord { inst, old_size, new_size })
    }

    /// Signed size step; errors at either end of the class.
    pub fn step_size(&mut self, inst: InstId, up: bool) -> Result<ChangeRecord, NetlistError> {
        let cur = self.instance(inst).size;
        let next = if up { cur + 1 } else { cur.checked_sub(1).unwrap_or(usize::MAX) };
        self.swap_size(inst, next)
    }
}

#[derive(Default)]
struct PendingNet {
    driver: Vec<Driver>,
    sinks: Vec<Sink>,
}

/// Collects declarations in file order and builds a validated graph.
pub struct NetlistBuilder<'a> {
    lib: &'a CellLibrary,
    net_ids: BTreeMap<String, NetId>,
    net_names: Vec<String>,
    pending: Vec<PendingNet>,
    names: BTreeMap<String, ()>,
    instances: Vec<Instance>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    flops: Vec<Flop>,
    error: Option<NetlistError>,
}

impl<'a> NetlistBuilder<'a> {
    pub fn new(lib: &'a CellLibrary) -> Self {
        Self {
            lib,
            net_ids: BTreeMap::new(),
            net_names: Vec::new(),
            pending: Vec::new(),
            names: BTreeMap::new(),
            instances: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            flops: Vec::new(),
            error: None,
        }
    }

    fn net(&mut self, name: &str) -> NetId {
        if let Some(&id) = self.net_ids.get(name) {
            return id;
        }
        let id = NetId(self.net_names.len() as u32);
        self.net_ids.insert(name.to_string(), id);
        self.net_names.push(name.to_string());
        self.pending.push(PendingNet::default());
        id
    }

    fn claim(&mut self, name: &str) -> Result<(), NetlistError> {
        if self.names.insert(name.to_string(), ()).is_some() {
            return Err(NetlistError::Duplicate(name.to_string()));
        }
        Ok(())
    }

    fn record<T>(&mut self, r: Result<T, NetlistError>) {
        if let (Err(e), None) = (r, &self.error) {
            self.error = Some(e);
        }
    }

    pub fn input(&mut self, name: &str) -> &mut Self {
        let id = self.net(name);
        self.pending[id.index()].driver.push(Driver::Input);
        self.inputs.push(id);
        self
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        let id = self.net(name);
        self.pending[id.index()].sinks.push(Sink::Output);
        self.outputs.push(id);
        self
    }

    pub fn flop(&mut self, name: &str, d: &str, q: &str) -> &mut Self {
        let r = self.claim(name);
        self.record(r);
        let idx = self.flops.len();
        let (d, q) = (self.net(d), self.net(q));
        self.pending[d.index()].sinks.push(Sink::Flop(idx));
        self.pending[q.index()].driver.push(Driver::Flop(idx));
        self.flops.push(Flop { name: name.to_string(), d, q });
        self
    }

    pub fn gate(
        &mut self,
        name: &str,
        class: &str,
        size: usize,
        location: (f64, f64),
        inputs: &[&str],
        output: &str,
    ) -> &mut Self {
        let r = self.claim(name);
        self.record(r);
        let id = InstId(self.instances.len() as u32);
        let class_id = match self.lib.class_id(class) {
            Some(c) if size < self.lib.num_sizes(c) => c,
            _ => {
                self.record::<()>(Err(NetlistError::UnknownCell {
                    inst: name.to_string(),
                    class: class.to_string(),
                    size,
                }));
                ClassId(0)
            }
        };
        if self.lib.class_id(class).is_some() {
            let expected = self.lib.variant(class_id, 0).input_pins.len();
            if expected != inputs.len() {
                self.record::<()>(Err(NetlistError::PinCount {
                    inst: name.to_string(),
                    class: class.to_string(),
                    expected,
                    got: inputs.len(),
                }));
            }
        }
        let input_ids: Vec<NetId> = inputs
            .iter()
            .enumerate()
            .map(|(pin, n)| {
                let nid = self.net(n);
                self.pending[nid.index()].sinks.push(Sink::Gate { inst: id, pin });
                nid
            })
            .collect();
        let out = self.net(output);
        self.pending[out.index()].driver.push(Driver::Gate(id));
        self.instances.push(Instance {
            name: name.to_string(),
            class: class_id,
            size,
            location,
            inputs: input_ids,
            output: out,
        });
        self
    }

    pub fn build(self) -> Result<NetlistGraph, NetlistError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let mut nets = Vec::with_capacity(self.pending.len());
        for (name, p) in self.net_names.into_iter().zip(self.pending) {
            let driver = match p.driver.as_slice() {
                [] => return Err(NetlistError::Undriven(name)),
                [d] => *d,
                _ => return Err(NetlistError::MultipleDrivers(name)),
            };
            if p.sinks.is_empty() {
                return Err(NetlistError::Dangling(name));
            }
            nets.push(Net { name, driver, sinks: p.sinks });
        }
        let n = self.instances.len();
        let mut fanout = vec![Vec::new(); n];
        let mut fanin = Vec::with_capacity(n);
        let mut pin_base = Vec::with_capacity(n);
        let mut num_pins = 0;
        for (i, inst) in self.instances.iter().enumerate() {
            for s in &nets[inst.output.index()].sinks {
                if let Sink::Gate { inst: sink, pin } = *s {
                    fanout[i].push((sink, pin));
                }
            }
            fanin.push(
                inst.inputs
                    .iter()
                    .map(|n| match nets[n.index()].driver {
                        Driver::Gate(g) => Some(g),
                        _ => None,
                    })
                    .collect::<Vec<_>>(),
            );
            pin_base.push(num_pins);
            num_pins += inst.inputs.len();
        }
        let class_sizes = (0..self.lib.num_classes() as u32)
            .map(|c| self.lib.num_sizes(ClassId(c)))
            .collect();
        let (topo, topo_pos) = topological_order(&self.instances, &fanout, &fanin)?;
        Ok(NetlistGraph {
            instances: self.instances,
            nets,
            inputs: self.inputs,
            outputs: self.outputs,
            flops: self.flops,
            class_sizes,
            fanout,
            fanin,
            pin_base,
            num_pins,
            topo,
            topo_pos,
        })
    }
}

/// Kahn's algorithm, always releasing the smallest ready id so the order
/// is a function of the input alone.
fn topological_order(
    instances: &[Instance],
    fanout: &[Vec<(InstId, usize)>],
    fanin: &[Vec<Option<InstId>>],
) -> Result<(Vec<InstId>, Vec<u32>), NetlistError> {
    let n = instances.len();
    let mut indeg: Vec<usize> = fanin.iter().map(|f| f.iter().flatten().count()).collect();
    let mut ready: BinaryHeap<Reverse<u32>> =
        (0..n as u32).filter(|&i| indeg[i as usize] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(InstId(i));
        for &(s, _) in &fanout[i as usize] {
            indeg[s.index()] -= 1;
            if indeg[s.index()] == 0 {
                ready.push(Reverse(s.0));
            }
        }
    }
    if order.len() < n {
        // Every remaining node has a remaining fanin, so walking fanins
        // backwards must revisit a node.
        let start = (0..n).find(|&i| indeg[i] > 0).unwrap();
        let mut seen = vec![usize::MAX; n];
        let mut walk = Vec::new();
        let mut cur = start;
        while seen[cur] == usize::MAX {
            seen[cur] = walk.len();
            walk.push(cur);
            cur = fanin[cur].iter().flatten().map(|g| g.index()).find(|&g| indeg[g] > 0).unwrap();
        }
        let cycle = walk[seen[cur]..].iter().rev().map(|&i| instances[i].name.clone()).collect();
        return Err(NetlistError::Cycle(cycle));
    }
    let mut pos = vec![0u32; n];
    for (k, id) in order.iter().enumerate() {
        pos[id.index()] = k as u32;
    }
    Ok((order, pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_synthetic_library;

    fn lib() -> CellLibrary {
        gen_synthetic_library(1, 8, 4)
    }

    fn chain(lib: &CellLibrary) -> NetlistGraph {
        let mut b = NetlistBuilder::new(lib);
        b.input("a")
            .output("z")
            .gate("u1", "INV", 0, (0.0, 0.0), &["a"], "n1")
            .gate("u2", "INV", 1, (1.0, 0.0), &["n1"], "n2")
            .gate("u3", "INV", 0, (2.0, 0.0), &["n2"], "z");
        b.build().unwrap()
    }

    #[test]
    fn inverter_chain() {
        let lib = lib();
        let g = chain(&lib);
        assert_eq!(g.num_instances(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.topo_order(), &[InstId(0), InstId(1), InstId(2)]);
    }

    #[test]
    fn net_with_three_sinks_is_a_star() {
        let lib = lib();
        let mut b = NetlistBuilder::new(&lib);
        b.input("a")
            .output("x")
            .output("y")
            .output("z")
            .gate("d", "BUF", 0, (0.0, 0.0), &["a"], "n")
            .gate("s1", "INV", 0, (0.0, 0.0), &["n"], "x")
            .gate("s2", "INV", 0, (0.0, 0.0), &["n"], "y")
            .gate("s3", "INV", 0, (0.0, 0.0), &["n"], "z");
        let g = b.build().unwrap();
        assert_eq!(g.fanout(InstId(0)).len(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.edges().filter(|e| e.0 == InstId(0)).count(), 3);
    }

    #[test]
    fn feedback_loop_names_both_gates() {
        let lib = lib();
        let mut b = NetlistBuilder::new(&lib);
        b.input("a")
            .output("x")
            .gate("g1", "NAND2", 0, (0.0, 0.0), &["a", "y"], "x")
            .gate("g2", "NAND2", 0, (0.0, 0.0), &["a", "x"], "y");
        match b.build() {
            Err(NetlistError::Cycle(c)) => {
                assert_eq!(c.len(), 2);
                assert!(c.contains(&"g1".into()) && c.contains(&"g2".into()));
            }
            r => panic!("expected cycle, got {r:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let lib = lib();
        let mut b = NetlistBuilder::new(&lib);
        b.input("a").output("z").gate("g", "FOO", 0, (0.0, 0.0), &["a"], "z");
        assert!(matches!(b.build(), Err(NetlistError::UnknownCell { .. })));

        let mut b = NetlistBuilder::new(&lib);
        b.output("z").gate("g", "INV", 0, (0.0, 0.0), &["a"], "z");
        assert_eq!(b.build().unwrap_err(), NetlistError::Undriven("a".into()));

        let mut b = NetlistBuilder::new(&lib);
        b.input("a").output("z").gate("g", "INV", 0, (0.0, 0.0), &["a"], "z");
        b.gate("h", "INV", 0, (0.0, 0.0), &["a"], "w");
        assert_eq!(b.build().unwrap_err(), NetlistError::Dangling("w".into()));

        let mut b = NetlistBuilder::new(&lib);
        b.input("a").output("z").gate("g", "NAND2", 0, (0.0, 0.0), &["a"], "z");
        assert!(matches!(b.build(), Err(NetlistError::PinCount { .. })));
    }

    #[test]
    fn swap_size_records_and_bounds() {
        let lib = lib();
        let mut g = chain(&lib);
        let orig = g.clone();
        let rec = g.swap_size(InstId(1), 2).unwrap();
        assert_eq!(rec, ChangeRecord { inst: InstId(1), old_size: 1, new_size: 2 });
        g.swap_size(InstId(1), 1).unwrap();
        assert_eq!(g, orig);
        assert!(g.step_size(InstId(0), false).is_err());
        assert!(g.swap_size(InstId(0), 4).is_err());
        assert_eq!(g, orig);
    }

    #[test]
    fn swap_touches_one_node() {
        let lib = lib();
        let mut g = chain(&lib);
        let before = g.clone();
        g.swap_size(InstId(2), 3).unwrap();
        let diffs: Vec<usize> =
            (0..3).filter(|&i| g.instances[i] != before.instances[i]).collect();
        assert_eq!(diffs, [2]);
        assert_eq!(g.nets, before.nets);
    }
}
