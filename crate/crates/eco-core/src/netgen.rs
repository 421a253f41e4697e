// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthetic netlists.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::library::CellLibrary;
use crate::math::sqrt;
use crate::netlist::{NetlistBuilder, NetlistGraph};

pub const MAX_FANOUT: usize = 4;

/// Gate counts per layer, `1..=depth`, shrinking linearly with depth so
/// only a thin slice of the logic sits on the longest paths.
fn layer_sizes(n_gates: usize, depth: usize) -> Vec<usize> {
    let weights: Vec<f64> = (0..depth).map(|l| crate::math::powi((depth - l) as f64, 3)).collect();
    let total: f64 = weights.iter().sum();
    let spare = n_gates - depth;
    let mut sizes: Vec<usize> = weights.iter().map(|w| 1 + (spare as f64 * w / total) as usize).collect();
    let mut assigned: usize = sizes.iter().sum();
    let mut l = 0;
    while assigned < n_gates {
        sizes[l % depth] += 1;
        assigned += 1;
        l += 1;
    }
    sizes
}

struct Source {
    net: String,
    layer: usize,
    fanout: usize,
}

/// Layered DAG of `n_gates` gates and `depth` logic levels over `lib`.
///
/// Each gate takes its first input from the previous layer and the rest
/// from any earlier layer or a primary input, never exceeding
/// [`MAX_FANOUT`] sinks per net. Gates left without sinks drive primary
/// outputs or flop inputs. Placement is a shuffled assignment to a
/// `ceil(sqrt(n))` square grid with unit pitch. Sizes are biased to the
/// small end of each class: 60% size 0, 30% size 1, 10% size 2.
///
/// # Panics
///
/// If `depth == 0` or `n_gates < depth`.
pub fn gen_synthetic_netlist(seed: u64, n_gates: usize, depth: usize, lib: &CellLibrary) -> NetlistGraph {
    assert!(depth >= 1 && n_gates >= depth, "need n_gates >= depth >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_inputs = (n_gates / 8).max(2);
    let n_flops = n_gates / 40;

    let mut sources: Vec<Source> = Vec::new();
    for k in 0..n_inputs {
        sources.push(Source { net: format!("in{k}"), layer: 0, fanout: 0 });
    }
    for k in 0..n_flops {
        sources.push(Source { net: format!("q{k}"), layer: 0, fanout: 0 });
    }

    let side = grid_side(n_gates);
    let mut slots: Vec<usize> = (0..side * side).collect();
    slots.shuffle(&mut rng);

    let arity = |c: usize| lib.variants[lib.classes[c].variants[0]].input_pins.len();
    let mut gates = Vec::with_capacity(n_gates);
    let mut extra_inputs = 0;
    for (l, &count) in layer_sizes(n_gates, depth).iter().enumerate() {
        let layer = l + 1;
        let prev: Vec<usize> = (0..sources.len()).filter(|&s| sources[s].layer == layer - 1).collect();
        for _ in 0..count {
            let class = rng.gen_range(0..lib.num_classes());
            let n_sizes = lib.classes[class].variants.len();
            let pins = arity(class);
            let mut chosen: Vec<usize> = Vec::with_capacity(pins);
            let open: Vec<usize> = prev.iter().copied().filter(|&s| sources[s].fanout < MAX_FANOUT).collect();
            let first = if open.is_empty() { prev[rng.gen_range(0..prev.len())] } else { open[rng.gen_range(0..open.len())] };
            chosen.push(first);
            while chosen.len() < pins {
                let recent = rng.gen_bool(0.6);
                let pool: Vec<usize> = (0..sources.len())
                    .filter(|&s| {
                        let src = &sources[s];
                        src.layer < layer
                            && src.fanout < MAX_FANOUT
                            && !chosen.contains(&s)
                            && (!recent || src.layer + 3 >= layer)
                    })
                    .collect();
                if pool.is_empty() {
                    sources.push(Source { net: format!("in{}", n_inputs + extra_inputs), layer: 0, fanout: 0 });
                    extra_inputs += 1;
                    chosen.push(sources.len() - 1);
                } else {
                    chosen.push(pool[rng.gen_range(0..pool.len())]);
                }
            }
            for &s in &chosen {
                sources[s].fanout += 1;
            }
            let r: f64 = rng.gen();
            let size = if r < 0.6 { 0 } else if r < 0.9 { 1 } else { 2 };
            let k = gates.len();
            let slot = slots[k];
            gates.push(Gate {
                name: format!("g{k}"),
                class: lib.classes[class].name.clone(),
                size: size.min(n_sizes - 1),
                loc: ((slot % side) as f64, (slot / side) as f64),
                ins: chosen.iter().map(|&s| sources[s].net.clone()).collect(),
                out: format!("n{k}"),
            });
            sources.push(Source { net: format!("n{k}"), layer, fanout: 0 });
        }
    }

    // Flops whose output feeds logic capture an unloaded gate, shallow
    // layers first, so the longest paths end at primary outputs.
    let mut unloaded: Vec<usize> =
        (0..sources.len()).filter(|&s| sources[s].layer > 0 && sources[s].fanout == 0).collect();
    unloaded.sort_by_key(|&s| sources[s].layer);
    let mut unloaded = unloaded.into_iter();
    let mut flops = Vec::new();
    for k in 0..n_flops {
        if sources[n_inputs + k].fanout == 0 {
            continue;
        }
        let d = match unloaded.next() {
            Some(s) => s,
            None => {
                let cands: Vec<usize> =
                    (0..sources.len()).filter(|&s| sources[s].layer > 0 && sources[s].fanout < MAX_FANOUT).collect();
                cands[rng.gen_range(0..cands.len())]
            }
        };
        sources[d].fanout += 1;
        flops.push((format!("ff{k}"), sources[d].net.clone(), format!("q{k}")));
    }

    let mut b = NetlistBuilder::new(lib);
    for s in sources.iter().filter(|s| s.layer == 0 && s.fanout > 0 && s.net.starts_with("in")) {
        b.input(&s.net);
    }
    for s in sources.iter().filter(|s| s.layer > 0 && s.fanout == 0) {
        b.output(&s.net);
    }
    for (name, d, q) in &flops {
        b.flop(name, d, q);
    }
    for gate in &gates {
        let ins: Vec<&str> = gate.ins.iter().map(String::as_str).collect();
        b.gate(&gate.name, &gate.class, gate.size, gate.loc, &ins, &gate.out);
    }
    b.build().expect("generated netlist is well formed")
}

struct Gate {
    name: String,
    class: String,
    size: usize,
    loc: (f64, f64),
    ins: Vec<String>,
    out: String,
}

/// Side of the square placement grid for `n_gates` gates.
pub fn grid_side(n_gates: usize) -> usize {
    let side = (sqrt(n_gates as f64) as usize).max(1);
    if side * side < n_gates {
        side + 1
    } else {
        side
    }
}
