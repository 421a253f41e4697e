// SPDX-License-Identifier: Apache-2.0

//! Hand-built libraries and circuits shared by the integration tests.

#![allow(dead_code)]

use eco_core::library::InputPin;
use eco_core::{CellLibrary, CellVariant, NetlistBuilder, NetlistGraph, Table2d, TimingArc};

pub const SLEW_AXIS: [f64; 2] = [10.0, 30.0];
pub const LOAD_AXIS: [f64; 2] = [1.0, 6.0];

/// Table of `c + ks * slew + kl * load` on the shared axes. Bilinear
/// interpolation reproduces it exactly inside the grid.
pub fn plane(c: f64, ks: f64, kl: f64) -> Table2d {
    let mut v = Vec::new();
    for s in SLEW_AXIS {
        for l in LOAD_AXIS {
            v.push(c + ks * s + kl * l);
        }
    }
    Table2d::new(SLEW_AXIS.to_vec(), LOAD_AXIS.to_vec(), v)
}

fn variant(class: &str, pins: &[&str], size: usize, vsens: f64) -> CellVariant {
    // Each size step is faster, has larger pins and costs more.
    let k = size as f64;
    let drive = 1.0 / (1.0 + k);
    CellVariant {
        cell_class: class.into(),
        size_index: size,
        input_pins: pins.iter().map(|p| InputPin { name: (*p).into(), cap_ff: 1.0 + k }).collect(),
        output_pin: "Y".into(),
        arcs: pins
            .iter()
            .map(|p| TimingArc {
                from_pin: (*p).into(),
                to_pin: "Y".into(),
                delay: plane(10.0 - k, 0.5 * drive, 5.0 * drive),
                out_slew: plane(5.0, 0.25 * drive, 2.0 * drive),
            })
            .collect(),
        leakage_uw: 0.1 * (1.0 + k),
        internal_energy_fj: 1.0 + k,
        voltage_sensitivity_per_mv: vsens,
        area: 1.0 + k,
    }
}

/// INV and NAND2 with `sizes` sizes each. At size 0 the delay is
/// `10 + 0.5 slew + 5 load` and the output slew `5 + 0.25 slew + 2 load`.
pub fn hand_library(sizes: usize, vsens: f64) -> CellLibrary {
    let mut v = Vec::new();
    for s in 0..sizes {
        v.push(variant("INV", &["A"], s, vsens));
        v.push(variant("NAND2", &["A", "B"], s, vsens));
    }
    CellLibrary::new("hand", 1100.0, v).unwrap()
}

/// `n` inverters in series from input `a` to output `z`.
pub fn inv_chain(lib: &CellLibrary, n: usize) -> NetlistGraph {
    let mut b = NetlistBuilder::new(lib);
    b.input("n0");
    for k in 0..n {
        b.gate(&format!("u{k}"), "INV", 0, (k as f64, 0.0), &[&format!("n{k}")], &format!("n{}", k + 1));
    }
    b.output(&format!("n{n}"));
    b.build().unwrap()
}
