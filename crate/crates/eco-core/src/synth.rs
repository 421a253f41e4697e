// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthetic standard-cell library.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::library::{CellLibrary, CellVariant, InputPin, Table2d, TimingArc};
use crate::math::{powi, round_to, sqrt};

pub const SYNTH_VDD_MV: f64 = 1100.0;
pub const SLEW_AXIS_PS: [f64; 5] = [5.0, 15.0, 40.0, 100.0, 250.0];
pub const LOAD_AXIS_FF: [f64; 6] = [0.5, 2.0, 5.0, 12.0, 30.0, 80.0];

const TEMPLATES: [(&str, usize, f64); 12] = [
    ("INV", 1, 1.0),
    ("BUF", 1, 1.3),
    ("NAND2", 2, 1.2),
    ("NOR2", 2, 1.45),
    ("AND2", 2, 1.5),
    ("OR2", 2, 1.6),
    ("XOR2", 2, 1.9),
    ("AOI21", 3, 1.7),
    ("OAI21", 3, 1.75),
    ("NAND3", 3, 1.45),
    ("NOR3", 3, 1.85),
    ("MUX2", 3, 2.0),
];
const PIN_NAMES: [&str; 3] = ["A", "B", "C"];

fn class_template(k: usize) -> (String, usize, f64) {
    if k < TEMPLATES.len() {
        let (n, a, c) = TEMPLATES[k];
        (n.into(), a, c)
    } else {
        (format!("CELL{k}"), 1 + k % 3, 1.0 + 0.1 * (k % 7) as f64)
    }
}

/// Builds a library of `n_classes` classes with `n_sizes` drive strengths
/// each. Size `k` has drive multiplier `2^k`: pin caps, leakage, internal
/// energy and area scale with it, and the load-dependent delay term
/// shrinks with it.
///
/// # Panics
///
/// If `n_sizes < 2` or `n_classes == 0`.
pub fn gen_synthetic_library(seed: u64, n_classes: usize, n_sizes: usize) -> CellLibrary {
    assert!(n_sizes >= 2, "need at least two sizes per class");
    assert!(n_classes >= 1, "need at least one class");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut variants = Vec::with_capacity(n_classes * n_sizes);
    for k in 0..n_classes {
        let (class, arity, complexity) = class_template(k);
        let drive_res = rng.gen_range(7.0..11.0) * complexity; // ps per fF at X1
        let intrinsic = rng.gen_range(6.0..12.0) * complexity;
        let slew_coef = rng.gen_range(0.12..0.25);
        let coupling = rng.gen_range(0.3..0.8);
        let cap_base = rng.gen_range(0.9..1.4) * (0.8 + 0.2 * complexity);
        let leak_base = rng.gen_range(0.03..0.07) * complexity;
        let eint_base = rng.gen_range(0.8..1.6) * complexity;
        let area_base = rng.gen_range(0.8..1.2) * (arity as f64 + 1.0) * 0.5;
        let vsens = rng.gen_range(0.004..0.008);
        let parasitic = rng.gen_range(0.3..0.6);
        let pin_skew: Vec<f64> = (0..arity).map(|p| 1.0 + 0.06 * p as f64).collect();
        for size in 0..n_sizes {
            let drive = powi(2.0, size as i32);
            let input_pins = (0..arity)
                .map(|p| InputPin {
                    name: PIN_NAMES[p].into(),
                    cap_ff: round_to(cap_base * drive * (1.0 + 0.04 * p as f64), 4),
                })
                .collect();
            let arcs = (0..arity)
                .map(|p| {
                    let mut delay = Vec::with_capacity(SLEW_AXIS_PS.len() * LOAD_AXIS_FF.len());
                    let mut slew = Vec::with_capacity(delay.capacity());
                    for &s in &SLEW_AXIS_PS {
                        for &l in &LOAD_AXIS_FF {
                            let r = drive_res * pin_skew[p] / drive;
                            let d = intrinsic * pin_skew[p]
                                + r * (l + parasitic * drive_res / 10.0)
                                + slew_coef * s
                                + coupling * sqrt(s * l / drive);
                            let o = 0.6 * intrinsic + 1.8 * r * l + 0.1 * s;
                            delay.push(round_to(d, 4));
                            slew.push(round_to(o, 4));
                        }
                    }
                    TimingArc {
                        from_pin: PIN_NAMES[p].into(),
                        to_pin: "Y".into(),
                        delay: Table2d::new(SLEW_AXIS_PS.to_vec(), LOAD_AXIS_FF.to_vec(), delay),
                        out_slew: Table2d::new(SLEW_AXIS_PS.to_vec(), LOAD_AXIS_FF.to_vec(), slew),
                    }
                })
                .collect();
            variants.push(CellVariant {
                cell_class: class.clone(),
                size_index: size,
                input_pins,
                output_pin: "Y".into(),
                arcs,
                leakage_uw: round_to(leak_base * drive, 6),
                internal_energy_fj: round_to(eint_base * drive, 6),
                voltage_sensitivity_per_mv: round_to(vsens, 6),
                area: round_to(area_base * drive, 4),
            });
        }
    }
    CellLibrary::new(format!("synth_s{seed}_{n_classes}x{n_sizes}"), SYNTH_VDD_MV, variants)
        .expect("synthetic library satisfies its own invariants")
}
