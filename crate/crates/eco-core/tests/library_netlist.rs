// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{hand_library, inv_chain};
use eco_core::features::Normalizer;
use eco_core::netlist::{Driver, NetlistError, Sink};
use eco_core::{
    annotate_features, gen_synthetic_library, gen_synthetic_netlist, sta_full, FeatureSchema, InstId, NetlistBuilder,
    VoltageMap,
};
use proptest::prelude::*;

#[test]
fn two_size_library_upsize_is_faster_everywhere() {
    let lib = gen_synthetic_library(2, 1, 2);
    assert_eq!(lib.variants.len(), 2);
    let c = eco_core::ClassId(0);
    let (small, big) = (lib.variant(c, 0), lib.variant(c, 1));
    for (a, b) in small.arcs.iter().zip(&big.arcs) {
        for r in 0..a.delay.rows() {
            for k in 0..a.delay.cols() {
                assert!(b.delay.at(r, k) < a.delay.at(r, k));
            }
        }
    }
}

#[test]
fn bundled_library_is_deterministic() {
    let a = gen_synthetic_library(1, 8, 4);
    assert_eq!(a, gen_synthetic_library(1, 8, 4));
    assert_eq!(a.variants.len(), 32);
    assert_eq!(a.nominal_vdd_mv, 1100.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_libraries_pass_the_monotonicity_audit(seed in 0u64..10_000, classes in 1usize..8, sizes in 2usize..5) {
        let lib = gen_synthetic_library(seed, classes, sizes);
        for c in 0..lib.num_classes() {
            let c = eco_core::ClassId(c as u32);
            for s in 1..lib.num_sizes(c) {
                let (lo, hi) = (lib.variant(c, s - 1), lib.variant(c, s));
                for p in 0..lo.input_pins.len() {
                    prop_assert!(hi.pin_cap(p) > lo.pin_cap(p));
                    let (a, b) = (&lo.arcs[p].delay, &hi.arcs[p].delay);
                    for r in 0..a.rows() {
                        for k in 0..a.cols() {
                            prop_assert!(b.at(r, k) < a.at(r, k));
                        }
                    }
                }
                prop_assert!(hi.leakage_uw > lo.leakage_uw);
            }
        }
    }

    #[test]
    fn lookup_is_continuous_at_knots(seed in 0u64..10_000, r in 1usize..4, c in 1usize..4, side in 0usize..2) {
        let lib = gen_synthetic_library(seed, 2, 2);
        let t = &lib.variants[0].arcs[0].delay;
        let (r, c) = (r.min(t.rows() - 1), c.min(t.cols() - 1));
        let (s, l) = (t.slew_axis[r], t.load_axis[c]);
        let at = t.lookup(s, l);
        let h = 1e-9 * (1.0 + s.max(l));
        let (ds, dl) = if side == 0 { (h, 0.0) } else { (0.0, h) };
        let above = t.lookup(s + ds, l + dl);
        let below = t.lookup(s - ds, l - dl);
        prop_assert!((above - at).abs() <= 1e-6 * at.abs());
        prop_assert!((below - at).abs() <= 1e-6 * at.abs());
        prop_assert_eq!(at, t.at(r, c));
    }
}

#[test]
fn chain_and_star_edges() {
    let lib = hand_library(3, 0.0);
    let g = inv_chain(&lib, 3);
    assert_eq!(g.num_instances(), 3);
    assert_eq!(g.num_edges(), 2);

    let mut b = NetlistBuilder::new(&lib);
    b.input("a").gate("d", "INV", 0, (0.0, 0.0), &["a"], "n");
    for k in 0..3 {
        b.gate(&format!("s{k}"), "INV", 0, (0.0, 0.0), &["n"], &format!("z{k}")).output(&format!("z{k}"));
    }
    let g = b.build().unwrap();
    assert_eq!(g.fanout(InstId(0)).len(), 3);
    assert_eq!(g.num_edges(), 3);
}

#[test]
fn feedback_between_nands_names_both() {
    let lib = hand_library(2, 0.0);
    let mut b = NetlistBuilder::new(&lib);
    b.input("a")
        .gate("x", "NAND2", 0, (0.0, 0.0), &["a", "q"], "p")
        .gate("y", "NAND2", 0, (0.0, 0.0), &["p", "a"], "q")
        .output("p");
    match b.build() {
        Err(NetlistError::Cycle(names)) => assert!(names.contains(&"x".into()) && names.contains(&"y".into())),
        other => panic!("expected a cycle, got {other:?}"),
    }
}

#[test]
fn swap_size_records_and_reverts() {
    let lib = hand_library(3, 0.0);
    let mut b = NetlistBuilder::new(&lib);
    b.input("a").input("b").gate("u", "NAND2", 1, (0.0, 0.0), &["a", "b"], "z").output("z");
    let mut g = b.build().unwrap();
    let orig = g.clone();
    let rec = g.swap_size(InstId(0), 2).unwrap();
    assert_eq!((rec.inst, rec.old_size, rec.new_size), (InstId(0), 1, 2));
    g.swap_size(InstId(0), 1).unwrap();
    assert_eq!(g, orig);
    g.swap_size(InstId(0), 0).unwrap();
    assert!(matches!(g.step_size(InstId(0), false), Err(NetlistError::InvalidSize { .. })));
}

#[test]
fn generated_netlist_is_deterministic() {
    let lib = gen_synthetic_library(1, 8, 4);
    let a = gen_synthetic_netlist(7, 20, 5, &lib);
    assert_eq!(a, gen_synthetic_netlist(7, 20, 5, &lib));
    assert_eq!(a.num_instances(), 20);
    assert_eq!(a.topo_order(), gen_synthetic_netlist(7, 20, 5, &lib).topo_order());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_netlists_are_well_formed(seed in 0u64..10_000, n in 5usize..120, depth in 1usize..5) {
        let lib = gen_synthetic_library(1, 8, 4);
        let g = gen_synthetic_netlist(seed, n, depth.min(n), &lib);
        let gate_sinks: usize = g
            .nets
            .iter()
            .filter(|net| matches!(net.driver, Driver::Gate(_)))
            .map(|net| net.sinks.iter().filter(|s| matches!(s, Sink::Gate { .. })).count())
            .sum();
        prop_assert_eq!(g.num_edges(), gate_sinks);
        for id in g.ids() {
            prop_assert!(g.fanout(id).len() <= 4);
            for j in g.fanin_gates(id) {
                prop_assert!(g.topo_pos(j) < g.topo_pos(id));
            }
        }
    }

    #[test]
    fn swap_touches_one_instance(seed in 0u64..10_000, inst in 0u32..30, size in 0usize..4) {
        let lib = gen_synthetic_library(1, 8, 4);
        let mut g = gen_synthetic_netlist(seed, 30, 5, &lib);
        let before = g.clone();
        g.swap_size(InstId(inst), size).unwrap();
        for (k, (a, b)) in g.instances.iter().zip(&before.instances).enumerate() {
            if k == inst as usize {
                prop_assert_eq!(a.size, size);
                prop_assert_eq!(&a.name, &b.name);
            } else {
                prop_assert_eq!(a, b);
            }
        }
        prop_assert_eq!(&g.nets, &before.nets);
    }
}

#[test]
fn feature_normalization_examples() {
    let lib = hand_library(2, 0.0);
    let g = inv_chain(&lib, 3);
    let volts = VoltageMap::from_vec(vec![1100.0, 1090.0, 1100.0]);
    let mut t = sta_full(&g, &lib, &volts, 1000.0).unwrap();
    t.slack[0] = -12.0;
    let f = annotate_features(&g, &t, &volts);
    let schema = FeatureSchema::for_library(&lib);
    let norm = Normalizer { clock: 1000.0, max_load: lib.max_table_load(), nominal_vdd: 1100.0 };
    let row0 = f[0].normalized(&schema, &norm);
    assert!((row0[FeatureSchema::SLACK] + 0.012).abs() < 1e-15);
    let row1 = f[1].normalized(&schema, &norm);
    assert!((row1[FeatureSchema::DROOP] - 10.0 / 1100.0).abs() < 1e-15);
}

#[test]
fn chain_features_match_worksheet() {
    // Same worksheet as the timing tests, clock 70 ps.
    let lib = hand_library(2, 0.0);
    let g = inv_chain(&lib, 3);
    let volts = VoltageMap::uniform(3, 1100.0);
    let t = sta_full(&g, &lib, &volts, 70.0).unwrap();
    let f = annotate_features(&g, &t, &volts);
    let expect = [(20.0, 13.0), (13.0, 11.25), (11.25, 5.0 + 0.25 * 11.25 + 3.0)];
    for (fv, (sin, sout)) in f.iter().zip(expect) {
        assert!((fv.slack + 4.625).abs() < 1e-12);
        assert!((fv.in_slew - sin).abs() < 1e-12);
        assert!((fv.out_slew - sout).abs() < 1e-12);
        assert!((fv.load - 1.5).abs() < 1e-12);
        assert_eq!(fv.ir_voltage, 1100.0);
    }
}
