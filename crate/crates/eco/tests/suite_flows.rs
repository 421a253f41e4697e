// SPDX-License-Identifier: Apache-2.0

use eco::flows::{flow_lr, pareto_sweep, run_lr, size_diff};
use eco::formats::{load_netlist, parse_netlist};
use eco::suite::{library_for, suite_case, suite_library, suite_netlist, SUITE};
use eco::{brute_force_oracle, EcoError, RunConfig};
use eco_core::irgrid::{build_mesh, MeshConfig};
use eco_core::rl::extract_state;
use eco_core::{compute_power, sta_full, Activity, FeatureSchema, NetlistBuilder, VoltageMap};
use nalgebra::DMatrix;

fn cfg_for(name: &str, mv: f64, out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.design.suite = Some(name.into());
    cfg.design.mesh_target_mv = Some(mv);
    cfg.out = Some(out.to_path_buf());
    cfg
}

#[test]
fn every_suite_design_misses_its_target_under_droop() {
    let lib = suite_library();
    for (name, n, ..) in SUITE {
        for mv in [5.0, 10.0] {
            let case = suite_case(name, &lib, mv).unwrap();
            assert_eq!(case.graph.num_instances(), n);
            let droop = case.worst_droop(&lib);
            assert!((droop - mv).abs() <= 0.01 * mv, "{name} {droop}");
            let t = sta_full(&case.graph, &lib, &case.volts, case.target_delay).unwrap();
            assert!(t.tns < 0.0, "{name} at {mv} mV meets timing");
            assert!(case.volts.as_slice().iter().all(|&v| v <= lib.nominal_vdd_mv));
        }
    }
}

#[test]
fn large_design_state_is_a_small_fraction() {
    let lib = suite_library();
    let case = suite_case("syn2000", &lib, 10.0).unwrap();
    let t = sta_full(&case.graph, &lib, &case.volts, case.target_delay).unwrap();
    let s = extract_state(&case.graph, &lib, &t, &case.volts, &FeatureSchema::for_library(&lib));
    let n = case.graph.num_instances() as f64;
    let violators = t.slack.iter().filter(|s| **s < 0.0).count();
    assert!(!s.is_empty());
    assert!((violators as f64) < 0.1 * n, "{violators}");
    // The two-hop ball multiplies the violator count about sevenfold on
    // this fanout-4 netlist: 716 of 2000 gates at 10 mV.
    assert!((s.len() as f64) < 0.4 * n, "{}", s.len());
}

#[test]
fn suite_meshes_are_positive_definite() {
    let lib = suite_library();
    for (name, ..) in SUITE {
        let g = suite_netlist(name, &lib).unwrap();
        let nominal = VoltageMap::uniform(g.num_instances(), lib.nominal_vdd_mv);
        let p = compute_power(&g, &lib, &nominal, &Activity::default());
        let extent = g.instances.iter().fold(0.0f64, |m, i| m.max(i.location.0).max(i.location.1));
        let mesh = build_mesh(&g, &p, lib.nominal_vdd_mv, &MeshConfig::covering(extent, 2.0, 1.0)).unwrap();
        let (free, a, _) = mesh.reduced_system();
        if free.len() > 2500 {
            continue;
        }
        let dense = a.to_dense();
        let m = DMatrix::from_fn(free.len(), free.len(), |i, j| dense[i][j]);
        assert!(m.clone().cholesky().is_some(), "{name}");
        assert_eq!(m.transpose(), m);
    }
}

#[test]
fn lr_closes_syn50_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let lib = suite_library();
    let case = suite_case("syn50", &lib, 10.0).unwrap();
    let cfg = cfg_for("syn50", 10.0, dir.path());
    let (out, d) = run_lr(&lib, &case, &cfg, case.target_delay).unwrap();
    assert!(out.feasible);
    assert!(out.trace.len() <= 20);
    assert_eq!(d.timing.tns, 0.0);
}

#[test]
fn result_counts_match_the_written_netlist() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cfg_for("syn100", 10.0, dir.path());
    let rep = flow_lr(&cfg).unwrap();
    let lib = suite_library();
    let start = suite_netlist("syn100", &lib).unwrap();
    let r = &rep.rows[0];
    let net = rep.files.iter().find(|p| p.extension().is_some_and(|e| e == "net")).unwrap();
    let sized = load_netlist(net, &lib).unwrap();
    let (mut up, mut down) = (0, 0);
    for (a, b) in start.instances.iter().zip(&sized.instances) {
        assert_eq!(a.name, b.name);
        up += usize::from(b.size > a.size);
        down += usize::from(b.size < a.size);
    }
    assert_eq!((r.upsizes, r.downsizes), (up, down));
    assert_eq!(size_diff(&start.sizes(), &sized.sizes()), (up, down));
    let csv = std::fs::read_to_string(dir.path().join("lr_results.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), eco::flows::RESULTS_HEADER);
    assert!(csv.lines().nth(2).unwrap().starts_with("lr,syn100,lr,"));
}

#[test]
fn pareto_points_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cfg_for("syn50", 10.0, dir.path());
    let (rep, points) = pareto_sweep(&cfg).unwrap();
    assert_eq!(points.len(), rep.rows.len());
    assert!(points.windows(2).all(|w| w[0].clock_ps < w[1].clock_ps));
    for (p, r) in points.iter().zip(&rep.rows) {
        assert_eq!(p.power_opt.is_some(), r.feasible);
        if let (Some(ir), Some(opt), Some(no), Some(s)) = (p.power_ir, p.power_opt, p.power_no_ir, p.savings_pct) {
            assert!(((ir - opt) / (ir - no) * 100.0 - s).abs() < 1e-9);
        }
    }
    // The target is the nominal-supply delay of the initial sizing.
    let lib = suite_library();
    let case = suite_case("syn50", &lib, 10.0).unwrap();
    let nominal = VoltageMap::uniform(case.graph.num_instances(), lib.nominal_vdd_mv);
    let t = sta_full(&case.graph, &lib, &nominal, case.target_delay).unwrap();
    assert_eq!(t.tns, 0.0);
}

#[test]
fn oracle_examples() {
    let lib = library_for("chain8").unwrap();
    let mut b = NetlistBuilder::new(&lib);
    b.input("a").gate("u", "INV", 2, (0.0, 0.0), &["a"], "z").output("z");
    let g = b.build().unwrap();
    let v = VoltageMap::uniform(1, lib.nominal_vdd_mv);
    let loose = brute_force_oracle(&g, &lib, &v, &Activity::default(), 1e6).unwrap().unwrap();
    assert_eq!(loose.sizes, vec![0]);
    assert!(brute_force_oracle(&g, &lib, &v, &Activity::default(), 1.0).unwrap().is_none());

    let big = suite_netlist("syn50", &suite_library()).unwrap();
    let lib = suite_library();
    let v = VoltageMap::uniform(big.num_instances(), lib.nominal_vdd_mv);
    assert!(matches!(brute_force_oracle(&big, &lib, &v, &Activity::default(), 1e6), Err(EcoError::Config(_))));
}

#[test]
fn written_suite_netlists_reload() {
    let lib = library_for("tree10").unwrap();
    let case = suite_case("tree10", &lib, 5.0).unwrap();
    let text = eco::formats::write_netlist(&case.graph, &lib);
    let back = parse_netlist("tree10", &text, &lib).unwrap();
    assert_eq!(back.sizes(), case.graph.sizes());
}
