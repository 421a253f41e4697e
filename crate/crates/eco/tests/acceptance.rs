// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::{BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eco::flows::{load_design, load_suite_case, min_delay_estimate, run_finetune, run_infer, run_lr, run_train};
use eco::suite::{suite_case, suite_library, SUITE};
use eco::{brute_force_oracle, run_flow, Case, RunConfig};
use eco_core::irgrid::{Pads, PdnMesh};
use eco_core::lagrangian::power_overhead_savings;
use eco_core::rl::infer::InferStep;
use eco_core::rl::{Agent, QNetwork, StateSubgraph, TrainOutcome};
use eco_core::timing::drives_endpoint;
use eco_core::{
    build_mesh, compute_power, scale_mesh_to_target, sta_full, CellLibrary, Design, FeatureSchema, InstId, MeshConfig,
    NetlistGraph, VoltageMap,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Mask-safety tally shared by every run that steps an environment.
#[derive(Default)]
struct Safety {
    steps: u64,
    checks: u64,
    replayed: u64,
    violations: Vec<String>,
}

impl Safety {
    fn train(&mut self, what: &str, out: &TrainOutcome) {
        self.steps += out.steps.len() as u64;
        self.checks += out.mask_checks;
        if out.mask_checks != out.steps.len() as u64 {
            self.violations.push(format!("{what}: {} checks for {} steps", out.mask_checks, out.steps.len()));
        }
    }

    fn infer(&mut self, what: &str, lib: &CellLibrary, case: &Case, clock: f64, trace: &[InferStep], checks: u64) {
        self.steps += trace.len() as u64;
        self.checks += checks;
        if checks != trace.len() as u64 {
            self.violations.push(format!("{what}: {checks} checks for {} steps", trace.len()));
        }
        match replay(lib, case, clock, trace) {
            Ok(n) => self.replayed += n,
            Err(e) => self.violations.push(format!("{what}: {e}")),
        }
    }
}

/// Undirected BFS ball over gates.
fn within_hops(g: &NetlistGraph, seeds: &[InstId], hops: usize) -> BTreeSet<InstId> {
    let mut dist = vec![usize::MAX; g.num_instances()];
    let mut q = VecDeque::new();
    for &s in seeds {
        dist[s.index()] = 0;
        q.push_back(s);
    }
    while let Some(v) = q.pop_front() {
        if dist[v.index()] == hops {
            continue;
        }
        let next: Vec<InstId> = g.fanin_gates(v).chain(g.fanout(v).iter().map(|e| e.0)).collect();
        for u in next {
            if dist[u.index()] == usize::MAX {
                dist[u.index()] = dist[v.index()] + 1;
                q.push_back(u);
            }
        }
    }
    g.ids().filter(|id| dist[id.index()] != usize::MAX).collect()
}

/// Re-applies an inference trace on a fresh design and checks that every
/// action was legal when taken: timing was violated, the gate lay within
/// two hops of the worst path and of a violator, and the move stayed in
/// its size range.
fn replay(lib: &CellLibrary, case: &Case, clock: f64, trace: &[InferStep]) -> Result<u64, String> {
    let mut d = Design::new(lib, case.graph.clone(), case.volts.clone(), case.activity.clone(), clock)
        .map_err(|e| e.to_string())?;
    for s in trace {
        let (inst, up) = s.action;
        let t = &d.timing;
        if !(t.tns < 0.0) {
            return Err(format!("step {} acted on a clean design", s.step));
        }
        let g = &d.graph;
        let end = g
            .ids()
            .filter(|&i| drives_endpoint(g, i))
            .min_by(|a, b| t.slack[a.index()].total_cmp(&t.slack[b.index()]))
            .ok_or("no endpoint")?;
        let mut path = vec![end];
        while let Some(prev) = g.fanin(*path.last().unwrap())[t.critical_pin[path.last().unwrap().index()]] {
            path.push(prev);
        }
        let violators: Vec<InstId> = g.ids().filter(|i| t.slack[i.index()] < 0.0).collect();
        if !within_hops(g, &path, 2).contains(&inst) {
            return Err(format!("step {}: gate {} is off the critical neighborhood", s.step, inst.index()));
        }
        if !within_hops(g, &violators, 2).contains(&inst) {
            return Err(format!("step {}: gate {} is outside the state", s.step, inst.index()));
        }
        let size = g.instance(inst).size;
        if (up && size + 1 >= g.num_sizes_of(inst)) || (!up && size == 0) {
            return Err(format!("step {}: gate {} moved out of range from size {size}", s.step, inst.index()));
        }
        d.step(inst, up).map_err(|e| e.to_string())?;
        if (d.timing.tns - s.tns).abs() > 1e-9 * (1.0 + s.tns.abs()) {
            return Err(format!("step {}: replayed TNS {} differs from trace {}", s.step, d.timing.tns, s.tns));
        }
    }
    Ok(trace.len() as u64)
}

fn suite_cfg(name: &str, mv: f64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.design.suite = Some(name.into());
    cfg.design.mesh_target_mv = Some(mv);
    cfg
}

fn c1_sta() -> Verdict {
    let start = Instant::now();
    let lib = suite_library();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for &(name, ..) in &SUITE {
        let case = suite_case(name, &lib, 10.0).unwrap();
        let mut d = Design::new(&lib, case.graph.clone(), case.volts.clone(), case.activity.clone(), case.target_delay).unwrap();
        for _ in 0..200 {
            let id = InstId(rng.gen_range(0..d.graph.num_instances() as u32));
            let size = rng.gen_range(0..d.graph.num_sizes_of(id));
            d.resize(id, size).unwrap();
            let full = sta_full(&d.graph, &lib, &d.volts, d.clock()).unwrap();
            let t = &d.timing;
            let pairs = [
                (&t.arrival, &full.arrival),
                (&t.required, &full.required),
                (&t.slack, &full.slack),
                (&t.out_slew, &full.out_slew),
                (&t.in_slew, &full.in_slew),
                (&t.load, &full.load),
                (&t.arc_delay, &full.arc_delay),
            ];
            for (a, b) in pairs {
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max((x - y).abs());
                    checked += 1;
                }
            }
            worst = worst.max((t.wns - full.wns).abs()).max((t.tns - full.tns).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-6 && secs < 60.0, format!("{checked} pin values, max diff {worst:.2e} ps, {secs:.1} s"))
}

/// Dense nodal solve of the mesh drops, assembled from the mesh
/// definition alone.
fn dense_drops(m: &PdnMesh) -> Vec<f64> {
    let n = m.rows * m.cols;
    let free: Vec<usize> = (0..n).filter(|k| !m.pads.contains(k)).collect();
    let slot = |k: usize| free.iter().position(|&f| f == k);
    let g = 1.0 / m.sheet_resistance;
    let mut a = DMatrix::<f64>::zeros(free.len(), free.len());
    let mut b = DVector::<f64>::zeros(free.len());
    for (i, &k) in free.iter().enumerate() {
        let (r, c) = (k / m.cols, k % m.cols);
        let mut nb = Vec::new();
        if r > 0 {
            nb.push(k - m.cols);
        }
        if r + 1 < m.rows {
            nb.push(k + m.cols);
        }
        if c > 0 {
            nb.push(k - 1);
        }
        if c + 1 < m.cols {
            nb.push(k + 1);
        }
        for j in nb {
            a[(i, i)] += g;
            if let Some(s) = slot(j) {
                a[(i, s)] -= g;
            }
        }
        b[i] = m.currents[k];
    }
    let x = a.lu().solve(&b).expect("nonsingular");
    let mut drops = vec![0.0; n];
    for (i, &k) in free.iter().enumerate() {
        drops[k] = x[i];
    }
    drops
}

fn c2_ir() -> Verdict {
    let mut line = PdnMesh::new(1, 3, 1.0, 1100.0, &Pads::Nodes(vec![(0, 0)])).unwrap();
    line.currents[2] = 1.0;
    let v = line.solve_nodes().unwrap();
    let series = (1100.0 - v[1] - 1.0).abs().max((1100.0 - v[2] - 2.0).abs());

    let mut mesh = PdnMesh::new(20, 20, 0.7, 1100.0, &Pads::Corners).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for c in mesh.currents.iter_mut() {
        *c = rng.gen_range(0.0..0.2);
    }
    let cg = mesh.solve_nodes().unwrap();
    let dense = dense_drops(&mesh);
    let agree = cg.iter().zip(&dense).map(|(v, d)| ((1100.0 - v) - d).abs()).fold(0.0, f64::max);

    let lib = suite_library();
    let case = suite_case("syn200", &lib, 10.0).unwrap();
    let p0 = compute_power(&case.graph, &lib, &VoltageMap::uniform(case.graph.num_instances(), 1100.0), &case.activity);
    let extent = case.graph.instances.iter().fold(0.0f64, |m, i| m.max(i.location.0).max(i.location.1));
    let base = build_mesh(&case.graph, &p0, lib.nominal_vdd_mv, &MeshConfig::covering(extent, 2.0, 1.0)).unwrap();
    let mut scale_err = 0.0f64;
    for target in [5.0, 10.0] {
        let scaled = scale_mesh_to_target(&base, target).unwrap();
        let worst = scaled.solve_nodes().unwrap().iter().map(|v| 1100.0 - v).fold(0.0, f64::max);
        scale_err = scale_err.max((worst - target).abs() / target);
    }
    verdict(
        series < 1e-9 && agree < 1e-8 && scale_err < 0.01,
        format!("series err {series:.1e} mV, 20x20 CG vs dense {agree:.1e} mV, scaling err {:.3}%", 100.0 * scale_err),
    )
}

fn c3_gradients() -> Verdict {
    let dim = FeatureSchema::for_library(&suite_library()).dim();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..20 {
        let features: Vec<f64> = (0..6 * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut edges = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                if rng.gen_bool(0.4) {
                    edges.push((a, b));
                }
            }
        }
        let s = StateSubgraph::from_parts(features, dim, &edges);
        let mut net = QNetwork::new(dim, &[64, 64], &mut rng);
        let y: Vec<[f64; 2]> = (0..6).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let loss = |n: &QNetwork| -> f64 {
            let q = n.q_values(&s).unwrap();
            q.iter().zip(&y).map(|(q, y)| (q[0] - y[0]).powi(2) + (q[1] - y[1]).powi(2)).sum()
        };
        let cache = net.forward(&s).unwrap();
        let dq: Vec<[f64; 2]> = cache.q.iter().zip(&y).map(|(q, y)| [2.0 * (q[0] - y[0]), 2.0 * (q[1] - y[1])]).collect();
        let mut grads = net.zeros_like();
        net.backward(&s, &cache, &dq, &mut grads);
        let analytic: Vec<f64> = grads.params().copied().collect();
        let h = 1e-6;
        for _ in 0..200 {
            let k = rng.gen_range(0..analytic.len());
            let orig = *net.params().nth(k).unwrap();
            *net.params_mut().nth(k).unwrap() = orig + h;
            let lp = loss(&net);
            *net.params_mut().nth(k).unwrap() = orig - h;
            let lm = loss(&net);
            *net.params_mut().nth(k).unwrap() = orig;
            let fd = (lp - lm) / (2.0 * h);
            let a = analytic[k];
            let scale = a.abs().max(fd.abs());
            if scale > 1e-7 {
                worst = worst.max((a - fd).abs() / scale);
                compared += 1;
            }
        }
    }
    verdict(worst < 1e-4, format!("{compared} parameters over 20 states, max relative error {worst:.2e}"))
}

fn c4_oracle(safety: &mut Safety) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in eco::suite::ORACLE_CASES {
        let mut cfg = suite_cfg(name, 10.0);
        cfg.lr.max_passes = 200;
        let (lib, case) = load_design(&cfg).unwrap();
        let clock = case.target_delay;
        let orc = brute_force_oracle(&case.graph, &lib, &case.volts, &case.activity, clock).unwrap().unwrap();
        let (lr, _) = run_lr(&lib, &case, &cfg, clock).unwrap();
        let tc = cfg.train.config(cfg.seed, cfg.lagrangian.m_decay).unwrap();
        let (agent, out, _) = run_train(&lib, std::slice::from_ref(&case), &cfg, &tc).unwrap();
        safety.train(name, &out);
        let (inf, checks) = run_infer(&lib, &case, &cfg, &agent, clock).unwrap();
        safety.infer(name, &lib, &case, clock, &inf.trace, checks);
        let lr_ok = lr.feasible && lr.power <= 1.1 * orc.power;
        let rl_ok = inf.best.feasible && inf.best.power <= 1.1 * orc.power;
        ok &= lr_ok && rl_ok;
        parts.push(format!(
            "{name} LR {:.3}{} RL {:.3}{}",
            lr.power / orc.power,
            if lr.feasible { "" } else { " (violating)" },
            inf.best.power / orc.power,
            if inf.best.feasible { "" } else { " (violating)" }
        ));
    }
    verdict(ok, format!("power over oracle: {}", parts.join(", ")))
}

struct Syn50Runs {
    agent: Agent,
    train_secs: f64,
}

fn c5_convergence(safety: &mut Safety) -> (Verdict, Syn50Runs) {
    let cfg = suite_cfg("syn50", 10.0);
    let (lib, case) = load_design(&cfg).unwrap();
    let mut converged = 0;
    let mut slowest = 0.0f64;
    let mut first = None;
    for seed in 0..5 {
        let tc = cfg.train.config(seed, cfg.lagrangian.m_decay).unwrap();
        let start = Instant::now();
        let (agent, out, _) = run_train(&lib, std::slice::from_ref(&case), &cfg, &tc).unwrap();
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        safety.train("syn50 convergence", &out);
        let last = out.episodes.last().unwrap();
        converged += (last.tns == 0.0 && last.clock == case.target_delay) as usize;
        if seed == 0 {
            first = Some(Syn50Runs { agent, train_secs: secs });
        }
    }
    let v = verdict(
        converged >= 4 && slowest < 900.0,
        format!("{converged}/5 seeds end with TNS 0, slowest seed {slowest:.1} s"),
    );
    (v, first.unwrap())
}

/// Shortest critical delay over every sizing.
fn exact_min_delay(case: &Case, lib: &CellLibrary) -> f64 {
    let n = case.graph.num_instances();
    let mut g = case.graph.clone();
    g.set_sizes(&vec![0; n]).unwrap();
    let mut d = Design::new(lib, g, case.volts.clone(), case.activity.clone(), 1.0).unwrap();
    let radix: Vec<usize> = d.graph.ids().map(|i| d.graph.num_sizes_of(i)).collect();
    let mut digits = vec![0; n];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(d.timing.critical_delay(&d.graph));
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            digits[k] += 1;
            if digits[k] < radix[k] {
                d.resize(InstId(k as u32), digits[k]).unwrap();
                break;
            }
            digits[k] = 0;
            d.resize(InstId(k as u32), 0).unwrap();
            k += 1;
        }
    }
}

/// Margin over the estimated shortest clock at which the ablation runs.
const TIGHT_MARGIN: f64 = 1.05;

fn c6_ablation(safety: &mut Safety) -> Verdict {
    let small = suite_cfg("dag10", 10.0);
    let (slib, scase) = load_design(&small).unwrap();
    let est = min_delay_estimate(&slib, &scase, &small).unwrap();
    let exact = exact_min_delay(&scase, &slib);
    let sclock = TIGHT_MARGIN * est;
    let certified = brute_force_oracle(&scase.graph, &slib, &scase.volts, &scase.activity, sclock).unwrap().is_some();

    let cfg = suite_cfg("syn50", 10.0);
    let (lib, case) = load_design(&cfg).unwrap();
    let clock = TIGHT_MARGIN * min_delay_estimate(&lib, &case, &cfg).unwrap();
    let mut tight = case.clone();
    tight.target_delay = clock;
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..5 {
        let mut res = Vec::new();
        for fixed in [false, true] {
            let mut c = cfg.clone();
            c.train.fixed_lambda = fixed;
            let tc = c.train.config(seed, c.lagrangian.m_decay).unwrap();
            let (_, out, best) = run_train(&lib, std::slice::from_ref(&tight), &c, &tc).unwrap();
            safety.train("ablation", &out);
            res.push(best[0].clone());
        }
        let (dynamic, fixed) = (&res[0], &res[1]);
        let win = dynamic.feasible && (!fixed.feasible || fixed.power > dynamic.power);
        wins += win as usize;
        let f = if fixed.feasible { format!("{:.2}", fixed.power) } else { "miss".into() };
        let d = if dynamic.feasible { format!("{:.2}", dynamic.power) } else { "miss".into() };
        parts.push(format!("{d}/{f}"));
    }
    verdict(
        certified && wins >= 4,
        format!(
            "dag10 estimate/exact shortest clock {:.3}, oracle feasible at margin: {certified}; syn50 at {clock:.1} ps, \
             dynamic beats fixed in {wins}/5 (dynamic/fixed power uW: {})",
            est / exact,
            parts.join(" ")
        ),
    )
}

fn c7_transfer(safety: &mut Safety, runs: &Syn50Runs) -> Verdict {
    let cfg = suite_cfg("syn50", 10.0);
    let (lib, case) = load_design(&cfg).unwrap();
    let gap = case.initial_delay - case.target_delay;
    let mut ok = true;
    let mut parts = Vec::new();
    for f in [-0.25, 0.25, 0.5, 0.75] {
        let clock = case.target_delay + f * gap;
        let start = Instant::now();
        let (inf, checks) = run_infer(&lib, &case, &cfg, &runs.agent, clock).unwrap();
        let share = start.elapsed().as_secs_f64() / runs.train_secs;
        safety.infer("transfer", &lib, &case, clock, &inf.trace, checks);
        ok &= inf.best.feasible && share < 0.2;
        parts.push(format!("{clock:.1} ps {} {:.1}%", if inf.best.feasible { "met" } else { "missed" }, 100.0 * share));
    }
    verdict(ok, format!("syn50 model at {} (inference time / training time)", parts.join(", ")))
}

fn c8_cross(safety: &mut Safety) -> Verdict {
    let cfg = suite_cfg("syn50", 10.0);
    let lib = suite_library();
    let train: Vec<Case> =
        ["syn100", "syn400", "syn1000", "syn2000"].iter().map(|n| load_suite_case(&cfg, n, &lib).unwrap()).collect();
    let tc = cfg.train.config(cfg.seed, cfg.lagrangian.m_decay).unwrap();
    let (agent, out, _) = run_train(&lib, &train, &cfg, &tc).unwrap();
    safety.train("cross-design training", &out);
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["syn50", "syn200", "syn700"] {
        let case = load_suite_case(&cfg, name, &lib).unwrap();
        let (inf, checks) = run_infer(&lib, &case, &cfg, &agent, case.target_delay).unwrap();
        safety.infer(name, &lib, &case, case.target_delay, &inf.trace, checks);
        if inf.best.feasible {
            parts.push(format!("{name} met by inference"));
            continue;
        }
        let start = Instant::now();
        let (_, ft) = run_finetune(&lib, &case, &cfg, &agent).unwrap();
        let ft_secs = start.elapsed().as_secs_f64();
        safety.train("fine-tune", &ft);
        let start = Instant::now();
        let (_, scratch, _) = run_train(&lib, std::slice::from_ref(&case), &cfg, &tc).unwrap();
        let scratch_secs = start.elapsed().as_secs_f64();
        safety.train("scratch", &scratch);
        let share = ft_secs / scratch_secs;
        let met = ft.best[0].feasible;
        ok &= met && share < 0.3;
        parts.push(format!("{name} fine-tune {} at {:.0}% of scratch time", if met { "met" } else { "missed" }, 100.0 * share));
    }
    verdict(ok, parts.join(", "))
}

fn c9_metric() -> Verdict {
    let full = power_overhead_savings(1.3, 1.0, 1.0).unwrap();
    let none = power_overhead_savings(1.3, 1.3, 1.0).unwrap();
    let example = power_overhead_savings(1.6, 1.1, 1.0).unwrap();
    let shown = (example * 10.0).round() / 10.0;
    verdict(full == 100.0 && none == 0.0 && shown == 83.3, format!("{full}%, {none}%, {example:.4}%"))
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c10_determinism() -> Verdict {
    let run_all = |dir: &Path| {
        let mut cfg = suite_cfg("syn50", 10.0);
        cfg.out = Some(dir.to_path_buf());
        cfg.model.output = Some(dir.join("model.ecoq"));
        for flow in ["lr", "train", "pareto"] {
            run_flow(flow, &cfg).unwrap();
        }
        cfg.model.input = Some(dir.join("model.ecoq"));
        cfg.model.output = Some(dir.join("tuned.ecoq"));
        cfg.infer_tc.clocks = vec![cfg_target(&cfg), 660.0];
        run_flow("infer-tc", &cfg).unwrap();
        cfg.design.suite = Some("syn100".into());
        run_flow("finetune", &cfg).unwrap();
        cfg.model.input = None;
        cfg.model.output = Some(dir.join("cross.ecoq"));
        cfg.infer_d.train = vec!["syn50".into()];
        cfg.infer_d.test = vec!["syn100".into(), "syn200".into()];
        run_flow("infer-d", &cfg).unwrap();
        csvs(dir)
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_all(a.path());
    let rb = run_all(b.path());
    let differing: Vec<&str> = ra.iter().zip(&rb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let same = ra.len() == rb.len() && differing.is_empty() && ra.len() >= 12;
    verdict(same, format!("{} CSVs from six flows compared, differing: {:?}", ra.len(), differing))
}

fn cfg_target(cfg: &RunConfig) -> f64 {
    load_design(cfg).unwrap().1.target_delay
}

fn c11_mask(safety: &Safety) -> Verdict {
    verdict(
        safety.violations.is_empty() && safety.steps > 0 && safety.checks == safety.steps,
        format!(
            "{} steps, {} mask checks, {} inference steps replayed, violations: {:?}",
            safety.steps, safety.checks, safety.replayed, safety.violations
        ),
    )
}

fn runtime_ordering(runs: &Syn50Runs) -> String {
    let cfg = suite_cfg("syn50", 10.0);
    let (lib, case) = load_design(&cfg).unwrap();
    let start = Instant::now();
    run_infer(&lib, &case, &cfg, &runs.agent, case.target_delay).unwrap();
    let infer = start.elapsed().as_secs_f64();
    let start = Instant::now();
    run_lr(&lib, &case, &cfg, case.target_delay).unwrap();
    let lr = start.elapsed().as_secs_f64();
    let holds = infer < lr && lr < runs.train_secs;
    format!(
        "info: syn50 runtime inference {infer:.4} s, LR {lr:.4} s, training {:.2} s; inference < LR < training {}",
        runs.train_secs,
        if holds { "holds" } else { "does not hold" }
    )
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn main() {
    let mut safety = Safety::default();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n: usize, name: &'static str, v: Verdict| {
        println!("criterion {n:>2} {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };
    report(1, "incremental STA", guarded(c1_sta));
    report(2, "IR solver", guarded(c2_ir));
    report(3, "gradient check", guarded(c3_gradients));
    report(4, "oracle bar", guarded(|| c4_oracle(&mut safety)));
    let mut runs = None;
    report(
        5,
        "training convergence",
        guarded(|| {
            let (v, r) = c5_convergence(&mut safety);
            runs = Some(r);
            v
        }),
    );
    report(6, "fixed-multiplier ablation", guarded(|| c6_ablation(&mut safety)));
    match &runs {
        Some(r) => report(7, "clock transfer", guarded(|| c7_transfer(&mut safety, r))),
        None => report(7, "clock transfer", verdict(false, "no trained model")),
    }
    report(8, "cross-design", guarded(|| c8_cross(&mut safety)));
    report(9, "savings metric", guarded(c9_metric));
    report(10, "determinism", guarded(c10_determinism));
    report(11, "mask safety", c11_mask(&safety));
    if let Some(r) = &runs {
        println!("{}", runtime_ordering(r));
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("acceptance: {}/{} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
