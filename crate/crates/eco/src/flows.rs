// SPDX-License-Identifier: Apache-2.0

//! End-to-end flows: LR baseline, training, inference across clocks and
//! designs, fine-tuning and the power-delay sweep.
//!
//! Every flow writes into the output directory:
//! `<flow>_results.csv`, `<flow>_trace.csv`, `<flow>_summary.json` and one
//! sized netlist per result row. CSVs carry no wall-clock data, so re-runs
//! with the same config and seed reproduce them byte for byte; runtimes go
//! to the JSON summary.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use eco_core::lagrangian::{power_overhead_savings, ClockSchedule, LagrangianContext, LagrangianParams};
use eco_core::rl::{dqn_train, fine_tune, infer, Agent, BestSizing, Env, InferOutcome, TrainConfig, TrainOutcome};
use eco_core::{lr_size, Activity, CellLibrary, Design, FeatureSchema, LrOutcome, VoltageMap};

use crate::config::{Optimizer, RunConfig};
use crate::error::{EcoError, Result};
use crate::formats::{load_library, load_model, load_netlist, load_volts, save_model, write_netlist, write_text};
use crate::suite::{library_for, prepare, suite_netlist, Case, VoltSource};

pub const RESULTS_HEADER: &str = "flow,design,mode,clock_ps,feasible,power_uw,wns_ps,tns_ps,upsizes,downsizes,actions";
pub const LR_TRACE_HEADER: &str = "design,clock_ps,pass,objective,tns_ps,wns_ps,power_uw,moves";
pub const TRAIN_TRACE_HEADER: &str = "design,episode,step,clock_ps,epsilon,action,reward,tns_ps,wns_ps,power_uw,objective";
pub const EPISODES_HEADER: &str =
    "design,episode,clock_ps,epsilon,steps,start_objective,best_objective,tns_ps,wns_ps,power_uw";
pub const INFER_TRACE_HEADER: &str = "design,mode,clock_ps,step,action,reward,tns_ps,wns_ps,power_uw,objective";
pub const PARETO_HEADER: &str = "clock_ps,power_no_ir_uw,power_ir_uw,power_opt_uw,savings_pct";

/// One line of a results CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub flow: String,
    pub design: String,
    pub mode: String,
    pub clock_ps: f64,
    pub feasible: bool,
    pub power_uw: f64,
    pub wns_ps: f64,
    pub tns_ps: f64,
    pub upsizes: usize,
    pub downsizes: usize,
    pub actions: usize,
    #[serde(skip)]
    pub sizes: Vec<usize>,
    pub runtime_s: f64,
}

impl ResultRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.flow,
            self.design,
            self.mode,
            self.clock_ps,
            self.feasible,
            self.power_uw,
            self.wns_ps,
            self.tns_ps,
            self.upsizes,
            self.downsizes,
            self.actions
        )
    }
}

/// Rows, traces and timings of one flow run.
#[derive(Debug, Clone, Default)]
pub struct FlowReport {
    pub flow: String,
    pub rows: Vec<ResultRow>,
    /// `(file suffix, header, lines)` for each trace table.
    pub traces: Vec<(String, String, Vec<String>)>,
    pub runtime_s: f64,
    pub extra: serde_json::Map<String, serde_json::Value>,
    pub files: Vec<PathBuf>,
}

impl FlowReport {
    pub fn all_feasible(&self) -> bool {
        self.rows.iter().all(|r| r.feasible)
    }

    fn trace(&mut self, suffix: &str, header: &str) -> usize {
        self.traces.push((suffix.to_string(), header.to_string(), Vec::new()));
        self.traces.len() - 1
    }
}

/// Per-instance count of size increases and decreases.
pub fn size_diff(before: &[usize], after: &[usize]) -> (usize, usize) {
    before.iter().zip(after).fold((0, 0), |(u, d), (a, b)| (u + usize::from(b > a), d + usize::from(b < a)))
}

/// Loads the configured design and its library.
pub fn load_design(cfg: &RunConfig) -> Result<(CellLibrary, Case)> {
    cfg.validate()?;
    let d = &cfg.design;
    let (lib, graph, name) = match &d.suite {
        Some(name) => {
            let lib = library_for(name)?;
            let g = suite_netlist(name, &lib)?;
            (lib, g, name.clone())
        }
        None => {
            let lib = load_library(d.library.as_ref().expect("validated"))?;
            let path = d.netlist.as_ref().expect("validated");
            let g = load_netlist(path, &lib)?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (lib, g, name)
        }
    };
    let source = match (&d.volts, d.mesh_target_mv) {
        (Some(p), _) => VoltSource::Map(load_volts(p, &graph)?),
        (None, Some(mv)) => cfg.mesh_source(mv),
        (None, None) => unreachable!("validated"),
    };
    let case = prepare(&name, &lib, graph, &source, Activity::Uniform(d.activity), d.target_delay, d.initial_delay)?;
    Ok((lib, case))
}

/// A bundled design at the configured droop, for multi-design flows.
pub fn load_suite_case(cfg: &RunConfig, name: &str, lib: &CellLibrary) -> Result<Case> {
    let mv = cfg.design.mesh_target_mv.ok_or_else(|| EcoError::Config("multi-design flows need design.mesh_target_mv".into()))?;
    let g = suite_netlist(name, lib)?;
    prepare(name, lib, g, &cfg.mesh_source(mv), Activity::Uniform(cfg.design.activity), None, None)
}

/// The case's initial sizing at `clock`, with multipliers seeded from its
/// violations, or pinned at `λ_init` when `fixed`.
pub fn make_env<'a>(lib: &'a CellLibrary, case: &Case, params: LagrangianParams, fixed: bool, clock: f64) -> Result<Env<'a>> {
    let d = Design::new(lib, case.graph.clone(), case.volts.clone(), case.activity.clone(), clock)?;
    let ctx = if fixed {
        LagrangianContext::fixed(params, d.graph.num_instances(), clock, case.initial_power)
    } else {
        LagrangianContext::new(params, &d.timing, case.initial_power)
    };
    Ok(Env::new(d, ctx))
}

pub fn schedule(case: &Case, decay: usize) -> Result<ClockSchedule> {
    let mut s = ClockSchedule::new(case.initial_delay, case.target_delay)?;
    s.decay_episodes = decay;
    Ok(s)
}

/// Runs the LR baseline on `case` at `clock` from its initial sizing.
pub fn run_lr<'a>(lib: &'a CellLibrary, case: &Case, cfg: &RunConfig, clock: f64) -> Result<(LrOutcome, Design<'a>)> {
    let params = cfg.lagrangian.params()?;
    let mut d = Design::new(lib, case.graph.clone(), case.volts.clone(), case.activity.clone(), clock)?;
    let mut ctx = LagrangianContext::new(params, &d.timing, case.initial_power);
    let out = lr_size(&mut d, &mut ctx, &cfg.lr.config())?;
    Ok((out, d))
}

/// Multiplier large enough that power no longer matters to LR.
const DELAY_DRIVEN_LAMBDA: f64 = 1e4;

/// Critical delay of a delay-driven LR sizing: LR with a very large
/// initial multiplier, aimed at half the target clock. An estimate of the
/// shortest achievable clock.
pub fn min_delay_estimate(lib: &CellLibrary, case: &Case, cfg: &RunConfig) -> Result<f64> {
    let mut cfg = cfg.clone();
    cfg.lagrangian.lambda_init = DELAY_DRIVEN_LAMBDA;
    cfg.lr.max_passes = cfg.lr.max_passes.max(50);
    let (out, mut d) = run_lr(lib, case, &cfg, 0.5 * case.target_delay)?;
    d.apply_sizes(&out.sizes)?;
    Ok(d.timing.critical_delay(&d.graph))
}

/// Trains a fresh agent round-robin over `cases`, each with its own
/// clock schedule.
pub fn run_train(
    lib: &CellLibrary,
    cases: &[Case],
    cfg: &RunConfig,
    tc: &TrainConfig,
) -> Result<(Agent, TrainOutcome, Vec<BestSizing>)> {
    let params = cfg.lagrangian.params()?;
    let schema = FeatureSchema::for_library(lib);
    let mut agent = Agent::new(schema.dim(), tc);
    let (out, best) = continue_train(lib, cases, cfg, tc, &mut agent, params)?;
    Ok((agent, out, best))
}

fn continue_train(
    lib: &CellLibrary,
    cases: &[Case],
    cfg: &RunConfig,
    tc: &TrainConfig,
    agent: &mut Agent,
    params: LagrangianParams,
) -> Result<(TrainOutcome, Vec<BestSizing>)> {
    let fixed = cfg.train.fixed_lambda;
    let mut envs = Vec::with_capacity(cases.len());
    let mut scheds = Vec::with_capacity(cases.len());
    for c in cases {
        let s = schedule(c, tc.clock_decay)?;
        envs.push(make_env(lib, c, params, fixed, s.at(0))?);
        scheds.push(s);
    }
    let out = dqn_train(agent, &mut envs, &scheds, tc)?;
    let best = out.best.clone();
    Ok((out, best))
}

/// Fine-tunes a copy of `policy` on `case` with the config's fine-tune
/// settings.
pub fn run_finetune(
    lib: &CellLibrary,
    case: &Case,
    cfg: &RunConfig,
    agent: &Agent,
) -> Result<(Agent, TrainOutcome)> {
    let params = cfg.lagrangian.params()?;
    let mut tc = cfg.train.config(cfg.seed, cfg.finetune.m_decay)?;
    tc.episodes = cfg.finetune.episodes;
    tc.eps_start = cfg.finetune.eps_start;
    let mut tuned = Agent::from_policy(agent.policy.clone(), &tc);
    let s = schedule(case, tc.clock_decay)?;
    let mut env = make_env(lib, case, params, cfg.train.fixed_lambda, s.at(0))?;
    let out = fine_tune(&mut tuned, std::slice::from_mut(&mut env), &[s], &tc)?;
    Ok((tuned, out))
}

/// Greedy inference on `case` at `clock` from its initial sizing.
pub fn run_infer(lib: &CellLibrary, case: &Case, cfg: &RunConfig, agent: &Agent, clock: f64) -> Result<(InferOutcome, u64)> {
    let params = cfg.lagrangian.params()?;
    let mut env = make_env(lib, case, params, false, clock)?;
    let out = infer(&mut env, agent, &cfg.infer.config()?)?;
    Ok((out, env.mask_checks))
}

fn row(flow: &str, case: &Case, mode: &str, clock: f64, best: &BestSizing, wns: f64, actions: usize, secs: f64) -> ResultRow {
    let (up, down) = size_diff(&case.graph.sizes(), &best.sizes);
    ResultRow {
        flow: flow.to_string(),
        design: case.name.clone(),
        mode: mode.to_string(),
        clock_ps: clock,
        feasible: best.feasible,
        power_uw: best.power,
        wns_ps: wns,
        tns_ps: best.tns,
        upsizes: up,
        downsizes: down,
        actions,
        sizes: best.sizes.clone(),
        runtime_s: secs,
    }
}

/// WNS of `sizes` on `case` at `clock`.
fn wns_of(lib: &CellLibrary, case: &Case, sizes: &[usize], clock: f64) -> Result<f64> {
    let mut g = case.graph.clone();
    g.set_sizes(sizes)?;
    let t = eco_core::sta_full(&g, lib, &case.volts, clock).map_err(eco_core::design::DesignError::from)?;
    Ok(t.wns)
}

fn action_label(d: &Design<'_>, inst: eco_core::InstId, up: bool) -> String {
    format!("{}:{}", if up { "up" } else { "down" }, d.graph.instance(inst).name)
}

pub fn flow_lr(cfg: &RunConfig) -> Result<FlowReport> {
    let (lib, case) = load_design(cfg)?;
    let mut rep = FlowReport { flow: "lr".into(), ..Default::default() };
    let t = rep.trace("trace", LR_TRACE_HEADER);
    let clock = case.target_delay;
    let start = Instant::now();
    let (out, d) = run_lr(&lib, &case, cfg, clock)?;
    let secs = start.elapsed().as_secs_f64();
    for p in &out.trace {
        rep.traces[t].2.push(format!(
            "{},{},{},{},{},{},{},{}",
            case.name, clock, p.pass, p.objective, p.tns, p.wns, p.power, p.moves
        ));
    }
    let best = BestSizing { sizes: out.sizes.clone(), feasible: out.feasible, power: out.power, tns: out.tns };
    let moves = out.trace.iter().map(|p| p.moves).sum();
    rep.rows.push(row("lr", &case, "lr", clock, &best, d.timing.wns, moves, secs));
    rep.extra.insert("converged".into(), out.converged.into());
    rep.runtime_s = secs;
    finish(cfg, &lib, &[case], rep)
}

pub fn flow_train(cfg: &RunConfig) -> Result<FlowReport> {
    let (lib, case) = load_design(cfg)?;
    let tc = cfg.train.config(cfg.seed, cfg.lagrangian.m_decay)?;
    let start = Instant::now();
    let cases = [case];
    let (agent, out, best) = run_train(&lib, &cases, cfg, &tc)?;
    let secs = start.elapsed().as_secs_f64();
    let mut rep = FlowReport { flow: "train".into(), ..Default::default() };
    let model = model_output(cfg);
    save_model(&model, &agent.policy, &FeatureSchema::for_library(&lib))?;
    rep.files.push(model);
    train_traces(&mut rep, &lib, &cases, &out)?;
    let case = &cases[0];
    let wns = wns_of(&lib, case, &best[0].sizes, case.target_delay)?;
    rep.rows.push(row("train", case, "train", case.target_delay, &best[0], wns, out.steps.len(), secs));
    rep.extra.insert("mask_checks".into(), out.mask_checks.into());
    rep.runtime_s = secs;
    finish(cfg, &lib, &cases, rep)
}

fn model_output(cfg: &RunConfig) -> PathBuf {
    cfg.model.output.clone().unwrap_or_else(|| out_dir(cfg).join("model.ecoq"))
}

fn train_traces(rep: &mut FlowReport, lib: &CellLibrary, cases: &[Case], out: &TrainOutcome) -> Result<()> {
    let t = rep.trace("trace", TRAIN_TRACE_HEADER);
    let e = rep.trace("episodes", EPISODES_HEADER);
    let designs: Vec<Design<'_>> = cases
        .iter()
        .map(|c| Design::new(lib, c.graph.clone(), c.volts.clone(), c.activity.clone(), c.target_delay))
        .collect::<std::result::Result<_, _>>()?;
    for s in &out.steps {
        rep.traces[t].2.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            cases[s.design].name,
            s.episode,
            s.step,
            s.clock,
            s.epsilon,
            action_label(&designs[s.design], s.action.0, s.action.1),
            s.reward,
            s.tns,
            s.wns,
            s.power,
            s.objective
        ));
    }
    for r in &out.episodes {
        rep.traces[e].2.push(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            cases[r.design].name,
            r.episode,
            r.clock,
            r.epsilon,
            r.steps,
            r.start_objective,
            r.best_objective,
            r.tns,
            r.wns,
            r.power
        ));
    }
    Ok(())
}

fn load_agent(cfg: &RunConfig, lib: &CellLibrary) -> Result<Agent> {
    let path = cfg.model.input.as_ref().ok_or_else(|| EcoError::Config("this flow needs model.input".into()))?;
    let net = load_model(path, &FeatureSchema::for_library(lib))?;
    Ok(Agent::from_policy(net, &cfg.train.config(cfg.seed, cfg.lagrangian.m_decay)?))
}

fn infer_rows(
    rep: &mut FlowReport,
    t: usize,
    lib: &CellLibrary,
    case: &Case,
    cfg: &RunConfig,
    agent: &Agent,
    flow: &str,
    clock: f64,
) -> Result<bool> {
    let start = Instant::now();
    let (out, _) = run_infer(lib, case, cfg, agent, clock)?;
    let secs = start.elapsed().as_secs_f64();
    let d = Design::new(lib, case.graph.clone(), case.volts.clone(), case.activity.clone(), clock)?;
    for s in &out.trace {
        rep.traces[t].2.push(format!(
            "{},infer,{},{},{},{},{},{},{},{}",
            case.name,
            clock,
            s.step,
            action_label(&d, s.action.0, s.action.1),
            s.reward,
            s.tns,
            s.wns,
            s.power,
            s.objective
        ));
    }
    let wns = wns_of(lib, case, &out.best.sizes, clock)?;
    rep.rows.push(row(flow, case, "infer", clock, &out.best, wns, out.actions(), secs));
    rep.runtime_s += secs;
    Ok(out.best.feasible)
}

pub fn flow_infer_tc(cfg: &RunConfig) -> Result<FlowReport> {
    let (lib, case) = load_design(cfg)?;
    let agent = load_agent(cfg, &lib)?;
    let mut rep = FlowReport { flow: "infer_tc".into(), ..Default::default() };
    let t = rep.trace("trace", INFER_TRACE_HEADER);
    let clocks = if cfg.infer_tc.clocks.is_empty() { vec![case.target_delay] } else { cfg.infer_tc.clocks.clone() };
    for clock in clocks {
        infer_rows(&mut rep, t, &lib, &case, cfg, &agent, "infer_tc", clock)?;
    }
    finish(cfg, &lib, &[case], rep)
}

/// Trains across `infer_d.train` (unless `model.input` is given), infers
/// on every `infer_d.test` design and fine-tunes where inference misses
/// the target.
pub fn flow_infer_d(cfg: &RunConfig) -> Result<FlowReport> {
    let d = &cfg.infer_d;
    if d.test.is_empty() {
        return Err(EcoError::Config("infer_d.test lists no designs".into()));
    }
    let names: Vec<&String> = d.train.iter().chain(&d.test).collect();
    let lib = library_for(names[0])?;
    for n in &names {
        if library_for(n)? != lib {
            return Err(EcoError::Config("infer_d designs must share one library".into()));
        }
    }
    let mut rep = FlowReport { flow: "infer_d".into(), ..Default::default() };
    let agent = if cfg.model.input.is_some() {
        load_agent(cfg, &lib)?
    } else {
        if d.train.is_empty() {
            return Err(EcoError::Config("infer_d.train lists no designs and no model.input is given".into()));
        }
        let cases: Vec<Case> = d.train.iter().map(|n| load_suite_case(cfg, n, &lib)).collect::<Result<_>>()?;
        let tc = cfg.train.config(cfg.seed, cfg.lagrangian.m_decay)?;
        let start = Instant::now();
        let (agent, out, best) = run_train(&lib, &cases, cfg, &tc)?;
        let secs = start.elapsed().as_secs_f64();
        for (c, b) in cases.iter().zip(&best) {
            let wns = wns_of(&lib, c, &b.sizes, c.target_delay)?;
            rep.rows.push(row("infer_d", c, "train", c.target_delay, b, wns, 0, secs));
        }
        rep.extra.insert("train_runtime_s".into(), secs.into());
        rep.extra.insert("train_steps".into(), out.steps.len().into());
        let model = model_output(cfg);
        save_model(&model, &agent.policy, &FeatureSchema::for_library(&lib))?;
        rep.files.push(model);
        agent
    };
    let t = rep.trace("trace", INFER_TRACE_HEADER);
    let mut tested = Vec::new();
    for n in &d.test {
        let case = load_suite_case(cfg, n, &lib)?;
        let ok = infer_rows(&mut rep, t, &lib, &case, cfg, &agent, "infer_d", case.target_delay)?;
        if !ok {
            let start = Instant::now();
            let (_, out) = run_finetune(&lib, &case, cfg, &agent)?;
            let secs = start.elapsed().as_secs_f64();
            let b = &out.best[0];
            let wns = wns_of(&lib, &case, &b.sizes, case.target_delay)?;
            rep.rows.push(row("infer_d", &case, "finetune", case.target_delay, b, wns, out.steps.len(), secs));
            rep.runtime_s += secs;
        }
        tested.push(case);
    }
    finish(cfg, &lib, &tested, rep)
}

pub fn flow_finetune(cfg: &RunConfig) -> Result<FlowReport> {
    let (lib, case) = load_design(cfg)?;
    let agent = load_agent(cfg, &lib)?;
    let start = Instant::now();
    let (tuned, out) = run_finetune(&lib, &case, cfg, &agent)?;
    let secs = start.elapsed().as_secs_f64();
    let mut rep = FlowReport { flow: "finetune".into(), ..Default::default() };
    let model = model_output(cfg);
    save_model(&model, &tuned.policy, &FeatureSchema::for_library(&lib))?;
    rep.files.push(model);
    let cases = [case];
    train_traces(&mut rep, &lib, &cases, &out)?;
    let case = &cases[0];
    let b = &out.best[0];
    let wns = wns_of(&lib, case, &b.sizes, case.target_delay)?;
    rep.rows.push(row("finetune", case, "finetune", case.target_delay, b, wns, out.steps.len(), secs));
    rep.runtime_s = secs;
    finish(cfg, &lib, &cases, rep)
}

/// One clock point of the power-delay sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub clock_ps: f64,
    /// Sized for the clock with nominal-supply timing.
    pub power_no_ir: Option<f64>,
    /// Those sizings placed at their droop-aware delays, interpolated here.
    pub power_ir: Option<f64>,
    /// Optimized under droop from the no-droop sizing.
    pub power_opt: Option<f64>,
    pub savings_pct: Option<f64>,
}

/// Linear interpolation on points sorted by x; `None` outside the range.
fn interpolate(points: &[(f64, f64)], x: f64) -> Option<f64> {
    let k = points.partition_point(|p| p.0 < x);
    if k < points.len() && points[k].0 == x {
        return Some(points[k].1);
    }
    if k == 0 || k == points.len() {
        return None;
    }
    let (a, b) = (points[k - 1], points[k]);
    Some(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0))
}

pub fn pareto_sweep(cfg: &RunConfig) -> Result<(FlowReport, Vec<ParetoPoint>)> {
    let (lib, case) = load_design(cfg)?;
    let agent = match cfg.pareto.optimizer {
        Optimizer::Rl => Some(load_agent(cfg, &lib)?),
        Optimizer::Lr => None,
    };
    let mut clocks = if cfg.pareto.clocks.is_empty() {
        (0..5).map(|k| case.target_delay * (1.0 + 0.02 * k as f64)).collect()
    } else {
        cfg.pareto.clocks.clone()
    };
    clocks.sort_by(f64::total_cmp);
    let start = Instant::now();
    let nominal = Case { volts: VoltageMap::uniform(case.graph.num_instances(), lib.nominal_vdd_mv), ..case.clone() };
    let mut starts = Vec::with_capacity(clocks.len());
    let mut ir_curve = Vec::new();
    for &clock in &clocks {
        let (out, _) = run_lr(&lib, &nominal, cfg, clock)?;
        if out.feasible {
            let mut g = case.graph.clone();
            g.set_sizes(&out.sizes)?;
            let d = Design::new(&lib, g, case.volts.clone(), case.activity.clone(), clock)?;
            ir_curve.push((d.timing.critical_delay(&d.graph), d.power.total_power));
            starts.push(Some((out.sizes, d.power.total_power)));
        } else {
            starts.push(None);
        }
    }
    ir_curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points = Vec::with_capacity(clocks.len());
    let mut rep = FlowReport { flow: "pareto".into(), ..Default::default() };
    for (&clock, s) in clocks.iter().zip(&starts) {
        let mut from = case.clone();
        if let Some((sizes, _)) = s {
            from.graph.set_sizes(sizes)?;
        }
        let best = match &agent {
            None => {
                let (out, _) = run_lr(&lib, &from, cfg, clock)?;
                BestSizing { sizes: out.sizes, feasible: out.feasible, power: out.power, tns: out.tns }
            }
            Some(a) => run_infer(&lib, &from, cfg, a, clock)?.0.best,
        };
        let power_no_ir = s.as_ref().map(|s| s.1);
        let power_ir = interpolate(&ir_curve, clock);
        let power_opt = best.feasible.then_some(best.power);
        let savings_pct = match (power_ir, power_opt, power_no_ir) {
            (Some(ir), Some(opt), Some(no)) => power_overhead_savings(ir, opt, no).ok(),
            _ => None,
        };
        points.push(ParetoPoint { clock_ps: clock, power_no_ir, power_ir, power_opt, savings_pct });
        let wns = wns_of(&lib, &case, &best.sizes, clock)?;
        rep.rows.push(row("pareto", &case, cfg_optimizer(cfg), clock, &best, wns, 0, 0.0));
    }
    rep.runtime_s = start.elapsed().as_secs_f64();
    let t = rep.trace("curve", PARETO_HEADER);
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for p in &points {
        rep.traces[t].2.push(format!(
            "{},{},{},{},{}",
            p.clock_ps,
            opt(p.power_no_ir),
            opt(p.power_ir),
            opt(p.power_opt),
            opt(p.savings_pct)
        ));
    }
    let rep = finish(cfg, &lib, &[case], rep)?;
    Ok((rep, points))
}

fn cfg_optimizer(cfg: &RunConfig) -> &'static str {
    match cfg.pareto.optimizer {
        Optimizer::Lr => "lr",
        Optimizer::Rl => "rl",
    }
}

pub fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"))
}

fn clock_tag(c: f64) -> String {
    format!("{}", c).replace('.', "p")
}

/// Writes the results CSV, traces, sized netlists and the JSON summary.
fn finish(cfg: &RunConfig, lib: &CellLibrary, cases: &[Case], mut rep: FlowReport) -> Result<FlowReport> {
    let dir = out_dir(cfg);
    let header = cfg.lagrangian.header(cfg.seed);
    let flow = rep.flow.clone();
    let write = |rep: &mut FlowReport, name: String, text: String| -> Result<()> {
        let p = dir.join(name);
        write_text(&p, &text)?;
        rep.files.push(p);
        Ok(())
    };
    let mut csv = format!("{header}\n{RESULTS_HEADER}\n");
    for r in &rep.rows {
        writeln!(csv, "{}", r.csv()).unwrap();
    }
    write(&mut rep, format!("{flow}_results.csv"), csv)?;
    for (suffix, head, lines) in rep.traces.clone() {
        let mut s = format!("{header}\n{head}\n");
        for l in lines {
            writeln!(s, "{l}").unwrap();
        }
        write(&mut rep, format!("{flow}_{suffix}.csv"), s)?;
    }
    for r in rep.rows.clone() {
        if let Some(c) = cases.iter().find(|c| c.name == r.design) {
            let mut g = c.graph.clone();
            g.set_sizes(&r.sizes)?;
            write(&mut rep, format!("{}_{}_{}_{}.net", r.flow, r.design, r.mode, clock_tag(r.clock_ps)), write_netlist(&g, lib))?;
        }
    }
    let mut summary = serde_json::Map::new();
    summary.insert("flow".into(), rep.flow.clone().into());
    summary.insert("seed".into(), cfg.seed.into());
    summary.insert("runtime_s".into(), rep.runtime_s.into());
    summary.insert("constants".into(), serde_json::to_value(&cfg.lagrangian).unwrap_or_default());
    summary.insert("rows".into(), serde_json::to_value(&rep.rows).unwrap_or_default());
    if let Some(r) = &cfg.reference {
        let last = rep.rows.iter().rev().find(|x| x.feasible);
        if let Some(x) = last {
            let v = power_overhead_savings(r.power_ir, x.power_uw, r.power_no_ir)?;
            summary.insert("power_overhead_savings_pct".into(), v.into());
        }
    }
    for (k, v) in rep.extra.clone() {
        summary.insert(k, v);
    }
    let json = serde_json::to_string_pretty(&serde_json::Value::Object(summary)).unwrap_or_default();
    write(&mut rep, format!("{flow}_summary.json"), json + "\n")?;
    Ok(rep)
}

pub fn run_flow(name: &str, cfg: &RunConfig) -> Result<FlowReport> {
    match name {
        "lr" => flow_lr(cfg),
        "train" => flow_train(cfg),
        "infer-tc" => flow_infer_tc(cfg),
        "infer-d" => flow_infer_d(cfg),
        "finetune" => flow_finetune(cfg),
        "pareto" => pareto_sweep(cfg).map(|r| r.0),
        other => Err(EcoError::Config(format!("unknown flow {other}"))),
    }
}
