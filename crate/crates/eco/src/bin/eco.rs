// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eco::formats::{write_library, write_netlist, write_text, write_volts};
use eco::suite::{library_for, suite_case, ORACLE_CASES, SUITE};
use eco::{brute_force_oracle, run_flow, EcoError, RunConfig, EXIT_INFEASIBLE, EXIT_OK};

#[derive(Parser)]
#[command(name = "eco", version, about = "IR-drop-aware ECO gate sizing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lagrangian-relaxation baseline.
    Lr(FlowArgs),
    /// Train a Q-network on one design.
    Train(FlowArgs),
    /// Infer with a trained model at one or more clocks.
    InferTc(FlowArgs),
    /// Train on some designs, infer on others, fine-tune misses.
    InferD(FlowArgs),
    /// Fine-tune a trained model on one design.
    Finetune(FlowArgs),
    /// Power versus clock sweep with and without droop awareness.
    Pareto(FlowArgs),
    /// Write the bundled designs as library, netlist and voltage files.
    Suite {
        #[arg(long)]
        out: PathBuf,
        /// Worst droop of the written voltage maps, mV.
        #[arg(long, default_value_t = 10.0)]
        droop: f64,
    },
    /// Exhaustive minimum-power sizing of a small bundled design.
    Oracle {
        #[arg(long)]
        design: String,
        #[arg(long, default_value_t = 10.0)]
        droop: f64,
        /// Clock period, ps; defaults to the design's target.
        #[arg(long)]
        clock: Option<f64>,
    },
}

#[derive(Args)]
struct FlowArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bundled design name.
    #[arg(long, conflicts_with_all = ["netlist", "lib"])]
    suite: Option<String>,
    #[arg(long, requires = "lib")]
    netlist: Option<PathBuf>,
    #[arg(long, requires = "netlist")]
    lib: Option<PathBuf>,
    /// Target clock period, ps.
    #[arg(long)]
    clock: Option<f64>,
    #[arg(long, conflicts_with = "mesh_target")]
    volts: Option<PathBuf>,
    /// Solve the supply mesh and scale it to this worst droop, mV.
    #[arg(long)]
    mesh_target: Option<f64>,
    /// Model to load.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl FlowArgs {
    fn config(self) -> eco::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let d = &mut cfg.design;
        if self.suite.is_some() {
            d.suite = self.suite;
            d.netlist = None;
            d.library = None;
        }
        if self.netlist.is_some() {
            d.suite = None;
            d.netlist = self.netlist;
            d.library = self.lib;
        }
        if self.volts.is_some() {
            d.volts = self.volts;
            d.mesh_target_mv = None;
        }
        if self.mesh_target.is_some() {
            d.mesh_target_mv = self.mesh_target;
            d.volts = None;
        }
        if self.clock.is_some() {
            d.target_delay = self.clock;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.model.is_some() {
            cfg.model.input = self.model;
        }
        Ok(cfg)
    }
}

fn flow(name: &str, args: FlowArgs) -> eco::Result<u8> {
    let cfg = args.config()?;
    let rep = run_flow(name, &cfg)?;
    for r in &rep.rows {
        println!(
            "{} {} {} clock={} feasible={} power={} wns={} tns={}",
            r.flow, r.design, r.mode, r.clock_ps, r.feasible, r.power_uw, r.wns_ps, r.tns_ps
        );
    }
    println!("runtime {:.3} s", rep.runtime_s);
    for f in &rep.files {
        println!("wrote {}", f.display());
    }
    Ok(if rep.all_feasible() { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn suite(out: PathBuf, droop: f64) -> eco::Result<u8> {
    let names = SUITE.iter().map(|s| s.0).chain(ORACLE_CASES);
    for name in names {
        let lib = library_for(name)?;
        let case = suite_case(name, &lib, droop)?;
        let libname = if eco::suite::is_oracle_case(name) { "oracle.lib" } else { "suite.lib" };
        write_text(&out.join(libname), &write_library(&lib))?;
        write_text(&out.join(format!("{name}.net")), &write_netlist(&case.graph, &lib))?;
        write_text(&out.join(format!("{name}.volts")), &write_volts(&case.graph, &case.volts))?;
        println!("{name} target={} initial={}", case.target_delay, case.initial_delay);
    }
    Ok(EXIT_OK)
}

fn oracle(design: &str, droop: f64, clock: Option<f64>) -> eco::Result<u8> {
    let lib = library_for(design)?;
    let case = suite_case(design, &lib, droop)?;
    let clock = clock.unwrap_or(case.target_delay);
    match brute_force_oracle(&case.graph, &lib, &case.volts, &case.activity, clock)? {
        Some(r) => {
            let sizes: Vec<String> = r.sizes.iter().map(|s| s.to_string()).collect();
            println!("{design} clock={clock} power={} sizes={}", r.power, sizes.join(","));
            Ok(EXIT_OK)
        }
        None => Err(EcoError::Infeasible(format!("no sizing of {design} meets {clock} ps"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Lr(a) => flow("lr", a),
        Cmd::Train(a) => flow("train", a),
        Cmd::InferTc(a) => flow("infer-tc", a),
        Cmd::InferD(a) => flow("infer-d", a),
        Cmd::Finetune(a) => flow("finetune", a),
        Cmd::Pareto(a) => flow("pareto", a),
        Cmd::Suite { out, droop } => suite(out, droop),
        Cmd::Oracle { design, droop, clock } => oracle(&design, droop, clock),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
