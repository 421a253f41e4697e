// SPDX-License-Identifier: Apache-2.0

//! IR-drop-aware ECO gate sizing.
//!
//! This crate is `no_std` (with `alloc`) and holds the algorithmic core:
//! the cell library model and table interpolation, the relational netlist
//! graph, full and incremental static timing analysis with rail-voltage
//! delay scaling, vectorless power, a static IR-drop solver for a resistive
//! mesh, the Lagrangian objective and multiplier updates, the classical
//! Lagrangian-relaxation sizer, and the R-GCN deep Q-learning sizer.
//!
//! File formats, configuration, the benchmark suite and the command line
//! live in the companion `eco` crate.

#![no_std]

extern crate alloc;

pub mod design;
pub mod features;
pub mod irgrid;
pub mod lagrangian;
pub mod library;
pub mod lr;
pub mod netgen;
pub mod netlist;
pub mod power;
pub mod rl;
pub mod synth;
pub mod timing;

mod math;

pub use design::Design;
pub use features::{annotate_features, FeatureSchema, FeatureVector};
pub use irgrid::{build_mesh, scale_mesh_to_target, solve_ir, MeshConfig, PdnMesh, VoltageMap};
pub use lagrangian::{
    lagrangian_objective,
    clock_schedule, lm_update, power_overhead_savings, BranchRule, ClockSchedule,
    LagrangianContext, LagrangianParams, Objective,
};
pub use library::{CellLibrary, CellVariant, ClassId, Table2d, TimingArc};
pub use lr::{lr_size, LrConfig, LrOutcome};
pub use netgen::gen_synthetic_netlist;
pub use netlist::{ChangeRecord, InstId, NetId, NetlistBuilder, NetlistGraph};
pub use power::{compute_power, Activity, PowerReport};
pub use synth::gen_synthetic_library;
pub use timing::{sta_full, sta_incremental, TimingAnnotation};
