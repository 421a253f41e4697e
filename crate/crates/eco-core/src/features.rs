// SPDX-License-Identifier: Apache-2.0

//! Per-node feature annotation.

use alloc::format;
use alloc::vec::Vec;

use crate::irgrid::VoltageMap;
use crate::library::{CellLibrary, ClassId};
use crate::math::fnv1a;
use crate::netlist::NetlistGraph;
use crate::timing::TimingAnnotation;

/// Raw annotated features of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub slack: f64,
    pub in_slew: f64,
    pub out_slew: f64,
    pub load: f64,
    pub ir_voltage: f64,
    pub class: ClassId,
    pub size: usize,
    pub num_sizes: usize,
}

/// Layout of the normalized feature rows fed to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSchema {
    pub num_classes: usize,
}

impl FeatureSchema {
    pub const SLACK: usize = 0;
    pub const IN_SLEW: usize = 1;
    pub const OUT_SLEW: usize = 2;
    pub const LOAD: usize = 3;
    pub const DROOP: usize = 4;
    const SCALARS: usize = 5;

    pub fn for_library(lib: &CellLibrary) -> Self {
        Self { num_classes: lib.num_classes() }
    }

    pub fn dim(&self) -> usize {
        Self::SCALARS + self.num_classes + 1
    }

    pub fn class_offset(&self) -> usize {
        Self::SCALARS
    }

    pub fn size_offset(&self) -> usize {
        Self::SCALARS + self.num_classes
    }

    /// Identifies the layout in saved models.
    pub fn hash(&self) -> u64 {
        let desc = format!("slack,in_slew,out_slew,load,droop;class_onehot:{};size_scalar", self.num_classes);
        fnv1a(desc.as_bytes())
    }
}

/// Scales applied during normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub clock: f64,
    pub max_load: f64,
    pub nominal_vdd: f64,
}

impl FeatureVector {
    /// Slack and slews over the clock, load over the largest table load,
    /// rail voltage as fractional droop.
    pub fn write_normalized(&self, schema: &FeatureSchema, norm: &Normalizer, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        out[FeatureSchema::SLACK] = self.slack / norm.clock;
        out[FeatureSchema::IN_SLEW] = self.in_slew / norm.clock;
        out[FeatureSchema::OUT_SLEW] = self.out_slew / norm.clock;
        out[FeatureSchema::LOAD] = self.load / norm.max_load;
        out[FeatureSchema::DROOP] = (norm.nominal_vdd - self.ir_voltage) / norm.nominal_vdd;
        out[schema.class_offset() + self.class.index()] = 1.0;
        out[schema.size_offset()] = self.size as f64 / (self.num_sizes - 1) as f64;
    }

    pub fn normalized(&self, schema: &FeatureSchema, norm: &Normalizer) -> Vec<f64> {
        let mut v = alloc::vec![0.0; schema.dim()];
        self.write_normalized(schema, norm, &mut v);
        v
    }
}

pub fn annotate_features(
    g: &NetlistGraph,
    timing: &TimingAnnotation,
    volts: &VoltageMap,
) -> Vec<FeatureVector> {
    g.ids()
        .map(|id| {
            let k = id.index();
            let inst = g.instance(id);
            FeatureVector {
                slack: timing.slack[k],
                in_slew: timing.in_slew[k],
                out_slew: timing.out_slew[k],
                load: timing.load[k],
                ir_voltage: volts.get(id),
                class: inst.class,
                size: inst.size,
                num_sizes: g.num_sizes_of(id),
            }
        })
        .collect()
}
