// SPDX-License-Identifier: Apache-2.0

//! Exhaustive sizing search for tiny circuits.

use eco_core::netlist::{InstId, NetlistGraph};
use eco_core::{Activity, CellLibrary, Design, VoltageMap};

use crate::error::{EcoError, Result};

/// Largest search space accepted.
pub const MAX_ASSIGNMENTS: u64 = 531_441; // 3^12

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub power: f64,
    pub sizes: Vec<usize>,
}

/// Minimum total power over every timing-clean size assignment, or `None`
/// when no assignment meets `clock`. Assignments are enumerated as an
/// odometer over instance ids, first instance fastest, and the first
/// minimum found is kept.
pub fn brute_force_oracle(
    g: &NetlistGraph,
    lib: &CellLibrary,
    volts: &VoltageMap,
    activity: &Activity,
    clock: f64,
) -> Result<Option<OracleResult>> {
    let radix: Vec<usize> = g.ids().map(|id| g.num_sizes_of(id)).collect();
    let total = radix.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r as u64).filter(|&t| t <= MAX_ASSIGNMENTS));
    if total.is_none() {
        return Err(EcoError::Config(format!("oracle search space exceeds {MAX_ASSIGNMENTS} assignments")));
    }
    let mut graph = g.clone();
    let zeros = vec![0; radix.len()];
    graph.set_sizes(&zeros)?;
    let mut d = Design::new(lib, graph, volts.clone(), activity.clone(), clock)?;
    let mut digits = zeros;
    let mut best: Option<OracleResult> = None;
    loop {
        if d.timing.tns == 0.0 && best.as_ref().is_none_or(|b| d.power.total_power < b.power) {
            best = Some(OracleResult { power: d.power.total_power, sizes: digits.clone() });
        }
        let mut k = 0;
        loop {
            if k == digits.len() {
                return Ok(best);
            }
            digits[k] += 1;
            if digits[k] < radix[k] {
                d.resize(InstId(k as u32), digits[k])?;
                break;
            }
            digits[k] = 0;
            d.resize(InstId(k as u32), 0)?;
            k += 1;
        }
    }
}
