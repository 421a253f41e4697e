// SPDX-License-Identifier: Apache-2.0

//! Lagrangian objective, multiplier update, clock decay and the
//! power-overhead-savings metric.
//!
//! Slacks enter the objective normalized by the clock period:
//! `n_i = max(-slack_i / clk, 0)` and `tns = TNS / clk`. The slack term of
//! instance `i` is `λ_i n_i / (β tns + ε₀)` when the boost branch is active
//! and `λ_i n_i` otherwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::power::PowerReport;
use crate::timing::TimingAnnotation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LagrangianError {
    #[error("target delay {target} exceeds initial delay {initial}")]
    TargetAboveInitial { initial: f64, target: f64 },
    #[error("no IR-induced overhead: power_ir {power_ir} <= power_no_ir {power_no_ir}")]
    DegenerateDenominator { power_ir: f64, power_no_ir: f64 },
}

/// When the boosted slack term applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchRule {
    /// Boost while `tns <= α`. Since `tns <= 0` this boosts whenever any
    /// instance violates, and the slack term becomes a λ-weighted mean of
    /// the violations that no longer grows with their size.
    Literal,
    /// Never boost.
    Plain,
    /// Boost while `tns >= -α'`.
    NearZero { alpha_prime: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianParams {
    pub alpha: f64,
    pub beta: f64,
    pub eps0: f64,
    pub lambda_init: f64,
    pub branch: BranchRule,
}

impl Default for LagrangianParams {
    fn default() -> Self {
        Self { alpha: 10.0, beta: -0.1, eps0: 1e-6, lambda_init: 1.0, branch: BranchRule::Literal }
    }
}

impl LagrangianParams {
    pub fn boost_active(&self, tns_norm: f64) -> bool {
        match self.branch {
            BranchRule::Literal => tns_norm <= self.alpha,
            BranchRule::Plain => false,
            BranchRule::NearZero { alpha_prime } => tns_norm >= -alpha_prime,
        }
    }

    /// Slack part of the objective for normalized violations `n` and
    /// normalized TNS.
    pub fn slack_penalty(
        &self,
        lambdas: impl IntoIterator<Item = f64>,
        n: impl IntoIterator<Item = f64>,
        tns_norm: f64,
    ) -> f64 {
        let plain: f64 = lambdas.into_iter().zip(n).map(|(l, n)| l * n).sum();
        if self.boost_active(tns_norm) {
            plain / (self.beta * tns_norm + self.eps0)
        } else {
            plain
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub power_term: f64,
    pub slack_term: f64,
}

impl Objective {
    pub fn total(&self) -> f64 {
        self.power_term + self.slack_term
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianContext {
    pub lambdas: Vec<f64>,
    pub params: LagrangianParams,
    pub clock_period: f64,
    pub power_scale: f64,
    /// Multipliers stay fixed when false.
    pub update_enabled: bool,
    /// Last multiplier of each instance that has since met timing. A
    /// violation that returns resumes from it instead of `λ_init`.
    pub dormant: Vec<f64>,
}

impl LagrangianContext {
    /// `λ_init` on instances violating in `timing`, 0 elsewhere.
    pub fn new(params: LagrangianParams, timing: &TimingAnnotation, power_scale: f64) -> Self {
        let lambdas: Vec<f64> = timing.slack.iter().map(|&s| if s < 0.0 { params.lambda_init } else { 0.0 }).collect();
        let dormant = vec![0.0; lambdas.len()];
        Self { lambdas, params, clock_period: timing.clock_period, power_scale, update_enabled: true, dormant }
    }

    /// Every multiplier pinned at `λ_init`, updates disabled.
    pub fn fixed(params: LagrangianParams, n: usize, clock: f64, power_scale: f64) -> Self {
        Self {
            lambdas: vec![params.lambda_init; n],
            params,
            clock_period: clock,
            power_scale,
            update_enabled: false,
            dormant: vec![0.0; n],
        }
    }

    /// Multiplier charged to instance `i` at slack `s`. A violation that
    /// appeared since the last update is charged its restart multiplier
    /// until the next update gives it one of its own.
    pub fn effective_lambda(&self, i: usize, s: f64) -> f64 {
        let l = self.lambdas[i];
        if s < 0.0 && l == 0.0 {
            self.restart(i)
        } else {
            l
        }
    }

    fn restart(&self, i: usize) -> f64 {
        self.dormant[i].max(self.params.lambda_init)
    }

    pub fn objective(&self, power: &PowerReport, timing: &TimingAnnotation) -> Objective {
        let clk = timing.clock_period;
        let lambdas = timing.slack.iter().enumerate().map(|(i, &s)| self.effective_lambda(i, s));
        let n = timing.slack.iter().map(|&s| if s < 0.0 { -s / clk } else { 0.0 });
        Objective {
            power_term: power.total_power / self.power_scale,
            slack_term: self.params.slack_penalty(lambdas, n, timing.tns / clk),
        }
    }

    pub fn value(&self, power: &PowerReport, timing: &TimingAnnotation) -> f64 {
        self.objective(power, timing).total()
    }

    /// In-place [`lm_update`].
    pub fn update(&mut self, timing: &TimingAnnotation) {
        self.clock_period = timing.clock_period;
        if !self.update_enabled {
            return;
        }
        let clk = timing.clock_period;
        for (i, &s) in timing.slack.iter().enumerate() {
            let l = self.lambdas[i];
            self.lambdas[i] = if s < 0.0 {
                let base = if l > 0.0 { l } else { self.restart(i) };
                base * (1.0 - s / clk)
            } else {
                if l > 0.0 {
                    self.dormant[i] = l;
                }
                0.0
            };
        }
    }

    /// Seeds violators that carry no multiplier with their restart value
    /// and clears the rest, keeping existing multipliers of violators.
    pub fn reseed(&mut self, timing: &TimingAnnotation) {
        self.clock_period = timing.clock_period;
        if !self.update_enabled {
            return;
        }
        for (i, &s) in timing.slack.iter().enumerate() {
            let l = self.lambdas[i];
            if s >= 0.0 {
                if l > 0.0 {
                    self.dormant[i] = l;
                }
                self.lambdas[i] = 0.0;
            } else if l == 0.0 {
                self.lambdas[i] = self.restart(i);
            }
        }
    }
}

pub fn lagrangian_objective(power: &PowerReport, timing: &TimingAnnotation, ctx: &LagrangianContext) -> f64 {
    ctx.value(power, timing)
}

/// Multiplies the multiplier of each violator by `1 - slack / clk` and
/// zeroes the rest. A violator whose multiplier is zero restarts from
/// `λ_init`.
pub fn lm_update(ctx: &LagrangianContext, timing: &TimingAnnotation) -> LagrangianContext {
    let mut next = ctx.clone();
    next.update(timing);
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockSchedule {
    pub initial_delay: f64,
    pub target_delay: f64,
    pub decay_episodes: usize,
}

impl ClockSchedule {
    pub const DEFAULT_DECAY: usize = 30;

    pub fn new(initial_delay: f64, target_delay: f64) -> Result<Self, LagrangianError> {
        if target_delay > initial_delay {
            return Err(LagrangianError::TargetAboveInitial { initial: initial_delay, target: target_delay });
        }
        Ok(Self { initial_delay, target_delay, decay_episodes: Self::DEFAULT_DECAY })
    }

    pub fn at(&self, episode: usize) -> f64 {
        if episode >= self.decay_episodes {
            self.target_delay
        } else {
            self.initial_delay
                - episode as f64 * (self.initial_delay - self.target_delay) / self.decay_episodes as f64
        }
    }
}

pub fn clock_schedule(episode: usize, sched: &ClockSchedule) -> Result<f64, LagrangianError> {
    if sched.target_delay > sched.initial_delay {
        return Err(LagrangianError::TargetAboveInitial {
            initial: sched.initial_delay,
            target: sched.target_delay,
        });
    }
    Ok(sched.at(episode))
}

/// Share of the IR-induced power overhead recovered, in percent.
pub fn power_overhead_savings(power_ir: f64, power_opt: f64, power_no_ir: f64) -> Result<f64, LagrangianError> {
    let denom = power_ir - power_no_ir;
    if !(denom > 0.0) {
        return Err(LagrangianError::DegenerateDenominator { power_ir, power_no_ir });
    }
    Ok((power_ir - power_opt) / denom * 100.0)
}
