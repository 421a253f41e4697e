// SPDX-License-Identifier: Apache-2.0

//! Run configuration (TOML).
//!
//! Every section is optional; omitted keys take the defaults below.
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eco_core::irgrid::Pads;
use eco_core::lagrangian::{BranchRule, ClockSchedule, LagrangianParams};
use eco_core::rl::{InferConfig, TrainConfig};
use eco_core::LrConfig;

use crate::error::{EcoError, Result};
use crate::suite::{VoltSource, DEFAULT_MESH_PITCH, DEFAULT_SHEET_RESISTANCE};

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub design: DesignSection,
    pub mesh: MeshSection,
    pub lagrangian: LagrangianSection,
    pub lr: LrSection,
    pub train: TrainSection,
    pub finetune: FinetuneSection,
    pub infer: InferSection,
    pub model: ModelSection,
    pub infer_tc: InferTcSection,
    pub infer_d: InferDSection,
    pub pareto: ParetoSection,
    pub reference: Option<ReferenceSection>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    /// Bundled design name; excludes `netlist` and `library`.
    pub suite: Option<String>,
    pub netlist: Option<PathBuf>,
    pub library: Option<PathBuf>,
    pub volts: Option<PathBuf>,
    pub mesh_target_mv: Option<f64>,
    pub target_delay: Option<f64>,
    pub initial_delay: Option<f64>,
    /// Output toggles per ns.
    pub activity: f64,
}

impl Default for DesignSection {
    fn default() -> Self {
        Self {
            suite: None,
            netlist: None,
            library: None,
            volts: None,
            mesh_target_mv: None,
            target_delay: None,
            initial_delay: None,
            activity: eco_core::power::Activity::DEFAULT_RATE,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub sheet_resistance: f64,
    pub pitch: f64,
    /// `[[row, col], ...]`; corners when empty.
    pub pads: Vec<[usize; 2]>,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { rows: None, cols: None, sheet_resistance: DEFAULT_SHEET_RESISTANCE, pitch: DEFAULT_MESH_PITCH, pads: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    Literal,
    NearZero,
    Plain,
}

impl BranchChoice {
    pub fn name(self) -> &'static str {
        match self {
            BranchChoice::Literal => "literal",
            BranchChoice::NearZero => "near_zero",
            BranchChoice::Plain => "plain",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LagrangianSection {
    pub alpha: f64,
    pub beta: f64,
    pub eps0: f64,
    pub lambda_init: f64,
    pub m_decay: usize,
    pub strict_branch: BranchChoice,
    /// Threshold of the `near_zero` branch, in clock periods.
    pub alpha_prime: f64,
}

impl Default for LagrangianSection {
    fn default() -> Self {
        let p = LagrangianParams::default();
        Self {
            alpha: p.alpha,
            beta: p.beta,
            eps0: p.eps0,
            lambda_init: p.lambda_init,
            m_decay: ClockSchedule::DEFAULT_DECAY,
            strict_branch: BranchChoice::Plain,
            alpha_prime: 0.05,
        }
    }
}

impl LagrangianSection {
    pub fn params(&self) -> Result<LagrangianParams> {
        if !(self.beta < 0.0) {
            return Err(EcoError::Config(format!("lagrangian.beta must be negative, got {}", self.beta)));
        }
        if !(self.eps0 > 0.0) || !(self.lambda_init > 0.0) {
            return Err(EcoError::Config("lagrangian.eps0 and lambda_init must be positive".into()));
        }
        let branch = match self.strict_branch {
            BranchChoice::Literal => BranchRule::Literal,
            BranchChoice::NearZero => BranchRule::NearZero { alpha_prime: self.alpha_prime },
            BranchChoice::Plain => BranchRule::Plain,
        };
        Ok(LagrangianParams { alpha: self.alpha, beta: self.beta, eps0: self.eps0, lambda_init: self.lambda_init, branch })
    }

    /// `# key=value ...` line echoed at the top of every results CSV.
    pub fn header(&self, seed: u64) -> String {
        format!(
            "# alpha={} beta={} eps0={} lambda_init={} m_decay={} strict_branch={} alpha_prime={} seed={}",
            self.alpha,
            self.beta,
            self.eps0,
            self.lambda_init,
            self.m_decay,
            self.strict_branch.name(),
            self.alpha_prime,
            seed
        )
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LrSection {
    pub max_passes: usize,
    pub convergence_tol: f64,
}

impl Default for LrSection {
    fn default() -> Self {
        let c = LrConfig::default();
        Self { max_passes: c.max_passes, convergence_tol: c.convergence_tol }
    }
}

impl LrSection {
    pub fn config(&self) -> LrConfig {
        LrConfig { max_passes: self.max_passes, convergence_tol: self.convergence_tol, ..LrConfig::default() }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub episodes: usize,
    pub steps: usize,
    pub buffer: usize,
    pub gamma: f64,
    pub target_sync: usize,
    pub lm_every: usize,
    pub eps_start: f64,
    pub eps_decay: f64,
    pub eps_min: f64,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub hidden: Vec<usize>,
    /// Gradient norm cap; 0 disables clipping.
    pub grad_clip: f64,
    /// Disable multiplier updates (fixed-λ ablation).
    pub fixed_lambda: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            episodes: c.episodes,
            steps: c.steps,
            buffer: c.buffer,
            gamma: c.gamma,
            target_sync: c.target_sync,
            lm_every: c.lm_every,
            eps_start: c.eps_start,
            eps_decay: c.eps_decay,
            eps_min: c.eps_min,
            batch: c.batch,
            lr: c.lr,
            momentum: c.momentum,
            hidden: c.hidden,
            grad_clip: c.grad_clip.unwrap_or(0.0),
            fixed_lambda: false,
        }
    }
}

impl TrainSection {
    pub fn config(&self, seed: u64, clock_decay: usize) -> Result<TrainConfig> {
        if self.steps == 0 {
            return Err(EcoError::Config("train.steps must be positive".into()));
        }
        if self.buffer == 0 || self.batch == 0 || self.target_sync == 0 || self.lm_every == 0 {
            return Err(EcoError::Config("train.buffer, batch, target_sync and lm_every must be positive".into()));
        }
        if self.hidden.is_empty() {
            return Err(EcoError::Config("train.hidden needs at least one layer".into()));
        }
        Ok(TrainConfig {
            episodes: self.episodes,
            steps: self.steps,
            buffer: self.buffer,
            gamma: self.gamma,
            target_sync: self.target_sync,
            lm_every: self.lm_every,
            eps_start: self.eps_start,
            eps_decay: self.eps_decay,
            eps_min: self.eps_min,
            batch: self.batch,
            lr: self.lr,
            momentum: self.momentum,
            hidden: self.hidden.clone(),
            grad_clip: (self.grad_clip > 0.0).then_some(self.grad_clip),
            clock_decay,
            seed,
        })
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneSection {
    pub episodes: usize,
    pub eps_start: f64,
    pub m_decay: usize,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        let c = TrainConfig::fine_tune(0);
        Self { episodes: c.episodes, eps_start: c.eps_start, m_decay: c.clock_decay }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InferSection {
    pub step_cap: usize,
    pub lm_every: usize,
    pub patience: usize,
}

impl Default for InferSection {
    fn default() -> Self {
        let c = InferConfig::default();
        Self { step_cap: c.step_cap, lm_every: c.lm_every, patience: c.patience }
    }
}

impl InferSection {
    pub fn config(&self) -> Result<InferConfig> {
        if self.lm_every == 0 || self.patience == 0 {
            return Err(EcoError::Config("infer.lm_every and infer.patience must be positive".into()));
        }
        Ok(InferConfig { step_cap: self.step_cap, lm_every: self.lm_every, patience: self.patience })
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InferTcSection {
    /// Clock periods, ps; the design target when empty.
    pub clocks: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InferDSection {
    /// Bundled designs trained round-robin.
    pub train: Vec<String>,
    /// Held-out bundled designs.
    pub test: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Lr,
    Rl,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoSection {
    pub clocks: Vec<f64>,
    pub optimizer: Optimizer,
}

/// Curve powers at a common delay for the savings metric.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub power_ir: f64,
    pub power_no_ir: f64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| EcoError::Config(e.to_string()))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| EcoError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.design.netlist);
        fix(&mut self.design.library);
        fix(&mut self.design.volts);
        fix(&mut self.model.input);
        fix(&mut self.model.output);
        fix(&mut self.out);
    }

    /// Checks the design section: one design source and exactly one of
    /// a voltage file and a mesh target.
    pub fn validate(&self) -> Result<()> {
        let d = &self.design;
        match (&d.suite, &d.netlist, &d.library) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (None, None, None) => return Err(EcoError::Config("design needs `suite` or `netlist` and `library`".into())),
            _ => return Err(EcoError::Config("design takes either `suite` or both `netlist` and `library`".into())),
        }
        match (&d.volts, d.mesh_target_mv) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(EcoError::Config("design needs exactly one of `volts` and `mesh_target_mv`".into())),
        }
        for p in [&d.netlist, &d.library, &d.volts].into_iter().flatten() {
            if !p.exists() {
                return Err(EcoError::Config(format!("file not found: {}", p.display())));
            }
        }
        if let Some(p) = &self.model.input {
            if !p.exists() {
                return Err(EcoError::Config(format!("file not found: {}", p.display())));
            }
        }
        self.lagrangian.params()?;
        Ok(())
    }

    /// The voltage source for a mesh target `mv`, using this config's
    /// mesh section.
    pub fn mesh_source(&self, mv: f64) -> VoltSource {
        let m = &self.mesh;
        let pads = if m.pads.is_empty() { Pads::Corners } else { Pads::Nodes(m.pads.iter().map(|p| (p[0], p[1])).collect()) };
        let dims = match (m.rows, m.cols) {
            (Some(r), Some(c)) => Some((r, c)),
            _ => None,
        };
        VoltSource::Mesh { target_mv: mv, pitch: m.pitch, sheet_resistance: m.sheet_resistance, pads, dims }
    }
}
