// SPDX-License-Identifier: Apache-2.0

//! Deep Q-learning over the sizing environment.

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lagrangian::ClockSchedule;
use crate::math::powi;
use crate::netlist::InstId;
use crate::power::PowerReport;
use crate::timing::TimingAnnotation;

use super::env::Env;
use super::mask::UP;
use super::replay::{ReplayBuffer, Transition};
use super::rgcn::{QNetwork, Sgd};
use super::state::StateSubgraph;
use super::RlError;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps: usize,
    pub buffer: usize,
    pub gamma: f64,
    /// Target sync period, in episodes.
    pub target_sync: usize,
    /// Multiplier update period, in steps.
    pub lm_every: usize,
    pub eps_start: f64,
    pub eps_decay: f64,
    pub eps_min: f64,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub hidden: Vec<usize>,
    /// Gradient norm cap; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub clock_decay: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 50,
            steps: 75,
            buffer: 4000,
            gamma: 0.99,
            target_sync: 25,
            lm_every: 30,
            eps_start: 0.9,
            eps_decay: 0.9,
            eps_min: 0.05,
            batch: 32,
            lr: 1e-3,
            momentum: 0.9,
            hidden: vec![64, 64],
            grad_clip: Some(10.0),
            clock_decay: ClockSchedule::DEFAULT_DECAY,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Short run from pretrained weights with a low exploration ceiling.
    pub fn fine_tune(seed: u64) -> Self {
        Self { episodes: 10, eps_start: 0.3, clock_decay: 5, seed, ..Self::default() }
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        (self.eps_start * powi(self.eps_decay, episode as i32)).max(self.eps_min).min(1.0)
    }
}

/// Policy and target networks plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub policy: QNetwork,
    pub target: QNetwork,
    pub opt: Sgd,
    target_gen: u64,
}

impl Agent {
    pub fn new(input: usize, cfg: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_a6e7);
        Self::from_policy(QNetwork::new(input, &cfg.hidden, &mut rng), cfg)
    }

    pub fn from_policy(policy: QNetwork, cfg: &TrainConfig) -> Self {
        let opt = Sgd::new(&policy, cfg.lr, cfg.momentum);
        Self { target: policy.clone(), policy, opt, target_gen: 0 }
    }

    pub fn sync_target(&mut self) {
        self.target = self.policy.clone();
        self.target_gen += 1;
    }

    fn target_max(&self, t: &Transition) -> Result<f64, RlError> {
        if let Some((gen, v)) = t.target_cache.get() {
            if gen == self.target_gen {
                return Ok(v);
            }
        }
        let v = if t.next.mask.any() { masked_argmax(&self.target.q_values(&t.next)?, &t.next).1 } else { 0.0 };
        t.target_cache.set(Some((self.target_gen, v)));
        Ok(v)
    }

    /// Mean squared Bellman error over `batch` and one momentum step.
    /// Returns the loss.
    pub fn train_batch(&mut self, buf: &ReplayBuffer, batch: &[usize], gamma: f64, clip: Option<f64>) -> Result<f64, RlError> {
        let mut grads = self.policy.zeros_like();
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for &k in batch {
            let t = buf.get(k);
            let y = if t.terminal { t.reward } else { t.reward + gamma * self.target_max(t)? };
            let (local, node) = receptive_field(&t.state, t.action.0, self.policy.layers.len());
            let cache = self.policy.forward(&local)?;
            let q = cache.q[node][t.action.1];
            let err = q - y;
            loss += scale * err * err;
            let mut dq = vec![[0.0; 2]; local.len()];
            dq[node][t.action.1] = 2.0 * scale * err;
            self.policy.backward(&local, &cache, &dq, &mut grads);
        }
        if let Some(c) = clip {
            let n = grads.norm();
            if n > c {
                let k = c / n;
                grads.params_mut().for_each(|g| *g *= k);
            }
        }
        self.opt.step(&mut self.policy, &grads);
        Ok(loss)
    }
}

/// The part of `state` that `node`'s output depends on through `layers`
/// rounds of message passing, and `node`'s index in it.
pub fn receptive_field(state: &StateSubgraph, node: usize, layers: usize) -> (StateSubgraph, usize) {
    let keep = state.ball(node, layers);
    let pos = keep.binary_search(&node).expect("center is in its ball");
    (state.induced(&keep), pos)
}

/// Best valid `(action, q)`; lowest index wins ties.
pub fn masked_argmax(q: &[[f64; 2]], state: &StateSubgraph) -> ((usize, usize), f64) {
    let mut best = ((usize::MAX, 0), f64::NEG_INFINITY);
    for (k, d) in state.mask.actions() {
        if best.0 .0 == usize::MAX || q[k][d] > best.1 {
            best = ((k, d), q[k][d]);
        }
    }
    best
}

/// One environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub design: usize,
    pub episode: usize,
    pub step: usize,
    pub clock: f64,
    pub epsilon: f64,
    pub action: (InstId, bool),
    pub reward: f64,
    pub tns: f64,
    pub wns: f64,
    pub power: f64,
    pub objective: f64,
}

/// Summary at the end of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub design: usize,
    pub episode: usize,
    pub clock: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub start_objective: f64,
    pub best_objective: f64,
    pub tns: f64,
    pub wns: f64,
    pub power: f64,
}

/// Best sizing at the target clock.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSizing {
    pub sizes: Vec<usize>,
    pub feasible: bool,
    pub power: f64,
    pub tns: f64,
}

impl BestSizing {
    pub fn of(env: &Env<'_>) -> Self {
        let d = &env.design;
        Self { sizes: d.sizes(), feasible: d.timing.tns == 0.0, power: d.power.total_power, tns: d.timing.tns }
    }

    pub fn improves_on(&self, other: &BestSizing) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (true, true) => self.power < other.power,
            (false, false) => self.tns > other.tns,
            (false, true) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: Vec<BestSizing>,
    pub episodes: Vec<EpisodeRecord>,
    pub steps: Vec<StepRecord>,
    pub losses: Vec<f64>,
    pub mask_checks: u64,
}

/// Lowest-objective sizing of the running episode with the timing and
/// power needed to re-score it after a multiplier update.
struct EpisodeBest {
    sizes: Vec<usize>,
    timing: TimingAnnotation,
    power: PowerReport,
    objective: f64,
}

impl EpisodeBest {
    fn of(env: &Env<'_>) -> Self {
        Self {
            sizes: env.design.sizes(),
            timing: env.design.timing.clone(),
            power: env.design.power.clone(),
            objective: env.objective(),
        }
    }
}

/// Trains `agent` on `envs`, one episode per environment in round-robin
/// order, with `schedules[i]` driving the clock of `envs[i]`. Each
/// environment starts at its current sizing; each later episode starts
/// from the lowest-objective sizing of that environment's previous
/// episode. On return every environment holds its best sizing at its
/// target clock.
pub fn dqn_train(
    agent: &mut Agent,
    envs: &mut [Env<'_>],
    schedules: &[ClockSchedule],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, RlError> {
    assert_eq!(envs.len(), schedules.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut buf = ReplayBuffer::new(cfg.buffer);
    let mut out = TrainOutcome { best: Vec::new(), episodes: Vec::new(), steps: Vec::new(), losses: Vec::new(), mask_checks: 0 };
    let mut start_sizes: Vec<Vec<usize>> = envs.iter().map(|e| e.design.sizes()).collect();
    let mut best: Vec<Option<BestSizing>> = vec![None; envs.len()];
    let checks_before: u64 = envs.iter().map(|e| e.mask_checks).sum();
    let mut global_step = 0usize;
    // Episodes that start timing-clean take no decisions and leave the
    // exploration rate where it is.
    let mut active_episodes = 0usize;

    for episode in 0..cfg.episodes {
        let di = episode % envs.len();
        let env = &mut envs[di];
        let sched = ClockSchedule { decay_episodes: cfg.clock_decay, ..schedules[di] };
        let clock = sched.at(episode);
        let at_target = clock == sched.target_delay;
        let eps = cfg.epsilon(active_episodes);
        env.reset(&start_sizes[di], clock)?;
        let start_objective = env.objective();
        let mut ep_best = EpisodeBest::of(env);
        if at_target {
            offer(&mut best[di], env);
        }
        let mut state = Rc::new(env.observe());
        let mut steps = 0;
        for step in 0..cfg.steps {
            if state.is_empty() {
                break;
            }
            if !state.mask.any() {
                return Err(RlError::NoValidAction { tns: env.tns() });
            }
            let action = if rng.gen::<f64>() < eps {
                let n = state.mask.count();
                state.mask.actions().nth(rng.gen_range(0..n)).expect("count matches")
            } else {
                masked_argmax(&agent.policy.q_values(&state)?, &state).0
            };
            let inst = state.nodes[action.0];
            let reward = env.step(&state, action)?;
            let next = Rc::new(env.observe());
            let terminal = next.is_empty();
            buf.push(Transition::new(state.clone(), action, reward, next.clone(), terminal));
            if buf.len() >= cfg.batch {
                let batch = buf.sample(cfg.batch, &mut rng);
                out.losses.push(agent.train_batch(&buf, &batch, cfg.gamma, cfg.grad_clip)?);
            }
            global_step += 1;
            steps += 1;
            if env.objective() < ep_best.objective {
                ep_best = EpisodeBest::of(env);
            }
            if global_step.is_multiple_of(cfg.lm_every) && env.ctx.update_enabled {
                env.lm_update();
                ep_best.objective = env.ctx.value(&ep_best.power, &ep_best.timing);
                if env.objective() < ep_best.objective {
                    ep_best = EpisodeBest::of(env);
                }
            }
            if at_target {
                offer(&mut best[di], env);
            }
            out.steps.push(StepRecord {
                design: di,
                episode,
                step,
                clock,
                epsilon: eps,
                action: (inst, action.1 == UP),
                reward,
                tns: env.design.timing.tns,
                wns: env.design.timing.wns,
                power: env.design.power.total_power,
                objective: env.objective(),
            });
            state = next;
        }
        if steps > 0 {
            active_episodes += 1;
        }
        out.episodes.push(EpisodeRecord {
            design: di,
            episode,
            clock,
            epsilon: eps,
            steps,
            start_objective,
            best_objective: ep_best.objective,
            tns: env.design.timing.tns,
            wns: env.design.timing.wns,
            power: env.design.power.total_power,
        });
        start_sizes[di] = ep_best.sizes;
        if (episode + 1) % cfg.target_sync == 0 {
            agent.sync_target();
        }
    }

    for (di, env) in envs.iter_mut().enumerate() {
        let target = schedules[di].target_delay;
        env.reset(&start_sizes[di], target)?;
        offer(&mut best[di], env);
        let b = best[di].take().expect("offered above");
        env.reset(&b.sizes, target)?;
        out.best.push(b);
    }
    out.mask_checks = envs.iter().map(|e| e.mask_checks).sum::<u64>() - checks_before;
    Ok(out)
}

fn offer(slot: &mut Option<BestSizing>, env: &Env<'_>) {
    let cand = BestSizing::of(env);
    if slot.as_ref().is_none_or(|b| cand.improves_on(b)) {
        *slot = Some(cand);
    }
}
