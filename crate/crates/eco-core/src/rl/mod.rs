// SPDX-License-Identifier: Apache-2.0

//! Graph Q-learning sizer.

pub mod dqn;
pub mod env;
pub mod infer;
pub mod mask;
pub mod replay;
pub mod rgcn;
pub mod state;

pub use dqn::{dqn_train, Agent, BestSizing, EpisodeRecord, StepRecord, TrainConfig, TrainOutcome};
pub use env::Env;
pub use infer::{fine_tune, infer, InferConfig, InferOutcome};
pub use mask::{build_action_mask, critical_path, ActionMask};
pub use replay::{ReplayBuffer, Transition};
pub use rgcn::{ModelError, QNetwork};
pub use state::{extract_state, StateSubgraph};

use crate::design::DesignError;
use rgcn::NetworkError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("no valid action while TNS is {tns} ps: target infeasible with this library")]
    NoValidAction { tns: f64 },
}
