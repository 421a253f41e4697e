// SPDX-License-Identifier: Apache-2.0

//! File formats, configuration, the bundled benchmark suite, the
//! exhaustive oracle and the end-to-end flows behind the `eco` binary.

pub mod config;
pub mod error;
pub mod flows;
pub mod formats;
pub mod oracle;
pub mod suite;

pub use config::RunConfig;
pub use error::{EcoError, Result, EXIT_CONFIG, EXIT_ENGINE, EXIT_INFEASIBLE, EXIT_OK};
pub use flows::{run_flow, FlowReport, ResultRow};
pub use oracle::{brute_force_oracle, OracleResult};
pub use suite::{prepare, suite_case, Case, VoltSource};
