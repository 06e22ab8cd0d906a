//! Library side of the `medfilter` command-line tool.

pub mod analyze;
pub mod error;
pub mod output;
pub mod simulate;

pub use analyze::{run_analysis, AnalysisConfig, Report};
pub use error::{CliError, CliResult};
pub use simulate::{run_simulation, SimulationOutput, SimulationRequest};
