//! Discrete-choice modelling of crowdshipping detours: survey data
//! handling, detour attribute synthesis, multinomial and mixed logit
//! estimation with robust standard errors, and marginal probability
//! effects.

pub mod config;
pub mod data;
pub mod error;
pub mod mixed;
pub mod mnl;
pub mod mode;
pub mod model;
pub mod mpe;
pub mod optim;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod spec;
pub mod synthesis;

pub use config::RunConfig;
pub use data::{load_dataset, Dataset, NetworkParams, Observation, ScalingConfig};
pub use error::{Error, Result};
pub use mixed::{estimate_mixed, DrawType, SimulationOptions};
pub use mnl::estimate;
pub use mode::{Mode, ModeMap};
pub use model::{fit_statistics, EstimationResult};
pub use optim::OptimizerOptions;
pub use spec::{ModelSpec, ParameterVector};
pub use synthesis::{build_design_matrix, Attribute, DesignMatrix};
