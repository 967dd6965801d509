//! Monte-Carlo simulation of model-selection procedures over measured
//! full-factorial outcomes: sequential single-factor optimization, ensembles
//! of prediction models under three pooling strategies, and the blind vs.
//! privileged evaluation protocols.

mod matrix;
mod pooling;
mod protocol;
mod sequential;

pub use matrix::{Instance, ModelInfo, PredictionMatrix, PredictionRow};
pub use pooling::{
    ensemble_curve, ensemble_curve_ordered, ensemble_predict, ordered_models, pool, CurvePoint,
    EnsembleSpec, ModelOrdering, Pooling,
};
pub use protocol::{blind_protocol, privileged_protocol, ProtocolReport, RankedModel};
pub use sequential::{
    sequential_exhaustive, sequential_simulate, RunRecord, SeqSimConfig, SimulationReport,
    Summary,
};
