//! From-scratch LSTM baselines: the eight table architectures, BPTT
//! training and volatility-normalized signal production.

pub mod cell;
pub mod checkpoint;
pub mod layers;
pub mod model;
pub mod spec;
pub mod train;

pub use cell::{lstm_cell_forward, LstmState, LstmWeights};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use model::{build_model, LstmModel};
pub use spec::ModelSpec;
pub use train::{predict_signals, train, PredictConfig, TrainConfig, TrainReport, VolatilityScale};

#[derive(Debug, thiserror::Error)]
pub enum LstmError {
    #[error("unknown model spec {0:?}")]
    UnknownSpec(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("insufficient data: need at least {required} points, got {actual}")]
    InsufficientData { required: usize, actual: usize },
    #[error("training diverged at epoch {epoch}, step {step}: loss {loss}")]
    Divergence { epoch: usize, step: usize, loss: f64 },
    #[error("model {0} is untrained")]
    Untrained(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
