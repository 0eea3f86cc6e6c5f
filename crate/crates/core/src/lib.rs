//! Transfer-parameter auto-tuning: offline knowledge discovery over transfer
//! logs plus online adaptive sampling.
//!
//! The offline half clusters historical transfers, fits throughput surfaces
//! per cluster and load band, precomputes each surface's best parameter
//! setting, and persists everything as a knowledge base. The online half
//! probes a new transfer with small sample chunks, narrows down which load
//! band the network is really in, and keeps re-tuning as conditions drift.

pub mod cluster;
pub mod error;
pub mod ingest;
pub mod kb;
pub mod maxima;
pub mod model;
pub mod numfmt;
pub mod regions;
pub mod sampler;
pub mod sim;
pub mod surface;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    max_achievable, DatasetProfile, LoadIntensity, NetworkProfile, ParamBounds, ParamTriple,
    TransferLogEntry, MBS_TO_MBPS,
};
