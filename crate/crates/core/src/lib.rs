pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod keyrate;
pub mod network;
pub mod presets;
pub mod protocols;
pub mod reconciliation;

pub use error::{Error, Result};
pub use gaussian::{entropy_g, Arm, CovarianceMatrix, ModeLabel, Quadrature};
pub use network::{
    DetectorParams, LinkParams, NetworkParams, NoiseReference, SourceParams, SplitterTopology, UserChannel,
};
