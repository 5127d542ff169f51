//! Tabular MDPs and replicator-dynamics policy adaptation.

pub mod erpo;
pub mod error;
pub mod mdp;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
pub use mdp::{MdpBuilder, Outcome, TabularMdp, Trajectory};
pub use policy::StochasticPolicy;
