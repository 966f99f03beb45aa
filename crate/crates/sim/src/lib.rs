//! Monte Carlo experiments, file formats and command-line front end for the
//! safety inspectors of [`safety_inspector_core`].
//!
//! An [`ExperimentSpec`] describes a sweep over `(mu, epsilon, alpha)`;
//! [`run_experiment`] replicates the chosen inspector at every grid point and
//! [`output::emit`] writes the curves, histograms and sweep surface as CSV
//! (or JSON) next to a metadata sidecar.

mod error;
pub mod experiment;
pub mod output;
pub mod spec;

pub use error::{Result, SimError};
pub use experiment::{replicate, run_experiment, sweep, PointResult, ReplicationRecord, ResultSet};
pub use output::{emit, Format};
pub use spec::{AlgorithmSpec, ArmLaw, ExperimentSpec, Grid, PolicyName};
