//! Independent cross-checks: quantum-jump trajectories and a dense
//! master-equation oracle for a few atoms.

mod jumps;
mod mcwf;
mod oracle;

pub use jumps::{diagonalize_dissipator, JumpChannels, RATE_FLOOR};
pub use mcwf::{
    read_trajectories, trajectory_rng, write_trajectories, EnsembleSummary, McwfModel, McwfRunner,
    McwfSettings, Observables, TrajectoryRecord,
};
pub use oracle::{MasterOracle, OracleCorrelations, MAX_ORACLE_ATOMS, STATIONARITY_TOLERANCE};
