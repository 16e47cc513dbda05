//! Optical response of subwavelength Rydberg-atom arrays under
//! electromagnetically induced transparency: linear reflection spectra,
//! two-excitation steady states and photon correlations, with quantum-jump
//! and dense master-equation cross-checks.
//!
//! Units are natural throughout: Γ = 1, c = 1, λ = 1.

pub mod config;
pub mod correlations;
pub mod dipole;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod linalg;
pub mod linear;
pub mod model;
pub mod output;
pub mod scenario;
pub mod units;
pub mod validation;

pub use config::{ScanConfig, ScanVariable, ScenarioConfig};
pub use correlations::{
    collapse_check, default_tau_grid, delay_time, CorrelationEngine, CorrelationRecord,
    DensityGrid, PairSolver,
};
pub use dipole::{collective_params, pair_coupling, CollectiveParams, CouplingMatrix};
pub use error::{Error, ErrorClass, Result};
pub use geometry::{defect_weights, Lattice, Polarization, ProbeMode, Vec3};
pub use hilbert::{
    BasisState, Blockade, DriveParams, EffectiveOperator, PairAmplitudes, TruncatedBasis,
};
pub use linalg::{CMat, CVec, C64};
pub use linear::{
    defect_average, mirror_response, rtl_coefficients, solve_linear_steady, spectrum_scan,
    DefectAverage, Rtl, SteadyAmplitudes,
};
pub use model::{Channel, Mirror, OutputCoupling};
pub use output::{Sidecar, Table, Written};
pub use scenario::{execute, run_scenario, Scenario, ScenarioOutput};
