//! Analysis, protocol design, simulation, and verification for
//! synchronization of homogeneous linear agents over weighted directed
//! communication networks.
//!
//! The pipeline:
//!
//! 1. [`graph`] ingests weighted digraphs and builds Laplacians;
//!    [`condensation`] splits them into basic/non-basic bicomponents,
//!    exposes the canonical block form, and computes the asymptotic
//!    mixing coefficients of the non-basic nodes.
//! 2. [`control`] solves the algebraic Riccati equation
//!    `A'P + PA - PBB'P + I = 0` and forms the adaptive protocol gains
//!    `K = B'P`, `M = PBB'P`.
//! 3. [`sim`] integrates the coupled closed loop
//!    `x_i' = A x_i - rho_i B K zeta_i`, `rho_i' = |K zeta_i|^2` with an
//!    embedded Runge-Kutta 5(4) scheme ([`ode`]).
//! 4. [`analysis`] decides network stability, global and per-bicomponent
//!    synchronization, gain boundedness, and mixing-limit agreement, and
//!    verifies the spectral certificates used by the boundedness
//!    argument.
//!
//! All operations are pure functions of their inputs and safe for
//! concurrent read-only use.

pub mod analysis;
pub mod condensation;
pub mod control;
pub mod error;
pub mod gen;
pub mod graph;
pub mod linalg;
pub mod ode;
pub mod scc;
pub mod sim;

pub use analysis::{
    check_beta_limits, check_bicomponent_sync, check_global_sync, check_network_stability,
    check_rho_bounded, left_eigenvector_weights, q_rho, verify_h_inequality, AnalysisSettings,
    HInequalityCertificate, SyncReport,
};
pub use condensation::{
    compute_beta, condense, has_directed_spanning_tree, BetaMatrix, Bicomponent,
    CondensationDecomposition,
};
pub use control::{
    protocol_gain, solve_care, solve_lyapunov, stabilizability_check, triple_integrator,
    AgentModel, ProtocolGain, RiccatiSolution, StabilizabilityReport,
};
pub use error::{Error, Result};
pub use graph::{build_laplacian, Edge, Laplacian, WeightedDigraph};
pub use ode::{integrate, Dopri5Settings, IntegratorStats, OdeSolution};
pub use scc::strongly_connected_components;
pub use sim::{
    closed_loop_derivative, compute_zeta, simulate, simulate_with_gain, write_csv, ClosedLoop,
    InitialStates, ScenarioConfig, SimulationResult, SimulationState,
};

pub use nalgebra;
