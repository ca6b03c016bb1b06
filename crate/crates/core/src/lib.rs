//! Relaxation-time (BGK) collision operator for charge carriers in graphene
//! with acoustic, optical and K-point phonon scattering.

pub mod chemical_potential;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod material;
pub mod observables;
pub mod oracles;
pub mod quadrature;
pub mod roots;
pub mod sweep;

pub use chemical_potential::{solve_mu, solve_mu_from, MuSolveOptions, MuSolveReport, SolveStatus};
pub use dynamics::{
    field_step, relax_step, run, Diagnostics, InitialCondition, Record, RunConfig, RunStatus, RunSummary, SimState,
    StepScheme, Stepper, Variant,
};
pub use error::{BgkError, Result};
pub use grid::{CartesianGrid, DistributionField, PhaseGrid, RadialGrid};
pub use kernels::{EvalMode, KernelContext, NodeKernels};
pub use material::{build_modes, ParamsFile, PhysicalParams, ScatteringMode, BOLTZMANN, ELEMENTARY_CHARGE, EV};
pub use observables::{compute_observables, Observables, DEFAULT_G_DEG};
pub use oracles::{run_validation, OracleConfig, ValidationReport};
