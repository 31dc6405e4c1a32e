//! Time evolution: Schrödinger propagation, the dressed-state master
//! equation, and quantum-jump trajectories.

mod channels;
mod config;
mod master;
mod ode;
mod schrodinger;
mod sparse;
mod state;
mod trajectory;

pub use channels::{jump_channels, ChannelLabel, JumpChannel};
pub use config::{uniform_grid, IntegratorConfig, ACTIVE_PULSE_FRACTION};
pub use master::{
    evolve_master, evolve_master_with, lindblad_rhs, master_series, MasterPropagator, MixedEvolution, OpenSystem,
    SAMPLE_HERMITICITY_TOLERANCE, SAMPLE_POSITIVITY_TOLERANCE, SAMPLE_TRACE_TOLERANCE,
};
pub use schrodinger::{
    evolve_schrodinger, evolve_schrodinger_with, DrivenHamiltonian, EffectiveHamiltonian, Hamiltonian, PureEvolution,
    NORM_DRIFT_PER_STEP,
};
pub(crate) use state::check_density;
pub use state::{Observable, QuantumState, StateKind, NORM_TOLERANCE};
pub use trajectory::{
    ensemble_average, mcwf_trajectory, run_trajectories, summarize, EnsembleResult, JumpEvent, TrajectoryRecord,
};
