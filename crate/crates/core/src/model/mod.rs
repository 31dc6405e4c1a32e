//! Hamiltonians, drive envelopes, dressed basis and effective lambda model.

mod dressed;
mod effective;
mod hamiltonian;
mod params;
mod pulse;

pub use dressed::{dressed_basis, DressedBasis, TrackedState, TRACKED_STATES};
pub use effective::{build_h_eff, dark_state, dark_state_effective, h_eff2_eigenvalues, EffectiveBasis};
pub use hamiltonian::{
    build_h_rotating, off_resonance_detuning, validity_margin, CompositeOperators, RotatingHamiltonian,
    ValidityMargin, ValidityReport, VALIDITY_THRESHOLD,
};
pub use params::{HilbertConfig, PhysicalParams, Preset};
pub use pulse::{pulse_amplitude, Pulse, PulseTrain};
