//! Exact Casimir pressure between a planar half-space and a lamellar grating.
//!
//! Reflection operators of the staircased grating come from a Fourier modal
//! method at imaginary frequency; the pressure follows from the trace formula
//! P = ħ/(8π³) ∫dξ ∫d²k tr[(1 − M)⁻¹ ∂_z M] with M = R₁e^{−κz}R₂e^{−κz}.

mod fourier;
mod force;
mod modes;
mod reflection;

pub use force::{
    casimir_force_grating, grating_pressure_curve, integrand_at, order_sweep, rho_ratio, GratingSystem, OrderSweep,
    RhoResult, TruncationSpec,
};
pub use modes::{LayerMedium, LayerModes, PERFECT_CONDUCTOR_SURROGATE};
pub use reflection::{
    grating_reflection, loop_operator, planar_reflection, LoopOperator, ModalReflection, Polarization,
    ReflectionOperator,
};
pub use fourier::{slab_toeplitz, OrderSet};
