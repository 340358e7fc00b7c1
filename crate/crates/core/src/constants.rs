//! Physical constants (CODATA 2018, SI).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Converts a photon energy in eV to an angular frequency in rad/s.
pub fn ev_to_rad_per_s(ev: f64) -> f64 {
    ev * E_CHARGE / HBAR
}

pub fn rad_per_s_to_ev(omega: f64) -> f64 {
    omega * HBAR / E_CHARGE
}

/// Ideal-conductor Casimir pressure between parallel plates at separation `z`
/// (negative: attractive).
pub fn ideal_casimir_pressure(z: f64) -> f64 {
    -std::f64::consts::PI.powi(2) * HBAR * C / (240.0 * z.powi(4))
}
