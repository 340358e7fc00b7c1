//! Trace-formula pressure between a flat plate and the grating.
//!
//! With ξ = cρ sin s and k_y = ρ cos s,
//! P(z) = ħc/(2π³) ∫₀^{π/λ} dkₓ ∫₀^∞ ρ dρ ∫₀^{π/2} ds tr[(1 − M)⁻¹ ∂_z M],
//! using evenness in kₓ and k_y. The (kₓ, ρ, s) node set and the reflection
//! operators on it are shared by every separation of a curve.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::fourier::OrderSet;
use super::reflection::{loop_operator, modal_grating_reflection, modal_planar_reflection};
use crate::constants::{C, HBAR};
use crate::curve::ForceCurve;
use crate::error::{Error, Result};
use crate::geometry::GratingProfile;
use crate::materials::DielectricModel;
use crate::pfa::{pfa_corrugated, FlatForceLaw, Provenance};
use crate::planar::{casimir_pressure_planar, PlanarPair, QuadratureSpec};
use crate::quadrature::{gauss_legendre_on, log_mapped, midpoint, Rule};

/// Flat plate of `plate` facing a grating made of `grating`.
#[derive(Debug, Clone, PartialEq)]
pub struct GratingSystem {
    pub profile: GratingProfile,
    pub grating: DielectricModel,
    pub plate: DielectricModel,
}

impl GratingSystem {
    pub fn new(profile: GratingProfile, grating: DielectricModel, plate: DielectricModel) -> Self {
        Self { profile, grating, plate }
    }

    /// Doped-silicon trench array against a Drude-gold plate.
    pub fn nominal() -> Self {
        Self::new(
            GratingProfile::nominal(),
            DielectricModel::silicon_doped(),
            DielectricModel::gold_drude(),
        )
    }

    pub fn perfect_conductors(profile: GratingProfile) -> Self {
        Self::new(profile, DielectricModel::PerfectConductor, DielectricModel::PerfectConductor)
    }

    pub fn planar_pair(&self) -> PlanarPair {
        PlanarPair::new(self.plate.clone(), self.grating.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    /// Diffraction orders n ∈ [−N, N].
    pub max_order: usize,
    pub n_slices: usize,
    /// `xi_nodes` → polar angle s, `k_nodes` → radius ρ, `kx_nodes` → kₓ.
    pub quadrature: QuadratureSpec,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self {
            max_order: 10,
            n_slices: 4,
            quadrature: QuadratureSpec {
                xi_nodes: 16,
                k_nodes: 32,
                kx_nodes: 8,
                tolerance: 2e-3,
            },
        }
    }
}

impl TruncationSpec {
    pub fn with_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn describe(&self) -> String {
        format!(
            "N={} slices={} s={} rho={} kx={}",
            self.max_order,
            self.n_slices,
            self.quadrature.xi_nodes,
            self.quadrature.k_nodes,
            self.quadrature.kx_nodes
        )
    }

    fn validate(&self) -> Result<()> {
        if self.n_slices == 0 {
            return Err(Error::Validation("n_slices must be at least 1".into()));
        }
        self.quadrature.validate()
    }
}

/// tr[(1 − M)⁻¹ ∂_z M] at one (ξ, kₓ, k_y) and separation z.
pub fn integrand_at(system: &GratingSystem, spec: &TruncationSpec, z: f64, xi: f64, kx: f64, ky: f64) -> Result<f64> {
    let orders = OrderSet::new(spec.max_order, system.profile.period, kx);
    let lower = modal_grating_reflection(&system.profile, &system.grating, xi, &orders, ky, spec.n_slices)?;
    let upper = modal_planar_reflection(&system.plate, xi, &orders, ky)?;
    loop_operator(&upper, &lower, z).trace_term()
}

struct Node {
    kx: f64,
    xi: f64,
    ky: f64,
    weight: f64,
}

fn node_set(period: f64, z_min: f64, z_max: f64, quad: &QuadratureSpec) -> Vec<Node> {
    // the kₓ integrand narrows like 1/z, so the node spacing follows z_max
    let kx_count = quad.kx_nodes.max((quad.kx_nodes as f64 * 2.5 * z_max / period).ceil() as usize);
    let kx_rule = midpoint(kx_count, 0.0, PI / period);
    let rho_rule: Rule = log_mapped(quad.k_nodes, 1e-3 / z_max, 20.0 / z_min);
    // s = (π/2)u² absorbs the √ξ behaviour of Drude reflection at ξ → 0
    let u_rule = gauss_legendre_on(quad.xi_nodes, 0.0, 1.0);
    let mut nodes = Vec::with_capacity(kx_rule.len() * rho_rule.len() * u_rule.len());
    for (kx, wkx) in kx_rule.iter() {
        for (rho, wrho) in rho_rule.iter() {
            for (u, wu) in u_rule.iter() {
                let s = 0.5 * PI * u * u;
                nodes.push(Node {
                    kx,
                    xi: C * rho * s.sin(),
                    ky: rho * s.cos(),
                    weight: wkx * wrho * rho * wu * PI * u,
                });
            }
        }
    }
    nodes
}

fn check_separations(zs: &[f64]) -> Result<(f64, f64)> {
    if zs.is_empty() {
        return Err(Error::Validation("empty separation grid".into()));
    }
    if let Some(z) = zs.iter().find(|z| !(**z > 0.0)) {
        return Err(Error::domain(format!("separation must be positive, got {z:e}")));
    }
    let lo = zs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = zs.iter().copied().fold(0.0, f64::max);
    Ok((lo, hi))
}

fn node_contributions(system: &GratingSystem, spec: &TruncationSpec, zs: &[f64], node: &Node) -> Result<Vec<f64>> {
    let orders = OrderSet::new(spec.max_order, system.profile.period, node.kx);
    let context = |e: Error| match e {
        Error::Numerical { message, residual } => Error::Numerical {
            message: format!("{message} at xi = {:e}, kx = {:e}, ky = {:e}", node.xi, node.kx, node.ky),
            residual,
        },
        other => other,
    };
    let lower = modal_grating_reflection(&system.profile, &system.grating, node.xi, &orders, node.ky, spec.n_slices)
        .map_err(context)?;
    let upper = modal_planar_reflection(&system.plate, node.xi, &orders, node.ky).map_err(context)?;
    zs.iter()
        .map(|&z| Ok(node.weight * loop_operator(&upper, &lower, z).trace_term().map_err(context)?))
        .collect()
}

fn pressures_fixed(system: &GratingSystem, zs: &[f64], spec: &TruncationSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let (lo, hi) = check_separations(zs)?;
    let nodes = node_set(system.profile.period, lo, hi, &spec.quadrature);
    let per_node = nodes
        .par_iter()
        .map(|node| node_contributions(system, spec, zs, node))
        .collect::<Result<Vec<_>>>()?;
    let prefactor = HBAR * C / (2.0 * PI.powi(3));
    let mut sums = vec![0.0; zs.len()];
    for row in &per_node {
        for (acc, v) in sums.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok(sums.into_iter().map(|s| prefactor * s).collect())
}

/// Pressures (Pa, negative = attractive) on a separation grid at the fixed
/// node counts of `spec`.
pub fn grating_pressure_curve(system: &GratingSystem, zs: &[f64], spec: &TruncationSpec) -> Result<ForceCurve> {
    let values = pressures_fixed(system, zs, spec)?;
    Ok(ForceCurve::new(zs.to_vec(), values, "Pa", "grating_pressure").with_meta("truncation", spec.describe()))
}

/// Converged pressure at one separation: quadrature node counts are doubled
/// until successive values agree to the quadrature tolerance (at most twice).
pub fn casimir_force_grating(system: &GratingSystem, z: f64, spec: &TruncationSpec) -> Result<f64> {
    let mut current = *spec;
    let mut value = pressures_fixed(system, &[z], &current)?[0];
    let mut trace = format!("{}: {value:e}", current.describe());
    let mut residual = f64::INFINITY;
    for _ in 0..2 {
        current.quadrature = current.quadrature.doubled();
        let refined = pressures_fixed(system, &[z], &current)?[0];
        residual = ((refined - value) / refined).abs();
        let _ = write!(trace, "; {}: {refined:e}", current.describe());
        value = refined;
        if residual < spec.quadrature.tolerance {
            return Ok(value);
        }
    }
    Err(Error::numerical(
        format!("grating pressure at z = {z:e} m did not converge ({trace})"),
        residual,
    ))
}

#[derive(Debug, Clone)]
pub struct RhoResult {
    pub rho: ForceCurve,
    pub exact: ForceCurve,
    pub pfa: ForceCurve,
}

/// Flat pressure law of the system's two materials as a PFA input.
fn flat_law(system: &GratingSystem, quad: QuadratureSpec) -> FlatForceLaw {
    let pair = system.planar_pair();
    FlatForceLaw::new(
        move |z| casimir_pressure_planar(&pair, z, &quad),
        Provenance::Computed,
        (0.0, f64::INFINITY),
    )
}

/// ρ(z) = P_exact(z) / P_PFA(z). The sphere factor 2πR cancels.
pub fn rho_ratio(system: &GratingSystem, zs: &[f64], spec: &TruncationSpec) -> Result<RhoResult> {
    let exact = grating_pressure_curve(system, zs, spec)?;
    let law = flat_law(system, QuadratureSpec::default());
    let pfa_values = zs
        .iter()
        .map(|&z| pfa_corrugated(&law, &system.profile, z))
        .collect::<Result<Vec<_>>>()?;
    let pfa = ForceCurve::new(zs.to_vec(), pfa_values, "Pa", "pfa_pressure");
    let rho_values = exact.values.iter().zip(&pfa.values).map(|(e, p)| e / p).collect();
    let rho = ForceCurve::new(zs.to_vec(), rho_values, "1", "rho").with_meta("truncation", spec.describe());
    Ok(RhoResult { rho, exact, pfa })
}

/// Pressure at one separation for a list of order cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSweep {
    pub z: f64,
    pub orders: Vec<usize>,
    pub values: Vec<f64>,
}

impl OrderSweep {
    /// |P(Nᵢ₊₁) − P(Nᵢ)| / |P(Nᵢ₊₁)| for consecutive entries.
    pub fn relative_steps(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| ((w[1] - w[0]) / w[1]).abs()).collect()
    }

    pub fn final_change(&self) -> Option<f64> {
        self.relative_steps().last().copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# z_nm: {}\nN,value\n", self.z * 1e9);
        for (n, v) in self.orders.iter().zip(&self.values) {
            let _ = writeln!(out, "{n},{v:.12e}");
        }
        out
    }
}

pub fn order_sweep(system: &GratingSystem, z: f64, orders: &[usize], spec: &TruncationSpec) -> Result<OrderSweep> {
    let values = orders
        .iter()
        .map(|&n| Ok(pressures_fixed(system, &[z], &spec.with_order(n))?[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderSweep {
        z,
        orders: orders.to_vec(),
        values,
    })
}

