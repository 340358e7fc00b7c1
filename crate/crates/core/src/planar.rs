//! Zero-temperature Lifshitz pressure between planar half-spaces, sphere-plane
//! mapping and roughness averaging.
//!
//! The pressure is written in terms of κ = √(ξ²/c² + k²) and t = ξ/(cκ):
//!
//! P(z) = −ħc/(32π² z⁴) ∫₀^∞ y³ dy ∫₀¹ dt Σ_p r₁r₂e^{−y} / (1 − r₁r₂e^{−y}),
//!
//! with y = 2κz. Both integrals use Gauss-Legendre nodes in log space.

use rayon::prelude::*;

use crate::constants::{C, HBAR};
use crate::curve::{ForceCurve, MonotoneCubic};
use crate::error::{Error, Result};
use crate::materials::{DielectricModel, Permittivity};
use crate::quadrature::{log_mapped, Rule};

/// Node counts for the frequency-like and wavevector-like directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes along the frequency (or polar-angle) direction.
    pub xi_nodes: usize,
    /// Nodes along the radial wavevector direction.
    pub k_nodes: usize,
    /// Midpoint nodes over half the Brillouin zone (gratings only).
    pub kx_nodes: usize,
    /// Relative change tolerated when node counts are doubled.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            xi_nodes: 48,
            k_nodes: 48,
            kx_nodes: 8,
            tolerance: 1e-3,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.xi_nodes < 8 || self.k_nodes < 8 || self.kx_nodes < 1 {
            return Err(Error::Validation(format!("quadrature node counts too small: {self:?}")));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        Self {
            xi_nodes: 2 * self.xi_nodes,
            k_nodes: 2 * self.k_nodes,
            kx_nodes: 2 * self.kx_nodes,
            tolerance: self.tolerance,
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "gauss-legendre log-mapped xi={} k={} kx={} tol={:e}",
            self.xi_nodes, self.k_nodes, self.kx_nodes, self.tolerance
        )
    }
}

/// Imaginary-frequency Fresnel amplitudes (r_TE, r_TM) of a vacuum/medium
/// interface. Perfect conductors give (−1, +1).
pub fn fresnel_te_tm(model: &DielectricModel, xi: f64, k_perp: f64) -> Result<(f64, f64)> {
    if !(k_perp >= 0.0) {
        return Err(Error::domain(format!("k_perp must be non-negative, got {k_perp:e}")));
    }
    match model.epsilon(xi)? {
        Permittivity::PerfectConductor => Ok((-1.0, 1.0)),
        Permittivity::Finite(eps) => {
            let q2 = (xi / C).powi(2);
            let kappa = (q2 + k_perp * k_perp).sqrt();
            let kappa_m = (eps * q2 + k_perp * k_perp).sqrt();
            Ok((
                (kappa - kappa_m) / (kappa + kappa_m),
                (eps * kappa - kappa_m) / (eps * kappa + kappa_m),
            ))
        }
    }
}

/// Fresnel amplitudes in the scale-free variables used by the quadrature:
/// `t = ξ/(cκ)`.
fn fresnel_scaled(eps: Permittivity, t: f64) -> (f64, f64) {
    match eps {
        Permittivity::PerfectConductor => (-1.0, 1.0),
        Permittivity::Finite(e) => {
            let s = (1.0 + (e - 1.0) * t * t).sqrt();
            ((1.0 - s) / (1.0 + s), (e - s) / (e + s))
        }
    }
}

/// Height distribution used for roughness averaging.
#[derive(Debug, Clone, PartialEq)]
pub enum HeightDistribution {
    /// Gaussian in the combined rms, truncated at `truncation` standard
    /// deviations and discretised on `points` equally spaced heights.
    Gaussian { truncation: f64, points: usize },
    /// Explicit (height offset m, weight) histogram; weights are normalised.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessSpec {
    pub rms_a: f64,
    pub rms_b: f64,
    pub distribution: HeightDistribution,
}

impl RoughnessSpec {
    /// Gaussian, truncated at 3σ, 21 points.
    pub fn gaussian(rms_a: f64, rms_b: f64) -> Self {
        Self {
            rms_a,
            rms_b,
            distribution: HeightDistribution::Gaussian {
                truncation: 3.0,
                points: 21,
            },
        }
    }

    /// Gold ~4 nm rms, silicon ~0.6 nm rms.
    pub fn nominal() -> Self {
        Self::gaussian(4e-9, 0.6e-9)
    }

    pub fn combined_rms(&self) -> f64 {
        self.rms_a.hypot(self.rms_b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rms_a >= 0.0 && self.rms_b >= 0.0) {
            return Err(Error::Validation("roughness rms must be non-negative".into()));
        }
        match &self.distribution {
            HeightDistribution::Gaussian { truncation, points } if !(*truncation > 0.0) || *points == 0 => {
                Err(Error::Validation("Gaussian truncation must be positive with ≥ 1 point".into()))
            }
            HeightDistribution::Tabulated(h) if h.is_empty() || h.iter().any(|(_, w)| *w < 0.0) => {
                Err(Error::Validation("tabulated roughness needs non-negative weights".into()))
            }
            _ => Ok(()),
        }
    }

    /// Largest |gap offset| in the discretised distribution.
    pub fn span(&self) -> f64 {
        self.discretize().iter().map(|(h, _)| h.abs()).fold(0.0, f64::max)
    }

    /// Discrete (offset, weight) pairs with Σ weights = 1.
    pub fn discretize(&self) -> Vec<(f64, f64)> {
        let sigma = self.combined_rms();
        let raw: Vec<(f64, f64)> = match &self.distribution {
            HeightDistribution::Gaussian { .. } if sigma == 0.0 => vec![(0.0, 1.0)],
            HeightDistribution::Gaussian { truncation, points } => {
                if *points == 1 {
                    vec![(0.0, 1.0)]
                } else {
                    let hmax = truncation * sigma;
                    (0..*points)
                        .map(|i| {
                            let h = -hmax + 2.0 * hmax * i as f64 / (*points - 1) as f64;
                            (h, (-0.5 * (h / sigma).powi(2)).exp())
                        })
                        .collect()
                }
            }
            HeightDistribution::Tabulated(h) => h.clone(),
        };
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        raw.into_iter().map(|(h, w)| (h, w / total)).collect()
    }
}

/// Two half-spaces facing each other across a vacuum gap.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPair {
    pub material_a: DielectricModel,
    pub material_b: DielectricModel,
    pub roughness: Option<RoughnessSpec>,
}

impl PlanarPair {
    pub fn new(material_a: DielectricModel, material_b: DielectricModel) -> Self {
        Self {
            material_a,
            material_b,
            roughness: None,
        }
    }

    pub fn ideal() -> Self {
        Self::new(DielectricModel::PerfectConductor, DielectricModel::PerfectConductor)
    }

    /// Drude gold against doped silicon.
    pub fn gold_silicon() -> Self {
        Self::new(DielectricModel::gold_drude(), DielectricModel::silicon_doped())
    }
}

/// Log-mapped node sets for the (y, t) integral.
#[derive(Debug, Clone)]
struct PlanarGrid {
    y: Rule,
    t: Rule,
}

impl PlanarGrid {
    fn new(quad: &QuadratureSpec) -> Self {
        Self {
            y: log_mapped(quad.k_nodes, 1e-5, 100.0),
            t: log_mapped(quad.xi_nodes, 1e-10, 1.0),
        }
    }
}

fn pressure_on_grid(pair: &PlanarPair, z: f64, grid: &PlanarGrid) -> Result<f64> {
    let mut outer = 0.0;
    for (y, wy) in grid.y.iter() {
        let kappa = y / (2.0 * z);
        let decay = (-y).exp();
        let mut inner = 0.0;
        for (t, wt) in grid.t.iter() {
            let xi = C * kappa * t;
            let (a_te, a_tm) = fresnel_scaled(pair.material_a.epsilon(xi)?, t);
            let (b_te, b_tm) = fresnel_scaled(pair.material_b.epsilon(xi)?, t);
            let loop_sum = [a_te * b_te, a_tm * b_tm]
                .iter()
                .map(|rr| rr * decay / (1.0 - rr * decay))
                .sum::<f64>();
            inner += wt * loop_sum;
        }
        outer += wy * y.powi(3) * inner;
    }
    Ok(-HBAR * C / (32.0 * std::f64::consts::PI.powi(2) * z.powi(4)) * outer)
}

/// Lifshitz pressure at fixed node counts, no convergence check.
pub fn casimir_pressure_fixed(pair: &PlanarPair, z: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain(format!("separation must be positive, got {z:e}")));
    }
    quad.validate()?;
    pressure_on_grid(pair, z, &PlanarGrid::new(quad))
}

/// Converged Lifshitz pressure (Pa, negative = attractive). Node counts are
/// doubled until two successive results agree to `quad.tolerance`, at most
/// three times.
pub fn casimir_pressure_planar(pair: &PlanarPair, z: f64, quad: &QuadratureSpec) -> Result<f64> {
    let mut current = *quad;
    let mut value = casimir_pressure_fixed(pair, z, &current)?;
    let mut residual = f64::INFINITY;
    for _ in 0..3 {
        let finer = current.doubled();
        let refined = casimir_pressure_fixed(pair, z, &finer)?;
        residual = ((refined - value) / refined).abs();
        value = refined;
        current = finer;
        if residual < quad.tolerance {
            return Ok(value);
        }
    }
    Err(Error::numerical(
        format!("planar pressure at z = {z:e} m did not converge"),
        residual,
    ))
}

/// Pressures on a z-grid, evaluated in parallel; output order follows `zs`.
pub fn planar_pressure_curve(pair: &PlanarPair, zs: &[f64], quad: &QuadratureSpec) -> Result<ForceCurve> {
    let values = zs
        .par_iter()
        .map(|&z| casimir_pressure_planar(pair, z, quad))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForceCurve::new(zs.to_vec(), values, "Pa", "planar_pressure").with_meta("quadrature", quad.describe()))
}

/// Returns a warning when the sphere-plane PFA is stretched (z/R > 0.05).
pub fn pfa_validity_warning(z: f64, radius: f64) -> Option<String> {
    (z / radius > 0.05).then(|| format!("z/R = {:.3} exceeds 0.05; sphere-plane PFA is inaccurate", z / radius))
}

/// Sphere-plane force gradient magnitude F′ = 2πR |P(z)|, N/m.
pub fn force_gradient_sphere_plane(pair: &PlanarPair, z: f64, radius: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain("sphere radius must be positive"));
    }
    Ok(2.0 * std::f64::consts::PI * radius * casimir_pressure_planar(pair, z, quad)?.abs())
}

/// Height-averaged force law: Σᵢ wᵢ F(z + hᵢ).
pub fn roughness_average(law: impl Fn(f64) -> Result<f64>, z: f64, spec: &RoughnessSpec) -> Result<f64> {
    spec.validate()?;
    let span = spec.span();
    if z <= span {
        return Err(Error::domain(format!(
            "separation {z:e} m is within the roughness span {span:e} m"
        )));
    }
    spec.discretize().iter().map(|&(h, w)| Ok(w * law(z + h)?)).sum()
}

/// Roughness-corrected copy of a sampled curve. Off-grid values come from a
/// monotone cubic in log-log space, extended by power laws past the ends.
pub fn apply_roughness_correction(curve: &ForceCurve, spec: &RoughnessSpec) -> Result<ForceCurve> {
    spec.validate()?;
    if spec.combined_rms() == 0.0 {
        return Ok(curve.clone());
    }
    if curve.len() < 2 {
        return Err(Error::Validation("roughness correction needs ≥ 2 samples".into()));
    }
    let sign = curve.values[0].signum();
    if curve.values.iter().any(|v| v.signum() != sign || *v == 0.0) {
        return Err(Error::Validation("roughness correction needs a single-signed curve".into()));
    }
    let lx: Vec<f64> = curve.z.iter().map(|z| z.ln()).collect();
    let ly: Vec<f64> = curve.values.iter().map(|v| v.abs().ln()).collect();
    let interp = MonotoneCubic::new(lx.clone(), ly.clone())?;
    let n = lx.len();
    let slope_lo = (ly[1] - ly[0]) / (lx[1] - lx[0]);
    let slope_hi = (ly[n - 1] - ly[n - 2]) / (lx[n - 1] - lx[n - 2]);
    let law = |z: f64| -> Result<f64> {
        let x = z.ln();
        let l = if x < lx[0] {
            ly[0] + slope_lo * (x - lx[0])
        } else if x > lx[n - 1] {
            ly[n - 1] + slope_hi * (x - lx[n - 1])
        } else {
            interp.eval(x).expect("inside domain")
        };
        Ok(sign * l.exp())
    };
    let values = curve
        .z
        .iter()
        .map(|&z| roughness_average(law, z, spec))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ForceCurve::new(curve.z.clone(), values, curve.unit.clone(), format!("{}_rough", curve.label));
    out.metadata = curve.metadata.clone();
    out.metadata
        .push(("roughness_rms_m".into(), format!("{:e}", spec.combined_rms())));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ideal_casimir_pressure;

    #[test]
    fn fresnel_limits() {
        let pc = DielectricModel::PerfectConductor;
        assert_eq!(fresnel_te_tm(&pc, 1e15, 3e6).unwrap(), (-1.0, 1.0));
        let vac = DielectricModel::Constant(1.0);
        let (te, tm) = fresnel_te_tm(&vac, 1e15, 3e6).unwrap();
        assert!(te.abs() < 1e-15 && tm.abs() < 1e-15);
        assert!(fresnel_te_tm(&vac, 0.0, 1.0).is_err());
        assert!(fresnel_te_tm(&vac, 1.0, -1.0).is_err());
    }

    #[test]
    fn fresnel_matches_scaled_form() {
        let gold = DielectricModel::gold_drude();
        for (xi, k) in [(1e15, 1e15 / C), (3e14, 2e7), (1e16, 1e6)] {
            let (te, tm) = fresnel_te_tm(&gold, xi, k).unwrap();
            let kappa = ((xi / C).powi(2) + k * k).sqrt();
            let (te2, tm2) = fresnel_scaled(gold.epsilon(xi).unwrap(), xi / (C * kappa));
            assert!((te - te2).abs() < 1e-12 && (tm - tm2).abs() < 1e-12);
            assert!(te > -1.0 && te < 0.0 && tm > 0.0 && tm < 1.0);
        }
    }

    #[test]
    fn ideal_pressure_pin() {
        let pair = PlanarPair::ideal();
        for z in [100e-9, 300e-9, 1e-6] {
            let p = casimir_pressure_planar(&pair, z, &QuadratureSpec::default()).unwrap();
            let exact = ideal_casimir_pressure(z);
            assert!(((p - exact) / exact).abs() < 1e-4, "z={z:e}: {p} vs {exact}");
        }
    }

    #[test]
    fn roughness_identity_and_two_point_factor() {
        let law = |z: f64| Ok(z.powi(-4));
        let none = RoughnessSpec::gaussian(0.0, 0.0);
        assert!((roughness_average(law, 100e-9, &none).unwrap() / 1e28 - 1.0).abs() < 1e-14);

        let h = 5e-9;
        let z = 100e-9;
        let two = RoughnessSpec {
            rms_a: h,
            rms_b: 0.0,
            distribution: HeightDistribution::Tabulated(vec![(-h, 1.0), (h, 1.0)]),
        };
        let factor = roughness_average(law, z, &two).unwrap() / z.powi(-4);
        let expected = 0.5 * ((1.0 + h / z).powi(-4) + (1.0 - h / z).powi(-4));
        assert!((factor - expected).abs() < 1e-12 && factor > 1.0);
    }

    #[test]
    fn roughness_rejects_small_separations() {
        let law = |z: f64| Ok(z.powi(-4));
        let spec = RoughnessSpec::nominal();
        assert!(roughness_average(law, 10e-9, &spec).is_err());
    }
}
