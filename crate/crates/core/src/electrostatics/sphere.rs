//! Exact sphere-plane electrostatic attraction from the image-charge series.

use crate::constants::EPSILON_0;
use crate::error::{Error, Result};

/// Below this d/R the series is replaced by the small-gap form πε₀R(V−V₀)²/d.
pub const SMALL_GAP_CROSSOVER: f64 = 1e-6;

const SERIES_TOLERANCE: f64 = 1e-10;
const MAX_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePlaneES {
    pub radius: f64,
    /// Closest sphere-plane distance d.
    pub gap: f64,
    pub voltage: f64,
    pub residual_voltage: f64,
}

impl SpherePlaneES {
    pub fn new(radius: f64, gap: f64, voltage: f64, residual_voltage: f64) -> Result<Self> {
        let es = Self {
            radius,
            gap,
            voltage,
            residual_voltage,
        };
        es.validate()?;
        Ok(es)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::domain(format!("sphere radius must be positive, got {:e}", self.radius)));
        }
        if !(self.gap > 0.0) {
            return Err(Error::domain(format!("gap must be positive, got {:e}", self.gap)));
        }
        Ok(())
    }

    /// α = arccosh(1 + d/R)
    pub fn alpha(&self) -> f64 {
        (self.gap / self.radius).ln_1p_acosh()
    }

    fn prefactor(&self) -> f64 {
        2.0 * std::f64::consts::PI * EPSILON_0 * (self.voltage - self.residual_voltage).powi(2)
    }
}

trait Acosh1p {
    fn ln_1p_acosh(self) -> f64;
}

impl Acosh1p for f64 {
    /// arccosh(1 + x) without cancellation for small x.
    fn ln_1p_acosh(self) -> f64 {
        (self + (self * (self + 2.0)).sqrt()).ln_1p()
    }
}

/// csch x and coth x from e^{−x}, safe for large x.
fn csch_coth(x: f64) -> (f64, f64) {
    let e = (-x).exp();
    let e2 = e * e;
    let denom = -(-2.0 * x).exp_m1();
    (2.0 * e / denom, (1.0 + e2) / denom)
}

/// Σₙ [n coth nα − coth α] / sinh nα and its α-derivative.
fn series(alpha: f64, n_max: Option<usize>) -> Result<(f64, f64)> {
    let (_, coth_a) = csch_coth(alpha);
    let csch2_a = csch_coth(alpha).0.powi(2);
    let limit = n_max.unwrap_or(MAX_TERMS);
    let (mut sum, mut dsum) = (0.0, 0.0);
    for n in 1..=limit {
        let nf = n as f64;
        let (csch_n, coth_n) = csch_coth(nf * alpha);
        let u = nf * coth_n - coth_a;
        let term = u * csch_n;
        let du = -nf * nf * csch_n * csch_n + csch2_a;
        let dterm = du * csch_n - u * nf * coth_n * csch_n;
        sum += term;
        dsum += dterm;
        if n_max.is_none() && n > 1 {
            // terms fall off like n e^{−nα}; bound the tail geometrically
            let ratio = (-alpha).exp() * (nf + 1.0) / nf;
            if ratio < 1.0 {
                let tail = term.abs() * ratio / (1.0 - ratio);
                let dtail = dterm.abs() * ratio / (1.0 - ratio) * (1.0 + 1.0 / alpha);
                if tail < SERIES_TOLERANCE * sum.abs() && dtail < SERIES_TOLERANCE * dsum.abs() {
                    return Ok((sum, dsum));
                }
            }
        }
    }
    if n_max.is_some() {
        Ok((sum, dsum))
    } else {
        Err(Error::numerical(format!("sphere-plane series did not converge at α = {alpha:e}"), sum))
    }
}

/// Attractive force magnitude, N. `n_max = None` sums until the tail bound
/// drops below 10⁻¹⁰ of the partial sum.
pub fn sphere_plane_force(es: &SpherePlaneES, n_max: Option<usize>) -> Result<f64> {
    es.validate()?;
    let pre = es.prefactor();
    if pre == 0.0 {
        return Ok(0.0);
    }
    let ratio = es.gap / es.radius;
    if ratio < SMALL_GAP_CROSSOVER && n_max.is_none() {
        return Ok(pre * 0.5 / ratio);
    }
    Ok(pre * series(es.alpha(), n_max)?.0)
}

/// |∂F/∂d|, N/m.
pub fn sphere_plane_force_gradient(es: &SpherePlaneES) -> Result<f64> {
    es.validate()?;
    let pre = es.prefactor();
    if pre == 0.0 {
        return Ok(0.0);
    }
    let ratio = es.gap / es.radius;
    if ratio < SMALL_GAP_CROSSOVER {
        return Ok(pre * 0.5 * es.radius / (es.gap * es.gap));
    }
    let alpha = es.alpha();
    let (_, dsum) = series(alpha, None)?;
    // dα/dd = 1 / (R sinh α)
    let dalpha = 1.0 / (es.radius * alpha.sinh());
    Ok((pre * dsum * dalpha).abs())
}

/// Small-gap limit πε₀R(V−V₀)²/d.
pub fn small_gap_force(es: &SpherePlaneES) -> f64 {
    es.prefactor() * 0.5 * es.radius / es.gap
}
