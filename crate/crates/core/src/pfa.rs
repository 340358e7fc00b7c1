//! Proximity force approximation over one corrugation period.
//!
//! F_PFA(z) = p₁F(z) + p₂F(z+t) + 2∫₀^{p₃} F(z + t x/p₃) dx

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use crate::curve::{ForceCurve, MonotoneCubic};
use crate::error::{Error, Result};
use crate::geometry::{height_profile, GratingProfile};
use crate::quadrature::adaptive_gauss_kronrod;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Computed,
    MeasuredTable,
}

type LawFn = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// A flat-surface force (or force-gradient, or pressure) law F(z).
#[derive(Clone)]
pub struct FlatForceLaw {
    f: Arc<LawFn>,
    pub provenance: Provenance,
    /// Closed interval of separations where the law is defined.
    pub domain: (f64, f64),
}

impl fmt::Debug for FlatForceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlatForceLaw")
            .field("provenance", &self.provenance)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl FlatForceLaw {
    pub fn new(
        f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
        provenance: Provenance,
        domain: (f64, f64),
    ) -> Self {
        Self {
            f: Arc::new(f),
            provenance,
            domain,
        }
    }

    pub fn analytic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |z| Ok(f(z)), Provenance::Analytic, (0.0, f64::INFINITY))
    }

    /// Interpolates a sampled curve (monotone cubic in z, no extrapolation).
    pub fn from_curve(curve: &ForceCurve, provenance: Provenance) -> Result<Self> {
        let interp = MonotoneCubic::new(curve.z.clone(), curve.values.clone())?;
        let domain = interp.domain();
        Ok(Self::new(
            move |z| {
                interp.eval(z).ok_or(Error::Range {
                    value: z,
                    min: domain.0,
                    max: domain.1,
                })
            },
            provenance,
            domain,
        ))
    }

    /// Measured flat-force table from CSV (`z_nm, value` columns).
    pub fn from_measured_csv(text: &str) -> Result<Self> {
        let mut curve = ForceCurve::from_csv(text)?;
        let mut pairs: Vec<(f64, f64)> = curve.points().collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        (curve.z, curve.values) = pairs.into_iter().unzip();
        Self::from_curve(&curve, Provenance::MeasuredTable)
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        let (lo, hi) = self.domain;
        let slack = 1e-12 * hi.max(1e-30).min(1.0);
        if z < lo - slack || z > hi + slack {
            return Err(Error::Range {
                value: z,
                min: lo,
                max: hi,
            });
        }
        (self.f)(z.clamp(lo, hi))
    }

    fn check_interval(&self, a: f64, b: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if a < lo * (1.0 - 1e-12) || b > hi * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "force law defined on [{lo:e}, {hi:e}] but [{a:e}, {b:e}] is required"
            )));
        }
        Ok(())
    }
}

/// The three contributions of the PFA sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfaTerms {
    pub top: f64,
    pub bottom: f64,
    pub sidewalls: f64,
}

impl PfaTerms {
    pub fn total(&self) -> f64 {
        self.top + self.bottom + self.sidewalls
    }
}

pub fn pfa_terms(law: &FlatForceLaw, profile: &GratingProfile, z: f64) -> Result<PfaTerms> {
    if !(z > 0.0) {
        return Err(Error::domain(format!("separation must be positive, got {z:e}")));
    }
    let t = profile.depth;
    law.check_interval(z, z + t)?;
    let top = profile.p1() * law.eval(z)?;
    if t == 0.0 {
        // all terms collapse onto F(z)
        let rest = (1.0 - profile.p1()) * law.eval(z)?;
        return Ok(PfaTerms {
            top,
            bottom: profile.p2() * law.eval(z)?,
            sidewalls: rest - profile.p2() * law.eval(z)?,
        });
    }
    let bottom = profile.p2() * law.eval(z + t)?;
    let p3 = profile.p3();
    let sidewalls = if p3 > 0.0 {
        // 2∫₀^{p₃} F(z + t x/p₃) dx = 2p₃ ∫₀¹ F(z + t s) ds
        let failure = RefCell::new(None);
        let integral = adaptive_gauss_kronrod(
            |s| match law.eval(z + t * s) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            0.0,
            1.0,
            1e-6,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        2.0 * p3 * integral?
    } else {
        0.0
    };
    Ok(PfaTerms { top, bottom, sidewalls })
}

/// PFA force (same unit as the law) on the corrugated surface at gap `z`
/// measured from the top plateau.
pub fn pfa_corrugated(law: &FlatForceLaw, profile: &GratingProfile, z: f64) -> Result<f64> {
    Ok(pfa_terms(law, profile, z)?.total())
}

/// Share of the PFA force carried by the top and bottom plateaus.
pub fn pfa_share_topbottom(law: &FlatForceLaw, profile: &GratingProfile, z: f64) -> Result<f64> {
    let terms = pfa_terms(law, profile, z)?;
    Ok((terms.top + terms.bottom) / terms.total())
}

/// Direct profile average (1/λ)∫₀^λ F(z + h(x)) dx by an `n`-point midpoint
/// sum over the height profile. Independent of the three-term decomposition.
pub fn profile_average(law: &FlatForceLaw, profile: &GratingProfile, z: f64, n: usize) -> Result<f64> {
    let dx = profile.period / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let x = (i as f64 + 0.5) * dx;
        sum += law.eval(z + height_profile(profile, x)?)?;
    }
    Ok(sum / n as f64)
}

/// PFA applied pointwise to a z-grid.
pub fn pfa_curve(law: &FlatForceLaw, profile: &GratingProfile, zs: &[f64], unit: &str) -> Result<ForceCurve> {
    let values = zs
        .iter()
        .map(|&z| pfa_corrugated(law, profile, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForceCurve::new(zs.to_vec(), values, unit, "pfa"))
}
