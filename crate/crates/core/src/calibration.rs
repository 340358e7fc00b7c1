//! Oscillator calibration: Δf = C ∂F/∂z with z = z₀ − z_piezo − bθ.
//!
//! C is stored signed (C = −b²/(8π²If₀) < 0), so an attractive force, whose
//! gradient ∂F/∂z is positive, lowers the resonance frequency.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::curve::MonotoneCubic;
use crate::electrostatics::{corrugated_sphere_force_gradient, sphere_plane_force_gradient, MeshControl, SpherePlaneES};
use crate::error::{Error, Result};
use crate::geometry::GratingProfile;
use crate::pfa::FlatForceLaw;

/// Δf = C × ∂F/∂z
pub fn predict_frequency_shift(c: f64, gradient: f64) -> f64 {
    c * gradient
}

/// C = −b²/(8π²If₀), m N⁻¹ s⁻¹.
pub fn oscillator_constant(lever_arm: f64, moment_of_inertia: f64, resonance_frequency: f64) -> Result<f64> {
    if !(lever_arm > 0.0 && moment_of_inertia > 0.0 && resonance_frequency > 0.0) {
        return Err(Error::domain("lever arm, moment of inertia and f₀ must be positive"));
    }
    Ok(-lever_arm.powi(2) / (8.0 * PI * PI * moment_of_inertia * resonance_frequency))
}

/// Moment of inertia consistent with a given (negative) C.
pub fn moment_of_inertia_for(c: f64, lever_arm: f64, resonance_frequency: f64) -> Result<f64> {
    if !(c < 0.0) {
        return Err(Error::domain("C must be negative for a physical oscillator"));
    }
    Ok(-lever_arm.powi(2) / (8.0 * PI * PI * c * resonance_frequency))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceModel {
    pub z0: f64,
    pub lever_arm: f64,
}

impl DistanceModel {
    pub fn separation(&self, z_piezo: f64, theta: f64) -> f64 {
        self.z0 - z_piezo - self.lever_arm * theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyShiftSample {
    pub z_piezo: f64,
    pub theta: f64,
    pub voltage: f64,
    pub delta_f: f64,
}

/// Reads `z_piezo_nm, theta_rad, V_volt, delta_f_hz` rows; `#` starts a
/// comment and a non-numeric first row is taken as a header.
pub fn parse_samples(text: &str) -> Result<Vec<FrequencyShiftSample>> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if samples.is_empty() && fields.iter().any(|f| f.chars().any(char::is_alphabetic)) => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })
            }
        };
        if values.len() != 4 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: idx + 1,
                message: "expected four finite columns".into(),
            });
        }
        samples.push(FrequencyShiftSample {
            z_piezo: values[0] * 1e-9,
            theta: values[1],
            voltage: values[2],
            delta_f: values[3],
        });
    }
    Ok(samples)
}

pub fn samples_to_csv(samples: &[FrequencyShiftSample]) -> String {
    let mut out = String::from("z_piezo_nm,theta_rad,V_volt,delta_f_hz\n");
    for s in samples {
        let _ = writeln!(out, "{:.9},{:.9e},{:.9},{:.12e}", s.z_piezo * 1e9, s.theta, s.voltage, s.delta_f);
    }
    out
}

/// Electrostatic force-gradient model per unit (V − V₀)², N m⁻¹ V⁻².
#[derive(Debug, Clone)]
pub enum ForceModel {
    /// Exact sphere-plane series.
    SpherePlane { radius: f64 },
    /// Interpolated table, e.g. from the corrugated-surface FEM.
    Tabulated { law: FlatForceLaw },
}

impl ForceModel {
    /// Tabulates the FEM sphere-grating gradient on `points` log-spaced
    /// separations spanning `range`.
    pub fn fem(
        profile: &GratingProfile,
        radius: f64,
        range: (f64, f64),
        points: usize,
        mesh: &MeshControl,
    ) -> Result<Self> {
        if points < 4 || !(range.0 > 0.0 && range.1 > range.0) {
            return Err(Error::domain("FEM table needs ≥ 4 points on a positive range"));
        }
        let zs: Vec<f64> = (0..points)
            .map(|i| range.0 * (range.1 / range.0).powf(i as f64 / (points - 1) as f64))
            .collect();
        let values = zs
            .iter()
            .map(|&z| corrugated_sphere_force_gradient(profile, z, 1.0, radius, mesh))
            .collect::<Result<Vec<_>>>()?;
        // log-log interpolation keeps the power-law shape
        let interp = MonotoneCubic::new(zs.iter().map(|z| z.ln()).collect(), values.iter().map(|v| v.ln()).collect())?;
        let law = FlatForceLaw::new(
            move |z| {
                interp.eval(z.ln()).map(f64::exp).ok_or(Error::Range {
                    value: z,
                    min: range.0,
                    max: range.1,
                })
            },
            crate::pfa::Provenance::Computed,
            range,
        );
        Ok(ForceModel::Tabulated { law })
    }

    pub fn unit_gradient(&self, z: f64) -> Result<f64> {
        match self {
            ForceModel::SpherePlane { radius } => {
                sphere_plane_force_gradient(&SpherePlaneES::new(*radius, z, 1.0, 0.0)?)
            }
            ForceModel::Tabulated { law } => law.eval(z),
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            ForceModel::SpherePlane { .. } => (0.0, f64::INFINITY),
            ForceModel::Tabulated { law } => law.domain,
        }
    }
}

/// Generator inputs for synthetic sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTruth {
    pub c: f64,
    pub distance: DistanceModel,
    pub residual_voltage: f64,
}

/// Noiseless Δf for each (z_piezo, θ, V); `background` is a Casimir force
/// gradient added to the electrostatic one.
pub fn synthesize_sweep(
    model: &ForceModel,
    truth: &SyntheticTruth,
    points: &[(f64, f64, f64)],
    background: Option<&FlatForceLaw>,
) -> Result<Vec<FrequencyShiftSample>> {
    points
        .iter()
        .map(|&(z_piezo, theta, voltage)| {
            let z = truth.distance.separation(z_piezo, theta);
            if !(z > 0.0) {
                return Err(Error::domain(format!("generated separation {z:e} is not positive")));
            }
            let mut gradient = (voltage - truth.residual_voltage).powi(2) * model.unit_gradient(z)?;
            if let Some(bg) = background {
                gradient += bg.eval(z)?;
            }
            Ok(FrequencyShiftSample {
                z_piezo,
                theta,
                voltage,
                delta_f: predict_frequency_shift(truth.c, gradient),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    pub c: f64,
    pub z0: f64,
    /// 1σ from the residual covariance.
    pub sigma_c: f64,
    pub sigma_z0: f64,
    pub residuals: Vec<f64>,
    pub rms_residual: f64,
}

impl CalibrationFit {
    pub fn report(&self) -> String {
        format!(
            "C = {:.6e} ± {:.2e} m/N/s\nz0 = {:.6} ± {:.3} nm\nrms residual = {:.3e} Hz\nsamples = {}\n",
            self.c,
            self.sigma_c,
            self.z0 * 1e9,
            self.sigma_z0 * 1e9,
            self.rms_residual,
            self.residuals.len()
        )
    }
}

/// Residual weighting of the least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Equal weights, for additive noise of constant size.
    #[default]
    Uniform,
    /// Weights 1/Δf², for noise proportional to the signal.
    Relative,
}

/// Options shared by the fitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSetup {
    pub lever_arm: f64,
    pub residual_voltage: f64,
    /// Upper end of the z₀ search, m.
    pub z0_max: f64,
    pub weighting: Weighting,
}

struct Problem<'a> {
    samples: &'a [FrequencyShiftSample],
    model: &'a ForceModel,
    background: Option<&'a FlatForceLaw>,
    setup: FitSetup,
    /// √wᵢ per sample.
    sqrt_w: Vec<f64>,
}

impl Problem<'_> {
    fn design(&self, z0: f64) -> Result<Vec<f64>> {
        let dist = DistanceModel {
            z0,
            lever_arm: self.setup.lever_arm,
        };
        self.samples
            .iter()
            .map(|s| {
                let z = dist.separation(s.z_piezo, s.theta);
                let mut g = (s.voltage - self.setup.residual_voltage).powi(2) * self.model.unit_gradient(z)?;
                if let Some(bg) = self.background {
                    g += bg.eval(z)?;
                }
                Ok(g)
            })
            .zip(&self.sqrt_w)
            .map(|(g, w)| g.map(|g: f64| g * w))
            .collect()
    }

    fn observations(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().zip(&self.sqrt_w).map(|(s, w)| s.delta_f * w)
    }

    /// (C*(z₀), weighted residual sum of squares)
    fn profile(&self, z0: f64) -> Result<(f64, f64)> {
        let g = self.design(z0)?;
        let gg: f64 = g.iter().map(|x| x * x).sum();
        let gy: f64 = g.iter().zip(self.observations()).map(|(x, y)| x * y).sum();
        let c = gy / gg;
        let rss = g.iter().zip(self.observations()).map(|(x, y)| (y - c * x).powi(2)).sum();
        Ok((c, rss))
    }
}

/// Brent's minimiser on [a, b].
fn brent_minimize(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-30;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(x);
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Err(Error::Fit("z₀ minimisation did not converge".into()))
}

/// Separable least squares: C is eliminated analytically, z₀ is found by a
/// coarse scan followed by Brent refinement.
pub fn fit_calibration(
    samples: &[FrequencyShiftSample],
    model: &ForceModel,
    background: Option<&FlatForceLaw>,
    setup: &FitSetup,
) -> Result<CalibrationFit> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", samples.len())));
    }
    let offsets: Vec<f64> = samples.iter().map(|s| s.z_piezo + setup.lever_arm * s.theta).collect();
    let lo_off = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_off = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi_off - lo_off <= 1e-12 * hi_off.abs().max(1e-9) {
        return Err(Error::Fit("all samples share one separation; C and z₀ are not separable".into()));
    }
    if samples.iter().all(|s| s.voltage == setup.residual_voltage) && background.is_none() {
        return Err(Error::Fit("no sample carries an electrostatic signal".into()));
    }
    let sqrt_w = match setup.weighting {
        Weighting::Uniform => vec![1.0; samples.len()],
        Weighting::Relative => {
            if samples.iter().any(|s| s.delta_f == 0.0) {
                return Err(Error::Fit("relative weighting needs non-zero Δf".into()));
            }
            samples.iter().map(|s| 1.0 / s.delta_f.abs()).collect()
        }
    };
    let problem = Problem {
        samples,
        model,
        background,
        setup: *setup,
        sqrt_w,
    };
    let (dom_lo, dom_hi) = model.domain();
    let z0_lo = (hi_off + dom_lo.max(1e-12)).max(hi_off * (1.0 + 1e-12));
    let z0_hi = setup.z0_max.min(lo_off + dom_hi);
    if !(z0_hi > z0_lo) {
        return Err(Error::Fit(format!("empty z₀ search interval [{z0_lo:e}, {z0_hi:e}]")));
    }
    // coarse scan in log(z₀ − z0_lo) to locate the basin
    let span = z0_hi - z0_lo;
    let scan = 240;
    let grid: Vec<f64> = (0..=scan)
        .map(|i| z0_lo + span * 10f64.powf(-6.0 + 6.0 * i as f64 / scan as f64))
        .collect();
    let mut best = (f64::INFINITY, 0);
    for (i, &z0) in grid.iter().enumerate() {
        if let Ok((_, rss)) = problem.profile(z0) {
            if rss < best.0 {
                best = (rss, i);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Fit("model could not be evaluated on the z₀ interval".into()));
    }
    let a = grid[best.1.saturating_sub(1)];
    let b = grid[(best.1 + 1).min(scan)];
    let z0 = brent_minimize(|z| Ok(problem.profile(z)?.1), a, b, 1e-13)?;
    let (c, rss) = problem.profile(z0)?;

    let g = problem.design(z0)?;
    let h = 1e-6 * z0;
    let gp = problem.design(z0 + h)?;
    let gm = problem.design(z0 - h)?;
    // Jacobian columns ∂(model)/∂C and ∂(model)/∂z₀
    let j1 = g.clone();
    let j2: Vec<f64> = gp.iter().zip(&gm).map(|(p, m)| c * (p - m) / (2.0 * h)).collect();
    let a11: f64 = j1.iter().map(|x| x * x).sum();
    let a22: f64 = j2.iter().map(|x| x * x).sum();
    let a12: f64 = j1.iter().zip(&j2).map(|(x, y)| x * y).sum();
    let det = a11 * a22 - a12 * a12;
    if !(det > 1e-14 * a11 * a22) {
        return Err(Error::Fit("rank-deficient design: C and z₀ are not separable".into()));
    }
    let dof = (samples.len() as f64 - 2.0).max(1.0);
    let s2 = rss / dof;
    let residuals: Vec<f64> = g
        .iter()
        .zip(samples)
        .zip(&problem.sqrt_w)
        .map(|((x, s), w)| s.delta_f - c * x / w)
        .collect();
    Ok(CalibrationFit {
        c,
        z0,
        sigma_c: (s2 * a22 / det).sqrt(),
        sigma_z0: (s2 * a11 / det).sqrt(),
        rms_residual: (residuals.iter().map(|r| r * r).sum::<f64>() / samples.len() as f64).sqrt(),
        residuals,
    })
}

/// Inverse-variance mean of C over several fits and its 1σ.
pub fn average_fits(fits: &[CalibrationFit]) -> Result<(f64, f64)> {
    if fits.is_empty() {
        return Err(Error::Fit("no fits to average".into()));
    }
    if fits.iter().any(|f| !(f.sigma_c > 0.0)) {
        let mean = fits.iter().map(|f| f.c).sum::<f64>() / fits.len() as f64;
        return Ok((mean, 0.0));
    }
    let wsum: f64 = fits.iter().map(|f| f.sigma_c.powi(-2)).sum();
    let mean = fits.iter().map(|f| f.c * f.sigma_c.powi(-2)).sum::<f64>() / wsum;
    Ok((mean, wsum.sqrt().recip()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualVoltage {
    pub v0: f64,
    /// Quadratic coefficient of Δf(V), Hz/V².
    pub curvature: f64,
    pub rms_residual: f64,
}

/// Vertex of the least-squares parabola through (V, Δf) at fixed z.
pub fn find_residual_voltage(points: &[(f64, f64)]) -> Result<ResidualVoltage> {
    let mut voltages: Vec<f64> = points.iter().map(|p| p.0).collect();
    voltages.sort_by(f64::total_cmp);
    voltages.dedup();
    if voltages.len() < 3 {
        return Err(Error::Fit("need at least three distinct voltages".into()));
    }
    // centre and scale V for conditioning
    let mid = 0.5 * (voltages[0] + voltages[voltages.len() - 1]);
    let scale = 0.5 * (voltages[voltages.len() - 1] - voltages[0]);
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for &(v, y) in points {
        let u = (v - mid) / scale;
        let row = nalgebra::Vector3::new(1.0, u, u * u);
        ata += row * row.transpose();
        aty += row * y;
    }
    let coef = ata
        .cholesky()
        .ok_or_else(|| Error::Fit("singular parabola normal equations".into()))?
        .solve(&aty);
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    let rss: f64 = points
        .iter()
        .map(|&(v, y)| {
            let u = (v - mid) / scale;
            (y - (a + b * u + c * u * u)).powi(2)
        })
        .sum();
    let rms = (rss / points.len() as f64).sqrt();
    let signal = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    if !(c.abs() > 1e-9 * signal.max(f64::MIN_POSITIVE)) || c.abs() <= rms {
        return Err(Error::Fit("Δf(V) shows no parabolic curvature".into()));
    }
    let u0 = -b / (2.0 * c);
    if u0.abs() > 1.0 {
        return Err(Error::Fit("vertex lies outside the sampled voltages".into()));
    }
    Ok(ResidualVoltage {
        v0: mid + scale * u0,
        curvature: c / (scale * scale),
        rms_residual: rms,
    })
}

/// True when residual voltages at different separations agree within `tolerance`.
pub fn vertex_drift_ok(v0s: &[f64], tolerance: f64) -> bool {
    let lo = v0s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v0s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo < tolerance
}
