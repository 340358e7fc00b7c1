//! Corrugation profile and experiment geometry.

use crate::error::{Error, Result};

/// One period of a trapezoidal trench array.
///
/// Along x the period is laid out as: top plateau `[0, l₁)`, descending
/// sidewall, bottom plateau of width `l₂`, ascending sidewall. Each sidewall
/// spans `p₃λ` horizontally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingProfile {
    pub period: f64,
    pub top_width: f64,
    pub bottom_width: f64,
    pub depth: f64,
    /// Sidewall angle measured from the top surface, degrees (90° is vertical).
    pub sidewall_angle: f64,
}

impl GratingProfile {
    pub fn new(period: f64, top_width: f64, bottom_width: f64, depth: f64, sidewall_angle: f64) -> Result<Self> {
        let p = Self {
            period,
            top_width,
            bottom_width,
            depth,
            sidewall_angle,
        };
        p.validate()?;
        Ok(p)
    }

    /// The measured trench array: λ = 400 nm, l₁ = 185.3 nm, l₂ = 199.1 nm,
    /// t = 98 nm, 94.6° sidewalls.
    pub fn nominal() -> Self {
        Self::new(400e-9, 185.3e-9, 199.1e-9, 98e-9, 94.6).expect("valid constants")
    }

    /// Vertical-wall idealisation with the same top width and period.
    pub fn vertical_walls(period: f64, top_width: f64, depth: f64) -> Result<Self> {
        Self::new(period, top_width, period - top_width, depth, 90.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.period > 0.0
            && self.top_width >= 0.0
            && self.bottom_width >= 0.0
            && self.depth >= 0.0
            && self.top_width + self.bottom_width <= self.period * (1.0 + 1e-12);
        if !ok {
            return Err(Error::Validation(format!("invalid grating profile {self:?}")));
        }
        Ok(())
    }

    pub fn p1(&self) -> f64 {
        self.top_width / self.period
    }

    pub fn p2(&self) -> f64 {
        self.bottom_width / self.period
    }

    /// Horizontal extent of one sidewall in units of the period.
    pub fn p3(&self) -> f64 {
        ((1.0 - self.p1() - self.p2()) / 2.0).max(0.0)
    }

    pub fn sidewall_run(&self) -> f64 {
        self.p3() * self.period
    }

    /// Relative disagreement between the sidewall run derived from the widths
    /// and the one implied by the stored angle, or `None` when either is
    /// degenerate.
    pub fn angle_consistency(&self) -> Option<f64> {
        if self.depth == 0.0 {
            return None;
        }
        let from_angle = self.depth * (self.sidewall_angle - 90.0).to_radians().tan();
        let from_widths = self.sidewall_run();
        if from_angle.abs() < 1e-15 && from_widths.abs() < 1e-15 {
            return Some(0.0);
        }
        Some((from_widths - from_angle).abs() / from_angle.abs().max(from_widths.abs()))
    }

    /// Ridge (solid) width at depth `y ∈ [0, t]` below the top plateau.
    pub fn ridge_width_at(&self, y: f64) -> f64 {
        if self.depth == 0.0 {
            return self.top_width;
        }
        self.top_width + 2.0 * self.sidewall_run() * (y / self.depth)
    }

    pub fn height_profile(&self, x: f64) -> Result<f64> {
        height_profile(self, x)
    }
}

/// Depth of the surface below the top plateau at lateral position `x ∈ [0, λ)`.
pub fn height_profile(profile: &GratingProfile, x: f64) -> Result<f64> {
    if !(0.0..profile.period).contains(&x) {
        return Err(Error::domain(format!("x = {x:e} outside [0, {:e})", profile.period)));
    }
    let run = profile.sidewall_run();
    let l1 = profile.top_width;
    let t = profile.depth;
    let down_end = l1 + run;
    let bottom_end = down_end + profile.bottom_width;
    Ok(if x < l1 {
        0.0
    } else if x < down_end {
        t * (x - l1) / run
    } else if x < bottom_end {
        t
    } else if run > 0.0 {
        t * (1.0 - (x - bottom_end) / run).max(0.0)
    } else {
        0.0
    })
}

/// One lamellar layer of a staircased profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub thickness: f64,
    /// Solid fraction of the period.
    pub fill_fraction: f64,
    /// Depth of the slab's top face below the top plateau.
    pub top: f64,
}

/// Cuts the profile into `n_slices` equal-thickness lamellar slabs, ordered
/// from the top plateau downward. Each slab takes the ridge width at its
/// mid-depth, so the solid area per period is preserved exactly.
pub fn staircase_approximation(profile: &GratingProfile, n_slices: usize) -> Result<Vec<Slab>> {
    if n_slices == 0 {
        return Err(Error::domain("staircase needs at least one slice"));
    }
    if profile.depth == 0.0 {
        return Ok(Vec::new());
    }
    let h = profile.depth / n_slices as f64;
    Ok((0..n_slices)
        .map(|i| {
            let mid = (i as f64 + 0.5) * h;
            Slab {
                thickness: h,
                fill_fraction: profile.ridge_width_at(mid) / profile.period,
                top: i as f64 * h,
            }
        })
        .collect())
}

/// Area of the symmetric difference between the trapezoidal ridge and its
/// staircase, per period.
pub fn staircase_mismatch_area(profile: &GratingProfile, n_slices: usize) -> Result<f64> {
    let slabs = staircase_approximation(profile, n_slices)?;
    // Within a slab each sidewall deviates linearly from the step; the
    // mismatch on one wall is two triangles of legs h/2 and run·h/(2t).
    let slope = if profile.depth > 0.0 {
        profile.sidewall_run() / profile.depth
    } else {
        0.0
    };
    Ok(slabs
        .iter()
        .map(|s| 2.0 * 2.0 * 0.5 * (s.thickness / 2.0) * (slope * s.thickness / 2.0))
        .sum())
}

/// Sphere-on-oscillator setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentGeometry {
    pub sphere_radius: f64,
    pub lever_arm: f64,
    pub resonance_frequency: f64,
    pub moment_of_inertia: Option<f64>,
    pub quality_factor: Option<f64>,
}

impl ExperimentGeometry {
    pub fn new(sphere_radius: f64, lever_arm: f64, resonance_frequency: f64) -> Result<Self> {
        if !(sphere_radius > 0.0 && lever_arm > 0.0 && resonance_frequency > 0.0) {
            return Err(Error::Validation(
                "sphere radius, lever arm and resonance frequency must be positive".into(),
            ));
        }
        Ok(Self {
            sphere_radius,
            lever_arm,
            resonance_frequency,
            moment_of_inertia: None,
            quality_factor: None,
        })
    }

    /// R = 50 μm, b = 210 μm, f₀ = 1783 Hz, Q = 32 000.
    pub fn nominal() -> Self {
        let mut g = Self::new(50e-6, 210e-6, 1783.0).expect("valid constants");
        g.quality_factor = Some(32_000.0);
        g
    }
}
