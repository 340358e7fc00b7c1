//! Reflection operators of layered stacks by R-matrix recursion.
//!
//! Working upward from the substrate, each interface is matched by solving
//! for the reflected amplitudes directly; only decaying exponentials e^{−γh}
//! appear, so the recursion is stable for arbitrarily thick layers.

use nalgebra::{DMatrix, DVector};

use super::fourier::OrderSet;
use super::modes::{LayerMedium, LayerModes, PERFECT_CONDUCTOR_SURROGATE};
use crate::constants::C;
use crate::error::{Error, Result};
use crate::geometry::{staircase_approximation, GratingProfile};
use crate::materials::{DielectricModel, Permittivity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Te,
    Tm,
}

/// Reflection of a stack in the vacuum modal basis just above its top face:
/// upward amplitudes = `matrix` × downward amplitudes.
#[derive(Debug, Clone)]
pub struct ModalReflection {
    pub vacuum: LayerModes,
    pub matrix: DMatrix<f64>,
}

enum Below {
    Conductor,
    Layer { modes: LayerModes, reflection: DMatrix<f64> },
}

fn interface(above: &LayerModes, below: &Below) -> Result<DMatrix<f64>> {
    let m = above.size();
    let (modes, r) = match below {
        Below::Conductor => return Ok(-DMatrix::identity(m, m)),
        Below::Layer { modes, reflection } => (modes, reflection),
    };
    let id = DMatrix::<f64>::identity(m, m);
    let y = &modes.w * (&id + r);
    let z = &modes.v * (&id - r);
    let mut system = DMatrix::zeros(2 * m, 2 * m);
    system.view_mut((0, 0), (m, m)).copy_from(&above.w);
    system.view_mut((0, m), (m, m)).copy_from(&(-y));
    system.view_mut((m, 0), (m, m)).copy_from(&(-&above.v));
    system.view_mut((m, m), (m, m)).copy_from(&(-z));
    let mut rhs = DMatrix::zeros(2 * m, m);
    rhs.view_mut((0, 0), (m, m)).copy_from(&(-&above.w));
    rhs.view_mut((m, 0), (m, m)).copy_from(&(-&above.v));
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("singular interface matching system", 0.0))?;
    Ok(solution.rows(0, m).into_owned())
}

/// Reflection of `layers` (top to bottom, with thicknesses) on a substrate.
pub(crate) fn stack_reflection(
    layers: &[(LayerMedium, f64)],
    substrate: Permittivity,
    orders: &OrderSet,
    q: f64,
    ky: f64,
) -> Result<ModalReflection> {
    let mut below = match substrate {
        Permittivity::PerfectConductor => Below::Conductor,
        Permittivity::Finite(eps) => {
            let modes = LayerModes::compute(LayerMedium::Homogeneous(eps), orders, q, ky)?;
            let m = modes.size();
            Below::Layer {
                modes,
                reflection: DMatrix::zeros(m, m),
            }
        }
    };
    for &(medium, thickness) in layers.iter().rev() {
        let modes = LayerModes::compute(medium, orders, q, ky)?;
        let bottom = interface(&modes, &below)?;
        let decay: DVector<f64> = modes.gamma.map(|g| (-g * thickness).exp());
        let top = DMatrix::from_fn(bottom.nrows(), bottom.ncols(), |i, j| decay[i] * bottom[(i, j)] * decay[j]);
        below = Below::Layer {
            modes,
            reflection: top,
        };
    }
    let vacuum = LayerModes::compute(LayerMedium::Homogeneous(1.0), orders, q, ky)?;
    let matrix = interface(&vacuum, &below)?;
    Ok(ModalReflection { vacuum, matrix })
}

fn finite_or_surrogate(p: Permittivity) -> f64 {
    match p {
        Permittivity::Finite(e) => e,
        Permittivity::PerfectConductor => PERFECT_CONDUCTOR_SURROGATE,
    }
}

/// Layer list of the staircased grating at frequency ξ.
pub(crate) fn grating_layers(
    profile: &GratingProfile,
    eps: Permittivity,
    n_slices: usize,
) -> Result<Vec<(LayerMedium, f64)>> {
    let ridge = finite_or_surrogate(eps);
    Ok(staircase_approximation(profile, n_slices)?
        .into_iter()
        .map(|s| {
            (
                LayerMedium::Lamellar {
                    fill: s.fill_fraction,
                    ridge,
                    background: 1.0,
                },
                s.thickness,
            )
        })
        .collect())
}

pub(crate) fn modal_grating_reflection(
    profile: &GratingProfile,
    model: &DielectricModel,
    xi: f64,
    orders: &OrderSet,
    ky: f64,
    n_slices: usize,
) -> Result<ModalReflection> {
    let eps = model.epsilon(xi)?;
    let layers = grating_layers(profile, eps, n_slices)?;
    stack_reflection(&layers, eps, orders, xi / C, ky)
}

pub(crate) fn modal_planar_reflection(model: &DielectricModel, xi: f64, orders: &OrderSet, ky: f64) -> Result<ModalReflection> {
    stack_reflection(&[], model.epsilon(xi)?, orders, xi / C, ky)
}

/// Reflection operator over (order, polarisation) in a TE/TM plane-wave
/// basis, index `2·(n + N) + {0: TE, 1: TM}`. Basis modes are scaled to unit
/// |Σ(EₓH_y − E_yHₓ)|; TM amplitudes follow the magnetic-field sign
/// convention, so a perfect conductor gives diag(−1, +1).
#[derive(Debug, Clone)]
pub struct ReflectionOperator {
    pub orders: OrderSet,
    pub xi: f64,
    pub ky: f64,
    pub matrix: DMatrix<f64>,
}

impl ReflectionOperator {
    pub fn index(&self, order: i64, pol: Polarization) -> usize {
        let i = (order + self.orders.max_order as i64) as usize;
        2 * i + if pol == Polarization::Te { 0 } else { 1 }
    }

    pub fn get(&self, out: (i64, Polarization), inc: (i64, Polarization)) -> f64 {
        self.matrix[(self.index(out.0, out.1), self.index(inc.0, inc.1))]
    }

    pub fn max_singular_value(&self) -> f64 {
        self.matrix.clone().singular_values().max()
    }

    pub fn from_modal(modal: &ModalReflection, orders: &OrderSet, xi: f64, ky: f64) -> Result<Self> {
        let basis = tete_tm_basis(&modal.vacuum, orders, ky)?;
        let inv = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::numerical("singular TE/TM basis change", 0.0))?;
        let mut matrix = inv * &modal.matrix * basis;
        for i in 0..orders.len() {
            matrix.row_mut(2 * i + 1).neg_mut();
        }
        Ok(Self {
            orders: orders.clone(),
            xi,
            ky,
            matrix,
        })
    }
}

/// Columns: TE and TM plane waves of each order expressed in the vacuum
/// modal basis.
fn tete_tm_basis(vacuum: &LayerModes, orders: &OrderSet, ky: f64) -> Result<DMatrix<f64>> {
    let n = orders.len();
    let kx = orders.kx_orders();
    let mut basis = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (c1, c2) = (i, n + i);
        let e = |c: usize| [vacuum.w[(i, c)], vacuum.w[(n + i, c)]];
        let h = |c: usize| [vacuum.v[(i, c)], vacuum.v[(n + i, c)]];
        let kpar = kx[i].hypot(ky);
        let s = if kpar > 1e-12 * (kx[i].abs() + ky.abs() + 1.0) {
            [-ky / kpar, kx[i] / kpar]
        } else {
            [0.0, 1.0]
        };
        // TE: tangential E along s; TM: tangential H along s
        for (col, (u1, u2)) in [(2 * i, (e(c1), e(c2))), (2 * i + 1, (h(c1), h(c2)))] {
            let det = u1[0] * u2[1] - u1[1] * u2[0];
            if det.abs() < 1e-300 {
                return Err(Error::numerical("degenerate vacuum modes", det));
            }
            let alpha = (s[0] * u2[1] - s[1] * u2[0]) / det;
            let beta = (u1[0] * s[1] - u1[1] * s[0]) / det;
            let ev = [alpha * e(c1)[0] + beta * e(c2)[0], alpha * e(c1)[1] + beta * e(c2)[1]];
            let hv = [alpha * h(c1)[0] + beta * h(c2)[0], alpha * h(c1)[1] + beta * h(c2)[1]];
            let flux = (ev[0] * hv[1] - ev[1] * hv[0]).abs();
            let scale = 1.0 / flux.sqrt();
            basis[(c1, col)] = alpha * scale;
            basis[(c2, col)] = beta * scale;
        }
    }
    Ok(basis)
}

/// Reflection operator of the staircased grating at (ξ, kₓ, k_y).
pub fn grating_reflection(
    profile: &GratingProfile,
    model: &DielectricModel,
    xi: f64,
    kx: f64,
    ky: f64,
    max_order: usize,
    n_slices: usize,
) -> Result<ReflectionOperator> {
    let half_zone = std::f64::consts::PI / profile.period;
    if kx.abs() > half_zone * (1.0 + 1e-12) {
        return Err(Error::domain(format!("kₓ = {kx:e} outside the first Brillouin zone")));
    }
    let orders = OrderSet::new(max_order, profile.period, kx);
    let modal = modal_grating_reflection(profile, model, xi, &orders, ky, n_slices)?;
    ReflectionOperator::from_modal(&modal, &orders, xi, ky)
}

/// Reflection operator of a flat half-space in the same basis.
pub fn planar_reflection(model: &DielectricModel, xi: f64, orders: &OrderSet, ky: f64) -> Result<ReflectionOperator> {
    let modal = modal_planar_reflection(model, xi, orders, ky)?;
    ReflectionOperator::from_modal(&modal, orders, xi, ky)
}

/// Open-loop operator M = R₁e^{−κz}R₂e^{−κz} and the derivative pieces of
/// the trace formula, in the vacuum modal basis.
#[derive(Debug, Clone)]
pub struct LoopOperator {
    pub m: DMatrix<f64>,
    /// −∂_z M = R₁κe^{−κz}R₂e^{−κz} + R₁e^{−κz}R₂κe^{−κz}
    pub minus_dm: DMatrix<f64>,
}

impl LoopOperator {
    /// tr[(1 − M)⁻¹ ∂_z M]
    pub fn trace_term(&self) -> Result<f64> {
        let n = self.m.nrows();
        let lhs = DMatrix::identity(n, n) - &self.m;
        let x = lhs
            .lu()
            .solve(&self.minus_dm)
            .ok_or_else(|| Error::numerical("1 − M is singular", 0.0))?;
        Ok(-x.trace())
    }

    pub fn spectral_radius(&self) -> f64 {
        self.m
            .complex_eigenvalues()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Builds M for the plate (`upper`) above the grating (`lower`) at gap `z`.
pub fn loop_operator(upper: &ModalReflection, lower: &ModalReflection, z: f64) -> LoopOperator {
    let gamma = &lower.vacuum.gamma;
    let n = gamma.len();
    let decay: DVector<f64> = gamma.map(|g| (-g * z).exp());
    let scale_cols = |m: &DMatrix<f64>, d: &DVector<f64>| DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[j]);
    let a = scale_cols(&upper.matrix, &decay);
    let b = scale_cols(&lower.matrix, &decay);
    let kd: DVector<f64> = gamma.component_mul(&decay);
    let a_k = scale_cols(&upper.matrix, &kd);
    let b_k = scale_cols(&lower.matrix, &kd);
    LoopOperator {
        m: &a * &b,
        minus_dm: a_k * &b + a * b_k,
    }
}
