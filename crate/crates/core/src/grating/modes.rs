//! Eigenmodes of one z-invariant layer at imaginary frequency.
//!
//! With fields ∝ e^{i(kₓx + k_y y)}, frequency ξ, q = ξ/c and the longitudinal
//! components rescaled by i, the transverse fields e = (Eₓ, E_y) and
//! h = η₀(Hₓ, H_y) obey the real system ∂_z e = F h, ∂_z h = G e. For a layer
//! that varies only along x the modes split into two families:
//!
//! * Eₓ = 0: eigenvectors of Kₓ² + k_y² + q²[[ε]] (Laurent rule), h = Ge/γ;
//! * Hₓ = 0: eigenvectors of [[1/ε]]⁻¹(Kₓ[[ε]]⁻¹Kₓ + q²) + k_y² (inverse rule
//!   for the field component normal to the walls), e = Fh/γ.
//!
//! Both eigenproblems are symmetrisable, so every γ² is real and positive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::fourier::{slab_toeplitz, OrderSet};
use crate::error::{Error, Result};

/// Permittivity used for perfect-conductor ridges inside a lamellar layer.
pub const PERFECT_CONDUCTOR_SURROGATE: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerMedium {
    Homogeneous(f64),
    /// Ridge of permittivity `ridge` occupying `fill` of the period, centred
    /// at x = 0, in a background of permittivity `background`.
    Lamellar { fill: f64, ridge: f64, background: f64 },
}

/// Downward-decaying modes (∝ e^{γz}) of a layer: column j has transverse
/// fields (e, h) = (W[:, j], V[:, j]). The upward family is (W, −V).
///
/// Rows are ordered [Eₓ or Hₓ for all orders, E_y or H_y for all orders];
/// columns [Eₓ = 0 family, Hₓ = 0 family]. Columns are scaled to unit
/// |Σ(EₓH_y − E_yHₓ)|.
#[derive(Debug, Clone)]
pub struct LayerModes {
    pub gamma: DVector<f64>,
    pub w: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl LayerModes {
    pub fn compute(medium: LayerMedium, orders: &OrderSet, q: f64, ky: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::domain("modal solve needs ξ > 0"));
        }
        let modes = match medium {
            LayerMedium::Homogeneous(eps) => homogeneous(eps, orders, q, ky),
            LayerMedium::Lamellar { fill, ridge, background } => {
                if fill <= 0.0 {
                    homogeneous(background, orders, q, ky)
                } else if fill >= 1.0 {
                    homogeneous(ridge, orders, q, ky)
                } else {
                    lamellar(fill, ridge, background, orders, q, ky)?
                }
            }
        };
        Ok(modes.normalized())
    }

    pub fn size(&self) -> usize {
        self.gamma.len()
    }

    fn normalized(mut self) -> Self {
        let n = self.size() / 2;
        for j in 0..self.size() {
            let mut flux = 0.0;
            for i in 0..n {
                flux += self.w[(i, j)] * self.v[(n + i, j)] - self.w[(n + i, j)] * self.v[(i, j)];
            }
            let s = 1.0 / flux.abs().sqrt();
            self.w.column_mut(j).scale_mut(s);
            self.v.column_mut(j).scale_mut(s);
        }
        self
    }
}

fn homogeneous(eps: f64, orders: &OrderSet, q: f64, ky: f64) -> LayerModes {
    let n = orders.len();
    let kx = orders.kx_orders();
    let a = 1.0 / q;
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    let mut v = DMatrix::zeros(2 * n, 2 * n);
    let mut gamma = DVector::zeros(2 * n);
    for i in 0..n {
        let g = (kx[i] * kx[i] + ky * ky + q * q * eps).sqrt();
        gamma[i] = g;
        gamma[n + i] = g;
        // Eₓ = 0 family
        w[(n + i, i)] = 1.0;
        v[(i, i)] = (a * kx[i] * kx[i] + q * eps) / g;
        v[(n + i, i)] = a * ky * kx[i] / g;
        // Hₓ = 0 family
        v[(n + i, n + i)] = 1.0;
        w[(i, n + i)] = -(a * kx[i] * kx[i] / eps + q) / g;
        w[(n + i, n + i)] = -a * ky * kx[i] / (eps * g);
    }
    LayerModes { gamma, w, v }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn lamellar(fill: f64, ridge: f64, background: f64, orders: &OrderSet, q: f64, ky: f64) -> Result<LayerModes> {
    let n = orders.len();
    let kx = DMatrix::from_diagonal(&orders.kx_orders());
    let a = 1.0 / q;
    let eps = slab_toeplitz(n, fill, ridge, background);
    let eps_inv = eps
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular permittivity Toeplitz matrix", 0.0))?;
    let inv_eps = slab_toeplitz(n, fill, 1.0 / ridge, 1.0 / background);
    let inv_eps_inv = inv_eps
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular inverse-permittivity Toeplitz matrix", 0.0))?;

    let mut w = DMatrix::zeros(2 * n, 2 * n);
    let mut v = DMatrix::zeros(2 * n, 2 * n);
    let mut gamma = DVector::zeros(2 * n);

    // Eₓ = 0 family
    let kx2 = &kx * &kx;
    let t_e = symmetrize(&(&kx2 + &eps * (q * q))) + DMatrix::identity(n, n) * (ky * ky);
    let eig = SymmetricEigen::new(t_e);
    let g12 = &kx2 * a + &eps * q;
    let g22 = &kx * (a * ky);
    for j in 0..n {
        let lambda = eig.eigenvalues[j];
        if !(lambda > 0.0) {
            return Err(Error::numerical("non-positive modal eigenvalue (Eₓ = 0 family)", lambda));
        }
        let g = lambda.sqrt();
        gamma[j] = g;
        let col = eig.eigenvectors.column(j);
        w.view_mut((n, j), (n, 1)).copy_from(&col);
        v.view_mut((0, j), (n, 1)).copy_from(&(&g12 * col / g));
        v.view_mut((n, j), (n, 1)).copy_from(&(&g22 * col / g));
    }

    // Hₓ = 0 family: [[1/ε]]⁻¹ Q with Q = Kₓ[[ε]]⁻¹Kₓ + q², via [[1/ε]]⁻¹ = LLᵀ
    let q_mat = symmetrize(&(&kx * &eps_inv * &kx)) + DMatrix::identity(n, n) * (q * q);
    let chol = symmetrize(&inv_eps_inv)
        .cholesky()
        .ok_or_else(|| Error::numerical("inverse-rule matrix is not positive definite", 0.0))?;
    let l = chol.l();
    let s = symmetrize(&(l.transpose() * &q_mat * &l));
    let eig = SymmetricEigen::new(s);
    let f12 = -(&kx * &eps_inv * &kx * a + DMatrix::identity(n, n) * q);
    let f22 = -(&eps_inv * &kx * (a * ky));
    for j in 0..n {
        let mu = eig.eigenvalues[j] + ky * ky;
        if !(mu > 0.0) {
            return Err(Error::numerical("non-positive modal eigenvalue (Hₓ = 0 family)", mu));
        }
        let g = mu.sqrt();
        gamma[n + j] = g;
        let hy = &l * eig.eigenvectors.column(j);
        v.view_mut((n, n + j), (n, 1)).copy_from(&hy);
        w.view_mut((0, n + j), (n, 1)).copy_from(&(&f12 * &hy / g));
        w.view_mut((n, n + j), (n, 1)).copy_from(&(&f22 * &hy / g));
    }
    Ok(LayerModes { gamma, w, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense F and G built directly from the Maxwell equations.
    fn maxwell_blocks(eps: &DMatrix<f64>, inv_eps: &DMatrix<f64>, kx: &DMatrix<f64>, q: f64, ky: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = kx.nrows();
        let a = 1.0 / q;
        let ei = eps.clone().try_inverse().unwrap();
        let ai = inv_eps.clone().try_inverse().unwrap();
        let id = DMatrix::<f64>::identity(n, n);
        let mut f = DMatrix::zeros(2 * n, 2 * n);
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        f.view_mut((0, 0), (n, n)).copy_from(&(kx * &ei * a * ky));
        f.view_mut((0, n), (n, n)).copy_from(&(-(kx * &ei * kx * a + &id * q)));
        f.view_mut((n, 0), (n, n)).copy_from(&(&id * q + &ei * (a * ky * ky)));
        f.view_mut((n, n), (n, n)).copy_from(&(-(&ei * kx * (a * ky))));
        g.view_mut((0, 0), (n, n)).copy_from(&(-(kx * (a * ky))));
        g.view_mut((0, n), (n, n)).copy_from(&(kx * kx * a + eps * q));
        g.view_mut((n, 0), (n, n)).copy_from(&(-(&id * (a * ky * ky) + ai * q)));
        g.view_mut((n, n), (n, n)).copy_from(&(kx * (a * ky)));
        (f, g)
    }

    #[test]
    fn lamellar_modes_solve_the_first_order_system() {
        let orders = OrderSet::new(3, 400e-9, 2.1e6);
        let (q, ky) = (8e6, 5e6);
        let (fill, ridge) = (0.47, 11.6);
        let modes = LayerModes::compute(LayerMedium::Lamellar { fill, ridge, background: 1.0 }, &orders, q, ky).unwrap();
        let n = orders.len();
        let kx = DMatrix::from_diagonal(&orders.kx_orders());
        let eps = slab_toeplitz(n, fill, ridge, 1.0);
        let inv = slab_toeplitz(n, fill, 1.0 / ridge, 1.0);
        let (f, g) = maxwell_blocks(&eps, &inv, &kx, q, ky);
        for j in 0..2 * n {
            let e = modes.w.column(j);
            let h = modes.v.column(j);
            let gam = modes.gamma[j];
            let r1 = (&f * h - e * gam).norm() / (e.norm() * gam);
            let r2 = (&g * e - h * gam).norm() / (h.norm() * gam);
            assert!(r1 < 1e-9 && r2 < 1e-9, "mode {j}: {r1} {r2}");
        }
    }

    #[test]
    fn homogeneous_modes_solve_the_first_order_system() {
        let orders = OrderSet::new(2, 400e-9, -3e6);
        let (q, ky) = (2e6, 7e6);
        let eps_val = 3.7;
        let modes = LayerModes::compute(LayerMedium::Homogeneous(eps_val), &orders, q, ky).unwrap();
        let n = orders.len();
        let kx = DMatrix::from_diagonal(&orders.kx_orders());
        let eps = DMatrix::identity(n, n) * eps_val;
        let inv = DMatrix::identity(n, n) / eps_val;
        let (f, g) = maxwell_blocks(&eps, &inv, &kx, q, ky);
        for j in 0..2 * n {
            let e = modes.w.column(j);
            let h = modes.v.column(j);
            let gam = modes.gamma[j];
            assert!((&f * h - e * gam).norm() < 1e-9 * e.norm() * gam);
            assert!((&g * e - h * gam).norm() < 1e-9 * h.norm() * gam);
        }
    }
}
