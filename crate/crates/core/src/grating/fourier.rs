use nalgebra::{DMatrix, DVector};

/// Diffraction orders −N..=N at a Bloch wavevector `kx`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSet {
    pub max_order: usize,
    pub period: f64,
    pub kx: f64,
}

impl OrderSet {
    pub fn new(max_order: usize, period: f64, kx: f64) -> Self {
        Self { max_order, period, kx }
    }

    pub fn len(&self) -> usize {
        2 * self.max_order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn order(&self, index: usize) -> i64 {
        index as i64 - self.max_order as i64
    }

    /// kₓ + 2πn/λ for every order.
    pub fn kx_orders(&self) -> DVector<f64> {
        let g = 2.0 * std::f64::consts::PI / self.period;
        DVector::from_fn(self.len(), |i, _| self.kx + g * self.order(i) as f64)
    }
}

/// Toeplitz matrix of Fourier coefficients of a piecewise-constant function
/// equal to `inside` on a slab of width `fill·λ` centred at x = 0 and
/// `outside` elsewhere. Centring keeps every coefficient real.
pub fn slab_toeplitz(size: usize, fill: f64, inside: f64, outside: f64) -> DMatrix<f64> {
    let delta = inside - outside;
    let coeff = |k: i64| -> f64 {
        if k == 0 {
            outside + delta * fill
        } else {
            let arg = std::f64::consts::PI * k as f64;
            delta * (arg * fill).sin() / arg
        }
    };
    DMatrix::from_fn(size, size, |m, n| coeff(m as i64 - n as i64))
}
