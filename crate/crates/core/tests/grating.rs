use std::f64::consts::PI;

use casimir_core::constants::C;
use casimir_core::geometry::GratingProfile;
use casimir_core::grating::{
    grating_pressure_curve, grating_reflection, integrand_at, order_sweep, planar_reflection, rho_ratio,
    GratingSystem, OrderSet, Polarization, TruncationSpec,
};
use casimir_core::materials::{DielectricModel, Permittivity};
use casimir_core::planar::{casimir_pressure_planar, fresnel_te_tm, PlanarPair, QuadratureSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn flat(period: f64) -> GratingProfile {
    GratingProfile::new(period, period, 0.0, 0.0, 90.0).unwrap()
}

#[test]
fn flat_grating_matches_planar_lifshitz() {
    let system = GratingSystem::new(flat(100e-9), DielectricModel::silicon_doped(), DielectricModel::gold_drude());
    let zs = [100e-9, 200e-9, 400e-9];
    let spec = TruncationSpec::default().with_order(2);
    let curve = grating_pressure_curve(&system, &zs, &spec).unwrap();
    let pair = PlanarPair::gold_silicon();
    for (z, p) in curve.points() {
        let reference = casimir_pressure_planar(&pair, z, &QuadratureSpec::default()).unwrap();
        assert!(((p - reference) / reference).abs() < 1e-3, "z = {z:e}: {p:e} vs {reference:e}");
    }
}

#[test]
fn full_fill_decouples_orders() {
    let si = DielectricModel::silicon_doped();
    let ridge_only = GratingProfile::new(400e-9, 400e-9, 0.0, 98e-9, 90.0).unwrap();
    let (xi, kx, ky) = (1.7e15, 2.0e6, 3.0e6);
    let r = grating_reflection(&ridge_only, &si, xi, kx, ky, 3, 4).unwrap();
    let planar = planar_reflection(&si, xi, &r.orders, ky).unwrap();
    let diff = (&r.matrix - &planar.matrix).abs().max();
    assert!(diff < 1e-9, "max deviation {diff:e}");
}

#[test]
fn flat_operator_is_diagonal_fresnel() {
    let si = DielectricModel::silicon_doped();
    let (xi, kx, ky) = (4e14, -5e6, 1e7);
    let r = grating_reflection(&flat(400e-9), &si, xi, kx, ky, 2, 4).unwrap();
    let kxs = r.orders.kx_orders();
    for i in 0..r.orders.len() {
        let n = r.orders.order(i);
        let (te, tm) = fresnel_te_tm(&si, xi, kxs[i].hypot(ky)).unwrap();
        assert!((r.get((n, Polarization::Te), (n, Polarization::Te)) - te).abs() < 1e-10);
        assert!((r.get((n, Polarization::Tm), (n, Polarization::Tm)) - tm).abs() < 1e-10);
    }
    let mut off = r.matrix.clone();
    off.fill_diagonal(0.0);
    assert!(off.abs().max() < 1e-10);
}

#[test]
fn rejects_kx_outside_zone() {
    let p = GratingProfile::nominal();
    assert!(grating_reflection(&p, &DielectricModel::silicon_doped(), 1e15, 1.01 * PI / p.period, 0.0, 2, 4).is_err());
}

#[test]
fn integrand_even_in_kx() {
    let system = GratingSystem::nominal();
    let spec = TruncationSpec::default().with_order(4);
    for &(xi, kx, ky) in &[(3e15, 2.3e6, 1.1e6), (8e14, 6.0e6, 0.0), (1e16, 1e5, 4e7)] {
        let plus = integrand_at(&system, &spec, 150e-9, xi, kx, ky).unwrap();
        let minus = integrand_at(&system, &spec, 150e-9, xi, -kx, ky).unwrap();
        assert!(((plus - minus) / plus).abs() < 1e-10, "{plus:e} vs {minus:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reflection_is_passive(log_xi in 12.0f64..17.0, kx_frac in -1.0f64..1.0, log_ky in 3.0f64..8.0, n in 0usize..5) {
        let p = GratingProfile::nominal();
        let kx = kx_frac * PI / p.period;
        let r = grating_reflection(&p, &DielectricModel::silicon_doped(), 10f64.powf(log_xi), kx, 10f64.powf(log_ky), n, 4).unwrap();
        let s = r.max_singular_value();
        prop_assert!(s <= 1.0 + 1e-8, "max singular value {}", s);
    }

    #[test]
    fn loop_spectral_radius_below_one(log_xi in 12.0f64..17.0, kx_frac in 0.0f64..1.0, z_nm in 50.0f64..600.0) {
        use casimir_core::grating::{loop_operator, ModalReflection};
        let p = GratingProfile::nominal();
        let kx = kx_frac * PI / p.period;
        let xi = 10f64.powf(log_xi);
        let r1 = grating_reflection(&p, &DielectricModel::silicon_doped(), xi, kx, 2e6, 3, 4).unwrap();
        let r2 = planar_reflection(&DielectricModel::gold_drude(), xi, &r1.orders, 2e6).unwrap();
        // the TE/TM basis is flux-normalized, so propagation is diagonal there too
        let kappa = kappas(&r1.orders, xi, 2e6);
        let wrap = |m: &DMatrix<f64>| ModalReflection { vacuum: vacuum_stub(&kappa), matrix: m.clone() };
        let op = loop_operator(&wrap(&r2.matrix), &wrap(&r1.matrix), z_nm * 1e-9);
        prop_assert!(op.spectral_radius() < 1.0);
    }
}

fn kappas(orders: &OrderSet, xi: f64, ky: f64) -> DVector<f64> {
    let q = xi / C;
    let kx = orders.kx_orders();
    DVector::from_fn(2 * orders.len(), |i, _| (q * q + kx[i / 2].powi(2) + ky * ky).sqrt())
}

fn vacuum_stub(kappa: &DVector<f64>) -> casimir_core::grating::LayerModes {
    let n = kappa.len();
    casimir_core::grating::LayerModes {
        gamma: kappa.clone(),
        w: DMatrix::identity(n, n),
        v: DMatrix::identity(n, n),
    }
}

#[test]
fn order_sweep_steps_shrink() {
    let system = GratingSystem::nominal();
    let mut spec = TruncationSpec::default();
    spec.quadrature.xi_nodes = 10;
    spec.quadrature.k_nodes = 20;
    let sweep = order_sweep(&system, 200e-9, &[2, 4, 6, 8], &spec).unwrap();
    let steps = sweep.relative_steps();
    assert!(steps.windows(2).all(|w| w[1] < w[0]), "{steps:?}");
    assert!(sweep.to_csv().contains("N,value"));
}

#[test]
fn rho_tends_to_one_at_small_separation() {
    let system = GratingSystem::nominal();
    let spec = TruncationSpec::default().with_order(12);
    let r = rho_ratio(&system, &[40e-9, 70e-9, 100e-9], &spec).unwrap();
    let dev: Vec<f64> = r.rho.values.iter().map(|v| (v - 1.0).abs()).collect();
    assert!(dev[0] < dev[1] && dev[1] < dev[2], "{:?}", r.rho.values);
}

#[test]
fn flat_profile_has_unit_rho() {
    let system = GratingSystem::new(flat(100e-9), DielectricModel::silicon_doped(), DielectricModel::gold_drude());
    let r = rho_ratio(&system, &[150e-9, 250e-9], &TruncationSpec::default().with_order(2)).unwrap();
    for v in &r.rho.values {
        assert!((v - 1.0).abs() < 1e-3, "{v}");
    }
}

// Independent small-N oracle: one vertical-wall lamellar layer solved with a
// transfer matrix exp(M t) between plane-wave bases of vacuum and substrate.

struct Maxwell {
    f: DMatrix<f64>,
    g: DMatrix<f64>,
}

fn fourier_coefficient(k: i64, fill: f64, inside: f64, outside: f64) -> f64 {
    // ridge centred on x = 0, width fill·λ
    let samples = 200_000;
    (0..samples)
        .map(|j| {
            let u = (j as f64 + 0.5) / samples as f64 - 0.5;
            let eps = if u.abs() < fill / 2.0 { inside } else { outside };
            eps * (2.0 * PI * k as f64 * u).cos()
        })
        .sum::<f64>()
        / samples as f64
}

fn toeplitz(n: usize, fill: f64, inside: f64, outside: f64) -> DMatrix<f64> {
    let half = (n / 2) as i64;
    let coeffs: Vec<f64> = (0..=2 * half).map(|k| fourier_coefficient(k, fill, inside, outside)).collect();
    DMatrix::from_fn(n, n, |i, j| coeffs[(i as i64 - j as i64).unsigned_abs() as usize])
}

fn maxwell(orders: &OrderSet, q: f64, ky: f64, eps: &DMatrix<f64>, inv_rule: &DMatrix<f64>) -> Maxwell {
    let n = orders.len();
    let kx = DMatrix::from_diagonal(&orders.kx_orders());
    let a = 1.0 / q;
    let id = DMatrix::<f64>::identity(n, n);
    let ei = eps.clone().try_inverse().unwrap();
    let mut f = DMatrix::zeros(2 * n, 2 * n);
    f.view_mut((0, 0), (n, n)).copy_from(&(&kx * &ei * (a * ky)));
    f.view_mut((0, n), (n, n)).copy_from(&(-(&kx * &ei * &kx * a + &id * q)));
    f.view_mut((n, 0), (n, n)).copy_from(&(&id * q + &ei * (a * ky * ky)));
    f.view_mut((n, n), (n, n)).copy_from(&(-(&ei * &kx * (a * ky))));
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&(-(&kx * (a * ky))));
    g.view_mut((0, n), (n, n)).copy_from(&(&kx * &kx * a + eps * q));
    g.view_mut((n, 0), (n, n)).copy_from(&(-(&id * (a * ky * ky) + inv_rule * q)));
    g.view_mut((n, n), (n, n)).copy_from(&(&kx * (a * ky)));
    Maxwell { f, g }
}

/// Down-going TE/TM plane waves of a homogeneous medium as columns of the
/// 4n-component (e, h) vector, flux normalized.
fn plane_waves(orders: &OrderSet, q: f64, ky: f64, eps: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = orders.len();
    let m = maxwell(orders, q, ky, &(DMatrix::identity(n, n) * eps), &(DMatrix::identity(n, n) * eps));
    let kx = orders.kx_orders();
    let mut down = DMatrix::zeros(4 * n, 2 * n);
    let mut up = DMatrix::zeros(4 * n, 2 * n);
    for i in 0..n {
        let kpar = kx[i].hypot(ky);
        let s = if kpar > 0.0 { [-ky / kpar, kx[i] / kpar] } else { [0.0, 1.0] };
        let gamma = (kpar * kpar + eps * q * q).sqrt();
        let mut unit = DVector::zeros(2 * n);
        unit[i] = s[0];
        unit[n + i] = s[1];
        let te_h = &m.g * &unit / gamma;
        let tm_e = &m.f * &unit / gamma;
        for (col, e, h, sign) in [(2 * i, unit.clone(), te_h, 1.0), (2 * i + 1, tm_e, unit.clone(), -1.0)] {
            let flux = (e[i] * h[n + i] - e[n + i] * h[i]).abs();
            let c = 1.0 / flux.sqrt();
            down.view_mut((0, col), (2 * n, 1)).copy_from(&(&e * c));
            down.view_mut((2 * n, col), (2 * n, 1)).copy_from(&(&h * c));
            // TM amplitudes follow the H sign, TE the E sign
            up.view_mut((0, col), (2 * n, 1)).copy_from(&(&e * (c * sign)));
            up.view_mut((2 * n, col), (2 * n, 1)).copy_from(&(&h * (-c * sign)));
        }
    }
    (down, up)
}

#[test]
fn single_layer_matches_transfer_matrix_oracle() {
    let profile = GratingProfile::vertical_walls(400e-9, 185.3e-9, 98e-9).unwrap();
    let si = DielectricModel::silicon_doped();
    let (xi, kx, ky) = (2.0e15, 3.0e6, 5.0e6);
    let max_order = 1;
    let r = grating_reflection(&profile, &si, xi, kx, ky, max_order, 1).unwrap();

    let eps = match si.epsilon(xi).unwrap() {
        Permittivity::Finite(e) => e,
        Permittivity::PerfectConductor => unreachable!(),
    };
    let orders = OrderSet::new(max_order, profile.period, kx);
    let n = orders.len();
    let q = xi / C;
    let fill = profile.p1();
    let e_t = toeplitz(n, fill, eps, 1.0);
    let a_inv = toeplitz(n, fill, 1.0 / eps, 1.0).try_inverse().unwrap();
    let mx = maxwell(&orders, q, ky, &e_t, &a_inv);
    let mut system = DMatrix::zeros(4 * n, 4 * n);
    system.view_mut((0, 2 * n), (2 * n, 2 * n)).copy_from(&mx.f);
    system.view_mut((2 * n, 0), (2 * n, 2 * n)).copy_from(&mx.g);
    let transfer = (system * profile.depth).exp();

    let (sub_down, _) = plane_waves(&orders, q, ky, eps);
    let (vac_down, vac_up) = plane_waves(&orders, q, ky, 1.0);
    // transfer · sub_down · d − vac_up · b = vac_down · a
    let mut lhs = DMatrix::zeros(4 * n, 4 * n);
    lhs.view_mut((0, 0), (4 * n, 2 * n)).copy_from(&(&transfer * &sub_down));
    lhs.view_mut((0, 2 * n), (4 * n, 2 * n)).copy_from(&(-&vac_up));
    let sol = lhs.lu().solve(&vac_down).unwrap();
    let oracle = sol.rows(2 * n, 2 * n).into_owned();
    let diff = (&oracle - &r.matrix).abs().max();
    assert!(diff < 1e-8, "oracle\n{oracle:.6}\nsolver\n{:.6}", r.matrix);
}

#[test]
#[ignore = "PEC ridges use a finite surrogate permittivity whose Fourier convergence is too slow to settle this ordering"]
fn perfect_conductors_deviate_more_than_real_materials() {
    let z = [250e-9];
    let spec = TruncationSpec::default().with_order(12);
    let real = rho_ratio(&GratingSystem::nominal(), &z, &spec).unwrap().rho.values[0];
    let pec = rho_ratio(&GratingSystem::perfect_conductors(GratingProfile::nominal()), &z, &spec).unwrap().rho.values[0];
    assert!(pec > real, "pec {pec} real {real}");
}
