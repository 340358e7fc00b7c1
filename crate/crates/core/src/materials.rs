//! Dielectric functions evaluated at imaginary frequency, ε(iξ).
//!
//! Gold is described by a Drude model, doped silicon by an intrinsic
//! (tabulated) part plus a Drude free-carrier term. Perfect conductors are a
//! limit flag, never a number.

use std::path::Path;

use crate::constants::ev_to_rad_per_s;
use crate::error::{Error, Result};

/// Free-carrier parameters, both in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    pub plasma_frequency: f64,
    pub relaxation_rate: f64,
}

impl DrudeParams {
    pub fn new(plasma_frequency: f64, relaxation_rate: f64) -> Result<Self> {
        if !(plasma_frequency > 0.0 && relaxation_rate > 0.0) {
            return Err(Error::Validation(format!(
                "Drude parameters must be positive (ω_p = {plasma_frequency:e}, γ = {relaxation_rate:e})"
            )));
        }
        Ok(Self {
            plasma_frequency,
            relaxation_rate,
        })
    }

    pub fn from_ev(plasma_ev: f64, relaxation_ev: f64) -> Result<Self> {
        Self::new(ev_to_rad_per_s(plasma_ev), ev_to_rad_per_s(relaxation_ev))
    }

    /// Gold: ω_p = 9 eV, γ = 35 meV.
    pub fn gold() -> Self {
        Self::from_ev(9.0, 0.035).expect("positive constants")
    }

    /// p-doped silicon at 2×10¹⁸ cm⁻³.
    pub fn doped_silicon() -> Self {
        Self::new(1.36e14, 4.75e13).expect("positive constants")
    }

    /// ω_p² / (ξ(ξ + γ))
    pub fn term(&self, xi: f64) -> f64 {
        self.plasma_frequency.powi(2) / (xi * (xi + self.relaxation_rate))
    }
}

/// Tabulated ε(iξ), interpolated linearly in ln ξ.
///
/// Below the first knot ε is held constant; above the last knot the excess
/// ε − 1 decays as 1/ξ². With `extrapolate = false` queries outside the knots
/// fail with a range error.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonTable {
    frequencies: Vec<f64>,
    values: Vec<f64>,
    pub extrapolate: bool,
}

impl EpsilonTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("empty ε table".into()));
        }
        for (i, &(xi, eps)) in points.iter().enumerate() {
            if !(xi > 0.0 && xi.is_finite()) {
                return Err(Error::Validation(format!("row {}: frequency must be positive", i + 1)));
            }
            if !(eps >= 1.0 && eps.is_finite()) {
                return Err(Error::Validation(format!("row {}: ε = {eps} is below 1", i + 1)));
            }
            if i > 0 && xi <= points[i - 1].0 {
                return Err(Error::Validation(format!(
                    "row {}: frequencies must be strictly increasing",
                    i + 1
                )));
            }
        }
        let (frequencies, values) = points.into_iter().unzip();
        Ok(Self {
            frequencies,
            values,
            extrapolate: true,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frequencies.iter().copied().zip(self.values.iter().copied())
    }

    pub fn span(&self) -> (f64, f64) {
        (self.frequencies[0], *self.frequencies.last().expect("non-empty"))
    }

    pub fn eval(&self, xi: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if xi < lo || xi > hi {
            if !self.extrapolate {
                return Err(Error::Range {
                    value: xi,
                    min: lo,
                    max: hi,
                });
            }
            if xi < lo {
                return Ok(self.values[0]);
            }
            let last = *self.values.last().expect("non-empty");
            return Ok(1.0 + (last - 1.0) * (hi / xi).powi(2));
        }
        let idx = self.frequencies.partition_point(|&f| f <= xi);
        if idx == 0 {
            return Ok(self.values[0]);
        }
        if idx == self.len() {
            return Ok(*self.values.last().expect("non-empty"));
        }
        let (x0, x1) = (self.frequencies[idx - 1].ln(), self.frequencies[idx].ln());
        let s = (xi.ln() - x0) / (x1 - x0);
        Ok(self.values[idx - 1] + s * (self.values[idx] - self.values[idx - 1]))
    }

    /// Parses two-column whitespace-delimited text (ξ in rad/s, ε). Lines
    /// starting with `#` or `%` and blank lines are skipped; rows are sorted
    /// by frequency before validation.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 2 columns, found {}", cols.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("not a number: {s:?}"),
                })
            };
            let (xi, eps) = (parse(cols[0])?, parse(cols[1])?);
            if eps < 1.0 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("ε(iξ) = {eps} < 1"),
                });
            }
            rows.push((i + 1, xi, eps));
        }
        rows.sort_by(|a, b| a.1.total_cmp(&b.1));
        for pair in rows.windows(2) {
            if pair[1].1 <= pair[0].1 {
                return Err(Error::Parse {
                    line: pair[1].0,
                    message: format!("duplicate frequency {:e}", pair[1].1),
                });
            }
        }
        Self::new(rows.into_iter().map(|(_, xi, eps)| (xi, eps)).collect())
    }
}

/// Reads a tabulated ε(iξ) file.
pub fn load_tabulated_epsilon(path: impl AsRef<Path>) -> Result<EpsilonTable> {
    EpsilonTable::parse(&std::fs::read_to_string(path)?)
}

/// Single-oscillator model for intrinsic silicon at imaginary frequency:
/// ε(iξ) = ε∞ + (ε₀ − ε∞) ω₀² / (ω₀² + ξ²), with ε∞ = 1.035, ε₀ = 11.87,
/// ω₀ = 6.6×10¹⁵ rad/s. Used to generate the bundled intrinsic table.
pub fn intrinsic_silicon_oscillator(xi: f64) -> f64 {
    const EPS_INF: f64 = 1.035;
    const EPS_STATIC: f64 = 11.87;
    const OMEGA_0: f64 = 6.6e15;
    EPS_INF + (EPS_STATIC - EPS_INF) * OMEGA_0 * OMEGA_0 / (OMEGA_0 * OMEGA_0 + xi * xi)
}

/// Intrinsic silicon table sampled log-uniformly from the oscillator model,
/// 40 points per decade over [10¹⁰, 10¹⁸] rad/s.
pub fn intrinsic_silicon_table() -> EpsilonTable {
    let points = (0..=320)
        .map(|i| {
            let xi = 10f64.powf(10.0 + i as f64 / 40.0);
            (xi, intrinsic_silicon_oscillator(xi))
        })
        .collect();
    EpsilonTable::new(points).expect("oscillator model is monotone and ≥ 1")
}

/// Doped silicon: tabulated intrinsic part plus a Drude term.
#[derive(Debug, Clone, PartialEq)]
pub struct DrudeLorentzSilicon {
    pub drude: DrudeParams,
    pub intrinsic: EpsilonTable,
}

/// ε(iξ) evaluation result; perfect conductors are a flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permittivity {
    Finite(f64),
    PerfectConductor,
}

impl Permittivity {
    pub fn value(self) -> Option<f64> {
        match self {
            Permittivity::Finite(v) => Some(v),
            Permittivity::PerfectConductor => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DielectricModel {
    PerfectConductor,
    Drude(DrudeParams),
    DrudeLorentz(DrudeLorentzSilicon),
    Tabulated(EpsilonTable),
    /// Frequency-independent ε ≥ 1 (vacuum is `Constant(1.0)`).
    Constant(f64),
}

impl DielectricModel {
    pub fn gold_drude() -> Self {
        DielectricModel::Drude(DrudeParams::gold())
    }

    /// Doped silicon with the bundled intrinsic table and ω_p = 1.36×10¹⁴ rad/s,
    /// γ = 4.75×10¹³ rad/s.
    pub fn silicon_doped() -> Self {
        DielectricModel::DrudeLorentz(DrudeLorentzSilicon {
            drude: DrudeParams::doped_silicon(),
            intrinsic: intrinsic_silicon_table(),
        })
    }

    pub fn is_perfect_conductor(&self) -> bool {
        matches!(self, DielectricModel::PerfectConductor)
    }

    pub fn epsilon(&self, xi: f64) -> Result<Permittivity> {
        epsilon_at_imaginary_frequency(self, xi)
    }
}

pub fn epsilon_at_imaginary_frequency(model: &DielectricModel, xi: f64) -> Result<Permittivity> {
    if !(xi > 0.0) {
        return Err(Error::domain(format!("imaginary frequency must be positive, got {xi:e}")));
    }
    let eps = match model {
        DielectricModel::PerfectConductor => return Ok(Permittivity::PerfectConductor),
        DielectricModel::Drude(p) => 1.0 + p.term(xi),
        DielectricModel::DrudeLorentz(s) => s.intrinsic.eval(xi)? + s.drude.term(xi),
        DielectricModel::Tabulated(t) => t.eval(xi)?,
        DielectricModel::Constant(e) => *e,
    };
    Ok(Permittivity::Finite(eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gold_at_nine_ev() {
        let gold = DielectricModel::gold_drude();
        let xi = ev_to_rad_per_s(9.0);
        let eps = gold.epsilon(xi).unwrap().value().unwrap();
        // 1 + 81 / (9 × 9.035)
        assert!((eps - 1.996_126_175_982_291).abs() < 1e-9, "{eps}");
    }

    #[test]
    fn drude_tends_to_one() {
        let gold = DielectricModel::gold_drude();
        let eps = gold.epsilon(1e22).unwrap().value().unwrap();
        assert!((eps - 1.0).abs() < 1e-11);
    }

    #[test]
    fn silicon_drude_term_at_plasma_frequency() {
        let si = DrudeParams::doped_silicon();
        assert!((si.term(1.36e14) - 1.36 / 1.835).abs() < 1e-12);
        let model = DielectricModel::silicon_doped();
        let DielectricModel::DrudeLorentz(s) = &model else { unreachable!() };
        let total = model.epsilon(1.36e14).unwrap().value().unwrap();
        let intrinsic = s.intrinsic.eval(1.36e14).unwrap();
        assert!((total - intrinsic - 0.741_144_414_168_937_3).abs() < 1e-9);
    }

    #[test]
    fn non_positive_frequency_is_a_domain_error() {
        let gold = DielectricModel::gold_drude();
        assert!(matches!(gold.epsilon(0.0), Err(Error::Domain(_))));
        assert!(matches!(gold.epsilon(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn perfect_conductor_is_a_flag() {
        let pc = DielectricModel::PerfectConductor;
        assert_eq!(pc.epsilon(1e15).unwrap(), Permittivity::PerfectConductor);
    }

    #[test]
    fn table_parsing_and_validation() {
        let t = EpsilonTable::parse("# xi eps\n1e12 11.0\n1e13 10.5\n").unwrap();
        assert_eq!(t.len(), 2);
        let err = EpsilonTable::parse("1e12 11.0\n1e13 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = EpsilonTable::parse("1e12 11.0\n1e13 abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = EpsilonTable::parse("1e12 11.0\n1e12 10.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn table_interpolation_is_exact_at_knots_and_log_linear_between() {
        let t = EpsilonTable::new(vec![(1e12, 11.0), (1e14, 9.0), (1e16, 2.0)]).unwrap();
        for (xi, eps) in [(1e12, 11.0), (1e14, 9.0), (1e16, 2.0)] {
            assert_eq!(t.eval(xi).unwrap(), eps);
        }
        assert!((t.eval(1e13).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(t.eval(1e10).unwrap(), 11.0);
        assert!((t.eval(1e17).unwrap() - 1.01).abs() < 1e-12);
        let mut strict = t.clone();
        strict.extrapolate = false;
        assert!(matches!(strict.eval(1e17), Err(Error::Range { .. })));
    }

    #[test]
    fn bundled_intrinsic_table_matches_oscillator_at_midpoints() {
        let t = intrinsic_silicon_table();
        let (lo, hi) = t.span();
        assert!(lo <= 1e10 && hi >= 1e18);
        let knots: Vec<_> = t.knots().collect();
        for pair in knots.windows(2) {
            let mid = (pair[0].0 * pair[1].0).sqrt();
            let rel = (t.eval(mid).unwrap() / intrinsic_silicon_oscillator(mid) - 1.0).abs();
            assert!(rel < 1e-3, "midpoint {mid:e}: {rel}");
        }
    }
}
