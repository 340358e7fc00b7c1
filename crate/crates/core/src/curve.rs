//! Sampled force / force-gradient curves and their CSV form.
//!
//! CSV layout: `#`-prefixed metadata lines (`# key: value`), then a header
//! row `z_nm,value,unit,label`, then one row per sample.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ForceCurve {
    /// Separations, m.
    pub z: Vec<f64>,
    pub values: Vec<f64>,
    pub unit: String,
    pub label: String,
    /// Ordered provenance metadata, written as the CSV header block.
    pub metadata: Vec<(String, String)>,
}

impl ForceCurve {
    pub fn new(z: Vec<f64>, values: Vec<f64>, unit: impl Into<String>, label: impl Into<String>) -> Self {
        assert_eq!(z.len(), values.len(), "curve columns must have equal length");
        Self {
            z,
            values,
            unit: unit.into(),
            label: label.into(),
            metadata: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z.iter().copied().zip(self.values.iter().copied())
    }

    pub fn map_values(&self, f: impl Fn(f64, f64) -> f64, unit: &str, label: &str) -> ForceCurve {
        let values = self.points().map(|(z, v)| f(z, v)).collect();
        ForceCurve {
            z: self.z.clone(),
            values,
            unit: unit.into(),
            label: label.into(),
            metadata: self.metadata.clone(),
        }
    }

    /// CSV body only (header row and samples), the part compared for
    /// reproducibility.
    pub fn csv_body(&self) -> String {
        let mut out = String::from("z_nm,value,unit,label\n");
        for (z, v) in self.points() {
            writeln!(out, "{},{:.12e},{},{}", format_nm(z), v, self.unit, self.label).expect("string write");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}").expect("string write");
        }
        out.push_str(&self.csv_body());
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(parent) = path.as_ref().parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut z = Vec::new();
        let mut values = Vec::new();
        let mut unit = String::new();
        let mut label = String::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once(':') {
                    metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with("z_nm") {
                    continue;
                }
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected at least z_nm,value".into(),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("not a number: {s:?}"),
                })
            };
            z.push(num(cols[0])? * 1e-9);
            values.push(num(cols[1])?);
            if let Some(u) = cols.get(2) {
                unit = u.to_string();
            }
            if let Some(l) = cols.get(3) {
                label = l.to_string();
            }
        }
        Ok(Self {
            z,
            values,
            unit,
            label,
            metadata,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn format_nm(z: f64) -> String {
    let nm = z * 1e9;
    let rounded = (nm * 1e6).round() / 1e6;
    format!("{rounded}")
}

/// Hex SHA-256 of a text blob; used to stamp outputs with their inputs.
pub fn inputs_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Shape-preserving monotone cubic (Fritsch-Carlson) interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Validation("interpolant needs ≥ 2 points of equal-length columns".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("interpolation abscissae must be strictly increasing".into()));
        }
        let n = x.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            if a * b <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // weighted harmonic mean (Fritsch-Butland / PCHIP)
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        Ok(Self { x, y, slopes })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().expect("non-empty"))
    }

    pub fn eval(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&t) {
            return None;
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, self.x.len() - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s).powi(2),
            s * (1.0 - s).powi(2),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        Some(h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_preserves_samples() {
        let c = ForceCurve::new(vec![100e-9, 125e-9], vec![1.5e-3, -2.0e-4], "N/m", "flat")
            .with_meta("quadrature", "48x48");
        let text = c.to_csv();
        assert!(text.starts_with("# quadrature: 48x48\nz_nm,value,unit,label\n100,"));
        let back = ForceCurve::from_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back.z[1] - 125e-9).abs() < 1e-20);
        assert!((back.values[0] - 1.5e-3).abs() < 1e-15);
        assert_eq!(back.unit, "N/m");
        assert_eq!(back.metadata, vec![("quadrature".to_string(), "48x48".to_string())]);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(inputs_hash("abc").len(), 64);
        assert_eq!(inputs_hash("abc"), inputs_hash("abc"));
    }

    #[test]
    fn monotone_cubic_does_not_overshoot() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![10.0, 9.9, 2.0, 1.9, 1.8];
        let f = MonotoneCubic::new(x, y).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let v = f.eval(i as f64 / 100.0).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert_eq!(f.eval(2.0), Some(2.0));
        assert_eq!(f.eval(4.5), None);
    }
}
