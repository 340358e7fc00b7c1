//! Unit-suffixed quantity parsing for config files and CLI arguments.
//!
//! Every physical quantity in a config carries its unit (`depth = 98nm`,
//! `plasma_frequency = 9eV`). Values are converted to SI on parse.

use crate::constants::ev_to_rad_per_s;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    /// Angular frequency in rad/s; photon energies are accepted and converted.
    AngularFrequency,
    Frequency,
    Voltage,
    Angle,
    /// Calibration constant of the frequency-shift model, m N⁻¹ s⁻¹.
    FrequencyPerGradient,
    Dimensionless,
}

fn scale(dim: Dimension, unit: &str) -> Option<Box<dyn Fn(f64) -> f64>> {
    let linear = |s: f64| -> Option<Box<dyn Fn(f64) -> f64>> { Some(Box::new(move |v| v * s)) };
    match dim {
        Dimension::Length => match unit {
            "m" => linear(1.0),
            "mm" => linear(1e-3),
            "um" | "μm" | "µm" => linear(1e-6),
            "nm" => linear(1e-9),
            "pm" => linear(1e-12),
            "A" | "Å" => linear(1e-10),
            _ => None,
        },
        Dimension::AngularFrequency => match unit {
            "rad/s" => linear(1.0),
            "eV" => Some(Box::new(ev_to_rad_per_s)),
            "meV" => Some(Box::new(|v| ev_to_rad_per_s(v * 1e-3))),
            _ => None,
        },
        Dimension::Frequency => match unit {
            "Hz" => linear(1.0),
            "kHz" => linear(1e3),
            "MHz" => linear(1e6),
            _ => None,
        },
        Dimension::Voltage => match unit {
            "V" => linear(1.0),
            "mV" => linear(1e-3),
            _ => None,
        },
        Dimension::Angle => match unit {
            "deg" | "°" => linear(1.0),
            "rad" => linear(180.0 / std::f64::consts::PI),
            _ => None,
        },
        Dimension::FrequencyPerGradient => match unit {
            "m/N/s" | "m/(N*s)" | "mN-1s-1" => linear(1.0),
            _ => None,
        },
        Dimension::Dimensionless => match unit {
            "" => linear(1.0),
            _ => None,
        },
    }
}

/// Splits `"98nm"` / `"98 nm"` / `"-0.499V"` into number and unit text.
fn split_number(text: &str) -> Result<(f64, &str)> {
    let text = text.trim();
    let end = text
        .char_indices()
        .find(|&(i, c)| {
            let prev = text[..i].chars().last();
            let is_exp_sign = (c == '+' || c == '-') && matches!(prev, Some('e') | Some('E'));
            let is_exp = (c == 'e' || c == 'E')
                && text[i + 1..]
                    .chars()
                    .next()
                    .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+');
            !(c.is_ascii_digit() || c == '.' || (i == 0 && (c == '-' || c == '+')) || is_exp_sign || is_exp)
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let value: f64 = text[..end]
        .parse()
        .map_err(|_| Error::Config(format!("not a number: {text:?}")))?;
    Ok((value, text[end..].trim()))
}

/// Parses a quantity to SI (angles are returned in degrees).
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let (value, unit) = split_number(text)?;
    if unit.is_empty() && dim != Dimension::Dimensionless {
        return Err(Error::Config(format!("quantity {text:?} is missing a unit")));
    }
    let convert = scale(dim, unit)
        .ok_or_else(|| Error::Config(format!("unit {unit:?} is not a valid {dim:?} unit")))?;
    Ok(convert(value))
}

/// Parses `start:stop:step<unit>` into an inclusive grid (SI).
pub fn parse_range(text: &str, dim: Dimension) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("range {text:?} must be start:stop:step<unit>")));
    }
    let (step, unit) = split_number(parts[2])?;
    let with_unit = |p: &str| -> Result<f64> {
        let (v, u) = split_number(p)?;
        let u = if u.is_empty() { unit } else { u };
        parse_quantity(&format!("{v}{u}"), dim)
    };
    let start = with_unit(parts[0])?;
    let stop = with_unit(parts[1])?;
    let step = parse_quantity(&format!("{step}{unit}"), dim)?;
    if step <= 0.0 || stop < start {
        return Err(Error::Config(format!("range {text:?} is empty or has a non-positive step")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Parses a range or a comma list of quantities (`100nm, 150nm`).
pub fn parse_grid(text: &str, dim: Dimension) -> Result<Vec<f64>> {
    if text.contains(':') {
        return parse_range(text, dim);
    }
    text.split(',').map(|v| parse_quantity(v.trim(), dim)).collect()
}

/// Parses `a:b:step` of plain integers.
pub fn parse_int_range(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<usize> = text
        .split(':')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bad integer range {text:?}")))?;
    match parts.as_slice() {
        [a, b, s] if *s > 0 && b >= a => Ok((*a..=*b).step_by(*s).collect()),
        [a, b] if b >= a => Ok((*a..=*b).collect()),
        _ => Err(Error::Config(format!("bad integer range {text:?}"))),
    }
}
