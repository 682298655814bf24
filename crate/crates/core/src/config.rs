// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration files.
//!
//! A configuration is a TOML document with the sections `[model]`,
//! `[controls]`, `[integrator]`, `[sweep]` and `[output]`. Unknown keys are
//! rejected. Plain numbers share one unit of rate, which with the default
//! `gamma_ph = 1` is the photon bandwidth. Rates in `[model]` may instead
//! carry a frequency suffix (`"10 MHz"`); then `gamma_ph` must carry one
//! too, and every rate is converted to units of `gamma_ph`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::controls::DEFAULT_HALF_WINDOW;
use crate::dynamics::{IntegratorConfig, Method, Tolerances};
use crate::error::{Error, Result};
use crate::molecule::MoleculeConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlsSection {
    /// Half-width of the protocol window in units of `1/γ_ph`.
    pub half_window: f64,
    pub gamma1_csv: Option<PathBuf>,
    pub gamma2_csv: Option<PathBuf>,
    pub g1_csv: Option<PathBuf>,
    pub g2_csv: Option<PathBuf>,
    pub gamma_a_csv: Option<PathBuf>,
}

impl Default for ControlsSection {
    fn default() -> Self {
        ControlsSection {
            half_window: DEFAULT_HALF_WINDOW,
            gamma1_csv: None,
            gamma2_csv: None,
            g1_csv: None,
            g2_csv: None,
            gamma_a_csv: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt: Option<f64>,
    pub method: Method,
    pub record_stride: Option<usize>,
    pub trace_dev: f64,
    pub min_eig: f64,
    pub herm: f64,
    pub leakage: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let t = Tolerances::default();
        IntegratorSection {
            dt: None,
            method: Method::RK4Fixed,
            record_stride: None,
            trace_dev: t.trace_dev,
            min_eig: t.min_eig,
            herm: t.herm,
            leakage: t.leakage,
        }
    }
}

impl IntegratorSection {
    pub fn to_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            method: self.method,
            record_stride: self.record_stride,
            tolerances: Tolerances {
                trace_dev: self.trace_dev,
                min_eig: self.min_eig,
                herm: self.herm,
                leakage: self.leakage,
                ..Tolerances::default()
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `eta`, `detuning_distance` or `bandwidth`.
    pub name: Option<String>,
    pub eta_grid: Option<Vec<f64>>,
    /// `(ω₂ - ω₁)/γ_ph`
    pub detuning_grid: Option<Vec<f64>>,
    /// `d/λ`
    pub distance_grid: Option<Vec<f64>>,
    /// `γ_ph/γ`
    pub bandwidth_grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("chiralwg-out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: MoleculeConfig,
    pub controls: ControlsSection,
    pub integrator: IntegratorSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

pub const SECTIONS: [&str; 5] = ["model", "controls", "integrator", "sweep", "output"];

/// Keys accepted in each section, in lookup order for bare `--set` keys.
pub fn section_keys(section: &str) -> &'static [&'static str] {
    match section {
        "model" => &[
            "design",
            "gamma",
            "gamma_ph",
            "omega_p_d_over_pi",
            "delta1",
            "delta2",
            "eta",
            "fock_cutoff",
            "include_ancilla",
            "include_idle_qubits",
        ],
        "controls" => &["half_window", "gamma1_csv", "gamma2_csv", "g1_csv", "g2_csv", "gamma_a_csv"],
        "integrator" => &["dt", "method", "record_stride", "trace_dev", "min_eig", "herm", "leakage"],
        "sweep" => &["name", "eta_grid", "detuning_grid", "distance_grid", "bandwidth_grid"],
        "output" => &["dir"],
        _ => &[],
    }
}

const RATE_KEYS: [&str; 4] = ["gamma", "gamma_ph", "delta1", "delta2"];

/// `(section, key)` for a `--set` key written as `key` or `section.key`.
pub fn resolve_key(key: &str) -> Result<(&'static str, String)> {
    if let Some((section, name)) = key.split_once('.') {
        let section = SECTIONS
            .iter()
            .find(|s| **s == section)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown section `{section}` in key `{key}`")))?;
        if !section_keys(section).contains(&name) {
            return Err(Error::InvalidConfig(format!("unknown key `{key}`")));
        }
        return Ok((section, name.to_string()));
    }
    SECTIONS
        .iter()
        .find(|s| section_keys(s).contains(&key))
        .map(|s| (*s, key.to_string()))
        .ok_or_else(|| Error::InvalidConfig(format!("unknown key `{key}`")))
}

/// Parses the right-hand side of `--set key=value` as a TOML value, falling
/// back to a plain string.
pub fn parse_value(raw: &str) -> Value {
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

pub fn apply_override(doc: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("override `{assignment}` is not key=value")))?;
    let (section, name) = resolve_key(key.trim())?;
    let entry = doc.entry(section.to_string()).or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(name, parse_value(raw.trim()));
            Ok(())
        }
        _ => Err(Error::InvalidConfig(format!("`{section}` is not a table"))),
    }
}

fn unit_factor(unit: &str) -> Option<f64> {
    match unit {
        "Hz" => Some(1.0),
        "kHz" => Some(1e3),
        "MHz" => Some(1e6),
        "GHz" => Some(1e9),
        _ => None,
    }
}

/// `"10 MHz"` → `1e7`.
fn parse_with_unit(key: &str, s: &str) -> Result<f64> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(s.len());
    let (number, unit) = s.split_at(split);
    let value: f64 =
        number.trim().parse().map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot read a number from `{s}`")))?;
    let factor = unit_factor(unit.trim())
        .ok_or_else(|| Error::InvalidConfig(format!("`{key}`: unknown unit `{}`", unit.trim())))?;
    Ok(value * factor)
}

/// Replaces suffixed rates in `[model]` by numbers in units of `gamma_ph`.
fn resolve_units(doc: &mut Table) -> Result<()> {
    let Some(Value::Table(model)) = doc.get_mut("model") else {
        return Ok(());
    };
    let reference = match model.get("gamma_ph") {
        Some(Value::String(s)) => Some(parse_with_unit("gamma_ph", s)?),
        _ => None,
    };
    for key in RATE_KEYS {
        if let Some(Value::String(s)) = model.get(key) {
            let Some(reference) = reference else {
                return Err(Error::InvalidConfig(format!("`{key}` has a unit suffix but `gamma_ph` does not")));
            };
            let value = parse_with_unit(key, s)?;
            model.insert(key.to_string(), Value::Float(value / reference));
        }
    }
    Ok(())
}

impl RunConfig {
    /// Parses a document, applies `--set` overrides in order, and validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: Table = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().trim().to_string()))?;
        for section in doc.keys() {
            if !SECTIONS.contains(&section.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown section `{section}`")));
            }
        }
        for assignment in overrides {
            apply_override(&mut doc, assignment)?;
        }
        resolve_units(&mut doc)?;
        let config: RunConfig = Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.message().trim().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.integrator.to_config().validate()?;
        if !(self.controls.half_window > 0.0 && self.controls.half_window.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "half_window must be positive, got {}",
                self.controls.half_window
            )));
        }
        Ok(())
    }

    /// The effective configuration as TOML; parsing it back gives `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
