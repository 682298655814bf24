// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Time-dependent control waveforms.
//!
//! The single-photon target is the time-symmetric sech wave packet
//! `φ(t) = ½√γ_ph sech(γ_ph t / 2)`. Two modulations release exactly this
//! envelope from a single stored excitation:
//!
//! * a directly tunable emission rate, [`gamma_modulation`], used for the
//!   bare two-qubit molecule and for the ancilla photon source;
//! * a tunable qubit–resonator coupling behind a resonator of fixed rate γ,
//!   [`g_modulation`].
//!
//! Absorption uses the time-reversed modulation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::molecule::{Design, MoleculeConfig};

/// Default half-width of the protocol window, in units of `1/γ_ph`.
///
/// The sech² flux mass beyond `T` on one side is `(1 - tanh(γ_ph T/2))/2
/// ≈ e^{-γ_ph T}`; `T = 21/γ_ph` keeps it below 1e-9.
pub const DEFAULT_HALF_WINDOW: f64 = 21.0;

fn check_bandwidth(gamma_ph: f64) -> Result<()> {
    if !(gamma_ph > 0.0) || !gamma_ph.is_finite() {
        return Err(Error::NonPositiveBandwidth(gamma_ph));
    }
    Ok(())
}

/// Photon amplitude envelope `φ(t) = ½√γ_ph sech(γ_ph t/2)`, normalized so
/// that `∫|φ|² dt = 1`.
pub fn sech_envelope(t: f64, gamma_ph: f64) -> Result<f64> {
    check_bandwidth(gamma_ph)?;
    Ok(sech_unchecked(t, gamma_ph))
}

fn sech_unchecked(t: f64, gamma_ph: f64) -> f64 {
    0.5 * gamma_ph.sqrt() / (0.5 * gamma_ph * t).cosh()
}

/// Emission rate that makes a lone emitter, starting fully excited, release
/// the sech envelope: `γ(t) = |φ(t)|² / ∫_t^∞ |φ|² = (γ_ph/2)(1 + tanh(γ_ph t/2))`.
///
/// Evaluated in the bounded `1 + tanh` form; the equivalent
/// `sech²/(1 - tanh)` quotient degenerates to 0/0 for large positive `t`.
pub fn gamma_modulation(t: f64, gamma_ph: f64) -> Result<f64> {
    check_bandwidth(gamma_ph)?;
    Ok(gamma_mod_unchecked(t, gamma_ph))
}

fn gamma_mod_unchecked(t: f64, gamma_ph: f64) -> f64 {
    0.5 * gamma_ph * (1.0 + (0.5 * gamma_ph * t).tanh())
}

/// Qubit–resonator coupling that shapes the sech envelope through a
/// resonator leaking at the constant rate `gamma`:
///
/// `g(t) = γ_ph/(4cosh(γ_ph t/2)) · [1 - e^{γ_ph t} + (1 + e^{γ_ph t})γ/γ_ph]
///         / √((1 + e^{γ_ph t})γ/γ_ph - e^{γ_ph t})`.
///
/// Requires `gamma_ph < gamma`. Tends to 0 as `t → -∞` and to
/// `√(γ_ph(γ - γ_ph))/2` as `t → +∞`.
pub fn g_modulation(t: f64, gamma_ph: f64, gamma: f64) -> Result<f64> {
    check_bandwidth(gamma_ph)?;
    if !(gamma_ph < gamma) {
        return Err(Error::BandwidthTooLarge { gamma_ph, gamma });
    }
    Ok(g_mod_unchecked(t, gamma_ph, gamma))
}

fn g_mod_unchecked(t: f64, gamma_ph: f64, gamma: f64) -> f64 {
    let x = gamma_ph * t;
    let r = gamma / gamma_ph;
    if x <= 0.0 {
        let e = x.exp();
        gamma_ph / (4.0 * (0.5 * x).cosh()) * ((1.0 + r) + e * (r - 1.0)) / (r + e * (r - 1.0)).sqrt()
    } else {
        // numerator and radicand divided through by e^{x}
        let e = (-x).exp();
        gamma_ph * ((r - 1.0) + e * (r + 1.0)) / (2.0 * (1.0 + e) * ((1.0 + e) * r - 1.0).sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WaveformKind {
    SechEnvelope {
        gamma_ph: f64,
    },
    GammaModulation {
        gamma_ph: f64,
    },
    GModulation {
        gamma_ph: f64,
        gamma: f64,
    },
    TimeReversed(Box<Waveform>),
    /// Uniform grid starting at `t0`; linear interpolation, clamped outside.
    Tabulated {
        t0: f64,
        step: f64,
        values: Vec<f64>,
    },
    Scaled {
        factor: f64,
        inner: Box<Waveform>,
    },
    Constant(f64),
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    kind: WaveformKind,
    domain: (f64, f64),
}

impl Waveform {
    pub fn sech_envelope(gamma_ph: f64, domain: (f64, f64)) -> Result<Self> {
        check_bandwidth(gamma_ph)?;
        Ok(Waveform { kind: WaveformKind::SechEnvelope { gamma_ph }, domain })
    }

    pub fn gamma_modulation(gamma_ph: f64, domain: (f64, f64)) -> Result<Self> {
        check_bandwidth(gamma_ph)?;
        Ok(Waveform { kind: WaveformKind::GammaModulation { gamma_ph }, domain })
    }

    pub fn g_modulation(gamma_ph: f64, gamma: f64, domain: (f64, f64)) -> Result<Self> {
        g_modulation(0.0, gamma_ph, gamma)?;
        Ok(Waveform { kind: WaveformKind::GModulation { gamma_ph, gamma }, domain })
    }

    pub fn constant(value: f64, domain: (f64, f64)) -> Self {
        Waveform { kind: WaveformKind::Constant(value), domain }
    }

    pub fn zero(domain: (f64, f64)) -> Self {
        Waveform { kind: WaveformKind::Zero, domain }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Waveform { kind: WaveformKind::Scaled { factor, inner: Box::new(self.clone()) }, domain: self.domain }
    }

    pub fn tabulated(t0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if !(step > 0.0) && values.len() > 1 {
            return Err(Error::NonUniformGrid);
        }
        let end = t0 + step * (values.len() - 1) as f64;
        Ok(Waveform { kind: WaveformKind::Tabulated { t0, step, values }, domain: (t0, end) })
    }

    /// Reads a two-column `t,value` CSV on a uniform time grid. A header row
    /// is allowed.
    pub fn from_csv(path: &Path) -> std::result::Result<Self, CsvWaveformError> {
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_path(path)?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(CsvWaveformError::Format(format!(
                    "row {}: expected 2 columns, found {}",
                    row + 1,
                    record.len()
                )));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(t), Ok(v)) => {
                    times.push(t);
                    values.push(v);
                }
                // header
                _ if row == 0 => continue,
                _ => return Err(CsvWaveformError::Format(format!("row {}: not a number", row + 1))),
            }
        }
        if times.is_empty() {
            return Err(CsvWaveformError::Format("no samples".into()));
        }
        let step = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
        let span = (times[times.len() - 1] - times[0]).abs().max(step.abs());
        for (k, &t) in times.iter().enumerate() {
            if (t - (times[0] + k as f64 * step)).abs() > 1e-9 * span {
                return Err(CsvWaveformError::Format("time grid is not uniform".into()));
            }
        }
        Ok(Waveform::tabulated(times[0], step, values)?)
    }

    pub fn kind(&self) -> &WaveformKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            WaveformKind::Zero => true,
            WaveformKind::Constant(v) => *v == 0.0,
            WaveformKind::Scaled { factor, inner } => *factor == 0.0 || inner.is_zero(),
            WaveformKind::TimeReversed(inner) => inner.is_zero(),
            WaveformKind::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
            _ => false,
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match &self.kind {
            WaveformKind::SechEnvelope { gamma_ph } => sech_unchecked(t, *gamma_ph),
            WaveformKind::GammaModulation { gamma_ph } => gamma_mod_unchecked(t, *gamma_ph),
            WaveformKind::GModulation { gamma_ph, gamma } => g_mod_unchecked(t, *gamma_ph, *gamma),
            WaveformKind::TimeReversed(inner) => inner.evaluate(-t),
            WaveformKind::Tabulated { t0, step, values } => interpolate(*t0, *step, values, t),
            WaveformKind::Scaled { factor, inner } => factor * inner.evaluate(t),
            WaveformKind::Constant(v) => *v,
            WaveformKind::Zero => 0.0,
        }
    }

    /// `t ↦ w(-t)` with the mirrored domain. Reversing twice returns the
    /// original waveform.
    pub fn time_reverse(&self) -> Waveform {
        match &self.kind {
            WaveformKind::TimeReversed(inner) => (**inner).clone(),
            _ => Waveform {
                kind: WaveformKind::TimeReversed(Box::new(self.clone())),
                domain: (-self.domain.1, -self.domain.0),
            },
        }
    }
}

fn interpolate(t0: f64, step: f64, values: &[f64], t: f64) -> f64 {
    let last = values.len() - 1;
    if last == 0 || t <= t0 {
        return values[0];
    }
    let pos = (t - t0) / step;
    if pos >= last as f64 {
        return values[last];
    }
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    values[k] * (1.0 - frac) + values[k + 1] * frac
}

#[derive(Debug, thiserror::Error)]
pub enum CsvWaveformError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Waveform(#[from] Error),
}

/// Names of the individual control channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    Gamma1,
    Gamma2,
    G1,
    G2,
    GammaA,
    /// Cancellation strength before the η scaling.
    Gc,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Gamma1 => "gamma1",
            Channel::Gamma2 => "gamma2",
            Channel::G1 => "g1",
            Channel::G2 => "g2",
            Channel::GammaA => "gamma_a",
            Channel::Gc => "g_c",
        }
    }
}

/// Waveforms driving one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    pub gamma1: Option<Waveform>,
    pub gamma2: Option<Waveform>,
    pub g1: Option<Waveform>,
    pub g2: Option<Waveform>,
    pub gamma_a: Option<Waveform>,
    pub g_c: Option<Waveform>,
    pub domain: (f64, f64),
}

impl ControlSet {
    pub fn empty(domain: (f64, f64)) -> Self {
        ControlSet { gamma1: None, gamma2: None, g1: None, g2: None, gamma_a: None, g_c: None, domain }
    }

    /// Symmetric window `[-T/γ_ph, T/γ_ph]`.
    pub fn window(config: &MoleculeConfig, half_window: f64) -> (f64, f64) {
        let half = half_window / config.gamma_ph;
        (-half, half)
    }

    pub fn get(&self, channel: Channel) -> Option<&Waveform> {
        match channel {
            Channel::Gamma1 => self.gamma1.as_ref(),
            Channel::Gamma2 => self.gamma2.as_ref(),
            Channel::G1 => self.g1.as_ref(),
            Channel::G2 => self.g2.as_ref(),
            Channel::GammaA => self.gamma_a.as_ref(),
            Channel::Gc => self.g_c.as_ref(),
        }
    }

    pub fn set(&mut self, channel: Channel, waveform: Option<Waveform>) {
        let slot = match channel {
            Channel::Gamma1 => &mut self.gamma1,
            Channel::Gamma2 => &mut self.gamma2,
            Channel::G1 => &mut self.g1,
            Channel::G2 => &mut self.g2,
            Channel::GammaA => &mut self.gamma_a,
            Channel::Gc => &mut self.g_c,
        };
        *slot = waveform;
    }

    pub fn require(&self, channel: Channel) -> Result<&Waveform> {
        self.get(channel).ok_or(Error::MissingWaveform(channel.name()))
    }

    /// Value of a channel; absent channels read as zero.
    pub fn value(&self, channel: Channel, t: f64) -> f64 {
        self.get(channel).map_or(0.0, |w| w.evaluate(t))
    }

    /// Controls that release one photon with the sech envelope from the
    /// molecule. The ancilla, when present, stays idle.
    pub fn emission(config: &MoleculeConfig, half_window: f64) -> Result<Self> {
        let domain = Self::window(config, half_window);
        let mut set = Self::empty(domain);
        match config.design {
            Design::TwoQubit => {
                let rate = Waveform::gamma_modulation(config.gamma_ph, domain)?;
                // -|J| for d = λ/4 and equal rates
                set.g_c = Some(rate.scaled(-0.5));
                set.gamma1 = Some(rate.clone());
                set.gamma2 = Some(rate);
            }
            Design::QubitResonator => {
                let g = Waveform::g_modulation(config.gamma_ph, config.gamma, domain)?;
                set.g1 = Some(g.clone());
                set.g2 = Some(g);
                set.g_c = Some(Waveform::constant(-0.5 * config.gamma, domain));
            }
        }
        if config.include_ancilla {
            set.gamma_a = Some(Waveform::zero(domain));
        }
        Ok(set)
    }

    /// Time mirror of [`ControlSet::emission`] for the molecule, with the
    /// ancilla emitting the sech photon that the molecule absorbs.
    pub fn absorption(config: &MoleculeConfig, half_window: f64) -> Result<Self> {
        let emission = Self::emission(config, half_window)?;
        let mut set = emission.time_reversed();
        set.gamma_a = Some(Waveform::gamma_modulation(config.gamma_ph, set.domain)?);
        Ok(set)
    }

    /// Molecule elements decoupled from their storage (`g ≡ 0`, or `γ ≡ 0` for
    /// the bare qubits) while the ancilla sends the sech photon.
    pub fn transmission(config: &MoleculeConfig, half_window: f64) -> Result<Self> {
        let domain = Self::window(config, half_window);
        let mut set = Self::empty(domain);
        match config.design {
            Design::TwoQubit => {
                set.gamma1 = Some(Waveform::zero(domain));
                set.gamma2 = Some(Waveform::zero(domain));
                set.g_c = Some(Waveform::zero(domain));
            }
            Design::QubitResonator => {
                set.g1 = Some(Waveform::zero(domain));
                set.g2 = Some(Waveform::zero(domain));
                set.g_c = Some(Waveform::constant(-0.5 * config.gamma, domain));
            }
        }
        set.gamma_a = Some(Waveform::gamma_modulation(config.gamma_ph, domain)?);
        Ok(set)
    }

    /// Every waveform replaced by its time reversal.
    pub fn time_reversed(&self) -> Self {
        let rev = |w: &Option<Waveform>| w.as_ref().map(Waveform::time_reverse);
        ControlSet {
            gamma1: rev(&self.gamma1),
            gamma2: rev(&self.gamma2),
            g1: rev(&self.g1),
            g2: rev(&self.g2),
            gamma_a: rev(&self.gamma_a),
            g_c: rev(&self.g_c),
            domain: (-self.domain.1, -self.domain.0),
        }
    }
}
