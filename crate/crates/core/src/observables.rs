// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Input–output observables and figures of merit.
//!
//! The outgoing fields are `b_R = b_in + c_R` and `b_L = c_L`, so with the
//! input in vacuum the fluxes are `n = ⟨c†c⟩` and the coherent amplitudes
//! `β = -i⟨c⟩`. The field states are never represented.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::controls::ControlSet;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linop::{Operator, ZERO};
use crate::molecule::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Right,
    Left,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxSeries {
    pub times: Vec<f64>,
    pub n_r: Vec<f64>,
    pub n_l: Vec<f64>,
    pub beta_r: Vec<C64>,
    pub beta_l: Vec<C64>,
    /// Excitation number of each subsystem, keyed by layout label.
    pub populations: Vec<(String, Vec<f64>)>,
}

impl FluxSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn population(&self, label: &str) -> Option<&[f64]> {
        self.populations.iter().find(|(l, _)| l == label).map(|(_, v)| v.as_slice())
    }

    pub fn flux(&self, direction: Direction) -> &[f64] {
        match direction {
            Direction::Right => &self.n_r,
            Direction::Left => &self.n_l,
        }
    }

    pub fn amplitude(&self, direction: Direction) -> &[C64] {
        match direction {
            Direction::Right => &self.beta_r,
            Direction::Left => &self.beta_l,
        }
    }
}

/// Probabilities and fidelities of one protocol run. Fields that do not apply
/// to a protocol are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub p_r: f64,
    pub p_l: f64,
    pub directionality: Option<f64>,
    pub pulse_fidelity: Option<f64>,
    pub state_fidelity: Option<f64>,
    pub transmittance: Option<f64>,
    pub reflectance: Option<f64>,
    pub group_delay_est: Option<f64>,
    /// `(P_R + P_L)` relative to the injected photon, for absorption.
    pub scattered_fraction: Option<f64>,
}

impl MetricSet {
    pub const NAMES: [&'static str; 9] = [
        "p_r",
        "p_l",
        "directionality",
        "pulse_fidelity",
        "state_fidelity",
        "transmittance",
        "reflectance",
        "group_delay_est",
        "scattered_fraction",
    ];

    pub fn values(&self) -> [Option<f64>; 9] {
        [
            Some(self.p_r),
            Some(self.p_l),
            self.directionality,
            self.pulse_fidelity,
            self.state_fidelity,
            self.transmittance,
            self.reflectance,
            self.group_delay_est,
            self.scattered_fraction,
        ]
    }
}

/// Fluxes, amplitudes and populations along a trajectory of `model`.
pub fn flux_and_amplitude(traj: &Trajectory, model: &Model, controls: &ControlSet) -> Result<FluxSeries> {
    if traj.dim != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trajectory of dimension {} against a model of dimension {}",
            traj.dim,
            model.dim()
        )));
    }
    if let Some(layout) = &traj.layout {
        if layout != &model.layout {
            return Err(Error::DimensionMismatch("trajectory layout differs from the model".into()));
        }
    }
    let restrict = |parts: &[(crate::molecule::Coefficient, Operator)]| -> Vec<_> {
        parts.iter().map(|(c, op)| (c.clone(), traj.restrict(op))).collect()
    };
    let right = restrict(&model.c_right.parts);
    let left = restrict(&model.c_left.parts);
    let n = traj.support.len();
    let combine = |parts: &[(crate::molecule::Coefficient, Operator)], t: f64| {
        let mut c = Operator::zeros(n);
        for (coeff, op) in parts {
            c.add_scaled(coeff.eval(controls, t), op);
        }
        c
    };

    let digits: Vec<Vec<usize>> = traj.support.iter().map(|&i| model.layout.digits(i)).collect();
    let labels: Vec<String> = model.layout.labels().map(str::to_string).collect();

    let mut fs = FluxSeries {
        times: traj.times.clone(),
        n_r: Vec::with_capacity(traj.len()),
        n_l: Vec::with_capacity(traj.len()),
        beta_r: Vec::with_capacity(traj.len()),
        beta_l: Vec::with_capacity(traj.len()),
        populations: labels.iter().map(|l| (l.clone(), Vec::with_capacity(traj.len()))).collect(),
    };
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let cr = combine(&right, *t);
        let cl = combine(&left, *t);
        let (nr, br) = flux_pair(rho, &cr);
        let (nl, bl) = flux_pair(rho, &cl);
        fs.n_r.push(nr);
        fs.n_l.push(nl);
        fs.beta_r.push(br);
        fs.beta_l.push(bl);
        for (s, (_, series)) in fs.populations.iter_mut().enumerate() {
            let pop: f64 = digits.iter().enumerate().map(|(k, d)| d[s] as f64 * rho[(k, k)].re).sum();
            series.push(pop);
        }
    }
    Ok(fs)
}

/// `(⟨c†c⟩, -i⟨c⟩)`
fn flux_pair(rho: &Operator, c: &Operator) -> (f64, C64) {
    let n = rho.dim();
    let mut flux = 0.0;
    let mut mean = ZERO;
    for i in 0..n {
        for m in 0..n {
            let cim = c[(i, m)];
            if cim == ZERO {
                continue;
            }
            mean += cim * rho[(m, i)];
            // Tr(c ρ c†) = Σ c_im ρ_mk conj(c_ik)
            for k in 0..n {
                flux += (cim * rho[(m, k)] * c[(i, k)].conj()).re;
            }
        }
    }
    (flux, C64::new(mean.im, -mean.re))
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::EmptySeries);
    }
    if times.len() == 1 {
        return Ok(0.0);
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let tol = 1e-9 * h.abs().max(f64::MIN_POSITIVE);
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > tol.max(1e-12 * (times[0].abs() + k as f64 * h.abs())) {
            return Err(Error::NonUniformGrid);
        }
    }
    Ok(h)
}

/// Trapezoidal rule on a uniform grid.
pub fn trapezoid(times: &[f64], values: &[f64]) -> Result<f64> {
    if values.len() != times.len() {
        return Err(Error::DimensionMismatch("times and values differ in length".into()));
    }
    let h = check_uniform(times)?;
    if values.len() == 1 {
        return Ok(0.0);
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    Ok(h * (inner + 0.5 * (values[0] + values[values.len() - 1])))
}

fn trapezoid_weights(len: usize, h: f64) -> impl Iterator<Item = f64> {
    (0..len).map(move |k| if k == 0 || k + 1 == len { 0.5 * h } else { h })
}

/// Running trapezoidal integral, starting from zero.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let h = check_uniform(times)?;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    Ok(out)
}

/// `(P_R, P_L) = (∫n_R, ∫n_L)`.
pub fn emission_probabilities(fs: &FluxSeries) -> Result<(f64, f64)> {
    Ok((trapezoid(&fs.times, &fs.n_r)?, trapezoid(&fs.times, &fs.n_l)?))
}

pub fn directionality(p_r: f64, p_l: f64, intended: Direction) -> Result<f64> {
    let total = p_r + p_l;
    if !(total > 1e-12) {
        return Err(Error::NoEmission(total));
    }
    let p = match intended {
        Direction::Right => p_r,
        Direction::Left => p_l,
    };
    Ok((p / total).clamp(0.0, 1.0))
}

fn interpolate(times: &[f64], values: &[C64], t: f64) -> C64 {
    let (t0, t1) = (times[0], times[times.len() - 1]);
    if t < t0 || t > t1 || times.len() < 2 {
        return ZERO;
    }
    let h = (t1 - t0) / (times.len() - 1) as f64;
    let pos = (t - t0) / h;
    let k = (pos.floor() as usize).min(times.len() - 2);
    let frac = pos - k as f64;
    values[k] * (1.0 - frac) + values[k + 1] * frac
}

/// Mode overlap `|∫ φ*(t) β(t + shift) dt|²` of the measured amplitude and the
/// target, both normalized on the grid. Samples shifted past the end of the
/// measured series count as zero.
pub fn pulse_fidelity(times: &[f64], measured: &[C64], target: &[C64], shift: f64) -> Result<f64> {
    if measured.len() != times.len() || target.len() != times.len() {
        return Err(Error::DimensionMismatch("series lengths differ".into()));
    }
    let h = check_uniform(times)?;
    let shifted: Vec<C64> = if shift == 0.0 {
        measured.to_vec()
    } else {
        times.iter().map(|&t| interpolate(times, measured, t + shift)).collect()
    };
    let w: Vec<f64> = trapezoid_weights(times.len(), h).collect();
    let norm = |v: &[C64]| v.iter().zip(&w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>();
    let (nm, nt) = (norm(&shifted), norm(target));
    if !(nm > 0.0) || !(nt > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let overlap: C64 = target.iter().zip(&shifted).zip(&w).map(|((p, b), w)| p.conj() * b * *w).sum();
    Ok((overlap.norm_sqr() / (nm * nt)).clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩`
pub fn state_fidelity(rho: &Operator, target: &[C64]) -> Result<f64> {
    if rho.dim() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} against a target of length {}",
            rho.dim(),
            target.len()
        )));
    }
    let v = rho.apply(target);
    let f: C64 = target.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    Ok(f.re)
}

/// All-pass transmission `S = (γ/2 + iΔ)/(γ/2 - iΔ)` through the two
/// resonators and its phase, continued from `θ(0) = 0`. The phase rises
/// monotonically from `-π` to `π`.
pub fn transmission_spectrum(offset: f64, gamma: f64) -> (C64, f64) {
    let half = 0.5 * gamma;
    let s = C64::new(half, offset) / C64::new(half, -offset);
    (s, 2.0 * (offset / half).atan())
}

/// `dθ/dΔ` at resonance.
pub fn group_delay(gamma: f64) -> f64 {
    4.0 / gamma
}

/// Lag maximizing the cross-correlation `Σ in(t)·out(t + τ)`, refined by a
/// parabola through the peak and its neighbours.
pub fn group_delay_estimate(times: &[f64], input: &[f64], output: &[f64]) -> Result<f64> {
    if input.len() != times.len() || output.len() != times.len() {
        return Err(Error::DimensionMismatch("series lengths differ".into()));
    }
    let h = check_uniform(times)?;
    let flat = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        !(hi - lo > 1e-300)
    };
    if flat(input) || flat(output) {
        return Err(Error::DegenerateSeries("flat flux series".into()));
    }
    let n = times.len() as isize;
    let corr = |lag: isize| -> f64 {
        let (start, end) = (0.max(-lag), n.min(n - lag));
        (start..end).map(|k| input[k as usize] * output[(k + lag) as usize]).sum()
    };
    let mut best = (0isize, f64::NEG_INFINITY);
    for lag in -(n - 1)..n {
        let c = corr(lag);
        if c > best.1 {
            best = (lag, c);
        }
    }
    let (lag, c0) = best;
    let mut frac = 0.0;
    if lag > -(n - 1) && lag < n - 1 {
        let (cm, cp) = (corr(lag - 1), corr(lag + 1));
        let denom = cm - 2.0 * c0 + cp;
        if denom < 0.0 {
            frac = 0.5 * (cm - cp) / denom;
        }
    }
    Ok((lag as f64 + frac) * h)
}
