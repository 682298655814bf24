// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Parameter sweeps over grids of molecule settings.
//!
//! Grid points are independent protocol runs. They are distributed over a
//! dedicated thread pool and gathered back in grid order, so the result does
//! not depend on the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::molecule::MoleculeConfig;
use crate::observables::{Direction, MetricSet};
use crate::protocols::{run_protocol, Protocol, ProtocolOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Eta,
    Delta1,
    Delta2,
    OmegaPDOverPi,
    GammaPh,
    /// `(ω₂ - ω₁)/γ_ph`, split symmetrically as `δ₁ = -Δ/2`, `δ₂ = +Δ/2`.
    DetuningDifference,
    /// `d/λ = ω_p d / 2π`.
    DistanceOverLambda,
    /// `γ_ph/γ` at fixed `γ_ph`.
    BandwidthRatio,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Delta1 => "delta1",
            SweepParam::Delta2 => "delta2",
            SweepParam::OmegaPDOverPi => "omega_p_d_over_pi",
            SweepParam::GammaPh => "gamma_ph",
            SweepParam::DetuningDifference => "detuning_difference",
            SweepParam::DistanceOverLambda => "distance_over_lambda",
            SweepParam::BandwidthRatio => "bandwidth_ratio",
        }
    }

    pub fn apply(self, config: &mut MoleculeConfig, value: f64) {
        match self {
            SweepParam::Eta => config.eta = value,
            SweepParam::Delta1 => config.delta1 = value,
            SweepParam::Delta2 => config.delta2 = value,
            SweepParam::OmegaPDOverPi => config.omega_p_d_over_pi = value,
            SweepParam::GammaPh => config.gamma_ph = value,
            SweepParam::DetuningDifference => {
                config.delta1 = -0.5 * value * config.gamma_ph;
                config.delta2 = 0.5 * value * config.gamma_ph;
            }
            SweepParam::DistanceOverLambda => config.omega_p_d_over_pi = 2.0 * value,
            SweepParam::BandwidthRatio => config.gamma = config.gamma_ph / value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Self {
        Axis { param, values }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub protocol: Protocol,
    pub direction: Direction,
    pub base: MoleculeConfig,
    pub options: ProtocolOptions,
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::InvalidConfig("a sweep needs at least one axis".into()));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::InvalidConfig(format!("axis `{}` has no values", axis.param.name())));
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("axis `{}` holds {v}", axis.param.name())));
            }
        }
        if self.protocol == Protocol::Absorption {
            return Err(Error::InvalidConfig("sweeps run emission or transmission".into()));
        }
        Ok(())
    }

    /// Grid coordinates in row-major order, last axis fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub coords: Vec<f64>,
    pub metrics: Option<MetricSet>,
    pub healthy: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn all_healthy(&self) -> bool {
        self.points.iter().all(|p| p.healthy && p.error.is_none())
    }

    /// Values of one metric; flagged or failed points give `None`.
    pub fn metric(&self, pick: impl Fn(&MetricSet) -> Option<f64>) -> Vec<Option<f64>> {
        self.points.iter().map(|p| if p.healthy { p.metrics.as_ref().and_then(&pick) } else { None }).collect()
    }
}

fn run_point(spec: &SweepSpec, index: usize, coords: Vec<f64>) -> SweepPoint {
    let mut config = spec.base.clone();
    for (axis, &v) in spec.axes.iter().zip(&coords) {
        axis.param.apply(&mut config, v);
    }
    match run_protocol(spec.protocol, &config, spec.direction, &spec.options) {
        Ok(report) => SweepPoint {
            index,
            coords,
            healthy: report.health.healthy,
            error: report.health.violation.clone(),
            metrics: Some(report.metrics),
        },
        Err(e) => SweepPoint { index, coords, metrics: None, healthy: false, error: Some(e.to_string()) },
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let points: Vec<(usize, Vec<f64>)> = spec.points().into_iter().enumerate().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut results: Vec<SweepPoint> =
        pool.install(|| points.into_par_iter().map(|(i, c)| run_point(spec, i, c)).collect());
    results.sort_by_key(|p| p.index);
    Ok(SweepResult { axes: spec.axes.iter().map(|a| a.param.name().to_string()).collect(), points: results })
}

fn emission_spec(base: &MoleculeConfig, axes: Vec<Axis>, options: &ProtocolOptions, workers: usize) -> SweepSpec {
    SweepSpec {
        axes,
        protocol: Protocol::Emission,
        direction: Direction::Right,
        base: base.clone(),
        options: options.clone(),
        workers,
    }
}

/// Directionality against the cancellation factor.
pub fn sweep_eta(
    base: &MoleculeConfig,
    grid: &[f64],
    options: &ProtocolOptions,
    workers: usize,
) -> Result<SweepResult> {
    if let Some(v) = grid.iter().find(|v| !(0.0..=2.0).contains(*v)) {
        return Err(Error::InvalidConfig(format!("eta grid value {v} outside [0, 2]")));
    }
    run_sweep(&emission_spec(base, vec![Axis::new(SweepParam::Eta, grid.to_vec())], options, workers))
}

/// Directionality map over detuning difference (in units of `γ_ph`) and
/// element spacing (in wavelengths).
pub fn sweep_detuning_distance(
    base: &MoleculeConfig,
    detuning: &[f64],
    distance: &[f64],
    options: &ProtocolOptions,
    workers: usize,
) -> Result<SweepResult> {
    if let Some(v) = distance.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::InvalidConfig(format!("distance grid value {v} outside (0, 1]")));
    }
    let axes = vec![
        Axis::new(SweepParam::DetuningDifference, detuning.to_vec()),
        Axis::new(SweepParam::DistanceOverLambda, distance.to_vec()),
    ];
    run_sweep(&emission_spec(base, axes, options, workers))
}

/// Transmission metrics against `γ_ph/γ`.
pub fn sweep_bandwidth(
    base: &MoleculeConfig,
    ratios: &[f64],
    options: &ProtocolOptions,
    workers: usize,
) -> Result<SweepResult> {
    if let Some(v) = ratios.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::InvalidConfig(format!("bandwidth ratio {v} outside (0, 1)")));
    }
    run_sweep(&SweepSpec {
        axes: vec![Axis::new(SweepParam::BandwidthRatio, ratios.to_vec())],
        protocol: Protocol::Transmission,
        direction: Direction::Right,
        base: base.clone(),
        options: options.clone(),
        workers,
    })
}

pub fn default_eta_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 10.0).collect()
}

pub fn default_detuning_grid() -> Vec<f64> {
    (0..41).map(|k| (k as f64 - 20.0) / 1000.0).collect()
}

pub fn default_distance_grid() -> Vec<f64> {
    (0..41).map(|k| (80.0 + k as f64) / 400.0).collect()
}

pub fn default_bandwidth_grid() -> Vec<f64> {
    let (lo, hi): (f64, f64) = (0.05, 0.99);
    let mut grid: Vec<f64> = (0..20).map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / 19.0).exp()).collect();
    grid[0] = lo;
    grid[19] = hi;
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast() -> ProtocolOptions {
        ProtocolOptions { amplitudes: false, ..ProtocolOptions::default() }
    }

    #[test]
    fn default_grids() {
        assert_eq!(default_eta_grid().len(), 21);
        assert_eq!(default_eta_grid()[10], 1.0);
        let det = default_detuning_grid();
        assert_eq!((det.len(), det[0], det[40], det[20]), (41, -0.02, 0.02, 0.0));
        let dist = default_distance_grid();
        assert_eq!((dist.len(), dist[0], dist[40], dist[20]), (41, 0.2, 0.3, 0.25));
        let bw = default_bandwidth_grid();
        assert_eq!((bw.len(), bw[0], bw[19]), (20, 0.05, 0.99));
        assert!(bw.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn parameters_apply() {
        let mut cfg = MoleculeConfig::qubit_resonator();
        SweepParam::DetuningDifference.apply(&mut cfg, 0.008);
        assert_eq!((cfg.delta1, cfg.delta2), (-0.004, 0.004));
        SweepParam::DistanceOverLambda.apply(&mut cfg, 0.23);
        assert!((cfg.omega_p_d_over_pi - 0.46).abs() < 1e-15);
        SweepParam::BandwidthRatio.apply(&mut cfg, 0.25);
        assert_eq!(cfg.gamma, 4.0);
    }

    #[test]
    fn grid_points_are_row_major() {
        let spec = emission_spec(
            &MoleculeConfig::two_qubit(),
            vec![Axis::new(SweepParam::Delta1, vec![1.0, 2.0]), Axis::new(SweepParam::Delta2, vec![3.0, 4.0, 5.0])],
            &fast(),
            1,
        );
        let pts = spec.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![1.0, 4.0]);
        assert_eq!(pts[3], vec![2.0, 3.0]);
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let base = MoleculeConfig::two_qubit();
        assert!(sweep_eta(&base, &[2.5], &fast(), 1).is_err());
        assert!(sweep_detuning_distance(&base, &[0.0], &[0.0], &fast(), 1).is_err());
        assert!(sweep_bandwidth(&base, &[1.0], &fast(), 1).is_err());
        let spec = emission_spec(&base, vec![Axis::new(SweepParam::Eta, vec![])], &fast(), 1);
        assert!(run_sweep(&spec).is_err());
        let spec = emission_spec(&base, vec![Axis::new(SweepParam::Eta, vec![f64::NAN])], &fast(), 1);
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn failed_points_carry_their_error() {
        let spec = emission_spec(
            &MoleculeConfig::qubit_resonator(),
            vec![Axis::new(SweepParam::GammaPh, vec![1.0, 20.0])],
            &fast(),
            2,
        );
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.points.len(), 2);
        assert!(result.points[0].healthy && result.points[0].error.is_none());
        let bad = &result.points[1];
        assert!(!bad.healthy && bad.metrics.is_none());
        assert!(bad.error.as_deref().unwrap().contains("BandwidthTooLarge"));
        assert!(!result.all_healthy());
        assert_eq!(result.metric(|m| m.directionality)[1], None);
    }

    #[test]
    fn eta_peak_at_full_cancellation() {
        for base in [MoleculeConfig::two_qubit(), MoleculeConfig::qubit_resonator()] {
            let grid = [0.8, 0.9, 1.0, 1.1, 1.2];
            let r = sweep_eta(&base, &grid, &fast(), 2).unwrap();
            let p: Vec<f64> = r.metric(|m| m.directionality).into_iter().map(Option::unwrap).collect();
            assert!(p[2] >= 0.999);
            assert!(p.iter().all(|&x| x <= p[2]));
            assert!((p[1] - p[2] + 0.005).abs() <= 0.005);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let base = MoleculeConfig::two_qubit();
        let det = [-0.01, 0.0, 0.01];
        let dist = [0.22, 0.25];
        let one = sweep_detuning_distance(&base, &det, &dist, &fast(), 1).unwrap();
        let four = sweep_detuning_distance(&base, &det, &dist, &fast(), 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.points.iter().map(|p| p.index).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn detuning_map_is_symmetric_under_relabeling() {
        // swapping the elements maps Δ → -Δ, ψ₊ → ψ₋ and right → left
        let base = MoleculeConfig::qubit_resonator();
        let det = [-0.015, -0.005, 0.005, 0.015];
        let dist = [0.23, 0.26];
        let right = sweep_detuning_distance(&base, &det, &dist, &fast(), 2).unwrap();
        let axes = vec![
            Axis::new(SweepParam::DetuningDifference, det.iter().map(|d| -d).collect()),
            Axis::new(SweepParam::DistanceOverLambda, dist.to_vec()),
        ];
        let left =
            run_sweep(&SweepSpec { direction: Direction::Left, ..emission_spec(&base, axes, &fast(), 2) }).unwrap();
        let (p, q) = (right.metric(|m| m.directionality), left.metric(|m| m.directionality));
        for (a, b) in p.iter().zip(&q) {
            assert!((a.unwrap() - b.unwrap()).abs() <= 1e-6, "{a:?} {b:?}");
        }
    }

    #[test]
    fn nominal_spacing_is_even_in_detuning() {
        let base = MoleculeConfig::two_qubit();
        let r = sweep_detuning_distance(&base, &[-0.008, 0.008], &[0.25], &fast(), 2).unwrap();
        let p = r.metric(|m| m.directionality);
        assert!((p[0].unwrap() - p[1].unwrap()).abs() <= 1e-6);
        assert!((p[0].unwrap() - 0.99).abs() <= 0.005);
    }
}
