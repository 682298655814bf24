// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end emission, absorption and transmission runs.
//!
//! Each protocol integrates two initial states on the same grid. The first
//! holds exactly one excitation and yields fluxes, populations and
//! probabilities. The second adds a vacuum component, `(|0⟩ + |1⟩)/√2`, so
//! that `⟨c⟩` is nonzero and the emitted wave packet's amplitude and phase
//! can be read off. Because the vacuum is stationary, twice the amplitude of
//! the second run equals the single-photon wave function of the first.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::controls::{sech_envelope, Channel, ControlSet, DEFAULT_HALF_WINDOW};
use crate::dynamics::{integrate_model, IntegratorConfig, Monitor, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::linop::{partial_trace, Operator, ZERO};
use crate::molecule::{prepare_state, psi_two_qubit, Design, Model, MoleculeConfig, StateKind, Q1, Q2};
use crate::observables::{
    directionality, emission_probabilities, flux_and_amplitude, group_delay, group_delay_estimate, pulse_fidelity,
    state_fidelity, trapezoid, Direction, FluxSeries, MetricSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Emission,
    Absorption,
    Transmission,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Emission => "emission",
            Protocol::Absorption => "absorption",
            Protocol::Transmission => "transmission",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    /// Half-width of the window in units of `1/γ_ph`.
    pub half_window: f64,
    pub integrator: IntegratorConfig,
    /// Also run the vacuum-superposition state for amplitudes and pulse
    /// fidelity. Sweeps that only need probabilities switch it off.
    pub amplitudes: bool,
    /// Replaces the generated controls, e.g. with tabulated waveforms.
    pub controls: Option<ControlSet>,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            half_window: DEFAULT_HALF_WINDOW,
            integrator: IntegratorConfig::default(),
            amplitudes: true,
            controls: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub healthy: bool,
    pub violation: Option<String>,
    pub worst: Monitor,
}

impl Health {
    fn from_runs(runs: &[&Trajectory]) -> Self {
        let mut worst = Monitor { trace_dev: 0.0, min_eig: f64::INFINITY, herm: 0.0, leakage: 0.0 };
        let mut violation = None;
        for traj in runs {
            let w = traj.worst();
            worst.trace_dev = worst.trace_dev.max(w.trace_dev);
            worst.min_eig = worst.min_eig.min(w.min_eig);
            worst.herm = worst.herm.max(w.herm);
            worst.leakage = worst.leakage.max(w.leakage);
            if violation.is_none() {
                violation = traj.violation.as_ref().map(|e| e.to_string());
            }
        }
        Health { healthy: violation.is_none(), violation, worst }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub config: MoleculeConfig,
    pub controls: ControlSet,
    pub flux: FluxSeries,
    /// `|φ(t)|²` on the report grid, for absorption and transmission.
    pub input_flux: Option<Vec<f64>>,
    pub metrics: MetricSet,
    /// Reduced state of the two qubits, or of the resonators when the
    /// qubits are not part of the space.
    pub final_molecule_state: Operator,
    pub oracle_deviation: Option<f64>,
    /// Per-sample monitors of the single-excitation run.
    pub monitors: Vec<Monitor>,
    pub health: Health,
    pub dt: f64,
}

impl ProtocolReport {
    pub fn gate(&self) -> Result<()> {
        match &self.health.violation {
            Some(v) => Err(Error::ToleranceViolation { t: f64::NAN, what: v.clone() }),
            None => Ok(()),
        }
    }
}

struct Runs {
    model: Model,
    controls: ControlSet,
    main: Trajectory,
    flux: FluxSeries,
    companion: Option<Trajectory>,
}

fn run_pair(
    config: &MoleculeConfig,
    controls: ControlSet,
    initial: StateKind,
    companion: StateKind,
    opts: &ProtocolOptions,
) -> Result<Runs> {
    let model = Model::new(config, &controls)?;
    let span = controls.domain;
    let rho0 = prepare_state(initial, &model.layout)?;
    let main = integrate_model(&rho0, &model, &controls, span, &opts.integrator)?;
    let mut flux = flux_and_amplitude(&main, &model, &controls)?;
    let companion = if opts.amplitudes {
        let rho1 = prepare_state(companion, &model.layout)?;
        let traj = integrate_model(&rho1, &model, &controls, span, &opts.integrator)?;
        let amp = flux_and_amplitude(&traj, &model, &controls)?;
        flux.beta_r = amp.beta_r.iter().map(|b| b * 2.0).collect();
        flux.beta_l = amp.beta_l.iter().map(|b| b * 2.0).collect();
        Some(traj)
    } else {
        flux.beta_r = vec![ZERO; flux.len()];
        flux.beta_l = vec![ZERO; flux.len()];
        None
    };
    Ok(Runs { model, controls, main, flux, companion })
}

impl Runs {
    fn health(&self) -> Health {
        let mut runs = vec![&self.main];
        if let Some(c) = &self.companion {
            runs.push(c);
        }
        Health::from_runs(&runs)
    }

    fn molecule_state(&self) -> Result<Operator> {
        let rho = self.main.final_state();
        let layout = &self.model.layout;
        if layout.contains(Q1) && layout.contains(Q2) {
            partial_trace(&rho, layout, &[Q1, Q2])
        } else {
            partial_trace(&rho, layout, &[crate::molecule::R1, crate::molecule::R2])
        }
    }

    fn sech_target(&self) -> Vec<C64> {
        let gph = self.model.config.gamma_ph;
        self.flux.times.iter().map(|&t| C64::new(sech_envelope(t, gph).unwrap_or(0.0), 0.0)).collect()
    }

    fn input_flux(&self) -> Vec<f64> {
        self.sech_target().iter().map(|z| z.norm_sqr()).collect()
    }
}

fn controls_or(opts: &ProtocolOptions, build: impl FnOnce() -> Result<ControlSet>) -> Result<ControlSet> {
    match &opts.controls {
        Some(c) => Ok(c.clone()),
        None => build(),
    }
}

/// Releases one photon from `ψ₊` (rightwards) or `ψ₋` (leftwards).
pub fn run_emission(config: &MoleculeConfig, direction: Direction, opts: &ProtocolOptions) -> Result<ProtocolReport> {
    let controls = controls_or(opts, || ControlSet::emission(config, opts.half_window))?;
    let (initial, companion) = match direction {
        Direction::Right => (StateKind::PsiPlus, StateKind::VacuumPlusPsiPlus),
        Direction::Left => (StateKind::PsiMinus, StateKind::VacuumPlusPsiMinus),
    };
    let runs = run_pair(config, controls, initial, companion, opts)?;
    let (p_r, p_l) = emission_probabilities(&runs.flux)?;
    let pulse = if opts.amplitudes {
        Some(pulse_fidelity(&runs.flux.times, runs.flux.amplitude(direction), &runs.sech_target(), 0.0)?)
    } else {
        None
    };
    let metrics = MetricSet {
        p_r,
        p_l,
        directionality: Some(directionality(p_r, p_l, direction)?),
        pulse_fidelity: pulse,
        ..MetricSet::default()
    };
    let oracle_deviation = if config.include_ancilla {
        None
    } else {
        let c0 = initial_amplitudes(direction);
        let (dt, stride) = opts.integrator.resolve(runs.model.max_rate(), config.gamma_ph);
        let grid = TimeGrid::new(runs.controls.domain, dt, stride)?;
        let oracle = single_excitation_oracle(config, &runs.controls, c0, &grid)?;
        Some(flux_deviation(&runs.flux, &oracle))
    };
    Ok(ProtocolReport {
        protocol: Protocol::Emission,
        config: config.clone(),
        final_molecule_state: runs.molecule_state()?,
        health: runs.health(),
        monitors: runs.main.monitors.clone(),
        dt: runs.main.dt,
        controls: runs.controls,
        flux: runs.flux,
        input_flux: None,
        metrics,
        oracle_deviation,
    })
}

/// Sup-norm distance between two flux series on the same grid.
pub fn flux_deviation(a: &FluxSeries, b: &FluxSeries) -> f64 {
    let sup = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    sup(&a.n_r, &b.n_r).max(sup(&a.n_l, &b.n_l))
}

fn initial_amplitudes(direction: Direction) -> [C64; 2] {
    let psi = psi_two_qubit(direction == Direction::Right);
    // ordered |gg⟩, |ge⟩, |eg⟩, |ee⟩: q1 excited is index 2
    [psi[2], psi[1]]
}

/// The molecule absorbs a sech photon sent by the ancilla and should end in
/// `ψ₊`.
pub fn run_absorption(config: &MoleculeConfig, opts: &ProtocolOptions) -> Result<ProtocolReport> {
    let config = MoleculeConfig { include_ancilla: true, ..config.clone() };
    let controls = controls_or(opts, || ControlSet::absorption(&config, opts.half_window))?;
    let runs = run_pair(&config, controls, StateKind::AncillaExcited, StateKind::AncillaSuperposition, opts)?;
    let (p_r, p_l) = emission_probabilities(&runs.flux)?;
    let input = runs.input_flux();
    let injected = trapezoid(&runs.flux.times, &input)?;
    let molecule = runs.molecule_state()?;
    let fidelity = if molecule.dim() == 4 { Some(state_fidelity(&molecule, &psi_two_qubit(true))?) } else { None };
    let metrics = MetricSet {
        p_r,
        p_l,
        state_fidelity: fidelity,
        scattered_fraction: Some((p_r + p_l) / injected),
        ..MetricSet::default()
    };
    Ok(ProtocolReport {
        protocol: Protocol::Absorption,
        config,
        final_molecule_state: molecule,
        health: runs.health(),
        monitors: runs.main.monitors.clone(),
        dt: runs.main.dt,
        controls: runs.controls,
        flux: runs.flux,
        input_flux: Some(input),
        metrics,
        oracle_deviation: None,
    })
}

/// Sends a sech photon past the molecule with the qubits decoupled.
pub fn run_transmission(config: &MoleculeConfig, opts: &ProtocolOptions) -> Result<ProtocolReport> {
    let config = MoleculeConfig { include_ancilla: true, ..config.clone() };
    let controls = controls_or(opts, || ControlSet::transmission(&config, opts.half_window))?;
    let runs = run_pair(&config, controls, StateKind::AncillaExcited, StateKind::AncillaSuperposition, opts)?;
    let (p_r, p_l) = emission_probabilities(&runs.flux)?;
    let input = runs.input_flux();
    let delay = match config.design {
        Design::QubitResonator => group_delay(config.gamma),
        Design::TwoQubit => 0.0,
    };
    let pulse = if opts.amplitudes {
        Some(pulse_fidelity(&runs.flux.times, &runs.flux.beta_r, &runs.sech_target(), delay)?)
    } else {
        None
    };
    let metrics = MetricSet {
        p_r,
        p_l,
        transmittance: Some(p_r),
        reflectance: Some(p_l),
        group_delay_est: Some(group_delay_estimate(&runs.flux.times, &input, &runs.flux.n_r)?),
        pulse_fidelity: pulse,
        ..MetricSet::default()
    };
    Ok(ProtocolReport {
        protocol: Protocol::Transmission,
        config,
        final_molecule_state: runs.molecule_state()?,
        health: runs.health(),
        monitors: runs.main.monitors.clone(),
        dt: runs.main.dt,
        controls: runs.controls,
        flux: runs.flux,
        input_flux: Some(input),
        metrics,
        oracle_deviation: None,
    })
}

pub fn run_protocol(
    protocol: Protocol,
    config: &MoleculeConfig,
    direction: Direction,
    opts: &ProtocolOptions,
) -> Result<ProtocolReport> {
    match protocol {
        Protocol::Emission => run_emission(config, direction, opts),
        Protocol::Absorption => run_absorption(config, opts),
        Protocol::Transmission => run_transmission(config, opts),
    }
}

/// Fluxes from the amplitude equations of the single-excitation manifold,
/// integrated with a separate RK4 on `grid`.
///
/// `c0` holds the initial amplitudes of the two emitters (the qubits); the
/// resonators of the `QubitResonator` design start empty.
pub fn single_excitation_oracle(
    config: &MoleculeConfig,
    controls: &ControlSet,
    c0: [C64; 2],
    grid: &TimeGrid,
) -> Result<FluxSeries> {
    if config.include_ancilla {
        return Err(Error::OracleUnsupported("the amplitude equations exclude the ancilla".into()));
    }
    config.validate()?;
    let theta = config.theta();
    let (sin, cos) = theta.sin_cos();
    let eta = config.eta;
    let d = [config.delta1, config.delta2];
    let i = C64::i();
    let phase_r = [C64::from_polar(1.0, 0.5 * theta), C64::from_polar(1.0, -0.5 * theta)];

    // state: TwoQubit [c1, c2]; QubitResonator [s1, a1, s2, a2]
    let qr = config.design == Design::QubitResonator;
    let rates = |t: f64| -> [f64; 2] {
        if qr {
            [config.gamma, config.gamma]
        } else {
            [controls.value(Channel::Gamma1, t), controls.value(Channel::Gamma2, t)]
        }
    };
    let deriv = |t: f64, y: &[C64]| -> Vec<C64> {
        let g = rates(t);
        let s = (g[0].max(0.0) * g[1].max(0.0)).sqrt();
        let exch = 0.5 * s * sin + eta * controls.value(Channel::Gc, t);
        let corr = s * cos;
        let field = |a1: C64, a2: C64| {
            [
                -i * d[0] * a1 - i * exch * a2 - 0.5 * g[0] * a1 - 0.5 * corr * a2,
                -i * d[1] * a2 - i * exch * a1 - 0.5 * g[1] * a2 - 0.5 * corr * a1,
            ]
        };
        if qr {
            let (g1, g2) = (controls.value(Channel::G1, t), controls.value(Channel::G2, t));
            let [f1, f2] = field(y[1], y[3]);
            vec![
                -i * d[0] * y[0] - i * g1 * y[1],
                f1 - i * g1 * y[0],
                -i * d[1] * y[2] - i * g2 * y[3],
                f2 - i * g2 * y[2],
            ]
        } else {
            field(y[0], y[1]).to_vec()
        }
    };
    let mut y: Vec<C64> = if qr { vec![c0[0], ZERO, c0[1], ZERO] } else { c0.to_vec() };
    let emitters = |y: &[C64]| if qr { [y[1], y[3]] } else { [y[0], y[1]] };

    let mut fs = FluxSeries {
        times: Vec::new(),
        n_r: Vec::new(),
        n_l: Vec::new(),
        beta_r: Vec::new(),
        beta_l: Vec::new(),
        populations: Vec::new(),
    };
    let mut pops: Vec<Vec<f64>> = vec![Vec::new(); y.len()];
    let mut record = |t: f64, y: &[C64], fs: &mut FluxSeries| {
        let g = rates(t);
        let a = emitters(y);
        let cr = (0.5 * g[0]).max(0.0).sqrt() * phase_r[0] * a[0] + (0.5 * g[1]).max(0.0).sqrt() * phase_r[1] * a[1];
        let cl = (0.5 * g[0]).max(0.0).sqrt() * phase_r[0].conj() * a[0]
            + (0.5 * g[1]).max(0.0).sqrt() * phase_r[1].conj() * a[1];
        fs.times.push(t);
        fs.n_r.push(cr.norm_sqr());
        fs.n_l.push(cl.norm_sqr());
        fs.beta_r.push(-i * cr);
        fs.beta_l.push(-i * cl);
        for (p, z) in pops.iter_mut().zip(y) {
            p.push(z.norm_sqr());
        }
    };
    record(grid.time(0), &y, &mut fs);
    let h = grid.h;
    for k in 0..grid.steps {
        let t = grid.time(k);
        let t_next = grid.time(k + 1);
        let step = t_next - t;
        let k1 = deriv(t, &y);
        let y2: Vec<C64> = y.iter().zip(&k1).map(|(a, b)| a + b * (0.5 * step)).collect();
        let k2 = deriv(t + 0.5 * h, &y2);
        let y3: Vec<C64> = y.iter().zip(&k2).map(|(a, b)| a + b * (0.5 * step)).collect();
        let k3 = deriv(t + 0.5 * h, &y3);
        let y4: Vec<C64> = y.iter().zip(&k3).map(|(a, b)| a + b * step).collect();
        let k4 = deriv(t_next, &y4);
        for (j, v) in y.iter_mut().enumerate() {
            *v += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (step / 6.0);
        }
        if (k + 1) % grid.stride == 0 {
            record(t_next, &y, &mut fs);
        }
    }
    let labels: &[&str] = if qr { &["q1", "r1", "q2", "r2"] } else { &["q1", "q2"] };
    fs.populations = labels.iter().map(|l| l.to_string()).zip(pops).collect();
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::Waveform;
    use crate::dynamics::integrate_model;
    use crate::linop::expectation;
    use crate::observables::cumulative_trapezoid;
    use std::f64::consts::FRAC_PI_4;

    fn emit(config: &MoleculeConfig, direction: Direction) -> ProtocolReport {
        run_emission(config, direction, &ProtocolOptions::default()).unwrap()
    }

    fn transmit(ratio: f64) -> ProtocolReport {
        let cfg = MoleculeConfig { gamma: 1.0 / ratio, ..MoleculeConfig::qubit_resonator() };
        run_transmission(&cfg, &ProtocolOptions::default()).unwrap()
    }

    #[test]
    fn directional_emission_both_designs() {
        for cfg in [MoleculeConfig::two_qubit(), MoleculeConfig::qubit_resonator()] {
            let r = emit(&cfg, Direction::Right);
            assert!(r.health.healthy, "{:?}", r.health);
            let m = &r.metrics;
            assert!(m.directionality.unwrap() >= 0.999);
            assert!(m.pulse_fidelity.unwrap() >= 0.999);
            assert!(m.p_l <= 1e-4);
            assert!(r.oracle_deviation.unwrap() <= 1e-6);
            let peak = r.flux.n_r.iter().cloned().fold(0.0, f64::max);
            assert!(r.flux.n_l.iter().all(|&n| n <= 1e-10 * peak));
        }
    }

    #[test]
    fn no_cancellation_spoils_directionality() {
        let cfg = MoleculeConfig { eta: 0.0, ..MoleculeConfig::two_qubit() };
        let r = emit(&cfg, Direction::Right);
        assert!(r.metrics.directionality.unwrap() < 0.95);
        assert!(r.metrics.p_l > 0.05);
        let q1 = r.flux.population(Q1).unwrap();
        let q2 = r.flux.population(Q2).unwrap();
        let imbalance = q1.iter().zip(q2).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        assert!(imbalance > 0.05, "{imbalance}");
    }

    #[test]
    fn left_emission_mirrors_right() {
        for cfg in [MoleculeConfig::two_qubit(), MoleculeConfig::qubit_resonator()] {
            let cfg = MoleculeConfig { eta: 0.6, ..cfg };
            let right = emit(&cfg, Direction::Right);
            let left = emit(&cfg, Direction::Left);
            for (a, b) in [(&right.flux.n_r, &left.flux.n_l), (&right.flux.n_l, &left.flux.n_r)] {
                let dev = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(dev <= 1e-13, "{dev:e}");
            }
            let (dr, dl) = (right.metrics.directionality.unwrap(), left.metrics.directionality.unwrap());
            assert!((dr - dl).abs() <= 1e-12);
        }
    }

    #[test]
    fn excitation_is_conserved() {
        let cases = [
            run_emission(
                &MoleculeConfig { eta: 0.3, ..MoleculeConfig::two_qubit() },
                Direction::Right,
                &ProtocolOptions::default(),
            ),
            run_emission(&MoleculeConfig::qubit_resonator(), Direction::Left, &ProtocolOptions::default()),
            run_absorption(&MoleculeConfig::qubit_resonator(), &ProtocolOptions::default()),
        ];
        for r in cases {
            let r = r.unwrap();
            let fs = &r.flux;
            let out: Vec<f64> = fs.n_r.iter().zip(&fs.n_l).map(|(a, b)| a + b).collect();
            let emitted = cumulative_trapezoid(&fs.times, &out).unwrap();
            for k in 0..fs.len() {
                let stored: f64 = fs.populations.iter().map(|(_, p)| p[k]).sum();
                assert!((stored + emitted[k] - 1.0).abs() <= 1e-6, "{:?} k={k}", r.protocol);
            }
        }
    }

    #[test]
    fn absorption_with_and_without_cancellation() {
        let r = run_absorption(&MoleculeConfig::qubit_resonator(), &ProtocolOptions::default()).unwrap();
        assert!(r.health.healthy);
        assert!(r.metrics.state_fidelity.unwrap() >= 0.99);
        assert!(r.metrics.scattered_fraction.unwrap() <= 0.01);
        assert_eq!(r.final_molecule_state.dim(), 4);

        let cfg = MoleculeConfig { eta: 0.0, ..MoleculeConfig::qubit_resonator() };
        let r = run_absorption(&cfg, &ProtocolOptions::default()).unwrap();
        assert!(r.metrics.scattered_fraction.unwrap() >= 0.1);
    }

    #[test]
    fn emission_and_absorption_are_reciprocal() {
        let cfg = MoleculeConfig::two_qubit();
        let e = emit(&cfg, Direction::Right);
        let a = run_absorption(&cfg, &ProtocolOptions::default()).unwrap();
        let emit_loss = 1.0 - e.metrics.pulse_fidelity.unwrap();
        let absorb_loss = 1.0 - a.metrics.state_fidelity.unwrap();
        assert!((emit_loss - absorb_loss).abs() <= 1e-3, "{emit_loss:e} {absorb_loss:e}");
    }

    #[test]
    fn ancilla_alone_emits_the_sech_photon() {
        // transmission controls of the two-qubit design switch the qubits off
        let r = run_transmission(&MoleculeConfig::two_qubit(), &ProtocolOptions::default()).unwrap();
        let input = r.input_flux.as_ref().unwrap();
        let dev = r.flux.n_r.iter().zip(input).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-4, "{dev:e}");
        assert!(r.flux.n_l.iter().all(|&n| n.abs() <= 1e-15));
    }

    #[test]
    fn ancilla_feels_no_back_action() {
        // the ancilla population must not depend on what sits downstream
        let alone = run_transmission(&MoleculeConfig::two_qubit(), &ProtocolOptions::default()).unwrap();
        let loaded = run_absorption(&MoleculeConfig::qubit_resonator(), &ProtocolOptions::default()).unwrap();
        let a = alone.flux.population("a").unwrap();
        let b = loaded.flux.population("a").unwrap();
        assert_eq!(a.len(), b.len());
        let dev = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-9, "{dev:e}");
    }

    #[test]
    fn transmission_landmarks() {
        let r = transmit(0.2);
        let m = &r.metrics;
        assert!(r.health.healthy);
        assert!(m.transmittance.unwrap() >= 0.999);
        assert!(m.reflectance.unwrap() <= 1e-4);
        let expected = group_delay(r.config.gamma);
        assert!((m.group_delay_est.unwrap() / expected - 1.0).abs() <= 0.05);

        assert!(transmit(0.5).metrics.pulse_fidelity.unwrap() >= 0.99);

        let r = transmit(1.0);
        assert!((r.metrics.pulse_fidelity.unwrap() - 0.93).abs() <= 0.01);
        assert!(r.metrics.transmittance.unwrap() >= 0.999);
    }

    #[test]
    fn left_resonator_mode_stays_empty_in_transmission() {
        let cfg = MoleculeConfig { gamma: 2.0, include_ancilla: true, ..MoleculeConfig::qubit_resonator() };
        let cs = ControlSet::transmission(&cfg, 21.0).unwrap();
        let model = Model::new(&cfg, &cs).unwrap();
        let rho0 = prepare_state(StateKind::AncillaExcited, &model.layout).unwrap();
        let icfg = IntegratorConfig { record_stride: Some(10), ..Default::default() };
        let traj = integrate_model(&rho0, &model, &cs, cs.domain, &icfg).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mode = |sign: f64| {
            let mut m = model.ops.l1.scale(C64::from_polar(s, sign * FRAC_PI_4));
            m.add_scaled(C64::from_polar(s, -sign * FRAC_PI_4), &model.ops.l2);
            m
        };
        let (left, right) = (mode(-1.0), mode(1.0));
        let occupation = |op: &Operator| {
            let n = &op.dagger() * op;
            (0..traj.len()).map(|k| expectation(&traj.full_state(k), &n).unwrap().re).fold(0.0, f64::max)
        };
        assert!(occupation(&left) <= 1e-8);
        assert!(occupation(&right) > 0.1);
    }

    #[test]
    fn oracle_constant_rate_closed_form() {
        let g = 1.5;
        let domain = (0.0, 6.0);
        let mut cs = ControlSet::empty(domain);
        cs.set(Channel::Gamma1, Some(Waveform::constant(g, domain)));
        cs.set(Channel::Gamma2, Some(Waveform::constant(g, domain)));
        cs.set(Channel::Gc, Some(Waveform::constant(-g / 2.0, domain)));
        let grid = TimeGrid::new(domain, 1e-3, 10).unwrap();
        let fs =
            single_excitation_oracle(&MoleculeConfig::two_qubit(), &cs, initial_amplitudes(Direction::Right), &grid)
                .unwrap();
        for k in 0..fs.len() {
            assert!((fs.n_r[k] - g * (-g * fs.times[k]).exp()).abs() <= 1e-12);
            assert!(fs.n_l[k].abs() <= 1e-15);
        }
    }

    #[test]
    fn oracle_emits_the_target_envelope() {
        let cfg = MoleculeConfig::two_qubit();
        let cs = ControlSet::emission(&cfg, 21.0).unwrap();
        let grid = TimeGrid::new(cs.domain, 2.5e-3, 4).unwrap();
        let fs = single_excitation_oracle(&cfg, &cs, initial_amplitudes(Direction::Right), &grid).unwrap();
        for (t, n) in fs.times.iter().zip(&fs.n_r) {
            let phi = sech_envelope(*t, cfg.gamma_ph).unwrap();
            assert!((n - phi * phi).abs() <= 1e-6, "t={t}");
        }
    }

    #[test]
    fn oracle_rejects_ancilla() {
        let cfg = MoleculeConfig { include_ancilla: true, ..MoleculeConfig::two_qubit() };
        let cs = ControlSet::absorption(&cfg, 21.0).unwrap();
        let grid = TimeGrid::new(cs.domain, 0.01, 1).unwrap();
        let r = single_excitation_oracle(&cfg, &cs, [ZERO, ZERO], &grid);
        assert!(matches!(r, Err(Error::OracleUnsupported(_))));
    }

    #[test]
    fn off_nominal_oracle_agreement() {
        let cfg = MoleculeConfig {
            eta: 0.4,
            omega_p_d_over_pi: 0.56,
            delta1: -0.01,
            delta2: 0.02,
            ..MoleculeConfig::qubit_resonator()
        };
        let opts = ProtocolOptions { amplitudes: false, ..Default::default() };
        let r = run_emission(&cfg, Direction::Right, &opts).unwrap();
        assert!(r.oracle_deviation.unwrap() <= 1e-6);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = MoleculeConfig { eta: 0.8, ..MoleculeConfig::qubit_resonator() };
        let a = emit(&cfg, Direction::Right);
        let b = emit(&cfg, Direction::Right);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.flux, b.flux);
    }
}
