// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Operators, Hamiltonians and dissipators of the two-element molecule.
//!
//! Everything is written in the frame rotating at the photon carrier
//! frequency. The two elements sit at `r₁ = -d/2` and `r₂ = +d/2` so that the
//! plane-wave phases are `ω_p r_j = ∓θ/2` with `θ = ω_p d`. The optional
//! ancilla photon source is placed upstream and couples only to the
//! right-moving mode; its propagation delay is dropped and only its phase
//! factors remain.
//!
//! Generators are stored as lists of constant operators with scalar
//! coefficients built from the control channels, so that evaluating `H(t)`
//! or the dissipators at a new time is a cheap weighted sum.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::controls::{Channel, ControlSet};
use crate::error::{Error, Result};
use crate::linop::{embed, projector, Operator, SpaceLayout, I, ONE, ZERO};

pub const Q1: &str = "q1";
pub const Q2: &str = "q2";
pub const R1: &str = "r1";
pub const R2: &str = "r2";
pub const ANCILLA: &str = "a";

/// Relative size below which a correlated decay rate is treated as absent.
const CORRELATION_CUTOFF: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Two tunable-rate qubits coupled directly to the waveguide.
    TwoQubit,
    /// Each qubit couples through a transfer resonator of fixed rate γ.
    QubitResonator,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::TwoQubit => "two_qubit",
            Design::QubitResonator => "qubit_resonator",
        }
    }
}

/// Physical description of the molecule. Rates are angular frequencies in
/// whatever unit the caller picks; the CLI uses units of `γ_ph`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoleculeConfig {
    pub design: Design,
    /// Resonator rate in the `QubitResonator` design. Unused by `TwoQubit`,
    /// whose rates come from the controls.
    pub gamma: f64,
    pub gamma_ph: f64,
    /// `ω_p d / π`; 0.5 places the elements a quarter wavelength apart.
    pub omega_p_d_over_pi: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub eta: f64,
    pub fock_cutoff: usize,
    pub include_ancilla: bool,
    pub include_idle_qubits: bool,
}

impl Default for MoleculeConfig {
    fn default() -> Self {
        Self::qubit_resonator()
    }
}

impl MoleculeConfig {
    pub fn qubit_resonator() -> Self {
        MoleculeConfig {
            design: Design::QubitResonator,
            gamma: 10.0,
            gamma_ph: 1.0,
            omega_p_d_over_pi: 0.5,
            delta1: 0.0,
            delta2: 0.0,
            eta: 1.0,
            fock_cutoff: 3,
            include_ancilla: false,
            include_idle_qubits: false,
        }
    }

    pub fn two_qubit() -> Self {
        MoleculeConfig { design: Design::TwoQubit, ..Self::qubit_resonator() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_ph > 0.0) || !self.gamma_ph.is_finite() {
            return Err(Error::NonPositiveBandwidth(self.gamma_ph));
        }
        if self.design == Design::QubitResonator && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(0.0..=2.0).contains(&self.eta) {
            return Err(Error::InvalidConfig(format!("eta must lie in [0, 2], got {}", self.eta)));
        }
        if !(self.omega_p_d_over_pi > 0.0 && self.omega_p_d_over_pi <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "omega_p_d_over_pi must lie in (0, 2], got {}",
                self.omega_p_d_over_pi
            )));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::InvalidConfig(format!("fock_cutoff must be at least 2, got {}", self.fock_cutoff)));
        }
        for (name, v) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// `θ = ω_p d`.
    pub fn theta(&self) -> f64 {
        PI * self.omega_p_d_over_pi
    }

    pub fn distance_over_lambda(&self) -> f64 {
        0.5 * self.omega_p_d_over_pi
    }

    /// Plane-wave phases `ω_p r_j` of the two elements.
    pub fn position_phases(&self) -> [f64; 2] {
        let theta = self.theta();
        [-0.5 * theta, 0.5 * theta]
    }
}

/// Coherent exchange `J` and correlated decay `γ₁₂` mediated by the waveguide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveguideCoupling {
    pub j: C64,
    pub gamma12: C64,
}

pub fn waveguide_coupling(phase1: f64, phase2: f64, gamma1: f64, gamma2: f64) -> Result<WaveguideCoupling> {
    for rate in [gamma1, gamma2] {
        if rate < 0.0 || rate.is_nan() {
            return Err(Error::NegativeRate(rate));
        }
    }
    let s = (gamma1 * gamma2).sqrt();
    let e2 = C64::from_polar(1.0, phase2);
    let e1 = C64::from_polar(1.0, -phase1);
    Ok(WaveguideCoupling { j: s / 2.0 * (e2 - e1) / (2.0 * I), gamma12: s * (e2 + e1) / 2.0 })
}

/// One term `rate · (L ρ R† - ½{R†L, ρ})` with `L = left_op`, `R = right_op`.
/// Individual decay has `left_op == right_op`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladTerm {
    pub rate: C64,
    pub left_op: Operator,
    pub right_op: Operator,
}

impl LindbladTerm {
    pub fn individual(rate: f64, op: Operator) -> Self {
        LindbladTerm { rate: C64::new(rate, 0.0), right_op: op.clone(), left_op: op }
    }
}

/// Builds the Hilbert space. Qubits of the `QubitResonator` design are left
/// out when they can never be excited (both couplings identically zero) and
/// `include_idle_qubits` is off.
pub fn build_layout(config: &MoleculeConfig, controls: &ControlSet) -> Result<SpaceLayout> {
    let n = config.fock_cutoff;
    let mut subsystems: Vec<(&str, usize)> = match config.design {
        Design::TwoQubit => vec![(Q1, 2), (Q2, 2)],
        Design::QubitResonator => {
            if qubits_idle(config, controls) {
                vec![(R1, n), (R2, n)]
            } else {
                vec![(Q1, 2), (R1, n), (Q2, 2), (R2, n)]
            }
        }
    };
    if config.include_ancilla {
        subsystems.push((ANCILLA, 2));
    }
    SpaceLayout::new(subsystems)
}

fn qubits_idle(config: &MoleculeConfig, controls: &ControlSet) -> bool {
    let idle = |w: Option<&crate::controls::Waveform>| w.is_none_or(|w| w.is_zero());
    !config.include_idle_qubits && idle(controls.g1.as_ref()) && idle(controls.g2.as_ref())
}

pub fn qubit_lowering() -> Operator {
    let mut op = Operator::zeros(2);
    op[(0, 1)] = ONE;
    op
}

pub fn resonator_lowering(cutoff: usize) -> Operator {
    let mut op = Operator::zeros(cutoff);
    for k in 1..cutoff {
        op[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    op
}

/// Embedded lowering operators. `l1`, `l2` are the elements that talk to
/// the waveguide (qubits or resonators); `sigma1`, `sigma2` are the qubits
/// behind the resonators.
#[derive(Clone, Debug)]
pub struct LoweringOps {
    pub l1: Operator,
    pub l2: Operator,
    pub sigma1: Option<Operator>,
    pub sigma2: Option<Operator>,
    pub sigma_a: Option<Operator>,
}

pub fn lowering_ops(config: &MoleculeConfig, layout: &SpaceLayout) -> Result<LoweringOps> {
    let sigma = qubit_lowering();
    let on = |label: &str, op: &Operator| -> Result<Option<Operator>> {
        if layout.contains(label) {
            embed(op, layout, label).map(Some)
        } else {
            Ok(None)
        }
    };
    let (l1, l2, sigma1, sigma2) = match config.design {
        Design::TwoQubit => (embed(&sigma, layout, Q1)?, embed(&sigma, layout, Q2)?, None, None),
        Design::QubitResonator => {
            let a = resonator_lowering(config.fock_cutoff);
            (embed(&a, layout, R1)?, embed(&a, layout, R2)?, on(Q1, &sigma)?, on(Q2, &sigma)?)
        }
    };
    Ok(LoweringOps { l1, l2, sigma1, sigma2, sigma_a: on(ANCILLA, &sigma)? })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Power {
    Linear,
    Sqrt,
}

/// `factor · Π_k w_k(t)^{p_k}` over control channels `w_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    pub factor: C64,
    pub channels: Vec<(Channel, Power)>,
}

impl Coefficient {
    pub fn constant(factor: C64) -> Self {
        Coefficient { factor, channels: Vec::new() }
    }

    pub fn with(mut self, channel: Channel, power: Power) -> Self {
        self.channels.push((channel, power));
        self
    }

    pub fn eval(&self, controls: &ControlSet, t: f64) -> C64 {
        let mut value = self.factor;
        for &(channel, power) in &self.channels {
            let w = controls.value(channel, t);
            value *= match power {
                Power::Linear => w,
                Power::Sqrt => w.max(0.0).sqrt(),
            };
        }
        value
    }

    pub fn is_constant(&self) -> bool {
        self.channels.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianPart {
    pub coeff: Coefficient,
    pub op: Operator,
}

#[derive(Clone, Debug)]
pub struct DissipatorPart {
    pub coeff: Coefficient,
    pub left_op: Operator,
    pub right_op: Operator,
}

/// Sum of `coeff · op`, e.g. an output field operator.
#[derive(Clone, Debug)]
pub struct OperatorSum {
    pub parts: Vec<(Coefficient, Operator)>,
}

impl OperatorSum {
    pub fn eval(&self, controls: &ControlSet, t: f64) -> Operator {
        let dim = self.parts.first().map_or(0, |(_, op)| op.dim());
        let mut out = Operator::zeros(dim);
        for (coeff, op) in &self.parts {
            out.add_scaled(coeff.eval(controls, t), op);
        }
        out
    }
}

/// Assembled generator of the master equation for one configuration.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: MoleculeConfig,
    pub layout: SpaceLayout,
    pub ops: LoweringOps,
    pub hamiltonian: Vec<HamiltonianPart>,
    pub dissipators: Vec<DissipatorPart>,
    /// Right- and left-moving output fields, without the input vacuum.
    pub c_right: OperatorSum,
    pub c_left: OperatorSum,
}

fn rate_coeff(config: &MoleculeConfig, channel: Channel, power: Power) -> Coefficient {
    match config.design {
        Design::TwoQubit => Coefficient::constant(ONE).with(channel, power),
        Design::QubitResonator => {
            let g = match power {
                Power::Linear => config.gamma,
                Power::Sqrt => config.gamma.sqrt(),
            };
            Coefficient::constant(C64::new(g, 0.0))
        }
    }
}

fn herm(op: &Operator) -> Operator {
    op + &op.dagger()
}

impl Model {
    pub fn new(config: &MoleculeConfig, controls: &ControlSet) -> Result<Model> {
        config.validate()?;
        match config.design {
            Design::TwoQubit => {
                controls.require(Channel::Gamma1)?;
                controls.require(Channel::Gamma2)?;
            }
            Design::QubitResonator => {
                controls.require(Channel::G1)?;
                controls.require(Channel::G2)?;
            }
        }
        controls.require(Channel::Gc)?;
        if config.include_ancilla {
            controls.require(Channel::GammaA)?;
        }

        let layout = build_layout(config, controls)?;
        let ops = lowering_ops(config, &layout)?;
        let (l1, l2) = (&ops.l1, &ops.l2);
        let rate_ch = [Channel::Gamma1, Channel::Gamma2];
        let mut hamiltonian = Vec::new();
        let mut dissipators = Vec::new();

        // detunings
        for (j, delta) in [config.delta1, config.delta2].into_iter().enumerate() {
            if delta == 0.0 {
                continue;
            }
            let l = if j == 0 { l1 } else { l2 };
            let mut op = &l.dagger() * l;
            if let Some(s) = if j == 0 { &ops.sigma1 } else { &ops.sigma2 } {
                op += &(&s.dagger() * s);
            }
            hamiltonian.push(HamiltonianPart { coeff: Coefficient::constant(C64::new(delta, 0.0)), op });
        }

        // qubit–resonator couplings
        for (s, l, ch) in [(&ops.sigma1, l1, Channel::G1), (&ops.sigma2, l2, Channel::G2)] {
            if let Some(s) = s {
                hamiltonian.push(HamiltonianPart {
                    coeff: Coefficient::constant(ONE).with(ch, Power::Linear),
                    op: herm(&(&l.dagger() * s)),
                });
            }
        }

        // waveguide exchange per unit √(γ₁γ₂), and the cancellation term
        let theta = config.theta();
        let unit = waveguide_coupling(theta, theta, 1.0, 1.0)?;
        let sqrt_pair = |c: Coefficient| match config.design {
            Design::TwoQubit => c.with(Channel::Gamma1, Power::Sqrt).with(Channel::Gamma2, Power::Sqrt),
            Design::QubitResonator => Coefficient { factor: c.factor * config.gamma, ..c },
        };
        let l1d_l2 = &l1.dagger() * l2;
        if unit.j.norm() > CORRELATION_CUTOFF {
            hamiltonian.push(HamiltonianPart {
                coeff: sqrt_pair(Coefficient::constant(ONE)),
                op: &l1d_l2.scale(unit.j) + &l1d_l2.dagger().scale(unit.j.conj()),
            });
        }
        if config.eta != 0.0 {
            hamiltonian.push(HamiltonianPart {
                coeff: Coefficient::constant(C64::new(config.eta, 0.0)).with(Channel::Gc, Power::Linear),
                op: herm(&l1d_l2),
            });
        }

        // individual and correlated decay into the waveguide
        for (j, l) in [l1, l2].into_iter().enumerate() {
            dissipators.push(DissipatorPart {
                coeff: rate_coeff(config, rate_ch[j], Power::Linear),
                left_op: l.clone(),
                right_op: l.clone(),
            });
        }
        if unit.gamma12.norm() > CORRELATION_CUTOFF {
            dissipators.push(DissipatorPart {
                coeff: sqrt_pair(Coefficient::constant(unit.gamma12)),
                left_op: l2.clone(),
                right_op: l1.clone(),
            });
            dissipators.push(DissipatorPart {
                coeff: sqrt_pair(Coefficient::constant(unit.gamma12.conj())),
                left_op: l1.clone(),
                right_op: l2.clone(),
            });
        }

        // output fields c_R, c_L per unit rate
        let phases = config.position_phases();
        let half = C64::new(0.5f64.sqrt(), 0.0);
        let mut c_right = Vec::new();
        let mut c_left = Vec::new();
        for (j, l) in [l1, l2].into_iter().enumerate() {
            let base = rate_coeff(config, rate_ch[j], Power::Sqrt);
            let right = Coefficient { factor: base.factor * half * C64::from_polar(1.0, -phases[j]), ..base.clone() };
            let left = Coefficient { factor: base.factor * half * C64::from_polar(1.0, phases[j]), ..base };
            c_right.push((right, l.clone()));
            c_left.push((left, l.clone()));
        }

        if let Some(sa) = &ops.sigma_a {
            dissipators.push(DissipatorPart {
                coeff: Coefficient::constant(ONE).with(Channel::GammaA, Power::Linear),
                left_op: sa.clone(),
                right_op: sa.clone(),
            });
            for (j, l) in [l1, l2].into_iter().enumerate() {
                let base = rate_coeff(config, rate_ch[j], Power::Sqrt).with(Channel::GammaA, Power::Sqrt);
                let scaled = |phase: f64| Coefficient {
                    factor: base.factor * half * C64::from_polar(1.0, phase),
                    ..base.clone()
                };
                dissipators.push(DissipatorPart { coeff: scaled(phases[j]), left_op: sa.clone(), right_op: l.clone() });
                dissipators.push(DissipatorPart {
                    coeff: scaled(-phases[j]),
                    left_op: l.clone(),
                    right_op: sa.clone(),
                });
                // cascaded drive (i/2)(a† c - c† a) with a = √γ_a σ_a
                let sd_l = &sa.dagger() * l;
                let jp = 0.5 * I * half * C64::from_polar(1.0, -phases[j]);
                hamiltonian.push(HamiltonianPart {
                    coeff: base.clone(),
                    op: &sd_l.scale(jp) + &sd_l.dagger().scale(jp.conj()),
                });
            }
            c_right.push((Coefficient::constant(ONE).with(Channel::GammaA, Power::Sqrt), sa.clone()));
        }

        Ok(Model {
            config: config.clone(),
            layout,
            ops,
            hamiltonian,
            dissipators,
            c_right: OperatorSum { parts: c_right },
            c_left: OperatorSum { parts: c_left },
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn hamiltonian_at(&self, controls: &ControlSet, t: f64) -> Operator {
        let mut h = Operator::zeros(self.dim());
        for part in &self.hamiltonian {
            h.add_scaled(part.coeff.eval(controls, t), &part.op);
        }
        h
    }

    pub fn dissipators_at(&self, controls: &ControlSet, t: f64) -> Vec<LindbladTerm> {
        self.dissipators
            .iter()
            .map(|p| LindbladTerm {
                rate: p.coeff.eval(controls, t),
                left_op: p.left_op.clone(),
                right_op: p.right_op.clone(),
            })
            .collect()
    }

    /// Largest rate appearing in the generator, used to pick a step size.
    pub fn max_rate(&self) -> f64 {
        match self.config.design {
            Design::TwoQubit => 2.0 * self.config.gamma_ph,
            Design::QubitResonator => self.config.gamma.max(2.0 * self.config.gamma_ph),
        }
    }
}

pub fn hamiltonian(config: &MoleculeConfig, controls: &ControlSet, t: f64) -> Result<Operator> {
    Ok(Model::new(config, controls)?.hamiltonian_at(controls, t))
}

pub fn dissipators(config: &MoleculeConfig, controls: &ControlSet, t: f64) -> Result<Vec<LindbladTerm>> {
    Ok(Model::new(config, controls)?.dissipators_at(controls, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    GG,
    /// `(|eg⟩ + i|ge⟩)/√2` on the two qubits.
    PsiPlus,
    /// `(|eg⟩ - i|ge⟩)/√2` on the two qubits.
    PsiMinus,
    AncillaExcited,
    AncillaSuperposition,
    Vacuum,
    /// `(|0⟩ + |ψ₊⟩)/√2`, giving the emitted amplitude access to a phase reference.
    VacuumPlusPsiPlus,
    VacuumPlusPsiMinus,
}

pub fn prepare_state(kind: StateKind, layout: &SpaceLayout) -> Result<Operator> {
    let need = |label: &str| -> Result<usize> {
        layout.position(label).map_err(|_| Error::IncompatibleState(format!("{kind:?} needs subsystem `{label}`")))
    };
    let nsub = layout.subsystems().len();
    let ground = vec![0usize; nsub];
    let basis = |excited: &[usize]| {
        let mut digits = ground.clone();
        for &p in excited {
            digits[p] = 1;
        }
        layout.index(&digits)
    };
    let mut psi = vec![ZERO; layout.total_dim()];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        StateKind::GG => {
            need(Q1)?;
            need(Q2)?;
            psi[basis(&[])] = ONE;
        }
        StateKind::Vacuum => psi[basis(&[])] = ONE,
        StateKind::PsiPlus | StateKind::PsiMinus | StateKind::VacuumPlusPsiPlus | StateKind::VacuumPlusPsiMinus => {
            let (p1, p2) = (need(Q1)?, need(Q2)?);
            let sign = if matches!(kind, StateKind::PsiPlus | StateKind::VacuumPlusPsiPlus) { 1.0 } else { -1.0 };
            let weight = if matches!(kind, StateKind::PsiPlus | StateKind::PsiMinus) {
                s
            } else {
                psi[basis(&[])] = C64::new(s, 0.0);
                0.5
            };
            psi[basis(&[p1])] = C64::new(weight, 0.0);
            psi[basis(&[p2])] = C64::new(0.0, sign * weight);
        }
        StateKind::AncillaExcited => psi[basis(&[need(ANCILLA)?])] = ONE,
        StateKind::AncillaSuperposition => {
            let pa = need(ANCILLA)?;
            psi[basis(&[])] = C64::new(s, 0.0);
            psi[basis(&[pa])] = C64::new(s, 0.0);
        }
    }
    Ok(projector(&psi))
}

/// `(|eg⟩ ± i|ge⟩)/√2` on `[q1, q2]`, ordered `|gg⟩, |ge⟩, |eg⟩, |ee⟩`.
pub fn psi_two_qubit(plus: bool) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if plus { 1.0 } else { -1.0 };
    vec![ZERO, C64::new(0.0, sign * s), C64::new(s, 0.0), ZERO]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::Waveform;
    use crate::dynamics::lindblad_rhs;
    use crate::linop::{commutator, expectation, partial_trace};
    use crate::test_support::{arb_density, c, sample_density};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn constant_two_qubit(gamma0: f64) -> ControlSet {
        let domain = (-5.0, 5.0);
        let mut cs = ControlSet::empty(domain);
        cs.set(Channel::Gamma1, Some(Waveform::constant(gamma0, domain)));
        cs.set(Channel::Gamma2, Some(Waveform::constant(gamma0, domain)));
        cs.set(Channel::Gc, Some(Waveform::constant(-gamma0 / 2.0, domain)));
        cs
    }

    fn with_ancilla(config: &MoleculeConfig) -> MoleculeConfig {
        MoleculeConfig { include_ancilla: true, ..config.clone() }
    }

    #[test]
    fn coupling_examples() {
        let g = 3.0;
        let w = waveguide_coupling(FRAC_PI_2, FRAC_PI_2, g, g).unwrap();
        assert!(close(w.j, c(g / 2.0, 0.0), 1e-15 * g));
        assert!(w.gamma12.norm() <= 1e-15 * g);

        let w = waveguide_coupling(PI, PI, g, g).unwrap();
        assert!(w.j.norm() <= 1e-15 * g);
        assert!(close(w.gamma12, c(-g, 0.0), 1e-15 * g));

        let w = waveguide_coupling(0.0, 0.0, g, g).unwrap();
        assert!(w.j.norm() <= 1e-15);
        assert!(close(w.gamma12, c(g, 0.0), 1e-15));

        assert!(matches!(waveguide_coupling(0.0, 0.0, -1.0, 1.0), Err(Error::NegativeRate(_))));
    }

    #[test]
    fn nominal_coupling_from_config() {
        let cfg = MoleculeConfig::two_qubit();
        let w = waveguide_coupling(cfg.theta(), cfg.theta(), 1.0, 1.0).unwrap();
        assert!(close(w.j, c(0.5, 0.0), 1e-15));
        assert!(w.gamma12.norm() <= 1e-15);
        assert_eq!(cfg.distance_over_lambda(), 0.25);
    }

    #[test]
    fn layout_dimensions() {
        let tq = MoleculeConfig::two_qubit();
        let cs = ControlSet::emission(&tq, 21.0).unwrap();
        assert_eq!(build_layout(&tq, &cs).unwrap().total_dim(), 4);

        let qr = with_ancilla(&MoleculeConfig::qubit_resonator());
        let cs = ControlSet::absorption(&qr, 21.0).unwrap();
        assert_eq!(build_layout(&qr, &cs).unwrap().total_dim(), 72);

        let cs = ControlSet::transmission(&qr, 21.0).unwrap();
        let layout = build_layout(&qr, &cs).unwrap();
        assert_eq!(layout.total_dim(), 18);
        assert!(!layout.contains(Q1));

        let keep = MoleculeConfig { include_idle_qubits: true, ..qr };
        assert_eq!(build_layout(&keep, &cs).unwrap().total_dim(), 72);
    }

    #[test]
    fn lowering_examples() {
        let s = qubit_lowering();
        assert_eq!(commutator(&s, &s.dagger()), Operator::from_real_diag(&[1.0, -1.0]));
        let a = resonator_lowering(3);
        assert!((&a.dagger() * &a).max_abs_diff(&Operator::from_real_diag(&[0.0, 1.0, 2.0])) < 1e-15);
        assert!(commutator(&a, &a.dagger()).max_abs_diff(&Operator::from_real_diag(&[1.0, 1.0, -2.0])) < 1e-15);
    }

    #[test]
    fn perfect_cancellation_gives_zero_hamiltonian() {
        let cs = constant_two_qubit(2.0);
        let h = hamiltonian(&MoleculeConfig::two_qubit(), &cs, 0.3).unwrap();
        assert!(h.max_abs() <= 1e-15);
    }

    #[test]
    fn uncancelled_exchange_splits_single_excitations() {
        let g0 = 2.0;
        let cfg = MoleculeConfig { eta: 0.0, ..MoleculeConfig::two_qubit() };
        let h = hamiltonian(&cfg, &constant_two_qubit(g0), 0.0).unwrap();
        let block = h.submatrix(&[1, 2]);
        let ev = block.eigenvalues_hermitian();
        assert!((ev[0] + g0 / 2.0).abs() < 1e-14 && (ev[1] - g0 / 2.0).abs() < 1e-14);
        assert!(close(h[(1, 2)], c(g0 / 2.0, 0.0), 1e-15));
    }

    #[test]
    fn ancilla_exchange_magnitude() {
        // |J'_j| = √(γ_j γ_a / 2) / 2 from the cascaded drive of the output field
        let cfg = with_ancilla(&MoleculeConfig::qubit_resonator());
        let cs = ControlSet::absorption(&cfg, 21.0).unwrap();
        let t = 0.4;
        let gamma_a = cs.value(Channel::GammaA, t);
        assert!(gamma_a > 0.1);
        let model = Model::new(&cfg, &cs).unwrap();
        let h = model.hamiltonian_at(&cs, t);
        let l = &model.layout;
        for (label, phase) in [(R1, cfg.position_phases()[0]), (R2, cfg.position_phases()[1])] {
            let mut from = vec![0; 5];
            from[l.position(label).unwrap()] = 1;
            let mut to = vec![0; 5];
            to[l.position(ANCILLA).unwrap()] = 1;
            let element = h[(l.index(&to), l.index(&from))];
            let expected = 0.5 * I * (cfg.gamma * gamma_a / 2.0).sqrt() * C64::from_polar(1.0, -phase);
            assert!(close(element, expected, 1e-12), "{label}: {element} vs {expected}");
            assert!((element.norm() - (cfg.gamma * gamma_a / 2.0).sqrt() / 2.0).abs() < 1e-12);
        }
    }

    fn configs() -> Vec<MoleculeConfig> {
        let tq = MoleculeConfig::two_qubit();
        let qr = MoleculeConfig::qubit_resonator();
        let skew = |c: &MoleculeConfig| MoleculeConfig {
            omega_p_d_over_pi: 0.62,
            delta1: -0.3,
            delta2: 0.45,
            eta: 0.7,
            ..c.clone()
        };
        vec![tq.clone(), qr.clone(), skew(&tq), skew(&qr), with_ancilla(&skew(&tq)), with_ancilla(&skew(&qr))]
    }

    fn controls_for(cfg: &MoleculeConfig) -> ControlSet {
        if cfg.include_ancilla {
            ControlSet::absorption(cfg, 21.0).unwrap()
        } else {
            ControlSet::emission(cfg, 21.0).unwrap()
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        for cfg in configs() {
            let cs = controls_for(&cfg);
            let model = Model::new(&cfg, &cs).unwrap();
            for t in [-20.0, -3.0, -0.7, 0.0, 0.2, 1.5, 8.0, 20.0] {
                let h = model.hamiltonian_at(&cs, t);
                assert!(h.hermiticity_residual() <= 1e-12, "{:?} t={t}", cfg.design);
            }
        }
    }

    #[test]
    fn nominal_molecule_hamiltonian() {
        let tq = MoleculeConfig::two_qubit();
        let cs = ControlSet::emission(&tq, 21.0).unwrap();
        let model = Model::new(&tq, &cs).unwrap();
        for t in [-4.0, -0.5, 0.0, 1.0, 6.0] {
            assert!(model.hamiltonian_at(&cs, t).max_abs() <= 1e-15);
        }

        let qr = MoleculeConfig::qubit_resonator();
        let cs = ControlSet::emission(&qr, 21.0).unwrap();
        let model = Model::new(&qr, &cs).unwrap();
        let ops = &model.ops;
        for t in [-4.0, -0.5, 0.0, 1.0, 6.0] {
            let mut expected = Operator::zeros(model.dim());
            for (s, l, ch) in [(&ops.sigma1, &ops.l1, Channel::G1), (&ops.sigma2, &ops.l2, Channel::G2)] {
                let x = &l.dagger() * s.as_ref().unwrap();
                expected.add_scaled(c(cs.value(ch, t), 0.0), &(&x + &x.dagger()));
            }
            assert!(model.hamiltonian_at(&cs, t).max_abs_diff(&expected) <= 1e-13);
        }
    }

    #[test]
    fn missing_waveform_is_rejected() {
        let tq = MoleculeConfig::two_qubit();
        let mut cs = ControlSet::emission(&tq, 21.0).unwrap();
        cs.set(Channel::Gamma2, None);
        assert!(matches!(hamiltonian(&tq, &cs, 0.0), Err(Error::MissingWaveform(_))));
    }

    #[test]
    fn dissipator_examples() {
        let tq = MoleculeConfig::two_qubit();
        let cs = ControlSet::emission(&tq, 21.0).unwrap();
        let terms = dissipators(&tq, &cs, 0.0).unwrap();
        assert_eq!(terms.len(), 2);
        assert!(terms.iter().all(|t| t.left_op == t.right_op));

        let half = MoleculeConfig { omega_p_d_over_pi: 1.0, ..MoleculeConfig::qubit_resonator() };
        let cs = ControlSet::emission(&half, 21.0).unwrap();
        let terms = dissipators(&half, &cs, 0.0).unwrap();
        let correlated: Vec<_> = terms.iter().filter(|t| t.left_op != t.right_op).collect();
        assert_eq!(correlated.len(), 2);
        for t in correlated {
            assert!(close(t.rate, c(-half.gamma, 0.0), 1e-13));
        }

        let anc = with_ancilla(&MoleculeConfig::qubit_resonator());
        let cs = ControlSet::absorption(&anc, 21.0).unwrap();
        let model = Model::new(&anc, &cs).unwrap();
        let sa = model.ops.sigma_a.as_ref().unwrap();
        let terms = model.dissipators_at(&cs, 0.0);
        let pairs = terms.iter().filter(|t| (t.left_op == *sa) != (t.right_op == *sa)).count();
        assert_eq!(pairs, 4);
        assert_eq!(terms.len(), 7);
    }

    #[test]
    fn dissipators_equal_output_field_decay() {
        for cfg in configs() {
            let cs = controls_for(&cfg);
            let model = Model::new(&cfg, &cs).unwrap();
            let n = model.dim();
            for (k, t) in [-1.0, 0.0, 0.8].into_iter().enumerate() {
                let rho = sample_density(n, k as u64);
                let terms = model.dissipators_at(&cs, t);
                let fields = vec![
                    LindbladTerm::individual(1.0, model.c_right.eval(&cs, t)),
                    LindbladTerm::individual(1.0, model.c_left.eval(&cs, t)),
                ];
                let zero = Operator::zeros(n);
                let a = lindblad_rhs(&rho, &zero, &terms).unwrap();
                let b = lindblad_rhs(&rho, &zero, &fields).unwrap();
                assert!(a.max_abs_diff(&b) <= 1e-12, "{:?} ancilla={}", cfg.design, cfg.include_ancilla);
            }
        }
    }

    #[test]
    fn state_examples() {
        let tq = MoleculeConfig::two_qubit();
        let layout = build_layout(&tq, &ControlSet::emission(&tq, 21.0).unwrap()).unwrap();
        let rho = prepare_state(StateKind::PsiPlus, &layout).unwrap();
        assert!(close(rho[(2, 1)], c(0.0, -0.5), 1e-15));
        assert!(rho.max_abs_diff(&projector(&psi_two_qubit(true))) < 1e-15);
        let minus = prepare_state(StateKind::PsiMinus, &layout).unwrap();
        assert!(minus.max_abs_diff(&projector(&psi_two_qubit(false))) < 1e-15);

        let gg = prepare_state(StateKind::GG, &layout).unwrap();
        assert_eq!(gg[(0, 0)], ONE);
        assert!((gg.purity() - 1.0).abs() < 1e-12);

        let anc = with_ancilla(&MoleculeConfig::qubit_resonator());
        let layout = build_layout(&anc, &ControlSet::transmission(&anc, 21.0).unwrap()).unwrap();
        let rho = prepare_state(StateKind::AncillaSuperposition, &layout).unwrap();
        let reduced = partial_trace(&rho, &layout, &[ANCILLA]).unwrap();
        assert!(reduced.max_abs_diff(&Operator::from_fn(2, |_, _| c(0.5, 0.0))) < 1e-15);
        assert!(matches!(prepare_state(StateKind::PsiPlus, &layout), Err(Error::IncompatibleState(_))));
        assert!(matches!(prepare_state(StateKind::GG, &layout), Err(Error::IncompatibleState(_))));
    }

    #[test]
    fn prepared_states_are_pure() {
        let anc = with_ancilla(&MoleculeConfig::qubit_resonator());
        let layout = build_layout(&anc, &ControlSet::absorption(&anc, 21.0).unwrap()).unwrap();
        use StateKind::*;
        for kind in
            [GG, PsiPlus, PsiMinus, AncillaExcited, AncillaSuperposition, Vacuum, VacuumPlusPsiPlus, VacuumPlusPsiMinus]
        {
            let rho = prepare_state(kind, &layout).unwrap();
            assert!((rho.trace() - ONE).norm() < 1e-14, "{kind:?}");
            assert!((rho.purity() - 1.0).abs() < 1e-12, "{kind:?}");
        }
        let rho = prepare_state(VacuumPlusPsiPlus, &layout).unwrap();
        let n1 = embed(&(&qubit_lowering().dagger() * &qubit_lowering()), &layout, Q1).unwrap();
        assert!((expectation(&rho, &n1).unwrap().re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let base = MoleculeConfig::default();
        assert!(base.validate().is_ok());
        for bad in [
            MoleculeConfig { eta: 2.5, ..base.clone() },
            MoleculeConfig { fock_cutoff: 1, ..base.clone() },
            MoleculeConfig { omega_p_d_over_pi: 0.0, ..base.clone() },
            MoleculeConfig { gamma: -1.0, ..base.clone() },
            MoleculeConfig { delta1: f64::NAN, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(matches!(MoleculeConfig { gamma_ph: 0.0, ..base }.validate(), Err(Error::NonPositiveBandwidth(_))));
    }

    proptest! {
        #[test]
        fn coupling_closed_forms(p in 0.0..2.0 * PI, g1 in 0.0..5.0f64, g2 in 0.0..5.0f64) {
            let w = waveguide_coupling(p, p, g1, g2).unwrap();
            let s = (g1 * g2).sqrt();
            prop_assert!(close(w.j, c(s / 2.0 * p.sin(), 0.0), 1e-13));
            prop_assert!(close(w.gamma12, c(s * p.cos(), 0.0), 1e-13));
            let swapped = waveguide_coupling(p, p, g2, g1).unwrap();
            prop_assert!(close(swapped.gamma12, w.gamma12.conj(), 1e-13));
        }

        #[test]
        fn dissipators_preserve_trace(rho in arb_density(8), d in 0.05..1.95f64, t in -6.0..6.0f64) {
            let cfg = MoleculeConfig { omega_p_d_over_pi: d, include_ancilla: true, ..MoleculeConfig::two_qubit() };
            let cs = ControlSet::absorption(&cfg, 21.0).unwrap();
            let model = Model::new(&cfg, &cs).unwrap();
            prop_assert_eq!(model.dim(), 8);
            let terms = model.dissipators_at(&cs, t);
            let out = lindblad_rhs(&rho, &Operator::zeros(8), &terms).unwrap();
            prop_assert!(out.trace().norm() <= 1e-12);
        }

        #[test]
        fn hamiltonian_hermitian_everywhere(d in 0.05..1.95f64, eta in 0.0..2.0f64, d1 in -1.0..1.0f64, t in -20.0..20.0f64) {
            let cfg = MoleculeConfig { omega_p_d_over_pi: d, eta, delta1: d1, include_ancilla: true, ..MoleculeConfig::qubit_resonator() };
            let cs = ControlSet::absorption(&cfg, 21.0).unwrap();
            let h = hamiltonian(&cfg, &cs, t).unwrap();
            prop_assert!(h.hermiticity_residual() <= 1e-12);
        }
    }
}
