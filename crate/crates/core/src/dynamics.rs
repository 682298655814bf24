// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Time integration of the master equation.
//!
//! The integrator is classical fixed-step RK4 with the control coefficients
//! sampled at `t`, `t + h/2` and `t + h`. Before stepping, the state space is
//! restricted to the smallest set of basis states that the initial support
//! can reach under the generator. The restriction is exact: every operator
//! maps the set into itself, so matrix elements outside it stay zero. For
//! the single-excitation protocols this shrinks a 72-dimensional space to
//! about six states.

use std::collections::BTreeSet;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::controls::ControlSet;
use crate::error::{Error, Result};
use crate::linop::{kron_unguarded, Operator, SpaceLayout, I, ZERO};
use crate::molecule::{Coefficient, LindbladTerm, Model, MoleculeConfig, R1, R2};

/// Largest Hilbert dimension accepted by [`liouvillian_matrix`] (`72² = 5184`).
pub const LIOUVILLIAN_MAX_DIM: usize = 72;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "rk4_fixed")]
    RK4Fixed,
    /// Each step is checked against two half steps and subdivided until they
    /// agree to `Tolerances::step`. Slow; meant for verification.
    #[serde(rename = "rk4_half_step_adaptive")]
    RK4HalfStepAdaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub trace_dev: f64,
    pub min_eig: f64,
    pub herm: f64,
    pub leakage: f64,
    pub step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { trace_dev: 1e-9, min_eig: -1e-9, herm: 1e-10, leakage: 1e-6, step: 1e-13 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Step size; `None` picks `1/(200·max rate)`.
    pub dt: Option<f64>,
    pub method: Method,
    /// Steps between recorded states; `None` records on a `0.01/γ_ph` grid.
    pub record_stride: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt: None, method: Method::RK4Fixed, record_stride: None, tolerances: Tolerances::default() }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        IntegratorConfig { dt: Some(dt), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        if self.record_stride == Some(0) {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn default_dt(max_rate: f64) -> f64 {
        1.0 / (200.0 * max_rate)
    }

    /// Concrete `(dt, stride)` for a model.
    pub fn resolve(&self, max_rate: f64, gamma_ph: f64) -> (f64, usize) {
        let dt = self.dt.unwrap_or_else(|| Self::default_dt(max_rate));
        if dt > 1.0 / (50.0 * max_rate) {
            log::warn!("dt = {dt} exceeds 1/(50·{max_rate}); expect visible discretization error");
        }
        let stride = self.record_stride.unwrap_or_else(|| ((1.0 / (100.0 * gamma_ph * dt)).floor() as usize).max(1));
        (dt, stride)
    }
}

/// Uniform step grid over a span, with the step count a multiple of the
/// recording stride so that recorded samples are equally spaced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub stride: usize,
    pub h: f64,
}

impl TimeGrid {
    pub fn new(t_span: (f64, f64), dt: f64, stride: usize) -> Result<Self> {
        let (t0, t1) = t_span;
        if !(t1 > t0) || !(dt > 0.0) || !dt.is_finite() || stride == 0 {
            return Err(Error::InvalidConfig(format!("bad time span {t_span:?}, step {dt} or stride {stride}")));
        }
        let blocks = ((t1 - t0) / (dt * stride as f64) - 1e-9).ceil().max(1.0) as usize;
        let steps = blocks * stride;
        Ok(TimeGrid { t0, t1, steps, stride, h: (t1 - t0) / steps as f64 })
    }

    /// Time after `k` steps.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn recorded_times(&self) -> Vec<f64> {
        (0..=self.steps / self.stride).map(|b| self.time(b * self.stride)).collect()
    }
}

/// Numerical health of one recorded state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub trace_dev: f64,
    pub min_eig: f64,
    pub herm: f64,
    pub leakage: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub layout: Option<SpaceLayout>,
    /// Basis states reachable from the initial state; recorded states live
    /// on this subspace.
    pub support: Vec<usize>,
    pub dim: usize,
    pub times: Vec<f64>,
    pub states: Vec<Operator>,
    pub monitors: Vec<Monitor>,
    pub dt: f64,
    pub steps: usize,
    /// First tolerance breach, if any.
    pub violation: Option<Error>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_healthy(&self) -> bool {
        self.violation.is_none()
    }

    /// Errors with the first recorded tolerance breach.
    pub fn gate(&self) -> Result<()> {
        match &self.violation {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    pub fn checked(self) -> Result<Self> {
        self.gate()?;
        Ok(self)
    }

    /// Recorded state `k` on the full space.
    pub fn full_state(&self, k: usize) -> Operator {
        self.states[k].expand(&self.support, self.dim)
    }

    pub fn final_state(&self) -> Operator {
        self.full_state(self.len() - 1)
    }

    /// Restriction of a full-space operator to the trajectory's subspace.
    pub fn restrict(&self, op: &Operator) -> Operator {
        op.submatrix(&self.support)
    }

    /// Worst value of each monitor over the run.
    pub fn worst(&self) -> Monitor {
        let mut w = Monitor { trace_dev: 0.0, min_eig: f64::INFINITY, herm: 0.0, leakage: 0.0 };
        for m in &self.monitors {
            w.trace_dev = w.trace_dev.max(m.trace_dev);
            w.min_eig = w.min_eig.min(m.min_eig);
            w.herm = w.herm.max(m.herm);
            w.leakage = w.leakage.max(m.leakage);
        }
        w
    }
}

/// Right-hand side `-i[H,ρ] + Σ rate·(LρR† - ½{R†L, ρ})`.
pub fn lindblad_rhs(rho: &Operator, h: &Operator, terms: &[LindbladTerm]) -> Result<Operator> {
    let n = rho.dim();
    let check = |op: &Operator, what: &str| {
        if op.dim() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("{what} has dimension {}, state has {n}", op.dim())))
        }
    };
    check(h, "hamiltonian")?;
    let mut out = (&(h * rho) - &(rho * h)).scale(-I);
    for term in terms {
        check(&term.left_op, "jump operator")?;
        check(&term.right_op, "jump operator")?;
        let rd = term.right_op.dagger();
        let k = &rd * &term.left_op;
        let mut d = &(&term.left_op * rho) * &rd;
        d.add_scaled(C64::new(-0.5, 0.0), &(&k * rho));
        d.add_scaled(C64::new(-0.5, 0.0), &(rho * &k));
        out.add_scaled(term.rate, &d);
    }
    Ok(out)
}

/// Superoperator acting on column-stacked `vec(ρ)`, `vec(ρ)[i + n·j] = ρ_ij`.
pub fn liouvillian_matrix(h: &Operator, terms: &[LindbladTerm]) -> Result<Operator> {
    let n = h.dim();
    if n > LIOUVILLIAN_MAX_DIM {
        return Err(Error::DimensionOverflow { dim: n * n, limit: LIOUVILLIAN_MAX_DIM * LIOUVILLIAN_MAX_DIM });
    }
    let id = Operator::identity(n);
    // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
    let mut l = (&kron_unguarded(&id, h) - &kron_unguarded(&h.transpose(), &id)).scale(-I);
    for term in terms {
        if term.left_op.dim() != n || term.right_op.dim() != n {
            return Err(Error::DimensionMismatch("jump operator dimension".into()));
        }
        let k = &term.right_op.dagger() * &term.left_op;
        let mut d = kron_unguarded(&term.right_op.conj(), &term.left_op);
        d.add_scaled(C64::new(-0.5, 0.0), &kron_unguarded(&id, &k));
        d.add_scaled(C64::new(-0.5, 0.0), &kron_unguarded(&k.transpose(), &id));
        l.add_scaled(term.rate, &d);
    }
    Ok(l)
}

pub fn vectorize(rho: &Operator) -> Vec<C64> {
    let n = rho.dim();
    let mut v = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            v.push(rho[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[C64]) -> Result<Operator> {
    let n = (v.len() as f64).sqrt().round() as usize;
    if n * n != v.len() {
        return Err(Error::DimensionMismatch(format!("{} entries is not a square", v.len())));
    }
    Ok(Operator::from_fn(n, |i, j| v[i + n * j]))
}

/// Time-dependent generator as weighted sums of constant operators.
#[derive(Clone, Debug)]
pub struct Generator {
    pub dim: usize,
    pub hamiltonian: Vec<(Coefficient, Operator)>,
    /// `(rate, left_op, right_op)`
    pub dissipators: Vec<(Coefficient, Operator, Operator)>,
    /// Basis states whose population counts as truncation leakage.
    pub top_levels: Vec<usize>,
}

impl Generator {
    pub fn from_model(model: &Model) -> Self {
        Generator {
            dim: model.dim(),
            hamiltonian: model.hamiltonian.iter().map(|p| (p.coeff.clone(), p.op.clone())).collect(),
            dissipators: model
                .dissipators
                .iter()
                .map(|p| (p.coeff.clone(), p.left_op.clone(), p.right_op.clone()))
                .collect(),
            top_levels: top_fock_levels(&model.layout, model.config.fock_cutoff),
        }
    }

    pub fn constant(h: &Operator, terms: &[LindbladTerm]) -> Self {
        Generator {
            dim: h.dim(),
            hamiltonian: vec![(Coefficient::constant(C64::new(1.0, 0.0)), h.clone())],
            dissipators: terms
                .iter()
                .map(|t| (Coefficient::constant(t.rate), t.left_op.clone(), t.right_op.clone()))
                .collect(),
            top_levels: Vec::new(),
        }
    }
}

fn top_fock_levels(layout: &SpaceLayout, cutoff: usize) -> Vec<usize> {
    let positions: Vec<usize> = [R1, R2].iter().filter_map(|l| layout.position(l).ok()).collect();
    if positions.is_empty() {
        return Vec::new();
    }
    (0..layout.total_dim())
        .filter(|&idx| {
            let digits = layout.digits(idx);
            positions.iter().any(|&p| digits[p] == cutoff - 1)
        })
        .collect()
}

/// Smallest index set containing the support of `rho0` and closed under
/// every operator the right-hand side applies to rows or columns of ρ.
pub fn reachable_support(rho0: &Operator, generator: &Generator) -> Vec<usize> {
    let n = generator.dim;
    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut add = |op: &Operator| {
        for (i, k) in op.nonzero_pattern() {
            // |k⟩ ↦ |i⟩ and, for the transpose, |i⟩ ↦ |k⟩
            adjacency[k].insert(i);
            adjacency[i].insert(k);
        }
    };
    for (_, h) in &generator.hamiltonian {
        add(h);
    }
    for (_, l, r) in &generator.dissipators {
        add(&(&r.dagger() * l));
    }
    for (_, l, r) in &generator.dissipators {
        for op in [l, r] {
            for (i, k) in op.nonzero_pattern() {
                adjacency[k].insert(i);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for (i, j) in rho0.nonzero_pattern() {
        for idx in [i, j] {
            if !seen[idx] {
                seen[idx] = true;
                stack.push(idx);
            }
        }
    }
    while let Some(k) = stack.pop() {
        for &i in &adjacency[k] {
            if !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).collect()
}

/// Sparse entries `(row, col, value)`.
type Sparse = Vec<(usize, usize, C64)>;

fn sparse(op: &Operator) -> Sparse {
    op.nonzero_pattern().map(|(i, j)| (i, j, op[(i, j)])).collect()
}

/// Generator restricted to a subspace, in flat row-major buffers.
struct Reduced {
    n: usize,
    /// `-i·H_k`
    h_left: Vec<(Coefficient, Vec<C64>)>,
    /// `-½·R†L` for each dissipator
    k_half: Vec<Vec<C64>>,
    jumps: Vec<(Coefficient, Sparse, Sparse)>,
}

/// Coefficient-weighted operators at one time.
struct Frozen {
    left: Vec<C64>,
    right: Vec<C64>,
    rates: Vec<C64>,
}

impl Reduced {
    fn new(generator: &Generator, support: &[usize]) -> Self {
        let n = support.len();
        let flat = |op: &Operator| op.submatrix(support).as_slice().to_vec();
        Reduced {
            n,
            h_left: generator.hamiltonian.iter().map(|(c, h)| (c.clone(), flat(&h.scale(-I)))).collect(),
            k_half: generator
                .dissipators
                .iter()
                .map(|(_, l, r)| flat(&(&r.dagger() * l).scale(C64::new(-0.5, 0.0))))
                .collect(),
            jumps: generator
                .dissipators
                .iter()
                .map(|(c, l, r)| (c.clone(), sparse(&l.submatrix(support)), sparse(&r.submatrix(support))))
                .collect(),
        }
    }

    fn freeze(&self, controls: &ControlSet, t: f64) -> Frozen {
        let nn = self.n * self.n;
        let mut left = vec![ZERO; nn];
        let mut right = vec![ZERO; nn];
        for (c, m) in &self.h_left {
            let v = c.eval(controls, t);
            if v == ZERO {
                continue;
            }
            // right = iH - ½K, so the Hamiltonian part enters with opposite sign
            for (k, x) in m.iter().enumerate() {
                let y = v * x;
                left[k] += y;
                right[k] -= y;
            }
        }
        let rates: Vec<C64> = self.jumps.iter().map(|(c, _, _)| c.eval(controls, t)).collect();
        for (r, m) in rates.iter().zip(&self.k_half) {
            if *r == ZERO {
                continue;
            }
            for (k, x) in m.iter().enumerate() {
                let y = r * x;
                left[k] += y;
                right[k] += y;
            }
        }
        Frozen { left, right, rates }
    }

    /// `out = left·ρ + ρ·right + Σ rate·L ρ R†`
    fn apply(&self, f: &Frozen, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let n = self.n;
        out.iter_mut().for_each(|x| *x = ZERO);
        for i in 0..n {
            for k in 0..n {
                let a = f.left[i * n + k];
                let b = f.right[i * n + k];
                if a != ZERO {
                    for j in 0..n {
                        out[i * n + j] += a * rho[k * n + j];
                    }
                }
                if b != ZERO {
                    // (ρ·right)_{j,k} += ρ_{j,i} right_{i,k}
                    for j in 0..n {
                        out[j * n + k] += rho[j * n + i] * b;
                    }
                }
            }
        }
        for ((_, l, r), rate) in self.jumps.iter().zip(&f.rates) {
            if *rate == ZERO {
                continue;
            }
            // scratch = L ρ
            scratch.iter_mut().for_each(|x| *x = ZERO);
            for &(i, k, v) in l {
                for j in 0..n {
                    scratch[i * n + j] += v * rho[k * n + j];
                }
            }
            // out += rate · scratch · R†, (R†)_{m,j} = conj(R_{j,m})
            for &(j, m, v) in r {
                let w = rate * v.conj();
                for i in 0..n {
                    out[i * n + j] += scratch[i * n + m] * w;
                }
            }
        }
    }
}

struct Stepper<'a> {
    reduced: Reduced,
    controls: &'a ControlSet,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
    scratch: Vec<C64>,
}

impl<'a> Stepper<'a> {
    fn new(reduced: Reduced, controls: &'a ControlSet) -> Self {
        let nn = reduced.n * reduced.n;
        Stepper {
            reduced,
            controls,
            k: [vec![ZERO; nn], vec![ZERO; nn], vec![ZERO; nn], vec![ZERO; nn]],
            tmp: vec![ZERO; nn],
            scratch: vec![ZERO; nn],
        }
    }

    fn rk4(&mut self, rho: &mut [C64], h: f64, f0: &Frozen, fm: &Frozen, f1: &Frozen) {
        let [k1, k2, k3, k4] = &mut self.k;
        self.reduced.apply(f0, rho, k1, &mut self.scratch);
        for (t_, (r, k)) in self.tmp.iter_mut().zip(rho.iter().zip(k1.iter())) {
            *t_ = r + k * (0.5 * h);
        }
        self.reduced.apply(fm, &self.tmp, k2, &mut self.scratch);
        for (t_, (r, k)) in self.tmp.iter_mut().zip(rho.iter().zip(k2.iter())) {
            *t_ = r + k * (0.5 * h);
        }
        self.reduced.apply(fm, &self.tmp, k3, &mut self.scratch);
        for (t_, (r, k)) in self.tmp.iter_mut().zip(rho.iter().zip(k3.iter())) {
            *t_ = r + k * h;
        }
        self.reduced.apply(f1, &self.tmp, k4, &mut self.scratch);
        for (i, r) in rho.iter_mut().enumerate() {
            *r += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }

    fn freeze(&self, t: f64) -> Frozen {
        self.reduced.freeze(self.controls, t)
    }

    /// One outer step, subdivided until full and doubled half steps agree.
    fn adaptive(&mut self, rho: &mut Vec<C64>, t: f64, h: f64, tol: f64, depth: u32) {
        let (f0, fm, f1) = (self.freeze(t), self.freeze(t + 0.5 * h), self.freeze(t + h));
        let mut full = rho.clone();
        self.rk4(&mut full, h, &f0, &fm, &f1);
        let mut halves = rho.clone();
        let (fq1, fq3) = (self.freeze(t + 0.25 * h), self.freeze(t + 0.75 * h));
        self.rk4(&mut halves, 0.5 * h, &f0, &fq1, &fm);
        self.rk4(&mut halves, 0.5 * h, &fm, &fq3, &f1);
        let err = full.iter().zip(&halves).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if err <= tol || depth >= 12 {
            *rho = halves;
        } else {
            self.adaptive(rho, t, 0.5 * h, tol, depth + 1);
            self.adaptive(rho, t + 0.5 * h, 0.5 * h, tol, depth + 1);
        }
    }
}

fn monitor(rho: &Operator, full_dim: usize, top: &[usize]) -> Monitor {
    let n = rho.dim();
    let trace = rho.trace();
    let mut min_eig = rho.min_eigenvalue_hermitian();
    if n < full_dim {
        min_eig = min_eig.min(0.0);
    }
    Monitor {
        trace_dev: (trace - C64::new(1.0, 0.0)).norm(),
        min_eig,
        herm: rho.hermiticity_residual(),
        leakage: top.iter().map(|&i| rho[(i, i)].re).sum(),
    }
}

fn breach(m: &Monitor, tol: &Tolerances, t: f64) -> Option<Error> {
    if m.trace_dev > tol.trace_dev {
        return Some(Error::ToleranceViolation { t, what: format!("trace deviation {:e}", m.trace_dev) });
    }
    if m.min_eig < tol.min_eig {
        return Some(Error::ToleranceViolation { t, what: format!("minimum eigenvalue {:e}", m.min_eig) });
    }
    if m.herm > tol.herm {
        return Some(Error::ToleranceViolation { t, what: format!("hermiticity residual {:e}", m.herm) });
    }
    if m.leakage > tol.leakage {
        return Some(Error::LeakageViolation { t, population: m.leakage, limit: tol.leakage });
    }
    None
}

/// Integrates and returns the trajectory, tolerance breaches included as a
/// flag rather than an error.
#[allow(clippy::too_many_arguments)]
pub fn integrate_generator(
    rho0: &Operator,
    generator: &Generator,
    controls: &ControlSet,
    t_span: (f64, f64),
    dt: f64,
    stride: usize,
    method: Method,
    tolerances: &Tolerances,
) -> Result<Trajectory> {
    if rho0.dim() != generator.dim {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dimension {}, generator {}",
            rho0.dim(),
            generator.dim
        )));
    }
    let grid = TimeGrid::new(t_span, dt, stride)?;
    let support = reachable_support(rho0, generator);
    let position: Vec<Option<usize>> = {
        let mut p = vec![None; generator.dim];
        for (k, &i) in support.iter().enumerate() {
            p[i] = Some(k);
        }
        p
    };
    let top: Vec<usize> = generator.top_levels.iter().filter_map(|&i| position[i]).collect();
    let reduced = Reduced::new(generator, &support);
    let (steps, h) = (grid.steps, grid.h);
    let blocks = steps / stride;

    let mut rho: Vec<C64> = rho0.submatrix(&support).as_slice().to_vec();
    let mut stepper = Stepper::new(reduced, controls);

    let mut traj = Trajectory {
        layout: None,
        support: support.clone(),
        dim: generator.dim,
        times: Vec::with_capacity(blocks + 1),
        states: Vec::with_capacity(blocks + 1),
        monitors: Vec::with_capacity(blocks + 1),
        dt: h,
        steps,
        violation: None,
    };
    let record = |traj: &mut Trajectory, t: f64, rho: &[C64]| -> Result<()> {
        let state = Operator::from_row_major(rho.to_vec())?;
        let m = monitor(&state, generator.dim, &top);
        if traj.violation.is_none() {
            traj.violation = breach(&m, tolerances, t);
        }
        traj.times.push(t);
        traj.states.push(state);
        traj.monitors.push(m);
        Ok(())
    };
    record(&mut traj, grid.time(0), &rho)?;

    let mut f_end: Option<(usize, Frozen)> = None;
    for k in 0..steps {
        let t = grid.time(k);
        match method {
            Method::RK4Fixed => {
                let f0 = match f_end.take() {
                    Some((kk, f)) if kk == k => f,
                    _ => stepper.freeze(t),
                };
                let fm = stepper.freeze(t + 0.5 * h);
                let t_next = grid.time(k + 1);
                let f1 = stepper.freeze(t_next);
                stepper.rk4(&mut rho, t_next - t, &f0, &fm, &f1);
                f_end = Some((k + 1, f1));
            }
            Method::RK4HalfStepAdaptive => {
                let t_next = grid.time(k + 1);
                stepper.adaptive(&mut rho, t, t_next - t, tolerances.step, 0);
            }
        }
        if (k + 1) % stride == 0 {
            record(&mut traj, grid.time(k + 1), &rho)?;
        }
    }
    debug_assert_eq!(traj.times.len(), blocks + 1);
    Ok(traj)
}

/// Builds the model for `config` and integrates without gating.
pub fn integrate_flagged(
    rho0: &Operator,
    config: &MoleculeConfig,
    controls: &ControlSet,
    t_span: (f64, f64),
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let model = Model::new(config, controls)?;
    integrate_model(rho0, &model, controls, t_span, icfg)
}

pub fn integrate_model(
    rho0: &Operator,
    model: &Model,
    controls: &ControlSet,
    t_span: (f64, f64),
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    icfg.validate()?;
    let (dt, stride) = icfg.resolve(model.max_rate(), model.config.gamma_ph);
    let generator = Generator::from_model(model);
    let mut traj = integrate_generator(rho0, &generator, controls, t_span, dt, stride, icfg.method, &icfg.tolerances)?;
    traj.layout = Some(model.layout.clone());
    Ok(traj)
}

/// Integrates and fails on the first tolerance breach.
pub fn integrate(
    rho0: &Operator,
    config: &MoleculeConfig,
    controls: &ControlSet,
    t_span: (f64, f64),
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_flagged(rho0, config, controls, t_span, icfg)?.checked()
}
