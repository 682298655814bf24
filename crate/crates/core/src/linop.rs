// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex operators on small tensor-product Hilbert spaces.
//!
//! Operators are stored row-major. Subsystem ordering in a [`SpaceLayout`]
//! follows the usual Kronecker convention: the first subsystem is the most
//! significant digit of the flat basis index. Local basis states are ordered
//! `|g⟩, |e⟩` for two-level systems and `|0⟩, |1⟩, …` for resonators.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension accepted by [`SpaceLayout`] and [`kron`].
pub const MAX_DIM: usize = 1024;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Square complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Operator { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op[(i, i)] = ONE;
        }
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Operator { dim, data }
    }

    /// Builds an operator from row-major entries; `entries.len()` must be a
    /// perfect square.
    pub fn from_row_major(entries: Vec<C64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() {
            return Err(Error::DimensionMismatch(format!("{} entries do not form a square matrix", entries.len())));
        }
        Ok(Operator { dim, data: entries })
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut op = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            op[(i, i)] = d;
        }
        op
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Operator { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Operator { dim: self.dim, data: self.data.iter().map(|&z| z * c).collect() }
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: C64, other: &Operator) {
        assert_eq!(self.dim, other.dim, "add_scaled: dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        (0..self.dim).map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff: dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |A - A†|` elementwise.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "apply: dimension mismatch");
        (0..self.dim)
            .map(|i| {
                let row = &self.data[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Restriction to the coordinate subspace spanned by `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), |i, j| self[(indices[i], indices[j])])
    }

    /// Embeds a matrix given on the coordinate subspace `indices` back into
    /// a space of dimension `dim`, zero elsewhere.
    pub fn expand(&self, indices: &[usize], dim: usize) -> Self {
        assert_eq!(self.dim, indices.len(), "expand: dimension mismatch");
        let mut out = Self::zeros(dim);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out[(i, j)] = self[(a, b)];
            }
        }
        out
    }

    /// `(row, col)` positions of nonzero entries.
    pub fn nonzero_pattern(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data.iter().enumerate().filter(|(_, z)| **z != ZERO).map(move |(k, _)| (k / self.dim, k % self.dim))
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let n = self.dim;
        let m = DMatrix::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue_hermitian(&self) -> f64 {
        self.eigenvalues_hermitian().first().copied().unwrap_or(0.0)
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        (self * self).trace().re
    }

    fn check_same_dim(&self, other: &Operator, what: &str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("{what}: {} vs {}", self.dim, other.dim)));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "matmul: dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Operator { dim: n, data: out }
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, c: C64) -> Operator {
        self.scale(c)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, c: f64) -> Operator {
        self.scale(C64::new(c, 0.0))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim, rhs.dim, "add: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Operator> for Operator {
    fn sub_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim, rhs.dim, "sub: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    &(a * b) - &(b * a)
}

pub fn anticommutator(a: &Operator, b: &Operator) -> Operator {
    &(a * b) + &(b * a)
}

/// `|ψ⟩⟨ψ|`
pub fn projector(psi: &[C64]) -> Operator {
    Operator::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
}

/// Ordered list of labelled subsystems making up a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    subsystems: Vec<(String, usize)>,
    total_dim: usize,
}

impl SpaceLayout {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<(String, usize)> = subsystems.into_iter().map(|(l, d)| (l.into(), d)).collect();
        let mut total: usize = 1;
        for (k, (label, dim)) in subsystems.iter().enumerate() {
            if subsystems[..k].iter().any(|(other, _)| other == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
            if *dim == 0 {
                return Err(Error::DimensionMismatch(format!("subsystem `{label}` has dimension 0")));
            }
            total = total.saturating_mul(*dim);
            if total > MAX_DIM {
                return Err(Error::DimensionOverflow { dim: total, limit: MAX_DIM });
            }
        }
        Ok(SpaceLayout { subsystems, total_dim: total })
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn subsystems(&self) -> &[(String, usize)] {
        &self.subsystems
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|(l, _)| l.as_str())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_ok()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems.iter().position(|(l, _)| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn local_dim(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.position(label)?].1)
    }

    /// Local level of every subsystem for a flat basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.subsystems.len()];
        for (k, (_, d)) in self.subsystems.iter().enumerate().rev() {
            digits[k] = index % d;
            index /= d;
        }
        digits
    }

    /// Flat basis index of a product basis state.
    pub fn index(&self, digits: &[usize]) -> usize {
        assert_eq!(digits.len(), self.subsystems.len());
        digits.iter().zip(&self.subsystems).fold(0, |acc, (&digit, (_, d))| acc * d + digit)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let dim = a.dim() * b.dim();
    if dim > MAX_DIM {
        return Err(Error::DimensionOverflow { dim, limit: MAX_DIM });
    }
    Ok(kron_unguarded(a, b))
}

pub(crate) fn kron_unguarded(a: &Operator, b: &Operator) -> Operator {
    let (m, n) = (a.dim(), b.dim());
    Operator::from_fn(m * n, |r, c| a[(r / n, c / n)] * b[(r % n, c % n)])
}

/// Lifts `local` onto subsystem `target` of `layout`, identity elsewhere.
pub fn embed(local: &Operator, layout: &SpaceLayout, target: &str) -> Result<Operator> {
    let pos = layout.position(target)?;
    let (_, local_dim) = &layout.subsystems()[pos];
    if local.dim() != *local_dim {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} embedded on `{target}` of dimension {local_dim}",
            local.dim()
        )));
    }
    let before: usize = layout.subsystems()[..pos].iter().map(|(_, d)| d).product();
    let after: usize = layout.subsystems()[pos + 1..].iter().map(|(_, d)| d).product();
    let left = kron_unguarded(&Operator::identity(before), local);
    Ok(kron_unguarded(&left, &Operator::identity(after)))
}

/// `Tr(ρA)`
pub fn expectation(rho: &Operator, a: &Operator) -> Result<C64> {
    rho.check_same_dim(a, "expectation")?;
    let n = rho.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += rho[(i, j)] * a[(j, i)];
        }
    }
    Ok(acc)
}

/// Reduced operator on the subsystems listed in `keep` (kept in layout order).
pub fn partial_trace(rho: &Operator, layout: &SpaceLayout, keep: &[&str]) -> Result<Operator> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    if rho.dim() != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} on a layout of dimension {}",
            rho.dim(),
            layout.total_dim()
        )));
    }
    let mut kept = vec![false; layout.subsystems().len()];
    for label in keep {
        kept[layout.position(label)?] = true;
    }
    let keep_dim: usize = layout.subsystems().iter().zip(&kept).filter(|(_, &k)| k).map(|((_, d), _)| d).product();

    // For each flat index: (index within kept factor, index within traced factor).
    let split: Vec<(usize, usize)> = (0..layout.total_dim())
        .map(|idx| {
            let digits = layout.digits(idx);
            let (mut ki, mut ti) = (0, 0);
            for ((digit, (_, d)), &k) in digits.iter().zip(layout.subsystems()).zip(&kept) {
                if k {
                    ki = ki * d + digit;
                } else {
                    ti = ti * d + digit;
                }
            }
            (ki, ti)
        })
        .collect();

    let mut out = Operator::zeros(keep_dim);
    for (i, &(ki, ti)) in split.iter().enumerate() {
        for (j, &(kj, tj)) in split.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += rho[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Matrix exponential by scaling and squaring around a truncated Taylor series.
pub fn matrix_exponential(a: &Operator) -> Operator {
    let n = a.dim();
    let norm = a.one_norm();
    if norm == 0.0 {
        return Operator::identity(n);
    }
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.scale(C64::new(0.5f64.powi(squarings), 0.0));

    let mut sum = Operator::identity(n);
    let mut term = Operator::identity(n);
    for k in 1..=40 {
        term = &term * &scaled;
        term = term.scale(C64::new(1.0 / k as f64, 0.0));
        sum += &term;
        if term.one_norm() <= f64::EPSILON * 1e-3 * sum.one_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_minus() -> Operator {
        let mut s = Operator::zeros(2);
        s[(0, 1)] = ONE;
        s
    }

    fn two_qubits() -> SpaceLayout {
        SpaceLayout::new([("q1", 2), ("q2", 2)]).unwrap()
    }

    fn psi_plus() -> Vec<C64> {
        // |gg⟩,|ge⟩,|eg⟩,|ee⟩
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![ZERO, c(0.0, h), c(h, 0.0), ZERO]
    }

    #[test]
    fn kron_identities() {
        let i2 = Operator::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), Operator::identity(4));
        let d = Operator::from_real_diag(&[1.0, 2.0]);
        assert_eq!(kron(&d, &i2).unwrap(), Operator::from_real_diag(&[1.0, 1.0, 2.0, 2.0]));
    }

    #[test]
    fn kron_lowering_acts_on_first_factor() {
        let op = kron(&sigma_minus(), &Operator::identity(2)).unwrap();
        // |e⟩⊗|g⟩ is flat index 2; |g⟩⊗|g⟩ is index 0.
        let eg = vec![ZERO, ZERO, ONE, ZERO];
        assert_eq!(op.apply(&eg), vec![ONE, ZERO, ZERO, ZERO]);
    }

    #[test]
    fn kron_guard() {
        let a = Operator::identity(64);
        assert!(matches!(kron(&a, &a), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn embed_definitions() {
        let layout = two_qubits();
        let s1 = embed(&sigma_minus(), &layout, "q1").unwrap();
        assert_eq!(s1, kron(&sigma_minus(), &Operator::identity(2)).unwrap());
        let id = embed(&Operator::identity(2), &layout, "q2").unwrap();
        assert_eq!(id, Operator::identity(4));
        let s2 = embed(&sigma_minus(), &layout, "q2").unwrap();
        assert!(commutator(&s1, &s2).is_zero());
    }

    #[test]
    fn embed_errors() {
        let layout = two_qubits();
        assert!(matches!(embed(&sigma_minus(), &layout, "r1"), Err(Error::UnknownLabel(_))));
        assert!(matches!(embed(&Operator::identity(3), &layout, "q1"), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn layout_guard_and_labels() {
        assert!(matches!(SpaceLayout::new([("a", 2), ("a", 2)]), Err(Error::DuplicateLabel(_))));
        assert!(matches!(SpaceLayout::new([("a", 32), ("b", 33)]), Err(Error::DimensionOverflow { .. })));
        let l = SpaceLayout::new([("q1", 2), ("r1", 3), ("q2", 2)]).unwrap();
        assert_eq!(l.total_dim(), 12);
        for idx in 0..12 {
            assert_eq!(l.index(&l.digits(idx)), idx);
        }
    }

    #[test]
    fn expectation_examples() {
        let excited = projector(&[ZERO, ONE]);
        let s = sigma_minus();
        let n = &s.dagger() * &s;
        assert_eq!(expectation(&excited, &n).unwrap(), ONE);

        let a = Operator::from_fn(3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let mixed = Operator::identity(3).scale(c(1.0 / 3.0, 0.0));
        let got = expectation(&mixed, &a).unwrap();
        assert!((got - a.trace() / 3.0).norm() < 1e-15);

        let layout = two_qubits();
        let l1 = embed(&s, &layout, "q1").unwrap();
        let l2 = embed(&s, &layout, "q2").unwrap();
        let rho = projector(&psi_plus());
        let v = expectation(&rho, &(&l1.dagger() * &l2)).unwrap();
        assert!((v - c(0.0, 0.5)).norm() < 1e-15);

        assert!(expectation(&rho, &Operator::identity(2)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let layout = two_qubits();
        let rho_a = Operator::from_fn(2, |i, j| {
            if i == j {
                c(0.3 + 0.4 * i as f64, 0.0)
            } else {
                c(0.1, 0.2 * (i as f64 - j as f64))
            }
        });
        let rho_b = Operator::from_real_diag(&[0.25, 0.75]);
        let prod = kron(&rho_a, &rho_b).unwrap();
        let red = partial_trace(&prod, &layout, &["q1"]).unwrap();
        assert!(red.max_abs_diff(&rho_a) < 1e-15);

        let red = partial_trace(&projector(&psi_plus()), &layout, &["q1"]).unwrap();
        assert!(red.max_abs_diff(&Operator::from_real_diag(&[0.5, 0.5])) < 1e-15);

        assert!(matches!(partial_trace(&prod, &layout, &[]), Err(Error::EmptyKeepSet)));
        assert!(matches!(partial_trace(&prod, &layout, &["x"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn partial_trace_keeps_layout_order() {
        let layout = SpaceLayout::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let ra = Operator::from_real_diag(&[0.2, 0.8]);
        let rb = Operator::from_real_diag(&[0.5, 0.3, 0.2]);
        let rc = Operator::from_real_diag(&[0.6, 0.4]);
        let full = kron(&kron(&ra, &rb).unwrap(), &rc).unwrap();
        let red = partial_trace(&full, &layout, &["c", "a"]).unwrap();
        assert!(red.max_abs_diff(&kron(&ra, &rc).unwrap()) < 1e-15);
    }

    #[test]
    fn exponential_examples() {
        assert_eq!(matrix_exponential(&Operator::zeros(3)), Operator::identity(3));

        let sx = Operator::from_fn(2, |i, j| if i != j { ONE } else { ZERO });
        let e = matrix_exponential(&sx.scale(c(0.0, std::f64::consts::PI)));
        assert!(e.max_abs_diff(&Operator::identity(2).scale(-ONE)) < 1e-13);

        let e = matrix_exponential(&Operator::from_real_diag(&[0.3, -2.0]));
        assert!(e.max_abs_diff(&Operator::from_real_diag(&[0.3f64.exp(), (-2.0f64).exp()])) < 1e-14);
    }

    fn arb_matrix(dim: usize, scale: f64) -> impl Strategy<Value = Operator> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |v| {
            Operator::from_row_major(v.into_iter().map(|(a, b)| c(a * scale, b * scale)).collect()).unwrap()
        })
    }

    fn arb_density(dim: usize) -> impl Strategy<Value = Operator> {
        arb_matrix(dim, 1.0).prop_map(|m| {
            let p = &m * &m.dagger();
            let tr = p.trace();
            p.scale(ONE / tr)
        })
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in arb_matrix(2, 1.0), b in arb_matrix(3, 1.0), cc in arb_matrix(2, 1.0)) {
            let left = kron(&kron(&a, &b).unwrap(), &cc).unwrap();
            let right = kron(&a, &kron(&b, &cc).unwrap()).unwrap();
            prop_assert!(left.max_abs_diff(&right) <= 1e-14);
        }

        #[test]
        fn embed_is_multiplicative(a in arb_matrix(3, 1.0), b in arb_matrix(3, 1.0)) {
            let layout = SpaceLayout::new([("q", 2), ("r", 3)]).unwrap();
            let lhs = embed(&(&a * &b), &layout, "r").unwrap();
            let rhs = &embed(&a, &layout, "r").unwrap() * &embed(&b, &layout, "r").unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-14);
        }

        #[test]
        fn embedded_on_distinct_labels_commute(a in arb_matrix(2, 1.0), b in arb_matrix(3, 1.0)) {
            let layout = SpaceLayout::new([("q", 2), ("r", 3)]).unwrap();
            let ea = embed(&a, &layout, "q").unwrap();
            let eb = embed(&b, &layout, "r").unwrap();
            prop_assert!(commutator(&ea, &eb).max_abs() == 0.0);
        }

        #[test]
        fn partial_trace_preserves_trace_and_positivity(rho in arb_density(6)) {
            let layout = SpaceLayout::new([("q", 2), ("r", 3)]).unwrap();
            for keep in [["q"], ["r"]] {
                let red = partial_trace(&rho, &layout, &keep).unwrap();
                prop_assert!((red.trace() - rho.trace()).norm() <= 1e-12);
                prop_assert!(red.min_eigenvalue_hermitian() >= -1e-10);
            }
        }

        #[test]
        fn expectation_of_positive_operator(rho in arb_density(4), a in arb_matrix(4, 2.0)) {
            let ata = &a.dagger() * &a;
            let v = expectation(&rho, &ata).unwrap();
            prop_assert!(v.re >= -1e-10);
            prop_assert!(v.im.abs() <= 1e-10);
        }

        #[test]
        fn exponential_inverse(a in arb_matrix(4, 1.7)) {
            // |entry| < 1.7·√2 keeps the 1-norm below 10
            let prod = &matrix_exponential(&a) * &matrix_exponential(&a.scale(-ONE));
            prop_assert!(prod.max_abs_diff(&Operator::identity(4)) <= 1e-10);
        }
    }
}
