// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use proptest::strategy::ValueTree;

use num_complex::Complex64 as C64;

use crate::linop::{Operator, ONE};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn arb_matrix(dim: usize, scale: f64) -> impl Strategy<Value = Operator> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |v| {
        Operator::from_row_major(v.into_iter().map(|(a, b)| c(a * scale, b * scale)).collect()).unwrap()
    })
}

pub fn arb_density(dim: usize) -> impl Strategy<Value = Operator> {
    arb_matrix(dim, 1.0).prop_map(|m| {
        let p = &m * &m.dagger();
        let tr = p.trace();
        p.scale(ONE / tr)
    })
}

/// A fixed full-rank density matrix, for tests that need one without shrinking.
pub fn sample_density(dim: usize, seed: u64) -> Operator {
    let mut runner = proptest::test_runner::TestRunner::new_with_rng(
        Default::default(),
        proptest::test_runner::TestRng::from_seed(proptest::test_runner::RngAlgorithm::ChaCha, &seed_bytes(seed)),
    );
    arb_density(dim).new_tree(&mut runner).unwrap().current()
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (k, chunk) in out.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k as u64)).to_le_bytes());
    }
    out
}
