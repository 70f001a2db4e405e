//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use lossyrand_core::harness::{Profile, ProfileSet};
use lossyrand_core::samplers::{ParameterSet, Setup, ValidationMode};
use lossyrand_core::zq::Modulus;

pub fn builtin(name: &str) -> Profile {
    ProfileSet::builtin().get(name).expect("shipped profile").clone()
}

pub fn setup(name: &str) -> Arc<Setup> {
    Setup::new(builtin(name).params)
}

/// A small trapdoor-capable set whose `w + 1` fits the dense Hadamard path.
pub fn small_dense() -> Arc<Setup> {
    let q = Modulus::new(17).expect("17 is a valid modulus");
    Setup::new(ParameterSet {
        lambda: 8,
        ell: 1,
        n: 2,
        m: 12,
        w: 10,
        q,
        b_l: 2,
        b_v: 3,
        b_p: 4,
        c_t: 1.0,
        mode: ValidationMode::Relaxed,
        strict: Default::default(),
    })
}
