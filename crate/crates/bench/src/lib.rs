//! Fixed inputs shared by the benchmarks.

use wittfield_core::exactla::RationalMatrix;
use wittfield_core::random::{rng_for, Sampler};
use wittfield_core::{TruncationMode, TruncationWindow, VectorField};

pub const SEED: u64 = 7;

/// `count` random fields in 4 variables with monomials of length <= 3.
pub fn fields(count: usize) -> Vec<VectorField> {
    let mut rng = rng_for(SEED, 0);
    let s = Sampler::new(4, 3).with_terms(6);
    (0..count).map(|_| s.field(&mut rng)).collect()
}

/// Square matrix, about half zeros.
pub fn matrix(n: usize) -> RationalMatrix {
    Sampler::new(1, 0).matrix(&mut rng_for(SEED, 1), n, n)
}

pub fn window(max_var: u32, lo: i32, hi: i32) -> TruncationWindow {
    TruncationWindow::new(max_var, lo, hi, TruncationMode::Strict).expect("valid window")
}

/// A field in `window(3, -1, 2)` with many terms.
pub fn dense_w3() -> VectorField {
    Sampler::new(3, 3)
        .with_terms(12)
        .field_in(&mut rng_for(SEED, 2), &window(3, -1, 2))
}
