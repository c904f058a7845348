//! Seeded samplers for polynomials, fields and matrices.
//!
//! Everything draws from a caller-supplied [`Rng`], so a fixed seed gives a
//! fixed sequence. [`rng_for`] derives independent streams from one seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exactla::RationalMatrix;
use crate::poly::{Monomial, Polynomial, Rational, Var};
use crate::witt::{BasisTerm, TruncationWindow, VectorField};

/// Generator for stream `stream` of `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Shape of sampled objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampler {
    pub max_var: Var,
    /// Largest monomial length.
    pub max_len: u32,
    pub max_terms: usize,
    /// Numerators lie in `-max_num..=max_num`.
    pub max_num: i64,
    /// Denominators lie in `1..=max_den`.
    pub max_den: i64,
}

impl Sampler {
    pub fn new(max_var: Var, max_len: u32) -> Self {
        Self {
            max_var,
            max_len,
            max_terms: 4,
            max_num: 5,
            max_den: 3,
        }
    }

    pub fn with_terms(self, max_terms: usize) -> Self {
        Self { max_terms, ..self }
    }

    /// May be zero.
    pub fn rational<R: Rng>(&self, rng: &mut R) -> Rational {
        let n = rng.gen_range(-self.max_num..=self.max_num);
        let d = rng.gen_range(1..=self.max_den);
        Rational::new(n.into(), d.into())
    }

    pub fn nonzero_rational<R: Rng>(&self, rng: &mut R) -> Rational {
        loop {
            let c = self.rational(rng);
            if c != Rational::default() {
                return c;
            }
        }
    }

    pub fn monomial_of_length<R: Rng>(&self, rng: &mut R, len: u32) -> Monomial {
        Monomial::from_pairs((0..len).map(|_| (rng.gen_range(1..=self.max_var), 1)))
    }

    pub fn monomial<R: Rng>(&self, rng: &mut R) -> Monomial {
        let len = rng.gen_range(0..=self.max_len);
        self.monomial_of_length(rng, len)
    }

    pub fn polynomial<R: Rng>(&self, rng: &mut R) -> Polynomial {
        let terms = rng.gen_range(0..=self.max_terms);
        Polynomial::from_terms((0..terms).map(|_| (self.monomial(rng), self.nonzero_rational(rng))))
    }

    pub fn field<R: Rng>(&self, rng: &mut R) -> VectorField {
        let terms = rng.gen_range(0..=self.max_terms);
        VectorField::from_terms((0..terms).map(|_| {
            let t = BasisTerm::new(rng.gen_range(1..=self.max_var), self.monomial(rng));
            (t, self.nonzero_rational(rng))
        }))
    }

    /// Homogeneous of degree `k >= -1`, possibly zero.
    pub fn homogeneous_field<R: Rng>(&self, rng: &mut R, k: i32) -> VectorField {
        assert!(k >= -1);
        let terms = rng.gen_range(0..=self.max_terms);
        VectorField::from_terms((0..terms).map(|_| {
            let m = self.monomial_of_length(rng, (k + 1) as u32);
            (
                BasisTerm::new(rng.gen_range(1..=self.max_var), m),
                self.nonzero_rational(rng),
            )
        }))
    }

    /// A field built from terms of `window`, ignoring this sampler's shape
    /// except for `max_terms` and coefficients.
    pub fn field_in<R: Rng>(&self, rng: &mut R, window: &TruncationWindow) -> VectorField {
        let terms = window.terms();
        let count = rng.gen_range(0..=self.max_terms.min(terms.len()));
        VectorField::from_terms(
            terms
                .choose_multiple(rng, count)
                .map(|t| (t.clone(), self.nonzero_rational(rng))),
        )
    }

    /// Dense matrix with roughly half the entries zero.
    pub fn matrix<R: Rng>(&self, rng: &mut R, rows: usize, cols: usize) -> RationalMatrix {
        let entries = (0..rows * cols)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Rational::default()
                } else {
                    self.rational(rng)
                }
            })
            .collect();
        RationalMatrix::from_entries(rows, cols, entries).expect("sized")
    }

    pub fn vector<R: Rng>(&self, rng: &mut R, len: usize) -> Vec<Rational> {
        (0..len).map(|_| self.rational(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witt::TruncationMode;

    #[test]
    fn same_seed_same_stream() {
        let s = Sampler::new(4, 3);
        let a: Vec<_> = (0..20)
            .map({
                let mut r = rng_for(7, 1);
                move |_| s.field(&mut r)
            })
            .collect();
        let b: Vec<_> = (0..20)
            .map({
                let mut r = rng_for(7, 1);
                move |_| s.field(&mut r)
            })
            .collect();
        assert_eq!(a, b);
        let mut other = rng_for(7, 2);
        assert_ne!(a, (0..20).map(|_| s.field(&mut other)).collect::<Vec<_>>());
    }

    #[test]
    fn samples_respect_shape() {
        let s = Sampler::new(3, 2).with_terms(6);
        let mut rng = rng_for(1, 0);
        let win = TruncationWindow::new(2, -1, 1, TruncationMode::Strict).unwrap();
        for _ in 0..200 {
            let w = s.field(&mut rng);
            assert!(w.max_index() <= 3);
            assert!(w.terms().all(|(t, _)| t.monomial.length() <= 2));
            let h = s.homogeneous_field(&mut rng, 1);
            assert!(h.is_zero() || h.is_homogeneous_of(1));
            assert!(win.contains_field(&s.field_in(&mut rng, &win)));
        }
    }
}
