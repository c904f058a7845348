//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Variables are `x1, x2, ...` with 1-based, unbounded indices. There is no
//! variable registry: a polynomial only knows the variables its terms use.
//!
//! Monomials are ordered graded-lexicographically: lower total length first,
//! ties broken by comparing exponents from `x1` upward, where the larger
//! exponent of the lower-indexed variable comes first. So in two variables
//! the order is `1, x1, x2, x1^2, x1*x2, x2^2, ...`. This order drives both
//! printing and iteration.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Index of a variable `x_i`, always `>= 1`.
pub type Var = u32;

/// A monomial `x_{i1}^{e1} ... x_{ik}^{ek}` stored as a sparse exponent map.
///
/// No stored exponent is zero; the empty map is the unit monomial `1`.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    exponents: BTreeMap<Var, u32>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    /// The single variable `x_i`.
    pub fn var(i: Var) -> Self {
        assert!(i >= 1, "variable indices start at 1");
        let mut exponents = BTreeMap::new();
        exponents.insert(i, 1);
        Self { exponents }
    }

    /// Builds a monomial from `(variable, exponent)` pairs. Repeated variables
    /// accumulate and zero exponents are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (Var, u32)>>(pairs: I) -> Self {
        let mut exponents = BTreeMap::new();
        for (v, e) in pairs {
            assert!(v >= 1, "variable indices start at 1");
            if e > 0 {
                *exponents.entry(v).or_insert(0) += e;
            }
        }
        Self { exponents }
    }

    pub fn is_one(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Total number of variable occurrences, `sum of exponents`.
    pub fn length(&self) -> u32 {
        self.exponents.values().sum()
    }

    /// Exponent of `x_i` in this monomial, `0` when absent.
    pub fn var_degree(&self, i: Var) -> u32 {
        self.exponents.get(&i).copied().unwrap_or(0)
    }

    /// Largest variable index occurring, `0` for the unit monomial.
    pub fn max_var(&self) -> Var {
        self.exponents.keys().next_back().copied().unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.exponents.keys().copied()
    }

    /// `(variable, exponent)` pairs in ascending variable order.
    pub fn iter(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.exponents.iter().map(|(&v, &e)| (v, e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exponents = self.exponents.clone();
        for (&v, &e) in &other.exponents {
            *exponents.entry(v).or_insert(0) += e;
        }
        Monomial { exponents }
    }

    /// `self / x_i`, or `None` when `x_i` does not divide `self`.
    pub fn divide_var(&self, i: Var) -> Option<Monomial> {
        let e = self.var_degree(i);
        if e == 0 {
            return None;
        }
        let mut exponents = self.exponents.clone();
        if e == 1 {
            exponents.remove(&i);
        } else {
            exponents.insert(i, e - 1);
        }
        Some(Monomial { exponents })
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.length().cmp(&other.length()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.exponents.iter().peekable();
        let mut b = other.exponents.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                // Equal lengths: whoever runs out first has already matched
                // everything, so the other side cannot have extra mass.
                (None, Some(_)) => return Ordering::Greater,
                (Some(_), None) => return Ordering::Less,
                (Some(&(&va, &ea)), Some(&(&vb, &eb))) => {
                    if va != vb {
                        // The side owning the smaller variable has the larger
                        // exponent there and sorts first.
                        return va.cmp(&vb);
                    }
                    if ea != eb {
                        return eb.cmp(&ea);
                    }
                    a.next();
                    b.next();
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A finite rational linear combination of monomials.
///
/// Zero coefficients are never stored, so the zero polynomial is the empty
/// term map and structural equality is mathematical equality.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(Monomial::one(), c)
    }

    pub fn var(i: Var) -> Self {
        Self::monomial(Monomial::var(i), Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    /// Sums the given terms, merging repeated monomials and dropping zeros.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Adds `c * m` in place.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                let sum = slot.get() + c;
                if sum.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// Multiplies every term by the monomial `m`.
    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(t, a)| (t.mul(m), a.clone())).collect(),
        }
    }

    /// Formal partial derivative with respect to `x_i`.
    pub fn partial(&self, i: Var) -> Polynomial {
        assert!(i >= 1, "variable indices start at 1");
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let e = m.var_degree(i);
            if let Some(reduced) = m.divide_var(i) {
                out.add_term(reduced, c * Rational::from_integer(e.into()));
            }
        }
        out
    }

    /// Exact set of variables occurring in some term.
    pub fn support_vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    /// Largest variable index occurring, `0` for constants.
    pub fn max_var(&self) -> Var {
        self.terms.keys().map(Monomial::max_var).max().unwrap_or(0)
    }

    /// Largest monomial length among the terms, `None` for zero.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::length).max()
    }

    /// Splits into homogeneous parts keyed by monomial length.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, Polynomial> {
        let mut parts: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            parts.entry(m.length()).or_default().terms.insert(m.clone(), c.clone());
        }
        parts
    }
}

impl From<Monomial> for Polynomial {
    fn from(m: Monomial) -> Self {
        Polynomial::monomial(m, Rational::one())
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &'a Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Add for Polynomial {
    type Output = Polynomial;

    fn add(mut self, rhs: Polynomial) -> Polynomial {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &'a Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        -&self
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &'a Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}
