//! Polynomial vector fields `sum f_i d/dx_i` with finite support, their Lie
//! bracket and degree grading, and the standard finite-dimensional
//! subalgebras spanned by linear and constant fields.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use num_traits::Zero;
use thiserror::Error;

use crate::poly::{Monomial, Polynomial, Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WittError {
    #[error("{family} basis needs n >= {min}, got {n}")]
    BasisTooSmall { family: &'static str, min: u32, n: u32 },
    #[error("invalid truncation window: {0}")]
    InvalidWindow(String),
    #[error("term {term} lies outside the truncation window ({window})")]
    OutsideWindow { term: BasisTerm, window: TruncationWindow },
}

/// A single basis element `m d/dx_i` of the space of vector fields.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct BasisTerm {
    pub direction: Var,
    pub monomial: Monomial,
}

impl BasisTerm {
    pub fn new(direction: Var, monomial: Monomial) -> Self {
        assert!(direction >= 1, "direction indices start at 1");
        Self { direction, monomial }
    }

    /// `length(m) - 1`, ranging over `-1, 0, 1, ...`.
    pub fn degree(&self) -> i32 {
        self.monomial.length() as i32 - 1
    }

    /// Largest variable or direction index involved.
    pub fn max_index(&self) -> Var {
        self.direction.max(self.monomial.max_var())
    }

    pub fn to_field(&self) -> VectorField {
        VectorField::from_component(self.direction, self.monomial.clone().into())
    }
}

/// A vector field `sum_i f_i d/dx_i` with finitely many nonzero components.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct VectorField {
    components: BTreeMap<Var, Polynomial>,
}

impl VectorField {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The coordinate field `d/dx_i`.
    pub fn partial(i: Var) -> Self {
        Self::from_component(i, Polynomial::one())
    }

    /// The field `f d/dx_i`.
    pub fn from_component(i: Var, f: Polynomial) -> Self {
        assert!(i >= 1, "direction indices start at 1");
        let mut components = BTreeMap::new();
        if !f.is_zero() {
            components.insert(i, f);
        }
        Self { components }
    }

    pub fn from_components<I: IntoIterator<Item = (Var, Polynomial)>>(items: I) -> Self {
        let mut w = Self::zero();
        for (i, f) in items {
            w.add_component(i, f);
        }
        w
    }

    /// `sum c * term` over the given terms.
    pub fn from_terms<I: IntoIterator<Item = (BasisTerm, Rational)>>(items: I) -> Self {
        let mut w = Self::zero();
        for (t, c) in items {
            w.add_term(t, c);
        }
        w
    }

    /// `x_i d/dx_j`.
    pub fn linear(i: Var, j: Var) -> Self {
        Self::from_component(j, Polynomial::var(i))
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, i: Var) -> Polynomial {
        self.components.get(&i).cloned().unwrap_or_default()
    }

    pub fn components(&self) -> impl Iterator<Item = (Var, &Polynomial)> + '_ {
        self.components.iter().map(|(&i, f)| (i, f))
    }

    /// All `(term, coefficient)` pairs ordered by direction, then monomial.
    pub fn terms(&self) -> impl Iterator<Item = (BasisTerm, &Rational)> + '_ {
        self.components
            .iter()
            .flat_map(|(&i, f)| f.terms().map(move |(m, c)| (BasisTerm::new(i, m.clone()), c)))
    }

    pub fn num_terms(&self) -> usize {
        self.components.values().map(Polynomial::num_terms).sum()
    }

    pub fn coeff(&self, t: &BasisTerm) -> Rational {
        self.components
            .get(&t.direction)
            .map_or_else(Rational::zero, |f| f.coeff(&t.monomial))
    }

    pub fn add_component(&mut self, i: Var, f: Polynomial) {
        if f.is_zero() {
            return;
        }
        let sum = match self.components.remove(&i) {
            Some(g) => g + f,
            None => f,
        };
        if !sum.is_zero() {
            self.components.insert(i, sum);
        }
    }

    pub fn add_term(&mut self, t: BasisTerm, c: Rational) {
        self.add_component(t.direction, Polynomial::monomial(t.monomial, c));
    }

    pub fn scale(&self, c: &Rational) -> VectorField {
        Self::from_components(self.components.iter().map(|(&i, f)| (i, f.scale(c))))
    }

    /// Multiplies every component by the polynomial `a`.
    pub fn mul_poly(&self, a: &Polynomial) -> VectorField {
        Self::from_components(self.components.iter().map(|(&i, f)| (i, f * a)))
    }

    /// Largest variable index occurring in a coefficient, `0` if none.
    pub fn max_variable(&self) -> Var {
        self.components.values().map(Polynomial::max_var).max().unwrap_or(0)
    }

    /// Largest direction index with a nonzero component, `0` for zero.
    pub fn max_direction(&self) -> Var {
        self.components.keys().next_back().copied().unwrap_or(0)
    }

    /// `max(max_variable, max_direction)`.
    pub fn max_index(&self) -> Var {
        self.max_variable().max(self.max_direction())
    }

    /// Whether every term has degree `k`.
    pub fn is_homogeneous_of(&self, k: i32) -> bool {
        self.terms().all(|(t, _)| t.degree() == k)
    }

    /// Lowest and highest term degree, `None` for zero.
    pub fn degree_range(&self) -> Option<(i32, i32)> {
        let mut it = self.terms().map(|(t, _)| t.degree());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d))))
    }
}

impl<'a> Add<&'a VectorField> for &'a VectorField {
    type Output = VectorField;

    fn add(self, rhs: &'a VectorField) -> VectorField {
        let mut out = self.clone();
        for (&i, f) in &rhs.components {
            out.add_component(i, f.clone());
        }
        out
    }
}

impl Add for VectorField {
    type Output = VectorField;

    fn add(mut self, rhs: VectorField) -> VectorField {
        for (i, f) in rhs.components {
            self.add_component(i, f);
        }
        self
    }
}

impl<'a> Sub<&'a VectorField> for &'a VectorField {
    type Output = VectorField;

    fn sub(self, rhs: &'a VectorField) -> VectorField {
        self + &(-rhs)
    }
}

impl Sub for VectorField {
    type Output = VectorField;

    fn sub(self, rhs: VectorField) -> VectorField {
        self + (-rhs)
    }
}

impl Neg for &VectorField {
    type Output = VectorField;

    fn neg(self) -> VectorField {
        VectorField {
            components: self.components.iter().map(|(&i, f)| (i, -f)).collect(),
        }
    }
}

impl Neg for VectorField {
    type Output = VectorField;

    fn neg(self) -> VectorField {
        -&self
    }
}

/// The derivation action `w(p) = sum_i f_i * dp/dx_i`.
pub fn apply_field(w: &VectorField, p: &Polynomial) -> Polynomial {
    let mut out = Polynomial::zero();
    for (i, f) in w.components() {
        let dp = p.partial(i);
        if !dp.is_zero() {
            out = out + f * &dp;
        }
    }
    out
}

/// Lie bracket of vector fields.
///
/// Expanded componentwise:
/// `[h d/dx_i, f d/dx_j] = h (df/dx_i) d/dx_j - f (dh/dx_j) d/dx_i`.
pub fn bracket(u: &VectorField, w: &VectorField) -> VectorField {
    let mut out = VectorField::zero();
    for (i, h) in u.components() {
        for (j, f) in w.components() {
            let df = f.partial(i);
            if !df.is_zero() {
                out.add_component(j, h * &df);
            }
            let dh = h.partial(j);
            if !dh.is_zero() {
                out.add_component(i, -(f * &dh));
            }
        }
    }
    out
}

/// A field whose terms all share one degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HomogeneousField {
    field: VectorField,
    degree: i32,
}

impl HomogeneousField {
    /// `None` unless every term of `field` has degree `degree`.
    pub fn new(field: VectorField, degree: i32) -> Option<Self> {
        (degree >= -1 && field.is_homogeneous_of(degree)).then_some(Self { field, degree })
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn into_field(self) -> VectorField {
        self.field
    }
}

/// Splits `w` into its homogeneous components; they sum back to `w`.
pub fn degree_components(w: &VectorField) -> BTreeMap<i32, HomogeneousField> {
    let mut parts: BTreeMap<i32, VectorField> = BTreeMap::new();
    for (i, f) in w.components() {
        for (len, part) in f.homogeneous_parts() {
            parts.entry(len as i32 - 1).or_default().add_component(i, part);
        }
    }
    parts
        .into_iter()
        .map(|(degree, field)| (degree, HomogeneousField { field, degree }))
        .collect()
}

/// Basis of the `sl_n` copy inside linear vector fields.
///
/// Order: `x_i d/dx_j` for `i != j` in lexicographic `(i, j)` order, then the
/// diagonal differences `x_i d/dx_i - x_{i+1} d/dx_{i+1}` for `i = 1..n-1`.
pub fn sl_basis(n: u32) -> Result<Vec<VectorField>, WittError> {
    if n < 2 {
        return Err(WittError::BasisTooSmall {
            family: "sl",
            min: 2,
            n,
        });
    }
    let mut basis = Vec::with_capacity((n * n - 1) as usize);
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                basis.push(VectorField::linear(i, j));
            }
        }
    }
    for i in 1..n {
        basis.push(&VectorField::linear(i, i) - &VectorField::linear(i + 1, i + 1));
    }
    Ok(basis)
}

/// All `x_i d/dx_j`, `i, j <= n`, in lexicographic `(i, j)` order.
pub fn gl_basis(n: u32) -> Result<Vec<VectorField>, WittError> {
    if n < 1 {
        return Err(WittError::BasisTooSmall {
            family: "gl",
            min: 1,
            n,
        });
    }
    Ok((1..=n)
        .flat_map(|i| (1..=n).map(move |j| VectorField::linear(i, j)))
        .collect())
}

/// `d/dx_1, ..., d/dx_n` followed by [`gl_basis`]`(n)`.
pub fn l_basis(n: u32) -> Result<Vec<VectorField>, WittError> {
    if n < 1 {
        return Err(WittError::BasisTooSmall { family: "L", min: 1, n });
    }
    let mut basis: Vec<VectorField> = (1..=n).map(VectorField::partial).collect();
    basis.extend(gl_basis(n)?);
    Ok(basis)
}

/// The Euler field `sum_{i <= n} x_i d/dx_i`.
pub fn euler(n: u32) -> Result<VectorField, WittError> {
    if n < 1 {
        return Err(WittError::BasisTooSmall {
            family: "Euler",
            min: 1,
            n,
        });
    }
    Ok(VectorField::from_components((1..=n).map(|i| (i, Polynomial::var(i)))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TruncationMode {
    /// Terms outside the window are an error.
    #[default]
    Strict,
    /// Terms outside the window are dropped.
    Project,
}

impl TruncationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TruncationMode::Strict => "strict",
            TruncationMode::Project => "project",
        }
    }
}

/// A finite box of basis terms: variable and direction indices up to
/// `max_var`, degrees in `[degree_min, degree_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncationWindow {
    max_var: Var,
    degree_min: i32,
    degree_max: i32,
    mode: TruncationMode,
}

impl TruncationWindow {
    pub fn new(max_var: Var, degree_min: i32, degree_max: i32, mode: TruncationMode) -> Result<Self, WittError> {
        if max_var < 1 {
            return Err(WittError::InvalidWindow("max_var must be >= 1".into()));
        }
        if degree_min < -1 {
            return Err(WittError::InvalidWindow("degree_min must be >= -1".into()));
        }
        if degree_min > degree_max {
            return Err(WittError::InvalidWindow(format!(
                "degree_min {degree_min} exceeds degree_max {degree_max}"
            )));
        }
        Ok(Self {
            max_var,
            degree_min,
            degree_max,
            mode,
        })
    }

    /// Strict window over degrees `-1..=degree_max`.
    pub fn strict(max_var: Var, degree_max: i32) -> Result<Self, WittError> {
        Self::new(max_var, -1, degree_max, TruncationMode::Strict)
    }

    pub fn max_var(&self) -> Var {
        self.max_var
    }

    pub fn degree_min(&self) -> i32 {
        self.degree_min
    }

    pub fn degree_max(&self) -> i32 {
        self.degree_max
    }

    pub fn mode(&self) -> TruncationMode {
        self.mode
    }

    pub fn with_mode(self, mode: TruncationMode) -> Self {
        Self { mode, ..self }
    }

    pub fn contains(&self, t: &BasisTerm) -> bool {
        let d = t.degree();
        t.max_index() <= self.max_var && d >= self.degree_min && d <= self.degree_max
    }

    pub fn contains_field(&self, w: &VectorField) -> bool {
        w.terms().all(|(t, _)| self.contains(&t))
    }

    /// Every basis term in the window, ordered by direction then monomial.
    pub fn terms(&self) -> Vec<BasisTerm> {
        let lengths = (self.degree_min + 1) as u32..=(self.degree_max + 1) as u32;
        let mut monomials = Vec::new();
        for len in lengths {
            monomials_of_length(self.max_var, len, &mut monomials);
        }
        monomials.sort();
        (1..=self.max_var)
            .flat_map(|i| monomials.iter().map(move |m| BasisTerm::new(i, m.clone())))
            .collect()
    }

    /// Number of basis terms in the window.
    pub fn dimension(&self) -> usize {
        let per_direction: usize = ((self.degree_min + 1)..=(self.degree_max + 1))
            .map(|len| binomial(self.max_var as usize + len as usize - 1, len as usize))
            .sum();
        per_direction * self.max_var as usize
    }
}

impl std::fmt::Display for TruncationWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "max_var={}, degrees {}..{}, {}",
            self.max_var,
            self.degree_min,
            self.degree_max,
            self.mode.as_str()
        )
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn monomials_of_length(max_var: Var, len: u32, out: &mut Vec<Monomial>) {
    fn rec(var: Var, max_var: Var, left: u32, acc: &mut Vec<(Var, u32)>, out: &mut Vec<Monomial>) {
        if var == max_var {
            acc.push((var, left));
            out.push(Monomial::from_pairs(acc.iter().copied()));
            acc.pop();
            return;
        }
        for e in (0..=left).rev() {
            acc.push((var, e));
            rec(var + 1, max_var, left - e, acc, out);
            acc.pop();
        }
    }
    rec(1, max_var, len, &mut Vec::new(), out);
}

/// Restricts `w` to `win`. In strict mode the first offending term (in
/// canonical order) is reported instead.
pub fn truncate(w: &VectorField, win: &TruncationWindow) -> Result<VectorField, WittError> {
    let mut out = VectorField::zero();
    for (t, c) in w.terms() {
        if win.contains(&t) {
            out.add_term(t, c.clone());
        } else if win.mode == TruncationMode::Strict {
            return Err(WittError::OutsideWindow { term: t, window: *win });
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::poly::tests::arb_poly;
    use proptest::prelude::*;

    fn x(i: Var) -> Polynomial {
        Polynomial::var(i)
    }

    fn d(i: Var) -> VectorField {
        VectorField::partial(i)
    }

    fn f(i: Var, p: Polynomial) -> VectorField {
        VectorField::from_component(i, p)
    }

    fn int(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    /// Commutator of the two derivations, read off on every coordinate
    /// function `x_k`. Independent of `bracket`.
    fn commutator_oracle(u: &VectorField, w: &VectorField) -> VectorField {
        let n = u.max_index().max(w.max_index()).max(1);
        VectorField::from_components((1..=n).map(|k| {
            let xk = x(k);
            let uw = apply_field(u, &apply_field(w, &xk));
            let wu = apply_field(w, &apply_field(u, &xk));
            (k, uw - wu)
        }))
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(bracket(&d(1), &VectorField::linear(1, 2)), d(2));
        assert_eq!(
            bracket(&VectorField::linear(1, 2), &VectorField::linear(2, 1)),
            &VectorField::linear(1, 1) - &VectorField::linear(2, 2)
        );
        let u = f(1, &x(1) * &x(2));
        let w = f(1, x(2));
        let expected = f(1, -(&x(2) * &x(2)));
        assert_eq!(commutator_oracle(&u, &w), expected);
        assert_eq!(bracket(&u, &w), expected);
    }

    #[test]
    fn apply_field_examples() {
        assert_eq!(apply_field(&VectorField::linear(1, 2), &x(2)), x(1));
        let w = f(3, &x(1) * &x(2));
        assert!(apply_field(&w, &Polynomial::one()).is_zero());
        let x1x2 = &x(1) * &x(2);
        // d/dx1 (x1 x2) = x2, d/dx2 (x1 x2) = x1, so the sum is 2 x1 x2
        assert_eq!(apply_field(&euler(2).unwrap(), &x1x2), x1x2.scale(&int(2)));
    }

    #[test]
    fn degree_components_examples() {
        let a = d(1);
        let b = f(2, &x(1) * &x(2));
        let comps = degree_components(&(&a + &b));
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[&-1].field(), &a);
        assert_eq!(comps[&1].field(), &b);
        assert!(degree_components(&VectorField::zero()).is_empty());
        let h = &VectorField::linear(1, 1) - &VectorField::linear(2, 2);
        let comps = degree_components(&h);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[&0].field(), &h);
    }

    #[test]
    fn basis_sizes() {
        let sl2 = sl_basis(2).unwrap();
        assert_eq!(
            sl2,
            vec![
                VectorField::linear(1, 2),
                VectorField::linear(2, 1),
                &VectorField::linear(1, 1) - &VectorField::linear(2, 2)
            ]
        );
        assert_eq!(sl_basis(3).unwrap().len(), 8);
        assert_eq!(gl_basis(3).unwrap().len(), 9);
        assert_eq!(l_basis(2).unwrap().len(), 6);
        assert!(sl_basis(1).is_err());
        assert!(gl_basis(0).is_err());
        assert!(l_basis(0).is_err());
        assert!(euler(0).is_err());
    }

    #[test]
    fn euler_examples() {
        for n in 2..=4 {
            let e = euler(n).unwrap();
            for s in sl_basis(n).unwrap() {
                assert!(bracket(&s, &e).is_zero());
            }
        }
        assert_eq!(bracket(&euler(2).unwrap(), &d(1)), -d(1));
        let w = f(3, &x(1) * &x(2));
        assert_eq!(bracket(&euler(3).unwrap(), &w), w);
    }

    #[test]
    fn truncate_examples() {
        let project = TruncationWindow::new(4, -1, 3, TruncationMode::Project).unwrap();
        let w = f(1, &x(1) + &x(5));
        assert_eq!(truncate(&w, &project).unwrap(), VectorField::linear(1, 1));

        let all = TruncationWindow::strict(5, 3).unwrap();
        assert_eq!(truncate(&w, &all).unwrap(), w);

        let strict = TruncationWindow::strict(4, 3).unwrap();
        match truncate(&VectorField::linear(5, 1), &strict) {
            Err(WittError::OutsideWindow { term, .. }) => {
                assert_eq!(term, BasisTerm::new(1, Monomial::var(5)));
            }
            other => panic!("expected window violation, got {other:?}"),
        }
    }

    #[test]
    fn window_terms_and_dimension() {
        let win = TruncationWindow::strict(2, 1).unwrap();
        let terms = win.terms();
        // monomials of length 0..=2 in two variables: 1 + 2 + 3, two directions
        assert_eq!(terms.len(), 12);
        assert_eq!(win.dimension(), 12);
        assert_eq!(terms[0], BasisTerm::new(1, Monomial::one()));
        assert!(terms.windows(2).all(|w| w[0] < w[1]));
        let deg0 = TruncationWindow::new(3, 0, 0, TruncationMode::Strict).unwrap();
        assert_eq!(deg0.terms().len(), 9);
        assert!(TruncationWindow::new(0, -1, 0, TruncationMode::Strict).is_err());
        assert!(TruncationWindow::new(2, 1, 0, TruncationMode::Strict).is_err());
        // constant fields only
        let consts = TruncationWindow::strict(3, -1).unwrap();
        assert_eq!(
            consts.terms(),
            (1..=3).map(|i| BasisTerm::new(i, Monomial::one())).collect::<Vec<_>>()
        );
    }

    pub(crate) fn arb_field(max_var: Var, max_len: u32) -> impl Strategy<Value = VectorField> {
        proptest::collection::vec((1..=max_var, arb_poly(max_var, max_len)), 0..4)
            .prop_map(VectorField::from_components)
    }

    fn l_op(i: Var, j: Var) -> VectorField {
        VectorField::linear(j, i)
    }

    proptest! {
        #[test]
        fn antisymmetry(u in arb_field(4, 3), w in arb_field(4, 3)) {
            prop_assert_eq!(bracket(&u, &w), -bracket(&w, &u));
        }

        #[test]
        fn jacobi(u in arb_field(3, 2), v in arb_field(3, 2), w in arb_field(3, 2)) {
            let total = bracket(&u, &bracket(&v, &w))
                + bracket(&v, &bracket(&w, &u))
                + bracket(&w, &bracket(&u, &v));
            prop_assert!(total.is_zero());
        }

        #[test]
        fn matches_commutator_oracle(u in arb_field(4, 3), w in arb_field(4, 3), p in arb_poly(4, 3)) {
            prop_assert_eq!(bracket(&u, &w), commutator_oracle(&u, &w));
            let lhs = apply_field(&bracket(&u, &w), &p);
            let rhs = apply_field(&u, &apply_field(&w, &p)) - apply_field(&w, &apply_field(&u, &p));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn grading_is_additive(u in arb_field(3, 3), w in arb_field(3, 3)) {
            for (a, hu) in degree_components(&u) {
                for (b, hw) in degree_components(&w) {
                    prop_assert!(bracket(hu.field(), hw.field()).is_homogeneous_of(a + b));
                }
            }
        }

        #[test]
        fn components_sum_back(w in arb_field(4, 3)) {
            let sum = degree_components(&w)
                .into_values()
                .fold(VectorField::zero(), |acc, h| acc + h.into_field());
            prop_assert_eq!(sum, w);
        }

        #[test]
        fn euler_eigenvalue(w in arb_field(3, 3)) {
            let e = euler(3).unwrap();
            for (k, h) in degree_components(&w) {
                prop_assert_eq!(bracket(&e, h.field()), h.field().scale(&int(k.into())));
            }
        }

        #[test]
        fn linear_field_identity(w in arb_field(4, 3), i in 1u32..=4, j in 1u32..=4) {
            prop_assume!(i != j);
            // [w, x_j d/dx_i] = f_j d/dx_i - sum_l x_j (df_l/dx_i) d/dx_l
            let mut expected = VectorField::from_component(i, w.component(j));
            for (l, fl) in w.components() {
                expected = expected - VectorField::from_component(l, &x(j) * &fl.partial(i));
            }
            prop_assert_eq!(bracket(&w, &l_op(i, j)), expected);
        }
    }
}
