//! Exact rational linear algebra: reduced row echelon form, rank, kernels and
//! linear solves.
//!
//! Every basis returned here comes from the reduced row echelon form, which is
//! unique for a given row space. Kernel bases use the free-variable
//! convention: one vector per non-pivot column `f`, with a `1` at `f`, zeros
//! at the other free columns and the negated RREF entries at pivot columns.
//! Identical inputs therefore give identical outputs, independent of how the
//! elimination was scheduled.
//!
//! Internally rows are kept sparse; matrices coming out of Lie brackets are
//! overwhelmingly zero.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Dense row-major matrix of rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self { rows, cols, entries })
    }

    /// Builds a matrix from rows of equal length. `cols` is needed for the
    /// zero-row case.
    pub fn from_rows(cols: usize, rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(Self { rows: n, cols, entries })
    }

    /// Convenience constructor from small integers.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect())
            .collect();
        Self::from_rows(cols, rows).expect("ragged integer matrix")
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<Rational>]) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(LinalgError::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    pub fn mul(&self, rhs: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
        if rhs.rows != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let b = rhs.get(k, c);
                    if !b.is_zero() {
                        let v = out.get(r, c) + a * b;
                        out.set(r, c, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
        if below.cols != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: below.cols,
            });
        }
        let mut entries = self.entries.clone();
        entries.extend(below.entries.iter().cloned());
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            entries,
        })
    }

    fn sparse_rows(&self) -> impl Iterator<Item = SparseRow> + '_ {
        (0..self.rows).map(move |r| {
            self.row(r)
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(c, v)| (c, v.clone()))
                .collect()
        })
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

/// A sparse row: `(column, value)` pairs, strictly ascending columns, no zeros.
pub type SparseRow = Vec<(usize, Rational)>;

/// `target -= factor * source` on sparse rows.
fn axpy(target: &SparseRow, factor: &Rational, source: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < source.len() {
        let take_target = j >= source.len() || (i < target.len() && target[i].0 < source[j].0);
        let take_source = i >= target.len() || (j < source.len() && source[j].0 < target[i].0);
        if take_target {
            out.push(target[i].clone());
            i += 1;
        } else if take_source {
            out.push((source[j].0, -(factor * &source[j].1)));
            j += 1;
        } else {
            let v = &target[i].1 - factor * &source[j].1;
            if !v.is_zero() {
                out.push((target[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn entry(row: &SparseRow, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|k| &row[k].1)
}

/// Row echelon form built one row at a time.
///
/// Each stored row has leading coefficient `1`. Rows are only reduced at
/// their leading column on insertion; [`Echelon::into_reduced`] finishes the
/// back-substitution.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    cols: usize,
    pivots: BTreeMap<usize, SparseRow>,
}

impl Echelon {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            pivots: BTreeMap::new(),
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.pivots.keys().copied().collect()
    }

    /// Reduces `row` against the stored pivots until its leading column is
    /// free. Returns the remainder (empty when `row` is in the span).
    pub fn reduce(&self, mut row: SparseRow) -> SparseRow {
        let mut start = 0;
        while start < row.len() {
            let (lead, coeff) = (row[start].0, row[start].1.clone());
            match self.pivots.get(&lead) {
                Some(pivot) => {
                    row = axpy(&row, &coeff, pivot);
                    // everything left of `lead` is untouched by the pivot row
                    start = row.partition_point(|(c, _)| *c < lead);
                }
                None => start += 1,
            }
        }
        row
    }

    /// Like [`Echelon::reduce`] but stops at the first free leading column.
    fn reduce_leading(&self, mut row: SparseRow) -> SparseRow {
        while let Some((lead, coeff)) = row.first().cloned() {
            match self.pivots.get(&lead) {
                Some(pivot) => row = axpy(&row, &coeff, pivot),
                None => break,
            }
        }
        row
    }

    /// Inserts a row. Returns the new pivot column, or `None` when the row was
    /// already in the span.
    pub fn insert(&mut self, row: SparseRow) -> Option<usize> {
        debug_assert!(row.iter().all(|(c, v)| *c < self.cols && !v.is_zero()));
        let row = self.reduce_leading(row);
        let (lead, coeff) = row.first().cloned()?;
        let inv = coeff.recip();
        let row: SparseRow = row.into_iter().map(|(c, v)| (c, v * &inv)).collect();
        self.pivots.insert(lead, row);
        Some(lead)
    }

    /// Whether `row` lies in the span of the inserted rows.
    pub fn contains(&self, row: SparseRow) -> bool {
        self.reduce(row).is_empty()
    }

    /// Back-substitutes so every pivot column is zero outside its pivot row.
    pub fn into_reduced(mut self) -> ReducedEchelon {
        let cols: Vec<usize> = self.pivots.keys().rev().copied().collect();
        for &p in &cols {
            let pivot = self.pivots[&p].clone();
            for (_, row) in self.pivots.range_mut(..p) {
                if let Some(c) = entry(row, p).cloned() {
                    *row = axpy(row, &c, &pivot);
                }
            }
        }
        ReducedEchelon {
            cols: self.cols,
            rows: self.pivots.into_iter().collect(),
        }
    }
}

/// Nonzero rows of a reduced row echelon form, ordered by pivot column.
#[derive(Clone, Debug)]
pub struct ReducedEchelon {
    cols: usize,
    rows: Vec<(usize, SparseRow)>,
}

impl ReducedEchelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.rows.iter().map(|(p, _)| *p).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &SparseRow> + '_ {
        self.rows.iter().map(|(_, r)| r)
    }

    /// Canonical nullspace basis of the first `cols` columns
    /// (see module docs).
    pub fn kernel_basis(&self, cols: usize) -> Vec<Vec<Rational>> {
        let pivots: Vec<usize> = self.pivot_columns().into_iter().filter(|&p| p < cols).collect();
        let is_pivot = {
            let mut v = vec![false; cols];
            for &p in &pivots {
                v[p] = true;
            }
            v
        };
        (0..cols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = vec![Rational::zero(); cols];
                v[f] = Rational::one();
                for (p, row) in &self.rows {
                    if *p >= cols {
                        continue;
                    }
                    if let Some(c) = entry(row, f) {
                        v[*p] = -c;
                    }
                }
                v
            })
            .collect()
    }

    pub fn to_matrix(&self, rows: usize) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(rows, self.cols);
        for (r, (_, row)) in self.rows.iter().enumerate() {
            for (c, v) in row {
                m.set(r, *c, v.clone());
            }
        }
        m
    }
}

fn echelon_of(m: &RationalMatrix) -> Echelon {
    let mut e = Echelon::new(m.cols);
    for row in m.sparse_rows() {
        if !row.is_empty() {
            e.insert(row);
        }
    }
    e
}

/// Reduced row echelon form with the same shape as `m`; zero rows last.
pub fn rref(m: &RationalMatrix) -> RationalMatrix {
    echelon_of(m).into_reduced().to_matrix(m.rows)
}

/// Pivot columns of `rref(m)`, ascending.
pub fn pivot_columns(m: &RationalMatrix) -> Vec<usize> {
    echelon_of(m).pivot_columns()
}

pub fn rank(m: &RationalMatrix) -> usize {
    echelon_of(m).rank()
}

/// Canonical nullspace basis; `dim = cols - rank`.
pub fn kernel(m: &RationalMatrix) -> Vec<Vec<Rational>> {
    echelon_of(m).into_reduced().kernel_basis(m.cols)
}

/// Inverse of a square matrix, `None` when singular.
pub fn inverse(m: &RationalMatrix) -> Option<RationalMatrix> {
    if m.rows != m.cols {
        return None;
    }
    let n = m.rows;
    let mut e = Echelon::new(2 * n);
    for (r, mut row) in m.sparse_rows().enumerate() {
        row.push((n + r, Rational::one()));
        e.insert(row);
    }
    let reduced = e.into_reduced();
    if reduced.pivot_columns().iter().any(|&p| p >= n) {
        return None;
    }
    let mut inv = RationalMatrix::zeros(n, n);
    for (r, (_, row)) in reduced.rows.iter().enumerate() {
        for (c, v) in row {
            if *c >= n {
                inv.set(r, c - n, v.clone());
            }
        }
    }
    Some(inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveKind {
    Unique,
    Underdetermined,
    Inconsistent,
}

impl SolveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveKind::Unique => "unique",
            SolveKind::Underdetermined => "underdetermined",
            SolveKind::Inconsistent => "inconsistent",
        }
    }
}

/// Result of an exact linear solve.
///
/// `particular` is absent exactly when the system is inconsistent;
/// `kernel_basis` is empty when the solution is unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub kind: SolveKind,
    pub particular: Option<Vec<Rational>>,
    pub kernel_basis: Vec<Vec<Rational>>,
}

/// Solves `m x = b`. The particular solution sets every free variable to 0.
pub fn solve(m: &RationalMatrix, b: &[Rational]) -> Result<SolveOutcome, LinalgError> {
    if b.len() != m.rows {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows,
            found: b.len(),
        });
    }
    let mut e = Echelon::new(m.cols + 1);
    for (mut row, rhs) in m.sparse_rows().zip(b) {
        if !rhs.is_zero() {
            row.push((m.cols, rhs.clone()));
        }
        if !row.is_empty() {
            e.insert(row);
        }
    }
    Ok(outcome_from_augmented(e.into_reduced(), m.cols))
}

pub(crate) fn outcome_from_augmented(reduced: ReducedEchelon, cols: usize) -> SolveOutcome {
    if reduced.pivot_columns().last() == Some(&cols) {
        return SolveOutcome {
            kind: SolveKind::Inconsistent,
            particular: None,
            kernel_basis: Vec::new(),
        };
    }
    let mut particular = vec![Rational::zero(); cols];
    for (p, row) in &reduced.rows {
        if let Some(v) = entry(row, cols) {
            particular[*p] = v.clone();
        }
    }
    let kernel_basis = reduced.kernel_basis(cols);
    let kind = if kernel_basis.is_empty() {
        SolveKind::Unique
    } else {
        SolveKind::Underdetermined
    };
    SolveOutcome {
        kind,
        particular: Some(particular),
        kernel_basis,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_integer(x.into())).collect()
    }

    #[test]
    fn rref_examples() {
        let id = RationalMatrix::identity(3);
        assert_eq!(rref(&id), id);
        let m = RationalMatrix::from_i64(&[&[2, 4], &[1, 2]]);
        assert_eq!(rref(&m), RationalMatrix::from_i64(&[&[1, 2], &[0, 0]]));
        let z = RationalMatrix::zeros(2, 3);
        assert_eq!(rref(&z), z);
    }

    #[test]
    fn rref_is_reduced() {
        let m = RationalMatrix::from_i64(&[&[0, 2, 4, 1], &[1, 1, 1, 1], &[1, 3, 5, 2]]);
        let half = Rational::new(1.into(), 2.into());
        let mut expected = RationalMatrix::from_i64(&[&[1, 0, -1, 0], &[0, 1, 2, 0], &[0, 0, 0, 0]]);
        expected.set(0, 3, half.clone());
        expected.set(1, 3, half);
        assert_eq!(rref(&m), expected);
        assert_eq!(pivot_columns(&m), vec![0, 1]);
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel(&RationalMatrix::identity(4)).is_empty());
        assert_eq!(kernel(&RationalMatrix::zeros(2, 3)).len(), 3);
        let k = kernel(&RationalMatrix::from_i64(&[&[1, 1]]));
        assert_eq!(k, vec![ints(&[-1, 1])]);
    }

    #[test]
    fn solve_examples() {
        let b = ints(&[3, -1, 7]);
        let out = solve(&RationalMatrix::identity(3), &b).unwrap();
        assert_eq!(out.kind, SolveKind::Unique);
        assert_eq!(out.particular, Some(b));
        assert!(out.kernel_basis.is_empty());

        let out = solve(&RationalMatrix::from_i64(&[&[1, 1]]), &ints(&[0])).unwrap();
        assert_eq!(out.kind, SolveKind::Underdetermined);
        assert_eq!(out.kernel_basis.len(), 1);

        let out = solve(&RationalMatrix::from_i64(&[&[0]]), &ints(&[1])).unwrap();
        assert_eq!(out.kind, SolveKind::Inconsistent);
        assert!(out.particular.is_none());
    }

    #[test]
    fn solve_dimension_mismatch() {
        let err = solve(&RationalMatrix::identity(2), &ints(&[1])).unwrap_err();
        assert_eq!(err, LinalgError::DimensionMismatch { expected: 2, found: 1 });
    }

    #[test]
    fn inverse_roundtrip() {
        let m = RationalMatrix::from_i64(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = inverse(&m).unwrap();
        assert_eq!(m.mul(&inv).unwrap(), RationalMatrix::identity(3));
        assert!(inverse(&RationalMatrix::from_i64(&[&[1, 2], &[2, 4]])).is_none());
    }

    fn arb_matrix() -> impl Strategy<Value = RationalMatrix> {
        (0usize..6, 0usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(prop_oneof![3 => Just(0i64), 2 => -3i64..=3], r * c)
                .prop_map(move |v| RationalMatrix::from_entries(r, c, ints(&v)).unwrap())
        })
    }

    proptest! {
        #[test]
        fn kernel_vectors_annihilate(m in arb_matrix()) {
            let k = kernel(&m);
            prop_assert_eq!(rank(&m) + k.len(), m.cols());
            for v in &k {
                prop_assert!(m.mul_vec(v).unwrap().iter().all(Zero::is_zero));
            }
        }

        #[test]
        fn particular_solves(m in arb_matrix(), seed in proptest::collection::vec(-3i64..=3, 6)) {
            let b: Vec<Rational> = ints(&seed[..m.rows()]);
            let out = solve(&m, &b).unwrap();
            if let Some(x) = &out.particular {
                prop_assert_eq!(m.mul_vec(x).unwrap(), b);
            } else {
                prop_assert_eq!(out.kind, SolveKind::Inconsistent);
            }
        }

        #[test]
        fn rref_is_idempotent_and_deterministic(m in arb_matrix()) {
            let r = rref(&m);
            prop_assert_eq!(rref(&r), r.clone());
            prop_assert_eq!(rref(&m.clone()), r);
        }

        #[test]
        fn rref_ignores_row_order(m in arb_matrix()) {
            let mut rows: Vec<Vec<Rational>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
            rows.reverse();
            let flipped = RationalMatrix::from_rows(m.cols(), rows).unwrap();
            prop_assert_eq!(rref(&flipped), rref(&m));
        }
    }
}
