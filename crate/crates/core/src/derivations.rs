//! Adjoint operators, centralizers, submodule closures, first cohomology of
//! `sl_n` with coefficients in finite windows of vector fields, and recovery
//! of the inner element `w` behind a derivation `x -> [x, w]` from its values
//! on a generating set.
//!
//! Everything reduces to exact linear algebra over coordinates, either in a
//! [`SubspaceSpec`] basis or in the monomial basis `m d/dx_i` of all fields
//! ("term coordinates"). Kernels come out in the canonical RREF convention of
//! [`crate::exactla`], so bases are reproducible.

use std::collections::{BTreeMap, HashMap};
use std::ops::RangeInclusive;

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::exactla::{self, Echelon, LinalgError, RationalMatrix, SparseRow};
use crate::poly::{Monomial, Polynomial, Rational, Var};
use crate::witt::{self, bracket, BasisTerm, TruncationMode, TruncationWindow, VectorField, WittError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivationError {
    #[error(transparent)]
    Witt(#[from] WittError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("basis element {index} is linearly dependent on the preceding ones")]
    DependentBasis { index: usize },
    #[error("basis element {index} has term {term} outside the window ({window})")]
    BasisOutsideWindow {
        index: usize,
        term: BasisTerm,
        window: TruncationWindow,
    },
    #[error("{context}: term {term} escapes the target span")]
    Escape { context: String, term: BasisTerm },
    #[error("{generators} generators but {values} values")]
    LengthMismatch { generators: usize, values: usize },
    #[error("derivation rule fails on generator pair ({a}, {b})")]
    CocycleViolation { a: usize, b: usize, residual: VectorField },
    #[error("no inner element in the search space: {0}")]
    Inconsistent(InconsistencyCertificate),
    #[error("parameter range is empty")]
    EmptyRange,
    #[error("at n = {n}: {source}")]
    AtParameter {
        n: u32,
        #[source]
        source: Box<DerivationError>,
    },
}

/// Names the first equation `[g, w] = d(g)` (generator index, term) that
/// contradicts the equations before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InconsistencyCertificate {
    pub generator: usize,
    pub term: BasisTerm,
    /// Nonzero right-hand side left after eliminating against earlier rows.
    pub residual: Rational,
}

impl std::fmt::Display for InconsistencyCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "coefficient of {} in d(generator {}) is unreachable (residual {})",
            self.term, self.generator, self.residual
        )
    }
}

/// Coordinates with respect to a linearly independent family of fields.
///
/// Precomputes a set of pivot terms on which the basis restricts to an
/// invertible square matrix; membership is confirmed by reconstruction.
#[derive(Clone, Debug)]
struct SpanCoordinates {
    basis: Vec<VectorField>,
    pivot_terms: Vec<BasisTerm>,
    inverse: RationalMatrix,
}

impl SpanCoordinates {
    fn new(basis: &[VectorField]) -> Result<Self, DerivationError> {
        let index = term_index(basis);
        let terms: Vec<&BasisTerm> = index.keys().collect();
        // rows = basis elements; pivot columns pick the independent terms
        let mut echelon = Echelon::new(terms.len());
        for (k, b) in basis.iter().enumerate() {
            if echelon.insert(sparse_in(b, &index)).is_none() {
                return Err(DerivationError::DependentBasis { index: k });
            }
        }
        let pivot_terms: Vec<BasisTerm> = echelon.pivot_columns().into_iter().map(|c| terms[c].clone()).collect();
        let dim = basis.len();
        let mut square = RationalMatrix::zeros(dim, dim);
        for (r, t) in pivot_terms.iter().enumerate() {
            for (k, b) in basis.iter().enumerate() {
                square.set(r, k, b.coeff(t));
            }
        }
        let inverse = exactla::inverse(&square).expect("pivot terms give an invertible minor");
        Ok(Self {
            basis: basis.to_vec(),
            pivot_terms,
            inverse,
        })
    }

    fn coordinates(&self, w: &VectorField) -> Result<Vec<Rational>, BasisTerm> {
        let restricted: Vec<Rational> = self.pivot_terms.iter().map(|t| w.coeff(t)).collect();
        let x = self.inverse.mul_vec(&restricted).expect("square inverse");
        let residual = w - &combine(&self.basis, &x);
        let offending = residual.terms().next().map(|(t, _)| t);
        match offending {
            Some(t) => Err(t),
            None => Ok(x),
        }
    }
}

/// All terms occurring in `fields`, numbered in canonical order.
fn term_index(fields: &[VectorField]) -> BTreeMap<BasisTerm, usize> {
    let mut index: BTreeMap<BasisTerm, usize> = BTreeMap::new();
    for w in fields {
        for (t, _) in w.terms() {
            index.entry(t).or_insert(0);
        }
    }
    for (k, v) in index.values_mut().enumerate() {
        *v = k;
    }
    index
}

fn sparse_in(w: &VectorField, index: &BTreeMap<BasisTerm, usize>) -> SparseRow {
    let mut row: SparseRow = w.terms().map(|(t, c)| (index[&t], c.clone())).collect();
    row.sort_by_key(|(c, _)| *c);
    row
}

fn combine(basis: &[VectorField], coeffs: &[Rational]) -> VectorField {
    let mut out = VectorField::zero();
    for (b, c) in basis.iter().zip(coeffs) {
        if !c.is_zero() {
            out = out + b.scale(c);
        }
    }
    out
}

#[derive(Clone, Debug)]
enum Coordinates {
    /// Basis is a list of distinct unit terms.
    Terms(HashMap<BasisTerm, usize>),
    General(SpanCoordinates),
}

/// A finite-dimensional space of fields given by an ordered basis inside a
/// truncation window.
#[derive(Clone, Debug)]
pub struct SubspaceSpec {
    basis: Vec<VectorField>,
    window: TruncationWindow,
    coords: Coordinates,
}

impl SubspaceSpec {
    /// Validates that every basis element lies in `window` and that the basis
    /// is linearly independent.
    pub fn new(basis: Vec<VectorField>, window: TruncationWindow) -> Result<Self, DerivationError> {
        for (index, b) in basis.iter().enumerate() {
            if let Some((term, _)) = b.terms().find(|(t, _)| !window.contains(t)) {
                return Err(DerivationError::BasisOutsideWindow { index, term, window });
            }
        }
        let unit_terms: Option<Vec<BasisTerm>> = basis
            .iter()
            .map(|b| {
                let mut it = b.terms();
                match (it.next(), it.next()) {
                    (Some((t, c)), None) if c.is_one() => Some(t),
                    _ => None,
                }
            })
            .collect();
        let coords = match unit_terms {
            Some(terms) => {
                let mut map = HashMap::with_capacity(terms.len());
                for (k, t) in terms.into_iter().enumerate() {
                    if map.insert(t, k).is_some() {
                        return Err(DerivationError::DependentBasis { index: k });
                    }
                }
                Coordinates::Terms(map)
            }
            None => Coordinates::General(SpanCoordinates::new(&basis)?),
        };
        Ok(Self { basis, window, coords })
    }

    /// The whole window: every basis term `m d/dx_i` it contains.
    pub fn from_window(window: TruncationWindow) -> Self {
        let basis: Vec<VectorField> = window.terms().iter().map(BasisTerm::to_field).collect();
        Self::new(basis, window).expect("window terms are independent and inside the window")
    }

    /// Homogeneous fields of degree `k` in variables and directions `<= max_var`.
    pub fn homogeneous(max_var: Var, k: i32) -> Result<Self, DerivationError> {
        Ok(Self::from_window(TruncationWindow::new(
            max_var,
            k,
            k,
            TruncationMode::Strict,
        )?))
    }

    pub fn basis(&self) -> &[VectorField] {
        &self.basis
    }

    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of `w` in this basis, or the first term that is not
    /// accounted for.
    pub fn coordinates(&self, w: &VectorField) -> Result<Vec<Rational>, BasisTerm> {
        match &self.coords {
            Coordinates::Terms(map) => {
                let mut x = vec![Rational::zero(); self.basis.len()];
                for (t, c) in w.terms() {
                    match map.get(&t) {
                        Some(&k) => x[k] = c.clone(),
                        None => return Err(t),
                    }
                }
                Ok(x)
            }
            Coordinates::General(span) => span.coordinates(w),
        }
    }

    /// Coordinates of an image vector: projected onto the window first when
    /// the window is in project mode.
    fn image_coordinates(
        &self,
        w: &VectorField,
        context: impl FnOnce() -> String,
    ) -> Result<Vec<Rational>, DerivationError> {
        let projected;
        let w = if self.window.mode() == TruncationMode::Project {
            projected = witt::truncate(w, &self.window)?;
            &projected
        } else {
            w
        };
        self.coordinates(w).map_err(|term| DerivationError::Escape {
            context: context(),
            term,
        })
    }

    pub fn contains(&self, w: &VectorField) -> bool {
        self.coordinates(w).is_ok()
    }

    /// `sum coeffs[k] * basis[k]`.
    pub fn combine(&self, coeffs: &[Rational]) -> VectorField {
        combine(&self.basis, coeffs)
    }
}

/// Matrix of `x -> [x, w]` from `domain` to `codomain` (column `k` holds the
/// image of `domain.basis()[k]`).
pub fn ad_matrix(
    w: &VectorField,
    domain: &SubspaceSpec,
    codomain: &SubspaceSpec,
) -> Result<RationalMatrix, DerivationError> {
    let columns = domain
        .basis()
        .iter()
        .enumerate()
        .map(|(k, x)| codomain.image_coordinates(&bracket(x, w), || format!("ad image of domain element {k}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RationalMatrix::from_columns(codomain.dim(), &columns)?)
}

/// Matrix of the module action `x -> [s, x]` on `module`.
pub fn action_matrix(s: &VectorField, module: &SubspaceSpec) -> Result<RationalMatrix, DerivationError> {
    let columns = module
        .basis()
        .iter()
        .enumerate()
        .map(|(k, x)| module.image_coordinates(&bracket(s, x), || format!("action on module element {k}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RationalMatrix::from_columns(module.dim(), &columns)?)
}

/// The action matrices of every `s` in `acting`, stacked vertically, in the
/// coordinates of `ambient`. Requires `ambient` to be closed under each `s`.
pub fn stacked_action_matrix(
    acting: &[VectorField],
    ambient: &SubspaceSpec,
) -> Result<RationalMatrix, DerivationError> {
    let mut stacked = RationalMatrix::zeros(0, ambient.dim());
    for s in acting {
        stacked = stacked.vstack(&action_matrix(s, ambient)?)?;
    }
    Ok(stacked)
}

/// Equations `[s, w] = 0` in term coordinates: one row per (actor, term).
fn commutation_rows(acting: &[VectorField], ambient: &SubspaceSpec) -> BTreeMap<(usize, BasisTerm), SparseRow> {
    let mut rows: BTreeMap<(usize, BasisTerm), SparseRow> = BTreeMap::new();
    for (a, s) in acting.iter().enumerate() {
        for (k, b) in ambient.basis().iter().enumerate() {
            for (t, c) in bracket(s, b).terms() {
                rows.entry((a, t)).or_default().push((k, c.clone()));
            }
        }
    }
    rows
}

/// Dimension of the linear span of `fields`.
pub fn span_dimension(fields: &[VectorField]) -> usize {
    let index = term_index(fields);
    let mut e = Echelon::new(index.len());
    for f in fields {
        let row = sparse_in(f, &index);
        if !row.is_empty() {
            e.insert(row);
        }
    }
    e.rank()
}

/// Whether `a` and `b` span the same space: each is contained in the span of
/// the other, tested by ranks.
pub fn same_span(a: &[VectorField], b: &[VectorField]) -> bool {
    let both: Vec<VectorField> = a.iter().chain(b).cloned().collect();
    let r = span_dimension(&both);
    span_dimension(a) == r && span_dimension(b) == r
}

/// Predicted centralizer of `sl_n` inside `window`: the fields `a E_n` and
/// `f d/dx_l` with `l > n`, where `a` and `f` are monomials in the variables
/// beyond `x_n`.
pub fn sl_centralizer_model(n: u32, window: &TruncationWindow) -> Result<Vec<VectorField>, DerivationError> {
    let e = witt::euler(n)?;
    let outer = |m: &Monomial| m.vars().all(|v| v > n);
    let mut model = Vec::new();
    for t in window.terms() {
        if !outer(&t.monomial) {
            continue;
        }
        if t.direction == 1 {
            let scaled = e.mul_poly(&Polynomial::from(t.monomial.clone()));
            if window.contains_field(&scaled) {
                model.push(scaled);
            }
        } else if t.direction > n {
            model.push(t.to_field());
        }
    }
    Ok(model)
}

/// Canonical basis of `{w in span(ambient) : [s, w] = 0 for all s}`.
///
/// In strict mode the ambient space must be closed under every `s`. The
/// commutation equations themselves are always exact: they are taken over all
/// terms of `[s, w]`, never over a projection.
pub fn centralizer(acting: &[VectorField], ambient: &SubspaceSpec) -> Result<Vec<VectorField>, DerivationError> {
    if ambient.window().mode() == TruncationMode::Strict {
        for (a, s) in acting.iter().enumerate() {
            for (k, b) in ambient.basis().iter().enumerate() {
                ambient.image_coordinates(&bracket(s, b), || {
                    format!("closure of ambient element {k} under actor {a}")
                })?;
            }
        }
    }
    let mut echelon = Echelon::new(ambient.dim());
    for row in commutation_rows(acting, ambient).into_values() {
        echelon.insert(row);
    }
    Ok(echelon
        .into_reduced()
        .kernel_basis(ambient.dim())
        .iter()
        .map(|v| ambient.combine(v))
        .collect())
}

/// Smallest `sl_n`-invariant subspace of `ambient` containing `v`, as the
/// list of orbit vectors that enlarged the span, in discovery order.
pub fn submodule_closure(v: &VectorField, n: u32, ambient: &SubspaceSpec) -> Result<Vec<VectorField>, DerivationError> {
    let acting = witt::sl_basis(n)?;
    let start = ambient.coordinates(v).map_err(|term| DerivationError::Escape {
        context: "seed vector".into(),
        term,
    })?;
    let mut echelon = Echelon::new(ambient.dim());
    let mut found = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    if echelon.insert(to_sparse(&start)).is_some() {
        found.push(v.clone());
        queue.push_back(v.clone());
    }
    while let Some(u) = queue.pop_front() {
        for (a, s) in acting.iter().enumerate() {
            let image = bracket(s, &u);
            let x = ambient.image_coordinates(&image, || format!("action of sl generator {a}"))?;
            if echelon.insert(to_sparse(&x)).is_some() {
                let image = ambient.combine(&x);
                found.push(image.clone());
                queue.push_back(image);
            }
        }
    }
    Ok(found)
}

fn to_sparse(v: &[Rational]) -> SparseRow {
    v.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k, c.clone()))
        .collect()
}

fn dot(row: &SparseRow, v: &[Rational]) -> Rational {
    row.iter()
        .filter(|(k, _)| !v[*k].is_zero())
        .fold(Rational::zero(), |acc, (k, c)| acc + c * &v[*k])
}

/// Dimensions behind an `H^1(sl_n, M)` computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomologyReport {
    /// `dim Z^1`: linear maps `c` with `c([a,b]) = a.c(b) - b.c(a)`.
    pub cocycles: usize,
    /// `dim B^1`: maps `a -> a.w`.
    pub coboundaries: usize,
    /// Whether every coboundary satisfied the cocycle equations.
    pub coboundaries_are_cocycles: bool,
}

impl CohomologyReport {
    pub fn h1(&self) -> usize {
        self.cocycles - self.coboundaries
    }
}

/// First cohomology of `sl_n` acting by brackets on `module`, which must be
/// closed under that action.
pub fn h1_report(n: u32, module: &SubspaceSpec) -> Result<CohomologyReport, DerivationError> {
    let gens = witt::sl_basis(n)?;
    let sl = SpanCoordinates::new(&gens)?;
    let count = gens.len();
    let dim = module.dim();
    let actions = gens
        .iter()
        .map(|g| action_matrix(g, module))
        .collect::<Result<Vec<_>, _>>()?;

    // Unknowns: c(g_0), ..., c(g_{N-1}) stacked, each in module coordinates.
    let cols = count * dim;
    let mut cocycle = Echelon::new(cols);
    for a in 0..count {
        for b in (a + 1)..count {
            let structure = sl
                .coordinates(&bracket(&gens[a], &gens[b]))
                .expect("sl_n is closed under brackets");
            for r in 0..dim {
                let mut entries: BTreeMap<usize, Rational> = BTreeMap::new();
                let mut add = |col: usize, v: Rational| {
                    if v.is_zero() {
                        return;
                    }
                    let e = entries.entry(col).or_insert_with(Rational::zero);
                    *e += v;
                };
                for (k, c) in structure.iter().enumerate() {
                    add(k * dim + r, c.clone());
                }
                for s in 0..dim {
                    add(b * dim + s, -actions[a].get(r, s).clone());
                    add(a * dim + s, actions[b].get(r, s).clone());
                }
                let row: SparseRow = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
                if !row.is_empty() {
                    cocycle.insert(row);
                }
            }
        }
    }
    let cocycles = cols - cocycle.rank();
    let equations = cocycle.into_reduced();

    let mut coboundary = Echelon::new(cols);
    let mut coboundaries_are_cocycles = true;
    for s in 0..dim {
        let image: Vec<Rational> = (0..count)
            .flat_map(|a| (0..dim).map(move |r| (a, r)))
            .map(|(a, r)| actions[a].get(r, s).clone())
            .collect();
        coboundaries_are_cocycles &= equations.rows().all(|row| dot(row, &image).is_zero());
        let sparse = to_sparse(&image);
        if !sparse.is_empty() {
            coboundary.insert(sparse);
        }
    }
    Ok(CohomologyReport {
        cocycles,
        coboundaries: coboundary.rank(),
        coboundaries_are_cocycles,
    })
}

/// `dim Z^1 - dim B^1` for `sl_n` acting on `module`.
pub fn h1_dimension(n: u32, module: &SubspaceSpec) -> Result<usize, DerivationError> {
    Ok(h1_report(n, module)?.h1())
}

/// Linear maps `d` on the fields of a window that vanish on `L_n` and obey
/// `d[a, b] = [d a, b] + [a, d b]` for every pair of window terms whose
/// bracket stays in the window. Pairs leaving the window are not constrained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedDerivations {
    /// Window terms; a table lists `d(t)` for each of them, in this order.
    pub terms: Vec<BasisTerm>,
    /// Canonical basis of the solution space.
    pub tables: Vec<Vec<VectorField>>,
    /// Term pairs whose bracket leaves the window.
    pub skipped_pairs: usize,
}

impl TruncatedDerivations {
    pub fn dimension(&self) -> usize {
        self.tables.len()
    }
}

/// Solves for [`TruncatedDerivations`]; the window must contain `L_n`.
pub fn truncated_derivations(n: u32, window: &TruncationWindow) -> Result<TruncatedDerivations, DerivationError> {
    let terms = window.terms();
    let dim = terms.len();
    let index: HashMap<&BasisTerm, usize> = terms.iter().enumerate().map(|(k, t)| (t, k)).collect();
    let unknown = |t: usize, s: usize| t * dim + s;
    let mut eqs = Echelon::new(dim * dim);

    for g in witt::l_basis(n)? {
        let (t, _) = g.terms().next().expect("basis fields are single terms");
        let Some(&k) = index.get(&t) else {
            return Err(WittError::OutsideWindow {
                term: t,
                window: *window,
            }
            .into());
        };
        for s in 0..dim {
            eqs.insert(vec![(unknown(k, s), Rational::one())]);
        }
    }

    let fields: Vec<VectorField> = terms.iter().map(BasisTerm::to_field).collect();
    let table: Vec<Vec<VectorField>> = fields
        .par_iter()
        .map(|s| fields.iter().map(|b| bracket(s, b)).collect())
        .collect();
    let mut skipped_pairs = 0;
    for a in 0..dim {
        for b in a + 1..dim {
            let c = &table[a][b];
            if !window.contains_field(c) {
                skipped_pairs += 1;
                continue;
            }
            // d(c) - [d a, b] - [a, d b], collected per output term
            let mut rows: BTreeMap<BasisTerm, BTreeMap<usize, Rational>> = BTreeMap::new();
            let mut add = |u: BasisTerm, var: usize, coeff: Rational| {
                let e = rows.entry(u).or_default().entry(var).or_insert_with(Rational::zero);
                *e += coeff;
            };
            for (t, ct) in c.terms() {
                let k = index[&t];
                for (s, u) in terms.iter().enumerate() {
                    add(u.clone(), unknown(k, s), ct.clone());
                }
            }
            for (s, row) in table.iter().enumerate().take(dim) {
                for (u, cu) in row[b].terms() {
                    add(u, unknown(a, s), -cu.clone());
                }
                // [a, s] = -[s, a]
                for (u, cu) in row[a].terms() {
                    add(u, unknown(b, s), cu.clone());
                }
            }
            for row in rows.into_values() {
                let row: SparseRow = row.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                if !row.is_empty() {
                    eqs.insert(row);
                }
            }
        }
    }

    let tables = eqs
        .into_reduced()
        .kernel_basis(dim * dim)
        .into_iter()
        .map(|v| {
            (0..dim)
                .map(|t| VectorField::from_terms((0..dim).map(|s| (terms[s].clone(), v[unknown(t, s)].clone()))))
                .collect()
        })
        .collect();
    Ok(TruncatedDerivations {
        terms,
        tables,
        skipped_pairs,
    })
}

/// Named generating families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorFamily {
    /// [`witt::sl_basis`].
    Sl,
    /// [`witt::l_basis`]: constant fields plus all linear fields.
    L,
}

impl GeneratorFamily {
    pub fn basis(self, n: u32) -> Result<Vec<VectorField>, DerivationError> {
        Ok(match self {
            GeneratorFamily::Sl => witt::sl_basis(n)?,
            GeneratorFamily::L => witt::l_basis(n)?,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorFamily::Sl => "sl",
            GeneratorFamily::L => "L",
        }
    }
}

/// Values of a derivation on an ordered generating set.
///
/// Construction checks the derivation rule
/// `d[a, b] = [d a, b] + [a, d b]` on every generator pair whose bracket lies
/// in the span of the generators; the other pairs are listed in
/// [`DerivationSpec::skipped_pairs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationSpec {
    generators: Vec<VectorField>,
    values: Vec<VectorField>,
    skipped_pairs: Vec<(usize, usize)>,
}

impl DerivationSpec {
    pub fn new(generators: Vec<VectorField>, values: Vec<VectorField>) -> Result<Self, DerivationError> {
        if generators.len() != values.len() {
            return Err(DerivationError::LengthMismatch {
                generators: generators.len(),
                values: values.len(),
            });
        }
        let span = SpanCoordinates::new(&generators)?;
        let mut skipped_pairs = Vec::new();
        for a in 0..generators.len() {
            for b in (a + 1)..generators.len() {
                let Ok(structure) = span.coordinates(&bracket(&generators[a], &generators[b])) else {
                    skipped_pairs.push((a, b));
                    continue;
                };
                let lhs = combine(&values, &structure);
                let rhs = bracket(&values[a], &generators[b]) + bracket(&generators[a], &values[b]);
                let residual = &lhs - &rhs;
                if !residual.is_zero() {
                    return Err(DerivationError::CocycleViolation { a, b, residual });
                }
            }
        }
        Ok(Self {
            generators,
            values,
            skipped_pairs,
        })
    }

    /// The restriction of `x -> [x, w]` to `generators`.
    pub fn inner(generators: Vec<VectorField>, w: &VectorField) -> Result<Self, DerivationError> {
        let values = generators.iter().map(|g| bracket(g, w)).collect();
        Self::new(generators, values)
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn values(&self) -> &[VectorField] {
        &self.values
    }

    pub fn skipped_pairs(&self) -> &[(usize, usize)] {
        &self.skipped_pairs
    }
}

/// Solution set of `[g, w] = d(g)` for all generators `g`, `w` ranging over a
/// search space: `particular + span(kernel)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerSolution {
    pub particular: VectorField,
    /// Canonical basis of the centralizer of the generators in the search
    /// space.
    pub kernel: Vec<VectorField>,
}

impl InnerSolution {
    pub fn is_unique(&self) -> bool {
        self.kernel.is_empty()
    }
}

/// A window large enough to hold every `[g, b]` with `b` in `search`.
pub fn default_codomain(d: &DerivationSpec, search: &SubspaceSpec) -> TruncationWindow {
    let gen_max_index = d.generators().iter().map(VectorField::max_index).max().unwrap_or(0);
    let gen_max_degree = d
        .generators()
        .iter()
        .filter_map(VectorField::degree_range)
        .map(|(_, hi)| hi)
        .max()
        .unwrap_or(0)
        .max(0);
    let win = search.window();
    TruncationWindow::new(
        win.max_var().max(gen_max_index),
        -1,
        win.degree_max() + gen_max_degree,
        TruncationMode::Strict,
    )
    .expect("valid window")
}

/// [`solve_inner_in`] with [`default_codomain`].
pub fn solve_inner(d: &DerivationSpec, search: &SubspaceSpec) -> Result<InnerSolution, DerivationError> {
    solve_inner_in(d, search, &default_codomain(d, search))
}

/// Solves `[g, w] = d(g)` for every generator `g` over `w` in `span(search)`.
///
/// Every image `[g, b]` (`b` in `search`) and every value `d(g)` is checked
/// against `codomain` first (or projected onto it in project mode).
/// Equations are visited in (generator, term) order; the first one that
/// contradicts its predecessors becomes the inconsistency certificate.
pub fn solve_inner_in(
    d: &DerivationSpec,
    search: &SubspaceSpec,
    codomain: &TruncationWindow,
) -> Result<InnerSolution, DerivationError> {
    let dim = search.dim();
    let mut rows: BTreeMap<(usize, BasisTerm), (SparseRow, Rational)> = BTreeMap::new();
    for (a, g) in d.generators().iter().enumerate() {
        for (k, b) in search.basis().iter().enumerate() {
            let image = witt::truncate(&bracket(g, b), codomain)?;
            for (t, c) in image.terms() {
                rows.entry((a, t))
                    .or_insert_with(|| (Vec::new(), Rational::zero()))
                    .0
                    .push((k, c.clone()));
            }
        }
        let value = witt::truncate(&d.values()[a], codomain)?;
        for (t, c) in value.terms() {
            rows.entry((a, t)).or_insert_with(|| (Vec::new(), Rational::zero())).1 = c.clone();
        }
    }

    let mut echelon = Echelon::new(dim + 1);
    for ((generator, term), (mut row, rhs)) in rows {
        if !rhs.is_zero() {
            row.push((dim, rhs));
        }
        if row.is_empty() {
            continue;
        }
        let remainder = echelon.reduce(row.clone());
        if let Some((lead, residual)) = remainder.first() {
            if *lead == dim {
                return Err(DerivationError::Inconsistent(InconsistencyCertificate {
                    generator,
                    term,
                    residual: residual.clone(),
                }));
            }
        }
        echelon.insert(row);
    }
    let outcome = exactla::outcome_from_augmented(echelon.into_reduced(), dim);
    let particular = search.combine(outcome.particular.as_deref().expect("consistent system"));
    let kernel = outcome.kernel_basis.iter().map(|v| search.combine(v)).collect();
    Ok(InnerSolution { particular, kernel })
}

/// Checks three closed forms against the generic bracket, for `i != j`:
///
/// * `[w, x_j d/dx_i] = f_j d/dx_i - sum_l x_j (df_l/dx_i) d/dx_l`
/// * its `d/dx_i`-component is `f_j - x_j df_i/dx_i`
/// * `[w, x_i d/dx_i - x_j d/dx_j] = f_i d/dx_i - f_j d/dx_j
///   + sum_l (x_j df_l/dx_j - x_i df_l/dx_i) d/dx_l`
pub fn verify_bracket_identities(w: &VectorField, i: Var, j: Var) -> bool {
    assert!(i != j, "identities need distinct indices");
    let (xi, xj) = (Polynomial::var(i), Polynomial::var(j));
    let (fi, fj) = (w.component(i), w.component(j));

    let lowering = bracket(w, &VectorField::linear(j, i));
    let mut closed = VectorField::from_component(i, fj.clone());
    for (l, fl) in w.components() {
        closed = closed - VectorField::from_component(l, &xj * &fl.partial(i));
    }
    let first = lowering == closed;

    let second = lowering.component(i) == &fj - &(&xj * &fi.partial(i));

    let diagonal = &VectorField::linear(i, i) - &VectorField::linear(j, j);
    let mut closed = &VectorField::from_component(i, fi) - &VectorField::from_component(j, fj);
    for (l, fl) in w.components() {
        let coeff = &(&fl.partial(j) * &xj) - &(&fl.partial(i) * &xi);
        closed = closed + VectorField::from_component(l, coeff);
    }
    let third = bracket(w, &diagonal) == closed;

    first && second && third
}

/// A per-parameter sequence and where it becomes constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory<T> {
    pub values: Vec<T>,
    /// Smallest parameter from which the sequence is constant to the end.
    pub first_stable_n: u32,
    /// Whether the constant tail covers at least the last two parameters
    /// (always true for a one-point range).
    pub stabilized: bool,
}

impl<T: PartialEq + Clone> Trajectory<T> {
    pub fn new(n_values: &[u32], values: Vec<T>) -> Self {
        assert_eq!(n_values.len(), values.len());
        assert!(!values.is_empty());
        let last = values.len() - 1;
        let mut start = last;
        while start > 0 && values[start - 1] == values[last] {
            start -= 1;
        }
        Self {
            first_stable_n: n_values[start],
            stabilized: values.len() == 1 || start < last,
            values,
        }
    }

    pub fn limit(&self) -> Option<&T> {
        self.stabilized.then(|| self.values.last()).flatten()
    }
}

/// Coefficient of one term across the scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTrajectory {
    pub term: BasisTerm,
    pub trajectory: Trajectory<Rational>,
}

/// What a stabilization scan runs at each `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanTask {
    /// Recover `w` from `x -> [x, w]` on `family(n)`, searching fields in
    /// variables `<= n` of degree `-1..=degree_max`.
    SolveInner {
        w: VectorField,
        family: GeneratorFamily,
        degree_max: i32,
    },
    /// Centralizer of `family(n)` among fields in variables
    /// `<= n + extra_vars` of degree `-1..=degree_max`.
    Centralizer {
        family: GeneratorFamily,
        degree_max: i32,
        extra_vars: u32,
    },
}

impl ScanTask {
    pub fn name(&self) -> &'static str {
        match self {
            ScanTask::SolveInner { .. } => "solve_inner",
            ScanTask::Centralizer { .. } => "centralizer",
        }
    }
}

/// Outcome of running a task for each `n` in a range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizationReport {
    pub task: String,
    pub n_values: Vec<u32>,
    /// Solution-space dimension per `n`: the kernel of the inner solve or the
    /// centralizer.
    pub dimensions: Trajectory<usize>,
    /// For `solve_inner`: the normalized particular solution per `n`.
    pub solutions: Vec<VectorField>,
    /// For `solve_inner`: every term seen in some normalized solution.
    pub coefficients: Vec<CoefficientTrajectory>,
}

impl StabilizationReport {
    pub fn all_stabilized(&self) -> bool {
        self.dimensions.stabilized && self.coefficients.iter().all(|c| c.trajectory.stabilized)
    }

    /// The field assembled from coefficient limits, when all stabilized.
    pub fn limit(&self) -> Option<VectorField> {
        if !self.all_stabilized() {
            return None;
        }
        Some(VectorField::from_terms(self.coefficients.iter().map(|c| {
            (c.term.clone(), c.trajectory.limit().cloned().unwrap_or_default())
        })))
    }
}

/// Removes the Euler-field component fixed by the `x_1 d/dx_1` coefficient:
/// `w - gamma * sum_{i <= n} x_i d/dx_i` with `gamma` the coefficient of
/// `x_1 d/dx_1` in `w`.
pub fn normalize_euler(w: &VectorField, n: u32) -> VectorField {
    let gamma = w.coeff(&BasisTerm::new(1, Monomial::var(1)));
    if gamma.is_zero() {
        return w.clone();
    }
    w - &witt::euler(n).expect("n >= 1").scale(&gamma)
}

struct ScanStep {
    dimension: usize,
    solution: Option<VectorField>,
}

fn scan_step(task: &ScanTask, n: u32) -> Result<ScanStep, DerivationError> {
    match task {
        ScanTask::SolveInner { w, family, degree_max } => {
            let gens = family.basis(n)?;
            let d = DerivationSpec::inner(gens, w)?;
            let search = SubspaceSpec::from_window(TruncationWindow::strict(n, *degree_max)?);
            let sol = solve_inner(&d, &search)?;
            Ok(ScanStep {
                dimension: sol.kernel.len(),
                solution: Some(normalize_euler(&sol.particular, n)),
            })
        }
        ScanTask::Centralizer {
            family,
            degree_max,
            extra_vars,
        } => {
            let gens = family.basis(n)?;
            let ambient = SubspaceSpec::from_window(TruncationWindow::strict(n + extra_vars, *degree_max)?);
            Ok(ScanStep {
                dimension: centralizer(&gens, &ambient)?.len(),
                solution: None,
            })
        }
    }
}

/// Runs `task` for every `n` in `n_range` (in parallel) and tracks how the
/// results evolve with `n`.
pub fn stabilization_scan(
    task: &ScanTask,
    n_range: RangeInclusive<u32>,
) -> Result<StabilizationReport, DerivationError> {
    let n_values: Vec<u32> = n_range.collect();
    if n_values.is_empty() {
        return Err(DerivationError::EmptyRange);
    }
    let steps: Vec<Result<ScanStep, DerivationError>> = n_values.par_iter().map(|&n| scan_step(task, n)).collect();
    let mut dimensions = Vec::with_capacity(steps.len());
    let mut solutions = Vec::new();
    for (&n, step) in n_values.iter().zip(steps) {
        let step = step.map_err(|e| DerivationError::AtParameter { n, source: Box::new(e) })?;
        dimensions.push(step.dimension);
        solutions.extend(step.solution);
    }

    let mut coefficients = Vec::new();
    if !solutions.is_empty() {
        let mut terms: Vec<BasisTerm> = solutions.iter().flat_map(|s| s.terms().map(|(t, _)| t)).collect();
        terms.sort();
        terms.dedup();
        coefficients = terms
            .into_iter()
            .map(|term| {
                let values = solutions.iter().map(|s| s.coeff(&term)).collect();
                CoefficientTrajectory {
                    trajectory: Trajectory::new(&n_values, values),
                    term,
                }
            })
            .collect();
    }
    Ok(StabilizationReport {
        task: task.name().to_string(),
        dimensions: Trajectory::new(&n_values, dimensions),
        n_values,
        solutions,
        coefficients,
    })
}
