//! Seeded property checks behind `wittfield verify`.
//!
//! Each check owns a random stream derived from the suite seed and its id, so
//! results do not depend on which other checks run or in what order. A check
//! stops at its first exact mismatch and reports the inputs in field grammar.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::derivations::{
    self, centralizer, h1_report, normalize_euler, same_span, sl_centralizer_model, solve_inner, stabilization_scan,
    submodule_closure, verify_bracket_identities, DerivationSpec, GeneratorFamily, ScanTask, SubspaceSpec,
};
use crate::exactla::{self, RationalMatrix, SolveKind};
use crate::poly::{Monomial, Polynomial, Var};
use crate::random::{rng_for, Sampler};
use crate::textio::{from_json, parse_field, print_field, to_json};
use crate::witt::{
    apply_field, bracket, degree_components, euler, l_basis, sl_basis, BasisTerm, TruncationMode, TruncationWindow,
    VectorField,
};

type CheckFn = fn(&mut ChaCha8Rng, usize) -> Result<(), String>;

/// One named property.
#[derive(Clone, Copy)]
pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub default_cases: usize,
    run: CheckFn,
}

impl std::fmt::Debug for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Check").field("id", &self.id).finish()
    }
}

impl Check {
    pub fn module(&self) -> &'static str {
        self.id.split('.').next().unwrap_or(self.id)
    }

    /// Runs `cases` random instances (deterministic checks ignore `cases`).
    pub fn run(&self, seed: u64, cases: usize) -> CheckOutcome {
        let mut rng = rng_for(seed, stream_id(self.id));
        CheckOutcome {
            id: self.id,
            cases,
            counterexample: (self.run)(&mut rng, cases).err(),
        }
    }
}

/// FNV-1a, so streams are stable across registry edits.
fn stream_id(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub cases: usize,
    pub counterexample: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    /// Sorted by id.
    pub outcomes: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(CheckOutcome::passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| !o.passed())
    }
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 6] = ["all", "poly", "witt", "exactla", "derivations", "textio"];

/// Runs every check of `suite` (a module name or `all`) with default case
/// counts. `None` for an unknown suite.
pub fn run_suite(suite: &str, seed: u64) -> Option<SuiteReport> {
    if !SUITES.contains(&suite) {
        return None;
    }
    let selected: Vec<Check> = checks()
        .into_iter()
        .filter(|c| suite == "all" || c.module() == suite)
        .collect();
    let mut outcomes: Vec<CheckOutcome> = selected.par_iter().map(|c| c.run(seed, c.default_cases)).collect();
    outcomes.sort_by_key(|o| o.id);
    Some(SuiteReport {
        suite: suite.to_string(),
        seed,
        outcomes,
    })
}

pub fn find_check(id: &str) -> Option<Check> {
    checks().into_iter().find(|c| c.id == id)
}

pub fn checks() -> Vec<Check> {
    macro_rules! check {
        ($id:literal, $cases:expr, $desc:literal, $f:expr) => {
            Check {
                id: $id,
                description: $desc,
                default_cases: $cases,
                run: $f,
            }
        };
    }
    vec![
        check!(
            "poly.leibniz",
            200,
            "d(pq)/dx_i = (dp/dx_i) q + p dq/dx_i",
            poly_leibniz
        ),
        check!(
            "poly.partials_commute",
            200,
            "mixed partials commute",
            poly_partials_commute
        ),
        check!(
            "poly.ring_laws",
            200,
            "+ and * are commutative and associative",
            poly_ring_laws
        ),
        check!(
            "poly.normalization",
            200,
            "no stored zero coefficient or exponent",
            poly_normalization
        ),
        check!("witt.antisymmetry", 500, "[u,w] = -[w,u]", witt_antisymmetry),
        check!("witt.bilinearity", 500, "bracket is bilinear", witt_bilinearity),
        check!("witt.jacobi", 500, "Jacobi identity", witt_jacobi),
        check!(
            "witt.oracle",
            500,
            "[u,w] acts as the commutator of u and w on polynomials",
            witt_oracle
        ),
        check!("witt.grading", 300, "deg [u,w] = deg u + deg w", witt_grading),
        check!(
            "witt.euler_eigenvalue",
            300,
            "[E_n, w] = k w for w of degree k",
            witt_euler_eigenvalue
        ),
        check!(
            "witt.degree_components",
            300,
            "homogeneous parts sum back to w",
            witt_degree_components
        ),
        check!(
            "witt.bracket_identities",
            200,
            "closed forms for [w, x_j d_i] and [w, x_i d_i - x_j d_j]",
            witt_identities
        ),
        check!(
            "exactla.kernel",
            200,
            "M k = 0 for kernel vectors, rank + nullity = cols",
            exactla_kernel
        ),
        check!(
            "exactla.solve",
            200,
            "M x = b for reported particular solutions",
            exactla_solve
        ),
        check!(
            "exactla.determinism",
            100,
            "rref and kernel ignore row order",
            exactla_determinism
        ),
        check!(
            "derivations.centralizer_soundness",
            20,
            "[s, c] = 0 for returned c",
            derivations_centralizer_soundness
        ),
        check!(
            "derivations.centralizer_completeness",
            20,
            "centralizer dim = stacked kernel dim",
            derivations_centralizer_completeness
        ),
        check!(
            "derivations.sl_centralizer_shape",
            1,
            "sl_3 centralizer in 4 variables matches its model",
            derivations_sl_shape
        ),
        check!(
            "derivations.h1",
            1,
            "B^1 in Z^1 and H^1 = 0 on the small grid",
            derivations_h1
        ),
        check!(
            "derivations.inner_is_derivation",
            30,
            "ad(w) passes the cocycle check",
            derivations_inner_is_derivation
        ),
        check!(
            "derivations.solve_inner_roundtrip",
            100,
            "ad(w) on L_3 recovers w uniquely",
            derivations_roundtrip
        ),
        check!(
            "derivations.ambiguity",
            10,
            "sl-only kernel equals the sl centralizer",
            derivations_ambiguity
        ),
        check!(
            "derivations.rigidity",
            50,
            "no nonzero positive-degree field commutes with L_n",
            derivations_rigidity
        ),
        check!(
            "derivations.stabilization",
            3,
            "scans of fields in W_2 stabilize at the field",
            derivations_stabilization
        ),
        check!(
            "derivations.closure",
            1,
            "closure dimensions 3, 1, 4",
            derivations_closure
        ),
        check!("textio.roundtrip", 1000, "parse(print(w)) = w", textio_roundtrip),
        check!(
            "textio.canonical",
            300,
            "print(parse(.)) is canonical and idempotent",
            textio_canonical
        ),
        check!(
            "textio.fuzz",
            1000,
            "parser returns errors instead of panicking",
            textio_fuzz
        ),
        check!("textio.json", 500, "JSON round trip is lossless", textio_json),
    ]
}

fn fail<T>(msg: String) -> Result<T, String> {
    Err(msg)
}

fn pp(p: &Polynomial) -> String {
    p.to_string()
}

fn pf(w: &VectorField) -> String {
    print_field(w)
}

fn window(max_var: Var, lo: i32, hi: i32) -> TruncationWindow {
    TruncationWindow::new(max_var, lo, hi, TruncationMode::Strict).expect("valid window")
}

fn poly_leibniz(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let s = Sampler::new(4, 4);
    for _ in 0..cases {
        let (p, q, i) = (s.polynomial(rng), s.polynomial(rng), rng.gen_range(1..=4));
        let lhs = (&p * &q).partial(i);
        let rhs = &(&p.partial(i) * &q) + &(&p * &q.partial(i));
        if lhs != rhs {
            return fail(format!("p = {}; q = {}; i = {i}", pp(&p), pp(&q)));
        }
    }
    Ok(())
}

fn poly_partials_commute(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let s = Sampler::new(4, 4);
    for _ in 0..cases {
        let (p, i, j) = (s.polynomial(rng), rng.gen_range(1..=4), rng.gen_range(1..=4));
        if p.partial(i).partial(j) != p.partial(j).partial(i) {
            return fail(format!("p = {}; i = {i}; j = {j}", pp(&p)));
        }
    }
    Ok(())
}

fn poly_ring_laws(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let s = Sampler::new(4, 3);
    for _ in 0..cases {
        let (p, q, r) = (s.polynomial(rng), s.polynomial(rng), s.polynomial(rng));
        let ok = &p + &q == &q + &p
            && &p * &q == &q * &p
            && &(&p + &q) + &r == &p + &(&q + &r)
            && &(&p * &q) * &r == &p * &(&q * &r)
            && &p * &(&q + &r) == &(&p * &q) + &(&p * &r);
        if !ok {
            return fail(format!("p = {}; q = {}; r = {}", pp(&p), pp(&q), pp(&r)));
        }
    }
    Ok(())
}

fn normalized(p: &Polynomial) -> bool {
    p.terms()
        .all(|(m, c)| *c != Default::default() && m.iter().all(|(_, e)| e > 0))
}

fn poly_normalization(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let s = Sampler::new(4, 3);
    for _ in 0..cases {
        let (p, q, i) = (s.polynomial(rng), s.polynomial(rng), rng.gen_range(1..=4));
        let results = [
            &p + &q,
            &(&p + &q) - &q,
            &p * &q,
            p.partial(i),
            p.scale(&Default::default()),
        ];
        if let Some(bad) = results.iter().find(|r| !normalized(r)) {
            return fail(format!("p = {}; q = {}; result {bad:?}", pp(&p), pp(&q)));
        }
        let (u, w) = (
            VectorField::from_component(i, p.clone()),
            VectorField::from_component(1, q.clone()),
        );
        let b = bracket(&u, &w);
        if b.components().any(|(_, f)| f.is_zero() || !normalized(f)) {
            return fail(format!("u = {}; w = {}", pf(&u), pf(&w)));
        }
    }
    Ok(())
}

const FIELD: Sampler = Sampler {
    max_var: 4,
    max_len: 4,
    max_terms: 4,
    max_num: 5,
    max_den: 3,
};

fn witt_antisymmetry(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let (u, w) = (FIELD.field(rng), FIELD.field(rng));
        if bracket(&u, &w) != -bracket(&w, &u) {
            return fail(format!("u = {}; w = {}", pf(&u), pf(&w)));
        }
    }
    Ok(())
}

fn witt_bilinearity(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let (u, v, w) = (FIELD.field(rng), FIELD.field(rng), FIELD.field(rng));
        let (a, b) = (FIELD.rational(rng), FIELD.rational(rng));
        let combo = &u.scale(&a) + &v.scale(&b);
        let left = bracket(&combo, &w) == &bracket(&u, &w).scale(&a) + &bracket(&v, &w).scale(&b);
        let right = bracket(&w, &combo) == &bracket(&w, &u).scale(&a) + &bracket(&w, &v).scale(&b);
        if !(left && right) {
            return fail(format!(
                "u = {}; v = {}; w = {}; a = {a}; b = {b}",
                pf(&u),
                pf(&v),
                pf(&w)
            ));
        }
    }
    Ok(())
}

fn witt_jacobi(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let (u, v, w) = (FIELD.field(rng), FIELD.field(rng), FIELD.field(rng));
        let sum = &(&bracket(&u, &bracket(&v, &w)) + &bracket(&v, &bracket(&w, &u))) + &bracket(&w, &bracket(&u, &v));
        if !sum.is_zero() {
            return fail(format!("u = {}; v = {}; w = {}", pf(&u), pf(&v), pf(&w)));
        }
    }
    Ok(())
}

fn witt_oracle(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let (u, w, p) = (FIELD.field(rng), FIELD.field(rng), FIELD.polynomial(rng));
        let lhs = apply_field(&bracket(&u, &w), &p);
        let rhs = &apply_field(&u, &apply_field(&w, &p)) - &apply_field(&w, &apply_field(&u, &p));
        if lhs != rhs {
            return fail(format!("u = {}; w = {}; p = {}", pf(&u), pf(&w), pp(&p)));
        }
    }
    Ok(())
}

fn witt_grading(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let (a, b) = (rng.gen_range(-1..=3), rng.gen_range(-1..=3));
        let (u, w) = (FIELD.homogeneous_field(rng, a), FIELD.homogeneous_field(rng, b));
        let br = bracket(&u, &w);
        if !(br.is_zero() || br.is_homogeneous_of(a + b)) {
            return fail(format!("u = {} (degree {a}); w = {} (degree {b})", pf(&u), pf(&w)));
        }
    }
    Ok(())
}

fn witt_euler_eigenvalue(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let n = rng.gen_range(2..=4);
        let k = rng.gen_range(-1..=3);
        let w = Sampler::new(n, 0).homogeneous_field(rng, k);
        let e = euler(n).expect("n >= 1");
        if bracket(&e, &w) != w.scale(&crate::poly::Rational::from_integer(k.into())) {
            return fail(format!("n = {n}; k = {k}; w = {}", pf(&w)));
        }
    }
    Ok(())
}

fn witt_degree_components(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let w = FIELD.with_terms(8).field(rng);
        let parts = degree_components(&w);
        let mut sum = VectorField::zero();
        for (k, h) in &parts {
            if !h.field().is_homogeneous_of(*k) || h.degree() != *k {
                return fail(format!("w = {}; degree {k}", pf(&w)));
            }
            sum = sum + h.field().clone();
        }
        if sum != w {
            return fail(format!("w = {}", pf(&w)));
        }
    }
    Ok(())
}

fn witt_identities(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let w = FIELD.field(rng);
        let i = rng.gen_range(1..=4);
        let j = loop {
            let j = rng.gen_range(1..=4);
            if j != i {
                break j;
            }
        };
        if !verify_bracket_identities(&w, i, j) {
            return fail(format!("w = {}; i = {i}; j = {j}", pf(&w)));
        }
    }
    Ok(())
}

const MATRIX: Sampler = Sampler {
    max_var: 1,
    max_len: 0,
    max_terms: 0,
    max_num: 4,
    max_den: 3,
};

fn random_matrix(rng: &mut ChaCha8Rng) -> RationalMatrix {
    let (r, c) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
    MATRIX.matrix(rng, r, c)
}

fn exactla_kernel(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let m = random_matrix(rng);
        let k = exactla::kernel(&m);
        let annihilates = k
            .iter()
            .all(|v| m.mul_vec(v).expect("sized").iter().all(|x| *x == Default::default()));
        if !annihilates || exactla::rank(&m) + k.len() != m.cols() {
            return fail(format!("M = {m:?}"));
        }
    }
    Ok(())
}

fn exactla_solve(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let m = random_matrix(rng);
        let b = MATRIX.vector(rng, m.rows());
        let out = exactla::solve(&m, &b).expect("sized");
        let ok = match (&out.kind, &out.particular) {
            (SolveKind::Inconsistent, None) => true,
            (SolveKind::Unique, Some(x)) => out.kernel_basis.is_empty() && m.mul_vec(x).expect("sized") == b,
            (SolveKind::Underdetermined, Some(x)) => !out.kernel_basis.is_empty() && m.mul_vec(x).expect("sized") == b,
            _ => false,
        };
        if !ok {
            return fail(format!("M = {m:?}; b = {b:?}"));
        }
    }
    Ok(())
}

fn exactla_determinism(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let m = random_matrix(rng);
        let mut order: Vec<usize> = (0..m.rows()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
        let shuffled =
            RationalMatrix::from_rows(m.cols(), order.iter().map(|&r| m.row(r).to_vec()).collect()).expect("sized");
        if exactla::rref(&m) != exactla::rref(&shuffled) || exactla::kernel(&m) != exactla::kernel(&shuffled) {
            return fail(format!("M = {m:?}; row order {order:?}"));
        }
    }
    Ok(())
}

/// Random elements of span(L_n): closed ambient windows stay closed under them.
fn random_acting(rng: &mut ChaCha8Rng, n: u32) -> Vec<VectorField> {
    let s = Sampler::new(n, 1).with_terms(3);
    let count = rng.gen_range(1..=3);
    (0..count).map(|_| s.field_in(rng, &window(n, -1, 0))).collect()
}

fn derivations_centralizer_soundness(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let n = rng.gen_range(2..=3);
        let acting = random_acting(rng, n);
        let ambient = SubspaceSpec::from_window(window(n, -1, 2));
        let c = centralizer(&acting, &ambient).map_err(|e| e.to_string())?;
        for s in &acting {
            if let Some(bad) = c.iter().find(|x| !bracket(s, x).is_zero()) {
                return fail(format!("s = {}; c = {}", pf(s), pf(bad)));
            }
        }
    }
    Ok(())
}

fn derivations_centralizer_completeness(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let n = rng.gen_range(2..=3);
        let acting = random_acting(rng, n);
        let ambient = SubspaceSpec::from_window(window(n, -1, 2));
        let c = centralizer(&acting, &ambient).map_err(|e| e.to_string())?;
        let stacked = derivations::stacked_action_matrix(&acting, &ambient).map_err(|e| e.to_string())?;
        let k = exactla::kernel(&stacked).len();
        if c.len() != k {
            let s: Vec<String> = acting.iter().map(pf).collect();
            return fail(format!(
                "S = [{}]; centralizer dim {} vs kernel dim {k}",
                s.join("; "),
                c.len()
            ));
        }
    }
    Ok(())
}

fn derivations_sl_shape(_: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let sl3 = sl_basis(3).expect("n >= 2");
    for (hi, dim) in [(1, 5), (2, 7)] {
        let win = window(4, -1, hi);
        let c = centralizer(&sl3, &SubspaceSpec::from_window(win)).map_err(|e| e.to_string())?;
        let model = sl_centralizer_model(3, &win).map_err(|e| e.to_string())?;
        if c.len() != dim || !same_span(&c, &model) {
            let got: Vec<String> = c.iter().map(pf).collect();
            return fail(format!("window {win}: centralizer [{}]", got.join("; ")));
        }
    }
    Ok(())
}

fn derivations_h1(_: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    for n in 2..=3 {
        for k in -1..=1 {
            for m in n..=n + 1 {
                let module = SubspaceSpec::homogeneous(m, k).map_err(|e| e.to_string())?;
                let r = h1_report(n, &module).map_err(|e| e.to_string())?;
                if !r.coboundaries_are_cocycles || r.h1() != 0 {
                    return fail(format!("n = {n}; k = {k}; m = {m}; {r:?}"));
                }
            }
        }
    }
    Ok(())
}

fn derivations_inner_is_derivation(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let gens = l_basis(3).expect("n >= 1");
    for _ in 0..cases {
        let w = Sampler::new(3, 3).field(rng);
        if let Err(e) = DerivationSpec::inner(gens.clone(), &w) {
            return fail(format!("w = {}; {e}", pf(&w)));
        }
    }
    Ok(())
}

/// Fields with terms in variables `<= 3` and degrees `-1..=2`.
pub fn roundtrip_window() -> TruncationWindow {
    window(3, -1, 2)
}

fn derivations_roundtrip(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    let gens = l_basis(3).expect("n >= 1");
    let win = roundtrip_window();
    let search = SubspaceSpec::from_window(win);
    let s = Sampler::new(3, 3).with_terms(6);
    for _ in 0..cases {
        let w = s.field_in(rng, &win);
        let d = DerivationSpec::inner(gens.clone(), &w).map_err(|e| format!("w = {}; {e}", pf(&w)))?;
        match solve_inner(&d, &search) {
            Ok(sol) if sol.is_unique() && sol.particular == w => {}
            Ok(sol) => {
                return fail(format!(
                    "w = {}; recovered {} with kernel dim {}",
                    pf(&w),
                    pf(&sol.particular),
                    sol.kernel.len()
                ))
            }
            Err(e) => return fail(format!("w = {}; {e}", pf(&w))),
        }
    }
    Ok(())
}

fn derivations_ambiguity(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let n = rng.gen_range(2..=3);
        let win = window(n, -1, 2);
        let search = SubspaceSpec::from_window(win);
        let w = Sampler::new(n, 3).with_terms(5).field_in(rng, &win);
        let gens = sl_basis(n).expect("n >= 2");
        let d = DerivationSpec::inner(gens.clone(), &w).map_err(|e| e.to_string())?;
        let sol = solve_inner(&d, &search).map_err(|e| format!("w = {}; {e}", pf(&w)))?;
        let c = centralizer(&gens, &search).map_err(|e| e.to_string())?;
        let e = euler(n).expect("n >= 1");
        let recovered = &sol.particular - &w;
        let ok = same_span(&sol.kernel, &c)
            && same_span(&sol.kernel, std::slice::from_ref(&e))
            && (recovered.is_zero() || same_span(&[recovered.clone(), e.clone()], std::slice::from_ref(&e)));
        if !ok {
            return fail(format!("n = {n}; w = {}; particular {}", pf(&w), pf(&sol.particular)));
        }
    }
    Ok(())
}

fn derivations_rigidity(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for n in 2..=3 {
        let win = window(n, 1, 3).with_mode(TruncationMode::Project);
        let c =
            centralizer(&l_basis(n).expect("n >= 1"), &SubspaceSpec::from_window(win)).map_err(|e| e.to_string())?;
        if !c.is_empty() {
            return fail(format!("n = {n}: nonzero commuting field {}", pf(&c[0])));
        }
    }
    for _ in 0..cases {
        let n = rng.gen_range(2..=3);
        let w = Sampler::new(n, 4).with_terms(4).field_in(rng, &window(n, 1, 3));
        if w.is_zero() {
            continue;
        }
        let gens = l_basis(n).expect("n >= 1");
        if gens.iter().all(|g| bracket(g, &w).is_zero()) {
            return fail(format!("n = {n}; w = {}", pf(&w)));
        }
    }
    Ok(())
}

/// Drops the `x_1 d/dx_1` term, which normalization would otherwise move
/// into every `x_k d/dx_k`.
pub fn without_x1_d1(w: &VectorField) -> VectorField {
    let t = BasisTerm::new(1, Monomial::var(1));
    let c = w.coeff(&t);
    let mut out = w.clone();
    out.add_term(t, -c);
    out
}

fn derivations_stabilization(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let w = without_x1_d1(&Sampler::new(2, 3).with_terms(4).field_in(rng, &window(2, -1, 2)));
        let task = ScanTask::SolveInner {
            w: w.clone(),
            family: GeneratorFamily::L,
            degree_max: 2,
        };
        let report = stabilization_scan(&task, 2..=4).map_err(|e| format!("w = {}; {e}", pf(&w)))?;
        if report.limit().as_ref() != Some(&normalize_euler(&w, 2)) {
            return fail(format!("w = {}; report {report:?}", pf(&w)));
        }
    }
    Ok(())
}

fn derivations_closure(_: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
    let cases = [
        (VectorField::partial(1), 3, window(3, -1, 2), 3),
        (euler(3).expect("n >= 1"), 3, window(3, -1, 2), 1),
        (VectorField::linear(1, 1), 2, window(2, 0, 0), 4),
    ];
    for (v, n, win, dim) in cases {
        let c = submodule_closure(&v, n, &SubspaceSpec::from_window(win)).map_err(|e| e.to_string())?;
        if c.len() != dim {
            return fail(format!(
                "v = {}; n = {n}; closure dim {} (expected {dim})",
                pf(&v),
                c.len()
            ));
        }
    }
    Ok(())
}

const TEXT: Sampler = Sampler {
    max_var: 12,
    max_len: 5,
    max_terms: 6,
    max_num: 1000,
    max_den: 97,
};

fn textio_roundtrip(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let w = TEXT.field(rng);
        let text = pf(&w);
        match parse_field(&text) {
            Ok(back) if back == w && pf(&back) == text => {}
            Ok(back) => return fail(format!("w = {text}; reparsed {}", pf(&back))),
            Err(e) => return fail(format!("w = {text}; {e}")),
        }
    }
    Ok(())
}

/// Renders terms in random order and spacing, with unit coefficients and
/// `*` separators chosen at random.
fn scrambled(rng: &mut ChaCha8Rng, terms: &[(BasisTerm, crate::poly::Rational)]) -> String {
    let pad = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { " " } else { "" };
    let mut out = String::new();
    for (k, (t, c)) in terms.iter().enumerate() {
        let neg = c < &Default::default();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(pad(rng));
            out.push(if neg { '-' } else { '+' });
            out.push_str(pad(rng));
        }
        let abs = if neg { -c.clone() } else { c.clone() };
        out.push_str(&abs.to_string());
        out.push_str(if rng.gen_bool(0.5) { "*" } else { " " });
        if !t.monomial.is_one() {
            let factors: Vec<String> = t
                .monomial
                .iter()
                .flat_map(|(v, e)| (0..e).map(move |_| format!("x{v}")))
                .collect();
            out.push_str(&factors.join("*"));
            out.push(' ');
        }
        out.push_str(&format!("d{}", t.direction));
    }
    out
}

fn textio_canonical(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let w = TEXT.field(rng);
        let mut terms: Vec<_> = w.terms().map(|(t, c)| (t, c.clone())).collect();
        if terms.is_empty() {
            continue;
        }
        rand::seq::SliceRandom::shuffle(terms.as_mut_slice(), rng);
        let text = scrambled(rng, &terms);
        let parsed = parse_field(&text).map_err(|e| format!("input {text:?}: {e}"))?;
        let once = pf(&parsed);
        let twice = parse_field(&once).map(|x| pf(&x));
        if parsed != w || once != pf(&w) || twice.as_ref() != Ok(&once) {
            return fail(format!("input {text:?}; printed {once}"));
        }
    }
    Ok(())
}

fn textio_fuzz(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    const ALPHABET: &[u8] = b"xd0123456789 */^+-\n";
    for case in 0..cases {
        let len = rng.gen_range(0..32);
        let bytes: Vec<u8> = if case % 2 == 0 {
            (0..len).map(|_| rng.gen()).collect()
        } else {
            (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
        };
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let outcome = std::panic::catch_unwind(|| {
            let _ = parse_field(&text);
            let _ = crate::textio::parse_polynomial(&text);
        });
        if outcome.is_err() {
            return fail(format!("input {text:?} panicked"));
        }
    }
    Ok(())
}

fn textio_json(rng: &mut ChaCha8Rng, cases: usize) -> Result<(), String> {
    for _ in 0..cases {
        let w = TEXT.field(rng);
        match from_json::<VectorField>(&to_json(&w)) {
            Ok(back) if back == w => {}
            _ => return fail(format!("w = {}", pf(&w))),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique_and_sorted_by_module() {
        let ids: Vec<&str> = checks().iter().map(|c| c.id).collect();
        let mut dedup = ids.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), ids.len());
        assert!(checks().iter().all(|c| SUITES.contains(&c.module())));
    }

    #[test]
    fn suites_are_deterministic() {
        let a = run_suite("textio", 11).unwrap();
        let b = run_suite("textio", 11).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
        assert!(run_suite("nope", 1).is_none());
    }

    #[test]
    fn quick_checks_pass() {
        for c in checks() {
            if matches!(c.module(), "poly" | "witt" | "exactla") {
                let out = c.run(3, 20);
                assert!(out.passed(), "{}: {:?}", c.id, out.counterexample);
            }
        }
    }

    #[test]
    fn counterexamples_use_grammar() {
        fn broken(_: &mut ChaCha8Rng, _: usize) -> Result<(), String> {
            fail(format!("w = {}", pf(&VectorField::partial(2))))
        }
        let c = Check {
            id: "witt.broken",
            description: "",
            default_cases: 1,
            run: broken,
        };
        let out = c.run(0, 1);
        assert_eq!(out.counterexample.as_deref(), Some("w = d2"));
    }
}
