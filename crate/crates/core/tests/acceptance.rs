//! Acceptance suite: one line per criterion, exact arithmetic, pinned time
//! budgets. Exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::Rng;
use wittfield_core::derivations::{
    centralizer, h1_report, same_span, solve_inner, span_dimension, stabilization_scan, submodule_closure,
    DerivationSpec, GeneratorFamily, ScanTask, SubspaceSpec,
};
use wittfield_core::random::{rng_for, Sampler};
use wittfield_core::textio::print_field;
use wittfield_core::verify::{find_check, roundtrip_window, without_x1_d1};
use wittfield_core::witt::{bracket, euler, l_basis, sl_basis, TruncationMode, TruncationWindow};
use wittfield_core::{Monomial, Polynomial, Rational, VectorField};

const SEED: u64 = 20_240_517;

type Outcome = Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn window(max_var: u32, lo: i32, hi: i32) -> TruncationWindow {
    TruncationWindow::new(max_var, lo, hi, TruncationMode::Strict).unwrap()
}

fn x(i: u32) -> Polynomial {
    Polynomial::var(i)
}

fn checks(ids: &[(&str, usize)]) -> Outcome {
    for &(id, cases) in ids {
        let check = find_check(id).ok_or(format!("no check {id}"))?;
        let out = check.run(SEED, cases);
        if let Some(cx) = out.counterexample {
            return Err(format!("{id}: {cx}"));
        }
    }
    let summary: Vec<String> = ids.iter().map(|(id, n)| format!("{id} x{n}")).collect();
    Ok(summary.join(", "))
}

fn bracket_correctness() -> Outcome {
    checks(&[
        ("witt.antisymmetry", 500),
        ("witt.bilinearity", 500),
        ("witt.jacobi", 500),
        ("witt.oracle", 500),
    ])
}

fn equation_identities() -> Outcome {
    checks(&[("witt.bracket_identities", 200)])
}

fn grading() -> Outcome {
    let mut rng = rng_for(SEED, 3);
    let mut cases = 0;
    for n in 2..=4 {
        let s = Sampler::new(n, 0).with_terms(5);
        let e = euler(n).unwrap();
        for k in -1..=3 {
            for _ in 0..10 {
                let w = s.homogeneous_field(&mut rng, k);
                let b = rng.gen_range(-1..=3);
                let u = s.homogeneous_field(&mut rng, b);
                if bracket(&e, &w) != w.scale(&Rational::from_integer(k.into())) {
                    return Err(format!("n = {n}; k = {k}; w = {}", print_field(&w)));
                }
                let br = bracket(&w, &u);
                if !(br.is_zero() || br.is_homogeneous_of(k + b)) {
                    return Err(format!("w = {}; u = {}", print_field(&w), print_field(&u)));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} fields over n in 2..=4, k in -1..=3"))
}

fn cohomology() -> Outcome {
    let mut cells = Vec::new();
    for n in 2..=3u32 {
        for k in -1..=1 {
            for m in n..=n + 1 {
                let module = SubspaceSpec::homogeneous(m, k).map_err(|e| e.to_string())?;
                let r = h1_report(n, &module).map_err(|e| e.to_string())?;
                if !r.coboundaries_are_cocycles || r.h1() != 0 {
                    return Err(format!("n = {n}; k = {k}; m = {m}: {r:?}"));
                }
                cells.push(format!("({n},{k},{m})"));
            }
        }
    }
    Ok(format!("h1 = 0 at {}", cells.join(" ")))
}

fn sl_centralizers() -> Outcome {
    let sl3 = sl_basis(3).unwrap();
    let e3 = euler(3).unwrap();
    let c = centralizer(&sl3, &SubspaceSpec::from_window(window(3, -1, 3))).map_err(|e| e.to_string())?;
    if c.len() != 1 || !same_span(&c, std::slice::from_ref(&e3)) {
        return Err(format!("vars <= 3: got dim {}", c.len()));
    }
    // F[x4]~ E_3 + F[x4]~ d/dx4, cut to degrees -1..=1
    let d4 = VectorField::partial(4);
    let expected = vec![
        e3.clone(),
        e3.mul_poly(&x(4)),
        d4.clone(),
        d4.mul_poly(&x(4)),
        d4.mul_poly(&(&x(4) * &x(4))),
    ];
    let c = centralizer(&sl3, &SubspaceSpec::from_window(window(4, -1, 1))).map_err(|e| e.to_string())?;
    if c.len() != 5 || span_dimension(&expected) != 5 || !same_span(&c, &expected) {
        let got: Vec<String> = c.iter().map(print_field).collect();
        return Err(format!("vars <= 4: got [{}]", got.join("; ")));
    }
    Ok("dim 1 (span of E_3); dim 5 matching the expected basis by double inclusion".into())
}

fn l_centralizers() -> Outcome {
    for n in 2..=3 {
        let c = centralizer(&l_basis(n).unwrap(), &SubspaceSpec::from_window(window(n, -1, 3)))
            .map_err(|e| e.to_string())?;
        if !c.is_empty() {
            return Err(format!("n = {n}: {}", print_field(&c[0])));
        }
    }
    Ok("zero for n = 2, 3".into())
}

fn inner_recovery() -> Outcome {
    let summary = checks(&[("derivations.solve_inner_roundtrip", 100)])?;
    let sl3 = sl_basis(3).unwrap();
    let e3 = euler(3).unwrap();
    let search = SubspaceSpec::from_window(roundtrip_window());
    let mut rng = rng_for(SEED, 7);
    let s = Sampler::new(3, 3).with_terms(6);
    for _ in 0..10 {
        let w = s.field_in(&mut rng, &roundtrip_window());
        let d = DerivationSpec::inner(sl3.clone(), &w).map_err(|e| e.to_string())?;
        let sol = solve_inner(&d, &search).map_err(|e| e.to_string())?;
        if sol.kernel.len() != 1 || !same_span(&sol.kernel, std::slice::from_ref(&e3)) {
            return Err(format!(
                "sl_3 only, w = {}: kernel dim {}",
                print_field(&w),
                sol.kernel.len()
            ));
        }
    }
    Ok(format!("{summary}; sl_3-only kernel is the Euler line"))
}

fn stabilization() -> Outcome {
    let mut rng = rng_for(SEED, 8);
    let s = Sampler::new(2, 3).with_terms(5);
    let mut fields = vec![VectorField::from_components([
        (1, &x(2) * &x(2)),
        (2, Polynomial::from(Monomial::from_pairs([(1, 1), (2, 1)]))),
    ])];
    fields.extend((0..4).map(|_| without_x1_d1(&s.field_in(&mut rng, &window(2, -1, 2)))));
    for w in &fields {
        let task = ScanTask::SolveInner {
            w: w.clone(),
            family: GeneratorFamily::L,
            degree_max: 2,
        };
        let report = stabilization_scan(&task, 2..=5).map_err(|e| e.to_string())?;
        if !report.all_stabilized() || report.limit().as_ref() != Some(w) {
            return Err(format!("w = {}: {report:?}", print_field(w)));
        }
    }
    Ok(format!(
        "{} fields, n = 2..=5, every coefficient stabilized at w",
        fields.len()
    ))
}

fn closures() -> Outcome {
    let cases = [
        (VectorField::partial(1), 3, window(3, -1, 2), 3),
        (euler(2).unwrap(), 2, window(2, -1, 2), 1),
        (euler(3).unwrap(), 3, window(3, -1, 2), 1),
        (VectorField::linear(1, 1), 2, window(2, 0, 0), 4),
    ];
    let mut dims = Vec::new();
    for (v, n, win, dim) in cases {
        let c = submodule_closure(&v, n, &SubspaceSpec::from_window(win)).map_err(|e| e.to_string())?;
        if c.len() != dim {
            return Err(format!("closure of {} at n = {n}: dim {}", print_field(&v), c.len()));
        }
        dims.push(dim.to_string());
    }
    Ok(format!("dims {}", dims.join(", ")))
}

fn text_formats() -> Outcome {
    checks(&[("textio.roundtrip", 1000), ("textio.fuzz", 1000), ("textio.json", 500)])
}

fn main() {
    let criteria = [
        Criterion {
            number: 1,
            name: "bracket correctness",
            budget: Duration::from_secs(10),
            run: bracket_correctness,
        },
        Criterion {
            number: 2,
            name: "equation identities",
            budget: Duration::from_secs(10),
            run: equation_identities,
        },
        Criterion {
            number: 3,
            name: "grading",
            budget: Duration::from_secs(5),
            run: grading,
        },
        Criterion {
            number: 4,
            name: "first cohomology vanishes",
            budget: Duration::from_secs(60),
            run: cohomology,
        },
        Criterion {
            number: 5,
            name: "sl_3 centralizers",
            budget: Duration::from_secs(60),
            run: sl_centralizers,
        },
        Criterion {
            number: 6,
            name: "L_n centralizer is zero",
            budget: Duration::from_secs(30),
            run: l_centralizers,
        },
        Criterion {
            number: 7,
            name: "inner derivation recovery",
            budget: Duration::from_secs(120),
            run: inner_recovery,
        },
        Criterion {
            number: 8,
            name: "stabilization",
            budget: Duration::from_secs(120),
            run: stabilization,
        },
        Criterion {
            number: 9,
            name: "submodule closures",
            budget: Duration::from_secs(5),
            run: closures,
        },
        Criterion {
            number: 10,
            name: "parser and printer",
            budget: Duration::from_secs(10),
            run: text_formats,
        },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} criterion {:>2} {:<28} {:>8.2?} / {:?}  {detail}",
            c.number, c.name, elapsed, c.budget
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
