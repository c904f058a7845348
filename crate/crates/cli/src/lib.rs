//! Command-line driver. [`run`] is the whole program; `main` only wires it to
//! the process.

use std::io::Write;
use std::ops::RangeInclusive;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wittfield_core::derivations::{self, DerivationError, DerivationSpec, GeneratorFamily, ScanTask, SubspaceSpec};
use wittfield_core::textio::{self, JsonCodec};
use wittfield_core::verify;
use wittfield_core::witt::{apply_field, bracket, TruncationMode, TruncationWindow, VectorField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "wittfield",
    version,
    about = "Exact computations with polynomial vector fields"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Seed for randomized suites.
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Gens {
    #[value(name = "sl")]
    Sl,
    #[value(name = "L")]
    L,
}

impl From<Gens> for GeneratorFamily {
    fn from(g: Gens) -> Self {
        match g {
            Gens::Sl => GeneratorFamily::Sl,
            Gens::L => GeneratorFamily::L,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strict,
    Project,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    #[value(name = "solve-inner", alias = "solve_inner")]
    SolveInner,
    Centralizer,
}

/// Truncation window; omitted bounds default to variables `<= n + 1` and
/// degrees `-1..=2`.
#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    #[arg(long)]
    pub max_var: Option<u32>,
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    pub deg_min: i32,
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    pub deg_max: i32,
    #[arg(long, value_enum, default_value_t = Mode::Strict)]
    pub mode: Mode,
}

impl WindowArgs {
    fn window(&self, n: u32) -> Result<TruncationWindow, Failure> {
        let mode = match self.mode {
            Mode::Strict => TruncationMode::Strict,
            Mode::Project => TruncationMode::Project,
        };
        TruncationWindow::new(self.max_var.unwrap_or(n + 1), self.deg_min, self.deg_max, mode)
            .map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print [A, B].
    Bracket { a: String, b: String },
    /// Apply the field W to the polynomial P.
    Apply { w: String, p: String },
    /// Centralizer of a generator family inside a window.
    Centralizer {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t = Gens::Sl)]
        gens: Gens,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// dim H^1(sl_n, M) for M the degree-K fields in MAX_VAR variables.
    H1 {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_negative_numbers = true)]
        k: i32,
        #[arg(long)]
        max_var: Option<u32>,
    },
    /// Recover w from a derivation d = ad(w).
    SolveInner {
        #[arg(long, value_enum, default_value_t = Gens::L)]
        gens: Gens,
        #[arg(long)]
        n: Option<u32>,
        /// Build d = ad(W) on the generators.
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        from_ad: Option<String>,
        /// JSON derivation spec file.
        #[arg(long)]
        spec: Option<std::path::PathBuf>,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Dimension of the maps on the window's fields that vanish on L_n and
    /// obey the derivation rule wherever brackets stay in the window.
    Rigidity {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Smallest sl_n-submodule of the window containing V.
    Closure {
        v: String,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Run seeded property suites.
    Verify {
        #[arg(long, default_value = "all", value_parser = verify::SUITES)]
        suite: String,
    },
    /// Run a task for each n in a range and report where results stabilize.
    Stabilize {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        n_from: u32,
        #[arg(long)]
        n_to: u32,
        /// Field whose inner derivation is recovered (solve-inner).
        #[arg(long)]
        w: Option<String>,
        #[arg(long, value_enum, default_value_t = Gens::L)]
        gens: Gens,
        #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
        deg_max: i32,
        /// Centralizer ambient uses variables `<= n + EXTRA_VARS`.
        #[arg(long, default_value_t = 1)]
        extra_vars: u32,
    },
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub detail: Option<Value>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
            detail: None,
        }
    }

    fn compute(e: DerivationError) -> Self {
        let detail = certificate(&e);
        Self {
            code: EXIT_COMPUTE,
            kind: "computation",
            message: e.to_string(),
            detail,
        }
    }
}

impl From<DerivationError> for Failure {
    fn from(e: DerivationError) -> Self {
        Failure::compute(e)
    }
}

fn certificate(e: &DerivationError) -> Option<Value> {
    match e {
        DerivationError::Inconsistent(c) => Some(json!({
            "generator": c.generator,
            "term": textio::print_field(&c.term.to_field()),
            "residual": c.residual.to_string(),
        })),
        DerivationError::AtParameter { source, .. } => certificate(source),
        _ => None,
    }
}

/// Text and JSON renderings of a successful command.
struct Output {
    text: String,
    json: Value,
    /// Exit code for verification outcomes.
    code: i32,
    note: Option<String>,
}

impl Output {
    fn new(text: String, json: Value) -> Self {
        Self {
            text,
            json,
            code: EXIT_OK,
            note: None,
        }
    }
}

fn parse_field(text: &str, what: &str) -> Result<VectorField, Failure> {
    textio::parse_field(text).map_err(|e| Failure::usage(format!("{what}: {e}")))
}

fn field_list(fields: &[VectorField]) -> (String, Value) {
    let mut text = format!("dim {}", fields.len());
    for f in fields {
        text.push('\n');
        text.push_str(&textio::print_field(f));
    }
    let json = json!({
        "dimension": fields.len(),
        "basis": fields.iter().map(JsonCodec::to_json_value).collect::<Vec<_>>(),
        "basis_text": fields.iter().map(textio::print_field).collect::<Vec<_>>(),
    });
    (text, json)
}

fn need_n(n: u32, min: u32) -> Result<(), Failure> {
    if n < min {
        return Err(Failure::usage(format!("--n must be at least {min}")));
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Bracket { a, b } => {
            let r = bracket(&parse_field(a, "A")?, &parse_field(b, "B")?);
            let text = textio::print_field(&r);
            Ok(Output::new(
                text.clone(),
                json!({"result": r.to_json_value(), "text": text}),
            ))
        }
        Command::Apply { w, p } => {
            let p = textio::parse_polynomial(p).map_err(|e| Failure::usage(format!("P: {e}")))?;
            let r = apply_field(&parse_field(w, "W")?, &p);
            let text = r.to_string();
            Ok(Output::new(
                text.clone(),
                json!({"result": r.to_json_value(), "text": text}),
            ))
        }
        Command::Centralizer { n, gens, window } => {
            need_n(*n, if *gens == Gens::Sl { 2 } else { 1 })?;
            let win = window.window(*n)?;
            let acting = GeneratorFamily::from(*gens).basis(*n)?;
            let c = derivations::centralizer(&acting, &SubspaceSpec::from_window(win))?;
            let (text, mut json) = field_list(&c);
            json["window"] = win.to_json_value();
            Ok(Output::new(text, json))
        }
        Command::H1 { n, k, max_var } => {
            need_n(*n, 2)?;
            let m = max_var.unwrap_or(n + 1);
            let module = SubspaceSpec::homogeneous(m, *k).map_err(|e| Failure::usage(e.to_string()))?;
            let r = derivations::h1_report(*n, &module)?;
            Ok(Output::new(
                r.h1().to_string(),
                json!({
                    "n": n, "k": k, "max_var": m,
                    "h1": r.h1(),
                    "cocycles": r.cocycles,
                    "coboundaries": r.coboundaries,
                    "coboundaries_are_cocycles": r.coboundaries_are_cocycles,
                }),
            ))
        }
        Command::SolveInner {
            gens,
            n,
            from_ad,
            spec,
            window,
        } => {
            let d = match (from_ad, spec) {
                (Some(w), _) => {
                    let n = n.ok_or_else(|| Failure::usage("--from-ad needs --n"))?;
                    need_n(n, if *gens == Gens::Sl { 2 } else { 1 })?;
                    let w = parse_field(w, "--from-ad")?;
                    DerivationSpec::inner(GeneratorFamily::from(*gens).basis(n)?, &w)?
                }
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    let value: Value = serde_json::from_str(&text)
                        .map_err(|e| Failure::usage(format!("{}: invalid JSON: {e}", path.display())))?;
                    let (generators, values) = textio::derivation_parts_from_json(&value, "$")
                        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    DerivationSpec::new(generators, values)?
                }
                (None, None) => return Err(Failure::usage("one of --from-ad or --spec is required")),
            };
            let search_n = n.unwrap_or_else(|| d.generators().iter().map(VectorField::max_index).max().unwrap_or(1));
            let search = SubspaceSpec::from_window(window.window(search_n)?);
            let sol = derivations::solve_inner(&d, &search)?;
            let text = textio::print_field(&sol.particular);
            let mut json = sol.to_json_value();
            json["text"] = Value::String(text.clone());
            let mut out = Output::new(text, json);
            if !sol.is_unique() {
                out.note = Some(format!(
                    "solution is determined up to a {}-dimensional kernel (see --format json)",
                    sol.kernel.len()
                ));
            }
            Ok(out)
        }
        Command::Rigidity { n, window } => {
            need_n(*n, 1)?;
            let win = window.window(*n)?;
            let r = derivations::truncated_derivations(*n, &win)?;
            Ok(Output::new(
                r.dimension().to_string(),
                json!({
                    "n": n,
                    "window": win.to_json_value(),
                    "dimension": r.dimension(),
                    "unknowns": r.terms.len() * r.terms.len(),
                    "skipped_pairs": r.skipped_pairs,
                }),
            ))
        }
        Command::Closure { v, n, window } => {
            need_n(*n, 2)?;
            let v = parse_field(v, "V")?;
            let c = derivations::submodule_closure(&v, *n, &SubspaceSpec::from_window(window.window(*n)?))?;
            let (text, json) = field_list(&c);
            Ok(Output::new(text, json))
        }
        Command::Verify { suite } => {
            let report = verify::run_suite(suite, cli.seed).ok_or_else(|| Failure::usage("unknown suite"))?;
            Ok(verify_output(&report))
        }
        Command::Stabilize {
            task,
            n_from,
            n_to,
            w,
            gens,
            deg_max,
            extra_vars,
        } => {
            let family = GeneratorFamily::from(*gens);
            let min_n = if family == GeneratorFamily::Sl { 2 } else { 1 };
            let range: RangeInclusive<u32> = *n_from..=*n_to;
            if range.is_empty() || *n_from < min_n {
                return Err(Failure::usage(format!("need {min_n} <= --n-from <= --n-to")));
            }
            let task = match task {
                Task::SolveInner => ScanTask::SolveInner {
                    w: parse_field(
                        w.as_deref()
                            .ok_or_else(|| Failure::usage("--task solve-inner needs --w"))?,
                        "--w",
                    )?,
                    family,
                    degree_max: *deg_max,
                },
                Task::Centralizer => ScanTask::Centralizer {
                    family,
                    degree_max: *deg_max,
                    extra_vars: *extra_vars,
                },
            };
            let report = derivations::stabilization_scan(&task, range)?;
            Ok(Output::new(stabilize_text(&report), report.to_json_value()))
        }
    }
}

fn verify_output(report: &verify::SuiteReport) -> Output {
    let mut text = format!("suite {} seed {}", report.suite, report.seed);
    for o in &report.outcomes {
        match &o.counterexample {
            None => text.push_str(&format!("\nPASS {} ({} cases)", o.id, o.cases)),
            Some(cx) => text.push_str(&format!("\nFAIL {}: {cx}", o.id)),
        }
    }
    let json = json!({
        "suite": report.suite,
        "seed": report.seed,
        "passed": report.passed(),
        "checks": report.outcomes.iter().map(|o| json!({
            "id": o.id,
            "cases": o.cases,
            "passed": o.passed(),
            "counterexample": o.counterexample,
        })).collect::<Vec<_>>(),
    });
    let mut out = Output::new(text, json);
    if let Some(f) = report.first_failure() {
        out.code = EXIT_VERIFY;
        out.note = Some(format!("first failure: {}", f.id));
    }
    out
}

fn stabilize_text(r: &derivations::StabilizationReport) -> String {
    let join = |v: Vec<String>| v.join(" ");
    let mut lines = vec![
        format!("task {}", r.task),
        format!("n {}", join(r.n_values.iter().map(u32::to_string).collect())),
        format!(
            "dimension {} (stable from n = {}{})",
            join(r.dimensions.values.iter().map(usize::to_string).collect()),
            r.dimensions.first_stable_n,
            if r.dimensions.stabilized {
                ""
            } else {
                ", not stabilized"
            }
        ),
    ];
    for (n, s) in r.n_values.iter().zip(&r.solutions) {
        lines.push(format!("solution n={n} {}", textio::print_field(s)));
    }
    for c in &r.coefficients {
        lines.push(format!(
            "coefficient {} : {} (stable from n = {}{})",
            textio::print_field(&c.term.to_field()),
            join(c.trajectory.values.iter().map(ToString::to_string).collect()),
            c.trajectory.first_stable_n,
            if c.trajectory.stabilized {
                ""
            } else {
                ", not stabilized"
            }
        ));
    }
    if r.task == "solve_inner" {
        match r.limit() {
            Some(l) => lines.push(format!("limit {}", textio::print_field(&l))),
            None => lines.push("limit none".to_string()),
        }
    }
    lines.join("\n")
}

fn wants_json<I: AsRef<str>>(argv: &[I]) -> bool {
    argv.windows(2)
        .any(|w| w[0].as_ref() == "--format" && w[1].as_ref() == "json")
        || argv.iter().any(|a| a.as_ref() == "--format=json")
}

fn error_json(kind: &str, code: i32, message: &str, detail: Option<&Value>) -> String {
    let mut v = json!({"error": {"kind": kind, "exit_code": code, "message": message}});
    if let Some(d) = detail {
        v["error"]["detail"] = d.clone();
    }
    v.to_string()
}

/// Runs the program on `argv` (including the program name), writing results
/// to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, W, E>(argv: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator,
    I::Item: Into<std::ffi::OsString> + Clone + AsRef<str>,
    W: Write,
    E: Write,
{
    let argv: Vec<I::Item> = argv.into_iter().collect();
    let json_errors = wants_json(&argv);
    let cli = match Cli::try_parse_from(argv.iter().cloned()) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            if json_errors {
                let msg = e.kind().to_string();
                let full = e.to_string();
                let message = full.lines().next().unwrap_or(&msg).trim_start_matches("error: ");
                let _ = writeln!(out, "{}", error_json("usage", EXIT_USAGE, message, None));
            } else {
                let _ = write!(err, "{e}");
            }
            return EXIT_USAGE;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            match cli.format {
                Format::Text => {
                    let _ = writeln!(out, "{}", o.text);
                }
                Format::Json => {
                    let _ = writeln!(out, "{}", o.json);
                }
            }
            if let Some(note) = o.note {
                let _ = writeln!(err, "note: {note}");
            }
            o.code
        }
        Err(f) => {
            match cli.format {
                Format::Json => {
                    let _ = writeln!(out, "{}", error_json(f.kind, f.code, &f.message, f.detail.as_ref()));
                }
                Format::Text => {
                    let _ = writeln!(err, "error: {}", f.message);
                }
            }
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv: Vec<&str> = std::iter::once("wittfield").chain(args.iter().copied()).collect();
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn json_error_detection() {
        assert!(wants_json(&["x", "--format", "json"]));
        assert!(wants_json(&["--format=json"]));
        assert!(!wants_json(&["--format", "text"]));
    }

    #[test]
    fn window_defaults() {
        let w = WindowArgs {
            max_var: None,
            deg_min: -1,
            deg_max: 2,
            mode: Mode::Strict,
        };
        let win = w.window(3).unwrap();
        assert_eq!((win.max_var(), win.degree_min(), win.degree_max()), (4, -1, 2));
    }

    #[test]
    fn failed_check_exits_1_with_counterexample() {
        let report = verify::SuiteReport {
            suite: "witt".into(),
            seed: 9,
            outcomes: vec![
                verify::CheckOutcome {
                    id: "witt.a",
                    cases: 3,
                    counterexample: None,
                },
                verify::CheckOutcome {
                    id: "witt.b",
                    cases: 3,
                    counterexample: Some("w = x1 d2".into()),
                },
            ],
        };
        let out = verify_output(&report);
        assert_eq!(out.code, EXIT_VERIFY);
        assert_eq!(
            out.text,
            "suite witt seed 9\nPASS witt.a (3 cases)\nFAIL witt.b: w = x1 d2"
        );
        assert_eq!(out.json["passed"], false);
    }

    #[test]
    fn small_n_is_usage_error() {
        assert_eq!(run_str(&["h1", "--n", "1", "--k", "0"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["closure", "d1", "--n", "1"]).0, EXIT_USAGE);
    }

    #[test]
    fn stabilize_text_lists_coefficients() {
        let (code, out, _) = run_str(&[
            "stabilize",
            "--task",
            "solve-inner",
            "--n-from",
            "2",
            "--n-to",
            "3",
            "--w",
            "x2 d1",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("coefficient x2 d1 : 1 1 (stable from n = 2)"), "{out}");
        assert!(out.trim_end().ends_with("limit x2 d1"), "{out}");
    }
}
