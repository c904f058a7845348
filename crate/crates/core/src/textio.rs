//! Text and JSON formats.
//!
//! # Field grammar
//!
//! ```text
//! field    := "0" | sign? term (("+" | "-") term)*
//! term     := [coeff "*"?] [monomial "*"?] "d" INT
//! monomial := factor ("*" factor)*
//! factor   := "x" INT ["^" INT]
//! coeff    := INT ["/" INT]
//! ```
//!
//! Whitespace is insignificant except that `x`/`d` must be glued to their
//! index. Indices and exponents must be at least 1. Polynomials use the same
//! pieces without the trailing `d INT`.
//!
//! Printing is canonical: terms by direction, then graded-lex monomial order
//! (see [`crate::poly`]), unit coefficients omitted, e.g.
//! `x1*x2 d1 - 2/3*x3^2 d2`. The zero field prints as `0`.
//!
//! # JSON
//!
//! Rationals are strings `"p/q"` (or `"p"` when integral). A field is
//! `{"components": {"<dir>": [{"monomial": {"<var>": exp, ...}, "coeff": "p/q"}, ...]}}`.
//! See the README for the remaining objects.

use std::fmt::{self, Display, Write as _};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::derivations::{
    CoefficientTrajectory, DerivationSpec, InnerSolution, StabilizationReport, SubspaceSpec, Trajectory,
};
use crate::exactla::{SolveKind, SolveOutcome};
use crate::poly::{Monomial, Polynomial, Rational, Var};
use crate::witt::{BasisTerm, TruncationMode, TruncationWindow, VectorField};

impl Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        for (k, (v, e)) in self.iter().enumerate() {
            if k > 0 {
                f.write_char('*')?;
            }
            write!(f, "x{v}")?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Writes `c*m` with sign handled by the caller; `suffix` follows the term.
fn write_term(out: &mut String, first: bool, c: &Rational, m: &Monomial, suffix: Option<Var>) {
    if first {
        if c.is_negative() {
            out.push('-');
        }
    } else {
        out.push_str(if c.is_negative() { " - " } else { " + " });
    }
    let abs = c.abs();
    let unit = abs.is_one();
    match (m.is_one(), suffix) {
        (true, None) => {
            let _ = write!(out, "{abs}");
        }
        (true, Some(d)) => {
            if !unit {
                let _ = write!(out, "{abs} ");
            }
            let _ = write!(out, "d{d}");
        }
        (false, suffix) => {
            if !unit {
                let _ = write!(out, "{abs}*");
            }
            let _ = write!(out, "{m}");
            if let Some(d) = suffix {
                let _ = write!(out, " d{d}");
            }
        }
    }
}

impl Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms().enumerate() {
            write_term(&mut out, k == 0, c, m, None);
        }
        f.write_str(&out)
    }
}

impl Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_field(self))
    }
}

impl Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_field(&self.to_field()))
    }
}

/// Canonical text of a field.
pub fn print_field(w: &VectorField) -> String {
    if w.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (t, c)) in w.terms().enumerate() {
        write_term(&mut out, k == 0, c, &t.monomial, Some(t.direction));
    }
    out
}

pub fn print_polynomial(p: &Polynomial) -> String {
    p.to_string()
}

/// Syntax error with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message} (found {found}; expected {})", expected.join(", "))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub found: String,
    pub expected: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Var(Var),
    Dir(Var),
    Slash,
    Star,
    Caret,
    Plus,
    Minus,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {n}"),
            Tok::Var(i) => format!("x{i}"),
            Tok::Dir(i) => format!("d{i}"),
            Tok::Slash => "'/'".into(),
            Tok::Star => "'*'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut k = 0;
    let err = |line, column, message: String, found: String, expected| ParseError {
        line,
        column,
        message,
        found,
        expected,
    };
    while k < chars.len() {
        let c = chars[k];
        let (tl, tc) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            k += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            k += 1;
            continue;
        }
        let simple = match c {
            '/' => Some(Tok::Slash),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            _ => None,
        };
        if let Some(tok) = simple {
            toks.push(Spanned {
                tok,
                line: tl,
                column: tc,
            });
            column += 1;
            k += 1;
            continue;
        }
        let digits_from = |start: usize| {
            let mut end = start;
            while end < chars.len() && chars[end].is_ascii_digit() {
                end += 1;
            }
            end
        };
        if c.is_ascii_digit() {
            let end = digits_from(k);
            let s: String = chars[k..end].iter().collect();
            let n = BigInt::from_str(&s).expect("ascii digits");
            toks.push(Spanned {
                tok: Tok::Int(n),
                line: tl,
                column: tc,
            });
            column += end - k;
            k = end;
            continue;
        }
        if c == 'x' || c == 'd' {
            let end = digits_from(k + 1);
            if end == k + 1 {
                let found = chars
                    .get(k + 1)
                    .map_or("end of input".to_string(), |ch| format!("{ch:?}"));
                return Err(err(
                    tl,
                    tc + 1,
                    format!("'{c}' must be followed by an index"),
                    found,
                    vec!["index"],
                ));
            }
            let s: String = chars[k + 1..end].iter().collect();
            let index = match s.parse::<Var>() {
                Ok(i) if i >= 1 => i,
                _ => {
                    return Err(err(
                        tl,
                        tc + 1,
                        "index must be an integer between 1 and 4294967295".into(),
                        s,
                        vec!["index >= 1"],
                    ))
                }
            };
            let tok = if c == 'x' { Tok::Var(index) } else { Tok::Dir(index) };
            toks.push(Spanned {
                tok,
                line: tl,
                column: tc,
            });
            column += end - k;
            k = end;
            continue;
        }
        return Err(err(
            tl,
            tc,
            "unexpected character".into(),
            format!("{c:?}"),
            vec!["integer", "x<index>", "d<index>", "'+'", "'-'", "'*'", "'/'", "'^'"],
        ));
    }
    toks.push(Spanned {
        tok: Tok::End,
        line,
        column,
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str, expected: Vec<&'static str>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            message: message.to_string(),
            found: s.tok.describe(),
            expected,
        }
    }

    fn is_lone_zero(&self) -> bool {
        matches!(&self.toks[..], [Spanned { tok: Tok::Int(n), .. }, Spanned { tok: Tok::End, .. }] if n.is_zero())
    }

    fn coeff(&mut self) -> Result<Rational, ParseError> {
        let Tok::Int(num) = self.bump() else {
            unreachable!("caller checked for an integer")
        };
        if *self.peek() != Tok::Slash {
            return Ok(Rational::from_integer(num));
        }
        self.bump();
        match self.peek().clone() {
            Tok::Int(den) if den.is_zero() => Err(self.error("zero denominator", vec!["nonzero integer"])),
            Tok::Int(den) => {
                self.bump();
                Ok(Rational::new(num, den))
            }
            _ => Err(self.error("expected denominator", vec!["integer"])),
        }
    }

    fn factor(&mut self) -> Result<Monomial, ParseError> {
        let Tok::Var(v) = self.bump() else {
            unreachable!("caller checked for a variable")
        };
        let mut exp = 1u32;
        if *self.peek() == Tok::Caret {
            self.bump();
            match self.peek().clone() {
                Tok::Int(n) => match u32::try_from(&n) {
                    Ok(e) if e >= 1 => {
                        self.bump();
                        exp = e;
                    }
                    _ => {
                        return Err(self.error(
                            "exponent must be an integer between 1 and 4294967295",
                            vec!["exponent >= 1"],
                        ))
                    }
                },
                _ => return Err(self.error("expected exponent", vec!["integer"])),
            }
        }
        Ok(Monomial::from_pairs([(v, exp)]))
    }

    /// `factor ("*" factor)*`; a `*` followed by something other than a
    /// variable is left for the caller when `allow_trailing_star` is set.
    fn monomial(&mut self, allow_trailing_star: bool) -> Result<Monomial, ParseError> {
        let mut m = self.factor()?;
        while *self.peek() == Tok::Star {
            let save = self.pos;
            self.bump();
            match self.peek() {
                Tok::Var(_) => m = m.mul(&self.factor()?),
                Tok::Dir(_) if allow_trailing_star => {
                    let _ = save;
                    break;
                }
                _ => {
                    let expected = if allow_trailing_star {
                        vec!["x<index>", "d<index>"]
                    } else {
                        vec!["x<index>"]
                    };
                    return Err(self.error("expected a factor after '*'", expected));
                }
            }
        }
        Ok(m)
    }

    fn field_term(&mut self) -> Result<(Var, Monomial, Rational), ParseError> {
        let mut coeff = Rational::one();
        if let Tok::Int(_) = self.peek() {
            coeff = self.coeff()?;
            if *self.peek() == Tok::Star {
                self.bump();
                if !matches!(self.peek(), Tok::Var(_) | Tok::Dir(_)) {
                    return Err(self.error(
                        "expected a monomial or direction after '*'",
                        vec!["x<index>", "d<index>"],
                    ));
                }
            }
        }
        let mut m = Monomial::one();
        if let Tok::Var(_) = self.peek() {
            m = self.monomial(true)?;
        }
        match self.peek().clone() {
            Tok::Dir(i) => {
                self.bump();
                Ok((i, m, coeff))
            }
            _ => {
                let expected = if m.is_one() {
                    vec!["integer", "x<index>", "d<index>"]
                } else {
                    vec!["'*'", "d<index>"]
                };
                Err(self.error("expected a direction d<index>", expected))
            }
        }
    }

    fn poly_term(&mut self) -> Result<(Monomial, Rational), ParseError> {
        match self.peek() {
            Tok::Int(_) => {
                let c = self.coeff()?;
                if *self.peek() == Tok::Star {
                    self.bump();
                    if !matches!(self.peek(), Tok::Var(_)) {
                        return Err(self.error("expected a monomial after '*'", vec!["x<index>"]));
                    }
                    Ok((self.monomial(false)?, c))
                } else {
                    Ok((Monomial::one(), c))
                }
            }
            Tok::Var(_) => Ok((self.monomial(false)?, Rational::one())),
            _ => Err(self.error("expected a term", vec!["integer", "x<index>"])),
        }
    }

    /// `sign? term (("+"|"-") term)* End`
    fn signed_sum<T>(
        &mut self,
        mut term: impl FnMut(&mut Self) -> Result<T, ParseError>,
        mut negate: impl FnMut(T) -> T,
    ) -> Result<Vec<T>, ParseError> {
        let mut items = Vec::new();
        let mut negative = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        loop {
            let t = term(self)?;
            items.push(if negative { negate(t) } else { t });
            match self.peek() {
                Tok::Plus => negative = false,
                Tok::Minus => negative = true,
                Tok::End => return Ok(items),
                _ => return Err(self.error("expected '+', '-' or end of input", vec!["'+'", "'-'", "end of input"])),
            }
            self.bump();
        }
    }
}

/// Parses the field grammar (see module docs).
pub fn parse_field(text: &str) -> Result<VectorField, ParseError> {
    let mut p = Parser::new(text)?;
    if p.is_lone_zero() {
        return Ok(VectorField::zero());
    }
    let terms = p.signed_sum(Parser::field_term, |(i, m, c)| (i, m, -c))?;
    Ok(VectorField::from_terms(
        terms.into_iter().map(|(i, m, c)| (BasisTerm::new(i, m), c)),
    ))
}

/// Parses a polynomial: `sign? pterm (("+"|"-") pterm)*` with
/// `pterm := coeff ["*" monomial] | monomial`.
pub fn parse_polynomial(text: &str) -> Result<Polynomial, ParseError> {
    let mut p = Parser::new(text)?;
    let terms = p.signed_sum(Parser::poly_term, |(m, c)| (m, -c))?;
    Ok(Polynomial::from_terms(terms))
}

impl FromStr for VectorField {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_field(s)
    }
}

impl FromStr for Polynomial {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_polynomial(s)
    }
}

/// A parsed field together with its source and canonical rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldExpression {
    pub source: String,
    pub field: VectorField,
    pub canonical: String,
}

impl FieldExpression {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let field = parse_field(source)?;
        Ok(Self {
            source: source.to_string(),
            canonical: print_field(&field),
            field,
        })
    }
}

/// JSON document that does not match the expected schema.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonError {
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
}

fn schema<T>(path: &str, message: impl Into<String>) -> Result<T, JsonError> {
    Err(JsonError::Schema {
        path: path.to_string(),
        message: message.into(),
    })
}

/// Types with a stable JSON representation.
pub trait JsonCodec: Sized {
    fn to_json_value(&self) -> Value;
    /// `path` locates `value` inside the document, e.g. `$.basis[2]`.
    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError>;
}

/// Compact JSON text.
pub fn to_json<T: JsonCodec>(x: &T) -> String {
    x.to_json_value().to_string()
}

pub fn from_json<T: JsonCodec>(text: &str) -> Result<T, JsonError> {
    let value: Value = serde_json::from_str(text).map_err(|e| JsonError::Syntax(e.to_string()))?;
    T::from_json_value(&value, "$")
}

fn field_of<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, JsonError> {
    obj.get(key)
        .map_or_else(|| schema(path, format!("missing key {key:?}")), Ok)
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, JsonError> {
    v.as_object().map_or_else(|| schema(path, "expected an object"), Ok)
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, JsonError> {
    v.as_array().map_or_else(|| schema(path, "expected an array"), Ok)
}

fn as_u32(v: &Value, path: &str) -> Result<u32, JsonError> {
    v.as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .map_or_else(|| schema(path, "expected a non-negative 32-bit integer"), Ok)
}

fn as_i32(v: &Value, path: &str) -> Result<i32, JsonError> {
    v.as_i64()
        .and_then(|n| i32::try_from(n).ok())
        .map_or_else(|| schema(path, "expected a 32-bit integer"), Ok)
}

fn index_key(key: &str, path: &str) -> Result<Var, JsonError> {
    match key.parse::<Var>() {
        Ok(i) if i >= 1 && key == i.to_string() => Ok(i),
        _ => schema(path, format!("key {key:?} is not an index >= 1")),
    }
}

fn list<T>(v: &Value, path: &str, item: impl Fn(&Value, &str) -> Result<T, JsonError>) -> Result<Vec<T>, JsonError> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(k, x)| item(x, &format!("{path}[{k}]")))
        .collect()
}

impl JsonCodec for Rational {
    fn to_json_value(&self) -> Value {
        Value::String(self.to_string())
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let Some(s) = value.as_str() else {
            return schema(path, "rationals are strings \"p/q\"");
        };
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let num = BigInt::from_str(num).or_else(|_| schema(path, format!("bad numerator in {s:?}")))?;
        let den = BigInt::from_str(den).or_else(|_| schema(path, format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return schema(path, format!("zero denominator in {s:?}"));
        }
        Ok(Rational::new(num, den))
    }
}

impl JsonCodec for Monomial {
    fn to_json_value(&self) -> Value {
        Value::Object(self.iter().map(|(v, e)| (v.to_string(), json!(e))).collect())
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let mut pairs = Vec::with_capacity(obj.len());
        for (k, v) in obj {
            let p = format!("{path}.{k}");
            let var = index_key(k, &p)?;
            let e = as_u32(v, &p)?;
            if e == 0 {
                return schema(&p, "exponents must be >= 1");
            }
            pairs.push((var, e));
        }
        Ok(Monomial::from_pairs(pairs))
    }
}

impl JsonCodec for Polynomial {
    fn to_json_value(&self) -> Value {
        Value::Array(
            self.terms()
                .map(|(m, c)| json!({"monomial": m.to_json_value(), "coeff": c.to_json_value()}))
                .collect(),
        )
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let terms = list(value, path, |t, p| {
            let obj = as_object(t, p)?;
            let m = Monomial::from_json_value(field_of(obj, "monomial", p)?, &format!("{p}.monomial"))?;
            let c = Rational::from_json_value(field_of(obj, "coeff", p)?, &format!("{p}.coeff"))?;
            Ok((m, c))
        })?;
        Ok(Polynomial::from_terms(terms))
    }
}

impl JsonCodec for VectorField {
    fn to_json_value(&self) -> Value {
        let comps: Map<String, Value> = self
            .components()
            .map(|(i, f)| (i.to_string(), f.to_json_value()))
            .collect();
        json!({ "components": comps })
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let comps_path = format!("{path}.components");
        let comps = as_object(field_of(obj, "components", path)?, &comps_path)?;
        let mut w = VectorField::zero();
        for (k, v) in comps {
            let p = format!("{comps_path}.{k}");
            let i = index_key(k, &p)?;
            w.add_component(i, Polynomial::from_json_value(v, &p)?);
        }
        Ok(w)
    }
}

impl JsonCodec for BasisTerm {
    fn to_json_value(&self) -> Value {
        json!({"direction": self.direction, "monomial": self.monomial.to_json_value()})
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let dp = format!("{path}.direction");
        let direction = as_u32(field_of(obj, "direction", path)?, &dp)?;
        if direction == 0 {
            return schema(&dp, "direction must be >= 1");
        }
        let monomial = Monomial::from_json_value(field_of(obj, "monomial", path)?, &format!("{path}.monomial"))?;
        Ok(BasisTerm::new(direction, monomial))
    }
}

impl JsonCodec for TruncationWindow {
    fn to_json_value(&self) -> Value {
        json!({
            "max_var": self.max_var(),
            "degree_min": self.degree_min(),
            "degree_max": self.degree_max(),
            "mode": self.mode().as_str(),
        })
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let max_var = as_u32(field_of(obj, "max_var", path)?, &format!("{path}.max_var"))?;
        let degree_min = match obj.get("degree_min") {
            Some(v) => as_i32(v, &format!("{path}.degree_min"))?,
            None => -1,
        };
        let degree_max = as_i32(field_of(obj, "degree_max", path)?, &format!("{path}.degree_max"))?;
        let mode = match obj.get("mode").map(|m| m.as_str()) {
            None | Some(Some("strict")) => TruncationMode::Strict,
            Some(Some("project")) => TruncationMode::Project,
            _ => return schema(&format!("{path}.mode"), "expected \"strict\" or \"project\""),
        };
        TruncationWindow::new(max_var, degree_min, degree_max, mode).or_else(|e| schema(path, e.to_string()))
    }
}

impl JsonCodec for SubspaceSpec {
    fn to_json_value(&self) -> Value {
        json!({
            "basis": self.basis().iter().map(JsonCodec::to_json_value).collect::<Vec<_>>(),
            "window": self.window().to_json_value(),
        })
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let basis = list(
            field_of(obj, "basis", path)?,
            &format!("{path}.basis"),
            VectorField::from_json_value,
        )?;
        let window = TruncationWindow::from_json_value(field_of(obj, "window", path)?, &format!("{path}.window"))?;
        SubspaceSpec::new(basis, window).or_else(|e| schema(path, e.to_string()))
    }
}

fn vector_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(JsonCodec::to_json_value).collect())
}

impl JsonCodec for SolveOutcome {
    fn to_json_value(&self) -> Value {
        json!({
            "kind": self.kind.as_str(),
            "particular": self.particular.as_deref().map_or(Value::Null, vector_json),
            "kernel_basis": self.kernel_basis.iter().map(|v| vector_json(v)).collect::<Vec<_>>(),
        })
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let kind = match field_of(obj, "kind", path)?.as_str() {
            Some("unique") => SolveKind::Unique,
            Some("underdetermined") => SolveKind::Underdetermined,
            Some("inconsistent") => SolveKind::Inconsistent,
            _ => {
                return schema(
                    &format!("{path}.kind"),
                    "expected unique, underdetermined or inconsistent",
                )
            }
        };
        let ppath = format!("{path}.particular");
        let particular = match obj.get("particular") {
            None | Some(Value::Null) => None,
            Some(v) => Some(list(v, &ppath, Rational::from_json_value)?),
        };
        let kpath = format!("{path}.kernel_basis");
        let kernel_basis = list(field_of(obj, "kernel_basis", path)?, &kpath, |v, p| {
            list(v, p, Rational::from_json_value)
        })?;
        let consistent = match kind {
            SolveKind::Unique => particular.is_some() && kernel_basis.is_empty(),
            SolveKind::Underdetermined => particular.is_some() && !kernel_basis.is_empty(),
            SolveKind::Inconsistent => particular.is_none(),
        };
        if !consistent {
            return schema(path, "kind disagrees with particular/kernel_basis");
        }
        Ok(SolveOutcome {
            kind,
            particular,
            kernel_basis,
        })
    }
}

impl JsonCodec for DerivationSpec {
    fn to_json_value(&self) -> Value {
        json!({
            "generators": self.generators().iter().map(JsonCodec::to_json_value).collect::<Vec<_>>(),
            "values": self.values().iter().map(JsonCodec::to_json_value).collect::<Vec<_>>(),
        })
    }

    /// See [`derivation_parts_from_json`]; the derivation rule is then
    /// checked by [`DerivationSpec::new`].
    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let (generators, values) = derivation_parts_from_json(value, path)?;
        DerivationSpec::new(generators, values).or_else(|e| schema(path, e.to_string()))
    }
}

/// Generators and values of a derivation spec document, without checking the
/// derivation rule. Generators are an explicit `"generators"` list or
/// `"family": "sl" | "L"` with `"n"`.
pub fn derivation_parts_from_json(
    value: &Value,
    path: &str,
) -> Result<(Vec<VectorField>, Vec<VectorField>), JsonError> {
    use crate::derivations::GeneratorFamily;
    let obj = as_object(value, path)?;
    let generators = match (obj.get("generators"), obj.get("family")) {
        (Some(g), _) => list(g, &format!("{path}.generators"), VectorField::from_json_value)?,
        (None, Some(f)) => {
            let family = match f.as_str() {
                Some("sl") => GeneratorFamily::Sl,
                Some("L") => GeneratorFamily::L,
                _ => return schema(&format!("{path}.family"), "expected \"sl\" or \"L\""),
            };
            let n = as_u32(field_of(obj, "n", path)?, &format!("{path}.n"))?;
            family
                .basis(n)
                .or_else(|e| schema(&format!("{path}.n"), e.to_string()))?
        }
        (None, None) => return schema(path, "missing key \"generators\" (or \"family\" and \"n\")"),
    };
    let values = list(
        field_of(obj, "values", path)?,
        &format!("{path}.values"),
        VectorField::from_json_value,
    )?;
    Ok((generators, values))
}

impl JsonCodec for InnerSolution {
    fn to_json_value(&self) -> Value {
        json!({
            "unique": self.is_unique(),
            "particular": self.particular.to_json_value(),
            "kernel": self.kernel.iter().map(JsonCodec::to_json_value).collect::<Vec<_>>(),
        })
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let particular =
            VectorField::from_json_value(field_of(obj, "particular", path)?, &format!("{path}.particular"))?;
        let kernel = list(
            field_of(obj, "kernel", path)?,
            &format!("{path}.kernel"),
            VectorField::from_json_value,
        )?;
        Ok(InnerSolution { particular, kernel })
    }
}

fn trajectory_json<T>(t: &Trajectory<T>, item: impl Fn(&T) -> Value) -> Value {
    json!({
        "values": t.values.iter().map(item).collect::<Vec<_>>(),
        "stabilized": t.stabilized,
        "first_stable_n": t.first_stable_n,
    })
}

fn trajectory_from<T: PartialEq + Clone>(
    v: &Value,
    path: &str,
    n_values: &[u32],
    item: impl Fn(&Value, &str) -> Result<T, JsonError>,
) -> Result<Trajectory<T>, JsonError> {
    let obj = as_object(v, path)?;
    let values = list(field_of(obj, "values", path)?, &format!("{path}.values"), item)?;
    if values.len() != n_values.len() || values.is_empty() {
        return schema(&format!("{path}.values"), "length must match n_values");
    }
    let t = Trajectory::new(n_values, values);
    let stabilized = field_of(obj, "stabilized", path)?.as_bool();
    let first = as_u32(
        field_of(obj, "first_stable_n", path)?,
        &format!("{path}.first_stable_n"),
    )?;
    if stabilized != Some(t.stabilized) || first != t.first_stable_n {
        return schema(path, "stabilization verdict disagrees with values");
    }
    Ok(t)
}

impl JsonCodec for StabilizationReport {
    fn to_json_value(&self) -> Value {
        json!({
            "task": self.task,
            "n_values": self.n_values,
            "dimensions": trajectory_json(&self.dimensions, |d| json!(d)),
            "solutions": self.solutions.iter().map(JsonCodec::to_json_value).collect::<Vec<_>>(),
            "coefficients": self.coefficients.iter().map(|c| {
                let mut t = trajectory_json(&c.trajectory, JsonCodec::to_json_value);
                t["term"] = c.term.to_json_value();
                t
            }).collect::<Vec<_>>(),
        })
    }

    fn from_json_value(value: &Value, path: &str) -> Result<Self, JsonError> {
        let obj = as_object(value, path)?;
        let task = match field_of(obj, "task", path)?.as_str() {
            Some(s) => s.to_string(),
            None => return schema(&format!("{path}.task"), "expected a string"),
        };
        let n_values = list(field_of(obj, "n_values", path)?, &format!("{path}.n_values"), as_u32)?;
        if n_values.is_empty() {
            return schema(&format!("{path}.n_values"), "must be nonempty");
        }
        let dimensions = trajectory_from(
            field_of(obj, "dimensions", path)?,
            &format!("{path}.dimensions"),
            &n_values,
            |v, p| as_u32(v, p).map(|d| d as usize),
        )?;
        let solutions = list(
            field_of(obj, "solutions", path)?,
            &format!("{path}.solutions"),
            VectorField::from_json_value,
        )?;
        let coefficients = list(
            field_of(obj, "coefficients", path)?,
            &format!("{path}.coefficients"),
            |v, p| {
                let o = as_object(v, p)?;
                let term = BasisTerm::from_json_value(field_of(o, "term", p)?, &format!("{p}.term"))?;
                let trajectory = trajectory_from(v, p, &n_values, Rational::from_json_value)?;
                Ok(CoefficientTrajectory { term, trajectory })
            },
        )?;
        Ok(StabilizationReport {
            task,
            n_values,
            dimensions,
            solutions,
            coefficients,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::witt::{euler, tests::arb_field};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn parse_examples() {
        let w = parse_field("x1*x2 d1 - 2/3*x3^2 d2").unwrap();
        let expected = VectorField::from_components([
            (1, Polynomial::from(Monomial::from_pairs([(1, 1), (2, 1)]))),
            (2, Polynomial::monomial(Monomial::from_pairs([(3, 2)]), q(-2, 3))),
        ]);
        assert_eq!(w, expected);
        assert_eq!(parse_field("d4").unwrap(), VectorField::partial(4));
        assert_eq!(parse_field("x1 d1 + x2 d2 + x3 d3").unwrap(), euler(3).unwrap());
        assert_eq!(parse_field("  0 ").unwrap(), VectorField::zero());
        assert_eq!(parse_field("-d1 + 2*d1").unwrap(), VectorField::partial(1));
        assert_eq!(parse_field("3*x1*d2").unwrap(), parse_field("3 x1 d2").unwrap());
        assert_eq!(parse_field("+1/2 d1").unwrap(), VectorField::partial(1).scale(&q(1, 2)));
    }

    #[test]
    fn print_examples() {
        // terms print by direction first
        assert_eq!(print_field(&parse_field("x2 d1  +x1 d2").unwrap()), "x2 d1 + x1 d2");
        assert_eq!(print_field(&VectorField::zero()), "0");
        assert_eq!(print_field(&euler(2).unwrap()), "x1 d1 + x2 d2");
        assert_eq!(
            print_field(&parse_field("-2/3 * x3^2 d2 + x1*x2 d1").unwrap()),
            "x1*x2 d1 - 2/3*x3^2 d2"
        );
        assert_eq!(
            print_field(&parse_field("x1^2*x2 d1 - 3 d1").unwrap()),
            "-3 d1 + x1^2*x2 d1"
        );
    }

    #[test]
    fn polynomial_text() {
        let p = parse_polynomial("x1^2 - 2/3*x2 + 1").unwrap();
        assert_eq!(p.to_string(), "1 - 2/3*x2 + x1^2");
        assert_eq!(parse_polynomial(&p.to_string()).unwrap(), p);
        assert_eq!(parse_polynomial("0").unwrap(), Polynomial::zero());
        assert!(parse_polynomial("x1 d1").is_err());
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = parse_field("x1 d1 +\n  x0 d2").unwrap_err();
        assert_eq!((e.line, e.column), (2, 4));
        let e = parse_field("x1^0 d1").unwrap_err();
        assert_eq!((e.line, e.column), (1, 4));
        let e = parse_field("x1 x2 d1").unwrap_err();
        assert_eq!(e.expected, vec!["'*'", "d<index>"]);
        assert_eq!(e.found, "x2");
        let e = parse_field("1/0 d1").unwrap_err();
        assert!(e.message.contains("zero denominator"));
        assert!(parse_field("").is_err());
        assert!(parse_field("d1 +").is_err());
        assert!(parse_field("x1").is_err());
        assert!(parse_field("d99999999999").is_err());
        assert!(parse_field("x1^99999999999 d1").is_err());
        assert!(parse_field("x1 * * d1").is_err());
    }

    #[test]
    fn json_schema_instance() {
        assert_eq!(
            to_json(&VectorField::partial(1)),
            r#"{"components":{"1":[{"coeff":"1","monomial":{}}]}}"#
        );
        let v: Value = serde_json::from_str(r#"{"components":{"1":[{"monomial":{},"coeff":"1"}]}}"#).unwrap();
        assert_eq!(VectorField::from_json_value(&v, "$").unwrap(), VectorField::partial(1));
    }

    #[test]
    fn json_errors_carry_paths() {
        let bad = r#"{"components":{"2":[{"monomial":{"1":1},"coeff":"1/0"}]}}"#;
        match from_json::<VectorField>(bad) {
            Err(JsonError::Schema { path, .. }) => assert_eq!(path, "$.components.2[0].coeff"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let bad = r#"{"components":{"0":[]}}"#;
        assert!(matches!(from_json::<VectorField>(bad), Err(JsonError::Schema { .. })));
        let bad = r#"{"components":{"1":[{"monomial":{"1":0},"coeff":"1"}]}}"#;
        match from_json::<VectorField>(bad) {
            Err(JsonError::Schema { path, .. }) => assert_eq!(path, "$.components.1[0].monomial.1"),
            other => panic!("expected schema error, got {other:?}"),
        }
        assert!(matches!(from_json::<VectorField>("{"), Err(JsonError::Syntax(_))));
    }

    #[test]
    fn solve_outcome_json() {
        let out = crate::exactla::solve(&crate::exactla::RationalMatrix::from_i64(&[&[1, 1]]), &[q(2, 3)]).unwrap();
        let back: SolveOutcome = from_json(&to_json(&out)).unwrap();
        assert_eq!(back, out);
        let bad = r#"{"kind":"unique","particular":null,"kernel_basis":[]}"#;
        assert!(from_json::<SolveOutcome>(bad).is_err());
    }

    #[test]
    fn derivation_spec_json_family() {
        let text = r#"{"family":"L","n":1,"values":[{"components":{}},{"components":{}}]}"#;
        let spec: DerivationSpec = from_json(text).unwrap();
        assert_eq!(spec.generators().len(), 2);
        let back: DerivationSpec = from_json(&to_json(&spec)).unwrap();
        assert_eq!(back, spec);
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(w in arb_field(4, 3)) {
            let text = print_field(&w);
            let back = parse_field(&text).unwrap();
            prop_assert_eq!(&back, &w);
            prop_assert_eq!(print_field(&back), text);
        }

        #[test]
        fn json_roundtrip(w in arb_field(4, 3)) {
            let back: VectorField = from_json(&to_json(&w)).unwrap();
            prop_assert_eq!(back, w);
        }

        #[test]
        fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..40)) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse_field(&text);
            let _ = parse_polynomial(&text);
        }

        #[test]
        fn parser_never_panics_on_near_miss(s in "[xd0-9 */^+\\-]{0,24}") {
            let _ = parse_field(&s);
            let _ = parse_polynomial(&s);
        }
    }
}
