//! Structured text configuration: run parameters and user-defined
//! structures.
//!
//! The format is a flat `[section]` / `key = value` file. User structures
//! reference a whitelist of expression primitives (polynomials, `sin`,
//! `cos`, `exp`, `recip`, `pow`) over the declared coordinates; expressions
//! parse into exact smooth fields.
//!
//! ```text
//! [structure]
//! kind = polycosymplectic
//! k = 2
//! coords = x, y, w, v
//! bounds = -1:1, -1:1, -1:1, -1:1
//! tau1 = dy
//! tau2 = dx
//! omega1 = dx^dw
//! omega2 = dy^dv
//! ```

use std::collections::BTreeMap;

use crate::chart::{ChartBox, ChartRef};
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::form::{binomial, lex_rank, normalize_index, VValuedForm};
use crate::structure::{GeometricStructure, KPolycosymplecticStructure, KPolysymplecticStructure};

/// Parsed `key = value` sections, preserving declaration order per key.
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("run");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::InvalidConfig(format!("line {}: unterminated section", lineno + 1)))?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { sections })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(|s| s.as_str())
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.sections.get(name)
    }
}

// ---------------------------------------------------------------------------
// expression parser
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum Expr {
    Const(f64),
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Recip(Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    fn eval(&self, x: &[Dual]) -> Dual {
        match self {
            Expr::Const(c) => Dual::constant(*c),
            Expr::Coord(i) => x[*i],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Neg(a) => -a.eval(x),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Recip(a) => a.eval(x).recip(),
            Expr::Pow(a, n) => a.eval(x).powi(*n),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    tokens: Vec<Token>,
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut lex = Lexer { chars: text.chars().peekable(), tokens: Vec::new() };
    while let Some(&c) = lex.chars.peek() {
        match c {
            ' ' | '\t' => {
                lex.chars.next();
            }
            '+' => {
                lex.chars.next();
                lex.tokens.push(Token::Plus);
            }
            '-' => {
                lex.chars.next();
                lex.tokens.push(Token::Minus);
            }
            '*' => {
                lex.chars.next();
                lex.tokens.push(Token::Star);
            }
            '/' => {
                lex.chars.next();
                lex.tokens.push(Token::Slash);
            }
            '^' => {
                lex.chars.next();
                lex.tokens.push(Token::Caret);
            }
            '(' => {
                lex.chars.next();
                lex.tokens.push(Token::LParen);
            }
            ')' => {
                lex.chars.next();
                lex.tokens.push(Token::RParen);
            }
            ',' => {
                lex.chars.next();
                lex.tokens.push(Token::Comma);
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut buf = String::new();
                while let Some(&d) = lex.chars.peek() {
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' {
                        buf.push(d);
                        lex.chars.next();
                        if (d == 'e' || d == 'E') && matches!(lex.chars.peek(), Some('-') | Some('+')) {
                            buf.push(lex.chars.next().unwrap());
                        }
                    } else {
                        break;
                    }
                }
                let v: f64 = buf
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad number '{buf}'")))?;
                lex.tokens.push(Token::Number(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut buf = String::new();
                while let Some(&d) = lex.chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        buf.push(d);
                        lex.chars.next();
                    } else {
                        break;
                    }
                }
                lex.tokens.push(Token::Ident(buf));
            }
            other => return Err(Error::InvalidConfig(format!("unexpected character '{other}'"))),
        }
    }
    Ok(lex.tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    coords: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.next() {
            Some(found) if found == t => Ok(()),
            other => Err(Error::InvalidConfig(format!("expected {t:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.next();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.next();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.next();
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Number(v)) => Ok(Expr::Const(v)),
            Some(Token::Minus) => Ok(Expr::Neg(Box::new(self.factor()?))),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "sin" | "cos" | "exp" | "recip" => {
                    self.expect(Token::LParen)?;
                    let inner = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(Box::new(inner)),
                        "cos" => Expr::Cos(Box::new(inner)),
                        "exp" => Expr::Exp(Box::new(inner)),
                        _ => Expr::Recip(Box::new(inner)),
                    })
                }
                "pow" => {
                    self.expect(Token::LParen)?;
                    let base = self.expr()?;
                    self.expect(Token::Comma)?;
                    let n = match self.next() {
                        Some(Token::Number(v)) if v.fract() == 0.0 => v as i32,
                        other => {
                            return Err(Error::InvalidConfig(format!(
                                "pow exponent must be an integer, found {other:?}"
                            )))
                        }
                    };
                    self.expect(Token::RParen)?;
                    Ok(Expr::Pow(Box::new(base), n))
                }
                _ => {
                    let idx = self
                        .coords
                        .iter()
                        .position(|c| *c == name)
                        .ok_or_else(|| Error::InvalidConfig(format!("unknown identifier '{name}'")))?;
                    Ok(Expr::Coord(idx))
                }
            },
            other => Err(Error::InvalidConfig(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parse a scalar expression over the chart coordinates.
pub fn parse_scalar(text: &str, chart: &ChartRef) -> Result<SmoothField> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens: &tokens, pos: 0, coords: &chart.names };
    let expr = parser.expr()?;
    if parser.pos != tokens.len() {
        return Err(Error::InvalidConfig(format!("trailing input in expression '{text}'")));
    }
    Ok(SmoothField::exact(chart.dim, 1, move |x| vec![expr.eval(x)]))
}

/// One differential term: optional coefficient expression times a basis
/// wedge `dA`, `dA^dB` or `dA^dB^dC`.
fn parse_form_term(text: &str, chart: &ChartRef, degree: usize) -> Result<(usize, f64, Option<Expr>)> {
    // split at the first 'd<coord>' marker
    let text = text.trim();
    let d_pos = find_basis_start(text, chart)?;
    let (coeff_text, basis_text) = text.split_at(d_pos);
    let coeff_text = coeff_text.trim().trim_end_matches('*').trim();
    let expr = if coeff_text.is_empty() {
        None
    } else {
        let tokens = tokenize(coeff_text)?;
        let mut parser = Parser { tokens: &tokens, pos: 0, coords: &chart.names };
        let e = parser.expr()?;
        if parser.pos != tokens.len() {
            return Err(Error::InvalidConfig(format!("trailing input in coefficient '{coeff_text}'")));
        }
        Some(e)
    };
    let mut indices = Vec::new();
    for part in basis_text.split('^') {
        let part = part.trim();
        let name = part
            .strip_prefix('d')
            .ok_or_else(|| Error::InvalidConfig(format!("expected differential, found '{part}'")))?;
        let idx = chart
            .index_of(name.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown coordinate '{name}'")))?;
        indices.push(idx);
    }
    if indices.len() != degree {
        return Err(Error::InvalidConfig(format!(
            "term '{text}' has degree {}, expected {degree}",
            indices.len()
        )));
    }
    let (sorted, sign) = normalize_index(&indices)
        .ok_or_else(|| Error::InvalidConfig(format!("repeated differential in '{text}'")))?;
    Ok((lex_rank(chart.dim, &sorted), sign, expr))
}

fn find_basis_start(text: &str, chart: &ChartRef) -> Result<usize> {
    let bytes = text.as_bytes();
    for (i, window) in bytes.windows(2).enumerate() {
        if window[0] == b'd' {
            let rest = &text[i + 1..];
            if chart.names.iter().any(|n| rest.starts_with(n.as_str())) {
                // must not be inside an identifier
                if i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_') {
                    return Ok(i);
                }
            }
        }
    }
    Err(Error::InvalidConfig(format!("no differential found in term '{text}'")))
}

/// Parse a sum of differential terms into one scalar-valued form component.
pub fn parse_form_component(text: &str, chart: &ChartRef, degree: usize) -> Result<SmoothField> {
    let text = text.trim();
    let block = binomial(chart.dim, degree);
    if text == "0" {
        return Ok(SmoothField::constant(chart.dim, vec![0.0; block]));
    }
    // split on top-level + and - (no parentheses nesting tracking needed for
    // the sign split: we re-tokenize, so only split where a term boundary is
    // unambiguous: "+ d" or "- d" patterns and leading signs are handled by
    // splitting on '+' only and keeping '-' inside coefficients)
    let mut terms: Vec<(usize, f64, Option<Expr>)> = Vec::new();
    for raw in split_top_level(text) {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        terms.push(parse_form_term(raw, chart, degree)?);
    }
    let dim = chart.dim;
    Ok(SmoothField::exact(dim, block, move |x| {
        let mut out = vec![Dual::ZERO; block];
        for (slot, sign, expr) in &terms {
            let v = match expr {
                Some(e) => e.eval(x) * *sign,
                None => Dual::constant(*sign),
            };
            out[*slot] = out[*slot] + v;
        }
        out
    }))
}

/// Split on top-level `+`; a `+` is top-level when not inside parentheses.
/// Minus signs stay attached to their term's coefficient.
fn split_top_level(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth -= 1;
                cur.push(c);
            }
            '+' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Build a structure from a `[structure]` section.
pub fn parse_structure(section: &BTreeMap<String, String>) -> Result<GeometricStructure> {
    let kind = section
        .get("kind")
        .ok_or_else(|| Error::InvalidConfig("structure.kind missing".into()))?
        .as_str();
    let coords: Vec<&str> = section
        .get("coords")
        .ok_or_else(|| Error::InvalidConfig("structure.coords missing".into()))?
        .split(',')
        .map(odd_trim)
        .collect();
    let bounds: Vec<(f64, f64)> = section
        .get("bounds")
        .ok_or_else(|| Error::InvalidConfig("structure.bounds missing".into()))?
        .split(',')
        .map(|b| {
            let (lo, hi) = b
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::InvalidConfig(format!("bad bound '{b}' (expected lo:hi)")))?;
            Ok((
                lo.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad bound '{b}'")))?,
                hi.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad bound '{b}'")))?,
            ))
        })
        .collect::<Result<_>>()?;
    let chart = ChartBox::new(&coords, &bounds)?;
    let k: usize = section
        .get("k")
        .map(|s| s.parse().map_err(|_| Error::InvalidConfig("bad k".into())))
        .transpose()?
        .unwrap_or(1);
    let omega = stack_parsed(section, "omega", &chart, 2, k)?;
    match kind {
        "polysymplectic" => Ok(GeometricStructure::KPolysymplectic(KPolysymplecticStructure::new(
            &chart, k, omega,
        )?)),
        "polycosymplectic" | "cosymplectic" => {
            let tau = stack_parsed(section, "tau", &chart, 1, k)?;
            let s = KPolycosymplecticStructure::new(&chart, k, tau, omega)?;
            Ok(GeometricStructure::KPolycosymplectic(s))
        }
        other => Err(Error::InvalidConfig(format!("unknown structure kind '{other}'"))),
    }
}

fn odd_trim(s: &str) -> &str {
    s.trim()
}

fn stack_parsed(
    section: &BTreeMap<String, String>,
    prefix: &str,
    chart: &ChartRef,
    degree: usize,
    k: usize,
) -> Result<VValuedForm> {
    let mut fields = Vec::with_capacity(k);
    for alpha in 1..=k {
        let key = format!("{prefix}{alpha}");
        let text = section
            .get(&key)
            .ok_or_else(|| Error::InvalidConfig(format!("missing {key}")))?;
        fields.push(parse_form_component(text, chart, degree)?);
    }
    let block = binomial(chart.dim, degree);
    let dim = chart.dim;
    let coeffs = SmoothField::exact(dim, k * block, move |x| {
        let mut out = Vec::with_capacity(fields.len() * block);
        for f in &fields {
            out.extend(f.eval_dual(x));
        }
        out
    });
    VValuedForm::new(chart, degree, k, coeffs)
}

/// Export a structure whose coefficients are constant (the reduced outputs
/// of the built-in instances) back to the `[structure]` config format.
pub fn export_structure(
    s: &KPolycosymplecticStructure,
    points: &[Vec<f64>],
) -> Result<String> {
    let mut out = String::from("[structure]\nkind = polycosymplectic\n");
    out.push_str(&format!("k = {}\n", s.k));
    out.push_str(&format!("coords = {}\n", s.chart.names.join(", ")));
    let bounds: Vec<String> = s.chart.bounds.iter().map(|(lo, hi)| format!("{lo}:{hi}")).collect();
    out.push_str(&format!("bounds = {}\n", bounds.join(", ")));
    let tau_c = s
        .tau
        .constant_coefficients(points, 1e-12)
        .ok_or_else(|| Error::Certification("tau coefficients are not constant; cannot export".into()))?;
    let omega_c = s
        .omega
        .constant_coefficients(points, 1e-12)
        .ok_or_else(|| Error::Certification("omega coefficients are not constant; cannot export".into()))?;
    write_component_lines(&mut out, "tau", &tau_c, s, 1);
    write_component_lines(&mut out, "omega", &omega_c, s, 2);
    Ok(out)
}

fn write_component_lines(
    out: &mut String,
    prefix: &str,
    coeffs: &[f64],
    s: &KPolycosymplecticStructure,
    degree: usize,
) {
    let n = s.chart.dim;
    let block = binomial(n, degree);
    let indices = crate::form::multi_indices(n, degree);
    for alpha in 0..s.k {
        let mut terms = Vec::new();
        for (r, idx) in indices.iter().enumerate() {
            let c = coeffs[alpha * block + r];
            if c.abs() < 1e-13 {
                continue;
            }
            let basis: Vec<String> = idx.iter().map(|i| format!("d{}", s.chart.names[*i])).collect();
            let basis = basis.join("^");
            if (c - 1.0).abs() < 1e-13 {
                terms.push(basis);
            } else {
                terms.push(format!("{c} * {basis}"));
            }
        }
        let line = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
        out.push_str(&format!("{prefix}{} = {line}\n", alpha + 1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_expressions_with_whitelisted_primitives() {
        let chart = ChartBox::new(&["x", "y"], &[(-1.0, 1.0), (0.5, 2.0)]).unwrap();
        let f = parse_scalar("2 * x + sin(y) * pow(x, 2) - recip(y)", &chart).unwrap();
        let x = 0.3f64;
        let y = 1.2f64;
        let expect = 2.0 * x + y.sin() * x * x - 1.0 / y;
        assert!((f.eval(&[x, y])[0] - expect).abs() < 1e-14);
        // exact derivative through the parsed tree
        let j = f.jacobian(&[x, y]);
        assert!((j[(0, 0)] - (2.0 + y.sin() * 2.0 * x)).abs() < 1e-14);
        assert!((j[(0, 1)] - (y.cos() * x * x + 1.0 / (y * y))).abs() < 1e-14);
    }

    #[test]
    fn parses_form_terms_with_signs() {
        let chart = ChartBox::new(&["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
        let f = parse_form_component("x * dy^dz + -1 * dx^dz", &chart, 2).unwrap();
        let c = f.eval(&[0.5, 0.0, 0.0]);
        // slots: (x,y) = 0, (x,z) = 1, (y,z) = 2
        assert_eq!(c, vec![0.0, -1.0, 0.5]);
        // reversed differentials flip the sign
        let g = parse_form_component("dz^dy", &chart, 2).unwrap();
        assert_eq!(g.eval(&[0.0; 3]), vec![0.0, 0.0, -1.0]);
    }

    #[test]
    fn parses_counterexample_structure() {
        let text = "\
[structure]
kind = polycosymplectic
k = 2
coords = x, y, w, v
bounds = -1:1, -1:1, -1:1, -1:1
tau1 = dy
tau2 = dx
omega1 = dx^dw
omega2 = dy^dv
";
        let cfg = ConfigFile::parse(text).unwrap();
        let s = parse_structure(cfg.section("structure").unwrap()).unwrap();
        let report = crate::structure::verify_structure(&s, 30, 1e-9, 3);
        assert!(!report.pass());
        assert_eq!(report.first_failure().unwrap().name, "omega_kernel_rank");
    }

    #[test]
    fn export_round_trips_through_the_parser() {
        let inst = crate::instances::get_instance("coupled-strings").unwrap();
        let mu = inst.mu_data(&[1.0, 0.5]).unwrap();
        let result = crate::reduction::reduce(
            &inst.structure,
            &inst.action,
            &inst.hamiltonian,
            &mu,
            30,
            1e-9,
            3,
        )
        .unwrap();
        let red = KPolycosymplecticStructure::new(&result.chart, 2, result.tau, result.omega).unwrap();
        let pts = crate::chart::halton_points(&result.chart, 10, 3);
        let text = export_structure(&red, &pts).unwrap();
        let cfg = ConfigFile::parse(&text).unwrap();
        let parsed = parse_structure(cfg.section("structure").unwrap()).unwrap();
        let report = crate::structure::verify_structure(&parsed, 20, 1e-9, 5);
        assert!(report.pass(), "{}", report.to_text());
        if let GeometricStructure::KPolycosymplectic(p) = parsed {
            let dev = crate::form::max_coeff_deviation(&p.omega, &red.omega, &pts);
            assert!(dev < 1e-12, "round-trip deviation {dev}");
        } else {
            panic!("expected polycosymplectic");
        }
    }

    #[test]
    fn rejects_malformed_input() {
        let chart = ChartBox::new(&["x", "y"], &[(-1.0, 1.0); 2]).unwrap();
        assert!(parse_scalar("x +", &chart).is_err());
        assert!(parse_scalar("tan(x)", &chart).is_err());
        assert!(parse_form_component("dx^dx", &chart, 2).is_err());
        assert!(parse_form_component("dq", &chart, 1).is_err());
        assert!(ConfigFile::parse("[open\na = 1").is_err());
    }
}
