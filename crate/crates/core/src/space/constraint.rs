//! Constraint expressions over configuration options.
//!
//! A constraint is a boolean formula whose atoms are either binary-option
//! literals or linear comparisons over numeric options:
//!
//! ```text
//! encryption => !compression
//! 2*pre + post <= 6
//! cache | (1*threads >= 2)
//! ```
//!
//! Operators in decreasing precedence: `!`, `&`, `|`, `=>` (right
//! associative). Linear atoms have the form `k1*o1 + k2*o2 <op> c` with
//! `<op>` one of `<`, `<=`, `=`, `>=`, `>`; a coefficient of 1 may be
//! omitted. Comparisons are evaluated with a small tolerance so that sums
//! of decimal domain values behave like the rationals they denote.

use crate::error::Error;
use crate::Result;
use std::collections::HashMap;
use std::fmt;

/// Comparison tolerance for linear atoms.
const CMP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    fn apply(self, lhs: f64, rhs: f64) -> bool {
        let tol = CMP_EPS * 1f64.max(lhs.abs()).max(rhs.abs());
        match self {
            CmpOp::Lt => lhs < rhs - tol,
            CmpOp::Le => lhs <= rhs + tol,
            CmpOp::Eq => (lhs - rhs).abs() <= tol,
            CmpOp::Ge => lhs >= rhs - tol,
            CmpOp::Gt => lhs > rhs + tol,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Linear comparison atom: `sum(coeff * numeric option) <op> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAtom {
    /// Pairs of (coefficient, numeric option index).
    pub terms: Vec<(f64, usize)>,
    pub op: CmpOp,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Binary option literal, by index into the space's binary options.
    Bin(usize),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Linear(LinearAtom),
}

/// A parsed constraint plus its option scope.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub expr: Expr,
    uses_binary: bool,
    uses_numeric: bool,
}

impl Constraint {
    pub fn new(expr: Expr) -> Self {
        let (mut b, mut n) = (false, false);
        scope(&expr, &mut b, &mut n);
        Constraint { expr, uses_binary: b, uses_numeric: n }
    }

    /// True when every atom refers to binary options only.
    pub fn is_binary_only(&self) -> bool {
        self.uses_binary && !self.uses_numeric
    }

    /// True when every atom refers to numeric options only.
    pub fn is_numeric_only(&self) -> bool {
        self.uses_numeric && !self.uses_binary
    }

    /// True when the constraint mixes both sub-spaces.
    pub fn is_mixed(&self) -> bool {
        self.uses_binary && self.uses_numeric
    }

    pub fn eval(&self, bin: &[bool], num: &[f64]) -> bool {
        eval(&self.expr, bin, num)
    }
}

fn scope(e: &Expr, bin: &mut bool, num: &mut bool) {
    match e {
        Expr::Bin(_) => *bin = true,
        Expr::Linear(_) => *num = true,
        Expr::Not(a) => scope(a, bin, num),
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
            scope(a, bin, num);
            scope(b, bin, num);
        }
    }
}

fn eval(e: &Expr, bin: &[bool], num: &[f64]) -> bool {
    match e {
        Expr::Bin(i) => bin[*i],
        Expr::Not(a) => !eval(a, bin, num),
        Expr::And(a, b) => eval(a, bin, num) && eval(b, bin, num),
        Expr::Or(a, b) => eval(a, bin, num) || eval(b, bin, num),
        Expr::Implies(a, b) => !eval(a, bin, num) || eval(b, bin, num),
        Expr::Linear(atom) => {
            let lhs: f64 = atom.terms.iter().map(|(k, i)| k * num[*i]).sum();
            atom.op.apply(lhs, atom.rhs)
        }
    }
}

/// Option-name lookup used while parsing.
pub struct NameTable<'a> {
    pub binary: &'a HashMap<String, usize>,
    pub numeric: &'a HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Star,
    Plus,
    Minus,
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Cmp(CmpOp),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '!' => {
                toks.push((i, Tok::Not));
                i += 1;
            }
            '&' => {
                toks.push((i, Tok::And));
                i += 1;
            }
            '|' => {
                toks.push((i, Tok::Or));
                i += 1;
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((i, Tok::Implies));
                    i += 2;
                } else {
                    toks.push((i, Tok::Cmp(CmpOp::Eq)));
                    i += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Cmp(CmpOp::Le)));
                    i += 2;
                } else {
                    toks.push((i, Tok::Cmp(CmpOp::Lt)));
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Cmp(CmpOp::Ge)));
                    i += 2;
                } else {
                    toks.push((i, Tok::Cmp(CmpOp::Gt)));
                    i += 1;
                }
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Optional exponent.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| Error::Syntax {
                    position: start,
                    message: format!("invalid number `{s}`"),
                })?;
                toks.push((start, Tok::Num(v)));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(Error::Syntax {
                    position: i,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    names: &'a NameTable<'a>,
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(p, _)| *p)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax { position: self.here(), message: message.into() }
    }

    fn formula(&mut self) -> Result<Expr> {
        let lhs = self.or_expr()?;
        if let Some(Tok::Implies) = self.peek() {
            self.bump();
            let rhs = self.formula()?;
            Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut e = self.and_expr()?;
        while let Some(Tok::Or) = self.peek() {
            self.bump();
            let rhs = self.and_expr()?;
            e = Expr::Or(Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while let Some(Tok::And) = self.peek() {
            self.bump();
            let rhs = self.unary()?;
            e = Expr::And(Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.formula()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(e),
                    _ => Err(self.err("expected `)`")),
                }
            }
            Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::Minus) => self.atom(),
            _ => Err(self.err("expected `!`, `(`, an option name, or a number")),
        }
    }

    /// Atom: a bare binary literal, or a linear comparison. A leading
    /// identifier is a binary literal unless it is followed by `+`, `-`,
    /// `*`, or a comparison operator.
    fn atom(&mut self) -> Result<Expr> {
        if let Some(Tok::Ident(name)) = self.peek().cloned() {
            let next = self.toks.get(self.pos + 1).map(|(_, t)| t);
            let linear = matches!(
                next,
                Some(Tok::Plus) | Some(Tok::Minus) | Some(Tok::Cmp(_)) | Some(Tok::Star)
            );
            if !linear {
                let at = self.here();
                self.bump();
                let idx = self
                    .names
                    .binary
                    .get(&name)
                    .copied()
                    .ok_or_else(|| bad_name(&name, at, self.names))?;
                return Ok(Expr::Bin(idx));
            }
        }
        self.linear_atom()
    }

    fn linear_atom(&mut self) -> Result<Expr> {
        let mut terms: Vec<(f64, usize)> = Vec::new();
        let mut sign = 1.0;
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            sign = -1.0;
        }
        loop {
            terms.push(self.linear_term(sign)?);
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    sign = 1.0;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    sign = -1.0;
                }
                _ => break,
            }
        }
        let op = match self.bump() {
            Some((_, Tok::Cmp(op))) => op,
            _ => return Err(self.err("expected comparison operator after linear expression")),
        };
        let mut rhs_sign = 1.0;
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            rhs_sign = -1.0;
        }
        let rhs = match self.bump() {
            Some((_, Tok::Num(v))) => rhs_sign * v,
            _ => return Err(self.err("expected constant on right-hand side of comparison")),
        };
        Ok(Expr::Linear(LinearAtom { terms, op, rhs }))
    }

    /// One term: `coeff * option` or a bare `option` (coefficient 1).
    fn linear_term(&mut self, sign: f64) -> Result<(f64, usize)> {
        let coeff = if let Some(Tok::Num(v)) = self.peek().cloned() {
            self.bump();
            match self.bump() {
                Some((_, Tok::Star)) => {}
                _ => return Err(self.err("expected `*` between coefficient and option name")),
            }
            v
        } else {
            1.0
        };
        let at = self.here();
        match self.bump() {
            Some((_, Tok::Ident(name))) => {
                let idx = self
                    .names
                    .numeric
                    .get(&name)
                    .copied()
                    .ok_or_else(|| bad_name(&name, at, self.names))?;
                Ok((sign * coeff, idx))
            }
            _ => Err(Error::Syntax { position: at, message: "expected option name".into() }),
        }
    }
}

fn bad_name(name: &str, at: usize, names: &NameTable) -> Error {
    if names.binary.contains_key(name) || names.numeric.contains_key(name) {
        Error::Syntax {
            position: at,
            message: format!("option `{name}` used in the wrong kind of atom"),
        }
    } else {
        Error::UnknownOption(name.to_string())
    }
}

/// Parses one constraint expression against the given option tables.
pub fn parse(text: &str, names: &NameTable) -> Result<Constraint> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Syntax { position: 0, message: "empty constraint".into() });
    }
    let mut p = Parser { toks, pos: 0, names, len: text.len() };
    let expr = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input after constraint"));
    }
    Ok(Constraint::new(expr))
}

/// Renders a constraint back to parseable text. Printing is canonical:
/// re-parsing the output yields a structurally equal constraint.
pub struct Printer<'a> {
    pub binary_names: &'a [String],
    pub numeric_names: &'a [String],
    pub constraint: &'a Constraint,
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(&self.constraint.expr, f, 0)
    }
}

impl Printer<'_> {
    // prec: 0 = top, 1 = or, 2 = and, 3 = unary operand
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match e {
            Expr::Bin(i) => write!(f, "{}", self.binary_names[*i]),
            Expr::Linear(a) => {
                // Linear atoms bind tighter than any boolean operator but
                // read ambiguously next to them, so parenthesise inside one.
                if prec > 0 {
                    write!(f, "(")?;
                }
                for (k, (coeff, idx)) in a.terms.iter().enumerate() {
                    let name = &self.numeric_names[*idx];
                    if k == 0 {
                        if *coeff == 1.0 {
                            write!(f, "{name}")?;
                        } else if *coeff == -1.0 {
                            write!(f, "-{name}")?;
                        } else {
                            write!(f, "{coeff}*{name}")?;
                        }
                    } else if *coeff >= 0.0 {
                        if *coeff == 1.0 {
                            write!(f, " + {name}")?;
                        } else {
                            write!(f, " + {coeff}*{name}")?;
                        }
                    } else if *coeff == -1.0 {
                        write!(f, " - {name}")?;
                    } else {
                        write!(f, " - {}*{name}", -coeff)?;
                    }
                }
                write!(f, " {} {}", a.op.symbol(), a.rhs)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Expr::Not(a) => {
                write!(f, "!")?;
                self.write(a, f, 3)
            }
            Expr::And(a, b) => {
                let need = prec > 2;
                if need {
                    write!(f, "(")?;
                }
                self.write(a, f, 2)?;
                write!(f, " & ")?;
                self.write(b, f, 3)?;
                if need {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Expr::Or(a, b) => {
                let need = prec > 1;
                if need {
                    write!(f, "(")?;
                }
                self.write(a, f, 1)?;
                write!(f, " | ")?;
                self.write(b, f, 2)?;
                if need {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Expr::Implies(a, b) => {
                let need = prec > 0;
                if need {
                    write!(f, "(")?;
                }
                self.write(a, f, 1)?;
                write!(f, " => ")?;
                self.write(b, f, 0)?;
                if need {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables() -> (HashMap<String, usize>, HashMap<String, usize>) {
        let binary: HashMap<String, usize> =
            [("a", 0), ("b", 1), ("c", 2)].map(|(n, i)| (n.to_string(), i)).into();
        let numeric: HashMap<String, usize> =
            [("x", 0), ("y", 1)].map(|(n, i)| (n.to_string(), i)).into();
        (binary, numeric)
    }

    fn parse_ok(text: &str) -> Constraint {
        let (binary, numeric) = tables();
        parse(text, &NameTable { binary: &binary, numeric: &numeric }).unwrap()
    }

    #[test]
    fn implication_truth_table() {
        let c = parse_ok("a => !b");
        assert!(c.eval(&[false, false, false], &[]));
        assert!(c.eval(&[true, false, false], &[]));
        assert!(c.eval(&[false, true, false], &[]));
        assert!(!c.eval(&[true, true, false], &[]));
        assert!(c.is_binary_only());
    }

    #[test]
    fn linear_sum_with_implicit_coefficients() {
        let c = parse_ok("x + y > 0");
        assert!(!c.eval(&[], &[0.0, 0.0]));
        assert!(c.eval(&[], &[1.0, 0.0]));
        assert!(c.is_numeric_only());
    }

    #[test]
    fn linear_with_negative_coefficients() {
        let c = parse_ok("-2*x + y >= -1");
        assert!(c.eval(&[], &[0.5, 0.0])); // -1 >= -1
        assert!(!c.eval(&[], &[1.0, 0.0])); // -2 >= -1 fails
    }

    #[test]
    fn decimal_sums_compare_like_rationals() {
        // 0.1 + 0.2 in floats overshoots 0.3; tolerance absorbs it.
        let c = parse_ok("x + y <= 0.3");
        assert!(c.eval(&[], &[0.1, 0.2]));
        let eq = parse_ok("x + y = 0.3");
        assert!(eq.eval(&[], &[0.1, 0.2]));
    }

    #[test]
    fn mixed_constraint_is_flagged() {
        let c = parse_ok("a => x >= 2");
        assert!(c.is_mixed());
        assert!(c.eval(&[false], &[0.0]));
        assert!(!c.eval(&[true], &[0.0]));
        assert!(c.eval(&[true], &[2.0]));
    }

    #[test]
    fn precedence_not_and_or_implies() {
        // Parses as (!a & b) | c, not !(a & (b | c)).
        let c = parse_ok("!a & b | c");
        assert!(c.eval(&[false, true, false], &[]));
        assert!(c.eval(&[true, true, true], &[]));
        assert!(!c.eval(&[true, true, false], &[]));

        // Implication is right-associative: a => (b => c).
        let c = parse_ok("a => b => c");
        assert!(c.eval(&[true, false, false], &[]));
        assert!(!c.eval(&[true, true, false], &[]));
    }

    #[test]
    fn unknown_option_is_reported() {
        let (binary, numeric) = tables();
        let err = parse("ghost", &NameTable { binary: &binary, numeric: &numeric }).unwrap_err();
        assert!(matches!(err, Error::UnknownOption(n) if n == "ghost"));
    }

    #[test]
    fn numeric_name_in_boolean_position_is_a_syntax_error() {
        let (binary, numeric) = tables();
        let err = parse("x & a", &NameTable { binary: &binary, numeric: &numeric }).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }), "{err:?}");
    }

    #[test]
    fn error_position_points_at_offending_byte() {
        let (binary, numeric) = tables();
        let err =
            parse("a & ? b", &NameTable { binary: &binary, numeric: &numeric }).unwrap_err();
        match err {
            Error::Syntax { position, .. } => assert_eq!(position, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let binary_names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let numeric_names: Vec<String> = ["x", "y"].map(String::from).to_vec();
        for text in [
            "a => !b",
            "!(a & b) | c",
            "a & (b | c)",
            "x + y > 0",
            "2*x - 3*y <= 4.5",
            "a => (x >= 2 & !c)",
            "a => b => c",
            "-x + 2*y = 1",
        ] {
            let c = parse_ok(text);
            let printed = Printer {
                binary_names: &binary_names,
                numeric_names: &numeric_names,
                constraint: &c,
            }
            .to_string();
            let reparsed = parse_ok(&printed);
            assert_eq!(c, reparsed, "round trip failed for `{text}` -> `{printed}`");
        }
    }
}
