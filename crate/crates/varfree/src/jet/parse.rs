//! Expression grammar and variable naming.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := ['-'] term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' exponent)?
//! base   := number | ident | '(' expr ')' | fn '(' expr ')'
//! exponent := ['-'] integer | '(' ['-'] integer ('/' integer)? ')'
//! fn     := sqrt | sin | cos | exp | ln
//! ```
//!
//! Identifiers resolve through a [`VarTable`]. The canonical names are
//! `x1..xn` for independents and `u`/`u1..um` for dependents; for small
//! `n` the usual single letters are accepted and printed. Jet variables
//! are written as the dependent name, an underscore, then a run of
//! independent names: `u_x`, `u_xxy`, `y_tt`.

use super::expr::{Expr, UnaryFn};
use super::{JetSpace, JetVar, MultiIndex};
use num_rational::Rational64;
use std::collections::BTreeMap;
use thiserror::Error;

/// Name table for one chart. Two conventions cover the toolkit: the
/// `(x, u)` chart used for densities and target coordinates, and the
/// `(t, y)` chart used for transformations and boundary data.
#[derive(Debug, Clone)]
pub struct VarTable {
    /// Print name per independent axis.
    indep_names: Vec<String>,
    /// Print name per dependent component.
    dep_names: Vec<String>,
    /// Accepted input spellings for independents (name -> axis).
    indep_aliases: BTreeMap<String, usize>,
    /// Accepted input spellings for dependents (name -> component).
    dep_aliases: BTreeMap<String, usize>,
}

impl VarTable {
    /// The `(x, u)` chart: `x`/`x,y`/`x,y,z` for n ≤ 3 (plus `t` for
    /// n = 1), `x1..xn` otherwise; dependents `u` or `u1..um`.
    pub fn xu(n: usize, m: usize) -> VarTable {
        let indep_names: Vec<String> = match n {
            1 => vec!["x".into()],
            2 => vec!["x".into(), "y".into()],
            3 => vec!["x".into(), "y".into(), "z".into()],
            _ => (1..=n).map(|i| format!("x{i}")).collect(),
        };
        let mut indep_aliases = BTreeMap::new();
        for (i, name) in indep_names.iter().enumerate() {
            indep_aliases.insert(name.clone(), i);
        }
        for i in 0..n {
            indep_aliases.insert(format!("x{}", i + 1), i);
        }
        if n == 1 {
            indep_aliases.insert("t".into(), 0);
        }
        let dep_names: Vec<String> = if m == 1 {
            vec!["u".into()]
        } else {
            (1..=m).map(|j| format!("u{j}")).collect()
        };
        let mut dep_aliases = BTreeMap::new();
        for (j, name) in dep_names.iter().enumerate() {
            dep_aliases.insert(name.clone(), j);
        }
        for j in 0..m {
            dep_aliases.insert(format!("u{}", j + 1), j);
        }
        VarTable { indep_names, dep_names, indep_aliases, dep_aliases }
    }

    /// The `(t, y)` chart for transformations and boundary data:
    /// independents `t` (n = 1) or `t1..tn`, single dependent `y`.
    pub fn ty(n: usize) -> VarTable {
        let indep_names: Vec<String> = if n == 1 {
            vec!["t".into()]
        } else {
            (1..=n).map(|i| format!("t{i}")).collect()
        };
        let mut indep_aliases = BTreeMap::new();
        for (i, name) in indep_names.iter().enumerate() {
            indep_aliases.insert(name.clone(), i);
        }
        for i in 0..n {
            indep_aliases.insert(format!("t{}", i + 1), i);
        }
        let dep_names = vec!["y".to_string()];
        let mut dep_aliases = BTreeMap::new();
        dep_aliases.insert("y".to_string(), 0);
        dep_aliases.insert("u".to_string(), 0);
        VarTable { indep_names, dep_names, indep_aliases, dep_aliases }
    }

    /// A one-variable parameter chart (boundary curves), accepting the
    /// given name plus `sigma`/`s`.
    pub fn param(name: &str) -> VarTable {
        let mut indep_aliases = BTreeMap::new();
        indep_aliases.insert(name.to_string(), 0);
        indep_aliases.insert("sigma".to_string(), 0);
        indep_aliases.insert("s".to_string(), 0);
        VarTable {
            indep_names: vec![name.to_string()],
            dep_names: vec![],
            indep_aliases,
            dep_aliases: BTreeMap::new(),
        }
    }

    pub fn indep_name(&self, axis: usize) -> &str {
        &self.indep_names[axis]
    }

    pub fn dep_name(&self, dep: usize) -> &str {
        &self.dep_names[dep]
    }

    /// Resolves an identifier to a jet variable.
    pub fn resolve(&self, ident: &str, n: usize) -> Option<JetVar> {
        if let Some(&axis) = self.indep_aliases.get(ident) {
            return Some(JetVar::Independent(axis));
        }
        if let Some(&dep) = self.dep_aliases.get(ident) {
            return Some(JetVar::Dependent { dep, index: MultiIndex::zeros(n) });
        }
        let (base, subscript) = ident.split_once('_')?;
        let &dep = self.dep_aliases.get(base)?;
        let mut index = vec![0u32; n];
        let mut rest = subscript;
        'outer: while !rest.is_empty() {
            // longest-match against independent spellings so that `x1`
            // wins over `x` when both are valid
            let mut candidates: Vec<(&String, &usize)> = self.indep_aliases.iter().collect();
            candidates.sort_by_key(|(name, _)| std::cmp::Reverse(name.len()));
            for (name, &axis) in candidates {
                if let Some(tail) = rest.strip_prefix(name.as_str()) {
                    index[axis] += 1;
                    rest = tail;
                    continue 'outer;
                }
            }
            return None;
        }
        Some(JetVar::Dependent { dep, index: MultiIndex::new(index) })
    }

    /// Print name of a jet variable in this chart.
    pub fn name_of(&self, v: &JetVar) -> String {
        match v {
            JetVar::Independent(i) => self.indep_names[*i].clone(),
            JetVar::Dependent { dep, index } => {
                if index.order() == 0 {
                    return self.dep_names[*dep].clone();
                }
                let mut s = format!("{}_", self.dep_names[*dep]);
                for (axis, &count) in index.entries().iter().enumerate() {
                    for _ in 0..count {
                        s.push_str(&self.indep_names[axis]);
                    }
                }
                s
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { pos: usize, name: String },
    #[error("variable `{name}` has jet order {order}, above the chart order {max}")]
    OrderTooHigh { name: String, order: u32, max: u32 },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    space: JetSpace,
    table: &'a VarTable,
    /// Maximum admissible jet order for parsed variables.
    max_order: u32,
}

/// Parses `source` in the chart described by `space` and `table`;
/// variables above order `space.cap.min(r)` are rejected by passing the
/// order bound in `space.cap`.
pub fn parse(source: &str, space: &JetSpace, table: &VarTable) -> Result<Expr, ParseError> {
    parse_with_order(source, space, table, space.cap)
}

/// Like [`parse`] but with an explicit order bound (e.g. the Lagrangian
/// order `r` rather than the cap `2r`).
pub fn parse_with_order(
    source: &str,
    space: &JetSpace,
    table: &VarTable,
    max_order: u32,
) -> Result<Expr, ParseError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0, space: *space, table, max_order };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::Syntax { pos: p.pos, msg: "trailing input".into() });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.bump() {
            Some(got) if got == c => Ok(()),
            _ => Err(ParseError::Syntax {
                pos: self.pos.min(self.src.len()),
                msg: format!("expected `{}`", c as char),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = Vec::new();
        let negate_first = if self.peek() == Some(b'-') {
            self.bump();
            true
        } else {
            false
        };
        let first = self.term()?;
        terms.push(if negate_first { Expr::neg(first) } else { first });
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.bump();
                    terms.push(self.term()?);
                }
                b'-' => {
                    self.bump();
                    terms.push(Expr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.bump();
                    acc = Expr::mul2(acc, self.factor()?);
                }
                b'/' => {
                    self.bump();
                    acc = Expr::div(acc, self.factor()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.bump();
            let exponent = self.exponent()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    /// `-3`, `2`, `(3/2)`, `(-1/2)`
    fn exponent(&mut self) -> Result<Rational64, ParseError> {
        if self.peek() == Some(b'(') {
            self.bump();
            let neg = if self.peek() == Some(b'-') {
                self.bump();
                true
            } else {
                false
            };
            let p = self.integer()?;
            let q = if self.peek() == Some(b'/') {
                self.bump();
                self.integer()?
            } else {
                1
            };
            self.expect(b')')?;
            if q == 0 {
                return Err(ParseError::Syntax { pos: self.pos, msg: "zero exponent denominator".into() });
            }
            Ok(Rational64::new(if neg { -p } else { p }, q))
        } else {
            let neg = if self.peek() == Some(b'-') {
                self.bump();
                true
            } else {
                false
            };
            let p = self.integer()?;
            Ok(Rational64::from_integer(if neg { -p } else { p }))
        }
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(ParseError::Syntax { pos: start, msg: "expected integer".into() });
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError::Syntax { pos: start, msg: "integer overflow".into() })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(ParseError::Syntax {
                pos: self.pos.min(self.src.len()),
                msg: "expected number, variable or `(`".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut saw_dot = false;
        let mut saw_exp = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() {
                self.pos += 1;
            } else if c == b'.' && !saw_dot && !saw_exp {
                saw_dot = true;
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && !saw_exp && self.pos > start {
                // only a float exponent if followed by digits or sign+digits
                let next = self.src.get(self.pos + 1).copied();
                let next2 = self.src.get(self.pos + 2).copied();
                let ok = match next {
                    Some(d) if d.is_ascii_digit() => true,
                    Some(b'+') | Some(b'-') => next2.is_some_and(|d| d.is_ascii_digit()),
                    _ => false,
                };
                if !ok {
                    break;
                }
                saw_exp = true;
                self.pos += 2; // consume 'e' and sign/first digit
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                break;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if saw_dot || saw_exp {
            text.parse::<f64>()
                .map(Expr::float)
                .map_err(|_| ParseError::Syntax { pos: start, msg: "bad float literal".into() })
        } else {
            text.parse::<i64>()
                .map(Expr::int)
                .map_err(|_| ParseError::Syntax { pos: start, msg: "integer overflow".into() })
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && ((self.src[self.pos] as char).is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        // function application
        if matches!(name.as_str(), "sqrt" | "sin" | "cos" | "exp" | "ln") {
            let f = match name.as_str() {
                "sqrt" => UnaryFn::Sqrt,
                "sin" => UnaryFn::Sin,
                "cos" => UnaryFn::Cos,
                "exp" => UnaryFn::Exp,
                _ => UnaryFn::Ln,
            };
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::unary(f, arg));
        }
        match self.table.resolve(&name, self.space.n) {
            Some(v) => {
                let order = v.order();
                if order > self.max_order {
                    return Err(ParseError::OrderTooHigh { name, order, max: self.max_order });
                }
                Ok(Expr::var(v))
            }
            None => Err(ParseError::UnknownVariable { pos: start, name }),
        }
    }
}
