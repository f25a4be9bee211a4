//! Text syntax for expressions.
//!
//! ```text
//! u_t - u_{x1 x1} - u_{x2 x2}        jet coordinates
//! u_{11}                             same as u_{x1 x1} when the variables are x1, x2, ...
//! g, g(t, x2), g_{x2 x2}, g_{#2}(t, x2^2)   undetermined functions
//! exp(-x1^2/(4*t)) * t^(-3/2)
//! 4*t^2*d/dt + 4*t*x1*d/dx1          first-order operators (operator mode)
//! ```

use std::collections::BTreeMap;

use num_bigint::BigInt;

use super::canon::RatFn;
use super::diff::{derive, Partial};
use super::{name, Coeff, ElemFn, Exponent, Expr, JetCoord, Name, Symbol};
use crate::error::{Error, Result};

/// Declared symbols. Anything else is rejected as undeclared.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    pub indeps: Vec<Name>,
    pub deps: Vec<Name>,
    pub params: Vec<Name>,
    /// Undetermined functions with their formal arguments.
    pub ufns: BTreeMap<Name, Vec<Symbol>>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Coeff),
    Ident(String),
    Basis(String),
    Sym(char),
    End,
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

fn lex(src: &str, origin: Pos, ops: bool) -> Result<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (origin.line, origin.col);
    let mut i = 0;
    let is_ident = |c: char| c.is_alphanumeric() && c != '_';
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int: String = chars[start..i].iter().collect();
            let mut value = Coeff::from_integer(int.parse::<BigInt>().unwrap_or_default());
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fs..i].iter().collect();
                let scale = num_traits::pow(BigInt::from(10), frac.len());
                value += Coeff::new(frac.parse::<BigInt>().unwrap_or_default(), scale);
            }
            out.push((Tok::Num(value), pos));
        } else if is_ident(c) {
            while i < chars.len() && is_ident(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            // `d/dX` basis element of a first-order operator
            if ops && word == "d" && chars.get(i) == Some(&'/') && chars.get(i + 1) == Some(&'d') {
                let mut j = i + 2;
                while j < chars.len() && (is_ident(chars[j]) || chars[j] == '_') {
                    j += 1;
                }
                let target: String = chars[i + 2..j].iter().collect();
                if target.is_empty() {
                    return Err(Error::Syntax {
                        line,
                        col: col + 3,
                        msg: "expected a coordinate after `d/d`".into(),
                    });
                }
                i = j;
                out.push((Tok::Basis(target), pos));
            } else {
                out.push((Tok::Ident(word), pos));
            }
        } else if "+-*/^(),_{}#=".contains(c) {
            i += 1;
            out.push((Tok::Sym(c), pos));
        } else {
            return Err(Error::Syntax {
                line,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
        col += i - start;
    }
    out.push((Tok::End, Pos { line, col }));
    Ok(out)
}

struct Parser<'a> {
    ctx: &'a Context,
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

fn basis_symbol(target: &str) -> Symbol {
    Symbol::Param(name(&format!("d/d{target}")))
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let p = self.pos();
        Err(Error::Syntax {
            line: p.line,
            col: p.col,
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if self.eat('/') {
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let ex = self.unary()?;
        let k = RatFn::from_expr(&ex)?.as_constant().ok_or_else(|| Error::Syntax {
            line: pos.line,
            col: pos.col,
            msg: "exponent must be a rational constant".into(),
        })?;
        let small = |b: &BigInt| i64::try_from(b.clone()).ok();
        match (small(k.numer()), small(k.denom())) {
            (Some(n), Some(d)) => Ok(base.pow(Exponent::new(n, d))),
            _ => Err(Error::Syntax {
                line: pos.line,
                col: pos.col,
                msg: "exponent out of range".into(),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(c) => Ok(Expr::Const(c)),
            Tok::Basis(t) => Ok(Expr::Sym(basis_symbol(&t))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(w) => self.identifier(w, pos),
            Tok::End => self.err("unexpected end of input"),
            Tok::Sym(c) => Err(Error::Syntax {
                line: pos.line,
                col: pos.col,
                msg: format!("unexpected `{c}`"),
            }),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat(')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(')') {
                return Ok(args);
            }
            self.expect(',')?;
        }
    }

    /// Raw subscript items: identifiers, digit strings and `#k` slots.
    fn subscript(&mut self) -> Result<Vec<(String, Pos)>> {
        let mut items = Vec::new();
        let braced = self.eat('{');
        loop {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Ident(w) => {
                    self.bump();
                    items.push((w, pos));
                }
                Tok::Num(c) if c.is_integer() => {
                    self.bump();
                    items.push((c.numer().to_string(), pos));
                }
                Tok::Sym('#') => {
                    self.bump();
                    match self.bump() {
                        Tok::Num(c) if c.is_integer() => items.push((format!("#{}", c.numer()), pos)),
                        _ => return self.err("expected slot number after `#`"),
                    }
                }
                Tok::Sym('}') if braced => {
                    self.bump();
                    break;
                }
                _ if braced => return self.err("expected `}`"),
                _ => break,
            }
            if !braced {
                break;
            }
        }
        if items.is_empty() {
            return self.err("empty subscript");
        }
        Ok(items)
    }

    /// Splits a subscript word into independent variables.
    fn vars_of(&self, word: &str, pos: Pos) -> Result<Vec<Name>> {
        let ctx = self.ctx;
        if word.chars().all(|c| c.is_ascii_digit()) {
            return word
                .chars()
                .map(|d| {
                    let n = format!("x{d}");
                    ctx.indeps.iter().find(|v| ***v == n).cloned().ok_or(Error::Undeclared {
                        name: n,
                        line: pos.line,
                        col: pos.col,
                    })
                })
                .collect();
        }
        let mut rest = word;
        let mut out = Vec::new();
        while !rest.is_empty() {
            let hit = ctx
                .indeps
                .iter()
                .filter(|v| rest.starts_with(&***v))
                .max_by_key(|v| v.len())
                .cloned();
            match hit {
                Some(v) => {
                    rest = &rest[v.len()..];
                    out.push(v);
                }
                None => {
                    return Err(Error::Undeclared {
                        name: word.to_string(),
                        line: pos.line,
                        col: pos.col,
                    })
                }
            }
        }
        Ok(out)
    }

    fn identifier(&mut self, w: String, pos: Pos) -> Result<Expr> {
        let ctx = self.ctx;
        if let Some(f) = ElemFn::from_name(&w) {
            if *self.peek() == Tok::Sym('(') {
                self.bump();
                let mut a = self.args()?;
                if a.len() != 1 {
                    return Err(Error::Arity {
                        name: w,
                        expected: 1,
                        found: a.len(),
                    });
                }
                return Ok(Expr::func(f, a.pop().unwrap()));
            }
        }
        let sub = if self.eat('_') { Some(self.subscript()?) } else { None };
        if let Some(formals) = ctx.ufns.get(w.as_str()) {
            let args = if self.eat('(') {
                let a = self.args()?;
                if a.len() != formals.len() {
                    return Err(Error::Arity {
                        name: w,
                        expected: formals.len(),
                        found: a.len(),
                    });
                }
                a
            } else {
                formals.iter().cloned().map(Expr::Sym).collect()
            };
            let mut deriv = vec![0u32; args.len()];
            for (item, p) in sub.unwrap_or_default() {
                let slot = if let Some(k) = item.strip_prefix('#') {
                    k.parse::<usize>()
                        .ok()
                        .filter(|k| (1..=args.len()).contains(k))
                        .map(|k| k - 1)
                } else {
                    let by_arg = args
                        .iter()
                        .position(|a| a.as_symbol().is_some_and(|s| **s.name() == *item));
                    by_arg.or_else(|| formals.iter().position(|s| **s.name() == *item))
                };
                let Some(k) = slot else {
                    return Err(Error::Syntax {
                        line: p.line,
                        col: p.col,
                        msg: format!("`{item}` is not an argument of `{w}`"),
                    });
                };
                deriv[k] += 1;
            }
            return Ok(Expr::ufn_deriv(&w, deriv, args));
        }
        if let Some(dep) = ctx.deps.iter().find(|d| ***d == w) {
            let mut c = JetCoord::new(dep);
            for (item, p) in sub.unwrap_or_default() {
                for v in self.vars_of(&item, p)? {
                    c = c.differentiated(&v);
                }
            }
            return Ok(Expr::Sym(Symbol::Jet(c)));
        }
        if sub.is_some() {
            return Err(Error::Syntax {
                line: pos.line,
                col: pos.col,
                msg: format!("`{w}` takes no subscript"),
            });
        }
        if ctx.indeps.iter().any(|v| **v == w) {
            return Ok(Expr::indep(&w));
        }
        if ctx.params.iter().any(|v| **v == w) {
            return Ok(Expr::param(&w));
        }
        Err(Error::Undeclared {
            name: w,
            line: pos.line,
            col: pos.col,
        })
    }
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn indeps(mut self, names: &[&str]) -> Self {
        self.indeps.extend(names.iter().map(|n| name(n)));
        self
    }

    pub fn deps(mut self, names: &[&str]) -> Self {
        self.deps.extend(names.iter().map(|n| name(n)));
        self
    }

    pub fn params(mut self, names: &[&str]) -> Self {
        self.params.extend(names.iter().map(|n| name(n)));
        self
    }

    /// Declares `f(args…)`; each argument must be a declared independent
    /// variable or dependent variable.
    pub fn ufn(mut self, f: &str, args: &[&str]) -> Self {
        let formals = args
            .iter()
            .map(|a| {
                if self.deps.iter().any(|d| **d == **a) {
                    Symbol::dep(a)
                } else {
                    Symbol::indep(a)
                }
            })
            .collect();
        self.ufns.insert(name(f), formals);
        self
    }

    pub fn is_declared(&self, n: &str) -> bool {
        self.indeps
            .iter()
            .chain(&self.deps)
            .chain(&self.params)
            .any(|v| **v == *n)
            || self.ufns.contains_key(n)
    }

    fn run(&self, src: &str, origin: (usize, usize), ops: bool) -> Result<Expr> {
        let toks = lex(
            src,
            Pos {
                line: origin.0,
                col: origin.1,
            },
            ops,
        )?;
        let mut p = Parser { ctx: self, toks, at: 0 };
        let e = p.expr()?;
        if *p.peek() != Tok::End {
            return p.err("unexpected trailing input");
        }
        Ok(e)
    }

    pub fn parse_expr(&self, src: &str) -> Result<Expr> {
        self.run(src, (1, 1), false)
    }

    /// As [`Context::parse_expr`], reporting positions relative to
    /// `(line, col)`.
    pub fn parse_expr_at(&self, src: &str, line: usize, col: usize) -> Result<Expr> {
        self.run(src, (line, col), false)
    }

    /// Parses `lhs = rhs`.
    pub fn parse_equation_at(&self, src: &str, line: usize, col: usize) -> Result<(Expr, Expr)> {
        let Some(i) = src.find('=') else {
            return Err(Error::Syntax {
                line,
                col,
                msg: "expected `lhs = rhs`".into(),
            });
        };
        let lhs = self.run(&src[..i], (line, col), false)?;
        let rhs = self.run(&src[i + 1..], (line, col + src[..=i].chars().count()), false)?;
        Ok((lhs, rhs))
    }

    /// Parses a first-order operator `Σ cᵢ·d/dzᵢ` into its coefficients,
    /// keyed by coordinate.
    pub fn parse_operator_at(&self, src: &str, line: usize, col: usize) -> Result<Vec<(Symbol, RatFn)>> {
        let e = self.run(src, (line, col), true)?;
        let r = RatFn::from_expr(&e)?;
        let mut bases: Vec<Symbol> = Vec::new();
        r.any_atom(&mut |a| {
            if let Some(s @ Symbol::Param(n)) = a.as_symbol() {
                if n.starts_with("d/d") && !bases.contains(s) {
                    bases.push(s.clone());
                }
            }
            false
        });
        let mut rest = r.clone();
        let mut out = Vec::new();
        for b in &bases {
            let c = derive(&r, &Partial(b.clone()));
            if bases.iter().any(|x| c.contains_symbol(x)) {
                return Err(Error::Syntax {
                    line,
                    col,
                    msg: "operator is not linear in its basis elements".into(),
                });
            }
            rest = rest.sub(&c.mul(&RatFn::symbol(b.clone())));
            let target = &b.name()[3..];
            let coord = if self.indeps.iter().any(|v| **v == *target) {
                Symbol::indep(target)
            } else if self.deps.iter().any(|v| **v == *target) {
                Symbol::dep(target)
            } else {
                return Err(Error::Undeclared {
                    name: target.to_string(),
                    line,
                    col,
                });
            };
            out.push((coord, c));
        }
        if !rest.is_zero() {
            return Err(Error::Syntax {
                line,
                col,
                msg: "operator has a term without a basis element".into(),
            });
        }
        Ok(out)
    }

    pub fn parse_operator(&self, src: &str) -> Result<Vec<(Symbol, RatFn)>> {
        self.parse_operator_at(src, 1, 1)
    }
}

/// Parses a rational literal such as `3`, `-1/2` or `0.25`.
pub fn parse_rational(src: &str) -> Option<Coeff> {
    let e = Context::new().parse_expr(src).ok()?;
    let c = RatFn::from_expr(&e).ok()?.as_constant()?;
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::normalize;

    fn heat() -> Context {
        Context::new()
            .indeps(&["t", "x1", "x2"])
            .deps(&["u"])
            .ufn("g", &["t", "x2"])
    }

    #[test]
    fn jet_syntax_and_digit_shorthand() {
        let c = heat();
        let a = c.parse_expr("u_{x1 x1} + u_t").unwrap();
        let b = c.parse_expr("u_t + u_{11}").unwrap();
        assert_eq!(normalize(&a).unwrap(), normalize(&b).unwrap());
        assert_eq!(c.parse_expr("u_{x1x2}").unwrap(), Expr::jet("u", &["x1", "x2"]));
    }

    #[test]
    fn function_forms() {
        let c = heat();
        let bare = c.parse_expr("g_{x2 x2}").unwrap();
        let explicit = c.parse_expr("g_{x2 x2}(t, x2)").unwrap();
        assert_eq!(bare, explicit);
        let slot = c.parse_expr("g_{#2}(t, x2^2)").unwrap();
        assert_eq!(slot.to_string(), "g_{#2}(t, x2^2)");
    }

    #[test]
    fn undeclared_symbol_has_position() {
        let err = heat().parse_expr("u_t +\n  y").unwrap_err();
        assert_eq!(
            err,
            Error::Undeclared {
                name: "y".into(),
                line: 2,
                col: 3
            }
        );
    }

    #[test]
    fn rational_exponents() {
        let c = heat();
        let e = c.parse_expr("t^(-3/2)*t^(1/2)").unwrap();
        assert_eq!(
            normalize(&e).unwrap(),
            normalize(&c.parse_expr("1/t").unwrap()).unwrap()
        );
    }

    #[test]
    fn operator_coefficients() {
        let c = heat();
        let op = c
            .parse_operator("4*t^2*d/dt + 4*t*x1*d/dx1 - (x1^2 + 2*t)*u*d/du")
            .unwrap();
        assert_eq!(op.len(), 3);
        assert!(c.parse_operator("d/dt + t").is_err());
        assert!(c.parse_operator("u*d/dt*d/dx1").is_err());
    }

    #[test]
    fn round_trip_through_printer() {
        let c = heat();
        let e = normalize(&c.parse_expr("exp(-x1^2/(4*t))*t^(-1/2) - 3*g_{t}/2").unwrap()).unwrap();
        let again = normalize(&c.parse_expr(&e.to_string()).unwrap()).unwrap();
        assert_eq!(e, again);
    }
}
