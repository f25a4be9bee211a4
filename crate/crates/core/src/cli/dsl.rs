//! Line-oriented input language.
//!
//! ```text
//! vars t x1 x2; deps u; order 2;
//! eq u_t = u_{x1 x1} + u_{x2 x2};
//! ufn g(t, x2); constraint g_t = g_{x2 x2}; nonzero g;
//! op Q1 = d/dx2 + (g_x2/g)*u*d/du;
//! family F = Q1;
//! map T: x1 -> x1 + 1; inverse T: x1 -> x1 - 1;
//! omega t x1; unknowns v; set u = g*v; expect v_t - v_{x1 x1};
//! ```
//!
//! Statements end at `;` or at the end of a line; `#` starts a comment.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::parse::Context;
use crate::expr::{ConstraintSet, RatFn, Symbol};
use crate::jet::{Equation, JetSpace, PdeSystem};
use crate::reduction::Ansatz;
use crate::symmetry::{Chart, OperatorFamily, PointTransformation, VectorField};

#[derive(Clone, Debug)]
pub struct Document {
    pub ctx: Context,
    pub name: Option<String>,
    pub indeps: Vec<String>,
    pub deps: Vec<String>,
    pub order: Option<u32>,
    pub equations: Vec<Equation>,
    pub constraints: ConstraintSet,
    pub chart: Chart,
    pub ops: Vec<VectorField>,
    pub families: Vec<OperatorFamily>,
    pub maps: Vec<PointTransformation>,
    pub omega: Vec<String>,
    pub unknowns: Vec<String>,
    pub substitution: Vec<(String, RatFn)>,
    pub expect: Vec<RatFn>,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn words(s: &str) -> Vec<&str> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .collect()
}

fn is_ident(w: &str) -> bool {
    let mut cs = w.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric())
}

/// A statement with the position of its first character.
struct Stmt<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn statements(src: &str) -> Vec<Stmt<'_>> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut start = 0;
        for piece in line.split(';') {
            let lead = piece.len() - piece.trim_start().len();
            let text = piece.trim();
            if !text.is_empty() {
                out.push(Stmt {
                    text,
                    line: i + 1,
                    col: line[..start + lead].chars().count() + 1,
                });
            }
            start += piece.len() + 1;
        }
    }
    out
}

impl Default for Document {
    fn default() -> Self {
        Document::new(Context::new())
    }
}

impl Document {
    /// An empty document whose expressions are read in `ctx`.
    pub fn new(ctx: Context) -> Self {
        Document {
            ctx,
            name: None,
            indeps: Vec::new(),
            deps: Vec::new(),
            order: None,
            equations: Vec::new(),
            constraints: ConstraintSet::new(),
            chart: Chart::new(),
            ops: Vec::new(),
            families: Vec::new(),
            maps: Vec::new(),
            omega: Vec::new(),
            unknowns: Vec::new(),
            substitution: Vec::new(),
            expect: Vec::new(),
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut d = Document::default();
        d.extend(src)?;
        Ok(d)
    }

    pub fn extend(&mut self, src: &str) -> Result<()> {
        for s in statements(src) {
            self.statement(&s)?;
        }
        Ok(())
    }

    /// Runs a single statement given as `keyword rest`.
    pub fn statement_str(&mut self, text: &str) -> Result<()> {
        self.statement(&Stmt {
            text: text.trim(),
            line: 1,
            col: 1,
        })
    }

    fn statement(&mut self, s: &Stmt<'_>) -> Result<()> {
        let kw_len = s.text.find(char::is_whitespace).unwrap_or(s.text.len());
        let kw = &s.text[..kw_len];
        let rest_raw = &s.text[kw_len..];
        let rest = rest_raw.trim_start();
        let col = s.col + kw_len + (rest_raw.len() - rest.len());
        let line = s.line;
        match kw {
            "system" => self.name = Some(rest.to_string()),
            "vars" | "deps" | "params" => {
                let ws = words(rest);
                if ws.is_empty() {
                    return Err(syntax(line, col, format!("`{kw}` needs at least one name")));
                }
                for w in &ws {
                    if !is_ident(w) {
                        return Err(syntax(line, col, format!("`{w}` is not a valid name")));
                    }
                    if self.ctx.is_declared(w) {
                        return Err(syntax(line, col, format!("`{w}` is declared twice")));
                    }
                }
                let ctx = std::mem::take(&mut self.ctx);
                self.ctx = match kw {
                    "vars" => {
                        self.indeps.extend(ws.iter().map(|w| w.to_string()));
                        ctx.indeps(&ws)
                    }
                    "deps" => {
                        self.deps.extend(ws.iter().map(|w| w.to_string()));
                        ctx.deps(&ws)
                    }
                    _ => ctx.params(&ws),
                };
            }
            "order" => {
                let k = rest
                    .parse()
                    .map_err(|_| syntax(line, col, "expected a positive integer"))?;
                self.order = Some(k);
            }
            "ufn" => {
                let (open, close) = match (rest.find('('), rest.rfind(')')) {
                    (Some(o), Some(c)) if o < c && rest[c + 1..].trim().is_empty() => (o, c),
                    _ => return Err(syntax(line, col, "expected `ufn name(arg, ...)`")),
                };
                let name = rest[..open].trim();
                if !is_ident(name) {
                    return Err(syntax(line, col, format!("`{name}` is not a valid name")));
                }
                let args = words(&rest[open + 1..close]);
                for a in &args {
                    if !self.ctx.is_declared(a) || !is_ident(a) {
                        return Err(Error::Undeclared {
                            name: a.to_string(),
                            line,
                            col: col + open + 1,
                        });
                    }
                }
                let ctx = std::mem::take(&mut self.ctx);
                self.ctx = ctx.ufn(name, &args);
            }
            "eq" => {
                let (l, r) = self.ctx.parse_equation_at(rest, line, col)?;
                let lhs = match l.as_symbol() {
                    Some(Symbol::Jet(c)) if c.order() > 0 => c.clone(),
                    _ => return Err(syntax(line, col, "left side must be a single derivative")),
                };
                self.equations.push(Equation::new(lhs, RatFn::from_expr(&r)?));
            }
            "constraint" => {
                let (l, r) = self.ctx.parse_equation_at(rest, line, col)?;
                self.constraints.add_equation(&l, &r)?;
            }
            "nonzero" => {
                let e = self.ctx.parse_expr_at(rest, line, col)?;
                self.chart = std::mem::take(&mut self.chart).nonvanishing(&e)?;
            }
            "op" => {
                let (name, body, off) = named(rest, '=', line, col)?;
                let parts = self.ctx.parse_operator_at(body, line, col + off)?;
                self.ops.push(VectorField::new(name, parts)?);
            }
            "family" => {
                let (name, body, _) = named(rest, '=', line, col)?;
                let mut members = Vec::new();
                for w in words(body) {
                    let q = self
                        .op(w)
                        .ok_or_else(|| syntax(line, col, format!("unknown operator `{w}`")))?;
                    members.push(q.clone());
                }
                if members.is_empty() {
                    return Err(syntax(line, col, "empty family"));
                }
                self.families.push(OperatorFamily::new(name, members));
            }
            "map" | "inverse" => {
                let (name, body, off) = named(rest, ':', line, col)?;
                let images = self.images(body, line, col + off)?;
                match kw {
                    "map" => {
                        if self.maps.iter().any(|m| m.name == name) {
                            return Err(syntax(line, col, format!("map `{name}` is defined twice")));
                        }
                        self.maps.push(PointTransformation::new(name, images, None));
                    }
                    _ => {
                        let m = self
                            .maps
                            .iter_mut()
                            .find(|m| m.name == name)
                            .ok_or_else(|| syntax(line, col, format!("`inverse` before `map {name}`")))?;
                        m.inverse = Some(images);
                    }
                }
            }
            "omega" => self.omega.extend(words(rest).into_iter().map(String::from)),
            "unknowns" => self.unknowns.extend(words(rest).into_iter().map(String::from)),
            "set" => {
                let (l, r) = self.ctx.parse_equation_at(rest, line, col)?;
                let dep = match l.as_symbol() {
                    Some(Symbol::Jet(c)) if c.order() == 0 => c.dep.to_string(),
                    _ => return Err(syntax(line, col, "left side must be a dependent variable")),
                };
                self.substitution.push((dep, RatFn::from_expr(&r)?));
            }
            "expect" => {
                let e = self.ctx.parse_expr_at(rest, line, col)?;
                self.expect.push(RatFn::from_expr(&e)?);
            }
            other => return Err(syntax(line, s.col, format!("unknown statement `{other}`"))),
        }
        Ok(())
    }

    fn images(&self, body: &str, line: usize, col: usize) -> Result<BTreeMap<Symbol, RatFn>> {
        let mut out = BTreeMap::new();
        let mut off = 0;
        for part in body.split(',') {
            let lead = part.len() - part.trim_start().len();
            let Some(arrow) = part.find("->") else {
                return Err(syntax(line, col + off, "expected `coordinate -> image`"));
            };
            let target = part[..arrow].trim();
            let s = self
                .ctx
                .parse_expr_at(target, line, col + off + lead)?
                .as_symbol()
                .cloned()
                .ok_or_else(|| syntax(line, col + off + lead, format!("`{target}` is not a coordinate")))?;
            let img = self
                .ctx
                .parse_expr_at(&part[arrow + 2..], line, col + off + arrow + 2)?;
            out.insert(s, RatFn::from_expr(&img)?);
            off += part.len() + 1;
        }
        Ok(out)
    }

    pub fn op(&self, name: &str) -> Option<&VectorField> {
        self.ops.iter().find(|q| q.name == name)
    }

    pub fn family(&self, name: &str) -> Option<OperatorFamily> {
        self.families
            .iter()
            .find(|f| f.name == name)
            .cloned()
            .or_else(|| self.op(name).cloned().map(OperatorFamily::single))
    }

    pub fn map(&self, name: &str) -> Option<&PointTransformation> {
        self.maps.iter().find(|m| m.name == name)
    }

    /// The declared system, if any equation was given.
    pub fn system(&self) -> Result<Option<PdeSystem>> {
        if self.equations.is_empty() {
            return Ok(None);
        }
        let order = self
            .order
            .unwrap_or_else(|| self.equations.iter().map(|e| e.lhs.order()).max().unwrap_or(1));
        let indeps: Vec<&str> = self.indeps.iter().map(String::as_str).collect();
        let deps: Vec<&str> = self.deps.iter().map(String::as_str).collect();
        let space = JetSpace::new(&indeps, &deps, order)?;
        let name = self.name.clone().unwrap_or_else(|| "input".into());
        Ok(Some(PdeSystem::new(&name, space, self.equations.clone())?))
    }

    /// The ansatz built from `omega`, `unknowns` and `set` statements.
    pub fn ansatz(&self) -> Option<Ansatz> {
        if self.substitution.is_empty() {
            return None;
        }
        let omega: Vec<&str> = self.omega.iter().map(String::as_str).collect();
        let unknowns: Vec<&str> = self.unknowns.iter().map(String::as_str).collect();
        let a = self
            .substitution
            .iter()
            .fold(Ansatz::new("input", &omega, &unknowns), |a, (d, f)| a.set(d, f.clone()));
        Some(
            a.with_constraints(self.constraints.clone())
                .with_chart(self.chart.clone()),
        )
    }
}

/// Splits `name SEP body`, returning the body's column offset.
fn named(rest: &str, sep: char, line: usize, col: usize) -> Result<(&str, &str, usize)> {
    let i = rest
        .find(sep)
        .ok_or_else(|| syntax(line, col, format!("expected `name {sep} ...`")))?;
    let name = rest[..i].trim();
    if !is_ident(name) {
        return Err(syntax(line, col, format!("`{name}` is not a valid name")));
    }
    Ok((name, &rest[i + 1..], i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAT: &str = "vars t x1 x2; deps u; order 2
eq u_t = u_{x1 x1} + u_{x2 x2}
ufn g(t, x2); constraint g_t = g_{x2 x2}; nonzero g
op Q1 = d/dx2 + (g_x2/g)*u*d/du   # conditional
op P = d/dx1
family F = Q1, P
map T: x1 -> x1 + 1; inverse T: x1 -> x1 - 1
";

    #[test]
    fn reads_a_heat_document() {
        let d = Document::parse(HEAT).unwrap();
        let sys = d.system().unwrap().unwrap();
        assert_eq!(sys.to_string(), "u_t = u_{x1 x1} + u_{x2 x2}");
        assert_eq!(d.ops.len(), 2);
        assert_eq!(d.family("F").unwrap().len(), 2);
        assert_eq!(d.family("P").unwrap().len(), 1);
        assert!(d.map("T").unwrap().check_inverse().unwrap());
        assert_eq!(d.constraints.rules().len(), 1);
    }

    #[test]
    fn errors_carry_positions() {
        let e = Document::parse("vars t x\ndeps u\neq u_t = u_{x x} +* u").unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 3, .. }), "{e}");
        let e = Document::parse("vars t\n  bogus 1").unwrap_err();
        assert_eq!(
            e,
            Error::Syntax {
                line: 2,
                col: 3,
                msg: "unknown statement `bogus`".into()
            }
        );
        let e = Document::parse("vars t; deps u; eq u_t = w").unwrap_err();
        assert!(matches!(e, Error::Undeclared { line: 1, col: 26, .. }), "{e}");
    }

    #[test]
    fn statement_positions() {
        let s = statements("a; b\n  c # d; e");
        let pos: Vec<(&str, usize, usize)> = s.iter().map(|s| (s.text, s.line, s.col)).collect();
        assert_eq!(pos, vec![("a", 1, 1), ("b", 1, 4), ("c", 2, 3)]);
    }
}
