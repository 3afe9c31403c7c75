use std::fmt;

use indexmap::IndexMap;

use super::lexer::{lex, Tok, Token};
use super::{
    ConstraintAtom, ConstraintExpr, Constructor, CoreType, LinearPredicate, Relation, TypeBody, TypeDecl, TypeSystem,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub(super) fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

/// Parses one or more type declarations.
pub fn parse_decls(source: &str) -> Result<TypeSystem, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0, end: end_position(source), last_was_paren: false };
    let mut decls: IndexMap<String, TypeDecl> = IndexMap::new();
    while !p.at_end() {
        p.expect_keyword("type")?;
        loop {
            let (line, col) = p.here();
            let decl = p.decl()?;
            if decls.contains_key(&decl.name) {
                return Err(ParseError::new(line, col, format!("duplicate type `{}`", decl.name)));
            }
            decls.insert(decl.name.clone(), decl);
            if p.eat_keyword("and") {
                continue;
            }
            break;
        }
    }
    Ok(TypeSystem::from_decls(decls))
}

fn end_position(src: &str) -> (usize, usize) {
    let line = src.lines().count().max(1);
    let col = src.lines().last().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

const GLOBALS: [&str; 5] = ["alldiff", "increasing", "increasing_strict", "decreasing", "decreasing_strict"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
    /// Whether the last parsed type expression was wrapped in parentheses;
    /// `C of (a * b)` has one tuple argument, `C of a * b` has two.
    last_was_paren: bool,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::new(line, col, message))
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(t) => format!("{t:?}"),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", self.describe()))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(w)) if !is_reserved(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err(format!("expected {what}, found {}", self.describe())),
        }
    }

    fn decl(&mut self) -> Result<TypeDecl, ParseError> {
        if let Some(Tok::TyVar(v)) = self.peek() {
            return self.err(format!("polymorphic type parameter '{v} is not supported"));
        }
        if self.peek() == Some(&Tok::LParen) && matches!(self.peek_at(1), Some(Tok::TyVar(_))) {
            return self.err("polymorphic type parameters are not supported");
        }
        let name = self.ident("type name")?;
        self.expect(Tok::Eq, "`=`")?;
        let body = self.body()?;
        let constraint = if self.eat(&Tok::DeclAttrOpen) {
            let (line, col) = self.here();
            let attr = self.ident("attribute name")?;
            if attr != "satisfying" {
                return Err(ParseError::new(line, col, format!("unknown attribute `{attr}`")));
            }
            let c = self.constraints()?;
            self.expect(Tok::RBracket, "`]`")?;
            Some(c)
        } else {
            None
        };
        Ok(TypeDecl { name, body, constraint })
    }

    fn body(&mut self) -> Result<TypeBody, ParseError> {
        let leading_bar = self.eat(&Tok::Bar);
        if !matches!(self.peek(), Some(Tok::UIdent(_))) {
            if leading_bar {
                return self.err(format!("expected constructor, found {}", self.describe()));
            }
            return Ok(TypeBody::Core(self.core_type()?));
        }
        let mut ctors: Vec<Constructor> = Vec::new();
        loop {
            let (line, col) = self.here();
            let Some(Tok::UIdent(name)) = self.bump() else {
                self.pos -= 1;
                return self.err(format!("expected constructor, found {}", self.describe()));
            };
            if self.peek() == Some(&Tok::AttrOpen) {
                return self.err("attributes on constructors are not supported");
            }
            let args = if self.eat_keyword("of") {
                match self.core_type()? {
                    CoreType::Product(items) if !self.last_was_paren => items,
                    t => vec![t],
                }
            } else {
                Vec::new()
            };
            if ctors.iter().any(|c| c.name == name) {
                return Err(ParseError::new(line, col, format!("duplicate constructor `{name}`")));
            }
            ctors.push(Constructor { name, args });
            if !self.eat(&Tok::Bar) {
                break;
            }
        }
        Ok(TypeBody::Sum(ctors))
    }

    /// `postfix ('*' postfix)*`
    fn core_type(&mut self) -> Result<CoreType, ParseError> {
        let first = self.postfix()?;
        if self.peek() != Some(&Tok::Star) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&Tok::Star) {
            items.push(self.postfix()?);
        }
        self.last_was_paren = false;
        Ok(CoreType::Product(items))
    }

    fn postfix(&mut self) -> Result<CoreType, ParseError> {
        let mut t = self.primary()?;
        while self.peek() == Some(&Tok::AttrOpen) {
            let (line, col) = self.here();
            self.pos += 1;
            let attr = self.ident("attribute name")?;
            if attr != "collect" {
                return Err(ParseError::new(line, col, format!("unknown attribute `{attr}`")));
            }
            let group = match self.peek() {
                Some(Tok::Int(g)) => {
                    let g = *g;
                    self.pos += 1;
                    if g < 1 || g > u32::MAX as i64 {
                        return Err(ParseError::new(
                            line,
                            col,
                            format!("collect group must be a positive integer, got {g}"),
                        ));
                    }
                    g as u32
                }
                _ => 1,
            };
            self.expect(Tok::RBracket, "`]`")?;
            t = match t {
                CoreType::Int { collect: None } => CoreType::Int { collect: Some(group) },
                CoreType::Int { collect: Some(_) } => {
                    return Err(ParseError::new(line, col, "duplicate collect annotation"))
                }
                _ => return Err(ParseError::new(line, col, "[@collect] applies to `int` only")),
            };
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<CoreType, ParseError> {
        self.last_was_paren = false;
        let t = match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.core_type()?;
                self.expect(Tok::RParen, "`)`")?;
                self.last_was_paren = true;
                return Ok(inner);
            }
            Some(Tok::TyVar(v)) => return self.err(format!("polymorphic type parameter '{v} is not supported")),
            Some(Tok::Ident(w)) if w == "int" => CoreType::Int { collect: None },
            Some(Tok::Ident(w)) if w == "float" => CoreType::Float,
            Some(Tok::Ident(w)) if matches!(w.as_str(), "char" | "bool" | "string" | "unit") => {
                return self.err(format!("base type `{w}` is not supported"))
            }
            Some(Tok::Ident(w)) if !is_reserved(&w) => CoreType::Named(w),
            _ => return self.err(format!("expected a type, found {}", self.describe())),
        };
        self.pos += 1;
        if let Some(Tok::Ident(w)) = self.peek() {
            if !is_reserved(w) {
                return self.err(format!("type application `{w}` is not supported"));
            }
        }
        Ok(t)
    }

    fn constraints(&mut self) -> Result<ConstraintExpr, ParseError> {
        let var = if self.eat_keyword("fun") {
            let v = self.ident("parameter name")?;
            self.expect(Tok::Arrow, "`->`")?;
            Some(v)
        } else {
            None
        };
        let mut atoms = vec![self.constraint_atom(var.as_deref())?];
        while self.eat(&Tok::AndAnd) {
            atoms.push(self.constraint_atom(var.as_deref())?);
        }
        Ok(ConstraintExpr { atoms })
    }

    fn constraint_atom(&mut self, var: Option<&str>) -> Result<ConstraintAtom, ParseError> {
        if let Some(Tok::Ident(w)) = self.peek() {
            if GLOBALS.contains(&w.as_str()) {
                let w = w.clone();
                self.pos += 1;
                return self.global_atom(&w, var);
            }
            if Some(w.as_str()) != var {
                return self.err(format!("unknown constraint keyword `{w}`"));
            }
        }
        let Some(var) = var else {
            return self.err(format!("expected a constraint, found {}", self.describe()));
        };
        let (lc, lk) = self.linear(var)?;
        let (line, col) = self.here();
        let rel = self.bump();
        let (rc, rk) = self.linear(var)?;
        // lhs - rhs
        let (c, k) = (lc - rc, lk - rk);
        let pred = match rel {
            Some(Tok::Eq) => {
                let sign = if c < 0 || (c == 0 && k < 0) { -1 } else { 1 };
                LinearPredicate { coef: sign * c, constant: sign * k, rel: Relation::Eq }
            }
            Some(Tok::Le) => LinearPredicate { coef: c, constant: k, rel: Relation::Le },
            Some(Tok::Lt) => LinearPredicate { coef: c, constant: k + 1, rel: Relation::Le },
            Some(Tok::Ge) => LinearPredicate { coef: -c, constant: -k, rel: Relation::Le },
            Some(Tok::Gt) => LinearPredicate { coef: -c, constant: -k + 1, rel: Relation::Le },
            Some(Tok::Ne) => return Err(ParseError::new(line, col, "disequality `<>` is not supported")),
            _ => return Err(ParseError::new(line, col, "expected a comparison operator")),
        };
        Ok(ConstraintAtom::Arith(pred))
    }

    fn global_atom(&mut self, keyword: &str, var: Option<&str>) -> Result<ConstraintAtom, ParseError> {
        if let Some(Tok::Ident(w)) = self.peek() {
            if Some(w.as_str()) == var {
                self.pos += 1;
            } else if !is_reserved(w) && !GLOBALS.contains(&w.as_str()) {
                return self.err(format!("unbound variable `{w}`"));
            }
        }
        let group = match self.peek() {
            Some(Tok::Int(g)) => {
                let g = *g;
                if g < 1 || g > u32::MAX as i64 {
                    return self.err(format!("collect group must be a positive integer, got {g}"));
                }
                self.pos += 1;
                g as u32
            }
            _ => 1,
        };
        Ok(match keyword {
            "alldiff" => ConstraintAtom::AllDiff { group },
            "increasing" => ConstraintAtom::Increasing { group, strict: false },
            "increasing_strict" => ConstraintAtom::Increasing { group, strict: true },
            "decreasing" => ConstraintAtom::Decreasing { group, strict: false },
            _ => ConstraintAtom::Decreasing { group, strict: true },
        })
    }

    /// Linear expression over `var`: returns (coefficient, constant).
    fn linear(&mut self, var: &str) -> Result<(i64, i64), ParseError> {
        let mut acc = (0i64, 0i64);
        let mut sign = if self.eat(&Tok::Minus) { -1 } else { 1 };
        loop {
            let (c, k) = self.term(var)?;
            acc = (
                acc.0.checked_add(sign * c).ok_or_else(|| self.overflow())?,
                acc.1.checked_add(sign * k).ok_or_else(|| self.overflow())?,
            );
            sign = match self.peek() {
                Some(Tok::Plus) => 1,
                Some(Tok::Minus) => -1,
                _ => return Ok(acc),
            };
            self.pos += 1;
        }
    }

    fn overflow(&self) -> ParseError {
        let (line, col) = self.here();
        ParseError::new(line, col, "arithmetic overflow in constraint")
    }

    fn term(&mut self, var: &str) -> Result<(i64, i64), ParseError> {
        let negate = self.eat(&Tok::Minus);
        let s = if negate { -1 } else { 1 };
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                if self.eat(&Tok::Star) {
                    self.expect_var(var)?;
                    Ok((s * n, 0))
                } else {
                    Ok((0, s * n))
                }
            }
            Some(Tok::Ident(w)) if w == var => {
                self.pos += 1;
                if self.eat(&Tok::Star) {
                    match self.bump() {
                        Some(Tok::Int(n)) => Ok((s * n, 0)),
                        _ => {
                            self.pos -= 1;
                            self.err("expected an integer coefficient")
                        }
                    }
                } else {
                    Ok((s, 0))
                }
            }
            Some(Tok::Ident(w)) => self.err(format!("unknown constraint keyword `{w}`")),
            _ => self.err(format!("expected a linear term, found {}", self.describe())),
        }
    }

    fn expect_var(&mut self, var: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(w)) if w == var => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{var}`")),
        }
    }
}

fn is_reserved(w: &str) -> bool {
    matches!(w, "type" | "and" | "of" | "fun")
}
