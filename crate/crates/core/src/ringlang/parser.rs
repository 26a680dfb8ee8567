//! Recursive-descent parser for `.ring` set declarations.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::ast::{DefinableSet, Formula, Term};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
    Dot,
    Semi,
    Eq,
    Neq,
    Tilde,
    And,
    Or,
    Arrow,
    Define,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Caret => "^",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Semi => ";",
            Tok::Eq => "=",
            Tok::Neq => "!=",
            Tok::Tilde => "~",
            Tok::And => "/\\",
            Tok::Or => "\\/",
            Tok::Arrow => "->",
            Tok::Define => ":=",
            _ => "",
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| Error::Parse { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, width) = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            (Tok::Ident(chars[start..j].iter().collect()), j - start)
        } else if c.is_ascii_digit() {
            let start = i;
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[start..j].iter().collect();
            (Tok::Int(s.parse().unwrap()), j - start)
        } else {
            match (c, next) {
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('!', Some('=')) => (Tok::Neq, 2),
                (':', Some('=')) => (Tok::Define, 2),
                ('/', Some('\\')) => (Tok::And, 2),
                ('\\', Some('/')) => (Tok::Or, 2),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('^', _) => (Tok::Caret, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                (';', _) => (Tok::Semi, 1),
                ('=', _) => (Tok::Eq, 1),
                ('~', _) => (Tok::Tilde, 1),
                _ => return Err(err(l0, c0, format!("unexpected character {c:?}"))),
            }
        };
        out.push(Spanned { tok, line: l0, col: c0 });
        i += width;
        col += width;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    declared: Vec<String>,
    bound: Vec<String>,
    all_bound: HashSet<String>,
    params: &'a BTreeMap<String, BigInt>,
}

impl<'a> Parser<'a> {
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

    fn error_at(&self, pos: usize, msg: impl Into<String>) -> Error {
        let s = &self.toks[pos];
        Error::Parse { line: s.line, col: s.col, msg: msg.into() }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        self.error_at(self.pos, msg)
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", t.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn is_keyword(s: &str) -> bool {
        matches!(s, "set" | "blocks" | "exists" | "forall")
    }

    fn name_list(&mut self, what: &str) -> Result<Vec<(String, usize)>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let at = self.pos;
                let v = self.ident(what)?;
                if Self::is_keyword(&v) {
                    return Err(self.error_at(at, format!("keyword `{v}` cannot be a {what}")));
                }
                out.push((v, at));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn declaration(&mut self) -> Result<DefinableSet> {
        match self.peek() {
            Tok::Ident(s) if s == "set" => {
                self.bump();
            }
            _ => return Err(self.error("expected `set`")),
        }
        let name = self.ident("set name")?;
        let mut seen = HashSet::new();
        for (v, at) in self.name_list("variable")? {
            if !seen.insert(v.clone()) {
                return Err(self.error_at(at, format!("duplicate variable `{v}`")));
            }
            if self.params.contains_key(&v) {
                return Err(self.error_at(at, format!("variable `{v}` collides with a parameter")));
            }
            self.declared.push(v);
        }
        let mut blocks = None;
        if matches!(self.peek(), Tok::Ident(s) if s == "blocks") {
            self.bump();
            blocks = Some(self.blocks()?);
        }
        self.expect(Tok::Define)?;
        let formula = self.formula()?;
        if *self.peek() != Tok::Eof {
            return Err(self.error(format!("unexpected {} after formula", self.peek().describe())));
        }
        Ok(DefinableSet { name, free_vars: self.declared.clone(), formula, blocks })
    }

    fn blocks(&mut self) -> Result<Vec<(String, Vec<String>)>> {
        let mut out: Vec<(String, Vec<String>)> = Vec::new();
        let mut used: HashSet<String> = HashSet::new();
        loop {
            let at = self.pos;
            let label = self.ident("block label")?;
            if out.iter().any(|(l, _)| *l == label) {
                return Err(self.error_at(at, format!("duplicate block `{label}`")));
            }
            self.expect(Tok::Eq)?;
            let mut members = Vec::new();
            for (v, vat) in self.name_list("block member")? {
                if !self.declared.contains(&v) {
                    return Err(self.error_at(vat, format!("block member `{v}` is not a declared variable")));
                }
                if !used.insert(v.clone()) {
                    return Err(self.error_at(vat, format!("variable `{v}` appears in two blocks")));
                }
                members.push(v);
            }
            if members.is_empty() {
                return Err(self.error_at(at, format!("block `{label}` is empty")));
            }
            out.push((label, members));
            if *self.peek() == Tok::Semi {
                self.bump();
                if matches!(self.peek(), Tok::Ident(_)) {
                    continue;
                }
            }
            break;
        }
        if let Some(v) = self.declared.iter().find(|v| !used.contains(*v)) {
            return Err(self.error(format!("variable `{v}` belongs to no block")));
        }
        Ok(out)
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.quantified()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn at_quantifier(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "exists" || s == "forall")
    }

    fn quantified(&mut self) -> Result<Formula> {
        if self.at_quantifier() {
            return self.quantifier();
        }
        self.disj()
    }

    fn quantifier(&mut self) -> Result<Formula> {
        let universal = matches!(self.bump(), Tok::Ident(s) if s == "forall");
        let at = self.pos;
        let x = self.ident("quantified variable")?;
        if Self::is_keyword(&x) {
            return Err(self.error_at(at, format!("keyword `{x}` cannot be a variable")));
        }
        if self.declared.contains(&x) {
            return Err(self.error_at(at, format!("quantified `{x}` shadows a free variable")));
        }
        if self.params.contains_key(&x) {
            return Err(self.error_at(at, format!("quantified `{x}` collides with a parameter")));
        }
        if !self.all_bound.insert(x.clone()) {
            return Err(self.error_at(at, format!("variable `{x}` is quantified twice")));
        }
        self.expect(Tok::Dot)?;
        self.bound.push(x.clone());
        let body = self.formula()?;
        self.bound.pop();
        Ok(if universal {
            Formula::Forall(x, Box::new(body))
        } else {
            Formula::Exists(x, Box::new(body))
        })
    }

    fn disj(&mut self) -> Result<Formula> {
        let mut f = self.conj()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conj()?;
            f = Formula::Or(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut f = self.lit()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.lit()?;
            f = Formula::And(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn lit(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::Not(Box::new(self.lit()?)))
            }
            _ if self.at_quantifier() => self.quantifier(),
            Tok::LParen => {
                // `(` opens either a term inside an atom or a nested formula.
                let start = self.pos;
                let saved = self.all_bound.clone();
                match self.atom() {
                    Ok(f) => Ok(f),
                    Err(e_atom) => {
                        let atom_reach = self.pos;
                        self.pos = start;
                        self.all_bound = saved;
                        self.bump();
                        let inner = self.formula();
                        match inner {
                            Ok(f) => {
                                self.expect(Tok::RParen)?;
                                Ok(f)
                            }
                            Err(e_formula) => {
                                if self.pos >= atom_reach {
                                    Err(e_formula)
                                } else {
                                    Err(e_atom)
                                }
                            }
                        }
                    }
                }
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let lhs = self.term()?;
        let negated = match self.peek() {
            Tok::Eq => false,
            Tok::Neq => true,
            other => {
                return Err(self.error(format!("expected `=` or `!=`, found {}", other.describe())));
            }
        };
        self.bump();
        let rhs = self.term()?;
        let diff = match rhs {
            Term::Const(ref c) if c.is_zero() => lhs,
            rhs => Term::sub(lhs, rhs),
        };
        let f = Formula::Eq0(diff);
        Ok(if negated { Formula::Not(Box::new(f)) } else { f })
    }

    fn term(&mut self) -> Result<Term> {
        let mut t = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let r = self.product()?;
                    t = Term::Add(Box::new(t), Box::new(r));
                }
                Tok::Minus => {
                    self.bump();
                    let r = self.product()?;
                    t = Term::sub(t, r);
                }
                _ => return Ok(t),
            }
        }
    }

    fn product(&mut self) -> Result<Term> {
        let mut t = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let r = self.unary()?;
            t = Term::Mul(Box::new(t), Box::new(r));
        }
        Ok(t)
    }

    fn unary(&mut self) -> Result<Term> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Term::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Term> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let at = self.pos;
            let k = match self.bump() {
                Tok::Int(k) => k,
                other => {
                    return Err(self.error_at(at, format!("expected exponent, found {}", other.describe())));
                }
            };
            let k = k
                .to_u32()
                .filter(|&k| k >= 1)
                .ok_or_else(|| self.error_at(at, "exponent must be an integer in 1..2^32"))?;
            return Ok(Term::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Term> {
        let at = self.pos;
        match self.bump() {
            Tok::Int(n) => Ok(Term::Const(n)),
            Tok::Ident(v) => {
                if Self::is_keyword(&v) {
                    return Err(self.error_at(at, format!("unexpected keyword `{v}`")));
                }
                if self.declared.contains(&v) || self.bound.contains(&v) {
                    Ok(Term::Var(v))
                } else if let Some(c) = self.params.get(&v) {
                    Ok(constant(c))
                } else {
                    Err(self.error_at(at, format!("unbound variable `{v}`")))
                }
            }
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => Err(self.error_at(at, format!("expected a term, found {}", other.describe()))),
        }
    }
}

fn constant(c: &BigInt) -> Term {
    if c.sign() == num_bigint::Sign::Minus {
        Term::Neg(Box::new(Term::Const(-c)))
    } else {
        Term::Const(c.clone())
    }
}

pub fn parse_set(text: &str) -> Result<DefinableSet> {
    parse_set_with_params(text, &BTreeMap::new())
}

/// Parse with named integer parameters substituted as constants.
pub fn parse_set_with_params(text: &str, params: &BTreeMap<String, BigInt>) -> Result<DefinableSet> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        declared: Vec::new(),
        bound: Vec::new(),
        all_bound: HashSet::new(),
        params,
    };
    p.declaration()
}

/// Parse a bare formula over the given free variables.
pub fn parse_formula(text: &str, vars: &[&str]) -> Result<Formula> {
    let params = BTreeMap::new();
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        declared: vars.iter().map(|s| s.to_string()).collect(),
        bound: Vec::new(),
        all_bound: HashSet::new(),
        params: &params,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after formula", p.peek().describe())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringlang::ast::free_vars;

    pub const KR: &str = include_str!("../../data/kr.ring");

    #[test]
    fn hyperbola() {
        let s = parse_set("set Hyp(x,y) := x*y = 0").unwrap();
        assert_eq!(s.free_vars, vec!["x", "y"]);
        assert_eq!(
            s.formula,
            Formula::Eq0(Term::Mul(Box::new(Term::var("x")), Box::new(Term::var("y"))))
        );
    }

    #[test]
    fn sqrt_minus_one() {
        let s = parse_set("set Sq(y) := exists x. x^2 + y^2 = 0").unwrap();
        assert_eq!(s.free_vars, vec!["y"]);
        assert!(matches!(s.formula, Formula::Exists(ref x, _) if x == "x"));
        assert_eq!(free_vars(&s.formula), vec!["y"]);
    }

    fn count_atoms(f: &Formula, pos: &mut usize, neg: &mut usize) {
        match f {
            Formula::And(a, b) => {
                count_atoms(a, pos, neg);
                count_atoms(b, pos, neg);
            }
            Formula::Eq0(_) => *pos += 1,
            Formula::Not(a) if matches!(**a, Formula::Eq0(_)) => *neg += 1,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kr_source() {
        let s = parse_set(KR).unwrap();
        assert_eq!(s.free_vars.len(), 9);
        let blocks = s.blocks.as_ref().unwrap();
        let labels: Vec<_> = blocks.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, vec!["A", "B", "C", "D"]);
        let (mut pos, mut neg) = (0, 0);
        count_atoms(&s.formula, &mut pos, &mut neg);
        assert_eq!((pos, neg), (4, 2));
    }

    #[test]
    fn sugar() {
        let f = parse_formula("x = y", &["x", "y"]).unwrap();
        assert_eq!(f, Formula::Eq0(Term::sub(Term::var("x"), Term::var("y"))));
        let f = parse_formula("x != 0", &["x"]).unwrap();
        assert_eq!(f, Formula::not(Formula::Eq0(Term::var("x"))));
        let f = parse_formula("x = 0 -> y = 0 -> x = 1", &["x", "y"]).unwrap();
        assert!(matches!(f, Formula::Implies(_, ref r) if matches!(**r, Formula::Implies(..))));
    }

    #[test]
    fn precedence() {
        let f = parse_formula("-x^2 + 3*y = 0", &["x", "y"]).unwrap();
        let expect = Term::Add(
            Box::new(Term::Neg(Box::new(Term::Pow(Box::new(Term::var("x")), 2)))),
            Box::new(Term::Mul(Box::new(Term::int(3)), Box::new(Term::var("y")))),
        );
        assert_eq!(f, Formula::Eq0(expect));
        let f = parse_formula("(x + 1)*(x - 1) = 0 \\/ (x = 2 /\\ ~(x = 3))", &["x"]).unwrap();
        assert!(matches!(f, Formula::Or(..)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_set("set S(x) :=\n  x + z = 0") {
            Err(Error::Parse { line, col, msg }) => {
                assert_eq!((line, col), (2, 7));
                assert!(msg.contains("unbound"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_set("set S(x,x) := x = 0"), Err(Error::Parse { .. })));
        assert!(matches!(parse_set("set S(x) := exists x. x = 0"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_set("set S(y) := (exists x. x = y) /\\ exists x. x = 0"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_set("set S(x) := x = "), Err(Error::Parse { .. })));
        assert!(matches!(parse_set("set S(x) := x ^ 0 = 1"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_set("set S(x,y) blocks A=(x) := x = y"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn parameters() {
        let mut params = BTreeMap::new();
        params.insert("b".to_string(), BigInt::from(-3));
        let s = parse_set_with_params("set P(x) := x^2 = b", &params).unwrap();
        assert_eq!(
            s.formula,
            Formula::Eq0(Term::sub(
                Term::Pow(Box::new(Term::var("x")), 2),
                Term::Neg(Box::new(Term::int(3)))
            ))
        );
        assert!(parse_set("set P(x) := x^2 = b").is_err());
    }
}
