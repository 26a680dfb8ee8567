//! Linear functionals on profiles and their text syntax.
//!
//! ```text
//! 2*I(A:B|C) - H(A,B) + 1/2 D(C|A) + ING(A:B|C:D) + log(2)
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::profile::{label_index, subset_label, Mask, Profile};
use crate::error::{Error, Result};
use crate::exactlog::{log_of_rat, LogValue};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinFunctional {
    ground_set: Vec<String>,
    /// Nonzero coefficients, never on the empty set.
    coeffs: BTreeMap<Mask, BigRational>,
    constant: LogValue,
}

impl LinFunctional {
    pub fn zero(ground_set: &[String]) -> Self {
        LinFunctional { ground_set: ground_set.to_vec(), coeffs: BTreeMap::new(), constant: LogValue::zero() }
    }

    /// The functional `h ↦ c · h(S)`.
    pub fn entropy(ground_set: &[String], s: Mask, c: BigRational) -> Self {
        let mut f = LinFunctional::zero(ground_set);
        f.add_term(s, c);
        f
    }

    pub fn constant_term(ground_set: &[String], c: LogValue) -> Self {
        let mut f = LinFunctional::zero(ground_set);
        f.constant = c;
        f
    }

    pub fn ground_set(&self) -> &[String] {
        &self.ground_set
    }

    pub fn coeffs(&self) -> &BTreeMap<Mask, BigRational> {
        &self.coeffs
    }

    pub fn constant(&self) -> &LogValue {
        &self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn add_term(&mut self, s: Mask, c: BigRational) {
        if s == 0 {
            return;
        }
        let e = self.coeffs.entry(s).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&s);
        }
    }

    pub fn add(&self, other: &LinFunctional) -> LinFunctional {
        let mut out = self.clone();
        for (s, c) in &other.coeffs {
            out.add_term(*s, c.clone());
        }
        out.constant = &out.constant + &other.constant;
        out
    }

    pub fn scale(&self, c: &BigRational) -> LinFunctional {
        let mut out = LinFunctional::zero(&self.ground_set);
        for (s, x) in &self.coeffs {
            out.add_term(*s, x * c);
        }
        out.constant = self.constant.scale(c);
        out
    }

    pub fn sub(&self, other: &LinFunctional) -> LinFunctional {
        self.add(&other.scale(&-BigRational::one()))
    }

    /// `Δ(I|K)`.
    pub fn cond(ground_set: &[String], i: Mask, k: Mask) -> Self {
        let mut f = LinFunctional::zero(ground_set);
        f.add_term(i | k, BigRational::one());
        f.add_term(k, -BigRational::one());
        f
    }

    /// `Δ(I:J|K)`.
    pub fn ci(ground_set: &[String], i: Mask, j: Mask, k: Mask) -> Self {
        let mut f = LinFunctional::zero(ground_set);
        f.add_term(i | k, BigRational::one());
        f.add_term(j | k, BigRational::one());
        f.add_term(i | j | k, -BigRational::one());
        f.add_term(k, -BigRational::one());
        f
    }

    /// `□(A:B|C:D)`.
    pub fn ingleton(ground_set: &[String], a: Mask, b: Mask, c: Mask, d: Mask) -> Self {
        let g = ground_set;
        LinFunctional::ci(g, c, d, a)
            .add(&LinFunctional::ci(g, c, d, b))
            .add(&LinFunctional::ci(g, a, b, 0))
            .sub(&LinFunctional::ci(g, c, d, 0))
    }

    /// Text form accepted by [`parse_functional`].
    pub fn to_dsl(&self) -> String {
        let mut keys: Vec<&Mask> = self.coeffs.keys().collect();
        keys.sort_by_key(|m| (m.count_ones(), m.reverse_bits()));
        let mut out = String::new();
        for m in keys {
            let c = &self.coeffs[m];
            let mag = c.abs();
            if out.is_empty() {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                out.push_str(if c.is_negative() { " - " } else { " + " });
            }
            if !mag.is_one() {
                out.push_str(&format!("{mag}*"));
            }
            out.push_str(&format!("H({})", subset_label(&self.ground_set, *m)));
        }
        if !self.constant.is_zero() {
            let c = self.constant.to_string();
            if out.is_empty() {
                out = c;
            } else if let Some(rest) = c.strip_prefix('-') {
                out.push_str(&format!(" - {rest}"));
            } else {
                out.push_str(&format!(" + {c}"));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

impl fmt::Display for LinFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

/// `Σ c_S h(S) + constant`.
pub fn eval_functional(f: &LinFunctional, h: &Profile) -> Result<LogValue> {
    let h = if h.ground_set() == f.ground_set.as_slice() {
        std::borrow::Cow::Borrowed(h)
    } else {
        let same_set = h.n() == f.ground_set.len() && f.ground_set.iter().all(|l| h.index_of(l).is_ok());
        if !same_set {
            return Err(Error::domain(format!(
                "functional over {{{}}} applied to a profile over {{{}}}",
                f.ground_set.join(","),
                h.ground_set().join(",")
            )));
        }
        std::borrow::Cow::Owned(h.reordered(&f.ground_set)?)
    };
    let mut terms: Vec<LogValue> = f.coeffs.iter().map(|(s, c)| h.get(*s).scale(c)).collect();
    terms.push(f.constant.clone());
    Ok(terms.into_iter().sum())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ground: &'a [String],
}

fn is_label_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' || c == b'.'
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        let before = &self.src[..self.pos.min(self.src.len())];
        let line = 1 + before.iter().filter(|&&c| c == b'\n').count();
        let col = 1 + before.iter().rev().take_while(|&&c| c != b'\n').count();
        Error::Parse { line, col, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && is_label_char(self.src[self.pos]) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).unwrap().parse().unwrap())
    }

    fn rational(&mut self) -> Result<BigRational> {
        let n = self.integer()?;
        if self.eat(b'/') {
            let d = self.integer()?;
            if d.is_zero() {
                return Err(self.err("zero denominator"));
            }
            return Ok(BigRational::new(n, d));
        }
        Ok(BigRational::from_integer(n))
    }

    fn expr(&mut self) -> Result<LinFunctional> {
        let mut acc = LinFunctional::zero(self.ground);
        let mut sign = if self.eat(b'-') {
            -BigRational::one()
        } else {
            self.eat(b'+');
            BigRational::one()
        };
        loop {
            let t = self.term()?;
            acc = acc.add(&t.scale(&sign));
            sign = match self.peek() {
                Some(b'+') => BigRational::one(),
                Some(b'-') => -BigRational::one(),
                _ => return Ok(acc),
            };
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<LinFunctional> {
        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            let c = self.rational()?;
            let starred = self.eat(b'*');
            let continues = matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == b'(');
            if !continues {
                if starred {
                    return Err(self.err("expected a functional after `*`"));
                }
                if !c.is_zero() {
                    return Err(self.err("bare nonzero constants are not functionals; use log(r)"));
                }
                return Ok(LinFunctional::zero(self.ground));
            }
            return Ok(self.factor()?.scale(&c));
        }
        self.factor()
    }

    fn set(&mut self, stops: &[u8]) -> Result<Mask> {
        let mut m = 0;
        loop {
            match self.peek() {
                Some(c) if stops.contains(&c) => return Ok(m),
                _ => {}
            }
            let start = self.pos;
            let l = self.word();
            if l.is_empty() {
                return Err(self.err("expected a label"));
            }
            match label_index(self.ground, &l) {
                Ok(i) => m |= 1 << i,
                Err(_) => {
                    self.pos = start;
                    return Err(self.err(format!("unknown label {l:?}")));
                }
            }
            if !self.eat(b',') {
                return Ok(m);
            }
        }
    }

    fn factor(&mut self) -> Result<LinFunctional> {
        if self.eat(b'(') {
            let f = self.expr()?;
            self.expect(b')')?;
            return Ok(f);
        }
        let start = self.pos;
        let name = self.word();
        let g = self.ground;
        let f = match name.as_str() {
            "H" => {
                self.expect(b'(')?;
                let s = self.set(b")")?;
                LinFunctional::entropy(g, s, BigRational::one())
            }
            "D" => {
                self.expect(b'(')?;
                let i = self.set(b"|)")?;
                let k = if self.eat(b'|') { self.set(b")")? } else { 0 };
                LinFunctional::cond(g, i, k)
            }
            "I" => {
                self.expect(b'(')?;
                let i = self.set(b":")?;
                self.expect(b':')?;
                let j = self.set(b"|)")?;
                let k = if self.eat(b'|') { self.set(b")")? } else { 0 };
                LinFunctional::ci(g, i, j, k)
            }
            "ING" => {
                self.expect(b'(')?;
                let a = self.set(b":")?;
                self.expect(b':')?;
                let b = self.set(b"|")?;
                self.expect(b'|')?;
                let c = self.set(b":")?;
                self.expect(b':')?;
                let d = self.set(b")")?;
                LinFunctional::ingleton(g, a, b, c, d)
            }
            "log" => {
                self.expect(b'(')?;
                let r = self.rational()?;
                if r.is_zero() {
                    return Err(self.err("log of zero"));
                }
                LinFunctional::constant_term(g, log_of_rat(&r)?)
            }
            "" => return Err(self.err("expected a functional")),
            other => {
                self.pos = start;
                return Err(self.err(format!("unknown functional `{other}`")));
            }
        };
        self.expect(b')')?;
        Ok(f)
    }
}

pub fn parse_functional(text: &str, ground_set: &[String]) -> Result<LinFunctional> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, ground: ground_set };
    let f = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abcd() -> Vec<String> {
        ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect()
    }

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn expansions() {
        let g = abcd();
        let f = parse_functional("I(A:B)", &g).unwrap();
        let expect: BTreeMap<Mask, BigRational> = [(1, r(1)), (2, r(1)), (3, r(-1))].into_iter().collect();
        assert_eq!(f.coeffs(), &expect);
        let d = parse_functional("H(A,B) - H(A)", &g).unwrap();
        assert_eq!(d, parse_functional("D(B|A)", &g).unwrap());
        let ing = parse_functional("ING(A:B|C:D)", &g).unwrap();
        assert_eq!(ing.coeffs().len(), 10);
        let by_hand = parse_functional("I(C:D|A) + I(C:D|B) + I(A:B) - I(C:D)", &g).unwrap();
        assert_eq!(ing, by_hand);
    }

    #[test]
    fn coefficients_and_constants() {
        let g = abcd();
        let f = parse_functional("1/2 H(A) + 3*(H(B) - log(2)) - 0", &g).unwrap();
        assert_eq!(f.coeffs()[&1], BigRational::new(1.into(), 2.into()));
        assert_eq!(f.coeffs()[&2], r(3));
        assert_eq!(f.constant(), &LogValue::log_int(2).scale(&r(-3)));
        assert!(parse_functional("0", &g).unwrap().is_zero());
        assert!(parse_functional("H(E)", &g).is_err());
        assert!(parse_functional("H(A) +", &g).is_err());
        assert!(parse_functional("2", &g).is_err());
        assert!(parse_functional("Q(A)", &g).is_err());
    }

    #[test]
    fn evaluation() {
        let g = abcd();
        let h = Profile::from_fn(g.clone(), |m| LogValue::log_int(2).scale(&r(m.count_ones() as i64))).unwrap();
        assert!(eval_functional(&LinFunctional::zero(&g), &h).unwrap().is_zero());
        assert!(eval_functional(&parse_functional("I(A:B)", &g).unwrap(), &h).unwrap().is_zero());
        let other = vec!["x".to_string()];
        assert!(eval_functional(&parse_functional("H(x)", &other).unwrap(), &h).is_err());
    }

    #[test]
    fn labels_with_digits_and_primes() {
        let g: Vec<String> = ["1", "2", "z", "A'"].iter().map(|s| s.to_string()).collect();
        let f = parse_functional("2*I(1:2|A') - D(z|1,2)", &g).unwrap();
        assert_eq!(parse_functional(&f.to_dsl(), &g).unwrap(), f);
    }

    proptest! {
        #[test]
        fn print_parse_identity(
            coeffs in proptest::collection::btree_map(1u32..16, (-9i64..10, 1i64..5), 0..6),
            k in -3i64..4,
        ) {
            let g = abcd();
            let mut f = LinFunctional::zero(&g);
            for (m, (n, d)) in coeffs {
                f.add_term(m, BigRational::new(n.into(), d.into()));
            }
            f = f.add(&LinFunctional::constant_term(&g, LogValue::log_ratio(6, 5).scale(&r(k))));
            prop_assert_eq!(parse_functional(&f.to_dsl(), &g).unwrap(), f);
        }
    }
}
