//! Finite fields GF(p^e) with a canonical modulus and canonical element order.
//!
//! Elements are exchanged as [`FieldElem`], the index in enumeration order:
//! the base-p digits of the index are the polynomial coefficients, constant
//! term least significant. Arithmetic runs on a backend-specific
//! representation selected by [`FieldSpec::backend`].

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::arith::{factor_u64, is_prime};
use crate::error::{Error, Result};

/// Largest field order accepted; elements must fit comfortably in `u64` and
/// enumeration indices in `u32`.
pub const MAX_Q: u64 = 1 << 32;

/// Field orders up to this size get Zech logarithm tables.
pub const ZECH_MAX_Q: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem(pub u64);

/// Arithmetic on an internal representation `u64` whose meaning depends on
/// the backend.
pub trait FieldOps: Send + Sync {
    fn p(&self) -> u64;
    fn q(&self) -> u64;
    fn zero(&self) -> u64;
    fn one(&self) -> u64;
    fn from_index(&self, i: u64) -> u64;
    fn to_index(&self, r: u64) -> u64;
    fn add(&self, a: u64, b: u64) -> u64;
    fn neg(&self, a: u64) -> u64;
    fn mul(&self, a: u64, b: u64) -> u64;
    /// Inverse of a nonzero element.
    fn inv(&self, a: u64) -> u64;

    fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    fn is_zero(&self, a: u64) -> bool {
        a == self.zero()
    }

    fn pow(&self, a: u64, mut k: u64) -> u64 {
        let mut base = a;
        let mut acc = self.one();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// Image of an integer constant.
    fn from_int(&self, n: &BigInt) -> u64 {
        let r = n.mod_floor(&BigInt::from(self.p()));
        self.from_index(r.to_u64().unwrap())
    }

    fn from_u64(&self, n: u64) -> u64 {
        self.from_index(n % self.p())
    }
}

/// Integers modulo a prime.
#[derive(Clone, Debug)]
pub struct PrimeOps {
    p: u64,
    small: bool,
}

impl PrimeOps {
    pub fn new(p: u64) -> Self {
        PrimeOps { p, small: p < (1 << 32) }
    }
}

impl FieldOps for PrimeOps {
    fn p(&self) -> u64 {
        self.p
    }
    fn q(&self) -> u64 {
        self.p
    }
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_index(&self, i: u64) -> u64 {
        i
    }
    fn to_index(&self, r: u64) -> u64 {
        r
    }
    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    #[inline]
    fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        if self.small {
            a * b % self.p
        } else {
            (a as u128 * b as u128 % self.p as u128) as u64
        }
    }
    fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }
}

/// Reference arithmetic on enumeration indices through explicit polynomial
/// coefficient vectors. Slow; used for table construction and as an oracle.
#[derive(Clone, Debug)]
pub struct PolyOps {
    p: u64,
    e: u32,
    q: u64,
    /// Monic modulus, constant term first, length `e + 1`.
    modulus: Vec<u64>,
}

impl PolyOps {
    fn digits(&self, mut i: u64) -> Vec<u64> {
        let mut v = vec![0; self.e as usize];
        for d in v.iter_mut() {
            *d = i % self.p;
            i /= self.p;
        }
        v
    }

    fn index(&self, v: &[u64]) -> u64 {
        v.iter().rev().fold(0, |acc, &d| acc * self.p + d)
    }
}

impl FieldOps for PolyOps {
    fn p(&self) -> u64 {
        self.p
    }
    fn q(&self) -> u64 {
        self.q
    }
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn from_index(&self, i: u64) -> u64 {
        i
    }
    fn to_index(&self, r: u64) -> u64 {
        r
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        let (x, y) = (self.digits(a), self.digits(b));
        let s: Vec<u64> = x.iter().zip(&y).map(|(u, v)| (u + v) % self.p).collect();
        self.index(&s)
    }
    fn neg(&self, a: u64) -> u64 {
        let s: Vec<u64> = self.digits(a).iter().map(|&u| (self.p - u) % self.p).collect();
        self.index(&s)
    }
    fn mul(&self, a: u64, b: u64) -> u64 {
        let prod = poly_mul(&self.digits(a), &self.digits(b), self.p);
        let r = poly_rem(&prod, &self.modulus, self.p);
        let mut v = vec![0; self.e as usize];
        v[..r.len()].copy_from_slice(&r);
        self.index(&v)
    }
    fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.q - 2)
    }
}

/// Zech logarithm representation: `r < q - 1` stands for `g^r`, and the
/// sentinel `q - 1` stands for zero.
#[derive(Clone, Debug)]
pub struct ZechOps {
    p: u64,
    q: u64,
    ord: u64,
    half: u64,
    /// `exp[r]` = index of `g^r`.
    exp: Vec<u32>,
    /// `log[i]` = representation of the element with index `i`.
    log: Vec<u32>,
    /// `zech[n]` = representation of `1 + g^n`.
    zech: Vec<u32>,
}

impl ZechOps {
    fn build(poly: &PolyOps, g: u64) -> Self {
        let q = poly.q;
        let ord = q - 1;
        let mut exp = vec![0u32; ord as usize];
        let mut log = vec![ord as u32; q as usize];
        let mut x = 1u64;
        for (r, slot) in exp.iter_mut().enumerate() {
            *slot = x as u32;
            log[x as usize] = r as u32;
            x = poly.mul(x, g);
        }
        let p = poly.p;
        let zech = exp
            .iter()
            .map(|&i| {
                // adding one changes only the constant digit
                let i = i as u64;
                let d0 = i % p;
                let j = i - d0 + (d0 + 1) % p;
                log[j as usize]
            })
            .collect();
        let half = if p == 2 { 0 } else { ord / 2 };
        ZechOps { p, q, ord, half, exp, log, zech }
    }
}

impl FieldOps for ZechOps {
    fn p(&self) -> u64 {
        self.p
    }
    fn q(&self) -> u64 {
        self.q
    }
    #[inline]
    fn zero(&self) -> u64 {
        self.ord
    }
    #[inline]
    fn one(&self) -> u64 {
        0
    }
    fn from_index(&self, i: u64) -> u64 {
        self.log[i as usize] as u64
    }
    fn to_index(&self, r: u64) -> u64 {
        if r == self.ord {
            0
        } else {
            self.exp[r as usize] as u64
        }
    }
    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        if a == self.ord {
            return b;
        }
        if b == self.ord {
            return a;
        }
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let z = self.zech[(hi - lo) as usize] as u64;
        if z == self.ord {
            return self.ord;
        }
        let s = lo + z;
        if s >= self.ord {
            s - self.ord
        } else {
            s
        }
    }
    #[inline]
    fn neg(&self, a: u64) -> u64 {
        if a == self.ord {
            return a;
        }
        let s = a + self.half;
        if s >= self.ord {
            s - self.ord
        } else {
            s
        }
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        if a == self.ord || b == self.ord {
            return self.ord;
        }
        let s = a + b;
        if s >= self.ord {
            s - self.ord
        } else {
            s
        }
    }
    fn inv(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.ord - a
        }
    }
    fn pow(&self, a: u64, k: u64) -> u64 {
        if k == 0 {
            return 0;
        }
        if a == self.ord {
            return a;
        }
        ((a as u128 * k as u128) % self.ord as u128) as u64
    }
}

#[derive(Clone, Debug)]
pub enum Backend {
    Prime(PrimeOps),
    Zech(ZechOps),
    Poly(PolyOps),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Auto,
    Prime,
    Zech,
    Poly,
}

/// Run `$body` with `$ops` bound to the concrete backend of `$spec`.
#[macro_export]
macro_rules! with_field_ops {
    ($spec:expr, $ops:ident => $body:expr) => {
        match $spec.backend() {
            $crate::gf::Backend::Prime($ops) => $body,
            $crate::gf::Backend::Zech($ops) => $body,
            $crate::gf::Backend::Poly($ops) => $body,
        }
    };
}

#[derive(Debug)]
struct Inner {
    p: u64,
    e: u32,
    q: u64,
    modulus: Vec<u64>,
    generator: FieldElem,
    backend: Backend,
}

/// A constructed field; cheap to clone and safe to share between threads.
#[derive(Clone, Debug)]
pub struct FieldSpec(Arc<Inner>);

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.e == other.0.e
    }
}

impl Eq for FieldSpec {}

impl FieldSpec {
    pub fn p(&self) -> u64 {
        self.0.p
    }
    pub fn e(&self) -> u32 {
        self.0.e
    }
    pub fn q(&self) -> u64 {
        self.0.q
    }
    /// Monic modulus coefficients, constant term first.
    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }
    pub fn backend(&self) -> &Backend {
        &self.0.backend
    }
    pub fn generator(&self) -> FieldElem {
        self.0.generator
    }

    /// The slow reference backend for this field, independent of the one in use.
    pub fn poly_ops(&self) -> PolyOps {
        PolyOps {
            p: self.0.p,
            e: self.0.e,
            q: self.0.q,
            modulus: self.0.modulus.clone(),
        }
    }

    pub fn modulus_string(&self) -> String {
        fmt_poly(&self.0.modulus)
    }

    pub fn elem_string(&self, a: FieldElem) -> String {
        if self.0.e == 1 {
            format!("{}@GF({})", a.0, self.0.p)
        } else {
            format!("{}@GF({}^{})", a.0, self.0.p, self.0.e)
        }
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        with_field_ops!(self, o => FieldElem(o.to_index(o.add(o.from_index(a.0), o.from_index(b.0)))))
    }
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        with_field_ops!(self, o => FieldElem(o.to_index(o.sub(o.from_index(a.0), o.from_index(b.0)))))
    }
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        with_field_ops!(self, o => FieldElem(o.to_index(o.neg(o.from_index(a.0)))))
    }
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        with_field_ops!(self, o => FieldElem(o.to_index(o.mul(o.from_index(a.0), o.from_index(b.0)))))
    }
    pub fn pow(&self, a: FieldElem, k: u64) -> FieldElem {
        with_field_ops!(self, o => FieldElem(o.to_index(o.pow(o.from_index(a.0), k))))
    }
    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.0 == 0 {
            return Err(Error::domain("inverse of zero"));
        }
        Ok(with_field_ops!(self, o => FieldElem(o.to_index(o.inv(o.from_index(a.0))))))
    }

    /// All `q` elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.0.q).map(FieldElem)
    }

    /// Coefficient vector of an element (length `e`, constant term first).
    pub fn coeffs(&self, a: FieldElem) -> Vec<u64> {
        self.poly_ops().digits(a.0)
    }
}

/// Construct GF(p^e) with the automatic backend.
pub fn ff_make(p: u64, e: u32) -> Result<FieldSpec> {
    ff_make_with(p, e, BackendKind::Auto)
}

pub fn ff_make_with(p: u64, e: u32, kind: BackendKind) -> Result<FieldSpec> {
    if !is_prime(p) {
        return Err(Error::domain(format!("field characteristic {p} is not prime")));
    }
    if e == 0 {
        return Err(Error::domain("extension degree must be at least 1"));
    }
    let q = (p as u128).checked_pow(e).filter(|&q| q <= MAX_Q as u128).ok_or_else(|| {
        Error::domain(format!("field GF({p}^{e}) exceeds the supported order {MAX_Q}"))
    })? as u64;
    let modulus = canonical_modulus(p, e);
    let poly = PolyOps { p, e, q, modulus: modulus.clone() };
    let generator = FieldElem(find_generator(&poly));
    let kind = match kind {
        BackendKind::Auto if e == 1 => BackendKind::Prime,
        BackendKind::Auto if q <= ZECH_MAX_Q => BackendKind::Zech,
        BackendKind::Auto => BackendKind::Poly,
        k => k,
    };
    let backend = match kind {
        BackendKind::Prime if e == 1 => Backend::Prime(PrimeOps::new(p)),
        BackendKind::Prime => {
            return Err(Error::domain("the prime backend needs a prime field"));
        }
        BackendKind::Zech if q <= ZECH_MAX_Q => Backend::Zech(ZechOps::build(&poly, generator.0)),
        BackendKind::Zech => return Err(Error::domain("field too large for Zech tables")),
        _ => Backend::Poly(poly),
    };
    Ok(FieldSpec(Arc::new(Inner { p, e, q, modulus, generator, backend })))
}

pub fn ff_add(f: &FieldSpec, a: FieldElem, b: FieldElem) -> FieldElem {
    f.add(a, b)
}
pub fn ff_mul(f: &FieldSpec, a: FieldElem, b: FieldElem) -> FieldElem {
    f.mul(a, b)
}
pub fn ff_neg(f: &FieldSpec, a: FieldElem) -> FieldElem {
    f.neg(a)
}
pub fn ff_inv(f: &FieldSpec, a: FieldElem) -> Result<FieldElem> {
    f.inv(a)
}
pub fn ff_pow(f: &FieldSpec, a: FieldElem, k: u64) -> FieldElem {
    f.pow(a, k)
}
pub fn ff_enumerate(f: &FieldSpec) -> Vec<FieldElem> {
    f.elements().collect()
}
pub fn ff_generator(f: &FieldSpec) -> FieldElem {
    f.generator()
}

fn find_generator(poly: &PolyOps) -> u64 {
    let n = poly.q - 1;
    if n == 1 {
        return 1;
    }
    let primes: Vec<u64> = factor_u64(n).into_iter().map(|(r, _)| r).collect();
    (1..poly.q)
        .find(|&g| primes.iter().all(|&r| poly.pow(g, n / r) != 1))
        .expect("the multiplicative group of a finite field is cyclic")
}

// Dense polynomials over F_p, constant term first, no trailing zeros.

fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn mulm(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

fn inv_mod(a: u64, p: u64) -> u64 {
    crate::arith::pow_mod(a, p - 2, p)
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mulm(x, y, p)) % p;
        }
    }
    trim(out)
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let m = trim(m.to_vec());
    let mut r = trim(a.to_vec());
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    while r.len() > dm {
        let k = r.len() - 1 - dm;
        let c = mulm(r[r.len() - 1], lead_inv, p);
        for (i, &mi) in m.iter().enumerate() {
            r[k + i] = (r[k + i] + p - mulm(c, mi, p)) % p;
        }
        r = trim(r);
    }
    r
}

fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(out)
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// `base^k mod m`.
fn poly_powmod(base: &[u64], mut k: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = poly_rem(base, m, p);
    while k > 0 {
        if k & 1 == 1 {
            acc = poly_rem(&poly_mul(&acc, &b, p), m, p);
        }
        b = poly_rem(&poly_mul(&b, &b, p), m, p);
        k >>= 1;
    }
    acc
}

/// Irreducibility of a monic `f` of degree `e`: `x^(p^e) = x mod f` and
/// `gcd(x^(p^k) - x, f) = 1` for `1 <= k < e`.
pub fn is_irreducible(f: &[u64], p: u64) -> bool {
    let e = f.len() - 1;
    if e == 0 {
        return false;
    }
    if e == 1 {
        return true;
    }
    let x = vec![0, 1];
    // Frobenius iterates x^(p^k) mod f.
    let mut xp = x.clone();
    for k in 1..=e {
        xp = poly_powmod(&xp, p, f, p);
        let diff = poly_sub(&xp, &x, p);
        if k < e {
            let g = poly_gcd(&diff, f, p);
            if g.len() > 1 {
                return false;
            }
        } else if !diff.is_empty() {
            return false;
        }
    }
    true
}

/// First monic irreducible of degree `e` when the lower coefficients run
/// through the base-p digits of 0, 1, 2, …
pub fn canonical_modulus(p: u64, e: u32) -> Vec<u64> {
    let count = p.pow(e);
    for k in 0..count {
        let mut f = Vec::with_capacity(e as usize + 1);
        let mut t = k;
        for _ in 0..e {
            f.push(t % p);
            t /= p;
        }
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// `x^2 + x + 1` style rendering, highest degree first.
pub fn fmt_poly(f: &[u64]) -> String {
    let mut parts = Vec::new();
    for (i, &c) in f.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let mono = match i {
            0 => String::new(),
            1 => "x".to_string(),
            _ => format!("x^{i}"),
        };
        parts.push(match (c, i) {
            (_, 0) => c.to_string(),
            (1, _) => mono,
            _ => format!("{c}*{mono}"),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.e == 1 {
            write!(f, "GF({})", self.0.p)
        } else {
            write!(f, "GF({}^{}) mod {}", self.0.p, self.0.e, self.modulus_string())
        }
    }
}
