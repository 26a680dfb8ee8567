//! Univariate polynomials over a finite field backend, enough to decide
//! whether a system of polynomial equations has a root in the field.

use crate::gf::FieldOps;

/// Coefficients in backend representation, constant term first, with no
/// trailing zeros. The empty vector is the zero polynomial.
pub type UPoly = Vec<u64>;

pub fn trim<F: FieldOps>(ops: &F, mut a: UPoly) -> UPoly {
    while let Some(&c) = a.last() {
        if ops.is_zero(c) {
            a.pop();
        } else {
            break;
        }
    }
    a
}

pub fn constant<F: FieldOps>(ops: &F, c: u64) -> UPoly {
    if ops.is_zero(c) {
        Vec::new()
    } else {
        vec![c]
    }
}

pub fn x<F: FieldOps>(ops: &F) -> UPoly {
    vec![ops.zero(), ops.one()]
}

pub fn add<F: FieldOps>(ops: &F, a: &[u64], b: &[u64]) -> UPoly {
    let n = a.len().max(b.len());
    let z = ops.zero();
    let out = (0..n)
        .map(|i| ops.add(a.get(i).copied().unwrap_or(z), b.get(i).copied().unwrap_or(z)))
        .collect();
    trim(ops, out)
}

pub fn neg<F: FieldOps>(ops: &F, a: &[u64]) -> UPoly {
    a.iter().map(|&c| ops.neg(c)).collect()
}

pub fn mul<F: FieldOps>(ops: &F, a: &[u64], b: &[u64]) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ops.zero(); a.len() + b.len() - 1];
    for (i, &u) in a.iter().enumerate() {
        if ops.is_zero(u) {
            continue;
        }
        for (j, &v) in b.iter().enumerate() {
            out[i + j] = ops.add(out[i + j], ops.mul(u, v));
        }
    }
    trim(ops, out)
}

/// Fold exponents `>= q` down using `x^q = x`, which preserves the value at
/// every point of the field.
pub fn reduce_frobenius<F: FieldOps>(ops: &F, mut a: UPoly) -> UPoly {
    let q = ops.q() as usize;
    while a.len() > q {
        let top = a.len() - 1;
        let c = a.pop().unwrap();
        let k = top - (q - 1);
        a[k] = ops.add(a[k], c);
        a = trim(ops, a);
    }
    a
}

pub fn rem<F: FieldOps>(ops: &F, a: &[u64], m: &[u64]) -> UPoly {
    let dm = m.len() - 1;
    let lead_inv = ops.inv(m[dm]);
    let mut r = a.to_vec();
    while r.len() > dm {
        let k = r.len() - 1 - dm;
        let c = ops.mul(r[r.len() - 1], lead_inv);
        for (i, &mi) in m.iter().enumerate() {
            r[k + i] = ops.sub(r[k + i], ops.mul(c, mi));
        }
        r.pop();
        r = trim(ops, r);
    }
    r
}

pub fn gcd<F: FieldOps>(ops: &F, a: &[u64], b: &[u64]) -> UPoly {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    while !b.is_empty() {
        let r = rem(ops, &a, &b);
        a = b;
        b = r;
    }
    a
}

/// `x^k mod m` for `deg m >= 1`.
fn x_pow_mod<F: FieldOps>(ops: &F, mut k: u64, m: &[u64]) -> UPoly {
    let mut acc = constant(ops, ops.one());
    let mut base = rem(ops, &x(ops), m);
    while k > 0 {
        if k & 1 == 1 {
            acc = rem(ops, &mul(ops, &acc, &base), m);
        }
        k >>= 1;
        if k > 0 {
            base = rem(ops, &mul(ops, &base, &base), m);
        }
    }
    acc
}

/// Whether some field element is a common root of all the polynomials.
pub fn has_common_root<F: FieldOps>(ops: &F, polys: &[UPoly]) -> bool {
    let mut g: UPoly = Vec::new();
    for p in polys {
        g = gcd(ops, &g, p);
        if g.len() == 1 {
            return false;
        }
    }
    match g.len() {
        // every polynomial vanishes identically
        0 => true,
        1 => false,
        _ => {
            let xq = x_pow_mod(ops, ops.q(), &g);
            let h = add(ops, &xq, &neg(ops, &x(ops)));
            gcd(ops, &g, &h).len() > 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::ff_make;
    use crate::with_field_ops;

    #[test]
    fn roots_of_small_polys() {
        for (p, e) in [(5u64, 1u32), (7, 1), (3, 2), (2, 3), (7, 2)] {
            let f = ff_make(p, e).unwrap();
            with_field_ops!(f, ops => {
                let q = ops.q();
                // x^2 + 1
                let poly = vec![ops.one(), ops.zero(), ops.one()];
                let brute = (0..q).any(|i| {
                    let v = ops.from_index(i);
                    ops.is_zero(ops.add(ops.mul(v, v), ops.one()))
                });
                assert_eq!(has_common_root(ops, &[poly]), brute, "GF({p}^{e})");
                assert!(has_common_root(ops, &[Vec::new()]));
                assert!(!has_common_root(ops, &[constant(ops, ops.one())]));
            });
        }
    }

    #[test]
    fn frobenius_reduction_preserves_values() {
        let f = ff_make(5, 1).unwrap();
        with_field_ops!(f, ops => {
            let mut big = vec![0u64; 14];
            big[13] = 2;
            big[1] = 3;
            let red = reduce_frobenius(ops, big.clone());
            assert!(red.len() <= 5);
            for v in 0..5u64 {
                let ev = |c: &[u64]| c.iter().rev().fold(0u64, |acc, &k| ops.add(ops.mul(acc, v), k));
                assert_eq!(ev(&big), ev(&red));
            }
        });
    }
}
