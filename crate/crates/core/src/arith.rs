//! Small integer number theory: primality, trial-division factorization,
//! prime powers.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

pub fn is_prime_big(n: &BigUint) -> bool {
    match n.to_u64() {
        Some(v) => is_prime(v),
        // Every prime we ever store comes out of a capped factorization.
        None => false,
    }
}

/// Factorization of `n > 0` by trial division, ascending primes.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Default bound above which a cofactor left by trial division is not trusted.
pub const DEFAULT_FACTOR_CAP: u64 = 1_000_000_000_000;

/// Factor an arbitrary positive integer by trial division up to `sqrt(cap)`.
///
/// A cofactor that survives the trial division is accepted as prime when it
/// is at most `cap` (it then has no divisor below its square root); anything
/// larger is refused.
pub fn factor_capped(n: &BigUint, cap: u64) -> Result<Vec<(BigUint, u32)>> {
    if n.is_zero() {
        return Err(Error::domain("cannot factor 0"));
    }
    if let Some(v) = n.to_u64() {
        if v <= cap || v <= (1u64 << 40) {
            return Ok(factor_u64(v)
                .into_iter()
                .map(|(p, e)| (BigUint::from(p), e))
                .collect());
        }
    }
    let limit = isqrt(cap).max(2);
    let mut rest = n.clone();
    let mut out = Vec::new();
    let mut d = 2u64;
    while d <= limit {
        let bd = BigUint::from(d);
        if (&bd * &bd) > rest {
            break;
        }
        let (q, r) = rest.div_rem(&bd);
        if r.is_zero() {
            rest = q;
            let mut e = 1;
            loop {
                let (q, r) = rest.div_rem(&bd);
                if !r.is_zero() {
                    break;
                }
                rest = q;
                e += 1;
            }
            out.push((bd, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if rest > BigUint::one() {
        let d = BigUint::from(d);
        if &d * &d > rest || rest <= BigUint::from(cap) {
            out.push((rest, 1));
        } else {
            return Err(Error::domain(format!(
                "cannot factor {n}: cofactor {rest} exceeds the factorization cap {cap}"
            )));
        }
    }
    Ok(out)
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.saturating_mul(x) > n {
        x -= 1;
    }
    while (x + 1).saturating_mul(x + 1) <= n {
        x += 1;
    }
    x
}

/// `Some((p, e))` when `q = p^e` with `p` prime and `e >= 1`.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let f = factor_u64(q);
    if f.len() == 1 {
        Some(f[0])
    } else {
        None
    }
}

/// All prime powers in `lo..=hi`, ascending.
pub fn prime_powers_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo.max(2)..=hi).filter(|&q| prime_power(q).is_some()).collect()
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}
