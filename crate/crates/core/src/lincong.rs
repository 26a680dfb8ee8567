//! Integer matrices, Smith normal form, and entropy profiles of linear
//! congruences and monomial maps.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::arith::is_prime;
use crate::error::{Error, Result};
use crate::exactlog::LogValue;
use crate::extend::{dist_entropy_profile, Distribution};
use crate::gf::{FieldOps, FieldSpec};
use crate::polymatroid::{check_ground, Mask, Profile};
use crate::with_field_ops;

pub const DEFAULT_BRUTE_BUDGET: u64 = 100_000_000;

/// Rows are indexed by labels; every matrix has at least one row and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    labels: Vec<String>,
    rows: Vec<Vec<BigInt>>,
    d: usize,
}

impl IntMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<BigInt>>) -> Result<IntMatrix> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::format("matrix needs at least one row and one column"));
        }
        if labels.len() != rows.len() {
            return Err(Error::format("one label per row is required"));
        }
        check_ground(&labels)?;
        let d = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::format(format!("row {} has {} entries, expected {d}", i + 1, rows[i].len())));
        }
        Ok(IntMatrix { labels, rows, d })
    }

    /// Rows labelled `1..=n`.
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<IntMatrix> {
        let labels = (1..=rows.len()).map(|i| i.to_string()).collect();
        IntMatrix::new(labels, rows)
    }

    pub fn from_i64(rows: &[&[i64]]) -> Result<IntMatrix> {
        IntMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn identity(n: usize) -> IntMatrix {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        IntMatrix::from_rows(rows).expect("n >= 1")
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(Zero::is_zero)
    }

    /// Rows in `mask`, in order; `None` for the empty selection.
    pub fn submatrix(&self, mask: Mask) -> Option<IntMatrix> {
        let keep: Vec<usize> = (0..self.n()).filter(|i| mask & (1 << i) != 0).collect();
        if keep.is_empty() {
            return None;
        }
        Some(IntMatrix {
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            d: self.d,
        })
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.d != other.n() {
            return Err(Error::domain("dimension mismatch in matrix product"));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..other.d)
                    .map(|j| r.iter().zip(&other.rows).map(|(a, row)| a * &row[j]).sum())
                    .collect()
            })
            .collect();
        IntMatrix::from_rows(rows)
    }

    /// One row per line, whitespace-separated integers, optional `label:`.
    pub fn parse_text(text: &str) -> Result<IntMatrix> {
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (label, nums) = match body.split_once(':') {
                Some((l, r)) => (l.trim().to_string(), r),
                None => ((rows.len() + 1).to_string(), body),
            };
            let mut row = Vec::new();
            for (k, tok) in nums.split_whitespace().enumerate() {
                let v: BigInt = tok.parse().map_err(|_| Error::Parse {
                    line: ln + 1,
                    col: k + 1,
                    msg: format!("not an integer: {tok:?}"),
                })?;
                row.push(v);
            }
            labels.push(label);
            rows.push(row);
        }
        IntMatrix::new(labels, rows)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Vec<Value>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| match x.to_i64() {
                        Some(v) => json!(v),
                        None => json!(x.to_string()),
                    })
                    .collect()
            })
            .collect();
        json!({"labels": self.labels, "rows": rows})
    }

    pub fn from_json(v: &Value) -> Result<IntMatrix> {
        let rows = v
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::format("missing \"rows\" array"))?
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| Error::format("rows must be arrays"))?
                    .iter()
                    .map(|x| match x {
                        Value::Number(n) if n.is_i64() => Ok(BigInt::from(n.as_i64().unwrap())),
                        Value::Number(n) if n.is_u64() => Ok(BigInt::from(n.as_u64().unwrap())),
                        Value::String(s) => s.parse().map_err(|_| Error::format(format!("bad integer {s:?}"))),
                        _ => Err(Error::format("matrix entries must be integers")),
                    })
                    .collect::<Result<Vec<BigInt>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        match v.get("labels") {
            None => IntMatrix::from_rows(rows),
            Some(ls) => {
                let labels = ls
                    .as_array()
                    .ok_or_else(|| Error::format("\"labels\" must be an array"))?
                    .iter()
                    .map(|l| l.as_str().map(String::from).ok_or_else(|| Error::format("labels must be strings")))
                    .collect::<Result<Vec<_>>>()?;
                IntMatrix::new(labels, rows)
            }
        }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, r) in self.labels.iter().zip(&self.rows) {
            let cells: Vec<String> = r.iter().map(ToString::to_string).collect();
            writeln!(f, "{l}: {}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// `S = T·A·U` with `S` diagonal and `T`, `U` unimodular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    pub s: IntMatrix,
    pub t: IntMatrix,
    pub u: IntMatrix,
    /// `s_1, …, s_k` with `k = min(n, d)`.
    pub diagonal: Vec<BigInt>,
}

impl SnfResult {
    pub fn to_json(&self) -> Value {
        json!({
            "diagonal": self.diagonal.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "S": self.s.to_json()["rows"],
            "T": self.t.to_json()["rows"],
            "U": self.u.to_json()["rows"],
        })
    }
}

type Mat = Vec<Vec<BigInt>>;

fn eye(n: usize) -> Mat {
    IntMatrix::identity(n).rows
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    for r in m.iter_mut() {
        r.swap(a, b);
    }
}

/// `row_i -= k·row_j`.
fn row_axpy(m: &mut Mat, i: usize, j: usize, k: &BigInt) {
    let src = m[j].clone();
    for (x, y) in m[i].iter_mut().zip(&src) {
        *x -= k * y;
    }
}

/// `col_i -= k·col_j`.
fn col_axpy(m: &mut Mat, i: usize, j: usize, k: &BigInt) {
    for r in m.iter_mut() {
        let y = r[j].clone();
        r[i] -= k * y;
    }
}

/// Fraction-free (Bareiss) determinant.
pub fn det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    let mut a = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &a[n - 1][n - 1]
}

pub fn snf(a: &IntMatrix) -> Result<SnfResult> {
    let (n, d) = (a.n(), a.d());
    let mut s = a.rows.clone();
    let mut t = eye(n);
    let mut u = eye(d);
    let k = n.min(d);
    for p in 0..k {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in p..n {
                for j in p..d {
                    if !s[i][j].is_zero()
                        && best.is_none_or(|(bi, bj)| s[i][j].abs() < s[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else { break };
            s.swap(p, bi);
            t.swap(p, bi);
            swap_cols(&mut s, p, bj);
            swap_cols(&mut u, p, bj);
            let mut clean = true;
            for i in p + 1..n {
                if !s[i][p].is_zero() {
                    let q = s[i][p].div_floor(&s[p][p]);
                    row_axpy(&mut s, i, p, &q);
                    row_axpy(&mut t, i, p, &q);
                    clean &= s[i][p].is_zero();
                }
            }
            for j in p + 1..d {
                if !s[p][j].is_zero() {
                    let q = s[p][j].div_floor(&s[p][p]);
                    col_axpy(&mut s, j, p, &q);
                    col_axpy(&mut u, j, p, &q);
                    clean &= s[p][j].is_zero();
                }
            }
            if !clean {
                continue;
            }
            let bad = (p + 1..n).find(|&i| (p + 1..d).any(|j| !s[i][j].is_multiple_of(&s[p][p])));
            match bad {
                Some(i) => {
                    let m1 = -BigInt::one();
                    row_axpy(&mut s, p, i, &m1);
                    row_axpy(&mut t, p, i, &m1);
                }
                None => break,
            }
        }
        if s[p][p].is_negative() {
            for x in s[p].iter_mut() {
                *x = -&*x;
            }
            for x in t[p].iter_mut() {
                *x = -&*x;
            }
        }
    }
    let diagonal: Vec<BigInt> = (0..k).map(|i| s[i][i].clone()).collect();
    let res = SnfResult {
        s: IntMatrix::from_rows(s)?,
        t: IntMatrix::from_rows(t)?,
        u: IntMatrix::from_rows(u)?,
        diagonal,
    };
    verify_snf(a, &res)?;
    Ok(res)
}

fn verify_snf(a: &IntMatrix, r: &SnfResult) -> Result<()> {
    let tau = r.t.mul(a)?.mul(&r.u)?;
    if tau.rows != r.s.rows {
        return Err(Error::domain("internal: S != T*A*U"));
    }
    for (i, row) in r.s.rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i != j && !x.is_zero() {
                return Err(Error::domain("internal: S is not diagonal"));
            }
        }
    }
    for w in r.diagonal.windows(2) {
        if w[0].is_negative() || !(w[1].is_multiple_of(&w[0]) || w[1].is_zero() && w[0].is_zero()) {
            return Err(Error::domain("internal: invariant factors do not divide"));
        }
    }
    for m in [&r.t, &r.u] {
        if det(&m.rows).abs() != BigInt::one() {
            return Err(Error::domain("internal: transform is not unimodular"));
        }
    }
    Ok(())
}

fn gcd_big_m(m: u64, s: &BigInt) -> u64 {
    if s.is_zero() {
        return m;
    }
    (s.abs() % BigInt::from(m)).to_u64().map_or(m, |r| num_integer::gcd(m, r))
}

/// Factors `m / gcd(m, s_i)` whose product is the image order.
fn image_factors(a: &IntMatrix, m: u64) -> Result<Vec<u64>> {
    if m < 2 {
        return Err(Error::domain("modulus must be at least 2"));
    }
    let r = snf(a)?;
    Ok(r.diagonal.iter().map(|s| m / gcd_big_m(m, s)).collect())
}

/// Order of the column span of `A` in `(Z/m)^n`.
pub fn image_size(a: &IntMatrix, m: u64) -> Result<BigInt> {
    Ok(image_factors(a, m)?.into_iter().map(BigInt::from).product())
}

/// Distinct vectors `Āx` for `x ∈ (Z/m)^d`, by enumeration.
fn image_set_bruteforce(a: &IntMatrix, m: u64, budget: u64) -> Result<Vec<Vec<u64>>> {
    if m < 2 {
        return Err(Error::domain("modulus must be at least 2"));
    }
    let total = (m as u128).checked_pow(a.d() as u32).filter(|&t| t <= budget as u128).ok_or_else(|| {
        Error::Budget(format!("{m}^{} tuples exceed the budget of {budget}", a.d()))
    })? as u64;
    let bm = BigInt::from(m);
    let n = a.n();
    let cols: Vec<Vec<u64>> = (0..a.d())
        .map(|j| (0..n).map(|i| a.rows[i][j].mod_floor(&bm).to_u64().unwrap()).collect())
        .collect();
    let dense = (m as u128).checked_pow(n as u32).filter(|&c| c <= 1 << 24);
    let mut bitmap = vec![false; dense.unwrap_or(0) as usize];
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut x = vec![0u64; a.d()];
    let mut img = vec![0u64; n];
    for _ in 0..total {
        if dense.is_some() {
            let code = img.iter().fold(0usize, |acc, &v| acc * m as usize + v as usize);
            bitmap[code] = true;
        } else {
            seen.insert(img.clone());
        }
        // stepping x_j by one, with or without wrap-around, adds column j mod m
        for (j, xj) in x.iter_mut().enumerate() {
            for (v, c) in img.iter_mut().zip(&cols[j]) {
                *v = ((*v as u128 + *c as u128) % m as u128) as u64;
            }
            *xj += 1;
            if *xj < m {
                break;
            }
            *xj = 0;
        }
    }
    if dense.is_some() {
        Ok(bitmap
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(code, _)| {
                let mut v = vec![0u64; n];
                let mut c = code as u64;
                for i in (0..n).rev() {
                    v[i] = c % m;
                    c /= m;
                }
                v
            })
            .collect())
    } else {
        Ok(seen.into_iter().collect())
    }
}

/// Image order by enumerating `(Z/m)^d`.
pub fn image_size_bruteforce(a: &IntMatrix, m: u64, budget: u64) -> Result<u64> {
    Ok(image_set_bruteforce(a, m, budget)?.len() as u64)
}

/// Image orders of every row selection, indexed by mask, from one
/// enumeration: `im(Ā_I)` is the projection of `im(Ā)`.
pub fn image_sizes_bruteforce(a: &IntMatrix, m: u64, budget: u64) -> Result<Vec<u64>> {
    let img = image_set_bruteforce(a, m, budget)?;
    Ok((0..1u32 << a.n())
        .map(|mask| {
            let keep: Vec<usize> = (0..a.n()).filter(|i| mask & (1 << i) != 0).collect();
            let proj: HashSet<Vec<u64>> = img.iter().map(|v| keep.iter().map(|&i| v[i]).collect()).collect();
            proj.len() as u64
        })
        .collect())
}

/// `h(I) = log |im(Ā_I)|` for the quasi-uniform variable `x ↦ Āx`.
pub fn profile_lincong(a: &IntMatrix, m: u64) -> Result<Profile> {
    if m < 2 {
        return Err(Error::domain("modulus must be at least 2"));
    }
    let entries = (0..1u32 << a.n())
        .into_par_iter()
        .map(|mask| match a.submatrix(mask) {
            None => Ok(LogValue::zero()),
            Some(sub) => Ok(image_factors(&sub, m)?.into_iter().map(LogValue::log_int).sum()),
        })
        .collect::<Result<Vec<_>>>()?;
    Profile::new(a.labels.clone(), entries)
}

/// Profile of the monomial map `t ↦ (t^{a_1}, …, t^{a_n})` on `(GF(q)^×)^d`,
/// by enumeration of the torus.
pub fn torus_profile(a: &IntMatrix, spec: &FieldSpec, budget: u64) -> Result<Profile> {
    let q = spec.q();
    let m = q - 1;
    if m < 2 {
        return Err(Error::domain("the torus needs q >= 3"));
    }
    if q > u32::MAX as u64 {
        return Err(Error::domain("field too large for the torus census"));
    }
    let total = (m as u128).checked_pow(a.d() as u32).filter(|&t| t <= budget as u128).ok_or_else(|| {
        Error::Budget(format!("{m}^{} torus points exceed the budget of {budget}", a.d()))
    })? as u64;
    let bm = BigInt::from(m);
    let exps: Vec<Vec<u64>> = a
        .rows
        .iter()
        .map(|r| r.iter().map(|x| x.mod_floor(&bm).to_u64().unwrap()).collect())
        .collect();
    let d = a.d();
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    with_field_ops!(spec, ops => {
        // torus coordinates run over the nonzero indices 1..q
        let mut t = vec![1u64; d];
        let reps: Vec<_> = (0..q).map(|i| ops.from_index(i)).collect();
        for _ in 0..total {
            let img: Vec<u32> = exps
                .iter()
                .map(|row| {
                    let mut acc = ops.one();
                    for (j, &e) in row.iter().enumerate() {
                        acc = ops.mul(acc, ops.pow(reps[t[j] as usize], e));
                    }
                    ops.to_index(acc) as u32
                })
                .collect();
            *counts.entry(img).or_insert(0) += 1;
            for tj in t.iter_mut() {
                *tj += 1;
                if *tj < q {
                    break;
                }
                *tj = 1;
            }
        }
    });
    let dist = Distribution::from_counts(a.labels.clone(), vec![q as u32; a.n()], counts)?;
    dist_entropy_profile(&dist)
}

/// lcm of the nonzero invariant factors of every nonempty row selection.
pub fn dirichlet_modulus(a: &IntMatrix) -> Result<BigInt> {
    let parts = (1..1u32 << a.n())
        .into_par_iter()
        .map(|mask| {
            let r = snf(&a.submatrix(mask).expect("nonempty"))?;
            Ok(r.diagonal.into_iter().filter(|s| !s.is_zero()).fold(BigInt::one(), |l, s| l.lcm(&s)))
        })
        .collect::<Result<Vec<BigInt>>>()?;
    Ok(parts.into_iter().fold(BigInt::one(), |l, s| l.lcm(&s)))
}

/// First `count` primes `p ≡ 1 (mod s)`.
pub fn suggest_primes(s: &BigInt, count: usize) -> Result<Vec<u64>> {
    let s = s
        .to_u64()
        .filter(|s| (1..1 << 40).contains(s))
        .ok_or_else(|| Error::domain(format!("modulus {s} is out of range for a prime search")))?;
    let mut out = Vec::with_capacity(count);
    let mut p: u64 = if s == 1 { 2 } else { s + 1 };
    while out.len() < count {
        if is_prime(p) {
            out.push(p);
        }
        p = match p.checked_add(if s == 1 { 1 } else { s }) {
            Some(v) => v,
            None => return Err(Error::domain("prime search overflowed")),
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlog::{lv_normalize_base, lv_sign, Normalized};
    use crate::gf::ff_make;
    use crate::polymatroid::{ingleton, is_polymatroid};
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| x.into()).collect()
    }

    #[test]
    fn snf_examples() {
        let i3 = IntMatrix::identity(3);
        let r = snf(&i3).unwrap();
        assert_eq!((r.s.clone(), r.t.clone(), r.u.clone()), (i3.clone(), i3.clone(), i3));
        let z = IntMatrix::from_i64(&[&[0, 0, 0], &[0, 0, 0]]).unwrap();
        let r = snf(&z).unwrap();
        assert_eq!(r.s, z);
        assert_eq!(r.t, IntMatrix::identity(2));
        assert_eq!(r.u, IntMatrix::identity(3));
        let r = snf(&IntMatrix::from_i64(&[&[2, 0], &[0, 3]]).unwrap()).unwrap();
        assert_eq!(r.diagonal, big(&[1, 6]));
        let r = snf(&IntMatrix::from_i64(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]).unwrap()).unwrap();
        assert_eq!(r.diagonal, big(&[2, 6, 12]));
    }

    #[test]
    fn determinant() {
        assert_eq!(det(&[big(&[2, 1]), big(&[7, 4])]), BigInt::one());
        assert_eq!(det(&[big(&[0, 1]), big(&[1, 0])]), -BigInt::one());
        assert_eq!(det(&[big(&[1, 2, 3]), big(&[4, 5, 6]), big(&[7, 8, 10])]), BigInt::from(-3));
    }

    #[test]
    fn image_examples() {
        let z = IntMatrix::from_i64(&[&[0, 0]]).unwrap();
        assert_eq!(image_size(&z, 7).unwrap(), BigInt::one());
        assert_eq!(image_size(&IntMatrix::identity(2), 6).unwrap(), BigInt::from(36));
        let two = IntMatrix::from_i64(&[&[2]]).unwrap();
        assert_eq!(image_size(&two, 6).unwrap(), BigInt::from(3));
        assert_eq!(image_size_bruteforce(&two, 6, DEFAULT_BRUTE_BUDGET).unwrap(), 3);
        assert_eq!(image_size_bruteforce(&IntMatrix::identity(2), 4, DEFAULT_BRUTE_BUDGET).unwrap(), 16);
        assert!(matches!(image_size_bruteforce(&IntMatrix::identity(3), 10, 999), Err(Error::Budget(_))));
    }

    #[test]
    fn text_and_json() {
        let a = IntMatrix::parse_text("1: 1 0 2\n# note\n2: -3 4 5\n").unwrap();
        assert_eq!(a.labels(), ["1", "2"]);
        assert_eq!(a.get(1, 0), &BigInt::from(-3));
        let b = IntMatrix::parse_text("1 2\n3 4\n").unwrap();
        assert_eq!(b.labels(), ["1", "2"]);
        assert_eq!(IntMatrix::from_json(&a.to_json()).unwrap(), a);
        assert!(matches!(IntMatrix::parse_text("1 2\n3\n"), Err(Error::Format(_))));
        assert!(matches!(IntMatrix::parse_text("1 x\n"), Err(Error::Parse { line: 1, col: 2, .. })));
        assert_eq!(IntMatrix::parse_text(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn four_by_five_example() {
        let a = IntMatrix::parse_text(include_str!("../data/snf_example.txt")).unwrap();
        let h = profile_lincong(&a, 343).unwrap();
        let expect = [
            ("1", 3), ("2", 3), ("3", 3), ("4", 3),
            ("1,2", 6), ("1,3", 6), ("1,4", 6), ("2,3", 6), ("3,4", 6), ("2,4", 5),
            ("1,2,3", 9), ("1,3,4", 9), ("1,2,4", 8), ("2,3,4", 8), ("1,2,3,4", 11),
        ];
        for (s, v) in expect {
            let m = h.parse_subset(s).unwrap();
            assert_eq!(
                lv_normalize_base(h.get(m), 7).unwrap(),
                Normalized::Exact(BigRational::from_integer(v.into())),
                "h({s})"
            );
        }
    }

    #[test]
    fn torus_examples() {
        let f7 = ff_make(7, 1).unwrap();
        let h = torus_profile(&IntMatrix::identity(2), &f7, DEFAULT_BRUTE_BUDGET).unwrap();
        assert_eq!(h.get(1), &LogValue::log_int(6));
        assert_eq!(h.get(3), &LogValue::log_int(36));
        let two = IntMatrix::from_i64(&[&[2]]).unwrap();
        let h = torus_profile(&two, &ff_make(5, 1).unwrap(), DEFAULT_BRUTE_BUDGET).unwrap();
        assert_eq!(h.get(1), &LogValue::log_int(2));
        let a = IntMatrix::from_i64(&[&[1, 2], &[3, -1], &[4, 4]]).unwrap();
        assert_eq!(torus_profile(&a, &f7, DEFAULT_BRUTE_BUDGET).unwrap(), profile_lincong(&a, 6).unwrap());
        let f9 = ff_make(3, 2).unwrap();
        assert_eq!(torus_profile(&a, &f9, DEFAULT_BRUTE_BUDGET).unwrap(), profile_lincong(&a, 8).unwrap());
    }

    #[test]
    fn dirichlet() {
        assert_eq!(dirichlet_modulus(&IntMatrix::identity(2)).unwrap(), BigInt::one());
        assert_eq!(suggest_primes(&BigInt::one(), 3).unwrap(), vec![2, 3, 5]);
        let d = IntMatrix::from_i64(&[&[2, 0], &[0, 3]]).unwrap();
        let s = dirichlet_modulus(&d).unwrap();
        assert_eq!(s, BigInt::from(6));
        assert_eq!(suggest_primes(&s, 3).unwrap(), vec![7, 13, 19]);
        let two = IntMatrix::from_i64(&[&[2]]).unwrap();
        let s = dirichlet_modulus(&two).unwrap();
        assert_eq!(suggest_primes(&s, 3).unwrap(), vec![3, 5, 7]);
        assert_eq!(dirichlet_modulus(&IntMatrix::from_i64(&[&[0]]).unwrap()).unwrap(), BigInt::one());
    }

    fn arb_matrix(max_n: usize, max_d: usize) -> impl Strategy<Value = IntMatrix> {
        (1..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
            proptest::collection::vec(proptest::collection::vec(-10i64..=10, d), n)
                .prop_map(|rows| IntMatrix::from_rows(rows.into_iter().map(|r| big(&r)).collect()).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn snf_verifies(a in arb_matrix(5, 5)) {
            let r = snf(&a).unwrap();
            prop_assert_eq!(r.t.mul(&a).unwrap().mul(&r.u).unwrap(), r.s);
        }

        #[test]
        fn image_matches_bruteforce(a in arb_matrix(4, 4), m in 2u64..=30) {
            prop_assume!((m as u128).pow(a.d() as u32) <= 200_000);
            let fast = image_size(&a, m).unwrap();
            let slow = image_size_bruteforce(&a, m, DEFAULT_BRUTE_BUDGET).unwrap();
            prop_assert_eq!(fast, BigInt::from(slow));
            let all = image_sizes_bruteforce(&a, m, DEFAULT_BRUTE_BUDGET).unwrap();
            for (mask, &k) in all.iter().enumerate() {
                let want = a.submatrix(mask as u32).map_or(BigInt::one(), |s| image_size(&s, m).unwrap());
                prop_assert_eq!(BigInt::from(k), want);
            }
        }

        #[test]
        fn lincong_satisfies_ingleton(a in arb_matrix(4, 4), m in 2u64..=30) {
            let h = profile_lincong(&a, m).unwrap();
            prop_assert!(is_polymatroid(&h));
            if a.n() == 4 {
                for perm in [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2], [2, 3, 0, 1], [1, 3, 0, 2], [1, 2, 0, 3]] {
                    let [x, y, z, w] = perm.map(|i| 1u32 << i);
                    prop_assert!(lv_sign(&ingleton(&h, x, y, z, w)) >= 0);
                }
            }
        }

        #[test]
        fn prime_modulus_gives_matroid(a in arb_matrix(4, 4), pi in 0usize..5) {
            let p = [2u64, 3, 5, 7, 11][pi];
            let h = profile_lincong(&a, p).unwrap();
            for m in 0..=h.full() {
                match lv_normalize_base(h.get(m), p).unwrap() {
                    Normalized::Exact(r) => {
                        prop_assert!(r.is_integer());
                        prop_assert!(r <= BigRational::from_integer(m.count_ones().into()));
                    }
                    other => prop_assert!(false, "{other:?}"),
                }
            }
        }

        #[test]
        fn torus_matches_lincong(a in arb_matrix(3, 2), fi in 0usize..4) {
            let (p, e) = [(5u64, 1u32), (7, 1), (2, 3), (3, 2)][fi];
            let f = ff_make(p, e).unwrap();
            prop_assert_eq!(
                torus_profile(&a, &f, DEFAULT_BRUTE_BUDGET).unwrap(),
                profile_lincong(&a, f.q() - 1).unwrap()
            );
        }
    }
}
