//! Exhaustive point censuses of definable sets over finite fields.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::exactlog::{fmt_fraction, LogValue};
use crate::extend::Distribution;
use crate::gf::{ff_make, FieldOps, FieldSpec};
use crate::polymatroid::{subset_label, Mask, Partition, Profile, MAX_GROUND};
use crate::ringlang::{DefinableSet, Program, Strategy};
use crate::with_field_ops;

pub const DEFAULT_MAX_EVALS: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusOptions {
    /// Upper bound on `q^n` formula evaluations per field.
    pub max_evals: u64,
    pub strategy: Strategy,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { max_evals: DEFAULT_MAX_EVALS, strategy: Strategy::Auto }
    }
}

fn space_size(q: u64, n: usize, max_evals: u64) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..n {
        total = match total.checked_mul(q) {
            Some(t) if t <= max_evals => t,
            _ => {
                return Err(Error::Budget(format!(
                    "{q}^{n} evaluations exceed the budget of {max_evals}"
                )))
            }
        };
    }
    if total > max_evals {
        return Err(Error::Budget(format!("1 evaluation exceeds the budget of {max_evals}")));
    }
    Ok(total)
}

/// Run `prog` on the assignments with linear index in `lo..hi`; the first
/// variable is the most significant digit.
fn scan_range<F: FieldOps>(
    prog: &Program,
    ops: &F,
    n: usize,
    lo: u64,
    hi: u64,
    mut hit: impl FnMut(&[u64]),
) {
    let q = ops.q();
    let mut idx = vec![0u64; n];
    let mut rest = lo;
    for j in (0..n).rev() {
        idx[j] = rest % q;
        rest /= q;
    }
    let mut slots = vec![ops.zero(); prog.n_slots()];
    for j in 0..n {
        slots[j] = ops.from_index(idx[j]);
    }
    let mut stack = Vec::new();
    for _ in lo..hi {
        if prog.eval(ops, &mut slots, &mut stack) {
            hit(&idx);
        }
        let mut j = n;
        while j > 0 {
            j -= 1;
            idx[j] += 1;
            if idx[j] < q {
                slots[j] = ops.from_index(idx[j]);
                break;
            }
            idx[j] = 0;
            slots[j] = ops.from_index(0);
        }
    }
}

fn chunks(total: u64) -> Vec<(u64, u64)> {
    let k = total.clamp(1, 1024);
    (0..k).map(|c| (total * c / k, total * (c + 1) / k)).filter(|(a, b)| a < b).collect()
}

fn compile(x: &DefinableSet, spec: &FieldSpec, opts: &CensusOptions) -> Result<(Program, u64)> {
    let total = space_size(spec.q(), x.arity(), opts.max_evals)?;
    Ok((Program::compile(&x.formula, &x.free_vars, spec, opts.strategy)?, total))
}

/// Rational points of a set over one field, in enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Points {
    pub n: usize,
    pub q: u64,
    count: u64,
    /// Row-major index tuples, `n` entries per point.
    data: Vec<u32>,
}

impl Points {
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        let n = self.n.max(1);
        let reps = if self.n == 0 { self.count as usize } else { 0 };
        self.data.chunks(n).chain(std::iter::repeat_n(&[][..], reps))
    }
}

pub fn count_points_with(x: &DefinableSet, spec: &FieldSpec, opts: &CensusOptions) -> Result<u64> {
    let (prog, total) = compile(x, spec, opts)?;
    let n = x.arity();
    Ok(with_field_ops!(spec, ops => {
        chunks(total)
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut c = 0u64;
                scan_range(&prog, ops, n, lo, hi, |_| c += 1);
                c
            })
            .sum()
    }))
}

pub fn count_points(x: &DefinableSet, spec: &FieldSpec) -> Result<u64> {
    count_points_with(x, spec, &CensusOptions::default())
}

pub fn enumerate_points(x: &DefinableSet, spec: &FieldSpec, opts: &CensusOptions) -> Result<Points> {
    if spec.q() > u32::MAX as u64 {
        return Err(Error::domain("point storage needs q < 2^32"));
    }
    let (prog, total) = compile(x, spec, opts)?;
    let n = x.arity();
    let parts: Vec<(u64, Vec<u32>)> = with_field_ops!(spec, ops => {
        chunks(total)
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut c = 0u64;
                let mut v = Vec::new();
                scan_range(&prog, ops, n, lo, hi, |idx| {
                    c += 1;
                    v.extend(idx.iter().map(|&i| i as u32));
                });
                (c, v)
            })
            .collect()
    });
    let count = parts.iter().map(|(c, _)| c).sum();
    let data = parts.into_iter().flat_map(|(_, v)| v).collect();
    Ok(Points { n, q: spec.q(), count, data })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberHistogram {
    /// Comma-joined labels of the projected coordinates.
    pub subset: String,
    pub mask: Mask,
    pub total: u64,
    /// Fiber size to the number of projected points with that many preimages.
    pub buckets: BTreeMap<u64, u64>,
    /// Points of `G^I` with an empty fiber.
    pub outside: BigUint,
}

impl FiberHistogram {
    pub fn to_json(&self) -> Value {
        let buckets: Map<String, Value> =
            self.buckets.iter().map(|(s, c)| (s.to_string(), json!(c))).collect();
        let outside = match self.outside.to_u64() {
            Some(o) => json!(o),
            None => json!(self.outside.to_string()),
        };
        json!({"total": self.total, "buckets": buckets, "outside": outside})
    }

    /// `log T − Σ_s (N_s·s/T) log s`.
    pub fn entropy(&self) -> Result<LogValue> {
        if self.total == 0 {
            return Err(Error::domain("empty definable set"));
        }
        let t = BigInt::from(self.total);
        let mut h = LogValue::log_int(self.total);
        for (&s, &c) in &self.buckets {
            if s > 1 {
                let w = BigRational::new(BigInt::from(c) * BigInt::from(s), t.clone());
                h = h - LogValue::log_int(s).scale(&w);
            }
        }
        Ok(h)
    }

    /// `Σ s·N_s = total` with no empty fibers.
    pub fn is_consistent(&self) -> bool {
        let s: u128 = self.buckets.iter().map(|(s, c)| *s as u128 * *c as u128).sum();
        s == self.total as u128 && !self.buckets.contains_key(&0)
    }
}

fn coords(mask: Mask, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// Fiber sizes keyed by projection; packs into `u128` when it fits.
fn fiber_sizes(points: &Points, mask: Mask) -> Vec<u64> {
    let cs = coords(mask, points.n);
    let bits = 64 - points.q.saturating_sub(1).leading_zeros() as usize;
    if bits * cs.len() <= 128 {
        let mut m: HashMap<u128, u64> = HashMap::new();
        for r in points.rows() {
            let mut key = 0u128;
            for &c in &cs {
                key = key * points.q as u128 + r[c] as u128;
            }
            *m.entry(key).or_insert(0) += 1;
        }
        m.into_values().collect()
    } else {
        let mut m: HashMap<Vec<u32>, u64> = HashMap::new();
        for r in points.rows() {
            *m.entry(cs.iter().map(|&c| r[c]).collect()).or_insert(0) += 1;
        }
        m.into_values().collect()
    }
}

pub fn histogram_of(points: &Points, labels: &[String], mask: Mask) -> FiberHistogram {
    let mut buckets = BTreeMap::new();
    let sizes = fiber_sizes(points, mask);
    for &s in &sizes {
        *buckets.entry(s).or_insert(0) += 1;
    }
    let k = mask.count_ones();
    let outside = BigUint::from(points.q).pow(k) - BigUint::from(sizes.len());
    FiberHistogram { subset: subset_label(labels, mask), mask, total: points.count, buckets, outside }
}

pub fn fiber_histogram_with(
    x: &DefinableSet,
    mask: Mask,
    spec: &FieldSpec,
    opts: &CensusOptions,
) -> Result<FiberHistogram> {
    check_mask(x, mask)?;
    let pts = enumerate_points(x, spec, opts)?;
    Ok(histogram_of(&pts, &x.free_vars, mask))
}

pub fn fiber_histogram(x: &DefinableSet, mask: Mask, spec: &FieldSpec) -> Result<FiberHistogram> {
    fiber_histogram_with(x, mask, spec, &CensusOptions::default())
}

fn check_mask(x: &DefinableSet, mask: Mask) -> Result<()> {
    if x.arity() > MAX_GROUND {
        return Err(Error::domain(format!("more than {MAX_GROUND} free variables")));
    }
    if mask >> x.arity() != 0 {
        return Err(Error::domain("subset is not contained in the free variables"));
    }
    Ok(())
}

pub fn profile_of(points: &Points, labels: &[String]) -> Result<Profile> {
    if points.count == 0 {
        return Err(Error::domain("empty definable set"));
    }
    let entries = (0..1u32 << points.n)
        .into_par_iter()
        .map(|m| {
            if m == 0 {
                Ok(LogValue::zero())
            } else {
                histogram_of(points, labels, m).entropy()
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Profile::new(labels.to_vec(), entries)
}

/// Entropy profile of the uniform distribution on `X(G)`.
pub fn entropy_profile_with(x: &DefinableSet, spec: &FieldSpec, opts: &CensusOptions) -> Result<Profile> {
    check_mask(x, 0)?;
    let pts = enumerate_points(x, spec, opts)?;
    profile_of(&pts, &x.free_vars)
}

pub fn entropy_profile(x: &DefinableSet, spec: &FieldSpec) -> Result<Profile> {
    entropy_profile_with(x, spec, &CensusOptions::default())
}

/// Partition of the free variables by the declared blocks, if any.
pub fn block_partition(x: &DefinableSet) -> Result<Option<Partition>> {
    match &x.blocks {
        None => Ok(None),
        Some(b) => Partition::new(&x.free_vars, b).map(Some),
    }
}

pub fn marginal_distribution_with(
    x: &DefinableSet,
    mask: Mask,
    spec: &FieldSpec,
    opts: &CensusOptions,
) -> Result<Distribution> {
    check_mask(x, mask)?;
    let pts = enumerate_points(x, spec, opts)?;
    if pts.count == 0 {
        return Err(Error::domain("empty definable set"));
    }
    let cs = coords(mask, pts.n);
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for r in pts.rows() {
        *counts.entry(cs.iter().map(|&c| r[c]).collect()).or_insert(0) += 1;
    }
    let labels = cs.iter().map(|&c| x.free_vars[c].clone()).collect();
    Distribution::from_counts(labels, vec![spec.q() as u32; cs.len()], counts)
}

pub fn marginal_distribution(x: &DefinableSet, mask: Mask, spec: &FieldSpec) -> Result<Distribution> {
    marginal_distribution_with(x, mask, spec, &CensusOptions::default())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusRow {
    pub e: u32,
    pub q: u64,
    pub count: u64,
    pub fibers: Vec<FiberHistogram>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusTable {
    pub set: String,
    pub p: u64,
    pub rows: Vec<CensusRow>,
}

impl CensusTable {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut o = json!({"e": r.e, "q": r.q, "count": r.count});
                if !r.fibers.is_empty() {
                    let f: Map<String, Value> =
                        r.fibers.iter().map(|h| (h.subset.clone(), h.to_json())).collect();
                    o["fibers"] = Value::Object(f);
                }
                o
            })
            .collect();
        json!({"set": self.set, "p": self.p, "rows": rows})
    }

    pub fn from_json(v: &Value) -> Result<CensusTable> {
        let set = v.get("set").and_then(Value::as_str).unwrap_or("").to_string();
        let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| Error::format("missing \"p\""))?;
        let mut rows = Vec::new();
        for r in v.get("rows").and_then(Value::as_array).ok_or_else(|| Error::format("missing \"rows\""))? {
            let get = |k: &str| r.get(k).and_then(Value::as_u64).ok_or_else(|| Error::format(format!("row without \"{k}\"")));
            let e = get("e")? as u32;
            rows.push(CensusRow { e, q: get("q")?, count: get("count")?, fibers: Vec::new() });
        }
        Ok(CensusTable { set, p, rows })
    }

    pub fn points(&self) -> Vec<(u32, u64, u64)> {
        self.rows.iter().map(|r| (r.e, r.q, r.count)).collect()
    }
}

/// One row per extension degree in `degrees`.
pub fn census_rows(
    x: &DefinableSet,
    p: u64,
    degrees: &[u32],
    subsets: &[Mask],
    opts: &CensusOptions,
) -> Result<CensusTable> {
    for &m in subsets {
        check_mask(x, m)?;
    }
    let mut degrees = degrees.to_vec();
    degrees.sort_unstable();
    degrees.dedup();
    let mut specs = Vec::new();
    for &e in &degrees {
        let spec = ff_make(p, e)?;
        space_size(spec.q(), x.arity(), opts.max_evals)?;
        specs.push(spec);
    }
    let mut rows = Vec::new();
    for (e, spec) in degrees.into_iter().zip(specs) {
        let row = if subsets.is_empty() {
            CensusRow { e, q: spec.q(), count: count_points_with(x, &spec, opts)?, fibers: Vec::new() }
        } else {
            let pts = enumerate_points(x, &spec, opts)?;
            let fibers = subsets.iter().map(|&m| histogram_of(&pts, &x.free_vars, m)).collect();
            CensusRow { e, q: spec.q(), count: pts.count, fibers }
        };
        rows.push(row);
    }
    Ok(CensusTable { set: x.name.clone(), p, rows })
}

pub fn tower_census(
    x: &DefinableSet,
    p: u64,
    e_max: u32,
    subsets: &[Mask],
    opts: &CensusOptions,
) -> Result<CensusTable> {
    if e_max == 0 {
        return Err(Error::domain("e_max must be at least 1"));
    }
    census_rows(x, p, &(1..=e_max).collect::<Vec<_>>(), subsets, opts)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsymptoticEstimate {
    pub d: u32,
    pub mu: BigRational,
    pub residue: u32,
    pub modulus: u32,
}

impl AsymptoticEstimate {
    pub fn to_json(&self) -> Value {
        json!({"d": self.d, "mu": fmt_fraction(&self.mu), "residue": self.residue, "modulus": self.modulus})
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateOptions {
    pub max_den: u64,
    pub c: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { max_den: 64, c: 8 }
    }
}

/// Continued-fraction convergents of a positive rational.
fn convergents(x: &BigRational) -> Vec<BigRational> {
    let (mut num, mut den) = (x.numer().clone(), x.denom().clone());
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut out = Vec::new();
    while !den.is_zero() {
        let a = &num / &den;
        let r = &num - &a * &den;
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        out.push(BigRational::new(h2.clone(), k2.clone()));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        (num, den) = (den, r);
    }
    out
}

/// `(c/q^d − mu)²·q ≤ C²·mu²`.
fn within(x: &BigRational, mu: &BigRational, q: u64, c: u64) -> bool {
    let diff = x - mu;
    let lhs = &diff * &diff * BigRational::from_integer(q.into());
    let rhs = mu * mu * BigRational::from_integer((c * c).into());
    lhs <= rhs
}

/// Dimension and measure from rows `(q, count)` of one residue class.
pub fn estimate_dim_measure(rows: &[(u64, u64)], opts: &EstimateOptions) -> Result<AsymptoticEstimate> {
    if rows.len() < 2 {
        return Err(Error::Estimation("at least two rows are needed".into()));
    }
    if let Some((q, _)) = rows.iter().find(|(_, c)| *c == 0) {
        return Err(Error::Estimation(format!("zero count at q = {q}")));
    }
    let mut rs = rows.to_vec();
    rs.sort_unstable();
    let (q1, c1) = rs[rs.len() - 2];
    let (q2, c2) = rs[rs.len() - 1];
    if q1 == q2 {
        return Err(Error::Estimation("the two largest rows share the same field".into()));
    }
    let d = ((c2 as f64 / c1 as f64).ln() / (q2 as f64 / q1 as f64).ln()).round();
    if !(0.0..=64.0).contains(&d) {
        return Err(Error::Estimation(format!("implausible dimension estimate {d}")));
    }
    let d = d as u32;
    let scaled = |q: u64, c: u64| BigRational::new(c.into(), BigInt::from(q).pow(d));
    let x = scaled(q2, c2);
    let conv: Vec<BigRational> = convergents(&x)
        .into_iter()
        .filter(|r| r.denom() <= &BigInt::from(opts.max_den))
        .collect();
    let tight = |m: &BigRational| {
        let diff = &x - m;
        &diff * &diff * BigRational::from_integer(q2.into()) <= &x * &x
    };
    let mu = conv.iter().find(|m| tight(m)).or(conv.last()).cloned().unwrap_or_else(BigRational::zero);
    if !mu.is_positive() {
        return Err(Error::Estimation(format!(
            "no positive measure with denominator <= {} near {} (d = {d})",
            opts.max_den,
            fmt_fraction(&x)
        )));
    }
    let bad: Vec<String> = rs
        .iter()
        .filter(|(q, c)| !within(&scaled(*q, *c), &mu, *q, opts.c))
        .map(|(q, c)| format!("q = {q}: {c}/q^{d} = {:.6}", scaled(*q, *c).to_f64().unwrap_or(f64::NAN)))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Estimation(format!(
            "rows inconsistent with d = {d}, mu = {}: {}",
            fmt_fraction(&mu),
            bad.join("; ")
        )));
    }
    Ok(AsymptoticEstimate { d, mu, residue: 0, modulus: 1 })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodReport {
    pub m: u32,
    /// One estimate per residue class `e mod m`, by residue.
    pub classes: Vec<AsymptoticEstimate>,
}

impl PeriodReport {
    pub fn to_json(&self) -> Value {
        json!({"m": self.m, "classes": self.classes.iter().map(AsymptoticEstimate::to_json).collect::<Vec<_>>()})
    }
}

/// Smallest `m ≤ m_max` whose residue classes of `e` each admit a consistent estimate.
pub fn detect_period(table: &CensusTable, m_max: u32, opts: &EstimateOptions) -> Result<PeriodReport> {
    let mut tried = Vec::new();
    for m in 1..=m_max {
        let mut classes = Vec::new();
        let mut failure = None;
        for r in 0..m {
            let rows: Vec<(u64, u64)> =
                table.rows.iter().filter(|row| row.e % m == r).map(|row| (row.q, row.count)).collect();
            if rows.len() < 2 {
                failure = Some(format!("m = {m}: class {r} has {} row(s)", rows.len()));
                break;
            }
            match estimate_dim_measure(&rows, opts) {
                Ok(mut est) => {
                    est.residue = r;
                    est.modulus = m;
                    classes.push(est);
                }
                Err(e) => {
                    failure = Some(format!("m = {m}, class {r}: {e}"));
                    break;
                }
            }
        }
        match failure {
            None => return Ok(PeriodReport { m, classes }),
            Some(f) => tried.push(f),
        }
    }
    Err(Error::Estimation(format!("period undetected: {}", tried.join(" | "))))
}
