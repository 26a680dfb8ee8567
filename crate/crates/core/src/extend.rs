//! Explicit finite distributions with rational probabilities, the
//! conditional product, and partial extensions of entropy profiles.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::exactlog::{fmt_fraction, log_of_rat, lv_cmp, parse_fraction, LogValue};
use crate::polymatroid::{
    check_ground, eval_functional, first_violation, ground_from_json, parse_functional,
    parse_subset, subset_label, LinFunctional, Mask, Profile,
};

/// Outcomes are tuples of symbol indices; coordinate `i` takes values in
/// `0..alphabets[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    ground_set: Vec<String>,
    alphabets: Vec<u32>,
    probs: BTreeMap<Vec<u32>, BigRational>,
}

impl Distribution {
    pub fn new(
        ground_set: Vec<String>,
        alphabets: Vec<u32>,
        probs: BTreeMap<Vec<u32>, BigRational>,
    ) -> Result<Distribution> {
        check_ground(&ground_set)?;
        if alphabets.len() != ground_set.len() {
            return Err(Error::format("one alphabet size per coordinate is required"));
        }
        let mut total = BigRational::zero();
        for (v, p) in &probs {
            if v.len() != ground_set.len() {
                return Err(Error::format(format!("outcome {v:?} has the wrong length")));
            }
            if let Some(i) = (0..v.len()).find(|&i| v[i] >= alphabets[i]) {
                return Err(Error::format(format!(
                    "outcome {v:?}: symbol {} outside alphabet of size {}",
                    v[i], alphabets[i]
                )));
            }
            if !p.is_positive() {
                return Err(Error::domain(format!("outcome {v:?} has nonpositive probability")));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::domain(format!(
                "probabilities sum to {}, not 1",
                fmt_fraction(&total)
            )));
        }
        Ok(Distribution { ground_set, alphabets, probs })
    }

    /// Uniform weighting of outcome multiplicities.
    pub fn from_counts(
        ground_set: Vec<String>,
        alphabets: Vec<u32>,
        counts: BTreeMap<Vec<u32>, u64>,
    ) -> Result<Distribution> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::domain("empty support"));
        }
        let t = BigInt::from(total);
        let probs = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(v, c)| (v, BigRational::new(BigInt::from(c), t.clone())))
            .collect();
        Distribution::new(ground_set, alphabets, probs)
    }

    pub fn point_mass(ground_set: Vec<String>, alphabets: Vec<u32>, at: Vec<u32>) -> Result<Distribution> {
        Distribution::new(ground_set, alphabets, BTreeMap::from([(at, BigRational::one())]))
    }

    pub fn ground_set(&self) -> &[String] {
        &self.ground_set
    }

    pub fn alphabets(&self) -> &[u32] {
        &self.alphabets
    }

    pub fn probs(&self) -> &BTreeMap<Vec<u32>, BigRational> {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn n(&self) -> usize {
        self.ground_set.len()
    }

    /// Law of the coordinates in `mask`, in ground-set order.
    pub fn marginal(&self, mask: Mask) -> BTreeMap<Vec<u32>, BigRational> {
        let idx: Vec<usize> = (0..self.n()).filter(|i| mask & (1 << i) != 0).collect();
        let mut out: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (v, p) in &self.probs {
            let key: Vec<u32> = idx.iter().map(|&i| v[i]).collect();
            *out.entry(key).or_insert_with(BigRational::zero) += p;
        }
        out
    }

    pub fn restrict(&self, mask: Mask) -> Result<Distribution> {
        let ground = (0..self.n())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.ground_set[i].clone())
            .collect();
        let alph = (0..self.n()).filter(|i| mask & (1 << i) != 0).map(|i| self.alphabets[i]).collect();
        Distribution::new(ground, alph, self.marginal(mask))
    }

    pub fn to_json(&self) -> Value {
        let outcomes: Vec<Value> = self
            .probs
            .iter()
            .map(|(v, p)| json!({"value": v, "p": fmt_fraction(p)}))
            .collect();
        json!({"ground_set": self.ground_set, "alphabets": self.alphabets, "outcomes": outcomes})
    }

    pub fn from_json(v: &Value) -> Result<Distribution> {
        let ground = ground_from_json(v)?;
        let alphabets = v
            .get("alphabets")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::format("missing \"alphabets\" array"))?
            .iter()
            .map(|a| {
                a.as_u64()
                    .filter(|&k| k >= 1 && k <= u32::MAX as u64)
                    .map(|k| k as u32)
                    .ok_or_else(|| Error::format("alphabet sizes must be positive integers"))
            })
            .collect::<Result<Vec<u32>>>()?;
        let mut probs = BTreeMap::new();
        for o in v
            .get("outcomes")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::format("missing \"outcomes\" array"))?
        {
            let value = o
                .get("value")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::format("outcome without \"value\""))?
                .iter()
                .map(|x| {
                    x.as_u64()
                        .filter(|&k| k <= u32::MAX as u64)
                        .map(|k| k as u32)
                        .ok_or_else(|| Error::format("outcome symbols must be integers"))
                })
                .collect::<Result<Vec<u32>>>()?;
            let p = match o.get("p") {
                Some(Value::String(s)) => parse_fraction(s)?,
                Some(Value::Number(n)) if n.is_u64() => BigRational::from_integer(n.as_u64().unwrap().into()),
                _ => return Err(Error::format("outcome without probability \"p\"")),
            };
            if probs.insert(value.clone(), p).is_some() {
                return Err(Error::format(format!("outcome {value:?} listed twice")));
            }
        }
        Distribution::new(ground, alphabets, probs)
    }
}

/// `−Σ p log p` over a list of masses.
fn entropy_of<'a>(masses: impl Iterator<Item = &'a BigRational>) -> Result<LogValue> {
    let mut mult: BTreeMap<&BigRational, i64> = BTreeMap::new();
    for p in masses {
        *mult.entry(p).or_insert(0) += 1;
    }
    let mut h = LogValue::zero();
    for (p, k) in mult {
        if p.is_one() {
            continue;
        }
        let w = -(p * BigRational::from_integer(k.into()));
        h = h + log_of_rat(p)?.scale(&w);
    }
    Ok(h)
}

pub fn dist_entropy_profile(p: &Distribution) -> Result<Profile> {
    let n = p.n();
    let entries = (0..1u32 << n)
        .into_par_iter()
        .map(|m| entropy_of(p.marginal(m).values()))
        .collect::<Result<Vec<LogValue>>>()?;
    Profile::new(p.ground_set.clone(), entries)
}

/// A label not already in `taken`, formed by appending apostrophes.
fn fresh_label(base: &str, taken: &[String]) -> String {
    let mut l = format!("{base}'");
    while taken.contains(&l) {
        l.push('\'');
    }
    l
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyResult {
    /// Ground set `N` followed by the primed copy `N′`.
    pub dist: Distribution,
    /// Pairs `(i, τ⁻¹(i))`: a label of `N` and its copy.
    pub tau: Vec<(String, String)>,
    /// The conditioning set `L` as a mask over `N`.
    pub cond: Mask,
}

impl CopyResult {
    pub fn copy_mask(&self) -> Mask {
        let n = self.tau.len();
        ((1u32 << n) - 1) << n
    }

    /// Constraint set of the Copy lemma for the profile of the original law.
    pub fn constraints(&self, h: &Profile) -> Result<PartialProfile> {
        copy_partial(h, self.cond)
    }
}

/// Conditional product of `p` with itself over the coordinates in `l`.
pub fn copy_product(p: &Distribution, l: Mask) -> Result<CopyResult> {
    let n = p.n();
    if l >> n != 0 {
        return Err(Error::domain("conditioning set is not a subset of the ground set"));
    }
    if 2 * n > crate::polymatroid::MAX_GROUND {
        return Err(Error::domain("ground set too large to copy"));
    }
    let mut ground = p.ground_set.clone();
    let mut tau = Vec::new();
    for g in &p.ground_set {
        let c = fresh_label(g, &ground);
        ground.push(c.clone());
        tau.push((g.clone(), c));
    }
    let mut alph = p.alphabets.clone();
    alph.extend_from_slice(&p.alphabets);

    let idx: Vec<usize> = (0..n).filter(|i| l & (1 << i) != 0).collect();
    let mut classes: BTreeMap<Vec<u32>, Vec<(&Vec<u32>, &BigRational)>> = BTreeMap::new();
    for (v, q) in &p.probs {
        classes.entry(idx.iter().map(|&i| v[i]).collect()).or_default().push((v, q));
    }
    let parts: Vec<Vec<(Vec<u32>, BigRational)>> = classes
        .par_iter()
        .map(|(_, class)| {
            let pl: BigRational = class.iter().map(|(_, q)| (*q).clone()).sum();
            let mut out = Vec::with_capacity(class.len() * class.len());
            for (x, px) in class {
                for (y, py) in class {
                    let mut v = (*x).clone();
                    v.extend_from_slice(y);
                    out.push((v, (*px) * (*py) / &pl));
                }
            }
            out
        })
        .collect();
    let probs = parts.into_iter().flatten().collect();
    Ok(CopyResult { dist: Distribution::new(ground, alph, probs)?, tau, cond: l })
}

/// Subset-indexed partial assignment plus linear relations that a full
/// profile must satisfy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialProfile {
    ground_set: Vec<String>,
    entries: BTreeMap<Mask, LogValue>,
    constraints: Vec<LinFunctional>,
}

impl PartialProfile {
    pub fn new(ground_set: Vec<String>) -> Result<PartialProfile> {
        check_ground(&ground_set)?;
        Ok(PartialProfile {
            ground_set,
            entries: BTreeMap::from([(0, LogValue::zero())]),
            constraints: Vec::new(),
        })
    }

    pub fn ground_set(&self) -> &[String] {
        &self.ground_set
    }

    pub fn entries(&self) -> &BTreeMap<Mask, LogValue> {
        &self.entries
    }

    pub fn get(&self, m: Mask) -> Option<&LogValue> {
        self.entries.get(&m)
    }

    pub fn constraints(&self) -> &[LinFunctional] {
        &self.constraints
    }

    /// Pin `ĥ(m)`; a conflicting earlier value is a domain error.
    pub fn set(&mut self, m: Mask, v: LogValue) -> Result<()> {
        if let Some(old) = self.entries.get(&m) {
            if *old != v {
                return Err(Error::domain(format!(
                    "conflicting values for {{{}}}: {old} and {v}",
                    subset_label(&self.ground_set, m)
                )));
            }
        }
        self.entries.insert(m, v);
        Ok(())
    }

    pub fn add_constraint(&mut self, f: LinFunctional) {
        self.constraints.push(f);
    }

    pub fn to_json(&self) -> Value {
        let mut entries = Map::new();
        for m in 0..1u32 << self.ground_set.len() {
            entries.insert(
                subset_label(&self.ground_set, m),
                self.entries.get(&m).map_or(Value::Null, LogValue::to_json),
            );
        }
        let cons: Vec<String> = self.constraints.iter().map(LinFunctional::to_dsl).collect();
        json!({"ground_set": self.ground_set, "entries": entries, "constraints": cons})
    }

    pub fn from_json(v: &Value) -> Result<PartialProfile> {
        let mut pp = PartialProfile::new(ground_from_json(v)?)?;
        let entries = v
            .get("entries")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::format("missing \"entries\" object"))?;
        for (k, val) in entries {
            if val.is_null() {
                continue;
            }
            let m = parse_subset(&pp.ground_set, k)?;
            pp.set(m, LogValue::from_json(val)?)?;
        }
        if let Some(cs) = v.get("constraints") {
            for c in cs.as_array().ok_or_else(|| Error::format("\"constraints\" must be an array"))? {
                let s = c.as_str().ok_or_else(|| Error::format("constraints must be strings"))?;
                pp.add_constraint(parse_functional(s, &pp.ground_set)?);
            }
        }
        Ok(pp)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtensionFailure {
    Entry { subset: String, expected: LogValue, found: LogValue },
    Constraint { index: usize, functional: String, value: LogValue },
    NotPolymatroid(String),
}

impl std::fmt::Display for ExtensionFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtensionFailure::Entry { subset, expected, found } => {
                write!(f, "entry {{{subset}}}: expected {expected}, found {found}")
            }
            ExtensionFailure::Constraint { index, functional, value } => {
                write!(f, "constraint #{index} ({functional} = 0) evaluates to {value}")
            }
            ExtensionFailure::NotPolymatroid(s) => write!(f, "not a polymatroid: {s}"),
        }
    }
}

/// `Ok(None)` when `candidate` extends `pp`; otherwise the first failure.
pub fn check_extension(pp: &PartialProfile, candidate: &Profile) -> Result<Option<ExtensionFailure>> {
    let mut sorted_a = pp.ground_set.clone();
    let mut sorted_b = candidate.ground_set().to_vec();
    sorted_a.sort();
    sorted_b.sort();
    if sorted_a != sorted_b {
        return Err(Error::domain("candidate ground set differs from the partial profile's"));
    }
    let cand = if candidate.ground_set() == pp.ground_set.as_slice() {
        candidate.clone()
    } else {
        candidate.reordered(&pp.ground_set)?
    };
    for (m, v) in &pp.entries {
        if cand.get(*m) != v {
            return Ok(Some(ExtensionFailure::Entry {
                subset: subset_label(&pp.ground_set, *m),
                expected: v.clone(),
                found: cand.get(*m).clone(),
            }));
        }
    }
    for (i, f) in pp.constraints.iter().enumerate() {
        let v = eval_functional(f, &cand)?;
        if !v.is_zero() {
            return Ok(Some(ExtensionFailure::Constraint { index: i, functional: f.to_dsl(), value: v }));
        }
    }
    if let Some(v) = first_violation(&cand) {
        return Ok(Some(ExtensionFailure::NotPolymatroid(v.to_string())));
    }
    Ok(None)
}

/// Copy-lemma constraints on `N ∪ N′`: `ĥ|_N = h`, `ĥ|_{N′} = τ*h`,
/// `Δ(N:N′|L) = 0`.
pub fn copy_partial(h: &Profile, l: Mask) -> Result<PartialProfile> {
    let n = h.n();
    if l >> n != 0 {
        return Err(Error::domain("conditioning set is not a subset of the ground set"));
    }
    let mut ground = h.ground_set().to_vec();
    for g in h.ground_set() {
        let c = fresh_label(g, &ground);
        ground.push(c);
    }
    let mut pp = PartialProfile::new(ground)?;
    for m in 0..=h.full() {
        pp.set(m, h.get(m).clone())?;
        pp.set(m << n, h.get(m).clone())?;
    }
    pp.add_constraint(LinFunctional::ci(&pp.ground_set.clone(), h.full(), h.full() << n, l));
    Ok(pp)
}

fn with_z(h: &Profile) -> (Vec<String>, Mask) {
    let mut ground = h.ground_set().to_vec();
    let mut z = "z".to_string();
    while ground.contains(&z) {
        z.push('\'');
    }
    ground.push(z);
    (ground, 1 << h.n())
}

fn require_polymatroid(h: &Profile) -> Result<()> {
    match first_violation(h) {
        Some(v) => Err(Error::domain(format!("input is not a polymatroid: {v}"))),
        None => Ok(()),
    }
}

fn check_l(h: &Profile, l: Mask) -> Result<()> {
    if l & !h.full() != 0 {
        return Err(Error::domain("L is not a subset of the ground set"));
    }
    if h.n() + 1 > crate::polymatroid::MAX_GROUND {
        return Err(Error::domain("no room for the extension variable"));
    }
    Ok(())
}

fn lv_min(a: LogValue, b: LogValue) -> LogValue {
    if lv_cmp(&a, &b).is_le() {
        a
    } else {
        b
    }
}

fn lv_max(a: LogValue, b: LogValue) -> LogValue {
    if lv_cmp(&a, &b).is_ge() {
        a
    } else {
        b
    }
}

/// Slepian–Wolf extension by `z` with `ĥ(z) ≤ α` and `Δ(z|I) = 0`, `I = N∖L`.
///
/// Pinned: every `S ⊆ N`, every `K ∪ z` with `K ⊆ L`, and every `S ∪ z`
/// with `S ⊇ I`. The last group follows from `Δ(z|I) = 0`: for `S ⊇ I`,
/// `h(S) ≤ ĥ(S∪z) ≤ h(S) + ĥ(I∪z) − h(I) = h(S)`.
pub fn slepian_wolf_partial(h: &Profile, l: Mask, alpha: &LogValue) -> Result<PartialProfile> {
    check_l(h, l)?;
    if alpha.sign() < 0 {
        return Err(Error::domain("alpha must be nonnegative"));
    }
    require_polymatroid(h)?;
    let i = h.full() & !l;
    let (ground, z) = with_z(h);
    let mut pp = PartialProfile::new(ground)?;
    for s in 0..=h.full() {
        pp.set(s, h.get(s).clone())?;
    }
    let mut k = l;
    loop {
        pp.set(k | z, lv_min(alpha + h.get(k), h.get(i | k).clone()))?;
        if k == 0 {
            break;
        }
        k = (k - 1) & l;
    }
    let mut rest = l;
    loop {
        pp.set(i | rest | z, h.get(i | rest).clone())?;
        if rest == 0 {
            break;
        }
        rest = (rest - 1) & l;
    }
    let g = pp.ground_set.clone();
    pp.add_constraint(LinFunctional::cond(&g, z, i));
    Ok(pp)
}

/// Ahlswede–Körner extension: `Δ(z|L) = 0` and `Δ(K|z) = Δ(K|I)(h)` for
/// every `K ⊆ L`. Only the `S ⊆ N` entries are pinned.
pub fn ak_partial(h: &Profile, l: Mask) -> Result<PartialProfile> {
    check_l(h, l)?;
    require_polymatroid(h)?;
    let i = h.full() & !l;
    let (ground, z) = with_z(h);
    let mut pp = PartialProfile::new(ground)?;
    for s in 0..=h.full() {
        pp.set(s, h.get(s).clone())?;
    }
    let g = pp.ground_set.clone();
    pp.add_constraint(LinFunctional::cond(&g, z, l));
    let mut ks: Vec<Mask> = (0..=l).filter(|k| k & !l == 0).collect();
    ks.sort_by_key(|k| (k.count_ones(), k.reverse_bits()));
    for k in ks {
        let target = h.get(k | i) - h.get(i);
        let f = LinFunctional::cond(&g, k, z).sub(&LinFunctional::constant_term(&g, target));
        pp.add_constraint(f);
    }
    Ok(pp)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AkWitness {
    pub method: &'static str,
    pub profile: Option<Profile>,
    /// One line per rejected candidate.
    pub diagnostics: Vec<String>,
}

/// `ĥ(z)` forced by the `K = L` relation together with `Δ(z|L) = 0`.
fn ak_hz(h: &Profile, l: Mask) -> LogValue {
    let i = h.full() & !l;
    &(h.get(l) + h.get(i)) - h.get(h.full())
}

fn extend_by_z(h: &Profile, ground: Vec<String>, f: impl Fn(Mask) -> LogValue) -> Result<Profile> {
    let n = h.n();
    let z = 1u32 << n;
    Profile::from_fn(ground, |m| if m & z == 0 { h.get(m).clone() } else { f(m & !z) })
}

/// `ĥ(S∪z) = max{ĥ(z) + h((S∩L)∪I) − h(I), h(S)}`.
pub fn ak_max_witness(h: &Profile, l: Mask) -> Result<Profile> {
    check_l(h, l)?;
    let i = h.full() & !l;
    let hz = ak_hz(h, l);
    let (ground, _) = with_z(h);
    extend_by_z(h, ground, |s| {
        lv_max(&(&hz + h.get((s & l) | i)) - h.get(i), h.get(s).clone())
    })
}

/// `ĥ(S∪z) = min_{K⊆L} { ĥ(K∪z) + h(S∪K) − h(K) }` with the `K ∪ z`
/// values taken from the AK relations.
pub fn ak_min_witness(h: &Profile, l: Mask) -> Result<Profile> {
    check_l(h, l)?;
    let i = h.full() & !l;
    let hz = ak_hz(h, l);
    let (ground, _) = with_z(h);
    extend_by_z(h, ground, |s| {
        let mut best: Option<LogValue> = None;
        let mut k = l;
        loop {
            let fk = &(&hz + h.get(k | i)) - h.get(i);
            let cand = &(&fk + h.get(s | k)) - h.get(k);
            best = Some(match best {
                None => cand,
                Some(b) => lv_min(b, cand),
            });
            if k == 0 {
                break;
            }
            k = (k - 1) & l;
        }
        best.unwrap()
    })
}

/// From a distribution: `z` is a conditional copy of `I` over `L`, with
/// every `z`-set lowered by `Δ(I|L)(h)` so that `Δ(z|L) = 0`.
pub fn ak_copy_witness(p: &Distribution, l: Mask) -> Result<Profile> {
    let h = dist_entropy_profile(p)?;
    check_l(&h, l)?;
    let n = h.n();
    let i = h.full() & !l;
    let c = dist_entropy_profile(&copy_product(p, l)?.dist)?;
    let shift = h.get(h.full()) - h.get(l);
    let (ground, _) = with_z(&h);
    extend_by_z(&h, ground, |s| c.get(s | (i << n)) - &shift)
}

/// First candidate completion that passes [`check_extension`] against
/// [`ak_partial`].
pub fn ak_witness(h: &Profile, l: Mask, dist: Option<&Distribution>) -> Result<AkWitness> {
    let pp = ak_partial(h, l)?;
    let mut diagnostics = Vec::new();
    let mut cands: Vec<(&'static str, Result<Profile>)> = Vec::new();
    if let Some(p) = dist {
        if p.ground_set() != h.ground_set() {
            return Err(Error::domain("distribution and profile ground sets differ"));
        }
        cands.push(("copy", ak_copy_witness(p, l)));
    }
    cands.push(("max", ak_max_witness(h, l)));
    cands.push(("min", ak_min_witness(h, l)));
    for (name, c) in cands {
        let c = c?;
        match check_extension(&pp, &c)? {
            None => return Ok(AkWitness { method: name, profile: Some(c), diagnostics }),
            Some(f) => diagnostics.push(format!("{name}: {f}")),
        }
    }
    Ok(AkWitness { method: "none", profile: None, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    fn bits() -> Distribution {
        let probs = (0..4u32).map(|k| (vec![k & 1, k >> 1], r(1, 4))).collect();
        Distribution::new(labels(2), vec![2, 2], probs).unwrap()
    }

    /// Support of `x*y = 0` over GF(q) with the integer enumeration of GF(p).
    fn hyperbola(q: u32) -> Distribution {
        let mut counts = BTreeMap::new();
        for x in 0..q {
            for y in 0..q {
                if (x as u64 * y as u64) % q as u64 == 0 {
                    counts.insert(vec![x, y], 1);
                }
            }
        }
        Distribution::from_counts(vec!["x".into(), "y".into()], vec![q, q], counts).unwrap()
    }

    #[test]
    fn validation() {
        let bad = BTreeMap::from([(vec![0], r(1, 2))]);
        assert!(matches!(Distribution::new(labels(1), vec![2], bad), Err(Error::Domain(_))));
        let out = BTreeMap::from([(vec![2], r(1, 1))]);
        assert!(matches!(Distribution::new(labels(1), vec![2], out), Err(Error::Format(_))));
        let j = bits().to_json();
        assert_eq!(Distribution::from_json(&j).unwrap(), bits());
    }

    #[test]
    fn entropy_examples() {
        let pm = Distribution::point_mass(labels(2), vec![3, 3], vec![1, 2]).unwrap();
        assert_eq!(dist_entropy_profile(&pm).unwrap(), Profile::zero(labels(2)).unwrap());
        let h = dist_entropy_profile(&bits()).unwrap();
        assert_eq!(h.get(1), &LogValue::log_int(2));
        assert_eq!(h.get(2), &LogValue::log_int(2));
        assert_eq!(h.get(3), &LogValue::log_int(4));
        // y-marginal of xy = 0 over GF(5): 5 at y = 0 and 1 elsewhere out of 9
        let hy = dist_entropy_profile(&hyperbola(5)).unwrap();
        let expect = LogValue::from_terms([(3u32.into(), r(2, 1)), (5u32.into(), r(-5, 9))]);
        assert_eq!(hy.get(2), &expect);
    }

    #[test]
    fn copy_extremes() {
        let p = hyperbola(3);
        let h = dist_entropy_profile(&p).unwrap();
        let all = copy_product(&p, 3).unwrap();
        let ch = dist_entropy_profile(&all.dist).unwrap();
        assert_eq!(ch.get(15), h.get(3));
        assert_eq!(all.dist.support_size(), p.support_size());
        let none = copy_product(&p, 0).unwrap();
        let ch = dist_entropy_profile(&none.dist).unwrap();
        assert_eq!(ch.get(15), &h.get(3).scale(&r(2, 1)));
        assert_eq!(none.tau[0], ("x".to_string(), "x'".to_string()));
    }

    #[test]
    fn copy_lemma_on_hyperbola() {
        let p = hyperbola(3);
        let h = dist_entropy_profile(&p).unwrap();
        let c = copy_product(&p, 2).unwrap();
        let ch = dist_entropy_profile(&c.dist).unwrap();
        let f = LinFunctional::ci(ch.ground_set(), 3, 12, 2);
        assert!(eval_functional(&f, &ch).unwrap().is_zero());
        assert_eq!(check_extension(&c.constraints(&h).unwrap(), &ch).unwrap(), None);
    }

    #[test]
    fn slepian_wolf_examples() {
        let h = dist_entropy_profile(&hyperbola(5)).unwrap();
        let (l, i, z) = (2, 1, 4);
        let zero = slepian_wolf_partial(&h, l, &LogValue::zero()).unwrap();
        for k in [0, l] {
            assert_eq!(zero.get(k | z).unwrap(), h.get(k));
        }
        let trivial = Profile::from_fn(zero.ground_set().to_vec(), |m| h.get(m & !z).clone()).unwrap();
        assert_eq!(check_extension(&zero, &trivial).unwrap(), None);
        let big = slepian_wolf_partial(&h, l, &LogValue::log_int(1000)).unwrap();
        assert_eq!(big.get(z).unwrap(), h.get(i));
        assert_eq!(big.get(l | z).unwrap(), h.get(3));
        let a = h.get(3) - h.get(l);
        let sw = slepian_wolf_partial(&h, l, &a).unwrap();
        assert_eq!(sw.get(z).unwrap(), &a);
        assert_eq!(sw.get(l | z).unwrap(), h.get(3));
        assert_eq!(sw.get(i | z).unwrap(), h.get(i));
        assert!(slepian_wolf_partial(&h, l, &LogValue::log_int(2).scale(&r(-1, 1))).is_err());
        let mut broken = trivial.clone();
        let bump = &LogValue::log_int(2) + broken.get(z);
        let mut e = broken.entries().to_vec();
        e[z as usize] = bump;
        broken = Profile::new(broken.ground_set().to_vec(), e).unwrap();
        match check_extension(&zero, &broken).unwrap() {
            Some(ExtensionFailure::Entry { subset, .. }) => assert_eq!(subset, "z"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ak_constraints() {
        let h = dist_entropy_profile(&hyperbola(5)).unwrap();
        for l in 0..4u32 {
            let pp = ak_partial(&h, l).unwrap();
            assert_eq!(pp.constraints().len(), (1 << l.count_ones()) + 1);
            assert!(pp.constraints()[1].is_zero());
            let w = ak_witness(&h, l, Some(&hyperbola(5))).unwrap();
            assert!(w.profile.is_some(), "{:?}", w.diagnostics);
        }
    }

    #[test]
    fn partial_json_round_trip() {
        let h = dist_entropy_profile(&hyperbola(3)).unwrap();
        let pp = ak_partial(&h, 2).unwrap();
        let j = pp.to_json();
        assert!(j["entries"]["z"].is_null());
        let back = PartialProfile::from_json(&j).unwrap();
        assert_eq!(back.entries(), pp.entries());
        assert_eq!(back.constraints().len(), pp.constraints().len());
        for (a, b) in back.constraints().iter().zip(pp.constraints()) {
            assert_eq!(a, b);
        }
    }

    fn arb_dist() -> impl Strategy<Value = Distribution> {
        (1usize..=3, 2u32..=3).prop_flat_map(|(n, k)| {
            let cells = (k as usize).pow(n as u32);
            proptest::collection::vec(0u64..4, cells).prop_filter_map("empty", move |w| {
                let counts: BTreeMap<Vec<u32>, u64> = w
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c > 0)
                    .map(|(idx, c)| {
                        let v = (0..n).map(|j| (idx / (k as usize).pow(j as u32)) as u32 % k).collect();
                        (v, *c)
                    })
                    .collect();
                Distribution::from_counts(labels(n), vec![k; n], counts).ok()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn copy_passes_copy_lemma(p in arb_dist(), lbits in 0u32..8) {
            let l = lbits & ((1 << p.n()) - 1);
            let h = dist_entropy_profile(&p).unwrap();
            let c = copy_product(&p, l).unwrap();
            let total: BigRational = c.dist.probs().values().cloned().sum();
            prop_assert!(total.is_one());
            let ch = dist_entropy_profile(&c.dist).unwrap();
            prop_assert_eq!(check_extension(&c.constraints(&h).unwrap(), &ch).unwrap(), None);
        }

        #[test]
        fn sw_entries_monotone(p in arb_dist(), lbits in 0u32..8, a in 0u64..6) {
            let h = dist_entropy_profile(&p).unwrap();
            let l = lbits & h.full();
            let alpha = if a == 0 { LogValue::zero() } else { LogValue::log_int(a) };
            let sw = slepian_wolf_partial(&h, l, &alpha).unwrap();
            let z = 1u32 << h.n();
            for k in 0..=l {
                if k & !l != 0 { continue; }
                for k2 in 0..=l {
                    if k2 & !l != 0 || k & !k2 != 0 { continue; }
                    let (x, y) = (sw.get(k | z).unwrap(), sw.get(k2 | z).unwrap());
                    prop_assert!(lv_cmp(x, y).is_le());
                }
            }
        }

        #[test]
        fn ak_copy_witness_always_works(p in arb_dist(), lbits in 0u32..8) {
            let h = dist_entropy_profile(&p).unwrap();
            let l = lbits & h.full();
            let w = ak_copy_witness(&p, l).unwrap();
            prop_assert_eq!(check_extension(&ak_partial(&h, l).unwrap(), &w).unwrap(), None);
        }
    }
}
