//! Set functions on a labelled ground set, stored densely by bitmask.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::exactlog::{lv_cmp, lv_normalize_base, LogValue, Normalized};

/// Bit `i` stands for the `i`-th label of the ground set.
pub type Mask = u32;

/// Largest supported ground set.
pub const MAX_GROUND: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    ground_set: Vec<String>,
    entries: Vec<LogValue>,
}

pub(crate) fn check_ground(ground_set: &[String]) -> Result<()> {
    if ground_set.len() > MAX_GROUND {
        return Err(Error::domain(format!(
            "ground set of size {} exceeds the supported {MAX_GROUND}",
            ground_set.len()
        )));
    }
    for (i, l) in ground_set.iter().enumerate() {
        if l.is_empty() || l.contains(',') {
            return Err(Error::format(format!("invalid label {l:?}")));
        }
        if ground_set[..i].contains(l) {
            return Err(Error::format(format!("duplicate label {l:?}")));
        }
    }
    Ok(())
}

impl Profile {
    pub fn new(ground_set: Vec<String>, entries: Vec<LogValue>) -> Result<Profile> {
        check_ground(&ground_set)?;
        if entries.len() != 1 << ground_set.len() {
            return Err(Error::format(format!(
                "profile on {} labels needs {} entries, got {}",
                ground_set.len(),
                1usize << ground_set.len(),
                entries.len()
            )));
        }
        if !entries[0].is_zero() {
            return Err(Error::domain("profile value on the empty set must be 0"));
        }
        Ok(Profile { ground_set, entries })
    }

    pub fn from_fn(ground_set: Vec<String>, f: impl Fn(Mask) -> LogValue) -> Result<Profile> {
        check_ground(&ground_set)?;
        let entries = (0..1u32 << ground_set.len()).map(f).collect();
        Profile::new(ground_set, entries)
    }

    pub fn zero(ground_set: Vec<String>) -> Result<Profile> {
        Profile::from_fn(ground_set, |_| LogValue::zero())
    }

    pub fn n(&self) -> usize {
        self.ground_set.len()
    }

    pub fn full(&self) -> Mask {
        ((1u64 << self.n()) - 1) as Mask
    }

    pub fn ground_set(&self) -> &[String] {
        &self.ground_set
    }

    pub fn entries(&self) -> &[LogValue] {
        &self.entries
    }

    pub fn get(&self, mask: Mask) -> &LogValue {
        &self.entries[mask as usize]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        label_index(&self.ground_set, label)
    }

    pub fn mask_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Mask> {
        labels_mask(&self.ground_set, labels)
    }

    /// Comma-separated labels, e.g. `"A,B"`; the empty set is `""`.
    pub fn parse_subset(&self, text: &str) -> Result<Mask> {
        parse_subset(&self.ground_set, text)
    }

    pub fn subset_label(&self, mask: Mask) -> String {
        subset_label(&self.ground_set, mask)
    }

    /// Value at a subset given by labels.
    pub fn at<S: AsRef<str>>(&self, labels: &[S]) -> Result<&LogValue> {
        Ok(self.get(self.mask_of(labels)?))
    }

    /// Every entry divided by `log b`.
    pub fn normalized(&self, b: u64) -> Result<Vec<Normalized>> {
        self.entries.iter().map(|v| lv_normalize_base(v, b)).collect()
    }

    pub fn to_json(&self) -> Value {
        let mut entries = Map::new();
        for (m, v) in self.entries.iter().enumerate() {
            entries.insert(self.subset_label(m as Mask), v.to_json());
        }
        let mut obj = Map::new();
        obj.insert("ground_set".into(), Value::from(self.ground_set.clone()));
        obj.insert("entries".into(), Value::Object(entries));
        Value::Object(obj)
    }

    /// JSON with an extra `normalized` map of base-`b` renderings.
    pub fn to_json_with_base(&self, base: Option<u64>) -> Result<Value> {
        let mut v = self.to_json();
        if let Some(b) = base {
            let mut norm = Map::new();
            for (m, x) in self.normalized(b)?.iter().enumerate() {
                norm.insert(self.subset_label(m as Mask), x.to_json());
            }
            v["base"] = Value::from(b);
            v["normalized"] = Value::Object(norm);
        }
        Ok(v)
    }

    pub fn from_json(v: &Value) -> Result<Profile> {
        let ground_set = ground_from_json(v)?;
        check_ground(&ground_set)?;
        let entries = v
            .get("entries")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::format("profile needs an \"entries\" object"))?;
        let mut table: Vec<Option<LogValue>> = vec![None; 1 << ground_set.len()];
        for (k, val) in entries {
            let m = parse_subset(&ground_set, k)? as usize;
            if table[m].is_some() {
                return Err(Error::format(format!("subset {k:?} listed twice")));
            }
            table[m] = Some(LogValue::from_json(val)?);
        }
        let entries = table
            .into_iter()
            .enumerate()
            .map(|(m, e)| {
                e.ok_or_else(|| {
                    Error::format(format!("missing entry for subset {:?}", subset_label(&ground_set, m as Mask)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Profile::new(ground_set, entries)
    }

    /// Same profile with the ground set listed in another order.
    pub fn reordered<S: AsRef<str>>(&self, order: &[S]) -> Result<Profile> {
        if order.len() != self.n() {
            return Err(Error::domain("relabelling must list every label once"));
        }
        let idx: Vec<usize> = order.iter().map(|l| self.index_of(l.as_ref())).collect::<Result<_>>()?;
        let labels: Vec<String> = order.iter().map(|l| l.as_ref().to_string()).collect();
        Profile::from_fn(labels, |m| {
            let mut old = 0;
            for (new_bit, &old_bit) in idx.iter().enumerate() {
                if m & (1 << new_bit) != 0 {
                    old |= 1 << old_bit;
                }
            }
            self.get(old).clone()
        })
    }
}

pub(crate) fn ground_from_json(v: &Value) -> Result<Vec<String>> {
    v.get("ground_set")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format("missing \"ground_set\" array"))?
        .iter()
        .map(|l| {
            l.as_str()
                .map(String::from)
                .ok_or_else(|| Error::format("ground set labels must be strings"))
        })
        .collect()
}

pub fn label_index(ground: &[String], label: &str) -> Result<usize> {
    ground
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::domain(format!("unknown label {label:?}")))
}

pub fn labels_mask<S: AsRef<str>>(ground: &[String], labels: &[S]) -> Result<Mask> {
    let mut m = 0;
    for l in labels {
        m |= 1 << label_index(ground, l.as_ref())?;
    }
    Ok(m)
}

pub fn parse_subset(ground: &[String], text: &str) -> Result<Mask> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(0);
    }
    let labels: Vec<&str> = text.split(',').map(str::trim).collect();
    labels_mask(ground, &labels)
}

pub fn subset_label(ground: &[String], mask: Mask) -> String {
    ground
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, l)| l.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// `Δ(I|K) = h(I ∪ K) − h(K)`.
pub fn delta_cond(h: &Profile, i: Mask, k: Mask) -> LogValue {
    h.get(i | k) - h.get(k)
}

/// `Δ(I:J|K) = h(I ∪ K) + h(J ∪ K) − h(I ∪ J ∪ K) − h(K)`.
pub fn delta_ci(h: &Profile, i: Mask, j: Mask, k: Mask) -> LogValue {
    let pos = h.get(i | k) + h.get(j | k);
    let neg = h.get(i | j | k) + h.get(k);
    &pos - &neg
}

/// `□(A:B|C:D) = Δ(C:D|A) + Δ(C:D|B) + Δ(A:B) − Δ(C:D)`.
pub fn ingleton(h: &Profile, a: Mask, b: Mask, c: Mask, d: Mask) -> LogValue {
    let s = delta_ci(h, c, d, a) + delta_ci(h, c, d, b) + delta_ci(h, a, b, 0);
    &s - &delta_ci(h, c, d, 0)
}

/// A Shannon inequality that fails, with the (negative) offending value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyNonzero(LogValue),
    Monotone { i: String, value: LogValue },
    Submodular { i: String, j: String, k: String, value: LogValue },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyNonzero(v) => write!(f, "h() = {v} is not 0"),
            Violation::Monotone { i, value } => write!(f, "D({i}|rest) = {value} < 0"),
            Violation::Submodular { i, j, k, value } => write!(f, "I({i}:{j}|{k}) = {value} < 0"),
        }
    }
}

/// The first failing elemental inequality, if any.
pub fn first_violation(h: &Profile) -> Option<Violation> {
    if !h.get(0).is_zero() {
        return Some(Violation::EmptyNonzero(h.get(0).clone()));
    }
    let n = h.n();
    let full = h.full();
    for i in 0..n {
        let v = delta_cond(h, 1 << i, full & !(1 << i));
        if v.sign() < 0 {
            return Some(Violation::Monotone { i: h.ground_set[i].clone(), value: v });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let rest = full & !(1 << i) & !(1 << j);
            let mut k = rest;
            loop {
                let v = delta_ci(h, 1 << i, 1 << j, k);
                if v.sign() < 0 {
                    return Some(Violation::Submodular {
                        i: h.ground_set[i].clone(),
                        j: h.ground_set[j].clone(),
                        k: h.subset_label(k),
                        value: v,
                    });
                }
                if k == 0 {
                    break;
                }
                k = (k - 1) & rest;
            }
        }
    }
    None
}

pub fn is_polymatroid(h: &Profile) -> bool {
    first_violation(h).is_none()
}

/// A partition of a ground set into labelled blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    ground_set: Vec<String>,
    blocks: Vec<(String, Mask)>,
}

impl Partition {
    pub fn new<S: AsRef<str>>(ground_set: &[String], blocks: &[(S, Vec<S>)]) -> Result<Partition> {
        let mut seen: Mask = 0;
        let mut out = Vec::new();
        for (label, members) in blocks {
            let m = labels_mask(ground_set, members)?;
            if m == 0 {
                return Err(Error::domain(format!("block {:?} is empty", label.as_ref())));
            }
            if m & seen != 0 {
                return Err(Error::domain("blocks overlap"));
            }
            seen |= m;
            out.push((label.as_ref().to_string(), m));
        }
        let full = ((1u64 << ground_set.len()) - 1) as Mask;
        if seen != full {
            return Err(Error::domain(format!(
                "blocks do not cover {}",
                subset_label(ground_set, full & !seen)
            )));
        }
        let labels: Vec<String> = out.iter().map(|(l, _)| l.clone()).collect();
        check_ground(&labels)?;
        Ok(Partition { ground_set: ground_set.to_vec(), blocks: out })
    }

    /// Every label in its own block.
    pub fn singletons(ground_set: &[String]) -> Partition {
        Partition {
            ground_set: ground_set.to_vec(),
            blocks: ground_set.iter().enumerate().map(|(i, l)| (l.clone(), 1 << i)).collect(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.blocks.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn blocks(&self) -> &[(String, Mask)] {
        &self.blocks
    }

    /// Union of the blocks selected by `m` (a mask over block indices).
    pub fn expand(&self, m: Mask) -> Mask {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(i, _)| m & (1 << i) != 0)
            .fold(0, |acc, (_, (_, b))| acc | b)
    }
}

/// Pullback `(ϱ*h)(I) = h(⋃_{B∈I} B)`.
pub fn factor(h: &Profile, rho: &Partition) -> Result<Profile> {
    if rho.ground_set != h.ground_set {
        return Err(Error::domain("partition is over a different ground set"));
    }
    Profile::from_fn(rho.labels(), |m| h.get(rho.expand(m)).clone())
}

/// Modular means `m(I) = Σ_{i∈I} m(i)` with every `m(i) ≥ 0`.
pub fn is_modular(m: &Profile) -> bool {
    if !m.get(0).is_zero() {
        return false;
    }
    let n = m.n();
    if (0..n).any(|i| m.get(1 << i).sign() < 0) {
        return false;
    }
    (1..=m.full()).all(|s| {
        let sum: LogValue = (0..n).filter(|i| s & (1 << i) != 0).map(|i| m.get(1 << i).clone()).sum();
        &sum == m.get(s)
    })
}

/// `(h ∗ m)(I) = min_{J⊆I} h(J) + m(I∖J)` for modular `m`.
pub fn convolve(h: &Profile, m: &Profile) -> Result<Profile> {
    if h.ground_set != m.ground_set {
        return Err(Error::domain("convolution needs a common ground set"));
    }
    if !is_modular(m) {
        return Err(Error::domain("second argument of the convolution is not modular"));
    }
    Profile::from_fn(h.ground_set.clone(), |i| {
        let mut best = m.get(i).clone();
        let mut j = i;
        while j != 0 {
            let cand = h.get(j) + m.get(i & !j);
            if lv_cmp(&cand, &best) == std::cmp::Ordering::Less {
                best = cand;
            }
            j = (j - 1) & i;
        }
        best
    })
}

/// Value table keyed by subset label, handy for reports.
pub fn label_table(h: &Profile) -> BTreeMap<String, LogValue> {
    (0..=h.full()).map(|m| (h.subset_label(m), h.get(m).clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    fn l2(k: u64) -> LogValue {
        LogValue::log_int(2).scale(&num_rational::BigRational::from_integer(k.into()))
    }

    #[test]
    fn polymatroid_examples() {
        assert!(is_polymatroid(&Profile::zero(labels(3)).unwrap()));
        let dep = Profile::new(labels(2), vec![LogValue::zero(), l2(1), l2(1), l2(1)]).unwrap();
        assert!(is_polymatroid(&dep));
        let bad = Profile::new(labels(2), vec![LogValue::zero(), l2(1), l2(1), l2(3)]).unwrap();
        match first_violation(&bad) {
            Some(Violation::Submodular { i, j, .. }) => assert_eq!((i.as_str(), j.as_str()), ("1", "2")),
            other => panic!("{other:?}"),
        }
        assert!(Profile::new(labels(1), vec![l2(1), l2(1)]).is_err());
    }

    #[test]
    fn deltas() {
        let h = Profile::new(labels(2), vec![LogValue::zero(), l2(1), l2(1), l2(2)]).unwrap();
        assert_eq!(delta_cond(&h, 1, 0), l2(1));
        assert!(delta_cond(&h, 1, 3).is_zero());
        assert!(delta_ci(&h, 1, 0, 2).is_zero());
        assert!(delta_ci(&h, 1, 2, 0).is_zero());
        assert!(ingleton(&Profile::zero(labels(4)).unwrap(), 1, 2, 4, 8).is_zero());
    }

    #[test]
    fn factor_examples() {
        let h = Profile::from_fn(labels(3), |m| l2(m.count_ones() as u64)).unwrap();
        assert_eq!(factor(&h, &Partition::singletons(h.ground_set())).unwrap(), h);
        let one = Partition::new(h.ground_set(), &[("X", vec!["1", "2", "3"])]).unwrap();
        let f = factor(&h, &one).unwrap();
        assert_eq!(f.entries(), &[LogValue::zero(), l2(3)]);
        assert!(Partition::new(h.ground_set(), &[("X", vec!["1", "2"])]).is_err());
        assert!(Partition::new(h.ground_set(), &[("X", vec!["1", "2"]), ("Y", vec!["2", "3"])]).is_err());
    }

    #[test]
    fn modular_examples() {
        let add = Profile::from_fn(labels(3), |m| {
            (0..3).filter(|i| m & (1 << i) != 0).map(|i| l2(i + 1)).sum()
        })
        .unwrap();
        assert!(is_modular(&add));
        let rank = Profile::from_fn(labels(2), |m| l2(m.count_ones().min(1) as u64)).unwrap();
        assert!(!is_modular(&rank));
        assert!(is_modular(&Profile::zero(labels(2)).unwrap()));
    }

    #[test]
    fn convolve_examples() {
        let h = Profile::from_fn(labels(2), |m| if m == 0 { LogValue::zero() } else { l2(2) }).unwrap();
        let zero = Profile::zero(labels(2)).unwrap();
        assert_eq!(convolve(&h, &zero).unwrap(), zero);
        let m = Profile::from_fn(labels(2), |s| l2(s.count_ones() as u64)).unwrap();
        // J = I contributes h(I) + m(∅) = 0
        assert_eq!(convolve(&zero, &m).unwrap(), zero);
        assert_eq!(convolve(&h, &m).unwrap().get(3), &l2(2));
        let rank = Profile::from_fn(labels(2), |m| l2(m.count_ones().min(1) as u64)).unwrap();
        assert!(matches!(convolve(&h, &rank), Err(Error::Domain(_))));
    }

    #[test]
    fn json_round_trip() {
        let h = Profile::from_fn(vec!["A".into(), "B".into()], |m| l2(m as u64)).unwrap();
        let j = h.to_json();
        assert_eq!(j["ground_set"], serde_json::json!(["A", "B"]));
        assert!(j["entries"].get("A,B").is_some());
        assert!(j["entries"].get("").is_some());
        assert_eq!(Profile::from_json(&j).unwrap(), h);
        let r = h.reordered(&["B", "A"]).unwrap();
        assert_eq!(r.at(&["A"]).unwrap(), h.at(&["A"]).unwrap());
    }

    fn random_polymatroid() -> impl Strategy<Value = Profile> {
        // Weighted coverage functions are polymatroids.
        (proptest::collection::vec(0u32..16, 4), proptest::collection::vec(1u64..5, 4)).prop_map(
            |(cover, weights)| {
                Profile::from_fn(labels(4), |m| {
                    let mut covered = 0u32;
                    for i in 0..4 {
                        if m & (1 << i) != 0 {
                            covered |= cover[i];
                        }
                    }
                    (0..4).filter(|b| covered & (1 << b) != 0).map(|b| l2(weights[b])).sum()
                })
                .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn ci_identity(h in random_polymatroid(), i in 0u32..16, j in 0u32..16, k in 0u32..16) {
            prop_assert_eq!(delta_ci(&h, i, j, k), delta_cond(&h, i, k) - delta_cond(&h, i, j | k));
        }

        #[test]
        fn factoring_preserves_polymatroids(h in random_polymatroid()) {
            prop_assert!(is_polymatroid(&h));
            let rho = Partition::new(h.ground_set(), &[("X", vec!["1", "3"]), ("Y", vec!["2"]), ("Z", vec!["4"])]).unwrap();
            prop_assert!(is_polymatroid(&factor(&h, &rho).unwrap()));
        }

        #[test]
        fn convolution_bounds(h in random_polymatroid(), w in proptest::collection::vec(0u64..4, 4)) {
            let zero = Profile::zero(labels(4)).unwrap();
            prop_assert!(convolve(&h, &zero).unwrap().get(15).is_zero());
            let m = Profile::from_fn(labels(4), |s| (0..4).filter(|i| s & (1 << i) != 0).map(|i| l2(w[i])).sum()).unwrap();
            let c = convolve(&h, &m).unwrap();
            for s in 0..16 {
                prop_assert!(lv_cmp(c.get(s), h.get(s)) != std::cmp::Ordering::Greater);
            }
        }
    }
}
