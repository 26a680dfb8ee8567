//! The two-points-on-a-line-and-a-parabola family, its closed-form
//! functionals, the conditional-Ingleton violation scan, and the DFZ/GMM
//! inequality candidates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde_json::{json, Value};

use super::functional::{eval_functional, LinFunctional};
use super::profile::Profile;
use crate::arith::{prime_power, prime_powers_in};
use crate::error::{Error, Result};
use crate::exactlog::{fmt_fraction, LogValue};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_q(q: u64) -> Result<()> {
    match prime_power(q) {
        Some((p, _)) if p != 2 && q >= 5 => Ok(()),
        Some((2, _)) => Err(Error::domain(format!("q = {q} has characteristic 2"))),
        Some(_) => Err(Error::domain(format!("q = {q} is below 5"))),
        None => Err(Error::domain(format!("q = {q} is not a prime power"))),
    }
}

/// Closed-form values of the five functionals at a given `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KrClosedForm {
    pub q: u64,
    pub delta_ab: LogValue,
    pub delta_ab_c: LogValue,
    pub delta_cd_a: LogValue,
    pub delta_cd_b: LogValue,
    pub delta_cd: LogValue,
}

/// Names and DSL sources of the five functionals, in [`KrClosedForm`] order.
pub const KR_FUNCTIONALS: [(&str, &str); 5] = [
    ("I(A:B)", "I(A:B)"),
    ("I(A:B|C)", "I(A:B|C)"),
    ("I(C:D|A)", "I(C:D|A)"),
    ("I(C:D|B)", "I(C:D|B)"),
    ("I(C:D)", "I(C:D)"),
];

impl KrClosedForm {
    pub fn values(&self) -> [&LogValue; 5] {
        [&self.delta_ab, &self.delta_ab_c, &self.delta_cd_a, &self.delta_cd_b, &self.delta_cd]
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for ((name, _), v) in KR_FUNCTIONALS.iter().zip(self.values()) {
            m.insert(name.to_string(), v.to_json());
        }
        json!({ "q": self.q, "functionals": m })
    }
}

pub fn kr_closed_form(q: u64) -> Result<KrClosedForm> {
    check_q(q)?;
    let ab = LogValue::log_ratio(q, q - 1);
    let cd_a = LogValue::log_ratio(q - 1, q - 2);
    Ok(KrClosedForm {
        q,
        delta_ab: ab.clone(),
        delta_ab_c: ab.clone(),
        delta_cd_a: cd_a.clone(),
        delta_cd_b: cd_a,
        delta_cd: &ab + &LogValue::log_int(2),
    })
}

/// `2 log(q/(q−1)) + ε (2 log((q−1)/(q−2)) − log 2)`.
pub fn kr_violation(q: u64, eps: &BigRational) -> Result<LogValue> {
    check_q(q)?;
    if eps.is_negative() {
        return Err(Error::domain("epsilon must be nonnegative"));
    }
    let base = LogValue::log_ratio(q, q - 1).scale(&rat(2));
    let ing = LogValue::log_ratio(q - 1, q - 2).scale(&rat(2)) - LogValue::log_int(2);
    Ok(&base + &ing.scale(eps))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanResult {
    pub eps: BigRational,
    pub q_max: u64,
    pub checked: usize,
    /// First `q` with a negative value.
    pub threshold: Option<(u64, LogValue)>,
    /// The prime power scanned just before the threshold, with its value and sign.
    pub previous: Option<(u64, LogValue, i32)>,
}

impl ScanResult {
    pub fn to_json(&self) -> Value {
        json!({
            "eps": fmt_fraction(&self.eps),
            "qmax": self.q_max,
            "checked": self.checked,
            "threshold": self.threshold.as_ref().map(|(q, v)| json!({
                "q": q, "value": v.to_json(), "sign": v.sign(), "float": crate::exactlog::lv_to_float(v, 53).0,
            })),
            "previous": self.previous.as_ref().map(|(q, v, s)| json!({
                "q": q, "value": v.to_json(), "sign": s, "float": crate::exactlog::lv_to_float(v, 53).0,
            })),
        })
    }
}

/// Scan odd prime powers `5 ≤ q ≤ q_max` for the first negative violation.
pub fn scan_threshold(eps: &BigRational, q_max: u64) -> Result<ScanResult> {
    let qs: Vec<u64> = prime_powers_in(5, q_max).into_iter().filter(|q| q % 2 == 1).collect();
    if qs.is_empty() {
        return Err(Error::domain(format!("no odd prime power in 5..={q_max}")));
    }
    let mut previous: Option<(u64, LogValue, i32)> = None;
    for (i, &q) in qs.iter().enumerate() {
        let v = kr_violation(q, eps)?;
        let s = v.sign();
        if s < 0 {
            return Ok(ScanResult {
                eps: eps.clone(),
                q_max,
                checked: i + 1,
                threshold: Some((q, v)),
                previous,
            });
        }
        previous = Some((q, v, s));
    }
    Ok(ScanResult { eps: eps.clone(), q_max, checked: qs.len(), threshold: None, previous })
}

fn abcd_masks(h_ground: &[String]) -> Result<[u32; 4]> {
    if h_ground.len() != 4 {
        return Err(Error::domain(format!(
            "expected a ground set of 4 blocks, got {}",
            h_ground.len()
        )));
    }
    Ok([1, 2, 4, 8])
}

/// The DFZ-derived parametric functional for `s ≥ 2`.
///
/// With `corrected` the summand `I(B:C|C)` is replaced by `I(B:C|D)`.
pub fn dfz_family(s: u32, corrected: bool, ground_set: &[String]) -> Result<LinFunctional> {
    if s < 2 {
        return Err(Error::domain("dfz family needs s >= 2"));
    }
    if s > 60 {
        return Err(Error::domain("dfz family parameter too large"));
    }
    let [a, b, c, d] = abcd_masks(ground_set)?;
    let g = ground_set;
    let two_s1 = BigInt::one() << (s - 1) as usize;
    let k = BigRational::from_integer(&two_s1 - 1);
    let w = BigRational::new(&two_s1 * BigInt::from(s - 1), (BigInt::one() << s as usize) - 2);
    let bc_k = if corrected { d } else { c };
    let bracket1 = LinFunctional::ci(g, b, c, d).add(&LinFunctional::ci(g, b, d, c));
    let bracket2 = LinFunctional::ci(g, a, c, d)
        .add(&LinFunctional::ci(g, a, d, c))
        .add(&LinFunctional::ci(g, b, c, bc_k))
        .add(&LinFunctional::ci(g, b, d, c));
    let inner = LinFunctional::ingleton(g, a, b, c, d)
        .sub(&bracket1)
        .add(&LinFunctional::ci(g, c, d, a).scale(&(BigRational::one() / &k)))
        .add(&bracket2.scale(&w));
    Ok(inner.scale(&k))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GmmReport {
    /// `I(A:C|D), I(A:D|C), I(B:C|D), I(B:D|C)`.
    pub antecedents: Vec<(String, LogValue)>,
    pub consequent: LogValue,
    pub antecedents_hold: bool,
}

impl GmmReport {
    pub fn consequent_sign(&self) -> i32 {
        self.consequent.sign()
    }

    pub fn to_json(&self) -> Value {
        let ante: Vec<Value> = self
            .antecedents
            .iter()
            .map(|(n, v)| json!({"functional": n, "value": v.to_json(), "sign": v.sign()}))
            .collect();
        json!({
            "antecedents": ante,
            "antecedents_hold": self.antecedents_hold,
            "consequent": {"functional": "ING(A:B|C:D)", "value": self.consequent.to_json(), "sign": self.consequent_sign()},
            "conclusion": if self.antecedents_hold {
                if self.consequent_sign() >= 0 { "consequent holds" } else { "consequent violated" }
            } else {
                "antecedents not all zero; values reported only"
            },
        })
    }
}

/// Evaluate the GMM conditional Ingleton candidate; the four ground-set
/// labels play the roles of A, B, C, D in order.
pub fn gmm_check(h: &Profile) -> Result<GmmReport> {
    let [a, b, c, d] = abcd_masks(h.ground_set())?;
    let g = h.ground_set();
    let names = [
        ("A", "C", "D", a, c, d),
        ("A", "D", "C", a, d, c),
        ("B", "C", "D", b, c, d),
        ("B", "D", "C", b, d, c),
    ];
    let mut antecedents = Vec::new();
    for (x, y, z, i, j, k) in names {
        let idx = |r: &str| match r {
            "A" => &g[0],
            "B" => &g[1],
            "C" => &g[2],
            _ => &g[3],
        };
        let name = format!("I({}:{}|{})", idx(x), idx(y), idx(z));
        antecedents.push((name, eval_functional(&LinFunctional::ci(g, i, j, k), h)?));
    }
    let consequent = eval_functional(&LinFunctional::ingleton(g, a, b, c, d), h)?;
    let antecedents_hold = antecedents.iter().all(|(_, v)| v.is_zero());
    Ok(GmmReport { antecedents, consequent, antecedents_hold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlog::lv_sign;
    use num_traits::Zero;

    fn abcd() -> Vec<String> {
        ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn closed_form_examples() {
        let k5 = kr_closed_form(5).unwrap();
        assert_eq!(k5.delta_ab, LogValue::log_ratio(5, 4));
        assert_eq!(k5.delta_ab.terms().len(), 2);
        let k7 = kr_closed_form(7).unwrap();
        assert_eq!(k7.delta_cd_a, LogValue::log_ratio(6, 5));
        assert_eq!(k7.delta_cd, LogValue::log_ratio(7, 3));
        assert!(kr_closed_form(3).is_err());
        assert!(kr_closed_form(8).is_err());
        assert!(kr_closed_form(15).is_err());
        assert!(kr_closed_form(9).is_ok());
    }

    #[test]
    fn violation_examples() {
        let one = rat(1);
        // 2 log(5/4) + 2 log(4/3) - log 2 = log(25/18) > 0
        assert_eq!(kr_violation(5, &one).unwrap(), LogValue::log_ratio(25, 18));
        assert_eq!(lv_sign(&kr_violation(5, &one).unwrap()), 1);
        for q in [5, 7, 101, 10007] {
            assert_eq!(lv_sign(&kr_violation(q, &BigRational::zero()).unwrap()), 1);
        }
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(lv_sign(&kr_violation(10007, &third).unwrap()), -1);
    }

    #[test]
    fn scan_finds_threshold() {
        let eps = BigRational::new(1.into(), 10.into());
        let r = scan_threshold(&eps, 10_000).unwrap();
        let (q, v) = r.threshold.clone().unwrap();
        assert_eq!(q, 37);
        assert_eq!(v.sign(), -1);
        let (prev, _, s) = r.previous.clone().unwrap();
        assert_eq!((prev, s), (31, 1));
        let none = scan_threshold(&BigRational::zero(), 500).unwrap();
        assert!(none.threshold.is_none());
        assert!(scan_threshold(&eps, 4).is_err());
    }

    #[test]
    fn dfz_instances() {
        let g = abcd();
        let f2 = dfz_family(2, false, &g).unwrap();
        // s = 2: outer coefficient 1 and inner weight 2*1/2 = 1
        let expect = crate::polymatroid::parse_functional(
            "ING(A:B|C:D) - I(B:C|D) - I(B:D|C) + I(C:D|A) + I(A:C|D) + I(A:D|C) + I(B:C|C) + I(B:D|C)",
            &g,
        )
        .unwrap();
        assert_eq!(f2, expect);
        let c2 = dfz_family(2, true, &g).unwrap();
        assert_ne!(c2, f2);
        assert!(dfz_family(1, false, &g).is_err());
        let f3 = dfz_family(3, false, &g).unwrap();
        assert!(!f3.is_zero());
    }

    #[test]
    fn gmm_on_zero_profile() {
        let r = gmm_check(&Profile::zero(abcd()).unwrap()).unwrap();
        assert!(r.antecedents_hold);
        assert_eq!(r.consequent_sign(), 0);
        assert!(gmm_check(&Profile::zero(vec!["x".into()]).unwrap()).is_err());
    }
}
