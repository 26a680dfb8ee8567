use num_bigint::BigInt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(BigInt),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    /// Exponent is at least 1.
    Pow(Box<Term>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Eq0(Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

/// A named formula with its declared coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefinableSet {
    pub name: String,
    pub free_vars: Vec<String>,
    pub formula: Formula,
    /// Named blocks partitioning `free_vars`, in declaration order.
    pub blocks: Option<Vec<(String, Vec<String>)>>,
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn int(n: i64) -> Term {
        if n < 0 {
            Term::Neg(Box::new(Term::Const(BigInt::from(-n))))
        } else {
            Term::Const(BigInt::from(n))
        }
    }

    /// `a - b`, represented as `a + (-b)`.
    pub fn sub(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(Term::Neg(Box::new(b))))
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) => {}
            Term::Add(a, b) | Term::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Term::Neg(a) | Term::Pow(a, _) => a.collect_vars(out),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, v: &str) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Const(_) => false,
            Term::Add(a, b) | Term::Mul(a, b) => a.mentions(v) || b.mentions(v),
            Term::Neg(a) | Term::Pow(a, _) => a.mentions(v),
        }
    }
}

impl Formula {
    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Formula::Eq0(t) => {
                for v in t.vars() {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(x, body) | Formula::Forall(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    /// Every quantified variable, outermost first.
    pub fn bound_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_bound(&mut out);
        out
    }

    fn collect_bound(&self, out: &mut Vec<String>) {
        match self {
            Formula::Eq0(_) => {}
            Formula::Not(a) => a.collect_bound(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_bound(out);
                b.collect_bound(out);
            }
            Formula::Exists(x, body) | Formula::Forall(x, body) => {
                out.push(x.clone());
                body.collect_bound(out);
            }
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn exists(x: &str, a: Formula) -> Formula {
        Formula::Exists(x.to_string(), Box::new(a))
    }

    pub fn forall(x: &str, a: Formula) -> Formula {
        Formula::Forall(x.to_string(), Box::new(a))
    }
}

pub fn free_vars(phi: &Formula) -> Vec<String> {
    phi.free_vars()
}

impl DefinableSet {
    pub fn arity(&self) -> usize {
        self.free_vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.free_vars.iter().position(|v| v == name)
    }
}
