//! Compilation of formulas to slot-indexed programs and their evaluation
//! over a field backend.

use std::collections::BTreeMap;

use super::ast::{Formula, Term};
use super::roots::{self, UPoly};
use crate::error::{Error, Result};
use crate::gf::{FieldElem, FieldOps, FieldSpec};
use crate::with_field_ops;

/// How `exists x.` over a conjunction of equations is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Root finding for fields above [`ROOT_FIND_MIN_Q`], enumeration otherwise.
    #[default]
    Auto,
    Enumerate,
    /// Root finding wherever the body allows it.
    RootFind,
}

pub const ROOT_FIND_MIN_Q: u64 = 64;

#[derive(Clone, Debug)]
enum Op {
    Var(usize),
    Const(u64),
    Add,
    Mul,
    Neg,
    Pow(u64),
}

#[derive(Clone, Debug)]
struct TermProg {
    ops: Vec<Op>,
}

#[derive(Clone, Debug)]
enum Node {
    Atom(TermProg),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Exists { slot: usize, body: Box<Node> },
    Forall { slot: usize, body: Box<Node> },
    /// `exists` decided by common roots of the listed equations.
    ExistsRoot { slot: usize, atoms: Vec<TermProg> },
}

/// A formula compiled for one field. Slots `0..n_free` hold the free
/// variables in the order given at compile time.
#[derive(Clone, Debug)]
pub struct Program {
    root: Node,
    n_free: usize,
    n_slots: usize,
    q: u64,
}

struct Compiler<'a, F: FieldOps> {
    ops: &'a F,
    slots: Vec<String>,
    strategy: Strategy,
}

impl<'a, F: FieldOps> Compiler<'a, F> {
    fn slot(&self, v: &str) -> Result<usize> {
        self.slots
            .iter()
            .rposition(|s| s == v)
            .ok_or_else(|| Error::domain(format!("no assignment for variable `{v}`")))
    }

    fn term(&self, t: &Term, out: &mut Vec<Op>) -> Result<()> {
        match t {
            Term::Var(v) => out.push(Op::Var(self.slot(v)?)),
            Term::Const(c) => out.push(Op::Const(self.ops.from_int(c))),
            Term::Add(a, b) => {
                self.term(a, out)?;
                self.term(b, out)?;
                out.push(Op::Add);
            }
            Term::Mul(a, b) => {
                self.term(a, out)?;
                self.term(b, out)?;
                out.push(Op::Mul);
            }
            Term::Neg(a) => {
                self.term(a, out)?;
                out.push(Op::Neg);
            }
            Term::Pow(a, k) => {
                self.term(a, out)?;
                out.push(Op::Pow(*k as u64));
            }
        }
        Ok(())
    }

    fn prog(&self, t: &Term) -> Result<TermProg> {
        let mut ops = Vec::new();
        self.term(t, &mut ops)?;
        Ok(TermProg { ops })
    }

    fn formula(&mut self, f: &Formula) -> Result<Node> {
        Ok(match f {
            Formula::Eq0(t) => Node::Atom(self.prog(t)?),
            Formula::Not(a) => Node::Not(Box::new(self.formula(a)?)),
            Formula::And(..) => {
                let mut parts = Vec::new();
                flatten_and(f, &mut parts);
                Node::And(parts.into_iter().map(|p| self.formula(p)).collect::<Result<_>>()?)
            }
            Formula::Or(..) => {
                let mut parts = Vec::new();
                flatten_or(f, &mut parts);
                Node::Or(parts.into_iter().map(|p| self.formula(p)).collect::<Result<_>>()?)
            }
            Formula::Implies(a, b) => {
                Node::Implies(Box::new(self.formula(a)?), Box::new(self.formula(b)?))
            }
            Formula::Exists(x, body) | Formula::Forall(x, body) => {
                self.slots.push(x.clone());
                let slot = self.slots.len() - 1;
                let use_roots = matches!(f, Formula::Exists(..))
                    && match self.strategy {
                        Strategy::Enumerate => false,
                        Strategy::RootFind => true,
                        Strategy::Auto => self.ops.q() >= ROOT_FIND_MIN_Q,
                    };
                let node = match (use_roots, equations(body)) {
                    (true, Some(eqs)) => Node::ExistsRoot {
                        slot,
                        atoms: eqs.iter().map(|t| self.prog(t)).collect::<Result<_>>()?,
                    },
                    _ => {
                        let body = Box::new(self.formula(body)?);
                        if matches!(f, Formula::Exists(..)) {
                            Node::Exists { slot, body }
                        } else {
                            Node::Forall { slot, body }
                        }
                    }
                };
                // Quantified names are globally distinct, so the slot stays reserved.
                node
            }
        })
    }
}

fn flatten_and<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
    match f {
        Formula::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other),
    }
}

fn flatten_or<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
    match f {
        Formula::Or(a, b) => {
            flatten_or(a, out);
            flatten_or(b, out);
        }
        other => out.push(other),
    }
}

/// The terms of a body that is a conjunction of plain equations.
fn equations(body: &Formula) -> Option<Vec<&Term>> {
    let mut parts = Vec::new();
    flatten_and(body, &mut parts);
    parts
        .into_iter()
        .map(|p| match p {
            Formula::Eq0(t) => Some(t),
            _ => None,
        })
        .collect()
}

fn max_slots(f: &Formula) -> usize {
    f.bound_vars().len()
}

impl Program {
    /// Compile `f` with the free variables bound to slots in `vars` order.
    pub fn compile(f: &Formula, vars: &[String], field: &FieldSpec, strategy: Strategy) -> Result<Program> {
        let root = with_field_ops!(field, ops => {
            let mut c = Compiler { ops, slots: vars.to_vec(), strategy };
            c.formula(f)?
        });
        let n_slots = vars.len() + max_slots(f);
        Ok(Program { root, n_free: vars.len(), n_slots, q: field.q() })
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Slots needed by [`Program::eval`]; the first `n_free` are inputs.
    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    /// Evaluate with free slots already filled with backend representations.
    ///
    /// `ops` must be the backend of the field the program was compiled for.
    pub fn eval<F: FieldOps>(&self, ops: &F, slots: &mut [u64], stack: &mut Vec<u64>) -> bool {
        debug_assert_eq!(ops.q(), self.q);
        eval_node(&self.root, ops, slots, stack)
    }
}

fn eval_term<F: FieldOps>(t: &TermProg, ops: &F, slots: &[u64], stack: &mut Vec<u64>) -> u64 {
    stack.clear();
    for op in &t.ops {
        match *op {
            Op::Var(s) => stack.push(slots[s]),
            Op::Const(c) => stack.push(c),
            Op::Add => {
                let b = stack.pop().unwrap();
                let a = stack.last_mut().unwrap();
                *a = ops.add(*a, b);
            }
            Op::Mul => {
                let b = stack.pop().unwrap();
                let a = stack.last_mut().unwrap();
                *a = ops.mul(*a, b);
            }
            Op::Neg => {
                let a = stack.last_mut().unwrap();
                *a = ops.neg(*a);
            }
            Op::Pow(k) => {
                let a = stack.last_mut().unwrap();
                *a = ops.pow(*a, k);
            }
        }
    }
    stack[0]
}

fn eval_poly<F: FieldOps>(t: &TermProg, ops: &F, slots: &[u64], xslot: usize) -> UPoly {
    let mut stack: Vec<UPoly> = Vec::new();
    for op in &t.ops {
        match *op {
            Op::Var(s) if s == xslot => stack.push(roots::x(ops)),
            Op::Var(s) => stack.push(roots::constant(ops, slots[s])),
            Op::Const(c) => stack.push(roots::constant(ops, c)),
            Op::Add => {
                let b = stack.pop().unwrap();
                let a = stack.pop().unwrap();
                stack.push(roots::add(ops, &a, &b));
            }
            Op::Mul => {
                let b = stack.pop().unwrap();
                let a = stack.pop().unwrap();
                stack.push(roots::reduce_frobenius(ops, roots::mul(ops, &a, &b)));
            }
            Op::Neg => {
                let a = stack.pop().unwrap();
                stack.push(roots::neg(ops, &a));
            }
            Op::Pow(mut k) => {
                let mut base = stack.pop().unwrap();
                let mut acc = roots::constant(ops, ops.one());
                while k > 0 {
                    if k & 1 == 1 {
                        acc = roots::reduce_frobenius(ops, roots::mul(ops, &acc, &base));
                    }
                    k >>= 1;
                    if k > 0 {
                        base = roots::reduce_frobenius(ops, roots::mul(ops, &base, &base));
                    }
                }
                stack.push(acc);
            }
        }
    }
    stack.pop().unwrap()
}

fn eval_node<F: FieldOps>(n: &Node, ops: &F, slots: &mut [u64], stack: &mut Vec<u64>) -> bool {
    match n {
        Node::Atom(t) => ops.is_zero(eval_term(t, ops, slots, stack)),
        Node::Not(a) => !eval_node(a, ops, slots, stack),
        Node::And(parts) => parts.iter().all(|p| eval_node(p, ops, slots, stack)),
        Node::Or(parts) => parts.iter().any(|p| eval_node(p, ops, slots, stack)),
        Node::Implies(a, b) => !eval_node(a, ops, slots, stack) || eval_node(b, ops, slots, stack),
        Node::Exists { slot, body } => (0..ops.q()).any(|i| {
            slots[*slot] = ops.from_index(i);
            eval_node(body, ops, slots, stack)
        }),
        Node::Forall { slot, body } => (0..ops.q()).all(|i| {
            slots[*slot] = ops.from_index(i);
            eval_node(body, ops, slots, stack)
        }),
        Node::ExistsRoot { slot, atoms } => {
            let polys: Vec<UPoly> = atoms.iter().map(|t| eval_poly(t, ops, slots, *slot)).collect();
            roots::has_common_root(ops, &polys)
        }
    }
}

/// Truth value of `phi` under an assignment of its free variables.
pub fn eval_formula(phi: &Formula, assignment: &BTreeMap<String, FieldElem>, spec: &FieldSpec) -> Result<bool> {
    eval_formula_with(phi, assignment, spec, Strategy::Auto)
}

pub fn eval_formula_with(
    phi: &Formula,
    assignment: &BTreeMap<String, FieldElem>,
    spec: &FieldSpec,
    strategy: Strategy,
) -> Result<bool> {
    let vars = phi.free_vars();
    for v in &vars {
        if !assignment.contains_key(v) {
            return Err(Error::domain(format!("no assignment for variable `{v}`")));
        }
    }
    for (v, a) in assignment {
        if a.0 >= spec.q() {
            return Err(Error::domain(format!("value {} of `{v}` is not an element of {spec}", a.0)));
        }
    }
    let prog = Program::compile(phi, &vars, spec, strategy)?;
    Ok(with_field_ops!(spec, ops => {
        let mut slots = vec![ops.zero(); prog.n_slots()];
        for (i, v) in vars.iter().enumerate() {
            slots[i] = ops.from_index(assignment[v].0);
        }
        prog.eval(ops, &mut slots, &mut Vec::new())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::ff_make;
    use crate::ringlang::parser::parse_formula;
    use proptest::prelude::*;
    use proptest::strategy::Strategy;
    use super::Strategy as Strat;

    fn assign(pairs: &[(&str, u64)]) -> BTreeMap<String, FieldElem> {
        pairs.iter().map(|&(v, a)| (v.to_string(), FieldElem(a))).collect()
    }

    #[test]
    fn examples() {
        let f5 = ff_make(5, 1).unwrap();
        let f7 = ff_make(7, 1).unwrap();
        let hyp = parse_formula("x*y = 0", &["x", "y"]).unwrap();
        assert!(eval_formula(&hyp, &assign(&[("x", 0), ("y", 3)]), &f5).unwrap());
        let sq = parse_formula("exists x. x^2 + y^2 = 0", &["y"]).unwrap();
        for s in [Strat::Enumerate, Strat::RootFind] {
            assert!(eval_formula_with(&sq, &assign(&[("y", 1)]), &f5, s).unwrap());
            assert!(!eval_formula_with(&sq, &assign(&[("y", 1)]), &f7, s).unwrap());
        }
        assert!(eval_formula(&hyp, &assign(&[("x", 0)]), &f5).is_err());
    }

    #[test]
    fn closed_sentences() {
        let f = ff_make(3, 2).unwrap();
        let s = parse_formula("forall x. exists y. y*x = 1 \\/ x = 0", &[]).unwrap();
        assert!(eval_formula(&s, &BTreeMap::new(), &f).unwrap());
        let s = parse_formula("forall x. x^9 = x", &[]).unwrap();
        assert!(eval_formula(&s, &BTreeMap::new(), &f).unwrap());
        let s = parse_formula("exists x. x^2 = 0 - 1", &[]).unwrap();
        assert!(eval_formula(&s, &BTreeMap::new(), &f).unwrap());
    }

    const VARS: [&str; 2] = ["y", "z"];

    fn small_fields() -> Vec<FieldSpec> {
        [(2u64, 1u32), (3, 1), (5, 1), (7, 1), (2, 2), (2, 3), (3, 2)]
            .iter()
            .map(|&(p, e)| ff_make(p, e).unwrap())
            .collect()
    }

    fn term_text() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            prop::sample::select(vec!["x", "y", "z", "w"]).prop_map(String::from),
            (0u32..5).prop_map(|c| c.to_string()),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                (inner, 1u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            ]
        })
    }

    fn body_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(term_text(), 1..3)
            .prop_map(|ts| ts.iter().map(|t| format!("{t} = 0")).collect::<Vec<_>>().join(" /\\ "))
    }

    proptest! {
        #[test]
        fn strategies_agree(body in body_text(), inner in body_text(), fi in 0usize..7, y in 0u64..9, z in 0u64..9) {
            let field = &small_fields()[fi];
            let text = format!("forall w. exists x. ({body}) /\\ (~(exists v. {}) \\/ {inner})", inner.replace('x', "v"));
            let f = parse_formula(&text, &VARS).unwrap();
            let a = assign(&[("y", y % field.q()), ("z", z % field.q())]);
            let e = eval_formula_with(&f, &a, field, Strat::Enumerate).unwrap();
            let r = eval_formula_with(&f, &a, field, Strat::RootFind).unwrap();
            prop_assert_eq!(e, r);
            let simple = parse_formula(&format!("forall w. exists x. {body}"), &VARS);
            if let Ok(simple) = simple {
                let e = eval_formula_with(&simple, &a, field, Strat::Enumerate).unwrap();
                let r = eval_formula_with(&simple, &a, field, Strat::RootFind).unwrap();
                prop_assert_eq!(e, r);
            }
        }
    }

    #[test]
    fn negation_and_duality_exhaustive() {
        let texts = [
            "x*y = z",
            "x^2 + y = 0 \\/ z = 1",
            "x - y = 0 -> z*z = x",
            "x^3 + y*x + z = 0 /\\ x != 0",
        ];
        for field in small_fields() {
            let q = field.q();
            for t in texts {
                let phi = parse_formula(t, &["x", "y", "z"]).unwrap();
                let not_phi = Formula::not(phi.clone());
                let ex = Formula::exists("x", phi.clone());
                let dual = Formula::not(Formula::forall("x", Formula::not(phi.clone())));
                for y in 0..q {
                    for z in 0..q {
                        for x in 0..q {
                            let a = assign(&[("x", x), ("y", y), ("z", z)]);
                            assert_eq!(
                                eval_formula(&not_phi, &a, &field).unwrap(),
                                !eval_formula(&phi, &a, &field).unwrap()
                            );
                        }
                        let a = assign(&[("y", y), ("z", z)]);
                        for s in [Strat::Enumerate, Strat::RootFind] {
                            assert_eq!(
                                eval_formula_with(&ex, &a, &field, s).unwrap(),
                                eval_formula_with(&dual, &a, &field, s).unwrap()
                            );
                        }
                    }
                }
            }
        }
    }
}
