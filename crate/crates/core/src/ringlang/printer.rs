//! Pretty-printer producing text that parses back to the same AST.

use std::fmt;

use num_traits::Zero;

use super::ast::{DefinableSet, Formula, Term};

fn term_level(t: &Term) -> u8 {
    match t {
        Term::Add(..) => 0,
        Term::Mul(..) => 1,
        Term::Neg(_) => 2,
        Term::Pow(..) => 3,
        Term::Var(_) | Term::Const(_) => 4,
    }
}

fn write_term(t: &Term, min: u8, out: &mut String) {
    let paren = term_level(t) < min;
    if paren {
        out.push('(');
    }
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Const(c) => out.push_str(&c.to_string()),
        Term::Add(a, b) => {
            write_term(a, 0, out);
            match &**b {
                Term::Neg(c) => {
                    out.push_str(" - ");
                    write_term(c, 1, out);
                }
                _ => {
                    out.push_str(" + ");
                    write_term(b, 1, out);
                }
            }
        }
        Term::Mul(a, b) => {
            write_term(a, 1, out);
            out.push('*');
            write_term(b, 2, out);
        }
        Term::Neg(a) => {
            out.push('-');
            write_term(a, 2, out);
        }
        Term::Pow(a, k) => {
            write_term(a, 4, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(t, 0, &mut s);
    s
}

fn formula_level(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 0,
        Formula::Exists(..) | Formula::Forall(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Eq0(_) | Formula::Not(_) => 4,
    }
}

/// Split `Eq0(a - b)` back into its two sides unless `b` is the literal 0,
/// which the parser would have folded away.
fn sides(t: &Term) -> Option<(&Term, &Term)> {
    if let Term::Add(a, b) = t {
        if let Term::Neg(b) = &**b {
            if !matches!(&**b, Term::Const(c) if c.is_zero()) {
                return Some((a, b));
            }
        }
    }
    None
}

fn write_atom(t: &Term, op: &str, out: &mut String) {
    match sides(t) {
        Some((a, b)) => {
            write_term(a, 0, out);
            out.push_str(op);
            write_term(b, 0, out);
        }
        None => {
            write_term(t, 0, out);
            out.push_str(op);
            out.push('0');
        }
    }
}

fn write_formula(f: &Formula, min: u8, out: &mut String) {
    let paren = formula_level(f) < min;
    if paren {
        out.push('(');
    }
    match f {
        Formula::Eq0(t) => write_atom(t, " = ", out),
        Formula::Not(inner) => match &**inner {
            Formula::Eq0(t) => write_atom(t, " != ", out),
            other => {
                out.push('~');
                write_formula(other, 4, out);
            }
        },
        Formula::And(a, b) => {
            write_formula(a, 3, out);
            out.push_str(" /\\ ");
            write_formula(b, 4, out);
        }
        Formula::Or(a, b) => {
            write_formula(a, 2, out);
            out.push_str(" \\/ ");
            write_formula(b, 3, out);
        }
        Formula::Implies(a, b) => {
            write_formula(a, 2, out);
            out.push_str(" -> ");
            write_formula(b, 0, out);
        }
        Formula::Exists(x, body) | Formula::Forall(x, body) => {
            out.push_str(if matches!(f, Formula::Exists(..)) { "exists " } else { "forall " });
            out.push_str(x);
            out.push_str(". ");
            write_formula(body, 0, out);
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn formula_to_string(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(f, 0, &mut s);
    s
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&term_to_string(self))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&formula_to_string(self))
    }
}

impl fmt::Display for DefinableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "set {}({})", self.name, self.free_vars.join(","))?;
        if let Some(blocks) = &self.blocks {
            let parts: Vec<String> =
                blocks.iter().map(|(l, vs)| format!("{l}=({})", vs.join(","))).collect();
            write!(f, " blocks {}", parts.join("; "))?;
        }
        write!(f, " := {}", self.formula)
    }
}
