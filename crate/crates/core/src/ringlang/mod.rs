//! The first-order language of rings: syntax, parsing, printing and
//! evaluation over finite fields.

pub mod ast;
pub mod eval;
pub mod parser;
pub mod printer;
pub mod roots;

pub use ast::{free_vars, DefinableSet, Formula, Term};
pub use eval::{eval_formula, eval_formula_with, Program, Strategy};
pub use parser::{parse_formula, parse_set, parse_set_with_params};
