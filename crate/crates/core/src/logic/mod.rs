//! First-order formulas over `(M, +, scalars, 0, H)`: syntax, binding, and
//! H-first solving into explicit definable sets.

pub mod bound;
pub mod count;
pub mod linear;
pub mod normal_form;
pub mod parser;
pub mod plan;
pub mod region;
pub mod syntax;

pub use count::{
    count, count_outcome, eval, eval_with_budget, solve, solve_with, CountOutcome, Method, Solved, Strategy,
    DEFAULT_BUDGET,
};
pub use linear::{AffineFlat, Tuple};
pub use normal_form::NormalFormSet;
pub use parser::parse;
pub use region::Region;
pub use syntax::{Atom, Constant, Formula, Range, Summand, Term};
