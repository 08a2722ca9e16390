//! Point-equivalence tests for second-order ODEs cubic in the first
//! derivative against the Painlevé I, II and III(0, b, 0, 0) equations.

pub mod classify;
pub mod expr;
pub mod invariants;
pub mod parse;
pub mod transform;

pub use expr::{
    differentiate, evaluate_numeric, is_identically_zero, normalize, substitute, Bindings, EvalError, Expr, ExprError,
    Func, HpFloat, Point, RatFn, SymbolName, Var, Verdict, ZeroVerdict,
};
