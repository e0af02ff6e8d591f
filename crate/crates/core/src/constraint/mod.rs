//! Constraint sets over time: □-closure, Skolemization, guards and the
//! Q-store.

pub mod guard;
pub mod qstore;
pub mod skolem;
pub mod timed;

pub use guard::{atom_poly, entails_guard, eval_atom, EvalError, Valuation};
pub use qstore::{expand_consequent, QStore};
pub use skolem::{is_skolem, skolem_base, skolemize, SkolemContext};
pub use timed::{close_at_instant, ConstraintSet, Piece, TimedConstraintSet};
