//! Existential rules over data streams: a LARS⁺ reasoner.

pub mod acyclicity;
pub mod chase;
pub mod fuzz;
pub mod lars;
pub mod reason;
pub mod rewrite;
pub mod semantics;
pub mod syntax;
pub mod term;

pub use lars::{Bcq, NormalAtom, Program, Rule, Stream, Timeline};
pub use reason::{answer, materialize, Answer, AnswerOptions, Gate, Verdict};
pub use term::{Term, TimePoint};
