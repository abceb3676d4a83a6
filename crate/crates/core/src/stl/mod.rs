//! Signal temporal logic: concrete syntax, formula trees, and discrete-time
//! boolean and robustness monitoring over sampled traces.

mod ast;
mod monitor;
mod parser;
mod signal;

pub use ast::{Comparator, Interval, Predicate, StlFormula};
pub use monitor::{monitor, monitor_bool, monitor_robust, robustness_signal, Verdict, EMPTY_WINDOW_ROBUSTNESS};
pub use parser::parse_stl;
pub use signal::{SampledSignal, Trace};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("syntax error at {line}:{column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown operator `{op}` at {line}:{column}")]
    UnknownOperator { op: String, line: usize, column: usize },
    #[error("malformed interval [{a}, {b}]: need 0 <= a <= b, both finite")]
    MalformedInterval { a: f64, b: f64 },
    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),
    #[error("signal `{0}` is not bound in the trace")]
    UnboundSignal(String),
    #[error("sample index {index} out of range for trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
}
