use std::fmt;

use super::StlError;

/// Closed time window `[a, b]` relative to the evaluation instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, StlError> {
        if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 || a > b {
            return Err(StlError::MalformedInterval { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Lt => value < threshold,
            Comparator::Le => value <= threshold,
            Comparator::Gt => value > threshold,
            Comparator::Ge => value >= threshold,
        }
    }

    /// Signed margin; strict and non-strict forms share it.
    pub fn margin(self, value: f64, threshold: f64) -> f64 {
        match self {
            Comparator::Lt | Comparator::Le => threshold - value,
            Comparator::Gt | Comparator::Ge => value - threshold,
        }
    }
}

/// `signal ~ threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub signal: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

impl Predicate {
    pub fn new(signal: impl Into<String>, comparator: Comparator, threshold: f64) -> Result<Self, StlError> {
        let signal = signal.into();
        if signal.is_empty() {
            return Err(StlError::InvalidPredicate("empty signal name".into()));
        }
        if !threshold.is_finite() {
            return Err(StlError::InvalidPredicate(format!(
                "threshold for {signal} must be finite"
            )));
        }
        Ok(Self {
            signal,
            comparator,
            threshold,
        })
    }
}

/// STL formula tree. A temporal operator with `None` interval ranges over
/// every sample from the evaluation instant to the end of the trace.
///
/// Implication is not a node: `a -> b` is built as `!a | b`.
#[derive(Debug, Clone, PartialEq)]
pub enum StlFormula {
    True,
    Pred(Predicate),
    Not(Box<StlFormula>),
    And(Box<StlFormula>, Box<StlFormula>),
    Or(Box<StlFormula>, Box<StlFormula>),
    Eventually(Option<Interval>, Box<StlFormula>),
    Always(Option<Interval>, Box<StlFormula>),
    Until(Option<Interval>, Box<StlFormula>, Box<StlFormula>),
}

impl StlFormula {
    pub fn pred(signal: &str, comparator: Comparator, threshold: f64) -> StlFormula {
        StlFormula::Pred(Predicate::new(signal, comparator, threshold).expect("valid predicate literal"))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: StlFormula) -> StlFormula {
        StlFormula::Not(Box::new(phi))
    }

    pub fn and(lhs: StlFormula, rhs: StlFormula) -> StlFormula {
        StlFormula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: StlFormula, rhs: StlFormula) -> StlFormula {
        StlFormula::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn implies(lhs: StlFormula, rhs: StlFormula) -> StlFormula {
        StlFormula::or(StlFormula::not(lhs), rhs)
    }

    pub fn eventually(interval: Option<Interval>, phi: StlFormula) -> StlFormula {
        StlFormula::Eventually(interval, Box::new(phi))
    }

    pub fn always(interval: Option<Interval>, phi: StlFormula) -> StlFormula {
        StlFormula::Always(interval, Box::new(phi))
    }

    pub fn until(interval: Option<Interval>, lhs: StlFormula, rhs: StlFormula) -> StlFormula {
        StlFormula::Until(interval, Box::new(lhs), Box::new(rhs))
    }

    pub fn depth(&self) -> usize {
        match self {
            StlFormula::True | StlFormula::Pred(_) => 1,
            StlFormula::Not(a) | StlFormula::Eventually(_, a) | StlFormula::Always(_, a) => 1 + a.depth(),
            StlFormula::And(a, b) | StlFormula::Or(a, b) | StlFormula::Until(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Signal names referenced by predicates, in first-occurrence order.
    pub fn signals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_signals(&mut out);
        out
    }

    fn collect_signals<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            StlFormula::True => {}
            StlFormula::Pred(p) => {
                if !out.contains(&p.signal.as_str()) {
                    out.push(&p.signal);
                }
            }
            StlFormula::Not(a) | StlFormula::Eventually(_, a) | StlFormula::Always(_, a) => a.collect_signals(out),
            StlFormula::And(a, b) | StlFormula::Or(a, b) | StlFormula::Until(_, a, b) => {
                a.collect_signals(out);
                b.collect_signals(out);
            }
        }
    }
}

fn fmt_window(f: &mut fmt::Formatter<'_>, interval: &Option<Interval>) -> fmt::Result {
    match interval {
        Some(i) => write!(f, "[{},{}]", i.a, i.b),
        None => Ok(()),
    }
}

/// Fully parenthesized concrete syntax; parses back to the same tree.
impl fmt::Display for StlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StlFormula::True => f.write_str("true"),
            StlFormula::Pred(p) => {
                write!(f, "{} {} {}", p.signal, p.comparator.symbol(), p.threshold)
            }
            StlFormula::Not(a) => write!(f, "!({a})"),
            StlFormula::And(a, b) => write!(f, "({a} & {b})"),
            StlFormula::Or(a, b) => write!(f, "({a} | {b})"),
            StlFormula::Eventually(i, a) => {
                f.write_str("F")?;
                fmt_window(f, i)?;
                write!(f, "({a})")
            }
            StlFormula::Always(i, a) => {
                f.write_str("G")?;
                fmt_window(f, i)?;
                write!(f, "({a})")
            }
            StlFormula::Until(i, a, b) => {
                write!(f, "(({a}) U")?;
                fmt_window(f, i)?;
                write!(f, "({b}))")
            }
        }
    }
}
