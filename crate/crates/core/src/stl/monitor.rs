//! Discrete-time monitoring over sampled traces.
//!
//! Both semantics share one evaluator: booleans are ordered `false < true`,
//! so conjunction and disjunction are `min` and `max` in either domain.

use std::collections::VecDeque;

use super::ast::{Interval, Predicate, StlFormula};
use super::signal::Trace;
use super::StlError;

/// Robustness of `G` over an empty window (and the negation of `F`'s).
pub const EMPTY_WINDOW_ROBUSTNESS: f64 = f64::MAX;

/// Outcome of monitoring a formula at the start of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub satisfied: bool,
    pub robustness: f64,
}

trait Semantics: Copy {
    const TRUE: Self;
    const VACUOUS: Self;
    const IMPOSSIBLE: Self;
    fn predicate(p: &Predicate, value: f64) -> Self;
    fn negate(self) -> Self;
    fn meet(self, other: Self) -> Self;
    fn join(self, other: Self) -> Self;
    /// `self` strictly better than `other` under the ordering used by `join`.
    fn above(self, other: Self) -> bool;
}

impl Semantics for bool {
    const TRUE: Self = true;
    const VACUOUS: Self = true;
    const IMPOSSIBLE: Self = false;

    fn predicate(p: &Predicate, value: f64) -> Self {
        p.comparator.holds(value, p.threshold)
    }
    fn negate(self) -> Self {
        !self
    }
    fn meet(self, other: Self) -> Self {
        self && other
    }
    fn join(self, other: Self) -> Self {
        self || other
    }
    fn above(self, other: Self) -> bool {
        self & !other
    }
}

impl Semantics for f64 {
    const TRUE: Self = f64::INFINITY;
    const VACUOUS: Self = EMPTY_WINDOW_ROBUSTNESS;
    const IMPOSSIBLE: Self = -EMPTY_WINDOW_ROBUSTNESS;

    fn predicate(p: &Predicate, value: f64) -> Self {
        p.comparator.margin(value, p.threshold)
    }
    fn negate(self) -> Self {
        -self
    }
    fn meet(self, other: Self) -> Self {
        self.min(other)
    }
    fn join(self, other: Self) -> Self {
        self.max(other)
    }
    fn above(self, other: Self) -> bool {
        self > other
    }
}

/// Half-open sample ranges `[lo, hi)` whose timestamps fall in `t_i + I`.
fn windows(timestamps: &[f64], interval: &Option<Interval>) -> Vec<(usize, usize)> {
    let n = timestamps.len();
    match interval {
        None => (0..n).map(|i| (i, n)).collect(),
        Some(iv) => {
            let mut lo = 0;
            let mut hi = 0;
            timestamps
                .iter()
                .map(|&t| {
                    let (from, to) = (t + iv.start(), t + iv.end());
                    while lo < n && timestamps[lo] < from {
                        lo += 1;
                    }
                    hi = hi.max(lo);
                    while hi < n && timestamps[hi] <= to {
                        hi += 1;
                    }
                    (lo, hi.max(lo))
                })
                .collect()
        }
    }
}

/// Sliding extremum over monotone windows. `take_max` selects join, else meet.
fn sliding<V: Semantics>(values: &[V], wins: &[(usize, usize)], take_max: bool, empty: V) -> Vec<V> {
    let better = |a: V, b: V| if take_max { a.above(b) } else { b.above(a) };
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut pushed = 0;
    wins.iter()
        .map(|&(lo, hi)| {
            while pushed < hi {
                while let Some(&back) = deque.back() {
                    if !better(values[back], values[pushed]) {
                        deque.pop_back();
                    } else {
                        break;
                    }
                }
                deque.push_back(pushed);
                pushed += 1;
            }
            while deque.front().is_some_and(|&f| f < lo) {
                deque.pop_front();
            }
            if lo >= hi {
                empty
            } else {
                values[*deque.front().expect("non-empty window")]
            }
        })
        .collect()
}

fn until<V: Semantics>(lhs: &[V], rhs: &[V], wins: &[(usize, usize)]) -> Vec<V> {
    wins.iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let mut acc: Option<V> = None;
            let mut guard = V::TRUE;
            for k in i..hi {
                guard = guard.meet(lhs[k]);
                if k >= lo {
                    let here = rhs[k].meet(guard);
                    acc = Some(acc.map_or(here, |a| a.join(here)));
                }
            }
            acc.unwrap_or(V::IMPOSSIBLE)
        })
        .collect()
}

fn eval<V: Semantics>(formula: &StlFormula, trace: &Trace) -> Result<Vec<V>, StlError> {
    let n = trace.len();
    Ok(match formula {
        StlFormula::True => vec![V::TRUE; n],
        StlFormula::Pred(p) => trace
            .values(&p.signal)
            .ok_or_else(|| StlError::UnboundSignal(p.signal.clone()))?
            .iter()
            .map(|&v| V::predicate(p, v))
            .collect(),
        StlFormula::Not(a) => eval::<V>(a, trace)?.into_iter().map(V::negate).collect(),
        StlFormula::And(a, b) => {
            let (a, b) = (eval::<V>(a, trace)?, eval::<V>(b, trace)?);
            a.into_iter().zip(b).map(|(x, y)| x.meet(y)).collect()
        }
        StlFormula::Or(a, b) => {
            let (a, b) = (eval::<V>(a, trace)?, eval::<V>(b, trace)?);
            a.into_iter().zip(b).map(|(x, y)| x.join(y)).collect()
        }
        StlFormula::Eventually(iv, a) => {
            let values = eval::<V>(a, trace)?;
            sliding(&values, &windows(trace.timestamps(), iv), true, V::IMPOSSIBLE)
        }
        StlFormula::Always(iv, a) => {
            let values = eval::<V>(a, trace)?;
            sliding(&values, &windows(trace.timestamps(), iv), false, V::VACUOUS)
        }
        StlFormula::Until(iv, a, b) => {
            let (a, b) = (eval::<V>(a, trace)?, eval::<V>(b, trace)?);
            until(&a, &b, &windows(trace.timestamps(), iv))
        }
    })
}

fn check(formula: &StlFormula, trace: &Trace, t_index: usize) -> Result<(), StlError> {
    if t_index >= trace.len() {
        return Err(StlError::IndexOutOfRange {
            index: t_index,
            len: trace.len(),
        });
    }
    if let Some(name) = formula.signals().into_iter().find(|s| trace.values(s).is_none()) {
        return Err(StlError::UnboundSignal(name.to_owned()));
    }
    Ok(())
}

/// Boolean satisfaction of `formula` at sample `t_index`.
pub fn monitor_bool(formula: &StlFormula, trace: &Trace, t_index: usize) -> Result<bool, StlError> {
    check(formula, trace, t_index)?;
    Ok(eval::<bool>(formula, trace)?[t_index])
}

/// Quantitative (max/min) robustness of `formula` at sample `t_index`.
pub fn monitor_robust(formula: &StlFormula, trace: &Trace, t_index: usize) -> Result<f64, StlError> {
    check(formula, trace, t_index)?;
    Ok(eval::<f64>(formula, trace)?[t_index])
}

/// Robustness at every sample index.
pub fn robustness_signal(formula: &StlFormula, trace: &Trace) -> Result<Vec<f64>, StlError> {
    check(formula, trace, 0)?;
    eval::<f64>(formula, trace)
}

/// Both semantics at the first sample.
pub fn monitor(formula: &StlFormula, trace: &Trace) -> Result<Verdict, StlError> {
    Ok(Verdict {
        satisfied: monitor_bool(formula, trace, 0)?,
        robustness: monitor_robust(formula, trace, 0)?,
    })
}
