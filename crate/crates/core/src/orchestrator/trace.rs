use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// One incumbent improvement: elapsed seconds and solution value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent<S> {
    pub t: S,
    pub cost: S,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("line {line}: malformed trace line {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("event {index}: time goes backwards")]
    TimeDecreasing { index: usize },
    #[error("event {index}: cost does not improve on the previous incumbent")]
    NotImproving { index: usize },
    #[error("event {index}: time or cost is negative or not finite")]
    OutOfRange { index: usize },
    #[error("terminal time precedes the last event")]
    TerminalTime,
}

/// A trace line that was accepted syntactically but discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for TraceWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Incumbent values over time.
///
/// Times are nondecreasing, costs strictly decreasing, and every event lies
/// in `[0, terminal_time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrace<S>")]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct Trace<S> {
    events: Vec<TraceEvent<S>>,
    terminal_time: S,
}

#[derive(Deserialize)]
struct RawTrace<S> {
    events: Vec<TraceEvent<S>>,
    terminal_time: S,
}

impl<S: Scalar> TryFrom<RawTrace<S>> for Trace<S> {
    type Error = TraceError;
    fn try_from(raw: RawTrace<S>) -> Result<Self, TraceError> {
        Trace::new(raw.events, raw.terminal_time)
    }
}

impl<S: Scalar> Trace<S> {
    pub fn new(events: Vec<TraceEvent<S>>, terminal_time: S) -> Result<Self, TraceError> {
        let mut trace = Trace::empty(S::zero());
        for e in events {
            trace.push(e.t, e.cost)?;
        }
        trace.set_terminal_time(terminal_time)?;
        Ok(trace)
    }

    pub fn empty(terminal_time: S) -> Self {
        Trace {
            events: Vec::new(),
            terminal_time: terminal_time.max(S::zero()),
        }
    }

    /// Builds a trace from `(t, cost)` pairs, ending at the last event.
    pub fn from_pairs(pairs: &[(S, S)]) -> Result<Self, TraceError> {
        let end = pairs.last().map_or(S::zero(), |p| p.0);
        Trace::new(pairs.iter().map(|&(t, cost)| TraceEvent { t, cost }).collect(), end)
    }

    /// Appends an event; the terminal time is extended to cover it.
    pub fn push(&mut self, t: S, cost: S) -> Result<(), TraceError> {
        let index = self.events.len();
        if !(t.is_finite() && cost.is_finite()) || t < S::zero() {
            return Err(TraceError::OutOfRange { index });
        }
        if let Some(last) = self.events.last() {
            if t < last.t {
                return Err(TraceError::TimeDecreasing { index });
            }
            if cost >= last.cost {
                return Err(TraceError::NotImproving { index });
            }
        }
        self.events.push(TraceEvent { t, cost });
        self.terminal_time = self.terminal_time.max(t);
        Ok(())
    }

    pub fn set_terminal_time(&mut self, t: S) -> Result<(), TraceError> {
        if !t.is_finite() || self.events.last().is_some_and(|e| t < e.t) || t < S::zero() {
            return Err(TraceError::TerminalTime);
        }
        self.terminal_time = t;
        Ok(())
    }

    pub fn events(&self) -> &[TraceEvent<S>] {
        &self.events
    }

    pub fn terminal_time(&self) -> S {
        self.terminal_time
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn final_cost(&self) -> Option<S> {
        self.events.last().map(|e| e.cost)
    }

    /// Incumbent value in effect at time `t` (right-continuous).
    pub fn incumbent_at(&self, t: S) -> Option<S> {
        let idx = self.events.partition_point(|e| e.t <= t);
        idx.checked_sub(1).map(|i| self.events[i].cost)
    }

    /// Writes the trace in the `TRACE <t> <cost>` wire format.
    pub fn to_wire(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format!("TRACE {} {}\n", e.t, e.cost));
        }
        out
    }
}

/// Parses one `TRACE <t> <cost>` line.
pub(crate) fn parse_trace_line<S: Scalar>(line: &str) -> Option<(S, S)> {
    let mut it = line.split_whitespace();
    if it.next()? != "TRACE" {
        return None;
    }
    let t = S::from_f64(it.next()?.parse::<f64>().ok()?)?;
    let cost = S::from_f64(it.next()?.parse::<f64>().ok()?)?;
    if it.next().is_some() {
        return None;
    }
    Some((t, cost))
}

/// Reads a trace in wire format. Blank lines are skipped; events that do not
/// improve on the current incumbent are dropped with a warning.
pub fn parse_trace<S: Scalar, R: BufRead>(reader: R) -> Result<(Trace<S>, Vec<TraceWarning>), TraceError> {
    let mut trace = Trace::empty(S::zero());
    let mut warnings = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| TraceError::MalformedLine {
            line: line_no,
            text: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (t, cost) = parse_trace_line::<S>(&line).ok_or_else(|| TraceError::MalformedLine {
            line: line_no,
            text: line.clone(),
        })?;
        match trace.push(t, cost) {
            Ok(()) => {}
            Err(TraceError::NotImproving { .. }) => warnings.push(TraceWarning {
                line: line_no,
                message: format!("dropped non-improving incumbent {cost} at t={t}"),
            }),
            Err(TraceError::TimeDecreasing { .. }) | Err(TraceError::OutOfRange { .. }) => {
                return Err(TraceError::MalformedLine { line: line_no, text: line })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((trace, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(Trace<f64>, Vec<TraceWarning>), TraceError> {
        parse_trace(text.as_bytes())
    }

    #[test]
    fn improving_lines() {
        let (t, w) = parse("TRACE 1 110\nTRACE 5 100\n").unwrap();
        assert_eq!(t.len(), 2);
        assert!(w.is_empty());
        assert_eq!(t.final_cost(), Some(100.0));
        assert_eq!(t.terminal_time(), 5.0);
    }

    #[test]
    fn worsening_dropped_with_warning() {
        let (t, w) = parse("TRACE 1 100\nTRACE 5 110\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].line, 2);
    }

    #[test]
    fn empty_and_malformed() {
        let (t, _) = parse("").unwrap();
        assert!(t.is_empty());
        assert_eq!(
            parse("TRACE 1 100\nhello\n"),
            Err(TraceError::MalformedLine { line: 2, text: "hello".into() })
        );
        assert!(parse("TRACE 1\n").is_err());
        assert!(parse("TRACE 1 2 3\n").is_err());
        assert!(parse("TRACE -1 2\n").is_err());
        assert!(parse("TRACE 3 10\nTRACE 2 5\n").is_err());
    }

    #[test]
    fn incumbent_lookup() {
        let t = Trace::from_pairs(&[(1.0, 10.0), (3.0, 8.0)]).unwrap();
        assert_eq!(t.incumbent_at(0.5), None);
        assert_eq!(t.incumbent_at(1.0), Some(10.0));
        assert_eq!(t.incumbent_at(2.9), Some(10.0));
        assert_eq!(t.incumbent_at(3.0), Some(8.0));
    }

    #[test]
    fn serde_validates() {
        let t = Trace::from_pairs(&[(1.0, 10.0), (3.0, 8.0)]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<Trace<f64>>(&json).unwrap(), t);
        let bad = r#"{"events":[{"t":1,"cost":5},{"t":2,"cost":6}],"terminal_time":2}"#;
        assert!(serde_json::from_str::<Trace<f64>>(bad).is_err());
        let early = r#"{"events":[{"t":4,"cost":5}],"terminal_time":2}"#;
        assert!(serde_json::from_str::<Trace<f64>>(early).is_err());
    }

    #[test]
    fn wire_round_trip() {
        let t = Trace::from_pairs(&[(0.25, 10.5), (3.0, 8.0)]).unwrap();
        let (back, _) = parse(&t.to_wire()).unwrap();
        assert_eq!(back, t);
    }
}
