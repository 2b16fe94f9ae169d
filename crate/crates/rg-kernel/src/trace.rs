//! Labelled traces and bounded trace sets.
//!
//! A trace starts in a state and takes finitely many steps, each labelled
//! as a program or environment transition; it carries a status saying
//! whether it terminated, aborted, or was cut off by the depth bound.
//! Invariants: steps chain (each step's pre-state is the previous step's
//! post-state, the first step's pre-state is the start), and a bounded
//! denotation is prefix-closed (every prefix, re-statused incomplete, is
//! also present).

use std::collections::BTreeSet;
use std::fmt;

use crate::state::StateId;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Label {
    /// Program step.
    Pi,
    /// Environment step.
    Eps,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pi => write!(f, "pi"),
            Label::Eps => write!(f, "eps"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Status {
    /// Cut off by the depth bound (or a fixed point still unrolling).
    Incomplete,
    Terminated,
    Aborted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Incomplete => write!(f, "incomplete"),
            Status::Terminated => write!(f, "terminated"),
            Status::Aborted => write!(f, "aborted"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Step {
    pub label: Label,
    pub pre: StateId,
    pub post: StateId,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Trace {
    pub start: StateId,
    pub steps: Vec<Step>,
    pub status: Status,
}

impl Trace {
    pub fn empty(start: StateId, status: Status) -> Trace {
        Trace {
            start,
            steps: Vec::new(),
            status,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Final state of the trace.
    pub fn end(&self) -> StateId {
        self.steps.last().map(|s| s.post).unwrap_or(self.start)
    }

    /// Steps chain and the first pre-state is the start state.
    pub fn is_chained(&self) -> bool {
        let mut cur = self.start;
        for s in &self.steps {
            if s.pre != cur {
                return false;
            }
            cur = s.post;
        }
        true
    }

    /// The first `k` steps, re-statused.
    pub fn prefix(&self, k: usize, status: Status) -> Trace {
        Trace {
            start: self.start,
            steps: self.steps[..k].to_vec(),
            status,
        }
    }

    /// Same steps, different status.
    pub fn with_status(&self, status: Status) -> Trace {
        Trace {
            start: self.start,
            steps: self.steps.clone(),
            status,
        }
    }

    /// Append `other` after this trace; requires `other.start == self.end()`.
    /// The status is taken from `other` (gluing composition).
    pub fn glue(&self, other: &Trace) -> Trace {
        debug_assert_eq!(other.start, self.end());
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Trace {
            start: self.start,
            steps,
            status: other.status,
        }
    }

    pub fn push(&mut self, label: Label, post: StateId) {
        let pre = self.end();
        self.steps.push(Step { label, pre, post });
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for s in &self.steps {
            write!(f, " -{}-> {}", s.label, s.post)?;
        }
        write!(f, " [{}]", self.status)
    }
}

/// A depth-bounded set of traces: the denotation of a command at a given
/// depth. Ordered extensionally so sets can be compared and diffed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceSet {
    pub depth: usize,
    pub traces: BTreeSet<Trace>,
}

impl TraceSet {
    pub fn new(depth: usize) -> TraceSet {
        TraceSet {
            depth,
            traces: BTreeSet::new(),
        }
    }

    pub fn insert(&mut self, t: Trace) {
        debug_assert!(t.len() <= self.depth);
        self.traces.insert(t);
    }

    pub fn contains(&self, t: &Trace) -> bool {
        self.traces.contains(t)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trace> {
        self.traces.iter()
    }

    /// Every trace chains and respects the depth bound.
    pub fn is_well_formed(&self) -> bool {
        self.traces
            .iter()
            .all(|t| t.is_chained() && t.len() <= self.depth)
    }

    /// Every prefix of every trace, re-statused incomplete, is present.
    /// This includes the same-length prefix: a bounded denotation always
    /// holds the incomplete version of each of its traces.
    pub fn is_prefix_closed(&self) -> bool {
        self.traces.iter().all(|t| {
            (0..=t.len()).all(|k| self.traces.contains(&t.prefix(k, Status::Incomplete)))
        })
    }

    /// Close under incomplete prefixes.
    pub fn prefix_close(&mut self) {
        let mut add = Vec::new();
        for t in &self.traces {
            for k in 0..=t.len() {
                let p = t.prefix(k, Status::Incomplete);
                if !self.traces.contains(&p) {
                    add.push(p);
                }
            }
        }
        for p in add {
            self.traces.insert(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(start: StateId, steps: &[(Label, StateId)], status: Status) -> Trace {
        let mut t = Trace::empty(start, status);
        for &(l, s) in steps {
            t.push(l, s);
        }
        t
    }

    #[test]
    fn chaining() {
        let t = tr(0, &[(Label::Pi, 1), (Label::Eps, 0)], Status::Terminated);
        assert!(t.is_chained());
        assert_eq!(t.end(), 0);
        let bad = Trace {
            start: 0,
            steps: vec![Step {
                label: Label::Pi,
                pre: 1,
                post: 0,
            }],
            status: Status::Terminated,
        };
        assert!(!bad.is_chained());
    }

    #[test]
    fn glue_statuses() {
        let a = tr(0, &[(Label::Pi, 1)], Status::Terminated);
        let b = tr(1, &[(Label::Eps, 2)], Status::Aborted);
        let g = a.glue(&b);
        assert_eq!(g.len(), 2);
        assert_eq!(g.status, Status::Aborted);
        assert!(g.is_chained());
    }

    #[test]
    fn prefix_closure() {
        let mut s = TraceSet::new(2);
        s.insert(tr(0, &[(Label::Pi, 1), (Label::Pi, 0)], Status::Terminated));
        assert!(!s.is_prefix_closed());
        s.prefix_close();
        assert!(s.is_prefix_closed());
        // prefixes of length 0,1,2 plus the original terminated trace
        assert_eq!(s.len(), 4);
        assert!(s.is_well_formed());
    }
}
