//! The enumeration engine: denotes a command as the literal set of its
//! traces up to a step-depth bound. This is the executable definition the
//! graph engine is checked against.
//!
//! Conventions baked into every denotation:
//! - the zero-step incomplete trace at every state is present (running a
//!   command for zero steps is always a partial behaviour);
//! - sets are prefix-closed: every prefix of a trace, re-statused
//!   incomplete, is present (including the same-length re-statusing);
//! - abort closure is not materialized. A trace whose prefix aborts is
//!   accounted for by the coverage relation [`covers`], not by storing
//!   every continuation.
//! - gluing a composition past the depth bound truncates to the bound
//!   with incomplete status.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::command::{Cmd, CmdId, Ctx};
use crate::trace::{Label, Status, Trace, TraceSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("fixed-point iteration did not converge within {iterations} rounds")]
    FixpointDivergence { iterations: usize },
    #[error("free fixed-point variable in command")]
    UnboundVariable,
}

pub struct EnumEngine<'a> {
    ctx: &'a Ctx,
    n: usize,
    depth: usize,
    memo: HashMap<CmdId, Rc<TraceSet>>,
}

impl<'a> EnumEngine<'a> {
    pub fn new(ctx: &'a Ctx, depth: usize) -> Self {
        EnumEngine {
            ctx,
            n: ctx.universe_size(),
            depth,
            memo: HashMap::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn baseline(&self) -> TraceSet {
        let mut s = TraceSet::new(self.depth);
        for sid in 0..self.n as u32 {
            s.insert(Trace::empty(sid, Status::Incomplete));
        }
        s
    }

    /// All chained traces up to the depth bound, in every status.
    fn top_set(&self) -> TraceSet {
        let mut s = self.baseline();
        let mut frontier: Vec<Trace> = (0..self.n as u32)
            .map(|sid| Trace::empty(sid, Status::Incomplete))
            .collect();
        for t in &frontier {
            s.insert(t.with_status(Status::Terminated));
            s.insert(t.with_status(Status::Aborted));
        }
        for _ in 0..self.depth {
            let mut next = Vec::new();
            for t in &frontier {
                for label in [Label::Pi, Label::Eps] {
                    for post in 0..self.n as u32 {
                        let mut u = t.clone();
                        u.push(label, post);
                        s.insert(u.with_status(Status::Terminated));
                        s.insert(u.with_status(Status::Aborted));
                        s.insert(u.clone());
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        s
    }

    pub fn denote(&mut self, c: CmdId) -> Result<Rc<TraceSet>, EngineError> {
        if let Some(s) = self.memo.get(&c) {
            return Ok(Rc::clone(s));
        }
        let node = self.ctx.get(c);
        let mut out = match node {
            Cmd::Bot => self.baseline(),
            Cmd::Top => self.top_set(),
            Cmd::Test(p) => {
                let mut s = self.baseline();
                for sid in p.iter() {
                    s.insert(Trace::empty(sid, Status::Terminated));
                }
                s
            }
            Cmd::Pgm(r) => {
                let mut s = self.baseline();
                if self.depth >= 1 {
                    for (a, b) in r.pairs() {
                        let mut t = Trace::empty(a, Status::Terminated);
                        t.push(Label::Pi, b);
                        s.insert(t);
                    }
                }
                s
            }
            Cmd::Env(r) => {
                let mut s = self.baseline();
                if self.depth >= 1 {
                    for (a, b) in r.pairs() {
                        let mut t = Trace::empty(a, Status::Terminated);
                        t.push(Label::Eps, b);
                        s.insert(t);
                    }
                }
                s
            }
            Cmd::Choice(kids) => {
                let mut s = self.baseline();
                for k in kids {
                    let d = self.denote(k)?;
                    for t in d.iter() {
                        s.insert(t.clone());
                    }
                }
                s
            }
            Cmd::Seq(a, b) => {
                let da = self.denote(a)?;
                let db = self.denote(b)?;
                // index second operand by start state
                let mut by_start: Vec<Vec<&Trace>> = vec![Vec::new(); self.n];
                for u in db.iter() {
                    by_start[u.start as usize].push(u);
                }
                let mut s = TraceSet::new(self.depth);
                for t in da.iter() {
                    match t.status {
                        Status::Terminated => {
                            for u in &by_start[t.end() as usize] {
                                let mut g = t.glue(u);
                                if g.len() > self.depth {
                                    g = g.prefix(self.depth, Status::Incomplete);
                                }
                                s.insert(g);
                            }
                        }
                        Status::Incomplete | Status::Aborted => s.insert(t.clone()),
                    }
                }
                s
            }
            Cmd::Par(a, b) => {
                let da = self.denote(a)?;
                let db = self.denote(b)?;
                // match traces with identical start and state sequence
                let mut by_shape: HashMap<(u32, Vec<u32>), Vec<&Trace>> = HashMap::new();
                for u in db.iter() {
                    let shape = (u.start, u.steps.iter().map(|s| s.post).collect());
                    by_shape.entry(shape).or_default().push(u);
                }
                let mut s = self.baseline();
                for t in da.iter() {
                    let shape = (t.start, t.steps.iter().map(|s| s.post).collect());
                    let Some(partners) = by_shape.get(&shape) else {
                        continue;
                    };
                    'partner: for u in partners {
                        let mut merged = Trace::empty(t.start, combine_status(t.status, u.status));
                        for (st, su) in t.steps.iter().zip(&u.steps) {
                            let Some(l) = combine_label(st.label, su.label) else {
                                continue 'partner;
                            };
                            merged.push(l, st.post);
                        }
                        s.insert(merged);
                    }
                }
                s
            }
            Cmd::Conj(a, b) => {
                let da = self.denote(a)?;
                let db = self.denote(b)?;
                let mut s = TraceSet::new(self.depth);
                for t in da.iter() {
                    if db.contains(t) {
                        s.insert(t.clone());
                    } else if t.status == Status::Aborted
                        && db.contains(&t.with_status(Status::Incomplete))
                    {
                        // weak conjunction: an abort of one side wins as
                        // long as the other side can follow the steps
                        s.insert(t.clone());
                    }
                }
                for u in db.iter() {
                    if u.status == Status::Aborted && da.contains(&u.with_status(Status::Incomplete))
                    {
                        s.insert(u.clone());
                    }
                }
                s
            }
            Cmd::Mu(binder, body) => self.fixpoint(binder, body, self.ctx.bot())?,
            Cmd::Nu(binder, body) => self.fixpoint(binder, body, self.ctx.top())?,
            Cmd::Var(_) => return Err(EngineError::UnboundVariable),
        };
        out.prefix_close();
        debug_assert!(out.is_well_formed());
        let out = Rc::new(out);
        self.memo.insert(c, Rc::clone(&out));
        Ok(out)
    }

    /// Kleene iteration by substitution, converging on depth-bounded
    /// denotation equality.
    fn fixpoint(
        &mut self,
        binder: u32,
        body: CmdId,
        start: CmdId,
    ) -> Result<TraceSet, EngineError> {
        let cap = 10 * (self.depth + 1) * self.n.max(1);
        let mut cur = start;
        let mut cur_den = self.denote(cur)?;
        for _ in 0..cap {
            let next = self.ctx.subst(body, binder, cur);
            let next_den = self.denote(next)?;
            if next_den == cur_den {
                return Ok((*cur_den).clone());
            }
            cur = next;
            cur_den = next_den;
        }
        Err(EngineError::FixpointDivergence { iterations: cap })
    }
}

fn combine_label(a: Label, b: Label) -> Option<Label> {
    match (a, b) {
        (Label::Pi, Label::Eps) | (Label::Eps, Label::Pi) => Some(Label::Pi),
        (Label::Eps, Label::Eps) => Some(Label::Eps),
        (Label::Pi, Label::Pi) => None,
    }
}

fn combine_status(a: Status, b: Status) -> Status {
    use Status::*;
    match (a, b) {
        (Aborted, _) | (_, Aborted) => Aborted,
        (Terminated, Terminated) => Terminated,
        _ => Incomplete,
    }
}

/// A trace `t` is covered by a denotation when it is in the set, or some
/// prefix of it re-statused as aborted is (abort licenses anything after).
pub fn covers(set: &TraceSet, t: &Trace) -> bool {
    if set.contains(t) {
        return true;
    }
    (0..=t.len()).any(|k| set.contains(&t.prefix(k, Status::Aborted)))
}

/// Refinement between denotations: every trace of `impl_set` is covered by
/// `spec_set`. Returns a shortest uncovered trace as counterexample,
/// breaking ties by trace order.
pub fn refines_sets(spec_set: &TraceSet, impl_set: &TraceSet) -> Option<Trace> {
    let mut worst: Option<&Trace> = None;
    for t in impl_set.iter() {
        if !covers(spec_set, t) {
            let better = match worst {
                None => true,
                Some(w) => (t.len(), t) < (w.len(), w),
            };
            if better {
                worst = Some(t);
            }
        }
    }
    worst.cloned()
}
