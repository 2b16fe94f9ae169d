//! The graph engine: a memoized small-step view of commands.
//!
//! Instead of materializing trace sets, a command is unfolded into a
//! residual automaton: for each (command, state) pair we compute whether
//! the command can terminate or abort right now and which labelled steps
//! it can take, each step leading to a residual command. Refinement is
//! then a bounded product search: follow every path of the implementation
//! while tracking the subset of specification residuals that can match it.
//!
//! Fixed points are eliminated lazily. Zero-step self-reference (a loop
//! body that can complete without taking a step) is resolved by Kleene
//! iteration on the step-info itself: least fixed points assume no
//! behaviour, greatest fixed points assume everything, and the assumption
//! is refined until stable.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::command::{Cmd, CmdId, Ctx};
use crate::enum_engine::EngineError;
use crate::state::{StateId, StateRel, StateSet};
use crate::trace::{Label, Status, Trace, TraceSet};

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct StepInfo {
    pub term: bool,
    pub abort: bool,
    pub edges: BTreeSet<(Label, StateId, CmdId)>,
}

impl StepInfo {
    fn union_with(&mut self, other: &StepInfo) {
        self.term |= other.term;
        self.abort |= other.abort;
        self.edges.extend(other.edges.iter().cloned());
    }
}

pub struct GraphEngine<'a> {
    ctx: &'a Ctx,
    n: usize,
    depth: usize,
    memo: HashMap<(CmdId, StateId), StepInfo>,
    /// Current assumptions for fixed-point nodes under iteration.
    assumed: HashMap<(CmdId, StateId), StepInfo>,
}

impl<'a> GraphEngine<'a> {
    pub fn new(ctx: &'a Ctx, depth: usize) -> Self {
        GraphEngine {
            ctx,
            n: ctx.universe_size(),
            depth,
            memo: HashMap::new(),
            assumed: HashMap::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn top_info(&self, sid: StateId) -> StepInfo {
        let _ = sid;
        let top = self.ctx.top();
        let mut edges = BTreeSet::new();
        for label in [Label::Pi, Label::Eps] {
            for post in 0..self.n as u32 {
                edges.insert((label, post, top));
            }
        }
        StepInfo {
            term: true,
            abort: true,
            edges,
        }
    }

    /// Step info for `c` at state `sid`. `ext` collects assumption keys
    /// used along the way; results depending on a foreign in-flight
    /// assumption must not be memoized.
    fn info(
        &mut self,
        c: CmdId,
        sid: StateId,
        ext: &mut HashSet<(CmdId, StateId)>,
    ) -> Result<StepInfo, EngineError> {
        if let Some(i) = self.memo.get(&(c, sid)) {
            return Ok(i.clone());
        }
        if let Some(i) = self.assumed.get(&(c, sid)) {
            ext.insert((c, sid));
            return Ok(i.clone());
        }
        let node = self.ctx.get(c);
        let out = match node {
            Cmd::Bot => StepInfo::default(),
            Cmd::Top => self.top_info(sid),
            Cmd::Test(p) => StepInfo {
                term: p.contains(sid),
                abort: false,
                edges: BTreeSet::new(),
            },
            Cmd::Pgm(r) => {
                let nil = self.ctx.nil();
                let edges = r
                    .successors(sid)
                    .map(|post| (Label::Pi, post, nil))
                    .collect();
                StepInfo {
                    term: false,
                    abort: false,
                    edges,
                }
            }
            Cmd::Env(r) => {
                let nil = self.ctx.nil();
                let edges = r
                    .successors(sid)
                    .map(|post| (Label::Eps, post, nil))
                    .collect();
                StepInfo {
                    term: false,
                    abort: false,
                    edges,
                }
            }
            Cmd::Choice(kids) => {
                let mut acc = StepInfo::default();
                for k in kids {
                    let i = self.info(k, sid, ext)?;
                    acc.union_with(&i);
                }
                acc
            }
            Cmd::Seq(a, b) => {
                let ia = self.info(a, sid, ext)?;
                let mut acc = StepInfo {
                    term: false,
                    abort: ia.abort,
                    edges: ia
                        .edges
                        .iter()
                        .map(|&(l, post, a2)| (l, post, self.ctx.seq(a2, b)))
                        .collect(),
                };
                if ia.term {
                    let ib = self.info(b, sid, ext)?;
                    acc.union_with(&ib);
                }
                acc
            }
            Cmd::Par(a, b) => {
                let ia = self.info(a, sid, ext)?;
                let ib = self.info(b, sid, ext)?;
                let mut edges = BTreeSet::new();
                for &(la, pa, a2) in &ia.edges {
                    for &(lb, pb, b2) in &ib.edges {
                        if pa != pb {
                            continue;
                        }
                        let l = match (la, lb) {
                            (Label::Pi, Label::Eps) | (Label::Eps, Label::Pi) => Label::Pi,
                            (Label::Eps, Label::Eps) => Label::Eps,
                            (Label::Pi, Label::Pi) => continue,
                        };
                        edges.insert((l, pa, self.ctx.par(a2, b2)));
                    }
                }
                StepInfo {
                    term: ia.term && ib.term,
                    // stopping incomplete right here is always possible
                    // for the other operand, so one side aborting aborts
                    // the composition
                    abort: ia.abort || ib.abort,
                    edges,
                }
            }
            Cmd::Conj(a, b) => {
                let ia = self.info(a, sid, ext)?;
                let ib = self.info(b, sid, ext)?;
                let mut edges = BTreeSet::new();
                for &(la, pa, a2) in &ia.edges {
                    for &(lb, pb, b2) in &ib.edges {
                        if la == lb && pa == pb {
                            edges.insert((la, pa, self.ctx.conj(a2, b2)));
                        }
                    }
                }
                StepInfo {
                    term: ia.term && ib.term,
                    abort: ia.abort || ib.abort,
                    edges,
                }
            }
            Cmd::Mu(binder, body) => {
                return self.fix_info(c, sid, binder, body, StepInfo::default(), ext)
            }
            Cmd::Nu(binder, body) => {
                let init = self.top_info(sid);
                return self.fix_info(c, sid, binder, body, init, ext);
            }
            Cmd::Var(_) => return Err(EngineError::UnboundVariable),
        };
        if ext.is_empty() {
            self.memo.insert((c, sid), out.clone());
        }
        Ok(out)
    }

    fn fix_info(
        &mut self,
        node: CmdId,
        sid: StateId,
        binder: u32,
        body: CmdId,
        init: StepInfo,
        ext: &mut HashSet<(CmdId, StateId)>,
    ) -> Result<StepInfo, EngineError> {
        let unfold = self.ctx.subst(body, binder, node);
        let cap = 10 * (self.depth + 1) * self.n.max(1);
        let mut assume = init;
        for _ in 0..cap {
            self.assumed.insert((node, sid), assume.clone());
            let mut deps = HashSet::new();
            let got = self.info(unfold, sid, &mut deps);
            self.assumed.remove(&(node, sid));
            let got = got?;
            deps.remove(&(node, sid));
            if got == assume {
                if deps.is_empty() {
                    self.memo.insert((node, sid), got.clone());
                } else {
                    ext.extend(deps);
                }
                return Ok(got);
            }
            assume = got;
        }
        Err(EngineError::FixpointDivergence { iterations: cap })
    }

    pub fn step_info(&mut self, c: CmdId, sid: StateId) -> Result<StepInfo, EngineError> {
        let mut ext = HashSet::new();
        let out = self.info(c, sid, &mut ext)?;
        debug_assert!(ext.is_empty());
        Ok(out)
    }

    /// Enumerate the bounded language of `c` as an extensional trace set.
    /// Agrees with the enumeration engine by construction of the step
    /// relation; used to check exactly that.
    pub fn language(&mut self, c: CmdId) -> Result<TraceSet, EngineError> {
        let mut out = TraceSet::new(self.depth);
        let mut queue: VecDeque<(Trace, CmdId)> = (0..self.n as u32)
            .map(|sid| (Trace::empty(sid, Status::Incomplete), c))
            .collect();
        while let Some((t, resid)) = queue.pop_front() {
            let i = self.step_info(resid, t.end())?;
            out.insert(t.clone());
            if i.term {
                out.insert(t.with_status(Status::Terminated));
            }
            if i.abort {
                out.insert(t.with_status(Status::Aborted));
            }
            if t.len() < self.depth {
                for &(l, post, next) in &i.edges {
                    let mut u = t.clone();
                    u.push(l, post);
                    queue.push_back((u, next));
                }
            }
        }
        Ok(out)
    }

    /// Does `spec` cover every bounded trace of `imp`? Returns a shortest
    /// uncovered trace when not. The search runs over configurations of
    /// (state, set of spec residuals, imp residual); a specification
    /// residual that can abort covers everything after, so such branches
    /// are pruned as successes.
    pub fn refines(&mut self, spec: CmdId, imp: CmdId) -> Result<Option<Trace>, EngineError> {
        #[derive(Clone)]
        struct Node {
            trace: Trace,
            specs: BTreeSet<CmdId>,
            imp: CmdId,
        }
        let mut queue: VecDeque<Node> = VecDeque::new();
        let mut seen: HashSet<(StateId, Vec<CmdId>, CmdId, usize)> = HashSet::new();
        for sid in 0..self.n as u32 {
            let specs: BTreeSet<CmdId> = [spec].into();
            queue.push_back(Node {
                trace: Trace::empty(sid, Status::Incomplete),
                specs,
                imp,
            });
        }
        while let Some(node) = queue.pop_front() {
            let sid = node.trace.end();
            let key = (
                sid,
                node.specs.iter().cloned().collect::<Vec<_>>(),
                node.imp,
                node.trace.len(),
            );
            if !seen.insert(key) {
                continue;
            }
            let mut spec_term = false;
            let mut spec_abort = false;
            let mut spec_edges: BTreeSet<(Label, StateId, CmdId)> = BTreeSet::new();
            for &s in &node.specs {
                let i = self.step_info(s, sid)?;
                spec_term |= i.term;
                spec_abort |= i.abort;
                spec_edges.extend(i.edges.iter().cloned());
            }
            if spec_abort {
                // abort in the spec covers every continuation
                continue;
            }
            let ii = self.step_info(node.imp, sid)?;
            if ii.abort {
                return Ok(Some(node.trace.with_status(Status::Aborted)));
            }
            if ii.term && !spec_term {
                return Ok(Some(node.trace.with_status(Status::Terminated)));
            }
            if node.trace.len() >= self.depth {
                continue;
            }
            // group imp successors; each must be matched by the subset of
            // spec successors over the same label and post-state
            for &(l, post, inext) in &ii.edges {
                let next_specs: BTreeSet<CmdId> = spec_edges
                    .iter()
                    .filter(|&&(sl, sp, _)| sl == l && sp == post)
                    .map(|&(_, _, s2)| s2)
                    .collect();
                let mut u = node.trace.clone();
                u.push(l, post);
                if next_specs.is_empty() {
                    return Ok(Some(u));
                }
                queue.push_back(Node {
                    trace: u,
                    specs: next_specs,
                    imp: inext,
                });
            }
        }
        Ok(None)
    }

    /// Check that every program transition `c` can take from a state
    /// reachable (under the bound) from `from` lies in `g`. Returns an
    /// offending trace ending in the violating program step.
    pub fn satisfies_guarantee(
        &mut self,
        c: CmdId,
        g: &StateRel,
        from: &StateSet,
    ) -> Result<Option<Trace>, EngineError> {
        let mut queue: VecDeque<(Trace, CmdId)> = from
            .iter()
            .map(|sid| (Trace::empty(sid, Status::Incomplete), c))
            .collect();
        let mut seen: HashSet<(StateId, CmdId, usize)> = HashSet::new();
        while let Some((t, resid)) = queue.pop_front() {
            if !seen.insert((t.end(), resid, t.len())) {
                continue;
            }
            let i = self.step_info(resid, t.end())?;
            if t.len() >= self.depth {
                continue;
            }
            for &(l, post, next) in &i.edges {
                let mut u = t.clone();
                u.push(l, post);
                if l == Label::Pi && !g.contains(t.end(), post) {
                    return Ok(Some(u));
                }
                queue.push_back((u, next));
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enum_engine::EnumEngine;

    fn agree(ctx: &Ctx, c: CmdId, depth: usize) {
        let mut ge = GraphEngine::new(ctx, depth);
        let mut ee = EnumEngine::new(ctx, depth);
        let lang = ge.language(c).unwrap();
        let den = ee.denote(c).unwrap();
        assert_eq!(lang, *den, "graph/enum disagree on {}", ctx.display(c));
    }

    #[test]
    fn primitives_agree() {
        let ctx = Ctx::new(2);
        agree(&ctx, ctx.bot(), 2);
        agree(&ctx, ctx.top(), 2);
        agree(&ctx, ctx.nil(), 2);
        agree(&ctx, ctx.pgm(ctx.univ_rel()), 2);
        agree(&ctx, ctx.env_step(ctx.id_rel()), 2);
    }

    #[test]
    fn compounds_agree() {
        let ctx = Ctx::new(2);
        let p = ctx.pgm(ctx.univ_rel());
        let e = ctx.env_step(ctx.id_rel());
        agree(&ctx, ctx.seq(p, e), 3);
        agree(&ctx, ctx.choice(vec![p, e]), 3);
        agree(&ctx, ctx.par(p, e), 3);
        agree(&ctx, ctx.conj(p, p), 3);
        agree(&ctx, ctx.seq(ctx.top(), p), 2);
    }

    #[test]
    fn iterations_agree() {
        let ctx = Ctx::new(2);
        let p = ctx.pgm(ctx.id_rel());
        agree(&ctx, ctx.fin_iter(p), 3);
        agree(&ctx, ctx.om_iter(p), 3);
        agree(&ctx, ctx.term(), 3);
        agree(&ctx, ctx.idle(), 3);
        agree(&ctx, ctx.rely(&ctx.id_rel()), 2);
        agree(&ctx, ctx.guar(&ctx.id_rel()), 3);
        agree(&ctx, ctx.fair(), 3);
    }

    #[test]
    fn zero_step_loops_agree() {
        let ctx = Ctx::new(2);
        // iterations of a command that can finish without stepping
        agree(&ctx, ctx.fin_iter(ctx.nil()), 2);
        agree(&ctx, ctx.om_iter(ctx.nil()), 2);
        let mut p = crate::state::StateSet::empty(2);
        p.insert(0);
        agree(&ctx, ctx.om_iter(ctx.test(p)), 2);
    }

    #[test]
    fn refinement_agrees_with_enum() {
        let ctx = Ctx::new(2);
        let id = ctx.pgm(ctx.id_rel());
        let any = ctx.pgm(ctx.univ_rel());
        let mut ge = GraphEngine::new(&ctx, 3);
        // any is a spec for id
        assert!(ge.refines(any, id).unwrap().is_none());
        // but id does not cover any
        let cex = ge.refines(id, any).unwrap().unwrap();
        assert_eq!(cex.len(), 1);
        assert_ne!(cex.start, cex.end());
        // top covers everything
        assert!(ge.refines(ctx.top(), ctx.term()).unwrap().is_none());
    }

    #[test]
    fn guarantee_check() {
        let ctx = Ctx::new(2);
        let mut ge = GraphEngine::new(&ctx, 3);
        let full = ctx.full_set();
        let ok = ge
            .satisfies_guarantee(ctx.pgm(ctx.id_rel()), &ctx.id_rel(), &full)
            .unwrap();
        assert!(ok.is_none());
        let bad = ge
            .satisfies_guarantee(ctx.pgm(ctx.univ_rel()), &ctx.id_rel(), &full)
            .unwrap();
        let t = bad.unwrap();
        assert_eq!(t.len(), 1);
        assert_ne!(t.start, t.end());
    }
}
