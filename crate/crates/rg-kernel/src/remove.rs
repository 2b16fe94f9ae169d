//! Case study: removing an element from a shared set with a CAS retry
//! loop, under interference that may itself shrink the set.
//!
//! Two set-valued variables over a micro element universe: `w` is the
//! shared set, `sample` the thread-local snapshot. The environment may
//! remove elements from `w` (never add) and leaves `sample` alone; the
//! program may only remove the target element `i` from `w`. The code
//! retries `CAS(w, sample, sample - {i})` until `i` is gone — possibly
//! because the interference removed it first (the early exit).

use crate::command::{
    assign, eval_in_state, while_loop, BinOp, CmdId, Ctx, Expr, LvExpr, VariantSpec,
};
use crate::graph_engine::GraphEngine;
use crate::laws::{check_while_theorem, RuleReport, WhileInstance};
use crate::refine::{equals, refines, Engine, Verdict};
use crate::state::{
    Domain, Elem, LValue, SmallSet, StateRel, StateSet, StateSpace, StateSpaceDecl, Value,
};
use crate::trace::{Label, Status, Trace};

#[derive(Clone, Debug)]
pub struct RemoveConfig {
    /// Element universe for the set variables.
    pub elems: Vec<Elem>,
    /// The element to remove.
    pub i: Elem,
    pub depth: usize,
    pub engine: Engine,
    /// Negative variation: drop the rely down to the universal relation.
    pub weaken_rely_to_univ: bool,
    /// Negative variation: demand the program never changes anything.
    pub strengthen_guar_to_identity: bool,
}

impl Default for RemoveConfig {
    fn default() -> Self {
        RemoveConfig {
            elems: vec![0, 1],
            i: 0,
            depth: 8,
            engine: Engine::Graph,
            weaken_rely_to_univ: false,
            strengthen_guar_to_identity: false,
        }
    }
}

pub struct RemoveModel {
    pub space: StateSpace,
    pub ctx: Ctx,
    pub rely: StateRel,
    pub guar: StateRel,
    /// Postcondition: the final state has `i` out of `w`.
    pub post: StateRel,
    pub p_x: StateSet,
    pub guard: Expr,
    pub variant: VariantSpec,
}

fn set_val(space: &StateSpace, sid: u32, name: &str) -> SmallSet {
    space
        .value(sid, &LValue::base(name))
        .and_then(|v| v.as_set())
        .expect("set-valued variable")
}

impl RemoveModel {
    pub fn new(cfg: &RemoveConfig) -> Self {
        let space = StateSpaceDecl::new()
            .var("w", Domain::SetsOver(cfg.elems.clone()))
            .var("sample", Domain::SetsOver(cfg.elems.clone()))
            .build()
            .expect("remove state space");
        let ctx = Ctx::for_space(&space);
        let i = cfg.i;
        let rely = if cfg.weaken_rely_to_univ {
            space.univ_rel()
        } else {
            // environment may only shrink w and must preserve the local
            // sample
            space.rel_where(|a, b| {
                set_val(&space, b, "w").is_subset(&set_val(&space, a, "w"))
                    && set_val(&space, a, "sample") == set_val(&space, b, "sample")
            })
        };
        let guar = if cfg.strengthen_guar_to_identity {
            space.identity_rel()
        } else {
            // program removes at most i from w and never grows it;
            // sample is its own local variable
            space.rel_where(|a, b| {
                let wa = set_val(&space, a, "w");
                let wb = set_val(&space, b, "w");
                wa.diff(&wb).is_subset(&SmallSet::from_elems(&[i])) && wb.is_subset(&wa)
            })
        };
        let post = space.rel_where(|_, b| !set_val(&space, b, "w").contains(i));
        let p_x = space.set_where(|s| !set_val(&space, s, "w").contains(i));
        let guard = Expr::bin(
            Expr::konst(Value::Int(i as i64)),
            BinOp::In,
            Expr::deref_var("w"),
        );
        let variant = VariantSpec::strict_subset(Expr::deref_var("w"), &cfg.elems);
        RemoveModel {
            space,
            ctx,
            rely,
            guar,
            post,
            p_x,
            guard,
            variant,
        }
    }

    /// rely(r) ⋒ guar(g) ⋒ postcondition specification.
    pub fn spec(&self) -> CmdId {
        let c = self.ctx.conj(
            self.ctx.guar(&self.guar),
            self.ctx.post_spec(&self.post),
        );
        self.ctx.conj(self.ctx.rely(&self.rely), c)
    }

    /// `sample := w; CAS(w, sample, sample - {i})` — one loop iteration.
    pub fn body(&self, i: Elem) -> CmdId {
        let read = assign(
            &self.ctx,
            &self.space,
            &LvExpr::Variable("sample".into()),
            &Expr::deref_var("w"),
        );
        let old = Expr::deref_var("sample");
        let new = Expr::bin(
            Expr::deref_var("sample"),
            BinOp::Sub,
            Expr::konst(Value::set_from(&[i])),
        );
        self.ctx.seq(read, cas(&self.ctx, &self.space, "w", &old, &new))
    }

    pub fn code(&self, i: Elem) -> CmdId {
        while_loop(&self.ctx, &self.space, &self.guard, self.body(i))
    }

    pub fn while_instance(&self, i: Elem) -> WhileInstance {
        WhileInstance {
            b: self.guard.clone(),
            c: self.body(i),
            r: self.rely.clone(),
            q: self.space.univ_rel(),
            p: self.space.full_set(),
            p_t: self.space.full_set(),
            p_f: self.p_x.clone(),
            p_x: self.p_x.clone(),
            variant: self.variant.clone(),
        }
    }
}

/// Compare-and-swap on variable `name`: atomically, if `name` holds the
/// value of `old`, write the value of `new`, else leave the state alone.
/// The value expressions are evaluated in the pre-state of the atomic
/// step; everything other than `name` is unchanged.
pub fn cas(ctx: &Ctx, space: &StateSpace, name: &str, old: &Expr, new: &Expr) -> CmdId {
    let lv = LValue::base(name);
    let idx = space.var_index(&lv).expect("cas target declared");
    let rel = space.rel_where(|a, b| {
        let cur = space.value_by_index(a, idx);
        let oldv = eval_in_state(space, old, a);
        let newv = eval_in_state(space, new, a);
        let others_fixed = space
            .lvalues()
            .all(|o| o == &lv || space.value(a, o) == space.value(b, o));
        if Some(cur) == oldv {
            others_fixed && Some(space.value_by_index(b, idx)) == newv
        } else {
            a == b
        }
    });
    ctx.atomic_spec(&rel)
}

#[derive(Debug)]
pub struct RemoveReport {
    pub while_rule: RuleReport,
    /// `None` when every reachable program step satisfies the guarantee.
    pub guarantee_violation: Option<Trace>,
    pub spec_refines_code: Verdict,
    /// A terminated run in which the program never changed `w`, the
    /// environment removed `i`, and the loop exited early.
    pub early_exit_witness: Option<Trace>,
}

impl RemoveReport {
    pub fn all_hold(&self) -> bool {
        self.while_rule.outcome == crate::laws::RuleOutcome::Holds
            && self.guarantee_violation.is_none()
            && self.spec_refines_code.holds()
            && self.early_exit_witness.is_some()
    }
}

pub fn verify_remove(cfg: &RemoveConfig) -> RemoveReport {
    let m = RemoveModel::new(cfg);
    let inst = m.while_instance(cfg.i);
    let while_rule = check_while_theorem(&m.ctx, &m.space, &inst, cfg.depth, cfg.engine);
    let code = m.code(cfg.i);
    let mut ge = GraphEngine::new(&m.ctx, cfg.depth);
    let guarantee_violation = ge
        .satisfies_guarantee(code, &m.guar, &m.space.full_set())
        .unwrap_or(None);
    let spec_refines_code = refines(&m.ctx, m.spec(), code, cfg.depth, cfg.engine);
    let early_exit_witness = find_early_exit_witness(&m, code, cfg);
    RemoveReport {
        while_rule,
        guarantee_violation,
        spec_refines_code,
        early_exit_witness,
    }
}

/// Search the bounded runs of `code` for a terminated trace starting with
/// `i ∈ w` where no program step changes `w` (in particular no successful
/// CAS) and some environment step removes `i`, ending in the early-exit
/// set.
fn find_early_exit_witness(m: &RemoveModel, code: CmdId, cfg: &RemoveConfig) -> Option<Trace> {
    use std::collections::{HashSet, VecDeque};
    let mut ge = GraphEngine::new(&m.ctx, cfg.depth);
    let starts = m
        .space
        .set_where(|s| set_val(&m.space, s, "w").contains(cfg.i));
    let mut queue: VecDeque<(Trace, CmdId)> = starts
        .iter()
        .map(|sid| (Trace::empty(sid, Status::Incomplete), code))
        .collect();
    let mut seen: HashSet<(u32, CmdId, usize)> = HashSet::new();
    while let Some((t, resid)) = queue.pop_front() {
        if !seen.insert((t.end(), resid, t.len())) {
            continue;
        }
        let info = ge.step_info(resid, t.end()).ok()?;
        let pi_keeps_w = t
            .steps
            .iter()
            .filter(|s| s.label == Label::Pi)
            .all(|s| set_val(&m.space, s.pre, "w") == set_val(&m.space, s.post, "w"));
        let env_removed = t.steps.iter().any(|s| {
            s.label == Label::Eps
                && set_val(&m.space, s.pre, "w").contains(cfg.i)
                && !set_val(&m.space, s.post, "w").contains(cfg.i)
        });
        if info.term && pi_keeps_w && env_removed && m.p_x.contains(t.end()) {
            return Some(t.with_status(Status::Terminated));
        }
        if t.len() >= cfg.depth || !pi_keeps_w {
            continue;
        }
        for &(l, post, next) in &info.edges {
            // only follow environment steps within the rely
            if l == Label::Eps && !m.rely.contains(t.end(), post) {
                continue;
            }
            let mut u = t.clone();
            u.push(l, post);
            queue.push_back((u, next));
        }
    }
    None
}

#[derive(Debug)]
pub struct FairnessReport {
    /// The postcondition specification terminates: term ⊒ [q].
    pub spec_terminates: Verdict,
    /// term ⋒ fair = fin(any-step), per depth.
    pub term_fair: Vec<(usize, bool)>,
}

pub fn fairness_demo(cfg: &RemoveConfig) -> FairnessReport {
    let m = RemoveModel::new(cfg);
    let spec_terminates = refines(
        &m.ctx,
        m.ctx.term(),
        m.ctx.post_spec(&m.post),
        cfg.depth.min(4),
        cfg.engine,
    );
    let mut term_fair = Vec::new();
    for d in 1..=cfg.depth.min(4) {
        let v = equals(
            &m.ctx,
            m.ctx.conj(m.ctx.term(), m.ctx.fair()),
            m.ctx.fin_iter(m.ctx.alpha()),
            d,
            cfg.engine,
        );
        term_fair.push((d, v.holds()));
    }
    FairnessReport {
        spec_terminates,
        term_fair,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::RuleOutcome;

    fn small_cfg(depth: usize) -> RemoveConfig {
        RemoveConfig {
            depth,
            ..Default::default()
        }
    }

    #[test]
    fn model_shape() {
        let m = RemoveModel::new(&small_cfg(4));
        assert_eq!(m.space.len(), 16);
        assert!(m.variant.is_well_founded());
        assert!(m.variant.is_transitive());
        // rely is reflexive and only shrinks w
        for s in m.space.state_ids() {
            assert!(m.rely.contains(s, s));
        }
    }

    #[test]
    fn cas_success_and_failure() {
        let m = RemoveModel::new(&small_cfg(4));
        let old = Expr::deref_var("sample");
        let new = Expr::bin(
            Expr::deref_var("sample"),
            BinOp::Sub,
            Expr::konst(Value::set_from(&[0])),
        );
        let c = cas(&m.ctx, &m.space, "w", &old, &new);
        // from a state where w = sample = {0}: CAS can reach w = {}
        let s0 = m
            .space
            .find_state(&[
                (LValue::base("w"), Value::set_from(&[0])),
                (LValue::base("sample"), Value::set_from(&[0])),
            ])
            .unwrap();
        let mut ge = GraphEngine::new(&m.ctx, 3);
        let mut reached_empty = false;
        let info = ge.step_info(c, s0).unwrap();
        for &(l, post, _) in &info.edges {
            if l == Label::Pi && set_val(&m.space, post, "w").is_empty() {
                reached_empty = true;
            }
        }
        assert!(reached_empty);
        // from a state where w != sample: the only pi steps stutter
        let s1 = m
            .space
            .find_state(&[
                (LValue::base("w"), Value::set_from(&[0, 1])),
                (LValue::base("sample"), Value::set_from(&[1])),
            ])
            .unwrap();
        let info = ge.step_info(c, s1).unwrap();
        for &(l, post, _) in &info.edges {
            if l == Label::Pi {
                assert_eq!(post, s1, "failed CAS must not change the state");
            }
        }
    }

    #[test]
    fn guarantee_holds_on_code() {
        let cfg = small_cfg(5);
        let m = RemoveModel::new(&cfg);
        let code = m.code(cfg.i);
        let mut ge = GraphEngine::new(&m.ctx, cfg.depth);
        assert!(ge
            .satisfies_guarantee(code, &m.guar, &m.space.full_set())
            .unwrap()
            .is_none());
    }

    #[test]
    fn strengthened_guarantee_fails() {
        let cfg = RemoveConfig {
            strengthen_guar_to_identity: true,
            depth: 6,
            ..Default::default()
        };
        let m = RemoveModel::new(&cfg);
        let code = m.code(cfg.i);
        let mut ge = GraphEngine::new(&m.ctx, cfg.depth);
        let t = ge
            .satisfies_guarantee(code, &m.guar, &m.space.full_set())
            .unwrap()
            .expect("the code writes sample and w");
        // the offending step is a genuine state change (the sample read or
        // a successful CAS), which identity forbids
        let last = t.steps.last().unwrap();
        assert_eq!(last.label, Label::Pi);
        assert_ne!(last.pre, last.post);
    }

    #[test]
    fn weakened_rely_violates_premise() {
        let cfg = RemoveConfig {
            weaken_rely_to_univ: true,
            depth: 4,
            ..Default::default()
        };
        let m = RemoveModel::new(&cfg);
        let inst = m.while_instance(cfg.i);
        let rep = check_while_theorem(&m.ctx, &m.space, &inst, cfg.depth, cfg.engine);
        assert!(matches!(rep.outcome, RuleOutcome::PremiseViolation(_)));
        // specifically the exit condition is unstable under univ
        assert!(rep
            .premises
            .iter()
            .any(|(n, ok)| n.starts_with("while-false") && !ok));
    }

    #[test]
    fn early_exit_witness_exists() {
        let cfg = small_cfg(6);
        let m = RemoveModel::new(&cfg);
        let code = m.code(cfg.i);
        let w = find_early_exit_witness(&m, code, &cfg).expect("witness");
        assert_eq!(w.status, Status::Terminated);
        assert!(w
            .steps
            .iter()
            .any(|s| s.label == Label::Eps
                && set_val(&m.space, s.pre, "w").contains(0)
                && !set_val(&m.space, s.post, "w").contains(0)));
    }
}
