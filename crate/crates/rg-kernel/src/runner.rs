//! Executes parsed scripts: builds the declared state space, elaborates
//! named predicates and commands, runs each goal, and renders the results
//! as a human-readable listing or a deterministic JSON report.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use crate::command::{
    conditional, eval_expr, while_loop, BinOp, CmdId, Ctx, Expr, LvExpr, UnOp, VariantSpec,
};
use crate::dsl::{
    CmdAst, Decl, DomainAst, Goal, GoalBody, PBinOp, PUnOp, PredAst, RelRef, Script, SetRef,
};
use crate::graph_engine::GraphEngine;
use crate::laws::{
    check_law, check_recursion_theorem, check_while_theorem, random_bindings, HoleCmd,
    RecursionInstance, RuleOutcome, WhileInstance,
};
use crate::refine::{
    equals, establishes, hoare_triple, refines, Engine, Outcome, Verdict,
};
use crate::remove::{verify_remove, RemoveConfig};
use crate::state::{
    stable, tolerates, Domain, LValue, StateId, StateRel, StateSet, StateSpace, StateSpaceDecl,
    Value,
};
use crate::trace::{Label, Status, Trace};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub depth: usize,
    pub engine: Engine,
    pub seed: u64,
    pub jobs: usize,
    /// Samples per law goal when the goal does not say otherwise.
    pub law_samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            depth: 3,
            engine: Engine::Graph,
            seed: 42,
            jobs: 1,
            law_samples: 32,
        }
    }
}

/// A counterexample trace rendered against its state space, so reports
/// need not keep the space alive.
#[derive(Clone, Debug)]
pub struct RenderedTrace {
    pub start: String,
    pub steps: Vec<(String, String, String)>, // (label, pre, post)
    pub status: String,
}

fn render_trace(space: &StateSpace, t: &Trace) -> RenderedTrace {
    RenderedTrace {
        start: space.describe_state(t.start),
        steps: t
            .steps
            .iter()
            .map(|s| {
                (
                    match s.label {
                        Label::Pi => "pi".to_string(),
                        Label::Eps => "eps".to_string(),
                    },
                    space.describe_state(s.pre),
                    space.describe_state(s.post),
                )
            })
            .collect(),
        status: match t.status {
            Status::Incomplete => "incomplete".to_string(),
            Status::Terminated => "terminated".to_string(),
            Status::Aborted => "aborted".to_string(),
        },
    }
}

#[derive(Clone, Debug)]
pub struct GoalResult {
    pub id: String,
    pub kind: String,
    /// "holds" | "fails" | "inconclusive"
    pub verdict: String,
    pub detail: Option<String>,
    pub depth: usize,
    pub engine: Engine,
    pub counterexample: Option<RenderedTrace>,
    pub expect_fail: bool,
    pub line: u32,
}

impl GoalResult {
    /// Did the goal come out the way the script said it should?
    pub fn as_expected(&self) -> bool {
        match self.verdict.as_str() {
            "holds" => !self.expect_fail,
            "fails" => self.expect_fail,
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub goals: Vec<GoalResult>,
}

impl Report {
    pub fn all_as_expected(&self) -> bool {
        self.goals.iter().all(|g| g.as_expected())
    }
}

// ---------------------------------------------------------------------------
// Elaboration: AST -> semantic objects
// ---------------------------------------------------------------------------

pub struct Env {
    pub space: StateSpace,
    pub ctx: Ctx,
    sets: HashMap<String, StateSet>,
    rels: HashMap<String, StateRel>,
    cmd_asts: HashMap<String, CmdAst>,
}

fn domain_of_ast(d: &DomainAst) -> Result<Domain, String> {
    Ok(match d {
        DomainAst::Bool => Domain::Bool,
        DomainAst::Range(lo, hi) => {
            if lo > hi {
                return Err(format!("empty range {lo}..{hi}"));
            }
            Domain::IntRange(*lo, *hi)
        }
        DomainAst::Explicit(xs) => Domain::Explicit(xs.iter().map(|&i| Value::Int(i)).collect()),
        DomainAst::SetsOver(xs) => {
            let mut elems = Vec::new();
            for &i in xs {
                if !(0..64).contains(&i) {
                    return Err(format!("set element {i} outside 0..=63"));
                }
                elems.push(i as u8);
            }
            Domain::SetsOver(elems)
        }
    })
}

impl Env {
    pub fn build(script: &Script) -> Result<Env, String> {
        let mut decl = StateSpaceDecl::new();
        let mut any_var = false;
        for d in &script.decls {
            match d {
                Decl::Var(name, dom) => {
                    decl = decl.var(name, domain_of_ast(dom)?);
                    any_var = true;
                }
                Decl::Arr(name, idx, dom) => {
                    decl = decl.array(name, domain_of_ast(idx)?, domain_of_ast(dom)?);
                    any_var = true;
                }
                _ => {}
            }
        }
        if !any_var {
            // scripts that only run self-contained goals (laws, the case
            // study) still need a space for the report plumbing
            decl = decl.var("s", Domain::Bool);
        }
        let space = decl.build().map_err(|e| e.to_string())?;
        let ctx = Ctx::for_space(&space);
        let mut env = Env {
            space,
            ctx,
            sets: HashMap::new(),
            rels: HashMap::new(),
            cmd_asts: HashMap::new(),
        };
        for d in &script.decls {
            match d {
                Decl::Set(name, p) => {
                    let s = env.pred_to_set(p)?;
                    env.sets.insert(name.clone(), s);
                }
                Decl::Rel(name, p) => {
                    let r = env.pred_to_rel(p)?;
                    env.rels.insert(name.clone(), r);
                }
                Decl::Cmd(name, c) => {
                    // elaborate now to surface name/type errors eagerly
                    env.build_cmd(c)?;
                    env.cmd_asts.insert(name.clone(), c.clone());
                }
                _ => {}
            }
        }
        Ok(env)
    }

    fn lvalue(&self, name: &str, idx: Option<Value>) -> Result<LValue, String> {
        let lv = match idx {
            None => LValue::base(name),
            Some(i) => LValue::indexed(LValue::base(name), i),
        };
        if self.space.domain_of(&lv).is_none() {
            return Err(format!("undeclared l-value {lv}"));
        }
        Ok(lv)
    }

    /// Evaluate a predicate over a pre-state and (for primed names) an
    /// optional post-state.
    fn eval_pred(
        &self,
        p: &PredAst,
        pre: StateId,
        post: Option<StateId>,
    ) -> Result<Value, String> {
        let state_for = |primed: bool| -> Result<StateId, String> {
            if primed {
                post.ok_or_else(|| "primed name in a single-state predicate".to_string())
            } else {
                Ok(pre)
            }
        };
        match p {
            PredAst::Lit(v) => Ok(*v),
            PredAst::Var { name, primed } => {
                let lv = LValue::base(name);
                if self.space.domain_of(&lv).is_some() {
                    let sid = state_for(*primed)?;
                    return self
                        .space
                        .value(sid, &lv)
                        .ok_or_else(|| format!("undeclared l-value {lv}"));
                }
                // named sets and relations may appear inside predicates
                if *primed {
                    return Err(format!("undeclared l-value {name}'"));
                }
                if let Some(s) = self.sets.get(name) {
                    return Ok(Value::Bool(s.contains(pre)));
                }
                if let Some(r) = self.rels.get(name) {
                    let b = post
                        .ok_or_else(|| format!("relation {name} in a single-state predicate"))?;
                    return Ok(Value::Bool(r.contains(pre, b)));
                }
                Err(format!("undeclared name {name}"))
            }
            PredAst::Index { name, primed, idx } => {
                let i = self.eval_pred(idx, pre, post)?;
                let lv = self.lvalue(name, Some(i))?;
                let sid = state_for(*primed)?;
                self.space
                    .value(sid, &lv)
                    .ok_or_else(|| format!("undeclared l-value {lv}"))
            }
            PredAst::Un(op, a) => {
                let va = self.eval_pred(a, pre, post)?;
                let cop = match op {
                    PUnOp::Not => UnOp::Not,
                    PUnOp::Neg => UnOp::Neg,
                };
                crate::command::apply_unop(cop, &va)
                    .ok_or_else(|| format!("type error applying {op:?} to {va}"))
            }
            PredAst::Bin(a, op, b) => {
                let va = self.eval_pred(a, pre, post)?;
                let vb = self.eval_pred(b, pre, post)?;
                let direct = match op {
                    PBinOp::Ne => {
                        return Ok(Value::Bool(va != vb));
                    }
                    PBinOp::Eq => {
                        return Ok(Value::Bool(va == vb));
                    }
                    PBinOp::Or => BinOp::Or,
                    PBinOp::And => BinOp::And,
                    PBinOp::In => BinOp::In,
                    PBinOp::SubsetEq => BinOp::SubsetEq,
                    PBinOp::Add => BinOp::Add,
                    PBinOp::Sub => BinOp::Sub,
                    PBinOp::Union => BinOp::Union,
                    PBinOp::Inter => BinOp::Inter,
                };
                crate::command::apply_binop(direct, &va, &vb)
                    .ok_or_else(|| format!("type error applying {op:?} to {va} and {vb}"))
            }
        }
    }

    pub fn pred_to_set(&self, p: &PredAst) -> Result<StateSet, String> {
        let mut out = self.space.empty_set();
        for sid in self.space.state_ids() {
            match self.eval_pred(p, sid, None)? {
                Value::Bool(true) => out.insert(sid),
                Value::Bool(false) => {}
                v => return Err(format!("predicate evaluated to non-boolean {v}")),
            }
        }
        Ok(out)
    }

    pub fn pred_to_rel(&self, p: &PredAst) -> Result<StateRel, String> {
        let mut out = StateRel::empty(self.space.len());
        for a in self.space.state_ids() {
            for b in self.space.state_ids() {
                match self.eval_pred(p, a, Some(b))? {
                    Value::Bool(true) => out.insert(a, b),
                    Value::Bool(false) => {}
                    v => return Err(format!("predicate evaluated to non-boolean {v}")),
                }
            }
        }
        Ok(out)
    }

    pub fn set_ref(&self, s: &SetRef) -> Result<StateSet, String> {
        match s {
            SetRef::Named(n) => self
                .sets
                .get(n)
                .cloned()
                .ok_or_else(|| format!("undeclared set {n}")),
            SetRef::Pred(p) => self.pred_to_set(p),
        }
    }

    pub fn rel_ref(&self, r: &RelRef) -> Result<StateRel, String> {
        match r {
            RelRef::Named(n) => self
                .rels
                .get(n)
                .cloned()
                .ok_or_else(|| format!("undeclared relation {n}")),
            RelRef::Pred(p) => self.pred_to_rel(p),
        }
    }

    /// Convert a prime-free predicate/expression AST into a fine-grained
    /// value expression.
    pub fn pred_to_expr(&self, p: &PredAst) -> Result<Expr, String> {
        match p {
            PredAst::Lit(v) => Ok(Expr::konst(*v)),
            PredAst::Var { name, primed } => {
                if *primed {
                    return Err("primed name in an expression".into());
                }
                self.lvalue(name, None)?;
                Ok(Expr::Deref(LvExpr::Variable(name.clone())))
            }
            PredAst::Index { name, primed, idx } => {
                if *primed {
                    return Err("primed name in an expression".into());
                }
                let i = self.pred_to_expr(idx)?;
                Ok(Expr::Deref(LvExpr::ArrayIndex(
                    Box::new(LvExpr::Variable(name.clone())),
                    Box::new(i),
                )))
            }
            PredAst::Un(op, a) => {
                let ea = self.pred_to_expr(a)?;
                Ok(match op {
                    PUnOp::Not => Expr::un(UnOp::Not, ea),
                    PUnOp::Neg => Expr::un(UnOp::Neg, ea),
                })
            }
            PredAst::Bin(a, op, b) => {
                let ea = self.pred_to_expr(a)?;
                let eb = self.pred_to_expr(b)?;
                Ok(match op {
                    PBinOp::Ne => Expr::un(UnOp::Not, Expr::bin(ea, BinOp::Eq, eb)),
                    PBinOp::Or => Expr::bin(ea, BinOp::Or, eb),
                    PBinOp::And => Expr::bin(ea, BinOp::And, eb),
                    PBinOp::Eq => Expr::bin(ea, BinOp::Eq, eb),
                    PBinOp::In => Expr::bin(ea, BinOp::In, eb),
                    PBinOp::SubsetEq => Expr::bin(ea, BinOp::SubsetEq, eb),
                    PBinOp::Add => Expr::bin(ea, BinOp::Add, eb),
                    PBinOp::Sub => Expr::bin(ea, BinOp::Sub, eb),
                    PBinOp::Union => Expr::bin(ea, BinOp::Union, eb),
                    PBinOp::Inter => Expr::bin(ea, BinOp::Inter, eb),
                })
            }
        }
    }

    pub fn build_cmd(&self, c: &CmdAst) -> Result<CmdId, String> {
        let ctx = &self.ctx;
        Ok(match c {
            CmdAst::Bot => ctx.bot(),
            CmdAst::Top => ctx.top(),
            CmdAst::Nil => ctx.nil(),
            CmdAst::Term => ctx.term(),
            CmdAst::Idle => ctx.idle(),
            CmdAst::Fair => ctx.fair(),
            CmdAst::Hole => return Err("hole only allowed in a recursion goal body".into()),
            CmdAst::Name(n) => {
                let ast = self
                    .cmd_asts
                    .get(n)
                    .ok_or_else(|| format!("undeclared command {n}"))?;
                self.build_cmd(ast)?
            }
            CmdAst::Test(p) => ctx.test(self.pred_to_set(p)?),
            CmdAst::Pgm(p) => ctx.pgm(self.pred_to_rel(p)?),
            CmdAst::Env(p) => ctx.env_step(self.pred_to_rel(p)?),
            CmdAst::Assert(p) => ctx.assert_cmd(&self.pred_to_set(p)?),
            CmdAst::Guar(p) => ctx.guar(&self.pred_to_rel(p)?),
            CmdAst::Rely(p) => ctx.rely(&self.pred_to_rel(p)?),
            CmdAst::Post(p) => ctx.post_spec(&self.pred_to_rel(p)?),
            CmdAst::Atomic(p) => ctx.atomic_spec(&self.pred_to_rel(p)?),
            CmdAst::Opt(p) => ctx.opt(&self.pred_to_rel(p)?),
            CmdAst::Frame(v, b) => {
                let lv = self.lvalue(v, None)?;
                ctx.frame(&self.space, &[lv], self.build_cmd(b)?)
            }
            CmdAst::Seq(a, b) => ctx.seq(self.build_cmd(a)?, self.build_cmd(b)?),
            CmdAst::Choice(a, b) => ctx.choice(vec![self.build_cmd(a)?, self.build_cmd(b)?]),
            CmdAst::Par(a, b) => ctx.par(self.build_cmd(a)?, self.build_cmd(b)?),
            CmdAst::Conj(a, b) => ctx.conj(self.build_cmd(a)?, self.build_cmd(b)?),
            CmdAst::Fin(a) => ctx.fin_iter(self.build_cmd(a)?),
            CmdAst::Om(a) => ctx.om_iter(self.build_cmd(a)?),
            CmdAst::If(b, x, y) => conditional(
                ctx,
                &self.space,
                &self.pred_to_expr(b)?,
                self.build_cmd(x)?,
                self.build_cmd(y)?,
            ),
            CmdAst::While(b, x) => {
                while_loop(ctx, &self.space, &self.pred_to_expr(b)?, self.build_cmd(x)?)
            }
            CmdAst::Eval(e, k) => eval_expr(ctx, &self.space, &self.pred_to_expr(e)?, *k),
        })
    }

    /// Convert a command AST with `hole` leaves into the shape the
    /// recursion-rule checker takes. The hole may only sit under choice,
    /// sequence, parallel or conjunction.
    pub fn build_hole_cmd(&self, c: &CmdAst) -> Result<HoleCmd, String> {
        fn has_hole(c: &CmdAst) -> bool {
            match c {
                CmdAst::Hole => true,
                CmdAst::Seq(a, b)
                | CmdAst::Choice(a, b)
                | CmdAst::Par(a, b)
                | CmdAst::Conj(a, b) => has_hole(a) || has_hole(b),
                CmdAst::Frame(_, a) | CmdAst::Fin(a) | CmdAst::Om(a) => has_hole(a),
                CmdAst::If(_, a, b) => has_hole(a) || has_hole(b),
                CmdAst::While(_, a) => has_hole(a),
                _ => false,
            }
        }
        if !has_hole(c) {
            return Ok(HoleCmd::Lift(self.build_cmd(c)?));
        }
        Ok(match c {
            CmdAst::Hole => HoleCmd::Hole,
            CmdAst::Seq(a, b) => HoleCmd::Seq(
                Box::new(self.build_hole_cmd(a)?),
                Box::new(self.build_hole_cmd(b)?),
            ),
            CmdAst::Choice(a, b) => {
                HoleCmd::Choice(vec![self.build_hole_cmd(a)?, self.build_hole_cmd(b)?])
            }
            CmdAst::Par(a, b) => HoleCmd::Par(
                Box::new(self.build_hole_cmd(a)?),
                Box::new(self.build_hole_cmd(b)?),
            ),
            CmdAst::Conj(a, b) => HoleCmd::Conj(
                Box::new(self.build_hole_cmd(a)?),
                Box::new(self.build_hole_cmd(b)?),
            ),
            _ => return Err("hole not allowed under this construct".into()),
        })
    }

    /// A variant expression induces its order from the value type: sets
    /// descend by strict inclusion, integers by less-than over their
    /// reachable range.
    pub fn variant_from_expr(&self, e: &Expr) -> Result<VariantSpec, String> {
        let vals = crate::command::possible_values(&self.space, e);
        if vals.iter().all(|v| v.as_set().is_some()) && !vals.is_empty() {
            let mut elems: Vec<u8> = Vec::new();
            for v in &vals {
                for x in v.as_set().unwrap().iter() {
                    if !elems.contains(&x) {
                        elems.push(x);
                    }
                }
            }
            elems.sort();
            Ok(VariantSpec::strict_subset(e.clone(), &elems))
        } else if vals.iter().all(|v| v.as_int().is_some()) && !vals.is_empty() {
            let lo = vals.iter().map(|v| v.as_int().unwrap()).min().unwrap();
            let hi = vals.iter().map(|v| v.as_int().unwrap()).max().unwrap();
            Ok(VariantSpec::int_less(e.clone(), lo, hi))
        } else {
            Err("variant expression must be integer- or set-valued".into())
        }
    }
}

// ---------------------------------------------------------------------------
// Goal execution
// ---------------------------------------------------------------------------

fn verdict_parts(v: &Verdict, space: &StateSpace) -> (String, Option<String>, Option<RenderedTrace>) {
    match &v.outcome {
        Outcome::Holds => ("holds".into(), None, None),
        Outcome::Fails(t) => ("fails".into(), None, Some(render_trace(space, t))),
        Outcome::Inconclusive(m) => ("inconclusive".into(), Some(m.clone()), None),
    }
}

fn rule_parts(
    rep: &crate::laws::RuleReport,
    space: &StateSpace,
) -> (String, Option<String>, Option<RenderedTrace>) {
    match &rep.outcome {
        RuleOutcome::Holds => ("holds".into(), None, None),
        RuleOutcome::PremiseViolation(p) => {
            ("fails".into(), Some(format!("premise {p} does not hold")), None)
        }
        RuleOutcome::SoundnessAlarm(t) => (
            "fails".into(),
            Some("SOUNDNESS ALARM: premises hold but the conclusion fails".into()),
            Some(render_trace(space, t)),
        ),
        RuleOutcome::Inconclusive(m) => ("inconclusive".into(), Some(m.clone()), None),
    }
}

fn run_goal(script: &Script, index: usize, goal: &Goal, opts: &RunOptions) -> GoalResult {
    let depth = goal.depth.unwrap_or(opts.depth);
    let engine = goal.engine.unwrap_or(opts.engine);
    let kind = match &goal.body {
        GoalBody::Refine(_, _) => "refine",
        GoalBody::Equal(_, _) => "equal",
        GoalBody::Triple(_, _, _) => "triple",
        GoalBody::Establish { .. } => "establish",
        GoalBody::Stable(_, _) => "stable",
        GoalBody::Tolerates(_, _, _) => "tolerates",
        GoalBody::Law { .. } => "law",
        GoalBody::Guarantee(_, _) => "guarantee",
        GoalBody::WhileRule { .. } => "whilerule",
        GoalBody::Recursion { .. } => "recursion",
        GoalBody::Remove { .. } => "remove",
        GoalBody::Fairness => "fairness",
    }
    .to_string();
    let mut result = GoalResult {
        id: format!("g{}", index + 1),
        kind,
        verdict: "inconclusive".into(),
        detail: None,
        depth,
        engine,
        counterexample: None,
        expect_fail: goal.expect_fail,
        line: goal.line,
    };

    let filled = (|| -> Result<(String, Option<String>, Option<RenderedTrace>), String> {
        // self-contained goals do not need the script's declarations
        match &goal.body {
            GoalBody::Remove {
                weaken_rely,
                strengthen_guar,
            } => {
                let cfg = RemoveConfig {
                    depth: goal.depth.unwrap_or(8),
                    engine,
                    weaken_rely_to_univ: *weaken_rely,
                    strengthen_guar_to_identity: *strengthen_guar,
                    ..Default::default()
                };
                let m = crate::remove::RemoveModel::new(&cfg);
                let rep = verify_remove(&cfg);
                let wr = rule_parts(&rep.while_rule, &m.space);
                if wr.0 != "holds" {
                    return Ok(wr);
                }
                if let Some(t) = &rep.guarantee_violation {
                    return Ok((
                        "fails".into(),
                        Some("a program step leaves the guarantee".into()),
                        Some(render_trace(&m.space, t)),
                    ));
                }
                let sr = verdict_parts(&rep.spec_refines_code, &m.space);
                if sr.0 != "holds" {
                    return Ok(sr);
                }
                match &rep.early_exit_witness {
                    Some(t) => Ok((
                        "holds".into(),
                        Some("early-exit witness attached".into()),
                        Some(render_trace(&m.space, t)),
                    )),
                    None => Ok((
                        "fails".into(),
                        Some("no early-exit witness within the depth bound".into()),
                        None,
                    )),
                }
            }
            GoalBody::Fairness => {
                let cfg = RemoveConfig {
                    depth: goal.depth.unwrap_or(4),
                    engine,
                    ..Default::default()
                };
                let rep = crate::remove::fairness_demo(&cfg);
                if !rep.spec_terminates.holds() {
                    return Ok((
                        "fails".into(),
                        Some("term does not refine the postcondition spec".into()),
                        None,
                    ));
                }
                match rep.term_fair.iter().find(|(_, ok)| !ok) {
                    Some((d, _)) => Ok((
                        "fails".into(),
                        Some(format!("term /\\ fair differs from fin(step) at depth {d}")),
                        None,
                    )),
                    None => Ok(("holds".into(), None, None)),
                }
            }
            _ => {
                let env = Env::build(script)?;
                run_script_goal(&env, index, goal, depth, engine, opts)
            }
        }
    })();

    match filled {
        Ok((verdict, detail, cex)) => {
            result.verdict = verdict;
            result.detail = detail;
            result.counterexample = cex;
        }
        Err(m) => {
            result.verdict = "inconclusive".into();
            result.detail = Some(m);
        }
    }
    result
}

fn run_script_goal(
    env: &Env,
    index: usize,
    goal: &Goal,
    depth: usize,
    engine: Engine,
    opts: &RunOptions,
) -> Result<(String, Option<String>, Option<RenderedTrace>), String> {
    let ctx = &env.ctx;
    let space = &env.space;
    Ok(match &goal.body {
        GoalBody::Refine(a, b) => {
            let (ca, cb) = (env.build_cmd(a)?, env.build_cmd(b)?);
            verdict_parts(&refines(ctx, ca, cb, depth, engine), space)
        }
        GoalBody::Equal(a, b) => {
            let (ca, cb) = (env.build_cmd(a)?, env.build_cmd(b)?);
            verdict_parts(&equals(ctx, ca, cb, depth, engine), space)
        }
        GoalBody::Triple(p, c, p1) => {
            let sp = env.pred_to_set(p)?;
            let cc = env.build_cmd(c)?;
            let sp1 = env.pred_to_set(p1)?;
            verdict_parts(&hoare_triple(ctx, &sp, cc, &sp1, depth, engine), space)
        }
        GoalBody::Establish { p, r, e, k, target } => {
            let sp = env.set_ref(p)?;
            let rr = env.rel_ref(r)?;
            let ee = env.pred_to_expr(e)?;
            let tt = env.set_ref(target)?;
            verdict_parts(
                &establishes(ctx, space, &sp, &rr, &ee, *k, &tt, depth, engine),
                space,
            )
        }
        GoalBody::Stable(p, r) => {
            let sp = env.set_ref(p)?;
            let rr = env.rel_ref(r)?;
            if stable(&sp, &rr) {
                ("holds".into(), None, None)
            } else {
                ("fails".into(), Some("set not closed under the relation".into()), None)
            }
        }
        GoalBody::Tolerates(q, r, p) => {
            let qq = env.rel_ref(q)?;
            let rr = env.rel_ref(r)?;
            let pp = env.set_ref(p)?;
            if tolerates(&qq, &rr, &pp) {
                ("holds".into(), None, None)
            } else {
                (
                    "fails".into(),
                    Some("interference escapes the postcondition from p".into()),
                    None,
                )
            }
        }
        GoalBody::Law { id, samples } => {
            let count = samples.unwrap_or(opts.law_samples);
            // one deterministic stream per goal
            let mut rng =
                ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(index as u64));
            let mut out = ("holds".to_string(), None, None);
            for i in 0..count {
                let b = random_bindings(ctx, &mut rng);
                let v = check_law(ctx, id, &b, depth, engine)?;
                match &v.outcome {
                    Outcome::Holds => {}
                    Outcome::Fails(t) => {
                        out = (
                            "fails".into(),
                            Some(format!("law {id} fails on sample {i}")),
                            Some(render_trace(space, t)),
                        );
                        break;
                    }
                    Outcome::Inconclusive(m) => {
                        out = ("inconclusive".into(), Some(m.clone()), None);
                        break;
                    }
                }
            }
            out
        }
        GoalBody::Guarantee(c, g) => {
            let cc = env.build_cmd(c)?;
            let gg = env.rel_ref(g)?;
            let mut ge = GraphEngine::new(ctx, depth);
            match ge.satisfies_guarantee(cc, &gg, &space.full_set()) {
                Ok(None) => ("holds".into(), None, None),
                Ok(Some(t)) => (
                    "fails".into(),
                    Some("a program step leaves the guarantee".into()),
                    Some(render_trace(space, &t)),
                ),
                Err(e) => ("inconclusive".into(), Some(e.to_string()), None),
            }
        }
        GoalBody::WhileRule {
            b,
            c,
            r,
            q,
            p,
            p_t,
            p_f,
            p_x,
            variant,
        } => {
            let inst = WhileInstance {
                b: env.pred_to_expr(b)?,
                c: env.build_cmd(c)?,
                r: env.rel_ref(r)?,
                q: env.rel_ref(q)?,
                p: env.set_ref(p)?,
                p_t: env.set_ref(p_t)?,
                p_f: env.set_ref(p_f)?,
                p_x: env.set_ref(p_x)?,
                variant: env.variant_from_expr(&env.pred_to_expr(variant)?)?,
            };
            rule_parts(&check_while_theorem(ctx, space, &inst, depth, engine), space)
        }
        GoalBody::Recursion { s, f, p_x, variant } => {
            let inst = RecursionInstance {
                f: env.build_hole_cmd(f)?,
                s: env.build_cmd(s)?,
                p_x: env.set_ref(p_x)?,
                variant: env.variant_from_expr(&env.pred_to_expr(variant)?)?,
            };
            rule_parts(
                &check_recursion_theorem(ctx, space, &inst, depth, engine),
                space,
            )
        }
        GoalBody::Remove { .. } | GoalBody::Fairness => unreachable!("handled in run_goal"),
    })
}

/// Execute all goals. With `jobs > 1`, goals run concurrently on that
/// many threads; results are reported in declaration order regardless.
pub fn run(script: &Script, opts: &RunOptions) -> Report {
    let n = script.goals.len();
    let mut results: Vec<Option<GoalResult>> = vec![None; n];
    if opts.jobs <= 1 || n <= 1 {
        for (i, g) in script.goals.iter().enumerate() {
            results[i] = Some(run_goal(script, i, g, opts));
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<GoalResult>>> =
            (0..n).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..opts.jobs.min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let r = run_goal(script, i, &script.goals[i], opts);
                    *slots[i].lock().unwrap() = Some(r);
                });
            }
        });
        for (i, slot) in slots.into_iter().enumerate() {
            results[i] = slot.into_inner().unwrap();
        }
    }
    Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        goals: results.into_iter().map(|r| r.unwrap()).collect(),
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

pub fn render_human(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "report v{} (seed {})\n",
        report.version, report.seed
    ));
    for g in &report.goals {
        let mark = if g.as_expected() { "ok  " } else { "FAIL" };
        let expected = if g.expect_fail { " (expect fail)" } else { "" };
        out.push_str(&format!(
            "{mark} {id} line {line}: {kind} -> {verdict}{expected} [depth {depth}, {engine}]\n",
            id = g.id,
            line = g.line,
            kind = g.kind,
            verdict = g.verdict,
            depth = g.depth,
            engine = g.engine,
        ));
        if let Some(d) = &g.detail {
            out.push_str(&format!("       {d}\n"));
        }
        if let Some(t) = &g.counterexample {
            out.push_str(&format!("       trace from {} [{}]\n", t.start, t.status));
            for (label, pre, post) in &t.steps {
                out.push_str(&format!("         {label}: {pre} -> {post}\n"));
            }
        }
    }
    let summary = if report.all_as_expected() {
        "all goals as expected"
    } else {
        "some goals did not come out as expected"
    };
    out.push_str(summary);
    out.push('\n');
    out
}

/// Deterministic JSON rendering: keys are emitted in sorted order and the
/// timing field is pinned to zero, so identical scripts with identical
/// seeds produce byte-identical output.
pub fn render_json(report: &Report) -> String {
    let goals: Vec<Json> = report
        .goals
        .iter()
        .map(|g| {
            let cex = match &g.counterexample {
                None => Json::Null,
                Some(t) => json!({
                    "start": t.start,
                    "status": t.status,
                    "steps": t.steps.iter().map(|(label, pre, post)| {
                        json!({"label": label, "pre": pre, "post": post})
                    }).collect::<Vec<_>>(),
                }),
            };
            json!({
                "id": g.id,
                "kind": g.kind,
                "verdict": g.verdict,
                "depth": g.depth,
                "engine": g.engine.to_string(),
                "elapsed_ms": 0,
                "counterexample": cex,
            })
        })
        .collect();
    let doc = json!({
        "version": report.version,
        "seed": report.seed,
        "goals": goals,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json rendering");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn run_text(text: &str, opts: &RunOptions) -> Report {
        run(&parse(text).unwrap(), opts)
    }

    #[test]
    fn stable_and_tolerates_goals() {
        let rep = run_text(
            "var x in {0,1};\n\
             rel r := x' = x;\n\
             check stable {x = 0} under r;\n\
             check stable {x = 0} under [true] expect fail;\n\
             check tolerates [x' = x] under r from {x = 0};",
            &RunOptions::default(),
        );
        assert!(rep.all_as_expected(), "{:?}", rep.goals);
    }

    #[test]
    fn refinement_and_triple_goals() {
        let rep = run_text(
            "var x in {0,1};\n\
             cmd step := pgm<x' = 0>;\n\
             check refine term >= step ; nil depth 3;\n\
             check triple {true} rely<x' = x> /\\ step ; idle {x = 0} depth 3;\n\
             check refine step >= term depth 2 expect fail;",
            &RunOptions::default(),
        );
        assert!(rep.all_as_expected(), "{:?}", rep.goals);
    }

    #[test]
    fn establish_doubled_read_under_interference() {
        // x+x reads x twice; without interference it cannot be odd
        let rep = run_text(
            "var x in 0..1;\n\
             rel id := x' = x;\n\
             check establish {true} under id : [x + x -> 1] achieves {false};\n\
             check establish {true} under [true] : [x + x -> 1] achieves {false} expect fail;",
            &RunOptions {
                depth: 4,
                ..Default::default()
            },
        );
        assert!(rep.all_as_expected(), "{:?}", rep.goals);
    }

    #[test]
    fn law_goal_seeded() {
        let rep = run_text(
            "var x in {0,1};\ncheck law \"assert-merge\" samples 4 depth 2;\n\
             check law \"seq-assoc\" samples 4 depth 2;",
            &RunOptions::default(),
        );
        assert!(rep.all_as_expected(), "{:?}", rep.goals);
    }

    #[test]
    fn json_is_deterministic() {
        let text = "var x in {0,1};\ncheck law \"choice-comm\" samples 3 depth 2;\n\
                    check refine term >= nil;";
        let opts = RunOptions::default();
        let a = render_json(&run_text(text, &opts));
        let b = render_json(&run_text(text, &opts));
        assert_eq!(a, b);
        assert!(a.contains("\"elapsed_ms\": 0"));
    }

    #[test]
    fn parallel_runs_match_serial() {
        let text = "var x in {0,1};\n\
                    check refine term >= nil;\n\
                    check refine nil >= term expect fail;\n\
                    check stable {x = 0} under [x' = x];\n\
                    check law \"conj-idem\" samples 3 depth 2;";
        let serial = render_json(&run_text(text, &RunOptions::default()));
        let parallel = render_json(&run_text(
            text,
            &RunOptions {
                jobs: 4,
                ..Default::default()
            },
        ));
        assert_eq!(serial, parallel);
    }

    #[test]
    fn whilerule_goal_countdown() {
        let rep = run_text(
            "var x in 0..2;\n\
             rel id := x' = x;\n\
             cmd dec := rely<id> /\\ guar<x' = x - 1 \\/ x' = x> /\\ post[x' = x - 1];\n\
             check whilerule while x != 0 do dec od under id qrel [true]\n\
               inv {true} {true} {x = 0} {x = 0} variant x depth 5;",
            &RunOptions::default(),
        );
        assert!(rep.all_as_expected(), "{:?}", rep.goals);
    }

    #[test]
    fn array_declarations_work() {
        let rep = run_text(
            "arr a [{0,1}] in bool;\n\
             check stable {a[0] = true} under [a'[0] = a[0]];\n\
             check refine term >= [a[0] -> true] | [a[0] -> false] depth 3;",
            &RunOptions::default(),
        );
        assert!(rep.all_as_expected(), "{:?}", rep.goals);
    }

    #[test]
    fn undeclared_name_is_inconclusive() {
        let rep = run_text(
            "var x in {0,1};\ncheck stable missing under [true];",
            &RunOptions::default(),
        );
        assert_eq!(rep.goals[0].verdict, "inconclusive");
        assert!(!rep.all_as_expected());
    }
}
