//! Catalogue of algebraic laws and proof-rule checkers, all validated
//! semantically: each law is decided by bounded trace-set comparison at a
//! given depth, not by syntactic reasoning.
//!
//! Conditional laws (with side conditions or refinement premises) are
//! checked as implications: a binding whose premises fail passes
//! vacuously. The rule checkers for the big theorems distinguish premise
//! violations (fine, the rule just does not apply) from soundness alarms
//! (premises hold but the conclusion fails — that would contradict the
//! theory and is the one outcome that must never occur).

use rand::Rng;

use crate::command::{
    conditional, eval_lvexpr, possible_values, while_loop, BinOp, CmdId, Ctx, Expr, LvExpr, UnOp,
    VariantSpec,
};
use crate::refine::{
    equals, establishes, hoare_triple, refines, Engine, Outcome, Verdict,
};
use crate::state::{
    compose, range_restrict, refl_trans_closure, stable, tolerates, Domain,
    LValue, StateRel, StateSet, StateSpace, StateSpaceDecl, Value,
};
use crate::trace::Trace;

// ---------------------------------------------------------------------------
// Law catalogue
// ---------------------------------------------------------------------------

/// Stable identifiers for every law in the catalogue.
pub const LAW_IDS: &[&str] = &[
    "assert-alt",
    "assert-merge",
    "assert-test",
    "assert-union",
    "assert-Union",
    "spec-test",
    "spec-split",
    "rely-distrib-seq",
    "spec-tolerates",
    "seq-assoc",
    "seq-nil-left",
    "seq-nil-right",
    "seq-distrib-left",
    "seq-distrib-right",
    "par-assoc",
    "par-comm",
    "par-distrib",
    "conj-assoc",
    "conj-comm",
    "conj-idem",
    "conj-distrib",
    "choice-assoc",
    "choice-comm",
    "choice-idem",
    "choice-join",
    "term-fair",
    "top-absorb",
    "test-mono",
    "pgm-mono",
    "env-mono",
];

/// Concrete metavariable bindings for one law check. Each law reads the
/// prefix of each list it needs.
#[derive(Clone, Debug, Default)]
pub struct LawBindings {
    pub sets: Vec<StateSet>,
    pub rels: Vec<StateRel>,
    pub cmds: Vec<CmdId>,
    pub set_family: Vec<StateSet>,
}

fn vacuous(depth: usize, engine: Engine) -> Verdict {
    Verdict {
        outcome: Outcome::Holds,
        depth,
        engine,
        elapsed: std::time::Duration::ZERO,
    }
}

pub fn check_law(
    ctx: &Ctx,
    id: &str,
    b: &LawBindings,
    depth: usize,
    engine: Engine,
) -> Result<Verdict, String> {
    let n = ctx.universe_size();
    let set = |i: usize| b.sets.get(i).cloned().unwrap_or_else(|| StateSet::empty(n));
    let rel = |i: usize| b.rels.get(i).cloned().unwrap_or_else(|| StateRel::empty(n));
    let cmd = |i: usize| b.cmds.get(i).copied().unwrap_or_else(|| ctx.nil());
    let v = match id {
        "assert-alt" => {
            let p = set(0);
            let rhs = ctx.choice(vec![
                ctx.test(p.clone()),
                ctx.seq(ctx.test(p.complement()), ctx.top()),
            ]);
            equals(ctx, ctx.assert_cmd(&p), rhs, depth, engine)
        }
        "assert-merge" => {
            let (p1, p2) = (set(0), set(1));
            equals(
                ctx,
                ctx.seq(ctx.assert_cmd(&p1), ctx.assert_cmd(&p2)),
                ctx.assert_cmd(&p1.inter(&p2)),
                depth,
                engine,
            )
        }
        "assert-test" => {
            let p = set(0);
            equals(
                ctx,
                ctx.seq(ctx.assert_cmd(&p), ctx.test(p.clone())),
                ctx.assert_cmd(&p),
                depth,
                engine,
            )
        }
        "assert-union" => {
            let (p1, p2, c, d) = (set(0), set(1), cmd(0), cmd(1));
            let prem1 = refines(ctx, ctx.seq(ctx.assert_cmd(&p1), c), d, depth, engine);
            let prem2 = refines(ctx, ctx.seq(ctx.assert_cmd(&p2), c), d, depth, engine);
            if prem1.holds() && prem2.holds() {
                refines(
                    ctx,
                    ctx.seq(ctx.assert_cmd(&p1.union(&p2)), c),
                    d,
                    depth,
                    engine,
                )
            } else {
                vacuous(depth, engine)
            }
        }
        "assert-Union" => {
            let (c, d) = (cmd(0), cmd(1));
            let all_hold = b.set_family.iter().all(|p| {
                refines(ctx, ctx.seq(ctx.assert_cmd(p), c), d, depth, engine).holds()
            });
            if all_hold {
                let mut u = StateSet::empty(n);
                for p in &b.set_family {
                    u = u.union(p);
                }
                refines(ctx, ctx.seq(ctx.assert_cmd(&u), c), d, depth, engine)
            } else {
                vacuous(depth, engine)
            }
        }
        "spec-test" => {
            let (q, p) = (rel(0), set(0));
            equals(
                ctx,
                ctx.post_spec(&range_restrict(&q, &p)),
                ctx.seq(ctx.post_spec(&q), ctx.test(p.clone())),
                depth,
                engine,
            )
        }
        "spec-split" => {
            let (r1, r2, p) = (rel(0), rel(1), set(0));
            let lhs = ctx.post_spec(&compose(&r1, &r2));
            let rhs = ctx.seq_all(&[
                ctx.post_spec(&range_restrict(&r1, &p)),
                ctx.assert_cmd(&p),
                ctx.post_spec(&r2),
            ]);
            refines(ctx, lhs, rhs, depth, engine)
        }
        "rely-distrib-seq" => {
            let (r, c1, c2) = (rel(0), cmd(0), cmd(1));
            let rely = ctx.rely(&r);
            equals(
                ctx,
                ctx.conj(rely, ctx.seq(c1, c2)),
                ctx.seq(ctx.conj(rely, c1), ctx.conj(rely, c2)),
                depth,
                engine,
            )
        }
        "spec-tolerates" => {
            let (q, r, p) = (rel(0), rel(1), set(0));
            if !tolerates(&q, &r, &p) {
                return Ok(vacuous(depth, engine));
            }
            let rely = ctx.rely(&r);
            let lhs = ctx.conj(rely, ctx.seq(ctx.assert_cmd(&p), ctx.post_spec(&q)));
            let rhs = ctx.conj(
                rely,
                ctx.seq_all(&[
                    ctx.assert_cmd(&p),
                    ctx.idle(),
                    ctx.post_spec(&q),
                    ctx.idle(),
                ]),
            );
            equals(ctx, lhs, rhs, depth, engine)
        }
        "seq-assoc" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.seq(ctx.seq(a, c), d),
                ctx.seq(a, ctx.seq(c, d)),
                depth,
                engine,
            )
        }
        "seq-nil-left" => equals(ctx, ctx.seq(ctx.nil(), cmd(0)), cmd(0), depth, engine),
        "seq-nil-right" => equals(ctx, ctx.seq(cmd(0), ctx.nil()), cmd(0), depth, engine),
        "seq-distrib-left" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.seq(ctx.choice(vec![a, c]), d),
                ctx.choice(vec![ctx.seq(a, d), ctx.seq(c, d)]),
                depth,
                engine,
            )
        }
        "seq-distrib-right" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.seq(a, ctx.choice(vec![c, d])),
                ctx.choice(vec![ctx.seq(a, c), ctx.seq(a, d)]),
                depth,
                engine,
            )
        }
        "par-assoc" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.par(ctx.par(a, c), d),
                ctx.par(a, ctx.par(c, d)),
                depth,
                engine,
            )
        }
        "par-comm" => equals(ctx, ctx.par(cmd(0), cmd(1)), ctx.par(cmd(1), cmd(0)), depth, engine),
        "par-distrib" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.par(a, ctx.choice(vec![c, d])),
                ctx.choice(vec![ctx.par(a, c), ctx.par(a, d)]),
                depth,
                engine,
            )
        }
        "conj-assoc" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.conj(ctx.conj(a, c), d),
                ctx.conj(a, ctx.conj(c, d)),
                depth,
                engine,
            )
        }
        "conj-comm" => equals(
            ctx,
            ctx.conj(cmd(0), cmd(1)),
            ctx.conj(cmd(1), cmd(0)),
            depth,
            engine,
        ),
        "conj-idem" => equals(ctx, ctx.conj(cmd(0), cmd(0)), cmd(0), depth, engine),
        "conj-distrib" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.conj(a, ctx.choice(vec![c, d])),
                ctx.choice(vec![ctx.conj(a, c), ctx.conj(a, d)]),
                depth,
                engine,
            )
        }
        "choice-assoc" => {
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            equals(
                ctx,
                ctx.choice(vec![ctx.choice(vec![a, c]), d]),
                ctx.choice(vec![a, ctx.choice(vec![c, d])]),
                depth,
                engine,
            )
        }
        "choice-comm" => equals(
            ctx,
            ctx.choice(vec![cmd(0), cmd(1)]),
            ctx.choice(vec![cmd(1), cmd(0)]),
            depth,
            engine,
        ),
        "choice-idem" => equals(ctx, ctx.choice(vec![cmd(0), cmd(0)]), cmd(0), depth, engine),
        "choice-join" => {
            // least upper bound: above both operands, and below any other
            // upper bound
            let (a, c, d) = (cmd(0), cmd(1), cmd(2));
            let join = ctx.choice(vec![a, c]);
            let above_a = refines(ctx, join, a, depth, engine);
            if !above_a.holds() {
                return Ok(above_a);
            }
            let above_c = refines(ctx, join, c, depth, engine);
            if !above_c.holds() {
                return Ok(above_c);
            }
            if refines(ctx, d, a, depth, engine).holds()
                && refines(ctx, d, c, depth, engine).holds()
            {
                refines(ctx, d, join, depth, engine)
            } else {
                vacuous(depth, engine)
            }
        }
        "term-fair" => equals(
            ctx,
            ctx.conj(ctx.term(), ctx.fair()),
            ctx.fin_iter(ctx.alpha()),
            depth,
            engine,
        ),
        "top-absorb" => equals(ctx, ctx.seq(ctx.top(), cmd(0)), ctx.top(), depth, engine),
        "test-mono" => {
            let (p1, p2) = (set(0), set(1));
            refines(
                ctx,
                ctx.test(p1.union(&p2)),
                ctx.test(p1.clone()),
                depth,
                engine,
            )
        }
        "pgm-mono" => {
            let (r1, r2) = (rel(0), rel(1));
            refines(ctx, ctx.pgm(r1.union(&r2)), ctx.pgm(r1.clone()), depth, engine)
        }
        "env-mono" => {
            let (r1, r2) = (rel(0), rel(1));
            refines(
                ctx,
                ctx.env_step(r1.union(&r2)),
                ctx.env_step(r1.clone()),
                depth,
                engine,
            )
        }
        other => return Err(format!("unknown law id {other:?}")),
    };
    Ok(v)
}

// ---------------------------------------------------------------------------
// Binding generators
// ---------------------------------------------------------------------------

/// Every state set over a universe of `n` states (n small).
pub fn all_sets(n: usize) -> Vec<StateSet> {
    assert!(n <= 4);
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let mut s = StateSet::empty(n);
        for i in 0..n as u32 {
            if mask & (1 << i) != 0 {
                s.insert(i);
            }
        }
        out.push(s);
    }
    out
}

/// Every relation over a universe of `n` states (n tiny).
pub fn all_rels(n: usize) -> Vec<StateRel> {
    assert!(n <= 2, "exhaustive relations only feasible for |Sigma| = 2");
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n * n)) {
        let mut r = StateRel::empty(n);
        for a in 0..n as u32 {
            for b in 0..n as u32 {
                if mask & (1 << (a as usize * n + b as usize)) != 0 {
                    r.insert(a, b);
                }
            }
        }
        out.push(r);
    }
    out
}

pub fn random_set(n: usize, rng: &mut impl Rng) -> StateSet {
    let mut s = StateSet::empty(n);
    for i in 0..n as u32 {
        if rng.gen_bool(0.5) {
            s.insert(i);
        }
    }
    s
}

pub fn random_rel(n: usize, rng: &mut impl Rng) -> StateRel {
    let mut r = StateRel::empty(n);
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            if rng.gen_bool(0.5) {
                r.insert(a, b);
            }
        }
    }
    r
}

/// A random closed command with at most `budget` constructors. Fixed
/// points only appear through the iteration forms, which are always
/// well-behaved at bounded depth.
pub fn random_command(ctx: &Ctx, rng: &mut impl Rng, budget: usize) -> CmdId {
    let n = ctx.universe_size();
    if budget <= 1 {
        return match rng.gen_range(0..6) {
            0 => ctx.bot(),
            1 => ctx.top(),
            2 => ctx.nil(),
            3 => ctx.test(random_set(n, rng)),
            4 => ctx.pgm(random_rel(n, rng)),
            _ => ctx.env_step(random_rel(n, rng)),
        };
    }
    match rng.gen_range(0..8) {
        0 => random_command(ctx, rng, 1),
        1 => {
            let l = rng.gen_range(1..budget);
            ctx.seq(
                random_command(ctx, rng, l),
                random_command(ctx, rng, budget - l),
            )
        }
        2 => {
            let l = rng.gen_range(1..budget);
            ctx.choice(vec![
                random_command(ctx, rng, l),
                random_command(ctx, rng, budget - l),
            ])
        }
        3 => {
            let l = rng.gen_range(1..budget);
            ctx.par(
                random_command(ctx, rng, l),
                random_command(ctx, rng, budget - l),
            )
        }
        4 => {
            let l = rng.gen_range(1..budget);
            ctx.conj(
                random_command(ctx, rng, l),
                random_command(ctx, rng, budget - l),
            )
        }
        5 => ctx.fin_iter(random_command(ctx, rng, budget - 1)),
        6 => ctx.om_iter(random_command(ctx, rng, budget - 1)),
        _ => ctx.assert_cmd(&random_set(n, rng)),
    }
}

/// A fixed pool of structurally distinct commands for exhaustive
/// command-metavariable sweeps over a 2-state universe.
pub fn command_pool(ctx: &Ctx) -> Vec<CmdId> {
    let n = ctx.universe_size();
    let mut p0 = StateSet::empty(n);
    p0.insert(0);
    let mut swap = StateRel::empty(n);
    for a in 0..n as u32 {
        swap.insert(a, (a + 1) % n as u32);
    }
    vec![
        ctx.bot(),
        ctx.top(),
        ctx.nil(),
        ctx.test(p0.clone()),
        ctx.pgm(swap.clone()),
        ctx.env_step(ctx.id_rel()),
        ctx.seq(ctx.pgm(swap), ctx.test(p0)),
        ctx.choice(vec![ctx.pgm(ctx.id_rel()), ctx.env_step(ctx.univ_rel())]),
    ]
}

pub fn random_bindings(ctx: &Ctx, rng: &mut impl Rng) -> LawBindings {
    let n = ctx.universe_size();
    LawBindings {
        sets: (0..2).map(|_| random_set(n, rng)).collect(),
        rels: (0..2).map(|_| random_rel(n, rng)).collect(),
        cmds: (0..3).map(|_| random_command(ctx, rng, 4)).collect(),
        set_family: (0..3).map(|_| random_set(n, rng)).collect(),
    }
}

/// Exhaustive bindings for a law over a 2-state universe: sets and
/// relations fully enumerated, commands drawn from the fixed pool.
pub fn exhaustive_bindings(ctx: &Ctx, id: &str) -> Vec<LawBindings> {
    let n = ctx.universe_size();
    assert_eq!(n, 2);
    let sets = all_sets(n);
    let rels = all_rels(n);
    let pool = command_pool(ctx);
    let mut out = Vec::new();
    match id {
        "assert-alt" | "assert-test" | "test-mono" => {
            for p in &sets {
                for p2 in &sets {
                    out.push(LawBindings {
                        sets: vec![p.clone(), p2.clone()],
                        ..Default::default()
                    });
                }
            }
        }
        "assert-merge" => {
            for p1 in &sets {
                for p2 in &sets {
                    out.push(LawBindings {
                        sets: vec![p1.clone(), p2.clone()],
                        ..Default::default()
                    });
                }
            }
        }
        "assert-union" => {
            for p1 in &sets {
                for p2 in &sets {
                    for &c in &pool {
                        for &d in &pool {
                            out.push(LawBindings {
                                sets: vec![p1.clone(), p2.clone()],
                                cmds: vec![c, d],
                                ..Default::default()
                            });
                        }
                    }
                }
            }
        }
        "assert-Union" => {
            for p1 in &sets {
                for p2 in &sets {
                    for p3 in &sets {
                        for &c in &pool {
                            out.push(LawBindings {
                                cmds: vec![c, ctx.seq(ctx.assert_cmd(p1), c)],
                                set_family: vec![p1.clone(), p2.clone(), p3.clone()],
                                ..Default::default()
                            });
                        }
                    }
                }
            }
        }
        "spec-test" => {
            for q in &rels {
                for p in &sets {
                    out.push(LawBindings {
                        sets: vec![p.clone()],
                        rels: vec![q.clone()],
                        ..Default::default()
                    });
                }
            }
        }
        "spec-split" => {
            for r1 in &rels {
                for r2 in &rels {
                    for p in &sets {
                        out.push(LawBindings {
                            sets: vec![p.clone()],
                            rels: vec![r1.clone(), r2.clone()],
                            ..Default::default()
                        });
                    }
                }
            }
        }
        "rely-distrib-seq" => {
            for r in &rels {
                for &c1 in &pool {
                    for &c2 in &pool {
                        out.push(LawBindings {
                            rels: vec![r.clone()],
                            cmds: vec![c1, c2],
                            ..Default::default()
                        });
                    }
                }
            }
        }
        "spec-tolerates" => {
            for q in &rels {
                for r in &rels {
                    for p in &sets {
                        out.push(LawBindings {
                            sets: vec![p.clone()],
                            rels: vec![q.clone(), r.clone()],
                            ..Default::default()
                        });
                    }
                }
            }
        }
        "pgm-mono" | "env-mono" => {
            for r1 in &rels {
                for r2 in &rels {
                    out.push(LawBindings {
                        rels: vec![r1.clone(), r2.clone()],
                        ..Default::default()
                    });
                }
            }
        }
        "term-fair" => out.push(LawBindings::default()),
        // command-metavariable laws: sweep the pool
        _ => {
            for &a in &pool {
                for &c in &pool {
                    for &d in &pool {
                        out.push(LawBindings {
                            cmds: vec![a, c, d],
                            ..Default::default()
                        });
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Rule checkers
// ---------------------------------------------------------------------------

/// Result of a proof-rule check. Only `SoundnessAlarm` contradicts the
/// theory; `PremiseViolation` just means the rule does not apply to the
/// instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleOutcome {
    Holds,
    PremiseViolation(String),
    SoundnessAlarm(Trace),
    Inconclusive(String),
}

impl RuleOutcome {
    pub fn is_alarm(&self) -> bool {
        matches!(self, RuleOutcome::SoundnessAlarm(_))
    }
}

#[derive(Clone, Debug)]
pub struct RuleReport {
    pub premises: Vec<(String, bool)>,
    pub outcome: RuleOutcome,
}

fn conclude(premises: Vec<(String, bool)>, conclusion: Verdict) -> RuleReport {
    if let Some((name, _)) = premises.iter().find(|(_, ok)| !ok) {
        let name = name.clone();
        return RuleReport {
            premises,
            outcome: RuleOutcome::PremiseViolation(name),
        };
    }
    let outcome = match conclusion.outcome {
        Outcome::Holds => RuleOutcome::Holds,
        Outcome::Fails(t) => RuleOutcome::SoundnessAlarm(t),
        Outcome::Inconclusive(m) => RuleOutcome::Inconclusive(m),
    };
    RuleReport { premises, outcome }
}

/// State-independent predicate as a state set: full when `cond`, else empty.
fn const_pred(space: &StateSpace, cond: bool) -> StateSet {
    if cond {
        space.full_set()
    } else {
        space.empty_set()
    }
}

/// Postcondition maps for compositional expression rules: a chosen
/// postcondition per candidate value / l-value (absent entries mean the
/// empty postcondition).
#[derive(Clone, Debug, Default)]
pub struct PostMap {
    pub by_value: Vec<(Value, StateSet)>,
    pub by_lvalue: Vec<(LValue, StateSet)>,
}

impl PostMap {
    pub fn value(&self, space: &StateSpace, k: &Value) -> StateSet {
        self.by_value
            .iter()
            .find(|(v, _)| v == k)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(|| space.empty_set())
    }

    pub fn lvalue(&self, space: &StateSpace, lv: &LValue) -> StateSet {
        self.by_lvalue
            .iter()
            .find(|(l, _)| l == lv)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(|| space.empty_set())
    }
}

/// One compositional expression rule with its concrete bindings.
#[derive(Clone, Debug)]
pub enum ExprRule {
    Const {
        kappa: Value,
        k: Value,
    },
    Var {
        v: String,
        lv: LValue,
    },
    Deref {
        lve: LvExpr,
        k: Value,
        p1: PostMap,
        post: PostMap,
    },
    Unary {
        op: UnOp,
        e1: Expr,
        k: Value,
        p1: PostMap,
        post: PostMap,
    },
    Binary {
        e1: Expr,
        op: BinOp,
        e2: Expr,
        k: Value,
        p1: PostMap,
        p2: PostMap,
        post: PostMap,
    },
    Array {
        lve: LvExpr,
        e: Expr,
        base: LValue,
        k: Value,
        p1: PostMap,
        p2: PostMap,
        post: PostMap,
    },
}

#[allow(clippy::too_many_arguments)]
fn establish_lv(
    ctx: &Ctx,
    space: &StateSpace,
    p: &StateSet,
    r: &StateRel,
    lve: &LvExpr,
    lv: &LValue,
    target: &StateSet,
    depth: usize,
    engine: Engine,
) -> Verdict {
    let c = ctx.conj(ctx.rely(r), eval_lvexpr(ctx, space, lve, lv));
    hoare_triple(ctx, p, c, target, depth, engine)
}

#[allow(clippy::too_many_arguments)]
pub fn check_expression_rule(
    ctx: &Ctx,
    space: &StateSpace,
    rule: &ExprRule,
    p: &StateSet,
    r: &StateRel,
    depth: usize,
    engine: Engine,
) -> RuleReport {
    let mut premises = vec![("p-stable".to_string(), stable(p, r))];
    match rule {
        ExprRule::Const { kappa, k } => {
            let target = p.inter(&const_pred(space, kappa == k));
            let concl = establishes(
                ctx,
                space,
                p,
                r,
                &Expr::Const(*kappa),
                *k,
                &target,
                depth,
                engine,
            );
            conclude(premises, concl)
        }
        ExprRule::Var { v, lv } => {
            let target = p.inter(&const_pred(space, *lv == LValue::base(v)));
            let concl = establish_lv(
                ctx,
                space,
                p,
                r,
                &LvExpr::Variable(v.clone()),
                lv,
                &target,
                depth,
                engine,
            );
            conclude(premises, concl)
        }
        ExprRule::Deref { lve, k, p1, post } => {
            let target = post.value(space, k);
            premises.push(("post-stable".to_string(), stable(&target, r)));
            for lv in crate::command::possible_lvalues(space, lve) {
                let plv = p1.lvalue(space, &lv);
                premises.push((
                    format!("lv-establish {lv}"),
                    establish_lv(ctx, space, p, r, lve, &lv, &plv, depth, engine).holds(),
                ));
                let holds_k = space.set_where(|s| space.value(s, &lv) == Some(*k));
                premises.push((
                    format!("lv-implies {lv}"),
                    plv.inter(&holds_k).is_subset(&target),
                ));
            }
            let concl = establishes(
                ctx,
                space,
                p,
                r,
                &Expr::Deref(lve.clone()),
                *k,
                &target,
                depth,
                engine,
            );
            conclude(premises, concl)
        }
        ExprRule::Unary { op, e1, k, p1, post } => {
            let target = post.value(space, k);
            for k1 in possible_values(space, e1) {
                if crate::command::apply_unop(*op, &k1) != Some(*k) {
                    continue;
                }
                let pk1 = p1.value(space, &k1);
                premises.push((
                    format!("sub-establish {k1}"),
                    establishes(ctx, space, p, r, e1, k1, &pk1, depth, engine).holds(),
                ));
                premises.push((format!("sub-implies {k1}"), pk1.is_subset(&target)));
            }
            let e = Expr::un(*op, e1.clone());
            let concl = establishes(ctx, space, p, r, &e, *k, &target, depth, engine);
            conclude(premises, concl)
        }
        ExprRule::Binary {
            e1,
            op,
            e2,
            k,
            p1,
            p2,
            post,
        } => {
            let target = post.value(space, k);
            for k1 in possible_values(space, e1) {
                for k2 in possible_values(space, e2) {
                    if crate::command::apply_binop(*op, &k1, &k2) != Some(*k) {
                        continue;
                    }
                    let pk1 = p1.value(space, &k1);
                    let pk2 = p2.value(space, &k2);
                    premises.push((
                        format!("left-establish {k1}"),
                        establishes(ctx, space, p, r, e1, k1, &pk1, depth, engine).holds(),
                    ));
                    premises.push((
                        format!("right-establish {k2}"),
                        establishes(ctx, space, p, r, e2, k2, &pk2, depth, engine).holds(),
                    ));
                    premises.push((
                        format!("join-implies {k1},{k2}"),
                        pk1.inter(&pk2).is_subset(&target),
                    ));
                }
            }
            let e = Expr::bin(e1.clone(), *op, e2.clone());
            let concl = establishes(ctx, space, p, r, &e, *k, &target, depth, engine);
            conclude(premises, concl)
        }
        ExprRule::Array {
            lve,
            e,
            base,
            k,
            p1,
            p2,
            post,
        } => {
            let lv = LValue::indexed(base.clone(), *k);
            let target = post.lvalue(space, &lv);
            premises.push((
                "base-establish".to_string(),
                establish_lv(
                    ctx,
                    space,
                    p,
                    r,
                    lve,
                    base,
                    &p1.lvalue(space, base),
                    depth,
                    engine,
                )
                .holds(),
            ));
            premises.push((
                "index-establish".to_string(),
                establishes(ctx, space, p, r, e, *k, &p2.value(space, k), depth, engine).holds(),
            ));
            premises.push((
                "join-implies".to_string(),
                p1.lvalue(space, base)
                    .inter(&p2.value(space, k))
                    .is_subset(&target),
            ));
            let full = LvExpr::ArrayIndex(Box::new(lve.clone()), Box::new(e.clone()));
            let concl = establish_lv(ctx, space, p, r, &full, &lv, &target, depth, engine);
            conclude(premises, concl)
        }
    }
}

/// Bindings for the conditional-introduction theorem.
#[derive(Clone, Debug)]
pub struct ConditionalInstance {
    pub b: Expr,
    pub q: StateRel,
    pub r: StateRel,
    pub p: StateSet,
    pub p_t: StateSet,
    pub p_f: StateSet,
}

pub fn check_conditional_theorem(
    ctx: &Ctx,
    space: &StateSpace,
    inst: &ConditionalInstance,
    depth: usize,
    engine: Engine,
) -> RuleReport {
    let ConditionalInstance { b, q, r, p, p_t, p_f } = inst;
    let mut premises = vec![("tolerates".to_string(), tolerates(q, r, p))];
    premises.push((
        "cond-true".to_string(),
        establishes(ctx, space, p, r, b, Value::Bool(true), p_t, depth, engine).holds(),
    ));
    premises.push((
        "cond-false".to_string(),
        establishes(ctx, space, p, r, b, Value::Bool(false), p_f, depth, engine).holds(),
    ));
    for k in possible_values(space, b) {
        premises.push((
            format!("cond-bool {k}"),
            establishes(
                ctx,
                space,
                p,
                r,
                b,
                k,
                &const_pred(space, k.is_bool()),
                depth,
                engine,
            )
            .holds(),
        ));
    }
    let rely = ctx.rely(r);
    let spec = |pre: &StateSet| {
        ctx.conj(rely, ctx.seq(ctx.assert_cmd(pre), ctx.post_spec(q)))
    };
    let rhs = conditional(ctx, space, b, spec(p_t), spec(p_f));
    let concl = refines(ctx, spec(p), rhs, depth, engine);
    conclude(premises, concl)
}

/// A command with a hole for the recursion theorem's monotone function
/// `f`: every construct of the language except the hole never appears in
/// a non-monotone position (the language has none).
#[derive(Clone, Debug)]
pub enum HoleCmd {
    Hole,
    Lift(CmdId),
    Choice(Vec<HoleCmd>),
    Seq(Box<HoleCmd>, Box<HoleCmd>),
    Par(Box<HoleCmd>, Box<HoleCmd>),
    Conj(Box<HoleCmd>, Box<HoleCmd>),
}

impl HoleCmd {
    pub fn fill(&self, ctx: &Ctx, x: CmdId) -> CmdId {
        match self {
            HoleCmd::Hole => x,
            HoleCmd::Lift(c) => *c,
            HoleCmd::Choice(hs) => {
                let kids = hs.iter().map(|h| h.fill(ctx, x)).collect();
                ctx.choice(kids)
            }
            HoleCmd::Seq(a, b) => ctx.seq(a.fill(ctx, x), b.fill(ctx, x)),
            HoleCmd::Par(a, b) => ctx.par(a.fill(ctx, x), b.fill(ctx, x)),
            HoleCmd::Conj(a, b) => ctx.conj(a.fill(ctx, x), b.fill(ctx, x)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecursionInstance {
    pub f: HoleCmd,
    pub s: CmdId,
    pub p_x: StateSet,
    pub variant: VariantSpec,
}

pub fn check_recursion_theorem(
    ctx: &Ctx,
    space: &StateSpace,
    inst: &RecursionInstance,
    depth: usize,
    engine: Engine,
) -> RuleReport {
    let RecursionInstance { f, s, p_x, variant } = inst;
    let mut premises = vec![
        ("well-founded".to_string(), variant.is_well_founded()),
    ];
    premises.push((
        "early-exit".to_string(),
        refines(
            ctx,
            ctx.seq(ctx.assert_cmd(p_x), *s),
            f.fill(ctx, ctx.top()),
            depth,
            engine,
        )
        .holds(),
    ));
    for k in &variant.carrier {
        let z_eq_k = variant.states_eq(space, k);
        let z_lt_k = variant.states_lt(space, k);
        let arg = ctx.seq(ctx.assert_cmd(&z_lt_k.union(p_x)), *s);
        premises.push((
            format!("unfold {k}"),
            refines(
                ctx,
                ctx.seq(ctx.assert_cmd(&z_eq_k), *s),
                f.fill(ctx, arg),
                depth,
                engine,
            )
            .holds(),
        ));
    }
    let nu_f = ctx.nu(|x| f.fill(ctx, x));
    let concl = refines(ctx, *s, nu_f, depth, engine);
    conclude(premises, concl)
}

#[derive(Clone, Debug)]
pub struct WhileInstance {
    pub b: Expr,
    pub c: CmdId,
    pub r: StateRel,
    pub q: StateRel,
    pub p: StateSet,
    pub p_t: StateSet,
    pub p_f: StateSet,
    pub p_x: StateSet,
    pub variant: VariantSpec,
}

pub fn check_while_theorem(
    ctx: &Ctx,
    space: &StateSpace,
    inst: &WhileInstance,
    depth: usize,
    engine: Engine,
) -> RuleReport {
    let WhileInstance {
        b,
        c,
        r,
        q,
        p,
        p_t,
        p_f,
        p_x,
        variant,
    } = inst;
    let finrel_q = refl_trans_closure(q);
    let mut premises = vec![
        ("well-founded".to_string(), variant.is_well_founded()),
        ("transitive".to_string(), variant.is_transitive()),
        ("q-tolerates".to_string(), tolerates(&finrel_q, r, p)),
        (
            "non-increasing".to_string(),
            r.is_subset(&variant.non_increasing_rel(space)),
        ),
    ];
    premises.push((
        "while-true".to_string(),
        establishes(ctx, space, p, r, b, Value::Bool(true), p_t, depth, engine).holds(),
    ));
    premises.push((
        "while-false".to_string(),
        establishes(ctx, space, p, r, b, Value::Bool(false), p_f, depth, engine).holds(),
    ));
    for k in possible_values(space, b) {
        premises.push((
            format!("while-bool {k}"),
            establishes(
                ctx,
                space,
                p,
                r,
                b,
                k,
                &const_pred(space, k.is_bool()),
                depth,
                engine,
            )
            .holds(),
        ));
    }
    premises.push((
        "while-infeas".to_string(),
        establishes(
            ctx,
            space,
            &p_x.inter(p),
            r,
            b,
            Value::Bool(true),
            &space.empty_set(),
            depth,
            engine,
        )
        .holds(),
    ));
    let rely = ctx.rely(r);
    for k in &variant.carrier {
        let pre = p_t.inter(&variant.states_le(space, k));
        let post = range_restrict(&finrel_q, &variant.states_lt(space, k).union(p_x).inter(p));
        let spec = ctx.conj(rely, ctx.seq(ctx.assert_cmd(&pre), ctx.post_spec(&post)));
        premises.push((
            format!("while-ref {k}"),
            refines(ctx, spec, *c, depth, engine).holds(),
        ));
    }
    let spec = ctx.conj(
        rely,
        ctx.seq(
            ctx.assert_cmd(p),
            ctx.post_spec(&range_restrict(&finrel_q, p_f)),
        ),
    );
    let loop_cmd = while_loop(ctx, space, b, *c);
    let concl = refines(ctx, spec, loop_cmd, depth, engine);
    conclude(premises, concl)
}

// ---------------------------------------------------------------------------
// Negative control: the sequential while rule under interference
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct NegativeControl {
    /// The sequential premise `{p ∩ b} c {p}` holds.
    pub sequential_premise: Verdict,
    /// The sequential conclusion `{p} while b do c od {p ∩ ¬b}` under free
    /// interference — expected to fail, with the counterexample trace.
    pub unconstrained: Verdict,
    /// The same conclusion with interference restricted to the identity
    /// rely — expected to hold.
    pub under_identity_rely: Verdict,
    /// At finite depth the greatest and least fixed point readings of an
    /// unguarded loop differ in terminated traces; true when detected.
    pub nu_mu_divergence: bool,
}

/// Decrement loop over x in {0,1,2}: `while not (x = 0) do x := x - 1 od`.
/// The sequential rule's premises hold, but an environment that bumps `x`
/// after the final guard read breaks the sequential postcondition.
pub fn negative_control_hoare_loop(depth: usize, engine: Engine) -> NegativeControl {
    let space = StateSpaceDecl::new()
        .var("x", Domain::IntRange(0, 2))
        .build()
        .unwrap();
    let ctx = Ctx::for_space(&space);
    let x = Expr::deref_var("x");
    let x_is_0 = Expr::bin(x.clone(), BinOp::Eq, Expr::konst(Value::Int(0)));
    let b = Expr::un(UnOp::Not, x_is_0);
    let body = crate::command::assign(
        &ctx,
        &space,
        &LvExpr::Variable("x".into()),
        &Expr::bin(x.clone(), BinOp::Sub, Expr::konst(Value::Int(1))),
    );
    let loop_cmd = while_loop(&ctx, &space, &b, body);
    let p = space.full_set();
    let x0 = space.set_where(|s| space.value(s, &LValue::base("x")) == Some(Value::Int(0)));
    // sequential premise {p ∩ b} c {p}: trivial with p = Sigma
    let guard_true = space.set_where(|s| {
        crate::command::eval_in_state(&space, &b, s) == Some(Value::Bool(true))
    });
    let sequential_premise = hoare_triple(&ctx, &p.inter(&guard_true), body, &p, depth, engine);
    let unconstrained = hoare_triple(&ctx, &p, loop_cmd, &x0, depth, engine);
    let rely_id = ctx.conj(ctx.rely(&space.identity_rel()), loop_cmd);
    let under_identity_rely = hoare_triple(&ctx, &p, rely_id, &x0, depth, engine);
    // unguarded loop: while x = 0 do nil od read as nu vs mu
    let b0 = Expr::bin(x, BinOp::Eq, Expr::konst(Value::Int(0)));
    let nu_loop = while_loop(&ctx, &space, &b0, ctx.nil());
    let mu_loop = ctx.mu(|xv| conditional(&ctx, &space, &b0, ctx.seq(ctx.nil(), xv), ctx.nil()));
    let nu_mu_divergence = !equals(&ctx, nu_loop, mu_loop, depth, engine).holds();
    NegativeControl {
        sequential_premise,
        unconstrained,
        under_identity_rely,
        nu_mu_divergence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalogue_smoke_exhaustive_subset() {
        // full exhaustive run lives in the acceptance suite; here a quick
        // spot check per law with a couple of bindings each
        let ctx = Ctx::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &id in LAW_IDS {
            for _ in 0..3 {
                let b = random_bindings(&ctx, &mut rng);
                let v = check_law(&ctx, id, &b, 3, Engine::Enum).unwrap();
                assert!(v.holds(), "law {id} failed on {b:?}: {:?}", v.outcome);
            }
        }
    }

    #[test]
    fn unknown_law_id() {
        let ctx = Ctx::new(2);
        assert!(check_law(&ctx, "no-such-law", &LawBindings::default(), 2, Engine::Enum).is_err());
    }

    #[test]
    fn assert_merge_paper_instance() {
        // assert({s0}) ; assert({s0,s1}) = assert({s0})
        let ctx = Ctx::new(2);
        let mut p1 = StateSet::empty(2);
        p1.insert(0);
        let b = LawBindings {
            sets: vec![p1, ctx.full_set()],
            ..Default::default()
        };
        assert!(check_law(&ctx, "assert-merge", &b, 3, Engine::Enum).unwrap().holds());
    }

    #[test]
    fn const_rule_holds() {
        let space = StateSpaceDecl::new()
            .var("x", Domain::IntRange(0, 1))
            .build()
            .unwrap();
        let ctx = Ctx::for_space(&space);
        let rule = ExprRule::Const {
            kappa: Value::Int(1),
            k: Value::Int(1),
        };
        let rep = check_expression_rule(
            &ctx,
            &space,
            &rule,
            &space.full_set(),
            &space.identity_rel(),
            3,
            Engine::Graph,
        );
        assert_eq!(rep.outcome, RuleOutcome::Holds);
    }

    #[test]
    fn deref_rule_unstable_post_is_premise_violation() {
        let space = StateSpaceDecl::new()
            .var("x", Domain::IntRange(0, 1))
            .build()
            .unwrap();
        let ctx = Ctx::for_space(&space);
        let x0 = space.set_where(|s| s == 0);
        let rule = ExprRule::Deref {
            lve: LvExpr::Variable("x".into()),
            k: Value::Int(0),
            p1: PostMap {
                by_lvalue: vec![(LValue::base("x"), space.full_set())],
                ..Default::default()
            },
            post: PostMap {
                by_value: vec![(Value::Int(0), x0)],
                ..Default::default()
            },
        };
        let rep = check_expression_rule(
            &ctx,
            &space,
            &rule,
            &space.full_set(),
            &space.univ_rel(),
            3,
            Engine::Graph,
        );
        assert!(matches!(rep.outcome, RuleOutcome::PremiseViolation(_)));
    }

    #[test]
    fn recursion_identity_function() {
        // f = (λx. x), s = top: premises trivial, conclusion top >= nu(id)
        let space = StateSpaceDecl::new()
            .var("x", Domain::IntRange(0, 1))
            .build()
            .unwrap();
        let ctx = Ctx::for_space(&space);
        let inst = RecursionInstance {
            f: HoleCmd::Hole,
            s: ctx.top(),
            p_x: space.empty_set(),
            variant: VariantSpec::int_less(Expr::deref_var("x"), 0, 1),
        };
        let rep = check_recursion_theorem(&ctx, &space, &inst, 3, Engine::Graph);
        assert_eq!(rep.outcome, RuleOutcome::Holds);
    }

    #[test]
    fn negative_control_behaves() {
        let nc = negative_control_hoare_loop(5, Engine::Graph);
        assert!(nc.sequential_premise.holds());
        assert!(matches!(nc.unconstrained.outcome, Outcome::Fails(_)));
        assert!(nc.under_identity_rely.holds());
        assert!(nc.nu_mu_divergence);
    }
}
