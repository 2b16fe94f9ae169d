//! The wide-spectrum command language: primitive commands, fixed-point
//! binders, and expansion of every derived form (assert, guar, rely, term,
//! idle, frame, opt, atomic and postcondition specifications, conditionals,
//! loops, iterations) into primitives at construction time.
//!
//! Commands are hash-consed inside a [`Ctx`]; a command is a [`CmdId`]
//! index into the context. Derived-form expansions are cached so repeated
//! construction shares nodes.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::state::{LValue, SmallSet, StateRel, StateSet, StateSpace, Value};

pub type CmdId = u32;
pub type BinderId = u32;

/// A command node. `Choice` is n-ary and flattened; `Choice([])` is never
/// constructed (it normalizes to `Bot`).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Cmd {
    /// Least command: everywhere infeasible.
    Bot,
    /// Dijkstra's abort: any behaviour whatsoever.
    Top,
    /// Instantaneous test that the current state lies in the set.
    Test(StateSet),
    /// Single atomic program transition satisfying the relation.
    Pgm(StateRel),
    /// Single atomic environment transition satisfying the relation.
    Env(StateRel),
    Choice(Vec<CmdId>),
    Seq(CmdId, CmdId),
    Par(CmdId, CmdId),
    Conj(CmdId, CmdId),
    Mu(BinderId, CmdId),
    Nu(BinderId, CmdId),
    Var(BinderId),
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum DerivedKey {
    Fin(CmdId),
    Om(CmdId),
    Nil,
    Alpha,
    Term,
    Idle,
    Fair,
    Assert(StateSet),
    Guar(StateRel),
    Rely(StateRel),
    EnvConstrained(StateRel),
    Opt(StateRel),
    Atomic(StateRel),
    PostSpec(StateRel),
    EvalExpr(Expr, Value),
    EvalLv(LvExpr, LValue),
}

#[derive(Default)]
struct CtxInner {
    nodes: Vec<Cmd>,
    cons: HashMap<Cmd, CmdId>,
    next_binder: BinderId,
    derived: HashMap<DerivedKey, CmdId>,
}

/// Hash-consing context for commands over a state universe of fixed size.
pub struct Ctx {
    n: usize,
    inner: RefCell<CtxInner>,
}

impl Ctx {
    pub fn new(universe_size: usize) -> Self {
        Ctx {
            n: universe_size,
            inner: RefCell::new(CtxInner::default()),
        }
    }

    pub fn for_space(space: &StateSpace) -> Self {
        Ctx::new(space.len())
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    pub fn get(&self, id: CmdId) -> Cmd {
        self.inner.borrow().nodes[id as usize].clone()
    }

    pub fn node_count(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    fn intern(&self, cmd: Cmd) -> CmdId {
        let mut inner = self.inner.borrow_mut();
        if let Some(&id) = inner.cons.get(&cmd) {
            return id;
        }
        let id = inner.nodes.len() as CmdId;
        inner.nodes.push(cmd.clone());
        inner.cons.insert(cmd, id);
        id
    }

    fn derived(&self, key: DerivedKey, build: impl FnOnce() -> CmdId) -> CmdId {
        if let Some(&id) = self.inner.borrow().derived.get(&key) {
            return id;
        }
        let id = build();
        self.inner.borrow_mut().derived.insert(key, id);
        id
    }

    // -- primitives ---------------------------------------------------------

    pub fn bot(&self) -> CmdId {
        self.intern(Cmd::Bot)
    }

    pub fn top(&self) -> CmdId {
        self.intern(Cmd::Top)
    }

    pub fn test(&self, p: StateSet) -> CmdId {
        self.intern(Cmd::Test(p))
    }

    pub fn pgm(&self, r: StateRel) -> CmdId {
        self.intern(Cmd::Pgm(r))
    }

    pub fn env_step(&self, r: StateRel) -> CmdId {
        self.intern(Cmd::Env(r))
    }

    /// N-ary choice, flattened and canonicalized. `Bot` branches are
    /// dropped (choice with the least element is the identity) and an
    /// empty choice is `Bot`.
    pub fn choice(&self, cs: Vec<CmdId>) -> CmdId {
        let mut flat = BTreeSet::new();
        let bot = self.bot();
        let mut stack = cs;
        while let Some(c) = stack.pop() {
            if c == bot {
                continue;
            }
            match self.get(c) {
                Cmd::Choice(kids) => stack.extend(kids),
                _ => {
                    flat.insert(c);
                }
            }
        }
        let flat: Vec<CmdId> = flat.into_iter().collect();
        match flat.len() {
            0 => bot,
            1 => flat[0],
            _ => self.intern(Cmd::Choice(flat)),
        }
    }

    pub fn seq(&self, a: CmdId, b: CmdId) -> CmdId {
        self.intern(Cmd::Seq(a, b))
    }

    pub fn seq_all(&self, cs: &[CmdId]) -> CmdId {
        let mut it = cs.iter().rev();
        let mut acc = *it.next().expect("seq_all of empty slice");
        for &c in it {
            acc = self.seq(c, acc);
        }
        acc
    }

    pub fn par(&self, a: CmdId, b: CmdId) -> CmdId {
        self.intern(Cmd::Par(a, b))
    }

    pub fn conj(&self, a: CmdId, b: CmdId) -> CmdId {
        self.intern(Cmd::Conj(a, b))
    }

    pub fn var(&self, b: BinderId) -> CmdId {
        self.intern(Cmd::Var(b))
    }

    pub fn fresh_binder(&self) -> BinderId {
        let mut inner = self.inner.borrow_mut();
        let b = inner.next_binder;
        inner.next_binder += 1;
        b
    }

    pub fn mu(&self, body: impl FnOnce(CmdId) -> CmdId) -> CmdId {
        let b = self.fresh_binder();
        let v = self.var(b);
        let body = body(v);
        self.intern(Cmd::Mu(b, body))
    }

    pub fn nu(&self, body: impl FnOnce(CmdId) -> CmdId) -> CmdId {
        let b = self.fresh_binder();
        let v = self.var(b);
        let body = body(v);
        self.intern(Cmd::Nu(b, body))
    }

    // -- relation/set helpers ----------------------------------------------

    pub fn full_set(&self) -> StateSet {
        let mut s = StateSet::empty(self.n);
        for i in 0..self.n as u32 {
            s.insert(i);
        }
        s
    }

    pub fn univ_rel(&self) -> StateRel {
        let mut r = StateRel::empty(self.n);
        for a in 0..self.n as u32 {
            for b in 0..self.n as u32 {
                r.insert(a, b);
            }
        }
        r
    }

    pub fn id_rel(&self) -> StateRel {
        let mut r = StateRel::empty(self.n);
        for a in 0..self.n as u32 {
            r.insert(a, a);
        }
        r
    }

    // -- derived commands ---------------------------------------------------

    /// The null command: the test that always succeeds.
    pub fn nil(&self) -> CmdId {
        self.derived(DerivedKey::Nil, || self.test(self.full_set()))
    }

    /// Assert command: terminates from states in `p`, aborts elsewhere.
    pub fn assert_cmd(&self, p: &StateSet) -> CmdId {
        self.derived(DerivedKey::Assert(p.clone()), || {
            let fail = self.seq(self.test(p.complement()), self.top());
            self.choice(vec![self.nil(), fail])
        })
    }

    /// Any single transition, program or environment.
    pub fn alpha(&self) -> CmdId {
        self.derived(DerivedKey::Alpha, || {
            let u = self.univ_rel();
            self.choice(vec![self.pgm(u.clone()), self.env_step(u)])
        })
    }

    /// Finite iteration: least fixed point of `x -> nil | c ; x`.
    pub fn fin_iter(&self, c: CmdId) -> CmdId {
        self.derived(DerivedKey::Fin(c), || {
            self.mu(|x| self.choice(vec![self.nil(), self.seq(c, x)]))
        })
    }

    /// Possibly-infinite iteration: greatest fixed point of the same body.
    pub fn om_iter(&self, c: CmdId) -> CmdId {
        self.derived(DerivedKey::Om(c), || {
            self.nu(|x| self.choice(vec![self.nil(), self.seq(c, x)]))
        })
    }

    /// Every program transition satisfies `g`; environment unconstrained.
    pub fn guar(&self, g: &StateRel) -> CmdId {
        self.derived(DerivedKey::Guar(g.clone()), || {
            let step = self.choice(vec![self.pgm(g.clone()), self.env_step(self.univ_rel())]);
            self.om_iter(step)
        })
    }

    /// Assumes environment transitions satisfy `r`; aborts on violation.
    pub fn rely(&self, r: &StateRel) -> CmdId {
        self.derived(DerivedKey::Rely(r.clone()), || {
            let violate = self.seq(self.env_step(r.complement()), self.top());
            let step = self.choice(vec![self.alpha(), violate]);
            self.om_iter(step)
        })
    }

    /// Environment transitions restricted (not aborted) to `r`: iteration
    /// of any program step or an environment step within `r`. Used for
    /// feasibility questions, where the abort-based rely reading would make
    /// everything trivially feasible.
    pub fn env_constrained(&self, r: &StateRel) -> CmdId {
        self.derived(DerivedKey::EnvConstrained(r.clone()), || {
            let step = self.choice(vec![self.pgm(self.univ_rel()), self.env_step(r.clone())]);
            self.om_iter(step)
        })
    }

    /// Finitely many program transitions; environment unconstrained.
    pub fn term(&self) -> CmdId {
        self.derived(DerivedKey::Term, || {
            let e = self.env_step(self.univ_rel());
            self.seq(self.fin_iter(self.alpha()), self.om_iter(e))
        })
    }

    /// Finite stuttering only: `guar(id) ⋒ term`.
    pub fn idle(&self) -> CmdId {
        self.derived(DerivedKey::Idle, || {
            self.conj(self.guar(&self.id_rel()), self.term())
        })
    }

    /// Restrict `c` so its program transitions modify only l-values in `frame`.
    pub fn frame(&self, space: &StateSpace, frame: &[LValue], c: CmdId) -> CmdId {
        let outside = space.complement_lvalues(frame);
        let keep = space
            .identity_on(&outside)
            .expect("frame l-values must be declared");
        self.conj(self.guar(&keep), c)
    }

    /// A single program transition in `r`, or immediate termination from
    /// states where `r` is satisfied by not changing the state.
    pub fn opt(&self, r: &StateRel) -> CmdId {
        self.derived(DerivedKey::Opt(r.clone()), || {
            let mut fixed = StateSet::empty(self.n);
            for s in 0..self.n as u32 {
                if r.contains(s, s) {
                    fixed.insert(s);
                }
            }
            self.choice(vec![self.pgm(r.clone()), self.test(fixed)])
        })
    }

    /// Achieves `r` in one atomic program transition, with stuttering and
    /// arbitrary environment steps before and after.
    pub fn atomic_spec(&self, r: &StateRel) -> CmdId {
        self.derived(DerivedKey::Atomic(r.clone()), || {
            self.seq_all(&[self.idle(), self.opt(r), self.idle()])
        })
    }

    /// Postcondition specification: terminate in a final state related to
    /// the initial state by `q`.
    pub fn post_spec(&self, q: &StateRel) -> CmdId {
        self.derived(DerivedKey::PostSpec(q.clone()), || {
            let mut branches = Vec::with_capacity(self.n);
            for s in 0..self.n as u32 {
                let mut start = StateSet::empty(self.n);
                start.insert(s);
                let mut finals = StateSet::empty(self.n);
                for t in 0..self.n as u32 {
                    if q.contains(s, t) {
                        finals.insert(t);
                    }
                }
                branches.push(self.seq_all(&[
                    self.test(start),
                    self.term(),
                    self.test(finals),
                ]));
            }
            self.choice(branches)
        })
    }

    /// Disallows an infinite contiguous run of environment transitions.
    pub fn fair(&self) -> CmdId {
        self.derived(DerivedKey::Fair, || {
            let e = self.env_step(self.univ_rel());
            let burst = self.seq(self.fin_iter(e), self.pgm(self.univ_rel()));
            self.seq(self.om_iter(burst), self.fin_iter(e))
        })
    }

    // -- substitution -------------------------------------------------------

    /// Capture-free substitution of `rep` for `Var(binder)`. Binders are
    /// globally unique so shadowing cannot occur.
    pub fn subst(&self, c: CmdId, binder: BinderId, rep: CmdId) -> CmdId {
        let mut memo = HashMap::new();
        self.subst_inner(c, binder, rep, &mut memo)
    }

    fn subst_inner(
        &self,
        c: CmdId,
        binder: BinderId,
        rep: CmdId,
        memo: &mut HashMap<CmdId, CmdId>,
    ) -> CmdId {
        if let Some(&r) = memo.get(&c) {
            return r;
        }
        let out = match self.get(c) {
            Cmd::Var(b) if b == binder => rep,
            Cmd::Bot | Cmd::Top | Cmd::Test(_) | Cmd::Pgm(_) | Cmd::Env(_) | Cmd::Var(_) => c,
            Cmd::Choice(kids) => {
                let kids = kids
                    .into_iter()
                    .map(|k| self.subst_inner(k, binder, rep, memo))
                    .collect();
                self.choice(kids)
            }
            Cmd::Seq(a, b) => {
                let a2 = self.subst_inner(a, binder, rep, memo);
                let b2 = self.subst_inner(b, binder, rep, memo);
                self.seq(a2, b2)
            }
            Cmd::Par(a, b) => {
                let a2 = self.subst_inner(a, binder, rep, memo);
                let b2 = self.subst_inner(b, binder, rep, memo);
                self.par(a2, b2)
            }
            Cmd::Conj(a, b) => {
                let a2 = self.subst_inner(a, binder, rep, memo);
                let b2 = self.subst_inner(b, binder, rep, memo);
                self.conj(a2, b2)
            }
            Cmd::Mu(b, body) => {
                debug_assert_ne!(b, binder);
                let body2 = self.subst_inner(body, binder, rep, memo);
                self.intern(Cmd::Mu(b, body2))
            }
            Cmd::Nu(b, body) => {
                debug_assert_ne!(b, binder);
                let body2 = self.subst_inner(body, binder, rep, memo);
                self.intern(Cmd::Nu(b, body2))
            }
        };
        memo.insert(c, out);
        out
    }

    /// True when `c` contains no free `Var` nodes.
    pub fn is_closed(&self, c: CmdId) -> bool {
        fn go(ctx: &Ctx, c: CmdId, bound: &mut Vec<BinderId>, seen: &mut HashMap<CmdId, bool>) -> bool {
            // memo only valid for closed-at-top usage; skip memo under binders
            if bound.is_empty() {
                if let Some(&b) = seen.get(&c) {
                    return b;
                }
            }
            let ok = match ctx.get(c) {
                Cmd::Var(b) => bound.contains(&b),
                Cmd::Bot | Cmd::Top | Cmd::Test(_) | Cmd::Pgm(_) | Cmd::Env(_) => true,
                Cmd::Choice(kids) => kids.iter().all(|&k| go(ctx, k, bound, seen)),
                Cmd::Seq(a, b) | Cmd::Par(a, b) | Cmd::Conj(a, b) => {
                    go(ctx, a, bound, seen) && go(ctx, b, bound, seen)
                }
                Cmd::Mu(b, body) | Cmd::Nu(b, body) => {
                    bound.push(b);
                    let ok = go(ctx, body, bound, seen);
                    bound.pop();
                    ok
                }
            };
            if bound.is_empty() {
                seen.insert(c, ok);
            }
            ok
        }
        go(self, c, &mut Vec::new(), &mut HashMap::new())
    }

    pub fn display(&self, c: CmdId) -> String {
        let mut s = String::new();
        self.display_inner(c, &mut s);
        s
    }

    fn display_inner(&self, c: CmdId, out: &mut String) {
        match self.get(c) {
            Cmd::Bot => out.push_str("bot"),
            Cmd::Top => out.push_str("top"),
            Cmd::Test(p) => {
                let _ = write!(out, "test{:?}", p);
            }
            Cmd::Pgm(r) => {
                let _ = write!(out, "pgm[{} pairs]", r.len());
            }
            Cmd::Env(r) => {
                let _ = write!(out, "env[{} pairs]", r.len());
            }
            Cmd::Choice(kids) => {
                out.push('(');
                for (i, k) in kids.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" | ");
                    }
                    self.display_inner(*k, out);
                }
                out.push(')');
            }
            Cmd::Seq(a, b) => {
                out.push('(');
                self.display_inner(a, out);
                out.push_str(" ; ");
                self.display_inner(b, out);
                out.push(')');
            }
            Cmd::Par(a, b) => {
                out.push('(');
                self.display_inner(a, out);
                out.push_str(" || ");
                self.display_inner(b, out);
                out.push(')');
            }
            Cmd::Conj(a, b) => {
                out.push('(');
                self.display_inner(a, out);
                out.push_str(" /\\ ");
                self.display_inner(b, out);
                out.push(')');
            }
            Cmd::Mu(b, body) => {
                let _ = write!(out, "mu x{b}. ");
                self.display_inner(body, out);
            }
            Cmd::Nu(b, body) => {
                let _ = write!(out, "nu x{b}. ");
                self.display_inner(body, out);
            }
            Cmd::Var(b) => {
                let _ = write!(out, "x{b}");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum BinOp {
    And,
    Or,
    Eq,
    /// Integer membership in a finite set.
    In,
    Add,
    /// Integer subtraction or set difference, by operand type.
    Sub,
    Union,
    Inter,
    SubsetEq,
}

/// Expression syntax: constants, dereferencing of l-value expressions,
/// unary and binary operators. Not statically typed; ill-typed or
/// out-of-domain applications make the evaluation branch infeasible.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Const(Value),
    Deref(LvExpr),
    Unary(UnOp, Box<Expr>),
    Binary(Box<Expr>, BinOp, Box<Expr>),
}

impl Expr {
    pub fn deref_var(name: &str) -> Expr {
        Expr::Deref(LvExpr::Variable(name.to_string()))
    }

    pub fn konst(v: Value) -> Expr {
        Expr::Const(v)
    }

    pub fn bin(a: Expr, op: BinOp, b: Expr) -> Expr {
        Expr::Binary(Box::new(a), op, Box::new(b))
    }

    pub fn un(op: UnOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }
}

/// L-value expression: a variable or an indexed array reference.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum LvExpr {
    Variable(String),
    ArrayIndex(Box<LvExpr>, Box<Expr>),
}

/// Bounds for expression results, collected from the declared domains and
/// the constants of the expression under evaluation. Results outside these
/// bounds are infeasible.
#[derive(Clone, Debug)]
pub struct ValueUniv {
    ints: BTreeSet<i64>,
    set_univ: SmallSet,
}

impl ValueUniv {
    pub fn for_space_and_expr(space: &StateSpace, e: &Expr) -> ValueUniv {
        let mut u = ValueUniv {
            ints: BTreeSet::new(),
            set_univ: SmallSet::empty(),
        };
        for lv in space.lvalues() {
            if let Some(d) = space.domain_of(lv) {
                for v in d.values() {
                    u.absorb(&v);
                }
            }
        }
        u.absorb_expr(e);
        u
    }

    fn absorb(&mut self, v: &Value) {
        match v {
            Value::Int(i) => {
                self.ints.insert(*i);
            }
            Value::Set(s) => self.set_univ = self.set_univ.union(s),
            Value::Bool(_) => {}
        }
    }

    fn absorb_expr(&mut self, e: &Expr) {
        match e {
            Expr::Const(v) => self.absorb(v),
            Expr::Deref(lve) => self.absorb_lv(lve),
            Expr::Unary(_, a) => self.absorb_expr(a),
            Expr::Binary(a, _, b) => {
                self.absorb_expr(a);
                self.absorb_expr(b);
            }
        }
    }

    fn absorb_lv(&mut self, lve: &LvExpr) {
        if let LvExpr::ArrayIndex(a, e) = lve {
            self.absorb_lv(a);
            self.absorb_expr(e);
        }
    }

    fn admits(&self, v: &Value) -> bool {
        match v {
            Value::Bool(_) => true,
            Value::Int(i) => self.ints.contains(i),
            Value::Set(s) => s.is_subset(&self.set_univ),
        }
    }
}

pub fn apply_unop(op: UnOp, v: &Value) -> Option<Value> {
    match (op, v) {
        (UnOp::Not, Value::Bool(b)) => Some(Value::Bool(!b)),
        (UnOp::Neg, Value::Int(i)) => Some(Value::Int(-i)),
        _ => None,
    }
}

pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Option<Value> {
    use Value::*;
    match (op, a, b) {
        (BinOp::And, Bool(x), Bool(y)) => Some(Bool(*x && *y)),
        (BinOp::Or, Bool(x), Bool(y)) => Some(Bool(*x || *y)),
        (BinOp::Eq, x, y) => Some(Bool(x == y)),
        (BinOp::In, Int(i), Set(s)) => {
            let e = u8::try_from(*i).ok()?;
            Some(Bool(s.contains(e)))
        }
        (BinOp::Add, Int(x), Int(y)) => Some(Int(x.checked_add(*y)?)),
        (BinOp::Sub, Int(x), Int(y)) => Some(Int(x.checked_sub(*y)?)),
        (BinOp::Sub, Set(x), Set(y)) => Some(Set(x.diff(y))),
        (BinOp::Union, Set(x), Set(y)) => Some(Set(x.union(y))),
        (BinOp::Inter, Set(x), Set(y)) => Some(Set(x.inter(y))),
        (BinOp::SubsetEq, Set(x), Set(y)) => Some(Bool(x.is_subset(y))),
        _ => None,
    }
}

/// Structural candidates for the l-values an l-value expression can denote.
pub fn possible_lvalues(space: &StateSpace, lve: &LvExpr) -> Vec<LValue> {
    match lve {
        LvExpr::Variable(v) => vec![LValue::base(v)],
        LvExpr::ArrayIndex(a, e) => {
            let bases = possible_lvalues(space, a);
            let idxs = possible_values(space, e);
            let mut out = Vec::new();
            for b in &bases {
                for i in &idxs {
                    out.push(LValue::indexed(b.clone(), *i));
                }
            }
            out
        }
    }
}

/// The values an expression can possibly evaluate to over the declared
/// domains; every other target value denotes `Bot`.
pub fn possible_values(space: &StateSpace, e: &Expr) -> Vec<Value> {
    let univ = ValueUniv::for_space_and_expr(space, e);
    possible_values_in(space, e, &univ)
}

fn possible_values_in(space: &StateSpace, e: &Expr, univ: &ValueUniv) -> Vec<Value> {
    let mut out: BTreeSet<Value> = BTreeSet::new();
    match e {
        Expr::Const(v) => {
            out.insert(*v);
        }
        Expr::Deref(lve) => {
            for lv in possible_lvalues(space, lve) {
                if let Some(d) = space.domain_of(&lv) {
                    out.extend(d.values());
                }
            }
        }
        Expr::Unary(op, a) => {
            for k1 in possible_values_in(space, a, univ) {
                if let Some(v) = apply_unop(*op, &k1) {
                    if univ.admits(&v) {
                        out.insert(v);
                    }
                }
            }
        }
        Expr::Binary(a, op, b) => {
            let ka = possible_values_in(space, a, univ);
            let kb = possible_values_in(space, b, univ);
            for k1 in &ka {
                for k2 in &kb {
                    if let Some(v) = apply_binop(*op, k1, k2) {
                        if univ.admits(&v) {
                            out.insert(v);
                        }
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Fine-grained evaluation of `e` to the value `k` as a command.
/// Infeasible evaluations denote `Bot`; successful evaluation is closed
/// under finite stuttering.
pub fn eval_expr(ctx: &Ctx, space: &StateSpace, e: &Expr, k: Value) -> CmdId {
    ctx.derived(DerivedKey::EvalExpr(e.clone(), k), || {
        eval_expr_uncached(ctx, space, e, k)
    })
}

fn eval_expr_uncached(ctx: &Ctx, space: &StateSpace, e: &Expr, k: Value) -> CmdId {
    let univ = ValueUniv::for_space_and_expr(space, e);
    match e {
        Expr::Const(kappa) => {
            if k == *kappa {
                ctx.idle()
            } else {
                ctx.bot()
            }
        }
        Expr::Unary(op, a) => {
            let mut branches = Vec::new();
            for k1 in possible_values_in(space, a, &univ) {
                if apply_unop(*op, &k1) == Some(k) {
                    branches.push(eval_expr(ctx, space, a, k1));
                }
            }
            ctx.choice(branches)
        }
        Expr::Binary(a, op, b) => {
            let ka = possible_values_in(space, a, &univ);
            let kb = possible_values_in(space, b, &univ);
            let mut branches = Vec::new();
            for k1 in &ka {
                for k2 in &kb {
                    if apply_binop(*op, k1, k2) == Some(k) {
                        branches.push(ctx.par(
                            eval_expr(ctx, space, a, *k1),
                            eval_expr(ctx, space, b, *k2),
                        ));
                    }
                }
            }
            ctx.choice(branches)
        }
        Expr::Deref(lve) => {
            let mut branches = Vec::new();
            for lv in possible_lvalues(space, lve) {
                if space.domain_of(&lv).is_none() {
                    continue;
                }
                let holds = space.set_where(|s| space.value(s, &lv) == Some(k));
                branches.push(ctx.seq_all(&[
                    eval_lvexpr(ctx, space, lve, &lv),
                    ctx.test(holds),
                    ctx.idle(),
                ]));
            }
            ctx.choice(branches)
        }
    }
}

/// Evaluation of an l-value expression to a concrete l-value.
pub fn eval_lvexpr(ctx: &Ctx, space: &StateSpace, lve: &LvExpr, lv: &LValue) -> CmdId {
    ctx.derived(DerivedKey::EvalLv(lve.clone(), lv.clone()), || match lve {
        LvExpr::Variable(v) => {
            if *lv == LValue::base(v) {
                ctx.idle()
            } else {
                ctx.bot()
            }
        }
        LvExpr::ArrayIndex(a, e) => match lv {
            LValue::Base(_) => ctx.bot(),
            LValue::Indexed(base, idx) => ctx.par(
                eval_lvexpr(ctx, space, a, base),
                eval_expr(ctx, space, e, *idx),
            ),
        },
    })
}

/// `if b then c else d fi`: aborts when the guard evaluates to a
/// non-boolean value.
pub fn conditional(ctx: &Ctx, space: &StateSpace, b: &Expr, c: CmdId, d: CmdId) -> CmdId {
    let mut branches = vec![
        ctx.seq(eval_expr(ctx, space, b, Value::Bool(true)), c),
        ctx.seq(eval_expr(ctx, space, b, Value::Bool(false)), d),
    ];
    for k in possible_values(space, b) {
        if !k.is_bool() {
            branches.push(ctx.seq(eval_expr(ctx, space, b, k), ctx.top()));
        }
    }
    ctx.choice(branches)
}

/// `while b do c od` as the greatest fixed point of the conditional body.
pub fn while_loop(ctx: &Ctx, space: &StateSpace, b: &Expr, c: CmdId) -> CmdId {
    ctx.nu(|x| conditional(ctx, space, b, ctx.seq(c, x), ctx.nil()))
}

/// Fine-grained assignment `lve := e`: evaluate the target l-value and the
/// right-hand side (in parallel, under interference), then perform a single
/// atomic write of the value to the l-value, leaving everything else
/// unchanged. The zero-step branch of `opt` makes a write of the value
/// already present invisible, which is harmless.
pub fn assign(ctx: &Ctx, space: &StateSpace, lve: &LvExpr, e: &Expr) -> CmdId {
    let mut branches = Vec::new();
    for lv in possible_lvalues(space, lve) {
        if space.domain_of(&lv).is_none() {
            continue;
        }
        let lv_idx = space.var_index(&lv).unwrap();
        for k in possible_values(space, e) {
            if !space.domain_of(&lv).unwrap().contains(&k) {
                continue;
            }
            let write = space.rel_where(|a, bst| {
                space.value_by_index(bst, lv_idx) == k
                    && space.lvalues().all(|other| {
                        other == &lv || space.value(a, other) == space.value(bst, other)
                    })
            });
            let read = ctx.par(
                eval_lvexpr(ctx, space, lve, &lv),
                eval_expr(ctx, space, e, k),
            );
            branches.push(ctx.seq(read, ctx.opt(&write)));
        }
    }
    ctx.choice(branches)
}

/// Deterministic value of `e` in a single state, when defined. This is the
/// standard (atomic) expression semantics, used for variant expressions.
pub fn eval_in_state(space: &StateSpace, e: &Expr, sid: u32) -> Option<Value> {
    match e {
        Expr::Const(v) => Some(*v),
        Expr::Deref(lve) => {
            let lv = resolve_lvexpr(space, lve, sid)?;
            space.value(sid, &lv)
        }
        Expr::Unary(op, a) => apply_unop(*op, &eval_in_state(space, a, sid)?),
        Expr::Binary(a, op, b) => apply_binop(
            *op,
            &eval_in_state(space, a, sid)?,
            &eval_in_state(space, b, sid)?,
        ),
    }
}

fn resolve_lvexpr(space: &StateSpace, lve: &LvExpr, sid: u32) -> Option<LValue> {
    match lve {
        LvExpr::Variable(v) => Some(LValue::base(v)),
        LvExpr::ArrayIndex(a, e) => {
            let base = resolve_lvexpr(space, a, sid)?;
            let idx = eval_in_state(space, e, sid)?;
            Some(LValue::indexed(base, idx))
        }
    }
}

// ---------------------------------------------------------------------------
// Variants
// ---------------------------------------------------------------------------

/// A variant expression together with a strict well-founded order on its
/// value carrier. The non-strict order is the reflexive closure restricted
/// to the carrier.
#[derive(Clone, Debug)]
pub struct VariantSpec {
    pub expr: Expr,
    pub carrier: Vec<Value>,
    strict: Vec<(usize, usize)>,
}

impl VariantSpec {
    pub fn new(expr: Expr, carrier: Vec<Value>, lt: impl Fn(&Value, &Value) -> bool) -> Self {
        let mut strict = Vec::new();
        for (i, a) in carrier.iter().enumerate() {
            for (j, b) in carrier.iter().enumerate() {
                if lt(a, b) {
                    strict.push((i, j));
                }
            }
        }
        VariantSpec {
            expr,
            carrier,
            strict,
        }
    }

    /// Integer variant under strict `<` on the given range.
    pub fn int_less(expr: Expr, lo: i64, hi: i64) -> Self {
        let carrier = (lo..=hi).map(Value::Int).collect();
        VariantSpec::new(expr, carrier, |a, b| {
            a.as_int().zip(b.as_int()).is_some_and(|(x, y)| x < y)
        })
    }

    /// Finite-set variant under strict subset ordering.
    pub fn strict_subset(expr: Expr, elems: &[u8]) -> Self {
        let carrier = crate::state::Domain::SetsOver(elems.to_vec()).values();
        VariantSpec::new(expr, carrier, |a, b| {
            a.as_set()
                .zip(b.as_set())
                .is_some_and(|(x, y)| x.is_strict_subset(&y))
        })
    }

    fn idx(&self, v: &Value) -> Option<usize> {
        self.carrier.iter().position(|c| c == v)
    }

    pub fn lt(&self, a: &Value, b: &Value) -> bool {
        match (self.idx(a), self.idx(b)) {
            (Some(i), Some(j)) => self.strict.contains(&(i, j)),
            _ => false,
        }
    }

    pub fn le(&self, a: &Value, b: &Value) -> bool {
        (a == b && self.idx(a).is_some()) || self.lt(a, b)
    }

    pub fn is_well_founded(&self) -> bool {
        crate::state::is_well_founded(self.carrier.len(), &self.strict)
    }

    pub fn is_transitive(&self) -> bool {
        for &(a, b) in &self.strict {
            for &(b2, c) in &self.strict {
                if b == b2 && !self.strict.contains(&(a, c)) {
                    return false;
                }
            }
        }
        true
    }

    /// Variant value in a state, when the expression evaluates within the
    /// carrier.
    pub fn value_in(&self, space: &StateSpace, sid: u32) -> Option<Value> {
        let v = eval_in_state(space, &self.expr, sid)?;
        self.idx(&v).map(|_| v)
    }

    /// States whose variant value is strictly below `k`.
    pub fn states_lt(&self, space: &StateSpace, k: &Value) -> StateSet {
        space.set_where(|s| {
            self.value_in(space, s)
                .map(|v| self.lt(&v, k))
                .unwrap_or(false)
        })
    }

    /// States whose variant value is at or below `k`.
    pub fn states_le(&self, space: &StateSpace, k: &Value) -> StateSet {
        space.set_where(|s| {
            self.value_in(space, s)
                .map(|v| self.le(&v, k))
                .unwrap_or(false)
        })
    }

    /// States whose variant value equals `k`.
    pub fn states_eq(&self, space: &StateSpace, k: &Value) -> StateSet {
        space.set_where(|s| self.value_in(space, s).as_ref() == Some(k))
    }

    /// The relation `z' ≦ z`: interference may not increase the variant.
    pub fn non_increasing_rel(&self, space: &StateSpace) -> StateRel {
        space.rel_where(|a, b| {
            match (self.value_in(space, a), self.value_in(space, b)) {
                (Some(za), Some(zb)) => self.le(&zb, &za),
                _ => false,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Domain, StateSpaceDecl};

    fn space() -> StateSpace {
        StateSpaceDecl::new()
            .var("x", Domain::IntRange(0, 1))
            .build()
            .unwrap()
    }

    #[test]
    fn choice_normalization() {
        let ctx = Ctx::new(2);
        assert_eq!(ctx.choice(vec![]), ctx.bot());
        let t = ctx.test(ctx.full_set());
        assert_eq!(ctx.choice(vec![t]), t);
        assert_eq!(ctx.choice(vec![t, ctx.bot()]), t);
        // flattening
        let a = ctx.pgm(ctx.id_rel());
        let nested = ctx.choice(vec![ctx.choice(vec![t, a]), t]);
        assert_eq!(nested, ctx.choice(vec![a, t]));
    }

    #[test]
    fn nil_is_full_test() {
        let ctx = Ctx::new(3);
        assert_eq!(ctx.get(ctx.nil()), Cmd::Test(ctx.full_set()));
    }

    #[test]
    fn assert_extremes() {
        let ctx = Ctx::new(2);
        // assert(Σ) expands to τ ∨ test(∅);⊤; the abort branch is
        // syntactically present but the test is empty.
        let full = ctx.assert_cmd(&ctx.full_set());
        match ctx.get(full) {
            Cmd::Choice(kids) => assert_eq!(kids.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_consing_shares() {
        let ctx = Ctx::new(2);
        assert_eq!(ctx.term(), ctx.term());
        assert_eq!(ctx.idle(), ctx.idle());
        let r = ctx.id_rel();
        assert_eq!(ctx.guar(&r), ctx.guar(&r));
        let c = ctx.pgm(ctx.univ_rel());
        assert_eq!(ctx.fin_iter(c), ctx.fin_iter(c));
    }

    #[test]
    fn expansion_is_primitive_only() {
        let ctx = Ctx::new(2);
        let sp = space();
        let e = Expr::bin(Expr::deref_var("x"), BinOp::Add, Expr::deref_var("x"));
        let c = eval_expr(&ctx, &sp, &e, Value::Int(1));
        // walk: only primitive constructors, Mu/Nu and bound Vars
        assert!(ctx.is_closed(c));
    }

    #[test]
    fn const_eval() {
        let ctx = Ctx::new(2);
        let sp = space();
        let five = Expr::konst(Value::Int(5));
        assert_eq!(eval_expr(&ctx, &sp, &five, Value::Int(5)), ctx.idle());
        assert_eq!(eval_expr(&ctx, &sp, &five, Value::Int(4)), ctx.bot());
    }

    #[test]
    fn lvexpr_eval() {
        let ctx = Ctx::new(2);
        let sp = space();
        let v = LvExpr::Variable("x".into());
        assert_eq!(eval_lvexpr(&ctx, &sp, &v, &LValue::base("x")), ctx.idle());
        assert_eq!(eval_lvexpr(&ctx, &sp, &v, &LValue::base("y")), ctx.bot());
        let arr = LvExpr::ArrayIndex(
            Box::new(LvExpr::Variable("a".into())),
            Box::new(Expr::konst(Value::Int(0))),
        );
        assert_eq!(eval_lvexpr(&ctx, &sp, &arr, &LValue::base("x")), ctx.bot());
    }

    #[test]
    fn possible_values_of_sum() {
        let sp = space();
        let e = Expr::bin(Expr::deref_var("x"), BinOp::Add, Expr::deref_var("x"));
        let vs = possible_values(&sp, &e);
        // 0+0, 0+1, 1+0 are in range; 1+1=2 is outside the declared ints
        assert_eq!(vs, vec![Value::Int(0), Value::Int(1)]);
    }

    #[test]
    fn variant_orders() {
        let sp = StateSpaceDecl::new()
            .var("w", Domain::SetsOver(vec![0, 1]))
            .build()
            .unwrap();
        let v = VariantSpec::strict_subset(Expr::deref_var("w"), &[0, 1]);
        assert!(v.is_well_founded());
        assert!(v.is_transitive());
        let full = Value::set_from(&[0, 1]);
        let empty = Value::set_from(&[]);
        assert!(v.lt(&empty, &full));
        assert!(!v.lt(&full, &empty));
        assert!(v.le(&full, &full));
        // non-increasing relation is reflexive on carrier states
        let ni = v.non_increasing_rel(&sp);
        for s in sp.state_ids() {
            assert!(ni.contains(s, s));
        }
    }

    #[test]
    fn int_variant_not_wf_with_cycle() {
        let v = VariantSpec::new(
            Expr::deref_var("x"),
            vec![Value::Int(0), Value::Int(1)],
            |_, _| true,
        );
        assert!(!v.is_well_founded());
    }
}
