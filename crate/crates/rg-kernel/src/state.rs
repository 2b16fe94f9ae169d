//! Finite universes of values, l-values and program states, together with
//! the relational algebra used by the checking layers: composition, domain
//! and range restriction, reflexive-transitive closure, identity relations
//! on l-value sets, stability and tolerance of interference.
//!
//! Everything here is extensional: a state space is enumerated once, states
//! are indices into that enumeration, and sets/relations are dense bitsets
//! keyed by the enumeration order.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Elements of small finite sets. Sets are bitmaps over `0..=63`.
pub type Elem = u8;

/// A bitmap-backed finite set of small integers.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SmallSet(pub u64);

impl SmallSet {
    pub fn empty() -> Self {
        SmallSet(0)
    }

    pub fn from_elems(elems: &[Elem]) -> Self {
        let mut bits = 0u64;
        for &e in elems {
            assert!(e < 64, "set elements must lie in 0..=63");
            bits |= 1 << e;
        }
        SmallSet(bits)
    }

    pub fn contains(&self, e: Elem) -> bool {
        e < 64 && self.0 & (1 << e) != 0
    }

    pub fn insert(&mut self, e: Elem) {
        assert!(e < 64);
        self.0 |= 1 << e;
    }

    pub fn remove(&mut self, e: Elem) {
        if e < 64 {
            self.0 &= !(1 << e);
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        SmallSet(self.0 | other.0)
    }

    pub fn inter(&self, other: &Self) -> Self {
        SmallSet(self.0 & other.0)
    }

    pub fn diff(&self, other: &Self) -> Self {
        SmallSet(self.0 & !other.0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_strict_subset(&self, other: &Self) -> bool {
        self.is_subset(other) && self.0 != other.0
    }

    pub fn len(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..64).filter(|&e| self.contains(e))
    }
}

impl fmt::Debug for SmallSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// A program value: boolean, bounded integer, or finite set of small ints.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Set(SmallSet),
}

impl Value {
    pub fn set_from(elems: &[Elem]) -> Value {
        Value::Set(SmallSet::from_elems(elems))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<SmallSet> {
        match self {
            Value::Set(s) => Some(*s),
            _ => None,
        }
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Value::Bool(_))
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Set(s) => write!(f, "{s:?}"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// An assignable location: a base variable or an indexed array element.
/// Arrays of arrays are permitted via nested `Indexed`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LValue {
    Base(String),
    Indexed(Box<LValue>, Value),
}

impl LValue {
    pub fn base(name: &str) -> LValue {
        LValue::Base(name.to_string())
    }

    pub fn indexed(base: LValue, idx: Value) -> LValue {
        LValue::Indexed(Box::new(base), idx)
    }
}

impl fmt::Debug for LValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LValue::Base(v) => write!(f, "{v}"),
            LValue::Indexed(a, i) => write!(f, "{a:?}[{i:?}]"),
        }
    }
}

impl fmt::Display for LValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The domain of values an l-value may hold.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Domain {
    Bool,
    IntRange(i64, i64),
    /// All subsets of the given element universe.
    SetsOver(Vec<Elem>),
    Explicit(Vec<Value>),
}

impl Domain {
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::IntRange(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
            Domain::SetsOver(elems) => {
                let mut out = Vec::new();
                let n = elems.len();
                assert!(n <= 12, "subset domain too large");
                for mask in 0u32..(1 << n) {
                    let mut s = SmallSet::empty();
                    for (i, &e) in elems.iter().enumerate() {
                        if mask & (1 << i) != 0 {
                            s.insert(e);
                        }
                    }
                    out.push(Value::Set(s));
                }
                out.sort();
                out
            }
            Domain::Explicit(vs) => vs.clone(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::IntRange(lo, hi), Value::Int(i)) => lo <= i && i <= hi,
            (Domain::SetsOver(elems), Value::Set(s)) => {
                s.is_subset(&SmallSet::from_elems(elems))
            }
            (Domain::Explicit(vs), v) => vs.contains(v),
            _ => false,
        }
    }
}

pub const DEFAULT_STATE_CAP: usize = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("state space has {actual} states, exceeding the cap of {cap}")]
    StateSpaceTooLarge { actual: usize, cap: usize },
    #[error("undeclared l-value {0}")]
    UndeclaredLValue(String),
    #[error("value {value} outside the declared domain of {lvalue}")]
    OutOfDomain { lvalue: String, value: String },
    #[error("state space declaration is empty")]
    EmptyDeclaration,
    #[error("duplicate l-value {0}")]
    DuplicateLValue(String),
}

/// Declaration of a finite state space: a list of l-values with their
/// value domains. Array declarations expand to one l-value per cell.
#[derive(Clone, Debug, Default)]
pub struct StateSpaceDecl {
    entries: Vec<(LValue, Domain)>,
    cap: Option<usize>,
}

impl StateSpaceDecl {
    pub fn new() -> Self {
        StateSpaceDecl::default()
    }

    pub fn var(mut self, name: &str, dom: Domain) -> Self {
        self.entries.push((LValue::base(name), dom));
        self
    }

    pub fn array(mut self, name: &str, index_dom: Domain, elem_dom: Domain) -> Self {
        for idx in index_dom.values() {
            self.entries
                .push((LValue::indexed(LValue::base(name), idx), elem_dom.clone()));
        }
        self
    }

    pub fn lvalue(mut self, lv: LValue, dom: Domain) -> Self {
        self.entries.push((lv, dom));
        self
    }

    pub fn cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap);
        self
    }

    /// Enumerate the full Cartesian product of the per-l-value domains.
    pub fn build(self) -> Result<StateSpace, StateError> {
        if self.entries.is_empty() {
            return Err(StateError::EmptyDeclaration);
        }
        let cap = self.cap.unwrap_or(DEFAULT_STATE_CAP);
        let mut index = HashMap::new();
        for (i, (lv, _)) in self.entries.iter().enumerate() {
            if index.insert(lv.clone(), i).is_some() {
                return Err(StateError::DuplicateLValue(lv.to_string()));
            }
        }
        let domains: Vec<Vec<Value>> = self.entries.iter().map(|(_, d)| d.values()).collect();
        let mut total: usize = 1;
        for d in &domains {
            total = total.saturating_mul(d.len());
            if total > cap {
                return Err(StateError::StateSpaceTooLarge { actual: total, cap });
            }
        }
        if total == 0 {
            return Err(StateError::EmptyDeclaration);
        }
        let mut states = Vec::with_capacity(total);
        let mut cursor = vec![0usize; domains.len()];
        loop {
            states.push(
                cursor
                    .iter()
                    .zip(&domains)
                    .map(|(&i, d)| d[i])
                    .collect::<Vec<_>>(),
            );
            let mut k = domains.len();
            loop {
                if k == 0 {
                    return Ok(StateSpace {
                        vars: self.entries,
                        index,
                        states,
                    });
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < domains[k].len() {
                    break;
                }
                cursor[k] = 0;
            }
        }
    }
}

/// Index of a state in the enumeration order of its `StateSpace`.
pub type StateId = u32;

/// An enumerated finite state space. A state is a total map from the
/// declared l-values to values; here each state is a row of values in
/// declaration order and `StateId` indexes the enumeration.
#[derive(Clone, Debug)]
pub struct StateSpace {
    vars: Vec<(LValue, Domain)>,
    index: HashMap<LValue, usize>,
    states: Vec<Vec<Value>>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as StateId).map(|i| i as StateId)
    }

    pub fn lvalues(&self) -> impl Iterator<Item = &LValue> {
        self.vars.iter().map(|(lv, _)| lv)
    }

    pub fn domain_of(&self, lv: &LValue) -> Option<&Domain> {
        self.index.get(lv).map(|&i| &self.vars[i].1)
    }

    pub fn var_index(&self, lv: &LValue) -> Option<usize> {
        self.index.get(lv).copied()
    }

    /// Value of `lv` in state `sid`; `None` when `lv` is not declared
    /// (e.g. the base name of an array used as an intermediate l-value).
    pub fn value(&self, sid: StateId, lv: &LValue) -> Option<Value> {
        self.index.get(lv).map(|&i| self.states[sid as usize][i])
    }

    pub fn value_by_index(&self, sid: StateId, var: usize) -> Value {
        self.states[sid as usize][var]
    }

    /// Find the state with the given assignment, if it is in the space.
    pub fn find_state(&self, assign: &[(LValue, Value)]) -> Option<StateId> {
        'outer: for sid in self.state_ids() {
            for (lv, v) in assign {
                if self.value(sid, lv) != Some(*v) {
                    continue 'outer;
                }
            }
            if assign.len() == self.vars.len() {
                return Some(sid);
            }
        }
        None
    }

    pub fn describe_state(&self, sid: StateId) -> String {
        let mut parts: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, (lv, _))| format!("{}={}", lv, self.states[sid as usize][i]))
            .collect();
        parts.sort();
        parts.join(",")
    }

    pub fn full_set(&self) -> StateSet {
        let mut s = StateSet::empty(self.len());
        for sid in self.state_ids() {
            s.insert(sid);
        }
        s
    }

    pub fn empty_set(&self) -> StateSet {
        StateSet::empty(self.len())
    }

    pub fn set_where(&self, pred: impl Fn(StateId) -> bool) -> StateSet {
        let mut s = StateSet::empty(self.len());
        for sid in self.state_ids() {
            if pred(sid) {
                s.insert(sid);
            }
        }
        s
    }

    pub fn rel_where(&self, pred: impl Fn(StateId, StateId) -> bool) -> StateRel {
        let mut r = StateRel::empty(self.len());
        for a in self.state_ids() {
            for b in self.state_ids() {
                if pred(a, b) {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    pub fn univ_rel(&self) -> StateRel {
        self.rel_where(|_, _| true)
    }

    pub fn identity_rel(&self) -> StateRel {
        self.rel_where(|a, b| a == b)
    }

    /// Identity relation on a set of l-values: pairs of states agreeing on
    /// every l-value in `vs` (other l-values are unconstrained).
    pub fn identity_on(&self, vs: &[LValue]) -> Result<StateRel, StateError> {
        let mut idxs = Vec::with_capacity(vs.len());
        for lv in vs {
            match self.index.get(lv) {
                Some(&i) => idxs.push(i),
                None => return Err(StateError::UndeclaredLValue(lv.to_string())),
            }
        }
        Ok(self.rel_where(|a, b| {
            idxs.iter()
                .all(|&i| self.states[a as usize][i] == self.states[b as usize][i])
        }))
    }

    /// All declared l-values except those listed.
    pub fn complement_lvalues(&self, vs: &[LValue]) -> Vec<LValue> {
        self.vars
            .iter()
            .map(|(lv, _)| lv.clone())
            .filter(|lv| !vs.contains(lv))
            .collect()
    }
}

fn word_count(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// An extensional set of states over a fixed enumeration.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet {
    n: usize,
    words: Vec<u64>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet {
            n,
            words: vec![0; word_count(n)],
        }
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, s: StateId) {
        debug_assert!((s as usize) < self.n);
        self.words[s as usize / 64] |= 1 << (s % 64);
    }

    pub fn contains(&self, s: StateId) -> bool {
        (s as usize) < self.n && self.words[s as usize / 64] & (1 << (s % 64)) != 0
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn inter(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn diff(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.trim();
        out
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.n as StateId).filter(|&s| self.contains(s))
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.n, other.n);
        StateSet {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn trim(&mut self) {
        let extra = self.words.len() * 64 - self.n;
        if extra > 0 {
            let last = self.words.len() - 1;
            self.words[last] &= u64::MAX >> extra;
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// An extensional binary relation between states over a fixed enumeration.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateRel {
    n: usize,
    words: Vec<u64>,
}

impl StateRel {
    pub fn empty(n: usize) -> Self {
        StateRel {
            n,
            words: vec![0; word_count(n * n)],
        }
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    fn bit(&self, a: StateId, b: StateId) -> usize {
        a as usize * self.n + b as usize
    }

    pub fn insert(&mut self, a: StateId, b: StateId) {
        let i = self.bit(a, b);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, a: StateId, b: StateId) -> bool {
        if (a as usize) >= self.n || (b as usize) >= self.n {
            return false;
        }
        let i = self.bit(a, b);
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn inter(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        let extra = out.words.len() * 64 - out.n * out.n;
        if extra > 0 {
            let last = out.words.len() - 1;
            out.words[last] &= u64::MAX >> extra;
        }
        out
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        (0..self.n as StateId)
            .flat_map(move |a| (0..self.n as StateId).map(move |b| (a, b)))
            .filter(|&(a, b)| self.contains(a, b))
    }

    pub fn successors(&self, a: StateId) -> impl Iterator<Item = StateId> + '_ {
        (0..self.n as StateId).filter(move |&b| self.contains(a, b))
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.n, other.n);
        StateRel {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl fmt::Debug for StateRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// Relational composition: `{(a,c) | exists b. (a,b) in r1 and (b,c) in r2}`.
pub fn compose(r1: &StateRel, r2: &StateRel) -> StateRel {
    let n = r1.universe_size();
    debug_assert_eq!(n, r2.universe_size());
    let mut out = StateRel::empty(n);
    for (a, b) in r1.pairs() {
        for c in r2.successors(b) {
            out.insert(a, c);
        }
    }
    out
}

/// Range restriction `r ▷ p`: pairs of `r` whose post-state lies in `p`.
pub fn range_restrict(r: &StateRel, p: &StateSet) -> StateRel {
    let mut out = StateRel::empty(r.universe_size());
    for (a, b) in r.pairs() {
        if p.contains(b) {
            out.insert(a, b);
        }
    }
    out
}

/// Domain restriction `p ◁ r`: pairs of `r` whose pre-state lies in `p`.
pub fn domain_restrict(p: &StateSet, r: &StateRel) -> StateRel {
    let mut out = StateRel::empty(r.universe_size());
    for (a, b) in r.pairs() {
        if p.contains(a) {
            out.insert(a, b);
        }
    }
    out
}

/// Least reflexive-transitive superset of `r` (the paper's `Finrel r`).
pub fn refl_trans_closure(r: &StateRel) -> StateRel {
    let n = r.universe_size();
    let mut out = r.clone();
    for i in 0..n as StateId {
        out.insert(i, i);
    }
    loop {
        let next = out.union(&compose(&out, &out));
        if next == out {
            return out;
        }
        out = next;
    }
}

/// `p` is stable under `r`: `r` cannot take a state out of `p`.
pub fn stable(p: &StateSet, r: &StateRel) -> bool {
    r.pairs().all(|(a, b)| !p.contains(a) || p.contains(b))
}

/// `q` tolerates interference `r` from precondition `p`: `p` is stable
/// under `r` and interference steps before or after `q` stay within `q`.
pub fn tolerates(q: &StateRel, r: &StateRel, p: &StateSet) -> bool {
    stable(p, r)
        && domain_restrict(p, &compose(r, q)).is_subset(q)
        && domain_restrict(p, &compose(q, r)).is_subset(q)
}

/// A finite relation has no infinite descending chain iff it is acyclic,
/// counting a reflexive pair as a cycle. `pairs` are indices into a carrier
/// of size `carrier_len`.
pub fn is_well_founded(carrier_len: usize, pairs: &[(usize, usize)]) -> bool {
    // Kahn-style: repeatedly remove nodes with no incoming edge; a cycle
    // survives every round.
    let mut succ = vec![Vec::new(); carrier_len];
    let mut indeg = vec![0usize; carrier_len];
    for &(a, b) in pairs {
        if a == b {
            return false;
        }
        succ[a].push(b);
        indeg[b] += 1;
    }
    let mut queue: Vec<usize> = (0..carrier_len).filter(|&i| indeg[i] == 0).collect();
    let mut removed = 0;
    while let Some(i) = queue.pop() {
        removed += 1;
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push(j);
            }
        }
    }
    removed == carrier_len
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bools() -> StateSpace {
        StateSpaceDecl::new()
            .var("x", Domain::Bool)
            .var("y", Domain::Bool)
            .build()
            .unwrap()
    }

    #[test]
    fn enumerate_single_var() {
        let sp = StateSpaceDecl::new()
            .var("x", Domain::IntRange(0, 1))
            .build()
            .unwrap();
        assert_eq!(sp.len(), 2);
    }

    #[test]
    fn enumerate_two_vars() {
        let sp = StateSpaceDecl::new()
            .var("x", Domain::IntRange(0, 1))
            .var("y", Domain::IntRange(0, 1))
            .build()
            .unwrap();
        assert_eq!(sp.len(), 4);
    }

    #[test]
    fn enumerate_subset_domains() {
        // Oracle: two independent subset-of-{0,1} variables give a 4x4 product.
        let sp = StateSpaceDecl::new()
            .var("w", Domain::SetsOver(vec![0, 1]))
            .var("sample", Domain::SetsOver(vec![0, 1]))
            .build()
            .unwrap();
        assert_eq!(sp.len(), 16);
    }

    #[test]
    fn cap_exceeded() {
        let err = StateSpaceDecl::new()
            .var("x", Domain::IntRange(0, 99))
            .var("y", Domain::IntRange(0, 99))
            .cap(4096)
            .build()
            .unwrap_err();
        assert!(matches!(err, StateError::StateSpaceTooLarge { .. }));
    }

    #[test]
    fn compose_identity_and_empty() {
        let sp = two_bools();
        let id = sp.identity_rel();
        let r = sp.rel_where(|a, b| a != b);
        assert_eq!(compose(&r, &id), r);
        assert_eq!(compose(&id, &r), r);
        assert!(compose(&r, &StateRel::empty(sp.len())).is_empty());
    }

    #[test]
    fn compose_point_pairs() {
        let sp = two_bools();
        let mut r1 = StateRel::empty(sp.len());
        r1.insert(0, 1);
        let mut r2 = StateRel::empty(sp.len());
        r2.insert(1, 0);
        let mut expect = StateRel::empty(sp.len());
        expect.insert(0, 0);
        assert_eq!(compose(&r1, &r2), expect);
    }

    #[test]
    fn restrictions() {
        let sp = two_bools();
        let univ = sp.univ_rel();
        assert_eq!(range_restrict(&univ, &sp.full_set()), univ);
        assert_eq!(domain_restrict(&sp.full_set(), &univ), univ);
        assert!(domain_restrict(&sp.empty_set(), &univ).is_empty());

        let mut r = StateRel::empty(sp.len());
        r.insert(0, 1);
        let mut p = StateSet::empty(sp.len());
        p.insert(0);
        assert!(range_restrict(&r, &p).is_empty());

        let mut r2 = StateRel::empty(sp.len());
        r2.insert(0, 1);
        r2.insert(1, 0);
        let mut expect = StateRel::empty(sp.len());
        expect.insert(0, 1);
        assert_eq!(domain_restrict(&p, &r2), expect);
    }

    #[test]
    fn closure_basics() {
        let sp = two_bools();
        assert_eq!(
            refl_trans_closure(&StateRel::empty(sp.len())),
            sp.identity_rel()
        );
        assert_eq!(refl_trans_closure(&sp.univ_rel()), sp.univ_rel());

        let mut r = StateRel::empty(sp.len());
        r.insert(0, 1);
        let expect = sp.identity_rel().union(&r);
        assert_eq!(refl_trans_closure(&r), expect);
    }

    #[test]
    fn closure_idempotent() {
        let sp = two_bools();
        let r = sp.rel_where(|a, b| (a + 1) % 4 == b % 4);
        let c = refl_trans_closure(&r);
        assert_eq!(refl_trans_closure(&c), c);
    }

    #[test]
    fn identity_on_lvalues() {
        let sp = two_bools();
        let all: Vec<LValue> = sp.lvalues().cloned().collect();
        assert_eq!(sp.identity_on(&all).unwrap(), sp.identity_rel());
        assert_eq!(sp.identity_on(&[]).unwrap(), sp.univ_rel());
        // Agreement on x only: 2 choices of x, with y free on both sides.
        let only_x = sp.identity_on(&[LValue::base("x")]).unwrap();
        assert_eq!(only_x.len(), 8);
        assert!(sp.identity_on(&[LValue::base("z")]).is_err());
    }

    #[test]
    fn stability() {
        let sp = two_bools();
        assert!(stable(&sp.full_set(), &sp.univ_rel()));
        let mut p = StateSet::empty(sp.len());
        p.insert(0);
        let mut r = StateRel::empty(sp.len());
        r.insert(0, 1);
        assert!(!stable(&p, &r));
        let x_false = sp.set_where(|s| sp.value(s, &LValue::base("x")) == Some(Value::Bool(false)));
        assert!(stable(&x_false, &sp.identity_rel()));
    }

    #[test]
    fn stable_union_splits() {
        let sp = two_bools();
        // stable(p, r1 ∪ r2) iff stable(p, r1) and stable(p, r2), exhaustively
        // over a sample of sets and relations.
        let p = sp.set_where(|s| s % 2 == 0);
        for seed1 in 0..8u32 {
            for seed2 in 0..8u32 {
                let r1 = sp.rel_where(|a, b| (a * 3 + b + seed1) % 5 == 0);
                let r2 = sp.rel_where(|a, b| (a + b * 7 + seed2) % 3 == 0);
                assert_eq!(
                    stable(&p, &r1.union(&r2)),
                    stable(&p, &r1) && stable(&p, &r2)
                );
            }
        }
    }

    #[test]
    fn tolerates_cases() {
        let sp = two_bools();
        let univ = sp.univ_rel();
        // The universal postcondition absorbs any interference.
        for seed in 0..16u32 {
            let r = sp.rel_where(|a, b| (a * 5 + b + seed) % 4 == 0);
            assert!(tolerates(&univ, &r, &sp.full_set()));
        }
        // Identity postcondition fails under universal interference.
        assert!(!tolerates(&sp.identity_rel(), &univ, &sp.full_set()));
    }

    #[test]
    fn tolerates_implies_closure_bound() {
        let sp = two_bools();
        for seed in 0..32u32 {
            let q = sp.rel_where(|a, b| (a * 7 + b * 3 + seed) % 5 != 1);
            let r = sp.rel_where(|a, b| (a + b + seed) % 6 == 0);
            let p = sp.set_where(|s| (s + seed) % 3 != 0);
            if tolerates(&q, &r, &p) {
                let fr = refl_trans_closure(&r);
                let chained = compose(&fr, &compose(&q, &fr));
                assert!(domain_restrict(&p, &chained).is_subset(&q));
            }
        }
    }

    #[test]
    fn well_foundedness() {
        // strict < on {0,1,2}
        assert!(is_well_founded(3, &[(0, 1), (0, 2), (1, 2)]));
        // <= on {0,1} has reflexive pairs
        assert!(!is_well_founded(2, &[(0, 0), (0, 1), (1, 1)]));
        // strict subset on subsets of {0,1}
        let subsets = Domain::SetsOver(vec![0, 1]).values();
        let mut pairs = Vec::new();
        for (i, a) in subsets.iter().enumerate() {
            for (j, b) in subsets.iter().enumerate() {
                if a.as_set().unwrap().is_strict_subset(&b.as_set().unwrap()) {
                    pairs.push((i, j));
                }
            }
        }
        assert!(is_well_founded(subsets.len(), &pairs));
        // a 2-cycle
        assert!(!is_well_founded(2, &[(0, 1), (1, 0)]));
    }

    #[test]
    fn compose_associative() {
        let sp = two_bools();
        for seed in 0..16u32 {
            let r1 = sp.rel_where(|a, b| (a * 2 + b + seed) % 3 == 0);
            let r2 = sp.rel_where(|a, b| (a + b * 5 + seed) % 4 == 1);
            let r3 = sp.rel_where(|a, b| (a * 3 + b * 2 + seed) % 5 == 2);
            assert_eq!(
                compose(&compose(&r1, &r2), &r3),
                compose(&r1, &compose(&r2, &r3))
            );
        }
    }
}
