//! Property tests for the structural invariants that are not tied to a
//! specific law: refinement is a preorder with choice as join, denoted
//! trace sets are prefix-closed and well-formed, deeper bounds only
//! refine less, and the two engines agree on arbitrary command trees.

use proptest::prelude::*;

use rg_kernel::command::{CmdId, Ctx};
use rg_kernel::enum_engine::EnumEngine;
use rg_kernel::refine::{engines_agree, refines, Engine};
use rg_kernel::state::{StateRel, StateSet};

const N: usize = 2;

/// A command tree described by a compact recipe so proptest can shrink it.
#[derive(Clone, Debug)]
enum Recipe {
    Bot,
    Top,
    Nil,
    Test(u8),
    Pgm(u16),
    Env(u16),
    Seq(Box<Recipe>, Box<Recipe>),
    Choice(Box<Recipe>, Box<Recipe>),
    Par(Box<Recipe>, Box<Recipe>),
    Conj(Box<Recipe>, Box<Recipe>),
    Fin(Box<Recipe>),
    Om(Box<Recipe>),
}

fn set_from_bits(bits: u8) -> StateSet {
    let mut s = StateSet::empty(N);
    for i in 0..N {
        if bits & (1 << i) != 0 {
            s.insert(i as u32);
        }
    }
    s
}

fn rel_from_bits(bits: u16) -> StateRel {
    let mut r = StateRel::empty(N);
    for a in 0..N {
        for b in 0..N {
            if bits & (1 << (a * N + b)) != 0 {
                r.insert(a as u32, b as u32);
            }
        }
    }
    r
}

fn build(ctx: &Ctx, r: &Recipe) -> CmdId {
    match r {
        Recipe::Bot => ctx.bot(),
        Recipe::Top => ctx.top(),
        Recipe::Nil => ctx.nil(),
        Recipe::Test(bits) => ctx.test(set_from_bits(*bits)),
        Recipe::Pgm(bits) => ctx.pgm(rel_from_bits(*bits)),
        Recipe::Env(bits) => ctx.env_step(rel_from_bits(*bits)),
        Recipe::Seq(a, b) => ctx.seq(build(ctx, a), build(ctx, b)),
        Recipe::Choice(a, b) => ctx.choice(vec![build(ctx, a), build(ctx, b)]),
        Recipe::Par(a, b) => ctx.par(build(ctx, a), build(ctx, b)),
        Recipe::Conj(a, b) => ctx.conj(build(ctx, a), build(ctx, b)),
        Recipe::Fin(a) => ctx.fin_iter(build(ctx, a)),
        Recipe::Om(a) => ctx.om_iter(build(ctx, a)),
    }
}

fn recipe() -> impl Strategy<Value = Recipe> {
    let leaf = prop_oneof![
        Just(Recipe::Bot),
        Just(Recipe::Top),
        Just(Recipe::Nil),
        any::<u8>().prop_map(|b| Recipe::Test(b & 0b11)),
        any::<u16>().prop_map(|b| Recipe::Pgm(b & 0b1111)),
        any::<u16>().prop_map(|b| Recipe::Env(b & 0b1111)),
    ];
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Recipe::Seq(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Recipe::Choice(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Recipe::Par(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Recipe::Conj(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Recipe::Fin(Box::new(a))),
            inner.prop_map(|a| Recipe::Om(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn refinement_is_reflexive(r in recipe()) {
        let ctx = Ctx::new(N);
        let c = build(&ctx, &r);
        prop_assert!(refines(&ctx, c, c, 2, Engine::Graph).holds());
    }

    #[test]
    fn choice_is_the_join(a in recipe(), b in recipe()) {
        let ctx = Ctx::new(N);
        let (ca, cb) = (build(&ctx, &a), build(&ctx, &b));
        let ab = ctx.choice(vec![ca, cb]);
        // an upper bound of both operands
        prop_assert!(refines(&ctx, ab, ca, 2, Engine::Graph).holds());
        prop_assert!(refines(&ctx, ab, cb, 2, Engine::Graph).holds());
        // and the least one
        let top = ctx.top();
        if refines(&ctx, top, ca, 2, Engine::Graph).holds()
            && refines(&ctx, top, cb, 2, Engine::Graph).holds()
        {
            prop_assert!(refines(&ctx, top, ab, 2, Engine::Graph).holds());
        }
    }

    #[test]
    fn refinement_at_deeper_bound_implies_shallower(a in recipe(), b in recipe()) {
        let ctx = Ctx::new(N);
        let (ca, cb) = (build(&ctx, &a), build(&ctx, &b));
        if refines(&ctx, ca, cb, 3, Engine::Graph).holds() {
            for d in 1..3 {
                prop_assert!(
                    refines(&ctx, ca, cb, d, Engine::Graph).holds(),
                    "held at depth 3 but not at {d}"
                );
            }
        }
    }

    #[test]
    fn denotations_are_prefix_closed_and_well_formed(r in recipe()) {
        let ctx = Ctx::new(N);
        let c = build(&ctx, &r);
        let mut eng = EnumEngine::new(&ctx, 2);
        let d = eng.denote(c).unwrap();
        prop_assert!(d.is_well_formed());
        prop_assert!(d.is_prefix_closed());
    }

    #[test]
    fn engines_agree_on_recipes(r in recipe()) {
        let ctx = Ctx::new(N);
        let c = build(&ctx, &r);
        prop_assert!(engines_agree(&ctx, c, 2), "disagree on {}", ctx.display(c));
    }
}
