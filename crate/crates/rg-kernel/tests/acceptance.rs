//! Acceptance gate: one test per criterion, each ending in a single
//! PASS line (a failed assertion is the FAIL line). Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use rand::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rg_kernel::command::{BinOp, Ctx, Expr, LvExpr, UnOp, VariantSpec};
use rg_kernel::laws::{
    check_conditional_theorem, check_expression_rule, check_law, check_recursion_theorem,
    check_while_theorem, command_pool, exhaustive_bindings, negative_control_hoare_loop,
    random_bindings, random_command, random_rel, random_set, ConditionalInstance, ExprRule,
    HoleCmd, PostMap, RecursionInstance, RuleOutcome, WhileInstance, LAW_IDS,
};
use rg_kernel::refine::{engines_agree, equals, feasible_under, refines, Engine, Outcome};
use rg_kernel::remove::{fairness_demo, verify_remove, RemoveConfig};
use rg_kernel::state::{Domain, LValue, StateSpace, StateSpaceDecl, Value};

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x00AC_CE57 ^ stream)
}

fn int_space(lo: i64, hi: i64) -> StateSpace {
    StateSpaceDecl::new()
        .var("x", Domain::IntRange(lo, hi))
        .build()
        .unwrap()
}

#[test]
fn criterion_1_law_catalogue() {
    // exhaustive bindings over two states, depth 4
    let ctx2 = Ctx::new(2);
    for &id in LAW_IDS {
        for b in &exhaustive_bindings(&ctx2, id) {
            let v = check_law(&ctx2, id, b, 4, Engine::Graph).unwrap();
            assert!(v.holds(), "law {id} fails exhaustively on {b:?}");
        }
    }
    // >= 200 seeded random bindings over three states, depth 4; every
    // law is checked on every binding
    let ctx3 = Ctx::new(3);
    let mut r = rng(1);
    for round in 0..200 {
        let b = random_bindings(&ctx3, &mut r);
        for &id in LAW_IDS {
            let v = check_law(&ctx3, id, &b, 4, Engine::Graph).unwrap();
            assert!(v.holds(), "law {id} fails on random binding {round}");
        }
    }
    println!("criterion 1 (law catalogue, exhaustive |S|=2 + 200 random |S|=3, depth 4): PASS");
}

#[test]
fn criterion_2_engine_cross_validation() {
    let mut r = rng(2);
    // 500 random commands of size <= 8: identical bounded languages
    for i in 0..500 {
        let n = if i % 3 == 0 { 3 } else { 2 };
        let ctx = Ctx::new(n);
        let c = random_command(&ctx, &mut r, 8);
        let depth = 1 + (i % 3);
        assert!(
            engines_agree(&ctx, c, depth),
            "engines disagree on {} at depth {depth}",
            ctx.display(c)
        );
    }
    // 200 random pairs: identical refinement verdicts
    for i in 0..200 {
        let ctx = Ctx::new(2);
        let a = random_command(&ctx, &mut r, 8);
        let b = random_command(&ctx, &mut r, 8);
        let depth = 1 + (i % 3);
        let ve = refines(&ctx, a, b, depth, Engine::Enum);
        let vg = refines(&ctx, a, b, depth, Engine::Graph);
        assert_eq!(
            ve.holds(),
            vg.holds(),
            "refinement verdicts disagree on {} >= {}",
            ctx.display(a),
            ctx.display(b)
        );
    }
    println!("criterion 2 (engine cross-validation, 500 commands + 200 pairs): PASS");
}

fn random_post_map(space: &StateSpace, r: &mut impl Rng, vals: &[Value]) -> PostMap {
    let n = space.len();
    let mut pm = PostMap::default();
    for v in vals {
        // bias towards the trivially-satisfiable full set
        let s = if r.gen_bool(0.5) {
            space.full_set()
        } else {
            random_set(n, r)
        };
        pm.by_value.push((*v, s));
    }
    for lv in space.lvalues() {
        let s = if r.gen_bool(0.5) {
            space.full_set()
        } else {
            random_set(n, r)
        };
        pm.by_lvalue.push((lv.clone(), s));
    }
    pm
}

#[test]
fn criterion_3_theorem_soundness_sweep() {
    let depth = 3;
    let eng = Engine::Graph;

    // expression rules: 60 instances
    let space = int_space(0, 2);
    let ctx = Ctx::for_space(&space);
    let vals: Vec<Value> = (0..=2).map(Value::Int).collect();
    let mut r = rng(3);
    for i in 0..60 {
        let k = vals[r.gen_range(0..vals.len())];
        let rule = match i % 5 {
            0 => ExprRule::Const {
                kappa: vals[r.gen_range(0..vals.len())],
                k,
            },
            1 => ExprRule::Var {
                v: "x".into(),
                lv: LValue::base("x"),
            },
            2 => ExprRule::Deref {
                lve: LvExpr::Variable("x".into()),
                k,
                p1: random_post_map(&space, &mut r, &vals),
                post: random_post_map(&space, &mut r, &vals),
            },
            3 => ExprRule::Unary {
                op: UnOp::Neg,
                e1: Expr::deref_var("x"),
                k,
                p1: random_post_map(&space, &mut r, &vals),
                post: random_post_map(&space, &mut r, &vals),
            },
            _ => ExprRule::Binary {
                e1: Expr::deref_var("x"),
                op: if r.gen_bool(0.5) { BinOp::Add } else { BinOp::Sub },
                e2: Expr::konst(vals[r.gen_range(0..vals.len())]),
                k,
                p1: random_post_map(&space, &mut r, &vals),
                p2: random_post_map(&space, &mut r, &vals),
                post: random_post_map(&space, &mut r, &vals),
            },
        };
        let p = if r.gen_bool(0.5) {
            space.full_set()
        } else {
            random_set(space.len(), &mut r)
        };
        let rely = if r.gen_bool(0.7) {
            space.identity_rel()
        } else {
            random_rel(space.len(), &mut r)
        };
        let rep = check_expression_rule(&ctx, &space, &rule, &p, &rely, depth, eng);
        assert!(!rep.outcome.is_alarm(), "expression-rule alarm on {rule:?}");
    }

    // conditional theorem: 60 instances
    let mut holds_cond = 0;
    for i in 0..60 {
        let c = i64::from(i % 3);
        let b = Expr::bin(Expr::deref_var("x"), BinOp::Eq, Expr::konst(Value::Int(c)));
        let inst = ConditionalInstance {
            b,
            q: if r.gen_bool(0.5) {
                space.univ_rel()
            } else {
                random_rel(space.len(), &mut r)
            },
            r: if r.gen_bool(0.7) {
                space.identity_rel()
            } else {
                random_rel(space.len(), &mut r)
            },
            p: if r.gen_bool(0.5) {
                space.full_set()
            } else {
                random_set(space.len(), &mut r)
            },
            p_t: if r.gen_bool(0.6) {
                space.full_set()
            } else {
                random_set(space.len(), &mut r)
            },
            p_f: if r.gen_bool(0.6) {
                space.full_set()
            } else {
                random_set(space.len(), &mut r)
            },
        };
        let rep = check_conditional_theorem(&ctx, &space, &inst, depth, eng);
        assert!(!rep.outcome.is_alarm(), "conditional alarm on instance {i}");
        if rep.outcome == RuleOutcome::Holds {
            holds_cond += 1;
        }
    }
    assert!(holds_cond > 0, "conditional sweep never exercised a Holds");

    // recursion theorem: 60 instances (constant functions always apply,
    // random shapes mostly violate a premise)
    let pool = command_pool(&ctx);
    let variant = VariantSpec::int_less(Expr::deref_var("x"), 0, 2);
    let mut holds_rec = 0;
    for i in 0..60 {
        let inst = if i % 2 == 0 {
            let d = pool[r.gen_range(0..pool.len())];
            RecursionInstance {
                f: HoleCmd::Lift(d),
                s: d,
                p_x: space.full_set(),
                variant: variant.clone(),
            }
        } else {
            let d = pool[r.gen_range(0..pool.len())];
            let s = pool[r.gen_range(0..pool.len())];
            let f = match i % 4 {
                1 => HoleCmd::Choice(vec![HoleCmd::Lift(d), HoleCmd::Hole]),
                3 => HoleCmd::Seq(Box::new(HoleCmd::Lift(d)), Box::new(HoleCmd::Hole)),
                _ => HoleCmd::Conj(Box::new(HoleCmd::Lift(d)), Box::new(HoleCmd::Hole)),
            };
            RecursionInstance {
                f,
                s,
                p_x: random_set(space.len(), &mut r),
                variant: variant.clone(),
            }
        };
        let rep = check_recursion_theorem(&ctx, &space, &inst, depth, eng);
        assert!(!rep.outcome.is_alarm(), "recursion alarm on instance {i}");
        if rep.outcome == RuleOutcome::Holds {
            holds_rec += 1;
        }
    }
    assert!(holds_rec > 0, "recursion sweep never exercised a Holds");

    // while theorem: 50 instances around the countdown loop
    let guard = Expr::un(
        UnOp::Not,
        Expr::bin(Expr::deref_var("x"), BinOp::Eq, Expr::konst(Value::Int(0))),
    );
    let dec = space.rel_where(|a, b| {
        let xa = space.value(a, &LValue::base("x")).unwrap().as_int().unwrap();
        let xb = space.value(b, &LValue::base("x")).unwrap().as_int().unwrap();
        xb == xa - 1
    });
    let body_post = ctx.post_spec(&dec);
    let body = ctx.conj(
        ctx.rely(&space.identity_rel()),
        ctx.conj(ctx.guar(&space.univ_rel()), body_post),
    );
    let zero = space.set_where(|s| space.value(s, &LValue::base("x")) == Some(Value::Int(0)));
    let mut holds_while = 0;
    for i in 0..50 {
        let inst = WhileInstance {
            b: guard.clone(),
            c: body,
            r: space.identity_rel(),
            q: if i % 2 == 0 {
                space.univ_rel()
            } else {
                random_rel(space.len(), &mut r)
            },
            p: if i % 3 == 0 {
                random_set(space.len(), &mut r)
            } else {
                space.full_set()
            },
            p_t: space.full_set(),
            p_f: zero.clone(),
            p_x: zero.clone(),
            variant: variant.clone(),
        };
        let rep = check_while_theorem(&ctx, &space, &inst, 5, eng);
        assert!(!rep.outcome.is_alarm(), "while alarm on instance {i}");
        if rep.outcome == RuleOutcome::Holds {
            holds_while += 1;
        }
    }
    assert!(holds_while > 0, "while sweep never exercised a Holds");
    println!("criterion 3 (theorem soundness sweep, zero alarms in 230 instances): PASS");
}

#[test]
fn criterion_4_negative_control() {
    let ctrl = negative_control_hoare_loop(5, Engine::Graph);
    assert!(ctrl.sequential_premise.holds());
    assert!(
        matches!(ctrl.unconstrained.outcome, Outcome::Fails(_)),
        "sequential conclusion should fail under interference"
    );
    assert!(ctrl.under_identity_rely.holds());
    assert!(ctrl.nu_mu_divergence);
    println!("criterion 4 (sequential-rule counterexample within depth 5, fixed by rely id): PASS");
}

#[test]
fn criterion_5_remove_case_study() {
    let cfg = RemoveConfig::default(); // 16 states, depth 8, graph
    let rep = verify_remove(&cfg);
    assert_eq!(
        rep.while_rule.outcome,
        RuleOutcome::Holds,
        "while-rule obligations: {:?}",
        rep.while_rule.premises
    );
    for (name, ok) in &rep.while_rule.premises {
        assert!(ok, "obligation {name} failed");
    }
    assert!(rep.guarantee_violation.is_none(), "guarantee violated");
    assert!(rep.spec_refines_code.holds(), "spec does not cover the code");
    assert!(rep.early_exit_witness.is_some(), "no early-exit witness");
    println!("criterion 5 (remove case study, 16 states depth 8 graph): PASS");
}

#[test]
fn criterion_6_fairness() {
    for n in 1..=3usize {
        let ctx = Ctx::new(n);
        for depth in 1..=4usize {
            let v = equals(
                &ctx,
                ctx.conj(ctx.term(), ctx.fair()),
                ctx.fin_iter(ctx.alpha()),
                depth,
                Engine::Graph,
            );
            assert!(v.holds(), "term /\\ fair != fin(step) at |S|={n} depth {depth}");
        }
    }
    // and the case-study fairness chain
    let rep = fairness_demo(&RemoveConfig {
        depth: 3,
        ..Default::default()
    });
    assert!(rep.spec_terminates.holds());
    assert!(rep.term_fair.iter().all(|(_, ok)| *ok));
    println!("criterion 6 (term conj fair = finite iteration of any step, depths 1-4): PASS");
}

#[test]
fn criterion_7_nonatomic_expression_signature() {
    let space = int_space(0, 1);
    let ctx = Ctx::for_space(&space);
    let e = Expr::bin(Expr::deref_var("x"), BinOp::Add, Expr::deref_var("x"));
    let depth = 3;
    for eng in [Engine::Enum, Engine::Graph] {
        assert!(
            feasible_under(&ctx, &space, &e, Value::Int(1), &space.univ_rel(), depth, eng),
            "odd sum must be feasible under a chaotic environment"
        );
        assert!(
            !feasible_under(&ctx, &space, &e, Value::Int(1), &space.identity_rel(), depth, eng),
            "odd sum must be infeasible without interference"
        );
        assert!(feasible_under(
            &ctx,
            &space,
            &e,
            Value::Int(0),
            &space.identity_rel(),
            depth,
            eng
        ));
    }
    println!("criterion 7 (x + x odd iff interference, depth 3): PASS");
}

#[test]
fn criterion_8_cli_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_rg-check");
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
    for script in ["basics", "laws", "negative_control", "remove"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let json = std::env::temp_dir().join(format!("rg-acc-{script}-{run}.json"));
            let status = Command::new(bin)
                .current_dir(root)
                .args([
                    "check",
                    &format!("scripts/{script}.rg"),
                    "--seed",
                    "7",
                    "--json",
                ])
                .arg(&json)
                .output()
                .expect("run rg-check");
            assert!(
                status.status.success(),
                "script {script} run {run} exited nonzero:\n{}",
                String::from_utf8_lossy(&status.stdout)
            );
            outputs.push(std::fs::read(&json).expect("read json report"));
            let _ = std::fs::remove_file(&json);
        }
        assert_eq!(
            outputs[0], outputs[1],
            "json report for {script} differs between runs"
        );
    }
    println!("criterion 8 (byte-identical json across reruns of the shipped scripts): PASS");
}
