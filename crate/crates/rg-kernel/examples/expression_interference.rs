//! Fine-grained expression evaluation under interference: with x ranging
//! over {0,1}, the doubled read x + x can evaluate to 1 when the
//! environment flips x between the two reads, and cannot when the
//! environment preserves x.

use rg_kernel::command::{BinOp, Ctx, Expr};
use rg_kernel::refine::{feasible_under, Engine};
use rg_kernel::state::{Domain, StateSpaceDecl, Value};

fn main() {
    let space = StateSpaceDecl::new()
        .var("x", Domain::IntRange(0, 1))
        .build()
        .unwrap();
    let ctx = Ctx::for_space(&space);
    let e = Expr::bin(Expr::deref_var("x"), BinOp::Add, Expr::deref_var("x"));

    let depth = 4;
    for (rely, name) in [(space.univ_rel(), "chaotic"), (space.identity_rel(), "identity")] {
        println!("environment {name}:");
        for k in 0..=2 {
            let ok = feasible_under(&ctx, &space, &e, Value::Int(k), &rely, depth, Engine::Graph);
            println!("  x + x -> {k}: {}", if ok { "feasible" } else { "infeasible" });
        }
    }

    // the odd result needs interference
    assert!(feasible_under(&ctx, &space, &e, Value::Int(1), &space.univ_rel(), depth, Engine::Graph));
    assert!(!feasible_under(&ctx, &space, &e, Value::Int(1), &space.identity_rel(), depth, Engine::Graph));
}
