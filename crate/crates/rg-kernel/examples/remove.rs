//! Verify the concurrent set-removal case study end to end: the while
//! rule instance, the guarantee check on the code, refinement of the
//! rely/guarantee specification by the CAS loop, and the early-exit
//! witness where the interference removes the element first.

use rg_kernel::laws::RuleOutcome;
use rg_kernel::remove::{fairness_demo, verify_remove, RemoveConfig};

fn main() {
    let cfg = RemoveConfig::default();
    println!(
        "remove case study: elems {:?}, target {}, depth {}, engine {}",
        cfg.elems, cfg.i, cfg.depth, cfg.engine
    );

    let rep = verify_remove(&cfg);
    for (name, ok) in &rep.while_rule.premises {
        println!("  premise {name}: {}", if *ok { "ok" } else { "FAILED" });
    }
    println!(
        "  while rule: {}",
        match &rep.while_rule.outcome {
            RuleOutcome::Holds => "holds".to_string(),
            other => format!("{other:?}"),
        }
    );
    match &rep.guarantee_violation {
        None => println!("  guarantee: every program step within g"),
        Some(t) => println!("  guarantee VIOLATED: {t}"),
    }
    println!(
        "  spec >= code: {}",
        if rep.spec_refines_code.holds() {
            "holds".to_string()
        } else {
            format!("{:?}", rep.spec_refines_code.outcome)
        }
    );
    match &rep.early_exit_witness {
        Some(t) => println!("  early exit witness: {t}"),
        None => println!("  early exit witness: NOT FOUND"),
    }

    let fair = fairness_demo(&cfg);
    println!(
        "  spec terminates (term >= [q]): {}",
        fair.spec_terminates.holds()
    );
    for (d, ok) in &fair.term_fair {
        println!("  term /\\ fair = fin(step) at depth {d}: {ok}");
    }

    assert!(rep.all_hold(), "case study obligations failed");
}
