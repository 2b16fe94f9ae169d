//! The motivating unsoundness demo: sequential Hoare-logic reasoning
//! about a loop is invalid under interference. The sequential premise
//! holds, the unconstrained conclusion fails with a concrete
//! interference trace, and conjoining an identity rely restores it.

use rg_kernel::laws::negative_control_hoare_loop;
use rg_kernel::refine::{Engine, Outcome};

fn main() {
    let ctrl = negative_control_hoare_loop(5, Engine::Graph);

    println!(
        "sequential premise {{p and b}} body {{p}}: {}",
        if ctrl.sequential_premise.holds() { "holds" } else { "fails" }
    );
    match &ctrl.unconstrained.outcome {
        Outcome::Fails(t) => {
            println!("unconstrained {{p}} loop {{x = 0}}: fails, interference trace:");
            println!("  {t}");
        }
        other => println!("unconstrained triple: {other:?} (expected a failure)"),
    }
    println!(
        "rely(id) /\\ loop: {}",
        if ctrl.under_identity_rely.holds() { "holds" } else { "fails" }
    );
    println!(
        "nu- vs mu-reading of the idling loop differ: {}",
        ctrl.nu_mu_divergence
    );

    assert!(ctrl.sequential_premise.holds());
    assert!(matches!(ctrl.unconstrained.outcome, Outcome::Fails(_)));
    assert!(ctrl.under_identity_rely.holds());
}
