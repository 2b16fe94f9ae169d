//! Check the full law catalogue semantically: every law over every
//! binding of its metavariables in a two-state universe, then a round of
//! seeded random bindings in a three-state universe.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rg_kernel::command::Ctx;
use rg_kernel::laws::{check_law, exhaustive_bindings, random_bindings, LAW_IDS};
use rg_kernel::refine::Engine;

fn main() {
    let depth = 3;
    println!("exhaustive bindings, |states| = 2, depth {depth}:");
    let ctx = Ctx::new(2);
    for &id in LAW_IDS {
        let bindings = exhaustive_bindings(&ctx, id);
        let count = bindings.len();
        let mut ok = true;
        for b in &bindings {
            let v = check_law(&ctx, id, b, depth, Engine::Graph).expect("known law");
            if !v.holds() {
                ok = false;
                println!("  {id}: FAILS on {b:?}");
                break;
            }
        }
        if ok {
            println!("  {id}: holds on all {count} bindings");
        }
    }

    println!("\nrandom bindings, |states| = 3, depth {depth}:");
    let ctx3 = Ctx::new(3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rounds = 20;
    for &id in LAW_IDS {
        for _ in 0..rounds {
            let b = random_bindings(&ctx3, &mut rng);
            let v = check_law(&ctx3, id, &b, depth, Engine::Graph).expect("known law");
            assert!(v.holds(), "{id} fails on random binding");
        }
    }
    println!("  all {} laws hold on {rounds} samples each", LAW_IDS.len());
}
