//! Parse and run a check script from text, then print both report
//! formats. The same scripts live under `scripts/` and run through the
//! `rg-check` binary.

use rg_kernel::dsl::{parse, print_script};
use rg_kernel::runner::{render_human, render_json, run, RunOptions};

const SCRIPT: &str = r#"
var x in {0,1};
rel id := x' = x;

cmd put0 := pgm<x' = 0>;

check stable {x = 0} under id;
check refine term >= put0 ; nil depth 3;
check triple {true} rely<id> /\ put0 ; idle {x = 0} depth 4;
check refine put0 >= term depth 2 expect fail;
"#;

fn main() {
    let script = parse(SCRIPT).expect("parse");
    println!("canonical form:\n{}", print_script(&script));

    // the printer round-trips: reparsing the canonical form gives the
    // same AST
    assert_eq!(parse(&print_script(&script)).unwrap(), script);

    let report = run(&script, &RunOptions::default());
    println!("{}", render_human(&report));
    println!("json:\n{}", render_json(&report));
    assert!(report.all_as_expected());
}
