//! Denote a few commands over a two-state universe and print their
//! bounded trace sets, showing program/environment labels, statuses,
//! and how sequential composition glues traces together.

use rg_kernel::command::Ctx;
use rg_kernel::enum_engine::EnumEngine;

fn show(eng: &mut EnumEngine, ctx: &Ctx, name: &str, c: rg_kernel::command::CmdId) {
    let d = eng.denote(c).expect("denotation");
    println!("{name} = {}  ({} traces at depth {})", ctx.display(c), d.iter().count(), 2);
    for t in d.iter() {
        println!("  {t}");
    }
    println!();
}

fn main() {
    let ctx = Ctx::new(2);
    let mut eng = EnumEngine::new(&ctx, 2);

    // a single program step over the universal relation: every trace is
    // an environment-padded version of one pi step, or a prefix of one
    let step = ctx.pgm(ctx.univ_rel());
    show(&mut eng, &ctx, "step", step);

    // nil terminates immediately but still admits environment steps
    show(&mut eng, &ctx, "nil", ctx.nil());

    // sequential composition glues at terminated prefixes
    show(&mut eng, &ctx, "step ; nil", ctx.seq(step, ctx.nil()));

    // a failed assertion aborts: note the aborted statuses
    let mut p = rg_kernel::state::StateSet::empty(2);
    p.insert(1);
    show(&mut eng, &ctx, "assert p", ctx.assert_cmd(&p));

    // finite iteration at depth 2
    show(&mut eng, &ctx, "fin(step)", ctx.fin_iter(step));
}
