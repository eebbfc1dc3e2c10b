#![no_main]

use libfuzzer_sys::fuzz_target;
use phl::exec::{step_thread, Config};
use phl::rat::rat_int;
use phl::syntax::{parse_program, Expr, Val};

const MAX_STEPS: usize = 64;
const MAX_TERM_SIZE: usize = 20_000;

/// Reject programs carrying literals big enough to blow up a single
/// allocation or tick; everything else must execute without panics.
fn has_huge_literal(e: &Expr) -> bool {
    let mut huge = false;
    e.visit(&mut |sub| {
        if let Expr::Val(Val::Int(n)) = sub {
            if n.unsigned_abs() > 4096 {
                huge = true;
            }
        }
    });
    huge
}

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(ast) = parse_program(src) else { return };
    if has_huge_literal(&ast) {
        return;
    }
    let mut frontier = vec![Config::initial(ast)];
    for _ in 0..MAX_STEPS {
        // follow every branch of the first reducible thread, bounded
        let Some(cfg) = frontier.pop() else { return };
        let reducible = cfg.reducible_threads();
        let Some(&thread) = reducible.first() else { continue };
        let dist = step_thread(&cfg, thread).expect("reducible thread steps");
        assert_eq!(dist.total_mass(), rat_int(1));
        for (succ, _) in dist.iter() {
            assert!(succ.cost >= cfg.cost, "cost went backwards");
            if succ.threads.iter().map(Expr::size).sum::<usize>() <= MAX_TERM_SIZE {
                frontier.push(succ.clone());
            }
        }
    }
});
