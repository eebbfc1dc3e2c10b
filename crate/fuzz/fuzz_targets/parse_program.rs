#![no_main]

use libfuzzer_sys::fuzz_target;
use phl::syntax::{parse_program, pretty};

// The parser must never panic on any input, and everything it accepts must
// survive a print/reparse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(ast) = parse_program(src) {
        let printed = pretty(&ast);
        let reparsed = parse_program(&printed)
            .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
        assert_eq!(reparsed, ast, "round trip changed the AST for `{printed}`");
    }
});
