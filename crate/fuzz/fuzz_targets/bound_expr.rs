#![no_main]

use std::collections::BTreeMap;

use libfuzzer_sys::fuzz_target;
use phl::analysis::eval_bound;

// Bound expressions are CLI input; evaluation must never panic and must
// only return finite values or a structured error.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let env: BTreeMap<String, f64> =
        [("n".to_string(), 4.0), ("m".to_string(), 4.0), ("p".to_string(), 0.5)]
            .into_iter()
            .collect();
    let _ = eval_bound(text, &env);
});
