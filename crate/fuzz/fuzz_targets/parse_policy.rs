#![no_main]

use arbiter_core::rule_lang::{parse_theory, render_theory};
use arbiter_core::sbp::{compile_policy, parse_policy, Mode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_policy(text) else { return };
    for mode in [Mode::Basic, Mode::Advanced] {
        if let Ok(theory) = compile_policy(&doc, mode) {
            let again = parse_theory(&render_theory(&theory)).expect("compiled theory re-parses");
            assert_eq!(again, theory);
        }
    }
});
