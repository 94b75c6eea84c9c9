#![no_main]

use arbiter_core::rule_lang::{check_source, parse_theory, render_theory, Atom};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = Atom::parse(text);
    let _ = check_source(text);
    if let Ok(theory) = parse_theory(text) {
        let rendered = render_theory(&theory);
        let again = parse_theory(&rendered).expect("rendered theory parses");
        assert_eq!(again, theory);
        assert_eq!(render_theory(&again), rendered);
    }
});
