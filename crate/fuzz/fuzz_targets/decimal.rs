#![no_main]

use arbiter_core::decimal::Decimal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = text.parse::<Decimal>() {
        let again: Decimal = d.to_string().parse().expect("rendered decimal parses");
        assert_eq!(again, d);
    }
});
