#![no_main]

use std::sync::OnceLock;

use arbiter_core::rule_lang::{parse_theory, Theory};
use arbiter_core::sbp::{metadata_of, ApplicationMetadata};
use arbiter_service::query::{run_query, QueryRequest};
use libfuzzer_sys::fuzz_target;

fn salary() -> &'static (Theory, ApplicationMetadata) {
    static APP: OnceLock<(Theory, ApplicationMetadata)> = OnceLock::new();
    APP.get_or_init(|| {
        let theory = parse_theory(include_str!("../../crates/core/fixtures/salary_advanced.grg")).unwrap();
        let metadata = metadata_of(&theory);
        (theory, metadata)
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(req) = serde_json::from_slice::<QueryRequest>(data) else { return };
    let (theory, metadata) = salary();
    if let Ok(resp) = run_query("salary", 1, theory, metadata, &req) {
        serde_json::to_vec(&resp).expect("responses serialize");
    }
});
