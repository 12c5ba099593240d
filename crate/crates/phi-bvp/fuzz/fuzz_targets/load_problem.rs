#![no_main]

use libfuzzer_sys::fuzz_target;
use phi_bvp::dsl::load_problem_str;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Loading must never panic; any outcome other than a clean error or
        // a validated problem is a bug.
        let _ = load_problem_str(text);
    }
});
