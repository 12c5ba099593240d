#![no_main]

use libfuzzer_sys::fuzz_target;
use phi_bvp::dsl::expr::parse_expression;

fuzz_target!(|data: &[u8]| {
    if let Ok(src) = std::str::from_utf8(data) {
        if let Ok(expr) = parse_expression(src, &["t", "x", "y"]) {
            // A successful parse must survive a print/reparse round trip.
            let printed = expr.to_string();
            let reparsed = parse_expression(&printed, &["t", "x", "y"])
                .expect("printed expression must reparse");
            assert_eq!(reparsed, expr);
            let _ = expr.eval(&[("t", 0.5), ("x", -1.0), ("y", 2.0)]);
        }
    }
});
