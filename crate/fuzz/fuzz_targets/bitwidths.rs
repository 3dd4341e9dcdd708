#![no_main]

use ldpcq::files::{format_bitwidths, parse_bitwidths};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = parse_bitwidths(text) {
        let out = format_bitwidths(&file.code_spec(), &file.assignment());
        let again = parse_bitwidths(&out).expect("formatted bitwidths parse");
        assert_eq!(file, again);
    }
});
