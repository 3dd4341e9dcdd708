#![no_main]

use ldpcq::files::parse_params;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = parse_params(text) {
        assert_eq!(file.expected_len(), Some(file.alpha.len()));
    }
});
