#![no_main]

use ldpcq::files::{format_train_config, parse_train_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_train_config(text) {
        let again = parse_train_config(&format_train_config(&cfg)).expect("formatted config parses");
        assert_eq!(cfg, again);
    }
});
