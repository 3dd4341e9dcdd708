#![no_main]

use ldpcq::files::parse_sweep_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_sweep_config(text) {
        let _ = cfg.stop_rule();
        let _ = cfg.code_spec();
    }
});
