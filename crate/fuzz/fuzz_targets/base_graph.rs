#![no_main]

use ldpcq::code::BaseGraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(bg) = BaseGraph::parse(text) {
        let again = BaseGraph::parse(&bg.to_string()).expect("formatted base graph parses");
        assert_eq!(bg, again);
    }
});
