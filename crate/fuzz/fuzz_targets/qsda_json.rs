#![no_main]

use libfuzzer_sys::fuzz_target;
use qsda::qsda::Qsda;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(a) = Qsda::from_json_str(text) {
            let back = Qsda::from_json_str(&a.to_json_string()).expect("re-encoded automaton decodes");
            assert!(a.order_leq(&back) && back.order_leq(&a));
        }
    }
});
