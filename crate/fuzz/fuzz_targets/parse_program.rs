#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = qsda::lang::load(text) {
            // Desugared programs must lower to a graph without panicking.
            let _ = qsda::lang::Cfg::build(&p);
        }
    }
});
