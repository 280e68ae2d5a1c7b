#![no_main]

use libfuzzer_sys::fuzz_target;
use stmg_core::rediscretisation::RediscretisationMethod;
use stmg_experiments::config::{parse_methods, parse_restart};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(methods) = parse_methods(text) {
        assert!(!methods.is_empty());
        for m in methods {
            assert_eq!(m.name().parse::<RediscretisationMethod>().unwrap(), m);
        }
    }
    let _ = parse_restart(text);
});
