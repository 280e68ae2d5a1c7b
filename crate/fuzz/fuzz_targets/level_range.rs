#![no_main]

use libfuzzer_sys::fuzz_target;
use stmg_experiments::LevelRange;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = text.parse::<LevelRange>() {
        assert!(2 <= r.first && r.first <= r.last);
        assert_eq!(r.to_string().parse::<LevelRange>().unwrap(), r);
    }
});
