#![no_main]

use libfuzzer_sys::fuzz_target;
use stmg_core::strategy::CoarseningPath;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(path) = text.parse::<CoarseningPath>() {
        let again: CoarseningPath = path.to_string().parse().expect("display output parses");
        assert_eq!(again.directions, path.directions);
        assert_eq!(path.n_levels(), path.directions.len() + 1);
    }
});
