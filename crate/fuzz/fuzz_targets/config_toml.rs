#![no_main]

use libfuzzer_sys::fuzz_target;
use stmg_experiments::{ConfigFile, ExperimentConfig, Overrides};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = ConfigFile::from_toml_str(text) else { return };
    if let Ok(cfg) = ExperimentConfig::resolve(file, Overrides::default()) {
        assert!(!cfg.to_string().contains('\n'));
        cfg.validate().expect("resolved configs are valid");
    }
});
