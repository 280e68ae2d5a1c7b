//! Replays the checked-in fuzz corpus through the same parsers the fuzz targets use.

use std::fs;
use std::path::PathBuf;

use stmg_core::strategy::CoarseningPath;
use stmg_experiments::config::{parse_methods, parse_restart};
use stmg_experiments::{ConfigFile, ExperimentConfig, LevelRange, Overrides};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files.into_iter().map(|f| fs::read_to_string(f).unwrap()).collect()
}

#[test]
fn config_seeds_resolve() {
    for s in seeds("config_toml") {
        let file = ConfigFile::from_toml_str(&s).unwrap();
        let cfg = ExperimentConfig::resolve(file, Overrides::default()).unwrap();
        assert!(!cfg.to_string().contains('\n'));
    }
}

#[test]
fn path_seeds_round_trip() {
    for s in seeds("coarsening_path") {
        let p: CoarseningPath = s.parse().unwrap();
        assert_eq!(p.to_string().parse::<CoarseningPath>().unwrap().directions, p.directions);
    }
}

#[test]
fn method_and_level_seeds_parse() {
    for s in seeds("method_list") {
        assert!(parse_methods(&s).is_ok() || parse_restart(&s).is_ok(), "{s}");
    }
    for s in seeds("level_range") {
        let r: LevelRange = s.parse().unwrap();
        assert_eq!(r.to_string().parse::<LevelRange>().unwrap(), r);
    }
}
