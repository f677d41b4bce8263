#![allow(dead_code)]

use std::path::PathBuf;

use sidepeg::sim::ScenarioConfig;

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn load(name: &str) -> ScenarioConfig {
    let path = scenario_dir().join(format!("{name}.toml"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    ScenarioConfig::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every scenario in the corpus, sorted by file name.
pub fn corpus() -> Vec<ScenarioConfig> {
    let mut names: Vec<String> = std::fs::read_dir(scenario_dir())
        .expect("scenario directory")
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            e.file_name()
                .to_str()
                .and_then(|n| n.strip_suffix(".toml"))
                .map(String::from)
        })
        .collect();
    names.sort();
    names.iter().map(|n| load(n)).collect()
}
