use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

/// What was run and with which inputs. Two runs with equal `subcommand`,
/// `parameters` and `seed` produce identical numeric output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Wall time per stage in milliseconds.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timings: BTreeMap::new(),
        }
    }

    pub fn param<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).expect("parameter serializes");
        self.parameters.insert(key.to_string(), v);
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}
