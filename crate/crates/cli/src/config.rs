//! Flag and config-file merging. Config files are JSON objects whose keys
//! are the long flag names; flags given on the command line win. A result
//! file written by this program is accepted as a config as well: its
//! `config` object is used.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

const GLOBAL_KEYS: [&str; 5] = ["seed", "workers", "out", "format", "config"];
/// Keys of a result envelope that are not settings.
const ENVELOPE_KEYS: [&str; 3] = ["command", "version", "result"];

pub fn read_file(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        action: "read config",
        path: path.display().to_string(),
        source,
    })?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::usage(format!("config {} must hold a JSON object", path.display())));
    };
    if let Some(Value::Object(inner)) = map.remove("config") {
        // a result envelope: settings live under "config", the seed at the top
        let seed = map.remove("seed");
        map = inner;
        if let Some(seed) = seed {
            map.entry("seed").or_insert(seed);
        }
    }
    for k in ENVELOPE_KEYS {
        map.remove(k);
    }
    Ok(map)
}

fn as_text(v: Value) -> Option<Value> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(Value::String(s)),
        other => Some(Value::String(other.to_string())),
    }
}

/// Pulls the global settings out of `file`, leaving the command's own keys.
pub fn take_global(file: &mut Map<String, Value>, key: &str) -> Option<Value> {
    debug_assert!(GLOBAL_KEYS.contains(&key));
    file.remove(key)
}

/// Fills the unset fields of `flags` from `file`. All command fields are
/// strings, so file values of other JSON types are taken as their JSON text.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Map<String, Value>) -> Result<T> {
    let Value::Object(mut merged) =
        serde_json::to_value(flags).map_err(|e| CliError::usage(format!("flags: {e}")))?
    else {
        unreachable!("argument structs serialize to objects")
    };
    merged.retain(|_, v| !v.is_null());
    for (k, v) in file {
        if GLOBAL_KEYS.contains(&k.as_str()) {
            continue;
        }
        if let Some(v) = as_text(v) {
            merged.entry(k).or_insert(v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::usage(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Default, Serialize, Deserialize, Debug, PartialEq)]
    #[serde(rename_all = "kebab-case", deny_unknown_fields)]
    struct Demo {
        #[serde(skip_serializing_if = "Option::is_none")]
        kernel: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        domain_volume: Option<String>,
    }

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_override_the_file() {
        let flags = Demo { kernel: Some("disc".into()), domain_volume: None };
        let file = obj(serde_json::json!({"kernel": {"shape": "box", "b": [1.0]}, "domain-volume": 9, "seed": 4}));
        let m = merge(&flags, file).unwrap();
        assert_eq!(m.kernel.as_deref(), Some("disc"));
        assert_eq!(m.domain_volume.as_deref(), Some("9"));
    }

    #[test]
    fn objects_become_json_text() {
        let file = obj(serde_json::json!({"kernel": {"shape": "box", "b": [1.0]}}));
        let m = merge(&Demo::default(), file).unwrap();
        assert_eq!(m.kernel.as_deref(), Some(r#"{"b":[1.0],"shape":"box"}"#));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = obj(serde_json::json!({"kernal": "disc"}));
        assert!(matches!(merge(&Demo::default(), file), Err(CliError::Usage(_))));
    }

    #[test]
    fn result_envelopes_are_configs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        std::fs::write(&path, r#"{"command":"omega","version":"x","seed":9,"config":{"kernel":"disc"},"result":{}}"#)
            .unwrap();
        let mut map = read_file(&path).unwrap();
        assert_eq!(take_global(&mut map, "seed"), Some(Value::from(9)));
        assert_eq!(map.get("kernel"), Some(&Value::from("disc")));
        assert!(map.get("result").is_none());
    }
}
