//! Resolved options and output files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::Failure;

pub const FORMAT_VERSION: u32 = 1;

/// Option values resolved as flag, then config file, then default. Every
/// resolved value is recorded for the summary.
pub struct Options {
    file: Map<String, Value>,
    pub resolved: Map<String, Value>,
}

impl Options {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let file = match path {
            None => Map::new(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(Failure::Usage("config must be a JSON object".into())),
                    Err(e) => return Err(Failure::Usage(format!("bad config {}: {e}", p.display()))),
                }
            }
        };
        Ok(Self {
            file,
            resolved: Map::new(),
        })
    }

    pub fn get<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, Failure> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => serde_json::from_value(raw.clone())
                    .map_err(|e| Failure::Usage(format!("config key '{key}': {e}")))?,
                None => default,
            },
        };
        self.record(key, &v);
        Ok(v)
    }

    /// Like [`Options::get`] without a default.
    pub fn get_opt<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure> {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(
                    serde_json::from_value(raw.clone()).map_err(|e| Failure::Usage(format!("config key '{key}': {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.record(key, v);
        }
        Ok(v)
    }

    pub fn require<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>) -> Result<T, Failure> {
        self.get_opt(key, flag)?
            .ok_or_else(|| Failure::Usage(format!("--{} is required", key.replace('_', "-"))))
    }

    fn record<T: Serialize>(&mut self, key: &str, v: &T) {
        self.resolved
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

pub struct Out {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Out {
    pub fn new(dir: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, written: vec![] })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), Failure> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::Io(e.to_string()))?;
        for r in rows {
            w.serialize(r).map_err(|e| Failure::Io(e.to_string()))?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        self.written.push(path);
        Ok(())
    }

    /// `<command>.summary.json`: config echo, version and results.
    pub fn summary<T: Serialize>(&mut self, command: &str, opts: &Options, results: &T) -> Result<(), Failure> {
        let v = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "format_version": FORMAT_VERSION,
            "config": opts.resolved,
            "results": results,
        });
        self.json(&format!("{command}.summary.json"), &v)
    }
}
