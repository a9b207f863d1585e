//! Buffered output files, flushed together once a command has finished.

use crate::config::RunConfig;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const OUT_DIR_ENV: &str = "SHEARLAB_OUT_DIR";
const FALLBACK_DIR: &str = "shearlab-out";

pub fn resolve_dir(flag: Option<&str>, cfg: &RunConfig) -> PathBuf {
    if let Some(d) = flag {
        return d.into();
    }
    if let Some(d) = &cfg.output.dir {
        return d.into();
    }
    match std::env::var(OUT_DIR_ENV) {
        Ok(d) if !d.is_empty() => d.into(),
        _ => FALLBACK_DIR.into(),
    }
}

pub struct Outputs {
    pub header: Vec<String>,
    pub version: &'static str,
    pub hash: String,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        let version = env!("CARGO_PKG_VERSION");
        let hash = cfg.hash();
        let header = vec![format!("shearlab {version}"), format!("config sha256 {hash}"), format!("command {command}")];
        Outputs { header, version, hash, files: Vec::new() }
    }

    /// A CSV produced by a writer that prefixes each header line with "# ".
    pub fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>, &[String]) -> std::io::Result<()>) {
        let mut buf = Vec::new();
        write(&mut buf, &self.header).expect("writing to memory");
        self.files.push((name.into(), buf));
    }

    /// JSON object with version and config hash folded in at the top.
    pub fn json(&mut self, name: &str, body: serde_json::Value) {
        let mut map = serde_json::Map::new();
        map.insert("shearlab_version".into(), self.version.into());
        map.insert("config_hash".into(), self.hash.clone().into());
        if let serde_json::Value::Object(o) = body {
            map.extend(o);
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("serialisable");
        text.push('\n');
        self.files.push((name.into(), text.into_bytes()));
    }

    pub fn text(&mut self, name: &str, body: &str) {
        let mut s = String::new();
        for h in &self.header {
            s.push_str(&format!("# {h}\n"));
        }
        s.push_str(body);
        self.files.push((name.into(), s.into_bytes()));
    }

    pub fn svg(&mut self, name: &str, plot: &crate::svg::Plot) {
        self.files.push((name.into(), plot.render(&self.header).into_bytes()));
    }

    pub fn flush(self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path)?;
            f.write_all(&bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
