use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{CommandName, RunConfig};
use crate::error::CliResult;

pub const OUTPUT_SCHEMA: u32 = 1;
pub const TOOL_NAME: &str = "qcslab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema: u32,
    pub command: CommandName,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<&'static str>,
}

impl Metadata {
    pub fn for_run(cfg: &RunConfig) -> Self {
        Self {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            schema: OUTPUT_SCHEMA,
            command: cfg.command,
            config_hash: cfg.config_hash(),
            rng: None,
        }
    }

    /// `# key=value` lines placed above CSV headers.
    pub fn csv_preamble(&self) -> String {
        let command = serde_json::to_value(self.command).expect("serializes");
        let mut out = format!(
            "# tool={}\n# version={}\n# schema={}\n# command={}\n# config_hash={}\n",
            self.tool,
            self.version,
            self.schema,
            command.as_str().unwrap_or_default(),
            self.config_hash
        );
        if let Some(rng) = self.rng {
            out.push_str(&format!("# rng={rng}\n"));
        }
        out
    }
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    metadata: &'a Metadata,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with the metadata block first, newline-terminated.
pub fn json_document<T: Serialize>(meta: &Metadata, body: &T) -> Vec<u8> {
    let mut bytes =
        serde_json::to_vec_pretty(&Tagged { metadata: meta, body }).expect("output serializes");
    bytes.push(b'\n');
    bytes
}

pub fn csv_document(meta: &Metadata, table: &str) -> Vec<u8> {
    let mut text = meta.csv_preamble();
    text.push_str(table);
    text.into_bytes()
}

/// One output file; `path == None` means stdout.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn write(&self) -> CliResult<()> {
        use std::io::Write;
        match &self.path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(p, &self.bytes)?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(&self.bytes)?;
                stdout.flush()?;
            }
        }
        Ok(())
    }
}

pub fn in_dir(dir: Option<&Path>, name: &str) -> PathBuf {
    dir.map(|d| d.join(name)).unwrap_or_else(|| PathBuf::from(name))
}
