//! Versioned CSV/JSON emission with an embedded run manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const CSV_SCHEMA: u32 = 1;

/// Build identifier: `git describe` of the source tree when available.
pub const VERSION: &str = env!("CONFETTI_VERSION");

/// Provenance attached to every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub seed: u64,
    /// SHA-256 of the canonical JSON of the run arguments.
    pub config_sha256: String,
    pub version: String,
}

impl Manifest {
    pub fn new(seed: u64, args: &impl Serialize) -> Result<Manifest> {
        Ok(Manifest {
            schema: CSV_SCHEMA,
            seed,
            config_sha256: config_hash(args)?,
            version: VERSION.to_string(),
        })
    }

    /// `# schema=1 seed=... config_sha256=... version=...`
    pub fn comment_line(&self) -> String {
        format!(
            "# schema={} seed={} config_sha256={} version={}",
            self.schema, self.seed, self.config_sha256, self.version
        )
    }
}

pub fn config_hash(args: &impl Serialize) -> Result<String> {
    // serde_json::Value keeps object keys sorted, which makes the text canonical
    let value = serde_json::to_value(args)?;
    let digest = Sha256::digest(serde_json::to_string(&value)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// CSV text: manifest comment, header row, then records.
pub fn csv_document<R, F>(manifest: &Manifest, header: &[&str], rows: R) -> Result<String>
where
    R: IntoIterator<Item = Vec<F>>,
    F: AsRef<str>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(row.iter().map(|f| f.as_ref())).map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    let mut text = manifest.comment_line();
    text.push('\n');
    text.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(text)
}

fn csv_err(e: csv::Error) -> crate::error::ConfettiError {
    crate::error::ConfettiError::Io(std::io::Error::other(e))
}

/// JSON summary `{ "manifest": ..., "args": ..., "result": ... }`, pretty-printed.
pub fn json_document(manifest: &Manifest, args: &impl Serialize, result: &impl Serialize) -> Result<String> {
    let doc = serde_json::json!({
        "manifest": manifest,
        "args": serde_json::to_value(args)?,
        "result": serde_json::to_value(result)?,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn bit(b: bool) -> String {
    u8::from(b).to_string()
}
