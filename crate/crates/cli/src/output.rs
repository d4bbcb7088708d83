//! File writers. Every artifact carries the provenance block: JSON files as
//! a top-level `provenance` object, CSV files as leading `# ` lines.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const TOOL: &str = "sieve";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What is needed to rerun a command bit for bit.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub measure: String,
    pub seed: u64,
    pub command_line: String,
}

impl Provenance {
    pub fn new(measure: &str, seed: u64, args: &[String]) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            measure: measure.to_string(),
            seed,
            command_line: command_line(args),
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# tool: {} {}\n# measure: {}\n# seed: {}\n# command: {}\n",
            self.tool, self.version, self.measure, self.seed, self.command_line
        )
    }
}

/// The invocation with the program path replaced by the tool name, so the
/// record does not depend on where the binary lives.
fn command_line(args: &[String]) -> String {
    let mut parts = vec![TOOL.to_string()];
    for a in args.iter().skip(1) {
        if a.is_empty()
            || a.chars()
                .any(|c| c.is_whitespace() || c == '"' || c == '\'')
        {
            parts.push(format!("'{}'", a.replace('\'', r"'\''")));
        } else {
            parts.push(a.clone());
        }
    }
    parts.join(" ")
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json_string<T: Serialize>(provenance: &Provenance, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Stamped { provenance, body })?;
    s.push('\n');
    Ok(s)
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(
        &self,
        name: &str,
        provenance: &Provenance,
        body: &T,
    ) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, json_string(provenance, body)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    /// Writes `header` and `rows` as CSV after the provenance comments.
    pub fn write_csv<R, I>(
        &self,
        name: &str,
        provenance: &Provenance,
        header: &[&str],
        rows: I,
    ) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let path = self.path(name);
        let mut file =
            fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        file.write_all(provenance.comment_lines().as_bytes())?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form, so CSV values parse back bit-exactly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
