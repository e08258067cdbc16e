//! Run directories: versioned CSV tables, images and the run manifest.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{sha256_file, ImageSave};

pub const MANIFEST: &str = "manifest.json";
const SCHEMA_PREFIX: &str = "# schema: ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub deterministic: bool,
    pub config: Config,
    pub inputs: Vec<FileHash>,
    /// Paths relative to the run directory.
    pub outputs: Vec<FileHash>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> CliResult<RunManifest> {
        let p = dir.join(MANIFEST);
        let text = fs::read_to_string(&p).map_err(CliError::io(&p))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
    }
}

/// A run directory that remembers every file written into it.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    written: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> CliResult<RunDir> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        self.root.join(name)
    }

    /// Writes a table: a schema line, a header row, then the records.
    pub fn csv<R: AsRef<[String]>>(
        &mut self,
        name: &str,
        schema: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> CliResult<()> {
        let path = self.claim(name);
        let mut f = File::create(&path).map_err(CliError::io(&path))?;
        writeln!(f, "{SCHEMA_PREFIX}{schema}").map_err(CliError::io(&path))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.as_ref())?;
        }
        w.flush().map_err(CliError::io(&path))?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.claim(name);
        fs::write(&path, body).map_err(CliError::io(&path))
    }

    pub fn image(&mut self, name: &str, img: &impl ImageSave) -> CliResult<()> {
        let path = self.claim(name);
        img.save_png(&path)
    }

    /// Hashes every written file and writes the manifest.
    pub fn finish(self, command: &str, cfg: &Config, inputs: &[PathBuf]) -> CliResult<RunManifest> {
        let hash = |p: &Path, label: String| -> CliResult<FileHash> {
            let bytes = fs::metadata(p).map_err(CliError::io(p))?.len();
            Ok(FileHash {
                path: label,
                sha256: sha256_file(p)?,
                bytes,
            })
        };
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: cfg.seed,
            deterministic: cfg.deterministic,
            config: cfg.clone(),
            inputs: inputs
                .iter()
                .map(|p| hash(p, p.display().to_string()))
                .collect::<CliResult<_>>()?,
            outputs: self
                .written
                .iter()
                .map(|n| hash(&self.root.join(n), n.clone()))
                .collect::<CliResult<_>>()?,
        };
        let path = self.root.join(MANIFEST);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        fs::write(&path, json + "\n").map_err(CliError::io(&path))?;
        Ok(manifest)
    }
}

/// A table read back from a run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub schema: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Table> {
        let f = File::open(path).map_err(CliError::io(path))?;
        let mut reader = BufReader::new(f);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(CliError::io(path))?;
        let schema = first
            .trim_end()
            .strip_prefix(SCHEMA_PREFIX)
            .ok_or_else(|| CliError::Data(format!("{}: missing schema line", path.display())))?
            .to_string();
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { schema, header, rows })
    }

    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("table `{}` has no column `{name}`", self.schema)))
    }

    pub fn f64_at(&self, row: usize, col: usize) -> CliResult<f64> {
        self.rows[row][col]
            .parse()
            .map_err(|_| CliError::Data(format!("`{}` is not a number", self.rows[row][col])))
    }
}
