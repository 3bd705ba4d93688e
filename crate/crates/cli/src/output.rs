//! Result files: `results.csv` (schema 1), `summary.json`, `config.txt`, and
//! `manifest.json`, which is written last and marks the directory complete.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_LINE: &str = "#schema=1";
pub const RESULTS: &str = "results.csv";
pub const SUMMARY: &str = "summary.json";
pub const CONFIG: &str = "config.txt";
pub const MANIFEST: &str = "manifest.json";
const HEADER: [&str; 6] = ["replica", "seed", "point", "metric", "value", "censored"];

/// One CSV record. Aggregate statistics leave `replica` and `seed` empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub replica: Option<u64>,
    pub seed: Option<u64>,
    pub point: String,
    pub metric: String,
    pub value: f64,
    pub censored: bool,
}

impl Row {
    pub fn replica(replica: u64, seed: u64, point: &str, metric: &str, value: f64, censored: bool) -> Self {
        Self {
            replica: Some(replica),
            seed: Some(seed),
            point: point.to_string(),
            metric: metric.to_string(),
            value,
            censored,
        }
    }

    pub fn aggregate(point: &str, metric: &str, value: f64) -> Self {
        Self {
            replica: None,
            seed: None,
            point: point.to_string(),
            metric: metric.to_string(),
            value,
            censored: false,
        }
    }
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(|e| CliError::io(path, e))?);
    writeln!(file, "{SCHEMA_LINE}").map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(HEADER).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.replica.map(|x| x.to_string()).unwrap_or_default(),
            r.seed.map(|x| x.to_string()).unwrap_or_default(),
            r.point.clone(),
            r.metric.clone(),
            format_value(r.value),
            (r.censored as u8).to_string(),
        ])
        .map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Shortest representation that parses back to the same f64.
fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(CliError::Schema {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected `{SCHEMA_LINE}`, got `{}`", first.trim_end()),
        });
    }
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers().map_err(|e| CliError::csv(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(CliError::Schema {
            path: path.to_path_buf(),
            line: 2,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        // one line for the schema marker, one for the header
        let line = i + 3;
        let bad = |message: String| CliError::Schema {
            path: path.to_path_buf(),
            line,
            message,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", HEADER.len(), rec.len())));
        }
        let opt = |s: &str, what: &str| -> Result<Option<u64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| bad(format!("{what} `{s}` is not an integer")))
            }
        };
        let value: f64 = rec[4]
            .parse()
            .map_err(|_| bad(format!("value `{}` is not a number", &rec[4])))?;
        let censored = match &rec[5] {
            "0" => false,
            "1" => true,
            s => return Err(bad(format!("censored flag `{s}` is not 0 or 1"))),
        };
        if rec[2].is_empty() || rec[3].is_empty() {
            return Err(bad("empty point or metric".into()));
        }
        rows.push(Row {
            replica: opt(&rec[0], "replica")?,
            seed: opt(&rec[1], "seed")?,
            point: rec[2].to_string(),
            metric: rec[3].to_string(),
            value,
            censored,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    /// SHA-256 of the config text.
    pub config_hash: String,
    pub master_seed: u64,
    /// seed_i = replica_seed(master_seed, i)
    pub seed_rule: String,
    pub seeds: Vec<u64>,
    pub invalid: Vec<(String, usize)>,
    pub files: Vec<(String, String)>,
    pub started_unix: u64,
    pub wall_time_secs: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| CliError::io(path, e))?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path,
        line: e.line(),
        message: e.to_string(),
    })
}

/// Result directories under `root`: `root` itself if it holds a manifest,
/// otherwise its complete subdirectories in name order. Incomplete ones are
/// returned separately.
pub fn result_dirs(root: &Path) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
    if !root.exists() {
        return Err(CliError::io(root, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    if root.join(MANIFEST).is_file() {
        return Ok((vec![root.to_path_buf()], Vec::new()));
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| CliError::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs.into_iter().partition(|d| d.join(MANIFEST).is_file()))
}
