//! `run` and `summarize`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use asep_core::replicas::Exec;

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::experiments::{execute, RunOutput};
use crate::output::{
    file_digest, read_manifest, read_rows, result_dirs, sha256_hex, write_json, write_rows, RunManifest, CONFIG,
    MANIFEST, RESULTS, SUMMARY,
};
use crate::summary::{summarize_rows, Summary};

/// Overrides `output_root` from the config.
pub const OUTPUT_ROOT_ENV: &str = "ASEP_OUTPUT_ROOT";

pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub summary: Summary,
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| cfg.output_root.clone(), PathBuf::from);
    root.join(&cfg.output)
}

#[cfg(feature = "parallel")]
fn execute_with_threads(cfg: &ExperimentConfig) -> Result<RunOutput> {
    if cfg.threads == 1 {
        return execute(cfg, Exec::Sequential);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| execute(cfg, Exec::Parallel))
}

#[cfg(not(feature = "parallel"))]
fn execute_with_threads(cfg: &ExperimentConfig) -> Result<RunOutput> {
    execute(cfg, Exec::Sequential)
}

/// Runs the experiment in `config_path`. The manifest is removed first and
/// written last, so an interrupted run leaves an incomplete directory.
pub fn run(config_path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(config_path).map_err(|e| CliError::io(config_path, e))?;
    let cfg = parse_config(&text)?;
    let dir = output_dir(&cfg);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    }

    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let out = execute_with_threads(&cfg)?;

    write_rows(&dir.join(RESULTS), &out.rows)?;
    let summary = summarize_rows(&cfg, &out.rows);
    write_json(&dir.join(SUMMARY), &summary)?;
    let config_path = dir.join(CONFIG);
    fs::write(&config_path, &cfg.text).map_err(|e| CliError::io(&config_path, e))?;

    let files = [RESULTS, SUMMARY, CONFIG]
        .into_iter()
        .map(|f| Ok((f.to_string(), file_digest(&dir.join(f))?)))
        .collect::<Result<_>>()?;
    let manifest = RunManifest {
        experiment: cfg.experiment.tag().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: sha256_hex(cfg.text.as_bytes()),
        master_seed: cfg.master_seed,
        seed_rule: "seed_i = asep_core::stream::replica_seed(master_seed, i), shared by every parameter point"
            .to_string(),
        seeds: out.seeds,
        invalid: out.invalid,
        files,
        started_unix,
        wall_time_secs: clock.elapsed().as_secs_f64(),
    };
    write_json(&manifest_path, &manifest)?;
    Ok(RunReport { dir, manifest, summary })
}

/// Complete directories with their summaries, and skipped incomplete ones.
pub type Summaries = (Vec<(PathBuf, Summary)>, Vec<PathBuf>);

/// Recomputes summaries for every complete result directory under `root`.
/// Directories without a manifest are skipped and returned separately.
pub fn summarize(root: &Path) -> Result<Summaries> {
    let (complete, incomplete) = result_dirs(root)?;
    let mut out = Vec::new();
    for dir in complete {
        let manifest = read_manifest(&dir)?;
        let config_path = dir.join(CONFIG);
        let text = fs::read_to_string(&config_path).map_err(|e| CliError::io(&config_path, e))?;
        let cfg = parse_config(&text)?;
        let rows = read_rows(&dir.join(RESULTS))?;
        if sha256_hex(text.as_bytes()) != manifest.config_hash {
            return Err(CliError::Schema {
                path: config_path,
                line: 0,
                message: "config does not match the hash in the manifest".into(),
            });
        }
        for (name, digest) in &manifest.files {
            let path = dir.join(name);
            if &file_digest(&path)? != digest {
                return Err(CliError::Schema {
                    path,
                    line: 0,
                    message: "file does not match the digest in the manifest".into(),
                });
            }
        }
        out.push((dir, summarize_rows(&cfg, &rows)));
    }
    Ok((out, incomplete))
}
