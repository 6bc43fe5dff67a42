//! File formats: CSV with a header row and LF line endings, JSON with sorted
//! keys, SHA-256 checksums for tick files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use swarm_lob::flow::{FlowParams, ModelKind};
use swarm_lob::sim::{Counters, ExpirePolicy, SimRecord};
use swarm_lob::Price;

pub const TICKS_FILE: &str = "ticks.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest decimal that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Pretty JSON with object keys in sorted order and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json::Value keeps maps in a BTreeMap, which sorts the keys
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes the tick series and returns the file's SHA-256.
pub fn write_ticks(path: &Path, ticks: &[Price]) -> Result<String> {
    let mut text = String::with_capacity(ticks.len() * 6 + 8);
    text.push_str("price\n");
    for t in ticks {
        text.push_str(&t.to_string());
        text.push('\n');
    }
    fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    Ok(sha256_hex(text.as_bytes()))
}

/// Reads a tick file, checking it against `expected_sha256` when given.
pub fn read_ticks(path: &Path, expected_sha256: Option<&str>) -> Result<Vec<Price>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(want) = expected_sha256 {
        let got = sha256_hex(&bytes);
        if got != want {
            bail!("checksum mismatch for {}: manifest has {want}, file has {got}", path.display());
        }
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes.as_slice());
    if rdr.headers().map(|h| h.len()).unwrap_or(0) == 0 {
        bail!("{} is empty", path.display());
    }
    let mut ticks = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let field = rec.get(0).unwrap_or("");
        let price: Price = field.trim().parse().with_context(|| format!("{}: row {}: bad price `{field}`", path.display(), i + 2))?;
        ticks.push(price);
    }
    Ok(ticks)
}

/// Everything needed to regenerate and verify one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    pub model: ModelKind,
    pub replication: u32,
    /// Seed of this replication, derived from `master_seed`.
    pub seed: u64,
    pub master_seed: u64,
    /// Set when the master seed came from the command line.
    pub seed_override: Option<u64>,
    pub rng: String,
    pub steps: u64,
    pub expire_policy: ExpirePolicy,
    pub flow: FlowParams,
    pub config_sha256: String,
    pub counters: Counters,
    pub trade_ratio: Option<f64>,
    pub swarm_ratio: Option<f64>,
    pub ticks_file: String,
    pub ticks_sha256: String,
}

/// A model's replications read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub model: ModelKind,
    pub manifests: Vec<RunManifest>,
    pub records: Vec<SimRecord>,
}

pub fn replication_dir(run_dir: &Path, rep: u32) -> PathBuf {
    run_dir.join(format!("rep-{rep:03}"))
}

/// Loads every `rep-*` directory under `run_dir`, verifying tick checksums.
pub fn load_run(run_dir: &Path) -> Result<LoadedRun> {
    let mut reps: Vec<PathBuf> = fs::read_dir(run_dir)
        .with_context(|| format!("reading run directory {}", run_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("rep-")))
        .collect();
    reps.sort();
    if reps.is_empty() {
        bail!("{} holds no replications", run_dir.display());
    }
    let mut manifests = Vec::with_capacity(reps.len());
    let mut records = Vec::with_capacity(reps.len());
    for dir in reps {
        let manifest: RunManifest = read_json(&dir.join(MANIFEST_FILE))?;
        let ticks = read_ticks(&dir.join(&manifest.ticks_file), Some(&manifest.ticks_sha256))?;
        if ticks.len() as u64 != manifest.counters.trades {
            bail!("{}: {} ticks but {} trades recorded", dir.display(), ticks.len(), manifest.counters.trades);
        }
        records.push(SimRecord { model: manifest.model, seed: manifest.seed, counters: manifest.counters, ticks });
        manifests.push(manifest);
    }
    let model = manifests[0].model;
    if manifests.iter().any(|m| m.model != model) {
        bail!("{} mixes models", run_dir.display());
    }
    Ok(LoadedRun { dir: run_dir.to_path_buf(), model, manifests, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-7, 2.9e-1, 12345.678, -0.0415] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.25), "0.25");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn json_keys_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let text = to_json(&S { zeta: 1, alpha: 2 }).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn ticks_round_trip_and_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let sha = write_ticks(&path, &[0, -3, 7]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "price\n0\n-3\n7\n");
        assert_eq!(read_ticks(&path, Some(&sha)).unwrap(), vec![0, -3, 7]);
        std::fs::write(&path, "price\n0\n-3\n8\n").unwrap();
        let err = read_ticks(&path, Some(&sha)).unwrap_err();
        assert!(err.to_string().contains("checksum mismatch"));
        std::fs::write(&path, "").unwrap();
        assert!(read_ticks(&path, None).is_err());
    }
}
