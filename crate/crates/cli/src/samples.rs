//! Newline-delimited JSON storage of retained posterior samples.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use bloc_core::{ModelState, PosteriorSample};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// One retained sample as stored on disk. Assignments are 1-based and `α`
/// is flattened in (bloc, question, response) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub chain: usize,
    pub iteration: usize,
    pub wait_time: f64,
    pub k: usize,
    pub eta: Vec<f64>,
    pub z: Vec<usize>,
    pub alpha: Vec<f64>,
}

impl SampleRecord {
    pub fn from_sample(chain: usize, s: &PosteriorSample) -> Self {
        Self {
            chain,
            iteration: s.iteration,
            wait_time: s.wait_time,
            k: s.state.k,
            eta: s.state.eta.clone(),
            z: s.state.z.iter().map(|z| z + 1).collect(),
            alpha: s.state.alpha.iter().flat_map(|a| [a[0], a[1]]).collect(),
        }
    }

    /// Rebuilds the sample, checking it against the data dimensions.
    pub fn into_sample(self, n: usize, q: usize) -> Result<PosteriorSample, String> {
        if self.z.iter().any(|&z| z == 0 || z > self.k) {
            return Err(format!("assignment outside 1..={}", self.k));
        }
        if self.alpha.len() != 2 * self.k * q {
            return Err(format!(
                "expected {} alpha values, found {}",
                2 * self.k * q,
                self.alpha.len()
            ));
        }
        let state = ModelState {
            k: self.k,
            eta: self.eta,
            z: self.z.into_iter().map(|z| z - 1).collect(),
            alpha: self.alpha.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        };
        state.validate(n, q).map_err(|e| e.to_string())?;
        Ok(PosteriorSample {
            state,
            wait_time: self.wait_time,
            iteration: self.iteration,
        })
    }
}

pub fn chain_file(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("chain_{chain}.samples.jsonl"))
}

pub fn write_samples<W: Write>(chain: usize, samples: &[PosteriorSample], mut out: W) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, &SampleRecord::from_sample(chain, s))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_samples<R: BufRead>(reader: R, n: usize, q: usize, source: &str) -> CliResult<Vec<PosteriorSample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{source} line {}: {e}", i + 1)))?;
        out.push(
            rec.into_sample(n, q)
                .map_err(|e| CliError::Data(format!("{source} line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Loads and pools every `chain_*.samples.jsonl` file in `dir`, in chain order.
pub fn load_dir(dir: &Path, n: usize, q: usize) -> CliResult<Vec<PosteriorSample>> {
    let mut files: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            let name = path.file_name()?.to_str()?;
            let chain = name.strip_prefix("chain_")?.strip_suffix(".samples.jsonl")?.parse().ok()?;
            Some((chain, path))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("no sample files in {}", dir.display())));
    }
    let mut all = Vec::new();
    for (_, path) in files {
        let file = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        all.extend(read_samples(
            std::io::BufReader::new(file),
            n,
            q,
            &path.display().to_string(),
        )?);
    }
    if all.is_empty() {
        return Err(CliError::Data(format!("sample files in {} are empty", dir.display())));
    }
    Ok(all)
}
