//! Prepared states on disk: a binary MPS plus a JSON metadata file holding
//! the configuration it came from and a SHA-256 digest of the MPS bytes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mixed_ising::dmrg::{DmrgConfig, PrepRoute, Preparation};
use mixed_ising::mps::{read_mps, write_mps, MpsState, MPS_FORMAT_VERSION};
use mixed_ising::sweep::SweepConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub schema_version: u32,
    pub mps_format_version: u32,
    #[serde(rename = "L")]
    pub rungs: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    pub cat: bool,
    pub route: PrepRoute,
    pub dmrg: DmrgConfig,
    pub preparation: Preparation,
    pub mps_file: String,
    pub mps_sha256: String,
}

impl CheckpointMeta {
    fn matches(&self, cfg: &SweepConfig, rungs: usize) -> bool {
        self.schema_version == CHECKPOINT_SCHEMA_VERSION
            && self.rungs == rungs
            && self.j == cfg.j()
            && self.h == cfg.h
            && self.cat == cfg.cat
            && self.route == cfg.route
            && self.dmrg == cfg.dmrg
    }
}

pub fn dir(out: &Path) -> PathBuf {
    out.join("checkpoints")
}

fn paths(out: &Path, rungs: usize) -> (PathBuf, PathBuf) {
    let d = dir(out);
    (d.join(format!("L{rungs}.mps")), d.join(format!("L{rungs}.json")))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save(out: &Path, cfg: &SweepConfig, rungs: usize, state: &MpsState, prep: &Preparation) -> Result<()> {
    let (mps_path, meta_path) = paths(out, rungs);
    fs::create_dir_all(dir(out))?;
    let mut bytes = Vec::new();
    write_mps(&mut bytes, state)?;
    let meta = CheckpointMeta {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        mps_format_version: MPS_FORMAT_VERSION,
        rungs,
        j: cfg.j(),
        h: cfg.h,
        cat: cfg.cat,
        route: cfg.route,
        dmrg: cfg.dmrg,
        preparation: prep.clone(),
        mps_file: mps_path.file_name().expect("file name").to_string_lossy().into_owned(),
        mps_sha256: hex(&Sha256::digest(&bytes)),
    };
    fs::write(&mps_path, &bytes).with_context(|| format!("writing {}", mps_path.display()))?;
    fs::write(&meta_path, serde_json::to_vec_pretty(&meta)?).with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(())
}

/// The checkpoint for `rungs` if one exists and was produced by the same
/// preparation settings. A digest mismatch is an error, not a miss.
pub fn load(out: &Path, cfg: &SweepConfig, rungs: usize) -> Result<Option<(MpsState, Preparation)>> {
    let (_, meta_path) = paths(out, rungs);
    if !meta_path.exists() {
        return Ok(None);
    }
    let meta: CheckpointMeta = serde_json::from_slice(&fs::read(&meta_path)?)
        .with_context(|| format!("reading {}", meta_path.display()))?;
    if !meta.matches(cfg, rungs) {
        return Ok(None);
    }
    let mps_path = dir(out).join(&meta.mps_file);
    let bytes = fs::read(&mps_path).with_context(|| format!("reading {}", mps_path.display()))?;
    if hex(&Sha256::digest(&bytes)) != meta.mps_sha256 {
        bail!("checkpoint {} does not match its recorded digest", mps_path.display());
    }
    let state = read_mps(&mut bytes.as_slice())?;
    Ok(Some((state, meta.preparation)))
}
