//! Command-line flags layered over an optional JSON config file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mixed_ising::filter::FilterMode;
use mixed_ising::sweep::{default_sizes, SweepConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    ZzOnly,
}

impl From<ModeArg> for FilterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => FilterMode::Full,
            ModeArg::ZzOnly => FilterMode::ZzOnly,
        }
    }
}

/// Flags shared by every subcommand. Any flag given here wins over the
/// config file.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON config file; keys match the sweep configuration plus `out` and `threads`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long = "j-over-h", value_name = "RATIO")]
    pub j_over_h: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Comma-separated even rung counts, e.g. `12,16,20`.
    #[arg(long, value_name = "LIST")]
    pub sizes: Option<String>,
    /// Comma-separated values or `start:stop:step`.
    #[arg(long = "pzz-grid", value_name = "GRID")]
    pub pzz_grid: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Bond-dimension cap for both DMRG and filtering.
    #[arg(long = "max-bond")]
    pub max_bond: Option<usize>,
    /// Relative singular-value cutoff for both DMRG and filtering.
    #[arg(long = "sv-cutoff")]
    pub sv_cutoff: Option<f64>,
    #[arg(long = "energy-tol")]
    pub energy_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Reuse checkpoints and already measured points.
    #[arg(long)]
    pub resume: bool,
    /// Skip the cat-state projection on the ordered side.
    #[arg(long = "no-cat")]
    pub no_cat: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sweep: SweepConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub resume: bool,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("cannot parse {what} entry {t:?}")))
        .collect()
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list(s, "grid"),
        [a, b, c] => {
            let (start, stop, step): (f64, f64, f64) = (
                a.trim().parse().map_err(|_| format!("bad grid start {a:?}"))?,
                b.trim().parse().map_err(|_| format!("bad grid stop {b:?}"))?,
                c.trim().parse().map_err(|_| format!("bad grid step {c:?}"))?,
            );
            if !(step > 0.0) || stop < start {
                return Err(format!("grid {s:?} needs step > 0 and stop ≥ start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // rounded to 12 digits so that 0.025·k prints as 0.025·k
            Ok((0..=n).map(|k| ((start + step * k as f64) * 1e12).round() / 1e12).collect())
        }
        _ => Err(format!("grid {s:?} is neither a list nor start:stop:step")),
    }
}

fn load_file(path: &Path) -> Result<(SweepConfig, Option<PathBuf>, Option<usize>, bool), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))?;
    let obj = value.as_object_mut().ok_or_else(|| format!("{} must hold a JSON object", path.display()))?;
    let out = match obj.remove("out") {
        Some(v) => Some(PathBuf::from(v.as_str().ok_or("`out` must be a string")?)),
        None => None,
    };
    let threads = match obj.remove("threads") {
        Some(v) => Some(v.as_u64().ok_or("`threads` must be a positive integer")? as usize),
        None => None,
    };
    let has_sizes = obj.contains_key("sizes");
    let cfg: SweepConfig = serde_json::from_value(value).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((cfg, out, threads, has_sizes))
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let (mut cfg, file_out, file_threads, mut has_sizes) = match &self.config {
            Some(p) => load_file(p)?,
            None => (SweepConfig::default(), None, None, false),
        };
        if let Some(v) = self.j_over_h {
            cfg.j_over_h = v;
        }
        if let Some(v) = self.h {
            cfg.h = v;
        }
        if let Some(s) = &self.sizes {
            cfg.sizes = parse_list(s, "size")?;
            has_sizes = true;
        }
        if !has_sizes {
            cfg.sizes = default_sizes(cfg.j_over_h);
        }
        if let Some(g) = &self.pzz_grid {
            cfg.pzz_grid = parse_grid(g)?;
        }
        if let Some(m) = self.mode {
            cfg.mode = m.into();
        }
        if let Some(d) = self.max_bond {
            cfg.dmrg.trunc.max_bond = d;
            cfg.trunc.max_bond = d;
        }
        if let Some(c) = self.sv_cutoff {
            cfg.dmrg.trunc.sv_cutoff = c;
            cfg.trunc.sv_cutoff = c;
        }
        if let Some(t) = self.energy_tol {
            cfg.dmrg.energy_tol = t;
        }
        if let Some(s) = self.seed {
            cfg.dmrg.seed = s;
        }
        if self.no_cat {
            cfg.cat = false;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        let threads = self.threads.or(file_threads);
        if threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        Ok(RunConfig {
            sweep: cfg,
            out: self.out.clone().or(file_out).unwrap_or_else(|| PathBuf::from("mixed-ising-out")),
            threads,
            resume: self.resume,
        })
    }
}
