//! `mixed-ising`: prepare, sweep, fit and validate decohered Ising ladders.
//!
//! Exit codes: 0 success, 1 runtime failure or a `validate` mismatch,
//! 2 configuration error, 3 DMRG convergence failure, 4 fit failure.

mod checkpoint;
mod config;

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mixed_ising::analysis::Thresholds;
use mixed_ising::dmrg::Preparation;
use mixed_ising::ed::write_golden_csv;
use mixed_ising::mps::MpsState;
use mixed_ising::sweep::{
    fit_results, prepare_size, read_profiles_csv, read_rows_csv, run_sweep_with, write_profiles_csv,
    write_rows_csv, write_timing_csv, PointResult, SweepConfig, SweepHooks,
};
use mixed_ising::validation::{run_validation, DEFAULT_TOLERANCE};
use sha2::{Digest, Sha256};

use crate::config::{CommonArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "mixed-ising", version, about = "Decohered Ising ladders with matrix product states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground states of every size, written as checkpoints.
    Prepare(CommonArgs),
    /// Filter and measure over the p_zz grid.
    Sweep(CommonArgs),
    /// Regimes, entropy peaks, 1/L extrapolation and c_eff from a finished sweep.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.1)]
        low: f64,
        #[arg(long, default_value_t = 0.4)]
        high: f64,
    },
    /// Exact diagonalization against the MPS pipeline on small ladders.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
}

#[derive(Debug)]
enum Outcome {
    Ok,
    Mismatch,
    Config(String),
    Convergence(String),
    Fit(String),
}

impl Outcome {
    fn code(&self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Mismatch => 1,
            Outcome::Config(_) => 2,
            Outcome::Convergence(_) => 3,
            Outcome::Fit(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            match &outcome {
                Outcome::Config(m) => eprintln!("config error: {m}"),
                Outcome::Convergence(m) => eprintln!("convergence failure: {m}"),
                Outcome::Fit(m) => eprintln!("fit failure: {m}"),
                Outcome::Mismatch => eprintln!("validation mismatch"),
                Outcome::Ok => {}
            }
            ExitCode::from(outcome.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn setup(common: &CommonArgs) -> std::result::Result<RunConfig, Outcome> {
    let rc = common.resolve().map_err(Outcome::Config)?;
    if let Some(n) = rc.threads {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rc)
}

fn run(cli: Cli) -> Result<Outcome> {
    let (common, rest) = match &cli.command {
        Command::Prepare(c) | Command::Sweep(c) => (c, None),
        Command::Fit { common, low, high } => (common, Some((*low, *high))),
        Command::Validate { common, .. } => (common, None),
    };
    let rc = match setup(common) {
        Ok(rc) => rc,
        Err(o) => return Ok(o),
    };
    fs::create_dir_all(&rc.out).with_context(|| format!("creating {}", rc.out.display()))?;
    match &cli.command {
        Command::Prepare(_) => prepare(&rc),
        Command::Sweep(_) => sweep(&rc),
        Command::Fit { .. } => {
            let (low, high) = rest.expect("fit thresholds");
            match Thresholds::new(low, high) {
                Ok(t) => fit(&rc, &t),
                Err(e) => Ok(Outcome::Config(e.to_string())),
            }
        }
        Command::Validate { tolerance, .. } => validate(&rc, *tolerance),
    }
}

fn prepared(rc: &RunConfig, rungs: usize) -> Result<(MpsState, Preparation)> {
    if let Some(found) = checkpoint::load(&rc.out, &rc.sweep, rungs)? {
        return Ok(found);
    }
    let (state, prep) = prepare_size(&rc.sweep, rungs)?;
    checkpoint::save(&rc.out, &rc.sweep, rungs, &state, &prep)?;
    Ok((state, prep))
}

fn prepare(rc: &RunConfig) -> Result<Outcome> {
    let mut unconverged = Vec::new();
    for &l in &rc.sweep.sizes {
        let (_, prep) = if rc.resume {
            prepared(rc, l)?
        } else {
            let (s, p) = prepare_size(&rc.sweep, l)?;
            checkpoint::save(&rc.out, &rc.sweep, l, &s, &p)?;
            (s, p)
        };
        println!(
            "L={l} E={:.12} sweeps={} converged={} discarded={:.3e}",
            prep.energy,
            prep.dmrg.sweep_energies.len(),
            prep.dmrg.converged,
            prep.dmrg.total_discarded_weight + prep.product_discarded_weight
        );
        if !prep.dmrg.converged {
            unconverged.push(l);
        }
    }
    Ok(if unconverged.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Convergence(format!("DMRG did not converge for L in {unconverged:?}"))
    })
}

const JOURNAL: &str = "journal.jsonl";

fn config_digest(cfg: &SweepConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Finished points are appended to a journal, one JSON object per line,
/// headed by the digest of the configuration.
struct Journal {
    done: HashMap<(usize, u64), PointResult>,
    file: Mutex<File>,
    rc: RunConfig,
    /// Checkpoint problems abort the run instead of failing one size.
    fatal: Mutex<Option<anyhow::Error>>,
}

impl Journal {
    fn open(rc: &RunConfig) -> Result<std::result::Result<Self, Outcome>> {
        let path = rc.out.join(JOURNAL);
        let digest = config_digest(&rc.sweep);
        let mut done = HashMap::new();
        if rc.resume && path.exists() {
            let mut lines = BufReader::new(File::open(&path)?).lines();
            let head = lines.next().transpose()?.unwrap_or_default();
            if head.trim() != digest {
                return Ok(Err(Outcome::Config(format!(
                    "{} was written for a different configuration; rerun without --resume",
                    path.display()
                ))));
            }
            for line in lines {
                let line = line?;
                // a torn final line from an interrupted run is skipped
                if let Ok(p) = serde_json::from_str::<PointResult>(&line) {
                    done.insert((p.row.l, p.row.p_zz.to_bits()), p);
                }
            }
            let file = OpenOptions::new().append(true).open(&path)?;
            return Ok(Ok(Self { done, file: Mutex::new(file), rc: rc.clone(), fatal: Mutex::new(None) }));
        }
        let mut file = File::create(&path)?;
        writeln!(file, "{digest}")?;
        Ok(Ok(Self { done, file: Mutex::new(file), rc: rc.clone(), fatal: Mutex::new(None) }))
    }
}

impl SweepHooks for Journal {
    fn prepare(&self, _cfg: &SweepConfig, rungs: usize) -> mixed_ising::Result<(MpsState, Preparation)> {
        let found = match checkpoint::load(&self.rc.out, &self.rc.sweep, rungs) {
            Ok(found) => found,
            Err(e) => {
                let msg = format!("{e:#}");
                *self.fatal.lock().expect("fatal lock") = Some(e);
                return Err(mixed_ising::Error::Format(msg));
            }
        };
        if let Some(found) = found {
            return Ok(found);
        }
        let (state, prep) = prepare_size(&self.rc.sweep, rungs)?;
        if let Err(e) = checkpoint::save(&self.rc.out, &self.rc.sweep, rungs, &state, &prep) {
            eprintln!("warning: checkpoint for L={rungs} not written: {e:#}");
        }
        Ok((state, prep))
    }

    fn finished(&self, rungs: usize, p_zz: f64) -> Option<PointResult> {
        self.done.get(&(rungs, p_zz.to_bits())).cloned()
    }

    fn on_point(&self, point: &PointResult) {
        if !point.row.is_ok() {
            return;
        }
        let line = serde_json::to_string(point).expect("finite rows serialize");
        let mut f = self.file.lock().expect("journal lock");
        // best effort: a lost line only costs recomputation on resume
        let _ = writeln!(f, "{line}").and_then(|_| f.flush());
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> mixed_ising::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn sweep(rc: &RunConfig) -> Result<Outcome> {
    let journal = match Journal::open(rc)? {
        Ok(j) => j,
        Err(o) => return Ok(o),
    };
    let res = run_sweep_with(&rc.sweep, &journal)?;
    if let Some(e) = journal.fatal.lock().expect("fatal lock").take() {
        return Err(e);
    }
    write_file(&rc.out.join("rows.csv"), |w| write_rows_csv(w, &res.rows))?;
    write_file(&rc.out.join("profiles.csv"), |w| write_profiles_csv(w, &res.profiles))?;
    write_file(&rc.out.join("timing.csv"), |w| write_timing_csv(w, &res.rows))?;
    let failed = res.rows.iter().filter(|r| !r.is_ok()).count();
    println!("{} rows written to {} ({} not ok)", res.rows.len(), rc.out.display(), failed);
    for (l, why) in &res.failed_sizes {
        eprintln!("L={l}: preparation failed: {why}");
    }
    Ok(if res.any_unconverged() {
        Outcome::Convergence("some preparations failed or did not converge; see the status column".into())
    } else {
        Outcome::Ok
    })
}

fn fit(rc: &RunConfig, t: &Thresholds) -> Result<Outcome> {
    let rows_path = rc.out.join("rows.csv");
    let rows = read_rows_csv(File::open(&rows_path).with_context(|| format!("opening {}", rows_path.display()))?)?;
    let profiles = read_profiles_csv(File::open(rc.out.join("profiles.csv"))?)?;
    let report = fit_results(rc.sweep.j_over_h, &rows, &profiles, t);
    write_file(&rc.out.join("fits.json"), |w| report.write_json(w))?;
    for p in &report.peaks {
        println!("L={} p_peak={:.5}", p.l, p.fit.p_peak);
    }
    if let Some(e) = &report.extrapolation {
        println!("p_c={:.5} a={:.5} residual={:.2e}", e.p_c, e.a, e.residual);
    }
    Ok(if report.errors.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Fit(report.errors.join("; "))
    })
}

fn validate(rc: &RunConfig, tolerance: f64) -> Result<Outcome> {
    let v = match run_validation(&rc.sweep, tolerance) {
        Ok(v) => v,
        Err(mixed_ising::Error::Input(m)) => return Ok(Outcome::Config(m)),
        Err(e) => return Err(e.into()),
    };
    write_file(&rc.out.join("golden_ed.csv"), |w| write_golden_csv(w, &v.ed))?;
    write_file(&rc.out.join("golden_mps.csv"), |w| write_golden_csv(w, &v.mps))?;
    fs::write(rc.out.join("validation.json"), serde_json::to_vec_pretty(&v.report)?)?;
    let mut names: Vec<&str> = v.report.comparisons.iter().map(|c| c.observable.as_str()).collect();
    names.dedup();
    names.sort_unstable();
    names.dedup();
    for n in names {
        println!("{n:>20}  max |ED − MPS| = {:.3e}", v.report.max_abs_diff_of(n));
    }
    Ok(if v.report.passed() { Outcome::Ok } else { Outcome::Mismatch })
}
