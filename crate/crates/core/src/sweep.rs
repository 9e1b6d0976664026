//! Parameter sweeps: one preparation per size, then filter and measure at
//! every grid point, plus the file formats for rows, profiles and fits.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_regime, extrapolate_pc, find_peak, Extrapolation, PeakFit, Regime, Thresholds};
use crate::dmrg::{prepare_initial_choi_state, DmrgConfig, PrepRoute, Preparation};
use crate::error::{Error, Result};
use crate::filter::{filter_mode, FilterMode, FilteredState};
use crate::model::{map_px, ModelParams};
use crate::mps::{MpsState, TruncationPolicy};
use crate::observables::{
    entropy_half_cut, entropy_profile, fit_ceff, purity_log, susceptibility, CeffFit, CorrelatorKind,
};

pub const ROWS_SCHEMA_VERSION: u32 = 1;
pub const FITS_SCHEMA_VERSION: u32 = 1;
const ROWS_HEADER_TAG: &str = "# mixed-ising rows v";

/// `{0, 0.025, …, 0.5}`.
pub fn default_pzz_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 40.0).collect()
}

/// `{12, 16, 20, 24, 28}`, plus 32 at the self-dual point.
pub fn default_sizes(j_over_h: f64) -> Vec<usize> {
    let mut s = vec![12, 16, 20, 24, 28];
    if j_over_h == 1.0 {
        s.push(32);
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub j_over_h: f64,
    pub h: f64,
    pub sizes: Vec<usize>,
    pub pzz_grid: Vec<f64>,
    pub mode: FilterMode,
    pub dmrg: DmrgConfig,
    /// Truncation during filtering.
    pub trunc: TruncationPolicy,
    /// Project the ordered side onto the `∏X = +1` cat state.
    pub cat: bool,
    pub route: PrepRoute,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            j_over_h: 1.0,
            h: 1.0,
            sizes: default_sizes(1.0),
            pzz_grid: default_pzz_grid(),
            mode: FilterMode::Full,
            dmrg: DmrgConfig::default(),
            trunc: TruncationPolicy::default(),
            cat: true,
            route: PrepRoute::ChainProduct,
        }
    }
}

impl SweepConfig {
    pub fn j(&self) -> f64 {
        self.j_over_h * self.h
    }

    pub fn model(&self, rungs: usize) -> Result<ModelParams> {
        ModelParams::new(self.j(), self.h, rungs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_over_h > 0.0 && self.j_over_h.is_finite()) {
            return Err(Error::Input(format!("j_over_h must be positive, got {}", self.j_over_h)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Input(format!("h must be positive, got {}", self.h)));
        }
        if self.sizes.is_empty() {
            return Err(Error::Input("no system sizes given".into()));
        }
        for &l in &self.sizes {
            if l < 4 || l % 2 != 0 {
                return Err(Error::Input(format!("sizes must be even and at least 4, got {l}")));
            }
        }
        if self.pzz_grid.is_empty() {
            return Err(Error::Input("empty p_zz grid".into()));
        }
        if self.pzz_grid.iter().any(|p| !(0.0..=0.5).contains(p)) {
            return Err(Error::Input("p_zz grid must lie in [0, 0.5]".into()));
        }
        if self.pzz_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("p_zz grid must be strictly increasing".into()));
        }
        self.dmrg.validate()?;
        self.trunc.validate()
    }

    pub fn p_x(&self, p_zz: f64) -> Result<f64> {
        match self.mode {
            FilterMode::Full => map_px(p_zz, self.j()),
            FilterMode::ZzOnly => Ok(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    pub p_zz: f64,
    pub p_x: f64,
    pub chi_ii: f64,
    pub chi_st: f64,
    pub chi_u: f64,
    pub s_a: f64,
    pub purity_log: f64,
    pub max_bond_used: usize,
    pub total_discarded_weight: f64,
    pub dmrg_converged: bool,
    /// `ok`, or the error that stopped this point.
    pub status: String,
    /// Seconds spent on this point. Not written to the rows file so that
    /// reruns stay byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(l: usize, cfg: &SweepConfig, p_zz: f64, p_x: f64, converged: bool, err: &Error) -> Self {
        Self {
            l,
            j: cfg.j(),
            h: cfg.h,
            p_zz,
            p_x,
            chi_ii: f64::NAN,
            chi_st: f64::NAN,
            chi_u: f64::NAN,
            s_a: f64::NAN,
            purity_log: f64::NAN,
            max_bond_used: 0,
            total_discarded_weight: f64::NAN,
            dmrg_converged: converged,
            status: format!("error: {err}"),
            wall_time: 0.0,
        }
    }
}

/// Entropy profile of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub p_zz: f64,
    pub x: usize,
    pub entropy: f64,
}

/// Everything measured at one grid point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointResult {
    pub row: SweepRow,
    pub profile: Vec<ProfileRow>,
}

/// Filters the prepared state at `p_zz` and measures every observable.
pub fn measure_point(s: &MpsState, prep: &Preparation, cfg: &SweepConfig, p_zz: f64) -> PointResult {
    let l = s.n_sites() / 2;
    let start = Instant::now();
    let p_x = cfg.p_x(p_zz).unwrap_or(f64::NAN);
    let converged = prep.dmrg.converged;
    let attempt = || -> Result<PointResult> {
        let f = filter_mode(s, p_zz, cfg.j(), cfg.mode, &cfg.trunc)?;
        let row = row_from_filtered(&f, prep, cfg)?;
        let profile = entropy_profile(&f)?
            .points
            .into_iter()
            .map(|(x, entropy)| ProfileRow { l, p_zz, x, entropy })
            .collect();
        Ok(PointResult { row, profile })
    };
    let mut out = attempt().unwrap_or_else(|e| PointResult {
        row: SweepRow::failed(l, cfg, p_zz, p_x, converged, &e),
        profile: Vec::new(),
    });
    if out.row.is_ok() && !converged {
        out.row.status = "dmrg_not_converged".into();
    }
    out.row.wall_time = start.elapsed().as_secs_f64();
    out
}

fn row_from_filtered(f: &FilteredState, prep: &Preparation, cfg: &SweepConfig) -> Result<SweepRow> {
    Ok(SweepRow {
        l: f.rungs(),
        j: cfg.j(),
        h: cfg.h,
        p_zz: f.channel.p_zz,
        p_x: f.channel.p_x,
        chi_ii: susceptibility(f, CorrelatorKind::Renyi2Zz)?,
        chi_st: susceptibility(f, CorrelatorKind::StrangeZ)?,
        chi_u: susceptibility(f, CorrelatorKind::UpperZz)?,
        s_a: entropy_half_cut(f)?,
        purity_log: purity_log(f),
        max_bond_used: f.state.max_bond(),
        total_discarded_weight: f.total_discarded_weight()
            + prep.product_discarded_weight
            + prep.dmrg.total_discarded_weight,
        dmrg_converged: prep.dmrg.converged,
        status: "ok".into(),
        wall_time: 0.0,
    })
}

/// Preparation step of one size.
pub fn prepare_size(cfg: &SweepConfig, rungs: usize) -> Result<(MpsState, Preparation)> {
    prepare_initial_choi_state(&cfg.model(rungs)?, &cfg.dmrg, cfg.route, cfg.cat)
}

#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    /// Sorted by `(L, p_zz)`.
    pub rows: Vec<SweepRow>,
    pub profiles: Vec<ProfileRow>,
    /// Sizes whose preparation failed, with the reason.
    pub failed_sizes: Vec<(usize, String)>,
}

impl SweepResult {
    pub fn any_unconverged(&self) -> bool {
        !self.failed_sizes.is_empty() || self.rows.iter().any(|r| !r.dmrg_converged)
    }
}

/// Hooks for checkpointing and resuming.
pub trait SweepHooks: Sync {
    /// Supplies the prepared state of a size; the default runs DMRG.
    fn prepare(&self, cfg: &SweepConfig, rungs: usize) -> Result<(MpsState, Preparation)> {
        prepare_size(cfg, rungs)
    }
    /// A point already measured in an earlier run.
    fn finished(&self, _rungs: usize, _p_zz: f64) -> Option<PointResult> {
        None
    }
    /// Called as soon as a point is measured.
    fn on_point(&self, _point: &PointResult) {}
}

struct NoHooks;
impl SweepHooks for NoHooks {}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(cfg, &NoHooks)
}

/// Sizes run concurrently, and so do the grid points of one size. Every
/// point filters the shared prepared state afresh.
pub fn run_sweep_with(cfg: &SweepConfig, hooks: &dyn SweepHooks) -> Result<SweepResult> {
    cfg.validate()?;
    let per_size: Vec<std::result::Result<Vec<PointResult>, (usize, String)>> = cfg
        .sizes
        .par_iter()
        .map(|&l| {
            let pending: Vec<f64> = cfg.pzz_grid.iter().copied().filter(|&p| hooks.finished(l, p).is_none()).collect();
            let mut done: Vec<PointResult> = cfg.pzz_grid.iter().filter_map(|&p| hooks.finished(l, p)).collect();
            if pending.is_empty() {
                return Ok(done);
            }
            let (state, prep) = hooks.prepare(cfg, l).map_err(|e| (l, e.to_string()))?;
            let fresh: Vec<PointResult> = pending
                .par_iter()
                .map(|&p| {
                    let r = measure_point(&state, &prep, cfg, p);
                    hooks.on_point(&r);
                    r
                })
                .collect();
            done.extend(fresh);
            Ok(done)
        })
        .collect();
    let mut out = SweepResult::default();
    for r in per_size {
        match r {
            Ok(points) => {
                for p in points {
                    out.rows.push(p.row);
                    out.profiles.extend(p.profile);
                }
            }
            Err(e) => out.failed_sizes.push(e),
        }
    }
    out.rows.sort_by(|a, b| (a.l, a.p_zz).partial_cmp(&(b.l, b.p_zz)).expect("finite grid"));
    out.profiles.sort_by(|a, b| (a.l, a.p_zz, a.x).partial_cmp(&(b.l, b.p_zz, b.x)).expect("finite grid"));
    Ok(out)
}

pub fn write_rows_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{ROWS_HEADER_TAG}{ROWS_SCHEMA_VERSION}")?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    let version: u32 = first
        .strip_prefix(ROWS_HEADER_TAG)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Format("missing rows schema header".into()))?;
    if version != ROWS_SCHEMA_VERSION {
        return Err(Error::Format(format!("rows schema v{version} is not supported")));
    }
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(e.to_string()))
}

/// Wall times live in their own file so that the rows stay reproducible.
pub fn write_timing_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["L", "p_zz", "wall_time"]).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        csv.write_record([r.l.to_string(), r.p_zz.to_string(), format!("{:.3}", r.wall_time)])
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_profiles_csv<W: Write>(w: W, rows: &[ProfileRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_profiles_csv<R: Read>(r: R) -> Result<Vec<ProfileRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizePeak {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(flatten)]
    pub fit: PeakFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeffRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub p_zz: f64,
    #[serde(flatten)]
    pub fit: CeffFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub p_zz: f64,
    pub regime: Regime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub j_over_h: f64,
    pub thresholds: Thresholds,
    pub regimes: Vec<RegimeRow>,
    pub peaks: Vec<SizePeak>,
    pub extrapolation: Option<Extrapolation>,
    pub ceff: Vec<CeffRow>,
    /// Fit steps that failed, one message each.
    pub errors: Vec<String>,
}

impl FitReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let v: Self = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
        if v.schema_version != FITS_SCHEMA_VERSION {
            return Err(Error::Format(format!("fits schema v{} is not supported", v.schema_version)));
        }
        Ok(v)
    }
}

/// Regime labels, peaks of `S_A(p_zz)` per size, the `1/L` extrapolation
/// and the central-charge fit of every profile. Failures are collected,
/// not raised.
pub fn fit_results(j_over_h: f64, rows: &[SweepRow], profiles: &[ProfileRow], thresholds: &Thresholds) -> FitReport {
    let mut errors = Vec::new();
    let regimes = rows
        .iter()
        .filter(|r| r.chi_ii.is_finite())
        .map(|r| RegimeRow { l: r.l, p_zz: r.p_zz, regime: classify_regime(r.chi_ii, r.chi_st, r.chi_u, thresholds) })
        .collect();
    let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok() || r.status == "dmrg_not_converged") {
        curves.entry(r.l).or_default().push((r.p_zz, r.s_a));
    }
    let mut peaks = Vec::new();
    for (l, mut curve) in curves {
        curve.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        match find_peak(&curve) {
            Ok(fit) => peaks.push(SizePeak { l, fit }),
            Err(e) => errors.push(format!("L={l}: {e}")),
        }
    }
    let extrapolation = if peaks.is_empty() {
        None
    } else {
        match extrapolate_pc(&peaks.iter().map(|p| (p.l, p.fit.p_peak)).collect::<Vec<_>>()) {
            Ok(e) => Some(e),
            Err(e) => {
                errors.push(format!("extrapolation: {e}"));
                None
            }
        }
    };
    let mut by_point: BTreeMap<(usize, u64), Vec<(usize, f64)>> = BTreeMap::new();
    for p in profiles {
        by_point.entry((p.l, p.p_zz.to_bits())).or_default().push((p.x, p.entropy));
    }
    let mut ceff = Vec::new();
    for ((l, bits), points) in by_point {
        let p_zz = f64::from_bits(bits);
        let prof = crate::observables::EntropyProfile { rungs: l, points };
        match fit_ceff(&prof) {
            Ok(fit) => ceff.push(CeffRow { l, p_zz, fit }),
            Err(e) => errors.push(format!("c_eff at L={l}, p_zz={p_zz}: {e}")),
        }
    }
    ceff.sort_by(|a, b| (a.l, a.p_zz).partial_cmp(&(b.l, b.p_zz)).expect("finite"));
    FitReport { schema_version: FITS_SCHEMA_VERSION, j_over_h, thresholds: *thresholds, regimes, peaks, extrapolation, ceff, errors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(j_over_h: f64) -> SweepConfig {
        SweepConfig {
            j_over_h,
            sizes: vec![4, 6],
            pzz_grid: vec![0.0, 0.2, 0.5],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn validation() {
        assert!(small(1.0).validate().is_ok());
        for bad in [
            SweepConfig { pzz_grid: vec![0.1, 0.1], ..small(1.0) },
            SweepConfig { pzz_grid: vec![0.6], ..small(1.0) },
            SweepConfig { sizes: vec![5], ..small(1.0) },
            SweepConfig { j_over_h: 0.0, ..small(1.0) },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Input(_))));
        }
    }

    #[test]
    fn rows_follow_the_sweep_line() {
        let res = run_sweep(&small(1.2)).unwrap();
        assert_eq!(res.rows.len(), 6);
        for r in &res.rows {
            assert!(r.is_ok(), "{}", r.status);
            assert!((r.p_x - map_px(r.p_zz, 1.2).unwrap()).abs() < 1e-12);
        }
        assert_eq!(res.profiles.len(), 3 * (3 + 5));
    }

    #[test]
    fn rows_round_trip() {
        let res = run_sweep(&small(0.8)).unwrap();
        let mut buf = Vec::new();
        write_rows_csv(&mut buf, &res.rows).unwrap();
        let back = read_rows_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), res.rows.len());
        for (a, b) in back.iter().zip(&res.rows) {
            assert_eq!(a.chi_ii.to_bits(), b.chi_ii.to_bits());
            assert_eq!(a.status, b.status);
        }
        assert!(read_rows_csv(&b"L,J\n1,2\n"[..]).is_err());
    }

    #[test]
    fn zz_only_has_no_x() {
        let cfg = SweepConfig { mode: FilterMode::ZzOnly, ..small(1.0) };
        assert!(run_sweep(&cfg).unwrap().rows.iter().all(|r| r.p_x == 0.0));
    }
}
