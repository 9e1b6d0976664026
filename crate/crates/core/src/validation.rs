//! Side-by-side comparison of the MPS pipeline with exact diagonalization
//! on small ladders.

use serde::{Deserialize, Serialize};

use crate::ed::{golden_sweep, GoldenRow, MAX_DENSE_RUNGS};
use crate::error::{Error, Result};
use crate::filter::{filter_channels, FilteredState};
use crate::observables::{
    entropy_half_cut, entropy_plaquette, purity_log, renyi2_nn_mean, susceptibility, CorrelatorKind,
};
use crate::sweep::{prepare_size, SweepConfig};

/// Default agreement required between the two pipelines.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// MPS counterpart of the golden rows, same observable names.
pub fn mps_rows(f: &FilteredState, j: f64, h: f64) -> Result<Vec<GoldenRow>> {
    let named = [
        ("chi_ii", susceptibility(f, CorrelatorKind::Renyi2Zz)?),
        ("chi_st", susceptibility(f, CorrelatorKind::StrangeZ)?),
        ("chi_u", susceptibility(f, CorrelatorKind::UpperZz)?),
        ("renyi2_nn_mean", renyi2_nn_mean(f)?),
        ("entropy_half_cut", entropy_half_cut(f)?),
        ("entropy_plaquette", entropy_plaquette(f)?),
        ("purity", purity_log(f).exp()),
    ];
    let (p_zz, p_x) = (f.channel.p_zz, f.channel.p_x);
    Ok(named
        .into_iter()
        .map(|(name, value)| GoldenRow { l: f.rungs(), j, h, p_zz, p_x, observable: name.into(), value })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    #[serde(rename = "L")]
    pub l: usize,
    pub p_zz: f64,
    pub observable: String,
    pub ed: f64,
    pub mps: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub comparisons: Vec<Comparison>,
}

impl ValidationReport {
    pub fn max_abs_diff(&self) -> f64 {
        self.comparisons.iter().map(|c| c.abs_diff).fold(0.0, f64::max)
    }

    /// Largest deviation of one observable.
    pub fn max_abs_diff_of(&self, observable: &str) -> f64 {
        self.comparisons
            .iter()
            .filter(|c| c.observable == observable)
            .map(|c| c.abs_diff)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.abs_diff <= self.tolerance)
    }
}

/// Pairs rows on `(L, p_zz, observable)`. A golden row without a partner is
/// an error.
pub fn compare(ed: &[GoldenRow], mps: &[GoldenRow], tolerance: f64) -> Result<ValidationReport> {
    let comparisons = ed
        .iter()
        .map(|e| {
            let m = mps
                .iter()
                .find(|m| m.l == e.l && m.p_zz == e.p_zz && m.observable == e.observable)
                .ok_or_else(|| {
                    Error::Input(format!("no MPS value for {} at L={}, p_zz={}", e.observable, e.l, e.p_zz))
                })?;
            Ok(Comparison {
                l: e.l,
                p_zz: e.p_zz,
                observable: e.observable.clone(),
                ed: e.value,
                mps: m.value,
                abs_diff: (e.value - m.value).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport { tolerance, comparisons })
}

pub struct Validation {
    pub ed: Vec<GoldenRow>,
    pub mps: Vec<GoldenRow>,
    pub report: ValidationReport,
}

/// Runs both pipelines over every size and grid point of `cfg`.
pub fn run_validation(cfg: &SweepConfig, tolerance: f64) -> Result<Validation> {
    cfg.validate()?;
    if let Some(&l) = cfg.sizes.iter().find(|&&l| l > MAX_DENSE_RUNGS) {
        return Err(Error::Input(format!("validation is limited to {MAX_DENSE_RUNGS} rungs, got {l}")));
    }
    let (mut ed, mut mps) = (Vec::new(), Vec::new());
    for &l in &cfg.sizes {
        let m = cfg.model(l)?;
        let points = cfg.pzz_grid.iter().map(|&p| Ok((p, cfg.p_x(p)?))).collect::<Result<Vec<_>>>()?;
        ed.extend(golden_sweep(&m, &points)?);
        let (state, _) = prepare_size(cfg, l)?;
        for &(p_zz, p_x) in &points {
            mps.extend(mps_rows(&filter_channels(&state, p_zz, p_x, &cfg.trunc)?, m.j, m.h)?);
        }
    }
    let report = compare(&ed, &mps, tolerance)?;
    Ok(Validation { ed, mps, report })
}
