//! Correlators, susceptibilities, entropies and purity of filtered states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilteredState;
use crate::mps::{inner, matrix_element, MpsState, Overlap};
use crate::pauli::{Op, Z};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorKind {
    /// `⟨⟨ρ|Z_iZ_j ⊗ Z_iZ_j|ρ⟩⟩ / ⟨⟨ρ|ρ⟩⟩ = Tr[Z_iZ_j ρ Z_iZ_j ρ] / Tr ρ²`.
    Renyi2Zz,
    /// `⟨⟨1|Z_{i,u}Z_{j,u}|ρ⟩⟩ / ⟨⟨1|ρ⟩⟩ = Tr[ρ Z_iZ_j] / Tr ρ`.
    StrangeZ,
    /// `⟨⟨ρ|Z_{i,u}Z_{j,u}|ρ⟩⟩ / ⟨⟨ρ|ρ⟩⟩`.
    UpperZz,
}

impl CorrelatorKind {
    pub const ALL: [CorrelatorKind; 3] = [CorrelatorKind::Renyi2Zz, CorrelatorKind::StrangeZ, CorrelatorKind::UpperZz];
}

/// The vectorized identity `|1⟩⟩`: rung vectors `(1, 0, 0, 1)` with the
/// overall scale `2^{−3L/2}`, so that `⟨⟨1|ρ⟩⟩ = Tr ρ / 2^{3L/2}`.
pub fn identity_state(rungs: usize) -> MpsState {
    let mut s = MpsState::from_rung_product(&vec![[1.0, 0.0, 0.0, 1.0]; rungs]).expect("nonzero rungs");
    s.set_log_norm(s.log_norm() - 1.5 * rungs as f64 * std::f64::consts::LN_2);
    s
}

/// `⟨⟨1|ρ_D⟩⟩` including the analytic prefactor.
pub fn trace_overlap(f: &FilteredState) -> Overlap {
    let mut o = inner(&identity_state(f.rungs()), &f.state);
    if o.sign != 0 {
        o.log_magnitude += f.log_prefactor_applied;
    }
    o
}

fn rung_ops(kind: CorrelatorKind, rung: usize) -> Vec<(usize, Op)> {
    match kind {
        CorrelatorKind::Renyi2Zz => vec![(2 * rung, Z), (2 * rung + 1, Z)],
        CorrelatorKind::StrangeZ | CorrelatorKind::UpperZz => vec![(2 * rung, Z)],
    }
}

fn check_rung(f: &FilteredState, r: usize) -> Result<()> {
    if r >= f.rungs() {
        return Err(Error::Input(format!("rung {r} out of range for {} rungs", f.rungs())));
    }
    Ok(())
}

pub fn correlator(f: &FilteredState, kind: CorrelatorKind, i: usize, j: usize) -> Result<f64> {
    check_rung(f, i)?;
    check_rung(f, j)?;
    if i == j {
        return Ok(1.0);
    }
    let mut ops = rung_ops(kind, i);
    ops.extend(rung_ops(kind, j));
    Ok(match kind {
        CorrelatorKind::StrangeZ => {
            let one = identity_state(f.rungs());
            matrix_element(&one, &ops, &f.state).ratio(&inner(&one, &f.state))
        }
        _ => f.state.expectation(&ops),
    })
}

/// `C(0, r)` for `r = 1..=L/2`.
pub fn correlator_row(f: &FilteredState, kind: CorrelatorKind) -> Result<Vec<f64>> {
    let l = f.rungs();
    let rs: Vec<usize> = (1..=l / 2).collect();
    match kind {
        CorrelatorKind::StrangeZ => {
            let one = identity_state(l);
            let den = inner(&one, &f.state);
            Ok(rs
                .iter()
                .map(|&r| matrix_element(&one, &[(0, Z), (2 * r, Z)], &f.state).ratio(&den))
                .collect())
        }
        _ => {
            let probes: Vec<_> = rs.iter().map(|&r| rung_ops(kind, r)).collect();
            f.state.windowed_expectations(&rung_ops(kind, 0), &probes)
        }
    }
}

/// `χ = (2/L) Σ_{r=1}^{L/2} C(0, r)`.
pub fn susceptibility(f: &FilteredState, kind: CorrelatorKind) -> Result<f64> {
    let l = f.rungs();
    if l % 2 != 0 {
        return Err(Error::Input("susceptibilities need an even number of rungs".into()));
    }
    Ok(correlator_row(f, kind)?.iter().sum::<f64>() * 2.0 / l as f64)
}

/// Mean of the nearest-neighbour Rényi-2 correlator over all `L` bonds,
/// the wrap bond included.
pub fn renyi2_nn_mean(f: &FilteredState) -> Result<f64> {
    let l = f.rungs();
    let mut total = 0.0;
    for j in 0..l {
        let (a, b) = (j, (j + 1) % l);
        total += correlator(f, CorrelatorKind::Renyi2Zz, a.min(b), a.max(b))?;
    }
    Ok(total / l as f64)
}

/// Entropy of `L + 1` ladder sites: rungs `0..L/2` plus the upper site of rung `L/2`.
pub fn entropy_half_cut(f: &FilteredState) -> Result<f64> {
    let l = f.rungs();
    if l % 2 != 0 {
        return Err(Error::Input("the half-system cut needs an even number of rungs".into()));
    }
    f.state.prefix_entropy(l + 1)
}

/// Entropy of the two-rung block `{(0,u), (0,ℓ), (1,u), (1,ℓ)}`.
pub fn entropy_plaquette(f: &FilteredState) -> Result<f64> {
    f.state.prefix_entropy(4)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub rungs: usize,
    /// `(x, S)` with `x` the number of whole rungs in the subsystem.
    pub points: Vec<(usize, f64)>,
}

pub fn entropy_profile(f: &FilteredState) -> Result<EntropyProfile> {
    let l = f.rungs();
    let cuts: Vec<usize> = (1..l).map(|x| 2 * x).collect();
    let s = f.state.prefix_entropies(&cuts)?;
    Ok(EntropyProfile { rungs: l, points: (1..l).zip(s).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeffFit {
    pub c_eff: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

/// `S = (c/3) ln(2L sin(πx/L)) + B` over `2 ≤ x ≤ L−2`.
pub fn fit_ceff(p: &EntropyProfile) -> Result<CeffFit> {
    fit_ceff_window(p, 2, p.rungs.saturating_sub(2))
}

/// Same fit restricted to `x_min ≤ x ≤ x_max`.
pub fn fit_ceff_window(p: &EntropyProfile, x_min: usize, x_max: usize) -> Result<CeffFit> {
    let l = p.rungs as f64;
    let pts: Vec<(f64, f64)> = p
        .points
        .iter()
        .filter(|(x, _)| (x_min..=x_max).contains(x))
        .map(|&(x, s)| ((2.0 * l * (std::f64::consts::PI * x as f64 / l).sin()).ln() / 3.0, s))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Fit(format!("c_eff fit needs at least 4 points, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-14 * n {
        return Err(Error::Fit("degenerate design: all abscissae coincide".into()));
    }
    let c = sxy / sxx;
    let b = my - c * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - c * p.0 - b).powi(2)).sum();
    Ok(CeffFit { c_eff: c, intercept: b, rms_residual: (rss / n).sqrt(), points: pts.len() })
}

/// `ln Tr ρ_D²`. Exact at saturation too, since the saturated gates carry
/// the full channel with unit scalar.
pub fn purity_log(f: &FilteredState) -> f64 {
    f.state.log_norm_squared() + 2.0 * f.log_prefactor_applied
}
