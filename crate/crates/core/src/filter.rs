//! Decoherence as local filtering of the doubled state.
//!
//! The X channel on every site and the ZZ channel on every bond become
//! `C · ∏_j e^{τ_zz Z_uZ_ℓZ_uZ_ℓ} ∏_j e^{τ_x X_uX_ℓ} |ρ₀⟩⟩`. The scalar `C`
//! is kept analytically in [`ChannelSpec::log_prefactor`] and never enters
//! the tensors.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{build_x_rung_gate, build_zz_plaquette_mpo, map_px, ChannelSpec, Tau};
use crate::mps::{MpsState, TruncationPolicy};

/// Which channels act.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// ZZ and X channels with `p_x = map_px(p_zz, J)`.
    #[default]
    Full,
    /// ZZ channel only (`p_x = 0`).
    ZzOnly,
}

#[derive(Clone, Debug)]
pub struct FilteredState {
    pub state: MpsState,
    pub channel: ChannelSpec,
    /// Relative discarded weight of the X layer and the ZZ layer.
    pub layer_discarded_weights: Vec<f64>,
    /// `ln C`, applied only in bookkeeping.
    pub log_prefactor_applied: f64,
}

impl FilteredState {
    /// Wraps an unfiltered state of `rungs` rungs.
    pub fn unfiltered(state: MpsState) -> Self {
        let rungs = state.n_sites() / 2;
        let channel = ChannelSpec::new(0.0, 0.0, rungs).expect("zero strengths are valid");
        Self { state, channel, layer_discarded_weights: Vec::new(), log_prefactor_applied: 0.0 }
    }

    pub fn rungs(&self) -> usize {
        self.state.n_sites() / 2
    }

    /// `ln ‖ρ_D‖` of the true (prefactor-included) Choi vector.
    pub fn log_norm_total(&self) -> f64 {
        0.5 * self.state.log_norm_squared() + self.log_prefactor_applied
    }

    pub fn total_discarded_weight(&self) -> f64 {
        self.layer_discarded_weights.iter().sum()
    }
}

/// `cosh τ + sinh τ X_uX_ℓ` on every rung, left to right.
pub fn apply_x_layer(s: &MpsState, tau: Tau, trunc: &TruncationPolicy) -> Result<(MpsState, f64)> {
    let mut out = s.clone();
    if tau.is_identity() {
        return Ok((out, 0.0));
    }
    let gate = build_x_rung_gate(tau);
    let mut discarded = 0.0;
    for j in 0..out.n_sites() / 2 {
        discarded += out.apply_two_site_gate(2 * j, &gate, trunc)?;
    }
    Ok((out, discarded))
}

/// `cosh τ + sinh τ Z_uZ_ℓZ_uZ_ℓ` on every plaquette including the wrap.
pub fn apply_zz_layer(s: &MpsState, tau: Tau, trunc: &TruncationPolicy) -> Result<(MpsState, f64)> {
    let mut out = s.clone();
    if tau.is_identity() {
        return Ok((out, 0.0));
    }
    let rungs = out.n_sites() / 2;
    let mut discarded = 0.0;
    for j in 0..rungs {
        discarded += out.apply_mpo(&build_zz_plaquette_mpo(tau, j, rungs)?, trunc)?;
    }
    Ok((out, discarded))
}

/// Applies both channels, X layer first.
pub fn filter_channels(s: &MpsState, p_zz: f64, p_x: f64, trunc: &TruncationPolicy) -> Result<FilteredState> {
    let channel = ChannelSpec::new(p_zz, p_x, s.n_sites() / 2)?;
    let (after_x, dx) = apply_x_layer(s, channel.tau_x, trunc)?;
    let (state, dzz) = apply_zz_layer(&after_x, channel.tau_zz, trunc)?;
    Ok(FilteredState {
        state,
        channel,
        layer_discarded_weights: vec![dx, dzz],
        log_prefactor_applied: channel.log_prefactor,
    })
}

/// Filters on the sweep line `p_x = map_px(p_zz, J)`.
pub fn filter(s: &MpsState, p_zz: f64, j: f64, trunc: &TruncationPolicy) -> Result<FilteredState> {
    filter_channels(s, p_zz, map_px(p_zz, j)?, trunc)
}

pub fn filter_mode(s: &MpsState, p_zz: f64, j: f64, mode: FilterMode, trunc: &TruncationPolicy) -> Result<FilteredState> {
    match mode {
        FilterMode::Full => filter(s, p_zz, j, trunc),
        FilterMode::ZzOnly => filter_channels(s, p_zz, 0.0, trunc),
    }
}
