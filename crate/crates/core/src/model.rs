//! Hamiltonians, filtering gates and projectors on the doubled ladder.
//!
//! A density matrix `ρ` of an `L`-site chain is stored as a vector on a
//! two-leg ladder: leg `u` carries the ket index and leg `ℓ` the bra index,
//! `⟨a|_u ⟨b|_ℓ |ρ⟩⟩ = ρ_ab`. A Pauli channel `ρ → (1−p)ρ + p KρK` becomes
//! the operator `(1−p) + p K_u K_ℓ = √(1−2p) · exp(τ K_u K_ℓ)` with
//! `tanh τ = p/(1−p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mps::{Mpo, OpTerm, SiteOrdering};
use crate::pauli::{self, X, Z};
use crate::tensor::Tensor;

/// Periodic (by default) transverse-field Ising chain `H = −Σ (J Z_j Z_{j+1} + h X_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j: f64,
    pub h: f64,
    /// Number of rungs of the ladder, equal to the chain length.
    pub rungs: usize,
    pub periodic: bool,
}

impl ModelParams {
    pub fn new(j: f64, h: f64, rungs: usize) -> Result<Self> {
        let p = Self { j, h, rungs, periodic: true };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.j.is_finite() {
            return Err(Error::Input("J must be finite".into()));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Input(format!("h must be positive, got {}", self.h)));
        }
        if self.rungs < 2 {
            return Err(Error::Input(format!("need at least 2 rungs, got {}", self.rungs)));
        }
        Ok(())
    }

    pub fn j_over_h(&self) -> f64 {
        self.j / self.h
    }

    pub fn ordering(&self) -> SiteOrdering {
        SiteOrdering::new(self.rungs)
    }

    /// Nearest-neighbour bonds `(j, j+1)`, including the wrap bond when periodic.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = if self.periodic { self.rungs } else { self.rungs - 1 };
        (0..n).map(|j| (j, (j + 1) % self.rungs)).collect()
    }
}

/// Gate angle of one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Tau {
    Finite(f64),
    /// `p = 1/2`: the gate degenerates to the projector `(1 + K_u K_ℓ)/2`.
    Saturated,
}

impl Tau {
    /// Coefficients `(a, b)` of the gate `a · 1 + b · K_u K_ℓ`.
    pub fn coefficients(&self) -> (f64, f64) {
        match *self {
            Tau::Finite(t) => (t.cosh(), t.sinh()),
            Tau::Saturated => (0.5, 0.5),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Tau::Finite(t) if *t == 0.0)
    }

    pub fn value(&self) -> f64 {
        match *self {
            Tau::Finite(t) => t,
            Tau::Saturated => f64::INFINITY,
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::Input(format!("decoherence probability must lie in [0, 1/2], got {p}")));
    }
    Ok(())
}

/// `τ = atanh(p / (1 − p)) = −½ ln(1 − 2p)`.
pub fn tau_of_p(p: f64) -> Result<Tau> {
    check_probability(p)?;
    if p == 0.5 {
        return Ok(Tau::Saturated);
    }
    Ok(Tau::Finite(-0.5 * (-2.0 * p).ln_1p()))
}

/// X-channel strength that keeps `τ_zz / J = τ_x` along a sweep.
pub fn map_px(p_zz: f64, j: f64) -> Result<f64> {
    check_probability(p_zz)?;
    if !(j > 0.0) {
        return Err(Error::Input(format!("map_px needs J > 0, got {j}")));
    }
    if j == 1.0 {
        return Ok(p_zz);
    }
    Ok(0.5 - 0.5 * (1.0 - 2.0 * p_zz).powf(1.0 / j))
}

/// Channel strengths, gate angles and the scalar `ln C` that makes the
/// filtered vector exactly the vectorized channel output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub p_zz: f64,
    pub p_x: f64,
    pub tau_zz: Tau,
    pub tau_x: Tau,
    /// `(L/2) [ln(1−2p_zz) + ln(1−2p_x)]`, counting only non-saturated
    /// channels. When a channel is saturated the true prefactor is zero and
    /// only normalized quantities are meaningful.
    pub log_prefactor: f64,
    pub saturated: bool,
}

impl ChannelSpec {
    pub fn new(p_zz: f64, p_x: f64, rungs: usize) -> Result<Self> {
        let tau_zz = tau_of_p(p_zz)?;
        let tau_x = tau_of_p(p_x)?;
        let half = rungs as f64 / 2.0;
        let log_term = |p: f64| if p == 0.5 { 0.0 } else { half * (-2.0 * p).ln_1p() };
        Ok(Self {
            p_zz,
            p_x,
            tau_zz,
            tau_x,
            log_prefactor: log_term(p_zz) + log_term(p_x),
            saturated: p_zz == 0.5 || p_x == 0.5,
        })
    }

    /// Channel pair on the sweep line `p_x = map_px(p_zz, J)`.
    pub fn on_sweep_line(p_zz: f64, j: f64, rungs: usize) -> Result<Self> {
        Self::new(p_zz, map_px(p_zz, j)?, rungs)
    }
}

/// Quantum Ashkin-Teller couplings on top of the doubled chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QatParams {
    pub j: f64,
    pub h: f64,
    pub lambda_zz: f64,
    pub lambda_x: f64,
    pub rungs: usize,
}

impl QatParams {
    /// Effective couplings `J λ_zz = τ_zz` and `h λ_x = τ_x` (unit
    /// proportionality constant). `None` for a saturated channel.
    pub fn from_channel(m: &ModelParams, c: &ChannelSpec) -> Option<Self> {
        match (c.tau_zz, c.tau_x) {
            (Tau::Finite(tzz), Tau::Finite(tx)) => Some(Self {
                j: m.j,
                h: m.h,
                lambda_zz: tzz / m.j,
                lambda_x: tx / m.h,
                rungs: m.rungs,
            }),
            _ => None,
        }
    }
}

/// Terms of `−Σ (J Z_j Z_{j+1} + h X_j)` on chain sites `site(j)`.
fn chain_terms(m: &ModelParams, site: impl Fn(usize) -> usize) -> Vec<OpTerm> {
    let mut terms = Vec::new();
    for (a, b) in m.bonds() {
        terms.push(OpTerm::new(-m.j, vec![(site(a), Z), (site(b), Z)]));
    }
    for j in 0..m.rungs {
        terms.push(OpTerm::new(-m.h, vec![(site(j), X)]));
    }
    terms
}

/// Single chain of `m.rungs` sites.
pub fn build_chain_tfim_mpo(m: &ModelParams) -> Result<Mpo> {
    m.validate()?;
    Mpo::from_terms(m.rungs, &chain_terms(m, |j| j))
}

fn doubled_terms(m: &ModelParams) -> Vec<OpTerm> {
    let mut terms = chain_terms(m, |j| 2 * j);
    terms.extend(chain_terms(m, |j| 2 * j + 1));
    terms
}

/// Two uncoupled copies of the chain on the ladder legs.
pub fn build_doubled_tfim_mpo(m: &ModelParams) -> Result<Mpo> {
    m.validate()?;
    Mpo::from_terms(2 * m.rungs, &doubled_terms(m))
}

/// Doubled chain plus `−Jλ_zz Σ Z_u Z_ℓ Z_u Z_ℓ` plaquettes and `−hλ_x Σ X_u X_ℓ` rungs.
pub fn build_qat_mpo(q: &QatParams) -> Result<Mpo> {
    let m = ModelParams::new(q.j, q.h, q.rungs)?;
    let mut terms = doubled_terms(&m);
    for (a, b) in m.bonds() {
        terms.push(OpTerm::new(
            -q.j * q.lambda_zz,
            vec![(2 * a, Z), (2 * a + 1, Z), (2 * b, Z), (2 * b + 1, Z)],
        ));
    }
    for j in 0..m.rungs {
        terms.push(OpTerm::new(-q.h * q.lambda_x, vec![(2 * j, X), (2 * j + 1, X)]));
    }
    Mpo::from_terms(2 * m.rungs, &terms)
}

/// `cosh τ · 1 + sinh τ · X⊗X` on one rung, or `(1 + X⊗X)/2` when saturated.
pub fn build_x_rung_gate(tau: Tau) -> Tensor {
    let (a, b) = tau.coefficients();
    let mut g = pauli::kron(&pauli::I, &pauli::I).scaled(a);
    g.add_scaled(b, &pauli::kron(&X, &X)).expect("4x4");
    g
}

/// `cosh τ · 1 + sinh τ · Z_{j,u} Z_{j,ℓ} Z_{j+1,u} Z_{j+1,ℓ}` with rung
/// `j + 1` taken modulo `rungs`. Bond dimension 2; the wrap plaquette
/// spans the whole chain.
pub fn build_zz_plaquette_mpo(tau: Tau, rung: usize, rungs: usize) -> Result<Mpo> {
    if rung >= rungs {
        return Err(Error::Input(format!("rung {rung} out of range for {rungs} rungs")));
    }
    let (a, b) = tau.coefficients();
    let next = (rung + 1) % rungs;
    let ops = vec![(2 * rung, Z), (2 * rung + 1, Z), (2 * next, Z), (2 * next + 1, Z)];
    if tau.is_identity() {
        return Ok(Mpo::identity(2 * rungs));
    }
    Mpo::from_terms(2 * rungs, &[OpTerm::new(a, vec![]), OpTerm::new(b, ops)])
}

/// Which ladder legs a parity string covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegSelector {
    Upper,
    Lower,
    /// The full string `∏X_u ∏X_ℓ`.
    Both,
}

/// `(1 + ∏ X)/2` over the selected legs, bond dimension 2.
pub fn build_parity_projector_mpo(leg: LegSelector, rungs: usize) -> Result<Mpo> {
    if rungs == 0 {
        return Err(Error::Input("need at least one rung".into()));
    }
    let sites: Vec<usize> = match leg {
        LegSelector::Upper => (0..rungs).map(|j| 2 * j).collect(),
        LegSelector::Lower => (0..rungs).map(|j| 2 * j + 1).collect(),
        LegSelector::Both => (0..2 * rungs).collect(),
    };
    let string = sites.into_iter().map(|s| (s, X)).collect();
    Mpo::from_terms(2 * rungs, &[OpTerm::new(0.5, vec![]), OpTerm::new(0.5, string)])
}

/// `(1 + ∏ X)/2` on a plain chain.
pub fn build_chain_parity_projector_mpo(n_sites: usize) -> Result<Mpo> {
    let string = (0..n_sites).map(|s| (s, X)).collect();
    Mpo::from_terms(n_sites, &[OpTerm::new(0.5, vec![]), OpTerm::new(0.5, string)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::contract;

    fn dense_string(n: usize, ops: &[(usize, pauli::Op)]) -> Tensor {
        Mpo::from_terms(n, &[OpTerm::new(1.0, ops.to_vec())]).unwrap().to_dense()
    }

    fn commutator_norm(a: &Tensor, b: &Tensor) -> f64 {
        let ab = contract(a, b, &[(1, 0)]).unwrap();
        let ba = contract(b, a, &[(1, 0)]).unwrap();
        ab.max_abs_diff(&ba)
    }

    #[test]
    fn tau_values() {
        assert_eq!(tau_of_p(0.0).unwrap(), Tau::Finite(0.0));
        let Tau::Finite(t) = tau_of_p(0.25).unwrap() else { panic!() };
        assert!((t - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((t - (1.0f64 / 3.0).atanh()).abs() < 1e-15);
        assert_eq!(tau_of_p(0.5).unwrap(), Tau::Saturated);
        assert!(tau_of_p(0.6).is_err());
        assert!(tau_of_p(-0.1).is_err());
    }

    #[test]
    fn map_px_values() {
        assert_eq!(map_px(0.0, 0.8).unwrap(), 0.0);
        for p in [0.05, 0.2, 0.3, 0.45] {
            assert_eq!(map_px(p, 1.0).unwrap(), p);
        }
        let px = map_px(0.3, 1.2).unwrap();
        assert!((px - (0.5 - 0.5 * 0.4f64.powf(1.0 / 1.2))).abs() < 1e-15);
        assert!(map_px(0.3, 0.0).is_err());
    }

    #[test]
    fn prefactor_counts_both_channels() {
        let c = ChannelSpec::new(0.25, 0.1, 8).unwrap();
        let expected = 4.0 * (0.5f64.ln() + 0.8f64.ln());
        assert!((c.log_prefactor - expected).abs() < 1e-14);
        assert!(!c.saturated);
        assert!(ChannelSpec::new(0.5, 0.1, 8).unwrap().saturated);
    }

    #[test]
    fn two_rung_doubled_hamiltonian_matches_hand_built() {
        let m = ModelParams::new(0.7, 1.3, 2).unwrap();
        let h = build_doubled_tfim_mpo(&m).unwrap().to_dense();
        // periodic L=2 counts the bond twice
        let mut expected = Tensor::zeros(&[16, 16]);
        for leg in 0..2 {
            let zz = dense_string(4, &[(leg, Z), (2 + leg, Z)]);
            expected.add_scaled(-2.0 * 0.7, &zz).unwrap();
            for j in 0..2 {
                expected.add_scaled(-1.3, &dense_string(4, &[(2 * j + leg, X)])).unwrap();
            }
        }
        assert!(h.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn doubled_hamiltonian_respects_both_parities() {
        let m = ModelParams::new(1.1, 0.9, 3).unwrap();
        let h = build_doubled_tfim_mpo(&m).unwrap().to_dense();
        for leg in [LegSelector::Upper, LegSelector::Lower] {
            let p = build_parity_projector_mpo(leg, 3).unwrap().to_dense();
            assert!(commutator_norm(&h, &p) < 1e-12);
        }
    }

    #[test]
    fn qat_reduces_to_doubled_and_is_leg_symmetric() {
        let m = ModelParams::new(0.6, 1.0, 2).unwrap();
        let q = QatParams { j: 0.6, h: 1.0, lambda_zz: 0.0, lambda_x: 0.0, rungs: 2 };
        let a = build_qat_mpo(&q).unwrap().to_dense();
        let b = build_doubled_tfim_mpo(&m).unwrap().to_dense();
        assert!(a.max_abs_diff(&b) < 1e-13);

        let q = QatParams { j: 0.6, h: 1.0, lambda_zz: 0.4, lambda_x: 0.7, rungs: 3 };
        let h = build_qat_mpo(&q).unwrap().to_dense();
        // leg swap permutes the bits of each rung
        let swap = Tensor::from_fn(&[64, 64], |i| {
            let mut t = 0;
            for r in 0..3 {
                let shift = 2 * (2 - r);
                let pair = (i[1] >> shift) & 3;
                t |= (((pair & 1) << 1) | (pair >> 1)) << shift;
            }
            if t == i[0] { 1.0 } else { 0.0 }
        });
        let swapped = contract(&contract(&swap, &h, &[(1, 0)]).unwrap(), &swap, &[(1, 1)]).unwrap();
        assert!(swapped.max_abs_diff(&h) < 1e-13);
    }

    #[test]
    fn x_gate_closed_form() {
        let g = build_x_rung_gate(tau_of_p(0.25).unwrap());
        let c = 3.0 / (2.0 * 2f64.sqrt());
        let s = 1.0 / (2.0 * 2f64.sqrt());
        assert!((g.get(&[0, 0]) - c).abs() < 1e-15);
        assert!((g.get(&[0, 3]) - s).abs() < 1e-15);
        assert!((g.get(&[1, 2]) - s).abs() < 1e-15);
        assert!(build_x_rung_gate(Tau::Finite(0.0)).max_abs_diff(&Tensor::identity(4)) == 0.0);
        let p = build_x_rung_gate(Tau::Saturated);
        let p2 = contract(&p, &p, &[(1, 0)]).unwrap();
        assert!(p2.max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn plaquettes_are_diagonal_and_commute() {
        let tau = tau_of_p(0.2).unwrap();
        let mut mats = Vec::new();
        for j in 0..3 {
            let mpo = build_zz_plaquette_mpo(tau, j, 3).unwrap();
            assert!(mpo.max_bond_dim() <= 2);
            let d = mpo.to_dense();
            let (a, b) = tau.coefficients();
            let nj = (j + 1) % 3;
            let mut expected = Tensor::identity(64).scaled(a);
            expected
                .add_scaled(b, &dense_string(6, &[(2 * j, Z), (2 * j + 1, Z), (2 * nj, Z), (2 * nj + 1, Z)]))
                .unwrap();
            assert!(d.max_abs_diff(&expected) < 1e-14);
            for r in 0..64 {
                for c in 0..64 {
                    if r != c {
                        assert_eq!(d.get(&[r, c]), 0.0);
                    }
                }
            }
            mats.push(d);
        }
        assert!(commutator_norm(&mats[0], &mats[2]) < 1e-14);
        assert_eq!(build_zz_plaquette_mpo(Tau::Finite(0.0), 1, 3).unwrap().support(), None);
    }

    #[test]
    fn filters_commute_with_strong_symmetry() {
        let s = build_parity_projector_mpo(LegSelector::Both, 3).unwrap().to_dense();
        let tau = tau_of_p(0.3).unwrap();
        for j in 0..3 {
            let zz = build_zz_plaquette_mpo(tau, j, 3).unwrap().to_dense();
            assert!(commutator_norm(&zz, &s) < 1e-13);
        }
        let g = build_x_rung_gate(tau);
        let gx = Mpo::from_terms(
            6,
            &[OpTerm::new(g.get(&[0, 0]), vec![]), OpTerm::new(g.get(&[0, 3]), vec![(2, X), (3, X)])],
        )
        .unwrap()
        .to_dense();
        assert!(commutator_norm(&gx, &s) < 1e-13);
    }

    #[test]
    fn parity_projector_algebra() {
        let p = build_parity_projector_mpo(LegSelector::Upper, 2).unwrap();
        assert_eq!(p.max_bond_dim(), 2);
        let d = p.to_dense();
        let d2 = contract(&d, &d, &[(1, 0)]).unwrap();
        assert!(d2.max_abs_diff(&d) < 1e-14);
        // |↑ ↑⟩ on the upper leg (lower leg ↑): (|0000⟩ + |1010⟩)/2
        let col: Vec<f64> = (0..16).map(|r| d.get(&[r, 0])).collect();
        assert_eq!(col[0], 0.5);
        assert_eq!(col[0b1010], 0.5);
        assert_eq!(col.iter().filter(|x| **x != 0.0).count(), 2);
    }
}
