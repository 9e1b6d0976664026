//! Exact reference results for small systems.
//!
//! Everything here is dense and exponential in the system size, and exists
//! to check the tensor-network code. Chain site `j` is binary digit
//! `L − 1 − j` of a basis index (site 0 most significant), matching the MPS
//! dense expansion. A doubled index interleaves the ket digit `a_j` (leg u)
//! and the bra digit `b_j` (leg ℓ) rung by rung.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, symmetric_eigen};
use crate::model::{tau_of_p, ModelParams};
use crate::mps::entropy_of;
use crate::tensor::Tensor;

/// Largest chain length handled densely (20 spins in the doubled picture).
pub const MAX_DENSE_RUNGS: usize = 10;

fn check_size(rungs: usize) -> Result<()> {
    if rungs == 0 || rungs > MAX_DENSE_RUNGS {
        return Err(Error::Input(format!(
            "dense oracle supports 1..={MAX_DENSE_RUNGS} rungs, got {rungs}"
        )));
    }
    Ok(())
}

fn bit(rungs: usize, site: usize) -> usize {
    1 << (rungs - 1 - site)
}

fn z_sign(index: usize, mask: usize) -> f64 {
    if (index & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Dense `−Σ (J Z_j Z_{j+1} + h X_j)` on one chain.
pub fn chain_hamiltonian_dense(m: &ModelParams) -> Result<Tensor> {
    m.validate()?;
    check_size(m.rungs)?;
    let n = m.rungs;
    let dim = 1usize << n;
    let mut h = Tensor::zeros(&[dim, dim]);
    for a in 0..dim {
        let mut diag = 0.0;
        for (i, j) in m.bonds() {
            diag -= m.j * z_sign(a, bit(n, i) | bit(n, j));
        }
        h.set(&[a, a], diag);
        for s in 0..n {
            let b = a ^ bit(n, s);
            let v = h.get(&[b, a]) - m.h;
            h.set(&[b, a], v);
        }
    }
    Ok(h)
}

/// `∏ X_j ψ`.
fn flip_all(psi: &[f64]) -> Vec<f64> {
    let mask = psi.len() - 1;
    (0..psi.len()).map(|a| psi[a ^ mask]).collect()
}

/// Lowest chain eigenpair. A (near-)degenerate pair is resolved into its
/// `∏X = +1` combination. The sign is fixed so the largest entry is positive.
pub fn chain_ground_state(m: &ModelParams) -> Result<(f64, Vec<f64>)> {
    let h = chain_hamiltonian_dense(m)?;
    let dim = h.dims()[0];
    let (vals, vecs) = symmetric_eigen(&h)?;
    let column = |c: usize| -> Vec<f64> { (0..dim).map(|r| vecs.get(&[r, c])).collect() };
    let mut psi = column(0);
    if dim > 1 && vals[1] - vals[0] < 1e-8 {
        let project = |v: &[f64]| -> Vec<f64> {
            let f = flip_all(v);
            v.iter().zip(&f).map(|(x, y)| 0.5 * (x + y)).collect()
        };
        let p0 = project(&psi);
        let p1 = project(&column(1));
        let n0: f64 = p0.iter().map(|x| x * x).sum();
        let n1: f64 = p1.iter().map(|x| x * x).sum();
        psi = if n0 >= n1 { p0 } else { p1 };
    }
    let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let peak = psi.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    let s = peak.signum() / norm;
    psi.iter_mut().for_each(|x| *x *= s);
    let hpsi: f64 = (0..dim)
        .map(|r| psi[r] * (0..dim).map(|c| h.get(&[r, c]) * psi[c]).sum::<f64>())
        .sum();
    Ok((hpsi, psi))
}

/// Ground energy of the periodic chain in the sector `∏X = parity`, from
/// the Jordan-Wigner free-fermion solution.
pub fn tfim_exact_energy(j: f64, h: f64, l: usize, parity: i8) -> Result<f64> {
    if l < 2 {
        return Err(Error::Input("free-fermion oracle needs L >= 2".into()));
    }
    if parity != 1 && parity != -1 {
        return Err(Error::Input(format!("parity must be +1 or -1, got {parity}")));
    }
    // ∏X = +1 ↔ even fermion number ↔ antiperiodic fermions
    let momenta: Vec<f64> = (0..l)
        .map(|n| {
            if parity == 1 {
                (2 * n + 1) as f64 * PI / l as f64
            } else {
                2.0 * n as f64 * PI / l as f64
            }
        })
        .collect();
    let eps = |k: f64| 2.0 * (j * j + h * h - 2.0 * j * h * k.cos()).max(0.0).sqrt();
    let mut paired = 0.0;
    let mut min_eps = f64::INFINITY;
    let mut unpaired = Vec::new();
    for &k in &momenta {
        let near = |t: f64| (k - t).abs() < 1e-9;
        if near(0.0) || near(PI) {
            unpaired.push(h - j * k.cos());
        } else if k < PI {
            paired -= eps(k);
            min_eps = min_eps.min(eps(k));
        }
    }
    // occupations n ∈ {0,1} per unpaired mode, energy (2n − 1)·c; total
    // occupation must have the sector's parity, possibly by breaking a pair
    let want_odd = parity == -1;
    let mut best = f64::INFINITY;
    for occ in 0..(1usize << unpaired.len()) {
        let e: f64 = unpaired
            .iter()
            .enumerate()
            .map(|(i, c)| if occ >> i & 1 == 1 { *c } else { -*c })
            .sum();
        let odd = occ.count_ones() % 2 == 1;
        if odd == want_odd {
            best = best.min(e);
        } else if min_eps.is_finite() {
            best = best.min(e + min_eps);
        }
    }
    Ok(paired + best)
}

/// Exact density matrix in one of the two representations.
#[derive(Clone, Debug, PartialEq)]
pub enum DenseState {
    /// `2^L × 2^L` symmetric matrix.
    Physical { rungs: usize, rho: Tensor },
    /// `2^{2L}` vector on the interleaved ladder.
    Doubled { rungs: usize, amplitudes: Vec<f64> },
}

/// Doubled index of the matrix element `(a, b)`.
pub fn interleave(rungs: usize, a: usize, b: usize) -> usize {
    let mut out = 0;
    for j in 0..rungs {
        let s = rungs - 1 - j;
        out = (out << 2) | ((a >> s & 1) << 1) | (b >> s & 1);
    }
    out
}

impl DenseState {
    pub fn pure(psi: &[f64]) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::Dimension(format!("{dim} amplitudes is not a spin chain")));
        }
        let rungs = dim.trailing_zeros() as usize;
        check_size(rungs)?;
        Ok(DenseState::Physical { rungs, rho: Tensor::from_fn(&[dim, dim], |i| psi[i[0]] * psi[i[1]]) })
    }

    pub fn rungs(&self) -> usize {
        match self {
            DenseState::Physical { rungs, .. } | DenseState::Doubled { rungs, .. } => *rungs,
        }
    }

    pub fn vectorized(&self) -> Vec<f64> {
        match self {
            DenseState::Doubled { amplitudes, .. } => amplitudes.clone(),
            DenseState::Physical { rungs, rho } => {
                let dim = 1usize << rungs;
                let mut v = vec![0.0; dim * dim];
                for a in 0..dim {
                    for b in 0..dim {
                        v[interleave(*rungs, a, b)] = rho.get(&[a, b]);
                    }
                }
                v
            }
        }
    }

    pub fn matrix(&self) -> Tensor {
        match self {
            DenseState::Physical { rho, .. } => rho.clone(),
            DenseState::Doubled { rungs, amplitudes } => {
                let dim = 1usize << rungs;
                Tensor::from_fn(&[dim, dim], |i| amplitudes[interleave(*rungs, i[0], i[1])])
            }
        }
    }

    pub fn to_doubled(&self) -> Self {
        DenseState::Doubled { rungs: self.rungs(), amplitudes: self.vectorized() }
    }

    pub fn to_physical(&self) -> Self {
        DenseState::Physical { rungs: self.rungs(), rho: self.matrix() }
    }
}

/// Exact ground state of the doubled chain: `|ψ⟩⟨ψ|` with energy `2 E_chain`.
#[derive(Clone, Debug)]
pub struct DenseGround {
    pub energy: f64,
    pub chain_energy: f64,
    pub chain_state: Vec<f64>,
    pub state: DenseState,
}

/// The doubled Hamiltonian is `H ⊗ 1 + 1 ⊗ H`, so its ground state is the
/// product of two chain ground states, vectorized `|ψ⟩⟨ψ|`.
pub fn ground_state_dense(m: &ModelParams) -> Result<DenseGround> {
    let (e, psi) = chain_ground_state(m)?;
    Ok(DenseGround { energy: 2.0 * e, chain_energy: e, state: DenseState::pure(&psi)?, chain_state: psi })
}

/// Applies the X channel on every site and the ZZ channel on every bond of
/// the periodic chain. The physical picture uses the Kraus form
/// `(1−p)ρ + p KρK`; the doubled picture multiplies by `√(1−2p)` times the
/// filtering gate for each channel.
pub fn apply_channel_dense(s: &DenseState, p_zz: f64, p_x: f64) -> Result<DenseState> {
    let tau_zz = tau_of_p(p_zz)?;
    let tau_x = tau_of_p(p_x)?;
    let n = s.rungs();
    let bonds: Vec<(usize, usize)> = (0..n).map(|j| (j, (j + 1) % n)).collect();
    match s {
        DenseState::Physical { rho, .. } => {
            let dim = 1usize << n;
            let mut rho = rho.clone();
            if p_x > 0.0 {
                for j in 0..n {
                    let m = bit(n, j);
                    rho = Tensor::from_fn(&[dim, dim], |i| {
                        (1.0 - p_x) * rho.get(i) + p_x * rho.get(&[i[0] ^ m, i[1] ^ m])
                    });
                }
            }
            if p_zz > 0.0 {
                for &(i, j) in &bonds {
                    let m = bit(n, i) | bit(n, j);
                    rho = Tensor::from_fn(&[dim, dim], |k| {
                        let s = z_sign(k[0], m) * z_sign(k[1], m);
                        (1.0 - p_zz + p_zz * s) * rho.get(k)
                    });
                }
            }
            Ok(DenseState::Physical { rungs: n, rho })
        }
        DenseState::Doubled { amplitudes, .. } => {
            let mut v = amplitudes.clone();
            let scale = |p: f64| if p == 0.5 { 1.0 } else { (1.0 - 2.0 * p).sqrt() };
            let width = 2 * n;
            let dbit = |site: usize| 1usize << (width - 1 - site);
            let (a, b) = tau_x.coefficients();
            if p_x > 0.0 {
                for j in 0..n {
                    let m = dbit(2 * j) | dbit(2 * j + 1);
                    let c = scale(p_x);
                    v = (0..v.len()).map(|k| c * (a * v[k] + b * v[k ^ m])).collect();
                }
            }
            let (a, b) = tau_zz.coefficients();
            if p_zz > 0.0 {
                for &(i, j) in &bonds {
                    let m = dbit(2 * i) | dbit(2 * i + 1) | dbit(2 * j) | dbit(2 * j + 1);
                    let c = scale(p_zz);
                    v.iter_mut().enumerate().for_each(|(k, x)| *x *= c * (a + b * z_sign(k, m)));
                }
            }
            Ok(DenseState::Doubled { rungs: n, amplitudes: v })
        }
    }
}

/// `Tr[Z_iZ_j ρ Z_iZ_j ρ] / Tr[ρ²]`.
pub fn renyi2_zz(rho: &Tensor, rungs: usize, i: usize, j: usize) -> f64 {
    let m = if i == j { 0 } else { bit(rungs, i) | bit(rungs, j) };
    let dim = rho.dims()[0];
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..dim {
        for b in 0..dim {
            let r2 = rho.get(&[a, b]).powi(2);
            num += z_sign(a, m) * z_sign(b, m) * r2;
            den += r2;
        }
    }
    num / den
}

/// Canonical `Tr[ρ Z_iZ_j] / Tr ρ`.
pub fn canonical_zz(rho: &Tensor, rungs: usize, i: usize, j: usize) -> f64 {
    let m = if i == j { 0 } else { bit(rungs, i) | bit(rungs, j) };
    let dim = rho.dims()[0];
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..dim {
        num += z_sign(a, m) * rho.get(&[a, a]);
        den += rho.get(&[a, a]);
    }
    num / den
}

/// `Tr[Z_iZ_j ρ²] / Tr[ρ²]`, the upper-leg correlator of the doubled vector.
pub fn upper_zz(rho: &Tensor, rungs: usize, i: usize, j: usize) -> f64 {
    let m = if i == j { 0 } else { bit(rungs, i) | bit(rungs, j) };
    let dim = rho.dims()[0];
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..dim {
        for b in 0..dim {
            let r2 = rho.get(&[a, b]).powi(2);
            num += z_sign(a, m) * r2;
            den += r2;
        }
    }
    num / den
}

/// Entropy of the first `n_sites` ladder sites of the normalized doubled vector.
pub fn prefix_entropy_dense(vectorized: &[f64], n_sites: usize) -> Result<f64> {
    let total = vectorized.len().trailing_zeros() as usize;
    if n_sites == 0 || n_sites >= total {
        return Err(Error::Input(format!("cut {n_sites} is not interior to {total} sites")));
    }
    let m = Tensor::from_vec(&[1 << n_sites, 1 << (total - n_sites)], vectorized.to_vec())?;
    Ok(entropy_of(&singular_values(&m)?))
}

/// Exact observables of a density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseObservables {
    pub chi_ii: f64,
    pub chi_st: f64,
    pub chi_u: f64,
    /// Mean of the nearest-neighbour Rényi-2 correlator over all bonds.
    pub renyi2_nn_mean: f64,
    pub entropy_half_cut: f64,
    /// Entropy of the two-rung block `{(0,u),(0,ℓ),(1,u),(1,ℓ)}`.
    pub entropy_plaquette: f64,
    /// Entropy of the first `x` rungs, `x = 1..L−1`.
    pub entropy_profile: Vec<f64>,
    pub purity: f64,
    pub trace: f64,
}

fn susceptibility_with(rungs: usize, f: impl Fn(usize) -> f64) -> f64 {
    (1..=rungs / 2).map(f).sum::<f64>() * 2.0 / rungs as f64
}

pub fn observables_dense(s: &DenseState) -> Result<DenseObservables> {
    let n = s.rungs();
    if n % 2 != 0 {
        return Err(Error::Input("observables need an even number of rungs".into()));
    }
    let rho = s.matrix();
    let v = s.vectorized();
    let dim = 1usize << n;
    let purity: f64 = v.iter().map(|x| x * x).sum();
    let trace: f64 = (0..dim).map(|a| rho.get(&[a, a])).sum();
    let profile = (1..n).map(|x| prefix_entropy_dense(&v, 2 * x)).collect::<Result<Vec<_>>>()?;
    Ok(DenseObservables {
        chi_ii: susceptibility_with(n, |r| renyi2_zz(&rho, n, 0, r)),
        chi_st: susceptibility_with(n, |r| canonical_zz(&rho, n, 0, r)),
        chi_u: susceptibility_with(n, |r| upper_zz(&rho, n, 0, r)),
        renyi2_nn_mean: (0..n).map(|j| renyi2_zz(&rho, n, j, (j + 1) % n)).sum::<f64>() / n as f64,
        entropy_half_cut: prefix_entropy_dense(&v, n + 1)?,
        entropy_plaquette: prefix_entropy_dense(&v, 4)?,
        entropy_profile: profile,
        purity,
        trace,
    })
}

/// One line of a golden reference file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenRow {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    pub p_zz: f64,
    pub p_x: f64,
    pub observable: String,
    pub value: f64,
}

pub fn write_golden_csv<W: Write>(w: W, rows: &[GoldenRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_golden_csv<R: Read>(r: R) -> Result<Vec<GoldenRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

/// Golden rows for a sweep of channel strengths.
pub fn golden_sweep(m: &ModelParams, points: &[(f64, f64)]) -> Result<Vec<GoldenRow>> {
    let ground = ground_state_dense(m)?;
    let mut rows = Vec::new();
    for &(p_zz, p_x) in points {
        let o = observables_dense(&apply_channel_dense(&ground.state, p_zz, p_x)?)?;
        let named = [
            ("chi_ii", o.chi_ii),
            ("chi_st", o.chi_st),
            ("chi_u", o.chi_u),
            ("renyi2_nn_mean", o.renyi2_nn_mean),
            ("entropy_half_cut", o.entropy_half_cut),
            ("entropy_plaquette", o.entropy_plaquette),
            ("purity", o.purity),
        ];
        for (name, value) in named {
            rows.push(GoldenRow { l: m.rungs, j: m.j, h: m.h, p_zz, p_x, observable: name.into(), value });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::contract;

    fn params(j: f64, l: usize) -> ModelParams {
        ModelParams::new(j, 1.0, l).unwrap()
    }

    #[test]
    fn free_fermions_match_dense_spectrum() {
        for l in 2..=9 {
            for &(j, h) in &[(1.0, 1.0), (0.8, 1.0), (1.3, 0.7), (0.0, 1.0), (2.0, 0.4)] {
                let m = ModelParams::new(j, h, l).unwrap();
                let ham = chain_hamiltonian_dense(&m).unwrap();
                let dim = 1usize << l;
                // restrict to each parity sector with the projector (1 ± ∏X)/2
                for parity in [1i8, -1] {
                    let p = Tensor::from_fn(&[dim, dim], |i| {
                        let diag = if i[0] == i[1] { 0.5 } else { 0.0 };
                        let flip = if i[0] == i[1] ^ (dim - 1) { 0.5 * f64::from(parity) } else { 0.0 };
                        diag + flip
                    });
                    let mut shifted = contract(&contract(&p, &ham, &[(1, 0)]).unwrap(), &p, &[(1, 0)]).unwrap();
                    // push the other sector far up
                    let mut q = Tensor::identity(dim);
                    q.add_scaled(-1.0, &p).unwrap();
                    shifted.add_scaled(1e3, &q).unwrap();
                    let (vals, _) = symmetric_eigen(&shifted).unwrap();
                    let ff = tfim_exact_energy(j, h, l, parity).unwrap();
                    assert!((vals[0] - ff).abs() < 1e-10, "L={l} J={j} h={h} parity={parity}: {} vs {ff}", vals[0]);
                }
            }
        }
    }

    #[test]
    fn free_fermion_limits() {
        assert!((tfim_exact_energy(0.0, 1.0, 6, 1).unwrap() + 6.0).abs() < 1e-12);
        assert!((tfim_exact_energy(1.0, 1e-12, 6, 1).unwrap() + 6.0).abs() < 1e-9);
    }

    #[test]
    fn ground_state_is_parity_even_and_matches_free_fermions() {
        let g = ground_state_dense(&params(1.0, 8)).unwrap();
        assert!((g.chain_energy - tfim_exact_energy(1.0, 1.0, 8, 1).unwrap()).abs() < 1e-10);
        let flipped = flip_all(&g.chain_state);
        let overlap: f64 = flipped.iter().zip(&g.chain_state).map(|(a, b)| a * b).sum();
        assert!((overlap - 1.0).abs() < 1e-10);
        let g0 = ground_state_dense(&params(0.0, 4)).unwrap();
        assert!((g0.energy + 8.0).abs() < 1e-12);
        assert!(g0.chain_state.iter().all(|x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn pictures_agree() {
        let g = ground_state_dense(&params(1.1, 6)).unwrap();
        for &(pzz, px) in &[(0.3, 0.0), (0.3, 0.2), (0.5, 0.1), (0.2, 0.5)] {
            let phys = apply_channel_dense(&g.state, pzz, px).unwrap();
            let dbl = apply_channel_dense(&g.state.to_doubled(), pzz, px).unwrap();
            let a = phys.vectorized();
            let b = dbl.vectorized();
            let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-10, "p=({pzz},{px}) diff {diff}");
        }
    }

    #[test]
    fn channels_preserve_trace_and_commute() {
        let g = ground_state_dense(&params(0.9, 6)).unwrap();
        let a = apply_channel_dense(&apply_channel_dense(&g.state, 0.0, 0.3).unwrap(), 0.2, 0.0).unwrap();
        let b = apply_channel_dense(&apply_channel_dense(&g.state, 0.2, 0.0).unwrap(), 0.0, 0.3).unwrap();
        assert!(a.matrix().max_abs_diff(&b.matrix()) < 1e-12);
        let o = observables_dense(&a).unwrap();
        assert!((o.trace - 1.0).abs() < 1e-12);
        assert!(o.purity < 1.0);
    }

    #[test]
    fn maximal_x_channel_on_one_site_is_maximally_mixed() {
        // every site fully dephased in X: |00⟩⟨00| becomes I/4
        let mut psi = vec![0.0; 4];
        psi[0] = 1.0;
        let s = DenseState::pure(&psi).unwrap();
        let out = apply_channel_dense(&s, 0.0, 0.5).unwrap().matrix();
        assert!(out.max_abs_diff(&Tensor::identity(4).scaled(0.25)) < 1e-15);
    }

    #[test]
    fn kraus_operators_commute_with_parity() {
        let n = 4;
        let dim = 1 << n;
        let parity = Tensor::from_fn(&[dim, dim], |i| if i[0] == i[1] ^ (dim - 1) { 1.0 } else { 0.0 });
        let mut kraus = Vec::new();
        for j in 0..n {
            kraus.push(Tensor::from_fn(&[dim, dim], |i| if i[0] == i[1] ^ bit(n, j) { 1.0 } else { 0.0 }));
            let m = bit(n, j) | bit(n, (j + 1) % n);
            kraus.push(Tensor::from_fn(&[dim, dim], |i| if i[0] == i[1] { z_sign(i[0], m) } else { 0.0 }));
        }
        for k in &kraus {
            let a = contract(k, &parity, &[(1, 0)]).unwrap();
            let b = contract(&parity, k, &[(1, 0)]).unwrap();
            assert!(a.max_abs_diff(&b) == 0.0);
        }
    }

    #[test]
    fn maximally_mixed_observables() {
        let n = 4;
        let dim = 1usize << n;
        let s = DenseState::Physical { rungs: n, rho: Tensor::identity(dim).scaled(1.0 / dim as f64) };
        let o = observables_dense(&s).unwrap();
        // for ρ ∝ 1, Tr[OρOρ]/Tr[ρ²] = Tr[O²]/Tr[1] = 1 while the canonical
        // and upper-leg correlators vanish
        assert!((o.chi_ii - 1.0).abs() < 1e-14);
        assert!(o.chi_st.abs() < 1e-14);
        assert!(o.chi_u.abs() < 1e-14);
        assert!((o.purity - 1.0 / dim as f64).abs() < 1e-15);
    }

    #[test]
    fn cat_state_has_long_range_order() {
        let mut psi = vec![0.0; 64];
        psi[0] = 0.5f64.sqrt();
        psi[63] = 0.5f64.sqrt();
        let o = observables_dense(&DenseState::pure(&psi).unwrap()).unwrap();
        assert!((o.chi_u - 1.0).abs() < 1e-12);
        assert!((o.chi_st - 1.0).abs() < 1e-12);
        assert!((o.chi_ii - 1.0).abs() < 1e-12);
    }

    #[test]
    fn golden_csv_round_trip() {
        let rows = golden_sweep(&params(0.1, 4), &[(0.0, 0.0), (0.25, 0.0)]).unwrap();
        let mut buf = Vec::new();
        write_golden_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("L,J,h,p_zz,p_x,observable,value\n"));
        assert_eq!(read_golden_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn size_cap() {
        assert!(chain_hamiltonian_dense(&params(1.0, 11)).is_err());
    }
}
