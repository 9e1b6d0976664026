//! Two-site DMRG and preparation of the unfiltered doubled state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lanczos::lanczos_lowest;
use crate::model::{build_chain_parity_projector_mpo, build_chain_tfim_mpo, build_doubled_tfim_mpo, build_parity_projector_mpo, LegSelector, ModelParams};
use crate::mps::{Mpo, MpsState, TruncationPolicy};
use crate::tensor::{contract, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmrgConfig {
    pub trunc: TruncationPolicy,
    /// Convergence threshold on the change of the total energy between sweeps.
    pub energy_tol: f64,
    pub max_sweeps: usize,
    /// Residual tolerance of the local eigensolver.
    pub eigen_tol: f64,
    pub seed: u64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self { trunc: TruncationPolicy::default(), energy_tol: 1e-4, max_sweeps: 50, eigen_tol: 1e-9, seed: 1 }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        self.trunc.validate()?;
        if !(self.energy_tol > 0.0) || !(self.eigen_tol > 0.0) {
            return Err(Error::Input("DMRG tolerances must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Input("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmrgReport {
    pub energy: f64,
    /// Energy after each full left-right-left sweep.
    pub sweep_energies: Vec<f64>,
    pub final_bond_profile: Vec<usize>,
    pub converged: bool,
    /// Sum of relative discarded weights over all truncations.
    pub total_discarded_weight: f64,
}

/// Local matvec budget per two-site update.
const LOCAL_MATVECS: usize = 400;

/// `L[a, w, a']` with `a` the bra bond and `a'` the ket bond.
fn grow_left(env: &Tensor, a: &Tensor, w: &Tensor) -> Tensor {
    let t = contract(env, a, &[(2, 0)]).expect("bond"); // [a, w, t, b']
    let t = contract(&t, w, &[(1, 0), (2, 2)]).expect("bond"); // [a, b', s, w']
    let t = contract(&t, a, &[(0, 0), (2, 1)]).expect("bond"); // [b', w', b]
    t.permute(&[2, 1, 0])
}

/// `R[a, w, a']` with `a` the bra bond and `a'` the ket bond.
fn grow_right(env: &Tensor, a: &Tensor, w: &Tensor) -> Tensor {
    let t = contract(a, env, &[(2, 2)]).expect("bond"); // [a', t, b, w']
    let t = contract(&t, w, &[(1, 2), (3, 3)]).expect("bond"); // [a', b, w, s]
    let t = contract(&t, a, &[(1, 2), (3, 1)]).expect("bond"); // [a', w, a]
    t.permute(&[2, 1, 0])
}

fn trivial_env() -> Tensor {
    Tensor::from_vec(&[1, 1, 1], vec![1.0]).expect("scalar")
}

/// `H_eff θ` for the two-site block `θ[a, s1, s2, b]`.
fn apply_effective(l: &Tensor, w1: &Tensor, w2: &Tensor, r: &Tensor, theta: &Tensor) -> Tensor {
    let t = contract(l, theta, &[(2, 0)]).expect("bond"); // [a, w, s1, s2, b']
    let t = contract(&t, w1, &[(1, 0), (2, 2)]).expect("bond"); // [a, s2, b', s1o, w2]
    let t = contract(&t, w2, &[(4, 0), (1, 2)]).expect("bond"); // [a, b', s1o, s2o, w3]
    contract(&t, r, &[(1, 2), (4, 1)]).expect("bond") // [a, s1o, s2o, b]
}

/// Two-site DMRG. The returned state has unit norm (`log_norm = 0`) and
/// its canonical center on site 0.
pub fn find_ground_state(h: &Mpo, init: &MpsState, cfg: &DmrgConfig) -> Result<(MpsState, DmrgReport)> {
    cfg.validate()?;
    let n = init.n_sites();
    if h.len() != n {
        return Err(Error::Dimension(format!("MPO has {} sites, state has {n}", h.len())));
    }
    if n < 2 {
        return Err(Error::Input("two-site DMRG needs at least two sites".into()));
    }
    let mut psi = init.clone();
    psi.canonicalize(0);
    psi.set_log_norm(0.0);

    let mut left: Vec<Tensor> = vec![trivial_env(); n + 1];
    let mut right: Vec<Tensor> = vec![trivial_env(); n + 1];
    for k in (1..n).rev() {
        right[k] = grow_right(&right[k + 1], psi.tensor(k), h.tensor(k));
    }

    let mut sweep_energies = Vec::new();
    let mut discarded = 0.0;
    let mut converged = false;
    let mut energy = f64::NAN;

    let optimize = |psi: &mut MpsState, i: usize, left: &[Tensor], right: &[Tensor], to_right: bool| -> Result<(f64, f64)> {
        let theta = contract(psi.tensor(i), psi.tensor(i + 1), &[(2, 0)])?;
        let dims = theta.dims().to_vec();
        let (l, r) = (&left[i], &right[i + 2]);
        let (w1, w2) = (h.tensor(i), h.tensor(i + 1));
        let out = lanczos_lowest(
            |x, y| {
                let t = Tensor::from_vec(&dims, x.to_vec()).expect("block");
                y.copy_from_slice(apply_effective(l, w1, w2, r, &t).data());
            },
            theta.data(),
            cfg.eigen_tol,
            LOCAL_MATVECS,
        );
        let block = Tensor::from_vec(&[dims[0] * dims[1], dims[2] * dims[3]], out.vector)?;
        let shape = [dims[0], dims[1], dims[2], dims[3]];
        let d = psi.split_two_site(i, &block, shape, &cfg.trunc, to_right)?;
        psi.set_log_norm(0.0);
        Ok((out.value, d))
    };

    for _ in 0..cfg.max_sweeps {
        for i in 0..n - 1 {
            let (_, d) = optimize(&mut psi, i, &left, &right, true)?;
            discarded += d;
            left[i + 1] = grow_left(&left[i], psi.tensor(i), h.tensor(i));
        }
        for i in (0..n - 1).rev() {
            let (e, d) = optimize(&mut psi, i, &left, &right, false)?;
            discarded += d;
            energy = e;
            right[i + 1] = grow_right(&right[i + 2], psi.tensor(i + 1), h.tensor(i + 1));
        }
        let prev = sweep_energies.last().copied();
        sweep_energies.push(energy);
        if let Some(p) = prev {
            if (energy - p).abs() < cfg.energy_tol {
                converged = true;
                break;
            }
        }
    }
    psi.canonicalize(0);
    psi.set_log_norm(0.0);
    let report = DmrgReport {
        energy,
        sweep_energies,
        final_bond_profile: psi.bond_dims(),
        converged,
        total_discarded_weight: discarded,
    };
    Ok((psi, report))
}

/// How the unfiltered doubled state is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepRoute {
    /// DMRG on one chain, then the exact product `ψ ⊗ ψ` laid onto the ladder.
    #[default]
    ChainProduct,
    /// DMRG directly on the doubled Hamiltonian.
    DoubledDmrg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    /// Ground energy of the doubled Hamiltonian.
    pub energy: f64,
    pub dmrg: DmrgReport,
    pub cat_projected: bool,
    /// Relative weight discarded when the product state was compressed.
    pub product_discarded_weight: f64,
    pub route: PrepRoute,
}

fn random_init(n: usize, seed: u64) -> MpsState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MpsState::random(n, 4, &mut rng)
}

/// Unfiltered `|ρ₀⟩⟩ = |ψ⟩|ψ⟩` for the model. For `J/h > 1` the parity
/// `∏X = +1` cat combination is projected out of the (nearly degenerate)
/// ground space when `cat` is set.
pub fn prepare_initial_choi_state(
    p: &ModelParams,
    cfg: &DmrgConfig,
    route: PrepRoute,
    cat: bool,
) -> Result<(MpsState, Preparation)> {
    p.validate()?;
    let project = cat && p.j_over_h() > 1.0;
    match route {
        PrepRoute::ChainProduct => {
            let h = build_chain_tfim_mpo(p)?;
            let (mut chain, report) = find_ground_state(&h, &random_init(p.rungs, cfg.seed), cfg)?;
            if project {
                chain.apply_mpo(&build_chain_parity_projector_mpo(p.rungs)?, &cfg.trunc)?;
                chain.canonicalize(0);
                chain.set_log_norm(0.0);
            }
            let (state, dropped) = double_chain_state(&chain, &cfg.trunc)?;
            let prep = Preparation {
                energy: 2.0 * report.energy,
                dmrg: report,
                cat_projected: project,
                product_discarded_weight: dropped,
                route,
            };
            Ok((state, prep))
        }
        PrepRoute::DoubledDmrg => {
            let h = build_doubled_tfim_mpo(p)?;
            let (mut state, report) = find_ground_state(&h, &random_init(2 * p.rungs, cfg.seed), cfg)?;
            if project {
                for leg in [LegSelector::Upper, LegSelector::Lower] {
                    state.apply_mpo(&build_parity_projector_mpo(leg, p.rungs)?, &cfg.trunc)?;
                }
                state.canonicalize(0);
                state.set_log_norm(0.0);
            }
            let prep = Preparation {
                energy: report.energy,
                dmrg: report,
                cat_projected: project,
                product_discarded_weight: 0.0,
                route,
            };
            Ok((state, prep))
        }
    }
}

/// Lays `ψ ⊗ ψ` onto the ladder (upper leg = first copy) and truncates.
///
/// The chain is first brought into Schmidt gauge, where every bond index of
/// a right-canonical tensor labels a right Schmidt vector with weight `λ`.
/// Every ladder cut splits both copies at chain bonds, so its Schmidt values
/// are products `λ_α λ'_β` and truncation reduces to keeping the largest
/// products. Returns the state and the summed relative discarded weight.
pub fn double_chain_state(chain: &MpsState, trunc: &TruncationPolicy) -> Result<(MpsState, f64)> {
    let n = chain.n_sites();
    let (gauge, lambdas) = schmidt_gauge(chain)?;

    // kept pairs per ladder bond; ladder bond 2k sits before rung k
    // (copy bonds k, k), bond 2k+1 inside rung k (copy bonds k+1, k)
    let mut kept: Vec<Vec<(usize, usize)>> = Vec::with_capacity(2 * n + 1);
    let mut dropped = 0.0;
    for b in 0..=2 * n {
        let (c1, c2) = if b % 2 == 0 { (b / 2, b / 2) } else { (b / 2 + 1, b / 2) };
        let (l1, l2) = (&lambdas[c1], &lambdas[c2]);
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(l1.len() * l2.len());
        for (i, x) in l1.iter().enumerate() {
            for (j, y) in l2.iter().enumerate() {
                pairs.push((x * y, i, j));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let largest = pairs[0].0;
        let keep = pairs
            .iter()
            .take_while(|p| p.0 >= trunc.sv_cutoff * largest)
            .count()
            .clamp(1, trunc.max_bond.max(1));
        let total: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
        dropped += pairs[keep..].iter().map(|p| p.0 * p.0).sum::<f64>() / total;
        kept.push(pairs[..keep].iter().map(|p| (p.1, p.2)).collect());
    }

    let mut tensors = Vec::with_capacity(2 * n);
    for k in 0..n {
        let b = &gauge[k];
        let (lin, mid, rout) = (&kept[2 * k], &kept[2 * k + 1], &kept[2 * k + 2]);
        // upper site: first copy advances, second copy passes through
        let upper = Tensor::from_fn(&[lin.len(), 2, mid.len()], |i| {
            let (a, c) = lin[i[0]];
            let (a2, c2) = mid[i[2]];
            if c == c2 { b.get(&[a, i[1], a2]) } else { 0.0 }
        });
        let lower = Tensor::from_fn(&[mid.len(), 2, rout.len()], |i| {
            let (a, c) = mid[i[0]];
            let (a2, c2) = rout[i[2]];
            if a == a2 { b.get(&[c, i[1], c2]) } else { 0.0 }
        });
        tensors.push(upper);
        tensors.push(lower);
    }
    let mut state = MpsState::from_tensors(tensors, 0.0)?;
    state.canonicalize(0);
    state.set_log_norm(0.0);
    Ok((state, dropped))
}

/// Right-canonical tensors in Schmidt gauge plus the Schmidt values of
/// every bond (`n + 1` lists, boundaries `[1]`).
///
/// A left-to-right SVD sweep gives, at each bond, `center = U S V`. The
/// rows of `V` rotate the right-canonical bond basis onto the right Schmidt
/// vectors, so the gauged tensor of site `k` is `V_{k-1} B_k V_kᵀ`.
fn schmidt_gauge(chain: &MpsState) -> Result<(Vec<Tensor>, Vec<Vec<f64>>)> {
    let n = chain.n_sites();
    let mut s = chain.clone();
    s.canonicalize(0);
    let mut rotations: Vec<Tensor> = vec![Tensor::identity(1)];
    let mut lambdas = vec![vec![1.0]; n + 1];
    let mut center = s.tensor(0).clone();
    for k in 0..n - 1 {
        let [dl, d, dr] = [center.dims()[0], center.dims()[1], center.dims()[2]];
        let svd = crate::linalg::svd_truncate(&center.reshape(&[dl * d, dr])?, usize::MAX, 0.0)?;
        let norm = svd.kept_weight().sqrt();
        let sv: Vec<f64> = svd.singular_values.iter().map(|x| x / norm).collect();
        let mut c = contract(&svd.right_isometry, s.tensor(k + 1), &[(1, 0)])?;
        let width = c.len() / sv.len();
        for (row, x) in sv.iter().enumerate() {
            c.data_mut()[row * width..(row + 1) * width].iter_mut().for_each(|v| *v *= x);
        }
        rotations.push(svd.right_isometry);
        lambdas[k + 1] = sv;
        center = c;
    }
    rotations.push(Tensor::identity(1));
    let gauge = (0..n)
        .map(|k| {
            let t = contract(&rotations[k], s.tensor(k), &[(1, 0)])?;
            contract(&t, &rotations[k + 1], &[(2, 1)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((gauge, lambdas))
}
