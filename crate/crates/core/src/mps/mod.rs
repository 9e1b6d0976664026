//! Matrix-product states on the two-leg ladder.
//!
//! Site tensors have axes `(left bond, physical, right bond)`. The ladder is
//! flattened rung by rung: upper leg of rung `j` is site `2j`, lower leg is
//! site `2j + 1`. With this ordering the rung gates are nearest-neighbour and
//! any prefix of whole rungs (plus optionally one upper site) is a single
//! bond cut.
//!
//! A state stores `exp(log_norm)` times the chain of site tensors. Every
//! operation that changes the norm folds the change into `log_norm` and
//! leaves the canonical center tensor at unit norm, so amplitudes of long
//! heavily filtered chains never underflow.

mod io;
mod mpo;

use rand::Rng;

pub use self::io::{read_mps, write_mps, MPS_FORMAT_VERSION};
pub use self::mpo::{Mpo, OpTerm};

use crate::error::{Error, Result};
use crate::linalg::{lq_positive, qr_positive, singular_values, svd_truncate};
use crate::pauli::Op;
use crate::tensor::{contract, Tensor};

/// Bond-dimension and singular-value limits applied after every gate.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationPolicy {
    pub max_bond: usize,
    /// Singular values below `sv_cutoff` times the largest are dropped.
    pub sv_cutoff: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { max_bond: 200, sv_cutoff: 1e-6 }
    }
}

impl TruncationPolicy {
    pub fn new(max_bond: usize, sv_cutoff: f64) -> Result<Self> {
        let p = Self { max_bond, sv_cutoff };
        p.validate()?;
        Ok(p)
    }

    /// No truncation beyond exact zeros.
    pub fn exact() -> Self {
        Self { max_bond: usize::MAX, sv_cutoff: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_bond < 1 {
            return Err(Error::Input("max_bond must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.sv_cutoff) {
            return Err(Error::Input(format!("sv_cutoff must lie in [0, 1), got {}", self.sv_cutoff)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leg {
    Upper,
    Lower,
}

/// Mapping between ladder coordinates and MPS site indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteOrdering {
    rungs: usize,
}

impl SiteOrdering {
    pub fn new(rungs: usize) -> Self {
        Self { rungs }
    }

    pub fn rungs(&self) -> usize {
        self.rungs
    }

    pub fn n_sites(&self) -> usize {
        2 * self.rungs
    }

    pub fn site(&self, rung: usize, leg: Leg) -> usize {
        assert!(rung < self.rungs, "rung {rung} out of range");
        match leg {
            Leg::Upper => 2 * rung,
            Leg::Lower => 2 * rung + 1,
        }
    }

    pub fn locate(&self, site: usize) -> (usize, Leg) {
        assert!(site < self.n_sites(), "site {site} out of range");
        (site / 2, if site % 2 == 0 { Leg::Upper } else { Leg::Lower })
    }
}

/// Signed overlap kept in log form: `value = sign · exp(log_magnitude)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overlap {
    pub log_magnitude: f64,
    /// `+1`, `-1`, or `0` for an exactly vanishing overlap.
    pub sign: i8,
}

impl Overlap {
    pub fn zero() -> Self {
        Self { log_magnitude: f64::NEG_INFINITY, sign: 0 }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_magnitude.exp()
        }
    }

    /// `self / other`, computed without forming either value.
    pub fn ratio(&self, other: &Overlap) -> f64 {
        assert!(other.sign != 0, "division by a vanishing overlap");
        if self.sign == 0 {
            return 0.0;
        }
        f64::from(self.sign * other.sign) * (self.log_magnitude - other.log_magnitude).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Absorb {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct MpsState {
    tensors: Vec<Tensor>,
    center: Option<usize>,
    log_norm: f64,
}

impl MpsState {
    /// Validates bond consistency; the resulting state has no canonical center.
    pub fn from_tensors(tensors: Vec<Tensor>, log_norm: f64) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Input("an MPS needs at least one site".into()));
        }
        for (k, t) in tensors.iter().enumerate() {
            if t.rank() != 3 {
                return Err(Error::Dimension(format!("site {k} tensor has rank {}", t.rank())));
            }
        }
        if tensors[0].dims()[0] != 1 || tensors[tensors.len() - 1].dims()[2] != 1 {
            return Err(Error::Dimension("boundary bonds must have extent 1".into()));
        }
        for k in 1..tensors.len() {
            if tensors[k - 1].dims()[2] != tensors[k].dims()[0] {
                return Err(Error::Dimension(format!("bond mismatch between sites {} and {k}", k - 1)));
            }
        }
        if !log_norm.is_finite() {
            return Err(Error::Input("log_norm must be finite".into()));
        }
        Ok(Self { tensors, center: None, log_norm })
    }

    /// Bond-1 product state. Each local vector is normalized and its norm
    /// moved into `log_norm`.
    pub fn from_product(local_states: &[[f64; 2]]) -> Result<Self> {
        let mut log_norm = 0.0;
        let mut tensors = Vec::with_capacity(local_states.len());
        for (k, v) in local_states.iter().enumerate() {
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Input(format!("local state at site {k} is zero or not finite")));
            }
            log_norm += n.ln();
            tensors.push(Tensor::from_vec(&[1, 2, 1], vec![v[0] / n, v[1] / n])?);
        }
        let mut s = Self::from_tensors(tensors, log_norm)?;
        s.center = Some(0);
        Ok(s)
    }

    /// Product over rungs of two-site vectors indexed `2·s_upper + s_lower`.
    /// Bond dimension is 2 inside a rung and 1 between rungs.
    pub fn from_rung_product(rung_vectors: &[[f64; 4]]) -> Result<Self> {
        let mut log_norm = 0.0;
        let mut tensors = Vec::with_capacity(2 * rung_vectors.len());
        for (j, v) in rung_vectors.iter().enumerate() {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Input(format!("rung vector {j} is zero or not finite")));
            }
            log_norm += n.ln();
            // upper[0, s, a] = δ(s, a); lower[a, t, 0] = v[a, t] / n
            tensors.push(Tensor::from_fn(&[1, 2, 2], |i| if i[1] == i[2] { 1.0 } else { 0.0 }));
            tensors.push(Tensor::from_fn(&[2, 2, 1], |i| v[2 * i[0] + i[1]] / n));
        }
        Self::from_tensors(tensors, log_norm)
    }

    /// Exact MPS of a dense state vector (site 0 is the most significant
    /// binary digit).
    pub fn from_dense(amplitudes: &[f64], n_sites: usize) -> Result<Self> {
        if amplitudes.len() != 1usize << n_sites {
            return Err(Error::Dimension(format!(
                "{} amplitudes cannot describe {n_sites} spins",
                amplitudes.len()
            )));
        }
        let n = amplitudes.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::Input("zero state vector".into()));
        }
        let mut rest = Tensor::from_vec(&[1, amplitudes.len()], amplitudes.iter().map(|x| x / n).collect())?;
        let mut tensors = Vec::with_capacity(n_sites);
        for k in 0..n_sites - 1 {
            let dl = rest.dims()[0];
            let cols = rest.len() / (dl * 2);
            let m = rest.reshape(&[dl * 2, cols])?;
            let svd = svd_truncate(&m, usize::MAX, 0.0)?;
            let r = svd.rank();
            tensors.push(svd.left_isometry.reshape(&[dl, 2, r])?);
            let mut sv = svd.right_isometry;
            for (row, s) in svd.singular_values.iter().enumerate() {
                sv.data_mut()[row * cols..(row + 1) * cols].iter_mut().for_each(|x| *x *= s);
            }
            rest = sv;
            let _ = k;
        }
        let dl = rest.dims()[0];
        tensors.push(rest.reshape(&[dl, 2, 1])?);
        let mut s = Self::from_tensors(tensors, n.ln())?;
        s.center = Some(n_sites - 1);
        Ok(s)
    }

    /// Random state with bonds capped at `bond` (and at the exact maximum
    /// for the chain length). Entries uniform in `[-1, 1)`.
    pub fn random<R: Rng>(n_sites: usize, bond: usize, rng: &mut R) -> Self {
        let bond_at = |cut: usize| -> usize {
            let exact = 1usize << cut.min(n_sites - cut).min(30);
            exact.min(bond).max(1)
        };
        let tensors = (0..n_sites)
            .map(|k| {
                let dims = [bond_at(k), 2, bond_at(k + 1)];
                Tensor::from_fn(&dims, |_| rng.random_range(-1.0..1.0))
            })
            .collect();
        let mut s = Self::from_tensors(tensors, 0.0).expect("consistent bonds");
        s.canonicalize(0);
        s.log_norm = 0.0;
        s
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensor(&self, site: usize) -> &Tensor {
        &self.tensors[site]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn set_log_norm(&mut self, log_norm: f64) {
        assert!(log_norm.is_finite());
        self.log_norm = log_norm;
    }

    /// Extents of the `n_sites + 1` bonds including both boundaries.
    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.tensors.iter().map(|t| t.dims()[2])).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.tensors.iter().map(|t| t.dims()[2]).max().unwrap_or(1)
    }

    pub(crate) fn set_center(&mut self, center: Option<usize>) {
        self.center = center;
    }

    /// Replaces sites `left, left+1` by the truncated SVD of a two-site
    /// block `(dl·d1) × (d2·dr)`. The center goes to `left + 1` when
    /// `to_right`, else to `left`.
    pub(crate) fn split_two_site(
        &mut self,
        left: usize,
        block: &Tensor,
        shape: [usize; 4],
        trunc: &TruncationPolicy,
        to_right: bool,
    ) -> Result<f64> {
        let absorb = if to_right { Absorb::Right } else { Absorb::Left };
        self.split_block(left, block, shape, trunc, absorb)
    }

    /// Moves the orthogonality center of site `i` one step right.
    fn qr_step_right(&mut self, i: usize) {
        let [dl, d, dr] = dims3(&self.tensors[i]);
        let m = std::mem::replace(&mut self.tensors[i], Tensor::zeros(&[0]))
            .reshape(&[dl * d, dr])
            .expect("site reshape");
        let (q, r) = qr_positive(&m).expect("matrix input");
        let k = q.dims()[1];
        self.tensors[i] = q.reshape(&[dl, d, k]).expect("site reshape");
        self.tensors[i + 1] = contract(&r, &self.tensors[i + 1], &[(1, 0)]).expect("bond extents agree");
    }

    /// Moves the orthogonality center of site `i` one step left.
    fn lq_step_left(&mut self, i: usize) {
        let [dl, d, dr] = dims3(&self.tensors[i]);
        let m = std::mem::replace(&mut self.tensors[i], Tensor::zeros(&[0]))
            .reshape(&[dl, d * dr])
            .expect("site reshape");
        let (l, q) = lq_positive(&m).expect("matrix input");
        let k = q.dims()[0];
        self.tensors[i] = q.reshape(&[k, d, dr]).expect("site reshape");
        self.tensors[i - 1] = contract(&self.tensors[i - 1], &l, &[(2, 0)]).expect("bond extents agree");
    }

    /// Brings the state into mixed canonical form with center `center`
    /// and rescales the center tensor to unit norm.
    pub fn canonicalize(&mut self, center: usize) {
        assert!(center < self.n_sites(), "center {center} out of range");
        match self.center {
            None => {
                for i in 0..center {
                    self.qr_step_right(i);
                }
                for i in (center + 1..self.n_sites()).rev() {
                    self.lq_step_left(i);
                }
            }
            Some(c) if c < center => (c..center).for_each(|i| self.qr_step_right(i)),
            Some(c) => (center + 1..=c).rev().for_each(|i| self.lq_step_left(i)),
        }
        self.center = Some(center);
        let n = self.tensors[center].norm();
        if n > 0.0 && n.is_finite() {
            self.tensors[center].scale(1.0 / n);
            self.log_norm += n.ln();
        }
    }

    /// Splits a two-site block `(dl·d1) × (d2·dr)` at bond `left | left+1`.
    /// Returns the relative discarded weight.
    fn split_block(
        &mut self,
        left: usize,
        block: &Tensor,
        shape: [usize; 4],
        trunc: &TruncationPolicy,
        absorb: Absorb,
    ) -> Result<f64> {
        let [dl, d1, d2, dr] = shape;
        let svd = svd_truncate(block, trunc.max_bond, trunc.sv_cutoff)?;
        let kept = svd.kept_weight();
        let norm = kept.sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let rel_discarded = svd.discarded_weight / (kept + svd.discarded_weight);
        let k = svd.rank();
        let s: Vec<f64> = svd.singular_values.iter().map(|x| x / norm).collect();
        let mut u = svd.left_isometry;
        let mut vt = svd.right_isometry;
        match absorb {
            Absorb::Right => {
                let cols = d2 * dr;
                for (row, sv) in s.iter().enumerate() {
                    vt.data_mut()[row * cols..(row + 1) * cols].iter_mut().for_each(|x| *x *= sv);
                }
                self.center = Some(left + 1);
            }
            Absorb::Left => {
                let rows = dl * d1;
                for r in 0..rows {
                    u.data_mut()[r * k..(r + 1) * k].iter_mut().zip(&s).for_each(|(x, sv)| *x *= sv);
                }
                self.center = Some(left);
            }
        }
        self.tensors[left] = u.reshape(&[dl, d1, k])?;
        self.tensors[left + 1] = vt.reshape(&[k, d2, dr])?;
        self.log_norm += norm.ln();
        Ok(rel_discarded)
    }

    /// Applies a `d²×d²` gate (row = output pair `(s_left, s_right)`) to sites
    /// `left_site` and `left_site + 1`, truncates, and leaves the center at
    /// `left_site + 1`. Returns the relative discarded weight.
    pub fn apply_two_site_gate(&mut self, left_site: usize, gate: &Tensor, trunc: &TruncationPolicy) -> Result<f64> {
        if left_site + 1 >= self.n_sites() {
            return Err(Error::Input(format!("two-site gate at {left_site} exceeds the chain")));
        }
        self.canonicalize(left_site);
        let [dl, d1, _] = dims3(&self.tensors[left_site]);
        let [_, d2, dr] = dims3(&self.tensors[left_site + 1]);
        if gate.dims() != [d1 * d2, d1 * d2] {
            return Err(Error::Dimension(format!("gate dims {:?} for a {d1}×{d2} pair", gate.dims())));
        }
        let theta = contract(&self.tensors[left_site], &self.tensors[left_site + 1], &[(2, 0)])?
            .reshape(&[dl, d1 * d2, dr])?;
        let block = contract(gate, &theta, &[(1, 1)])?
            .permute(&[1, 0, 2])
            .reshape(&[dl * d1, d2 * dr])?;
        self.split_block(left_site, &block, [dl, d1, d2, dr], trunc, Absorb::Right)
    }

    /// Applies a single-site operator and renormalizes.
    pub fn apply_local(&mut self, site: usize, op: &Op) -> Result<()> {
        self.canonicalize(site);
        self.tensors[site] = apply_op_to_site(&self.tensors[site], op);
        let n = self.tensors[site].norm();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        self.tensors[site].scale(1.0 / n);
        self.log_norm += n.ln();
        Ok(())
    }

    /// Applies an MPO and recompresses. Only the window of sites on which the
    /// MPO is not a bond-1 identity is touched. The center ends at the last
    /// site of that window. Returns the summed relative discarded weight.
    pub fn apply_mpo(&mut self, o: &Mpo, trunc: &TruncationPolicy) -> Result<f64> {
        if o.len() != self.n_sites() {
            return Err(Error::Dimension(format!("MPO has {} sites, state has {}", o.len(), self.n_sites())));
        }
        let Some((first, last)) = o.support() else {
            return Ok(0.0);
        };
        self.canonicalize(first);
        for k in first..=last {
            let w = o.tensor(k);
            let a = &self.tensors[k];
            let [wl, d_out, d_in, wr] = [w.dims()[0], w.dims()[1], w.dims()[2], w.dims()[3]];
            let [dl, d, dr] = dims3(a);
            if d != d_in {
                return Err(Error::Dimension(format!("site {k}: physical {d} vs MPO input {d_in}")));
            }
            // (wl, out, wr, dl, dr) -> (dl, wl, out, dr, wr)
            self.tensors[k] = contract(w, a, &[(2, 1)])?
                .permute(&[3, 0, 1, 4, 2])
                .reshape(&[dl * wl, d_out, dr * wr])?;
        }
        for i in (first + 1..=last).rev() {
            self.lq_step_left(i);
        }
        let mut discarded = 0.0;
        if first == last {
            let n = self.tensors[first].norm();
            if !(n > 0.0) {
                return Err(Error::ZeroNorm);
            }
            self.tensors[first].scale(1.0 / n);
            self.log_norm += n.ln();
        }
        for i in first..last {
            let [dl, d1, dm] = dims3(&self.tensors[i]);
            let [_, d2, dr] = dims3(&self.tensors[i + 1]);
            let m = self.tensors[i].clone().reshape(&[dl * d1, dm])?;
            let svd = svd_truncate(&m, trunc.max_bond, trunc.sv_cutoff)?;
            let kept = svd.kept_weight();
            let norm = kept.sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::ZeroNorm);
            }
            discarded += svd.discarded_weight / (kept + svd.discarded_weight);
            let k = svd.rank();
            let mut svt = svd.right_isometry;
            for (row, s) in svd.singular_values.iter().enumerate() {
                let f = s / norm;
                svt.data_mut()[row * dm..(row + 1) * dm].iter_mut().for_each(|x| *x *= f);
            }
            self.tensors[i] = svd.left_isometry.reshape(&[dl, d1, k])?;
            self.tensors[i + 1] = contract(&svt, &self.tensors[i + 1], &[(1, 0)])?;
            debug_assert_eq!(self.tensors[i + 1].dims(), &[k, d2, dr]);
            self.log_norm += norm.ln();
        }
        self.center = Some(last);
        Ok(discarded)
    }

    /// Dense amplitudes including the `exp(log_norm)` factor. Exponential
    /// in the number of sites; meant for small test systems.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut acc = Tensor::from_vec(&[1, 1], vec![self.log_norm.exp()]).expect("scalar");
        for t in &self.tensors {
            let [dl, d, dr] = dims3(t);
            let rows = acc.dims()[0];
            let next = contract(&acc, t, &[(1, 0)]).expect("bond extents agree");
            acc = next.reshape(&[rows * d, dr]).expect("reshape");
            let _ = dl;
        }
        acc.into_data()
    }

    /// Squared norm `⟨s|s⟩` in log form (`2 · log‖s‖`).
    pub fn log_norm_squared(&self) -> f64 {
        inner(self, self).log_magnitude
    }

    /// Singular values across the bond between sites `bond - 1` and `bond`
    /// of the normalized state.
    pub fn bond_singular_values(&self, bond: usize) -> Result<Vec<f64>> {
        if bond == 0 || bond >= self.n_sites() {
            return Err(Error::Input(format!("bond {bond} is not an interior cut")));
        }
        let mut s = self.clone();
        s.canonicalize(bond);
        center_singular_values(&s.tensors[bond])
    }

    /// Von Neumann entropy (natural log) of the first `n_sites` sites of the
    /// normalized state.
    pub fn prefix_entropy(&self, n_sites: usize) -> Result<f64> {
        Ok(entropy_of(&self.bond_singular_values(n_sites)?))
    }

    /// Prefix entropies at several cuts with one canonicalization sweep.
    pub fn prefix_entropies(&self, cuts: &[usize]) -> Result<Vec<f64>> {
        let mut order: Vec<usize> = (0..cuts.len()).collect();
        order.sort_by_key(|&i| cuts[i]);
        let mut s = self.clone();
        let mut out = vec![0.0; cuts.len()];
        for i in order {
            let cut = cuts[i];
            if cut == 0 || cut >= self.n_sites() {
                return Err(Error::Input(format!("cut {cut} is not an interior bond")));
            }
            s.canonicalize(cut);
            out[i] = entropy_of(&center_singular_values(&s.tensors[cut])?);
        }
        Ok(out)
    }

    /// `⟨s|O|s⟩ / ⟨s|s⟩` for a product of single-site operators.
    pub fn expectation(&self, ops: &[(usize, Op)]) -> f64 {
        let num = sandwich(self, ops, self);
        let den = inner(self, self);
        num.ratio(&den)
    }

    /// Normalized expectations of `head · probe` for each probe, where every
    /// head site lies left of every probe site and probes are ordered by
    /// their first site. One left-to-right pass, `O(N · D³)` in total.
    pub fn windowed_expectations(&self, head: &[(usize, Op)], probes: &[Vec<(usize, Op)>]) -> Result<Vec<f64>> {
        let n = self.n_sites();
        let head_first = head.iter().map(|h| h.0).min().unwrap_or(0);
        let head_last = head.iter().map(|h| h.0).max().unwrap_or(0);
        let mut prev_start = head_last + 1;
        for p in probes {
            let start = p.iter().map(|x| x.0).min().ok_or_else(|| Error::Input("empty probe".into()))?;
            let end = p.iter().map(|x| x.0).max().unwrap_or(start);
            if start <= head_last && !head.is_empty() || start < prev_start.min(start.max(prev_start)) || end >= n {
                return Err(Error::Input("probes must lie right of the head and be ordered".into()));
            }
            prev_start = start;
        }

        let mut s = self.clone();
        s.canonicalize(head_first);
        let site_op = |ops: &[(usize, Op)], k: usize| ops.iter().find(|o| o.0 == k).map(|o| o.1);

        let d0 = s.tensors[head_first].dims()[0];
        let mut env = Tensor::identity(d0);
        let mut pos = head_first;
        if !head.is_empty() {
            while pos <= head_last {
                env = transfer(&env, &s.tensors[pos], site_op(head, pos).as_ref());
                pos += 1;
            }
        }
        let mut out = Vec::with_capacity(probes.len());
        for p in probes {
            let start = p.iter().map(|x| x.0).min().expect("checked");
            let end = p.iter().map(|x| x.0).max().expect("checked");
            while pos < start {
                env = transfer(&env, &s.tensors[pos], None);
                pos += 1;
            }
            let mut e = env.clone();
            for k in start..=end {
                e = transfer(&e, &s.tensors[k], site_op(p, k).as_ref());
            }
            let dim = e.dims()[0];
            out.push((0..dim).map(|i| e.get(&[i, i])).sum());
        }
        Ok(out)
    }
}

fn dims3(t: &Tensor) -> [usize; 3] {
    let d = t.dims();
    [d[0], d[1], d[2]]
}

/// `A'[l, s, r] = Σ_t op[s][t] A[l, t, r]`.
pub(crate) fn apply_op_to_site(a: &Tensor, op: &Op) -> Tensor {
    let [dl, d, dr] = dims3(a);
    assert_eq!(d, 2, "single-site operators act on spin-1/2 sites");
    let src = a.data();
    let mut out = vec![0.0; src.len()];
    for l in 0..dl {
        for s in 0..2 {
            let dst = &mut out[(l * 2 + s) * dr..(l * 2 + s + 1) * dr];
            for t in 0..2 {
                let c = op[s][t];
                if c != 0.0 {
                    let row = &src[(l * 2 + t) * dr..(l * 2 + t + 1) * dr];
                    dst.iter_mut().zip(row).for_each(|(o, x)| *o += c * x);
                }
            }
        }
    }
    Tensor::from_vec(&[dl, 2, dr], out).expect("same size")
}

/// One step of the `⟨s|O|s⟩` transfer: `E'[b, b'] = Σ A[a,s,b] E[a,a'] (O A)[a',s,b']`.
fn transfer(env: &Tensor, a: &Tensor, op: Option<&Op>) -> Tensor {
    let ket = match op {
        Some(o) => apply_op_to_site(a, o),
        None => a.clone(),
    };
    let t = contract(env, &ket, &[(1, 0)]).expect("bond extents agree");
    contract(a, &t, &[(0, 0), (1, 1)]).expect("bond extents agree")
}

fn center_singular_values(center: &Tensor) -> Result<Vec<f64>> {
    let [dl, d, dr] = dims3(center);
    singular_values(&center.clone().reshape(&[dl, d * dr])?)
}

/// `−Σ λ ln λ` over the normalized squared singular values.
pub fn entropy_of(singular_values: &[f64]) -> f64 {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return 0.0;
    }
    singular_values
        .iter()
        .map(|s| s * s / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// `⟨a|O|b⟩` in log-sign form, including both states' `log_norm`.
fn sandwich(a: &MpsState, ops: &[(usize, Op)], b: &MpsState) -> Overlap {
    assert_eq!(a.n_sites(), b.n_sites(), "states must have equal length");
    let mut env = Tensor::from_vec(&[1, 1], vec![1.0]).expect("scalar");
    let mut log_acc = 0.0;
    for k in 0..a.n_sites() {
        let op = ops.iter().find(|o| o.0 == k).map(|o| o.1);
        let ket = match op {
            Some(o) => apply_op_to_site(&b.tensors[k], &o),
            None => b.tensors[k].clone(),
        };
        let t = contract(&env, &ket, &[(1, 0)]).expect("bond extents agree");
        env = contract(&a.tensors[k], &t, &[(0, 0), (1, 1)]).expect("bond extents agree");
        let scale = env.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return Overlap::zero();
        }
        env.scale(1.0 / scale);
        log_acc += scale.ln();
    }
    let v = env.data()[0];
    if v == 0.0 {
        return Overlap::zero();
    }
    Overlap {
        log_magnitude: v.abs().ln() + log_acc + a.log_norm + b.log_norm,
        sign: if v > 0.0 { 1 } else { -1 },
    }
}

/// `⟨a|b⟩` in log-sign form, including both states' `log_norm`.
pub fn inner(a: &MpsState, b: &MpsState) -> Overlap {
    sandwich(a, &[], b)
}

/// `⟨a|O|b⟩` for a product of single-site operators.
pub fn matrix_element(a: &MpsState, ops: &[(usize, Op)], b: &MpsState) -> Overlap {
    sandwich(a, ops, b)
}
