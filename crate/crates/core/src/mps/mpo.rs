//! Matrix-product operators with tensors `W[left, out, in, right]`.

use crate::error::{Error, Result};
use crate::pauli::{self, Op};
use crate::tensor::Tensor;

/// `coef · ∏ ops`, where each entry is `(site, operator)`. Several
/// operators on one site are multiplied in list order (rightmost acts first).
#[derive(Clone, Debug, PartialEq)]
pub struct OpTerm {
    pub coef: f64,
    pub ops: Vec<(usize, Op)>,
}

impl OpTerm {
    pub fn new(coef: f64, ops: Vec<(usize, Op)>) -> Self {
        Self { coef, ops }
    }

    /// The operator on each site of the support, ascending by site.
    fn merged(&self) -> Vec<(usize, Op)> {
        let mut out: Vec<(usize, Op)> = Vec::new();
        let mut sorted = self.ops.clone();
        sorted.sort_by_key(|o| o.0);
        // stable sort keeps list order on a site; the product composes that order
        for (site, op) in sorted {
            match out.last_mut() {
                Some((s, acc)) if *s == site => *acc = pauli::mul(acc, &op),
                _ => out.push((site, op)),
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Mpo {
    tensors: Vec<Tensor>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Channel {
    Start,
    Done,
    Open(usize),
}

impl Mpo {
    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Input("an MPO needs at least one site".into()));
        }
        for (k, t) in tensors.iter().enumerate() {
            if t.rank() != 4 {
                return Err(Error::Dimension(format!("MPO site {k} has rank {}", t.rank())));
            }
        }
        if tensors[0].dims()[0] != 1 || tensors[tensors.len() - 1].dims()[3] != 1 {
            return Err(Error::Dimension("MPO boundary bonds must have extent 1".into()));
        }
        for k in 1..tensors.len() {
            if tensors[k - 1].dims()[3] != tensors[k].dims()[0] {
                return Err(Error::Dimension(format!("MPO bond mismatch at {k}")));
            }
        }
        Ok(Self { tensors })
    }

    pub fn identity(n_sites: usize) -> Self {
        let t = identity_site();
        Self { tensors: vec![t; n_sites] }
    }

    /// Exact MPO of a sum of Pauli-string terms, built as a finite-state
    /// automaton. At each cut the channels are "nothing placed yet", "term
    /// finished", and one channel per term whose support straddles the cut.
    /// Sites left or right of every term's support get bond-1 identities.
    pub fn from_terms(n_sites: usize, terms: &[OpTerm]) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::Input("an MPO needs at least one site".into()));
        }
        if terms.is_empty() {
            let mut tensors = vec![identity_site(); n_sites];
            tensors[0] = Tensor::zeros(&[1, 2, 2, 1]);
            return Self::from_tensors(tensors);
        }
        let mut supports: Vec<Vec<(usize, Op)>> = terms.iter().map(OpTerm::merged).collect();
        for s in &supports {
            if let Some(&(site, _)) = s.last() {
                if site >= n_sites {
                    return Err(Error::Input(format!("term acts on site {site} of {n_sites}")));
                }
            }
        }
        // constant terms sit at the leftmost site touched by anything else
        let anchor = supports.iter().filter_map(|s| s.first().map(|o| o.0)).min().unwrap_or(0);
        for s in supports.iter_mut() {
            if s.is_empty() {
                s.push((anchor, pauli::I));
            }
        }
        let first = |t: usize| supports[t].first().expect("non-empty").0;
        let last = |t: usize| supports[t].last().expect("non-empty").0;

        let channels: Vec<Vec<Channel>> = (0..=n_sites)
            .map(|c| {
                let mut ch = Vec::new();
                if (0..terms.len()).any(|t| first(t) >= c) {
                    ch.push(Channel::Start);
                }
                for t in 0..terms.len() {
                    if first(t) < c && c <= last(t) {
                        ch.push(Channel::Open(t));
                    }
                }
                if (0..terms.len()).any(|t| last(t) < c) {
                    ch.push(Channel::Done);
                }
                ch
            })
            .collect();

        let op_at = |t: usize, k: usize| -> Op {
            supports[t].iter().find(|o| o.0 == k).map(|o| o.1).unwrap_or(pauli::I)
        };
        let mut tensors = Vec::with_capacity(n_sites);
        for k in 0..n_sites {
            let (left, right) = (&channels[k], &channels[k + 1]);
            let mut w = Tensor::zeros(&[left.len(), 2, 2, right.len()]);
            let mut put = |a: usize, b: usize, op: &Op, c: f64| {
                for o in 0..2 {
                    for i in 0..2 {
                        let v = w.get(&[a, o, i, b]) + c * op[o][i];
                        w.set(&[a, o, i, b], v);
                    }
                }
            };
            for (a, from) in left.iter().enumerate() {
                for (b, to) in right.iter().enumerate() {
                    match (*from, *to) {
                        (Channel::Start, Channel::Start) | (Channel::Done, Channel::Done) => put(a, b, &pauli::I, 1.0),
                        (Channel::Start, Channel::Done) => {
                            for t in (0..terms.len()).filter(|&t| first(t) == k && last(t) == k) {
                                put(a, b, &op_at(t, k), terms[t].coef);
                            }
                        }
                        (Channel::Start, Channel::Open(t)) if first(t) == k => put(a, b, &op_at(t, k), terms[t].coef),
                        (Channel::Open(s), Channel::Open(t)) if s == t => put(a, b, &op_at(t, k), 1.0),
                        (Channel::Open(t), Channel::Done) if last(t) == k => put(a, b, &op_at(t, k), 1.0),
                        _ => {}
                    }
                }
            }
            tensors.push(w);
        }
        Self::from_tensors(tensors)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensor(&self, site: usize) -> &Tensor {
        &self.tensors[site]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.tensors.iter().map(|t| t.dims()[3])).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// True when site `k` carries a bond-1 identity.
    pub fn is_identity_site(&self, k: usize) -> bool {
        let t = &self.tensors[k];
        t.dims() == [1, 2, 2, 1] && t.max_abs_diff(&identity_site()) == 0.0
    }

    /// First and last site that is not a bond-1 identity, or `None` for the
    /// identity operator.
    pub fn support(&self) -> Option<(usize, usize)> {
        let first = (0..self.len()).find(|&k| !self.is_identity_site(k))?;
        let last = (0..self.len()).rev().find(|&k| !self.is_identity_site(k))?;
        Some((first, last))
    }

    /// Dense `2^N × 2^N` matrix, site 0 most significant.
    pub fn to_dense(&self) -> Tensor {
        let mut acc = Tensor::from_vec(&[1, 1, 1], vec![1.0]).expect("scalar");
        for w in &self.tensors {
            let (rows, cols) = (acc.dims()[0], acc.dims()[1]);
            let wr = w.dims()[3];
            // (rows, cols, wl) x (wl, out, in, wr) -> (rows, cols, out, in, wr)
            let t = crate::tensor::contract(&acc, w, &[(2, 0)]).expect("bond extents agree");
            acc = t.permute(&[0, 2, 1, 3, 4]).reshape(&[rows * 2, cols * 2, wr]).expect("reshape");
        }
        let n = acc.dims()[0];
        acc.reshape(&[n, n]).expect("reshape")
    }
}

fn identity_site() -> Tensor {
    Tensor::from_vec(&[1, 2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).expect("2x2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{X, Z};

    fn dense_term(n: usize, term: &OpTerm) -> Tensor {
        let dim = 1usize << n;
        let mut m = Tensor::identity(dim);
        m.scale(term.coef);
        for &(site, op) in term.ops.iter().rev() {
            let single = Tensor::from_fn(&[dim, dim], |i| {
                let bit = n - 1 - site;
                let (ro, ci) = (i[0], i[1]);
                if (ro ^ ci) & !(1 << bit) != 0 {
                    return 0.0;
                }
                op[(ro >> bit) & 1][(ci >> bit) & 1]
            });
            m = crate::tensor::contract(&single, &m, &[(1, 0)]).unwrap();
        }
        m
    }

    #[test]
    fn periodic_ising_chain_matches_dense_sum() {
        let n = 5;
        let mut terms = Vec::new();
        for j in 0..n {
            terms.push(OpTerm::new(-0.7, vec![(j, Z), ((j + 1) % n, Z)]));
            terms.push(OpTerm::new(-1.3, vec![(j, X)]));
        }
        terms.push(OpTerm::new(0.25, vec![]));
        let mpo = Mpo::from_terms(n, &terms).unwrap();
        let mut expected = Tensor::zeros(&[32, 32]);
        for t in &terms {
            expected.add_scaled(1.0, &dense_term(n, t)).unwrap();
        }
        assert!(mpo.to_dense().max_abs_diff(&expected) < 1e-12);
        assert!(mpo.bond_dims().iter().all(|&b| b <= 4));
    }

    #[test]
    fn local_operator_has_identity_outside_window() {
        let t = [OpTerm::new(0.5, vec![]), OpTerm::new(0.5, vec![(2, Z), (3, Z), (4, Z)])];
        let mpo = Mpo::from_terms(7, &t).unwrap();
        assert_eq!(mpo.support(), Some((2, 4)));
        assert_eq!(mpo.bond_dims(), vec![1, 1, 1, 2, 2, 1, 1, 1]);
    }

    #[test]
    fn repeated_site_multiplies() {
        let t = [OpTerm::new(1.0, vec![(0, X), (0, X), (1, Z)])];
        let mpo = Mpo::from_terms(2, &t).unwrap();
        let expected = dense_term(2, &OpTerm::new(1.0, vec![(1, Z)]));
        assert!(mpo.to_dense().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn identity_has_no_support() {
        assert_eq!(Mpo::identity(4).support(), None);
        assert!(Mpo::identity(3).to_dense().max_abs_diff(&Tensor::identity(8)) == 0.0);
    }
}
