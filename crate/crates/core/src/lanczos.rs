//! Restarted Lanczos iteration for the lowest eigenpair of a symmetric
//! operator given only as a matrix-vector product.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Maximum Krylov subspace size before restarting from the current Ritz vector.
const KRYLOV_DIM: usize = 32;

/// Outcome of a Lanczos run, converged or not.
#[derive(Clone, Debug)]
pub struct LanczosOutcome {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖A v − λ v‖` of the returned pair.
    pub residual: f64,
    pub matvecs: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Deterministic, non-degenerate start vector.
fn default_start(dim: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    (0..dim)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL
/// iterations. `diag` has length `n`, `off[i]` couples `i` and `i + 1`.
/// Returns eigenvalues (unsorted) and eigenvectors as columns in row-major
/// `n × n` storage.
pub(crate) fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[k * n + i + 1];
                    let zk = z[k * n + i];
                    z[k * n + i + 1] = s * zk + c * zk1;
                    z[k * n + i] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    (d, z)
}

/// Lowest eigenpair of a symmetric operator, starting from `start`.
///
/// Never fails: the best pair found is returned with `converged = false`
/// when `max_matvecs` is exhausted. Convergence means
/// `‖A v − λ v‖ ≤ tol · max(1, |λ|max)` where `|λ|max` is the largest Ritz
/// value magnitude seen, a cheap estimate of the operator scale.
pub fn lanczos_lowest<F>(mut apply: F, start: &[f64], tol: f64, max_matvecs: usize) -> LanczosOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = start.len();
    assert!(dim >= 1, "operator dimension must be at least 1");
    let mut x = start.to_vec();
    let mut nx = norm(&x);
    if !(nx > 0.0) || !nx.is_finite() {
        x = default_start(dim);
        nx = norm(&x);
    }
    x.iter_mut().for_each(|v| *v /= nx);

    let mut w = vec![0.0; dim];
    let mut matvecs = 0usize;
    let mut scale = 1.0f64;
    let mut best: Option<LanczosOutcome> = None;

    loop {
        let m_max = KRYLOV_DIM.min(dim);
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alphas = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);

        for k in 0..m_max {
            apply(&basis[k], &mut w);
            matvecs += 1;
            let alpha = dot(&w, &basis[k]);
            alphas.push(alpha);
            // Full reorthogonalization, twice.
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
            }
            let beta = norm(&w);
            if k + 1 == m_max || beta <= 1e-13 * scale.max(alpha.abs()) {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|v| v / beta).collect());
            if matvecs >= max_matvecs {
                break;
            }
        }

        let m = alphas.len();
        let (evals, evecs) = tridiagonal_eigen(&alphas, &betas);
        let (imin, _) = evals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty Krylov space");
        scale = scale.max(evals.iter().fold(0.0f64, |a, v| a.max(v.abs())));

        let mut ritz = vec![0.0; dim];
        for (j, b) in basis.iter().take(m).enumerate() {
            let c = evecs[j * m + imin];
            ritz.iter_mut().zip(b).for_each(|(r, bi)| *r += c * bi);
        }
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|v| *v /= nr);

        apply(&ritz, &mut w);
        matvecs += 1;
        let value = dot(&ritz, &w);
        let residual = w.iter().zip(&ritz).map(|(a, v)| (a - value * v).powi(2)).sum::<f64>().sqrt();

        let converged = residual <= tol * scale;
        let better = best.as_ref().is_none_or(|b| residual < b.residual);
        if converged || better {
            best = Some(LanczosOutcome { value, vector: ritz.clone(), residual, matvecs, converged });
        }
        if converged || matvecs >= max_matvecs || dim == 1 {
            let mut out = best.expect("at least one restart");
            out.matvecs = matvecs;
            return out;
        }
        x = ritz;
    }
}

/// Lowest eigenpair `(energy, normalized vector)` of a symmetric operator of
/// dimension `dim`. Fails with [`Error::Convergence`] if the residual does not
/// reach `tol` (relative to the operator scale) within `max_iter`
/// matrix-vector products.
pub fn lanczos_ground<F>(apply: F, dim: usize, tol: f64, max_iter: usize) -> Result<(f64, Tensor)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::Input("operator dimension must be at least 1".into()));
    }
    let out = lanczos_lowest(apply, &default_start(dim), tol, max_iter);
    if !out.converged {
        return Err(Error::Convergence { iterations: out.matvecs, residual: out.residual });
    }
    Ok((out.value, Tensor::from_vec(&[dim], out.vector)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_apply(m: &Tensor) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        let n = m.dims()[0];
        move |x, y| {
            for i in 0..n {
                y[i] = (0..n).map(|j| m.get(&[i, j]) * x[j]).sum();
            }
        }
    }

    fn random_symmetric(n: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::from_fn(&[n, n], |_| rng.random_range(-1.0..1.0));
        Tensor::from_fn(&[n, n], |i| a.get(&[i[0], i[1]]) + a.get(&[i[1], i[0]]))
    }

    #[test]
    fn pauli_z() {
        let z = Tensor::matrix([[1.0, 0.0], [0.0, -1.0]]);
        let (e, v) = lanczos_ground(dense_apply(&z), 2, 1e-12, 100).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        assert!(v.data()[0].abs() < 1e-8);
        assert!((v.data()[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_x() {
        let x = Tensor::matrix([[0.0, 1.0], [1.0, 0.0]]);
        let (e, v) = lanczos_ground(dense_apply(&x), 2, 1e-12, 100).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sign = v.data()[0].signum();
        assert!((v.data()[0] - sign * s).abs() < 1e-8);
        assert!((v.data()[1] + sign * s).abs() < 1e-8);
    }

    #[test]
    fn one_dimensional_operator() {
        let (e, v) = lanczos_ground(|x, y| y[0] = 3.5 * x[0], 1, 1e-12, 10).unwrap();
        assert_eq!(e, 3.5);
        assert!((v.data()[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_symmetric_matches_dense_eigensolver() {
        let m = random_symmetric(50, 42);
        let (evals, _) = symmetric_eigen(&m).unwrap();
        let (e, v) = lanczos_ground(dense_apply(&m), 50, 1e-11, 5000).unwrap();
        assert!((e - evals[0]).abs() < 1e-9, "{e} vs {}", evals[0]);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_is_symmetric_stochastically() {
        let m = random_symmetric(20, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut ax = vec![0.0; 20];
        let mut ay = vec![0.0; 20];
        let mut apply = dense_apply(&m);
        apply(&x, &mut ax);
        apply(&y, &mut ay);
        assert!((dot(&x, &ay) - dot(&ax, &y)).abs() < 1e-12);
    }

    #[test]
    fn exhausted_budget_reports_best_residual() {
        let m = random_symmetric(200, 8);
        match lanczos_ground(dense_apply(&m), 200, 1e-14, 3) {
            Err(Error::Convergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected a convergence error, got {other:?}"),
        }
    }

    #[test]
    fn tridiagonal_solver_matches_dense() {
        let d = [1.0, -2.0, 0.5, 3.0, 0.0];
        let e = [0.7, -0.3, 1.1, 0.2];
        let (mut vals, _) = tridiagonal_eigen(&d, &e);
        vals.sort_by(f64::total_cmp);
        let full = Tensor::from_fn(&[5, 5], |i| match i[0] as isize - i[1] as isize {
            0 => d[i[0]],
            1 => e[i[1]],
            -1 => e[i[0]],
            _ => 0.0,
        });
        let (dense, _) = symmetric_eigen(&full).unwrap();
        for (a, b) in vals.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn energy_is_below_any_rayleigh_quotient(seed in 0u64..10_000) {
            let m = random_symmetric(12, seed);
            let (e, _) = lanczos_ground(dense_apply(&m), 12, 1e-10, 2000).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut ax = vec![0.0; 12];
            dense_apply(&m)(&x, &mut ax);
            let rq = dot(&x, &ax) / dot(&x, &x);
            proptest::prop_assert!(e <= rq + 1e-10);
        }
    }
}
