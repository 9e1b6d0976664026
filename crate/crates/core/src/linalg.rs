//! Matrix factorizations used by the tensor-network code.

use faer::MatRef;

use crate::error::{Error, Result};
use crate::tensor::{tensor_from_mat, Tensor};

/// A truncated singular value decomposition `m ≈ U · diag(S) · Vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `rows × k`, orthonormal columns.
    pub left_isometry: Tensor,
    /// Non-increasing, non-negative, length `k ≥ 1`.
    pub singular_values: Vec<f64>,
    /// `k × cols`, orthonormal rows.
    pub right_isometry: Tensor,
    /// Sum of squared singular values that were dropped.
    pub discarded_weight: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Squared norm of the retained part.
    pub fn kept_weight(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum()
    }
}

fn mat_view(m: &Tensor) -> Result<MatRef<'_, f64>> {
    if m.rank() != 2 {
        return Err(Error::Dimension(format!("expected a matrix, got dims {:?}", m.dims())));
    }
    Ok(m.as_mat(m.dims()[0]))
}

/// Number of singular values retained under `max_rank` and a cutoff
/// relative to the largest value. Always at least one.
pub fn truncation_rank(singular_values: &[f64], max_rank: usize, cutoff: f64) -> usize {
    let largest = singular_values.first().copied().unwrap_or(0.0);
    if largest <= 0.0 {
        return 1;
    }
    let above = singular_values.iter().take_while(|&&s| s >= cutoff * largest).count();
    above.min(max_rank).max(1).min(singular_values.len().max(1))
}

/// SVD of a rank-2 tensor, keeping at most `max_rank` values and dropping any
/// value below `cutoff` times the largest one.
pub fn svd_truncate(m: &Tensor, max_rank: usize, cutoff: f64) -> Result<SvdResult> {
    if max_rank == 0 {
        return Err(Error::Input("max_rank must be at least 1".into()));
    }
    if !(cutoff >= 0.0) {
        return Err(Error::Input(format!("cutoff must be non-negative, got {cutoff}")));
    }
    let view = mat_view(m)?;
    let (rows, cols) = (view.nrows(), view.ncols());
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("cannot decompose an empty matrix".into()));
    }

    let svd = view.thin_svd().map_err(|e| Error::Linalg(format!("svd: {e:?}")))?;
    let s_all: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let keep = truncation_rank(&s_all, max_rank, cutoff);
    let discarded_weight = s_all[keep..].iter().map(|s| s * s).sum();

    let u = svd.U().subcols(0, keep);
    let v = svd.V().subcols(0, keep);
    Ok(SvdResult {
        left_isometry: tensor_from_mat(u),
        singular_values: s_all[..keep].to_vec(),
        right_isometry: tensor_from_mat(v.transpose()),
        discarded_weight,
    })
}

/// All singular values of a matrix, non-increasing.
pub fn singular_values(m: &Tensor) -> Result<Vec<f64>> {
    let view = mat_view(m)?;
    view.singular_values().map_err(|e| Error::Linalg(format!("svd: {e:?}")))
}

/// Thin QR `m = Q R` with `diag(R) ≥ 0`, so that an input with orthonormal
/// columns comes back as `Q = m`, `R = I`.
pub fn qr_positive(m: &Tensor) -> Result<(Tensor, Tensor)> {
    let view = mat_view(m)?;
    let (rows, cols) = (view.nrows(), view.ncols());
    let k = rows.min(cols);
    let qr = view.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R();

    let mut q_t = tensor_from_mat(q.as_ref());
    let mut r_t = tensor_from_mat(r);
    for i in 0..k {
        if r_t.get(&[i, i]) < 0.0 {
            for c in 0..cols {
                let v = r_t.get(&[i, c]);
                r_t.set(&[i, c], -v);
            }
            for row in 0..rows {
                let v = q_t.get(&[row, i]);
                q_t.set(&[row, i], -v);
            }
        }
    }
    Ok((q_t, r_t))
}

/// Thin LQ `m = L Q` with orthonormal rows in `Q` and `diag(L) ≥ 0`.
pub fn lq_positive(m: &Tensor) -> Result<(Tensor, Tensor)> {
    let (q, r) = qr_positive(&m.permute(&[1, 0]))?;
    Ok((r.permute(&[1, 0]), q.permute(&[1, 0])))
}

/// Eigen-decomposition of a dense symmetric matrix, eigenvalues ascending,
/// eigenvectors as columns of the returned `n × n` tensor.
pub fn symmetric_eigen(m: &Tensor) -> Result<(Vec<f64>, Tensor)> {
    let view = mat_view(m)?;
    if view.nrows() != view.ncols() {
        return Err(Error::Dimension("eigen-decomposition needs a square matrix".into()));
    }
    let evd = view
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("eigen: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, tensor_from_mat(evd.U())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::contract;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dims: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(dims, |_| rng.random_range(-1.0..1.0))
    }

    fn reconstruct(svd: &SvdResult) -> Tensor {
        let mut us = svd.left_isometry.clone();
        let k = svd.rank();
        let rows = us.dims()[0];
        for r in 0..rows {
            for c in 0..k {
                let v = us.get(&[r, c]) * svd.singular_values[c];
                us.set(&[r, c], v);
            }
        }
        contract(&us, &svd.right_isometry, &[(1, 0)]).unwrap()
    }

    fn isometry_error(m: &Tensor, axis: usize) -> f64 {
        let g = contract(m, m, &[(axis, axis)]).unwrap();
        g.max_abs_diff(&Tensor::identity(g.dims()[0]))
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [1.0, -2.0, 0.5];
        let v = [0.3, 0.7];
        let m = Tensor::from_fn(&[3, 2], |i| u[i[0]] * v[i[1]]);
        let svd = svd_truncate(&m, 10, 1e-12).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!(svd.discarded_weight < 1e-24);
        assert!(reconstruct(&svd).max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn diagonal_truncated_to_two() {
        let m = Tensor::matrix([[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
        let svd = svd_truncate(&m, 2, 0.0).unwrap();
        assert_eq!(svd.singular_values.len(), 2);
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
        assert!((svd.discarded_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_square_reconstructs() {
        let m = random(&[8, 8], 5);
        let svd = svd_truncate(&m, 8, 0.0).unwrap();
        assert!(reconstruct(&svd).max_abs_diff(&m) < 1e-10);
        assert!(isometry_error(&svd.left_isometry, 0) < 1e-10);
        assert!(isometry_error(&svd.right_isometry, 1) < 1e-10);
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reconstruction_error_equals_discarded_weight() {
        let m = random(&[9, 6], 11);
        let svd = svd_truncate(&m, 3, 0.0).unwrap();
        let mut diff = reconstruct(&svd);
        diff.add_scaled(-1.0, &m).unwrap();
        let err2 = diff.norm().powi(2);
        assert!((err2 - svd.discarded_weight).abs() < 1e-10);
    }

    #[test]
    fn cutoff_never_returns_rank_zero() {
        let m = Tensor::zeros(&[3, 3]);
        let svd = svd_truncate(&m, 3, 0.5).unwrap();
        assert_eq!(svd.rank(), 1);
        let m = Tensor::matrix([[1.0, 0.0], [0.0, 1e-9]]);
        let svd = svd_truncate(&m, 3, 1e-6).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.discarded_weight - 1e-18).abs() < 1e-24);
    }

    #[test]
    fn qr_of_isometry_is_identity_factor() {
        let m = random(&[6, 3], 2);
        let (q, _) = qr_positive(&m).unwrap();
        let (q2, r2) = qr_positive(&q).unwrap();
        assert!(q2.max_abs_diff(&q) < 1e-12);
        assert!(r2.max_abs_diff(&Tensor::identity(3)) < 1e-12);
    }

    #[test]
    fn lq_factors_reconstruct() {
        let m = random(&[3, 7], 8);
        let (l, q) = lq_positive(&m).unwrap();
        assert!(contract(&l, &q, &[(1, 0)]).unwrap().max_abs_diff(&m) < 1e-12);
        assert!(isometry_error(&q, 1) < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn exact_factorization_without_truncation(rows in 1usize..9, cols in 1usize..9, seed in 0u64..500) {
            let m = random(&[rows, cols], seed);
            let svd = svd_truncate(&m, rows.max(cols), 0.0).unwrap();
            let err = reconstruct(&svd).max_abs_diff(&m);
            proptest::prop_assert!(err <= 1e-10 * m.norm().max(1.0));
        }
    }
}
