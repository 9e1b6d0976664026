//! Single-site spin-1/2 operators in the Z basis (`|0⟩ = ↑`, `Z|0⟩ = +|0⟩`).
//!
//! An [`Op`] is indexed `[out][in]`.

use crate::tensor::Tensor;

pub type Op = [[f64; 2]; 2];

pub const I: Op = [[1.0, 0.0], [0.0, 1.0]];
pub const X: Op = [[0.0, 1.0], [1.0, 0.0]];
pub const Z: Op = [[1.0, 0.0], [0.0, -1.0]];

pub fn mul(a: &Op, b: &Op) -> Op {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `a ⊗ b` as a `4 × 4` tensor, `a` acting on the more significant site.
pub fn kron(a: &Op, b: &Op) -> Tensor {
    Tensor::from_fn(&[4, 4], |i| {
        let (o1, o2) = (i[0] / 2, i[0] % 2);
        let (i1, i2) = (i[1] / 2, i[1] % 2);
        a[o1][i1] * b[o2][i2]
    })
}

pub fn to_tensor(op: &Op) -> Tensor {
    Tensor::matrix(*op)
}
