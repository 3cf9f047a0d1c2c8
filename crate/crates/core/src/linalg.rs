//! Minimum-norm least squares on small dense designs.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::codebook::Codebook;

/// Singular values below `RANK_RTOL · σ_max` are treated as zero.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: DVector<f64>,
    pub fitted: DVector<f64>,
    pub rank: usize,
    /// Right singular vectors and inverse singular values of the retained
    /// directions, kept so callers can form `(XᵀX)⁺`.
    v: DMatrix<f64>,
    inv_sv: Vec<f64>,
}

impl LeastSquares {
    pub fn residual_norm(&self, y: &DVector<f64>) -> f64 {
        (y - &self.fitted).norm()
    }

    /// Moore–Penrose inverse of `XᵀX`.
    pub fn gram_pinv(&self) -> DMatrix<f64> {
        let k = self.v.nrows();
        let mut out = DMatrix::zeros(k, k);
        for (c, &inv) in self.inv_sv.iter().enumerate() {
            if inv == 0.0 {
                continue;
            }
            let vc = self.v.column(c);
            out += (vc * vc.transpose()) * (inv * inv);
        }
        out
    }

    pub fn full_rank(&self) -> bool {
        self.rank == self.v.nrows()
    }
}

/// Solves `min ‖y − Xβ‖₂`, returning the minimum-norm `β` when `X` is rank
/// deficient.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    let k = x.ncols();
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let s = svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = RANK_RTOL * smax;

    let mut coef = DVector::zeros(k);
    let mut inv_sv = vec![0.0; s.len()];
    let mut rank = 0;
    for (c, &sv) in s.iter().enumerate() {
        if sv > cutoff && sv > 0.0 {
            rank += 1;
            inv_sv[c] = 1.0 / sv;
            let proj = u.column(c).dot(y) / sv;
            coef += v_t.row(c).transpose() * proj;
        }
    }
    let fitted = x * &coef;
    LeastSquares {
        coef,
        fitted,
        rank,
        v: v_t.transpose(),
        inv_sv,
    }
}

/// Columns `subset` of the codebook restricted to `rows`.
pub fn design(codebook: &Codebook, subset: &[usize], rows: Range<usize>) -> DMatrix<f64> {
    let len = rows.len();
    DMatrix::from_fn(len, subset.len(), |i, c| {
        codebook.entries()[(rows.start + i, subset[c])]
    })
}
