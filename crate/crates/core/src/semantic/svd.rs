//! Randomized truncated SVD: Gaussian range finder with subspace (power)
//! iterations, followed by an exact SVD of the small projected matrix.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::embedding::SemanticMatrix;
use super::sparse::LinearOperator;
use super::vocab::TfIdfMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdParams {
    pub rank: usize,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl SvdParams {
    pub fn new(rank: usize, seed: u64) -> Self {
        Self {
            rank,
            oversample: 10,
            power_iters: 2,
            seed,
        }
    }
}

/// Rank-k factors `A ≈ U · diag(σ) · Vᵀ` with σ sorted descending.
#[derive(Debug, Clone)]
pub struct TruncatedSvd<T: Scalar> {
    pub u: DMatrix<T>,
    pub singular_values: DVector<T>,
    pub vt: DMatrix<T>,
}

impl<T: Scalar> TruncatedSvd<T> {
    /// `U · diag(σ)`: one embedding row per input row.
    pub fn scaled_u(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        self.scaled_u() * &self.vt
    }
}

fn orthonormal_basis<T: Scalar>(m: DMatrix<T>) -> DMatrix<T> {
    m.qr().q()
}

/// Computes the leading `params.rank` singular triplets of `a`.
///
/// Deterministic for a given seed: the Gaussian test matrix is drawn in
/// `f64` from ChaCha8 and every product reduces in a fixed order.
pub fn randomized_svd<T: Scalar, A: LinearOperator<T>>(a: &A, params: SvdParams) -> Result<TruncatedSvd<T>> {
    let (m, n) = (a.nrows(), a.ncols());
    let k = params.rank;
    if k == 0 {
        return Err(Error::invalid("SVD rank must be at least 1"));
    }
    if k >= m.min(n) {
        return Err(Error::invalid(format!(
            "SVD rank {k} must be smaller than min(rows, cols) = {}",
            m.min(n)
        )));
    }
    let width = (k + params.oversample).min(m.min(n));

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let omega = DMatrix::<T>::from_fn(n, width, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        T::of(g)
    });

    let mut q = orthonormal_basis(a.mul(&omega));
    for _ in 0..params.power_iters {
        // Only the range side is re-orthonormalized: the other side can be
        // very long (one row per vocabulary term) and spans the same subspace.
        q = orthonormal_basis(a.mul(&a.tr_mul(&q)));
    }

    // B = Qᵀ A is small in one dimension only; its SVD comes from the
    // eigendecomposition of the w × w Gram matrix B Bᵀ.
    let bt = a.tr_mul(&q);
    let gram = bt.tr_mul(&bt);
    let eig = gram.symmetric_eigen();
    if eig.eigenvalues.iter().any(|l| !Float::is_finite(*l)) {
        return Err(Error::Numerical(
            "non-finite eigenvalue in projected Gram matrix".into(),
        ));
    }
    let sigma = eig.eigenvalues.map(|l| Float::sqrt(Float::max(l, T::zero())));
    let u_small = eig.eigenvectors;
    let top = sigma.iter().copied().fold(T::zero(), Float::max);
    let floor = top * Float::sqrt(<T as Float>::epsilon());
    // right vectors: v_i = Bᵀ u_i / σ_i, zero where σ_i vanishes
    let mut v_small = &bt * &u_small;
    for (j, &sj) in sigma.iter().enumerate() {
        let scale = if sj > floor { T::one() / sj } else { T::zero() };
        v_small.column_mut(j).scale_mut(scale);
    }
    let vt_small = v_small.transpose();

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));
    order.truncate(k);

    let u_full = &q * &u_small;
    let mut u = DMatrix::<T>::zeros(m, k);
    let mut vt = DMatrix::<T>::zeros(k, n);
    let mut s = DVector::<T>::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u_full.column(src).into_owned();
        let mut vrow = vt_small.row(src).into_owned();
        // Fix the sign so the largest-magnitude entry of each left vector is positive.
        let pivot = ucol.iter().copied().fold(
            T::zero(),
            |best, x| if Float::abs(x) > Float::abs(best) { x } else { best },
        );
        if pivot < T::zero() {
            ucol.neg_mut();
            vrow.neg_mut();
        }
        u.set_column(dst, &ucol);
        vt.set_row(dst, &vrow);
        s[dst] = sigma[src];
    }
    Ok(TruncatedSvd {
        u,
        singular_values: s,
        vt,
    })
}

/// Projects a TF-IDF matrix to `rank` semantic features (rows = articles).
pub fn truncated_svd<T: Scalar>(x: &TfIdfMatrix<T>, ids: Vec<String>, params: SvdParams) -> Result<SemanticMatrix<T>> {
    if ids.len() != x.matrix.nrows() {
        return Err(Error::invalid(format!(
            "{} ids for a matrix with {} rows",
            ids.len(),
            x.matrix.nrows()
        )));
    }
    let svd = randomized_svd(&x.matrix, params)?;
    SemanticMatrix::from_dense(ids, &svd.scaled_u(), params.seed)
}
