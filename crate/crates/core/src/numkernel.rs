//! Dense linear-algebra kernels for the small matrices that show up in
//! identification checks: Cholesky factors, singular-value ranks and unit
//! null vectors.
//!
//! Everything here is a pure function of its inputs. Ranks are always decided
//! from a full singular value decomposition so that a rank-deficient constraint
//! matrix is reported as such instead of being quietly resolved by a pivoted
//! factorization.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative symmetry tolerance accepted by [`cholesky_lower`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Threshold policy separating "zero" from "nonzero" singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum RankTolerance {
    /// `max(rows, cols) * eps * sigma_max`.
    #[default]
    Default,
    /// `factor * sigma_max`.
    Relative(f64),
    /// A fixed cutoff.
    Absolute(f64),
}

impl RankTolerance {
    pub fn threshold(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        match *self {
            RankTolerance::Default => rows.max(cols) as f64 * f64::EPSILON * sigma_max,
            RankTolerance::Relative(factor) => factor * sigma_max,
            RankTolerance::Absolute(value) => value,
        }
    }
}

/// Singular values in nonincreasing order. Empty matrices have none.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values strictly above the resolved tolerance.
pub fn numerical_rank(m: &Matrix, tol: RankTolerance) -> usize {
    let sv = singular_values(m);
    rank_from_singular_values(&sv, m.nrows(), m.ncols(), tol)
}

pub(crate) fn rank_from_singular_values(
    sv: &[f64],
    rows: usize,
    cols: usize,
    tol: RankTolerance,
) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = tol.threshold(rows, cols, smax);
    sv.iter().filter(|&&s| s > cut).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullStatus {
    /// Null space is one-dimensional; the vector is unique up to sign.
    Unique,
    /// Null space has dimension `null_dim >= 2`.
    RankDeficient { null_dim: usize },
    /// Full column rank, only the zero vector is annihilated.
    NoNullVector,
}

/// Outcome of [`unit_null_vector`].
#[derive(Debug, Clone, PartialEq)]
pub struct NullVector {
    /// A unit vector in the numerical null space; `None` for `NoNullVector`.
    pub vector: Option<Vector>,
    pub status: NullStatus,
    pub rank: usize,
    /// Singular values of the input, nonincreasing, padded with zeros to `n`.
    pub singular_values: Vec<f64>,
    /// Orthonormal basis of the numerical null space (n x null_dim).
    pub basis: Matrix,
}

/// Full SVD of `m` padded with zero rows so that all `n` right singular
/// vectors are available. Returns (singular values, V) with matching
/// nonincreasing order.
fn full_right_svd(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.ncols();
    let rows = m.nrows().max(n);
    let mut padded = Matrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        v.set_column(col, &v_t.row(i).transpose());
    }
    (sv, v)
}

/// Unit vector `p` with `m p = 0`, together with a classification of the
/// null space of `m` (k x n).
pub fn unit_null_vector(m: &Matrix, tol: RankTolerance) -> NullVector {
    let n = m.ncols();
    let (sv, v) = full_right_svd(m);
    let rank = rank_from_singular_values(&sv, m.nrows(), n, tol);
    let null_dim = n - rank;
    let basis = v.columns(rank, null_dim).into_owned();
    let status = match null_dim {
        0 => NullStatus::NoNullVector,
        1 => NullStatus::Unique,
        d => NullStatus::RankDeficient { null_dim: d },
    };
    let vector = (null_dim > 0).then(|| v.column(n - 1).into_owned());
    NullVector {
        vector,
        status,
        rank,
        singular_values: sv,
        basis,
    }
}

/// Alternative ways of extracting the null vector once the rank test has
/// established that it is unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NullVectorBackend {
    /// Right singular vector of the smallest singular value.
    #[default]
    Svd,
    /// Last column of the orthogonal factor of a column-pivoted Householder
    /// QR of `m^T`.
    PivotedQr,
}

impl NullVectorBackend {
    /// Unit null vector of `m`, assuming its null space is one-dimensional.
    pub fn null_vector(&self, m: &Matrix) -> Vector {
        match self {
            NullVectorBackend::Svd => {
                let (_, v) = full_right_svd(m);
                v.column(m.ncols() - 1).into_owned()
            }
            NullVectorBackend::PivotedQr => {
                let n = m.ncols();
                let cols = m.nrows().max(n);
                let mut mt = Matrix::zeros(n, cols);
                mt.view_mut((0, 0), (n, m.nrows()))
                    .copy_from(&m.transpose());
                let q = mt.col_piv_qr().q();
                let p = q.column(n - 1).into_owned();
                let norm = p.norm();
                p / norm
            }
        }
    }
}

/// Lower-triangular `L` with positive diagonal and `L L^T = sigma`.
pub fn cholesky_lower(sigma: &Matrix) -> Result<Matrix> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(Error::Dimensions(format!(
            "Cholesky needs a square matrix, got {}x{}",
            n,
            sigma.ncols()
        )));
    }
    if !is_finite(sigma) {
        return Err(Error::NonFinite);
    }
    let scale = max_abs(sigma).max(1.0);
    let asymmetry = max_abs(&(sigma - sigma.transpose()));
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }

    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            // average the two triangles so tiny asymmetry does not bias the factor
            let mut s = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix by forward substitution. Entries
/// above the diagonal are exactly zero.
pub fn lower_triangular_inverse(l: &Matrix) -> Matrix {
    let n = l.nrows();
    let mut inv = Matrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Haar-like random orthogonal matrix: QR of a standard normal matrix with
/// the signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    assert!(n >= 1, "random_orthogonal needs n >= 1");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Largest absolute entry (0 for empty matrices).
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// `max |P^T P - I|`.
pub fn orthogonality_defect(p: &Matrix) -> f64 {
    let n = p.ncols();
    max_abs(&(p.transpose() * p - Matrix::identity(n, n)))
}
