//! Structural and reduced-form parameter containers and the maps between them.
//!
//! Conventions follow the row-vector form `y_t' A0 = x_t' A+ + e_t'` with
//! `x_t' = (y_{t-1}', ..., y_{t-p}', 1)`, so `A+` stacks the lag blocks
//! `A_1..A_p` (each n x n) followed by the constant row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{
    cholesky_lower, is_finite, lower_triangular_inverse, numerical_rank, Matrix, RankTolerance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    /// Number of endogenous variables.
    pub n: usize,
    /// Lag order.
    pub p: usize,
}

impl ModelDims {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimensions("n must be positive".into()));
        }
        Ok(ModelDims { n, p })
    }

    /// Rows of `A+` and `B`: `n p + 1`.
    pub fn m(&self) -> usize {
        self.n * self.p + 1
    }
}

fn check_shape(what: &str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Dimensions(format!(
            "{what} must be {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// `A0^{-1}`, refusing matrices whose numerical rank is below `n`.
pub fn invert_a0(a0: &Matrix) -> Result<Matrix> {
    let n = a0.nrows();
    let rank = numerical_rank(a0, RankTolerance::Default);
    if rank < n {
        return Err(Error::SingularA0 { rank, n });
    }
    a0.clone()
        .try_inverse()
        .ok_or(Error::SingularA0 { rank, n })
}

/// Structural pair `(A0, A+)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralParams {
    dims: ModelDims,
    a0: Matrix,
    aplus: Matrix,
}

impl StructuralParams {
    pub fn new(dims: ModelDims, a0: Matrix, aplus: Matrix) -> Result<Self> {
        check_shape("A0", &a0, dims.n, dims.n)?;
        check_shape("A+", &aplus, dims.m(), dims.n)?;
        let rank = numerical_rank(&a0, RankTolerance::Default);
        if rank < dims.n {
            return Err(Error::SingularA0 { rank, n: dims.n });
        }
        Ok(StructuralParams { dims, a0, aplus })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn a0(&self) -> &Matrix {
        &self.a0
    }

    pub fn aplus(&self) -> &Matrix {
        &self.aplus
    }

    /// Lag coefficient block `A_l`, `1 <= l <= p`.
    pub fn lag_block(&self, l: usize) -> Matrix {
        assert!(
            l >= 1 && l <= self.dims.p,
            "lag {l} outside 1..={}",
            self.dims.p
        );
        let n = self.dims.n;
        self.aplus.rows((l - 1) * n, n).into_owned()
    }

    /// `(A0 P, A+ P)`.
    pub fn rotate(&self, p: &Matrix) -> Result<Self> {
        check_shape("P", p, self.dims.n, self.dims.n)?;
        StructuralParams::new(self.dims, &self.a0 * p, &self.aplus * p)
    }
}

/// Reduced-form pair `(B, Sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFormParams {
    dims: ModelDims,
    b: Matrix,
    sigma: Matrix,
}

impl ReducedFormParams {
    /// Validates shapes and that `sigma` admits a Cholesky factor.
    pub fn new(dims: ModelDims, b: Matrix, sigma: Matrix) -> Result<Self> {
        check_shape("B", &b, dims.m(), dims.n)?;
        check_shape("Sigma", &sigma, dims.n, dims.n)?;
        cholesky_lower(&sigma)?;
        Ok(ReducedFormParams { dims, b, sigma })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    /// Largest absolute entrywise difference in `B` and `Sigma`.
    pub fn max_abs_diff(&self, other: &ReducedFormParams) -> f64 {
        let db = (&self.b - &other.b).amax();
        let ds = (&self.sigma - &other.sigma).amax();
        db.max(ds)
    }
}

/// `g(A0, A+) = (A+ A0^{-1}, (A0 A0')^{-1})`.
pub fn to_reduced_form(s: &StructuralParams) -> Result<ReducedFormParams> {
    let inv = invert_a0(&s.a0)?;
    let b = &s.aplus * &inv;
    let raw = inv.transpose() * &inv;
    let sigma = (&raw + raw.transpose()) * 0.5;
    Ok(ReducedFormParams {
        dims: s.dims,
        b,
        sigma,
    })
}

/// The recursive structural point of a reduced form:
/// `A0' = L^{-1}`, `A+ = B (L^{-1})'` with `L` the lower Cholesky factor of `Sigma`.
pub fn baseline_structural(r: &ReducedFormParams) -> Result<StructuralParams> {
    let l = cholesky_lower(&r.sigma)?;
    let a0 = lower_triangular_inverse(&l).transpose();
    let aplus = &r.b * &a0;
    StructuralParams::new(r.dims, a0, aplus)
}

/// Contemporaneous impulse responses `IR0 = (A0^{-1})'`; entry (i, j) is the
/// impact of shock j on variable i.
pub fn contemporaneous_ir(a0: &Matrix) -> Result<Matrix> {
    Ok(invert_a0(a0)?.transpose())
}

/// Companion matrix (np x np) of the lag blocks of `B`, row-vector form:
/// `(y_t', .., y_{t-p+1}') = (y_{t-1}', .., y_{t-p}') F + ...`.
pub fn companion_matrix(b: &Matrix, dims: ModelDims) -> Matrix {
    let (n, p) = (dims.n, dims.p);
    let mut f = Matrix::zeros(n * p, n * p);
    for l in 0..p {
        f.view_mut((l * n, 0), (n, n)).copy_from(&b.rows(l * n, n));
        if l + 1 < p {
            f.view_mut((l * n, (l + 1) * n), (n, n))
                .fill_with_identity();
        }
    }
    f
}

/// Impulse responses at horizon `h`: entry (i, j) is the response of
/// variable i, `h` periods after a unit shock j.
pub fn ir_horizon(s: &StructuralParams, h: usize) -> Result<Matrix> {
    let dims = s.dims;
    let n = dims.n;
    let inv = invert_a0(&s.a0)?;
    if h == 0 {
        return Ok(inv.transpose());
    }
    if dims.p == 0 {
        return Ok(Matrix::zeros(n, n));
    }
    let b = &s.aplus * &inv;
    let f = companion_matrix(&b, dims);
    let mut power = Matrix::identity(n * dims.p, n * dims.p);
    for _ in 0..h {
        power = &power * &f;
    }
    let psi = power.view((0, 0), (n, n)).into_owned();
    Ok((inv * psi).transpose())
}
