//! Seeded draws of reduced-form parameter points.
//!
//! Each draw is a pure function of `(seed, index)`: the generator is ChaCha20
//! keyed by the seed with the draw index as its stream number, so draws can be
//! produced in any order or concurrently.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::svar::{ModelDims, ReducedFormParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub dims: ModelDims,
    /// Lower bound added to every Cholesky diagonal entry.
    pub diag_floor: f64,
    pub scale: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(dims: ModelDims, seed: u64) -> Self {
        SamplerConfig {
            dims,
            diag_floor: 0.1,
            scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diag_floor > 0.0 && self.diag_floor.is_finite()) {
            return Err(Error::Dimensions(format!(
                "diag_floor must be positive, got {}",
                self.diag_floor
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Dimensions(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    fn rng(&self, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// The Cholesky factor and `B` of draw `index`.
    fn draw_parts(&self, index: u64) -> (Matrix, Matrix) {
        let n = self.dims.n;
        let mut rng = self.rng(index);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                l[(i, j)] = normal() * self.scale;
            }
            l[(i, i)] = normal().abs() * self.scale + self.diag_floor;
        }
        let b = Matrix::from_fn(self.dims.m(), n, |_, _| normal() * self.scale);
        (l, b)
    }
}

/// Draw `index` of the reduced-form sampler: `Sigma = L L'` with `L` lower
/// triangular (diagonal `|z| * scale + diag_floor`, subdiagonal `z * scale`)
/// and `B` with iid `z * scale` entries.
pub fn draw_reduced_form(cfg: &SamplerConfig, index: u64) -> Result<ReducedFormParams> {
    cfg.validate()?;
    let (l, b) = cfg.draw_parts(index);
    let n = cfg.dims.n;
    let mut sigma = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..=j {
                s += l[(i, k)] * l[(j, k)];
            }
            sigma[(i, j)] = s;
            sigma[(j, i)] = s;
        }
    }
    ReducedFormParams::new(cfg.dims, b, sigma)
}
