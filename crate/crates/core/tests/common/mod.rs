#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use svar_ident::numkernel::random_orthogonal;
use svar_ident::{Matrix, ModelDims, StructuralParams};

pub const COUNTEREXAMPLE: &str = "\
n = 3
p = 1
block A0
  x x x
  0 x x
  0 x x
block IR0
  x 0 x
  x x x
  x x x
";

/// A0 with every strictly-lower cell restricted to zero.
pub fn recursive_spec(n: usize) -> String {
    let mut s = format!("n = {n}\np = 1\nblock A0\n");
    for i in 0..n {
        let row: Vec<&str> = (0..n).map(|j| if i > j { "0" } else { "x" }).collect();
        s += &format!("  {}\n", row.join(" "));
    }
    s
}

fn render(n: usize, p: usize, blocks: &[&str], grid: &[Vec<bool>]) -> String {
    let mut s = format!("n = {n}\np = {p}\n");
    for (bi, b) in blocks.iter().enumerate() {
        s += &format!("block {b}\n");
        for r in 0..n {
            let row: Vec<&str> = grid[bi * n + r]
                .iter()
                .map(|&z| if z { "0" } else { "x" })
                .collect();
            s += &format!("  {}\n", row.join(" "));
        }
    }
    s
}

/// Random pattern meeting the counting rule: columns get n-1, ..., 0 zeros
/// in shuffled column order, placed uniformly over the stacked blocks.
pub fn random_counting_spec(n: usize, p: usize, blocks: &[&str], seed: u64) -> String {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = n * blocks.len();
    let mut grid = vec![vec![false; n]; k];
    let mut cols: Vec<usize> = (0..n).collect();
    cols.shuffle(&mut rng);
    for (j, &col) in cols.iter().enumerate() {
        let mut rows: Vec<usize> = (0..k).collect();
        rows.shuffle(&mut rng);
        for &r in rows.iter().take(n - 1 - j) {
            grid[r][col] = true;
        }
    }
    render(n, p, blocks, &grid)
}

/// Specs that pass the counting rule, with identified and redundant members
/// at n = 3 and n = 4.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vec![
        ("recursive3".into(), recursive_spec(3)),
        ("recursive4".into(), recursive_spec(4)),
        ("counterexample".into(), COUNTEREXAMPLE.into()),
        (
            "ir0_cholesky3".into(),
            "n = 3\nblock IR0\n x 0 0\n x x 0\n x x x\n".into(),
        ),
        (
            "a0_implies_ir0_13".into(),
            "n = 3\nblock A0\n x x x\n 0 x x\n 0 x x\nblock IR0\n x x 0\n x x x\n x x x\n".into(),
        ),
        (
            "a0_lag_mix3".into(),
            "n = 3\np = 1\nblock A0\n x x x\n 0 x x\n x x x\nblock LAG1\n 0 x x\n x 0 x\n x x x\n".into(),
        ),
        (
            "ir0_ir1_mix3".into(),
            "n = 3\np = 2\nblock IR0\n x 0 x\n x x x\n x x x\nblock IR1\n x x x\n 0 x x\n 0 x x\n".into(),
        ),
        (
            "counterexample_embedded4".into(),
            "n = 4\np = 1\nblock A0\n x x x x\n 0 x x x\n 0 0 x x\n 0 x 0 x\nblock IR0\n x 0 x x\n x x x x\n x x x x\n x x x x\n"
                .into(),
        ),
        (
            "ir0_cholesky4".into(),
            "n = 4\nblock IR0\n x 0 0 0\n x x 0 0\n x x x 0\n x x x x\n".into(),
        ),
    ];
    for seed in 0..8 {
        out.push((
            format!("random3_{seed}"),
            random_counting_spec(3, 1, &["A0", "IR0"], seed),
        ));
    }
    for seed in 0..8 {
        out.push((
            format!("random4_{seed}"),
            random_counting_spec(4, 1, &["A0", "IR0", "LAG1"], 100 + seed),
        ));
    }
    out
}

/// Random structural point with a well-conditioned A0.
pub fn random_structural(dims: ModelDims, seed: u64) -> StructuralParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dims.n;
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let a0 = Matrix::identity(n, n) * 2.0 + Matrix::from_fn(n, n, |_, _| normal() * 0.5);
    let aplus = Matrix::from_fn(dims.m(), n, |_, _| normal() * 0.4);
    StructuralParams::new(dims, a0, aplus).expect("diagonally dominated A0 is invertible")
}

pub fn random_orthogonal_for(n: usize, seed: u64) -> Matrix {
    random_orthogonal(n, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Singular values by one-sided Jacobi rotations on the columns, sorted
/// nonincreasing. Independent of the library's SVD.
pub fn jacobi_singular_values(m: &Matrix) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m[(i, j)]).collect())
        .collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-17 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    (*x, *y) = (c * *x - s * *y, s * *x + c * *y);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv.truncate(rows.min(cols));
    sv
}

/// Rank by counting oracle singular values above `max(r, c) * eps * sigma_max`.
pub fn oracle_rank(m: &Matrix) -> usize {
    let sv = jacobi_singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > cut).count()
}

/// Random test matrices up to 12 x 12; every third is a sum of `r` outer
/// products so its rank is deficient.
pub fn random_rank_case(seed: u64) -> (Matrix, Option<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(1..=12);
    let cols = rng.random_range(1..=12);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    if seed.is_multiple_of(3) {
        let max_r = rows.min(cols);
        let r = (seed as usize / 3) % max_r;
        let mut m = Matrix::zeros(rows, cols);
        for _ in 0..r {
            let u = Matrix::from_fn(rows, 1, |_, _| normal());
            let v = Matrix::from_fn(1, cols, |_, _| normal());
            m += u * v;
        }
        (m, Some(r))
    } else {
        (Matrix::from_fn(rows, cols, |_, _| normal()), None)
    }
}
