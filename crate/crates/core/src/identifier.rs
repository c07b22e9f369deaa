//! Exact-identification engine.
//!
//! Given a reduced-form point, the recursive structural point is rotated into
//! the restricted set one column at a time: column j's rotation vector `p_j`
//! must annihilate `Q̃_j`, the stack of the column's restriction rows and the
//! previously chosen `p_1..p_{j-1}`. The restrictions pin down a unique
//! rotation exactly when every `Q̃_j` has rank `n - 1`. A rank shortfall means
//! some restriction is implied by the others and carries no information.
//!
//! Because the set of reduced forms where the rank test passes is either empty
//! or of full measure, a handful of random draws decides identification.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{
    max_abs, numerical_rank, unit_null_vector, Matrix, NullStatus, NullVectorBackend,
    RankTolerance, Vector,
};
use crate::restrictions::{CellRef, CompiledRestrictions};
use crate::sampler::{draw_reduced_form, SamplerConfig};
use crate::svar::{baseline_structural, ReducedFormParams, StructuralParams};

/// Maximum restriction residual for a point to count as restricted.
pub const RESTRICTED_RESIDUAL_TOL: f64 = 1e-8;

/// Default number of reduced-form draws.
pub const DEFAULT_DRAWS: usize = 5;

/// Relative rank cutoff used by the identification routines. Rounding noise
/// in the sequential construction reaches a few 1e-14 of `sigma_max` at
/// n = 6, well above the `max(r, c) * eps` rule, while genuine singular values
/// stay above 1e-7 on random draws.
pub const IDENTIFIER_RANK_TOL: f64 = 1e-10;

/// Numerical knobs shared by all identification routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentifierConfig {
    pub tol: RankTolerance,
    pub backend: NullVectorBackend,
}

impl Default for IdentifierConfig {
    fn default() -> Self {
        IdentifierConfig {
            tol: RankTolerance::Relative(IDENTIFIER_RANK_TOL),
            backend: NullVectorBackend::Svd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnStatus {
    Unique,
    /// `Q̃_j` has rank below `n - 1`; the null space has this dimension.
    Redundant(usize),
    /// `Q̃_j` has full column rank: no admissible `p_j` exists.
    Infeasible,
}

impl fmt::Display for ColumnStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnStatus::Unique => write!(f, "Unique"),
            ColumnStatus::Redundant(d) => write!(f, "Redundant({d})"),
            ColumnStatus::Infeasible => write!(f, "Infeasible"),
        }
    }
}

impl FromStr for ColumnStatus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Unique" => Ok(ColumnStatus::Unique),
            "Infeasible" => Ok(ColumnStatus::Infeasible),
            _ => s
                .strip_prefix("Redundant(")
                .and_then(|rest| rest.strip_suffix(')'))
                .and_then(|d| d.parse().ok())
                .map(ColumnStatus::Redundant)
                .ok_or_else(|| format!("unknown column status `{s}`")),
        }
    }
}

impl Serialize for ColumnStatus {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ColumnStatus {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rank evidence for one column of the sequential construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostic {
    /// 1-based position in the permuted order.
    pub j: usize,
    /// 1-based original column.
    pub column: usize,
    pub qtilde_rows: usize,
    pub rank: usize,
    pub required: usize,
    pub status: ColumnStatus,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnRedundancy {
    /// Stop at the first rank-deficient column.
    Abort,
    /// Keep going, choosing a random unit vector from the null space of a
    /// rank-deficient `Q̃_j`; the seed makes the choice reproducible.
    PickArbitrary { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationResult {
    /// The rotation in original column order, when construction finished.
    pub p: Option<Matrix>,
    pub per_column: Vec<ColumnDiagnostic>,
    /// Sign applied to each accepted `p_j` (permuted order).
    pub sign_flips: Vec<i8>,
    /// True when every column was pinned down uniquely.
    pub unique: bool,
    /// Accepted `p_1, p_2, ...` in permuted order.
    pub accepted: Vec<Vector>,
    /// Recursive point the rotation is applied to.
    pub baseline: StructuralParams,
    /// `(A0 P, A+ P)` when `p` is present.
    pub rotated: Option<StructuralParams>,
}

impl RotationResult {
    /// First column (0-based, permuted) whose status is not `Unique`.
    pub fn first_failure(&self) -> Option<&ColumnDiagnostic> {
        self.per_column
            .iter()
            .find(|d| d.status != ColumnStatus::Unique)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountCondition {
    pub per_column: Vec<bool>,
    pub overall: bool,
}

/// Necessary condition: `q_j = n - j` at every (permuted, 1-based) position.
pub fn count_condition(c: &CompiledRestrictions) -> CountCondition {
    let n = c.n();
    let per_column: Vec<bool> = c
        .q()
        .iter()
        .enumerate()
        .map(|(j, &q)| q == n - 1 - j)
        .collect();
    let overall = per_column.iter().all(|&b| b);
    CountCondition {
        per_column,
        overall,
    }
}

/// `Q̃_j`: restriction rows of column `j` (0-based, permuted) evaluated at
/// `f_val`, stacked over the transposed prior rotation vectors.
pub fn q_tilde(j: usize, c: &CompiledRestrictions, f_val: &Matrix, prior: &[Vector]) -> Matrix {
    let restricted = c.reduced_rows(j, f_val);
    let n = f_val.ncols();
    let r = restricted.nrows();
    let mut out = Matrix::zeros(r + prior.len(), n);
    out.view_mut((0, 0), (r, n)).copy_from(&restricted);
    for (i, p) in prior.iter().enumerate() {
        out.set_row(r + i, &p.transpose());
    }
    out
}

fn sign_tol(a0: &Matrix) -> f64 {
    1e-12 * max_abs(a0).max(1.0)
}

/// Chooses the sign of `p` so that `(A0 p)[row] > 0`; if that entry is
/// numerically zero, the first non-negligible entry of `p` is made positive.
/// Returns the vector and whether it was flipped.
pub fn sign_normalize(p: &Vector, row: usize, a0: &Matrix) -> (Vector, bool) {
    let lead = (a0.row(row) * p)[0];
    let flip = if lead.abs() > sign_tol(a0) {
        lead < 0.0
    } else {
        p.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0)
    };
    if flip {
        (-p, true)
    } else {
        (p.clone(), false)
    }
}

fn arbitrary_unit_vector(basis: &Matrix, seed: u64, column: usize) -> Vector {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    loop {
        let w = Vector::from_fn(basis.ncols(), |_, _| StandardNormal.sample(&mut rng));
        let v = basis * w;
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

fn construct(
    r: &ReducedFormParams,
    c: &CompiledRestrictions,
    on_redundancy: OnRedundancy,
    cfg: &IdentifierConfig,
) -> Result<RotationResult> {
    if !count_condition(c).overall {
        return Err(Error::PreconditionCountFailure);
    }
    if r.dims() != c.dims() {
        return Err(Error::Dimensions(format!(
            "reduced form has dims {:?}, restrictions expect {:?}",
            r.dims(),
            c.dims()
        )));
    }
    let n = c.n();
    let baseline = baseline_structural(r)?;
    let f = c.assemble_f(&baseline)?;

    let mut accepted: Vec<Vector> = Vec::with_capacity(n);
    let mut per_column = Vec::with_capacity(n);
    let mut sign_flips = Vec::with_capacity(n);
    let mut unique = true;

    for j in 0..n {
        let column = c.permutation()[j];
        let qt = q_tilde(j, c, &f, &accepted);
        let nv = unit_null_vector(&qt, cfg.tol);
        let status = match nv.status {
            NullStatus::Unique => ColumnStatus::Unique,
            NullStatus::RankDeficient { null_dim } => ColumnStatus::Redundant(null_dim),
            NullStatus::NoNullVector => ColumnStatus::Infeasible,
        };
        per_column.push(ColumnDiagnostic {
            j: j + 1,
            column: column + 1,
            qtilde_rows: qt.nrows(),
            rank: nv.rank,
            required: n - 1,
            status,
            singular_values: nv.singular_values.clone(),
        });

        let raw = match (status, on_redundancy) {
            (ColumnStatus::Unique, _) => cfg.backend.null_vector(&qt),
            (ColumnStatus::Redundant(_), OnRedundancy::PickArbitrary { seed }) => {
                unique = false;
                arbitrary_unit_vector(&nv.basis, seed, j)
            }
            _ => {
                return Ok(RotationResult {
                    p: None,
                    per_column,
                    sign_flips,
                    unique: false,
                    accepted,
                    baseline,
                    rotated: None,
                })
            }
        };
        let (pj, flipped) = sign_normalize(&raw, column, baseline.a0());
        sign_flips.push(if flipped { -1 } else { 1 });
        accepted.push(pj);
    }

    let mut p = Matrix::zeros(n, n);
    for (j, pj) in accepted.iter().enumerate() {
        p.set_column(c.permutation()[j], pj);
    }
    let rotated = baseline.rotate(&p)?;
    Ok(RotationResult {
        p: Some(p),
        per_column,
        sign_flips,
        unique,
        accepted,
        baseline,
        rotated: Some(rotated),
    })
}

/// Non-redundancy check at one reduced-form point: runs the sequential
/// construction and stops at the first column whose `Q̃_j` rank is not `n - 1`.
pub fn nonredundancy_at(
    r: &ReducedFormParams,
    c: &CompiledRestrictions,
    cfg: &IdentifierConfig,
) -> Result<RotationResult> {
    construct(r, c, OnRedundancy::Abort, cfg)
}

/// Builds a rotation into the restricted set. Under `Abort` this is
/// [`nonredundancy_at`]; under `PickArbitrary` rank-deficient columns are
/// filled with an arbitrary admissible vector and `unique` is false.
pub fn construct_rotation(
    r: &ReducedFormParams,
    c: &CompiledRestrictions,
    on_redundancy: OnRedundancy,
    cfg: &IdentifierConfig,
) -> Result<RotationResult> {
    let res = construct(r, c, on_redundancy, cfg)?;
    if let Some(d) = res
        .per_column
        .iter()
        .find(|d| d.status == ColumnStatus::Infeasible)
    {
        return Err(Error::Infeasible { column: d.j });
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCrossCheck {
    /// Rank of each `M_j` (permuted order).
    pub ranks: Vec<usize>,
    pub total_restrictions: usize,
    pub required: usize,
    pub pass: bool,
}

/// `M_j(X) = [Q_j X; I_j 0]` with `X` in permuted column order.
pub fn m_matrix(j: usize, c: &CompiledRestrictions, x_perm: &Matrix) -> Matrix {
    let (k, n) = (x_perm.nrows(), x_perm.ncols());
    let mut m = Matrix::zeros(k + j, n);
    m.view_mut((0, 0), (k, n))
        .copy_from(&(c.q_matrix(j - 1) * x_perm));
    for i in 0..j {
        m[(k + i, i)] = 1.0;
    }
    m
}

/// Rank test on `M_j(f)` at a point that satisfies the restrictions, plus the
/// requirement that the total restriction count is `n(n-1)/2`.
pub fn rank_cross_check(
    s_restricted: &StructuralParams,
    c: &CompiledRestrictions,
    cfg: &IdentifierConfig,
) -> Result<RankCrossCheck> {
    let residual = c.residual(s_restricted)?;
    if residual > RESTRICTED_RESIDUAL_TOL {
        return Err(Error::NotInR {
            residual,
            tolerance: RESTRICTED_RESIDUAL_TOL,
        });
    }
    let n = c.n();
    let f = c.assemble_f(s_restricted)?;
    let mut f_perm = Matrix::zeros(f.nrows(), n);
    for (j, &col) in c.permutation().iter().enumerate() {
        f_perm.set_column(j, &f.column(col));
    }
    let ranks: Vec<usize> = (1..=n)
        .map(|j| numerical_rank(&m_matrix(j, c, &f_perm), cfg.tol))
        .collect();
    let required = n * (n - 1) / 2;
    let pass = c.total() == required && ranks.iter().all(|&r| r == n);
    Ok(RankCrossCheck {
        ranks,
        total_restrictions: c.total(),
        required,
        pass,
    })
}

/// Rank cross-check at a restricted point built from sampler draw
/// `index` (arbitrary picks where the rotation is not unique).
pub fn rank_cross_check_at_draw(
    c: &CompiledRestrictions,
    sampler: &SamplerConfig,
    index: u64,
    cfg: &IdentifierConfig,
) -> Result<RankCrossCheck> {
    let r = draw_reduced_form(sampler, index)?;
    let rot = construct_rotation(
        &r,
        c,
        OnRedundancy::PickArbitrary {
            seed: sampler.seed ^ index,
        },
        cfg,
    )?;
    let point = rot
        .rotated
        .expect("PickArbitrary always completes unless infeasible");
    rank_cross_check(&point, c, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ExactlyIdentified,
    #[serde(rename = "NotIdentified_CountFailure")]
    NotIdentifiedCountFailure,
    #[serde(rename = "NotIdentified_Redundancy")]
    NotIdentifiedRedundancy,
    #[serde(rename = "Inconclusive_DrawDisagreement")]
    InconclusiveDrawDisagreement,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ExactlyIdentified => "ExactlyIdentified",
            Verdict::NotIdentifiedCountFailure => "NotIdentified_CountFailure",
            Verdict::NotIdentifiedRedundancy => "NotIdentified_Redundancy",
            Verdict::InconclusiveDrawDisagreement => "Inconclusive_DrawDisagreement",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    /// Base seed of the sampler.
    pub seed: u64,
    /// Stream index of this draw under the seed.
    pub index: u64,
    pub columns: Vec<ColumnDiagnostic>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub n: usize,
    pub p: usize,
    /// Restriction counts in permuted order.
    pub q: Vec<usize>,
    /// 1-based original column at each permuted position.
    pub permutation: Vec<usize>,
    pub count_condition: CountCondition,
    pub total_restrictions: usize,
    pub required: usize,
    pub draws: Vec<DrawRecord>,
    pub rank_check: Option<RankCrossCheck>,
    pub verdict: Verdict,
}

impl IdentificationReport {
    /// Columns (1-based, permuted) at which failing draws stopped.
    pub fn failing_columns(&self) -> Vec<usize> {
        self.draws
            .iter()
            .filter(|d| !d.pass)
            .filter_map(|d| {
                d.columns
                    .iter()
                    .find(|c| c.status != ColumnStatus::Unique)
                    .map(|c| c.j)
            })
            .collect()
    }
}

/// Decides exact identification: the count condition first, then the
/// non-redundancy rank test at `draws` sampled reduced-form points.
///
/// All draws passing gives `ExactlyIdentified`, all failing gives
/// `NotIdentified_Redundancy`; a mix is reported as
/// `Inconclusive_DrawDisagreement` rather than resolved by vote.
pub fn check_exact_identification(
    c: &CompiledRestrictions,
    sampler: &SamplerConfig,
    draws: usize,
    cfg: &IdentifierConfig,
) -> Result<IdentificationReport> {
    if draws < 2 {
        return Err(Error::Dimensions(format!(
            "at least 2 draws are required, got {draws}"
        )));
    }
    if sampler.dims != c.dims() {
        return Err(Error::Dimensions(
            "sampler and restriction dimensions differ".into(),
        ));
    }
    let n = c.n();
    let count = count_condition(c);
    let mut report = IdentificationReport {
        n,
        p: c.dims().p,
        q: c.q().to_vec(),
        permutation: c.permutation().iter().map(|&i| i + 1).collect(),
        count_condition: count.clone(),
        total_restrictions: c.total(),
        required: n * (n - 1) / 2,
        draws: Vec::new(),
        rank_check: None,
        verdict: Verdict::NotIdentifiedCountFailure,
    };
    if !count.overall {
        return Ok(report);
    }

    for index in 0..draws as u64 {
        let r = draw_reduced_form(sampler, index)?;
        let res = nonredundancy_at(&r, c, cfg)?;
        report.draws.push(DrawRecord {
            seed: sampler.seed,
            index,
            pass: res.unique,
            columns: res.per_column,
        });
    }
    let passed = report.draws.iter().filter(|d| d.pass).count();
    report.verdict = if passed == draws {
        Verdict::ExactlyIdentified
    } else if passed == 0 {
        Verdict::NotIdentifiedRedundancy
    } else {
        Verdict::InconclusiveDrawDisagreement
    };
    report.rank_check = rank_cross_check_at_draw(c, sampler, 0, cfg).ok();
    Ok(report)
}

/// A restriction row found to be a linear combination of the other rows of
/// `Q̃_j` at the failing column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpliedRestriction {
    /// `None` for rows of general (non-selector) restriction matrices.
    pub cell: Option<CellRef>,
    /// Index of the row within `Q̄_j f`.
    pub row: usize,
    /// Restrictions whose rows (directly, or through the rotation vectors
    /// they determine) combine to give this one.
    pub implied_by: Vec<CellRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyExplanation {
    /// 1-based permuted position of the failing column.
    pub j: usize,
    pub column: usize,
    pub rank: usize,
    pub required: usize,
    pub implied: Vec<ImpliedRestriction>,
}

fn rows_except(m: &Matrix, skip: usize) -> Matrix {
    let keep: Vec<usize> = (0..m.nrows()).filter(|&r| r != skip).collect();
    Matrix::from_fn(keep.len(), m.ncols(), |r, c| m[(keep[r], c)])
}

/// Names the restrictions at the first rank-deficient column that are
/// implied by the others. `None` when the construction does not hit a
/// redundant column at this point.
pub fn explain_redundancy(
    r: &ReducedFormParams,
    c: &CompiledRestrictions,
    cfg: &IdentifierConfig,
) -> Result<Option<RedundancyExplanation>> {
    let res = nonredundancy_at(r, c, cfg)?;
    let Some(fail) = res.first_failure() else {
        return Ok(None);
    };
    if !matches!(fail.status, ColumnStatus::Redundant(_)) {
        return Ok(None);
    }
    let j = fail.j - 1;
    let f = c.assemble_f(&res.baseline)?;
    let qt = q_tilde(j, c, &f, &res.accepted);
    let full_rank = numerical_rank(&qt, cfg.tol);
    let restricted_rows = qt.nrows() - res.accepted.len();
    let cells = c.row_cells(j);

    let mut implied = Vec::new();
    for row in 0..restricted_rows {
        let others = rows_except(&qt, row);
        if numerical_rank(&others, cfg.tol) < full_rank {
            continue;
        }
        let target = qt.row(row).transpose();
        let mut implied_by = Vec::new();
        if others.nrows() > 0 && target.amax() > 0.0 {
            let svd = others.transpose().svd(true, true);
            let eps = cfg
                .tol
                .threshold(others.nrows(), others.ncols(), svd.singular_values.max());
            let coeffs = svd
                .solve(&target, eps.max(1e-14))
                .expect("u and v_t were requested");
            let cut = 1e-8 * coeffs.amax().max(1e-300);
            for (i, w) in coeffs.iter().enumerate() {
                if w.abs() <= cut {
                    continue;
                }
                // rows of `others` keep the order of Q̃ with `row` removed
                let src = if i < row { i } else { i + 1 };
                if src < restricted_rows {
                    implied_by.extend(cells[src]);
                } else {
                    let t = src - restricted_rows;
                    implied_by.extend(c.row_cells(t).iter().flatten().copied());
                }
            }
        }
        implied.push(ImpliedRestriction {
            cell: cells[row],
            row,
            implied_by,
        });
    }
    Ok(Some(RedundancyExplanation {
        j: fail.j,
        column: fail.column,
        rank: fail.rank,
        required: fail.required,
        implied,
    }))
}
