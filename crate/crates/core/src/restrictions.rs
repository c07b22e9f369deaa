//! Zero-restriction patterns over stacked transformation blocks.
//!
//! A [`RestrictionSpec`] lists blocks (A0, lag blocks, impulse responses at a
//! given horizon), each with an n x n grid of zero/free cells. Stacking the
//! block values gives `f(A0, A+)` (k x n, `k = n * #blocks`), and each zero
//! cell in column j becomes one indicator row of the selection matrix `Q_j`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpecError};
use crate::numkernel::{numerical_rank, Matrix, RankTolerance};
use crate::svar::{invert_a0, ir_horizon, ModelDims, StructuralParams};

/// A transformation block that restrictions can be placed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockId {
    A0,
    /// Lag coefficient block `A_l`, `1 <= l <= p`.
    Lag(usize),
    /// Impulse responses at horizon h.
    Ir(usize),
}

impl BlockId {
    /// Checks the block against the model dimensions.
    pub fn validate(&self, dims: ModelDims) -> bool {
        match *self {
            BlockId::Lag(l) => l >= 1 && l <= dims.p,
            _ => true,
        }
    }

    /// Value of the block at a structural point (n x n).
    pub fn value(&self, s: &StructuralParams) -> Result<Matrix> {
        match *self {
            BlockId::A0 => {
                invert_a0(s.a0())?;
                Ok(s.a0().clone())
            }
            BlockId::Lag(l) => Ok(s.lag_block(l)),
            BlockId::Ir(h) => ir_horizon(s, h),
        }
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockId::A0 => write!(f, "A0"),
            BlockId::Lag(l) => write!(f, "LAG{l}"),
            BlockId::Ir(h) => write!(f, "IR{h}"),
        }
    }
}

/// Parse failure for a block name; `constant` marks an attempt to restrict
/// the constant row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadBlockName {
    pub constant: bool,
}

impl FromStr for BlockId {
    type Err = BadBlockName;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        if upper == "A0" {
            return Ok(BlockId::A0);
        }
        if matches!(upper.as_str(), "C" | "CONST" | "CONSTANT") {
            return Err(BadBlockName { constant: true });
        }
        let index = |prefix: &str| -> Option<usize> {
            let digits = upper.strip_prefix(prefix)?;
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            digits.parse().ok()
        };
        if let Some(l) = index("LAG") {
            return if l >= 1 {
                Ok(BlockId::Lag(l))
            } else {
                Err(BadBlockName { constant: false })
            };
        }
        if let Some(h) = index("IR") {
            return Ok(BlockId::Ir(h));
        }
        Err(BadBlockName { constant: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Zero,
    Free,
}

/// One restricted block; `pattern[i][j]` is the restriction on cell (i, j).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionBlock {
    pub id: BlockId,
    pub pattern: Vec<Vec<Cell>>,
}

/// A single restricted cell of `f`; indices are 0-based, displayed 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub block: BlockId,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.block, self.row + 1, self.col + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionSpec {
    dims: ModelDims,
    blocks: Vec<RestrictionBlock>,
}

impl RestrictionSpec {
    pub fn new(
        dims: ModelDims,
        blocks: Vec<RestrictionBlock>,
    ) -> std::result::Result<Self, SpecError> {
        if blocks.is_empty() {
            return Err(SpecError::NoBlocks);
        }
        let mut seen = HashSet::new();
        for b in &blocks {
            if !b.id.validate(dims) {
                return Err(SpecError::UnknownBlock {
                    line: 0,
                    name: b.id.to_string(),
                });
            }
            if !seen.insert(b.id) {
                return Err(SpecError::DuplicateBlock {
                    line: 0,
                    name: b.id.to_string(),
                });
            }
            if b.pattern.len() != dims.n {
                return Err(SpecError::DimensionMismatch {
                    line: 0,
                    expected: dims.n,
                    found: b.pattern.len(),
                });
            }
            if let Some(row) = b.pattern.iter().find(|r| r.len() != dims.n) {
                return Err(SpecError::DimensionMismatch {
                    line: 0,
                    expected: dims.n,
                    found: row.len(),
                });
            }
        }
        Ok(RestrictionSpec { dims, blocks })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn blocks(&self) -> &[RestrictionBlock] {
        &self.blocks
    }

    pub fn layout(&self) -> Vec<BlockId> {
        self.blocks.iter().map(|b| b.id).collect()
    }

    /// Every zero cell, block by block in row-major order.
    pub fn zero_cells(&self) -> Vec<CellRef> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for (row, cells) in b.pattern.iter().enumerate() {
                for (col, cell) in cells.iter().enumerate() {
                    if *cell == Cell::Zero {
                        out.push(CellRef {
                            block: b.id,
                            row,
                            col,
                        });
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for RestrictionSpec {
    /// Renders the spec in the text grammar accepted by [`parse_spec`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.dims.n)?;
        writeln!(f, "p = {}", self.dims.p)?;
        for b in &self.blocks {
            writeln!(f, "block {}", b.id)?;
            for row in &b.pattern {
                let cells: Vec<&str> = row
                    .iter()
                    .map(|c| match c {
                        Cell::Zero => "0",
                        Cell::Free => "x",
                    })
                    .collect();
                writeln!(f, "  {}", cells.join(" "))?;
            }
        }
        Ok(())
    }
}

impl FromStr for RestrictionSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_spec(s)
    }
}

struct OpenBlock {
    id: BlockId,
    line: usize,
    rows: Vec<Vec<Cell>>,
}

fn close_block(
    open: Option<OpenBlock>,
    n: usize,
    blocks: &mut Vec<RestrictionBlock>,
) -> std::result::Result<(), SpecError> {
    if let Some(b) = open {
        if b.rows.len() != n {
            return Err(SpecError::DimensionMismatch {
                line: b.line,
                expected: n,
                found: b.rows.len(),
            });
        }
        blocks.push(RestrictionBlock {
            id: b.id,
            pattern: b.rows,
        });
    }
    Ok(())
}

/// Reads a restriction-spec document.
///
/// ```text
/// n = 3
/// p = 1
/// block A0
///   x x x
///   0 x x
///   0 x x
/// ```
///
/// `p` defaults to 0 when omitted; `n` must precede the first block.
pub fn parse_spec(text: &str) -> std::result::Result<RestrictionSpec, SpecError> {
    let mut n: Option<usize> = None;
    let mut p: Option<usize> = None;
    let mut blocks: Vec<RestrictionBlock> = Vec::new();
    let mut open: Option<OpenBlock> = None;
    let mut seen: HashSet<BlockId> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let syntax = |column: usize, message: String| SpecError::Syntax {
            line: line_no,
            column,
            message,
        };

        if let Some((key, value)) = trimmed.split_once('=') {
            let key = key.trim();
            let value_str = value.trim();
            let eq = content.find('=').unwrap();
            let value_col = eq
                + 1
                + content[eq + 1..]
                    .find(|ch: char| !ch.is_whitespace())
                    .unwrap_or(0)
                + 1;
            if !blocks.is_empty() || open.is_some() {
                return Err(syntax(
                    indent + 1,
                    format!("`{key}` must be set before the first block"),
                ));
            }
            let parsed: usize = value_str.parse().map_err(|_| {
                syntax(
                    value_col,
                    format!("expected a nonnegative integer, found `{value_str}`"),
                )
            })?;
            match key {
                "n" => {
                    if n.is_some() {
                        return Err(syntax(indent + 1, "`n` set twice".into()));
                    }
                    if parsed == 0 {
                        return Err(syntax(value_col, "n must be positive".into()));
                    }
                    n = Some(parsed);
                }
                "p" => {
                    if p.is_some() {
                        return Err(syntax(indent + 1, "`p` set twice".into()));
                    }
                    p = Some(parsed);
                }
                other => return Err(syntax(indent + 1, format!("unknown setting `{other}`"))),
            }
            continue;
        }

        let mut tokens = trimmed.split_whitespace();
        if trimmed.starts_with("block") && trimmed[5..].starts_with(char::is_whitespace)
            || trimmed == "block"
        {
            tokens.next();
            let Some(dim_n) = n else {
                return Err(syntax(
                    indent + 1,
                    "`n = <int>` must come before the first block".into(),
                ));
            };
            let dims = ModelDims {
                n: dim_n,
                p: p.unwrap_or(0),
            };
            let name = tokens
                .next()
                .ok_or_else(|| syntax(indent + 6, "missing block name".into()))?;
            if let Some(extra) = tokens.next() {
                let col = content.find(extra).map(|c| c + 1).unwrap_or(1);
                return Err(syntax(
                    col,
                    format!("unexpected token `{extra}` after block name"),
                ));
            }
            let id = match name.parse::<BlockId>() {
                Ok(id) if id.validate(dims) => id,
                Ok(_) => {
                    return Err(SpecError::UnknownBlock {
                        line: line_no,
                        name: name.to_string(),
                    })
                }
                Err(BadBlockName { constant: true }) => {
                    return Err(SpecError::ConstantRestricted { line: line_no })
                }
                Err(_) => {
                    return Err(SpecError::UnknownBlock {
                        line: line_no,
                        name: name.to_string(),
                    })
                }
            };
            close_block(open.take(), dim_n, &mut blocks)?;
            if !seen.insert(id) {
                return Err(SpecError::DuplicateBlock {
                    line: line_no,
                    name: name.to_string(),
                });
            }
            open = Some(OpenBlock {
                id,
                line: line_no,
                rows: Vec::new(),
            });
            continue;
        }

        let Some(block) = open.as_mut() else {
            return Err(syntax(
                indent + 1,
                format!("expected `n =`, `p =` or `block`, found `{trimmed}`"),
            ));
        };
        let dim_n = n.expect("n is set before any block opens");
        let mut row = Vec::with_capacity(dim_n);
        let mut offset = 0;
        for token in content.split_whitespace() {
            let at = content[offset..].find(token).unwrap() + offset;
            offset = at + token.len();
            row.push(match token {
                "0" => Cell::Zero,
                "x" | "X" => Cell::Free,
                other => {
                    return Err(syntax(
                        at + 1,
                        format!("cell must be `0` or `x`, found `{other}`"),
                    ))
                }
            });
        }
        if row.len() != dim_n {
            return Err(SpecError::DimensionMismatch {
                line: line_no,
                expected: dim_n,
                found: row.len(),
            });
        }
        if block.rows.len() == dim_n {
            return Err(SpecError::DimensionMismatch {
                line: line_no,
                expected: dim_n,
                found: dim_n + 1,
            });
        }
        block.rows.push(row);
    }

    let Some(dim_n) = n else {
        return Err(SpecError::Syntax {
            line: 1,
            column: 1,
            message: "missing `n = <int>`".into(),
        });
    };
    close_block(open.take(), dim_n, &mut blocks)?;
    RestrictionSpec::new(
        ModelDims {
            n: dim_n,
            p: p.unwrap_or(0),
        },
        blocks,
    )
}

/// Restrictions compiled into per-column selection matrices, columns ordered
/// so that the restriction counts are nonincreasing.
///
/// All per-column vectors are indexed by position in the permuted order;
/// `permutation[j]` is the original column placed at position `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledRestrictions {
    dims: ModelDims,
    layout: Vec<BlockId>,
    k: usize,
    q_matrices: Vec<Matrix>,
    /// Indices of the nonzero rows of each `Q_j`.
    active_rows: Vec<Vec<usize>>,
    /// Cell label of each active row, when the row is a plain selector.
    row_cells: Vec<Vec<Option<CellRef>>>,
    q: Vec<usize>,
    permutation: Vec<usize>,
    total: usize,
}

/// Builds `Q_j` for every column and orders columns by decreasing `q_j`
/// (stable, so ties keep their original order).
pub fn compile(spec: &RestrictionSpec) -> CompiledRestrictions {
    let n = spec.dims.n;
    let k = n * spec.blocks.len();
    let mut selectors: Vec<Vec<(usize, CellRef)>> = vec![Vec::new(); n];
    for (bi, b) in spec.blocks.iter().enumerate() {
        for (row, cells) in b.pattern.iter().enumerate() {
            for (col, cell) in cells.iter().enumerate() {
                if *cell == Cell::Zero {
                    selectors[col].push((
                        bi * n + row,
                        CellRef {
                            block: b.id,
                            row,
                            col,
                        },
                    ));
                }
            }
        }
    }

    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.sort_by(|&a, &b| selectors[b].len().cmp(&selectors[a].len()));

    let mut q_matrices = Vec::with_capacity(n);
    let mut active_rows = Vec::with_capacity(n);
    let mut row_cells = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for &col in &permutation {
        let sel = &selectors[col];
        let mut qm = Matrix::zeros(k, k);
        for (r, (f_row, _)) in sel.iter().enumerate() {
            qm[(r, *f_row)] = 1.0;
        }
        q_matrices.push(qm);
        active_rows.push((0..sel.len()).collect());
        row_cells.push(sel.iter().map(|(_, c)| Some(*c)).collect());
        q.push(sel.len());
    }
    let total = q.iter().sum();
    CompiledRestrictions {
        dims: spec.dims,
        layout: spec.layout(),
        k,
        q_matrices,
        active_rows,
        row_cells,
        q,
        permutation,
        total,
    }
}

impl CompiledRestrictions {
    /// General linear restrictions `Q_j f e_j = 0` on a stacked layout, one
    /// k x k matrix per original column. Ranks are numerical.
    pub fn from_matrices(
        dims: ModelDims,
        layout: Vec<BlockId>,
        q_original: Vec<Matrix>,
    ) -> Result<Self> {
        use crate::error::Error;
        let n = dims.n;
        let k = n * layout.len();
        if layout.is_empty() || layout.iter().any(|b| !b.validate(dims)) {
            return Err(Error::Dimensions("invalid block layout".into()));
        }
        if q_original.len() != n || q_original.iter().any(|m| m.nrows() != k || m.ncols() != k) {
            return Err(Error::Dimensions(format!(
                "need {n} restriction matrices of size {k}x{k}"
            )));
        }
        let ranks: Vec<usize> = q_original
            .iter()
            .map(|m| numerical_rank(m, RankTolerance::Default))
            .collect();
        let mut permutation: Vec<usize> = (0..n).collect();
        permutation.sort_by(|&a, &b| ranks[b].cmp(&ranks[a]));
        let mut q_matrices = Vec::with_capacity(n);
        let mut active_rows = Vec::with_capacity(n);
        let mut row_cells = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        for &col in &permutation {
            let m = &q_original[col];
            let rows: Vec<usize> = (0..k)
                .filter(|&r| m.row(r).iter().any(|&x| x != 0.0))
                .collect();
            row_cells.push(vec![None; rows.len()]);
            active_rows.push(rows);
            q_matrices.push(m.clone());
            q.push(ranks[col]);
        }
        let total = q.iter().sum();
        Ok(CompiledRestrictions {
            dims,
            layout,
            k,
            q_matrices,
            active_rows,
            row_cells,
            q,
            permutation,
            total,
        })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.n
    }

    /// Rows of the stacked `f`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layout(&self) -> &[BlockId] {
        &self.layout
    }

    /// `Q_j` for permuted position `j` (0-based).
    pub fn q_matrix(&self, j: usize) -> &Matrix {
        &self.q_matrices[j]
    }

    /// Restriction counts in permuted (nonincreasing) order.
    pub fn q(&self) -> &[usize] {
        &self.q
    }

    /// Restriction counts in the original column order.
    pub fn q_original(&self) -> Vec<usize> {
        let mut out = vec![0; self.n()];
        for (j, &col) in self.permutation.iter().enumerate() {
            out[col] = self.q[j];
        }
        out
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Cell labels of the rows of `Q̄_j f`.
    pub fn row_cells(&self, j: usize) -> &[Option<CellRef>] {
        &self.row_cells[j]
    }

    /// `Q̄_j X`: `Q_j X` with the rows belonging to zero rows of `Q_j` dropped.
    pub fn reduced_rows(&self, j: usize, x: &Matrix) -> Matrix {
        let rows = &self.active_rows[j];
        let qx = &self.q_matrices[j] * x;
        Matrix::from_fn(rows.len(), x.ncols(), |r, c| qx[(rows[r], c)])
    }

    /// Stacked block values `f(A0, A+)` in declared order (k x n).
    pub fn assemble_f(&self, s: &StructuralParams) -> Result<Matrix> {
        assemble_layout(s, &self.layout)
    }

    /// `max_j |Q_j f e_j|`, each `Q_j` paired with its original column.
    pub fn residual(&self, s: &StructuralParams) -> Result<f64> {
        let f = self.assemble_f(s)?;
        let mut worst = 0.0_f64;
        for (j, &col) in self.permutation.iter().enumerate() {
            let v = &self.q_matrices[j] * f.column(col);
            worst = worst.max(v.amax());
        }
        Ok(worst)
    }
}

fn assemble_layout(s: &StructuralParams, layout: &[BlockId]) -> Result<Matrix> {
    let n = s.dims().n;
    let mut f = Matrix::zeros(n * layout.len(), n);
    for (bi, id) in layout.iter().enumerate() {
        f.view_mut((bi * n, 0), (n, n)).copy_from(&id.value(s)?);
    }
    Ok(f)
}

/// Stacked `f(A0, A+)` for the blocks of `spec`.
pub fn assemble_f(s: &StructuralParams, spec: &RestrictionSpec) -> Result<Matrix> {
    assemble_layout(s, &spec.layout())
}

/// Largest violation of the zero restrictions at `s`.
pub fn restriction_residual(s: &StructuralParams, c: &CompiledRestrictions) -> Result<f64> {
    c.residual(s)
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn parses_counterexample() {
        let spec = parse_spec(COUNTEREXAMPLE).unwrap();
        assert_eq!(spec.dims(), ModelDims { n: 3, p: 1 });
        assert_eq!(spec.layout(), vec![BlockId::A0, BlockId::Ir(0)]);
        let zeros: Vec<String> = spec.zero_cells().iter().map(|c| c.to_string()).collect();
        assert_eq!(zeros, vec!["A0(2,1)", "A0(3,1)", "IR0(1,2)"]);
        assert_eq!(parse_spec(&spec.to_string()).unwrap(), spec);
    }

    #[test]
    fn all_free_block() {
        let spec = parse_spec("n = 2\nblock A0\n x x\n x x\n").unwrap();
        assert!(spec.zero_cells().is_empty());
        assert_eq!(spec.dims().p, 0);
        let c = compile(&spec);
        assert_eq!(c.q(), &[0, 0]);
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn parse_errors() {
        let short = "n = 3\np = 1\nblock A0\n x x\n";
        assert_eq!(
            parse_spec(short),
            Err(SpecError::DimensionMismatch {
                line: 4,
                expected: 3,
                found: 2
            })
        );
        let missing_row = "n = 2\nblock A0\n x x\nblock IR0\n x x\n x x\n";
        assert!(matches!(
            parse_spec(missing_row),
            Err(SpecError::DimensionMismatch { line: 2, .. })
        ));
        let too_many = "n = 1\nblock A0\n x\n 0\n";
        assert!(matches!(
            parse_spec(too_many),
            Err(SpecError::DimensionMismatch { line: 4, .. })
        ));
        let bad_cell = "n = 2\nblock A0\n x y\n x x\n";
        assert_eq!(
            parse_spec(bad_cell),
            Err(SpecError::Syntax {
                line: 3,
                column: 4,
                message: "cell must be `0` or `x`, found `y`".into()
            })
        );
        assert!(matches!(
            parse_spec("n = 2\np = 1\nblock LAG2\n x x\n x x\n"),
            Err(SpecError::UnknownBlock { line: 3, .. })
        ));
        assert!(matches!(
            parse_spec("n = 2\nblock FOO\n x x\n x x\n"),
            Err(SpecError::UnknownBlock { .. })
        ));
        assert!(matches!(
            parse_spec("n = 1\nblock A0\n x\nblock A0\n 0\n"),
            Err(SpecError::DuplicateBlock { line: 4, .. })
        ));
        assert!(matches!(
            parse_spec("n = 1\nblock c\n 0\n"),
            Err(SpecError::ConstantRestricted { line: 2 })
        ));
        assert!(matches!(
            parse_spec("block A0\n x\n"),
            Err(SpecError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_spec("n = two\n"),
            Err(SpecError::Syntax {
                line: 1,
                column: 5,
                ..
            })
        ));
        assert_eq!(parse_spec("n = 2\n"), Err(SpecError::NoBlocks));
    }

    #[test]
    fn comments_and_order() {
        let text = "# header\nn = 2 # vars\np = 2\nblock LAG2 # second lag\n 0 x\n x x\nblock IR3\n x x\n x 0\n";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.layout(), vec![BlockId::Lag(2), BlockId::Ir(3)]);
    }

    #[test]
    fn compile_counterexample() {
        let c = compile(&parse_spec(COUNTEREXAMPLE).unwrap());
        assert_eq!(c.q(), &[2, 1, 0]);
        assert_eq!(c.total(), 3);
        assert_eq!(c.permutation(), &[0, 1, 2]);
        assert_eq!(c.k(), 6);
        let mut q1 = Matrix::zeros(6, 6);
        q1[(0, 1)] = 1.0;
        q1[(1, 2)] = 1.0;
        let mut q2 = Matrix::zeros(6, 6);
        q2[(0, 3)] = 1.0;
        assert_eq!(c.q_matrix(0), &q1);
        assert_eq!(c.q_matrix(1), &q2);
        assert_eq!(c.q_matrix(2), &Matrix::zeros(6, 6));
    }

    #[test]
    fn compile_permutes_stably() {
        let spec = parse_spec("n = 3\nblock A0\n x 0 x\n x 0 0\n x x x\n").unwrap();
        let c = compile(&spec);
        assert_eq!(c.q(), &[2, 1, 0]);
        assert_eq!(c.permutation(), &[1, 2, 0]);
        assert_eq!(c.q_original(), vec![0, 2, 1]);

        let tie = parse_spec("n = 3\nblock A0\n x x x\n 0 x 0\n x x x\n").unwrap();
        assert_eq!(compile(&tie).permutation(), &[0, 2, 1]);
    }

    #[test]
    fn general_matrices_use_numerical_rank() {
        let dims = ModelDims { n: 2, p: 0 };
        let mut q0 = Matrix::zeros(2, 2);
        q0[(0, 0)] = 1.0;
        q0[(1, 0)] = 2.0;
        let c = CompiledRestrictions::from_matrices(
            dims,
            vec![BlockId::A0],
            vec![Matrix::zeros(2, 2), q0],
        )
        .unwrap();
        assert_eq!(c.q(), &[1, 0]);
        assert_eq!(c.permutation(), &[1, 0]);
        assert_eq!(c.reduced_rows(0, &Matrix::identity(2, 2)).nrows(), 2);
    }
}
