use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use petgraph::unionfind::UnionFind;
use thiserror::Error;

use super::{Elem, Relation, Tuple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("block {block} has row total {rows} but column total {cols}")]
    InconsistentMargins {
        block: usize,
        rows: BigUint,
        cols: BigUint,
    },
    #[error("block {block} has zero total")]
    EmptyBlock { block: usize },
    #[error("missing margin for a label of block {block}")]
    MissingMargin { block: usize },
    #[error("entry ({row}, {col}) of block {block} is not an integer")]
    NonIntegral {
        block: usize,
        row: usize,
        col: usize,
    },
    #[error("block decomposition is not disjoint")]
    OverlappingBlocks,
    #[error("relation has arity {0}, expected 2")]
    NotBinary(usize),
}

/// A matrix of non-negative integers indexed by row and column labels.
/// Absent entries are zero.
#[derive(Clone, PartialEq, Eq)]
pub struct CountMatrix<L: Ord + Clone = Elem> {
    rows: Vec<L>,
    cols: Vec<L>,
    row_index: BTreeMap<L, usize>,
    col_index: BTreeMap<L, usize>,
    entries: Vec<BigUint>,
}

impl<L: Ord + Clone> CountMatrix<L> {
    /// A zero matrix. Labels are sorted and deduplicated.
    pub fn zeros(rows: impl IntoIterator<Item = L>, cols: impl IntoIterator<Item = L>) -> Self {
        let mut rows: Vec<L> = rows.into_iter().collect();
        rows.sort();
        rows.dedup();
        let mut cols: Vec<L> = cols.into_iter().collect();
        cols.sort();
        cols.dedup();
        let row_index = rows
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let col_index = cols
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let entries = vec![BigUint::zero(); rows.len() * cols.len()];
        Self {
            rows,
            cols,
            row_index,
            col_index,
            entries,
        }
    }

    /// Builds a matrix from a dense grid; `rows` and `cols` must already be
    /// sorted and distinct.
    pub fn from_grid<T: Into<BigUint> + Clone>(
        rows: Vec<L>,
        cols: Vec<L>,
        grid: &[Vec<T>],
    ) -> Self {
        let mut m = Self::zeros(rows.clone(), cols.clone());
        assert!(m.rows == rows, "row labels must be sorted and distinct");
        assert!(m.cols == cols, "column labels must be sorted and distinct");
        assert_eq!(grid.len(), rows.len());
        for (i, line) in grid.iter().enumerate() {
            assert_eq!(line.len(), cols.len());
            for (j, v) in line.iter().enumerate() {
                m.entries[i * m.cols.len() + j] = v.clone().into();
            }
        }
        m
    }

    pub fn rows(&self) -> &[L] {
        &self.rows
    }

    pub fn cols(&self) -> &[L] {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_position(&self, label: &L) -> Option<usize> {
        self.row_index.get(label).copied()
    }

    pub fn col_position(&self, label: &L) -> Option<usize> {
        self.col_index.get(label).copied()
    }

    pub fn at(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.cols.len() + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut BigUint {
        let w = self.cols.len();
        &mut self.entries[i * w + j]
    }

    /// Entry by label; zero when either label is unknown.
    pub fn get(&self, row: &L, col: &L) -> BigUint {
        match (self.row_position(row), self.col_position(col)) {
            (Some(i), Some(j)) => self.at(i, j).clone(),
            _ => BigUint::zero(),
        }
    }

    /// Sets an entry by label. Panics if a label is unknown.
    pub fn set(&mut self, row: &L, col: &L, value: BigUint) {
        let i = self.row_position(row).expect("unknown row label");
        let j = self.col_position(col).expect("unknown column label");
        *self.at_mut(i, j) = value;
    }

    pub fn add(&mut self, row: &L, col: &L, value: &BigUint) {
        let i = self.row_position(row).expect("unknown row label");
        let j = self.col_position(col).expect("unknown column label");
        *self.at_mut(i, j) += value;
    }

    pub fn row_sums(&self) -> BTreeMap<L, BigUint> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let s = (0..self.ncols()).map(|j| self.at(i, j)).sum();
                (l.clone(), s)
            })
            .collect()
    }

    pub fn col_sums(&self) -> BTreeMap<L, BigUint> {
        self.cols
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let s = (0..self.nrows()).map(|i| self.at(i, j)).sum();
                (l.clone(), s)
            })
            .collect()
    }

    pub fn total(&self) -> BigUint {
        self.entries.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Index pairs of the nonzero entries, row-major.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                if !self.at(i, j).is_zero() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// The dense grid, as rows of entries.
    pub fn grid(&self) -> Vec<Vec<BigUint>> {
        (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|j| self.at(i, j).clone()).collect())
            .collect()
    }
}

impl<L: Ord + Clone> fmt::Display for CountMatrix<L> {
    /// Renders the entries as `[[a,b],[c,d]]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.nrows() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.ncols() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.at(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<L: Ord + Clone + fmt::Debug> fmt::Debug for CountMatrix<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CountMatrix(rows={:?}, cols={:?}, {})",
            self.rows, self.cols, self
        )
    }
}

/// Blocks (connected components) of a bipartite support relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecomposition<L: Ord + Clone = Elem> {
    blocks: Vec<(Vec<L>, Vec<L>)>,
}

impl<L: Ord + Clone> BlockDecomposition<L> {
    /// Canonicalizes: sides sorted, blocks ordered by least row label.
    /// Rejects overlapping sides and blocks with an empty side.
    pub fn new(blocks: Vec<(Vec<L>, Vec<L>)>) -> Result<Self, MatrixError> {
        let mut blocks: Vec<(Vec<L>, Vec<L>)> = blocks
            .into_iter()
            .map(|(mut r, mut c)| {
                r.sort();
                r.dedup();
                c.sort();
                c.dedup();
                (r, c)
            })
            .collect();
        if blocks.iter().any(|(r, c)| r.is_empty() || c.is_empty()) {
            return Err(MatrixError::OverlappingBlocks);
        }
        blocks.sort();
        let mut rows = std::collections::BTreeSet::new();
        let mut cols = std::collections::BTreeSet::new();
        for (r, c) in &blocks {
            for x in r {
                if !rows.insert(x.clone()) {
                    return Err(MatrixError::OverlappingBlocks);
                }
            }
            for y in c {
                if !cols.insert(y.clone()) {
                    return Err(MatrixError::OverlappingBlocks);
                }
            }
        }
        Ok(Self { blocks })
    }

    /// Connected components of the bipartite graph with the given edges.
    pub fn from_edges(edges: &[(L, L)]) -> Self {
        let mut row_ids: BTreeMap<L, usize> = BTreeMap::new();
        let mut col_ids: BTreeMap<L, usize> = BTreeMap::new();
        for (r, c) in edges {
            let n = row_ids.len();
            row_ids.entry(r.clone()).or_insert(n);
            let n = col_ids.len();
            col_ids.entry(c.clone()).or_insert(n);
        }
        let offset = row_ids.len();
        let mut uf = UnionFind::<usize>::new(offset + col_ids.len());
        for (r, c) in edges {
            uf.union(row_ids[r], offset + col_ids[c]);
        }
        let mut comps: BTreeMap<usize, (Vec<L>, Vec<L>)> = BTreeMap::new();
        for (r, &i) in &row_ids {
            comps.entry(uf.find(i)).or_default().0.push(r.clone());
        }
        for (c, &j) in &col_ids {
            comps
                .entry(uf.find(offset + j))
                .or_default()
                .1
                .push(c.clone());
        }
        Self::new(comps.into_values().collect()).expect("components are disjoint")
    }

    pub fn blocks(&self) -> &[(Vec<L>, Vec<L>)] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of_row(&self, row: &L) -> Option<usize> {
        self.blocks
            .iter()
            .position(|(r, _)| r.binary_search(row).is_ok())
    }

    pub fn block_of_col(&self, col: &L) -> Option<usize> {
        self.blocks
            .iter()
            .position(|(_, c)| c.binary_search(col).is_ok())
    }
}

/// Blocks of a binary relation viewed as a bipartite graph between its first
/// and second projections.
pub fn block_decompose(b: &Relation) -> Result<BlockDecomposition<Elem>, MatrixError> {
    if b.arity() != 2 {
        return Err(MatrixError::NotBinary(b.arity()));
    }
    let edges: Vec<(Elem, Elem)> = b.iter().map(|t| (t[0], t[1])).collect();
    Ok(BlockDecomposition::from_edges(&edges))
}

/// Whether `r`, split into its first `left` positions and the rest, is a
/// disjoint union of complete bipartite blocks.
pub fn is_rectangular(r: &Relation, left: usize) -> bool {
    assert!(left <= r.arity(), "split point beyond arity");
    let edges: Vec<(Tuple, Tuple)> = r
        .iter()
        .map(|t| (t[..left].to_vec(), t[left..].to_vec()))
        .collect();
    edges_are_rectangular(&edges)
}

fn edges_are_rectangular<L: Ord + Clone>(edges: &[(L, L)]) -> bool {
    let blocks = BlockDecomposition::from_edges(edges);
    let mut per_block = vec![0usize; blocks.len()];
    for (r, _) in edges {
        per_block[blocks.block_of_row(r).expect("edge row lies in a block")] += 1;
    }
    blocks
        .blocks()
        .iter()
        .zip(per_block)
        .all(|((rows, cols), n)| rows.len() * cols.len() == n)
}

/// Blocks of the support of a matrix, by label.
pub fn matrix_blocks<L: Ord + Clone>(m: &CountMatrix<L>) -> BlockDecomposition<L> {
    let edges: Vec<(L, L)> = m
        .support()
        .into_iter()
        .map(|(i, j)| (m.rows()[i].clone(), m.cols()[j].clone()))
        .collect();
    BlockDecomposition::from_edges(&edges)
}

pub fn support_is_rectangular<L: Ord + Clone>(m: &CountMatrix<L>) -> bool {
    let edges: Vec<(usize, usize)> = m.support();
    edges_are_rectangular(&edges)
}

/// True iff the support of `m` is rectangular and every block has rank one.
pub fn is_rank_one_block<L: Ord + Clone>(m: &CountMatrix<L>) -> bool {
    let edges = m.support();
    if !edges_are_rectangular(&edges) {
        return false;
    }
    let blocks = BlockDecomposition::from_edges(&edges);
    blocks.blocks().iter().all(|(rows, cols)| {
        let (r0, c0) = (rows[0], cols[0]);
        let pivot = m.at(r0, c0);
        rows.iter().all(|&r| {
            cols.iter()
                .all(|&c| m.at(r, c) * pivot == m.at(r, c0) * m.at(r0, c))
        })
    })
}

/// `a_ir² a_js² a_is a_jr = a_is² a_jr² a_ir a_js` for every pair of rows
/// `i, j` and pair of columns `r, s`. On a matrix with rectangular support
/// this holds iff the matrix is a rank-one block matrix.
pub fn satisfies_rank_one_identity<L: Ord + Clone>(m: &CountMatrix<L>) -> bool {
    let (k, l) = (m.nrows(), m.ncols());
    for i in 0..k {
        for j in (i + 1)..k {
            for r in 0..l {
                for s in (r + 1)..l {
                    let (air, ais, ajr, ajs) = (m.at(i, r), m.at(i, s), m.at(j, r), m.at(j, s));
                    let lhs = air * air * ajs * ajs * ais * ajr;
                    let rhs = ais * ais * ajr * ajr * air * ajs;
                    if lhs != rhs {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Rebuilds the unique rank-one block matrix with the given blocks and
/// margins: `f(x, y) = f(x, ·) f(·, y) / f(·, ·)` inside each block.
pub fn reconstruct_rank_one<L: Ord + Clone>(
    blocks: &BlockDecomposition<L>,
    row_totals: &BTreeMap<L, BigUint>,
    col_totals: &BTreeMap<L, BigUint>,
) -> Result<CountMatrix<L>, MatrixError> {
    let mut m = CountMatrix::zeros(
        blocks.blocks().iter().flat_map(|(r, _)| r.iter().cloned()),
        blocks.blocks().iter().flat_map(|(_, c)| c.iter().cloned()),
    );
    for (b, (rows, cols)) in blocks.blocks().iter().enumerate() {
        let margins = |labels: &[L], totals: &BTreeMap<L, BigUint>| {
            labels
                .iter()
                .map(|l| {
                    totals
                        .get(l)
                        .cloned()
                        .ok_or(MatrixError::MissingMargin { block: b })
                })
                .collect::<Result<Vec<BigUint>, _>>()
        };
        let rt = margins(rows, row_totals)?;
        let ct = margins(cols, col_totals)?;
        let row_sum: BigUint = rt.iter().sum();
        let col_sum: BigUint = ct.iter().sum();
        if row_sum != col_sum {
            return Err(MatrixError::InconsistentMargins {
                block: b,
                rows: row_sum,
                cols: col_sum,
            });
        }
        if row_sum.is_zero() {
            return Err(MatrixError::EmptyBlock { block: b });
        }
        for (x, r) in rows.iter().zip(&rt) {
            for (y, c) in cols.iter().zip(&ct) {
                let (q, rem) = (r * c).div_rem(&row_sum);
                if !rem.is_zero() {
                    return Err(MatrixError::NonIntegral {
                        block: b,
                        row: m.row_position(x).unwrap(),
                        col: m.col_position(y).unwrap(),
                    });
                }
                m.set(x, y, q);
            }
        }
    }
    Ok(m)
}
