//! Binary norm tree over the iterate `x` and residual `F(x)`.
//!
//! The tree keeps, for every dyadic block of indices, the sum of squares of
//! the entries in that block. The root therefore answers `‖x‖₂` / `‖F‖₂` in
//! O(1), any internal node answers the partial norm of its block, and a
//! batch of `k` leaf writes is absorbed in `O(k log N)` node recomputations.
//!
//! Internal nodes are recomputed from their children rather than adjusted by
//! square differences, so no subtractive cancellation accumulates: node
//! values are always a bona fide pairwise sum of the current leaf squares.

use crate::error::{Error, Result};

/// Which of the two tracked vectors a leaf write targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafKind {
    X,
    F,
}

/// A single leaf assignment. Batched writes with duplicate indices resolve
/// last-write-wins.
#[derive(Clone, Copy, Debug)]
pub struct LeafUpdate {
    pub kind: LeafKind,
    pub index: usize,
    pub value: f64,
}

impl LeafUpdate {
    pub fn x(index: usize, value: f64) -> Self {
        LeafUpdate { kind: LeafKind::X, index, value }
    }

    pub fn f(index: usize, value: f64) -> Self {
        LeafUpdate { kind: LeafKind::F, index, value }
    }
}

/// Paired binary sum trees for `x` and `F(x)`.
///
/// Leaves live at level `n = ⌈log₂ N⌉`; a node `(level, idx)` with
/// `level < n` covers leaves `[idx·2^(n-level), (idx+1)·2^(n-level))`.
/// Leaves past `N` are zero padding and cannot be written.
#[derive(Clone, Debug)]
pub struct NormTree {
    dim: usize,
    levels: usize,
    leaf_x: Vec<f64>,
    leaf_f: Vec<f64>,
    sq_x: Vec<f64>,
    sq_f: Vec<f64>,
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Heap offset of the first node at `level`; levels `0..levels` are internal.
#[inline]
fn level_offset(level: usize) -> usize {
    (1 << level) - 1
}

impl NormTree {
    /// Builds the tree in O(N). `x` and `f` must have equal nonzero length.
    pub fn build(x: &[f64], f: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("norm tree dimension must be >= 1".into()));
        }
        if x.len() != f.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: f.len() });
        }
        let dim = x.len();
        let levels = ceil_log2(dim);
        let padded = 1usize << levels;
        let mut leaf_x = vec![0.0; padded];
        let mut leaf_f = vec![0.0; padded];
        leaf_x[..dim].copy_from_slice(x);
        leaf_f[..dim].copy_from_slice(f);
        let mut tree = NormTree {
            dim,
            levels,
            leaf_x,
            leaf_f,
            sq_x: vec![0.0; padded - 1],
            sq_f: vec![0.0; padded - 1],
        };
        tree.rebuild_all();
        Ok(tree)
    }

    fn rebuild_all(&mut self) {
        if self.levels == 0 {
            return;
        }
        let bottom = level_offset(self.levels - 1);
        for j in 0..(1 << (self.levels - 1)) {
            self.sq_x[bottom + j] = self.leaf_x[2 * j].powi(2) + self.leaf_x[2 * j + 1].powi(2);
            self.sq_f[bottom + j] = self.leaf_f[2 * j].powi(2) + self.leaf_f[2 * j + 1].powi(2);
        }
        for level in (0..self.levels.saturating_sub(1)).rev() {
            let off = level_offset(level);
            let child = level_offset(level + 1);
            for j in 0..(1 << level) {
                self.sq_x[off + j] = self.sq_x[child + 2 * j] + self.sq_x[child + 2 * j + 1];
                self.sq_f[off + j] = self.sq_f[child + 2 * j] + self.sq_f[child + 2 * j + 1];
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of levels below the root; leaves sit at this level.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Current `x`, without padding.
    pub fn x(&self) -> &[f64] {
        &self.leaf_x[..self.dim]
    }

    /// Current `F(x)`, without padding.
    pub fn f(&self) -> &[f64] {
        &self.leaf_f[..self.dim]
    }

    pub fn get_x(&self, index: usize) -> Result<f64> {
        if index >= self.dim {
            return Err(Error::IndexOutOfRange { index, dim: self.dim });
        }
        Ok(self.leaf_x[index])
    }

    pub fn get_f(&self, index: usize) -> Result<f64> {
        if index >= self.dim {
            return Err(Error::IndexOutOfRange { index, dim: self.dim });
        }
        Ok(self.leaf_f[index])
    }

    /// `‖x‖` restricted to the block of `(level, node)`.
    ///
    /// `level == levels()` addresses single leaves (padding included, always
    /// zero there); `level == 0` is the full norm.
    pub fn partial_norm_x(&self, level: usize, node: usize) -> Result<f64> {
        self.partial_norm(level, node, LeafKind::X)
    }

    /// `‖F‖` restricted to the block of `(level, node)`.
    pub fn partial_norm_f(&self, level: usize, node: usize) -> Result<f64> {
        self.partial_norm(level, node, LeafKind::F)
    }

    fn partial_norm(&self, level: usize, node: usize, kind: LeafKind) -> Result<f64> {
        if level > self.levels || node >= (1usize << level) {
            return Err(Error::IndexOutOfRange { index: node, dim: 1usize << level.min(self.levels) });
        }
        let (leaves, sq) = match kind {
            LeafKind::X => (&self.leaf_x, &self.sq_x),
            LeafKind::F => (&self.leaf_f, &self.sq_f),
        };
        if level == self.levels {
            Ok(leaves[node].abs())
        } else {
            Ok(sq[level_offset(level) + node].sqrt())
        }
    }

    /// Applies a batch of leaf writes and repairs all affected ancestors.
    ///
    /// Validates every index first; on error the tree is unmodified. Returns
    /// the number of touched nodes (distinct leaves written plus distinct
    /// internal nodes recomputed, counted per vector), which is at most
    /// `k·(levels()+1)` for `k` distinct leaves.
    pub fn update_entries(&mut self, updates: &[LeafUpdate]) -> Result<usize> {
        for u in updates {
            if u.index >= self.dim {
                return Err(Error::IndexOutOfRange { index: u.index, dim: self.dim });
            }
        }
        if updates.is_empty() {
            return Ok(0);
        }
        let mut touched_x: Vec<usize> = Vec::new();
        let mut touched_f: Vec<usize> = Vec::new();
        for u in updates {
            match u.kind {
                LeafKind::X => {
                    self.leaf_x[u.index] = u.value;
                    touched_x.push(u.index);
                }
                LeafKind::F => {
                    self.leaf_f[u.index] = u.value;
                    touched_f.push(u.index);
                }
            }
        }
        let mut count = 0;
        count += self.propagate(LeafKind::X, &mut touched_x);
        count += self.propagate(LeafKind::F, &mut touched_f);
        Ok(count)
    }

    /// Recomputes ancestors of the given leaves bottom-up; returns touched
    /// node count for this vector (leaves + internal nodes).
    fn propagate(&mut self, kind: LeafKind, leaf_indices: &mut Vec<usize>) -> usize {
        if leaf_indices.is_empty() {
            return 0;
        }
        leaf_indices.sort_unstable();
        leaf_indices.dedup();
        let mut count = leaf_indices.len();
        let mut frontier: Vec<usize> = leaf_indices.iter().map(|&i| i >> 1).collect();
        frontier.dedup();
        for level in (0..self.levels).rev() {
            let off = level_offset(level);
            for &j in &frontier {
                let (a, b) = if level + 1 == self.levels {
                    let leaves = match kind {
                        LeafKind::X => &self.leaf_x,
                        LeafKind::F => &self.leaf_f,
                    };
                    (leaves[2 * j].powi(2), leaves[2 * j + 1].powi(2))
                } else {
                    let child = level_offset(level + 1);
                    let sq = match kind {
                        LeafKind::X => &self.sq_x,
                        LeafKind::F => &self.sq_f,
                    };
                    (sq[child + 2 * j], sq[child + 2 * j + 1])
                };
                match kind {
                    LeafKind::X => self.sq_x[off + j] = a + b,
                    LeafKind::F => self.sq_f[off + j] = a + b,
                }
            }
            count += frontier.len();
            for j in frontier.iter_mut() {
                *j >>= 1;
            }
            frontier.dedup();
        }
        count
    }
}
