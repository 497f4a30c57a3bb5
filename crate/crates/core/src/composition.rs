//! Compositions and the pairing plan of the parallel transform.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Replacement value for exact zeros at ingestion.
pub const ZERO_CLAMP: f64 = 1e-12;

/// Allowed deviation of a composition's sum from one.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A strictly positive vector summing to one (K+1 entries, K degrees of freedom).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    values: Vec<f64>,
    #[serde(default)]
    clamped: bool,
}

impl Composition {
    /// Wraps values that are already known to be a valid composition
    /// (positive, unit sum within [`SUM_TOLERANCE`]).
    pub(crate) fn from_normalized(values: Vec<f64>) -> Result<Self> {
        check_positive(&values)?;
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidParams(format!("composition sums to {sum}")));
        }
        Ok(Composition {
            values,
            clamped: false,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Degrees of freedom, `dim - 1`.
    pub fn dof(&self) -> usize {
        self.values.len() - 1
    }

    /// True when ingestion replaced at least one exact zero.
    pub fn was_clamped(&self) -> bool {
        self.clamped
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for Composition {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.len() < 2 {
        return Err(Error::DimTooSmall {
            dim: values.len(),
            min: 2,
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value <= 0.0 {
            return Err(Error::NegativeElement { index, value });
        }
    }
    Ok(())
}

/// Normalizes nonnegative raw proportions into a [`Composition`].
///
/// Exact zeros are replaced by [`ZERO_CLAMP`] before dividing by the sum and
/// the result is flagged (see [`Composition::was_clamped`]).
pub fn make_composition(raw: &[f64]) -> Result<Composition> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    if raw.len() < 2 {
        return Err(Error::DimTooSmall {
            dim: raw.len(),
            min: 2,
        });
    }
    let mut sum = 0.0;
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeElement { index, value });
        }
        sum += value;
    }
    if sum <= 0.0 {
        return Err(Error::ZeroSum);
    }

    let clamped = raw.contains(&0.0);
    let values: Vec<f64> = if clamped {
        let adjusted: Vec<f64> = raw.iter().map(|&v| v.max(ZERO_CLAMP)).collect();
        let total: f64 = adjusted.iter().sum();
        adjusted.into_iter().map(|v| v / total).collect()
    } else {
        raw.iter().map(|&v| v / sum).collect()
    };
    check_positive(&values)?;
    Ok(Composition { values, clamped })
}

/// One pairing level of the parallel transform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    /// Number of nodes entering this level.
    pub width: usize,
    /// Node positions paired as (odd, even) in one-based terms, i.e. `(2p, 2p+1)`.
    pub pairs: Vec<(usize, usize)>,
    /// Trailing node passed unpaired to the next level when `width` is odd.
    pub carry: Option<usize>,
}

impl Level {
    fn new(width: usize) -> Self {
        let pairs = (0..width / 2).map(|p| (2 * p, 2 * p + 1)).collect();
        let carry = (width % 2 == 1).then_some(width - 1);
        Level {
            width,
            pairs,
            carry,
        }
    }

    /// Node count of the following level.
    pub fn next_width(&self) -> usize {
        self.width.div_ceil(2)
    }
}

/// Which factor a leaf takes from a split: `u` for the left member, `1 - u` for the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Left,
    Right,
}

/// The leaf ranges separated by one output coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub left: Range<usize>,
    pub right: Range<usize>,
}

/// Pairing/carry tree used by the forward and inverse parallel transform.
///
/// Output coordinate order is level-major, pair-minor, with the final
/// two-node split last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformPlan {
    input_dim: usize,
    levels: Vec<Level>,
    splits: Vec<Split>,
    leaf_paths: Vec<Vec<(usize, Branch)>>,
}

/// Builds the deterministic plan for a composition of dimension `dim`.
pub fn build_plan(dim: usize) -> Result<TransformPlan> {
    if dim < 2 {
        return Err(Error::DimTooSmall { dim, min: 2 });
    }
    if dim > 1 << 20 {
        return Err(Error::InvalidParams(format!(
            "dimension {dim} exceeds the supported maximum 2^20"
        )));
    }

    let mut levels = Vec::new();
    let mut splits = Vec::with_capacity(dim - 1);
    // leaf range covered by each node of the current level
    let mut nodes: Vec<Range<usize>> = (0..dim).map(|i| i..i + 1).collect();
    while nodes.len() > 2 {
        let level = Level::new(nodes.len());
        let mut next = Vec::with_capacity(level.next_width());
        for &(l, r) in &level.pairs {
            splits.push(Split {
                left: nodes[l].clone(),
                right: nodes[r].clone(),
            });
            next.push(nodes[l].start..nodes[r].end);
        }
        if let Some(c) = level.carry {
            next.push(nodes[c].clone());
        }
        levels.push(level);
        nodes = next;
    }
    splits.push(Split {
        left: nodes[0].clone(),
        right: nodes[1].clone(),
    });

    let mut leaf_paths = vec![Vec::new(); dim];
    for (k, split) in splits.iter().enumerate() {
        for leaf in split.left.clone() {
            leaf_paths[leaf].push((k, Branch::Left));
        }
        for leaf in split.right.clone() {
            leaf_paths[leaf].push((k, Branch::Right));
        }
    }

    Ok(TransformPlan {
        input_dim: dim,
        levels,
        splits,
        leaf_paths,
    })
}

impl TransformPlan {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.input_dim - 1
    }

    /// Pairing levels, excluding the final two-node level.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Leaf ranges separated by each output coordinate, in output order.
    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    /// Output coordinates (with branch) on the path from the root to `leaf`.
    pub fn leaf_path(&self, leaf: usize) -> &[(usize, Branch)] {
        &self.leaf_paths[leaf]
    }

    /// Index of the first output coordinate emitted by level `level`.
    pub fn level_offset(&self, level: usize) -> usize {
        self.levels[..level].iter().map(|l| l.pairs.len()).sum()
    }
}
