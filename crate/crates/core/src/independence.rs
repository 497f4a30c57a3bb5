//! Distance correlation between scalar samples, its permutation test, and the
//! independence coefficient over all coordinate pairs.
//!
//! The statistic is the V-statistic form: pairwise distances are doubly
//! centered and `dCov² = (1/N²) Σ A_ij B_ij`. For scalar data this equals
//!
//! ```text
//! dCov² = S/N² - 2 Σ_i a_i· b_i· / N³ + a·· b·· / N⁴,   S = Σ_ij |x_i - x_j| |y_i - y_j|
//! ```
//!
//! Row sums come from prefix sums over sorted values. `S` is accumulated in
//! x-sorted order with a Fenwick tree keyed on y-rank, so one evaluation costs
//! `O(N log N)`. A permutation only reshuffles which y sits at each x position,
//! so the sorts are done once per pair and reused by every replicate.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Significance level used throughout.
pub const DEFAULT_ALPHA_LEVEL: f64 = 0.05;
/// Default number of permutation replicates.
pub const DEFAULT_PERMUTATIONS: usize = 1000;
pub const MIN_PERMUTATIONS: usize = 100;
pub const MIN_SAMPLES: usize = 4;

/// Per-variable quantities that do not change under permutation.
#[derive(Debug, Clone)]
struct Margin {
    /// centered values
    centered: Vec<f64>,
    /// `a_i· = Σ_j |v_i - v_j|`, indexed like the input
    row_sums: Vec<f64>,
    total: f64,
    /// rank of each input position in ascending order
    rank: Vec<usize>,
    /// input positions in ascending order
    order: Vec<usize>,
}

impl Margin {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| centered[i].total_cmp(&centered[j]));
        let mut rank = vec![0; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }

        let grand: f64 = order.iter().map(|&i| centered[i]).sum();
        let mut row_sums = vec![0.0; n];
        let mut before = 0.0;
        for (r, &i) in order.iter().enumerate() {
            let v = centered[i];
            let after = grand - before - v;
            let below = r as f64 * v - before;
            let above = after - (n - 1 - r) as f64 * v;
            row_sums[i] = below + above;
            before += v;
        }
        let total = row_sums.iter().sum();
        Margin {
            centered,
            row_sums,
            total,
            rank,
            order,
        }
    }
}

/// Fenwick tree over ranks holding `(count, Σx, Σy, Σxy)`.
struct Fenwick {
    tree: Vec<[f64; 4]>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![[0.0; 4]; n + 1],
        }
    }

    fn clear(&mut self) {
        self.tree.iter_mut().for_each(|e| *e = [0.0; 4]);
    }

    fn add(&mut self, rank: usize, x: f64, y: f64) {
        let mut i = rank + 1;
        let n = self.tree.len();
        while i < n {
            let e = &mut self.tree[i];
            e[0] += 1.0;
            e[1] += x;
            e[2] += y;
            e[3] += x * y;
            i += i & i.wrapping_neg();
        }
    }

    /// Sums over ranks strictly below `rank`.
    fn prefix(&self, rank: usize) -> [f64; 4] {
        let mut acc = [0.0; 4];
        let mut i = rank;
        while i > 0 {
            let e = &self.tree[i];
            acc[0] += e[0];
            acc[1] += e[1];
            acc[2] += e[2];
            acc[3] += e[3];
            i &= i - 1;
        }
        acc
    }
}

/// `dCov²` for x in ascending order paired with `y_at[s]` (the y input
/// position sitting at x-sorted position `s`).
fn dcov2_sorted(x: &Margin, y: &Margin, y_at: &[usize], fenwick: &mut Fenwick) -> f64 {
    let n = x.centered.len();
    let nf = n as f64;
    fenwick.clear();

    let mut seen = [0.0f64; 4];
    let mut cross_abs = 0.0;
    let mut row_cross = 0.0;
    for (s, &xi) in x.order.iter().enumerate() {
        let yi = y_at[s];
        let xv = x.centered[xi];
        let yv = y.centered[yi];
        let r = y.rank[yi];

        let lo = fenwick.prefix(r);
        let hi = [
            seen[0] - lo[0],
            seen[1] - lo[1],
            seen[2] - lo[2],
            seen[3] - lo[3],
        ];
        // Σ (x_s - x_i)(y_s - y_i) over earlier points below / above in y
        let lower = lo[0] * xv * yv - xv * lo[2] - yv * lo[1] + lo[3];
        let upper = hi[0] * xv * yv - xv * hi[2] - yv * hi[1] + hi[3];
        cross_abs += lower - upper;

        fenwick.add(r, xv, yv);
        seen[0] += 1.0;
        seen[1] += xv;
        seen[2] += yv;
        seen[3] += xv * yv;

        row_cross += x.row_sums[xi] * y.row_sums[yi];
    }
    2.0 * cross_abs / (nf * nf) - 2.0 * row_cross / (nf * nf * nf)
        + x.total * y.total / (nf * nf * nf * nf)
}

fn dcor_from_parts(dcov2: f64, dvar_x: f64, dvar_y: f64) -> f64 {
    if dvar_x <= 0.0 || dvar_y <= 0.0 {
        return 0.0;
    }
    let ratio = dcov2 / (dvar_x * dvar_y).sqrt();
    ratio.max(0.0).sqrt()
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: xs.len(),
            min: MIN_SAMPLES,
        });
    }
    if let Some(index) = xs.iter().chain(ys).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index: index % xs.len(),
        });
    }
    Ok(())
}

/// A sample pair prepared for repeated distance-correlation evaluation.
struct PreparedPair {
    x: Margin,
    y: Margin,
    dvar_x: f64,
    dvar_y: f64,
    fenwick: Fenwick,
}

impl PreparedPair {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let x = Margin::new(xs);
        let y = Margin::new(ys);
        let mut fenwick = Fenwick::new(xs.len());
        let dvar_x = dcov2_sorted(&x, &x, &x.order, &mut fenwick);
        let dvar_y = dcov2_sorted(&y, &y, &y.order, &mut fenwick);
        PreparedPair {
            x,
            y,
            dvar_x,
            dvar_y,
            fenwick,
        }
    }

    fn dcov2(&mut self, y_at: &[usize]) -> f64 {
        dcov2_sorted(&self.x, &self.y, y_at, &mut self.fenwick)
    }

    fn dcor(&mut self, y_at: &[usize]) -> f64 {
        let d = self.dcov2(y_at);
        dcor_from_parts(d, self.dvar_x, self.dvar_y)
    }

    fn degenerate(&self) -> bool {
        self.dvar_x <= 0.0 || self.dvar_y <= 0.0
    }
}

/// Sample distance correlation of two equally long scalar samples.
///
/// Returns 0 when either sample has zero distance variance (is constant).
pub fn distance_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let mut prepared = PreparedPair::new(xs, ys);
    let y_at = prepared.x.order.clone();
    Ok(prepared.dcor(&y_at))
}

/// Distance correlation and its permutation p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub dcor: f64,
    pub pvalue: f64,
    pub n_permutations: usize,
}

/// Permutation test of independence.
///
/// `ys` is reshuffled uniformly (without replacement) `n_perm` times; the
/// p-value is the fraction of replicates whose statistic is strictly greater
/// than the observed one.
pub fn permutation_test(
    xs: &[f64],
    ys: &[f64],
    n_perm: usize,
    seed: u64,
) -> Result<PermutationTest> {
    check_pair(xs, ys)?;
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::TooFewPermutations {
            got: n_perm,
            min: MIN_PERMUTATIONS,
        });
    }
    let mut prepared = PreparedPair::new(xs, ys);
    let mut y_at = prepared.x.order.clone();
    let observed = prepared.dcov2(&y_at);
    let dcor = dcor_from_parts(observed, prepared.dvar_x, prepared.dvar_y);
    if prepared.degenerate() {
        // every replicate is 0 as well, so none is strictly greater
        return Ok(PermutationTest {
            dcor,
            pvalue: 0.0,
            n_permutations: n_perm,
        });
    }

    let mut rng = rng_from_seed(seed);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        y_at.shuffle(&mut rng);
        if prepared.dcov2(&y_at) > observed {
            exceed += 1;
        }
    }
    Ok(PermutationTest {
        dcor,
        pvalue: exceed as f64 / n_perm as f64,
        n_permutations: n_perm,
    })
}

pub fn permutation_pvalue(xs: &[f64], ys: &[f64], n_perm: usize, seed: u64) -> Result<f64> {
    permutation_test(xs, ys, n_perm, seed).map(|t| t.pvalue)
}

/// Distance correlations and permutation p-values for every coordinate pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub dim: usize,
    /// Symmetric, zero diagonal.
    pub dcor: Vec<Vec<f64>>,
    /// Symmetric, zero diagonal.
    pub pvalue: Vec<Vec<f64>>,
    pub n_permutations: usize,
    pub alpha_level: f64,
}

impl PairwiseReport {
    /// Upper-triangle pairs `(i, j)` with `i < j`, row-major.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim).flat_map(move |i| (i + 1..self.dim).map(move |j| (i, j)))
    }

    pub fn n_pairs(&self) -> usize {
        self.dim * (self.dim - 1) / 2
    }

    pub fn all_independent(&self) -> bool {
        self.pairs()
            .all(|(i, j)| self.pvalue[i][j] > self.alpha_level)
    }

    pub fn all_dependent(&self) -> bool {
        self.pairs()
            .all(|(i, j)| self.pvalue[i][j] < self.alpha_level)
    }
}

/// Splits row vectors into columns, checking the table is rectangular.
pub fn columns(data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let first = data.first().ok_or(Error::EmptyInput)?;
    let dim = first.len();
    let mut cols = vec![Vec::with_capacity(data.len()); dim];
    for row in data {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        for (c, &v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    Ok(cols)
}

pub fn pairwise_report(data: &[Vec<f64>], n_perm: usize, seed: u64) -> Result<PairwiseReport> {
    pairwise_report_with_level(data, n_perm, seed, DEFAULT_ALPHA_LEVEL)
}

/// Fills both triangles for all `K(K-1)/2` pairs. Pair `p` (row-major upper
/// triangle order) uses the derived seed `(seed, p)`, so the result does not
/// depend on how pairs are scheduled across threads.
pub fn pairwise_report_with_level(
    data: &[Vec<f64>],
    n_perm: usize,
    seed: u64,
    alpha_level: f64,
) -> Result<PairwiseReport> {
    let cols = columns(data)?;
    let dim = cols.len();
    if dim < 2 {
        return Err(Error::DimTooSmall { dim, min: 2 });
    }
    if data.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: data.len(),
            min: MIN_SAMPLES,
        });
    }
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::TooFewPermutations {
            got: n_perm,
            min: MIN_PERMUTATIONS,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
        .collect();
    let tests: Vec<PermutationTest> = pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(i, j))| {
            permutation_test(&cols[i], &cols[j], n_perm, derive_seed(seed, p as u64))
        })
        .collect::<Result<_>>()?;

    let mut dcor = vec![vec![0.0; dim]; dim];
    let mut pvalue = vec![vec![0.0; dim]; dim];
    for (&(i, j), t) in pairs.iter().zip(&tests) {
        dcor[i][j] = t.dcor;
        dcor[j][i] = t.dcor;
        pvalue[i][j] = t.pvalue;
        pvalue[j][i] = t.pvalue;
    }
    Ok(PairwiseReport {
        dim,
        dcor,
        pvalue,
        n_permutations: n_perm,
        alpha_level,
    })
}

/// Fraction of coordinate pairs judged independent (`p > alpha_level`).
pub fn independence_coefficient(report: &PairwiseReport) -> f64 {
    let independent = report
        .pairs()
        .filter(|&(i, j)| report.pvalue[i][j] > report.alpha_level)
        .count();
    independent as f64 / report.n_pairs() as f64
}
