//! Serial (SNT), parallel (PNT) and zero-padded parallel (FPNT) nonlinear
//! transforms, their inverses, and the Jacobian of the inverse PNT.
//!
//! Each forward transform maps a (K+1)-part composition to K coordinates in
//! (0, 1). For a Dirichlet input these coordinates are mutually independent
//! beta variables.
//!
//! The `*_into` variants work on caller-owned buffers and do not allocate;
//! they are what the timing harness measures.

use serde::{Deserialize, Serialize};

use crate::composition::{Branch, Composition, TransformPlan};
use crate::error::{Error, Result};

/// Guard for remaining mass / pair sums; below this the ratio is meaningless.
pub const DEGENERATE_MASS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    Snt,
    Pnt,
}

/// K transformed coordinates together with the transform that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedVector {
    values: Vec<f64>,
    kind: TransformKind,
}

impl TransformedVector {
    /// Wraps raw coordinates, checking that each lies strictly inside (0, 1).
    pub fn new(values: Vec<f64>, kind: TransformKind) -> Result<Self> {
        check_unit_interval(&values)?;
        Ok(TransformedVector { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_unit_interval(u: &[f64]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (index, &value) in u.iter().enumerate() {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::OutOfRange { index, value });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SNT
// ---------------------------------------------------------------------------

/// Serial transform on raw slices.
///
/// Peels the first element off and renormalizes the remainder, K times. The
/// renormalization touches every remaining element, so the cost is quadratic
/// in the dimension. `scratch` must have the same length as `x` and `out` one
/// less.
pub fn snt_forward_into(x: &[f64], out: &mut [f64], scratch: &mut [f64]) -> Result<()> {
    let dim = x.len();
    if dim < 2 {
        return Err(Error::DimTooSmall { dim, min: 2 });
    }
    if out.len() != dim - 1 {
        return Err(Error::DimensionMismatch {
            expected: dim - 1,
            actual: out.len(),
        });
    }
    scratch[..dim].copy_from_slice(x);
    for k in 0..dim - 1 {
        out[k] = scratch[k];
        if k + 1 == dim - 1 {
            break;
        }
        let rest = &mut scratch[k + 1..dim];
        let mass: f64 = rest.iter().sum();
        if mass < DEGENERATE_MASS {
            return Err(Error::DegenerateTail { index: k + 1 });
        }
        for v in rest.iter_mut() {
            *v /= mass;
        }
    }
    Ok(())
}

pub fn snt_forward(x: &Composition) -> Result<TransformedVector> {
    let mut out = vec![0.0; x.dim() - 1];
    let mut scratch = vec![0.0; x.dim()];
    snt_forward_into(x.values(), &mut out, &mut scratch)?;
    Ok(TransformedVector {
        values: out,
        kind: TransformKind::Snt,
    })
}

/// Inverse serial transform: `x_k = u_k * prod_{j<k} (1 - u_j)`, last part is the full product.
pub fn snt_inverse_values(u: &[f64]) -> Result<Vec<f64>> {
    check_unit_interval(u)?;
    let mut x = Vec::with_capacity(u.len() + 1);
    let mut remaining = 1.0;
    for &uk in u {
        x.push(uk * remaining);
        remaining *= 1.0 - uk;
    }
    x.push(remaining);
    Ok(x)
}

pub fn snt_inverse(u: &TransformedVector) -> Result<Composition> {
    Composition::from_normalized(snt_inverse_values(u.values())?)
}

// ---------------------------------------------------------------------------
// PNT
// ---------------------------------------------------------------------------

fn check_plan(plan: &TransformPlan, dim: usize) -> Result<()> {
    if plan.input_dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: plan.input_dim(),
            actual: dim,
        });
    }
    Ok(())
}

/// Parallel transform on raw slices. `scratch` must be at least `x.len()` long.
pub fn pnt_forward_into(
    plan: &TransformPlan,
    x: &[f64],
    out: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    check_plan(plan, x.len())?;
    if out.len() != plan.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.output_dim(),
            actual: out.len(),
        });
    }
    let nodes = &mut scratch[..x.len()];
    nodes.copy_from_slice(x);
    let mut emitted = 0;
    for level in plan.levels() {
        // node p of the next level is written at p <= 2p, so in-place is safe
        for (p, &(l, r)) in level.pairs.iter().enumerate() {
            let left = nodes[l];
            let total = left + nodes[r];
            if total < DEGENERATE_MASS {
                return Err(Error::DegeneratePair { index: emitted });
            }
            out[emitted] = left / total;
            nodes[p] = total;
            emitted += 1;
        }
        if let Some(c) = level.carry {
            nodes[level.pairs.len()] = nodes[c];
        }
    }
    // two nodes remain; the first one's mass is the last coordinate
    if nodes[0] + nodes[1] < DEGENERATE_MASS {
        return Err(Error::DegeneratePair { index: emitted });
    }
    out[emitted] = nodes[0];
    Ok(())
}

pub fn pnt_forward(x: &Composition, plan: &TransformPlan) -> Result<TransformedVector> {
    check_plan(plan, x.dim())?;
    let mut out = vec![0.0; plan.output_dim()];
    let mut scratch = vec![0.0; x.dim()];
    pnt_forward_into(plan, x.values(), &mut out, &mut scratch)?;
    Ok(TransformedVector {
        values: out,
        kind: TransformKind::Pnt,
    })
}

/// Inverse parallel transform on raw coordinates.
///
/// Rebuilds the aggregation tree top-down: the root splits into
/// `(u_last, 1 - u_last)`, every paired node of mass `v` with ratio `r`
/// splits into `(r v, (1 - r) v)`, carried nodes pass through.
pub fn pnt_inverse_values(u: &[f64], plan: &TransformPlan) -> Result<Vec<f64>> {
    if u.len() != plan.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.output_dim(),
            actual: u.len(),
        });
    }
    check_unit_interval(u)?;

    let dim = plan.input_dim();
    let mut nodes = vec![0.0; dim];
    let last = u[u.len() - 1];
    nodes[0] = last;
    nodes[1] = 1.0 - last;
    for (index, level) in plan.levels().iter().enumerate().rev() {
        let offset = plan.level_offset(index);
        if let Some(c) = level.carry {
            nodes[c] = nodes[level.pairs.len()];
        }
        for (p, &(l, r)) in level.pairs.iter().enumerate().rev() {
            let mass = nodes[p];
            let ratio = u[offset + p];
            nodes[l] = ratio * mass;
            nodes[r] = (1.0 - ratio) * mass;
        }
    }
    Ok(nodes)
}

pub fn pnt_inverse(u: &TransformedVector, plan: &TransformPlan) -> Result<Composition> {
    Composition::from_normalized(pnt_inverse_values(u.values(), plan)?)
}

// ---------------------------------------------------------------------------
// FPNT
// ---------------------------------------------------------------------------

/// Zero-padded parallel transform.
///
/// Pads to the next power of two and runs `log2` rounds of odd/even ratios
/// with `0/0 = 1`. Ratios whose even member (or whole pair) is padding are
/// structurally equal to one and are dropped by position, which leaves the
/// same coordinates in the same order as [`pnt_forward`].
pub fn fpnt_forward_values(x: &[f64]) -> Result<Vec<f64>> {
    let dim = x.len();
    if dim < 2 {
        return Err(Error::DimTooSmall { dim, min: 2 });
    }
    let padded = dim.next_power_of_two();
    let mut nodes = vec![0.0; padded];
    nodes[..dim].copy_from_slice(x);

    let mut out = Vec::with_capacity(dim - 1);
    let mut width = padded;
    let mut real = dim;
    while width >= 2 {
        let half = width / 2;
        for p in 0..half {
            let odd = nodes[2 * p];
            let even = nodes[2 * p + 1];
            let total = odd + even;
            let ratio = if total == 0.0 { 1.0 } else { odd / total };
            if 2 * p + 1 < real {
                if total < DEGENERATE_MASS {
                    return Err(Error::DegeneratePair { index: out.len() });
                }
                out.push(ratio);
            }
            nodes[p] = total;
        }
        width = half;
        real = real.div_ceil(2);
    }
    debug_assert_eq!(out.len(), dim - 1);
    Ok(out)
}

pub fn fpnt_forward(x: &Composition) -> Result<TransformedVector> {
    Ok(TransformedVector {
        values: fpnt_forward_values(x.values())?,
        kind: TransformKind::Pnt,
    })
}

// ---------------------------------------------------------------------------
// Jacobian of the inverse PNT
// ---------------------------------------------------------------------------

/// `(K+1) x K` matrix of partial derivatives `dx_i / du_k`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl JacobianMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Zero-based `(row, col)` access.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Column sums over all rows; zero up to rounding since the parts sum to one.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|k| (0..self.rows).map(|i| self.get(i, k)).sum())
            .collect()
    }

    /// Diagonal of `J^T J` restricted to the first `rows` rows.
    pub fn gram_diag(&self, rows: usize) -> Vec<f64> {
        let rows = rows.min(self.rows);
        let mut diag = vec![0.0; self.cols];
        for i in 0..rows {
            for (d, v) in diag.iter_mut().zip(self.row(i)) {
                *d += v * v;
            }
        }
        diag
    }
}

/// Analytic Jacobian of the inverse PNT at `u`.
///
/// Every part is a product of `u_j` or `1 - u_j` factors along its root-to-leaf
/// path, so `dx_i/du_k` is `+-` the product of the other factors on that path
/// and zero when `k` is not on it.
pub fn pnt_inverse_jacobian_values(u: &[f64], plan: &TransformPlan) -> Result<JacobianMatrix> {
    if u.len() != plan.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.output_dim(),
            actual: u.len(),
        });
    }
    check_unit_interval(u)?;
    let rows = plan.input_dim();
    let cols = plan.output_dim();
    let mut entries = vec![0.0; rows * cols];
    for i in 0..rows {
        let path = plan.leaf_path(i);
        for &(k, branch) in path {
            let mut product = 1.0;
            for &(j, b) in path {
                if j != k {
                    product *= factor(u[j], b);
                }
            }
            entries[i * cols + k] = match branch {
                Branch::Left => product,
                Branch::Right => -product,
            };
        }
    }
    Ok(JacobianMatrix {
        rows,
        cols,
        entries,
    })
}

pub fn pnt_inverse_jacobian(u: &TransformedVector, plan: &TransformPlan) -> Result<JacobianMatrix> {
    pnt_inverse_jacobian_values(u.values(), plan)
}

#[inline]
fn factor(u: f64, branch: Branch) -> f64 {
    match branch {
        Branch::Left => u,
        Branch::Right => 1.0 - u,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::{build_plan, make_composition};
    use proptest::prelude::*;

    fn comp(v: &[f64]) -> Composition {
        make_composition(v).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn snt_uniform() {
        let u = snt_forward(&comp(&[0.25; 4])).unwrap();
        assert!(close(u.values(), &[0.25, 1.0 / 3.0, 0.5], 1e-15));
        assert_eq!(u.kind(), TransformKind::Snt);
    }

    #[test]
    fn snt_three_parts() {
        let u = snt_forward(&comp(&[0.5, 0.3, 0.2])).unwrap();
        assert!(close(u.values(), &[0.5, 0.6], 1e-15));
    }

    #[test]
    fn snt_inverse_examples() {
        let x = snt_inverse_values(&[0.25, 1.0 / 3.0, 0.5]).unwrap();
        assert!(close(&x, &[0.25; 4], 1e-15));
        let x = snt_inverse_values(&[0.5, 0.6]).unwrap();
        assert!(close(&x, &[0.5, 0.3, 0.2], 1e-15));
    }

    #[test]
    fn snt_inverse_rejects_out_of_range() {
        assert_eq!(
            snt_inverse_values(&[0.5, 1.0]),
            Err(Error::OutOfRange {
                index: 1,
                value: 1.0
            })
        );
        assert!(TransformedVector::new(vec![0.0, 0.5], TransformKind::Snt).is_err());
    }

    #[test]
    fn pnt_dim6_closed_form() {
        let raw = [0.05, 0.1, 0.2, 0.15, 0.3, 0.2];
        let x = comp(&raw);
        let v = x.values();
        let plan = build_plan(6).unwrap();
        let u = pnt_forward(&x, &plan).unwrap();
        let expected = [
            v[0] / (v[0] + v[1]),
            v[2] / (v[2] + v[3]),
            v[4] / (v[4] + v[5]),
            (v[0] + v[1]) / (v[0] + v[1] + v[2] + v[3]),
            v[0] + v[1] + v[2] + v[3],
        ];
        assert!(close(u.values(), &expected, 1e-15));
    }

    #[test]
    fn pnt_uniform() {
        let plan = build_plan(4).unwrap();
        let u = pnt_forward(&comp(&[0.25; 4]), &plan).unwrap();
        assert_eq!(u.values(), &[0.5, 0.5, 0.5]);
        let x = pnt_inverse(&u, &plan).unwrap();
        assert_eq!(x.values(), &[0.25; 4]);
    }

    #[test]
    fn pnt_plan_mismatch() {
        let plan = build_plan(5).unwrap();
        assert_eq!(
            pnt_forward(&comp(&[0.25; 4]), &plan),
            Err(Error::DimensionMismatch {
                expected: 5,
                actual: 4
            })
        );
    }

    #[test]
    fn pnt_degenerate_pair() {
        let plan = build_plan(4).unwrap();
        let x = [1e-310, 1e-310, 0.5, 0.5];
        let mut out = [0.0; 3];
        let mut scratch = [0.0; 4];
        assert_eq!(
            pnt_forward_into(&plan, &x, &mut out, &mut scratch),
            Err(Error::DegeneratePair { index: 0 })
        );
    }

    #[test]
    fn snt_degenerate_tail() {
        let x = [1.0, 1e-310, 1e-310];
        let mut out = [0.0; 2];
        let mut scratch = [0.0; 3];
        assert_eq!(
            snt_forward_into(&x, &mut out, &mut scratch),
            Err(Error::DegenerateTail { index: 1 })
        );
    }

    #[test]
    fn pnt_inverse_k4_table_form() {
        let plan = build_plan(5).unwrap();
        let u = [0.3, 0.6, 0.45, 0.8];
        let x = pnt_inverse_values(&u, &plan).unwrap();
        let expected = [
            u[0] * u[2] * u[3],
            (1.0 - u[0]) * u[2] * u[3],
            u[1] * (1.0 - u[2]) * u[3],
            (1.0 - u[1]) * (1.0 - u[2]) * u[3],
            1.0 - u[3],
        ];
        assert!(close(&x, &expected, 1e-15));
    }

    #[test]
    fn fpnt_dim5_drops_pad_ratios() {
        let x = comp(&[0.1, 0.2, 0.3, 0.15, 0.25]);
        let plan = build_plan(5).unwrap();
        let f = fpnt_forward(&x).unwrap();
        let p = pnt_forward(&x, &plan).unwrap();
        assert_eq!(f.len(), 4);
        for (a, b) in f.values().iter().zip(p.values()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn fpnt_uniform_and_power_of_two() {
        let f = fpnt_forward(&comp(&[0.25; 4])).unwrap();
        assert_eq!(f.values(), &[0.5, 0.5, 0.5]);
        let x = comp(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let plan = build_plan(8).unwrap();
        assert_eq!(
            fpnt_forward(&x).unwrap().values(),
            pnt_forward(&x, &plan).unwrap().values()
        );
    }

    #[test]
    fn jacobian_k4_entries() {
        let plan = build_plan(5).unwrap();
        let u = [0.3, 0.6, 0.45, 0.8];
        let j = pnt_inverse_jacobian_values(&u, &plan).unwrap();
        assert_eq!((j.rows(), j.cols()), (5, 4));
        assert!((j.get(0, 0) - u[2] * u[3]).abs() < 1e-15);
        assert!((j.get(1, 0) + u[2] * u[3]).abs() < 1e-15);
        assert!((j.get(2, 1) - (1.0 - u[2]) * u[3]).abs() < 1e-15);
        assert_eq!(j.row(4), &[0.0, 0.0, 0.0, -1.0]);

        let half = pnt_inverse_jacobian_values(&[0.5; 4], &plan).unwrap();
        assert_eq!(half.get(0, 0), 0.25);
    }

    #[test]
    fn gram_diag_restricts_rows() {
        let plan = build_plan(5).unwrap();
        let j = pnt_inverse_jacobian_values(&[0.5; 4], &plan).unwrap();
        let full = j.gram_diag(5);
        let free = j.gram_diag(4);
        assert!((full[3] - free[3] - 1.0).abs() < 1e-15);
        assert_eq!(full[0], free[0]);
    }

    proptest! {
        #[test]
        fn round_trips_and_range(raw in prop::collection::vec(0.01f64..10.0, 2..65)) {
            let x = comp(&raw);
            let plan = build_plan(x.dim()).unwrap();

            let s = snt_forward(&x).unwrap();
            prop_assert_eq!(s.len(), x.dim() - 1);
            prop_assert!(s.values().iter().all(|&v| v > 0.0 && v < 1.0));
            let back = snt_inverse(&s).unwrap();
            prop_assert!(close(back.values(), x.values(), 1e-12));

            let p = pnt_forward(&x, &plan).unwrap();
            prop_assert!(p.values().iter().all(|&v| v > 0.0 && v < 1.0));
            let back = pnt_inverse(&p, &plan).unwrap();
            prop_assert!(close(back.values(), x.values(), 1e-12));

            let f = fpnt_forward(&x).unwrap();
            prop_assert!(close(f.values(), p.values(), 1e-15));
        }

        #[test]
        fn jacobian_columns_sum_to_zero(u in prop::collection::vec(0.01f64..0.99, 1..40)) {
            let plan = build_plan(u.len() + 1).unwrap();
            let j = pnt_inverse_jacobian_values(&u, &plan).unwrap();
            for s in j.column_sums() {
                prop_assert!(s.abs() < 1e-14);
            }
        }
    }
}
