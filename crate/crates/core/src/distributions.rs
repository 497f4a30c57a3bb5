//! Dirichlet, beta and gamma distributions: sampling, beta entropy and
//! moments, and the beta laws of the transformed coordinates of a Dirichlet
//! vector.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::composition::{make_composition, Composition, TransformPlan};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use crate::special::{beta_inc_reg, digamma, ln_beta};

/// Dirichlet concentration parameters (one per part).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::DimTooSmall {
                dim: alpha.len(),
                min: 2,
            });
        }
        for (index, &value) in alpha.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidAlpha { index, value });
            }
        }
        Ok(DirichletParams { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Mean composition `alpha / sum(alpha)`.
    pub fn mean(&self) -> Vec<f64> {
        let total = self.total();
        self.alpha.iter().map(|a| a / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = BetaParams { a, b };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.a.is_finite() && self.b.is_finite() && self.a > 0.0 && self.b > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "beta parameters must be positive, got ({}, {})",
                self.a, self.b
            )))
        }
    }

    /// Law of `1 - u`.
    pub fn swapped(&self) -> BetaParams {
        BetaParams {
            a: self.b,
            b: self.a,
        }
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        beta_inc_reg(self.a, self.b, x)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        (self.a - 1.0) * x.ln() + (self.b - 1.0) * (1.0 - x).ln() - ln_beta(self.a, self.b)
    }
}

/// Finite mixture of Dirichlet components sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    weights: Vec<f64>,
    components: Vec<DirichletParams>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, components: Vec<DirichletParams>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidWeights("mixture has no components".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidWeights("weights must be positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        let dim = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: c.dim(),
            });
        }
        Ok(MixtureParams {
            weights,
            components,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[DirichletParams] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Gamma(shape, 1) variate by Marsaglia–Tsang squeeze/rejection.
///
/// Shapes below one are boosted: `G(a) = G(a + 1) * U^(1/a)`.
pub fn sample_gamma(rng: &mut Rng, shape: f64) -> f64 {
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return sample_gamma(rng, shape + 1.0) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let t = 1.0 + c * z;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = 1.0 - rng.random::<f64>();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 {
            return d * v;
        }
        if u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Beta(a, b) variate as a ratio of gamma variates.
///
/// The smaller shape is always drawn first, so `Beta(b, a)` from the same
/// generator state yields `1 - u` for the draw `u` of `Beta(a, b)`.
pub fn sample_beta(rng: &mut Rng, p: BetaParams) -> f64 {
    let (lo, hi) = if p.a <= p.b { (p.a, p.b) } else { (p.b, p.a) };
    loop {
        let g_lo = sample_gamma(rng, lo);
        let g_hi = sample_gamma(rng, hi);
        let total = g_lo + g_hi;
        let u = if p.a <= p.b {
            g_lo / total
        } else {
            g_hi / total
        };
        // both gammas can underflow for tiny shapes; redraw rather than return 0 or 1
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// One Dirichlet draw from an existing generator.
pub fn draw_dirichlet(rng: &mut Rng, params: &DirichletParams) -> Composition {
    let gammas: Vec<f64> = params.alpha.iter().map(|&a| sample_gamma(rng, a)).collect();
    // Gamma draws are finite and nonnegative; an all-zero draw has probability ~0
    // but is still clamped by make_composition rather than unwrapped blindly.
    match make_composition(&gammas) {
        Ok(c) => c,
        Err(_) => make_composition(&vec![1.0; gammas.len()]).expect("uniform composition"),
    }
}

/// `n` independent Dirichlet draws (normalized gamma variates), deterministic in `seed`.
pub fn sample_dirichlet(params: &DirichletParams, n: usize, seed: u64) -> Result<Vec<Composition>> {
    if n == 0 {
        return Err(Error::TooFewSamples { got: 0, min: 1 });
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..n).map(|_| draw_dirichlet(&mut rng, params)).collect())
}

/// `n` draws from a Dirichlet mixture, each paired with its zero-based component label.
pub fn sample_mixture(
    params: &MixtureParams,
    n: usize,
    seed: u64,
) -> Result<Vec<(Composition, usize)>> {
    if n == 0 {
        return Err(Error::TooFewSamples { got: 0, min: 1 });
    }
    let mut rng = rng_from_seed(seed);
    let last = params.components.len() - 1;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = last;
        for (i, &w) in params.weights.iter().enumerate() {
            acc += w;
            if r < acc {
                label = i;
                break;
            }
        }
        out.push((draw_dirichlet(&mut rng, &params.components[label]), label));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Beta functionals
// ---------------------------------------------------------------------------

/// Differential entropy of Beta(a, b) in nats.
pub fn beta_entropy(p: BetaParams) -> Result<f64> {
    p.validate()?;
    let BetaParams { a, b } = p;
    Ok(
        ln_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
            + (a + b - 2.0) * digamma(a + b),
    )
}

/// `E[u^2]` for `u ~ Beta(a, b)`.
pub fn beta_moment2(p: BetaParams) -> Result<f64> {
    p.validate()?;
    let BetaParams { a, b } = p;
    Ok(a * (a + 1.0) / ((a + b) * (a + b + 1.0)))
}

/// `E[(1 - u)^2]` for `u ~ Beta(a, b)`.
pub fn beta_moment2_complement(p: BetaParams) -> Result<f64> {
    beta_moment2(p.swapped())
}

// ---------------------------------------------------------------------------
// Parameter propagation
// ---------------------------------------------------------------------------

/// Beta laws of the serial-transform coordinates: `u_k ~ Beta(alpha_k, sum_{i>k} alpha_i)`.
pub fn snt_param_map(params: &DirichletParams) -> Vec<BetaParams> {
    let alpha = &params.alpha;
    let k = alpha.len() - 1;
    // suffix sums from the back keep each tail exact for integer-valued alpha
    let mut out = vec![BetaParams { a: 0.0, b: 0.0 }; k];
    let mut tail = 0.0;
    for i in (0..k).rev() {
        tail += alpha[i + 1];
        out[i] = BetaParams {
            a: alpha[i],
            b: tail,
        };
    }
    out
}

/// Beta laws of the parallel-transform coordinates.
///
/// Concentrations aggregate through the same tree as the parts, so the
/// coordinate splitting leaf ranges `L | R` is `Beta(sum_L alpha, sum_R alpha)`.
pub fn pnt_param_map(params: &DirichletParams, plan: &TransformPlan) -> Result<Vec<BetaParams>> {
    if plan.input_dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.input_dim(),
            actual: params.dim(),
        });
    }
    Ok(plan
        .splits()
        .iter()
        .map(|s| BetaParams {
            a: params.alpha[s.left.clone()].iter().sum(),
            b: params.alpha[s.right.clone()].iter().sum(),
        })
        .collect())
}

/// Marginal law of part `k` (zero-based): `Beta(alpha_k, sum_{i != k} alpha_i)`.
pub fn dirichlet_marginal(params: &DirichletParams, k: usize) -> Result<BetaParams> {
    if k >= params.dim() {
        return Err(Error::InvalidParams(format!(
            "part index {k} out of range for dimension {}",
            params.dim()
        )));
    }
    let rest: f64 = params
        .alpha
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, a)| a)
        .sum();
    Ok(BetaParams {
        a: params.alpha[k],
        b: rest,
    })
}
