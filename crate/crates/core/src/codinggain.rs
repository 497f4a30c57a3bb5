//! High-rate coding gain of the parallel transform over per-part scalar
//! quantization of a Dirichlet source.
//!
//! ```text
//!         2^{(2/K) Σ_k [h(x_k) - h(u_k)]}
//!   G = ----------------------------------
//!        ( Π_k E[J^T J]_{k,k} )^{1/K}
//! ```
//!
//! `h(x_k)` are the beta marginals of the first K parts, `h(u_k)` the beta
//! laws of the transformed coordinates, and `J` the Jacobian of the inverse
//! transform restricted to the K free parts. The rate and the per-coordinate
//! distortions cancel, so no quantizer is simulated.

use std::f64::consts::LN_2;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{build_plan, TransformPlan};
use crate::distributions::{
    beta_entropy, dirichlet_marginal, pnt_param_map, sample_beta, DirichletParams,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, derive_seed2, rng_from_seed};
use crate::transforms::pnt_inverse_jacobian_values;

pub const MIN_MONTE_CARLO: usize = 10_000;
pub const DEFAULT_MONTE_CARLO: usize = 20_000;

/// How the entropy difference enters the base-2 exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyUnit {
    /// Entropies converted to bits (consistent with `2^{-2R}` high-rate distortion).
    #[default]
    Bits,
    /// Entropies left in nats inside the base-2 exponential.
    Nats,
}

impl EntropyUnit {
    fn scale(self) -> f64 {
        match self {
            EntropyUnit::Bits => 1.0 / LN_2,
            EntropyUnit::Nats => 1.0,
        }
    }
}

/// Monte-Carlo estimate of `E[J^T J]_{k,k}` with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramDiagEstimate {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_samples: usize,
}

/// Estimates the diagonal of `E[J^T J]` over the first K rows of the inverse
/// Jacobian, drawing each `u_k` independently from its beta law.
pub fn jacobian_gram_diag_expect(
    params: &DirichletParams,
    plan: &TransformPlan,
    n_mc: usize,
    seed: u64,
) -> Result<GramDiagEstimate> {
    if n_mc < MIN_MONTE_CARLO {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_MONTE_CARLO} Monte-Carlo samples, got {n_mc}"
        )));
    }
    let laws = pnt_param_map(params, plan)?;
    let k = laws.len();
    let mut rng = rng_from_seed(seed);
    let mut u = vec![0.0; k];
    let mut sum = vec![0.0; k];
    let mut sum_sq = vec![0.0; k];
    for _ in 0..n_mc {
        for (uk, &law) in u.iter_mut().zip(&laws) {
            *uk = sample_beta(&mut rng, law);
        }
        let jac = pnt_inverse_jacobian_values(&u, plan)?;
        for (c, d) in jac.gram_diag(k).into_iter().enumerate() {
            sum[c] += d;
            sum_sq[c] += d * d;
        }
    }
    let n = n_mc as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(GramDiagEstimate {
        mean,
        std_err,
        n_samples: n_mc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingGainResult {
    /// Degrees of freedom.
    pub k: usize,
    pub alpha: Vec<f64>,
    /// `Σ_k h(x_k)` over the first K parts, nats.
    pub sum_h_x: f64,
    /// `Σ_k h(u_k)`, nats.
    pub sum_h_u: f64,
    pub jacobian_diag_expect: Vec<f64>,
    pub jacobian_diag_std_err: Vec<f64>,
    pub gain: f64,
    /// Delta-method standard error of `gain` from the Monte-Carlo term.
    pub gain_std_err: f64,
    pub unit: EntropyUnit,
}

/// Coding gain with entropies in bits.
pub fn coding_gain(params: &DirichletParams, n_mc: usize, seed: u64) -> Result<CodingGainResult> {
    coding_gain_with_unit(params, n_mc, seed, EntropyUnit::Bits)
}

pub fn coding_gain_with_unit(
    params: &DirichletParams,
    n_mc: usize,
    seed: u64,
    unit: EntropyUnit,
) -> Result<CodingGainResult> {
    let plan = build_plan(params.dim())?;
    let k = plan.output_dim();

    let sum_h_x = (0..k)
        .map(|i| dirichlet_marginal(params, i).and_then(beta_entropy))
        .sum::<Result<f64>>()?;
    let sum_h_u = pnt_param_map(params, &plan)?
        .into_iter()
        .map(beta_entropy)
        .sum::<Result<f64>>()?;
    let gram = jacobian_gram_diag_expect(params, &plan, n_mc, seed)?;

    let kf = k as f64;
    let log2_numer = 2.0 / kf * (sum_h_x - sum_h_u) * unit.scale();
    let log2_denom = gram.mean.iter().map(|m| m.log2()).sum::<f64>() / kf;
    let gain = (log2_numer - log2_denom).exp2();
    let rel = gram
        .mean
        .iter()
        .zip(&gram.std_err)
        .map(|(m, s)| (s / m).powi(2))
        .sum::<f64>()
        .sqrt()
        / kf;

    Ok(CodingGainResult {
        k,
        alpha: params.alpha().to_vec(),
        sum_h_x,
        sum_h_u,
        jacobian_diag_expect: gram.mean,
        jacobian_diag_std_err: gram.std_err,
        gain,
        gain_std_err: gain * rel,
        unit,
    })
}

/// Box-plot statistics (quartiles by linear interpolation, 1.5 IQR whiskers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    Ok(BoxStats {
        n: values.len(),
        min: sorted[0],
        q1,
        median: quantile(&sorted, 0.5),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        q3,
        max: sorted[sorted.len() - 1],
        outliers: sorted
            .iter()
            .copied()
            .filter(|&v| v < lo || v > hi)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub k: usize,
    pub stats: BoxStats,
    pub gains: Vec<f64>,
    /// Rounds with `G > 1`.
    pub above_one: usize,
    pub alphas: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Summary {
    pub rounds: usize,
    pub alpha_range: (f64, f64),
    pub n_mc: usize,
    pub seed: u64,
    pub unit: EntropyUnit,
    pub rows: Vec<Fig4Row>,
}

/// Coding gain over random concentrations: for every K, `rounds` draws of
/// `alpha ~ U[low, high]^{K+1}`, one gain each, summarized as box statistics.
///
/// Round `r` of dimension K uses the derived seed `(seed, K, r)`.
pub fn fig4_experiment(
    ks: &[usize],
    rounds: usize,
    alpha_range: (f64, f64),
    seed: u64,
    n_mc: usize,
    unit: EntropyUnit,
) -> Result<Fig4Summary> {
    let (low, high) = alpha_range;
    if !(low > 0.0 && high >= low && high.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "alpha range [{low}, {high}] must be positive and ordered"
        )));
    }
    if rounds == 0 {
        return Err(Error::InvalidParams("need at least one round".into()));
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 {
            return Err(Error::DimTooSmall { dim: k + 1, min: 2 });
        }
        let results: Vec<(Vec<f64>, f64)> = (0..rounds)
            .into_par_iter()
            .map(|r| {
                let round_seed = derive_seed2(seed, k as u64, r as u64);
                let mut rng = rng_from_seed(derive_seed(round_seed, 0));
                let alpha: Vec<f64> = (0..=k)
                    .map(|_| {
                        if high > low {
                            rng.random_range(low..high)
                        } else {
                            low
                        }
                    })
                    .collect();
                let params = DirichletParams::new(alpha.clone())?;
                let g = coding_gain_with_unit(&params, n_mc, derive_seed(round_seed, 1), unit)?;
                Ok((alpha, g.gain))
            })
            .collect::<Result<_>>()?;
        let gains: Vec<f64> = results.iter().map(|r| r.1).collect();
        rows.push(Fig4Row {
            k,
            stats: box_stats(&gains)?,
            above_one: gains.iter().filter(|&&g| g > 1.0).count(),
            gains,
            alphas: results.into_iter().map(|r| r.0).collect(),
        });
    }
    Ok(Fig4Summary {
        rounds,
        alpha_range,
        n_mc,
        seed,
        unit,
        rows,
    })
}
