//! Seeded, round-based reproductions of the synthetic experiments: p-value
//! grids for a single Dirichlet source and for a two-component mixture, the
//! coding-gain sweep, and the SNT/PNT runtime trend.
//!
//! Every round draws from its own derived seed, so rounds can run in any
//! order or in parallel and aggregate to the same result.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codinggain::{fig4_experiment, EntropyUnit, Fig4Summary, DEFAULT_MONTE_CARLO};
use crate::composition::build_plan;
use crate::distributions::{sample_dirichlet, sample_mixture, DirichletParams, MixtureParams};
use crate::error::{Error, Result};
use crate::independence::{
    independence_coefficient, pairwise_report_with_level, PairwiseReport, DEFAULT_ALPHA_LEVEL,
    DEFAULT_PERMUTATIONS, MIN_SAMPLES,
};
use crate::pca::pca_fit;
use crate::rng::{derive_seed, derive_seed2};
use crate::transforms::{pnt_forward_into, snt_forward_into};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Table1,
    Table2,
    Fig4,
    ComplexityTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Dirichlet(DirichletParams),
    Mixture(MixtureParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub alpha_level: f64,
    pub snt_slope: (f64, f64),
    pub pnt_slope: (f64, f64),
    /// Minimum fraction of coding-gain rounds with `G > 1`.
    pub min_gain_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            alpha_level: DEFAULT_ALPHA_LEVEL,
            snt_slope: (1.6, 2.4),
            pnt_slope: (0.8, 1.5),
            min_gain_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_samples: Vec<usize>,
    pub n_rounds: usize,
    pub n_perm: usize,
    pub seed: u64,
    pub params: Option<ModelParams>,
    /// Degrees of freedom swept by the coding-gain and timing scenarios.
    pub dofs: Vec<usize>,
    pub alpha_range: (f64, f64),
    pub n_mc: usize,
    pub entropy_unit: EntropyUnit,
    /// Timing repetitions per point; the median is kept.
    pub timing_reps: usize,
    pub thresholds: Thresholds,
}

pub fn table1_alpha() -> DirichletParams {
    DirichletParams::new(vec![2.0, 5.0, 6.0, 3.0, 7.0]).expect("valid alpha")
}

pub fn table2_mixture() -> MixtureParams {
    MixtureParams::new(
        vec![0.3, 0.7],
        vec![
            table1_alpha(),
            DirichletParams::new(vec![10.0, 2.0, 8.0, 2.0, 18.0]).expect("valid alpha"),
        ],
    )
    .expect("valid mixture")
}

impl ExperimentConfig {
    fn base(scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario,
            n_samples: Vec::new(),
            n_rounds: 50,
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 1,
            params: None,
            dofs: Vec::new(),
            alpha_range: (10.0, 50.0),
            n_mc: DEFAULT_MONTE_CARLO,
            entropy_unit: EntropyUnit::Bits,
            timing_reps: 7,
            thresholds: Thresholds::default(),
        }
    }

    pub fn table1() -> Self {
        ExperimentConfig {
            n_samples: vec![100, 200, 400, 800],
            params: Some(ModelParams::Dirichlet(table1_alpha())),
            ..Self::base(Scenario::Table1)
        }
    }

    pub fn table2() -> Self {
        ExperimentConfig {
            n_samples: vec![50, 800],
            params: Some(ModelParams::Mixture(table2_mixture())),
            ..Self::base(Scenario::Table2)
        }
    }

    pub fn fig4() -> Self {
        ExperimentConfig {
            n_rounds: 100,
            dofs: vec![4, 5, 6],
            ..Self::base(Scenario::Fig4)
        }
    }

    pub fn complexity_trend() -> Self {
        ExperimentConfig {
            n_samples: vec![2000],
            n_rounds: 1,
            dofs: vec![8, 16, 32, 64, 128, 256],
            ..Self::base(Scenario::ComplexityTrend)
        }
    }

    pub fn for_scenario(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Table1 => Self::table1(),
            Scenario::Table2 => Self::table2(),
            Scenario::Fig4 => Self::fig4(),
            Scenario::ComplexityTrend => Self::complexity_trend(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.n_rounds == 0 {
            return bad("n_rounds must be at least 1");
        }
        match self.scenario {
            Scenario::Table1 | Scenario::Table2 | Scenario::ComplexityTrend => {
                if self.n_samples.is_empty() || self.n_samples.contains(&0) {
                    return bad("n_samples must list positive counts");
                }
            }
            Scenario::Fig4 => {}
        }
        if matches!(self.scenario, Scenario::Fig4 | Scenario::ComplexityTrend)
            && (self.dofs.is_empty() || self.dofs.contains(&0))
        {
            return bad("dofs must list positive values");
        }
        if self.scenario == Scenario::ComplexityTrend && self.timing_reps == 0 {
            return bad("timing_reps must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// First K parts of the composition.
    Raw,
    Pnt,
    /// Top K principal components.
    Pca,
}

/// One p-value grid aggregated over rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub n_samples: usize,
    pub method: Method,
    /// `None` for the whole data set, otherwise the ground-truth component.
    pub cluster: Option<usize>,
    pub dim: usize,
    /// Rounds averaged into each cell.
    pub cell_rounds: Vec<Vec<usize>>,
    pub mean_pvalue: Vec<Vec<f64>>,
    pub mean_dcor: Vec<Vec<f64>>,
    pub per_round_pvalue: Vec<Vec<Vec<f64>>>,
    /// Fraction of rounds where every pair has `p > alpha_level`.
    pub frac_all_independent: f64,
    /// Fraction of rounds where every pair has `p < alpha_level`.
    pub frac_all_dependent: f64,
    pub mean_independence_coefficient: f64,
}

impl ConditionResult {
    pub fn rounds(&self) -> usize {
        self.per_round_pvalue.len()
    }

    fn upper(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).flat_map(move |i| (i + 1..self.dim).map(move |j| self.mean_pvalue[i][j]))
    }

    pub fn max_mean_pvalue(&self) -> f64 {
        self.upper().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_mean_pvalue(&self) -> f64 {
        self.upper().fold(f64::INFINITY, f64::min)
    }

    pub fn describe(&self) -> String {
        let subset = match self.cluster {
            None => "whole".to_string(),
            Some(c) => format!("cluster {}", c + 1),
        };
        format!("N={} {:?} {}", self.n_samples, self.method, subset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Flag {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Flag {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n_samples: usize,
    pub dofs: Vec<usize>,
    pub reps: usize,
    /// Median seconds per point.
    pub snt_secs: Vec<f64>,
    pub pnt_secs: Vec<f64>,
    pub snt_slope: f64,
    pub pnt_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub seed: u64,
    pub n_rounds: usize,
    pub n_perm: usize,
    pub conditions: Vec<ConditionResult>,
    pub flags: Vec<Flag>,
    pub runtime_secs: f64,
    pub fig4: Option<Fig4Summary>,
    pub timing: Option<TimingReport>,
}

impl ExperimentResult {
    pub fn all_passed(&self) -> bool {
        self.flags.iter().all(|f| f.passed)
    }

    pub fn flag(&self, name: &str) -> Option<&Flag> {
        self.flags.iter().find(|f| f.name == name)
    }

    pub fn condition(
        &self,
        n: usize,
        method: Method,
        cluster: Option<usize>,
    ) -> Option<&ConditionResult> {
        self.conditions
            .iter()
            .find(|c| c.n_samples == n && c.method == method && c.cluster == cluster)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.scenario {
        Scenario::Table1 => run_table1(config),
        Scenario::Table2 => run_table2(config),
        Scenario::Fig4 => run_fig4(config),
        Scenario::ComplexityTrend => run_complexity_trend(config),
    }
}

fn expect_scenario(config: &ExperimentConfig, scenario: Scenario) -> Result<()> {
    if config.scenario != scenario {
        return Err(Error::ConfigMismatch(format!(
            "config is for {:?}, not {:?}",
            config.scenario, scenario
        )));
    }
    config.validate()
}

// ---------------------------------------------------------------------------
// Row transforms
// ---------------------------------------------------------------------------

fn raw_rows(data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    data.iter().map(|x| x[..x.len() - 1].to_vec()).collect()
}

fn pnt_rows(data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = data[0].len();
    let plan = build_plan(dim)?;
    let mut scratch = vec![0.0; dim];
    data.iter()
        .map(|x| {
            let mut out = vec![0.0; plan.output_dim()];
            pnt_forward_into(&plan, x, &mut out, &mut scratch)?;
            Ok(out)
        })
        .collect()
}

fn pca_rows(data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let model = pca_fit(data)?;
    let k = model.dim() - 1;
    Ok(data.iter().map(|x| model.project(x, k)).collect())
}

fn method_rows(method: Method, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    match method {
        Method::Raw => Ok(raw_rows(data)),
        Method::Pnt => pnt_rows(data),
        Method::Pca => pca_rows(data),
    }
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ConditionKey {
    n: usize,
    method: Method,
    cluster: Option<usize>,
}

fn aggregate(key: ConditionKey, dim: usize, reports: &[PairwiseReport]) -> ConditionResult {
    let rounds = reports.len();
    let mut mean_pvalue = vec![vec![0.0; dim]; dim];
    let mut mean_dcor = vec![vec![0.0; dim]; dim];
    for r in reports {
        for i in 0..dim {
            for j in 0..dim {
                mean_pvalue[i][j] += r.pvalue[i][j];
                mean_dcor[i][j] += r.dcor[i][j];
            }
        }
    }
    if rounds > 0 {
        let n = rounds as f64;
        mean_pvalue.iter_mut().flatten().for_each(|v| *v /= n);
        mean_dcor.iter_mut().flatten().for_each(|v| *v /= n);
    }
    let frac = |f: fn(&PairwiseReport) -> bool| {
        if rounds == 0 {
            0.0
        } else {
            reports.iter().filter(|r| f(r)).count() as f64 / rounds as f64
        }
    };
    ConditionResult {
        n_samples: key.n,
        method: key.method,
        cluster: key.cluster,
        dim,
        cell_rounds: vec![vec![rounds; dim]; dim],
        mean_pvalue,
        mean_dcor,
        per_round_pvalue: reports.iter().map(|r| r.pvalue.clone()).collect(),
        frac_all_independent: frac(PairwiseReport::all_independent),
        frac_all_dependent: frac(PairwiseReport::all_dependent),
        mean_independence_coefficient: if rounds == 0 {
            0.0
        } else {
            reports.iter().map(independence_coefficient).sum::<f64>() / rounds as f64
        },
    }
}

/// Runs every (N, round) job in parallel, each producing one optional report
/// per condition slot, then aggregates slot-wise in round order.
fn run_rounds<F>(
    config: &ExperimentConfig,
    slots: &[ConditionKey],
    dim: usize,
    job: F,
) -> Result<Vec<ConditionResult>>
where
    F: Fn(usize, u64) -> Result<Vec<Option<PairwiseReport>>> + Sync,
{
    let jobs: Vec<(usize, usize)> = config
        .n_samples
        .iter()
        .flat_map(|&n| (0..config.n_rounds).map(move |r| (n, r)))
        .collect();
    let outputs: Vec<Vec<Option<PairwiseReport>>> = jobs
        .par_iter()
        .map(|&(n, r)| job(n, derive_seed2(config.seed, n as u64, r as u64)))
        .collect::<Result<_>>()?;

    let mut results = Vec::new();
    for &n in &config.n_samples {
        let per_n: Vec<&Vec<Option<PairwiseReport>>> = jobs
            .iter()
            .zip(&outputs)
            .filter(|((jn, _), _)| *jn == n)
            .map(|(_, o)| o)
            .collect();
        for (s, key) in slots.iter().enumerate() {
            let reports: Vec<PairwiseReport> = per_n.iter().filter_map(|o| o[s].clone()).collect();
            results.push(aggregate(ConditionKey { n, ..*key }, dim, &reports));
        }
    }
    Ok(results)
}

fn report(rows: &[Vec<f64>], config: &ExperimentConfig, seed: u64) -> Result<PairwiseReport> {
    pairwise_report_with_level(rows, config.n_perm, seed, config.thresholds.alpha_level)
}

fn fmt_grid_range(c: &ConditionResult) -> String {
    format!(
        "{}: mean p in [{:.3}, {:.3}] over {} rounds",
        c.describe(),
        c.min_mean_pvalue(),
        c.max_mean_pvalue(),
        c.rounds()
    )
}

// ---------------------------------------------------------------------------
// Single Dirichlet source
// ---------------------------------------------------------------------------

/// Single Dirichlet source: p-value grids of the raw parts, the PNT
/// coordinates and the PCA scores, for every configured N.
pub fn run_table1(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_scenario(config, Scenario::Table1)?;
    let params = match &config.params {
        Some(ModelParams::Dirichlet(p)) => p.clone(),
        _ => {
            return Err(Error::ConfigMismatch(
                "table1 needs Dirichlet parameters".into(),
            ))
        }
    };
    let start = Instant::now();
    let methods = [Method::Raw, Method::Pnt, Method::Pca];
    let slots: Vec<ConditionKey> = methods
        .iter()
        .map(|&method| ConditionKey {
            n: 0,
            method,
            cluster: None,
        })
        .collect();
    let dim = params.dim() - 1;
    let conditions = run_rounds(config, &slots, dim, |n, round_seed| {
        let data: Vec<Vec<f64>> = sample_dirichlet(&params, n, derive_seed(round_seed, 0))?
            .into_iter()
            .map(|c| c.into_values())
            .collect();
        methods
            .iter()
            .enumerate()
            .map(|(m, &method)| {
                let rows = method_rows(method, &data)?;
                report(&rows, config, derive_seed(round_seed, 1 + m as u64)).map(Some)
            })
            .collect()
    })?;

    let level = config.thresholds.alpha_level;
    let n_max = *config.n_samples.iter().max().expect("validated");
    let find = |m| {
        conditions
            .iter()
            .find(|c| c.n_samples == n_max && c.method == m && c.cluster.is_none())
            .expect("condition present")
    };
    let (raw, pnt, pca) = (find(Method::Raw), find(Method::Pnt), find(Method::Pca));
    let flags = vec![
        Flag::new(
            "raw_all_dependent",
            raw.max_mean_pvalue() < level,
            fmt_grid_range(raw),
        ),
        Flag::new(
            "pnt_all_independent",
            pnt.min_mean_pvalue() > level,
            fmt_grid_range(pnt),
        ),
        Flag::new(
            "pca_some_dependent",
            pca.min_mean_pvalue() < level,
            fmt_grid_range(pca),
        ),
    ];
    Ok(ExperimentResult {
        scenario: Scenario::Table1,
        seed: config.seed,
        n_rounds: config.n_rounds,
        n_perm: config.n_perm,
        conditions,
        flags,
        runtime_secs: start.elapsed().as_secs_f64(),
        fig4: None,
        timing: None,
    })
}

// ---------------------------------------------------------------------------
// Dirichlet mixture
// ---------------------------------------------------------------------------

/// Dirichlet mixture: whole-set raw and PNT grids, and PNT grids within each
/// ground-truth component. Components with fewer than four samples in a
/// round are left out of that round's average.
pub fn run_table2(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_scenario(config, Scenario::Table2)?;
    let params = match &config.params {
        Some(ModelParams::Mixture(p)) => p.clone(),
        _ => {
            return Err(Error::ConfigMismatch(
                "table2 needs mixture parameters".into(),
            ))
        }
    };
    let start = Instant::now();
    let n_comp = params.components().len();
    let mut slots = vec![
        ConditionKey {
            n: 0,
            method: Method::Raw,
            cluster: None,
        },
        ConditionKey {
            n: 0,
            method: Method::Pnt,
            cluster: None,
        },
    ];
    slots.extend((0..n_comp).map(|c| ConditionKey {
        n: 0,
        method: Method::Pnt,
        cluster: Some(c),
    }));
    let dim = params.dim() - 1;
    let conditions = run_rounds(config, &slots, dim, |n, round_seed| {
        let draws = sample_mixture(&params, n, derive_seed(round_seed, 0))?;
        let data: Vec<Vec<f64>> = draws.iter().map(|(c, _)| c.values().to_vec()).collect();
        let mut out = vec![
            Some(report(
                &raw_rows(&data),
                config,
                derive_seed(round_seed, 1),
            )?),
            Some(report(
                &pnt_rows(&data)?,
                config,
                derive_seed(round_seed, 2),
            )?),
        ];
        for c in 0..n_comp {
            let members: Vec<Vec<f64>> = draws
                .iter()
                .filter(|(_, label)| *label == c)
                .map(|(x, _)| x.values().to_vec())
                .collect();
            if members.len() < MIN_SAMPLES {
                out.push(None);
                continue;
            }
            let rows = pnt_rows(&members)?;
            out.push(Some(report(
                &rows,
                config,
                derive_seed(round_seed, 3 + c as u64),
            )?));
        }
        Ok(out)
    })?;

    let n_max = *config.n_samples.iter().max().expect("validated");
    let at_max: Vec<&ConditionResult> =
        conditions.iter().filter(|c| c.n_samples == n_max).collect();
    let whole = at_max
        .iter()
        .find(|c| c.method == Method::Pnt && c.cluster.is_none())
        .expect("condition present");
    let mut flags = vec![Flag::new(
        "whole_pnt_all_dependent",
        whole.frac_all_dependent > 0.5,
        format!(
            "{}; all pairs dependent in {:.0}% of rounds",
            fmt_grid_range(whole),
            100.0 * whole.frac_all_dependent
        ),
    )];
    for c in at_max.iter().filter(|c| c.cluster.is_some()) {
        let k = c.cluster.expect("filtered") + 1;
        flags.push(Flag::new(
            &format!("cluster{k}_pnt_all_independent"),
            c.rounds() > 0 && c.frac_all_independent > 0.5,
            format!(
                "{}; all pairs independent in {:.0}% of rounds",
                fmt_grid_range(c),
                100.0 * c.frac_all_independent
            ),
        ));
    }
    Ok(ExperimentResult {
        scenario: Scenario::Table2,
        seed: config.seed,
        n_rounds: config.n_rounds,
        n_perm: config.n_perm,
        conditions,
        flags,
        runtime_secs: start.elapsed().as_secs_f64(),
        fig4: None,
        timing: None,
    })
}

// ---------------------------------------------------------------------------
// Coding gain sweep
// ---------------------------------------------------------------------------

pub fn run_fig4(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_scenario(config, Scenario::Fig4)?;
    let start = Instant::now();
    let summary = fig4_experiment(
        &config.dofs,
        config.n_rounds,
        config.alpha_range,
        config.seed,
        config.n_mc,
        config.entropy_unit,
    )?;
    let mut flags = Vec::new();
    for row in &summary.rows {
        let frac = row.above_one as f64 / summary.rounds as f64;
        flags.push(Flag::new(
            &format!("k{}_gain_above_one", row.k),
            frac >= config.thresholds.min_gain_fraction,
            format!(
                "K={}: G > 1 in {}/{} rounds, min {:.4}, median {:.4}",
                row.k, row.above_one, summary.rounds, row.stats.min, row.stats.median
            ),
        ));
        flags.push(Flag::new(
            &format!("k{}_mean_gain_above_one", row.k),
            row.stats.mean > 1.0,
            format!("K={}: mean G {:.4}", row.k, row.stats.mean),
        ));
    }
    Ok(ExperimentResult {
        scenario: Scenario::Fig4,
        seed: config.seed,
        n_rounds: config.n_rounds,
        n_perm: 0,
        conditions: Vec::new(),
        flags,
        runtime_secs: start.elapsed().as_secs_f64(),
        fig4: Some(summary),
        timing: None,
    })
}

// ---------------------------------------------------------------------------
// Complexity trend
// ---------------------------------------------------------------------------

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn time_median(reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

/// Times SNT and PNT over `N` flat-buffer rows for each K, on the calling
/// thread only, and fits log-log slopes of runtime against K.
pub fn run_complexity_trend(config: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_scenario(config, Scenario::ComplexityTrend)?;
    let start = Instant::now();
    let n = config.n_samples[0];
    let mut snt_secs = Vec::new();
    let mut pnt_secs = Vec::new();
    for &k in &config.dofs {
        let dim = k + 1;
        let params = DirichletParams::new(vec![1.0; dim])?;
        let data: Vec<f64> = sample_dirichlet(&params, n, derive_seed(config.seed, k as u64))?
            .into_iter()
            .flat_map(|c| c.into_values())
            .collect();
        let plan = build_plan(dim)?;
        let mut out = vec![0.0; k];
        let mut scratch = vec![0.0; dim];
        let mut sink = 0.0;

        // warm-up pass
        for x in data.chunks_exact(dim) {
            snt_forward_into(x, &mut out, &mut scratch)?;
            pnt_forward_into(&plan, x, &mut out, &mut scratch)?;
        }
        snt_secs.push(time_median(config.timing_reps, || {
            for x in data.chunks_exact(dim) {
                snt_forward_into(x, &mut out, &mut scratch)?;
                sink += out[k - 1];
            }
            Ok(())
        })?);
        pnt_secs.push(time_median(config.timing_reps, || {
            for x in data.chunks_exact(dim) {
                pnt_forward_into(&plan, x, &mut out, &mut scratch)?;
                sink += out[k - 1];
            }
            Ok(())
        })?);
        std::hint::black_box(sink);
    }
    let ks: Vec<f64> = config.dofs.iter().map(|&k| k as f64).collect();
    let snt_slope = log_log_slope(&ks, &snt_secs);
    let pnt_slope = log_log_slope(&ks, &pnt_secs);
    let th = config.thresholds;
    let last = config.dofs.len() - 1;
    let k_last = config.dofs[last];
    let flags = vec![
        Flag::new(
            "snt_slope",
            (th.snt_slope.0..=th.snt_slope.1).contains(&snt_slope),
            format!(
                "SNT slope {snt_slope:.3}, expected [{}, {}]",
                th.snt_slope.0, th.snt_slope.1
            ),
        ),
        Flag::new(
            "pnt_slope",
            (th.pnt_slope.0..=th.pnt_slope.1).contains(&pnt_slope),
            format!(
                "PNT slope {pnt_slope:.3}, expected [{}, {}]",
                th.pnt_slope.0, th.pnt_slope.1
            ),
        ),
        Flag::new(
            "pnt_faster_at_max_k",
            pnt_secs[last] < snt_secs[last],
            format!(
                "K={k_last}: PNT {:.3e} s, SNT {:.3e} s",
                pnt_secs[last], snt_secs[last]
            ),
        ),
    ];
    Ok(ExperimentResult {
        scenario: Scenario::ComplexityTrend,
        seed: config.seed,
        n_rounds: config.n_rounds,
        n_perm: 0,
        conditions: Vec::new(),
        flags,
        runtime_secs: start.elapsed().as_secs_f64(),
        fig4: None,
        timing: Some(TimingReport {
            n_samples: n,
            dofs: config.dofs.clone(),
            reps: config.timing_reps,
            snt_secs,
            pnt_secs,
            snt_slope,
            pnt_slope,
        }),
    })
}
