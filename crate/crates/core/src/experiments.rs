//! Monte Carlo estimates of `Var f_v` for `v = n·e₁` and their scaling in `n`.
//!
//! Replicate `r` of a row with seed `s` samples its weight field with seed
//! `seed::derive(s, r)`. Replicates run on a rayon pool, are collected in
//! index order and summed pairwise, so every number is independent of the
//! worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::edgedist::EdgeDistribution;
use crate::error::{domain, invalid, Result};
use crate::fpp;
use crate::seed;

pub const MIN_SAMPLES: usize = 100;

/// CSV header written by [`SweepResult::to_csv`].
pub const CSV_HEADER: &str = "n,samples,mean,var,se_var,mean_over_n,var_over_n,var_logn_over_n,seed";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub n: u32,
    pub samples: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// `var·√(2/(N−1))`
    pub se_var: f64,
    /// Jackknife standard error of `var`.
    pub se_var_jackknife: f64,
    /// The two standard errors are within a factor 2 of each other.
    pub jackknife_consistent: bool,
    /// Time-constant proxy `mean/n`.
    pub mean_over_n: f64,
    /// Standard error of `mean/n`.
    pub se_mean_over_n: f64,
    pub seed: u64,
}

impl VarianceEstimate {
    pub fn var_over_n(&self) -> f64 {
        self.var / self.n as f64
    }

    pub fn var_logn_over_n(&self) -> f64 {
        self.var * (self.n as f64).ln() / self.n as f64
    }
}

/// Sum by recursive halving; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return invalid("worker count must be at least 1");
        }
        builder = builder.num_threads(w);
    }
    builder
        .build()
        .map_err(|e| crate::Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

fn check_distribution(dist: &dyn EdgeDistribution) -> Result<()> {
    let v = dist.variance();
    if !(v > 0.0) || !v.is_finite() {
        return domain(format!(
            "{} is degenerate (variance {v}); passage times would not fluctuate",
            dist.name()
        ));
    }
    Ok(())
}

/// Summary statistics of the replicate values `f_v`.
pub fn summarize(n: u32, seed: u64, values: &[f64]) -> VarianceEstimate {
    let count = values.len();
    let nf = count as f64;
    let mean = pairwise_sum(values) / nf;
    let dev: Vec<f64> = values.iter().map(|x| (x - mean).powi(2)).collect();
    let ss = pairwise_sum(&dev);
    let var = ss / (nf - 1.0);
    let se_var = var * (2.0 / (nf - 1.0)).sqrt();
    // Leave-one-out variances in closed form.
    let loo: Vec<f64> = dev.iter().map(|d| (ss - nf / (nf - 1.0) * d) / (nf - 2.0)).collect();
    let loo_mean = pairwise_sum(&loo) / nf;
    let loo_dev: Vec<f64> = loo.iter().map(|v| (v - loo_mean).powi(2)).collect();
    let se_var_jackknife = ((nf - 1.0) / nf * pairwise_sum(&loo_dev)).sqrt();
    let ratio = se_var_jackknife / se_var;
    VarianceEstimate {
        n,
        samples: count,
        mean,
        var,
        se_var,
        se_var_jackknife,
        jackknife_consistent: (0.5..=2.0).contains(&ratio) || (var == 0.0 && se_var_jackknife == 0.0),
        mean_over_n: mean / n as f64,
        se_mean_over_n: (var / nf).sqrt() / n as f64,
        seed,
    }
}

/// Passage times `f_v` for replicates `0..samples`, in replicate order.
pub fn passage_samples(
    dist: &dyn EdgeDistribution,
    d: usize,
    n: u32,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    let grid = fpp::GridSpec::for_target(d, n.into(), fpp::default_pad(n.into()))?;
    let mut target = vec![0i64; d];
    target[0] = n.into();
    let origin = vec![0i64; d];
    pool(workers)?.install(|| {
        (0..samples as u64)
            .into_par_iter()
            .map(|r| {
                let field = fpp::WeightField::sample(grid.clone(), dist, seed::derive(seed, r));
                Ok(fpp::passage_time(&field, &origin, &target)?.distance)
            })
            .collect()
    })
}

/// `N` independent passage times `f_{n·e₁}` on the default box.
pub fn estimate_variance(
    dist: &dyn EdgeDistribution,
    d: usize,
    n: u32,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<VarianceEstimate> {
    check_distribution(dist)?;
    if samples < MIN_SAMPLES {
        return invalid(format!("at least {MIN_SAMPLES} samples are needed, got {samples}"));
    }
    if n < 2 {
        return invalid(format!("n must be at least 2, got {n}"));
    }
    let values = passage_samples(dist, d, n, samples, seed, workers)?;
    Ok(summarize(n, seed, &values))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub distribution: String,
    pub d: usize,
    /// `E x_e²` of the edge law.
    pub second_moment: f64,
    pub rows: Vec<VarianceEstimate>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.samples,
                r.mean,
                r.var,
                r.se_var,
                r.mean_over_n,
                r.var_over_n(),
                r.var_logn_over_n(),
                r.seed
            ));
        }
        out
    }

    /// Whether `var/n` never rises by more than `k` combined standard errors
    /// between consecutive rows.
    pub fn var_over_n_nonincreasing(&self, k: f64) -> bool {
        self.rows.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (na, nb) = (a.n as f64, b.n as f64);
            let se = ((a.se_var / na).powi(2) + (b.se_var / nb).powi(2)).sqrt();
            b.var_over_n() <= a.var_over_n() + k * se
        })
    }
}

/// One [`estimate_variance`] row per `n`; row `n` uses the seed
/// `seed::derive(seed, n)`, recorded in the row.
pub fn sweep(
    dist: &dyn EdgeDistribution,
    d: usize,
    n_list: &[u32],
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<SweepResult> {
    check_distribution(dist)?;
    if n_list.is_empty() {
        return invalid("the list of n values is empty");
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return invalid(format!("n values must be strictly increasing, got {n_list:?}"));
    }
    let rows = n_list
        .iter()
        .map(|&n| estimate_variance(dist, d, n, samples, seed::derive(seed, n.into()), workers))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        distribution: dist.name(),
        d,
        second_moment: dist.variance() + dist.mean().powi(2),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// `max / min` of `var·ln(n)/n` over the rows.
    pub ratio_bound: f64,
    /// Slope of `ln var` against `ln n`.
    pub slope_loglog: f64,
    pub intercept: f64,
    /// Standard error of the slope, inflated by the Birge ratio when the
    /// residuals exceed the quoted errors.
    pub slope_stderr: f64,
    /// `√(χ²/(rows − 2))` of the fit.
    pub birge_ratio: f64,
}

/// Weighted least squares of `ln var` on `ln n` with `σ(ln var) = se_var/var`.
pub fn fit_scaling(rows: &[VarianceEstimate]) -> Result<ScalingFit> {
    if rows.len() < 3 {
        return invalid(format!("a scaling fit needs at least 3 rows, got {}", rows.len()));
    }
    if rows.iter().any(|r| !(r.var > 0.0)) {
        return domain("every row needs a positive variance");
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.var_logn_over_n()).collect();
    let ratio_bound = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);

    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| {
            let sigma = if r.se_var > 0.0 { r.se_var / r.var } else { 1.0 };
            ((r.n as f64).ln(), r.var.ln(), 1.0 / (sigma * sigma))
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    let birge_ratio = (chi2 / (pts.len() - 2) as f64).sqrt();
    Ok(ScalingFit {
        ratio_bound,
        slope_loglog: slope,
        intercept,
        slope_stderr: (1.0 / sxx).sqrt() * birge_ratio.max(1.0),
        birge_ratio,
    })
}
