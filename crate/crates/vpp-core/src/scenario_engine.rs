//! Scenario generation and reduction.
//!
//! Forecasts enter as per-interval quantile curves ([`ProbabilisticForecast`]).
//! [`sample_trajectories`] draws correlated trajectories through a Gaussian
//! copula whose correlation decays exponentially with the interval distance,
//! so nearby intervals move together while distant ones decouple.
//! [`reduce_scenarios`] then shrinks a sampled set to a tractable size with
//! the fast-forward selection heuristic, redistributing the weight of every
//! dropped trajectory to its nearest kept neighbour.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("forecast: {0}")]
    Forecast(String),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("correlation length must be positive and finite, got {0}")]
    BadCorrelationLength(f64),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("reduction target {target} outside 1..={available}")]
    BadTarget { target: usize, available: usize },
    #[error("{file}: {msg}")]
    Format { file: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Per-interval quantile curves of a marginal forecast distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticForecast {
    levels: Vec<f64>,
    /// `values[k][q]` is the quantile at `levels[q]` for interval `k`.
    values: Vec<Vec<f64>>,
}

impl ProbabilisticForecast {
    /// Validates and wraps quantile data. Levels must be strictly increasing
    /// inside `(0, 1)`; values must be non-decreasing along the levels in
    /// every interval.
    pub fn new(levels: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, ScenarioError> {
        let err = |msg: String| Err(ScenarioError::Forecast(msg));
        if levels.is_empty() {
            return err("at least one quantile level required".into());
        }
        if levels.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return err(format!("levels must lie strictly inside (0, 1), got {levels:?}"));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return err(format!("levels must be strictly increasing, got {levels:?}"));
        }
        if values.is_empty() {
            return err("at least one interval required".into());
        }
        for (k, row) in values.iter().enumerate() {
            if row.len() != levels.len() {
                return err(format!(
                    "interval {k} has {} values for {} levels",
                    row.len(),
                    levels.len()
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return err(format!("interval {k} contains a non-finite value"));
            }
            if row.windows(2).any(|w| w[0] > w[1]) {
                return err(format!(
                    "quantile values must be non-decreasing per interval, interval {k} is not"
                ));
            }
        }
        Ok(ProbabilisticForecast { levels, values })
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Piecewise-linear quantile function for interval `k`, clamped to the
    /// outermost quantiles outside the tabulated range.
    pub fn quantile(&self, k: usize, u: f64) -> f64 {
        let row = &self.values[k];
        let q = &self.levels;
        if u <= q[0] {
            return row[0];
        }
        if u >= q[q.len() - 1] {
            return row[row.len() - 1];
        }
        let hi = q.partition_point(|&lvl| lvl < u);
        let (q0, q1) = (q[hi - 1], q[hi]);
        let t = (u - q0) / (q1 - q0);
        row[hi - 1] + t * (row[hi] - row[hi - 1])
    }
}

/// Weighted trajectories over a common horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    /// `trajectories[s][k]` is the value of scenario `s` in interval `k`.
    pub trajectories: Vec<Vec<f64>>,
    /// Probability of each scenario; sums to 1.
    pub weights: Vec<f64>,
}

impl TrajectorySet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.trajectories.first().map_or(0, Vec::len)
    }
}

/// Correlation matrix with entries `exp(-|k - k'| / nu)`.
pub fn build_covariance(horizon: usize, nu: f64) -> Result<Vec<Vec<f64>>, ScenarioError> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(ScenarioError::BadCorrelationLength(nu));
    }
    Ok((0..horizon)
        .map(|a| {
            (0..horizon)
                .map(|b| (-((a as f64 - b as f64).abs()) / nu).exp())
                .collect()
        })
        .collect())
}

/// Lower-triangular Cholesky factor `L` with `L L^T = a`.
pub fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= l[j][k] * l[j][k];
        }
        if diag <= 1e-12 {
            return Err(ScenarioError::NotPositiveDefinite);
        }
        l[j][j] = diag.sqrt();
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / l[j][j];
        }
    }
    Ok(l)
}

/// Draws `count` equally weighted trajectories from the forecast marginals
/// coupled by a Gaussian copula with correlation length `nu`.
///
/// The same seed always produces the same set.
pub fn sample_trajectories(
    forecast: &ProbabilisticForecast,
    nu: f64,
    count: usize,
    seed: u64,
) -> Result<TrajectorySet, ScenarioError> {
    if count == 0 {
        return Err(ScenarioError::NoSamples);
    }
    let horizon = forecast.horizon();
    let cov = build_covariance(horizon, nu)?;
    let l = cholesky(&cov)?;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut trajectories = Vec::with_capacity(count);
    let mut g = vec![0.0; horizon];
    for _ in 0..count {
        for gk in g.iter_mut() {
            *gk = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let mut path = Vec::with_capacity(horizon);
        for k in 0..horizon {
            let mut z = 0.0;
            for (m, &gm) in g.iter().enumerate().take(k + 1) {
                z += l[k][m] * gm;
            }
            path.push(forecast.quantile(k, normal.cdf(z)));
        }
        trajectories.push(path);
    }
    let w = 1.0 / count as f64;
    Ok(TrajectorySet {
        trajectories,
        weights: vec![w; count],
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Fast-forward scenario reduction.
///
/// Greedily keeps `target` trajectories: each step adds the candidate that
/// minimizes the weighted distance from every scenario to its nearest kept
/// one (ties broken toward the lowest index). Dropped scenarios hand their
/// weight to the nearest kept scenario. The result preserves the original
/// relative order of the kept trajectories.
pub fn reduce_scenarios(set: &TrajectorySet, target: usize) -> Result<TrajectorySet, ScenarioError> {
    let n = set.len();
    if target == 0 || target > n {
        return Err(ScenarioError::BadTarget { target, available: n });
    }
    if target == n {
        return Ok(set.clone());
    }

    // dist_to_kept[w] = distance from scenario w to its nearest kept scenario.
    let mut kept = vec![false; n];
    let mut dist_to_kept = vec![f64::INFINITY; n];
    for _ in 0..target {
        let mut best: Option<(f64, usize)> = None;
        for c in 0..n {
            if kept[c] {
                continue;
            }
            let mut cost = 0.0;
            for w in 0..n {
                let d = distance(&set.trajectories[w], &set.trajectories[c]);
                cost += set.weights[w] * d.min(dist_to_kept[w]);
            }
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, c));
            }
        }
        let (_, chosen) = best.expect("candidate available while kept < n");
        kept[chosen] = true;
        for w in 0..n {
            let d = distance(&set.trajectories[w], &set.trajectories[chosen]);
            if d < dist_to_kept[w] {
                dist_to_kept[w] = d;
            }
        }
    }

    let kept_ids: Vec<usize> = (0..n).filter(|&s| kept[s]).collect();
    let mut weights: Vec<f64> = kept_ids.iter().map(|&s| set.weights[s]).collect();
    for w in 0..n {
        if kept[w] {
            continue;
        }
        let mut nearest = 0;
        let mut nearest_d = f64::INFINITY;
        for (slot, &s) in kept_ids.iter().enumerate() {
            let d = distance(&set.trajectories[w], &set.trajectories[s]);
            if d < nearest_d {
                nearest_d = d;
                nearest = slot;
            }
        }
        weights[nearest] += set.weights[w];
    }
    Ok(TrajectorySet {
        trajectories: kept_ids
            .iter()
            .map(|&s| set.trajectories[s].clone())
            .collect(),
        weights,
    })
}

/// Writes a forecast as CSV with header `k,q_<level>,...` and one row per
/// interval (1-based `k`).
pub fn write_forecast_csv(out: &mut impl Write, forecast: &ProbabilisticForecast) -> Result<(), ScenarioError> {
    let mut header = String::from("k");
    for q in forecast.levels() {
        header.push_str(&format!(",q_{q}"));
    }
    writeln!(out, "{header}")?;
    for (k, row) in forecast.values.iter().enumerate() {
        let mut line = format!("{}", k + 1);
        for v in row {
            line.push_str(&format!(",{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a forecast written by [`write_forecast_csv`]. `name` labels errors.
pub fn read_forecast_csv(input: impl BufRead, name: &str) -> Result<ProbabilisticForecast, ScenarioError> {
    let fail = |msg: String| ScenarioError::Format {
        file: name.to_string(),
        msg,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(ScenarioError::Csv)?.clone();
    let mut fields = headers.iter();
    if fields.next() != Some("k") {
        return Err(fail("first column must be k".into()));
    }
    let mut levels = Vec::new();
    for field in fields {
        let Some(level) = field.strip_prefix("q_") else {
            return Err(fail(format!("quantile column {field:?} must start with q_")));
        };
        let q: f64 = level
            .parse()
            .map_err(|_| fail(format!("cannot parse quantile level {level:?}")))?;
        levels.push(q);
    }
    let mut values = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(ScenarioError::Csv)?;
        if record.len() != levels.len() + 1 {
            return Err(fail(format!(
                "row {} has {} fields, expected {}",
                idx + 2,
                record.len(),
                levels.len() + 1
            )));
        }
        let k: usize = record[0]
            .parse()
            .map_err(|_| fail(format!("cannot parse interval index {:?}", &record[0])))?;
        if k != idx + 1 {
            return Err(fail(format!("interval rows must be 1, 2, ... in order; row {} has k = {k}", idx + 2)));
        }
        let row: Result<Vec<f64>, _> = record.iter().skip(1).map(str::parse).collect();
        values.push(row.map_err(|_| fail(format!("cannot parse value in row {}", idx + 2)))?);
    }
    ProbabilisticForecast::new(levels, values)
        .map_err(|e| fail(e.to_string()))
}

/// Writes trajectories as CSV with header `scenario,weight,k1,...,kK`.
pub fn write_trajectories_csv(out: &mut impl Write, set: &TrajectorySet) -> Result<(), ScenarioError> {
    let mut header = String::from("scenario,weight");
    for k in 1..=set.horizon() {
        header.push_str(&format!(",k{k}"));
    }
    writeln!(out, "{header}")?;
    for (s, (path, w)) in set.trajectories.iter().zip(&set.weights).enumerate() {
        let mut line = format!("{},{w}", s + 1);
        for v in path {
            line.push_str(&format!(",{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads trajectories written by [`write_trajectories_csv`].
pub fn read_trajectories_csv(input: impl BufRead, name: &str) -> Result<TrajectorySet, ScenarioError> {
    let fail = |msg: String| ScenarioError::Format {
        file: name.to_string(),
        msg,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(ScenarioError::Csv)?.clone();
    let mut fields = headers.iter();
    if fields.next() != Some("scenario") || fields.next() != Some("weight") {
        return Err(fail("header must start with scenario,weight".into()));
    }
    let horizon = fields.count();
    let mut trajectories = Vec::new();
    let mut weights = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(ScenarioError::Csv)?;
        if record.len() != horizon + 2 {
            return Err(fail(format!(
                "row {} has {} fields, expected {}",
                idx + 2,
                record.len(),
                horizon + 2
            )));
        }
        let w: f64 = record[1]
            .parse()
            .map_err(|_| fail(format!("cannot parse weight in row {}", idx + 2)))?;
        if !w.is_finite() || w < 0.0 {
            return Err(fail(format!("weight in row {} must be non-negative", idx + 2)));
        }
        let path: Result<Vec<f64>, _> = record.iter().skip(2).map(str::parse).collect();
        trajectories.push(path.map_err(|_| fail(format!("cannot parse value in row {}", idx + 2)))?);
        weights.push(w);
    }
    if trajectories.is_empty() {
        return Err(fail("no scenarios".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(fail(format!("weights sum to {sum}, expected 1")));
    }
    Ok(TrajectorySet { trajectories, weights })
}
