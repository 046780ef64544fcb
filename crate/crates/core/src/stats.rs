//! Monte Carlo estimators on periodic lattices.
//!
//! Single-run series get batch-means standard errors. Covariances come
//! from independent replicas, each started from all-plus and run past a
//! burn-in with its own derived key; standard errors of ratio-like
//! estimators use the delta method. Replicas run in parallel and are
//! aggregated in index order, so results depend only on the seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Engine, LatticeState, NoiseKind, NoiseModel, RngKey};
use crate::rule::RuleSpec;

const BATCHES: usize = 20;
/// Points within this many standard errors of zero are not fitted.
pub const NOISE_FLOOR_SE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Mean with batch-means standard error. Short series fall back to the
/// naive i.i.d. error.
pub fn batch_mean(series: &[f64]) -> Estimate {
    let n = series.len();
    if n == 0 {
        return Estimate { value: f64::NAN, stderr: f64::NAN, n: 0 };
    }
    let value = series.iter().sum::<f64>() / n as f64;
    let batches = BATCHES.min(n / 2);
    if batches < 2 {
        return Estimate { value, stderr: 0.0, n };
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Estimate { value, stderr: (var / batches as f64).sqrt(), n }
}

/// Mean and standard error of i.i.d. samples.
pub fn sample_mean(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let value = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Estimate { value, stderr: (var / n as f64).sqrt(), n }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub noise: NoiseModel,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub steps: u64,
    pub burn_in: u64,
    /// Independent replicas behind each estimate; 1 for single runs.
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub distance_or_lag: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub meta: RunMeta,
    /// Fraction of `-1` sites after each step, starting with the initial
    /// state.
    pub density_series: Vec<f64>,
    pub density: Option<Estimate>,
    pub covariances: Vec<CorrelationPoint>,
    pub autocovariances: Vec<CorrelationPoint>,
}

impl RunSummary {
    fn empty(meta: RunMeta) -> Self {
        RunSummary { meta, density_series: vec![], density: None, covariances: vec![], autocovariances: vec![] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `exp(slope)`, at most 1.
    pub rate: f64,
    pub intercept: f64,
    /// Residual sum of squares in log space.
    pub residual: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub valid: bool,
}

/// Least-squares line through `(x, ln y)` for positive `y`.
pub fn fit_log_linear(xs: &[f64], ys: &[f64]) -> FitResult {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x, y.ln())).collect();
    let n = pts.len();
    if n < 2 {
        return FitResult { rate: f64::NAN, intercept: f64::NAN, residual: f64::NAN, r_squared: f64::NAN, n_points: n, valid: false };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - residual / syy } else { 1.0 };
    let raw = slope.exp();
    FitResult {
        rate: raw.min(1.0),
        intercept,
        residual,
        r_squared,
        n_points: n,
        valid: n >= 3 && raw <= 1.0,
    }
}

/// Fits `|estimate|` against distance or lag, skipping points that sit
/// within the noise floor.
pub fn fit_decay(points: &[CorrelationPoint]) -> FitResult {
    let usable: Vec<&CorrelationPoint> = points
        .iter()
        .filter(|p| p.estimate.abs() > NOISE_FLOOR_SE * p.stderr && p.estimate != 0.0)
        .collect();
    let xs: Vec<f64> = usable.iter().map(|p| p.distance_or_lag as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.estimate.abs()).collect();
    let mut fit = fit_log_linear(&xs, &ys);
    fit.n_points = usable.len();
    fit.valid &= usable.len() >= 3;
    fit
}

fn run_steps(engine: &Engine, mut state: LatticeState, noise: &NoiseModel, key: &RngKey, from: u64, steps: u64) -> Result<LatticeState> {
    for t in from..from + steps {
        state = engine.step_noisy(&state, noise, key, t)?;
    }
    Ok(state)
}

/// One trajectory from all-plus; the density estimate covers steps
/// `burn_in..=steps`.
pub fn minus_density_run(
    rule: &RuleSpec,
    noise: &NoiseModel,
    dims: &[usize],
    steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<RunSummary> {
    minus_density_run_with(rule, noise, dims, steps, burn_in, seed, |_, _| {})
}

/// [`minus_density_run`] that also hands every state to `on_step`,
/// starting with the initial one.
pub fn minus_density_run_with<F>(
    rule: &RuleSpec,
    noise: &NoiseModel,
    dims: &[usize],
    steps: u64,
    burn_in: u64,
    seed: u64,
    mut on_step: F,
) -> Result<RunSummary>
where
    F: FnMut(u64, &LatticeState),
{
    let engine = Engine::new(rule, dims)?;
    let key = RngKey::new(seed);
    let mut state = LatticeState::all_plus(dims)?;
    let mut series = Vec::with_capacity(steps as usize + 1);
    series.push(state.minus_density());
    on_step(0, &state);
    for t in 0..steps {
        state = engine.step_noisy(&state, noise, &key, t)?;
        series.push(state.minus_density());
        on_step(t + 1, &state);
    }
    let start = burn_in.min(steps) as usize;
    let density = batch_mean(&series[start..]);
    let meta = RunMeta { noise: noise.clone(), dims: dims.to_vec(), seed, steps, burn_in, replicas: 1 };
    Ok(RunSummary { density_series: series, density: Some(density), ..RunSummary::empty(meta) })
}

/// Minus density averaged over independent replicas, each observed once
/// after `burn_in` steps.
pub fn replica_minus_density(
    rule: &RuleSpec,
    noise: &NoiseModel,
    dims: &[usize],
    burn_in: u64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    let engine = Engine::new(rule, dims)?;
    let root = RngKey::new(seed);
    let samples = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let s = run_steps(&engine, LatticeState::all_plus(dims)?, noise, &root.derive(r as u64), 0, burn_in)?;
            Ok(s.minus_density())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(sample_mean(&samples))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseFamily {
    Symmetric,
    /// `eps_plus = ε`, `eps_minus = minus_ratio · ε`.
    Biased { minus_ratio: u32 },
}

impl NoiseFamily {
    pub fn at(&self, eps: f64) -> Result<NoiseModel> {
        match self {
            NoiseFamily::Symmetric => NoiseModel::symmetric(eps),
            NoiseFamily::Biased { minus_ratio } => NoiseModel::biased(eps, eps * *minus_ratio as f64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    pub density: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Stationary density per noise level, all runs sharing one seed.
pub fn density_vs_epsilon_scan(
    rule: &RuleSpec,
    family: NoiseFamily,
    grid: &[f64],
    dims: &[usize],
    steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("noise grid must be sorted ascending".into()));
    }
    grid.iter()
        .map(|&eps| {
            let run = minus_density_run(rule, &family.at(eps)?, dims, steps, burn_in, seed)?;
            let d = run.density.expect("single runs always report a density");
            Ok(ScanRow { eps, density: d.value, stderr: d.stderr, n: d.n })
        })
        .collect()
}

/// All displacements with the given Manhattan length.
fn shell(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    if dim == 1 {
        return if radius == 0 { vec![vec![0]] } else { vec![vec![radius], vec![-radius]] };
    }
    let mut out = Vec::new();
    for first in -radius..=radius {
        for mut rest in shell(dim - 1, radius - first.abs()) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn spin(state: &LatticeState, site: usize) -> f64 {
    if state.get(site) {
        1.0
    } else {
        -1.0
    }
}

/// Covariance of means `E[a] - E[b] E[c]` from paired replica samples,
/// with delta-method standard error.
fn product_covariance(a: &[f64], b: &[f64], c: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (ma, mb, mc) = (mean(a), mean(b), mean(c));
    let cov = |u: &[f64], mu: f64, v: &[f64], mv: f64| {
        if a.len() < 2 {
            0.0
        } else {
            u.iter().zip(v).map(|(x, y)| (x - mu) * (y - mv)).sum::<f64>() / (n - 1.0)
        }
    };
    let grad = [1.0, -mc, -mb];
    let series = [(a, ma), (b, mb), (c, mc)];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * grad[j] * cov(series[i].0, series[i].1, series[j].0, series[j].1);
        }
    }
    (ma - mb * mc, (var.max(0.0) / n).sqrt())
}

/// Stationary `cov(ω_0, ω_x)` at each Manhattan distance, averaged over
/// sites and over all displacements of that length.
#[allow(clippy::too_many_arguments)]
pub fn spatial_correlation(
    rule: &RuleSpec,
    noise: &NoiseModel,
    dims: &[usize],
    distances: &[usize],
    samples: usize,
    burn_in: u64,
    seed: u64,
) -> Result<(RunSummary, FitResult)> {
    let min_side = dims.iter().copied().min().unwrap_or(0);
    if let Some(&d) = distances.iter().find(|&&d| 2 * d >= min_side) {
        return Err(Error::Domain(format!("distance {d} is not below half the side {min_side}")));
    }
    if samples == 0 {
        return Err(Error::Validation("need at least one replica".into()));
    }
    let engine = Engine::new(rule, dims)?;
    let root = RngKey::new(seed);
    let shells: Vec<Vec<Vec<i64>>> = distances.iter().map(|&d| shell(dims.len(), d as i64)).collect();
    // Per replica: spatial mean spin, then per distance the mean product.
    let rows = (0..samples)
        .into_par_iter()
        .map(|r| {
            let s = run_steps(&engine, LatticeState::all_plus(dims)?, noise, &root.derive(r as u64), 0, burn_in)?;
            let n = s.len();
            let mut row = vec![s.magnetization()];
            for sh in &shells {
                let mut total = 0.0;
                for x in 0..n {
                    let c = s.coords(x);
                    let sx = spin(&s, x);
                    for e in sh {
                        let p: Vec<i64> = c.iter().zip(e).map(|(&c, &o)| c as i64 + o).collect();
                        total += sx * spin(&s, s.site_index(&p));
                    }
                }
                row.push(total / (n * sh.len()) as f64);
            }
            Ok(row)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mag: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let covariances = distances
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let prod: Vec<f64> = rows.iter().map(|r| r[k + 1]).collect();
            let (estimate, stderr) = product_covariance(&prod, &mag, &mag);
            CorrelationPoint { distance_or_lag: d, estimate, stderr, n: samples }
        })
        .collect::<Vec<_>>();
    let fit = fit_decay(&covariances);
    let meta = RunMeta { noise: noise.clone(), dims: dims.to_vec(), seed, steps: burn_in, burn_in, replicas: samples };
    Ok((RunSummary { covariances, ..RunSummary::empty(meta) }, fit))
}

/// Stationary `cov(ω_x(t), ω_x(t + k))` at each lag, averaged over sites.
#[allow(clippy::too_many_arguments)]
pub fn temporal_autocorrelation(
    rule: &RuleSpec,
    noise: &NoiseModel,
    dims: &[usize],
    lags: &[usize],
    samples: usize,
    burn_in: u64,
    seed: u64,
) -> Result<(RunSummary, FitResult)> {
    if samples == 0 {
        return Err(Error::Validation("need at least one replica".into()));
    }
    let engine = Engine::new(rule, dims)?;
    let root = RngKey::new(seed);
    let max_lag = lags.iter().copied().max().unwrap_or(0) as u64;
    // Per replica: initial mean spin, then per lag (mean product, mean spin).
    let rows = (0..samples)
        .into_par_iter()
        .map(|r| {
            let key = root.derive(r as u64);
            let start = run_steps(&engine, LatticeState::all_plus(dims)?, noise, &key, 0, burn_in)?;
            let mut later = vec![start.clone()];
            for t in 0..max_lag {
                let next = engine.step_noisy(later.last().unwrap(), noise, &key, burn_in + t)?;
                later.push(next);
            }
            let n = start.len();
            let mut row = vec![start.magnetization()];
            for &k in lags {
                let s = &later[k];
                let prod = (0..n).map(|x| spin(&start, x) * spin(s, x)).sum::<f64>() / n as f64;
                row.push(prod);
                row.push(s.magnetization());
            }
            Ok(row)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let m0: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let autocovariances = lags
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let prod: Vec<f64> = rows.iter().map(|r| r[1 + 2 * i]).collect();
            let mk: Vec<f64> = rows.iter().map(|r| r[2 + 2 * i]).collect();
            let (estimate, stderr) = product_covariance(&prod, &m0, &mk);
            CorrelationPoint { distance_or_lag: k, estimate, stderr, n: samples }
        })
        .collect::<Vec<_>>();
    let fit = fit_decay(&autocovariances);
    let meta = RunMeta {
        noise: noise.clone(),
        dims: dims.to_vec(),
        seed,
        steps: burn_in + max_lag,
        burn_in,
        replicas: samples,
    };
    Ok((RunSummary { autocovariances, ..RunSummary::empty(meta) }, fit))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseClass {
    Merged,
    Separated,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub step: u64,
    pub mag_plus: f64,
    pub mag_minus: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub meta: RunMeta,
    /// Why the comparison does not apply, if it does not.
    pub inapplicable: Option<String>,
    pub series: Vec<DivergenceRow>,
    pub gap: Option<Estimate>,
    pub class: Option<PhaseClass>,
    /// First step at which the two chains agree everywhere.
    pub coalesced_at: Option<u64>,
}

fn noise_is_flip_symmetric(noise: &NoiseModel) -> bool {
    match &noise.kind {
        NoiseKind::Symmetric { .. } => true,
        NoiseKind::Biased { eps_plus, eps_minus } => eps_plus == eps_minus,
        NoiseKind::Table { p_plus } => {
            let mask = p_plus.len() - 1;
            (0..p_plus.len()).all(|c| (p_plus[c] - (1.0 - p_plus[!c & mask])).abs() < 1e-15)
        }
    }
}

/// `MERGED` within 3 standard errors of zero, `SEPARATED` beyond 10.
pub fn classify_gap(gap: &Estimate) -> PhaseClass {
    if gap.value.abs() <= 3.0 * gap.stderr {
        PhaseClass::Merged
    } else if gap.value > 10.0 * gap.stderr {
        PhaseClass::Separated
    } else {
        PhaseClass::Undecided
    }
}

/// Runs chains from all-plus and all-minus on shared noise and compares
/// their magnetizations after `burn_in`.
pub fn two_phase_divergence(
    rule: &RuleSpec,
    noise: &NoiseModel,
    dims: &[usize],
    steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<DivergenceReport> {
    let meta = RunMeta { noise: noise.clone(), dims: dims.to_vec(), seed, steps, burn_in, replicas: 1 };
    let reason = if !rule.is_flip_symmetric() {
        Some("rule is not symmetric under the global spin flip")
    } else if !noise_is_flip_symmetric(noise) {
        Some("noise is not symmetric under the global spin flip")
    } else {
        None
    };
    if let Some(reason) = reason {
        return Ok(DivergenceReport {
            meta,
            inapplicable: Some(reason.into()),
            series: vec![],
            gap: None,
            class: None,
            coalesced_at: None,
        });
    }
    let engine = Engine::new(rule, dims)?;
    let key = RngKey::new(seed);
    let mut plus = LatticeState::all_plus(dims)?;
    let mut minus = LatticeState::all_minus(dims)?;
    let row = |step, p: &LatticeState, m: &LatticeState| {
        let (a, b) = (p.magnetization(), m.magnetization());
        DivergenceRow { step, mag_plus: a, mag_minus: b, gap: a - b }
    };
    let mut series = vec![row(0, &plus, &minus)];
    let mut coalesced_at = None;
    for t in 0..steps {
        if coalesced_at.is_some() {
            // Shared noise keeps coalesced chains together.
            plus = engine.step_noisy(&plus, noise, &key, t)?;
            minus = plus.clone();
        } else {
            plus = engine.step_noisy(&plus, noise, &key, t)?;
            minus = engine.step_noisy(&minus, noise, &key, t)?;
            if plus == minus {
                coalesced_at = Some(t + 1);
            }
        }
        series.push(row(t + 1, &plus, &minus));
    }
    let start = burn_in.min(steps) as usize;
    let gaps: Vec<f64> = series[start..].iter().map(|r| r.gap).collect();
    let gap = batch_mean(&gaps);
    Ok(DivergenceReport {
        meta,
        inapplicable: None,
        series,
        gap: Some(gap),
        class: Some(classify_gap(&gap)),
        coalesced_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::builtin;

    #[test]
    fn zero_noise_keeps_all_plus() {
        let rule = builtin("nec").unwrap();
        let run = minus_density_run(&rule, &NoiseModel::symmetric(0.0).unwrap(), &[16, 64], 20, 5, 1).unwrap();
        assert!(run.density_series.iter().all(|&d| d == 0.0));
        assert_eq!(run.density.unwrap().value, 0.0);
    }

    #[test]
    fn steps_zero_reports_initial_state() {
        let rule = builtin("stavskaya").unwrap();
        let run = minus_density_run(&rule, &NoiseModel::symmetric(0.2).unwrap(), &[64], 0, 10, 1).unwrap();
        assert_eq!(run.density_series, vec![0.0]);
        assert_eq!(run.density.unwrap().n, 1);
    }

    #[test]
    fn half_noise_density_is_half() {
        let rule = builtin("stavskaya").unwrap();
        let run = minus_density_run(&rule, &NoiseModel::symmetric(0.5).unwrap(), &[1024], 400, 10, 3).unwrap();
        let d = run.density.unwrap();
        assert!((d.value - 0.5).abs() < 4.0 * d.stderr, "{d:?}");
    }

    #[test]
    fn runs_are_reproducible() {
        let rule = builtin("nec").unwrap();
        let noise = NoiseModel::symmetric(0.1).unwrap();
        let a = minus_density_run(&rule, &noise, &[8, 64], 30, 0, 9).unwrap();
        let b = minus_density_run(&rule, &noise, &[8, 64], 30, 0, 9).unwrap();
        assert_eq!(a, b);
        let c = minus_density_run(&rule, &noise, &[8, 64], 30, 0, 10).unwrap();
        assert_ne!(a.density_series, c.density_series);
    }

    #[test]
    fn shells() {
        assert_eq!(shell(1, 2), vec![vec![-2], vec![2]].into_iter().rev().collect::<Vec<_>>());
        assert_eq!(shell(2, 1).len(), 4);
        assert_eq!(shell(2, 2).len(), 8);
        assert_eq!(shell(3, 0), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn fit_recovers_rate() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * 0.6f64.powf(*x)).collect();
        let fit = fit_log_linear(&xs, &ys);
        assert!(fit.valid);
        assert!((fit.rate - 0.6).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.r_squared > 0.999_999);
    }

    #[test]
    fn fit_never_exceeds_one() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 2.0, 4.0, 8.0];
        let fit = fit_log_linear(&xs, &ys);
        assert!(!fit.valid);
        assert_eq!(fit.rate, 1.0);
    }

    #[test]
    fn fit_skips_noise_floor() {
        let pts: Vec<CorrelationPoint> = (0..6)
            .map(|d| CorrelationPoint {
                distance_or_lag: d,
                estimate: 0.5f64.powi(d as i32),
                stderr: 0.05,
                n: 100,
            })
            .collect();
        let fit = fit_decay(&pts);
        // 1, 0.5, 0.25, 0.125 clear the floor of 0.1; 0.0625 does not.
        assert_eq!(fit.n_points, 4);
        assert!((fit.rate - 0.5).abs() < 1e-12);
        let flat = vec![CorrelationPoint { distance_or_lag: 1, estimate: 0.0, stderr: 0.0, n: 1 }; 3];
        assert!(!fit_decay(&flat).valid);
    }

    #[test]
    fn zero_noise_correlations_vanish() {
        let rule = builtin("stavskaya").unwrap();
        let (summary, fit) =
            spatial_correlation(&rule, &NoiseModel::symmetric(0.0).unwrap(), &[64], &[1, 2, 3], 20, 10, 1).unwrap();
        assert!(summary.covariances.iter().all(|p| p.estimate == 0.0 && p.stderr == 0.0));
        assert!(!fit.valid);
    }

    #[test]
    fn half_noise_correlations_within_error() {
        let rule = builtin("nec").unwrap();
        let noise = NoiseModel::symmetric(0.5).unwrap();
        let (summary, _) = spatial_correlation(&rule, &noise, &[16, 16], &[1, 2, 3], 400, 3, 2).unwrap();
        for p in &summary.covariances {
            assert!(p.estimate.abs() < 4.0 * p.stderr, "{p:?}");
        }
        let (summary, _) = temporal_autocorrelation(&rule, &noise, &[16, 16], &[0, 1, 2], 400, 3, 2).unwrap();
        let lag0 = &summary.autocovariances[0];
        assert!(lag0.estimate > 0.9);
        for p in &summary.autocovariances[1..] {
            assert!(p.estimate.abs() < 4.0 * p.stderr, "{p:?}");
        }
    }

    #[test]
    fn distance_precondition() {
        let rule = builtin("stavskaya").unwrap();
        let noise = NoiseModel::symmetric(0.1).unwrap();
        assert!(matches!(spatial_correlation(&rule, &noise, &[8], &[4], 10, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn scan_examples() {
        let rule = builtin("stavskaya").unwrap();
        let rows = density_vs_epsilon_scan(&rule, NoiseFamily::Symmetric, &[0.0], &[128], 50, 10, 1).unwrap();
        assert_eq!(rows[0].density, 0.0);
        assert!(density_vs_epsilon_scan(&rule, NoiseFamily::Symmetric, &[0.2, 0.1], &[128], 5, 1, 1).is_err());
    }

    #[test]
    fn divergence_classes() {
        let nec = builtin("nec").unwrap();
        let report =
            two_phase_divergence(&nec, &NoiseModel::symmetric(0.5).unwrap(), &[32, 64], 10, 2, 5).unwrap();
        assert_eq!(report.class, Some(PhaseClass::Merged));
        assert_eq!(report.coalesced_at, Some(1));
        let report =
            two_phase_divergence(&nec, &NoiseModel::symmetric(0.0).unwrap(), &[32, 64], 10, 2, 5).unwrap();
        assert_eq!(report.class, Some(PhaseClass::Separated));
        let stav = builtin("stavskaya").unwrap();
        let report =
            two_phase_divergence(&stav, &NoiseModel::symmetric(0.1).unwrap(), &[64], 10, 2, 5).unwrap();
        assert!(report.inapplicable.is_some() && report.class.is_none());
        assert_eq!(classify_gap(&Estimate { value: 0.5, stderr: 0.1, n: 9 }), PhaseClass::Undecided);
    }
}
