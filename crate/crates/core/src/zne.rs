//! Zero-noise extrapolation: polynomial fits of energy against noise scale λ,
//! degree selection on a held-out split, barrier estimates and stratified
//! bootstrap intervals.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Replicate samples grouped by noise scale, kept sorted by λ.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZneDataset {
    points: Vec<(f64, Vec<f64>)>,
}

impl ZneDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, lambda: f64, value: f64) -> Result<()> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(Error::Argument(format!("noise scale λ = {lambda} must be ≥ 1")));
        }
        if !value.is_finite() {
            return Err(Error::Data(format!("non-finite sample at λ = {lambda}")));
        }
        match self.points.binary_search_by(|p| p.0.total_cmp(&lambda)) {
            Ok(i) => self.points[i].1.push(value),
            Err(i) => self.points.insert(i, (lambda, vec![value])),
        }
        Ok(())
    }

    pub fn from_samples(samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut d = Self::new();
        for (l, v) in samples {
            d.push(l, v)?;
        }
        Ok(d)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn replicates(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.points.iter().map(|(l, v)| (*l, v.as_slice()))
    }

    pub fn counts(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.1.len()).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|(_, v)| mean(v)).collect()
    }

    pub fn n_samples(&self) -> usize {
        self.points.iter().map(|p| p.1.len()).sum()
    }

    /// λ = 1 present and at least two distinct scales.
    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Data(format!("need at least 2 distinct λ values, have {}", self.points.len())));
        }
        if self.points[0].0 != 1.0 {
            return Err(Error::Data("dataset has no λ = 1 samples".into()));
        }
        Ok(())
    }

    /// Per-replicate differences `other − self`, paired by position within each λ.
    pub fn paired_difference(&self, other: &ZneDataset) -> Result<ZneDataset> {
        if self.lambdas() != other.lambdas() {
            return Err(Error::Alignment(format!(
                "λ grids differ: {:?} vs {:?}",
                self.lambdas(),
                other.lambdas()
            )));
        }
        let mut points = Vec::with_capacity(self.points.len());
        for ((l, a), (_, b)) in self.points.iter().zip(&other.points) {
            if a.len() != b.len() {
                return Err(Error::Alignment(format!(
                    "λ = {l}: {} replicates vs {}",
                    a.len(),
                    b.len()
                )));
            }
            points.push((*l, a.iter().zip(b).map(|(x, y)| y - x).collect()));
        }
        Ok(ZneDataset { points })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Weights `n_λ / s²_λ` from the replicate scatter; covariance `(XᵀWX)⁻¹`.
    Wls,
    /// Weights `n_λ / s²` with one variance pooled over all scales.
    Pooled,
    /// Unweighted on the means; covariance scaled by the residual variance.
    Ols,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub degree: usize,
    /// Ascending powers of λ.
    pub coefficients: Vec<f64>,
    pub intercept_se: f64,
    pub weighting: Weighting,
}

impl PolyFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * lambda + c)
    }
}

fn vandermonde(x: &[f64], degree: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32))
}

/// Weighted least squares of `y` on powers of `x`; `None` weights means OLS
/// with residual-variance scaling.
pub fn polyfit(x: &[f64], y: &[f64], weights: Option<&[f64]>, degree: usize) -> Result<PolyFit> {
    let m = x.len();
    let p = degree + 1;
    if m < p {
        return Err(Error::Data(format!("degree {degree} needs {p} points, have {m}")));
    }
    let xm = vandermonde(x, degree);
    let w = DVector::from_iterator(m, (0..m).map(|i| weights.map_or(1.0, |w| w[i])));
    let xtw = DMatrix::from_fn(p, m, |j, i| xm[(i, j)] * w[i]);
    let normal = &xtw * &xm;
    let inv = normal
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Data(format!("singular normal equations for degree {degree}")))?;
    let beta = &inv * (&xtw * DVector::from_column_slice(y));
    let cov00 = match weights {
        Some(_) => inv[(0, 0)],
        None => {
            let resid = DVector::from_column_slice(y) - &xm * &beta;
            let dof = m - p;
            let s2 = if dof > 0 { resid.norm_squared() / dof as f64 } else { 0.0 };
            s2 * inv[(0, 0)]
        }
    };
    Ok(PolyFit {
        degree,
        coefficients: beta.iter().copied().collect(),
        intercept_se: cov00.max(0.0).sqrt(),
        weighting: if weights.is_some() { Weighting::Wls } else { Weighting::Ols },
    })
}

/// Fits the per-λ means. Weights come from each λ's replicate scatter when
/// all are nonzero, from the pooled scatter when only some are, and the fit
/// falls back to unweighted least squares when there is no scatter at all.
pub fn fit_dataset(data: &ZneDataset, degree: usize) -> Result<PolyFit> {
    let x = data.lambdas();
    let y = data.means();
    let per_lambda: Option<Vec<f64>> = data
        .replicates()
        .map(|(_, v)| {
            let s2 = sample_variance(v);
            (v.len() >= 2 && s2 > 0.0).then(|| v.len() as f64 / s2)
        })
        .collect();
    if let Some(w) = per_lambda {
        return polyfit(&x, &y, Some(&w), degree);
    }
    let (ss, dof) = data.replicates().fold((0.0, 0usize), |(ss, dof), (_, v)| {
        (ss + sample_variance(v) * v.len().saturating_sub(1) as f64, dof + v.len().saturating_sub(1))
    });
    if dof > 0 && ss > 0.0 {
        let pooled = ss / dof as f64;
        let w: Vec<f64> = data.counts().iter().map(|&n| n as f64 / pooled).collect();
        let mut fit = polyfit(&x, &y, Some(&w), degree)?;
        fit.weighting = Weighting::Pooled;
        return Ok(fit);
    }
    polyfit(&x, &y, None, degree)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub degrees: Vec<usize>,
    /// Share of replicates per λ held out for degree selection.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            degrees: vec![1, 2],
            holdout_fraction: 0.25,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub intercept_se: f64,
    pub weighting: Weighting,
    /// `(degree, RMSE)`; `None` for skipped candidates.
    pub holdout_rmse: Vec<(usize, Option<f64>)>,
    pub notes: Vec<String>,
}

/// Splits each λ's replicates into (train, test) with a seeded shuffle.
fn holdout_split(data: &ZneDataset, fraction: f64, seed: u64) -> (ZneDataset, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = ZneDataset::new();
    let mut test = Vec::new();
    for (l, v) in data.replicates() {
        let n_test = if v.len() >= 2 {
            ((fraction * v.len() as f64).floor() as usize).clamp(1, v.len() - 1)
        } else {
            0
        };
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.shuffle(&mut rng);
        test.push(idx[..n_test].iter().map(|&i| v[i]).collect());
        train.points.push((l, idx[n_test..].iter().map(|&i| v[i]).collect()));
    }
    (train, test)
}

fn rmse(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (s, n) = pairs.fold((0.0, 0usize), |(s, n), (a, b)| (s + (a - b).powi(2), n + 1));
    (s / n as f64).sqrt()
}

/// Selection score of one degree: RMSE of held-out per-λ means against the
/// training fit, or leave-one-λ-out when no replicates can be held out.
fn holdout_score(data: &ZneDataset, degree: usize, opts: &FitOptions) -> std::result::Result<f64, String> {
    let m = data.points.len();
    let p = degree + 1;
    if p > m {
        return Err(format!("degree {degree} skipped: {p} parameters but {m} distinct λ"));
    }
    let (train, test) = holdout_split(data, opts.holdout_fraction, opts.seed);
    if test.iter().all(|t| !t.is_empty()) {
        let fit = fit_dataset(&train, degree).map_err(|e| format!("degree {degree} skipped: {e}"))?;
        return Ok(rmse(train.lambdas().into_iter().zip(&test).map(|(l, t)| (fit.eval(l), mean(t)))));
    }
    if m - 1 < p {
        return Err(format!("degree {degree} skipped: too few λ values to cross-validate"));
    }
    let lambdas = data.lambdas();
    let means = data.means();
    let mut errs = Vec::with_capacity(m);
    for k in 0..m {
        let x: Vec<f64> = (0..m).filter(|&i| i != k).map(|i| lambdas[i]).collect();
        let y: Vec<f64> = (0..m).filter(|&i| i != k).map(|i| means[i]).collect();
        let fit = polyfit(&x, &y, None, degree).map_err(|e| format!("degree {degree} skipped: {e}"))?;
        errs.push((fit.eval(lambdas[k]), means[k]));
    }
    Ok(rmse(errs.into_iter()))
}

/// Selects the candidate degree with the lowest holdout RMSE (ties go to the
/// lower degree), then fits it on all replicates and extrapolates to λ = 0.
pub fn fit_extrapolate(data: &ZneDataset, opts: &FitOptions) -> Result<FitReport> {
    data.validate()?;
    if opts.degrees.is_empty() {
        return Err(Error::Argument("no candidate polynomial degrees".into()));
    }
    if !(0.0..1.0).contains(&opts.holdout_fraction) {
        return Err(Error::Argument(format!("holdout fraction {} not in [0, 1)", opts.holdout_fraction)));
    }
    let mut degrees = opts.degrees.clone();
    degrees.sort_unstable();
    degrees.dedup();
    let mut notes = Vec::new();
    let mut scores = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for &d in &degrees {
        match holdout_score(data, d, opts) {
            Ok(s) => {
                scores.push((d, Some(s)));
                if best.is_none_or(|(_, b)| s < b * (1.0 - 1e-9) - 1e-15) {
                    best = Some((d, s));
                }
            }
            Err(note) => {
                scores.push((d, None));
                notes.push(note);
            }
        }
    }
    let (degree, _) = best.ok_or_else(|| Error::Data(format!("no candidate degree could be fitted: {}", notes.join("; "))))?;
    let fit = fit_dataset(data, degree)?;
    Ok(FitReport {
        degree,
        intercept: fit.intercept(),
        intercept_se: fit.intercept_se,
        coefficients: fit.coefficients,
        weighting: fit.weighting,
        holdout_rmse: scores,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierEstimate {
    pub delta: f64,
    pub sigma: f64,
    pub fits: Vec<FitReport>,
}

/// `ΔE = intercept(middle) − intercept(left)`, standard errors in quadrature.
pub fn barrier_fit_first(left: &ZneDataset, middle: &ZneDataset, opts: &FitOptions) -> Result<BarrierEstimate> {
    let l = fit_extrapolate(left, opts)?;
    let m = fit_extrapolate(middle, opts)?;
    Ok(BarrierEstimate {
        delta: m.intercept - l.intercept,
        sigma: l.intercept_se.hypot(m.intercept_se),
        fits: vec![l, m],
    })
}

/// Extrapolates the per-replicate differences `middle − left` directly.
pub fn barrier_diff_first(left: &ZneDataset, middle: &ZneDataset, opts: &FitOptions) -> Result<BarrierEstimate> {
    let d = left.paired_difference(middle)?;
    let f = fit_extrapolate(&d, opts)?;
    Ok(BarrierEstimate {
        delta: f.intercept,
        sigma: f.intercept_se,
        fits: vec![f],
    })
}

/// Resamples every λ's replicates with replacement, keeping the counts.
pub fn resample<R: Rng>(data: &ZneDataset, rng: &mut R) -> ZneDataset {
    ZneDataset {
        points: data
            .points
            .iter()
            .map(|(l, v)| (*l, (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect()))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub median: f64,
    pub p15: f64,
    pub p85: f64,
    pub n_boot: usize,
    pub note: Option<String>,
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(mut values: Vec<f64>, degenerate: bool) -> BootstrapInterval {
    values.sort_by(f64::total_cmp);
    let n_boot = values.len();
    if degenerate {
        let v = values[0];
        return BootstrapInterval {
            median: v,
            p15: v,
            p85: v,
            n_boot,
            note: Some("zero-variance data; interval collapsed".into()),
        };
    }
    BootstrapInterval {
        median: percentile(&values, 0.5),
        p15: percentile(&values, 0.15),
        p85: percentile(&values, 0.85),
        n_boot,
        note: None,
    }
}

fn is_degenerate(data: &ZneDataset) -> bool {
    data.replicates().all(|(_, v)| v.iter().all(|x| *x == v[0]))
}

fn replicate_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn check_boot(n_boot: usize) -> Result<()> {
    if n_boot < 100 {
        return Err(Error::Argument(format!("n_boot = {n_boot} must be at least 100")));
    }
    Ok(())
}

/// Median and 15th/85th percentiles of the intercept over stratified
/// bootstrap replicates, refitting `degree` each time.
pub fn bootstrap_interval(data: &ZneDataset, degree: usize, n_boot: usize, seed: u64) -> Result<BootstrapInterval> {
    check_boot(n_boot)?;
    data.validate()?;
    if is_degenerate(data) {
        let v = fit_dataset(data, degree)?.intercept();
        return Ok(summarize(vec![v; n_boot], true));
    }
    let values: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|i| fit_dataset(&resample(data, &mut replicate_rng(seed, i)), degree).map(|f| f.intercept()))
        .collect::<Result<_>>()?;
    Ok(summarize(values, false))
}

/// Fit-first bootstrap: intercepts of independently resampled `middle` and
/// `left`, differenced per replicate.
pub fn bootstrap_fit_first(
    left: &ZneDataset,
    middle: &ZneDataset,
    degrees: (usize, usize),
    n_boot: usize,
    seed: u64,
) -> Result<BootstrapInterval> {
    check_boot(n_boot)?;
    left.validate()?;
    middle.validate()?;
    let degenerate = is_degenerate(left) && is_degenerate(middle);
    let values: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i);
            let l = fit_dataset(&resample(left, &mut rng), degrees.0)?.intercept();
            let m = fit_dataset(&resample(middle, &mut rng), degrees.1)?.intercept();
            Ok(m - l)
        })
        .collect::<Result<_>>()?;
    Ok(summarize(values, degenerate))
}

/// Bootstrap intervals in mHa, one row per extrapolation method.
pub fn bootstrap_table(rows: &[(&str, &BootstrapInterval)], decimals: usize) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(20);
    let mut s = format!(
        "{:<width$} {:>8} {:>15} {:>15}\n",
        "Extrapolation method", "Median", "15th percentile", "85th percentile"
    );
    for (name, b) in rows {
        s.push_str(&format!(
            "{:<width$} {:>8.decimals$} {:>15.decimals$} {:>15.decimals$}\n",
            name,
            b.median * 1e3,
            b.p15 * 1e3,
            b.p85 * 1e3,
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    const LAMBDAS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

    fn synthetic(coeffs: &[f64], sigma: f64, reps: usize, seed: u64) -> ZneDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut d = ZneDataset::new();
        for l in LAMBDAS {
            let mean: f64 = coeffs.iter().rev().fold(0.0, |a, c| a * l + c);
            for _ in 0..reps {
                d.push(l, mean + if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 }).unwrap();
            }
        }
        d
    }

    #[test]
    fn exact_linear_data_selects_degree_one() {
        let d = synthetic(&[-1.2, 0.05], 0.0, 4, 0);
        let r = fit_extrapolate(&d, &FitOptions::default()).unwrap();
        assert_eq!(r.degree, 1);
        assert!((r.intercept + 1.2).abs() < 1e-9);
    }

    #[test]
    fn single_replicates_use_cross_validation() {
        let d = ZneDataset::from_samples(LAMBDAS.iter().map(|&l| (l, 0.3 + 0.1 * l - 0.02 * l * l))).unwrap();
        let r = fit_extrapolate(&d, &FitOptions::default()).unwrap();
        assert_eq!(r.degree, 2);
        assert!((r.intercept - 0.3).abs() < 1e-9);
        assert_eq!(r.weighting, Weighting::Ols);
    }

    #[test]
    fn too_many_parameters_are_skipped() {
        let d = ZneDataset::from_samples([(1.0, 0.5), (1.0, 0.6), (2.0, 0.7), (2.0, 0.8)]).unwrap();
        let opts = FitOptions {
            degrees: vec![1, 2],
            ..FitOptions::default()
        };
        let r = fit_extrapolate(&d, &opts).unwrap();
        assert_eq!(r.degree, 1);
        assert_eq!(r.holdout_rmse[1], (2, None));
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn validation_and_alignment_errors() {
        let d = ZneDataset::from_samples([(2.0, 0.5), (3.0, 0.6)]).unwrap();
        assert!(matches!(d.validate(), Err(Error::Data(_))));
        assert!(ZneDataset::new().push(0.5, 1.0).is_err());
        let a = ZneDataset::from_samples([(1.0, 0.5), (2.0, 0.6)]).unwrap();
        let b = ZneDataset::from_samples([(1.0, 0.5), (3.0, 0.6)]).unwrap();
        assert!(matches!(barrier_diff_first(&a, &b, &FitOptions::default()), Err(Error::Alignment(_))));
    }

    #[test]
    fn identical_datasets_give_zero_barrier() {
        let d = synthetic(&[-0.5, 0.02, 0.003], 1e-3, 20, 1);
        let ff = barrier_fit_first(&d, &d, &FitOptions::default()).unwrap();
        assert_eq!(ff.delta, 0.0);
        assert!((ff.sigma - ff.fits[0].intercept_se * 2f64.sqrt()).abs() < 1e-15);
        let df = barrier_diff_first(&d, &d, &FitOptions::default()).unwrap();
        assert_eq!(df.delta, 0.0);
    }

    #[test]
    fn fit_first_recovers_planted_intercepts() {
        let left = synthetic(&[0.010, 0.004], 2e-3, 100, 2);
        let middle = synthetic(&[0.034, 0.004], 2e-3, 100, 3);
        let b = barrier_fit_first(&left, &middle, &FitOptions::default()).unwrap();
        assert!((b.delta - 0.024).abs() < 3.0 * b.sigma, "{} ± {}", b.delta, b.sigma);
        let (l, m) = (&b.fits[0], &b.fits[1]);
        assert!((b.sigma - (l.intercept_se.powi(2) + m.intercept_se.powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_is_deterministic_and_collapses_on_constant_data() {
        let d = synthetic(&[0.1, 0.01], 1e-3, 10, 4);
        let a = bootstrap_interval(&d, 1, 200, 9).unwrap();
        assert_eq!(a, bootstrap_interval(&d, 1, 200, 9).unwrap());
        assert!(a.p15 <= a.median && a.median <= a.p85);
        let flat = synthetic(&[0.1, 0.01], 0.0, 5, 0);
        let c = bootstrap_interval(&flat, 1, 100, 1).unwrap();
        assert!((c.median - 0.1).abs() < 1e-12 && c.p15 == c.median && c.p85 == c.median);
        assert!(c.note.is_some());
        assert!(bootstrap_interval(&d, 1, 99, 1).is_err());
    }

    #[test]
    fn zero_scatter_at_one_scale_pools_variance() {
        let mut d = synthetic(&[0.2, 0.01], 1e-3, 6, 6);
        let exact = ZneDataset::from_samples((0..6).map(|_| (1.0, 0.21))).unwrap();
        d.points[0] = exact.points[0].clone();
        let f = fit_dataset(&d, 1).unwrap();
        assert_eq!(f.weighting, Weighting::Pooled);
        assert!(f.intercept_se > 0.0 && f.intercept_se < 1e-2);
    }

    #[test]
    fn resampling_keeps_counts() {
        let d = synthetic(&[0.1, 0.01], 1e-3, 7, 5);
        let r = resample(&d, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r.counts(), d.counts());
        assert_eq!(r.lambdas(), d.lambdas());
    }

    #[test]
    fn table_lists_every_method() {
        let b = BootstrapInterval {
            median: 0.024,
            p15: 0.015,
            p85: 0.032,
            n_boot: 1000,
            note: None,
        };
        let t = bootstrap_table(&[("Fit first", &b), ("Diff first", &b)], 0);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("Fit first") && lines[1].ends_with("32"));
        assert!(lines[1].split_whitespace().collect::<Vec<_>>().ends_with(&["24", "15", "32"]));
    }
}
