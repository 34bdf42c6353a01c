//! Effective sample sizes and posterior summaries.
//!
//! * [`ess_autocorr`]: multi-chain autocorrelation ESS, with the sum of
//!   autocorrelations truncated by the initial monotone positive sequence rule.
//! * [`multi_ess`]: `m · (|Λ| / |Σ̂|)^{1/p}` with `Λ` the sample covariance and
//!   `Σ̂` the non-overlapping batch-means covariance, batch size `⌊√m⌋`.
//! * Importance-weight ESS lives in [`crate::importance`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::FftPlanner;
use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};

/// Condition number above which a covariance matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssEstimate {
    pub value: f64,
    /// Every draw identical; `value` is then the total draw count.
    pub zero_variance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiEss {
    pub value: f64,
    pub unreliable: bool,
}

/// Biased (divide-by-n) autocovariance at lags `0..n` via zero-padded FFT.
fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf[..n].iter().map(|c| c.re / (len as f64 * n as f64)).collect()
}

/// Autocorrelation ESS pooled over chains.
pub fn ess_autocorr(chains: &[Vec<f64>]) -> Result<EssEstimate> {
    if chains.is_empty() {
        return Err(Error::TooFewDraws("no chains".into()));
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    let n_chains = chains.len();
    let total = n * n_chains;
    if n < 4 || (n_chains < 2 && n < 100) {
        return Err(Error::TooFewDraws(format!(
            "{n_chains} chain(s) of {n} draws; need at least 2 chains or 100 draws"
        )));
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();

    let first = chains[0][0];
    if chains.iter().all(|c| c.iter().all(|&v| v == first)) {
        return Ok(EssEstimate { value: total as f64, zero_variance: true });
    }

    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c)).collect();
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let nf = n as f64;
    let mean_var = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).sum::<f64>() / n_chains as f64;
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if n_chains > 1 {
        let grand = means.iter().sum::<f64>() / n_chains as f64;
        let between = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n_chains as f64 - 1.0);
        var_plus += between;
    }
    if !(var_plus > 0.0) {
        return Ok(EssEstimate { value: total as f64, zero_variance: true });
    }

    let rho = |t: usize| -> f64 {
        let mean_acov = acov.iter().map(|a| a[t]).sum::<f64>() / n_chains as f64;
        1.0 - (mean_var - mean_acov) / var_plus
    };

    // Geyer: sum adjacent pairs while positive, forcing the pair sums to decrease.
    let mut pair_sums = Vec::new();
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = match pair_sums.last() {
            Some(&prev) if pair > prev => prev,
            _ => pair,
        };
        pair_sums.push(pair);
        t += 2;
    }
    // ρ_0 = 1 is counted once: τ = −1 + 2 Σ_k (ρ_{2k} + ρ_{2k+1})
    let tau = (-1.0 + 2.0 * pair_sums.iter().sum::<f64>()).max(1.0 / (total as f64));
    let ess = (total as f64 / tau).clamp(1.0, total as f64);
    Ok(EssEstimate { value: ess, zero_variance: false })
}

fn column_name(names: Option<&[String]>, j: usize) -> String {
    names.and_then(|n| n.get(j).cloned()).unwrap_or_else(|| format!("column {j}"))
}

fn covariance(rows: &[&[f64]], dim: usize) -> DMatrix<f64> {
    let m = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for j in 0..dim {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let mut cov = DMatrix::zeros(dim, dim);
    for r in rows {
        for i in 0..dim {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            let v = cov[(i, j)] / (m - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// `(log det, condition number)` of a symmetric positive semi-definite matrix.
fn spectral_logdet(a: DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(a).eigenvalues;
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    let logdet = eig.iter().map(|&v| v.max(f64::MIN_POSITIVE).ln()).sum();
    (logdet, cond)
}

/// Multivariate ESS of an `m × p` draw matrix given as rows.
pub fn multi_ess(draws: &[Vec<f64>], names: Option<&[String]>) -> Result<MultiEss> {
    let m = draws.len();
    let dim = draws.first().map(Vec::len).unwrap_or(0);
    if dim == 0 {
        return Err(Error::TooFewDraws("no parameters".into()));
    }
    let b = (m as f64).sqrt().floor() as usize;
    if m < 4 || m < 4 * b {
        return Err(Error::TooFewDraws(format!("{m} draws is too few for batch means")));
    }
    for j in 0..dim {
        let v0 = draws[0][j];
        if draws.iter().all(|r| r[j] == v0) {
            return Err(Error::ConstantColumn(column_name(names, j)));
        }
    }
    let rows: Vec<&[f64]> = draws.iter().map(|r| r.as_slice()).collect();
    let sample_cov = covariance(&rows, dim);

    let a = m / b;
    let used = &rows[..a * b];
    let mut grand = vec![0.0; dim];
    for r in used {
        for j in 0..dim {
            grand[j] += r[j];
        }
    }
    grand.iter_mut().for_each(|v| *v /= (a * b) as f64);
    let mut batch_cov = DMatrix::zeros(dim, dim);
    for batch in used.chunks(b) {
        let mut bm = vec![0.0; dim];
        for r in batch {
            for j in 0..dim {
                bm[j] += r[j];
            }
        }
        let dev: Vec<f64> = bm.iter().zip(&grand).map(|(s, g)| s / b as f64 - g).collect();
        for i in 0..dim {
            for j in 0..dim {
                batch_cov[(i, j)] += dev[i] * dev[j];
            }
        }
    }
    batch_cov *= b as f64 / (a as f64 - 1.0);

    let (ld_sample, cond_sample) = spectral_logdet(sample_cov);
    let (ld_batch, cond_batch) = spectral_logdet(batch_cov);
    let unreliable = !(cond_sample <= MAX_CONDITION && cond_batch <= MAX_CONDITION);
    let raw = m as f64 * ((ld_sample - ld_batch) / dim as f64).exp();
    let value = if raw.is_finite() { raw.clamp(1.0, m as f64) } else { 1.0 };
    Ok(MultiEss { value, unreliable })
}

/// Split-chain potential scale reduction: each chain is halved and the
/// classic between/within variance ratio is taken over the halves.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if chains.is_empty() || n < 2 {
        return Err(Error::TooFewDraws("split R-hat needs at least 4 draws per chain".into()));
    }
    let halves: Vec<&[f64]> = chains.iter().flat_map(|c| [&c[..n], &c[n..2 * n]]).collect();
    let k = halves.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / k;
    let between = nf / (k - 1.0) * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let within = halves
        .iter()
        .zip(&means)
        .map(|(h, m)| h.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / k;
    if !(within > 0.0) {
        return Ok(1.0);
    }
    let var_plus = (nf - 1.0) / nf * within + between / nf;
    Ok((var_plus / within).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

fn weighted_quantile(sorted: &[(f64, f64)], q: f64) -> f64 {
    let mut acc = 0.0;
    for &(v, w) in sorted {
        acc += w;
        if acc >= q - 1e-12 {
            return v;
        }
    }
    sorted.last().map(|p| p.0).unwrap_or(f64::NAN)
}

/// Per-column mean, sd and 2.5/50/97.5% quantiles; `weights` must be normalized.
///
/// Quantiles use the inverse empirical CDF. The weighted variance is
/// `Σ w (x − mean)² / (1 − Σ w²)`, which equals the sample variance for
/// uniform weights.
pub fn summarize(draws: &[Vec<f64>], names: &[String], weights: Option<&[f64]>) -> Result<Vec<ParamSummary>> {
    let m = draws.len();
    if m == 0 {
        return Err(Error::TooFewDraws("cannot summarize an empty sample".into()));
    }
    let uniform;
    let w = match weights {
        Some(w) => {
            if w.len() != m {
                return Err(Error::InvalidParameter("weights and draws differ in length".into()));
            }
            w
        }
        None => {
            uniform = vec![1.0 / m as f64; m];
            &uniform[..]
        }
    };
    let sum_sq: f64 = w.iter().map(|v| v * v).sum();
    let dim = names.len();
    (0..dim)
        .map(|j| {
            let mean: f64 = draws.iter().zip(w).map(|(r, &wi)| wi * r[j]).sum();
            let ss: f64 = draws.iter().zip(w).map(|(r, &wi)| wi * (r[j] - mean).powi(2)).sum();
            let denom = 1.0 - sum_sq;
            let sd = if denom > 1e-15 { (ss / denom).sqrt() } else { 0.0 };
            let mut pairs: Vec<(f64, f64)> =
                draws.iter().zip(w).filter(|(_, &wi)| wi > 0.0).map(|(r, &wi)| (r[j], wi)).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Ok(ParamSummary {
                name: names[j].clone(),
                mean,
                sd,
                q025: weighted_quantile(&pairs, 0.025),
                q50: weighted_quantile(&pairs, 0.5),
                q975: weighted_quantile(&pairs, 0.975),
            })
        })
        .collect()
}

pub const TIMING_SCOPE: &str =
    "sampling, weighting and resampling only; excludes data generation and file I/O";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub method: String,
    pub ess_by_param: BTreeMap<String, f64>,
    pub ess_median: f64,
    pub multi_ess: f64,
    pub multi_ess_unreliable: bool,
    pub target_param: String,
    pub ess_target: f64,
    pub importance_ess: Option<f64>,
    pub max_norm_weight: Option<f64>,
    pub n_zero_weight: Option<usize>,
    pub weight_degenerate: bool,
    pub zero_variance_params: Vec<String>,
    pub accept_rates: BTreeMap<String, f64>,
    pub total_draws: usize,
    pub wall_time_sec: f64,
    pub ess_per_sec: f64,
    pub timing_scope: String,
    pub warnings: Vec<String>,
    pub config_echo: serde_json::Value,
}

/// Importance ESS below this flags weight degeneracy.
pub const DEGENERACY_ESS: f64 = 10.0;

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn per_sec(ess: f64, secs: f64) -> f64 {
    ess / secs.max(1e-9)
}

impl DiagnosticsReport {
    /// Report for chain output `draws[chain][iter][param]`.
    ///
    /// `multi_columns` selects the columns entering the multivariate ESS
    /// (simplex parameters must drop one component to keep `Λ` non-singular).
    pub fn from_chains(
        method: &str,
        draws: &[Vec<Vec<f64>>],
        names: &[String],
        target: &str,
        multi_columns: &[usize],
        accept_rates: BTreeMap<String, f64>,
        wall_time_sec: f64,
    ) -> Result<Self> {
        let mut ess_by_param = BTreeMap::new();
        let mut zero_variance_params = Vec::new();
        let mut ess_values = Vec::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            let chains: Vec<Vec<f64>> = draws.iter().map(|c| c.iter().map(|r| r[j]).collect()).collect();
            let est = ess_autocorr(&chains)?;
            if est.zero_variance {
                zero_variance_params.push(name.clone());
            }
            ess_by_param.insert(name.clone(), est.value);
            ess_values.push(est.value);
        }
        let ess_target = *ess_by_param
            .get(target)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown target parameter {target}")))?;

        let pooled: Vec<Vec<f64>> = draws
            .iter()
            .flatten()
            .map(|r| multi_columns.iter().map(|&j| r[j]).collect())
            .collect();
        let multi_names: Vec<String> = multi_columns.iter().map(|&j| names[j].clone()).collect();
        let mut warnings = Vec::new();
        let multi = match multi_ess(&pooled, Some(&multi_names)) {
            Ok(v) => v,
            Err(Error::ConstantColumn(col)) => {
                warnings.push(format!("multivariate ESS skipped: constant column {col}"));
                MultiEss { value: 1.0, unreliable: true }
            }
            Err(e) => return Err(e),
        };
        let total_draws = pooled.len();
        Ok(Self {
            method: method.to_string(),
            ess_median: median(&ess_values),
            ess_by_param,
            multi_ess: multi.value,
            multi_ess_unreliable: multi.unreliable,
            target_param: target.to_string(),
            ess_target,
            importance_ess: None,
            max_norm_weight: None,
            n_zero_weight: None,
            weight_degenerate: false,
            zero_variance_params,
            accept_rates,
            total_draws,
            wall_time_sec,
            ess_per_sec: per_sec(ess_target, wall_time_sec),
            timing_scope: TIMING_SCOPE.to_string(),
            warnings,
            config_echo: serde_json::Value::Null,
        })
    }

    /// Report for an importance sample: every parameter shares the weight ESS.
    pub fn from_importance(
        method: &str,
        names: &[String],
        target: &str,
        importance_ess: f64,
        max_norm_weight: f64,
        n_zero_weight: usize,
        total_draws: usize,
        wall_time_sec: f64,
    ) -> Self {
        let ess_by_param = names.iter().map(|n| (n.clone(), importance_ess)).collect();
        let weight_degenerate = importance_ess < DEGENERACY_ESS;
        let mut warnings = Vec::new();
        if weight_degenerate {
            warnings.push(format!("weight degeneracy: importance ESS {importance_ess:.3} < {DEGENERACY_ESS}"));
        }
        if 2 * n_zero_weight > total_draws {
            warnings.push(format!(
                "{n_zero_weight} of {total_draws} draws fall outside the target support"
            ));
        }
        Self {
            method: method.to_string(),
            ess_by_param,
            ess_median: importance_ess,
            multi_ess: importance_ess,
            multi_ess_unreliable: false,
            target_param: target.to_string(),
            ess_target: importance_ess,
            importance_ess: Some(importance_ess),
            max_norm_weight: Some(max_norm_weight),
            n_zero_weight: Some(n_zero_weight),
            weight_degenerate,
            zero_variance_params: Vec::new(),
            accept_rates: BTreeMap::new(),
            total_draws,
            wall_time_sec,
            ess_per_sec: per_sec(importance_ess, wall_time_sec),
            timing_scope: TIMING_SCOPE.to_string(),
            warnings,
            config_echo: serde_json::Value::Null,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::stochastics::RngStream;

    pub(crate) fn ar1(phi: f64, m: usize, rng: &mut RngStream) -> Vec<f64> {
        let innov_sd = (1.0 - phi * phi).sqrt();
        let mut x = rng.standard_normal();
        (0..m)
            .map(|_| {
                let out = x;
                x = phi * x + innov_sd * rng.standard_normal();
                out
            })
            .collect()
    }

    #[test]
    fn iid_normal_ess_near_m() {
        let mut rng = RngStream::new(1, 0);
        let m = 45_000;
        let chain: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
        let ess = ess_autocorr(&[chain]).unwrap();
        assert!(ess.value > 0.9 * m as f64 && ess.value <= 1.1 * m as f64, "{}", ess.value);
    }

    #[test]
    fn ar1_ess_matches_closed_form() {
        let mut rng = RngStream::new(2, 0);
        let m = 45_000;
        let chain = ar1(0.9, m, &mut rng);
        let ess = ess_autocorr(&[chain]).unwrap().value;
        let expected = m as f64 / 19.0;
        assert!((ess - expected).abs() < 0.2 * expected, "{ess} vs {expected}");
    }

    #[test]
    fn constant_chain_flagged() {
        let ess = ess_autocorr(&[vec![3.0; 200], vec![3.0; 200]]).unwrap();
        assert!(ess.zero_variance);
        assert_eq!(ess.value, 400.0);
        assert!(ess_autocorr(&[vec![1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn ess_affine_invariance() {
        let mut rng = RngStream::new(3, 0);
        let chains: Vec<Vec<f64>> = (0..3).map(|_| ar1(0.5, 2000, &mut rng)).collect();
        let base = ess_autocorr(&chains).unwrap().value;
        let shifted: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|v| v + 10.0).collect()).collect();
        let scaled: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|v| v * 3.7).collect()).collect();
        let s = ess_autocorr(&shifted).unwrap().value;
        let c = ess_autocorr(&scaled).unwrap().value;
        assert!((s - base).abs() <= 1e-10 * base, "{s} vs {base}");
        assert!((c - base).abs() <= 1e-8 * base, "{c} vs {base}");
    }

    #[test]
    fn multi_ess_iid_two_dim() {
        let mut rng = RngStream::new(4, 0);
        let m = 10_000;
        let draws: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.standard_normal(), rng.standard_normal()]).collect();
        let est = multi_ess(&draws, None).unwrap();
        assert!(est.value > 0.8 * m as f64 && est.value <= 1.2 * m as f64, "{}", est.value);
        assert!(!est.unreliable);
    }

    #[test]
    fn multi_ess_duplicate_columns_unreliable() {
        let mut rng = RngStream::new(5, 0);
        let draws: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                let z = rng.standard_normal();
                vec![z, z]
            })
            .collect();
        assert!(multi_ess(&draws, None).unwrap().unreliable);
    }

    #[test]
    fn multi_ess_constant_column_named() {
        let draws: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, 1.0]).collect();
        let names = vec!["a".to_string(), "b".to_string()];
        match multi_ess(&draws, Some(&names)) {
            Err(Error::ConstantColumn(c)) => assert_eq!(c, "b"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multi_ess_univariate_agrees_with_autocorr() {
        let mut rng = RngStream::new(6, 0);
        for phi in [0.0, 0.5, 0.9] {
            let chain = ar1(phi, 45_000, &mut rng);
            let auto = ess_autocorr(&[chain.clone()]).unwrap().value;
            let rows: Vec<Vec<f64>> = chain.iter().map(|&v| vec![v]).collect();
            let batch = multi_ess(&rows, None).unwrap().value;
            let ratio = batch / auto;
            assert!((1.0 / 1.5..=1.5).contains(&ratio), "phi {phi}: {batch} vs {auto}");
            if phi == 0.5 {
                assert!((batch - auto).abs() <= 0.25 * auto, "phi 0.5: {batch} vs {auto}");
            }
        }
    }

    #[test]
    fn multi_ess_affine_invariance() {
        let mut rng = RngStream::new(7, 0);
        let draws: Vec<Vec<f64>> = (0..5000)
            .map(|_| vec![rng.standard_normal(), rng.standard_normal(), rng.standard_normal()])
            .collect();
        let base = multi_ess(&draws, None).unwrap().value;
        let moved: Vec<Vec<f64>> = draws.iter().map(|r| vec![r[0] + 5.0, r[1] * 2.0, r[2] * 0.1 - 1.0]).collect();
        let other = multi_ess(&moved, None).unwrap().value;
        assert!((other - base).abs() <= 1e-8 * base, "{other} vs {base}");
    }

    #[test]
    fn split_rhat_detects_disagreement() {
        let mut rng = RngStream::new(9, 0);
        let good: Vec<Vec<f64>> = (0..3).map(|_| ar1(0.3, 2000, &mut rng)).collect();
        assert!(split_rhat(&good).unwrap() < 1.01);
        let mut bad = good.clone();
        bad[0].iter_mut().for_each(|v| *v += 3.0);
        assert!(split_rhat(&bad).unwrap() > 1.1);
    }

    #[test]
    fn summaries_weighted_and_unweighted() {
        let draws: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, -(i as f64)]).collect();
        let names = vec!["a".to_string(), "b".to_string()];
        let plain = summarize(&draws, &names, None).unwrap();
        let uniform = summarize(&draws, &names, Some(&[0.2; 5])).unwrap();
        for (p, u) in plain.iter().zip(&uniform) {
            assert!((p.mean - u.mean).abs() < 1e-12);
            assert!((p.sd - u.sd).abs() < 1e-12);
            assert_eq!((p.q025, p.q50, p.q975), (u.q025, u.q50, u.q975));
        }
        assert!((plain[0].sd - 2.5f64.sqrt()).abs() < 1e-12);

        let point = summarize(&draws, &names, Some(&[0.0, 0.0, 1.0, 0.0, 0.0])).unwrap();
        assert_eq!(point[0].mean, 2.0);
        assert_eq!((point[0].q025, point[0].q50, point[0].q975), (2.0, 2.0, 2.0));
        assert_eq!(point[0].sd, 0.0);
    }

    #[test]
    fn beta_summary_mean() {
        let mut rng = RngStream::new(8, 0);
        let m = 100_000;
        let draws: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.beta(4.0, 2.0)]).collect();
        let s = summarize(&draws, &["x".to_string()], None).unwrap();
        let se = (8.0 / 252.0 / m as f64).sqrt();
        assert!((s[0].mean - 2.0 / 3.0).abs() < 4.0 * se);
    }
}
