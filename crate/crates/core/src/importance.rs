//! Importance weighting of convenience-posterior draws back to the target
//! posterior, followed by multinomial resampling.

use std::time::Instant;

use crate::conjugate::{
    draw_phi_lambda_sat, log_convenience_prior_lambda, log_convenience_prior_phi, posterior_params_sat,
};
use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::model::{
    IncompleteDataset, PriorSpec, SatPhiLambda, SatTheta, log_prior_sat, sufficient_stats_sat,
};
use crate::stochastics::RngStream;
use crate::tp_sat::{DEFAULT_FD_STEP, FreeCoords, inverse_tp, jacobian_logdet_inverse};

/// Draws with their log-weights and normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample<D> {
    pub draws: Vec<D>,
    pub log_weights: Vec<f64>,
    pub norm_weights: Vec<f64>,
    pub ess: f64,
    /// Draws outside the target support (out-of-image or singular Jacobian).
    pub n_zero_weight: usize,
    /// The subset of `n_zero_weight` caused by a singular or non-finite Jacobian.
    pub n_singular: usize,
}

impl<D> WeightedSample<D> {
    pub fn max_norm_weight(&self) -> f64 {
        self.norm_weights.iter().copied().fold(0.0, f64::max)
    }
}

/// Why a draw received zero weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroWeight {
    OutOfImage,
    Singular,
}

fn log_weight_sat_detail(draw: &SatPhiLambda, prior: &PriorSpec, step: f64) -> std::result::Result<f64, ZeroWeight> {
    let theta = inverse_tp(draw).map_err(|_| ZeroWeight::OutOfImage)?;
    let target = log_prior_sat(&theta, prior);
    if target == f64::NEG_INFINITY {
        return Err(ZeroWeight::OutOfImage);
    }
    let logdet =
        jacobian_logdet_inverse(&FreeCoords::from_phi_lambda(draw), step).map_err(|_| ZeroWeight::Singular)?;
    Ok(target + logdet
        - log_convenience_prior_lambda(draw.lambda(), prior.sigma_delta)
        - log_convenience_prior_phi(draw.cells()))
}

/// `log π₀(h⁻¹(φ,λ)) + log|∇h⁻¹| − log π*(λ|φ) − log π*(φ)`, or `−∞` outside
/// the image of `h` or where the Jacobian is singular.
pub fn log_weight_sat(draw: &SatPhiLambda, prior: &PriorSpec, step: f64) -> f64 {
    log_weight_sat_detail(draw, prior, step).unwrap_or(f64::NEG_INFINITY)
}

/// Normalized weights and `1/Σw²`.
pub fn normalize_weights(logw: &[f64]) -> Result<(Vec<f64>, f64)> {
    let max = logw.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoSupport { n_draws: logw.len() });
    }
    if max == f64::INFINITY {
        return Err(Error::InvalidParameter("log-weight of +inf".into()));
    }
    let raw: Vec<f64> = logw
        .iter()
        .map(|&l| if l.is_nan() { 0.0 } else { (l - max).exp() })
        .collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.into_iter().map(|v| v / total).collect();
    let sum_sq: f64 = w.iter().map(|v| v * v).sum();
    let ess = (1.0 / sum_sq).clamp(1.0, logw.len() as f64);
    Ok((w, ess))
}

/// `m_out` multinomial draws with replacement.
pub fn resample<T: Clone>(draws: &[T], norm_weights: &[f64], m_out: usize, rng: &mut RngStream) -> Vec<T> {
    let mut cdf = Vec::with_capacity(norm_weights.len());
    let mut acc = 0.0;
    for &w in norm_weights {
        acc += w;
        cdf.push(acc);
    }
    (0..m_out)
        .map(|_| {
            let u = rng.uniform() * acc;
            let mut i = cdf.partition_point(|&c| c <= u);
            // skip zero-weight entries sharing the same cumulative value
            while i < norm_weights.len() && norm_weights[i] == 0.0 {
                i += 1;
            }
            if i >= norm_weights.len() {
                i = norm_weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
            }
            draws[i].clone()
        })
        .collect()
}

/// ESS after an importance step applied to a correlated sample with ESS `ess_p`.
pub fn combined_ess(norm_weights: &[f64], ess_p: f64, m: usize) -> f64 {
    let sum_sq: f64 = norm_weights.iter().map(|w| w * w).sum();
    (1.0 / sum_sq) * ess_p / m as f64
}

/// Weights a batch of transparent-parameter draws.
pub fn weigh_sat(draws: Vec<SatPhiLambda>, prior: &PriorSpec, step: f64) -> Result<WeightedSample<SatPhiLambda>> {
    let mut n_zero = 0;
    let mut n_singular = 0;
    let log_weights: Vec<f64> = draws
        .iter()
        .map(|d| match log_weight_sat_detail(d, prior, step) {
            Ok(v) => v,
            Err(kind) => {
                n_zero += 1;
                if kind == ZeroWeight::Singular {
                    n_singular += 1;
                }
                f64::NEG_INFINITY
            }
        })
        .collect();
    let (norm_weights, ess) = normalize_weights(&log_weights)?;
    Ok(WeightedSample { draws, log_weights, norm_weights, ess, n_zero_weight: n_zero, n_singular })
}

#[derive(Debug, Clone)]
pub struct IstpOutput {
    pub weighted: WeightedSample<SatPhiLambda>,
    pub resampled: Vec<SatTheta>,
    pub report: DiagnosticsReport,
}

impl IstpOutput {
    /// `θ` of every weighted draw, flattened; `None` for zero-weight draws.
    pub fn weighted_theta(&self) -> Vec<Option<Vec<f64>>> {
        self.weighted
            .draws
            .iter()
            .zip(&self.weighted.norm_weights)
            .map(|(d, &w)| if w > 0.0 { inverse_tp(d).ok().map(|t| t.to_flat()) } else { None })
            .collect()
    }
}

/// End-to-end importance sampling for the saturated model.
pub fn istp_sat(d: &IncompleteDataset, prior: &PriorSpec, m: usize, rng: &mut RngStream) -> Result<IstpOutput> {
    let p = d.require_sat()?;
    if m == 0 {
        return Err(Error::Config("draw count must be positive".into()));
    }
    let mut streams = rng.split(2);
    let resample_rng = streams.pop().expect("two streams");
    let mut draw_rng = streams.pop().expect("two streams");
    let mut resample_rng = resample_rng;

    let start = Instant::now();
    let stats = sufficient_stats_sat(d)?;
    let post = posterior_params_sat(&stats, prior);
    let draws = draw_phi_lambda_sat(&post, m, &mut draw_rng);
    let weighted = weigh_sat(draws, prior, DEFAULT_FD_STEP)?;
    let picked = resample(&weighted.draws, &weighted.norm_weights, m, &mut resample_rng);
    let resampled = picked
        .iter()
        .map(inverse_tp)
        .collect::<Result<Vec<_>>>()?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut report = DiagnosticsReport::from_importance(
        "istp",
        &SatTheta::param_names(p),
        "beta[1]",
        weighted.ess,
        weighted.max_norm_weight(),
        weighted.n_zero_weight,
        m,
        elapsed,
    );
    if weighted.n_singular > 0 {
        report
            .warnings
            .push(format!("{} draws had a singular Jacobian", weighted.n_singular));
    }
    Ok(IstpOutput { weighted, resampled, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::summarize;
    use crate::model::{simulate_sat, SatTheta};
    use crate::tp_sat::forward_tp;

    #[test]
    fn normalize_examples() {
        let (w, ess) = normalize_weights(&[0.5f64.ln(), 0.3f64.ln(), 0.2f64.ln()]).unwrap();
        assert!((ess - 1.0 / 0.38).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let (w, ess) = normalize_weights(&[-3.0; 7]).unwrap();
        assert!(w.iter().all(|&v| (v - 1.0 / 7.0).abs() < 1e-15));
        assert!((ess - 7.0).abs() < 1e-9);

        let (w, ess) = normalize_weights(&[f64::NEG_INFINITY, -1000.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(w, vec![0.0, 1.0, 0.0]);
        assert_eq!(ess, 1.0);

        assert!(matches!(
            normalize_weights(&[f64::NEG_INFINITY; 3]),
            Err(Error::NoSupport { n_draws: 3 })
        ));
    }

    #[test]
    fn huge_log_weights_do_not_overflow() {
        let (w, ess) = normalize_weights(&[5000.0, 5000.0 + 2f64.ln()]).unwrap();
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((ess - 1.0 / (1.0 / 9.0 + 4.0 / 9.0)).abs() < 1e-9);
    }

    #[test]
    fn combined_ess_arithmetic() {
        let u = vec![1.0 / 100.0; 100];
        assert!((combined_ess(&u, 100.0, 100) - 100.0).abs() < 1e-9);
        assert!((combined_ess(&u, 50.0, 100) - 50.0).abs() < 1e-9);
        // 1/Σw² = 1000 via 1000 equal weights embedded among zeros
        let mut w = vec![0.0; 45_000];
        w[..1000].iter_mut().for_each(|v| *v = 1.0 / 1000.0);
        assert!((combined_ess(&w, 9000.0, 45_000) - 200.0).abs() < 1e-6);
    }

    #[test]
    fn resample_examples() {
        let draws: Vec<usize> = (0..5).collect();
        let mut rng = RngStream::new(1, 0);
        let out = resample(&draws, &[0.0, 0.0, 1.0, 0.0, 0.0], 50, &mut rng);
        assert!(out.iter().all(|&v| v == 2));

        let m = 100_000;
        let draws: Vec<usize> = (0..m).collect();
        let w = vec![1.0 / m as f64; m];
        let a = resample(&draws, &w, m, &mut RngStream::new(2, 0));
        let b = resample(&draws, &w, m, &mut RngStream::new(2, 0));
        assert_eq!(a, b);
        let mut counts = vec![0u32; m];
        a.iter().for_each(|&i| counts[i] += 1);
        assert!(*counts.iter().max().unwrap() <= 20);
    }

    #[test]
    fn resample_never_picks_zero_weight() {
        let draws: Vec<usize> = (0..4).collect();
        let out = resample(&draws, &[0.5, 0.0, 0.0, 0.5], 10_000, &mut RngStream::new(3, 0));
        assert!(out.iter().all(|&v| v == 0 || v == 3));
    }

    fn uniform_draw(p: usize) -> SatPhiLambda {
        forward_tp(&SatTheta::uniform(p).unwrap()).unwrap()
    }

    #[test]
    fn weight_is_finite_and_step_stable() {
        let prior = PriorSpec::with_sigma(0.5).unwrap();
        let d = uniform_draw(1);
        let a = log_weight_sat(&d, &prior, 1e-6);
        let b = log_weight_sat(&d, &prior, 5e-7);
        assert!(a.is_finite());
        assert!((a - b).abs() < 5e-6, "{a} vs {b}");
    }

    #[test]
    fn out_of_image_draw_has_zero_weight() {
        let theta = SatTheta::new(vec![0.5, 0.5], vec![0.5, 0.5], vec![0.9, 0.9], vec![0.0, 0.0]).unwrap();
        let good = forward_tp(&theta).unwrap();
        let bad = good.with_lambda(vec![-40.0, -40.0]).unwrap();
        assert_eq!(log_weight_sat(&bad, &PriorSpec::default(), 1e-6), f64::NEG_INFINITY);
    }

    #[test]
    fn log_weight_differences_equal_logdet_differences() {
        let prior = PriorSpec::with_sigma(0.5).unwrap();
        let mut rng = RngStream::new(11, 0);
        let draws: Vec<SatPhiLambda> = (0..20)
            .map(|_| forward_tp(&SatTheta::sample_prior(2, &prior, &mut rng).unwrap()).unwrap())
            .collect();
        let ld: Vec<f64> = draws
            .iter()
            .map(|d| jacobian_logdet_inverse(&FreeCoords::from_phi_lambda(d), 1e-6).unwrap())
            .collect();
        let lw: Vec<f64> = draws.iter().map(|d| log_weight_sat(d, &prior, 1e-6)).collect();
        for i in 1..draws.len() {
            let diff = (lw[i] - lw[0]) - (ld[i] - ld[0]);
            assert!(diff.abs() < 1e-8, "draw {i}: {diff}");
        }
    }

    #[test]
    fn tiny_sigma_pins_delta() {
        let mut rng = RngStream::new(5, 0);
        let theta = SatTheta::sample_prior(1, &PriorSpec::with_sigma(0.5).unwrap(), &mut rng).unwrap();
        let d = simulate_sat(&theta, 500, &mut rng);
        let out = istp_sat(&d, &PriorSpec::with_sigma(1e-4).unwrap(), 2000, &mut rng).unwrap();
        assert!(out.resampled.iter().all(|t| t.delta().iter().all(|v| v.abs() < 1e-3)));
        assert_eq!(out.resampled.len(), 2000);
        assert!(out.report.importance_ess.unwrap() >= 1.0);
    }

    #[test]
    fn istp_is_reproducible_and_weights_are_consistent() {
        let prior = PriorSpec::with_sigma(0.5).unwrap();
        let mut rng = RngStream::new(6, 0);
        let theta = SatTheta::sample_prior(2, &prior, &mut rng).unwrap();
        let d = simulate_sat(&theta, 800, &mut rng);
        let a = istp_sat(&d, &prior, 500, &mut RngStream::new(7, 1)).unwrap();
        let b = istp_sat(&d, &prior, 500, &mut RngStream::new(7, 1)).unwrap();
        assert_eq!(a.weighted.log_weights, b.weighted.log_weights);
        assert_eq!(a.resampled, b.resampled);
        let w = &a.weighted;
        assert!((w.norm_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.ess >= 1.0 && w.ess <= 500.0);
        for (lw, nw) in w.log_weights.iter().zip(&w.norm_weights) {
            if *lw == f64::NEG_INFINITY {
                assert_eq!(*nw, 0.0);
            }
        }
    }

    #[test]
    fn wrong_dataset_kind_rejected() {
        let d = IncompleteDataset::new_count(vec![Some(1), None]);
        assert!(matches!(
            istp_sat(&d, &PriorSpec::default(), 10, &mut RngStream::new(1, 0)),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn weighted_summary_of_beta_is_sane() {
        let prior = PriorSpec::with_sigma(0.01).unwrap();
        let mut rng = RngStream::new(8, 0);
        let theta = SatTheta::sample_prior(1, &prior, &mut rng).unwrap();
        let d = simulate_sat(&theta, 5000, &mut rng);
        let out = istp_sat(&d, &prior, 4000, &mut rng).unwrap();
        let rows: Vec<Vec<f64>> = out.resampled.iter().map(|t| t.beta().to_vec()).collect();
        let s = summarize(&rows, &["b0".into(), "b1".into()], None).unwrap();
        for x in 0..2 {
            assert!((s[x].mean - theta.beta()[x]).abs() < 5.0 * s[x].sd + 0.02, "{:?}", s[x]);
        }
    }
}
