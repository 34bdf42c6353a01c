//! Pseudo-transparent reparameterization of the count model.
//!
//! `h*(μ, α0, α1) = (p, q, λ)` with
//!
//! ```text
//! p = expit(α0 + α1·μ)          ≈ Pr(R = 1)
//! q = μ·exp(α1·(1 − p))         ≈ E(Y | R = 1)
//! λ = α1
//! ```
//!
//! Both approximations are first order in `α1`, so the data still depend
//! weakly on `λ` given `(p, q)`. The stated inverse is exact:
//! `μ = q·exp(−α1·(1 − p))`, `α0 = logit p − α1·μ`.
//!
//! Also here: the importance sampler built on this map (weights carry the
//! ratio of true to convenience complete-data likelihood) and the root
//! count of the moment equation that decides whether `μ` is identified.

use std::time::Instant;

use serde::Serialize;

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::importance::{WeightedSample, normalize_weights, resample};
use crate::model::{
    CountPhiLambda, CountSummary, CountTheta, IncompleteDataset, PriorSpec, log_likelihood_count_summary,
    log_prior_count,
};
use crate::numeric::{
    expit, log_det_jacobian, log1m_expit, log_expit, logit, normal_logpdf, poisson_logpmf, poisson_truncation,
};
use crate::stochastics::RngStream;
use crate::tp_sat::DEFAULT_FD_STEP;

pub fn forward_pseudo(theta: &CountTheta) -> Result<CountPhiLambda> {
    let (mu, a0, a1) = (theta.mu(), theta.alpha0(), theta.alpha1());
    let p = expit(a0 + a1 * mu);
    let q = mu * (a1 * (1.0 - p)).exp();
    CountPhiLambda::new(p, q, a1)
}

pub fn inverse_pseudo(pl: &CountPhiLambda) -> Result<CountTheta> {
    let (p, q, a1) = (pl.p(), pl.q(), pl.lambda());
    let mu = q / (a1 * (1.0 - p)).exp();
    CountTheta::new(mu, logit(p) - a1 * mu, a1)
}

/// First-order approximation of `E(Y | R = 0)`.
pub fn impute_missing_mean(theta: &CountTheta) -> f64 {
    let (mu, a0, a1) = (theta.mu(), theta.alpha0(), theta.alpha1());
    mu * (-a1 * expit(a0 + a1 * mu)).exp()
}

/// Exact `Pr(R = 1)`, `E(Y | R = 1)` and `E(Y | R = 0)` by truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactConditionals {
    pub pr_observed: f64,
    pub mean_observed: f64,
    pub mean_missing: f64,
}

pub fn exact_conditionals(theta: &CountTheta) -> ExactConditionals {
    let y_max = poisson_truncation(theta.mu()) as u64;
    let (mut pr1, mut m1, mut m0) = (0.0, 0.0, 0.0);
    for y in 0..=y_max {
        let f = poisson_logpmf(y, theta.mu()).exp();
        let r = theta.observe_prob(y);
        pr1 += f * r;
        m1 += y as f64 * f * r;
        m0 += y as f64 * f * (1.0 - r);
    }
    ExactConditionals { pr_observed: pr1, mean_observed: m1 / pr1, mean_missing: m0 / (1.0 - pr1) }
}

/// Range of the observed-data log-likelihood over `lambdas` at fixed `(p, q)`.
/// Zero for a transparent map; positive here.
pub fn lambda_sensitivity(p: f64, q: f64, lambdas: &[f64], d: &IncompleteDataset) -> Result<f64> {
    let summary = CountSummary::from_dataset(d)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &l in lambdas {
        let theta = inverse_pseudo(&CountPhiLambda::new(p, q, l)?)?;
        let ll = log_likelihood_count_summary(&theta, &summary);
        lo = lo.min(ll);
        hi = hi.max(ll);
    }
    Ok(hi - lo)
}

/// `log |det ∇h*⁻¹|` at `(p, q, λ)` by central differences.
pub fn pseudo_jacobian_logdet(pl: &CountPhiLambda, step: f64) -> Result<f64> {
    let map = |v: &[f64]| {
        let (p, q, a1) = (v[0], v[1], v[2]);
        let mu = q / (a1 * (1.0 - p)).exp();
        vec![mu, logit(p) - a1 * mu, a1]
    };
    log_det_jacobian(map, &[pl.p(), pl.q(), pl.lambda()], step)
}

/// Conjugate convenience posterior of `(p, q)` and the convenience prior of `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountConveniencePosterior {
    pub p_beta: (f64, f64),
    /// Shape and rate.
    pub q_gamma: (f64, f64),
    pub lambda_sd: f64,
}

pub fn posterior_params_count(summary: &CountSummary, prior: &PriorSpec) -> CountConveniencePosterior {
    let n1 = summary.n_observed() as f64;
    let n0 = summary.n_missing as f64;
    CountConveniencePosterior {
        p_beta: (1.0 + n1, 1.0 + n0),
        q_gamma: (1.0 + summary.sum_observed() as f64, 1.0 + n1),
        lambda_sd: prior.sigma_delta,
    }
}

/// Log-weight of one draw given the histogram of its imputed missing outcomes.
///
/// The convenience likelihood `l*(d | φ)` is `R ~ Bern(p)` and
/// `Y | R = 1 ~ Pois(q)`; it has no term for the imputed outcomes, which
/// enter only the true complete-data likelihood.
fn pseudo_log_weight(
    pl: &CountPhiLambda,
    theta: &CountTheta,
    summary: &CountSummary,
    missing_hist: &[u64],
    prior: &PriorSpec,
    step: f64,
) -> Option<f64> {
    let logdet = pseudo_jacobian_logdet(pl, step).ok()?;
    let (mu, a0, a1) = (theta.mu(), theta.alpha0(), theta.alpha1());
    let (p, q) = (pl.p(), pl.q());
    let mut true_ll = 0.0;
    let mut conv_ll =
        summary.n_observed() as f64 * p.ln() + summary.n_missing as f64 * (1.0 - p).ln();
    for (y, &c) in summary.observed.iter().enumerate() {
        if c > 0 {
            let (c, yf) = (c as f64, y as f64);
            true_ll += c * (poisson_logpmf(y as u64, mu) + log_expit(a0 + a1 * yf));
            conv_ll += c * poisson_logpmf(y as u64, q);
        }
    }
    for (y, &c) in missing_hist.iter().enumerate() {
        if c > 0 {
            let (c, yf) = (c as f64, y as f64);
            true_ll += c * (poisson_logpmf(y as u64, mu) + log1m_expit(a0 + a1 * yf));
        }
    }
    // π*(φ): Beta(1,1) on p is flat, Gamma(1,1) on q contributes −q
    let conv_prior = -q + normal_logpdf(a1, 0.0, prior.sigma_delta);
    let lw = log_prior_count(theta, prior) + logdet + true_ll - conv_prior - conv_ll;
    lw.is_finite().then_some(lw)
}

#[derive(Debug, Clone)]
pub struct PseudoIsOutput {
    pub weighted: WeightedSample<CountPhiLambda>,
    pub resampled: Vec<CountTheta>,
    pub report: DiagnosticsReport,
}

/// Importance sampling over the pseudo-transparent parameters with imputed
/// missing outcomes (one fresh imputation per draw).
pub fn pseudo_istp_count(d: &IncompleteDataset, prior: &PriorSpec, m: usize, rng: &mut RngStream) -> Result<PseudoIsOutput> {
    let summary = CountSummary::from_dataset(d)?;
    if m == 0 {
        return Err(Error::Config("draw count must be positive".into()));
    }
    let mut streams = rng.split(3);
    let mut resample_rng = streams.pop().expect("three streams");
    let impute_rng = streams.pop().expect("three streams");
    let mut draw_rng = streams.pop().expect("three streams");
    let n_missing = summary.n_missing as usize;

    let start = Instant::now();
    let post = posterior_params_count(&summary, prior);
    let mut draws = Vec::with_capacity(m);
    let mut log_weights = Vec::with_capacity(m);
    let mut n_zero = 0;
    let mut n_singular = 0;
    let mut hist: Vec<u64> = Vec::new();
    for i in 0..m {
        let pl = loop {
            let p = draw_rng.beta(post.p_beta.0, post.p_beta.1);
            let q = draw_rng.gamma(post.q_gamma.0, post.q_gamma.1);
            let l = draw_rng.normal(0.0, post.lambda_sd);
            if let Ok(pl) = CountPhiLambda::new(p, q, l) {
                break pl;
            }
        };
        let lw = match inverse_pseudo(&pl) {
            Ok(theta) => {
                let imputed_mean = impute_missing_mean(&theta);
                let mut irng = impute_rng.substream(i as u64);
                hist.clear();
                for _ in 0..n_missing {
                    let y = irng.poisson(imputed_mean) as usize;
                    if y >= hist.len() {
                        hist.resize(y + 1, 0);
                    }
                    hist[y] += 1;
                }
                match pseudo_log_weight(&pl, &theta, &summary, &hist, prior, DEFAULT_FD_STEP) {
                    Some(v) => v,
                    None => {
                        n_singular += 1;
                        f64::NEG_INFINITY
                    }
                }
            }
            Err(_) => f64::NEG_INFINITY,
        };
        if lw == f64::NEG_INFINITY {
            n_zero += 1;
        }
        draws.push(pl);
        log_weights.push(lw);
    }
    let (norm_weights, ess) = normalize_weights(&log_weights)?;
    let weighted = WeightedSample { draws, log_weights, norm_weights, ess, n_zero_weight: n_zero, n_singular };
    let picked = resample(&weighted.draws, &weighted.norm_weights, m, &mut resample_rng);
    let resampled = picked.iter().map(inverse_pseudo).collect::<Result<Vec<_>>>()?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut report = DiagnosticsReport::from_importance(
        "pseudo-is",
        &CountTheta::param_names(),
        "mu",
        weighted.ess,
        weighted.max_norm_weight(),
        weighted.n_zero_weight,
        m,
        elapsed,
    );
    let finite: Vec<f64> = weighted.log_weights.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() > 1 {
        let spread = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - finite.iter().copied().fold(f64::INFINITY, f64::min);
        report.warnings.push(format!("log-weight spread {spread:.3}"));
    }
    Ok(PseudoIsOutput { weighted, resampled, report })
}

/// `ĉ_y = #(Y = y, R = 1) / n` for `y = 0, 1, 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CHatEstimates {
    pub c: [f64; 3],
    /// Sample size; zero for population values.
    pub n: u64,
}

pub fn chat_estimates(d: &IncompleteDataset) -> Result<CHatEstimates> {
    let s = CountSummary::from_dataset(d)?;
    let n = d.len() as u64;
    let mut c = [0.0; 3];
    if n > 0 {
        for (y, v) in c.iter_mut().enumerate() {
            *v = s.observed.get(y).copied().unwrap_or(0) as f64 / n as f64;
        }
    }
    Ok(CHatEstimates { c, n })
}

/// `c_y = Pr(Y = y, R = 1)` under `theta`.
pub fn population_chat(theta: &CountTheta) -> CHatEstimates {
    let mut c = [0.0; 3];
    for (y, v) in c.iter_mut().enumerate() {
        *v = poisson_logpmf(y as u64, theta.mu()).exp() * theta.observe_prob(y as u64);
    }
    CHatEstimates { c, n: 0 }
}

/// Default grid resolution of the root search.
pub const ROOT_GRID: usize = 4096;
/// Lower end of the root-search interval.
pub const ROOT_MU_LO: f64 = 1e-6;

/// `mu_max` default: five times the mean observed outcome.
pub fn default_mu_max(d: &IncompleteDataset) -> Result<f64> {
    let s = CountSummary::from_dataset(d)?;
    let n = s.n_observed();
    let mean = if n > 0 { s.sum_observed() as f64 / n as f64 } else { 0.0 };
    Ok((5.0 * mean).max(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationReport {
    pub c_hat: Vec<f64>,
    pub roots: Vec<f64>,
    /// Grid points where the implied `a0` or `a1` left `(0, 1)`.
    pub n_grid_invalid: usize,
}

/// `f(μ) = (e^{−μ} μ² / 2)·h(c0·e^μ, c1·e^μ/μ) − c2`, or `None` where the
/// implied observation probabilities leave `(0, 1)`.
pub fn moment_equation(c: &[f64; 3], mu: f64) -> Option<f64> {
    let a0 = c[0] * mu.exp();
    let a1 = c[1] * mu.exp() / mu;
    let valid = |a: f64| a > 0.0 && a < 1.0;
    if !valid(a0) || !valid(a1) {
        return None;
    }
    let h = expit(2.0 * logit(a1) - logit(a0));
    Some((-mu).exp() * mu * mu / 2.0 * h - c[2])
}

const ROOT_TOL: f64 = 1e-12;

fn bisect(c: &[f64; 3], mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let Some(f_mid) = moment_equation(c, mid) else {
            return mid;
        };
        if f_mid.abs() < ROOT_TOL || hi - lo < 1e-15 * mid.max(1.0) {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of [`moment_equation`] on `(1e-6, mu_max]`: a uniform grid of `grid`
/// points, bisecting every sign change between adjacent valid points.
pub fn identification_roots(c: &CHatEstimates, mu_max: f64, grid: usize) -> Result<IdentificationReport> {
    if !(mu_max > ROOT_MU_LO && mu_max.is_finite()) {
        return Err(Error::Config(format!("mu_max must exceed {ROOT_MU_LO}, got {mu_max}")));
    }
    if grid < 2 {
        return Err(Error::Config("root grid needs at least two points".into()));
    }
    let step = (mu_max - ROOT_MU_LO) / (grid - 1) as f64;
    let mut roots = Vec::new();
    let mut n_invalid = 0;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..grid {
        let mu = ROOT_MU_LO + step * k as f64;
        match moment_equation(&c.c, mu) {
            None => {
                n_invalid += 1;
                prev = None;
            }
            Some(f) => {
                if f == 0.0 {
                    roots.push(mu);
                } else if let Some((mu_prev, f_prev)) = prev {
                    if f_prev != 0.0 && (f_prev < 0.0) != (f < 0.0) {
                        roots.push(bisect(&c.c, mu_prev, mu, f_prev));
                    }
                }
                prev = Some((mu, f));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(IdentificationReport { c_hat: c.c.to_vec(), roots, n_grid_invalid: n_invalid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate_count;
    use proptest::prelude::*;

    #[test]
    fn forward_at_mar_is_exact() {
        let theta = CountTheta::new(3.0, 0.7, 0.0).unwrap();
        let pl = forward_pseudo(&theta).unwrap();
        assert_eq!(pl.p(), expit(0.7));
        assert_eq!(pl.q(), 3.0);
        let back = inverse_pseudo(&pl).unwrap();
        assert_eq!(back.mu(), 3.0);
        assert!((back.alpha0() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn forward_at_reference_truth() {
        let theta = CountTheta::reference();
        let pl = forward_pseudo(&theta).unwrap();
        assert!((pl.p() - 0.5).abs() < 1e-15);
        let q = 5.0 * (0.5 * std::f64::consts::LN_2 / 5f64.sqrt()).exp();
        assert!((pl.q() - q).abs() < 1e-12);
        assert!((pl.q() - 5.8382).abs() < 1e-4);

        let exact = exact_conditionals(&theta);
        // first-order approximations: close, not equal
        assert!((pl.p() - exact.pr_observed).abs() < 0.1);
        assert!((pl.q() - exact.mean_observed).abs() < 0.5);
        assert!(pl.q() != exact.mean_observed);
    }

    #[test]
    fn inverse_of_reference_phi() {
        let ln2 = std::f64::consts::LN_2;
        let q = 5.0 * (0.5 * ln2 / 5f64.sqrt()).exp();
        let theta = inverse_pseudo(&CountPhiLambda::new(0.5, q, ln2 / 5f64.sqrt()).unwrap()).unwrap();
        assert!((theta.mu() - 5.0).abs() < 1e-12);
        assert!((theta.alpha0() + 5f64.sqrt() * ln2).abs() < 1e-12);
    }

    #[test]
    fn small_mu_gives_small_q() {
        let pl = forward_pseudo(&CountTheta::new(1e-9, 0.0, 0.3).unwrap()).unwrap();
        assert!(pl.q() < 1e-8);
    }

    #[test]
    fn imputation_mean_cases() {
        assert_eq!(impute_missing_mean(&CountTheta::new(2.5, 1.0, 0.0).unwrap()), 2.5);
        let m = impute_missing_mean(&CountTheta::reference());
        assert!((m - 4.2821).abs() < 1e-4, "{m}");
        assert!(impute_missing_mean(&CountTheta::new(2.5, 1.0, -0.3).unwrap()) > 2.5);
    }

    #[test]
    fn jacobian_matches_closed_form() {
        // |det| = μ / (q·p·(1 − p))
        let pl = CountPhiLambda::new(0.35, 4.2, -0.4).unwrap();
        let theta = inverse_pseudo(&pl).unwrap();
        let exact = (theta.mu() / (pl.q() * pl.p() * (1.0 - pl.p()))).ln();
        let a = pseudo_jacobian_logdet(&pl, 1e-6).unwrap();
        let b = pseudo_jacobian_logdet(&pl, 5e-7).unwrap();
        assert!((a - exact).abs() < 1e-6, "{a} vs {exact}");
        assert!((a - b).abs() < 1e-6 * a.abs().max(1.0));
    }

    #[test]
    fn likelihood_depends_on_lambda() {
        let mut rng = RngStream::new(1, 0);
        let d = simulate_count(&CountTheta::reference(), 500, &mut rng);
        let spread = lambda_sensitivity(0.5, 5.8, &[-0.6, -0.2, 0.0, 0.3, 0.6], &d).unwrap();
        assert!(spread > 0.0);
    }

    #[test]
    fn chat_examples() {
        let d = IncompleteDataset::new_count(vec![Some(0), Some(3), None, Some(1)]);
        let c = chat_estimates(&d).unwrap();
        assert_eq!(c.c, [0.25, 0.25, 0.0]);
        let none = chat_estimates(&IncompleteDataset::new_count(vec![None; 5])).unwrap();
        assert_eq!(none.c, [0.0; 3]);

        let pop = population_chat(&CountTheta::reference());
        let expect = (-5f64).exp() * expit(-5f64.sqrt() * std::f64::consts::LN_2);
        assert!((pop.c[0] - expect).abs() < 1e-15);
        assert!((pop.c[0] - 0.001_179_7).abs() < 1e-7);
    }

    #[test]
    fn population_chat_roots() {
        let c = population_chat(&CountTheta::reference());
        let rep = identification_roots(&c, 25.0, ROOT_GRID).unwrap();
        assert!(rep.n_grid_invalid > 0);
        // μ = 5 is forced by construction; a second exact solution sits just
        // below the point where c0·e^μ reaches 1
        assert_eq!(rep.roots.len(), 2, "{rep:?}");
        assert!((rep.roots[0] - 5.0).abs() < 1e-6);
        let other = rep.roots[1];
        assert!(other > 6.6 && other < -c.c[0].ln(), "{other}");
        assert!(moment_equation(&c.c, other).unwrap().abs() < 1e-10);

        let below = identification_roots(&c, 6.0, ROOT_GRID).unwrap();
        assert_eq!(below.roots.len(), 1);
        assert!((below.roots[0] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn diagonal_h_identity() {
        // constant observation probability a: h(a, a) = a
        let (a, mu0) = (0.4f64, 3.0f64);
        let pois = |y: i32| (-mu0).exp() * mu0.powi(y) / [1.0, 1.0, 2.0][y as usize];
        let c = [a * pois(0), a * pois(1), a * pois(2)];
        assert!(moment_equation(&c, mu0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn zero_counts_give_no_roots() {
        let c = CHatEstimates { c: [0.0, 0.05, 0.08], n: 100 };
        let rep = identification_roots(&c, 20.0, 512).unwrap();
        assert!(rep.roots.is_empty());
        assert_eq!(rep.n_grid_invalid, 512);
        assert!(identification_roots(&c, -1.0, 512).is_err());
    }

    #[test]
    fn method_three_tiny_n_keeps_ess() {
        let mut rng = RngStream::new(2, 0);
        let d = simulate_count(&CountTheta::reference(), 3, &mut rng);
        let m = 5000;
        let out = pseudo_istp_count(&d, &PriorSpec::with_sigma(0.5).unwrap(), m, &mut rng).unwrap();
        assert!(out.weighted.ess > m as f64 / 100.0, "{}", out.weighted.ess);
        assert_eq!(out.resampled.len(), m);
    }

    #[test]
    fn method_three_is_reproducible() {
        let mut rng = RngStream::new(3, 0);
        let d = simulate_count(&CountTheta::reference(), 200, &mut rng);
        let prior = PriorSpec::default();
        let a = pseudo_istp_count(&d, &prior, 300, &mut RngStream::new(4, 0)).unwrap();
        let b = pseudo_istp_count(&d, &prior, 300, &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(a.weighted.log_weights, b.weighted.log_weights);
        assert_eq!(a.resampled, b.resampled);
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(mu in 0.05f64..40.0, a0 in -4.0f64..4.0, a1 in -1.5f64..1.5) {
            // keep p away from 0 and 1 in floating point
            let eta = a0 + a1 * mu;
            prop_assume!(eta.abs() < 30.0);
            let theta = CountTheta::new(mu, a0, a1).unwrap();
            let back = inverse_pseudo(&forward_pseudo(&theta).unwrap()).unwrap();
            prop_assert!((back.mu() - mu).abs() <= 1e-12 * mu.max(1.0));
            // logit loses about eps / (p(1 - p)) near the boundary
            let p = expit(eta);
            let tol = 1e-12 * (a1 * mu).abs().max(1.0) + 4.0 * f64::EPSILON / (p * (1.0 - p));
            prop_assert!((back.alpha0() - a0).abs() <= tol);
            prop_assert_eq!(back.alpha1(), a1);
        }
    }
}
