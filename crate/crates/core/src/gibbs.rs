//! Metropolis-within-Gibbs baselines.
//!
//! * [`gibbs_sat`]: data augmentation in the original parameterization of the
//!   saturated model. Conjugate Dirichlet/Beta updates for `α` and `β`, a
//!   paired random walk on `(logit γ[x], δ[x])` per cell.
//! * [`mcmc_count_original`]: the count model with imputed missing outcomes,
//!   a random walk on `log μ` and a paired random walk on `(α0, α1)`.
//! * [`mcmc_count_pseudo`]: the count model run on `(p, q, α1)` with the exact
//!   observed-data likelihood.
//!
//! Step sizes adapt during burn-in only (Robbins–Monro on the log scale, one
//! update per `adapt_window` iterations). Multi-dimensional blocks also learn
//! a proposal covariance from burn-in draws. Everything is frozen afterwards.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::model::{
    CellIndex, CountSummary, CountTheta, IncompleteDataset, PriorSpec, SatTheta, log_likelihood_count_summary,
};
use crate::model::CountPhiLambda;
use crate::numeric::{expit, log1m_expit, log_expit, logit, normal_logpdf, poisson_logpmf, poisson_truncation};
use crate::pseudo_tp::inverse_pseudo;
use crate::stochastics::RngStream;

/// Initial proposal scale for blocks without an explicit step size.
pub const DEFAULT_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct MwgConfig {
    /// Initial proposal SD per Metropolis block; empty means [`DEFAULT_STEP`]
    /// for every block.
    pub step_sizes: Vec<f64>,
    pub adapt: bool,
    pub adapt_window: usize,
    /// Target acceptance for scalar blocks.
    pub target_accept: f64,
    /// Target acceptance for blocks of dimension two or more.
    pub target_accept_paired: f64,
}

impl Default for MwgConfig {
    fn default() -> Self {
        Self {
            step_sizes: Vec::new(),
            adapt: true,
            adapt_window: 50,
            target_accept: 0.44,
            target_accept_paired: 0.234,
        }
    }
}

impl MwgConfig {
    pub fn validate(&self, n_blocks: usize) -> Result<()> {
        if !self.step_sizes.is_empty() && self.step_sizes.len() != n_blocks {
            return Err(Error::Config(format!(
                "{} step sizes given for {n_blocks} blocks",
                self.step_sizes.len()
            )));
        }
        if self.step_sizes.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Config("step sizes must be positive".into()));
        }
        if self.adapt_window == 0 {
            return Err(Error::Config("adapt_window must be positive".into()));
        }
        for t in [self.target_accept, self.target_accept_paired] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("target acceptance {t} outside (0, 1)")));
            }
        }
        Ok(())
    }

    fn step(&self, block: usize) -> f64 {
        self.step_sizes.get(block).copied().unwrap_or(DEFAULT_STEP)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainOutput {
    pub chains: usize,
    pub iters_kept: usize,
    pub burnin: usize,
    /// `draws[chain][iter][param]`, ordered as `param_names`.
    pub draws: Vec<Vec<Vec<f64>>>,
    pub param_names: Vec<String>,
    /// Post-burn-in acceptance fraction per Metropolis block.
    pub accept_rates: BTreeMap<String, f64>,
    pub wall_time_sec: f64,
}

impl ChainOutput {
    pub fn column(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let j = self.param_names.iter().position(|n| n == name)?;
        Some(self.draws.iter().map(|c| c.iter().map(|r| r[j]).collect()).collect())
    }

    /// Diagnostics with `target` as the headline parameter. Columns named
    /// `alpha[0]` are left out of the multivariate ESS (simplex constraint).
    pub fn report(&self, method: &str, target: &str) -> Result<DiagnosticsReport> {
        let cols: Vec<usize> = (0..self.param_names.len())
            .filter(|&j| self.param_names[j] != "alpha[0]")
            .collect();
        DiagnosticsReport::from_chains(
            method,
            &self.draws,
            &self.param_names,
            target,
            &cols,
            self.accept_rates.clone(),
            self.wall_time_sec,
        )
    }
}

/// Adaptive random-walk Metropolis block.
#[derive(Debug, Clone)]
struct RwBlock {
    dim: usize,
    log_scale: f64,
    /// Lower Cholesky factor of the proposal shape.
    chol: DMatrix<f64>,
    target: f64,
    window_accept: usize,
    window_total: usize,
    windows: usize,
    history: Vec<Vec<f64>>,
    learned_cov: bool,
    accepted: usize,
    proposed: usize,
}

impl RwBlock {
    fn new(dim: usize, step: f64, cfg: &MwgConfig) -> Self {
        Self {
            dim,
            log_scale: step.ln(),
            chol: DMatrix::identity(dim, dim),
            target: if dim == 1 { cfg.target_accept } else { cfg.target_accept_paired },
            window_accept: 0,
            window_total: 0,
            windows: 0,
            history: Vec::new(),
            learned_cov: false,
            accepted: 0,
            proposed: 0,
        }
    }

    fn propose(&self, current: &[f64], rng: &mut RngStream) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim).map(|_| rng.standard_normal()).collect();
        let s = self.log_scale.exp();
        (0..self.dim)
            .map(|i| current[i] + s * (0..=i).map(|j| self.chol[(i, j)] * z[j]).sum::<f64>())
            .collect()
    }

    /// One Metropolis step; returns whether the proposal was accepted.
    fn step<F>(&mut self, current: &mut Vec<f64>, current_lp: &mut f64, log_target: F, rng: &mut RngStream) -> bool
    where
        F: Fn(&[f64]) -> f64,
    {
        let prop = self.propose(current, rng);
        let lp = log_target(&prop);
        let accept = lp.is_finite() && (lp >= *current_lp || rng.uniform_open().ln() < lp - *current_lp);
        if accept {
            *current = prop;
            *current_lp = lp;
        }
        self.window_total += 1;
        self.proposed += 1;
        if accept {
            self.window_accept += 1;
            self.accepted += 1;
        }
        accept
    }

    /// Burn-in bookkeeping after the block's update for iteration `iter`.
    fn tune(&mut self, iter: usize, burnin: usize, state: &[f64], cfg: &MwgConfig) {
        if !cfg.adapt {
            return;
        }
        if self.dim > 1 && iter >= burnin / 4 {
            self.history.push(state.to_vec());
        }
        if self.window_total < cfg.adapt_window {
            return;
        }
        self.windows += 1;
        let rate = self.window_accept as f64 / self.window_total as f64;
        self.log_scale += (rate - self.target) / (self.windows as f64).sqrt();
        self.window_accept = 0;
        self.window_total = 0;
        if self.dim > 1 && self.history.len() >= (100).max(10 * self.dim) && self.windows % 2 == 0 {
            if let Some(l) = empirical_chol(&self.history) {
                self.chol = l;
                if !self.learned_cov {
                    self.log_scale = (2.38 / (self.dim as f64).sqrt()).ln();
                    self.learned_cov = true;
                }
            }
        }
    }

    fn end_burnin(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
        self.history = Vec::new();
    }

    fn accept_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

fn empirical_chol(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let dim = rows[0].len();
    // a sticky chain gives a useless covariance estimate
    let moves = rows.windows(2).filter(|w| w[0] != w[1]).count();
    if moves < 20 * dim {
        return None;
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for j in 0..dim {
            mean[j] += r[j] / n;
        }
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for r in rows {
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    let ridge = 1e-10 * (0..dim).map(|i| cov[(i, i)]).fold(0.0, f64::max).max(1e-300);
    for i in 0..dim {
        cov[(i, i)] += ridge;
    }
    cov.cholesky().map(|c| c.l())
}

fn check_run_shape(chains: usize, iters: usize) -> Result<()> {
    if chains == 0 || iters == 0 {
        return Err(Error::Config("chains and kept iterations must be positive".into()));
    }
    Ok(())
}

/// `Pr(Y = 1 | x, R = 0, θ)` for one cell.
pub fn impute_prob_sat(beta: f64, gamma: f64, delta: f64) -> f64 {
    let gs = expit(logit(gamma) + delta);
    let one = beta * (1.0 - gs);
    let zero = (1.0 - beta) * (1.0 - gamma);
    one / (one + zero)
}

/// Draws a missing binary outcome for a row in `cell`.
pub fn impute_y_sat(cell: CellIndex, theta: &SatTheta, rng: &mut RngStream) -> bool {
    let x = cell.value();
    rng.bernoulli(impute_prob_sat(theta.beta()[x], theta.gamma()[x], theta.delta()[x]))
}

/// Complete-data log-target of `(logit γ, δ)` for one cell, given the
/// `(y, r)` counts `[y1r1, y1r0, y0r1, y0r0]`.
fn sat_block_log_target(u: f64, delta: f64, counts: [u64; 4], sigma: f64) -> f64 {
    let [a, b, c, e] = counts.map(|v| v as f64);
    let s = u + delta;
    let mut lp = normal_logpdf(delta, 0.0, sigma);
    // uniform prior on γ, expressed on the logit scale
    lp += log_expit(u) + log1m_expit(u);
    if a > 0.0 {
        lp += a * log_expit(s);
    }
    if b > 0.0 {
        lp += b * log1m_expit(s);
    }
    if c > 0.0 {
        lp += c * log_expit(u);
    }
    if e > 0.0 {
        lp += e * log1m_expit(u);
    }
    lp
}

/// Data that stays fixed across sweeps of the saturated-model sampler.
struct SatData {
    k: usize,
    cell_counts: Vec<u64>,
    obs_y1: Vec<u64>,
    obs_y0: Vec<u64>,
    missing_cells: Vec<usize>,
}

impl SatData {
    fn new(d: &IncompleteDataset) -> Result<Self> {
        let p = d.require_sat()?;
        let k = 1usize << p;
        let mut s = Self {
            k,
            cell_counts: vec![0; k],
            obs_y1: vec![0; k],
            obs_y0: vec![0; k],
            missing_cells: Vec::new(),
        };
        for (&x, y) in d.cells().iter().zip(d.y()) {
            s.cell_counts[x] += 1;
            match y {
                Some(1) => s.obs_y1[x] += 1,
                Some(_) => s.obs_y0[x] += 1,
                None => s.missing_cells.push(x),
            }
        }
        Ok(s)
    }
}

struct SatState {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// `(logit γ[x], δ[x])` per cell.
    blocks: Vec<Vec<f64>>,
    block_lp: Vec<f64>,
    /// Imputed `Y = 1` counts among missing rows, per cell.
    miss_y1: Vec<u64>,
    miss_y0: Vec<u64>,
}

impl SatState {
    fn initial(data: &SatData, prior: &PriorSpec, rng: &mut RngStream) -> Self {
        let k = data.k;
        let alpha = rng.dirichlet(&data.cell_counts.iter().map(|&c| 1.0 + c as f64).collect::<Vec<_>>());
        let beta = (0..k).map(|_| 0.2 + 0.6 * rng.uniform()).collect();
        let blocks = (0..k)
            .map(|_| vec![logit(0.2 + 0.6 * rng.uniform()), rng.normal(0.0, prior.sigma_delta)])
            .collect();
        Self {
            alpha,
            beta,
            blocks,
            block_lp: vec![f64::NAN; k],
            miss_y1: vec![0; k],
            miss_y0: vec![0; k],
        }
    }

    fn gamma(&self, x: usize) -> f64 {
        expit(self.blocks[x][0])
    }

    fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(4 * self.alpha.len());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v.extend((0..self.alpha.len()).map(|x| self.gamma(x)));
        v.extend(self.blocks.iter().map(|b| b[1]));
        v
    }
}

/// One sweep; Metropolis blocks are skipped when `blocks` is `None`.
fn sat_sweep(
    data: &SatData,
    prior: &PriorSpec,
    st: &mut SatState,
    blocks: Option<&mut [RwBlock]>,
    rng: &mut RngStream,
) {
    let k = data.k;
    // (i) missing outcomes, one Bernoulli per row
    let prob: Vec<f64> = (0..k)
        .map(|x| impute_prob_sat(st.beta[x], st.gamma(x), st.blocks[x][1]))
        .collect();
    st.miss_y1.iter_mut().for_each(|v| *v = 0);
    st.miss_y0.iter_mut().for_each(|v| *v = 0);
    for &x in &data.missing_cells {
        if rng.uniform() < prob[x] {
            st.miss_y1[x] += 1;
        } else {
            st.miss_y0[x] += 1;
        }
    }
    // (ii) cell probabilities
    let conc: Vec<f64> = data.cell_counts.iter().map(|&c| 1.0 + c as f64).collect();
    st.alpha = rng.dirichlet(&conc);
    // (iii) outcome probabilities
    for x in 0..k {
        let ones = (data.obs_y1[x] + st.miss_y1[x]) as f64;
        let zeros = (data.obs_y0[x] + st.miss_y0[x]) as f64;
        st.beta[x] = rng.beta(1.0 + ones, 1.0 + zeros);
    }
    // (iv) observation model
    if let Some(blocks) = blocks {
        let sigma = prior.sigma_delta;
        for x in 0..k {
            let counts = [data.obs_y1[x], st.miss_y1[x], data.obs_y0[x], st.miss_y0[x]];
            let target = |v: &[f64]| sat_block_log_target(v[0], v[1], counts, sigma);
            // the imputed counts changed, so the stored value is stale
            st.block_lp[x] = target(&st.blocks[x]);
            let mut lp = st.block_lp[x];
            blocks[x].step(&mut st.blocks[x], &mut lp, target, rng);
            st.block_lp[x] = lp;
        }
    }
}

fn sat_block_names(k: usize) -> Vec<String> {
    (0..k).map(|x| format!("gamma_delta[{x}]")).collect()
}

/// Metropolis-within-Gibbs on the original parameterization of the saturated
/// model. Draws are `(α, β, γ, δ)` in [`SatTheta::param_names`] order.
pub fn gibbs_sat(
    d: &IncompleteDataset,
    prior: &PriorSpec,
    chains: usize,
    iters: usize,
    burnin: usize,
    cfg: &MwgConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    let p = d.require_sat()?;
    check_run_shape(chains, iters)?;
    let data = SatData::new(d)?;
    let k = data.k;
    cfg.validate(k)?;
    let streams = rng.split(chains);

    let start = Instant::now();
    let mut draws = Vec::with_capacity(chains);
    let mut accept = vec![0.0; k];
    for mut crng in streams {
        let mut st = SatState::initial(&data, prior, &mut crng);
        let mut blocks: Vec<RwBlock> = (0..k).map(|b| RwBlock::new(2, cfg.step(b), cfg)).collect();
        for it in 0..burnin {
            sat_sweep(&data, prior, &mut st, Some(&mut blocks), &mut crng);
            for (b, state) in blocks.iter_mut().zip(&st.blocks) {
                b.tune(it, burnin, state, cfg);
            }
        }
        blocks.iter_mut().for_each(RwBlock::end_burnin);
        let mut kept = Vec::with_capacity(iters);
        for _ in 0..iters {
            sat_sweep(&data, prior, &mut st, Some(&mut blocks), &mut crng);
            kept.push(st.flat());
        }
        for (a, b) in accept.iter_mut().zip(&blocks) {
            *a += b.accept_rate() / chains as f64;
        }
        draws.push(kept);
    }
    let wall_time_sec = start.elapsed().as_secs_f64();
    Ok(ChainOutput {
        chains,
        iters_kept: iters,
        burnin,
        draws,
        param_names: SatTheta::param_names(p),
        accept_rates: sat_block_names(k).into_iter().zip(accept).collect(),
        wall_time_sec,
    })
}

/// `log Pois(y; μ)·(1 − expit(α0 + α1·y))` for `y = 0..=y_max`, normalized
/// into a CDF.
fn missing_y_cdf(theta: &CountTheta) -> Vec<f64> {
    let y_max = poisson_truncation(theta.mu());
    let logw: Vec<f64> = (0..=y_max as u64)
        .map(|y| poisson_logpmf(y, theta.mu()) + log1m_expit(theta.alpha0() + theta.alpha1() * y as f64))
        .collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    logw.iter()
        .map(|&l| {
            acc += (l - max).exp();
            acc
        })
        .collect()
}

/// Full conditional probabilities of a missing count, `y = 0..=y_max`.
pub fn missing_y_conditional(theta: &CountTheta) -> Vec<f64> {
    let cdf = missing_y_cdf(theta);
    let total = *cdf.last().expect("non-empty");
    let mut prev = 0.0;
    cdf.iter()
        .map(|&c| {
            let p = (c - prev) / total;
            prev = c;
            p
        })
        .collect()
}

/// Shared starting point of the count chains.
///
/// The observed-data posterior can have a second, slightly lower mode with
/// `α1` of the opposite sign, which random-walk chains do not cross. All
/// chains therefore start near the highest point of a profile over `λ` at the
/// convenience estimate of `(p, q)`, mapped back through `h*⁻¹`.
pub fn count_start(summary: &CountSummary, prior: &PriorSpec) -> Result<CountPhiLambda> {
    let n1 = summary.n_observed() as f64;
    let n = n1 + summary.n_missing as f64;
    let p = (n1 + 1.0) / (n + 2.0);
    let q = (summary.sum_observed() as f64 + 1.0) / (n1 + 1.0);
    let reach = (3.0 * prior.sigma_delta).min(2.0);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=240 {
        let lambda = -reach + 2.0 * reach * k as f64 / 240.0;
        let theta = inverse_pseudo(&CountPhiLambda::new(p, q, lambda)?)?;
        let lp = log_likelihood_count_summary(&theta, summary) + crate::model::log_prior_count(&theta, prior);
        if lp > best.0 {
            best = (lp, lambda);
        }
    }
    CountPhiLambda::new(p, q, best.1)
}

/// Per-chain start: `start` jittered by roughly one posterior SD in `(p, q)`.
fn jitter_start(start: &CountPhiLambda, summary: &CountSummary, rng: &mut RngStream) -> Result<CountPhiLambda> {
    let n = (summary.n_observed() + summary.n_missing) as f64;
    let sd_p = (start.p() * (1.0 - start.p()) / (n + 2.0)).sqrt();
    let sd_logq = 1.0 / (summary.sum_observed() as f64 + 1.0).sqrt();
    let p = (start.p() + sd_p * rng.standard_normal()).clamp(1e-6, 1.0 - 1e-6);
    let q = start.q() * (sd_logq * rng.standard_normal()).exp();
    let lambda = start.lambda() + 0.02 * rng.standard_normal();
    CountPhiLambda::new(p, q, lambda)
}

/// Data augmentation on `(μ, α0, α1)`. Draws are `(mu, alpha0, alpha1)`.
pub fn mcmc_count_original(
    d: &IncompleteDataset,
    prior: &PriorSpec,
    chains: usize,
    iters: usize,
    burnin: usize,
    cfg: &MwgConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    let summary = CountSummary::from_dataset(d)?;
    check_run_shape(chains, iters)?;
    cfg.validate(2)?;
    let n = summary.n_observed() + summary.n_missing;
    let sum_obs = summary.sum_observed();
    let n_missing = summary.n_missing as usize;
    let alpha0_sd = prior.alpha0_var.sqrt();
    let sigma = prior.sigma_delta;
    let streams = rng.split(chains);

    let clock = Instant::now();
    let start = count_start(&summary, prior)?;
    let mut draws = Vec::with_capacity(chains);
    let mut acc_mu = 0.0;
    let mut acc_alpha = 0.0;
    for mut crng in streams {
        let init = inverse_pseudo(&jitter_start(&start, &summary, &mut crng)?)?;
        let mut log_mu = vec![init.mu().ln()];
        let mut alpha = vec![init.alpha0(), init.alpha1()];
        let mut mu_block = RwBlock::new(1, cfg.step(0), cfg);
        let mut alpha_block = RwBlock::new(2, cfg.step(1), cfg);
        let mut missing_hist: Vec<u64> = Vec::new();
        let mut kept = Vec::with_capacity(iters);

        for it in 0..burnin + iters {
            // missing outcomes from their discrete full conditional
            let theta = CountTheta::new(log_mu[0].exp(), alpha[0], alpha[1])?;
            let cdf = missing_y_cdf(&theta);
            let total = *cdf.last().expect("non-empty");
            missing_hist.clear();
            missing_hist.resize(cdf.len(), 0);
            let mut sum_missing = 0u64;
            for _ in 0..n_missing {
                let u = crng.uniform() * total;
                let y = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                missing_hist[y] += 1;
                sum_missing += y as u64;
            }

            // log μ given the complete outcomes: Gamma(1,1) prior plus Jacobian
            let s = (sum_obs + sum_missing) as f64;
            let nf = n as f64;
            let mu_target = |v: &[f64]| {
                let mu = v[0].exp();
                s * v[0] - nf * mu - mu + v[0]
            };
            let mut lp = mu_target(&log_mu);
            mu_block.step(&mut log_mu, &mut lp, mu_target, &mut crng);

            // (α0, α1) given the complete (y, r) table
            let hist_obs = &summary.observed;
            let hist_mis = &missing_hist;
            let alpha_target = |v: &[f64]| {
                let mut lp = normal_logpdf(v[0], 0.0, alpha0_sd) + normal_logpdf(v[1], 0.0, sigma);
                for (y, &c) in hist_obs.iter().enumerate() {
                    if c > 0 {
                        lp += c as f64 * log_expit(v[0] + v[1] * y as f64);
                    }
                }
                for (y, &c) in hist_mis.iter().enumerate() {
                    if c > 0 {
                        lp += c as f64 * log1m_expit(v[0] + v[1] * y as f64);
                    }
                }
                lp
            };
            let mut lp = alpha_target(&alpha);
            alpha_block.step(&mut alpha, &mut lp, alpha_target, &mut crng);

            if it < burnin {
                mu_block.tune(it, burnin, &log_mu, cfg);
                alpha_block.tune(it, burnin, &alpha, cfg);
                if it + 1 == burnin {
                    mu_block.end_burnin();
                    alpha_block.end_burnin();
                }
            } else {
                kept.push(vec![log_mu[0].exp(), alpha[0], alpha[1]]);
            }
        }
        acc_mu += mu_block.accept_rate() / chains as f64;
        acc_alpha += alpha_block.accept_rate() / chains as f64;
        draws.push(kept);
    }
    let wall_time_sec = clock.elapsed().as_secs_f64();
    let mut accept_rates = BTreeMap::new();
    accept_rates.insert("log_mu".to_string(), acc_mu);
    accept_rates.insert("alpha0_alpha1".to_string(), acc_alpha);
    Ok(ChainOutput {
        chains,
        iters_kept: iters,
        burnin,
        draws,
        param_names: CountTheta::param_names(),
        accept_rates,
        wall_time_sec,
    })
}

/// Log-target of the pseudo-transparent chain: observed-data likelihood at
/// `θ = h*⁻¹(p, q, α1)` times Beta(1,1), Gamma(1,1) and Normal(0, σ²) priors.
fn pseudo_log_target(v: &[f64], summary: &CountSummary, sigma: f64) -> f64 {
    let (p, q, a1) = (v[0], v[1], v[2]);
    if !(p > 0.0 && p < 1.0 && q > 0.0) || !a1.is_finite() {
        return f64::NEG_INFINITY;
    }
    let Ok(pl) = CountPhiLambda::new(p, q, a1) else {
        return f64::NEG_INFINITY;
    };
    let Ok(theta) = inverse_pseudo(&pl) else {
        return f64::NEG_INFINITY;
    };
    let ll = log_likelihood_count_summary(&theta, summary);
    if !ll.is_finite() {
        return f64::NEG_INFINITY;
    }
    ll - q + normal_logpdf(a1, 0.0, sigma)
}

/// Random walk on `(p, q, α1)` scored with the exact observed-data
/// likelihood, followed each sweep by an independence proposal for `α1` from
/// its prior. Draws are reported as `(mu, alpha0, alpha1)`.
pub fn mcmc_count_pseudo(
    d: &IncompleteDataset,
    prior: &PriorSpec,
    chains: usize,
    iters: usize,
    burnin: usize,
    cfg: &MwgConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    let summary = CountSummary::from_dataset(d)?;
    check_run_shape(chains, iters)?;
    cfg.validate(1)?;
    let sigma = prior.sigma_delta;
    let streams = rng.split(chains);

    let clock = Instant::now();
    let start = count_start(&summary, prior)?;
    let mut draws = Vec::with_capacity(chains);
    let mut acc = 0.0;
    let mut acc_indep = 0.0;
    for mut crng in streams {
        let init = jitter_start(&start, &summary, &mut crng)?;
        let mut state = vec![init.p(), init.q(), init.lambda()];
        let target = |v: &[f64]| pseudo_log_target(v, &summary, sigma);
        let mut lp = target(&state);
        let mut block = RwBlock::new(3, cfg.step(0), cfg);
        let mut kept = Vec::with_capacity(iters);
        let mut indep_accepted = 0usize;
        for it in 0..burnin + iters {
            block.step(&mut state, &mut lp, target, &mut crng);
            // λ is only weakly informed given (p, q): propose it afresh from
            // its prior so the chain can cross between the λ modes
            let cand = [state[0], state[1], crng.normal(0.0, sigma)];
            let lp_cand = target(&cand);
            let log_ratio =
                lp_cand - normal_logpdf(cand[2], 0.0, sigma) - (lp - normal_logpdf(state[2], 0.0, sigma));
            if crng.uniform().ln() < log_ratio {
                state[2] = cand[2];
                lp = lp_cand;
                indep_accepted += 1;
            }
            if it < burnin {
                block.tune(it, burnin, &state, cfg);
                if it + 1 == burnin {
                    block.end_burnin();
                }
            } else {
                let theta = inverse_pseudo(&CountPhiLambda::new(state[0], state[1], state[2])?)?;
                kept.push(theta.to_flat());
            }
        }
        acc += block.accept_rate() / chains as f64;
        acc_indep += indep_accepted as f64 / (burnin + iters) as f64 / chains as f64;
        draws.push(kept);
    }
    let wall_time_sec = clock.elapsed().as_secs_f64();
    let mut accept_rates = BTreeMap::new();
    accept_rates.insert("p_q_alpha1".to_string(), acc);
    accept_rates.insert("alpha1_prior".to_string(), acc_indep);
    Ok(ChainOutput {
        chains,
        iters_kept: iters,
        burnin,
        draws,
        param_names: CountTheta::param_names(),
        accept_rates,
        wall_time_sec,
    })
}
