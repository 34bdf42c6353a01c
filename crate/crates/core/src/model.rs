//! Data-generating models, parameter blocks, priors and likelihoods.
//!
//! Saturated model (covariate cell `x`, outcome `Y`, observation flag `R`):
//!
//! ```text
//! x ~ Categorical(α)
//! Y | x ~ Bernoulli(β[x])
//! R | x, Y=0 ~ Bernoulli(γ[x])
//! R | x, Y=1 ~ Bernoulli(γ*[x]),  γ*[x] = expit(logit(γ[x]) + δ[x])
//! ```
//!
//! Count model: `Y ~ Poisson(μ)`, `R | Y ~ Bernoulli(expit(α0 + α1·Y))`.
//! In both, `Y` is observed exactly when `R = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    expit, ln_gamma, log1m_expit, log_expit, log_sum_exp, logit, normal_logpdf, poisson_logpmf,
    poisson_truncation,
};
use crate::stochastics::RngStream;

pub const SIMPLEX_TOL: f64 = 1e-12;

/// Largest supported number of binary covariates.
pub const MAX_COVARIATES: usize = 16;

fn in_unit_open(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn check_simplex(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|&a| !in_unit_open(a) && !(v.len() == 1 && a == 1.0)) {
        return Err(Error::InvalidParameter(format!("{name} has a component outside (0,1)")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidParameter(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

fn cells_for(p: usize) -> Result<usize> {
    if p == 0 || p > MAX_COVARIATES {
        return Err(Error::InvalidParameter(format!(
            "number of covariates must be in 1..={MAX_COVARIATES}, got {p}"
        )));
    }
    Ok(1 << p)
}

fn covariates_for(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "cell vectors must have length 2^p with p >= 1, got {len}"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Index of a covariate cell: bit `k` of the value is covariate `X_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    value: usize,
    p: usize,
}

impl CellIndex {
    pub fn new(value: usize, p: usize) -> Result<Self> {
        let k = cells_for(p)?;
        if value >= k {
            return Err(Error::InvalidParameter(format!("cell {value} out of range for p = {p}")));
        }
        Ok(Self { value, p })
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn p(self) -> usize {
        self.p
    }

    pub fn bits(self) -> Vec<u8> {
        (0..self.p).map(|k| ((self.value >> k) & 1) as u8).collect()
    }
}

/// Base-2 encoding of a binary covariate vector.
pub fn cell_index(x_bits: &[u8]) -> Result<CellIndex> {
    let p = x_bits.len();
    cells_for(p)?;
    let mut value = 0usize;
    for (k, &b) in x_bits.iter().enumerate() {
        match b {
            0 => {}
            1 => value |= 1 << k,
            other => {
                return Err(Error::InvalidParameter(format!("covariate bit {k} is {other}")));
            }
        }
    }
    Ok(CellIndex { value, p })
}

/// Original parameterization of the saturated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatTheta {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    delta: Vec<f64>,
}

impl SatTheta {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        let k = alpha.len();
        covariates_for(k)?;
        if beta.len() != k || gamma.len() != k || delta.len() != k {
            return Err(Error::InvalidParameter("alpha, beta, gamma, delta lengths differ".into()));
        }
        check_simplex("alpha", &alpha)?;
        if !beta.iter().all(|&b| in_unit_open(b)) {
            return Err(Error::InvalidParameter("beta component outside (0,1)".into()));
        }
        if !gamma.iter().all(|&g| in_unit_open(g)) {
            return Err(Error::InvalidParameter("gamma component outside (0,1)".into()));
        }
        if !delta.iter().all(|d| d.is_finite()) {
            return Err(Error::InvalidParameter("delta component not finite".into()));
        }
        Ok(Self { alpha, beta, gamma, delta })
    }

    /// All cell probabilities 1/2^p, every β and γ 1/2, δ = 0.
    pub fn uniform(p: usize) -> Result<Self> {
        let k = cells_for(p)?;
        Self::new(vec![1.0 / k as f64; k], vec![0.5; k], vec![0.5; k], vec![0.0; k])
    }

    pub fn p(&self) -> usize {
        self.alpha.len().trailing_zeros() as usize
    }

    pub fn cells(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// `(α, β, γ, δ)` flattened in that order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(4 * self.cells());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.gamma);
        v.extend_from_slice(&self.delta);
        v
    }

    pub fn param_names(p: usize) -> Vec<String> {
        let k = 1usize << p;
        ["alpha", "beta", "gamma", "delta"]
            .iter()
            .flat_map(|name| (0..k).map(move |x| format!("{name}[{x}]")))
            .collect()
    }

    /// Draw from the target prior: Dirichlet(1) cells, uniform β and γ, Normal(0, σ²) δ.
    pub fn sample_prior(p: usize, prior: &PriorSpec, rng: &mut RngStream) -> Result<Self> {
        let k = cells_for(p)?;
        loop {
            let alpha = rng.dirichlet(&vec![1.0; k]);
            let beta: Vec<f64> = (0..k).map(|_| rng.uniform_open()).collect();
            let gamma: Vec<f64> = (0..k).map(|_| rng.uniform_open()).collect();
            let delta: Vec<f64> = (0..k).map(|_| rng.normal(0.0, prior.sigma_delta)).collect();
            // a Dirichlet component can underflow to exactly zero; redraw
            if let Ok(theta) = Self::new(alpha, beta, gamma, delta) {
                return Ok(theta);
            }
        }
    }
}

/// Transparent parameterization of the saturated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatPhiLambda {
    epsilon: f64,
    zeta: Vec<f64>,
    eta: Vec<f64>,
    xi: Vec<f64>,
    lambda: Vec<f64>,
}

impl SatPhiLambda {
    pub fn new(epsilon: f64, zeta: Vec<f64>, eta: Vec<f64>, xi: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        let k = zeta.len();
        covariates_for(k)?;
        if eta.len() != k || xi.len() != k || lambda.len() != k {
            return Err(Error::InvalidParameter("zeta, eta, xi, lambda lengths differ".into()));
        }
        if !in_unit_open(epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside (0,1)")));
        }
        check_simplex("zeta", &zeta)?;
        check_simplex("eta", &eta)?;
        if !xi.iter().all(|&v| in_unit_open(v)) {
            return Err(Error::InvalidParameter("xi component outside (0,1)".into()));
        }
        if !lambda.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("lambda component not finite".into()));
        }
        Ok(Self { epsilon, zeta, eta, xi, lambda })
    }

    pub fn p(&self) -> usize {
        self.zeta.len().trailing_zeros() as usize
    }

    pub fn cells(&self) -> usize {
        self.zeta.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Same `φ`, different `λ`.
    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self> {
        Self::new(self.epsilon, self.zeta.clone(), self.eta.clone(), self.xi.clone(), lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountTheta {
    mu: f64,
    alpha0: f64,
    alpha1: f64,
}

impl CountTheta {
    pub fn new(mu: f64, alpha0: f64, alpha1: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        if !alpha0.is_finite() || !alpha1.is_finite() {
            return Err(Error::InvalidParameter("alpha0/alpha1 must be finite".into()));
        }
        Ok(Self { mu, alpha0, alpha1 })
    }

    /// μ = 5 with missingness coefficients standardized to the Poisson(5) scale:
    /// α0 = −√5·ln 2, α1 = ln 2 / √5.
    pub fn reference() -> Self {
        let s5 = 5f64.sqrt();
        let ln2 = std::f64::consts::LN_2;
        Self { mu: 5.0, alpha0: -s5 * ln2, alpha1: ln2 / s5 }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn to_flat(&self) -> Vec<f64> {
        vec![self.mu, self.alpha0, self.alpha1]
    }

    pub fn param_names() -> Vec<String> {
        vec!["mu".into(), "alpha0".into(), "alpha1".into()]
    }

    /// `Pr(R = 1 | Y = y)`.
    #[inline]
    pub fn observe_prob(&self, y: u64) -> f64 {
        expit(self.alpha0 + self.alpha1 * y as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountPhiLambda {
    p: f64,
    q: f64,
    lambda: f64,
}

impl CountPhiLambda {
    pub fn new(p: f64, q: f64, lambda: f64) -> Result<Self> {
        if !in_unit_open(p) {
            return Err(Error::InvalidParameter(format!("p = {p} outside (0,1)")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        Ok(Self { p, q, lambda })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    Sat { p: usize },
    Count,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::Sat { .. } => "sat",
            DatasetKind::Count => "count",
        }
    }
}

/// Rows of `(cell, y, r)`; `y` is `Some` exactly when `r = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteDataset {
    kind: DatasetKind,
    cells: Vec<usize>,
    y: Vec<Option<u64>>,
}

impl IncompleteDataset {
    pub fn new_sat(p: usize, cells: Vec<usize>, y: Vec<Option<u64>>) -> Result<Self> {
        let k = cells_for(p)?;
        if cells.len() != y.len() {
            return Err(Error::InvalidParameter("cells and y differ in length".into()));
        }
        if let Some(&bad) = cells.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidParameter(format!("cell {bad} out of range for p = {p}")));
        }
        if let Some(bad) = y.iter().flatten().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!("binary outcome expected, got {bad}")));
        }
        Ok(Self { kind: DatasetKind::Sat { p }, cells, y })
    }

    pub fn new_count(y: Vec<Option<u64>>) -> Self {
        Self { kind: DatasetKind::Count, cells: Vec::new(), y }
    }

    pub fn empty_sat(p: usize) -> Result<Self> {
        Self::new_sat(p, Vec::new(), Vec::new())
    }

    pub fn kind(&self) -> DatasetKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Cell of each row; empty for count data.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn y(&self) -> &[Option<u64>] {
        &self.y
    }

    pub fn r(&self) -> impl Iterator<Item = bool> + '_ {
        self.y.iter().map(Option::is_some)
    }

    pub fn n_observed(&self) -> usize {
        self.y.iter().filter(|v| v.is_some()).count()
    }

    pub(crate) fn require_sat(&self) -> Result<usize> {
        match self.kind {
            DatasetKind::Sat { p } => Ok(p),
            DatasetKind::Count => Err(Error::KindMismatch { expected: "sat", found: "count" }),
        }
    }

    pub(crate) fn require_count(&self) -> Result<()> {
        match self.kind {
            DatasetKind::Count => Ok(()),
            DatasetKind::Sat { .. } => Err(Error::KindMismatch { expected: "count", found: "sat" }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SatSufficientStats {
    pub p: usize,
    pub n_r1: u64,
    pub n_r0: u64,
    pub n_cell_r0: Vec<u64>,
    pub n_cell_r1: Vec<u64>,
    pub n_cell_y1_r1: Vec<u64>,
    pub n_cell_y0_r1: Vec<u64>,
}

impl SatSufficientStats {
    pub fn cells(&self) -> usize {
        self.n_cell_r0.len()
    }

    pub fn n(&self) -> u64 {
        self.n_r0 + self.n_r1
    }
}

pub fn sufficient_stats_sat(d: &IncompleteDataset) -> Result<SatSufficientStats> {
    let p = d.require_sat()?;
    let k = 1usize << p;
    let mut s = SatSufficientStats {
        p,
        n_r1: 0,
        n_r0: 0,
        n_cell_r0: vec![0; k],
        n_cell_r1: vec![0; k],
        n_cell_y1_r1: vec![0; k],
        n_cell_y0_r1: vec![0; k],
    };
    for (&x, y) in d.cells.iter().zip(&d.y) {
        match y {
            None => {
                s.n_r0 += 1;
                s.n_cell_r0[x] += 1;
            }
            Some(v) => {
                s.n_r1 += 1;
                s.n_cell_r1[x] += 1;
                if *v == 1 {
                    s.n_cell_y1_r1[x] += 1;
                } else {
                    s.n_cell_y0_r1[x] += 1;
                }
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Prior SD of each δ component (saturated) or of α1 (count).
    pub sigma_delta: f64,
    /// Prior variance of α0 in the count model.
    pub alpha0_var: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { sigma_delta: 0.5, alpha0_var: 10.0 }
    }
}

impl PriorSpec {
    pub fn new(sigma_delta: f64, alpha0_var: f64) -> Result<Self> {
        if !(sigma_delta > 0.0 && sigma_delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma_delta}")));
        }
        if !(alpha0_var > 0.0 && alpha0_var.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha0 variance must be positive, got {alpha0_var}")));
        }
        Ok(Self { sigma_delta, alpha0_var })
    }

    pub fn with_sigma(sigma_delta: f64) -> Result<Self> {
        Self::new(sigma_delta, 10.0)
    }
}

/// `Pr(cell = x, Y = y, R = r)` for every outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    probs: Vec<[[f64; 2]; 2]>,
}

impl JointTable {
    pub fn cells(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, r: usize) -> f64 {
        self.probs[x][y][r]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flat_map(|c| c.iter().flatten()).sum()
    }

    pub fn pr_r1(&self) -> f64 {
        self.probs.iter().map(|c| c[0][1] + c[1][1]).sum()
    }
}

pub fn joint_cell_probs(theta: &SatTheta) -> JointTable {
    let probs = (0..theta.cells())
        .map(|x| {
            let a = theta.alpha[x];
            let b = theta.beta[x];
            let g = theta.gamma[x];
            let gs = expit(logit(g) + theta.delta[x]);
            [
                [a * (1.0 - b) * (1.0 - g), a * (1.0 - b) * g],
                [a * b * (1.0 - gs), a * b * gs],
            ]
        })
        .collect();
    JointTable { probs }
}

pub fn simulate_sat(theta: &SatTheta, n: usize, rng: &mut RngStream) -> IncompleteDataset {
    let k = theta.cells();
    let gamma_star: Vec<f64> =
        (0..k).map(|x| expit(logit(theta.gamma[x]) + theta.delta[x])).collect();
    let mut cells = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.categorical(&theta.alpha);
        let y = rng.bernoulli(theta.beta[x]);
        let pr_obs = if y { gamma_star[x] } else { theta.gamma[x] };
        let r = rng.bernoulli(pr_obs);
        cells.push(x);
        ys.push(r.then_some(y as u64));
    }
    IncompleteDataset { kind: DatasetKind::Sat { p: theta.p() }, cells, y: ys }
}

pub fn simulate_count(theta: &CountTheta, n: usize, rng: &mut RngStream) -> IncompleteDataset {
    let ys = (0..n)
        .map(|_| {
            let y = rng.poisson(theta.mu);
            let r = rng.bernoulli(theta.observe_prob(y));
            r.then_some(y)
        })
        .collect();
    IncompleteDataset::new_count(ys)
}

/// Dirichlet(1) on α, Unif(0,1) on β and γ, Normal(0, σ²) on δ; density with
/// respect to `(α without its first element, β, γ, δ)`.
pub fn log_prior_sat(theta: &SatTheta, prior: &PriorSpec) -> f64 {
    log_prior_sat_parts(&theta.alpha, &theta.beta, &theta.gamma, &theta.delta, prior)
}

pub(crate) fn log_prior_sat_parts(
    alpha: &[f64],
    beta: &[f64],
    gamma: &[f64],
    delta: &[f64],
    prior: &PriorSpec,
) -> f64 {
    let k = alpha.len();
    let alpha_ok = alpha.iter().all(|&a| a > 0.0)
        && (alpha.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL;
    if !alpha_ok
        || !beta.iter().all(|&b| in_unit_open(b))
        || !gamma.iter().all(|&g| in_unit_open(g))
        || !delta.iter().all(|d| d.is_finite())
    {
        return f64::NEG_INFINITY;
    }
    let dirichlet = ln_gamma(k as f64);
    dirichlet + delta.iter().map(|&d| normal_logpdf(d, 0.0, prior.sigma_delta)).sum::<f64>()
}

/// Gamma(1,1) on μ, Normal(0, alpha0_var) on α0, Normal(0, σ²) on α1.
pub fn log_prior_count(theta: &CountTheta, prior: &PriorSpec) -> f64 {
    if !(theta.mu > 0.0) {
        return f64::NEG_INFINITY;
    }
    -theta.mu
        + normal_logpdf(theta.alpha0, 0.0, prior.alpha0_var.sqrt())
        + normal_logpdf(theta.alpha1, 0.0, prior.sigma_delta)
}

/// Observed-data log-likelihood; missing outcomes are summed out.
pub fn log_likelihood_sat(theta: &SatTheta, d: &IncompleteDataset) -> Result<f64> {
    let stats = sufficient_stats_sat(d)?;
    if stats.cells() != theta.cells() {
        return Err(Error::InvalidParameter(format!(
            "dataset has p = {}, parameters have p = {}",
            stats.p,
            theta.p()
        )));
    }
    Ok(log_likelihood_sat_stats(theta, &stats))
}

pub fn log_likelihood_sat_stats(theta: &SatTheta, s: &SatSufficientStats) -> f64 {
    let table = joint_cell_probs(theta);
    let term = |count: u64, prob: f64| {
        if count == 0 {
            0.0
        } else {
            count as f64 * prob.ln()
        }
    };
    (0..table.cells())
        .map(|x| {
            term(s.n_cell_y1_r1[x], table.get(x, 1, 1))
                + term(s.n_cell_y0_r1[x], table.get(x, 0, 1))
                + term(s.n_cell_r0[x], table.get(x, 0, 0) + table.get(x, 1, 0))
        })
        .sum()
}

/// Observed outcomes tallied by value, plus the number of missing rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSummary {
    /// `observed[y]` = number of rows with `Y = y, R = 1`.
    pub observed: Vec<u64>,
    pub n_missing: u64,
}

impl CountSummary {
    pub fn from_dataset(d: &IncompleteDataset) -> Result<Self> {
        d.require_count()?;
        let mut observed = Vec::new();
        let mut n_missing = 0;
        for y in &d.y {
            match *y {
                None => n_missing += 1,
                Some(v) => {
                    let v = v as usize;
                    if v >= observed.len() {
                        observed.resize(v + 1, 0);
                    }
                    observed[v] += 1;
                }
            }
        }
        Ok(Self { observed, n_missing })
    }

    pub fn n_observed(&self) -> u64 {
        self.observed.iter().sum()
    }

    pub fn sum_observed(&self) -> u64 {
        self.observed.iter().enumerate().map(|(y, &c)| y as u64 * c).sum()
    }
}

/// `log Pr(R = 0)` under the count model, summing `Y` over `[0, y_max]`.
pub fn log_pr_missing_count(theta: &CountTheta) -> f64 {
    let y_max = poisson_truncation(theta.mu);
    let terms: Vec<f64> = (0..=y_max as u64)
        .map(|y| poisson_logpmf(y, theta.mu) + log1m_expit(theta.alpha0 + theta.alpha1 * y as f64))
        .collect();
    log_sum_exp(&terms)
}

pub fn log_likelihood_count(theta: &CountTheta, d: &IncompleteDataset) -> Result<f64> {
    let summary = CountSummary::from_dataset(d)?;
    Ok(log_likelihood_count_summary(theta, &summary))
}

pub fn log_likelihood_count_summary(theta: &CountTheta, s: &CountSummary) -> f64 {
    let observed: f64 = s
        .observed
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(y, &c)| {
            let y = y as u64;
            c as f64 * (poisson_logpmf(y, theta.mu) + log_expit(theta.alpha0 + theta.alpha1 * y as f64))
        })
        .sum();
    let missing = if s.n_missing > 0 {
        s.n_missing as f64 * log_pr_missing_count(theta)
    } else {
        0.0
    };
    observed + missing
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_theta() -> SatTheta {
        let ln2 = std::f64::consts::LN_2;
        SatTheta::new(vec![0.3, 0.7], vec![0.2, 0.6], vec![0.5, 0.5], vec![ln2, ln2]).unwrap()
    }

    #[test]
    fn cell_index_encoding() {
        assert_eq!(cell_index(&[0, 0, 0]).unwrap().value(), 0);
        assert_eq!(cell_index(&[1, 0, 0]).unwrap().value(), 1);
        assert_eq!(cell_index(&[1, 1, 0]).unwrap().value(), 3);
        for v in 0..32 {
            let c = CellIndex::new(v, 5).unwrap();
            assert_eq!(cell_index(&c.bits()).unwrap(), c);
        }
        assert!(cell_index(&[0, 2]).is_err());
        assert!(CellIndex::new(4, 2).is_err());
    }

    #[test]
    fn uniform_joint_is_flat() {
        let t = joint_cell_probs(&SatTheta::uniform(1).unwrap());
        for x in 0..2 {
            for y in 0..2 {
                for r in 0..2 {
                    assert_abs_diff_eq!(t.get(x, y, r), 0.125, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn joint_pr_r1_by_enumeration() {
        // cell 0: 0.3*(0.2*2/3 + 0.8*0.5) = 0.16; cell 1: 0.7*(0.6*2/3 + 0.4*0.5) = 0.42
        let t = joint_cell_probs(&example_theta());
        assert_abs_diff_eq!(t.pr_r1(), 0.58, epsilon = 1e-14);
        assert_abs_diff_eq!(t.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_delta_is_mar() {
        let mut rng = RngStream::new(3, 0);
        let prior = PriorSpec::default();
        for _ in 0..50 {
            let t = SatTheta::sample_prior(2, &prior, &mut rng).unwrap();
            let mar = SatTheta::new(t.alpha().to_vec(), t.beta().to_vec(), t.gamma().to_vec(), vec![0.0; 4]).unwrap();
            let tab = joint_cell_probs(&mar);
            for x in 0..4 {
                let r_given_y1 = tab.get(x, 1, 1) / (tab.get(x, 1, 0) + tab.get(x, 1, 1));
                let r_given_y0 = tab.get(x, 0, 1) / (tab.get(x, 0, 0) + tab.get(x, 0, 1));
                assert_abs_diff_eq!(r_given_y1, r_given_y0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sufficient_stats_hand_tally() {
        let empty = sufficient_stats_sat(&IncompleteDataset::empty_sat(2).unwrap()).unwrap();
        assert_eq!(empty.n(), 0);
        assert!(empty.n_cell_r0.iter().all(|&c| c == 0));

        let d = IncompleteDataset::new_sat(1, vec![0, 0, 0], vec![Some(1); 3]).unwrap();
        let s = sufficient_stats_sat(&d).unwrap();
        assert_eq!((s.n_r1, s.n_r0), (3, 0));
        assert_eq!(s.n_cell_y1_r1, vec![3, 0]);
        assert_eq!(s.n_cell_y0_r1, vec![0, 0]);

        // rows: (0,1,obs) (0,0,obs) (0,-,mis) (1,1,obs) (1,-,mis) (1,-,mis)
        let d = IncompleteDataset::new_sat(
            1,
            vec![0, 0, 0, 1, 1, 1],
            vec![Some(1), Some(0), None, Some(1), None, None],
        )
        .unwrap();
        let s = sufficient_stats_sat(&d).unwrap();
        assert_eq!((s.n_r1, s.n_r0), (3, 3));
        assert_eq!(s.n_cell_r0, vec![1, 2]);
        assert_eq!(s.n_cell_r1, vec![2, 1]);
        assert_eq!(s.n_cell_y1_r1, vec![1, 1]);
        assert_eq!(s.n_cell_y0_r1, vec![1, 0]);

        let count = IncompleteDataset::new_count(vec![Some(2)]);
        assert!(matches!(sufficient_stats_sat(&count), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn simulate_sat_edges() {
        let theta = SatTheta::uniform(2).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert!(simulate_sat(&theta, 0, &mut rng).is_empty());

        let a = simulate_sat(&theta, 500, &mut RngStream::new(8, 1));
        let b = simulate_sat(&theta, 500, &mut RngStream::new(8, 1));
        assert_eq!(a, b);
        assert!(a.r().zip(a.y()).all(|(r, y)| r == y.is_some()));
    }

    #[test]
    fn simulate_sat_cell_frequencies() {
        let theta = SatTheta::uniform(3).unwrap();
        let n = 100_000;
        let d = simulate_sat(&theta, n, &mut RngStream::new(21, 0));
        let mut counts = [0u64; 8];
        d.cells().iter().for_each(|&c| counts[c] += 1);
        let se = (0.125 * 0.875 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.125).abs() < 4.0 * se);
        }
    }

    #[test]
    fn simulate_count_saturated_observation() {
        let theta = CountTheta::new(5.0, 20.0, 0.0).unwrap();
        let d = simulate_count(&theta, 2000, &mut RngStream::new(2, 0));
        assert_eq!(d.n_observed(), 2000);
    }

    #[test]
    fn simulate_count_observed_fraction() {
        let theta = CountTheta::reference();
        // E[expit(α0 + α1 Y)] by truncated series, y <= 200
        let expected: f64 = (0..=200u64)
            .map(|y| poisson_logpmf(y, 5.0).exp() * theta.observe_prob(y))
            .sum();
        let n = 100_000;
        let d = simulate_count(&theta, n, &mut RngStream::new(4, 0));
        let frac = d.n_observed() as f64 / n as f64;
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((frac - expected).abs() < 4.0 * se, "{frac} vs {expected}");
        let again = simulate_count(&theta, n, &mut RngStream::new(4, 0));
        assert_eq!(d, again);
    }

    #[test]
    fn log_prior_sat_values() {
        let prior = PriorSpec::with_sigma(0.5).unwrap();
        let t = SatTheta::uniform(1).unwrap();
        // Dir(1,1) density is Γ(2) = 1; two Normal(0; 0, 0.25) factors
        let expected = 0.0 + 2.0 * (1.0 / (0.5 * (2.0 * std::f64::consts::PI).sqrt())).ln();
        assert_abs_diff_eq!(log_prior_sat(&t, &prior), expected, epsilon = 1e-12);

        let t3 = SatTheta::uniform(3).unwrap();
        let normal_part = 8.0 * (1.0 / (0.5 * (2.0 * std::f64::consts::PI).sqrt())).ln();
        assert_abs_diff_eq!(log_prior_sat(&t3, &prior), ln_gamma(8.0) + normal_part, epsilon = 1e-10);

        assert_eq!(
            log_prior_sat_parts(&[0.5, 0.5], &[1.2, 0.5], &[0.5, 0.5], &[0.0, 0.0], &prior),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log_likelihood_sat_cases() {
        let t = SatTheta::uniform(1).unwrap();
        let empty = IncompleteDataset::empty_sat(1).unwrap();
        assert_eq!(log_likelihood_sat(&t, &empty).unwrap(), 0.0);
        let one = IncompleteDataset::new_sat(1, vec![0], vec![Some(1)]).unwrap();
        assert_abs_diff_eq!(log_likelihood_sat(&t, &one).unwrap(), 0.125f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn fully_observed_likelihood_is_product_of_table_entries() {
        let theta = example_theta();
        let table = joint_cell_probs(&theta);
        let rows = [(0usize, 1u64), (1, 0), (1, 1), (0, 0), (1, 1)];
        let d = IncompleteDataset::new_sat(
            1,
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| Some(r.1)).collect(),
        )
        .unwrap();
        let product: f64 = rows.iter().map(|&(x, y)| table.get(x, y as usize, 1)).product();
        let ll = log_likelihood_sat(&theta, &d).unwrap();
        assert!((ll.exp() - product).abs() / product < 1e-10);
    }

    #[test]
    fn log_likelihood_count_cases() {
        let t = CountTheta::new(5.0, 0.0, 0.0).unwrap();
        let d = IncompleteDataset::new_count(vec![None]);
        assert_abs_diff_eq!(log_likelihood_count(&t, &d).unwrap(), 0.5f64.ln(), epsilon = 1e-12);
        assert_eq!(log_likelihood_count(&t, &IncompleteDataset::new_count(vec![])).unwrap(), 0.0);
        let d = IncompleteDataset::new_count(vec![Some(3)]);
        let expected = poisson_logpmf(3, 5.0) + 0.5f64.ln();
        assert_abs_diff_eq!(log_likelihood_count(&t, &d).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn reference_count_parameters() {
        let t = CountTheta::reference();
        assert_abs_diff_eq!(t.alpha0() + t.alpha1() * t.mu(), 0.0, epsilon = 1e-15);
    }
}
