//! Conjugate convenience posterior for the transparent parameters of the
//! saturated model.
//!
//! With Beta(1,1) on `ε`, Dirichlet(1) on `ζ` and `η`, Beta(1,1) on each `ξ[x]`
//! and the observed-data likelihood written in `φ`, every block updates in
//! closed form. `λ` is not informed by the data and keeps its Normal(0, σ²) prior.

use serde::Serialize;

use crate::model::{PriorSpec, SatPhiLambda, SatSufficientStats};
use crate::numeric::{ln_gamma, normal_logpdf};
use crate::stochastics::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatConveniencePosterior {
    pub eps_beta: (f64, f64),
    pub zeta_dir: Vec<f64>,
    pub eta_dir: Vec<f64>,
    pub xi_beta: Vec<(f64, f64)>,
    /// Standard deviation of the zero-mean Normal on each `λ[x]`.
    pub lambda_sd: f64,
}

impl SatConveniencePosterior {
    pub fn cells(&self) -> usize {
        self.zeta_dir.len()
    }
}

pub fn posterior_params_sat(stats: &SatSufficientStats, prior: &PriorSpec) -> SatConveniencePosterior {
    let plus_one = |v: &[u64]| v.iter().map(|&c| 1.0 + c as f64).collect::<Vec<_>>();
    SatConveniencePosterior {
        eps_beta: (1.0 + stats.n_r1 as f64, 1.0 + stats.n_r0 as f64),
        zeta_dir: plus_one(&stats.n_cell_r0),
        eta_dir: plus_one(&stats.n_cell_r1),
        xi_beta: stats
            .n_cell_y1_r1
            .iter()
            .zip(&stats.n_cell_y0_r1)
            .map(|(&a, &b)| (1.0 + a as f64, 1.0 + b as f64))
            .collect(),
        lambda_sd: prior.sigma_delta,
    }
}

fn draw_one(post: &SatConveniencePosterior, rng: &mut RngStream) -> SatPhiLambda {
    loop {
        let eps = rng.beta(post.eps_beta.0, post.eps_beta.1);
        let zeta = rng.dirichlet(&post.zeta_dir);
        let eta = rng.dirichlet(&post.eta_dir);
        let xi: Vec<f64> = post.xi_beta.iter().map(|&(a, b)| rng.beta(a, b)).collect();
        let lambda: Vec<f64> = (0..post.cells()).map(|_| rng.normal(0.0, post.lambda_sd)).collect();
        // Beta/Dirichlet draws can round onto the boundary for extreme counts
        if let Ok(pl) = SatPhiLambda::new(eps, zeta, eta, xi, lambda) {
            return pl;
        }
    }
}

/// `m` i.i.d. draws of `(φ, λ)` from the convenience posterior.
pub fn draw_phi_lambda_sat(post: &SatConveniencePosterior, m: usize, rng: &mut RngStream) -> Vec<SatPhiLambda> {
    (0..m).map(|_| draw_one(post, rng)).collect()
}

/// Convenience prior `log π*(φ)` with respect to the free coordinates of `φ`:
/// Beta(1,1) and Dirichlet(1) factors are constant on their support.
pub fn log_convenience_prior_phi(cells: usize) -> f64 {
    2.0 * ln_gamma(cells as f64)
}

/// `log π*(λ | φ)`: independent Normal(0, σ²) components.
pub fn log_convenience_prior_lambda(lambda: &[f64], sd: f64) -> f64 {
    lambda.iter().map(|&l| normal_logpdf(l, 0.0, sd)).sum()
}
