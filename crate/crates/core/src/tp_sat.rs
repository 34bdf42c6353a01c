//! Transparent reparameterization of the saturated model.
//!
//! `h(θ) = (φ, λ)` with `φ = (ε, ζ, η, ξ)` and `λ = δ`:
//!
//! ```text
//! ε    = Pr(R = 1)
//! ζ[x] = Pr(x | R = 0)
//! η[x] = Pr(x | R = 1)
//! ξ[x] = Pr(Y = 1 | x, R = 1)
//! ```
//!
//! The observed-data likelihood depends on `φ` only. The inverse is
//!
//! ```text
//! α = ε·η + (1 − ε)·ζ
//! β = [expit(logit ξ − δ)·(1 − ε)·ζ + ξ·ε·η] / α
//! γ = (1 − ξ)·η·ε / [(1 − β)·α]
//! ```
//!
//! and can leave the parameter space (γ > 1) for some `(φ, λ)`; those points
//! are reported as [`Error::OutOfImage`].

use crate::error::{Error, Result};
use crate::model::{SatPhiLambda, SatTheta, joint_cell_probs};
use crate::numeric::{expit, log_det_jacobian, logit};

/// Default finite-difference base step for the inverse-map Jacobian.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Smallest admissible cell probability produced by the inverse map.
pub const MIN_ALPHA: f64 = 1e-300;

pub fn gamma_star(gamma: &[f64], delta: &[f64]) -> Vec<f64> {
    gamma
        .iter()
        .zip(delta)
        .map(|(&g, &d)| expit(logit(g) + d))
        .collect()
}

pub fn forward_tp(theta: &SatTheta) -> Result<SatPhiLambda> {
    let k = theta.cells();
    let (alpha, beta, gamma) = (theta.alpha(), theta.beta(), theta.gamma());
    let gs = gamma_star(gamma, theta.delta());

    let mut joint_r1 = vec![0.0; k];
    let mut joint_r0 = vec![0.0; k];
    let mut joint_y1_r1 = vec![0.0; k];
    for x in 0..k {
        joint_y1_r1[x] = beta[x] * alpha[x] * gs[x];
        joint_r1[x] = joint_y1_r1[x] + (1.0 - beta[x]) * alpha[x] * gamma[x];
        joint_r0[x] = beta[x] * alpha[x] * (1.0 - gs[x]) + (1.0 - beta[x]) * alpha[x] * (1.0 - gamma[x]);
    }
    let epsilon: f64 = joint_r1.iter().sum();
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DegenerateMissingness(epsilon));
    }
    if let Some(x) = joint_r1.iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(format!("Pr(x = {x}, R = 1) is zero; xi undefined")));
    }
    let zeta: Vec<f64> = joint_r0.iter().map(|v| v / (1.0 - epsilon)).collect();
    let eta: Vec<f64> = joint_r1.iter().map(|v| v / epsilon).collect();
    let xi: Vec<f64> = (0..k).map(|x| joint_y1_r1[x] / (eta[x] * epsilon)).collect();
    SatPhiLambda::new(epsilon, zeta, eta, xi, theta.delta().to_vec())
}

/// Inverse map without domain checks: `(α, β, γ)` with `δ = λ`.
fn inverse_parts(
    epsilon: f64,
    zeta: &[f64],
    eta: &[f64],
    xi: &[f64],
    lambda: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = zeta.len();
    let mut alpha = Vec::with_capacity(k);
    let mut beta = Vec::with_capacity(k);
    let mut gamma = Vec::with_capacity(k);
    for x in 0..k {
        let a = epsilon * eta[x] + (1.0 - epsilon) * zeta[x];
        let y1_missing = expit(logit(xi[x]) - lambda[x]);
        let b = (y1_missing * (1.0 - epsilon) * zeta[x] + xi[x] * epsilon * eta[x]) / a;
        let g = (1.0 - xi[x]) * eta[x] * epsilon / ((1.0 - b) * a);
        alpha.push(a);
        beta.push(b);
        gamma.push(g);
    }
    (alpha, beta, gamma)
}

pub fn inverse_tp(pl: &SatPhiLambda) -> Result<SatTheta> {
    let (alpha, beta, gamma) = inverse_parts(pl.epsilon(), pl.zeta(), pl.eta(), pl.xi(), pl.lambda());
    if let Some(x) = alpha.iter().position(|&a| !(a > MIN_ALPHA)) {
        return Err(Error::OutOfImage(format!("alpha[{x}] = {}", alpha[x])));
    }
    if let Some(x) = beta.iter().position(|&b| !(b > 0.0 && b < 1.0)) {
        return Err(Error::OutOfImage(format!("beta[{x}] = {}", beta[x])));
    }
    if let Some(x) = gamma.iter().position(|&g| !(g > 0.0 && g < 1.0)) {
        return Err(Error::OutOfImage(format!("gamma[{x}] = {}", gamma[x])));
    }
    SatTheta::new(alpha, beta, gamma, pl.lambda().to_vec())
        .map_err(|e| Error::OutOfImage(e.to_string()))
}

/// Unconstrained coordinates of `(φ, λ)`.
///
/// Layout: `ε`, `ζ[1..]`, `η[1..]`, `ξ[0..]`, `λ[0..]`; the first element of
/// each simplex block is dropped and recovered as one minus the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeCoords {
    p: usize,
    values: Vec<f64>,
}

impl FreeCoords {
    pub fn dim(p: usize) -> usize {
        (1usize << (p + 2)) - 1
    }

    pub fn new(p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != Self::dim(p) {
            return Err(Error::InvalidParameter(format!(
                "expected {} free coordinates for p = {p}, got {}",
                Self::dim(p),
                values.len()
            )));
        }
        Ok(Self { p, values })
    }

    pub fn from_phi_lambda(pl: &SatPhiLambda) -> Self {
        let mut values = Vec::with_capacity(Self::dim(pl.p()));
        values.push(pl.epsilon());
        values.extend_from_slice(&pl.zeta()[1..]);
        values.extend_from_slice(&pl.eta()[1..]);
        values.extend_from_slice(pl.xi());
        values.extend_from_slice(pl.lambda());
        Self { p: pl.p(), values }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_phi_lambda(&self) -> Result<SatPhiLambda> {
        let (eps, zeta, eta, xi, lambda) = split_free(self.p, &self.values);
        SatPhiLambda::new(eps, zeta, eta, xi.to_vec(), lambda.to_vec())
    }
}

/// Reconstructs the simplex heads of a free-coordinate vector.
fn split_free(p: usize, v: &[f64]) -> (f64, Vec<f64>, Vec<f64>, &[f64], &[f64]) {
    let k = 1usize << p;
    let eps = v[0];
    let with_head = |tail: &[f64]| {
        let mut full = Vec::with_capacity(k);
        full.push(1.0 - tail.iter().sum::<f64>());
        full.extend_from_slice(tail);
        full
    };
    let zeta = with_head(&v[1..k]);
    let eta = with_head(&v[k..2 * k - 1]);
    let xi = &v[2 * k - 1..3 * k - 1];
    let lambda = &v[3 * k - 1..4 * k - 1];
    (eps, zeta, eta, xi, lambda)
}

/// `(α[1..], β, γ, δ)`: the free coordinates of `θ`.
pub fn theta_free_coords(theta: &SatTheta) -> Vec<f64> {
    let mut v = Vec::with_capacity(4 * theta.cells() - 1);
    v.extend_from_slice(&theta.alpha()[1..]);
    v.extend_from_slice(theta.beta());
    v.extend_from_slice(theta.gamma());
    v.extend_from_slice(theta.delta());
    v
}

/// `h⁻¹` between free-coordinate spaces, no domain checks.
pub fn inverse_free_map(p: usize, v: &[f64]) -> Vec<f64> {
    let (eps, zeta, eta, xi, lambda) = split_free(p, v);
    let (alpha, beta, gamma) = inverse_parts(eps, &zeta, &eta, xi, lambda);
    let mut out = Vec::with_capacity(v.len());
    out.extend_from_slice(&alpha[1..]);
    out.extend(beta);
    out.extend(gamma);
    out.extend_from_slice(lambda);
    out
}

/// `log |det ∇h⁻¹|` at `coords` by central differences.
pub fn jacobian_logdet_inverse(coords: &FreeCoords, step: f64) -> Result<f64> {
    let p = coords.p;
    log_det_jacobian(|v| inverse_free_map(p, v), &coords.values, step)
}

/// Conditionals of the joint table, used as an independent check of [`forward_tp`].
pub fn enumerate_conditionals(theta: &SatTheta) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
    let t = joint_cell_probs(theta);
    let k = t.cells();
    let eps = t.pr_r1();
    let zeta = (0..k).map(|x| (t.get(x, 0, 0) + t.get(x, 1, 0)) / (1.0 - eps)).collect();
    let eta = (0..k).map(|x| (t.get(x, 0, 1) + t.get(x, 1, 1)) / eps).collect();
    let xi = (0..k)
        .map(|x| t.get(x, 1, 1) / (t.get(x, 0, 1) + t.get(x, 1, 1)))
        .collect();
    (eps, zeta, eta, xi)
}
