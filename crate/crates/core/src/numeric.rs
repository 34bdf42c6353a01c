//! Scalar helpers, log-densities and finite-difference Jacobians.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Determinants smaller than this in absolute value are treated as singular.
pub const SINGULAR_DET: f64 = 1e-250;

/// Upper-tail mass left out when a Poisson sum is truncated.
pub const POISSON_TAIL: f64 = 1e-12;

/// Smallest truncation point used for Poisson sums.
pub const POISSON_MIN_TRUNCATION: usize = 50;

#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `log(expit(x))` without overflow.
#[inline]
pub fn log_expit(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `log(1 - expit(x))`.
#[inline]
pub fn log1m_expit(x: f64) -> f64 {
    log_expit(-x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

#[inline]
pub fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[inline]
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

#[inline]
pub fn poisson_logpmf(k: u64, rate: f64) -> f64 {
    if rate <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * rate.ln() - rate - ln_factorial(k)
}

/// Gamma density in the shape-rate convention.
#[inline]
pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

#[inline]
pub fn beta_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()
}

/// Smallest `y >= 50` with `Pr(Y > y) < 1e-12` for `Y ~ Poisson(rate)`.
pub fn poisson_truncation(rate: f64) -> usize {
    if !(rate > 0.0) {
        return POISSON_MIN_TRUNCATION;
    }
    // Accumulate the pmf on the log scale; the cap protects against rates far
    // beyond the count model's range.
    let cap = (rate + 60.0 * rate.sqrt() + 200.0) as usize;
    let mut log_pmf = -rate;
    let mut cdf = log_pmf.exp();
    let mut y = 0usize;
    while y < cap {
        if y >= POISSON_MIN_TRUNCATION && y as f64 >= rate && 1.0 - cdf < POISSON_TAIL {
            break;
        }
        y += 1;
        log_pmf += rate.ln() - (y as f64).ln();
        cdf += log_pmf.exp();
    }
    y.max(POISSON_MIN_TRUNCATION)
}

/// `log |det A|` via LU factorization with partial pivoting.
pub fn log_abs_det(a: DMatrix<f64>) -> Result<f64> {
    if a.iter().any(|v| !v.is_finite()) {
        let column = a
            .column_iter()
            .position(|c| c.iter().any(|v| !v.is_finite()))
            .unwrap_or(0);
        return Err(Error::NonFiniteJacobian { column });
    }
    let lu = a.lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        if d == 0.0 {
            return Err(Error::SingularJacobian { log_abs_det: f64::NEG_INFINITY });
        }
        acc += d.ln();
    }
    if acc < SINGULAR_DET.ln() {
        return Err(Error::SingularJacobian { log_abs_det: acc });
    }
    Ok(acc)
}

/// Per-coordinate central-difference step: `max(step, step * |x|)`.
#[inline]
pub fn fd_step(step: f64, x: f64) -> f64 {
    step.max(step * x.abs())
}

/// Central-difference Jacobian of `f` at `x`; entry `(i, j)` is `∂f_i / ∂x_j`.
pub fn central_jacobian<F>(f: F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut work = x.to_vec();
    let mut jac: Option<DMatrix<f64>> = None;
    for j in 0..n {
        let h = fd_step(step, x[j]);
        work[j] = x[j] + h;
        let plus = f(&work);
        work[j] = x[j] - h;
        let minus = f(&work);
        work[j] = x[j];
        let jac = jac.get_or_insert_with(|| DMatrix::zeros(plus.len(), n));
        for i in 0..plus.len() {
            let d = (plus[i] - minus[i]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFiniteJacobian { column: j });
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac.unwrap_or_else(|| DMatrix::zeros(0, 0)))
}

/// `log |det ∇f(x)|` for a map between spaces of equal dimension.
pub fn log_det_jacobian<F>(f: F, x: &[f64], step: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let jac = central_jacobian(f, x, step)?;
    if jac.nrows() != jac.ncols() {
        return Err(Error::InvalidParameter(format!(
            "jacobian is {}x{}, expected square",
            jac.nrows(),
            jac.ncols()
        )));
    }
    log_abs_det(jac)
}
