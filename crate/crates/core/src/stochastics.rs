//! Seeded random streams and the variate families used by the samplers.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed with a 64-bit
//! stream selector, so `(seed, stream_id)` fixes the whole output sequence.
//! [`RngStream::split`] derives child streams from the parent's identity
//! only, never from its consumed state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Poisson};

use crate::error::{Error, Result};

const SPLIT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLIT_SALT);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// The `index`-th child of this stream.
    pub fn substream(&self, index: u64) -> RngStream {
        let child_seed = splitmix64(self.seed ^ splitmix64(self.stream_id));
        RngStream::new(child_seed, index.wrapping_add(1))
    }

    /// `k` child streams, identical for identical `(seed, stream_id)`.
    pub fn split(&self, k: usize) -> Vec<RngStream> {
        (0..k as u64).map(|i| self.substream(i)).collect()
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.rng.random::<f64>();
            if u > 0.0 {
                return u;
            }
        }
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(rand_distr::StandardNormal)
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Gamma variate, shape-rate convention.
    pub fn gamma(&mut self, shape: f64, rate: f64) -> f64 {
        Gamma::new(shape, 1.0 / rate)
            .expect("gamma parameters validated by caller")
            .sample(&mut self.rng)
    }

    pub fn beta(&mut self, a: f64, b: f64) -> f64 {
        Beta::new(a, b)
            .expect("beta parameters validated by caller")
            .sample(&mut self.rng)
    }

    /// Dirichlet variate as normalized `Gamma(a_i, 1)` draws.
    pub fn dirichlet(&mut self, concentration: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = concentration.iter().map(|&a| self.gamma(a, 1.0)).collect();
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|v| *v /= total);
        } else {
            // every gamma underflowed (tiny shapes); fall back to a uniform vertex
            let k = self.categorical_uniform(out.len());
            out.iter_mut().enumerate().for_each(|(i, v)| *v = if i == k { 1.0 } else { 0.0 });
        }
        out
    }

    pub fn poisson(&mut self, rate: f64) -> u64 {
        if rate <= 0.0 {
            return 0;
        }
        Poisson::new(rate)
            .expect("poisson rate validated by caller")
            .sample(&mut self.rng) as u64
    }

    /// Index drawn with probabilities proportional to `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let u = self.uniform() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = i;
            }
            acc += w;
            if u < acc {
                return i;
            }
        }
        last_positive
    }

    fn categorical_uniform(&mut self, k: usize) -> usize {
        self.rng.random_range(0..k)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// A distribution family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Uniform01,
    Bernoulli(f64),
    Beta(f64, f64),
    /// Shape and rate.
    Gamma(f64, f64),
    Dirichlet(Vec<f64>),
    /// Mean and standard deviation.
    Normal(f64, f64),
    Poisson(f64),
    Categorical(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variate {
    Real(f64),
    Count(u64),
    Index(usize),
    Vector(Vec<f64>),
}

impl Variate {
    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Variate::Real(v) => Some(v),
            Variate::Count(k) => Some(k as f64),
            Variate::Index(i) => Some(i as f64),
            Variate::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Variate::Vector(v) => Some(v),
            _ => None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistSpec::Uniform01 => Ok(()),
            DistSpec::Bernoulli(p) => probability("bernoulli p", *p),
            DistSpec::Beta(a, b) => positive("beta a", *a).and(positive("beta b", *b)),
            DistSpec::Gamma(shape, rate) => {
                positive("gamma shape", *shape).and(positive("gamma rate", *rate))
            }
            DistSpec::Dirichlet(a) => {
                if a.is_empty() {
                    return Err(Error::InvalidParameter("empty dirichlet concentration".into()));
                }
                a.iter().try_for_each(|&v| positive("dirichlet concentration", v))
            }
            DistSpec::Normal(mean, sd) => {
                if !mean.is_finite() {
                    return Err(Error::InvalidParameter(format!("normal mean {mean}")));
                }
                positive("normal sd", *sd)
            }
            DistSpec::Poisson(rate) => {
                if *rate >= 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("poisson rate {rate}")))
                }
            }
            DistSpec::Categorical(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidParameter("empty categorical".into()));
                }
                p.iter().try_for_each(|&v| probability("categorical p", v))?;
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "categorical probabilities sum to {total}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// One variate from `spec`.
pub fn draw(spec: &DistSpec, rng: &mut RngStream) -> Result<Variate> {
    spec.validate()?;
    Ok(match spec {
        DistSpec::Uniform01 => Variate::Real(rng.uniform()),
        DistSpec::Bernoulli(p) => Variate::Count(rng.bernoulli(*p) as u64),
        DistSpec::Beta(a, b) => Variate::Real(rng.beta(*a, *b)),
        DistSpec::Gamma(shape, rate) => Variate::Real(rng.gamma(*shape, *rate)),
        DistSpec::Dirichlet(a) => Variate::Vector(rng.dirichlet(a)),
        DistSpec::Normal(mean, sd) => Variate::Real(rng.normal(*mean, *sd)),
        DistSpec::Poisson(rate) => Variate::Count(rng.poisson(*rate)),
        DistSpec::Categorical(p) => Variate::Index(rng.categorical(p)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn same_identity_same_sequence() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        let xa: Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
        assert_eq!(xa, xb);
        let mut c = RngStream::new(42, 8);
        assert_ne!(xa[0], c.next_u64());
    }

    #[test]
    fn split_is_deterministic_and_distinct_from_parent() {
        let parent = RngStream::new(1, 0);
        let ids: Vec<_> = parent.split(3).iter().map(|s| (s.seed(), s.stream_id())).collect();
        let again: Vec<_> = parent.split(3).iter().map(|s| (s.seed(), s.stream_id())).collect();
        assert_eq!(ids, again);

        let mut consumed = parent.clone();
        for _ in 0..100 {
            consumed.next_u64();
        }
        let after: Vec<_> = consumed.split(3).iter().map(|s| (s.seed(), s.stream_id())).collect();
        assert_eq!(ids, after, "split must not depend on consumed state");

        let mut p = parent.clone();
        let parent_out: Vec<u64> = (0..8).map(|_| p.next_u64()).collect();
        for mut child in parent.split(3) {
            let out: Vec<u64> = (0..8).map(|_| child.next_u64()).collect();
            assert_ne!(out, parent_out);
        }
    }

    #[test]
    fn three_chains_reproduce_independently() {
        let parent = RngStream::new(99, 3);
        let mut chains = parent.split(3);
        let third: Vec<f64> = (0..10).map(|_| chains[2].uniform()).collect();
        let mut alone = parent.substream(2);
        let third_alone: Vec<f64> = (0..10).map(|_| alone.uniform()).collect();
        assert_eq!(third, third_alone);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut rng = RngStream::new(0, 0);
        for spec in [
            DistSpec::Gamma(0.0, 1.0),
            DistSpec::Gamma(1.0, -1.0),
            DistSpec::Beta(-1.0, 1.0),
            DistSpec::Bernoulli(1.5),
            DistSpec::Dirichlet(vec![1.0, 0.0]),
            DistSpec::Normal(0.0, 0.0),
            DistSpec::Categorical(vec![0.5, 0.6]),
        ] {
            assert!(draw(&spec, &mut rng).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn dirichlet_lies_on_simplex() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..1000 {
            let v = draw(&DistSpec::Dirichlet(vec![1.0, 1.0, 1.0]), &mut rng).unwrap();
            let v = v.as_vector().unwrap();
            assert_eq!(v.len(), 3);
            assert!(v.iter().all(|&x| x >= 0.0));
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // shape < 1 path
        let v = rng.dirichlet(&[0.05, 0.05, 0.05, 0.05]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_one_one_mean() {
        let mut rng = RngStream::new(11, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.beta(1.0, 1.0)).collect();
        let (mean, _) = mean_var(&xs);
        let se = (1.0 / 12.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn poisson_moments() {
        let mut rng = RngStream::new(12, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.poisson(5.0) as f64).collect();
        let (mean, var) = mean_var(&xs);
        // SE(mean) = sqrt(5/n); SE(var) = sqrt((mu4 - sigma^4)/n) with mu4 = 3*25 + 5
        let se_mean = (5.0 / n as f64).sqrt();
        let se_var = ((80.0 - 25.0) / n as f64).sqrt();
        assert!((mean - 5.0).abs() < 4.0 * se_mean, "mean {mean}");
        assert!((var - 5.0).abs() < 4.0 * se_var, "var {var}");
    }

    #[test]
    fn gamma_small_shape_mean() {
        let mut rng = RngStream::new(13, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.gamma(0.3, 2.0)).collect();
        let (mean, _) = mean_var(&xs);
        // mean = 0.15, var = 0.3/4
        let se = (0.3 / 4.0 / n as f64).sqrt();
        assert!((mean - 0.15).abs() < 4.0 * se, "mean {mean}");
        assert!(xs.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn uniform_passes_ks_at_0_001() {
        let mut rng = RngStream::new(14, 0);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = x - i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64 - x;
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        // asymptotic critical value at alpha = 0.001 is 1.9495 / sqrt(n)
        assert!(d < 1.9495 / (n as f64).sqrt(), "KS D = {d}");
    }

    #[test]
    fn dirichlet_exchangeable_under_equal_concentration() {
        let mut rng = RngStream::new(15, 0);
        let n = 20_000;
        let mut sums = [0.0; 4];
        for _ in 0..n {
            let v = rng.dirichlet(&[2.0; 4]);
            for (s, x) in sums.iter_mut().zip(&v) {
                *s += x;
            }
        }
        // Dir(2,2,2,2): each margin Beta(2, 6), var = 12 / (64 * 9)
        let se = (12.0 / 576.0 / n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64 - 0.25).abs() < 4.0 * se);
        }
    }

    #[test]
    fn categorical_respects_zero_weights() {
        let mut rng = RngStream::new(16, 0);
        for _ in 0..10_000 {
            let k = rng.categorical(&[0.0, 0.3, 0.0, 0.7]);
            assert!(k == 1 || k == 3);
        }
    }
}
