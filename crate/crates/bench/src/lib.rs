//! Shared setup for the sampler benchmarks.

use tpis::harness::{Method, Model, RunConfig, simulate_data};
use tpis::tp_sat::{FreeCoords, forward_tp};
use tpis::{IncompleteDataset, PriorSpec, RngStream, SatTheta};

pub const SEED: u64 = 7;

/// Sat dataset simulated from a prior draw, as the harness would.
pub fn sat_data(n: usize, p: usize) -> IncompleteDataset {
    let cfg = RunConfig { model: Model::Sat, method: Method::Istp, n, p, seed: SEED, ..RunConfig::default() };
    simulate_data(&cfg).expect("valid config").0
}

pub fn count_data(n: usize) -> IncompleteDataset {
    let cfg = RunConfig { model: Model::Count, method: Method::PseudoIs, n, seed: SEED, ..RunConfig::default() };
    simulate_data(&cfg).expect("valid config").0
}

pub fn prior() -> PriorSpec {
    PriorSpec::default()
}

/// Free coordinates of a prior draw, for Jacobian timing.
pub fn free_coords(p: usize) -> FreeCoords {
    let theta = SatTheta::sample_prior(p, &prior(), &mut RngStream::new(SEED, 1)).expect("prior draw");
    FreeCoords::from_phi_lambda(&forward_tp(&theta).expect("forward map"))
}

/// AR(1) chains with coefficient `phi`.
pub fn ar1_chains(chains: usize, len: usize, phi: f64) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(SEED, 2);
    let sd = (1.0 - phi * phi).sqrt();
    (0..chains)
        .map(|_| {
            let mut x = 0.0;
            (0..len)
                .map(|_| {
                    x = phi * x + rng.normal(0.0, sd);
                    x
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setups_have_requested_shapes() {
        assert_eq!(sat_data(50, 2).y().len(), 50);
        assert_eq!(count_data(40).y().len(), 40);
        assert_eq!(free_coords(2).as_slice().len(), FreeCoords::dim(2));
        let c = ar1_chains(2, 10, 0.5);
        assert_eq!((c.len(), c[0].len()), (2, 10));
    }
}
