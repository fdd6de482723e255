//! Shared fixtures for the fit benchmarks.

use apca_core::data::gaussian_dataset;
use apca_core::{ApcaConfig, Dataset, Decomp, Flavor, Inference};

/// Problem size for one timing point.
#[derive(Debug, Clone, Copy)]
pub struct Workload {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub mu: f64,
}

impl Workload {
    pub fn new(n: usize, p: usize) -> Self {
        Self { n, p, q: 1, k: 2, mu: 1.0 }
    }

    /// Standard normal primary and augmenting data.
    pub fn dataset(&self, seed: u64) -> Dataset {
        gaussian_dataset(self.n, self.p, self.q, seed).expect("valid workload")
    }

    pub fn config(&self, decomp: Decomp) -> ApcaConfig {
        ApcaConfig::new(Flavor::Supervised, Inference::Local, self.k, self.mu).with_decomp(decomp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_fits_both_ways() {
        let w = Workload::new(30, 12);
        let ds = w.dataset(1);
        for decomp in [Decomp::Exact, Decomp::approx_default()] {
            let model = apca_core::fit(&w.config(decomp), &ds.x, &ds.y).unwrap();
            assert_eq!(model.w.shape(), (12, 2));
        }
    }
}
