//! Seeded randomness for sampling and test inputs.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

use super::{kron_vec, normalized, CMatrix, C64};

/// SplitMix64-backed generator; every random quantity in the crate is drawn
/// through one of these so runs are reproducible from a single `u64` seed.
#[derive(Clone, Debug)]
pub struct SeededRng(SplitMix64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    /// Independent stream derived from `seed` and a label.
    pub fn derived(seed: u64, stream: u64) -> Self {
        Self::new(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn gaussian(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    /// Standard complex Gaussian (independent unit-variance parts).
    pub fn complex(&mut self) -> C64 {
        C64::new(self.gaussian(), self.gaussian())
    }

    pub fn complex_vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.complex()).collect()
    }

    /// Haar-random unit vector.
    pub fn unit_vec(&mut self, n: usize) -> Vec<C64> {
        loop {
            if let Some(v) = normalized(&self.complex_vec(n)) {
                return v;
            }
        }
    }

    /// Random Hermitian matrix with Gaussian entries.
    pub fn hermitian(&mut self, n: usize) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| self.complex());
        (&g + &g.adjoint()).scale(0.5)
    }

    /// Unitary obtained from Gram-Schmidt on a Gaussian matrix.
    pub fn unitary(&mut self, n: usize) -> CMatrix {
        loop {
            let cols: Vec<Vec<C64>> = (0..n).map(|_| self.complex_vec(n)).collect();
            let basis = super::orthonormalize(&cols, 1e-8);
            if basis.dim() == n {
                return CMatrix::from_columns(basis.vectors(), n);
            }
        }
    }

    /// Random normalised product vector `φ⊗χ`, returned as its factors.
    pub fn product_pair(&mut self, dim_a: usize, dim_b: usize) -> (Vec<C64>, Vec<C64>) {
        (self.unit_vec(dim_a), self.unit_vec(dim_b))
    }

    pub fn product_vec(&mut self, dim_a: usize, dim_b: usize) -> Vec<C64> {
        let (a, b) = self.product_pair(dim_a, dim_b);
        kron_vec(&a, &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..10 {
            assert_eq!(a.complex(), b.complex());
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let u = SeededRng::new(3).unitary(4);
        let uu = &u.adjoint() * &u;
        assert!(uu.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }
}
