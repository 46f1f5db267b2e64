//! Helpers shared by the integration test binaries: a tiny deterministic
//! RNG (splitmix64) so randomized sweeps reproduce exactly, and coupling
//! generators built on it.

use ultrawalk::hamiltonian::EpsilonSequence;
use ultrawalk::quantum::WalkParams;
use ultrawalk::space::TreeParams;

pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Strictly decreasing positive couplings, eps_1 = top, successive ratios
/// in [1.5, 3.5].
pub fn random_couplings(rng: &mut SplitMix64, m: u32, top: f64) -> Vec<f64> {
    let mut eps = Vec::with_capacity(m as usize);
    let mut v = top;
    for _ in 0..m {
        eps.push(v);
        v /= 1.5 + 2.0 * rng.uniform();
    }
    eps
}

pub fn walk(p: u32, m: u32, eps: Vec<f64>) -> WalkParams {
    let tp = TreeParams::new(p, m).unwrap();
    let es = EpsilonSequence::new(p, eps).unwrap();
    WalkParams::new(tp, es).unwrap()
}
