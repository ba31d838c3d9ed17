//! Counter-based Gaussian noise streams for the Langevin integrator.
//!
//! Each (trajectory, slice) pair owns an independent stream derived from the
//! master seed by hashing; within a stream every (round trip, substep, channel
//! pair) maps to a fixed counter, so deviates are a pure function of their
//! coordinates. Results are therefore identical for any execution order or
//! thread count. splitmix64 is not cryptographic; it is used for speed and
//! stable cross-platform output.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// u64 -> uniform on (0, 1]; never zero, so ln() below is always finite.
#[inline(always)]
fn to_unit(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Counter block reserved for initial-condition draws.
const INIT_BLOCK: u64 = 1 << 62;

/// Deterministic Gaussian stream for one (trajectory, slice).
#[derive(Debug, Clone, Copy)]
pub struct NoiseStream {
    key: u64,
}

/// Channel pairs drawn per substep: 0 = amplitude-quadrature (pump, signal)
/// inputs, 1 = phase-quadrature (pump, signal) inputs.
pub const CHANNEL_PAIRS: u64 = 2;

impl NoiseStream {
    pub fn new(seed: u64, trajectory: u64, slice: u64) -> Self {
        let k0 = mix64(seed ^ 0x5350_4F50_4F4C_4142); // domain separation
        let k1 = mix64(k0 ^ trajectory.wrapping_mul(GAMMA).wrapping_add(1));
        let key = mix64(k1 ^ slice.wrapping_mul(GAMMA).wrapping_add(2));
        Self { key }
    }

    #[inline(always)]
    fn pair_at(&self, counter: u64) -> [f64; 2] {
        let a = mix64(self.key.wrapping_add(counter.wrapping_mul(2).wrapping_mul(GAMMA)));
        let b = mix64(
            self.key
                .wrapping_add(counter.wrapping_mul(2).wrapping_add(1).wrapping_mul(GAMMA)),
        );
        let u1 = to_unit(a);
        let u2 = to_unit(b);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        [r * c, r * s]
    }

    /// Standard-normal pair for (round trip, substep, channel pair).
    #[inline(always)]
    pub fn substep_pair(&self, trip: u64, substeps: u64, substep: u64, pair: u64) -> [f64; 2] {
        debug_assert!(pair < CHANNEL_PAIRS);
        let counter = (trip * substeps + substep) * CHANNEL_PAIRS + pair;
        debug_assert!(counter < INIT_BLOCK);
        self.pair_at(counter)
    }

    /// Standard-normal pair reserved for initial conditions.
    pub fn init_pair(&self, index: u64) -> [f64; 2] {
        self.pair_at(INIT_BLOCK + index)
    }
}
