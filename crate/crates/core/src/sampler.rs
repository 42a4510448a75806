//! Seeded Gaussian data.
//!
//! Each trial owns an [`RngStream`]: ChaCha8 keyed by `seed` (expanded with
//! `SeedableRng::seed_from_u64`) and positioned on stream `stream_index`.
//! Normals come from the Box-Muller cosine branch, one normal per pair of
//! uniforms `u1 = 1 - U`, `u2 = U'` with `U, U'` the 53-bit floats in
//! `[0, 1)` drawn in that order:
//!
//! ```text
//! z = sqrt(-2 ln u1) * cos(2 pi u2)
//! ```
//!
//! A triple draws `A` row-major, then `b`, then `c`. This order and the
//! transform are part of the output contract.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::SquareMatrix;
use crate::lp::DataTriple;

/// Stream indices at or above this offset belong to lane 1, 2, ...
pub const LANE_SHIFT: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Stream `index` in lane `lane`; lanes keep unrelated sample sets of
    /// one experiment apart.
    pub fn lane(seed: u64, lane: u16, index: u64) -> Self {
        debug_assert!(index < 1 << LANE_SHIFT);
        Self::new(seed, (u64::from(lane) << LANE_SHIFT) | index)
    }

    pub fn rng(&self) -> NormalSource {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        NormalSource { rng }
    }
}

/// Generator handed out by [`RngStream::rng`].
#[derive(Debug, Clone)]
pub struct NormalSource {
    rng: ChaCha8Rng,
}

impl NormalSource {
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normals(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.normal()).collect()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn index(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// A distribution on triples that is invariant under every sign flip of
/// columns and puts no mass on any `h_B(d) = 0`.
pub trait TripleDistribution: Sync {
    fn id(&self) -> &str;
    fn sample(&self, m: usize, n: usize, stream: RngStream) -> DataTriple;
}

/// All entries i.i.d. standard normal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl TripleDistribution for Gaussian {
    fn id(&self) -> &str {
        "gaussian"
    }

    fn sample(&self, m: usize, n: usize, stream: RngStream) -> DataTriple {
        sample_gaussian_triple(m, n, stream)
    }
}

/// # Panics
/// If `m == 0` or `m > n`.
pub fn sample_gaussian_triple(m: usize, n: usize, stream: RngStream) -> DataTriple {
    let mut g = stream.rng();
    let a = g.normals(m * n);
    let b = g.normals(m);
    let c = g.normals(n);
    DataTriple::new(m, n, a, b, c).expect("1 <= m <= n")
}

/// # Panics
/// If `m` is outside `1..=MAX_DIM`.
pub fn sample_gaussian_square(m: usize, stream: RngStream) -> SquareMatrix {
    let mut g = stream.rng();
    SquareMatrix::new(m, g.normals(m * m)).expect("dimension in range")
}

/// Parses a seed given as decimal or as `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Option<u64> {
    let t = text.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => t.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let s = RngStream::new(42, 0);
        assert_eq!(
            sample_gaussian_triple(1, 2, s),
            sample_gaussian_triple(1, 2, s)
        );
        assert_eq!(sample_gaussian_square(3, s), sample_gaussian_square(3, s));
        assert_ne!(
            sample_gaussian_triple(1, 2, s),
            sample_gaussian_triple(1, 2, RngStream::new(42, 1))
        );
    }

    #[test]
    fn shapes_and_order() {
        let s = RngStream::new(9, 4);
        let d = sample_gaussian_triple(2, 3, s);
        assert_eq!(
            (d.m(), d.n(), d.a_data().len(), d.b().len(), d.c().len()),
            (2, 3, 6, 2, 3)
        );
        let raw = s.rng().normals(11);
        assert_eq!(d.a_data(), &raw[..6]);
        assert_eq!(d.b(), &raw[6..8]);
        assert_eq!(d.c(), &raw[8..]);
        assert_eq!(sample_gaussian_square(1, s).data(), &raw[..1]);
    }

    #[test]
    fn entry_moments() {
        let n = 100_000u64;
        let (mut sum, mut sq) = (0.0, 0.0);
        for i in 0..n {
            let x = sample_gaussian_triple(1, 2, RngStream::new(5, i)).a(0, 0);
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "var {var}");

        let mut sum = 0.0;
        for i in 0..n {
            sum += sample_gaussian_square(2, RngStream::new(6, i)).get(0, 1);
        }
        assert!((sum / n as f64).abs() <= 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn lanes_are_disjoint() {
        assert_ne!(RngStream::lane(1, 1, 0), RngStream::lane(1, 0, 0));
        assert_eq!(RngStream::lane(1, 0, 7), RngStream::new(1, 7));
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("42"), Some(42));
        assert_eq!(parse_seed("0x2A"), Some(42));
        assert_eq!(parse_seed("0xffffffffffffffff"), Some(u64::MAX));
        assert_eq!(parse_seed("x"), None);
    }
}
