//! Deterministic, splittable random streams.
//!
//! Every experiment starts from a root [`Seed`]. Independent sub-streams are
//! addressed by a [`StreamKey`] path such as `task=Waves / seed=3 / data`, and
//! [`derive`] hashes the pair into a fresh seed. Streams themselves are ChaCha8
//! generators, so any two derived seeds can be consumed on different threads
//! without shared state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Root or derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Child seed for `key` under this root.
    pub fn derive(self, key: &StreamKey) -> Seed {
        derive(self, key)
    }

    /// Shorthand for a single-component key.
    pub fn child(self, label: &str, index: u64) -> Seed {
        derive(self, &StreamKey::new().push(label, index))
    }

    pub fn stream(self) -> Stream {
        Stream::new(self)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Path of `(label, index)` pairs naming a sub-stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct StreamKey {
    path: Vec<(String, u64)>,
}

impl StreamKey {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(mut self, label: &str, index: u64) -> Self {
        self.path.push((label.to_owned(), index));
        self
    }

    pub fn path(&self) -> &[(String, u64)] {
        &self.path
    }
}

const DERIVE_DOMAIN: u64 = 0x706d_6970_726f_6621; // "pmiprof!"

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash `(root, key)` into a child seed.
///
/// Labels are length-prefixed before their bytes are absorbed, so `("ab", 1)`
/// and `("a", 1), ("b", 1)` cannot collide structurally. With an empty path
/// the result is [`EMPTY_PATH_SEED_OF_ZERO`] for root 0.
pub fn derive(root: Seed, key: &StreamKey) -> Seed {
    let mut h = splitmix64(root.0 ^ DERIVE_DOMAIN);
    for (label, index) in &key.path {
        h = splitmix64(h ^ label.len() as u64);
        for chunk in label.as_bytes().chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            h = splitmix64(h ^ u64::from_le_bytes(buf));
        }
        h = splitmix64(h ^ index.rotate_left(17) ^ 0xA5A5_A5A5_A5A5_A5A5);
    }
    Seed(h)
}

/// `derive(Seed(0), &StreamKey::new())`, pinned so seed derivation cannot drift silently.
pub const EMPTY_PATH_SEED_OF_ZERO: u64 = 0xdfd5_7d96_614b_9d41;

/// A single random stream; not shared between threads.
#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: Seed) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed.0),
            spare_normal: None,
        }
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-64 * n, irrelevant here.
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal variate by the Marsaglia polar method.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }

    /// Index drawn from unnormalized cumulative weights.
    pub fn categorical_cdf(&mut self, cumulative: &[f64]) -> usize {
        let total = *cumulative.last().expect("non-empty cdf");
        let u = self.uniform() * total;
        cumulative
            .partition_point(|&c| c <= u)
            .min(cumulative.len() - 1)
    }

    /// Fisher-Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i + 1);
            p.swap(i, j);
        }
        p
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// `n` i.i.d. standard normal variates from `seed`.
pub fn standard_normal(seed: Seed, n: usize) -> Vec<f64> {
    let mut stream = Stream::new(seed);
    let mut out = vec![0.0; n];
    stream.fill_normal(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derive_is_deterministic() {
        let key = StreamKey::new().push("task", 3).push("seed", 7);
        assert_eq!(derive(Seed(42), &key), derive(Seed(42), &key));
    }

    #[test]
    fn empty_path_golden() {
        assert_eq!(
            derive(Seed(0), &StreamKey::new()).0,
            EMPTY_PATH_SEED_OF_ZERO
        );
    }

    #[test]
    fn derive_distinct_keys() {
        let mut seen = HashSet::new();
        let mut collisions = 0;
        for a in 0..100u64 {
            for b in 0..100u64 {
                let key = StreamKey::new().push("task", a).push("seed", b);
                if !seen.insert(derive(Seed(1), &key)) {
                    collisions += 1;
                }
            }
        }
        if collisions > 0 {
            eprintln!("derive: {collisions} collisions over 10^4 keys");
        }
        assert_eq!(seen.len() + collisions, 10_000);
        assert!(collisions == 0);
    }

    #[test]
    fn derive_is_order_sensitive() {
        let a = StreamKey::new().push("x", 1).push("y", 2);
        let b = StreamKey::new().push("y", 2).push("x", 1);
        assert_ne!(derive(Seed(5), &a), derive(Seed(5), &b));
        let c = StreamKey::new().push("ab", 1);
        let d = StreamKey::new().push("a", 1).push("b", 1);
        assert_ne!(derive(Seed(5), &c), derive(Seed(5), &d));
    }

    #[test]
    fn standard_normal_empty() {
        assert!(standard_normal(Seed(1), 0).is_empty());
    }

    #[test]
    fn standard_normal_moments() {
        let z = standard_normal(Seed(2024), 1_000_000);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.004, "mean {mean}");
        // stderr of the variance of a normal sample is sqrt(2/n)
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "var {var}");
    }

    #[test]
    fn standard_normal_reproducible() {
        assert_eq!(
            standard_normal(Seed(9), 1000),
            standard_normal(Seed(9), 1000)
        );
    }

    #[test]
    fn uniform_lag_one_autocorrelation() {
        let mut s = Stream::new(Seed(77));
        let u: Vec<f64> = (0..1_000_000).map(|_| s.uniform()).collect();
        let n = u.len() as f64;
        let mean = u.iter().sum::<f64>() / n;
        let var = u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let cov = u
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / (n - 1.0);
        assert!((cov / var).abs() < 0.004);
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut s = Stream::new(Seed(3));
        let mut p = s.permutation(1000);
        p.sort_unstable();
        assert_eq!(p, (0..1000).collect::<Vec<_>>());
    }
}
