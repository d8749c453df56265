//! Seeded, labelled random streams.
//!
//! A stream is identified by a `(seed, label)` pair. The ChaCha20 key is the
//! SHA-256 digest of the seed and the label, so sub-streams never overlap and
//! reproduce identically on every platform.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::linalg::{Matrix, Vector};

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    label: String,
    inner: ChaCha20Rng,
}

impl Rng {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest[..32]);
        Self {
            seed,
            label: label.to_string(),
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    /// Independent stream keyed by `(seed, "<label>/<child>")`; does not
    /// advance `self`.
    pub fn substream(&self, child: &str) -> Rng {
        Rng::new(self.seed, &format!("{}/{}", self.label, child))
    }

    /// Child stream keyed by a value drawn from `self`, so consecutive
    /// splits with the same name differ.
    pub fn split(&mut self, child: &str) -> Rng {
        let nonce: u64 = self.inner.random();
        Rng::new(self.seed, &format!("{}/{}#{nonce:016x}", self.label, child))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform sample in `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        let u: f64 = self.inner.random();
        low + (high - low) * u
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn normal_vector(&mut self, n: usize) -> Vector {
        Vector::new((0..n).map(|_| self.standard_normal()).collect())
    }

    pub fn uniform_vector(&mut self, n: usize, low: f64, high: f64) -> Vector {
        Vector::new((0..n).map(|_| self.uniform(low, high)).collect())
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| self.standard_normal()).collect(),
        )
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}
