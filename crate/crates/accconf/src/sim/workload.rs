//! Zipf-Mandelbrot content popularity.
//!
//! P(rank k) = C / (k + q)^s for k = 1..N, normalized so the mass sums
//! to one. Sampling is exact inverse-CDF over the precomputed table.

use rand::Rng;
use rand::RngCore;

use super::SimError;

#[derive(Clone, Debug)]
pub struct ZipfMandelbrot {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl ZipfMandelbrot {
    pub fn new(n_contents: usize, q: f64, s: f64) -> Result<Self, SimError> {
        if n_contents == 0 {
            return Err(SimError::Config("catalog must hold at least one content"));
        }
        if !q.is_finite() || !s.is_finite() || q < 0.0 {
            return Err(SimError::Config("q and s must be finite, q >= 0"));
        }
        let raw: Vec<f64> = (1..=n_contents)
            .map(|k| 1.0 / (k as f64 + q).powf(s))
            .collect();
        let total: f64 = raw.iter().sum();
        let pmf: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mut cdf = Vec::with_capacity(n_contents);
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().expect("nonempty") = 1.0;
        Ok(ZipfMandelbrot { pmf, cdf })
    }

    pub fn catalog_size(&self) -> usize {
        self.pmf.len()
    }

    /// Exact probability of the 1-based rank.
    pub fn pmf(&self, rank: usize) -> f64 {
        self.pmf[rank - 1]
    }

    /// Draw a 1-based rank by inverse-CDF.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u) + 1
    }
}
