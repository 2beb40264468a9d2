//! Simulation metrics and their CSV renderings.

use std::fs;
use std::path::Path;

use super::engine::{split_key, Stack};

/// One per-interest latency measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatencySample {
    pub client: u32,
    pub name_key: u64,
    pub latency_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientReport {
    pub client_index: usize,
    pub downloads: u64,
    /// Bytes belonging to completed objects (content + enabling block).
    pub bytes_completed: u64,
    /// Bytes of the object in flight when the run ended.
    pub bytes_partial: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouterReport {
    pub node: usize,
    pub hits: u64,
    pub misses: u64,
}

#[derive(Clone, Debug)]
pub struct SimReport {
    pub stack: Stack,
    pub seed: u64,
    pub clients: Vec<ClientReport>,
    pub routers: Vec<RouterReport>,
    pub samples: Vec<LatencySample>,
    pub warnings: Vec<String>,
}

impl SimReport {
    pub fn mean_downloads(&self) -> f64 {
        if self.clients.is_empty() {
            return 0.0;
        }
        self.clients.iter().map(|c| c.downloads as f64).sum::<f64>() / self.clients.len() as f64
    }

    /// Aggregate cache hit ratio over all routers; 0 when nothing cached.
    pub fn hit_ratio(&self) -> f64 {
        let hits: u64 = self.routers.iter().map(|r| r.hits).sum();
        let lookups: u64 = self.routers.iter().map(|r| r.hits + r.misses).sum();
        if lookups == 0 {
            0.0
        } else {
            hits as f64 / lookups as f64
        }
    }

    pub fn sorted_latencies_ns(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.samples.iter().map(|s| s.latency_ns).collect();
        v.sort_unstable();
        v
    }

    /// Latency quantile in seconds, p in (0, 1].
    pub fn quantile_sec(&self, p: f64) -> f64 {
        let sorted = self.sorted_latencies_ns();
        if sorted.is_empty() {
            return 0.0;
        }
        let idx = ((sorted.len() as f64 * p).ceil() as usize).clamp(1, sorted.len()) - 1;
        sorted[idx] as f64 / 1e9
    }

    /// Nondecreasing (latency_sec, cumulative_prob) table ending at 1.0,
    /// thinned to at most `max_points` rows.
    pub fn ecdf(&self, max_points: usize) -> Vec<(f64, f64)> {
        let sorted = self.sorted_latencies_ns();
        if sorted.is_empty() {
            return Vec::new();
        }
        let n = sorted.len();
        let step = n.div_ceil(max_points.max(1)).max(1);
        let mut table = Vec::new();
        let mut i = step - 1;
        while i < n {
            table.push((sorted[i] as f64 / 1e9, (i + 1) as f64 / n as f64));
            i += step;
        }
        if table.last().map(|&(_, p)| p) != Some(1.0) {
            table.push((sorted[n - 1] as f64 / 1e9, 1.0));
        }
        table
    }

    /// Human-readable name of a sampled chunk.
    pub fn chunk_name(&self, key: u64) -> String {
        let (content, is_eb, idx) = split_key(key);
        let service = if is_eb { "premium" } else { "movie" };
        format!("/cp/{service}/all/obj{content}/V1/{:05}", idx + 1)
    }

    pub fn latency_samples_csv(&self) -> String {
        let mut out = String::from("client_id,chunk_name,latency_sec\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{}\n",
                s.client,
                self.chunk_name(s.name_key),
                s.latency_ns as f64 / 1e9
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("stack,mean_downloads,p50_latency_sec,p90_latency_sec,p99_latency_sec,hit_ratio\n");
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            self.stack.label(),
            self.mean_downloads(),
            self.quantile_sec(0.50),
            self.quantile_sec(0.90),
            self.quantile_sec(0.99),
            self.hit_ratio()
        ));
        out
    }

    pub fn ecdf_csv(&self) -> String {
        let mut out = String::from("latency_sec,cumulative_prob\n");
        for (latency, prob) in self.ecdf(10_000) {
            out.push_str(&format!("{latency},{prob}\n"));
        }
        out
    }

    /// All three CSV documents concatenated; used for byte-level
    /// determinism checks.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(self.summary_csv().as_bytes());
        bytes.extend_from_slice(self.ecdf_csv().as_bytes());
        bytes.extend_from_slice(self.latency_samples_csv().as_bytes());
        bytes
    }

    /// Write `latency_samples.csv`, `summary.csv`, and `ecdf.csv`.
    pub fn write_csv_files(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("latency_samples.csv"), self.latency_samples_csv())?;
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        fs::write(dir.join("ecdf.csv"), self.ecdf_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with_latencies(latencies: Vec<u64>) -> SimReport {
        SimReport {
            stack: Stack::Ndn,
            seed: 0,
            clients: vec![ClientReport {
                client_index: 0,
                downloads: 2,
                bytes_completed: 100,
                bytes_partial: 0,
            }],
            routers: vec![RouterReport { node: 1, hits: 3, misses: 1 }],
            samples: latencies
                .into_iter()
                .map(|latency_ns| LatencySample { client: 0, name_key: 0, latency_ns })
                .collect(),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn ecdf_is_nondecreasing_and_ends_at_one() {
        let report = report_with_latencies((1..=1000).rev().collect());
        let table = report.ecdf(64);
        assert!(table.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(table.last().unwrap().1, 1.0);
    }

    #[test]
    fn quantiles_pick_order_statistics() {
        let report = report_with_latencies(vec![
            1_000_000_000,
            2_000_000_000,
            3_000_000_000,
            4_000_000_000,
        ]);
        assert_eq!(report.quantile_sec(0.5), 2.0);
        assert_eq!(report.quantile_sec(1.0), 4.0);
        assert_eq!(report.hit_ratio(), 0.75);
    }

    #[test]
    fn csv_has_expected_headers() {
        let report = report_with_latencies(vec![5_000_000]);
        assert!(report.summary_csv().starts_with("stack,mean_downloads"));
        assert!(report.latency_samples_csv().starts_with("client_id,chunk_name"));
        assert!(report.ecdf_csv().starts_with("latency_sec,cumulative_prob"));
        assert!(report.latency_samples_csv().contains("/cp/movie/all/obj0/V1/00001"));
    }
}
