//! Scaling benchmark for the decision procedure: median wall time against
//! table size on families of known structure, with a fitted log-log slope.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decide::{decide_only, SelectionPolicy};
use crate::error::{Error, Result};
use crate::generators::{gen_dictatorship, gen_random};
use crate::instance::ChoiceInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchFamily {
    Constant,
    Dictatorship,
    Random,
}

impl std::str::FromStr for BenchFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "constant" => Ok(BenchFamily::Constant),
            "dictatorship" | "dict" => Ok(BenchFamily::Dictatorship),
            "random" => Ok(BenchFamily::Random),
            other => Err(format!(
                "unknown family `{other}` (expected constant|dictatorship|random)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub type_size: u32,
    pub table_size: u64,
    pub median_ns: u64,
    pub implementable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub family: BenchFamily,
    pub reps: usize,
    pub points: Vec<BenchPoint>,
    /// Least-squares slope of `ln(time)` against `ln(table_size)`; absent
    /// with fewer than three points.
    pub slope: Option<f64>,
}

impl BenchReport {
    pub fn load(serialized: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(serialized)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Builds the two-agent benchmark instance of one family at one size.
pub fn bench_instance(family: BenchFamily, size: u32, seed: u64) -> Result<ChoiceInstance> {
    if size == 0 {
        return Err(Error::Generator("size must be at least 1".into()));
    }
    match family {
        BenchFamily::Constant => {
            let profiles = (size as usize) * (size as usize);
            ChoiceInstance::new(
                vec![size, size],
                1,
                vec![0; profiles],
                vec![vec![vec![0]; size as usize]; 2],
            )
        }
        BenchFamily::Dictatorship => {
            let map: Vec<u32> = (0..size).collect();
            gen_dictatorship(&[size, size], &map)
        }
        BenchFamily::Random => gen_random(seed, &[size, size], 2, 0, 3),
    }
}

/// Times `decide_only` (single worker, lowest-index policy) at each size
/// and fits the log-log slope.
pub fn run_bench(
    family: BenchFamily,
    sizes: &[u32],
    reps: usize,
    seed: u64,
) -> Result<BenchReport> {
    let reps = reps.max(1);
    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let instance = bench_instance(family, size, seed)?;
        let mut samples = Vec::with_capacity(reps);
        let mut implementable = false;
        for _ in 0..reps {
            let start = Instant::now();
            implementable = decide_only(&instance, SelectionPolicy::LowestIndex);
            samples.push(start.elapsed().as_nanos() as u64);
        }
        samples.sort_unstable();
        points.push(BenchPoint {
            type_size: size,
            table_size: instance.stats().table_size,
            median_ns: samples[samples.len() / 2].max(1),
            implementable,
        });
    }
    let slope = fit_loglog_slope(
        &points
            .iter()
            .map(|p| (p.table_size as f64, p.median_ns as f64))
            .collect::<Vec<_>>(),
    );
    Ok(BenchReport {
        family,
        reps,
        points,
        slope,
    })
}

/// Least-squares slope of `ln(y)` on `ln(x)`. Declines to fit with fewer
/// than three points or a degenerate x-range.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Some(sxy / sxx)
}
