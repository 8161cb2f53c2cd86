//! Gaussian linear-model simulation.
//!
//! Draw order from one ChaCha20 stream seeded with `seed_from_u64(seed)`: the design
//! row by row, then `β₀, β₁, …, β_p`, then the errors. All draws are standard normal.

use std::path::Path;

use casepath_core::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator identification written to the metadata sidecar.
pub const GENERATOR: &str = "ChaCha20Rng (rand_chacha 0.9, 20 rounds), seed_from_u64";
/// Normal sampler identification.
pub const NORMAL_SAMPLER: &str = "rand_distr 0.5 StandardNormal (ziggurat)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::Usage(format!("simulation needs n >= 2 and p >= 1, got n={} p={}", self.n, self.p)));
        }
        Ok(())
    }

    /// Parses `n=50,p=30` with an optional `seed=…`.
    pub fn parse(text: &str, default_seed: u64) -> Result<Self> {
        let mut spec = SimSpec { n: 0, p: 0, seed: default_seed };
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) =
                part.split_once('=').ok_or_else(|| Error::Usage(format!("expected key=value, got {part:?}")))?;
            let bad = || Error::Usage(format!("bad value in {part:?}"));
            match k.trim() {
                "n" => spec.n = v.trim().parse().map_err(|_| bad())?,
                "p" => spec.p = v.trim().parse().map_err(|_| bad())?,
                "seed" => spec.seed = v.trim().parse().map_err(|_| bad())?,
                other => return Err(Error::Usage(format!("unknown simulation key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Simulated dataset with its true coefficients.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub data: Dataset,
    pub beta0: f64,
    pub beta: Vec<f64>,
}

pub fn simulate(spec: SimSpec) -> Result<Simulation> {
    spec.validate()?;
    let SimSpec { n, p, seed } = spec;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    let xs: Vec<f64> = (0..n * p).map(|_| draw()).collect();
    let beta0 = draw();
    let beta: Vec<f64> = (0..p).map(|_| draw()).collect();
    let x = DMatrix::from_row_slice(n, p, &xs);
    let y = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let signal: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
            beta0 + signal + draw()
        }),
    );
    Ok(Simulation { data: Dataset::new(x, y)?, beta0, beta })
}

/// Contents of the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub spec: SimSpec,
    pub generator: String,
    pub normal_sampler: String,
    pub draw_order: String,
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub version: String,
}

impl SimMetadata {
    pub fn new(spec: SimSpec, sim: &Simulation) -> Self {
        SimMetadata {
            spec,
            generator: GENERATOR.into(),
            normal_sampler: NORMAL_SAMPLER.into(),
            draw_order: "x row-major, beta0, beta, errors".into(),
            beta0: sim.beta0,
            beta: sim.beta.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
