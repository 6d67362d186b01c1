//! Shared Brownian increments.
//!
//! Path `p` draws its increments from a ChaCha8 stream seeded with the master
//! seed and positioned on stream `2p`; initial conditions use stream `2p + 1`.
//! Coarser time grids aggregate the same fine increments, so every
//! discretization built on one store sees one Brownian motion.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, precondition, Result};

#[derive(Clone, Debug, PartialEq)]
enum Backing {
    Seeded,
    /// Path-major increments: `p * steps * r + k * r + j`.
    Stored(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrownianStore {
    seed: u64,
    n_paths: usize,
    steps: usize,
    dt: f64,
    noise_dim: usize,
    backing: Backing,
}

/// Sums consecutive groups of `factor` increments (per noise component), in
/// order. Both the simulator and [`BrownianStore::coarsen`] go through here,
/// which keeps coarse runs bit-identical whichever route produced them.
pub(crate) fn aggregate(fine: &[f64], factor: usize, noise_dim: usize) -> Vec<f64> {
    if factor == 1 {
        return fine.to_vec();
    }
    let coarse_steps = fine.len() / (factor * noise_dim);
    let mut out = vec![0.0; coarse_steps * noise_dim];
    for k in 0..coarse_steps {
        for j in 0..noise_dim {
            let mut acc = 0.0;
            for s in 0..factor {
                acc += fine[(k * factor + s) * noise_dim + j];
            }
            out[k * noise_dim + j] = acc;
        }
    }
    out
}

pub(crate) fn path_rng(seed: u64, path: usize, initial: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * path as u64 + u64::from(initial));
    rng
}

const HEADER_BYTES: usize = 40;

impl BrownianStore {
    /// Store whose increments are regenerated on demand from `seed`.
    pub fn new(seed: u64, n_paths: usize, steps: usize, dt: f64, noise_dim: usize) -> Result<Self> {
        if n_paths == 0 || steps == 0 || noise_dim == 0 {
            return Err(param("store", "paths, steps and noise dimension must be positive"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(param("dt", format!("must be positive, got {dt}")));
        }
        Ok(BrownianStore {
            seed,
            n_paths,
            steps,
            dt,
            noise_dim,
            backing: Backing::Seeded,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Increments of path `p`, `steps × r`, step-major.
    pub fn increments(&self, p: usize) -> Vec<f64> {
        let len = self.steps * self.noise_dim;
        match &self.backing {
            Backing::Seeded => {
                let mut rng = path_rng(self.seed, p, false);
                let scale = self.dt.sqrt();
                (0..len)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        scale * z
                    })
                    .collect()
            }
            Backing::Stored(data) => data[p * len..(p + 1) * len].to_vec(),
        }
    }

    /// Store on a grid `factor` times coarser, built by aggregating the same
    /// increments.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianStore> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(param("factor", "must divide the step count"));
        }
        let mut data = Vec::with_capacity(self.n_paths * self.steps / factor * self.noise_dim);
        for p in 0..self.n_paths {
            data.extend(aggregate(&self.increments(p), factor, self.noise_dim));
        }
        Ok(BrownianStore {
            seed: self.seed,
            n_paths: self.n_paths,
            steps: self.steps / factor,
            dt: self.dt * factor as f64,
            noise_dim: self.noise_dim,
            backing: Backing::Stored(data),
        })
    }

    /// Identifier used to check that two ensembles share their noise.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        mix(self.seed);
        mix(self.n_paths as u64);
        mix(self.noise_dim as u64);
        // the fine grid fixes the Brownian motion; coarsened stores differ
        // only in resolution
        mix(self.horizon().to_bits());
        h
    }

    /// Sample mean and variance over every increment of every path.
    pub fn increment_stats(&self) -> (f64, f64, usize) {
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut n = 0usize;
        for p in 0..self.n_paths {
            for v in self.increments(p) {
                sum += v;
                sq += v * v;
                n += 1;
            }
        }
        let mean = sum / n as f64;
        (mean, (sq - n as f64 * mean * mean) / (n - 1) as f64, n)
    }

    /// Writes the header (seed, N, steps, Δt, r) and the little-endian
    /// payload.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&(self.noise_dim as u64).to_le_bytes())?;
        for p in 0..self.n_paths {
            for v in self.increments(p) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<BrownianStore> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; HEADER_BYTES];
        r.read_exact(&mut header)?;
        let word = |i: usize| u64::from_le_bytes(header[8 * i..8 * i + 8].try_into().unwrap());
        let seed = word(0);
        let n_paths = word(1) as usize;
        let steps = word(2) as usize;
        let dt = f64::from_bits(word(3));
        let noise_dim = word(4) as usize;
        let mut store = BrownianStore::new(seed, n_paths, steps, dt, noise_dim)?;
        let len = n_paths * steps * noise_dim;
        let mut bytes = Vec::with_capacity(len * 8);
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * 8 {
            return Err(precondition(format!(
                "store payload has {} bytes, header implies {}",
                bytes.len(),
                len * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.backing = Backing::Stored(data);
        Ok(store)
    }
}
