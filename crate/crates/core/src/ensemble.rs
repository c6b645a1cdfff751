//! Seedable instance sampling and parallel ensemble execution.
//!
//! Every instance index owns an independent random stream: the generator
//! state is four successive SplitMix64 outputs seeded with `seed ^ index`,
//! driving xoshiro256++. Records therefore do not depend on the order in
//! which workers pick up indices.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{check_qubits, CouplingVector};
use crate::metrics::{run_instance_with, spectral_summary, InstanceRecord, RecordFlags, Settings};

/// Indices processed per parallel batch before records are handed to the sink.
const BATCH: usize = 256;

#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus([u64; 4]);

impl Xoshiro256PlusPlus {
    pub fn from_splitmix(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        Self([sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()])
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.0;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal variates by the Marsaglia polar method; the second
/// variate of each accepted pair is kept for the next call.
#[derive(Debug, Clone)]
struct PolarNormal {
    spare: Option<f64>,
}

impl PolarNormal {
    fn next(&mut self, rng: &mut Xoshiro256PlusPlus) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.next_f64() - 1.0;
            let v = 2.0 * rng.next_f64() - 1.0;
            let q = u * u + v * v;
            if q > 0.0 && q < 1.0 {
                let scale = (-2.0 * q.ln() / q).sqrt();
                self.spare = Some(v * scale);
                return u * scale;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerKind {
    /// Each coupling uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// Each coupling normal with mean 0.
    Gaussian { sigma: f64 },
    /// Row-major walk over a `points_per_axis^(2^n - 1)` lattice on `[-a, a]` per axis.
    Grid { points_per_axis: usize, half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SamplerKind::Uniform { half_width } if !(half_width > 0.0 && half_width.is_finite()) => {
                Err(Error::InvalidArgument(format!("uniform half-width {half_width} must be > 0")))
            }
            SamplerKind::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidArgument(format!("gaussian sigma {sigma} must be > 0")))
            }
            SamplerKind::Grid { points_per_axis, half_width } => {
                if points_per_axis < 2 {
                    Err(Error::InvalidArgument(format!("grid points per axis {points_per_axis} must be >= 2")))
                } else if !(half_width > 0.0 && half_width.is_finite()) {
                    Err(Error::InvalidArgument(format!("grid half-width {half_width} must be > 0")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Lattice size for the grid kind at `n` qubits; `None` for random kinds
    /// or when the count overflows.
    pub fn lattice_size(&self, n: usize) -> Option<u64> {
        match self.kind {
            SamplerKind::Grid { points_per_axis, .. } => {
                (points_per_axis as u64).checked_pow(u32::try_from((1usize << n) - 1).ok()?)
            }
            _ => None,
        }
    }
}

/// `i`-th of `k` uniformly spaced points on `[-a, a]`, endpoints exact.
pub fn lattice_point(i: usize, k: usize, a: f64) -> f64 {
    if i == k - 1 {
        a
    } else {
        -a + 2.0 * a * i as f64 / (k - 1) as f64
    }
}

/// Couplings for instance `index`; `J_0` is always zero.
pub fn sample_couplings(spec: &SamplerSpec, n: usize, index: u64) -> Result<CouplingVector> {
    check_qubits(n)?;
    spec.validate()?;
    let count = (1usize << n) - 1;
    let mut rest = Vec::with_capacity(count);
    match spec.kind {
        SamplerKind::Uniform { half_width } => {
            let mut rng = Xoshiro256PlusPlus::from_splitmix(spec.seed ^ index);
            for _ in 0..count {
                rest.push(half_width * (2.0 * rng.next_f64() - 1.0));
            }
        }
        SamplerKind::Gaussian { sigma } => {
            let mut rng = Xoshiro256PlusPlus::from_splitmix(spec.seed ^ index);
            let mut normal = PolarNormal { spare: None };
            for _ in 0..count {
                rest.push(sigma * normal.next(&mut rng));
            }
        }
        SamplerKind::Grid { points_per_axis: k, half_width } => {
            let size = spec.lattice_size(n).unwrap_or(u64::MAX);
            if index >= size {
                return Err(Error::GridIndex { index, size });
            }
            // J_1 is the slowest axis
            let mut digits = vec![0usize; count];
            let mut rem = index;
            for d in digits.iter_mut().rev() {
                *d = (rem % k as u64) as usize;
                rem /= k as u64;
            }
            rest.extend(digits.into_iter().map(|i| lattice_point(i, k, half_width)));
        }
    }
    CouplingVector::from_nontrivial(n, &rest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub times: Vec<f64>,
    pub sample_count: u64,
    pub sampler: SamplerSpec,
    pub settings: Settings,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n)?;
        if self.times.is_empty() {
            return Err(Error::InvalidArgument("at least one computation time is required".into()));
        }
        if let Some(t) = self.times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument(format!("computation time {t} must be > 0")));
        }
        if self.sample_count < 1 {
            return Err(Error::InvalidArgument("sample_count must be >= 1".into()));
        }
        self.sampler.validate()?;
        if let SamplerKind::Grid { .. } = self.sampler.kind {
            let size = self.sampler.lattice_size(self.n).unwrap_or(u64::MAX);
            if self.sample_count > size {
                return Err(Error::GridIndex { index: self.sample_count - 1, size });
            }
        }
        self.settings.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub records: u64,
    pub failures: u64,
    pub wall_time: Duration,
}

/// All records of one instance, one per computation time, in the order of `times`.
fn instance_records(cv: &CouplingVector, index: u64, times: &[f64], settings: &Settings) -> Vec<InstanceRecord> {
    match spectral_summary(cv, settings) {
        Ok(summary) => times
            .iter()
            .map(|&t| {
                let mut r = run_instance_with(cv, t, settings, &summary);
                r.index = index;
                r
            })
            .collect(),
        Err(_) => times
            .iter()
            .map(|&t| InstanceRecord {
                index,
                couplings: cv.clone(),
                t,
                min_gap: f64::NAN,
                s_star: f64::NAN,
                success_prob: f64::NAN,
                energy_error: f64::NAN,
                avg_overlap: f64::NAN,
                ground_subspace_dim: 0,
                max_norm_drift: f64::NAN,
                matrix_element_max: f64::NAN,
                criterion_bound: f64::NAN,
                flags: RecordFlags { integration_failed: true, ..Default::default() },
            })
            .collect(),
    }
}

fn with_pool<R: Send>(threads: Option<usize>, job: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Runs `sample_count` instances at every computation time. Records reach
/// `sink` ordered by `(index, position in times)` whatever the parallelism.
pub fn run_ensemble<S>(config: &EnsembleConfig, mut sink: S) -> Result<EnsembleSummary>
where
    S: FnMut(InstanceRecord) -> Result<()> + Send,
{
    config.validate()?;
    let start = Instant::now();
    let mut summary = EnsembleSummary { records: 0, failures: 0, wall_time: Duration::ZERO };
    with_pool(config.threads, || -> Result<()> {
        let mut first = 0u64;
        while first < config.sample_count {
            let last = (first + BATCH as u64).min(config.sample_count);
            let batch: Vec<Result<Vec<InstanceRecord>>> = (first..last)
                .into_par_iter()
                .map(|index| {
                    let cv = sample_couplings(&config.sampler, config.n, index)?;
                    Ok(instance_records(&cv, index, &config.times, &config.settings))
                })
                .collect();
            for records in batch {
                for r in records? {
                    summary.records += 1;
                    if r.flags.integration_failed {
                        summary.failures += 1;
                    }
                    sink(r)?;
                }
            }
            first = last;
        }
        Ok(())
    })??;
    summary.wall_time = start.elapsed();
    Ok(summary)
}

/// Two-qubit records on the `(J_1, J_2)` grid at fixed `J_3`. Index
/// `i1 * k + i2` holds `J_1 = x_{i1}`, `J_2 = x_{i2}`.
pub fn slice_sweep(j3: f64, k: usize, a: f64, t: f64, settings: &Settings) -> Result<Vec<InstanceRecord>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("points per axis {k} must be >= 2")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("half-width {a} must be > 0")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("computation time {t} must be > 0")));
    }
    settings.validate()?;
    let records: Result<Vec<Vec<InstanceRecord>>> = (0..k * k)
        .into_par_iter()
        .map(|idx| {
            let j1 = lattice_point(idx / k, k, a);
            let j2 = lattice_point(idx % k, k, a);
            let cv = CouplingVector::new(2, vec![0.0, j1, j2, j3])?;
            Ok(instance_records(&cv, idx as u64, &[t], settings))
        })
        .collect();
    Ok(records?.into_iter().flatten().collect())
}
