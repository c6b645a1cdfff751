//! Reduced-time Schrödinger integration `d psi / ds = -i T H(s) psi` with
//! the embedded Dormand-Prince 5(4) pair.
//!
//! The fifth-order solution is propagated (local extrapolation), the
//! difference to the embedded fourth-order solution drives step control,
//! and every accepted step carries a fourth-order continuous extension
//! used for output sampling. The state is never renormalised; the norm
//! drift is tracked instead.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{apply_scaled, final_energies, CouplingVector, FinalEnergies};

pub const DEFAULT_ODE_TOL: f64 = 1e-10;
pub const DEFAULT_NORM_DRIFT_CEILING: f64 = 1e-6;
/// Steps shorter than this abort the integration.
pub const MIN_STEP: f64 = 1e-14;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Complex amplitudes over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// The equal superposition `2^{-n/2} sum_y |y>`, ground state of the transverse field.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let amp = 1.0 / (dim as f64).sqrt();
        Self { amplitudes: vec![Complex64::new(amp, 0.0); dim] }
    }

    pub fn basis(n: usize, y: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[y] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `<v|self>` for a real vector `v`.
    pub fn overlap_real(&self, v: &[f64]) -> Complex64 {
        self.amplitudes.iter().zip(v).map(|(a, &b)| a * b).sum()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a * alpha).collect() }
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amplitudes.iter().map(|a| a.norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Absolute and relative local error tolerance.
    pub tol: f64,
    pub norm_drift_ceiling: f64,
    /// Retain every accepted step's interpolant in the result.
    pub keep_steps: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_ODE_TOL, norm_drift_ceiling: DEFAULT_NORM_DRIFT_CEILING, keep_steps: false }
    }
}

/// Continuous extension of one accepted step over `[start, end]`.
#[derive(Debug, Clone)]
pub struct DenseStep {
    start: f64,
    end: f64,
    // y0, y1 - y0, and the three Hermite-type correction vectors
    cont: [Vec<Complex64>; 5],
    y_end: Vec<Complex64>,
}

impl DenseStep {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn sample(&self, s: f64) -> Result<QuantumState> {
        if !(self.start..=self.end).contains(&s) {
            return Err(Error::OutsideSpan { s, start: self.start, end: self.end });
        }
        if s == self.end {
            return Ok(QuantumState::new(self.y_end.clone()));
        }
        if s == self.start {
            return Ok(QuantumState::new(self.cont[0].clone()));
        }
        Ok(QuantumState::new(interpolate_cont(&self.cont, (s - self.start) / (self.end - self.start))))
    }
}

fn interpolate_cont(cont: &[Vec<Complex64>; 5], theta: f64) -> Vec<Complex64> {
    let theta1 = 1.0 - theta;
    (0..cont[0].len())
        .map(|i| {
            cont[0][i]
                + (cont[1][i] + (cont[2][i] + (cont[3][i] + cont[4][i] * theta1) * theta) * theta1) * theta
        })
        .collect()
}

/// Interpolated state at `s` from a sequence of accepted steps.
pub fn dense_sample(steps: &[DenseStep], s: f64) -> Result<QuantumState> {
    let (start, end) = match (steps.first(), steps.last()) {
        (Some(a), Some(b)) => (a.start, b.end),
        _ => return Err(Error::InvalidArgument("no accepted steps".into())),
    };
    if !(start..=end).contains(&s) {
        return Err(Error::OutsideSpan { s, start, end });
    }
    let idx = steps.partition_point(|st| st.end < s);
    steps[idx.min(steps.len() - 1)].sample(s)
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub final_state: QuantumState,
    /// `(s, psi(s))` on the requested output grid.
    pub samples: Vec<(f64, QuantumState)>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest `| ||psi|| - ||psi(start)|| |` over accepted steps.
    pub max_norm_drift: f64,
    /// Empty unless `EvolveOptions::keep_steps` was set.
    pub steps: Vec<DenseStep>,
}

fn validate_grid(grid: &[f64], start: f64, end: f64) -> Result<()> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("output grid must be sorted".into()));
    }
    if let Some(&s) = grid.iter().find(|s| !(start..=end).contains(*s)) {
        return Err(Error::OutsideSpan { s, start, end });
    }
    Ok(())
}

/// Adaptive Dormand-Prince integration of a complex linear ODE from `start`
/// to `end > start`, starting with step `h0`.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[Complex64],
    start: f64,
    end: f64,
    h0: f64,
    opts: &EvolveOptions,
    output_grid: &[f64],
) -> Result<IntegrationResult>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    if !(end > start) {
        return Err(Error::InvalidArgument(format!("empty span [{start}, {end}]")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be > 0", opts.tol)));
    }
    if !(h0 > 0.0) {
        return Err(Error::InvalidArgument(format!("initial step {h0} must be > 0")));
    }
    validate_grid(output_grid, start, end)?;

    let dim = y0.len();
    let zero = Complex64::new(0.0, 0.0);
    let norm0 = y0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let mut y = y0.to_vec();
    let mut y_new = vec![zero; dim];
    let mut tmp = vec![zero; dim];
    let mut k: [Vec<Complex64>; 7] = std::array::from_fn(|_| vec![zero; dim]);

    let mut samples = Vec::with_capacity(output_grid.len());
    let mut next_out = 0;
    while next_out < output_grid.len() && output_grid[next_out] == start {
        samples.push((start, QuantumState::new(y.clone())));
        next_out += 1;
    }

    let mut steps = Vec::new();
    let mut accepted = 0;
    let mut rejected = 0;
    let mut max_drift = 0.0f64;
    let mut s = start;
    let mut h = h0.min(end - start);
    rhs(s, &y, &mut k[0]);

    while s < end {
        let last = s + h >= end;
        if last {
            h = end - s;
        }

        for i in 0..dim {
            tmp[i] = y[i] + k[0][i] * (h * A21);
        }
        rhs(s + C2 * h, &tmp, &mut k[1]);
        for i in 0..dim {
            tmp[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * h;
        }
        rhs(s + C3 * h, &tmp, &mut k[2]);
        for i in 0..dim {
            tmp[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * h;
        }
        rhs(s + C4 * h, &tmp, &mut k[3]);
        for i in 0..dim {
            tmp[i] = y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * h;
        }
        rhs(s + C5 * h, &tmp, &mut k[4]);
        for i in 0..dim {
            tmp[i] = y[i]
                + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65) * h;
        }
        let s_next = if last { end } else { s + h };
        rhs(s_next, &tmp, &mut k[5]);
        for i in 0..dim {
            y_new[i] = y[i]
                + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76) * h;
        }
        rhs(s_next, &y_new, &mut k[6]);

        // every real component must pass on its own
        let mut worst = 0.0f64;
        for i in 0..dim {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7)
                * h;
            let sc_re = opts.tol + opts.tol * y[i].re.abs().max(y_new[i].re.abs());
            let sc_im = opts.tol + opts.tol * y[i].im.abs().max(y_new[i].im.abs());
            let (r, m) = ((e.re / sc_re).abs(), (e.im / sc_im).abs());
            // f64::max drops NaN, so a non-finite estimate is mapped to infinity
            worst = if r.is_finite() && m.is_finite() { worst.max(r).max(m) } else { f64::INFINITY };
        }
        let err = worst;

        if err <= 1.0 {
            accepted += 1;
            let need_cont = opts.keep_steps
                || (next_out < output_grid.len() && output_grid[next_out] <= s_next);
            let cont = need_cont.then(|| {
                let mut c: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![zero; dim]);
                for i in 0..dim {
                    let ydiff = y_new[i] - y[i];
                    let bspl = k[0][i] * h - ydiff;
                    c[0][i] = y[i];
                    c[1][i] = ydiff;
                    c[2][i] = bspl;
                    c[3][i] = ydiff - k[6][i] * h - bspl;
                    c[4][i] = (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6
                        + k[6][i] * D7)
                        * h;
                }
                c
            });
            if let Some(c) = &cont {
                while next_out < output_grid.len() && output_grid[next_out] <= s_next {
                    let so = output_grid[next_out];
                    let state = if so == s_next {
                        y_new.clone()
                    } else {
                        interpolate_cont(c, (so - s) / h)
                    };
                    samples.push((so, QuantumState::new(state)));
                    next_out += 1;
                }
            }
            if opts.keep_steps {
                steps.push(DenseStep { start: s, end: s_next, cont: cont.unwrap(), y_end: y_new.clone() });
            }

            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            s = s_next;

            let norm = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let drift = (norm - norm0).abs();
            max_drift = max_drift.max(drift);
            if drift > opts.norm_drift_ceiling {
                return Err(Error::NormDrift { drift, ceiling: opts.norm_drift_ceiling });
            }

            let factor = if err == 0.0 { MAX_FACTOR } else { SAFETY * err.powf(-0.2) };
            h *= factor.clamp(MIN_FACTOR, MAX_FACTOR);
        } else {
            rejected += 1;
            // a non-finite estimate shrinks at the maximum rate
            let factor = if err.is_finite() { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0) } else { MIN_FACTOR };
            h *= factor;
        }
        if s < end && h < MIN_STEP {
            return Err(Error::StepUnderflow { s, h });
        }
    }

    Ok(IntegrationResult {
        final_state: QuantumState::new(y),
        samples,
        accepted_steps: accepted,
        rejected_steps: rejected,
        max_norm_drift: max_drift,
        steps,
    })
}

/// Evolves `psi0` under `H(s)` with computation time `t` from `s = 0` to `s = 1`.
pub fn evolve_state(
    f: &FinalEnergies,
    t: f64,
    psi0: &QuantumState,
    opts: &EvolveOptions,
    output_grid: &[f64],
) -> Result<IntegrationResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("computation time {t} must be positive")));
    }
    if psi0.dim() != f.dim() {
        return Err(Error::Dimension { expected: f.dim(), actual: psi0.dim() });
    }
    let energies = f.values();
    let scale = Complex64::new(0.0, -t);
    integrate(
        |s, psi, out| apply_scaled(energies, s, scale, psi, out),
        psi0.amplitudes(),
        0.0,
        1.0,
        1e-4 / t,
        opts,
        output_grid,
    )
}

/// Evolves the equal superposition for the instance `cv` over `s in [0, 1]`.
pub fn evolve(cv: &CouplingVector, t: f64, opts: &EvolveOptions, output_grid: &[f64]) -> Result<IntegrationResult> {
    evolve_state(&final_energies(cv), t, &QuantumState::uniform(cv.n()), opts, output_grid)
}

/// `points` uniformly spaced reduced times covering `[0, 1]`, endpoints exact.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let last = points - 1;
            (0..points).map(|k| if k == last { 1.0 } else { k as f64 / last as f64 }).collect()
        }
    }
}
