//! Figures of merit for one run: success probability, energy error and the
//! time-averaged ground-state overlap, assembled into an [`InstanceRecord`].

use std::fmt;

use crate::error::{Error, Result};
use crate::evolution::{evolve_state, uniform_grid, EvolveOptions, QuantumState, DEFAULT_NORM_DRIFT_CEILING, DEFAULT_ODE_TOL};
use crate::hamiltonian::{final_energies, CouplingVector, FinalEnergies};
use crate::spectrum::{
    adiabatic_diagnostics_with, find_min_gap_with, AdiabaticDiagnostics, GapResult, PathSpectrum,
    DEFAULT_COARSE_POINTS, DEFAULT_DEG_TOL, DEFAULT_REFINE_TOL,
};

pub const DEFAULT_OVERLAP_GRID: usize = 501;
pub const DEFAULT_DIAG_GRID: usize = 201;

/// Tolerances and grid sizes for a full instance run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub ode_tol: f64,
    pub norm_drift_ceiling: f64,
    pub gap_grid: usize,
    pub refine_tol: f64,
    pub overlap_grid: usize,
    pub diag_grid: usize,
    pub deg_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            ode_tol: DEFAULT_ODE_TOL,
            norm_drift_ceiling: DEFAULT_NORM_DRIFT_CEILING,
            gap_grid: DEFAULT_COARSE_POINTS,
            refine_tol: DEFAULT_REFINE_TOL,
            overlap_grid: DEFAULT_OVERLAP_GRID,
            diag_grid: DEFAULT_DIAG_GRID,
            deg_tol: DEFAULT_DEG_TOL,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ode_tol", self.ode_tol),
            ("norm_drift_ceiling", self.norm_drift_ceiling),
            ("refine_tol", self.refine_tol),
            ("deg_tol", self.deg_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be > 0")));
            }
        }
        if self.gap_grid < 3 {
            return Err(Error::InvalidArgument(format!("gap_grid = {} must be >= 3", self.gap_grid)));
        }
        if self.overlap_grid < 2 {
            return Err(Error::InvalidArgument(format!("overlap_grid = {} must be >= 2", self.overlap_grid)));
        }
        if self.diag_grid < 2 {
            return Err(Error::InvalidArgument(format!("diag_grid = {} must be >= 2", self.diag_grid)));
        }
        Ok(())
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions { tol: self.ode_tol, norm_drift_ceiling: self.norm_drift_ceiling, keep_steps: false }
    }
}

/// Diagnostic flags attached to a record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecordFlags {
    /// The final ground level is degenerate (`gap(1) < deg_tol`).
    pub final_degenerate: bool,
    /// Success probability was taken over a ground subspace of dimension > 1.
    pub ground_degenerate: bool,
    pub at_endpoint: bool,
    /// Several distinct minima tied for the minimum gap.
    pub tie: bool,
    /// The overlap quadrature used a ground-subspace projector somewhere.
    pub overlap_degenerate: bool,
    /// Degenerate `(m, s)` pairs were left out of the criterion bound.
    pub diag_skipped: bool,
    pub integration_failed: bool,
}

impl RecordFlags {
    const NAMES: [&'static str; 7] = [
        "final_degenerate",
        "ground_degenerate",
        "at_endpoint",
        "tie",
        "overlap_degenerate",
        "diag_skipped",
        "integration_failed",
    ];

    fn bits(&self) -> [bool; 7] {
        [
            self.final_degenerate,
            self.ground_degenerate,
            self.at_endpoint,
            self.tie,
            self.overlap_degenerate,
            self.diag_skipped,
            self.integration_failed,
        ]
    }

    pub fn is_empty(&self) -> bool {
        !self.bits().iter().any(|&b| b)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for tok in text.split('|').filter(|t| !t.is_empty()) {
            match tok {
                "final_degenerate" => out.final_degenerate = true,
                "ground_degenerate" => out.ground_degenerate = true,
                "at_endpoint" => out.at_endpoint = true,
                "tie" => out.tie = true,
                "overlap_degenerate" => out.overlap_degenerate = true,
                "diag_skipped" => out.diag_skipped = true,
                "integration_failed" => out.integration_failed = true,
                other => return Err(Error::Csv(format!("unknown flag `{other}`"))),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RecordFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> =
            self.bits().iter().zip(Self::NAMES).filter(|(b, _)| **b).map(|(_, n)| n).collect();
        f.write_str(&names.join("|"))
    }
}

/// One ensemble row.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub index: u64,
    pub couplings: CouplingVector,
    pub t: f64,
    pub min_gap: f64,
    pub s_star: f64,
    pub success_prob: f64,
    pub energy_error: f64,
    pub avg_overlap: f64,
    pub ground_subspace_dim: usize,
    pub max_norm_drift: f64,
    pub matrix_element_max: f64,
    pub criterion_bound: f64,
    pub flags: RecordFlags,
}

impl InstanceRecord {
    pub fn n(&self) -> usize {
        self.couplings.n()
    }

    /// `|J_{2^n - 1}|`.
    pub fn abs_j_top(&self) -> f64 {
        self.couplings.top().abs()
    }

    /// Numeric column by CSV name, or `J<x>` for a coupling.
    pub fn field(&self, name: &str) -> Option<f64> {
        Some(match name {
            "index" => self.index as f64,
            "n" => self.n() as f64,
            "T" => self.t,
            "min_gap" => self.min_gap,
            "s_star" => self.s_star,
            "P" => self.success_prob,
            "delta_E" => self.energy_error,
            "delta" => self.avg_overlap,
            "abs_J_top" => self.abs_j_top(),
            "ground_dim" => self.ground_subspace_dim as f64,
            "norm_drift" => self.max_norm_drift,
            "M" => self.matrix_element_max,
            "criterion_bound" => self.criterion_bound,
            _ => {
                let x: usize = name.strip_prefix('J')?.parse().ok()?;
                return (x < self.couplings.dim()).then(|| self.couplings.get(x));
            }
        })
    }
}

/// Ground-subspace weight of the final state and the subspace dimension.
///
/// The subspace is every label within `deg_tol` of the lowest final energy;
/// for a non-degenerate ground level this is `|<0;1|psi(1)>|^2`. Weights are
/// divided by `||psi||^2`, so integrator norm drift does not leak into `P`.
pub fn success_probability(final_state: &QuantumState, f: &FinalEnergies, deg_tol: f64) -> (f64, usize) {
    let min = f.min();
    let (mut ground, mut total, mut dim) = (0.0, 0.0, 0);
    for (p, &e) in final_state.probabilities().zip(f.values()) {
        total += p;
        if e - min < deg_tol {
            ground += p;
            dim += 1;
        }
    }
    ((ground / total).clamp(0.0, 1.0), dim)
}

/// `<psi|H_F|psi> / <psi|psi> - min f`, accumulated as `sum |psi_y|^2 (f_y - min f)`.
pub fn energy_error(final_state: &QuantumState, f: &FinalEnergies) -> f64 {
    let min = f.min();
    let (mut acc, mut total) = (0.0, 0.0);
    for (p, &e) in final_state.probabilities().zip(f.values()) {
        acc += p * (e - min);
        total += p;
    }
    acc / total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapResult {
    pub delta: f64,
    /// Grid points where the instantaneous ground level was degenerate.
    pub degenerate_points: usize,
}

/// Trapezoid estimate of `int_0^1 |<0;s|psi(s)>|^2 ds` from samples on a
/// uniform grid; degenerate ground levels use the ground-subspace projector.
pub fn average_overlap(samples: &[(f64, QuantumState)], cv: &CouplingVector, deg_tol: f64) -> Result<OverlapResult> {
    average_overlap_with(samples, &PathSpectrum::new(cv)?, deg_tol)
}

pub fn average_overlap_with(
    samples: &[(f64, QuantumState)],
    path: &PathSpectrum,
    deg_tol: f64,
) -> Result<OverlapResult> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("overlap quadrature needs at least two samples".into()));
    }
    if samples[0].0 != 0.0 || samples[samples.len() - 1].0 != 1.0 {
        return Err(Error::InvalidArgument("overlap samples must span [0, 1]".into()));
    }
    let mut degenerate_points = 0;
    let mut values = Vec::with_capacity(samples.len());
    for (s, psi) in samples {
        let point = path.point(*s)?;
        let levels = point.system.values();
        let mut w = psi.overlap_real(point.system.vector(0)).norm_sqr();
        let mut m = 1;
        while m < levels.len() && levels[m] - levels[0] < deg_tol {
            w += psi.overlap_real(point.system.vector(m)).norm_sqr();
            m += 1;
        }
        if m > 1 {
            degenerate_points += 1;
        }
        values.push(w / psi.norm().powi(2));
    }
    let mut integral = 0.0;
    for k in 1..samples.len() {
        integral += 0.5 * (samples[k].0 - samples[k - 1].0) * (values[k] + values[k - 1]);
    }
    Ok(OverlapResult { delta: integral.clamp(0.0, 1.0), degenerate_points })
}

/// T-independent spectral part of a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub gap: GapResult,
    pub diagnostics: AdiabaticDiagnostics,
}

pub fn spectral_summary(cv: &CouplingVector, settings: &Settings) -> Result<SpectralSummary> {
    let path = PathSpectrum::new(cv)?;
    Ok(SpectralSummary {
        gap: find_min_gap_with(&path, settings.gap_grid, settings.refine_tol, settings.deg_tol)?,
        diagnostics: adiabatic_diagnostics_with(&path, settings.diag_grid, settings.deg_tol)?,
    })
}

/// Full record for one instance and computation time.
pub fn run_instance(cv: &CouplingVector, t: f64, settings: &Settings) -> Result<InstanceRecord> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("computation time {t} must be > 0")));
    }
    settings.validate()?;
    let summary = spectral_summary(cv, settings)?;
    Ok(run_instance_with(cv, t, settings, &summary))
}

fn failed_record(cv: &CouplingVector, t: f64, summary: &SpectralSummary, mut flags: RecordFlags) -> InstanceRecord {
    flags.integration_failed = true;
    InstanceRecord {
        index: 0,
        couplings: cv.clone(),
        t,
        min_gap: summary.gap.min_gap,
        s_star: summary.gap.s_star,
        success_prob: f64::NAN,
        energy_error: f64::NAN,
        avg_overlap: f64::NAN,
        ground_subspace_dim: 0,
        max_norm_drift: f64::NAN,
        matrix_element_max: summary.diagnostics.matrix_element_max,
        criterion_bound: summary.diagnostics.criterion_bound,
        flags,
    }
}

/// Record for one computation time, reusing a precomputed spectral summary.
/// Integration failures produce a flagged record with NaN dynamics fields.
pub fn run_instance_with(
    cv: &CouplingVector,
    t: f64,
    settings: &Settings,
    summary: &SpectralSummary,
) -> InstanceRecord {
    let f = final_energies(cv);
    let mut flags = RecordFlags {
        final_degenerate: summary.gap.final_degenerate,
        at_endpoint: summary.gap.at_endpoint,
        tie: summary.gap.tie,
        diag_skipped: summary.diagnostics.skipped_pairs > 0,
        ..Default::default()
    };
    let grid = uniform_grid(settings.overlap_grid);
    let run = match evolve_state(&f, t, &QuantumState::uniform(cv.n()), &settings.evolve_options(), &grid) {
        Ok(r) => r,
        Err(_) => return failed_record(cv, t, summary, flags),
    };
    let path = match PathSpectrum::from_energies(f.clone()) {
        Ok(p) => p,
        Err(_) => return failed_record(cv, t, summary, flags),
    };
    let overlap = match average_overlap_with(&run.samples, &path, settings.deg_tol) {
        Ok(o) => o,
        Err(_) => return failed_record(cv, t, summary, flags),
    };
    let (p, ground_dim) = success_probability(&run.final_state, &f, settings.deg_tol);
    flags.ground_degenerate = ground_dim > 1;
    flags.overlap_degenerate = overlap.degenerate_points > 0;
    InstanceRecord {
        index: 0,
        couplings: cv.clone(),
        t,
        min_gap: summary.gap.min_gap,
        s_star: summary.gap.s_star,
        success_prob: p,
        energy_error: energy_error(&run.final_state, &f),
        avg_overlap: overlap.delta,
        ground_subspace_dim: ground_dim,
        max_norm_drift: run.max_norm_drift,
        matrix_element_max: summary.diagnostics.matrix_element_max,
        criterion_bound: summary.diagnostics.criterion_bound,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::evolve;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    #[test]
    fn energy_error_of_exact_ground_state() {
        let cv = CouplingVector::new(2, vec![0.0, 0.4, -0.2, 0.9]).unwrap();
        let f = final_energies(&cv);
        let y = f.ground_labels(1e-9)[0];
        assert_eq!(energy_error(&QuantumState::basis(2, y), &f), 0.0);
    }

    #[test]
    fn energy_error_of_uniform_state() {
        let cv = CouplingVector::new(3, vec![0.0, 0.4, -0.2, 0.9, 1.1, -2.0, 0.3, 0.05]).unwrap();
        let f = final_energies(&cv);
        let e = energy_error(&QuantumState::uniform(3), &f);
        assert!((e + f.min()).abs() < 1e-14);
    }

    #[test]
    fn success_probability_degenerate_projector() {
        let f = final_energies(&CouplingVector::zeros(2).unwrap());
        let (p, dim) = success_probability(&QuantumState::uniform(2), &f, 1e-9);
        assert!((p - 1.0).abs() < 1e-15);
        assert_eq!(dim, 4);
    }

    #[test]
    fn populations_sum_to_norm() {
        let cv = CouplingVector::new(2, vec![0.0, 1.1, -0.3, 0.6]).unwrap();
        let f = final_energies(&cv);
        let r = evolve(&cv, 5.0, &EvolveOptions::default(), &[]).unwrap();
        let (p, _) = success_probability(&r.final_state, &f, 1e-9);
        let ground = f.ground_labels(1e-9);
        let excited: f64 = r
            .final_state
            .probabilities()
            .enumerate()
            .filter(|(y, _)| !ground.contains(y))
            .map(|(_, q)| q)
            .sum();
        assert!((p + excited - 1.0).abs() < 1e-8);
    }

    #[test]
    fn near_degenerate_two_qubit_floor() {
        let cv = CouplingVector::new(2, vec![0.0, 0.01, 0.02, 0.015]).unwrap();
        let r = evolve(&cv, 5.0, &EvolveOptions::default(), &[]).unwrap();
        let (p, dim) = success_probability(&r.final_state, &final_energies(&cv), 1e-9);
        assert_eq!(dim, 1);
        assert!((p - 0.25).abs() < 0.05, "P = {p}");
    }

    #[test]
    fn overlap_of_zero_couplings_is_one() {
        let cv = CouplingVector::zeros(3).unwrap();
        let grid = uniform_grid(DEFAULT_OVERLAP_GRID);
        let r = evolve(&cv, 10.0, &EvolveOptions::default(), &grid).unwrap();
        let o = average_overlap(&r.samples, &cv, 1e-9).unwrap();
        assert!((o.delta - 1.0).abs() < 1e-6);
        assert!(o.degenerate_points >= 1);
    }

    #[test]
    fn overlap_adiabatic_one_qubit() {
        let cv = CouplingVector::new(1, vec![0.0, 1.0]).unwrap();
        let fine = uniform_grid(1001);
        let r = evolve(&cv, 400.0, &EvolveOptions::default(), &fine).unwrap();
        let coarse: Vec<_> = r.samples.iter().step_by(2).cloned().collect();
        assert_eq!(coarse.len(), 501);
        let a = average_overlap(&coarse, &cv, 1e-9).unwrap().delta;
        let b = average_overlap(&r.samples, &cv, 1e-9).unwrap().delta;
        assert!(a > 0.99);
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn overlap_rejects_short_or_partial_samples() {
        let cv = CouplingVector::zeros(1).unwrap();
        let psi = QuantumState::uniform(1);
        assert!(average_overlap(&[(0.0, psi.clone())], &cv, 1e-9).is_err());
        assert!(average_overlap(&[(0.0, psi.clone()), (0.5, psi)], &cv, 1e-9).is_err());
    }

    #[test]
    fn record_for_zero_couplings() {
        let cv = CouplingVector::zeros(2).unwrap();
        let r = run_instance(&cv, 5.0, &Settings::default()).unwrap();
        assert_eq!(r.min_gap, 0.0);
        assert_eq!(r.s_star, 1.0);
        assert!((r.success_prob - 1.0).abs() < 1e-12);
        assert!(r.energy_error.abs() < 1e-15);
        assert!((r.avg_overlap - 1.0).abs() < 1e-6);
        assert_eq!(r.ground_subspace_dim, 4);
        assert!(r.flags.final_degenerate && r.flags.ground_degenerate);
    }

    #[test]
    fn record_for_one_qubit_against_tight_reintegration() {
        let cv = CouplingVector::new(1, vec![0.0, 1.0]).unwrap();
        let rec = run_instance(&cv, 5.0, &Settings::default()).unwrap();
        assert!((rec.min_gap - 2f64.sqrt()).abs() < 1e-10);
        assert!((rec.s_star - 0.5).abs() < 1e-6);
        // independent fixed-step RK4 at a very fine step as the oracle
        let f = final_energies(&cv);
        let mut psi = QuantumState::uniform(1).amplitudes().to_vec();
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let rhs = |s: f64, y: &[Complex64]| -> Vec<Complex64> {
            let fy = f.values();
            vec![
                Complex64::new(0.0, -5.0) * (y[0] * (s * fy[0]) - y[1] * (1.0 - s)),
                Complex64::new(0.0, -5.0) * (y[1] * (s * fy[1]) - y[0] * (1.0 - s)),
            ]
        };
        for i in 0..steps {
            let s = i as f64 * h;
            let k1 = rhs(s, &psi);
            let y2: Vec<_> = psi.iter().zip(&k1).map(|(a, k)| a + k * (0.5 * h)).collect();
            let k2 = rhs(s + 0.5 * h, &y2);
            let y3: Vec<_> = psi.iter().zip(&k2).map(|(a, k)| a + k * (0.5 * h)).collect();
            let k3 = rhs(s + 0.5 * h, &y3);
            let y4: Vec<_> = psi.iter().zip(&k3).map(|(a, k)| a + k * h).collect();
            let k4 = rhs(s + h, &y4);
            for j in 0..2 {
                psi[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
        }
        let p_oracle = psi[1].norm_sqr();
        assert!((rec.success_prob - p_oracle).abs() < 1e-8, "{} vs {p_oracle}", rec.success_prob);
    }

    #[test]
    fn separable_two_qubit_product() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
        let s = Settings::default();
        for _ in 0..3 {
            let j1: f64 = rng.gen_range(-3.0..3.0);
            let j2: f64 = rng.gen_range(-3.0..3.0);
            let t = rng.gen_range(2.0..20.0);
            let two = run_instance(&CouplingVector::new(2, vec![0.0, j1, j2, 0.0]).unwrap(), t, &s).unwrap();
            let a = run_instance(&CouplingVector::new(1, vec![0.0, j1]).unwrap(), t, &s).unwrap();
            let b = run_instance(&CouplingVector::new(1, vec![0.0, j2]).unwrap(), t, &s).unwrap();
            assert!((two.success_prob - a.success_prob * b.success_prob).abs() < 1e-6);
            assert!((two.min_gap - a.min_gap.min(b.min_gap)).abs() < 1e-8);
        }
    }

    #[test]
    fn qubit_swap_invariance() {
        let s = Settings::default();
        let cv = CouplingVector::new(2, vec![0.0, 0.7, -1.9, 0.45]).unwrap();
        let a = run_instance(&cv, 5.0, &s).unwrap();
        let b = run_instance(&cv.swap_qubits(0, 1).unwrap(), 5.0, &s).unwrap();
        for (x, y) in [
            (a.min_gap, b.min_gap),
            (a.s_star, b.s_star),
            (a.success_prob, b.success_prob),
            (a.energy_error, b.energy_error),
            (a.avg_overlap, b.avg_overlap),
        ] {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn integration_failure_becomes_flagged_record() {
        let s = Settings { norm_drift_ceiling: 1e-300, ..Settings::default() };
        let cv = CouplingVector::new(1, vec![0.0, 1.0]).unwrap();
        let r = run_instance(&cv, 5.0, &s).unwrap();
        assert!(r.flags.integration_failed);
        assert!(r.success_prob.is_nan());
        assert!((r.min_gap - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn flags_display_and_parse() {
        let f = RecordFlags { final_degenerate: true, tie: true, ..Default::default() };
        assert_eq!(f.to_string(), "final_degenerate|tie");
        assert_eq!(RecordFlags::parse("final_degenerate|tie").unwrap(), f);
        assert_eq!(RecordFlags::parse("").unwrap(), RecordFlags::default());
        assert!(RecordFlags::parse("bogus").is_err());
    }

    #[test]
    fn non_positive_time_rejected() {
        let cv = CouplingVector::new(1, vec![0.0, 1.0]).unwrap();
        for t in [0.0, -5.0, f64::NAN, f64::INFINITY] {
            assert!(run_instance(&cv, t, &Settings::default()).is_err());
        }
    }

    #[test]
    fn settings_validation() {
        assert!(Settings::default().validate().is_ok());
        assert!(Settings { ode_tol: -1.0, ..Default::default() }.validate().is_err());
        assert!(Settings { gap_grid: 2, ..Default::default() }.validate().is_err());
    }
}
