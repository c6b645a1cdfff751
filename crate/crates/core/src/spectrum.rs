//! Instantaneous spectrum of `H(s)`, the ground-state gap and its minimum,
//! and adiabatic-condition diagnostics.

use crate::error::{Error, Result};
use crate::hamiltonian::{
    apply_derivative, build_initial, check_reduced_time, final_energies, interpolate_into,
    CouplingVector, FinalEnergies, SymmetricOperator,
};

/// Sweep cap for the Jacobi eigensolver.
pub const MAX_SWEEPS: usize = 100;

/// Energy below which a gap is treated as a degeneracy.
pub const DEFAULT_DEG_TOL: f64 = 1e-9;

pub const DEFAULT_COARSE_POINTS: usize = 1001;
pub const DEFAULT_REFINE_TOL: f64 = 1e-8;

/// Components smaller than this are skipped when fixing eigenvector signs.
const SIGN_THRESHOLD: f64 = 1e-12;

/// Sorted eigenvalues and orthonormal eigenvectors of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    dim: usize,
    values: Vec<f64>,
    // column m (the eigenvector for values[m]) is vectors[m*dim..(m+1)*dim]
    vectors: Vec<f64>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector `m`, paired with `values()[m]`.
    pub fn vector(&self, m: usize) -> &[f64] {
        &self.vectors[m * self.dim..(m + 1) * self.dim]
    }

    /// `max |A V - V Lambda|`.
    pub fn residual(&self, op: &SymmetricOperator) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for m in 0..n {
            let v = self.vector(m);
            for a in 0..n {
                let av: f64 = (0..n).map(|b| op.get(a, b) * v[b]).sum();
                worst = worst.max((av - self.values[m] * v[a]).abs());
            }
        }
        worst
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in p..n {
                let dot: f64 = self.vector(p).iter().zip(self.vector(q)).map(|(a, b)| a * b).sum();
                let target = if p == q { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Eigensystem of `H(s)` at one reduced time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint {
    pub s: f64,
    pub system: Eigensystem,
}

impl SpectralPoint {
    pub fn gap(&self) -> f64 {
        let v = self.system.values();
        if v.len() < 2 {
            return 0.0;
        }
        v[1] - v[0]
    }
}

/// Minimum of the ground-state gap over `s in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub min_gap: f64,
    pub s_star: f64,
    pub at_endpoint: bool,
    /// `gap(1)` is below the degeneracy tolerance.
    pub final_degenerate: bool,
    /// Several distinct local minima agreed with the global minimum.
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticDiagnostics {
    /// `max_s |<1;s| dH/ds |0;s>|`.
    pub matrix_element_max: f64,
    /// `max_{s, m > 0} |<m;s| dH/ds |0;s>| / (E_m - E_0)^2`.
    pub criterion_bound: f64,
    /// `(m, s)` pairs left out because `E_m - E_0` fell below the degeneracy tolerance.
    pub skipped_pairs: usize,
}

/// Cyclic Jacobi rotations with threshold sweeps. `a` is overwritten.
/// Returns unsorted eigenvalues and, when requested, eigenvectors stored
/// row-major with eigenvector `p` in column `p`.
fn jacobi(a: &mut [f64], n: usize, want_vectors: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut d: Vec<f64> = (0..n).map(|p| a[p * n + p]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    let mut v = if want_vectors {
        let mut v = vec![0.0; n * n];
        for p in 0..n {
            v[p * n + p] = 1.0;
        }
        v
    } else {
        Vec::new()
    };

    #[inline(always)]
    fn rotate(m: &mut [f64], i: usize, j: usize, s: f64, tau: f64) {
        let g = m[i];
        let h = m[j];
        m[i] = g - s * (h + g * tau);
        m[j] = h + s * (g - h * tau);
    }

    let mut off = 0.0;
    for sweep in 1..=MAX_SWEEPS {
        off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].abs();
            }
        }
        if off == 0.0 {
            return Ok((d, v));
        }
        let thresh = if sweep < 4 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                } else if apq.abs() > thresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[p * n + q] = 0.0;
                    for j in 0..p {
                        rotate(a, j * n + p, j * n + q, s, tau);
                    }
                    for j in (p + 1)..q {
                        rotate(a, p * n + j, j * n + q, s, tau);
                    }
                    for j in (q + 1)..n {
                        rotate(a, p * n + j, q * n + j, s, tau);
                    }
                    if want_vectors {
                        for j in 0..n {
                            rotate(&mut v, j * n + p, j * n + q, s, tau);
                        }
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS, off_norm: off })
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    order
}

fn eigensystem_of(entries: &[f64], n: usize) -> Result<Eigensystem> {
    let mut a = entries.to_vec();
    let (d, v) = jacobi(&mut a, n, true)?;
    let order = sorted_order(&d);
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &p in &order {
        values.push(d[p]);
        let start = vectors.len();
        vectors.extend((0..n).map(|j| v[j * n + p]));
        let col = &mut vectors[start..];
        if let Some(first) = col.iter().find(|c| c.abs() > SIGN_THRESHOLD) {
            if *first < 0.0 {
                col.iter_mut().for_each(|c| *c = -*c);
            }
        }
    }
    Ok(Eigensystem { dim: n, values, vectors })
}

fn eigenvalues_of(entries: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut a = entries.to_vec();
    let (mut d, _) = jacobi(&mut a, n, false)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full eigendecomposition with ascending eigenvalues and eigenvectors whose
/// first non-negligible component is positive.
pub fn eigensystem(op: &SymmetricOperator) -> Result<Eigensystem> {
    eigensystem_of(op.entries(), op.dim())
}

/// Ascending eigenvalues only.
pub fn eigenvalues(op: &SymmetricOperator) -> Result<Vec<f64>> {
    eigenvalues_of(op.entries(), op.dim())
}

/// `H(s)` along the interpolation path of one problem instance.
#[derive(Debug, Clone)]
pub struct PathSpectrum {
    hi: SymmetricOperator,
    f: FinalEnergies,
}

impl PathSpectrum {
    pub fn new(cv: &CouplingVector) -> Result<Self> {
        Ok(Self { hi: build_initial(cv.n())?, f: final_energies(cv) })
    }

    pub fn from_energies(f: FinalEnergies) -> Result<Self> {
        Ok(Self { hi: build_initial(f.n())?, f })
    }

    pub fn energies(&self) -> &FinalEnergies {
        &self.f
    }

    fn dense(&self, s: f64) -> Result<Vec<f64>> {
        check_reduced_time(s)?;
        let mut h = vec![0.0; self.hi.dim() * self.hi.dim()];
        interpolate_into(&self.hi, &self.f, s, &mut h);
        Ok(h)
    }

    pub fn point(&self, s: f64) -> Result<SpectralPoint> {
        let h = self.dense(s)?;
        Ok(SpectralPoint { s, system: eigensystem_of(&h, self.hi.dim())? })
    }

    pub fn levels(&self, s: f64) -> Result<Vec<f64>> {
        let h = self.dense(s)?;
        eigenvalues_of(&h, self.hi.dim())
    }

    /// `E_1(s) - E_0(s)`.
    pub fn gap(&self, s: f64) -> Result<f64> {
        let levels = self.levels(s)?;
        Ok(levels[1] - levels[0])
    }

    /// `d(E_1 - E_0)/ds` by Hellmann-Feynman, or `None` where `E_0`, `E_1`
    /// or `E_2` are within `deg_tol` of a neighbour and the slope is not a
    /// single expectation value.
    pub fn gap_slope(&self, s: f64, deg_tol: f64) -> Result<Option<f64>> {
        let point = self.point(s)?;
        let sys = &point.system;
        let v = sys.values();
        if v[1] - v[0] < deg_tol || (v.len() > 2 && v[2] - v[1] < deg_tol) {
            return Ok(None);
        }
        let f = self.f.values();
        let mut w = vec![0.0; f.len()];
        let mut expect = |m: usize| {
            apply_derivative(f, sys.vector(m), &mut w);
            sys.vector(m).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        Ok(Some(expect(1) - expect(0)))
    }
}

/// Bisection on the sign of the gap slope inside `[lo, hi]`. Locates a
/// smooth minimum far below the `sqrt(eps)` resolution available from gap
/// values alone. `None` when the slope is undefined or does not change sign.
fn polish_minimum(path: &PathSpectrum, mut lo: f64, mut hi: f64, deg_tol: f64) -> Result<Option<f64>> {
    match (path.gap_slope(lo, deg_tol)?, path.gap_slope(hi, deg_tol)?) {
        (Some(a), Some(b)) if a < 0.0 && b > 0.0 => {}
        _ => return Ok(None),
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match path.gap_slope(mid, deg_tol)? {
            Some(d) if d < 0.0 => lo = mid,
            Some(d) if d > 0.0 => hi = mid,
            Some(_) => return Ok(Some(mid)),
            None => return Ok(None),
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// `E_1(s) - E_0(s)` for one instance.
pub fn gap(cv: &CouplingVector, s: f64) -> Result<f64> {
    check_reduced_time(s)?;
    PathSpectrum::new(cv)?.gap(s)
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `tol`. Returns the best probe.
fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Global minimum of the gap: uniform coarse scan including both endpoints,
/// then golden-section refinement of every bracketed local minimum, polished
/// by slope bisection where the gap is smooth.
pub fn find_min_gap(cv: &CouplingVector, coarse_points: usize, refine_tol: f64) -> Result<GapResult> {
    find_min_gap_with(&PathSpectrum::new(cv)?, coarse_points, refine_tol, DEFAULT_DEG_TOL)
}

pub fn find_min_gap_with(
    path: &PathSpectrum,
    coarse_points: usize,
    refine_tol: f64,
    deg_tol: f64,
) -> Result<GapResult> {
    if coarse_points < 3 {
        return Err(Error::InvalidArgument(format!("coarse_points = {coarse_points} < 3")));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("refine_tol = {refine_tol} must be > 0")));
    }
    let last = coarse_points - 1;
    let grid = |k: usize| if k == last { 1.0 } else { k as f64 / last as f64 };
    let gaps: Vec<f64> = (0..coarse_points).map(|k| path.gap(grid(k))).collect::<Result<_>>()?;

    // (s, gap) per bracketed local minimum
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for k in 0..coarse_points {
        let left_ok = k == 0 || gaps[k - 1] >= gaps[k];
        let right_ok = k == last || gaps[k + 1] >= gaps[k];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = grid(k.saturating_sub(1));
        let hi = grid((k + 1).min(last));
        let (mut s_ref, mut g_ref) = golden_section(|s| path.gap(s), lo, hi, refine_tol)?;
        // value comparisons stall near sqrt(eps); the slope does not
        let (plo, phi) = ((s_ref - 16.0 * refine_tol).max(lo), (s_ref + 16.0 * refine_tol).min(hi));
        if let Some(sp) = polish_minimum(path, plo, phi, deg_tol)? {
            (s_ref, g_ref) = (sp, path.gap(sp)?.min(g_ref));
        }
        candidates.push(if g_ref < gaps[k] { (s_ref, g_ref) } else { (grid(k), gaps[k]) });
    }

    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let spacing = 1.0 / last as f64;
    let mut tied: Vec<(f64, f64)> =
        candidates.into_iter().filter(|c| c.1 - best <= refine_tol).collect();
    tied.sort_by(|a, b| a.0.total_cmp(&b.0));
    // adjacent brackets on a plateau describe the same minimum
    let mut distinct = 0;
    let mut prev: Option<f64> = None;
    for c in &tied {
        if prev.map_or(true, |p| c.0 - p > 2.0 * spacing) {
            distinct += 1;
        }
        prev = Some(c.0);
    }
    let (s_star, min_gap) = tied[0];
    let gap_at_one = gaps[last];
    Ok(GapResult {
        min_gap: min_gap.max(0.0),
        s_star,
        at_endpoint: s_star == 0.0 || s_star == 1.0,
        final_degenerate: gap_at_one < deg_tol,
        tie: distinct > 1,
    })
}

/// Matrix element `M` and the gap-weighted adiabatic criterion over a
/// uniform grid of `grid_points` reduced times.
pub fn adiabatic_diagnostics(cv: &CouplingVector, grid_points: usize) -> Result<AdiabaticDiagnostics> {
    adiabatic_diagnostics_with(&PathSpectrum::new(cv)?, grid_points, DEFAULT_DEG_TOL)
}

pub fn adiabatic_diagnostics_with(
    path: &PathSpectrum,
    grid_points: usize,
    deg_tol: f64,
) -> Result<AdiabaticDiagnostics> {
    if grid_points < 2 {
        return Err(Error::InvalidArgument(format!("grid_points = {grid_points} < 2")));
    }
    let f = path.energies().values();
    let dim = f.len();
    let mut w = vec![0.0; dim];
    let mut out = AdiabaticDiagnostics { matrix_element_max: 0.0, criterion_bound: 0.0, skipped_pairs: 0 };
    let last = grid_points - 1;
    for k in 0..grid_points {
        let s = if k == last { 1.0 } else { k as f64 / last as f64 };
        let point = path.point(s)?;
        let sys = &point.system;
        apply_derivative(f, sys.vector(0), &mut w);
        for m in 1..dim {
            let elem = sys.vector(m).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs();
            let gap = sys.values()[m] - sys.values()[0];
            // inside a degenerate level the eigenvectors are arbitrary
            if gap < deg_tol {
                out.skipped_pairs += 1;
                continue;
            }
            if m == 1 {
                out.matrix_element_max = out.matrix_element_max.max(elem);
            }
            out.criterion_bound = out.criterion_bound.max(elem / (gap * gap));
        }
    }
    Ok(out)
}
