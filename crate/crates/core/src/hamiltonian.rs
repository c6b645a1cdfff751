//! Initial, final and interpolated Hamiltonians.
//!
//! Basis labels are integers `y in 0..2^n`. Qubit `q` (zero based) is bit
//! `1 << q` of both the coupling index `x` and the basis label `y`, so the
//! coupling `J_x` multiplies the tensor product of `sigma_z` on every qubit
//! whose bit is set in `x`.
//!
//! The initial Hamiltonian is the unit transverse field `-sum_q sigma_x^(q)`;
//! the final Hamiltonian is diagonal with energies
//! `f_y = sum_x J_x (-1)^popcount(x & y)`. The interpolation is
//! `H(s) = (1 - s) H_I + s H_F`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported qubit count (dense operators are `4^n` entries).
pub const MAX_QUBITS: usize = 12;

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::QubitCount { n, max: MAX_QUBITS })
    }
}

pub(crate) fn check_reduced_time(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::ReducedTime(s))
    }
}

/// The `2^n` coefficients `J_x` of the problem Hamiltonian, with `J_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector {
    n: usize,
    values: Vec<f64>,
}

impl CouplingVector {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_qubits(n)?;
        if values.len() != 1 << n {
            return Err(Error::Couplings(format!(
                "expected {} entries for n = {n}, got {}",
                1usize << n,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::Couplings(format!("J_0 must be 0, got {}", values[0])));
        }
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Couplings(format!("J_{x} is not finite")));
        }
        Ok(Self { n, values })
    }

    /// Builds the vector from `J_1, ..., J_{2^n - 1}`; `J_0` is fixed at zero.
    pub fn from_nontrivial(n: usize, rest: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(rest.len() + 1);
        values.push(0.0);
        values.extend_from_slice(rest);
        Self::new(n, values)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n, values: vec![0.0; 1 << n] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    /// The full n-local coupling `J_{2^n - 1}`.
    pub fn top(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Conjugation by `sigma_x` on `qubit`: negates every `J_x` whose index
    /// has that qubit's bit set.
    pub fn spin_flip(&self, qubit: usize) -> Result<Self> {
        if qubit >= self.n {
            return Err(Error::InvalidArgument(format!("qubit {qubit} >= n = {}", self.n)));
        }
        let bit = 1 << qubit;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(x, &j)| if x & bit != 0 { -j } else { j })
            .collect();
        Ok(Self { n: self.n, values })
    }

    /// Exchanges the roles of qubits `a` and `b`.
    pub fn swap_qubits(&self, a: usize, b: usize) -> Result<Self> {
        if a >= self.n || b >= self.n {
            return Err(Error::InvalidArgument(format!("qubit out of range for n = {}", self.n)));
        }
        let mut values = vec![0.0; self.values.len()];
        for (x, &j) in self.values.iter().enumerate() {
            values[swap_bits(x, a, b)] = j;
        }
        Ok(Self { n: self.n, values })
    }
}

pub(crate) fn swap_bits(x: usize, a: usize, b: usize) -> usize {
    let ba = (x >> a) & 1;
    let bb = (x >> b) & 1;
    if ba == bb {
        x
    } else {
        x ^ ((1 << a) | (1 << b))
    }
}

/// Dense real symmetric matrix, row-major, full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    dim: usize,
    entries: Vec<f64>,
}

impl SymmetricOperator {
    /// Validates that `dim` is a power of two and `entries` is exactly symmetric.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if !dim.is_power_of_two() {
            return Err(Error::Operator(format!("dimension {dim} is not a power of two")));
        }
        Self::new_unchecked_dim(dim, entries)
    }

    /// Like [`SymmetricOperator::new`] but accepts any square dimension.
    /// Used for generic eigensolver inputs.
    pub fn new_unchecked_dim(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension { expected: dim * dim, actual: entries.len() });
        }
        for a in 0..dim {
            for b in (a + 1)..dim {
                if entries[a * dim + b] != entries[b * dim + a] {
                    return Err(Error::Operator(format!("entries ({a},{b}) and ({b},{a}) differ")));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.dim + b]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|a| self.get(a, a)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_complex(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, actual: psi.len() });
        }
        Ok(self
            .entries
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(psi).map(|(&h, &p)| p * h).sum())
            .collect())
    }
}

/// Diagonal of the problem Hamiltonian indexed by basis label.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalEnergies {
    values: Vec<f64>,
}

impl FinalEnergies {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Labels whose energy lies within `deg_tol` of the minimum.
    pub fn ground_labels(&self, deg_tol: f64) -> Vec<usize> {
        let min = self.min();
        (0..self.values.len()).filter(|&y| self.values[y] - min < deg_tol).collect()
    }

    /// The two smallest energies, `(f_(0), f_(1))`.
    pub fn lowest_two(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut next = f64::INFINITY;
        for &v in &self.values {
            if v < lo {
                next = lo;
                lo = v;
            } else if v < next {
                next = v;
            }
        }
        (lo, next)
    }
}

/// `H_I = -sum_q sigma_x^(q)`: entry `(a, b)` is `-1` when `a` and `b`
/// differ in exactly one bit.
pub fn build_initial(n: usize) -> Result<SymmetricOperator> {
    check_qubits(n)?;
    let dim = 1 << n;
    let mut entries = vec![0.0; dim * dim];
    for a in 0..dim {
        for q in 0..n {
            entries[a * dim + (a ^ (1 << q))] = -1.0;
        }
    }
    Ok(SymmetricOperator { dim, entries })
}

/// Diagonal of `H_F` by a fast Walsh-Hadamard transform of the couplings.
pub fn final_energies(cv: &CouplingVector) -> FinalEnergies {
    let mut f = cv.values.clone();
    let dim = f.len();
    let mut half = 1;
    while half < dim {
        for block in (0..dim).step_by(2 * half) {
            for i in block..block + half {
                let (a, b) = (f[i], f[i + half]);
                f[i] = a + b;
                f[i + half] = a - b;
            }
        }
        half *= 2;
    }
    FinalEnergies { values: f }
}

/// Dense `H(s) = (1 - s) H_I + s diag(f)`.
pub fn interpolate(hi: &SymmetricOperator, f: &FinalEnergies, s: f64) -> Result<SymmetricOperator> {
    check_reduced_time(s)?;
    if hi.dim != f.dim() {
        return Err(Error::Dimension { expected: hi.dim, actual: f.dim() });
    }
    let mut out = hi.clone();
    interpolate_into(hi, f, s, &mut out.entries);
    Ok(out)
}

pub(crate) fn interpolate_into(hi: &SymmetricOperator, f: &FinalEnergies, s: f64, out: &mut [f64]) {
    let dim = hi.dim;
    let w = 1.0 - s;
    for (o, &h) in out.iter_mut().zip(&hi.entries) {
        *o = w * h;
    }
    for y in 0..dim {
        out[y * dim + y] += s * f.values[y];
    }
}

/// Matrix-free `H(s) psi`:
/// `(H psi)_y = s f_y psi_y - (1 - s) sum_q psi_{y ^ (1 << q)}`.
pub fn apply_hamiltonian(
    f: &FinalEnergies,
    s: f64,
    psi: &[Complex64],
    out: &mut [Complex64],
) -> Result<()> {
    if psi.len() != f.dim() {
        return Err(Error::Dimension { expected: f.dim(), actual: psi.len() });
    }
    if out.len() != f.dim() {
        return Err(Error::Dimension { expected: f.dim(), actual: out.len() });
    }
    apply_scaled(f.values(), s, Complex64::new(1.0, 0.0), psi, out);
    Ok(())
}

/// `out = scale * H(s) psi` with no dimension checks; the integrator hot path.
#[inline]
pub(crate) fn apply_scaled(
    f: &[f64],
    s: f64,
    scale: Complex64,
    psi: &[Complex64],
    out: &mut [Complex64],
) {
    let dim = f.len();
    let w = 1.0 - s;
    for y in 0..dim {
        let mut flip = Complex64::new(0.0, 0.0);
        let mut bit = 1;
        while bit < dim {
            flip += psi[y ^ bit];
            bit <<= 1;
        }
        out[y] = scale * (psi[y] * (s * f[y]) - flip * w);
    }
}

/// Real-vector product with the constant derivative `dH/ds = H_F - H_I`.
pub(crate) fn apply_derivative(f: &[f64], v: &[f64], out: &mut [f64]) {
    let dim = f.len();
    for y in 0..dim {
        let mut flip = 0.0;
        let mut bit = 1;
        while bit < dim {
            flip += v[y ^ bit];
            bit <<= 1;
        }
        out[y] = f[y] * v[y] + flip;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_cv(rng: &mut impl Rng, n: usize) -> CouplingVector {
        let rest: Vec<f64> = (1..1 << n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        CouplingVector::from_nontrivial(n, &rest).unwrap()
    }

    fn direct_energies(cv: &CouplingVector) -> Vec<f64> {
        (0..cv.dim())
            .map(|y| {
                (0..cv.dim())
                    .map(|x| {
                        let sign = if (x & y).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        sign * cv.get(x)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn initial_one_qubit_is_minus_sigma_x() {
        let h = build_initial(1).unwrap();
        assert_eq!(h.entries(), &[0.0, -1.0, -1.0, 0.0]);
    }

    #[test]
    fn initial_two_qubits_hamming_one() {
        let h = build_initial(2).unwrap();
        for a in 0..4usize {
            for b in 0..4usize {
                let expect = if (a ^ b).count_ones() == 1 { -1.0 } else { 0.0 };
                assert_eq!(h.get(a, b), expect, "({a},{b})");
            }
        }
    }

    #[test]
    fn initial_rejects_bad_n() {
        assert!(matches!(build_initial(0), Err(Error::QubitCount { .. })));
        assert!(matches!(build_initial(MAX_QUBITS + 1), Err(Error::QubitCount { .. })));
    }

    #[test]
    fn uniform_state_is_initial_eigenvector() {
        let n = 3;
        let h = build_initial(n).unwrap();
        let amp = 2f64.powf(-1.5);
        let psi = vec![Complex64::new(amp, 0.0); 8];
        let out = h.mul_complex(&psi).unwrap();
        for v in out {
            assert!((v.re + 3.0 * amp).abs() < 1e-15);
        }
    }

    #[test]
    fn coupling_validation() {
        assert!(CouplingVector::new(2, vec![0.0, 1.0, 2.0]).is_err());
        assert!(CouplingVector::new(1, vec![0.5, 1.0]).is_err());
        assert!(CouplingVector::new(1, vec![0.0, f64::NAN]).is_err());
        assert!(CouplingVector::new(1, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn single_z_term() {
        let cv = CouplingVector::new(2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(final_energies(&cv).values(), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn two_qubit_levels_match_labelled_formulae() {
        let (j1, j2, j3) = (0.3, -1.1, 0.7);
        let f = final_energies(&CouplingVector::new(2, vec![0.0, j1, j2, j3]).unwrap());
        // label y = a + 2b holds the level printed as f_ab
        let eps = 1e-15;
        assert!((f.values()[0] - (j1 + j2 + j3)).abs() < eps);
        assert!((f.values()[2] - (j1 - j2 - j3)).abs() < eps);
        assert!((f.values()[1] - (-j1 + j2 - j3)).abs() < eps);
        assert!((f.values()[3] - (-j1 - j2 + j3)).abs() < eps);
    }

    #[test]
    fn zero_couplings_give_zero_energies() {
        for n in 1..=4 {
            let f = final_energies(&CouplingVector::zeros(n).unwrap());
            assert!(f.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fast_transform_matches_direct_sum() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in 1..=6 {
            let cv = random_cv(&mut rng, n);
            let fast = final_energies(&cv);
            for (a, b) in fast.values().iter().zip(direct_energies(&cv)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_endpoints() {
        let cv = CouplingVector::new(2, vec![0.0, 0.4, -0.2, 1.3]).unwrap();
        let f = final_energies(&cv);
        let hi = build_initial(2).unwrap();
        assert_eq!(interpolate(&hi, &f, 0.0).unwrap(), hi);
        let h1 = interpolate(&hi, &f, 1.0).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { f.values()[a] } else { 0.0 };
                assert_eq!(h1.get(a, b), expect);
            }
        }
        let h = interpolate(&hi, &f, 0.5).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let d = if a == b { f.values()[a] } else { 0.0 };
                assert!((h.get(a, b) - 0.5 * (hi.get(a, b) + d)).abs() < 1e-15);
            }
        }
        assert!(matches!(interpolate(&hi, &f, 1.5), Err(Error::ReducedTime(_))));
        assert!(matches!(interpolate(&hi, &f, -0.1), Err(Error::ReducedTime(_))));
    }

    #[test]
    fn trace_vanishes() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let cv = random_cv(&mut rng, 3);
        let f = final_energies(&cv);
        let hi = build_initial(3).unwrap();
        for s in [0.0, 0.3, 1.0] {
            assert!(interpolate(&hi, &f, s).unwrap().trace().abs() < 1e-12);
        }
    }

    #[test]
    fn apply_on_basis_state_at_s1() {
        let cv = CouplingVector::new(2, vec![0.0, 0.4, -0.2, 1.3]).unwrap();
        let f = final_energies(&cv);
        for y in 0..4 {
            let mut psi = vec![Complex64::new(0.0, 0.0); 4];
            psi[y] = Complex64::new(1.0, 0.0);
            let mut out = vec![Complex64::new(0.0, 0.0); 4];
            apply_hamiltonian(&f, 1.0, &psi, &mut out).unwrap();
            for (z, v) in out.iter().enumerate() {
                let expect = if z == y { f.values()[y] } else { 0.0 };
                assert_eq!(v.re, expect);
                assert_eq!(v.im, 0.0);
            }
        }
    }

    #[test]
    fn apply_on_uniform_at_s0() {
        let n = 4;
        let cv = CouplingVector::zeros(n).unwrap();
        let f = final_energies(&cv);
        let psi = vec![Complex64::new(0.25, 0.0); 16];
        let mut out = vec![Complex64::new(0.0, 0.0); 16];
        apply_hamiltonian(&f, 0.0, &psi, &mut out).unwrap();
        for v in out {
            assert_eq!(v, Complex64::new(-1.0, 0.0));
        }
    }

    #[test]
    fn apply_dimension_mismatch() {
        let f = final_energies(&CouplingVector::zeros(2).unwrap());
        let psi = vec![Complex64::new(0.0, 0.0); 3];
        let mut out = vec![Complex64::new(0.0, 0.0); 4];
        assert!(matches!(apply_hamiltonian(&f, 0.5, &psi, &mut out), Err(Error::Dimension { .. })));
    }

    #[test]
    fn apply_matches_dense_on_random_state() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        for n in 1..=6 {
            let cv = random_cv(&mut rng, n);
            let f = final_energies(&cv);
            let h = interpolate(&build_initial(n).unwrap(), &f, 0.37).unwrap();
            let psi: Vec<Complex64> =
                (0..1 << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let dense = h.mul_complex(&psi).unwrap();
            let mut free = vec![Complex64::new(0.0, 0.0); 1 << n];
            apply_hamiltonian(&f, 0.37, &psi, &mut free).unwrap();
            let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.norm()));
            for (a, b) in dense.iter().zip(&free) {
                assert!((a - b).norm() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn apply_matches_dense_on_every_basis_vector() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for n in 1..=4 {
            let cv = random_cv(&mut rng, n);
            let f = final_energies(&cv);
            let s = rng.gen_range(0.0..1.0);
            let h = interpolate(&build_initial(n).unwrap(), &f, s).unwrap();
            let dim = 1 << n;
            for y in 0..dim {
                let mut psi = vec![Complex64::new(0.0, 0.0); dim];
                psi[y] = Complex64::new(1.0, 0.0);
                let mut out = vec![Complex64::new(0.0, 0.0); dim];
                apply_hamiltonian(&f, s, &psi, &mut out).unwrap();
                for z in 0..dim {
                    assert!((out[z].re - h.get(z, y)).abs() < 1e-14);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn spin_flip_permutes_energies(seed in any::<u64>(), n in 1usize..=5, q in 0usize..5) {
            prop_assume!(q < n);
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let cv = random_cv(&mut rng, n);
            let f = final_energies(&cv);
            let g = final_energies(&cv.spin_flip(q).unwrap());
            for y in 0..cv.dim() {
                prop_assert!((g.values()[y] - f.values()[y ^ (1 << q)]).abs() < 1e-12);
            }
        }

        #[test]
        fn qubit_swap_permutes_energies(seed in any::<u64>(), n in 2usize..=5, a in 0usize..5, b in 0usize..5) {
            prop_assume!(a < n && b < n);
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let cv = random_cv(&mut rng, n);
            let f = final_energies(&cv);
            let g = final_energies(&cv.swap_qubits(a, b).unwrap());
            for y in 0..cv.dim() {
                prop_assert!((g.values()[y] - f.values()[swap_bits(y, a, b)]).abs() < 1e-12);
            }
        }
    }
}
