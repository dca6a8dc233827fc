use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::TorusGrid;
use crate::error::{AdmError, Result};

/// Operations shared by scalar and vector coefficient fields.
///
/// Multipliers passed to [`SpectralField::map_modes`] receive the storage
/// slot and the coefficient; they are applied to every component. The
/// zero-mean and truncation invariants are re-imposed on the result.
pub trait SpectralField: Clone + Sized {
    fn grid(&self) -> &TorusGrid;

    fn map_modes<F: Fn(usize, Complex64) -> Complex64>(&self, f: F) -> Self;

    /// `Σ_k weight(k) |v̂_k|²` summed over components.
    fn weighted_norm_sq<W: Fn(usize) -> f64>(&self, weight: W) -> f64;

    /// `Σ_k weight(k) Re(f̂_k conj(ĝ_k))` summed over components.
    fn weighted_inner<W: Fn(usize) -> f64>(&self, other: &Self, weight: W) -> f64;

    fn zeroed(&self) -> Self;

    fn max_abs_coefficient(&self) -> f64;

    fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self;

    /// Plain coefficient inner product (Parseval form of `|𝕋³|⁻¹ ∫ f·g dx`).
    fn inner(&self, other: &Self) -> f64 {
        self.weighted_inner(other, |_| 1.0)
    }

    fn l2_norm(&self) -> f64 {
        self.weighted_norm_sq(|_| 1.0).sqrt()
    }

    fn check_grid(&self, other: &TorusGrid) -> Result<()> {
        if self.grid().same_as(other) {
            Ok(())
        } else {
            Err(AdmError::GridMismatch)
        }
    }
}

/// Complex Fourier coefficients of a real, zero-mean periodic scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalarField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralScalarField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Wraps a coefficient array in storage order, imposing Hermitian
    /// symmetry, zero mean and the truncation mask.
    pub fn from_coefficients(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(AdmError::ShapeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        let mut field = Self {
            grid: grid.clone(),
            coeffs,
        };
        field.symmetrize();
        Ok(field)
    }

    /// Wraps coefficients without touching them. Used by the snapshot
    /// reader, where bit-exact reproduction matters.
    pub fn from_raw_coefficients(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(AdmError::ShapeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Builds a field from `(wavenumber, amplitude)` pairs; each amplitude is
    /// placed at `n` and its conjugate at `-n`. Modes outside the retained
    /// set are dropped and `n = 0` is ignored.
    pub fn from_modes(grid: &TorusGrid, modes: &[([i64; 3], Complex64)]) -> Self {
        let mut field = Self::zeros(grid);
        for &(n, value) in modes {
            field.add_mode(n, value);
        }
        field
    }

    /// Adds `value` at `n` and `conj(value)` at `-n`.
    pub fn add_mode(&mut self, n: [i64; 3], value: Complex64) {
        let Some(slot) = self.grid.slot_of(n) else {
            return;
        };
        if slot == 0 || !self.grid.is_retained(slot) {
            return;
        }
        let partner = self.grid.partner(slot);
        self.coeffs[slot] += value;
        self.coeffs[partner] += value.conj();
    }

    pub fn coefficient(&self, n: [i64; 3]) -> Complex64 {
        self.grid
            .slot_of(n)
            .map(|s| self.coeffs[s])
            .unwrap_or_default()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Largest deviation from `v̂_{-k} = conj(v̂_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|s| (self.coeffs[s] - self.coeffs[self.grid.partner(s)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Averages each coefficient with the conjugate of its partner and
    /// zeroes the mean and every mode outside the retained set.
    pub fn symmetrize(&mut self) {
        let grid = &self.grid;
        for s in 0..grid.len() {
            if s == 0 || !grid.is_retained(s) {
                self.coeffs[s] = Complex64::default();
                continue;
            }
            let p = grid.partner(s);
            if s < p {
                let avg = 0.5 * (self.coeffs[s] + self.coeffs[p].conj());
                self.coeffs[s] = avg;
                self.coeffs[p] = avg.conj();
            }
        }
    }

    /// Physical samples on the `M³` grid, `v(x_j) = Σ_k v̂_k e^{ik·x_j}`.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut data = self.coeffs.clone();
        self.grid.fft().inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Coefficients `v̂_k = M⁻³ Σ_j v(x_j) e^{-ik·x_j}` of real samples,
    /// restricted to the retained modes.
    pub fn from_physical(grid: &TorusGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(AdmError::ShapeMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        grid.fft().forward(&mut data);
        let norm = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|c| *c *= norm);
        let mut field = Self {
            grid: grid.clone(),
            coeffs: data,
        };
        field.symmetrize();
        Ok(field)
    }

    /// Samples on the 3/2-rule padded grid of `P = 3M/2` points per axis.
    pub fn to_padded_physical(&self) -> Vec<f64> {
        let fft = self.grid.padded_fft();
        let p = fft.points();
        let mut data = vec![Complex64::default(); p * p * p];
        for (s, &c) in self.coeffs.iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            data[padded_slot(self.grid.integer_index(s), p)] = c;
        }
        fft.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Projects padded-grid samples back onto the retained modes. For
    /// products of two retained fields this is the exact Galerkin projection.
    pub fn from_padded_physical(grid: &TorusGrid, samples: &[f64]) -> Result<Self> {
        let fft = grid.padded_fft();
        let p = fft.points();
        if samples.len() != p * p * p {
            return Err(AdmError::ShapeMismatch {
                expected: p * p * p,
                got: samples.len(),
            });
        }
        let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.forward(&mut data);
        let norm = 1.0 / (p * p * p) as f64;
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for (s, c) in coeffs.iter_mut().enumerate() {
            if grid.is_retained(s) {
                *c = data[padded_slot(grid.integer_index(s), p)] * norm;
            }
        }
        let mut field = Self {
            grid: grid.clone(),
            coeffs,
        };
        field.symmetrize();
        Ok(field)
    }

    pub(crate) fn zero_mean_defect(&self) -> f64 {
        self.coeffs[0].norm()
    }
}

fn padded_slot(n: [i64; 3], p: usize) -> usize {
    let pi = p as i64;
    let idx = |x: i64| x.rem_euclid(pi) as usize;
    (idx(n[0]) * p + idx(n[1])) * p + idx(n[2])
}

impl SpectralField for SpectralScalarField {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn map_modes<F: Fn(usize, Complex64) -> Complex64>(&self, f: F) -> Self {
        let grid = &self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(s, &c)| {
                if s == 0 || !grid.is_retained(s) {
                    Complex64::default()
                } else {
                    f(s, c)
                }
            })
            .collect();
        Self {
            grid: grid.clone(),
            coeffs,
        }
    }

    fn weighted_norm_sq<W: Fn(usize) -> f64>(&self, weight: W) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(s, c)| weight(s) * c.norm_sqr())
            .sum()
    }

    fn weighted_inner<W: Fn(usize) -> f64>(&self, other: &Self, weight: W) -> f64 {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .skip(1)
            .map(|(s, (a, b))| weight(s) * (a * b.conj()).re)
            .sum()
    }

    fn zeroed(&self) -> Self {
        Self::zeros(&self.grid)
    }

    fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }
}

/// Three scalar components sharing one grid.
///
/// `solenoidal` records that the field came out of a Leray projection (or
/// an operator that preserves it); it is advisory, see
/// [`SpectralVectorField::divergence_defect`] for the measured value.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField {
    components: [SpectralScalarField; 3],
    solenoidal: bool,
}

impl SpectralVectorField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        let z = SpectralScalarField::zeros(grid);
        Self {
            components: [z.clone(), z.clone(), z],
            solenoidal: true,
        }
    }

    pub fn from_components(components: [SpectralScalarField; 3]) -> Result<Self> {
        let grid = components[0].grid.clone();
        if !components.iter().all(|c| c.grid.same_as(&grid)) {
            return Err(AdmError::GridMismatch);
        }
        Ok(Self {
            components,
            solenoidal: false,
        })
    }

    /// `e_axis` times a scalar field.
    pub fn along_axis(scalar: &SpectralScalarField, axis: usize) -> Self {
        let mut out = Self::zeros(scalar.grid());
        out.components[axis] = scalar.clone();
        out.solenoidal = false;
        out
    }

    pub fn component(&self, axis: usize) -> &SpectralScalarField {
        &self.components[axis]
    }

    pub fn components(&self) -> &[SpectralScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [SpectralScalarField; 3] {
        self.components
    }

    pub(crate) fn components_mut(&mut self) -> &mut [SpectralScalarField; 3] {
        &mut self.components
    }

    pub fn is_flagged_solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub(crate) fn with_solenoidal_flag(mut self, flag: bool) -> Self {
        self.solenoidal = flag;
        self
    }

    /// `max_k |k · v̂_k|`.
    pub fn divergence_defect(&self) -> f64 {
        let grid = self.grid();
        (0..grid.len())
            .map(|s| {
                let k = grid.wavevector(s);
                (0..3)
                    .map(|d| self.components[d].coefficients()[s] * k[d])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.hermitian_defect())
            .fold(0.0, f64::max)
    }

    pub(crate) fn zero_mean_defect(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.zero_mean_defect())
            .fold(0.0, f64::max)
    }

    /// Physical samples of each component on the `M³` grid.
    pub fn to_physical(&self) -> [Vec<f64>; 3] {
        [
            self.components[0].to_physical(),
            self.components[1].to_physical(),
            self.components[2].to_physical(),
        ]
    }
}

impl SpectralField for SpectralVectorField {
    fn grid(&self) -> &TorusGrid {
        self.components[0].grid()
    }

    fn map_modes<F: Fn(usize, Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            components: [
                self.components[0].map_modes(&f),
                self.components[1].map_modes(&f),
                self.components[2].map_modes(&f),
            ],
            solenoidal: self.solenoidal,
        }
    }

    fn weighted_norm_sq<W: Fn(usize) -> f64>(&self, weight: W) -> f64 {
        self.components
            .iter()
            .map(|c| c.weighted_norm_sq(&weight))
            .sum()
    }

    fn weighted_inner<W: Fn(usize) -> f64>(&self, other: &Self, weight: W) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.weighted_inner(b, &weight))
            .sum()
    }

    fn zeroed(&self) -> Self {
        Self::zeros(self.grid())
    }

    fn max_abs_coefficient(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs_coefficient())
            .fold(0.0, f64::max)
    }

    fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            components: [
                self.components[0].linear_combination(a, &other.components[0], b),
                self.components[1].linear_combination(a, &other.components[1], b),
                self.components[2].linear_combination(a, &other.components[2], b),
            ],
            solenoidal: self.solenoidal && other.solenoidal,
        }
    }
}

macro_rules! impl_arith {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t {
                self.linear_combination(1.0, rhs, 1.0)
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t {
                self.linear_combination(1.0, rhs, -1.0)
            }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, rhs: f64) -> $t {
                self.map_modes(|_, c| c * rhs)
            }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t {
                self.map_modes(|_, c| -c)
            }
        }
    };
}

impl_arith!(SpectralScalarField);
impl_arith!(SpectralVectorField);
