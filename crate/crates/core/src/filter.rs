//! Helmholtz filter `G = (I - α²Δ)⁻¹`, the operator `A = I - α²Δ` and the
//! Van Cittert deconvolution `D_N = Σ_{n=0}^{N} (I - G)ⁿ`.
//!
//! All three are diagonal in Fourier space, so each is stored as a real,
//! positive symbol per lattice slot and applied mode by mode. Fractional
//! powers are taken on the symbols directly.
use crate::error::{AdmError, Result};
use crate::spectral::{leray_project, SpectralField, SpectralVectorField, TorusGrid};

/// Symbol of `D_N` at `|k|² = k_sq`: `(1 + α²|k|²) ϱ_{N,k}`.
pub fn deconv_symbol(alpha: f64, order: usize, k_sq: f64) -> f64 {
    let a = 1.0 + alpha * alpha * k_sq;
    a * relaxation_symbol(alpha, order, k_sq)
}

/// `ϱ_{N,k} = 1 - (α²|k|²/(1+α²|k|²))^{N+1}`.
pub fn relaxation_symbol(alpha: f64, order: usize, k_sq: f64) -> f64 {
    1.0 - gap_ratio(alpha, k_sq).powi(exponent(order + 1))
}

/// `α²|k|²/(1+α²|k|²)`, the per-mode contraction factor of `I - G`.
pub fn gap_ratio(alpha: f64, k_sq: f64) -> f64 {
    let x = alpha * alpha * k_sq;
    x / (1.0 + x)
}

fn exponent(n: usize) -> i32 {
    i32::try_from(n).unwrap_or(i32::MAX)
}

/// Filter radius, deconvolution order and the per-slot symbols they induce.
#[derive(Clone, Debug)]
pub struct DeconvolutionSpec {
    alpha: f64,
    order: usize,
    grid: TorusGrid,
    filter: Vec<f64>,
    a: Vec<f64>,
    varrho: Vec<f64>,
    deconv: Vec<f64>,
}

impl DeconvolutionSpec {
    /// `alpha = 0` is accepted and makes every operator the identity.
    pub fn new(grid: &TorusGrid, alpha: f64, order: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(AdmError::InvalidParameter {
                name: "alpha",
                value: alpha,
                range: "α ≥ 0",
            });
        }
        let n = grid.len();
        let mut filter = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        let mut varrho = Vec::with_capacity(n);
        let mut deconv = Vec::with_capacity(n);
        for &k_sq in grid.k_sq_all() {
            let a_k = 1.0 + alpha * alpha * k_sq;
            let rho = relaxation_symbol(alpha, order, k_sq);
            filter.push(1.0 / a_k);
            a.push(a_k);
            varrho.push(rho);
            deconv.push(a_k * rho);
        }
        Ok(Self {
            alpha,
            order,
            grid: grid.clone(),
            filter,
            a,
            varrho,
            deconv,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Same grid and radius, different order.
    pub fn with_order(&self, order: usize) -> Self {
        Self::new(&self.grid, self.alpha, order).expect("alpha already validated")
    }

    pub fn filter_symbol(&self, slot: usize) -> f64 {
        self.filter[slot]
    }

    pub fn a_symbol(&self, slot: usize) -> f64 {
        self.a[slot]
    }

    pub fn relaxation(&self, slot: usize) -> f64 {
        self.varrho[slot]
    }

    pub fn deconv_symbol(&self, slot: usize) -> f64 {
        self.deconv[slot]
    }

    /// Multiplier of `A^{1/2} D_N^{1/2}`.
    pub fn half_power_symbol(&self, slot: usize) -> f64 {
        (self.a[slot] * self.deconv[slot]).sqrt()
    }

    fn apply<F: SpectralField>(&self, field: &F, symbol: impl Fn(usize) -> f64) -> Result<F> {
        field.check_grid(&self.grid)?;
        Ok(field.map_modes(|s, c| c * symbol(s)))
    }

    /// `w̄ = G w`.
    pub fn helmholtz_filter<F: SpectralField>(&self, field: &F) -> Result<F> {
        self.apply(field, |s| self.filter[s])
    }

    /// Stokes-type filter for solenoidal vectors: the scalar filter applied
    /// componentwise followed by a Leray projection that removes round-off.
    pub fn stokes_filter(&self, field: &SpectralVectorField) -> Result<SpectralVectorField> {
        Ok(leray_project(&self.helmholtz_filter(field)?))
    }

    /// `A = I - α²Δ`.
    pub fn apply_a<F: SpectralField>(&self, field: &F) -> Result<F> {
        self.apply(field, |s| self.a[s])
    }

    /// `D_N`, closed form.
    pub fn deconvolve<F: SpectralField>(&self, field: &F) -> Result<F> {
        self.apply(field, |s| self.deconv[s])
    }

    /// `A^{1/2} D_N^{1/2}`, the operator whose norm is the conserved energy.
    pub fn apply_half_powers<F: SpectralField>(&self, field: &F) -> Result<F> {
        self.apply(field, |s| self.half_power_symbol(s))
    }

    /// `D_N^{1/2}`.
    pub fn deconvolve_sqrt<F: SpectralField>(&self, field: &F) -> Result<F> {
        self.apply(field, |s| self.deconv[s].sqrt())
    }
}
