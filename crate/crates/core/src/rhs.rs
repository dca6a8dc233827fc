//! Right-hand side of the ADM system
//!
//! ```text
//! ∂t w + ∇·G(D_N w ⊗ D_N w) - νΔw + ∇q = ρ e₃,   ∇·w = 0
//! ∂t ρ + ∇·G(D_N ρ D_N w)  - εΔρ      = 0
//! ```
//!
//! Quadratic products are formed on the 3/2-padded grid and projected back
//! onto the retained modes, so each nonlinear term is the exact Galerkin
//! projection of the continuous product.
use crate::error::{AdmError, Result};
use crate::filter::DeconvolutionSpec;
use crate::spectral::{
    divergence, gradient, inverse_laplacian, laplacian, leray_project, SpectralField,
    SpectralScalarField, SpectralVectorField,
};

/// Switches for individual terms; everything is on by default. Turning
/// terms off is meant for verification runs (pure diffusion, decoupled
/// dynamics).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Terms {
    pub advection: bool,
    pub buoyancy: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self {
            advection: true,
            buoyancy: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub nu: f64,
    pub epsilon: f64,
    pub spec: DeconvolutionSpec,
    pub terms: Terms,
}

impl ModelParams {
    pub fn new(nu: f64, epsilon: f64, spec: DeconvolutionSpec) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(AdmError::InvalidParameter {
                name: "nu",
                value: nu,
                range: "ν > 0",
            });
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(AdmError::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                range: "0 < ε < 1",
            });
        }
        Ok(Self {
            nu,
            epsilon,
            spec,
            terms: Terms::default(),
        })
    }

    pub fn with_terms(mut self, terms: Terms) -> Self {
        self.terms = terms;
        self
    }
}

/// Time derivatives of `(w, ρ)` and the pressure that keeps `w` solenoidal.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub dw: SpectralVectorField,
    pub drho: SpectralScalarField,
    pub q: SpectralScalarField,
}

/// `∇·(u ⊗ u)`, component `i` being `Σ_j ∂_j(u_i u_j)`.
pub fn self_flux_divergence(u: &SpectralVectorField) -> Result<SpectralVectorField> {
    let grid = u.grid().clone();
    let phys: Vec<Vec<f64>> = u.components().iter().map(|c| c.to_padded_physical()).collect();
    let product = |i: usize, j: usize| -> Result<SpectralScalarField> {
        let samples: Vec<f64> = phys[i].iter().zip(&phys[j]).map(|(a, b)| a * b).collect();
        SpectralScalarField::from_padded_physical(&grid, &samples)
    };
    let mut t = vec![vec![SpectralScalarField::zeros(&grid); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let p = product(i, j)?;
            t[j][i] = p.clone();
            t[i][j] = p;
        }
    }
    let row = |i: usize| {
        let [a, b, c] = t[i].clone().try_into().expect("three entries");
        divergence(&SpectralVectorField::from_components([a, b, c]).expect("same grid"))
    };
    SpectralVectorField::from_components([row(0), row(1), row(2)])
}

/// `∇·(c u)` for a scalar `c` and a vector `u`.
pub fn scalar_flux_divergence(
    c: &SpectralScalarField,
    u: &SpectralVectorField,
) -> Result<SpectralScalarField> {
    c.check_grid(u.grid())?;
    let grid = c.grid().clone();
    let cp = c.to_padded_physical();
    let flux = u
        .components()
        .iter()
        .map(|comp| {
            let samples: Vec<f64> = comp
                .to_padded_physical()
                .iter()
                .zip(&cp)
                .map(|(a, b)| a * b)
                .collect();
            SpectralScalarField::from_padded_physical(&grid, &samples)
        })
        .collect::<Result<Vec<_>>>()?;
    let [a, b, d] = flux.try_into().expect("three components");
    Ok(divergence(&SpectralVectorField::from_components([a, b, d])?))
}

/// `G ∇·(D_N w ⊗ D_N w)`.
pub fn momentum_nonlinear(
    params: &ModelParams,
    w: &SpectralVectorField,
) -> Result<SpectralVectorField> {
    let spec = &params.spec;
    let u = spec.deconvolve(w)?;
    spec.helmholtz_filter(&self_flux_divergence(&u)?)
}

/// `G ∇·(D_N ρ D_N w)`.
pub fn density_nonlinear(
    params: &ModelParams,
    rho: &SpectralScalarField,
    w: &SpectralVectorField,
) -> Result<SpectralScalarField> {
    let spec = &params.spec;
    let c = spec.deconvolve(rho)?;
    let u = spec.deconvolve(w)?;
    spec.helmholtz_filter(&scalar_flux_divergence(&c, &u)?)
}

/// Momentum forcing `f = ρ e₃ - G∇·(D_N w ⊗ D_N w)` with the active terms.
fn momentum_forcing(
    params: &ModelParams,
    rho: &SpectralScalarField,
    w: &SpectralVectorField,
) -> Result<SpectralVectorField> {
    let mut f = SpectralVectorField::zeros(w.grid());
    if params.terms.advection {
        f = &f - &momentum_nonlinear(params, w)?;
    }
    if params.terms.buoyancy {
        f = &f + &SpectralVectorField::along_axis(rho, 2);
    }
    Ok(f)
}

/// Pressure from `Δq = ∇·(ρ e₃ + A_N)`, `A_N = -G∇·(D_N w ⊗ D_N w)`:
/// `q̂_k = -(i k·f̂_k)/|k|²`, `q̂_0 = 0`.
pub fn pressure_solve(
    params: &ModelParams,
    rho: &SpectralScalarField,
    w: &SpectralVectorField,
) -> Result<SpectralScalarField> {
    rho.check_grid(w.grid())?;
    let f = momentum_forcing(params, rho, w)?;
    Ok(pressure_of(&f))
}

/// `q = Δ⁻¹ ∇·f`.
pub fn pressure_of(f: &SpectralVectorField) -> SpectralScalarField {
    inverse_laplacian(&divergence(f))
}

/// Nonlinear and buoyancy parts of the tendency, without diffusion. This is
/// what the integrating-factor scheme advances explicitly.
pub fn explicit_tendency(
    params: &ModelParams,
    w: &SpectralVectorField,
    rho: &SpectralScalarField,
) -> Result<(SpectralVectorField, SpectralScalarField)> {
    rho.check_grid(w.grid())?;
    let dw = leray_project(&momentum_forcing(params, rho, w)?);
    let drho = if params.terms.advection {
        -&density_nonlinear(params, rho, w)?
    } else {
        rho.zeroed()
    };
    Ok((dw, drho))
}

/// Full tendency, velocity via the pressure route:
/// `dw = f - ∇q + νΔw`, re-projected; `dρ = -G∇·(D_Nρ D_N w) + εΔρ`.
pub fn assemble_tendency(
    params: &ModelParams,
    w: &SpectralVectorField,
    rho: &SpectralScalarField,
) -> Result<Tendency> {
    rho.check_grid(w.grid())?;
    w.check_grid(params.spec.grid())?;
    let f = momentum_forcing(params, rho, w)?;
    let q = pressure_of(&f);
    let dw = &(&f - &gradient(&q)) + &(&laplacian(w) * params.nu);
    let dw = leray_project(&dw);
    let mut drho = &laplacian(rho) * params.epsilon;
    if params.terms.advection {
        drho = &drho - &density_nonlinear(params, rho, w)?;
    }
    Ok(Tendency { dw, drho, q })
}

/// Velocity tendency via the Leray route `P(f) + νΔw`; must agree with
/// [`assemble_tendency`].
pub fn tendency_by_projection(
    params: &ModelParams,
    w: &SpectralVectorField,
    rho: &SpectralScalarField,
) -> Result<SpectralVectorField> {
    let f = momentum_forcing(params, rho, w)?;
    Ok(&leray_project(&f) + &(&laplacian(w) * params.nu))
}

/// Largest pointwise speed of the advecting field `D_N w` on the `M³` grid.
pub fn advecting_speed(params: &ModelParams, w: &SpectralVectorField) -> Result<f64> {
    let u = params.spec.deconvolve(w)?;
    let [a, b, c] = u.to_physical();
    Ok(a.iter()
        .zip(&b)
        .zip(&c)
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .fold(0.0, f64::max))
}
