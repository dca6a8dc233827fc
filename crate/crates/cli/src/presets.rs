//! Named initial conditions.
use std::collections::BTreeMap;

use admlab_core::spectral::leray_project;
use admlab_core::{AdmError, SpectralField, SpectralScalarField, SpectralVectorField, TorusGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Knobs shared by the presets; each preset reads what it needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetParams {
    pub amplitude: f64,
    pub theta_amplitude: f64,
    pub seed: u64,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            theta_amplitude: 1.0,
            seed: 0,
            k_min: 1,
            k_max: 4,
        }
    }
}

pub type InitialData = (SpectralVectorField, SpectralScalarField);

pub trait InitialCondition: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, grid: &TorusGrid, params: &PresetParams) -> Result<InitialData, AdmError>;
}

/// `u = A (sin x cos y, −cos x sin y, 0)`, `θ = B cos x`.
pub struct TaylorGreen;

impl InitialCondition for TaylorGreen {
    fn name(&self) -> &'static str {
        "taylor-green"
    }

    fn build(&self, grid: &TorusGrid, p: &PresetParams) -> Result<InitialData, AdmError> {
        if grid.truncation_radius() < 2 {
            return Err(AdmError::InvalidGrid(
                "taylor-green needs a truncation radius of at least 2".into(),
            ));
        }
        let c = Complex64::new(0.0, 0.25 * p.amplitude);
        let u1 = SpectralScalarField::from_modes(grid, &[([1, 1, 0], -c), ([1, -1, 0], -c)]);
        let u2 = SpectralScalarField::from_modes(grid, &[([1, 1, 0], c), ([-1, 1, 0], c)]);
        let u = SpectralVectorField::from_components([u1, u2, SpectralScalarField::zeros(grid)])?;
        let theta = SpectralScalarField::from_modes(
            grid,
            &[([1, 0, 0], Complex64::new(0.5 * p.theta_amplitude, 0.0))],
        );
        Ok((u, theta))
    }
}

/// Seeded random coefficients on `k_min ≤ |n| ≤ k_max`, Leray-projected and
/// scaled to `‖u‖ = amplitude`, `‖θ‖ = theta_amplitude`.
pub struct RandomBand;

impl RandomBand {
    fn band(
        grid: &TorusGrid,
        rng: &mut ChaCha8Rng,
        k_min: usize,
        k_max: usize,
    ) -> SpectralScalarField {
        let k = k_max as i64;
        let (lo, hi) = ((k_min * k_min) as i64, k * k);
        let mut modes = Vec::new();
        for a in -k..=k {
            for b in -k..=k {
                for c in -k..=k {
                    let r2 = a * a + b * b + c * c;
                    let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if (lo..=hi).contains(&r2) {
                        modes.push(([a, b, c], v));
                    }
                }
            }
        }
        SpectralScalarField::from_modes(grid, &modes)
    }

    fn normalized<F: SpectralField>(field: F, target: f64) -> F {
        let norm = field.l2_norm();
        if norm == 0.0 {
            field
        } else {
            field.map_modes(|_, c| c * (target / norm))
        }
    }
}

impl InitialCondition for RandomBand {
    fn name(&self) -> &'static str {
        "random-band"
    }

    fn build(&self, grid: &TorusGrid, p: &PresetParams) -> Result<InitialData, AdmError> {
        if p.k_min < 1 || p.k_min > p.k_max || p.k_max > grid.truncation_radius() {
            return Err(AdmError::InvalidParameter {
                name: "k_max",
                value: p.k_max as f64,
                range: "1 ≤ k_min ≤ k_max ≤ truncation radius",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let raw = SpectralVectorField::from_components([
            Self::band(grid, &mut rng, p.k_min, p.k_max),
            Self::band(grid, &mut rng, p.k_min, p.k_max),
            Self::band(grid, &mut rng, p.k_min, p.k_max),
        ])?;
        let u = Self::normalized(leray_project(&raw), p.amplitude);
        let theta = Self::normalized(
            Self::band(grid, &mut rng, p.k_min, p.k_max),
            p.theta_amplitude,
        );
        Ok((u, theta))
    }
}

pub struct Zero;

impl InitialCondition for Zero {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn build(&self, grid: &TorusGrid, _: &PresetParams) -> Result<InitialData, AdmError> {
        Ok((SpectralVectorField::zeros(grid), SpectralScalarField::zeros(grid)))
    }
}

pub struct PresetRegistry {
    presets: BTreeMap<&'static str, Box<dyn InitialCondition>>,
}

impl Default for PresetRegistry {
    fn default() -> Self {
        let mut r = Self {
            presets: BTreeMap::new(),
        };
        r.register(Box::new(TaylorGreen));
        r.register(Box::new(RandomBand));
        r.register(Box::new(Zero));
        r
    }
}

impl PresetRegistry {
    pub fn register(&mut self, preset: Box<dyn InitialCondition>) {
        self.presets.insert(preset.name(), preset);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.presets.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn InitialCondition, AdmError> {
        self.presets
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| AdmError::UnknownName {
                kind: "preset",
                name: name.to_string(),
            })
    }
}

/// Builds the named preset from the default registry.
pub fn make_initial(name: &str, params: &PresetParams, grid: &TorusGrid) -> Result<InitialData, AdmError> {
    PresetRegistry::default().get(name)?.build(grid, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use admlab_core::spectral::sobolev_norm;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid {
        TorusGrid::new(2.0 * PI, 16).unwrap()
    }

    #[test]
    fn zero_preset() {
        let (u, t) = make_initial("zero", &PresetParams::default(), &grid()).unwrap();
        assert_eq!(u.max_abs_coefficient(), 0.0);
        assert_eq!(t.max_abs_coefficient(), 0.0);
    }

    #[test]
    fn taylor_green_samples() {
        let g = grid();
        let (u, theta) = make_initial("taylor-green", &PresetParams::default(), &g).unwrap();
        assert!(u.divergence_defect() <= 1e-14);
        assert_eq!(u.hermitian_defect(), 0.0);
        let [u1, u2, u3] = u.to_physical();
        let th = theta.to_physical();
        let m = g.modes_per_axis();
        let h = g.spacing();
        for j in 0..g.len() {
            let (x, y) = ((j / (m * m)) as f64 * h, ((j / m) % m) as f64 * h);
            assert!((u1[j] - x.sin() * y.cos()).abs() < 1e-14);
            assert!((u2[j] + x.cos() * y.sin()).abs() < 1e-14);
            assert_eq!(u3[j], 0.0);
            assert!((th[j] - x.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn random_band_is_seeded_and_banded() {
        let g = grid();
        let p = PresetParams {
            amplitude: 2.0,
            theta_amplitude: 0.5,
            seed: 42,
            k_min: 2,
            k_max: 3,
        };
        let a = make_initial("random-band", &p, &g).unwrap();
        let b = make_initial("random-band", &p, &g).unwrap();
        assert_eq!(a.0.components()[0].coefficients(), b.0.components()[0].coefficients());
        assert_eq!(a.1.coefficients(), b.1.coefficients());
        let (u, theta) = a;
        assert!(u.divergence_defect() <= 1e-14);
        assert!((sobolev_norm(&u, 0.0) - 2.0).abs() < 1e-12);
        assert!((sobolev_norm(&theta, 0.0) - 0.5).abs() < 1e-12);
        for s in 0..g.len() {
            let k2 = g.k_sq(s);
            if !(4.0..=9.0).contains(&k2) {
                assert_eq!(theta.coefficients()[s], Complex64::default());
            }
        }
        let other = make_initial("random-band", &PresetParams { seed: 43, ..p }, &g).unwrap();
        assert_ne!(other.1.coefficients(), theta.coefficients());
    }

    #[test]
    fn unknown_preset() {
        let err = make_initial("vortex", &PresetParams::default(), &grid()).unwrap_err();
        assert!(matches!(err, AdmError::UnknownName { kind: "preset", .. }));
        assert_eq!(PresetRegistry::default().names(), vec!["random-band", "taylor-green", "zero"]);
    }
}
