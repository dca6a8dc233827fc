use num_complex::Complex64;

use super::field::{SpectralField, SpectralScalarField, SpectralVectorField};
use crate::error::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `∇f`: component `j` has coefficients `i k_j f̂_k`.
pub fn gradient(field: &SpectralScalarField) -> SpectralVectorField {
    let grid = field.grid();
    let comp = |d: usize| field.map_modes(|s, c| I * grid.wavevector(s)[d] * c);
    SpectralVectorField::from_components([comp(0), comp(1), comp(2)])
        .expect("components share a grid")
}

/// `∇·v`: coefficients `i k·v̂_k`.
pub fn divergence(field: &SpectralVectorField) -> SpectralScalarField {
    let grid = field.grid().clone();
    let [a, b, c] = field.components();
    let coeffs: Vec<Complex64> = (0..grid.len())
        .map(|s| {
            if s == 0 || !grid.is_retained(s) {
                return Complex64::default();
            }
            let k = grid.wavevector(s);
            I * (a.coefficients()[s] * k[0]
                + b.coefficients()[s] * k[1]
                + c.coefficients()[s] * k[2])
        })
        .collect();
    SpectralScalarField::from_raw_coefficients(&grid, coeffs).expect("same grid")
}

/// Spectral Laplacian, multiplier `-|k|²`.
pub fn laplacian<F: SpectralField>(field: &F) -> F {
    let grid = field.grid().clone();
    field.map_modes(|s, c| -grid.k_sq(s) * c)
}

/// Inverse Laplacian on zero-mean fields, multiplier `-1/|k|²`.
pub fn inverse_laplacian<F: SpectralField>(field: &F) -> F {
    let grid = field.grid().clone();
    field.map_modes(|s, c| -c / grid.k_sq(s))
}

/// Leray projector: `v̂ ← v̂ - k (k·v̂)/|k|²` for every `k ≠ 0`.
pub fn leray_project(field: &SpectralVectorField) -> SpectralVectorField {
    let grid = field.grid().clone();
    let mut out = field.clone();
    {
        let comps = out.components_mut();
        for s in 1..grid.len() {
            if !grid.is_retained(s) {
                for c in comps.iter_mut() {
                    c.coefficients_mut()[s] = Complex64::default();
                }
                continue;
            }
            let k = grid.wavevector(s);
            let ksq = grid.k_sq(s);
            let kdotv = comps[0].coefficients()[s] * k[0]
                + comps[1].coefficients()[s] * k[1]
                + comps[2].coefficients()[s] * k[2];
            let factor = kdotv / ksq;
            for d in 0..3 {
                comps[d].coefficients_mut()[s] -= factor * k[d];
            }
        }
        for c in comps.iter_mut() {
            c.coefficients_mut()[0] = Complex64::default();
        }
    }
    out.with_solenoidal_flag(true)
}

/// Galerkin truncation: zero every mode whose integer radius exceeds
/// `cutoff`.
pub fn truncate<F: SpectralField>(field: &F, cutoff: usize) -> F {
    let grid = field.grid().clone();
    let limit = (cutoff * cutoff) as i64;
    field.map_modes(|s, c| {
        let n = grid.integer_index(s);
        if n[0] * n[0] + n[1] * n[1] + n[2] * n[2] > limit {
            Complex64::default()
        } else {
            c
        }
    })
}

/// `‖v‖_s = (Σ_{k≠0} |k|^{2s} |v̂_k|²)^{1/2}`; negative `s` gives the
/// dual norms `H₋ₛ`.
pub fn sobolev_norm<F: SpectralField>(field: &F, s: f64) -> f64 {
    sobolev_norm_sq(field, s).sqrt()
}

pub fn sobolev_norm_sq<F: SpectralField>(field: &F, s: f64) -> f64 {
    let grid = field.grid().clone();
    if s == 0.0 {
        return field.weighted_norm_sq(|_| 1.0);
    }
    field.weighted_norm_sq(|slot| grid.k_sq(slot).powf(s))
}

/// `Σ_k |k|^{2s} Re(f̂_k conj ĝ_k)`.
pub fn sobolev_inner<F: SpectralField>(f: &F, g: &F, s: f64) -> Result<f64> {
    f.check_grid(g.grid())?;
    let grid = f.grid().clone();
    if s == 0.0 {
        return Ok(f.inner(g));
    }
    Ok(f.weighted_inner(g, |slot| grid.k_sq(slot).powf(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(m: usize) -> TorusGrid {
        TorusGrid::new(2.0 * PI, m).unwrap()
    }

    fn random_scalar(grid: &TorusGrid, seed: u64) -> SpectralScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralScalarField::from_coefficients(grid, coeffs).unwrap()
    }

    fn random_vector(grid: &TorusGrid, seed: u64) -> SpectralVectorField {
        SpectralVectorField::from_components([
            random_scalar(grid, seed),
            random_scalar(grid, seed + 1),
            random_scalar(grid, seed + 2),
        ])
        .unwrap()
    }

    #[test]
    fn gradient_of_single_mode() {
        let g = grid(8);
        let f = SpectralScalarField::from_modes(&g, &[([1, 0, 0], Complex64::new(1.0, 0.0))]);
        let grad = gradient(&f);
        assert_eq!(grad.component(0).coefficient([1, 0, 0]), I);
        assert_eq!(grad.component(1).max_abs_coefficient(), 0.0);
        assert_eq!(grad.component(2).max_abs_coefficient(), 0.0);
        assert!(gradient(&SpectralScalarField::zeros(&g)).max_abs_coefficient() == 0.0);
    }

    #[test]
    fn integration_by_parts() {
        let g = grid(8);
        let f = random_scalar(&g, 1);
        let v = random_vector(&g, 10);
        let lhs = gradient(&f).inner(&v);
        let rhs = -f.inner(&divergence(&v));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let g = grid(8);
        let f = random_scalar(&g, 3);
        let lap = divergence(&gradient(&f));
        let expected = laplacian(&f);
        let err = (&lap - &expected).max_abs_coefficient();
        assert!(err <= 1e-12 * expected.max_abs_coefficient());
    }

    #[test]
    fn divergence_of_single_mode() {
        let g = grid(8);
        let v = SpectralVectorField::from_components([
            SpectralScalarField::from_modes(&g, &[([1, 0, 0], Complex64::new(1.0, 0.0))]),
            SpectralScalarField::zeros(&g),
            SpectralScalarField::zeros(&g),
        ])
        .unwrap();
        assert_eq!(divergence(&v).coefficient([1, 0, 0]), I);
    }

    #[test]
    fn leray_examples() {
        let g = grid(8);
        let v = random_vector(&g, 4);
        let p = leray_project(&v);
        assert!(divergence(&p).max_abs_coefficient() <= 1e-14 * sobolev_norm(&v, 1.0));
        let pp = leray_project(&p);
        assert!((&pp - &p).max_abs_coefficient() <= 1e-14 * p.max_abs_coefficient());

        let f = random_scalar(&g, 5);
        assert!(leray_project(&gradient(&f)).max_abs_coefficient() <= 1e-14 * f.max_abs_coefficient() * 8.0);

        let shear = SpectralVectorField::from_components([
            SpectralScalarField::from_modes(&g, &[([0, 0, 1], Complex64::new(1.0, 0.0))]),
            SpectralScalarField::zeros(&g),
            SpectralScalarField::zeros(&g),
        ])
        .unwrap();
        assert_eq!(leray_project(&shear).component(0), shear.component(0));
        assert!(leray_project(&shear).is_flagged_solenoidal());
    }

    #[test]
    fn truncation_examples() {
        let g = grid(8);
        let f = random_scalar(&g, 6);
        assert_eq!(truncate(&f, 3), f);
        assert_eq!(truncate(&f, 0).max_abs_coefficient(), 0.0);
        let t = truncate(&f, 2);
        assert!(t.l2_norm() <= f.l2_norm());
        let h = random_scalar(&g, 7);
        let a = truncate(&f, 2).inner(&h);
        let b = f.inner(&truncate(&h, 2));
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = grid(8);
        let f = SpectralScalarField::from_modes(&g, &[([2, 0, 0], Complex64::new(1.0, 0.0))]);
        let s0 = sobolev_norm_sq(&f, 0.0);
        let s1 = sobolev_norm_sq(&f, 1.0);
        assert!((s0 - 2.0).abs() < 1e-15);
        assert!((s1 - 4.0 * s0).abs() < 1e-14);
        assert_eq!(sobolev_norm(&SpectralScalarField::zeros(&g), -1.0), 0.0);

        let r = random_scalar(&g, 8);
        let h1 = sobolev_norm(&r, 1.0);
        let grad = gradient(&r).l2_norm();
        assert!((h1 - grad).abs() <= 1e-12 * h1);
    }
}
