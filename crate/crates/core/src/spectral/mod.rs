//! Periodic-torus geometry, Fourier coefficient fields and the spectral
//! operators built on them.
mod field;
mod grid;
mod ops;
mod transform;

pub use field::{SpectralField, SpectralScalarField, SpectralVectorField};
pub use grid::TorusGrid;
pub use ops::{
    divergence, gradient, inverse_laplacian, laplacian, leray_project, sobolev_inner,
    sobolev_norm, sobolev_norm_sq, truncate,
};

/// Builds a torus grid; see [`TorusGrid::new`].
pub fn build_grid(box_length: f64, modes_per_axis: usize) -> crate::Result<TorusGrid> {
    TorusGrid::new(box_length, modes_per_axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Direct `O(n⁶)` synthesis `v(x_j) = Σ_k v̂_k e^{ik·x_j}`.
    fn naive_synthesis(field: &SpectralScalarField) -> Vec<f64> {
        let grid = field.grid();
        let m = grid.modes_per_axis();
        let h = grid.spacing();
        let mut out = vec![0.0; grid.len()];
        for (j, value) in out.iter_mut().enumerate() {
            let x = [
                (j / (m * m)) as f64 * h,
                ((j / m) % m) as f64 * h,
                (j % m) as f64 * h,
            ];
            let mut acc = Complex64::default();
            for (s, c) in field.coefficients().iter().enumerate() {
                let k = grid.wavevector(s);
                let phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                acc += c * Complex64::from_polar(1.0, phase);
            }
            *value = acc.re;
        }
        out
    }

    fn random_field(grid: &TorusGrid, seed: u64) -> SpectralScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralScalarField::from_coefficients(grid, coeffs).unwrap()
    }

    #[test]
    fn cosine_mode_samples() {
        let grid = build_grid(2.0 * PI, 8).unwrap();
        let f = SpectralScalarField::from_modes(&grid, &[([1, 0, 0], Complex64::new(0.5, 0.0))]);
        let samples = f.to_physical();
        let m = 8;
        for (j, v) in samples.iter().enumerate() {
            let x = (j / (m * m)) as f64 * grid.spacing();
            assert!((v - x.cos()).abs() < 1e-14);
        }
        let zero = SpectralScalarField::zeros(&grid).to_physical();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fft_matches_naive_dft_and_round_trips() {
        let grid = build_grid(2.0 * PI, 8).unwrap();
        let f = random_field(&grid, 11);
        let fast = f.to_physical();
        let slow = naive_synthesis(&f);
        let scale = slow.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-12 * scale, "diff {diff}");

        let back = SpectralScalarField::from_physical(&grid, &fast).unwrap();
        let err = (&back - &f).l2_norm() / f.l2_norm();
        assert!(err <= 1e-12, "round trip {err}");
    }

    #[test]
    fn padded_transform_round_trips() {
        let grid = build_grid(2.0 * PI, 8).unwrap();
        let f = random_field(&grid, 12);
        let padded = f.to_padded_physical();
        let back = SpectralScalarField::from_padded_physical(&grid, &padded).unwrap();
        assert!((&back - &f).l2_norm() <= 1e-13 * f.l2_norm());
    }

    #[test]
    fn dealiased_product_of_cosines() {
        // cos(3x)·cos(3x) = 1/2 + cos(6x)/2; on an 8-grid with m = 3 the
        // 6x mode is dropped instead of aliasing onto -2x.
        let grid = build_grid(2.0 * PI, 8).unwrap();
        let f = SpectralScalarField::from_modes(&grid, &[([3, 0, 0], Complex64::new(0.5, 0.0))]);
        let p = f.to_padded_physical();
        let sq: Vec<f64> = p.iter().map(|v| v * v).collect();
        let prod = SpectralScalarField::from_padded_physical(&grid, &sq).unwrap();
        assert!(prod.max_abs_coefficient() < 1e-15);
    }
}
