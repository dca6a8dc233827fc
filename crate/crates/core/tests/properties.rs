use admlab_core::filter::{deconv_symbol, gap_ratio, relaxation_symbol};
use admlab_core::spectral::{leray_project, sobolev_norm};
use admlab_core::{DeconvolutionSpec, SpectralField, SpectralScalarField, SpectralVectorField, TorusGrid};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn scalar(grid: &TorusGrid, values: &[(i64, i64, i64, f64, f64)]) -> SpectralScalarField {
    let modes: Vec<_> = values
        .iter()
        .map(|&(a, b, c, re, im)| ([a, b, c], Complex64::new(re, im)))
        .collect();
    SpectralScalarField::from_modes(grid, &modes)
}

fn mode() -> impl Strategy<Value = (i64, i64, i64, f64, f64)> {
    (-3i64..=3, -3i64..=3, -3i64..=3, -1.0..1.0f64, -1.0..1.0f64)
}

proptest! {
    #[test]
    fn deconvolution_symbol_bounds(alpha in 0.0..5.0f64, order in 0usize..60, k_sq in 0.0..400.0f64) {
        let d = deconv_symbol(alpha, order, k_sq);
        let a = 1.0 + alpha * alpha * k_sq;
        prop_assert!(d >= 1.0 - 1e-12);
        prop_assert!(d <= ((order + 1) as f64).min(a) * (1.0 + 1e-12));
        prop_assert!(deconv_symbol(alpha, order + 1, k_sq) >= d);
        let rho = relaxation_symbol(alpha, order, k_sq);
        prop_assert!((0.0..=1.0).contains(&rho));
        prop_assert!((0.0..1.0).contains(&gap_ratio(alpha, k_sq)));
    }

    #[test]
    fn leray_projection_is_idempotent_and_solenoidal(
        modes in proptest::collection::vec(mode(), 1..8),
    ) {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let c = scalar(&g, &modes);
        let v = SpectralVectorField::from_components([c.clone(), c.map_modes(|_, x| x * 0.5), c.zeroed()]).unwrap();
        let p = leray_project(&v);
        prop_assert!(p.divergence_defect() <= 1e-14 * (1.0 + p.max_abs_coefficient()));
        let pp = leray_project(&p);
        prop_assert!((&pp - &p).l2_norm() <= 1e-15 * (1.0 + p.l2_norm()));
        prop_assert!(p.l2_norm() <= v.l2_norm() * (1.0 + 1e-15));
    }

    #[test]
    fn filter_operators_commute_and_order(
        modes in proptest::collection::vec(mode(), 1..8),
        alpha in 0.05..3.0f64,
        order in 0usize..12,
    ) {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let f = scalar(&g, &modes);
        let spec = DeconvolutionSpec::new(&g, alpha, order).unwrap();
        let ga = spec.helmholtz_filter(&spec.apply_a(&f).unwrap()).unwrap();
        prop_assert!((&ga - &f).l2_norm() <= 1e-14 * (1.0 + f.l2_norm()));
        let d = spec.deconvolve(&f).unwrap();
        let dg = spec.helmholtz_filter(&d).unwrap();
        let gd = spec.deconvolve(&spec.helmholtz_filter(&f).unwrap()).unwrap();
        prop_assert!((&dg - &gd).l2_norm() <= 1e-14 * (1.0 + f.l2_norm()));
        // ‖f‖ ≤ ‖D_N f‖ ≤ ‖A f‖ in every Sobolev norm
        for s in [-1.0, 0.0, 1.0] {
            let a = spec.apply_a(&f).unwrap();
            prop_assert!(sobolev_norm(&f, s) <= sobolev_norm(&d, s) * (1.0 + 1e-12));
            prop_assert!(sobolev_norm(&d, s) <= sobolev_norm(&a, s) * (1.0 + 1e-12));
        }
    }
}
