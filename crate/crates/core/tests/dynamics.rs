use admlab_core::diagnostics::energy_balance_residual;
use admlab_core::integrator::{integrate, Integration};
use admlab_core::spectral::{leray_project, sobolev_norm};
use admlab_core::{
    DeconvolutionSpec, ModelParams, SolverState, SpectralField, SpectralScalarField,
    SpectralVectorField, StepControl, TorusGrid,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn band_scalar(grid: &TorusGrid, rng: &mut ChaCha8Rng, k_max: i64) -> SpectralScalarField {
    let mut modes = Vec::new();
    for a in -k_max..=k_max {
        for b in -k_max..=k_max {
            for c in -k_max..=k_max {
                let k2 = a * a + b * b + c * c;
                if k2 == 0 || k2 > k_max * k_max {
                    continue;
                }
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                modes.push(([a, b, c], v));
            }
        }
    }
    let mut f = SpectralScalarField::from_modes(grid, &modes);
    f.symmetrize();
    f
}

fn initial(grid: &TorusGrid, seed: u64) -> (SpectralVectorField, SpectralScalarField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = SpectralVectorField::from_components([
        band_scalar(grid, &mut rng, 3),
        band_scalar(grid, &mut rng, 3),
        band_scalar(grid, &mut rng, 3),
    ])
    .unwrap();
    let u = leray_project(&u);
    let u = &u * (1.0 / u.l2_norm());
    let theta = band_scalar(grid, &mut rng, 2);
    let theta = &theta * (0.5 / theta.l2_norm());
    (u, theta)
}

fn run(dt: f64, t_end: f64, cadence: usize) -> Integration {
    let grid = TorusGrid::new(2.0 * PI, 16).unwrap();
    let (u, theta) = initial(&grid, 7);
    let spec = DeconvolutionSpec::new(&grid, 0.5, 3).unwrap();
    let params = ModelParams::new(0.05, 0.05, spec).unwrap();
    let state = SolverState::init(&u, &theta, params).unwrap();
    let control = StepControl::new(dt, t_end).with_cadence(cadence);
    integrate(state, &control, &mut []).unwrap()
}

fn state_error(a: &SolverState, b: &SolverState) -> f64 {
    sobolev_norm(&(&a.w - &b.w), 0.0) + sobolev_norm(&(&a.rho - &b.rho), 0.0)
}

#[test]
fn temporal_order_is_three() {
    let dts = [0.02, 0.01, 0.005];
    let reference = run(dts[2] / 16.0, 0.1, 1000).state;
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| state_error(&run(dt, 0.1, 1000).state, &reference))
        .collect();
    for w in errors.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 3.0).abs() <= 0.2, "slope {slope}, errors {errors:?}");
    }
}

#[test]
fn ledger_residual_is_second_order_in_sample_spacing() {
    let coarse = run(0.02, 0.4, 1);
    let fine = run(0.01, 0.4, 1);
    let max = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rc = max(&energy_balance_residual(&coarse.records).unwrap());
    let rf = max(&energy_balance_residual(&fine.records).unwrap());
    let ratio = rf / rc;
    assert!((0.2..0.3).contains(&ratio), "ratio {ratio} ({rc:e} -> {rf:e})");
    assert_eq!(
        coarse.records.iter().map(|r| r.balance_residual).collect::<Vec<_>>(),
        energy_balance_residual(&coarse.records).unwrap()
    );
}

#[test]
fn invariants_hold_along_a_run() {
    let out = run(0.01, 0.2, 5);
    out.state.check_invariants().unwrap();
    assert!(out.state.w.divergence_defect() < 1e-14);
    let e0 = out.records[0].energy;
    assert!(out.records.iter().all(|r| r.energy.is_finite() && r.energy <= e0 * 1.5));
}
