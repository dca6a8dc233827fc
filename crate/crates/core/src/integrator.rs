//! Time stepping for the semi-discrete ADM system.
//!
//! Diffusion is diagonal in Fourier space and is integrated exactly with
//! the factors `e^{-ν|k|²t}` and `e^{-ε|k|²t}`; the remaining terms go
//! through Williamson's third-order, two-register Runge-Kutta scheme in the
//! integrating-factor frame.
use num_complex::Complex64;

use crate::diagnostics::{energy_record, fill_balance_residuals, EnergyRecord};
use crate::error::{AdmError, Result};
use crate::rhs::{advecting_speed, assemble_tendency, explicit_tendency, ModelParams, Tendency};
use crate::spectral::{leray_project, SpectralField, SpectralScalarField, SpectralVectorField};

pub const SCHEME_ORDER: u32 = 3;

const RK_A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
const RK_B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];
const RK_C: [f64; 3] = [0.0, 1.0 / 3.0, 3.0 / 4.0];

/// Filtered velocity and density at a given time, plus the model that
/// evolves them.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub w: SpectralVectorField,
    pub rho: SpectralScalarField,
    pub time: f64,
    pub params: ModelParams,
}

impl SolverState {
    /// `w = G u₀`, `ρ = G θ₀`, `t = 0`.
    pub fn init(
        u0: &SpectralVectorField,
        theta0: &SpectralScalarField,
        params: ModelParams,
    ) -> Result<Self> {
        let grid = params.spec.grid();
        u0.check_grid(grid)?;
        theta0.check_grid(grid)?;
        let defect = u0.divergence_defect();
        let scale = crate::spectral::sobolev_norm(u0, 1.0);
        if defect > 1e-12 * (scale + f64::MIN_POSITIVE) && defect > 1e-300 {
            return Err(AdmError::NotDivergenceFree { residual: defect });
        }
        let w = params.spec.stokes_filter(u0)?;
        let rho = params.spec.helmholtz_filter(theta0)?;
        Ok(Self {
            w,
            rho,
            time: 0.0,
            params,
        })
    }

    pub fn tendency(&self) -> Result<Tendency> {
        assemble_tendency(&self.params, &self.w, &self.rho)
    }

    /// Checks the solenoidal, zero-mean and Hermitian invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let scale = crate::spectral::sobolev_norm(&self.w, 1.0);
        let div = self.w.divergence_defect();
        if div > 1e-12 * scale + 1e-300 {
            return Err(AdmError::InvariantViolation(format!(
                "divergence {div:e} at t = {}",
                self.time
            )));
        }
        if self.w.zero_mean_defect() != 0.0 || self.rho.zero_mean_defect() != 0.0 {
            return Err(AdmError::InvariantViolation(format!(
                "nonzero mean at t = {}",
                self.time
            )));
        }
        let herm = self.w.hermitian_defect().max(self.rho.hermitian_defect());
        let amp = self.w.max_abs_coefficient().max(self.rho.max_abs_coefficient());
        if herm > 1e-12 * amp + 1e-300 {
            return Err(AdmError::InvariantViolation(format!(
                "Hermitian symmetry defect {herm:e} at t = {}",
                self.time
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Observers (and the energy ledger) fire every `observer_cadence` steps.
    pub observer_cadence: usize,
    /// Check solver invariants after every step.
    pub strict_invariants: bool,
}

impl StepControl {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            cfl_safety: 0.5,
            observer_cadence: 10,
            strict_invariants: cfg!(debug_assertions),
        }
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.observer_cadence = cadence.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(AdmError::InvalidParameter {
                name: "dt",
                value: self.dt,
                range: "dt > 0",
            });
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(AdmError::InvalidParameter {
                name: "cfl_safety",
                value: self.cfl_safety,
                range: "0 < cfl_safety ≤ 1",
            });
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(AdmError::InvalidParameter {
                name: "t_end",
                value: self.t_end,
                range: "t_end ≥ 0",
            });
        }
        Ok(())
    }
}

/// Largest stable step `cfl_safety · h / (max|D_N w| + floor)`.
pub fn cfl_limit(state: &SolverState, cfl_safety: f64) -> Result<f64> {
    let speed = advecting_speed(&state.params, &state.w)?;
    Ok(cfl_safety * state.w.grid().spacing() / (speed + 1e-12))
}

/// Per-slot integrating factors `e^{-coeff |k|² τ}`.
fn decay_factors(k_sq: &[f64], coeff: f64, tau: f64) -> Vec<f64> {
    k_sq.iter().map(|&k| (-coeff * k * tau).exp()).collect()
}

fn scale_scalar(field: &SpectralScalarField, factors: &[f64]) -> SpectralScalarField {
    field.map_modes(|s, c| c * factors[s])
}

fn scale_vector(field: &SpectralVectorField, factors: &[f64]) -> SpectralVectorField {
    field.map_modes(|s, c| c * factors[s])
}

/// One step of length `dt` without the CFL check.
fn advance(state: &SolverState, dt: f64) -> Result<SolverState> {
    let params = &state.params;
    let k_sq = state.w.grid().k_sq_all();
    let (nu, eps) = (params.nu, params.epsilon);

    // integrating-factor frame anchored at t_n: v = e^{L(τ - t_n)} u
    let mut vw = state.w.clone();
    let mut vr = state.rho.clone();
    let mut qw = state.w.zeroed();
    let mut qr = state.rho.zeroed();
    for stage in 0..3 {
        let c = RK_C[stage];
        let (uw, ur) = if c == 0.0 {
            (vw.clone(), vr.clone())
        } else {
            (
                scale_vector(&vw, &decay_factors(k_sq, nu, c * dt)),
                scale_scalar(&vr, &decay_factors(k_sq, eps, c * dt)),
            )
        };
        let (nw, nr) = explicit_tendency(params, &uw, &ur)?;
        let (fw, fr) = if c == 0.0 {
            (nw, nr)
        } else {
            (
                scale_vector(&nw, &decay_factors(k_sq, -nu, c * dt)),
                scale_scalar(&nr, &decay_factors(k_sq, -eps, c * dt)),
            )
        };
        qw = qw.linear_combination(RK_A[stage], &fw, dt);
        qr = qr.linear_combination(RK_A[stage], &fr, dt);
        vw = vw.linear_combination(1.0, &qw, RK_B[stage]);
        vr = vr.linear_combination(1.0, &qr, RK_B[stage]);
    }
    let w = leray_project(&scale_vector(&vw, &decay_factors(k_sq, nu, dt)));
    let rho = scale_scalar(&vr, &decay_factors(k_sq, eps, dt));
    let finite = |f: &[Complex64]| f.iter().all(|c| c.re.is_finite() && c.im.is_finite());
    if !finite(rho.coefficients()) || !w.components().iter().all(|c| finite(c.coefficients())) {
        return Err(AdmError::NonFinite { time: state.time });
    }
    Ok(SolverState {
        w,
        rho,
        time: state.time + dt,
        params: params.clone(),
    })
}

/// Advances one step of `control.dt`, refusing steps that violate the CFL
/// bound on the deconvolved velocity.
pub fn step(state: &SolverState, control: &StepControl) -> Result<SolverState> {
    step_by(state, control, control.dt)
}

fn step_by(state: &SolverState, control: &StepControl, dt: f64) -> Result<SolverState> {
    let limit = cfl_limit(state, control.cfl_safety)?;
    if dt > limit {
        return Err(AdmError::CflViolation { dt, limit });
    }
    let next = advance(state, dt)?;
    if control.strict_invariants {
        next.check_invariants()?;
    }
    Ok(next)
}

/// Callback invoked at the observer cadence with the current state and its
/// energy record (balance residual not yet filled in).
pub trait Observer {
    fn observe(&mut self, step: usize, state: &SolverState, record: &EnergyRecord) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(usize, &SolverState, &EnergyRecord) -> Result<()>,
{
    fn observe(&mut self, step: usize, state: &SolverState, record: &EnergyRecord) -> Result<()> {
        self(step, state, record)
    }
}

/// Result of [`integrate`]: final state plus the energy ledger sampled at
/// the observer cadence, with balance residuals filled in when at least
/// three records exist.
#[derive(Clone, Debug)]
pub struct Integration {
    pub state: SolverState,
    pub records: Vec<EnergyRecord>,
    pub steps: usize,
}

/// A failed integration still hands back everything computed before the
/// failure.
#[derive(Debug)]
pub struct Aborted {
    pub partial: Integration,
    pub error: AdmError,
}

impl std::fmt::Display for Aborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "integration aborted after {} steps at t = {}: {}",
            self.partial.steps, self.partial.state.time, self.error
        )
    }
}

impl std::error::Error for Aborted {}

/// Steps from `state.time` to `control.t_end` with steps of exactly
/// `control.dt`, except for a shorter final step that lands on `t_end`.
/// Observers see step 0, every `observer_cadence`-th step and the final one.
pub fn integrate(
    state: SolverState,
    control: &StepControl,
    observers: &mut [&mut dyn Observer],
) -> std::result::Result<Integration, Box<Aborted>> {
    let abort = |partial: Integration, error: AdmError| Box::new(Aborted { partial, error });
    let mut out = Integration {
        state,
        records: Vec::new(),
        steps: 0,
    };
    if let Err(e) = control.validate() {
        return Err(abort(out, e));
    }
    let cadence = control.observer_cadence.max(1);
    if let Err(e) = notify(&mut out, observers) {
        return Err(abort(out, e));
    }
    let t_end = control.t_end;
    while out.state.time < t_end {
        let remaining = t_end - out.state.time;
        let last = remaining <= control.dt * (1.0 + 1e-9);
        let dt = if last { remaining } else { control.dt };
        match step_by(&out.state, control, dt) {
            Ok(mut next) => {
                if last {
                    next.time = t_end;
                }
                out.state = next;
                out.steps += 1;
            }
            Err(e) => {
                finish(&mut out);
                return Err(abort(out, e));
            }
        }
        if out.steps.is_multiple_of(cadence) || out.state.time >= t_end {
            if let Err(e) = notify(&mut out, observers) {
                finish(&mut out);
                return Err(abort(out, e));
            }
        }
    }
    finish(&mut out);
    Ok(out)
}

fn notify(out: &mut Integration, observers: &mut [&mut dyn Observer]) -> Result<()> {
    let record = energy_record(&out.state)?;
    for obs in observers.iter_mut() {
        obs.observe(out.steps, &out.state, &record)?;
    }
    out.records.push(record);
    Ok(())
}

fn finish(out: &mut Integration) {
    if out.records.len() >= 3 {
        fill_balance_residuals(&mut out.records).expect("at least three records");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::DeconvolutionSpec;
    use crate::rhs::Terms;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    fn taylor_green(grid: &TorusGrid) -> SpectralVectorField {
        // u = (sin x cos y cos z, -cos x sin y cos z, 0)
        let q = Complex64::new(0.0, -0.125);
        let mut u1 = SpectralScalarField::zeros(grid);
        let mut u2 = SpectralScalarField::zeros(grid);
        for &s2 in &[1i64, -1] {
            for &s3 in &[1i64, -1] {
                u1.add_mode([1, s2, s3], q);
                u2.add_mode([s2, 1, s3], -q);
            }
        }
        leray_project(
            &SpectralVectorField::from_components([u1, u2, SpectralScalarField::zeros(grid)])
                .unwrap(),
        )
    }

    fn params(grid: &TorusGrid, order: usize) -> ModelParams {
        let spec = DeconvolutionSpec::new(grid, 1.0, order).unwrap();
        ModelParams::new(0.1, 0.1, spec).unwrap()
    }

    #[test]
    fn init_filters_initial_data() {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let p = params(&g, 2);
        let zero = SolverState::init(
            &SpectralVectorField::zeros(&g),
            &SpectralScalarField::zeros(&g),
            p.clone(),
        )
        .unwrap();
        assert_eq!(zero.w.max_abs_coefficient(), 0.0);
        assert_eq!(zero.time, 0.0);

        let u0 = taylor_green(&g);
        let theta = SpectralScalarField::from_modes(&g, &[([1, 0, 0], Complex64::new(0.5, 0.0))]);
        let s = SolverState::init(&u0, &theta, p.clone()).unwrap();
        let slot = g.slot_of([1, 1, 1]).unwrap();
        let ratio = s.w.component(0).coefficients()[slot] / u0.component(0).coefficients()[slot];
        assert!((ratio.re - 1.0 / 4.0).abs() < 1e-15, "|k|² = 3 here");
        assert!((s.rho.coefficient([1, 0, 0]).re - 0.25).abs() < 1e-15);

        let bad = SpectralVectorField::from_components([
            SpectralScalarField::from_modes(&g, &[([1, 0, 0], Complex64::new(1.0, 0.0))]),
            SpectralScalarField::zeros(&g),
            SpectralScalarField::zeros(&g),
        ])
        .unwrap();
        assert!(matches!(
            SolverState::init(&bad, &theta, p),
            Err(AdmError::NotDivergenceFree { .. })
        ));
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let s = SolverState::init(
            &SpectralVectorField::zeros(&g),
            &SpectralScalarField::zeros(&g),
            params(&g, 3),
        )
        .unwrap();
        let next = step(&s, &StepControl::new(0.01, 1.0)).unwrap();
        assert_eq!(next.w.max_abs_coefficient(), 0.0);
        assert_eq!(next.rho.max_abs_coefficient(), 0.0);
        assert!((next.time - 0.01).abs() < 1e-16);
    }

    #[test]
    fn pure_diffusion_is_exact() {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let p = params(&g, 3).with_terms(Terms {
            advection: false,
            buoyancy: false,
        });
        let w = leray_project(
            &SpectralVectorField::from_components([
                SpectralScalarField::from_modes(&g, &[([0, 2, 1], Complex64::new(0.4, 0.3))]),
                SpectralScalarField::zeros(&g),
                SpectralScalarField::zeros(&g),
            ])
            .unwrap(),
        );
        let rho = SpectralScalarField::from_modes(&g, &[([1, 1, 0], Complex64::new(0.2, 0.0))]);
        let s = SolverState {
            w: w.clone(),
            rho: rho.clone(),
            time: 0.0,
            params: p,
        };
        let dt = 0.05;
        let next = step(&s, &StepControl::new(dt, 1.0)).unwrap();
        let expected = (-0.1 * 5.0 * dt).exp();
        let got = next.w.component(0).coefficient([0, 2, 1]) / w.component(0).coefficient([0, 2, 1]);
        assert!((got.re - expected).abs() <= 1e-12 * expected);
        let got = next.rho.coefficient([1, 1, 0]).re / 0.2;
        let expected = (-0.1 * 2.0 * dt).exp();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn cfl_violation_is_refused() {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let u0 = taylor_green(&g);
        let s = SolverState::init(&(&u0 * 50.0), &SpectralScalarField::zeros(&g), params(&g, 3))
            .unwrap();
        let err = step(&s, &StepControl::new(1.0, 2.0)).unwrap_err();
        assert!(matches!(err, AdmError::CflViolation { .. }));
    }

    #[test]
    fn integrate_with_no_time_left_is_a_no_op() {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let s = SolverState::init(&taylor_green(&g), &SpectralScalarField::zeros(&g), params(&g, 1))
            .unwrap();
        let out = integrate(s.clone(), &StepControl::new(0.01, 0.0), &mut []).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.state.w, s.w);
        assert_eq!(out.records.len(), 1);
    }

    #[test]
    fn observers_fire_at_cadence_and_final_step() {
        let g = TorusGrid::new(2.0 * PI, 8).unwrap();
        let s = SolverState::init(&taylor_green(&g), &SpectralScalarField::zeros(&g), params(&g, 1))
            .unwrap();
        let mut seen = Vec::new();
        let mut obs = |step: usize, _: &SolverState, _: &EnergyRecord| {
            seen.push(step);
            Ok(())
        };
        let control = StepControl::new(0.01, 0.125).with_cadence(5);
        let out = integrate(s, &control, &mut [&mut obs]).unwrap();
        assert_eq!(out.steps, 13);
        assert_eq!(seen, vec![0, 5, 10, 13]);
        assert_eq!(out.state.time, 0.125);
    }
}
