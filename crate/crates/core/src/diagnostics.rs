//! Energy ledger, norm tables and residual evaluators.
//!
//! All norms and inner products are coefficient sums (Parseval), i.e. they
//! equal `|𝕋³|⁻¹ ∫ · dx` of the physical quantities.
use crate::error::{AdmError, Result};
use crate::filter::DeconvolutionSpec;
use crate::integrator::SolverState;
use crate::rhs::{assemble_tendency, pressure_of, self_flux_divergence, scalar_flux_divergence};
use crate::spectral::{
    gradient, laplacian, sobolev_norm, sobolev_norm_sq, SpectralField, SpectralScalarField,
    SpectralVectorField,
};

/// One sample of the weighted energy balance
/// `dE/dt + ν‖∇Hw‖² + ε‖∇Hρ‖² = (Hρ e₃, Hw)`, `H = A^{1/2} D_N^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub time: f64,
    /// `½(‖Hw‖² + ‖Hρ‖²)`
    pub energy: f64,
    /// `‖Hρ‖²` on its own, for the density sub-ledger.
    pub density_energy: f64,
    pub visc_dissipation: f64,
    pub dens_dissipation: f64,
    pub buoyancy_flux: f64,
    /// Filled by [`fill_balance_residuals`]; zero until then.
    pub balance_residual: f64,
}

pub fn energy_record(state: &SolverState) -> Result<EnergyRecord> {
    let params = &state.params;
    let spec = &params.spec;
    let grid = state.w.grid().clone();
    let weight = |s: usize| spec.a_symbol(s) * spec.deconv_symbol(s);
    let grad_weight = |s: usize| grid.k_sq(s) * weight(s);
    state.w.check_grid(spec.grid())?;
    let w_energy = state.w.weighted_norm_sq(weight);
    let rho_energy = state.rho.weighted_norm_sq(weight);
    Ok(EnergyRecord {
        time: state.time,
        energy: 0.5 * (w_energy + rho_energy),
        density_energy: rho_energy,
        visc_dissipation: params.nu * state.w.weighted_norm_sq(grad_weight),
        dens_dissipation: params.epsilon * state.rho.weighted_norm_sq(grad_weight),
        buoyancy_flux: state.rho.weighted_inner(state.w.component(2), weight),
        balance_residual: 0.0,
    })
}

/// Second-order derivative estimates of `values` at every sample: centered
/// (possibly non-uniform) three-point differences in the interior and
/// one-sided three-point formulas at the ends.
pub fn time_derivative(times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = times.len();
    if n < 3 || values.len() != n {
        return Err(AdmError::InsufficientRecords { needed: 3, got: n });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = i.clamp(1, n - 2);
        let (t0, t1, t2) = (times[j - 1], times[j], times[j + 1]);
        let (f0, f1, f2) = (values[j - 1], values[j], values[j + 1]);
        let (h0, h1) = (t1 - t0, t2 - t1);
        let d = if i == j {
            -h1 / (h0 * (h0 + h1)) * f0 + (h1 - h0) / (h0 * h1) * f1 + h0 / (h1 * (h0 + h1)) * f2
        } else if i < j {
            -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * f0 + (h0 + h1) / (h0 * h1) * f1
                - h0 / (h1 * (h0 + h1)) * f2
        } else {
            h1 / (h0 * (h0 + h1)) * f0 - (h0 + h1) / (h0 * h1) * f1
                + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * f2
        };
        out.push(d);
    }
    Ok(out)
}

/// `dE/dt + dissipations - buoyancy flux` per record, with `dE/dt` from
/// [`time_derivative`] over the record times.
pub fn energy_balance_residual(records: &[EnergyRecord]) -> Result<Vec<f64>> {
    let times: Vec<f64> = records.iter().map(|r| r.time).collect();
    let energy: Vec<f64> = records.iter().map(|r| r.energy).collect();
    let de = time_derivative(&times, &energy)?;
    Ok(records
        .iter()
        .zip(de)
        .map(|(r, d)| d + r.visc_dissipation + r.dens_dissipation - r.buoyancy_flux)
        .collect())
}

pub fn fill_balance_residuals(records: &mut [EnergyRecord]) -> Result<()> {
    let res = energy_balance_residual(records)?;
    for (r, v) in records.iter_mut().zip(res) {
        r.balance_residual = v;
    }
    Ok(())
}

/// Left and right sides of the a priori bound
/// `‖Hw‖² + ‖Hρ‖² + ν∫‖∇Hw‖² + 2ε∫‖∇Hρ‖² ≤ ‖u₀‖² + (1 + t/ν)‖θ₀‖²`
/// per record, with the time integrals by the trapezoidal rule.
/// `u0_sq`, `theta0_sq` are the squared L² norms of the unfiltered data.
pub fn a_priori_bound(
    records: &[EnergyRecord],
    nu: f64,
    u0_sq: f64,
    theta0_sq: f64,
) -> Vec<(f64, f64)> {
    let mut integral = 0.0;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if i > 0 {
                let p = &records[i - 1];
                let dissipation = |x: &EnergyRecord| x.visc_dissipation + 2.0 * x.dens_dissipation;
                integral += 0.5 * (r.time - p.time) * (dissipation(p) + dissipation(r));
            }
            let lhs = 2.0 * r.energy + integral;
            let bound = u0_sq + (1.0 + (r.time - records[0].time) / nu) * theta0_sq;
            (lhs, bound)
        })
        .collect()
}

/// Per-sample slack of the limit energy inequality
/// `½ d/dt(‖Aw‖² + ‖Aρ‖²) + ν‖∇Aw‖² ≤ (Aρ e₃, Aw)`: `slack = RHS - LHS`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitInequality {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub slack: Vec<f64>,
}

impl LimitInequality {
    /// Fraction of samples with `slack ≥ -tolerance`.
    pub fn fraction_satisfied(&self, tolerance: f64) -> f64 {
        if self.slack.is_empty() {
            return 1.0;
        }
        let ok = self.slack.iter().filter(|&&s| s >= -tolerance).count();
        ok as f64 / self.slack.len() as f64
    }

    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn limit_energy_inequality(series: &[SolverState], nu: f64) -> Result<LimitInequality> {
    let mut times = Vec::with_capacity(series.len());
    let mut energy = Vec::with_capacity(series.len());
    let mut rhs_minus_diss = Vec::with_capacity(series.len());
    for state in series {
        let spec = &state.params.spec;
        let aw = spec.apply_a(&state.w)?;
        let arho = spec.apply_a(&state.rho)?;
        times.push(state.time);
        energy.push(0.5 * (aw.weighted_norm_sq(|_| 1.0) + arho.weighted_norm_sq(|_| 1.0)));
        let flux = arho.inner(aw.component(2));
        rhs_minus_diss.push(flux - nu * sobolev_norm_sq(&aw, 1.0));
    }
    let slack = if series.len() >= 3 {
        let de = time_derivative(&times, &energy)?;
        rhs_minus_diss.iter().zip(de).map(|(r, d)| r - d).collect()
    } else {
        // a single state has no measurable dE/dt; report the static part
        rhs_minus_diss.clone()
    };
    Ok(LimitInequality {
        times,
        energy,
        slack,
    })
}

/// `G ∇·(Aw ⊗ Aw)`, the limit-system momentum flux.
fn limit_momentum_flux(spec: &DeconvolutionSpec, w: &SpectralVectorField) -> Result<SpectralVectorField> {
    spec.helmholtz_filter(&self_flux_divergence(&spec.apply_a(w)?)?)
}

/// Pressure of the limit (mean) equations for the given state:
/// `Δq = ∇·(ρ e₃ - G∇·(Aw ⊗ Aw))`.
pub fn limit_pressure(state: &SolverState) -> Result<SpectralScalarField> {
    let spec = &state.params.spec;
    let f = &SpectralVectorField::along_axis(&state.rho, 2) - &limit_momentum_flux(spec, &state.w)?;
    Ok(pressure_of(&f))
}

/// Residuals of the filtered (mean) Boussinesq equations evaluated on an ADM
/// state, with `∂t w`, `∂t ρ` taken from the finite-N tendency:
///
/// ```text
/// r_w = ∂t w + G∇·(Aw⊗Aw) - νΔw + ∇q - ρe₃
/// r_ρ = ∂t ρ + G∇·(Aρ Aw)
/// ```
///
/// Returns their `H₋₁` norms `(Σ|k|⁻²|r̂_k|²)^{1/2}`.
pub fn mean_equation_residual(state: &SolverState, q: &SpectralScalarField) -> Result<(f64, f64)> {
    let params = &state.params;
    let spec = &params.spec;
    let tendency = assemble_tendency(params, &state.w, &state.rho)?;
    let aw = spec.apply_a(&state.w)?;
    let arho = spec.apply_a(&state.rho)?;

    let mut r_w = &tendency.dw + &limit_momentum_flux(spec, &state.w)?;
    r_w = &r_w - &(&laplacian(&state.w) * params.nu);
    r_w = &r_w + &gradient(q);
    r_w = &r_w - &SpectralVectorField::along_axis(&state.rho, 2);

    let r_rho = &tendency.drho + &spec.helmholtz_filter(&scalar_flux_divergence(&arho, &aw)?)?;
    Ok((sobolev_norm(&r_w, -1.0), sobolev_norm(&r_rho, -1.0)))
}

/// How a norm is accumulated over time samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeNorm {
    /// running maximum
    Sup,
    /// `(∫ ‖·‖^p dt)^{1/p}` by trapezoidal quadrature
    Lp(f64),
}

impl std::fmt::Display for TimeNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimeNorm::Sup => write!(f, "Linf"),
            TimeNorm::Lp(p) if *p == 2.0 => write!(f, "L2"),
            TimeNorm::Lp(p) if (*p - 4.0 / 3.0).abs() < 1e-12 => write!(f, "L4/3"),
            TimeNorm::Lp(p) => write!(f, "L{p}"),
        }
    }
}

/// One bound from the a priori tables: the quantity, its space-time norm
/// and the order of magnitude the analysis predicts.
#[derive(Clone, Debug, PartialEq)]
pub struct NormEntry {
    pub label: &'static str,
    pub variable: &'static str,
    /// Sobolev index of the spatial norm.
    pub space: f64,
    pub time_norm: TimeNorm,
    pub order: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormTable {
    pub entries: Vec<NormEntry>,
}

impl NormTable {
    pub fn get(&self, label: &str, time_norm: TimeNorm) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.label == label && e.time_norm == time_norm)
            .map(|e| e.value)
    }
}

#[derive(Clone, Copy)]
enum Quantity {
    HalfPowersW,
    SqrtDeconvW,
    W,
    DeconvW,
    DtW,
    DtDeconvW,
    Pressure,
    HalfPowersRho,
    SqrtDeconvRho,
    Rho,
    DeconvRho,
    DtRho,
    DtDeconvRho,
}

type Row = (&'static str, &'static str, Quantity, f64, TimeNorm, &'static str);

const L2: TimeNorm = TimeNorm::Lp(2.0);

const ROWS: &[Row] = &[
    ("w(a)", "A^1/2 D_N^1/2 w", Quantity::HalfPowersW, 0.0, TimeNorm::Sup, "O(1)"),
    ("w(a)", "A^1/2 D_N^1/2 w", Quantity::HalfPowersW, 1.0, L2, "O(1)"),
    ("w(b)", "D_N^1/2 w", Quantity::SqrtDeconvW, 0.0, TimeNorm::Sup, "O(1)"),
    ("w(b)", "D_N^1/2 w", Quantity::SqrtDeconvW, 1.0, L2, "O(1)"),
    ("w(c)", "D_N^1/2 w", Quantity::SqrtDeconvW, 1.0, TimeNorm::Sup, "O(1/alpha)"),
    ("w(c)", "D_N^1/2 w", Quantity::SqrtDeconvW, 2.0, L2, "O(1/alpha)"),
    ("w(d)", "w", Quantity::W, 0.0, TimeNorm::Sup, "O(1)"),
    ("w(d)", "w", Quantity::W, 1.0, L2, "O(1)"),
    ("w(e)", "w", Quantity::W, 1.0, TimeNorm::Sup, "O(1/alpha)"),
    ("w(e)", "w", Quantity::W, 2.0, L2, "O(1/alpha)"),
    ("w(f)", "D_N w", Quantity::DeconvW, 0.0, TimeNorm::Sup, "O(1)"),
    ("w(f)", "D_N w", Quantity::DeconvW, 1.0, L2, "O(1)"),
    ("w(g)", "D_N w", Quantity::DeconvW, 1.0, TimeNorm::Sup, "O(sqrt(N+1)/alpha)"),
    ("w(g)", "D_N w", Quantity::DeconvW, 2.0, L2, "O(sqrt(N+1)/alpha)"),
    ("w(h)", "dt w", Quantity::DtW, 0.0, L2, "O(1/alpha)"),
    ("w-unif(e)", "dt D_N w", Quantity::DtDeconvW, -1.0, TimeNorm::Lp(4.0 / 3.0), "O(1)"),
    ("w-unif(f)", "q", Quantity::Pressure, 1.0, L2, "O(1/alpha)"),
    ("rho(a)", "A^1/2 D_N^1/2 rho", Quantity::HalfPowersRho, 0.0, TimeNorm::Sup, "O(1)"),
    ("rho(a)", "A^1/2 D_N^1/2 rho", Quantity::HalfPowersRho, 1.0, L2, "O(1/sqrt(eps))"),
    ("rho(b)", "D_N^1/2 rho", Quantity::SqrtDeconvRho, 0.0, TimeNorm::Sup, "O(1)"),
    ("rho(b)", "D_N^1/2 rho", Quantity::SqrtDeconvRho, 1.0, L2, "O(1/sqrt(eps))"),
    ("rho(c)", "D_N^1/2 rho", Quantity::SqrtDeconvRho, 1.0, TimeNorm::Sup, "O(1/alpha)"),
    ("rho(c)", "D_N^1/2 rho", Quantity::SqrtDeconvRho, 2.0, L2, "O(1/(alpha sqrt(eps)))"),
    ("rho(d)", "rho", Quantity::Rho, 0.0, TimeNorm::Sup, "O(1)"),
    ("rho(d)", "rho", Quantity::Rho, 1.0, L2, "O(1/sqrt(eps))"),
    ("rho(e)", "rho", Quantity::Rho, 1.0, TimeNorm::Sup, "O(1/alpha)"),
    ("rho(e)", "rho", Quantity::Rho, 2.0, L2, "O(1/(alpha sqrt(eps)))"),
    ("rho(f)", "D_N rho", Quantity::DeconvRho, 0.0, TimeNorm::Sup, "O(1)"),
    ("rho(f)", "D_N rho", Quantity::DeconvRho, 1.0, L2, "O(1/sqrt(eps))"),
    ("rho(g)", "D_N rho", Quantity::DeconvRho, 1.0, TimeNorm::Sup, "O(sqrt(N+1)/alpha)"),
    ("rho(g)", "D_N rho", Quantity::DeconvRho, 2.0, L2, "O(sqrt(N+1)/(alpha sqrt(eps)))"),
    ("rho(h)", "dt rho", Quantity::DtRho, 0.0, L2, "O(1/alpha)"),
    ("rho-unif(e)", "dt D_N rho", Quantity::DtDeconvRho, -2.0, L2, "O(1)"),
];

/// Incremental form of [`norm_table`]: only the per-sample norms are kept,
/// so long runs need not retain their states.
#[derive(Clone, Debug, Default)]
pub struct NormAccumulator {
    times: Vec<f64>,
    // samples[row][time]
    samples: Vec<Vec<f64>>,
}

impl NormAccumulator {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            samples: vec![Vec::new(); ROWS.len()],
        }
    }

    pub fn push(&mut self, state: &SolverState) -> Result<()> {
        let spec = &state.params.spec;
        let t = assemble_tendency(&state.params, &state.w, &state.rho)?;
        let w_fields = [
            spec.apply_half_powers(&state.w)?,
            spec.deconvolve_sqrt(&state.w)?,
            state.w.clone(),
            spec.deconvolve(&state.w)?,
            t.dw.clone(),
            spec.deconvolve(&t.dw)?,
        ];
        let rho_fields = [
            spec.apply_half_powers(&state.rho)?,
            spec.deconvolve_sqrt(&state.rho)?,
            state.rho.clone(),
            spec.deconvolve(&state.rho)?,
            t.drho.clone(),
            spec.deconvolve(&t.drho)?,
            t.q.clone(),
        ];
        for (row, (_, _, quantity, s, _, _)) in ROWS.iter().enumerate() {
            let v = match quantity {
                Quantity::HalfPowersW => sobolev_norm(&w_fields[0], *s),
                Quantity::SqrtDeconvW => sobolev_norm(&w_fields[1], *s),
                Quantity::W => sobolev_norm(&w_fields[2], *s),
                Quantity::DeconvW => sobolev_norm(&w_fields[3], *s),
                Quantity::DtW => sobolev_norm(&w_fields[4], *s),
                Quantity::DtDeconvW => sobolev_norm(&w_fields[5], *s),
                Quantity::HalfPowersRho => sobolev_norm(&rho_fields[0], *s),
                Quantity::SqrtDeconvRho => sobolev_norm(&rho_fields[1], *s),
                Quantity::Rho => sobolev_norm(&rho_fields[2], *s),
                Quantity::DeconvRho => sobolev_norm(&rho_fields[3], *s),
                Quantity::DtRho => sobolev_norm(&rho_fields[4], *s),
                Quantity::DtDeconvRho => sobolev_norm(&rho_fields[5], *s),
                Quantity::Pressure => sobolev_norm(&rho_fields[6], *s),
            };
            self.samples[row].push(v);
        }
        self.times.push(state.time);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn table(&self) -> Result<NormTable> {
        if self.is_empty() {
            return Err(AdmError::InsufficientRecords { needed: 1, got: 0 });
        }
        let entries = ROWS
            .iter()
            .zip(&self.samples)
            .map(|(&(label, variable, _, space, time_norm, order), values)| NormEntry {
                label,
                variable,
                space,
                time_norm,
                order,
                value: accumulate(&self.times, values, time_norm),
            })
            .collect();
        Ok(NormTable { entries })
    }
}

/// Running maxima and time quadratures of every tabulated bound over a
/// series of states (time-ordered, non-empty).
pub fn norm_table(series: &[SolverState]) -> Result<NormTable> {
    let mut acc = NormAccumulator::new();
    for state in series {
        acc.push(state)?;
    }
    acc.table()
}

/// Applies a time norm to sampled spatial norms.
pub fn accumulate(times: &[f64], values: &[f64], norm: TimeNorm) -> f64 {
    match norm {
        TimeNorm::Sup => values.iter().copied().fold(0.0, f64::max),
        TimeNorm::Lp(p) => {
            let powered: Vec<f64> = values.iter().map(|v| v.powf(p)).collect();
            trapezoid(times, &powered).powf(1.0 / p)
        }
    }
}

pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
