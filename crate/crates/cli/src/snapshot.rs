//! Binary solver snapshots.
//!
//! Layout (all integers `u32`, all reals `f64`, little-endian):
//!
//! ```text
//! "ADMB1"
//! modes_per_axis cutoff order field_count
//! box_length nu epsilon alpha time
//! field_count × (name_len, utf-8 name)
//! field_count × M³ × (re, im)
//! ```
//!
//! Coefficients are written in lexicographic order of the integer
//! wavenumber `(k₁, k₂, k₃)`, each component running over `-M/2 .. M/2-1`.
use std::io::{self, Read, Write};
use std::path::Path;

use admlab_core::{
    AdmError, DeconvolutionSpec, ModelParams, SolverState, SpectralField, SpectralScalarField,
    SpectralVectorField, TorusGrid,
};
use num_complex::Complex64;
use thiserror::Error;

pub const MAGIC: &[u8; 5] = b"ADMB1";
pub const FIELD_NAMES: [&str; 4] = ["w1", "w2", "w3", "rho"];

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a snapshot (bad magic {0:?})")]
    BadMagic([u8; 5]),
    #[error("malformed snapshot: {0}")]
    Malformed(String),
    #[error(transparent)]
    Model(#[from] AdmError),
}

/// Wavenumbers in file order.
fn lexicographic(m: usize) -> impl Iterator<Item = [i64; 3]> {
    let half = (m / 2) as i64;
    (-half..half).flat_map(move |a| {
        (-half..half).flat_map(move |b| (-half..half).map(move |c| [a, b, c]))
    })
}

fn put_u32(out: &mut impl Write, v: usize) -> Result<(), SnapshotError> {
    let v = u32::try_from(v).map_err(|_| SnapshotError::Malformed(format!("{v} exceeds u32")))?;
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(out: &mut impl Write, v: f64) -> io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn get_u32(input: &mut impl Read) -> io::Result<usize> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(input: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_state(out: &mut impl Write, state: &SolverState) -> Result<(), SnapshotError> {
    let grid = state.w.grid();
    let spec = &state.params.spec;
    out.write_all(MAGIC)?;
    put_u32(out, grid.modes_per_axis())?;
    put_u32(out, grid.truncation_radius())?;
    put_u32(out, spec.order())?;
    put_u32(out, FIELD_NAMES.len())?;
    for v in [
        grid.box_length(),
        state.params.nu,
        state.params.epsilon,
        spec.alpha(),
        state.time,
    ] {
        put_f64(out, v)?;
    }
    for name in FIELD_NAMES {
        put_u32(out, name.len())?;
        out.write_all(name.as_bytes())?;
    }
    let [w1, w2, w3] = state.w.components();
    for field in [w1, w2, w3, &state.rho] {
        let coeffs = field.coefficients();
        for n in lexicographic(grid.modes_per_axis()) {
            let slot = grid.slot_of(n).expect("in range");
            put_f64(out, coeffs[slot].re)?;
            put_f64(out, coeffs[slot].im)?;
        }
    }
    Ok(())
}

pub fn read_state(input: &mut impl Read) -> Result<SolverState, SnapshotError> {
    let mut magic = [0u8; 5];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let m = get_u32(input)?;
    let cutoff = get_u32(input)?;
    let order = get_u32(input)?;
    let count = get_u32(input)?;
    let box_length = get_f64(input)?;
    let nu = get_f64(input)?;
    let epsilon = get_f64(input)?;
    let alpha = get_f64(input)?;
    let time = get_f64(input)?;
    let mut names = Vec::with_capacity(count);
    for _ in 0..count.min(64) {
        let len = get_u32(input)?;
        if len > 256 {
            return Err(SnapshotError::Malformed(format!("field name length {len}")));
        }
        let mut b = vec![0u8; len];
        input.read_exact(&mut b)?;
        names.push(String::from_utf8(b).map_err(|e| SnapshotError::Malformed(e.to_string()))?);
    }
    if names != FIELD_NAMES {
        return Err(SnapshotError::Malformed(format!(
            "expected fields {FIELD_NAMES:?}, found {names:?}"
        )));
    }

    let grid = TorusGrid::with_cutoff(box_length, m, cutoff)?;
    let mut fields = Vec::with_capacity(count);
    for _ in 0..count {
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for n in lexicographic(m) {
            let re = get_f64(input)?;
            let im = get_f64(input)?;
            coeffs[grid.slot_of(n).expect("in range")] = Complex64::new(re, im);
        }
        fields.push(SpectralScalarField::from_raw_coefficients(&grid, coeffs)?);
    }
    let rho = fields.pop().expect("four fields");
    let w3 = fields.pop().expect("four fields");
    let w2 = fields.pop().expect("four fields");
    let w1 = fields.pop().expect("four fields");
    let w = SpectralVectorField::from_components([w1, w2, w3])?;

    let spec = DeconvolutionSpec::new(&grid, alpha, order)?;
    let params = ModelParams::new(nu, epsilon, spec)?;
    Ok(SolverState {
        w,
        rho,
        time,
        params,
    })
}

pub fn save(path: &Path, state: &SolverState) -> Result<(), SnapshotError> {
    let mut buf = Vec::new();
    write_state(&mut buf, state)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SolverState, SnapshotError> {
    let bytes = std::fs::read(path)?;
    read_state(&mut bytes.as_slice())
}
