use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::transform::Fft3;
use crate::error::{AdmError, Result};

/// Periodic box `]0, L[³` with a symmetric integer wavenumber lattice.
///
/// Coefficients are stored on the full `M³` FFT lattice: slot `i` along an
/// axis holds integer wavenumber `i` for `i < M/2` and `i - M` otherwise.
/// The Nyquist plane `-M/2` never carries energy. A mode is *retained* when
/// its integer radius satisfies `|n| ≤ m`, where `m` is the truncation radius
/// (at most `M/2 - 1`, the largest ball that fits in the lattice).
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    box_length: f64,
    modes: usize,
    cutoff: usize,
    padded: usize,
    indices: Vec<[i64; 3]>,
    wavevectors: Vec<[f64; 3]>,
    k_sq: Vec<f64>,
    retained: Vec<bool>,
    partner: Vec<usize>,
    fft: Fft3,
    padded_fft: Fft3,
}

impl TorusGrid {
    /// Builds a grid with `modes_per_axis` samples per direction and the
    /// largest spherical truncation radius the lattice supports.
    pub fn new(box_length: f64, modes_per_axis: usize) -> Result<Self> {
        if modes_per_axis < 4 || !modes_per_axis.is_multiple_of(2) {
            return Err(AdmError::InvalidGrid(format!(
                "modes_per_axis must be even and >= 4, got {modes_per_axis}"
            )));
        }
        Self::with_cutoff(box_length, modes_per_axis, modes_per_axis / 2 - 1)
    }

    /// Same as [`TorusGrid::new`] with an explicit truncation radius `m`.
    pub fn with_cutoff(box_length: f64, modes_per_axis: usize, cutoff: usize) -> Result<Self> {
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(AdmError::InvalidGrid(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        if modes_per_axis < 4 || !modes_per_axis.is_multiple_of(2) {
            return Err(AdmError::InvalidGrid(format!(
                "modes_per_axis must be even and >= 4, got {modes_per_axis}"
            )));
        }
        let m = modes_per_axis;
        let cutoff = cutoff.min(m / 2 - 1);
        let scale = 2.0 * PI / box_length;
        let total = m * m * m;
        let mut indices = Vec::with_capacity(total);
        let mut wavevectors = Vec::with_capacity(total);
        let mut k_sq = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        let mut partner = Vec::with_capacity(total);
        let cutoff_sq = (cutoff * cutoff) as i64;
        for i0 in 0..m {
            for i1 in 0..m {
                for i2 in 0..m {
                    let n = [wrap(i0, m), wrap(i1, m), wrap(i2, m)];
                    let k = [n[0] as f64 * scale, n[1] as f64 * scale, n[2] as f64 * scale];
                    let n_sq = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
                    indices.push(n);
                    wavevectors.push(k);
                    k_sq.push(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
                    retained.push(n_sq <= cutoff_sq);
                    partner.push(flat(
                        [(m - i0) % m, (m - i1) % m, (m - i2) % m],
                        m,
                    ));
                }
            }
        }
        let padded = 3 * m / 2;
        Ok(Self {
            inner: Arc::new(GridInner {
                box_length,
                modes: m,
                cutoff,
                padded,
                indices,
                wavevectors,
                k_sq,
                retained,
                partner,
                fft: Fft3::new(m),
                padded_fft: Fft3::new(padded),
            }),
        })
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    pub fn modes_per_axis(&self) -> usize {
        self.inner.modes
    }

    /// Truncation radius `m` in integer-index units.
    pub fn truncation_radius(&self) -> usize {
        self.inner.cutoff
    }

    /// Points per axis of the 3/2-rule dealiasing grid.
    pub fn padded_points(&self) -> usize {
        self.inner.padded
    }

    /// Number of storage slots (`M³`).
    pub fn len(&self) -> usize {
        self.inner.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.indices.is_empty()
    }

    /// Sample spacing `L / M`.
    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.modes as f64
    }

    /// Scaling `2π/L` between integer indices and physical wavenumbers.
    pub fn wavenumber_scale(&self) -> f64 {
        2.0 * PI / self.inner.box_length
    }

    pub fn integer_index(&self, slot: usize) -> [i64; 3] {
        self.inner.indices[slot]
    }

    pub fn wavevector(&self, slot: usize) -> [f64; 3] {
        self.inner.wavevectors[slot]
    }

    /// Physical `|k|²` at a slot.
    pub fn k_sq(&self, slot: usize) -> f64 {
        self.inner.k_sq[slot]
    }

    pub fn k_sq_all(&self) -> &[f64] {
        &self.inner.k_sq
    }

    pub fn is_retained(&self, slot: usize) -> bool {
        self.inner.retained[slot]
    }

    /// Slot holding `-k` for the mode stored at `slot`.
    pub fn partner(&self, slot: usize) -> usize {
        self.inner.partner[slot]
    }

    /// Slot of an integer wavenumber, if it lies in the lattice.
    pub fn slot_of(&self, n: [i64; 3]) -> Option<usize> {
        let m = self.inner.modes as i64;
        let half = m / 2;
        let mut idx = [0usize; 3];
        for d in 0..3 {
            if n[d] < -half || n[d] >= half {
                return None;
            }
            idx[d] = n[d].rem_euclid(m) as usize;
        }
        Some(flat(idx, self.inner.modes))
    }

    /// Largest physical `|k|²` among retained modes.
    pub fn max_retained_k_sq(&self) -> f64 {
        (0..self.len())
            .filter(|&s| self.is_retained(s))
            .map(|s| self.k_sq(s))
            .fold(0.0, f64::max)
    }

    pub(crate) fn fft(&self) -> &Fft3 {
        &self.inner.fft
    }

    pub(crate) fn padded_fft(&self) -> &Fft3 {
        &self.inner.padded_fft
    }

    pub(crate) fn same_as(&self, other: &TorusGrid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.box_length.to_bits() == other.inner.box_length.to_bits()
            && self.inner.modes == other.inner.modes
            && self.inner.cutoff == other.inner.cutoff
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("box_length", &self.inner.box_length)
            .field("modes_per_axis", &self.inner.modes)
            .field("truncation_radius", &self.inner.cutoff)
            .finish()
    }
}

fn wrap(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

pub(crate) fn flat(idx: [usize; 3], m: usize) -> usize {
    (idx[0] * m + idx[1]) * m + idx[2]
}
