//! Periodic torus discretization and pseudospectral operators.

pub(crate) mod fft;
mod field;
pub mod sampling;

use std::f64::consts::PI;

pub use field::{dealiased_bracket, dealiased_pointwise, dealiased_product, ScalarField, VectorField};
pub(crate) use field::{for_each_mode, truncate_block};

use crate::error::{invalid, Result};

/// Uniform `n³` grid on the torus `[0, L)³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    n: usize,
    length: f64,
}

impl TorusGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return invalid(format!("grid size must be a power of two >= 8, got {n}"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return invalid(format!("torus period must be positive, got {length}"));
        }
        Ok(Self { n, length })
    }

    /// Grid on the standard torus of period 2π.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    /// `2π / L`, the wavenumber of index 1.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Multiplier taking DFT values to orthonormal-basis coefficients.
    pub(crate) fn spectral_scale(&self) -> f64 {
        self.length.powf(1.5) / self.points() as f64
    }

    /// Signed mode index in `{−n/2+1, …, n/2}` for a storage index.
    pub fn signed_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumbers along one axis (Nyquist counted as `+n/2`).
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.signed_index(i) as f64 * self.k0()).collect()
    }

    /// Wavenumbers used by odd-order symbols (derivatives, projections):
    /// identical to [`TorusGrid::wavenumbers`] except the Nyquist entry is 0,
    /// which keeps real fields real.
    pub fn odd_wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                if i == self.n / 2 {
                    0.0
                } else {
                    self.signed_index(i) as f64 * self.k0()
                }
            })
            .collect()
    }

    /// Whether a mode index survives the given dealiasing truncation on every axis.
    pub fn band_mask(&self, rule: Dealias) -> Vec<bool> {
        (0..self.n)
            .map(|i| rule.keeps(self.signed_index(i), self.n))
            .collect()
    }

    #[inline]
    pub fn flat(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n + i2) * self.n + i3
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    /// Physical coordinates of a grid point.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let (i1, i2, i3) = self.unflat(idx);
        let h = self.spacing();
        [i1 as f64 * h, i2 as f64 * h, i3 as f64 * h]
    }

    /// Storage index of a signed mode triple.
    pub fn mode_index(&self, m: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |k: i64| k.rem_euclid(n) as usize;
        self.flat(w(m[0]), w(m[1]), w(m[2]))
    }
}

/// Field representation tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Physical,
    Spectral,
}

/// Orszag truncation rules. `TwoThirds` keeps modes with `3|m| < n` on every
/// axis so quadratic products are alias-free on the retained band; `Half`
/// keeps `4|m| < n` for one-shot cubic products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dealias {
    TwoThirds,
    Half,
}

impl Dealias {
    pub fn keeps(&self, m: i64, n: usize) -> bool {
        let m = m.unsigned_abs() as usize;
        match self {
            Self::TwoThirds => 3 * m < n,
            Self::Half => 4 * m < n,
        }
    }

    /// Largest retained `|m|` on an `n`-grid.
    pub fn cutoff(&self, n: usize) -> usize {
        match self {
            Self::TwoThirds => (n - 1) / 3,
            Self::Half => (n - 1) / 4,
        }
    }
}
