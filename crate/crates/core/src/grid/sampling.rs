//! Random band-limited fields for tests, ensembles and examples.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{fft, Repr, ScalarField, TorusGrid, VectorField};

/// Random real spectral field with Gaussian coefficients on modes with
/// `|m_i| ≤ band` along every axis (Nyquist excluded).
pub fn random_scalar<R: Rng + ?Sized>(grid: &TorusGrid, dim: usize, band: usize, rng: &mut R) -> ScalarField {
    let n = grid.n();
    let band = band.min(n / 2 - 1) as i64;
    let npts = grid.points();
    let neg = fft::negated_index(n);
    let inside = |i: usize| grid.signed_index(i).abs() <= band && i != n / 2;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * npts];
    let mut raw = vec![Complex64::new(0.0, 0.0); npts];
    for a in 0..dim {
        for (idx, z) in raw.iter_mut().enumerate() {
            let (i1, i2, i3) = grid.unflat(idx);
            *z = if inside(i1) && inside(i2) && inside(i3) {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let block = &mut data[a * npts..(a + 1) * npts];
        for idx in 0..npts {
            block[idx] = (raw[idx] + raw[neg[idx]].conj()) * 0.5;
        }
    }
    ScalarField::from_data(*grid, dim, Repr::Spectral, data).expect("sized by construction")
}

pub fn random_vector<R: Rng + ?Sized>(grid: &TorusGrid, dim: usize, band: usize, rng: &mut R) -> VectorField {
    let comps = [(); 3].map(|_| random_scalar(grid, dim, band, rng));
    VectorField::new(comps).expect("components share layout")
}

/// Rescales `v` so that its `H^s` norm equals `target` (zero fields are returned as is).
pub fn with_sobolev_norm(v: &VectorField, s: f64, target: f64) -> VectorField {
    let norm = v.sobolev_norm(s);
    if norm == 0.0 {
        return v.clone();
    }
    v.scale(target / norm)
}
