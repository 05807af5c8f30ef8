//! Leray–Hodge splitting of vector fields.
//!
//! `P = Δ⁻¹ curl curl` keeps the divergence-free part, `1 − P = Δ⁻¹ ∇ div`
//! the curl-free part. The constant mode (and any mode whose odd-symbol
//! wavevector vanishes) belongs to the divergence-free part, so a curl-free
//! field always has a potential.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Repr, ScalarField, VectorField};

const HODGE_CURL_TOL: f64 = 1e-9;

/// The two halves of `A = A^df + A^cf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitField {
    pub df: VectorField,
    pub cf: VectorField,
}

impl SplitField {
    pub fn reconstruct(&self) -> VectorField {
        &self.df + &self.cf
    }
}

/// Per-mode longitudinal part: returns the spectral curl-free part of `a`.
fn longitudinal(a: &VectorField) -> VectorField {
    let spec = a.spectral();
    let grid = *a.grid();
    let npts = grid.points();
    let ko = grid.odd_wavenumbers();
    let n = grid.n();
    let mut out = VectorField::zeros(grid, a.dim(), Repr::Spectral);
    for alg in 0..a.dim() {
        let src = [0, 1, 2].map(|i| &spec.comp(i).block(alg)[..]);
        let mut dst: [Vec<Complex64>; 3] = [(); 3].map(|_| vec![Complex64::new(0.0, 0.0); npts]);
        let mut idx = 0;
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let k = [ko[i1], ko[i2], ko[i3]];
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if k2 > 0.0 {
                        let d = (src[0][idx] * k[0] + src[1][idx] * k[1] + src[2][idx] * k[2]) / k2;
                        for i in 0..3 {
                            dst[i][idx] = d * k[i];
                        }
                    }
                    idx += 1;
                }
            }
        }
        for (i, block) in dst.into_iter().enumerate() {
            out.comp_mut(i).block_mut(alg).copy_from_slice(&block);
        }
    }
    out
}

/// Divergence-free part `P A`.
pub fn project_df(a: &VectorField) -> VectorField {
    split(a).df
}

/// Curl-free part `(1 − P) A`.
pub fn project_cf(a: &VectorField) -> VectorField {
    longitudinal(a).into_repr_unchecked(a.repr())
}

/// Both parts at once, in the representation of the input.
pub fn split(a: &VectorField) -> SplitField {
    let cf = longitudinal(a);
    let df = &a.spectral() - &cf;
    SplitField {
        df: df.into_repr_unchecked(a.repr()),
        cf: cf.into_repr_unchecked(a.repr()),
    }
}

/// Potential `φ` with `∇φ = A^cf` and zero mean.
///
/// Fails with a precondition error when `A^cf` has a curl or a mean above
/// `1e-9` relative to its `H¹` size.
pub fn hodge_potential(acf: &VectorField) -> Result<ScalarField> {
    let spec = acf.spectral();
    let scale = spec.sobolev_norm(1.0);
    if scale > 0.0 {
        let curl = spec.curl().l2_norm();
        if curl > HODGE_CURL_TOL * scale {
            return Err(Error::Precondition(format!(
                "field is not curl-free: ‖curl‖ = {curl:.3e} vs ‖A‖_H1 = {scale:.3e}"
            )));
        }
        let mean = (0..3)
            .flat_map(|i| spec.comp(i).mean())
            .map(f64::abs)
            .fold(0.0, f64::max);
        if mean * spec.grid().volume().sqrt() > HODGE_CURL_TOL * scale {
            return Err(Error::Precondition(format!("curl-free field has nonzero mean {mean:.3e}")));
        }
    }
    let grid = *acf.grid();
    let npts = grid.points();
    let ko = grid.odd_wavenumbers();
    let n = grid.n();
    let mut phi = ScalarField::zeros(grid, acf.dim(), Repr::Spectral);
    for alg in 0..acf.dim() {
        let src = [0, 1, 2].map(|i| &spec.comp(i).block(alg)[..]);
        let dst = phi.block_mut(alg);
        let mut idx = 0;
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let k = [ko[i1], ko[i2], ko[i3]];
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if k2 > 0.0 {
                        let d = src[0][idx] * k[0] + src[1][idx] * k[1] + src[2][idx] * k[2];
                        // d / (i k²)
                        dst[idx] = Complex64::new(d.im, -d.re) / k2;
                    }
                    idx += 1;
                }
            }
        }
        debug_assert_eq!(dst.len(), npts);
    }
    Ok(phi.into_repr_unchecked(acf.repr()))
}

/// The `X` proxy `‖∇φ‖_{H^s}` of a potential.
pub fn x_norm(phi: &ScalarField, s: f64) -> f64 {
    VectorField::gradient(phi).sobolev_norm(s)
}
