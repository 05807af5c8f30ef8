use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{fft, Dealias, Repr, TorusGrid};
use crate::error::{invalid, Error, Result};
use crate::lie::StructureTensor;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Imaginary residue (relative) above which an inverse transform is rejected.
const HERMITIAN_TOL: f64 = 1e-9;

/// A g-valued scalar field on the torus: `dim` algebra coefficients per point,
/// stored block-wise as `(algebra index, x1, x2, x3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    dim: usize,
    repr: Repr,
    data: Vec<Complex64>,
}

/// Visits every mode with its flat index, true wavenumber and odd-symbol wavenumber.
pub(crate) fn for_each_mode(grid: &TorusGrid, mut f: impl FnMut(usize, [f64; 3], [f64; 3])) {
    let k = grid.wavenumbers();
    let ko = grid.odd_wavenumbers();
    let n = grid.n();
    let mut idx = 0;
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                f(idx, [k[i1], k[i2], k[i3]], [ko[i1], ko[i2], ko[i3]]);
                idx += 1;
            }
        }
    }
}

/// Zeroes every mode outside the truncation band, in place.
pub(crate) fn truncate_block(grid: &TorusGrid, block: &mut [Complex64], rule: Dealias) {
    let mask = grid.band_mask(rule);
    let n = grid.n();
    let mut idx = 0;
    for i1 in 0..n {
        for i2 in 0..n {
            let keep_plane = mask[i1] && mask[i2];
            for i3 in 0..n {
                if !(keep_plane && mask[i3]) {
                    block[idx] = ZERO;
                }
                idx += 1;
            }
        }
    }
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid, dim: usize, repr: Repr) -> Self {
        Self {
            grid,
            dim,
            repr,
            data: vec![ZERO; dim * grid.points()],
        }
    }

    /// Physical field from a pointwise closure writing the `dim` coefficients.
    pub fn from_fn(grid: TorusGrid, dim: usize, f: impl Fn([f64; 3], &mut [f64])) -> Self {
        let npts = grid.points();
        let mut data = vec![ZERO; dim * npts];
        let mut buf = vec![0.0; dim];
        for idx in 0..npts {
            f(grid.coords(idx), &mut buf);
            for a in 0..dim {
                data[a * npts + idx] = Complex64::new(buf[a], 0.0);
            }
        }
        Self {
            grid,
            dim,
            repr: Repr::Physical,
            data,
        }
    }

    pub fn from_data(grid: TorusGrid, dim: usize, repr: Repr, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * grid.points() {
            return invalid(format!(
                "field data has {} entries, expected {}",
                data.len(),
                dim * grid.points()
            ));
        }
        Ok(Self { grid, dim, repr, data })
    }

    /// Physical field from real values in block layout.
    pub fn from_real(grid: TorusGrid, dim: usize, values: &[f64]) -> Result<Self> {
        Self::from_data(
            grid,
            dim,
            Repr::Physical,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn constant(grid: TorusGrid, values: &[f64]) -> Self {
        Self::from_fn(grid, values.len(), |_, out| out.copy_from_slice(values))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn block(&self, a: usize) -> &[Complex64] {
        let n = self.grid.points();
        &self.data[a * n..(a + 1) * n]
    }

    pub fn block_mut(&mut self, a: usize) -> &mut [Complex64] {
        let n = self.grid.points();
        &mut self.data[a * n..(a + 1) * n]
    }

    /// Physical value of coefficient `a` at flat index `idx`.
    pub fn value(&self, a: usize, idx: usize) -> f64 {
        debug_assert_eq!(self.repr, Repr::Physical);
        self.data[a * self.grid.points() + idx].re
    }

    /// Real physical values of coefficient `a` (converting if needed).
    pub fn real_block(&self, a: usize) -> Vec<f64> {
        match self.repr {
            Repr::Physical => self.block(a).iter().map(|v| v.re).collect(),
            Repr::Spectral => fft::inverse_real_batch(&self.grid, &[self.block(a)]).remove(0),
        }
    }

    /// Transforms to spectral in place. Returns `false` (the warning flag)
    /// when the field was already spectral and nothing was done.
    pub fn to_spectral(&mut self) -> bool {
        if self.repr == Repr::Spectral {
            log::warn!("to_spectral called on a field that is already spectral");
            return false;
        }
        let grid = self.grid;
        for block in self.data.chunks_mut(grid.points()) {
            fft::forward_block(&grid, block);
        }
        self.repr = Repr::Spectral;
        true
    }

    /// Transforms to physical in place, rejecting spectra whose inverse has an
    /// imaginary part above `1e-9` relative (broken Hermitian symmetry).
    /// Returns `false` when the field was already physical.
    pub fn to_physical(&mut self) -> Result<bool> {
        if self.repr == Repr::Physical {
            return Ok(false);
        }
        let grid = self.grid;
        let mut scratch = self.data.clone();
        for block in scratch.chunks_mut(grid.points()) {
            fft::inverse_block(&grid, block);
            let max_abs = block.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let max_im = block.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            if max_im > HERMITIAN_TOL * max_abs.max(f64::MIN_POSITIVE) {
                return Err(Error::DataCorruption(format!(
                    "spectrum is not Hermitian: imaginary residue {max_im:.3e} vs magnitude {max_abs:.3e}"
                )));
            }
            block.iter_mut().for_each(|v| v.im = 0.0);
        }
        self.data = scratch;
        self.repr = Repr::Physical;
        Ok(true)
    }

    /// Inverse transform for spectra known to be Hermitian.
    pub(crate) fn to_physical_unchecked(&mut self) {
        if self.repr == Repr::Physical {
            return;
        }
        let grid = self.grid;
        let blocks: Vec<&[Complex64]> = self.data.chunks(grid.points()).collect();
        let real = fft::inverse_real_batch(&grid, &blocks);
        for (dst, src) in self.data.chunks_mut(grid.points()).zip(real) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = Complex64::new(s, 0.0);
            }
        }
        self.repr = Repr::Physical;
    }

    pub fn spectral(&self) -> Self {
        let mut out = self.clone();
        if out.repr == Repr::Physical {
            out.to_spectral();
        }
        out
    }

    pub fn physical(&self) -> Result<Self> {
        let mut out = self.clone();
        out.to_physical()?;
        Ok(out)
    }

    pub(crate) fn into_repr_unchecked(mut self, repr: Repr) -> Self {
        match repr {
            Repr::Physical => self.to_physical_unchecked(),
            Repr::Spectral => {
                if self.repr == Repr::Physical {
                    self.to_spectral();
                }
            }
        }
        self
    }

    /// Applies a per-mode multiplier `m(k, k_odd)` in spectral space and returns
    /// the result in the input representation.
    pub fn apply_multiplier(&self, m: impl Fn([f64; 3], [f64; 3]) -> Complex64) -> Self {
        let repr = self.repr;
        let mut out = self.spectral();
        let npts = self.grid.points();
        let mut symbol = vec![ZERO; npts];
        for_each_mode(&self.grid, |idx, k, ko| symbol[idx] = m(k, ko));
        for block in out.data.chunks_mut(npts) {
            for (v, s) in block.iter_mut().zip(&symbol) {
                *v *= s;
            }
        }
        out.into_repr_unchecked(repr)
    }

    pub fn partial_derivative(&self, axis: usize) -> Self {
        assert!(axis < 3, "axis must be 0, 1 or 2");
        self.apply_multiplier(|_, ko| Complex64::new(0.0, ko[axis]))
    }

    pub fn laplacian(&self) -> Self {
        self.apply_multiplier(|_, ko| Complex64::new(-(ko[0] * ko[0] + ko[1] * ko[1] + ko[2] * ko[2]), 0.0))
    }

    /// `Δ⁻¹` with the zero mode mapped to zero (mean-free convention).
    pub fn inverse_laplacian(&self) -> Self {
        self.apply_multiplier(|_, ko| {
            let k2 = ko[0] * ko[0] + ko[1] * ko[1] + ko[2] * ko[2];
            if k2 == 0.0 {
                ZERO
            } else {
                Complex64::new(-1.0 / k2, 0.0)
            }
        })
    }

    /// Zeroes modes outside the dealiasing band.
    pub fn truncate(&self, rule: Dealias) -> Self {
        let repr = self.repr;
        let mut out = self.spectral();
        let grid = self.grid;
        for block in out.data.chunks_mut(grid.points()) {
            truncate_block(&grid, block, rule);
        }
        out.into_repr_unchecked(repr)
    }

    /// `L²(T³)` norm, summed over algebra coefficients.
    pub fn l2_norm(&self) -> f64 {
        match self.repr {
            Repr::Spectral => self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
            Repr::Physical => {
                let h3 = self.grid.spacing().powi(3);
                (h3 * self.data.iter().map(|v| v.re * v.re).sum::<f64>()).sqrt()
            }
        }
    }

    /// `(Σ_ξ ⟨ξ⟩^{2s} |f̂(ξ)|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    pub(crate) fn sobolev_norm_sq(&self, s: f64) -> f64 {
        let spec;
        let data = match self.repr {
            Repr::Spectral => &self.data,
            Repr::Physical => {
                spec = self.spectral();
                &spec.data
            }
        };
        let npts = self.grid.points();
        let mut weights = vec![0.0; npts];
        for_each_mode(&self.grid, |idx, k, _| {
            weights[idx] = (1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).powf(s);
        });
        data.chunks(npts)
            .map(|b| b.iter().zip(&weights).map(|(v, w)| w * v.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Spatial mean of each coefficient.
    pub fn mean(&self) -> Vec<f64> {
        let npts = self.grid.points();
        match self.repr {
            Repr::Physical => self
                .data
                .chunks(npts)
                .map(|b| b.iter().map(|v| v.re).sum::<f64>() / npts as f64)
                .collect(),
            Repr::Spectral => self
                .data
                .chunks(npts)
                .map(|b| b[0].re / self.grid.length().powf(1.5))
                .collect(),
        }
    }

    /// Max-norm of the physical values (converting if needed).
    pub fn max_abs(&self) -> f64 {
        match self.repr {
            Repr::Physical => self.data.iter().map(|v| v.re.abs()).fold(0.0, f64::max),
            Repr::Spectral => {
                let mut p = self.clone();
                p.to_physical_unchecked();
                p.max_abs()
            }
        }
    }

    /// `L²` inner product `Σ_a ∫ f_a g_a`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.assert_compatible(other);
        match self.repr {
            Repr::Spectral => self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a.conj() * b).re)
                .sum(),
            Repr::Physical => {
                let h3 = self.grid.spacing().powi(3);
                h3 * self.data.iter().zip(&other.data).map(|(a, b)| a.re * b.re).sum::<f64>()
            }
        }
    }

    /// Largest violation of `f̂(−ξ) = conj f̂(ξ)`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        if self.repr == Repr::Physical {
            return 0.0;
        }
        let neg = fft::negated_index(self.grid.n());
        let npts = self.grid.points();
        let scale = self.data.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
        self.data
            .chunks(npts)
            .map(|b| {
                neg.iter()
                    .enumerate()
                    .map(|(k, &mk)| (b[k] - b[mk].conj()).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
            / scale
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.assert_compatible(other);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += y * a;
        }
    }

    /// Largest pointwise coefficient difference (physical values).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn same_layout(&self, other: &Self) -> bool {
        self.grid == other.grid && self.dim == other.dim && self.repr == other.repr
    }

    fn assert_compatible(&self, other: &Self) {
        assert!(
            self.same_layout(other),
            "field layout mismatch: ({:?}, {}, {:?}) vs ({:?}, {}, {:?})",
            self.grid,
            self.dim,
            self.repr,
            other.grid,
            other.dim,
            other.repr
        );
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

/// Pseudospectral pointwise map of several fields with Orszag truncation:
/// inputs are truncated to the band, combined pointwise on the grid by `op`
/// (which sees the concatenated coefficient vectors of all inputs), and the
/// result is truncated again. For `TwoThirds` and bilinear `op`, the retained
/// modes are exactly those of the product of the truncated inputs.
pub fn dealiased_pointwise(
    inputs: &[&ScalarField],
    out_dim: usize,
    rule: Dealias,
    op: impl Fn(&[f64], &mut [f64]),
) -> Result<ScalarField> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::InvalidInput("no operands".into()))?;
    let grid = first.grid;
    let repr = first.repr;
    for f in inputs {
        if f.grid != grid {
            return invalid("operands live on different grids");
        }
        if f.repr != repr {
            return invalid("operands have different representations");
        }
    }
    let npts = grid.points();
    let spectral: Vec<ScalarField> = inputs.iter().map(|f| f.truncate_spectral(rule)).collect();
    let blocks: Vec<&[Complex64]> = spectral
        .iter()
        .flat_map(|f| f.data.chunks(npts))
        .collect();
    let phys = fft::inverse_real_batch(&grid, &blocks);
    let in_width: usize = inputs.iter().map(|f| f.dim).sum();
    let mut out_phys = vec![vec![0.0; npts]; out_dim];
    let mut xin = vec![0.0; in_width];
    let mut xout = vec![0.0; out_dim];
    for idx in 0..npts {
        for (j, p) in phys.iter().enumerate() {
            xin[j] = p[idx];
        }
        op(&xin, &mut xout);
        for (o, v) in out_phys.iter_mut().zip(&xout) {
            o[idx] = *v;
        }
    }
    let refs: Vec<&[f64]> = out_phys.iter().map(|v| v.as_slice()).collect();
    let spectra = fft::forward_real_batch(&grid, &refs);
    let mut data = Vec::with_capacity(out_dim * npts);
    for mut s in spectra {
        truncate_block(&grid, &mut s, rule);
        data.extend(s);
    }
    let out = ScalarField {
        grid,
        dim: out_dim,
        repr: Repr::Spectral,
        data,
    };
    Ok(out.into_repr_unchecked(repr))
}

impl ScalarField {
    fn truncate_spectral(&self, rule: Dealias) -> Self {
        let mut out = self.spectral();
        let grid = self.grid;
        for block in out.data.chunks_mut(grid.points()) {
            truncate_block(&grid, block, rule);
        }
        out
    }
}

/// Coefficient-wise dealiased product. A dimension-1 operand multiplies every
/// coefficient of the other.
pub fn dealiased_product(f: &ScalarField, g: &ScalarField, rule: Dealias) -> Result<ScalarField> {
    let (df, dg) = (f.dim, g.dim);
    if df == dg {
        dealiased_pointwise(&[f, g], df, rule, |x, out| {
            for a in 0..df {
                out[a] = x[a] * x[df + a];
            }
        })
    } else if df == 1 {
        dealiased_pointwise(&[f, g], dg, rule, |x, out| {
            for a in 0..dg {
                out[a] = x[0] * x[1 + a];
            }
        })
    } else if dg == 1 {
        dealiased_pointwise(&[f, g], df, rule, |x, out| {
            for a in 0..df {
                out[a] = x[a] * x[df];
            }
        })
    } else {
        invalid(format!("cannot multiply fields of dimensions {df} and {dg}"))
    }
}

/// Dealiased pointwise Lie bracket `[f, g]`.
pub fn dealiased_bracket(
    f: &ScalarField,
    g: &ScalarField,
    s: &StructureTensor,
    rule: Dealias,
) -> Result<ScalarField> {
    let d = s.dim();
    if f.dim != d || g.dim != d {
        return invalid("bracket operands do not match the algebra dimension");
    }
    dealiased_pointwise(&[f, g], d, rule, |x, out| s.bracket_into(&x[..d], &x[d..], out))
}

/// A g-valued spatial vector field `(A_1, A_2, A_3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: [ScalarField; 3],
}

impl VectorField {
    pub fn new(comps: [ScalarField; 3]) -> Result<Self> {
        if !(comps[0].same_layout(&comps[1]) && comps[0].same_layout(&comps[2])) {
            return invalid("vector components must share grid, dimension and representation");
        }
        Ok(Self { comps })
    }

    pub fn zeros(grid: TorusGrid, dim: usize, repr: Repr) -> Self {
        let z = ScalarField::zeros(grid, dim, repr);
        Self {
            comps: [z.clone(), z.clone(), z],
        }
    }

    /// Physical field from a closure `f(x, component, out)`.
    pub fn from_fn(grid: TorusGrid, dim: usize, f: impl Fn([f64; 3], usize, &mut [f64])) -> Self {
        let comps = [0, 1, 2].map(|i| ScalarField::from_fn(grid, dim, |x, out| f(x, i, out)));
        Self { comps }
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn into_comps(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn grid(&self) -> &TorusGrid {
        self.comps[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.comps[0].dim()
    }

    pub fn repr(&self) -> Repr {
        self.comps[0].repr()
    }

    pub fn to_spectral(&mut self) -> bool {
        let mut changed = false;
        for c in &mut self.comps {
            changed |= c.to_spectral();
        }
        changed
    }

    pub fn to_physical(&mut self) -> Result<bool> {
        let mut changed = false;
        for c in &mut self.comps {
            changed |= c.to_physical()?;
        }
        Ok(changed)
    }

    pub fn spectral(&self) -> Self {
        self.map(ScalarField::spectral)
    }

    pub fn physical(&self) -> Result<Self> {
        let mut out = self.clone();
        out.to_physical()?;
        Ok(out)
    }

    pub(crate) fn into_repr_unchecked(self, repr: Repr) -> Self {
        let [a, b, c] = self.comps;
        Self {
            comps: [
                a.into_repr_unchecked(repr),
                b.into_repr_unchecked(repr),
                c.into_repr_unchecked(repr),
            ],
        }
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])],
        }
    }

    pub fn partial_derivative(&self, axis: usize) -> Self {
        self.map(|c| c.partial_derivative(axis))
    }

    pub fn inverse_laplacian(&self) -> Self {
        self.map(ScalarField::inverse_laplacian)
    }

    pub fn laplacian(&self) -> Self {
        self.map(ScalarField::laplacian)
    }

    pub fn truncate(&self, rule: Dealias) -> Self {
        self.map(|c| c.truncate(rule))
    }

    pub fn divergence(&self) -> ScalarField {
        let mut out = self.comps[0].partial_derivative(0);
        out.axpy(1.0, &self.comps[1].partial_derivative(1));
        out.axpy(1.0, &self.comps[2].partial_derivative(2));
        out
    }

    pub fn curl(&self) -> Self {
        let d = |i: usize, j: usize| self.comps[j].partial_derivative(i);
        Self {
            comps: [&d(1, 2) - &d(2, 1), &d(2, 0) - &d(0, 2), &d(0, 1) - &d(1, 0)],
        }
    }

    pub fn gradient(f: &ScalarField) -> Self {
        Self {
            comps: [0, 1, 2].map(|i| f.partial_derivative(i)),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.comps.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.comps.iter().map(|c| c.sobolev_norm_sq(s)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        (0..3).map(|i| self.comps[i].inner(&other.comps[i])).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for i in 0..3 {
            self.comps[i].axpy(a, &other.comps[i]);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.scale(rhs)
    }
}
