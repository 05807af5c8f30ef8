//! Right-hand sides of the split temporal-gauge system.
//!
//! With `A = A^df + A^cf` the evolution reads
//!
//! ```text
//! ∂_t A^cf = −Δ⁻¹∇ [A_i, ∂_t A_i]
//! □ A^df   = −2P[A_i, ∂_i A] + P[A_i, ∇A_i] − P[A_i, [A_i, A]] − P[div A, A]
//! ```
//!
//! The last term comes from expanding `∂_i [A_i, A_j]` in the spatial
//! equation; it vanishes while `A^cf = 0` and is kept so that the split
//! system is equivalent to the full one. [`Dynamics::literal`] drops it.
//!
//! All products are pseudospectral with 2/3 truncation. The cubic term is
//! formed as two chained truncated brackets.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::evolution::State;
use crate::grid::{fft, truncate_block, Dealias, Repr, ScalarField, TorusGrid, VectorField};
use crate::lie::StructureTensor;
use crate::projections::project_df;

const RULE: Dealias = Dealias::TwoThirds;
const CF_SOLVE_TOL: f64 = 1e-14;
const CF_SOLVE_MAX_ITER: usize = 80;

/// Spatial curvature `F_ij = ∂_i A_j − ∂_j A_i + [A_i, A_j]` for `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub f12: ScalarField,
    pub f13: ScalarField,
    pub f23: ScalarField,
}

impl CurvatureField {
    /// `F_ij` for 0-based axes `i ≠ j`.
    pub fn component(&self, i: usize, j: usize) -> ScalarField {
        match (i, j) {
            (0, 1) => self.f12.clone(),
            (0, 2) => self.f13.clone(),
            (1, 2) => self.f23.clone(),
            (1, 0) => -&self.f12,
            (2, 0) => -&self.f13,
            (2, 1) => -&self.f23,
            _ => panic!("curvature component ({i}, {j}) is not an off-diagonal pair"),
        }
    }

    pub fn parts(&self) -> [&ScalarField; 3] {
        [&self.f12, &self.f13, &self.f23]
    }

    pub fn max_abs(&self) -> f64 {
        self.parts().iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }
}

/// The terms of the projected wave equation, each divergence-free.
#[derive(Debug, Clone)]
pub struct WaveTerms {
    /// `N(A^df, A^df)`.
    pub null: VectorField,
    /// Bilinear part with `A^df` undifferentiated and `A^cf` differentiated.
    pub df_cf: VectorField,
    /// Bilinear part with `A^cf` undifferentiated and `A^df` differentiated.
    pub cf_df: VectorField,
    pub cf_cf: VectorField,
    /// `−P[A_i, [A_i, A]]`.
    pub cubic: VectorField,
    /// `−P[div A, A]`.
    pub div_coupling: VectorField,
}

impl WaveTerms {
    pub fn total(&self) -> VectorField {
        let mut out = self.null.clone();
        for t in [&self.df_cf, &self.cf_df, &self.cf_cf, &self.cubic, &self.div_coupling] {
            out.axpy(1.0, t);
        }
        out
    }
}

/// Physical samples of a band-limited vector field and optionally its
/// first derivatives, laid out as `vals[i·d + a]`, `derivs[(j·3 + i)·d + a] = ∂_j A_i`.
struct Samples {
    vals: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

fn derivative_block(grid: &TorusGrid, block: &[Complex64], axis: usize) -> Vec<Complex64> {
    let ko = grid.odd_wavenumbers();
    let mut out = block.to_vec();
    for (idx, v) in out.iter_mut().enumerate() {
        let (i1, i2, i3) = grid.unflat(idx);
        let k = ko[[i1, i2, i3][axis]];
        *v = Complex64::new(-k * v.im, k * v.re);
    }
    out
}

/// Spectral copy restricted to the dealiasing band.
fn banded(v: &VectorField) -> VectorField {
    let mut out = v.spectral();
    let grid = *v.grid();
    for i in 0..3 {
        for a in 0..v.dim() {
            truncate_block(&grid, out.comp_mut(i).block_mut(a), RULE);
        }
    }
    out
}

impl Samples {
    fn new(v: &VectorField, with_derivs: bool) -> Self {
        let grid = *v.grid();
        let d = v.dim();
        let b = banded(v);
        let mut refs: Vec<&[Complex64]> = Vec::with_capacity(12 * d);
        for i in 0..3 {
            for a in 0..d {
                refs.push(b.comp(i).block(a));
            }
        }
        let owned: Vec<Vec<Complex64>> = if with_derivs {
            let mut o = Vec::with_capacity(9 * d);
            for j in 0..3 {
                for i in 0..3 {
                    for a in 0..d {
                        o.push(derivative_block(&grid, b.comp(i).block(a), j));
                    }
                }
            }
            o
        } else {
            Vec::new()
        };
        refs.extend(owned.iter().map(|v| v.as_slice()));
        let mut phys = fft::inverse_real_batch(&grid, &refs);
        let derivs = phys.split_off(3 * d);
        Self { vals: phys, derivs }
    }

    #[inline]
    fn gather_vals(&self, idx: usize, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(&self.vals) {
            *o = v[idx];
        }
    }

    #[inline]
    fn gather_derivs(&self, idx: usize, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(&self.derivs) {
            *o = v[idx];
        }
    }
}

/// Spectral, band-truncated vector field from physical blocks `(i, a)`.
fn assemble(grid: &TorusGrid, d: usize, phys: &[Vec<f64>]) -> VectorField {
    let refs: Vec<&[f64]> = phys.iter().map(|v| v.as_slice()).collect();
    let mut spectra = fft::forward_real_batch(grid, &refs).into_iter();
    let comps = [(); 3].map(|_| {
        let mut data = Vec::with_capacity(d * grid.points());
        for _ in 0..d {
            let mut s = spectra.next().expect("3·d blocks");
            truncate_block(grid, &mut s, RULE);
            data.extend(s);
        }
        ScalarField::from_data(*grid, d, Repr::Spectral, data).expect("sized by construction")
    });
    VectorField::new(comps).expect("components share layout")
}

/// `−Δ⁻¹∇ f` for a spectral scalar field, mean mode mapped to zero.
fn neg_inv_lap_grad(f: &ScalarField) -> VectorField {
    let comps = [0, 1, 2].map(|axis| {
        f.apply_multiplier(|_, k| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k[axis] / k2)
            }
        })
    });
    VectorField::new(comps).expect("components share layout")
}

/// Solves `M c = q` for a small dense system, dropping directions whose pivot
/// falls below `1e-12` of the largest (the kernel of `M`).
fn solve_small(m: &[f64], q: &[f64], d: usize) -> Vec<f64> {
    let mut aug: Vec<Vec<f64>> = (0..d)
        .map(|r| {
            let mut row = m[r * d..(r + 1) * d].to_vec();
            row.push(q[r]);
            row
        })
        .collect();
    let scale = m.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..d {
        if row == d {
            break;
        }
        let (best, val) = (row..d)
            .map(|r| (r, aug[r][col].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-12 * scale {
            continue;
        }
        aug.swap(row, best);
        let p = aug[row][col];
        for c in col..=d {
            aug[row][c] /= p;
        }
        for r in 0..d {
            if r != row {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in col..=d {
                        aug[r][c] -= f * aug[row][c];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let mut out = vec![0.0; d];
    for (r, &col) in pivot_cols.iter().enumerate() {
        out[col] = aug[r][d];
    }
    out
}

/// Dealiased null form `Q_ij(f, g) = ∂_i f ∂_j g − ∂_j f ∂_i g` with
/// coefficient-wise products and 0-based axes.
pub fn null_q(f: &ScalarField, g: &ScalarField, i: usize, j: usize) -> Result<ScalarField> {
    if i == j {
        return invalid(format!("null form needs distinct axes, got i = j = {i}"));
    }
    if i > 2 || j > 2 {
        return invalid("axes must be 0, 1 or 2");
    }
    if f.dim() != g.dim() {
        return invalid("null form operands must have equal dimension");
    }
    let d = f.dim();
    let (fi, fj, gi, gj) = (
        f.partial_derivative(i),
        f.partial_derivative(j),
        g.partial_derivative(i),
        g.partial_derivative(j),
    );
    crate::grid::dealiased_pointwise(&[&fi, &fj, &gi, &gj], d, RULE, |x, out| {
        for a in 0..d {
            out[a] = x[a] * x[3 * d + a] - x[d + a] * x[2 * d + a];
        }
    })
}

/// Right-hand side assembly for one Lie algebra.
#[derive(Debug, Clone)]
pub struct Dynamics {
    algebra: StructureTensor,
    div_coupling: bool,
}

impl Dynamics {
    pub fn new(algebra: StructureTensor) -> Self {
        Self {
            algebra,
            div_coupling: true,
        }
    }

    /// Variant without the `−P[div A, A]` term.
    pub fn literal(algebra: StructureTensor) -> Self {
        Self {
            algebra,
            div_coupling: false,
        }
    }

    pub fn algebra(&self) -> &StructureTensor {
        &self.algebra
    }

    pub fn includes_div_coupling(&self) -> bool {
        self.div_coupling
    }

    fn check(&self, fields: &[&VectorField]) -> Result<()> {
        let d = self.algebra.dim();
        let grid = fields[0].grid();
        for f in fields {
            if f.dim() != d {
                return invalid(format!(
                    "field has {} algebra components, the algebra has dimension {d}",
                    f.dim()
                ));
            }
            if f.grid() != grid {
                return invalid("fields live on different grids");
            }
        }
        Ok(())
    }

    pub fn curvature(&self, a: &VectorField) -> Result<CurvatureField> {
        self.check(&[a])?;
        let s = &self.algebra;
        let f = |i: usize, j: usize| -> Result<ScalarField> {
            let lin = &a.comp(j).partial_derivative(i) - &a.comp(i).partial_derivative(j);
            let br = crate::grid::dealiased_bracket(a.comp(i), a.comp(j), s, RULE)?;
            Ok(&lin + &br)
        };
        Ok(CurvatureField {
            f12: f(0, 1)?,
            f13: f(0, 2)?,
            f23: f(1, 2)?,
        })
    }

    /// `Σ_i [A_i, B_i]` as a spectral band-limited scalar field.
    fn bracket_trace(&self, a: &Samples, b: &Samples, grid: &TorusGrid) -> ScalarField {
        let d = self.algebra.dim();
        let npts = grid.points();
        let mut out = vec![vec![0.0; npts]; d];
        let (mut av, mut bv, mut o) = (vec![0.0; 3 * d], vec![0.0; 3 * d], vec![0.0; d]);
        for idx in 0..npts {
            a.gather_vals(idx, &mut av);
            b.gather_vals(idx, &mut bv);
            o.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..3 {
                self.algebra
                    .bracket_acc(&av[i * d..(i + 1) * d], &bv[i * d..(i + 1) * d], 1.0, &mut o);
            }
            for (dst, v) in out.iter_mut().zip(&o) {
                dst[idx] = *v;
            }
        }
        let refs: Vec<&[f64]> = out.iter().map(|v| v.as_slice()).collect();
        let mut data = Vec::with_capacity(d * npts);
        for mut s in fft::forward_real_batch(grid, &refs) {
            truncate_block(grid, &mut s, RULE);
            data.extend(s);
        }
        ScalarField::from_data(*grid, d, Repr::Spectral, data).expect("sized by construction")
    }

    /// `−Δ⁻¹∇ Σ_i [A_i, (A_t)_i]` for a given velocity; curl-free.
    pub fn gauss_rhs(&self, a: &VectorField, at: &VectorField) -> Result<VectorField> {
        self.check(&[a, at])?;
        let grid = *a.grid();
        if self.algebra.is_abelian() {
            return Ok(VectorField::zeros(grid, a.dim(), a.repr()));
        }
        let f = self.bracket_trace(&Samples::new(a, false), &Samples::new(at, false), &grid);
        Ok(neg_inv_lap_grad(&f).into_repr_unchecked(a.repr()))
    }

    /// The curl-free velocity `W = ∂_t A^cf` solving `W = gauss_rhs(A, A^df_t + W)`
    /// by fixed-point iteration (a contraction for small `A`). `guess` warm-starts
    /// the iteration. The result is spectral.
    pub fn cf_velocity(
        &self,
        a: &VectorField,
        adf_t: &VectorField,
        guess: Option<&VectorField>,
    ) -> Result<VectorField> {
        self.check(&[a, adf_t])?;
        let grid = *a.grid();
        let d = self.algebra.dim();
        if self.algebra.is_abelian() {
            return Ok(VectorField::zeros(grid, d, Repr::Spectral));
        }
        self.cf_velocity_sampled(&Samples::new(a, false), adf_t, guess, &grid)
    }

    fn cf_velocity_sampled(
        &self,
        sa: &Samples,
        adf_t: &VectorField,
        guess: Option<&VectorField>,
        grid: &TorusGrid,
    ) -> Result<VectorField> {
        let grid = *grid;
        let f0 = self.bracket_trace(sa, &Samples::new(adf_t, false), &grid);
        let mut w = match guess {
            Some(g) => g.spectral(),
            None => neg_inv_lap_grad(&f0),
        };
        let mut last_diff = f64::INFINITY;
        let mut growth = 0;
        let mut history = Vec::new();
        for _ in 0..CF_SOLVE_MAX_ITER {
            let mut f = self.bracket_trace(sa, &Samples::new(&w, false), &grid);
            f.axpy(1.0, &f0);
            let next = neg_inv_lap_grad(&f);
            let diff = (&next - &w).l2_norm();
            let size = next.l2_norm();
            w = next;
            history.push(diff);
            if diff <= CF_SOLVE_TOL * size || size == 0.0 {
                return Ok(w);
            }
            if diff >= last_diff {
                growth += 1;
                if growth >= 3 {
                    // Converged to the roundoff floor.
                    if diff <= 1e-12 * size {
                        return Ok(w);
                    }
                    return Err(Error::NonContraction { history });
                }
            } else {
                growth = 0;
            }
            last_diff = diff;
        }
        Err(Error::NonConvergence {
            iterations: CF_SOLVE_MAX_ITER,
            last: last_diff,
            history,
        })
    }

    /// `N(A₁, A₂) = −2P[(P A₁)_i, ∂_i A₂] + P[(A₁)_i, ∇(A₂)_i]`.
    pub fn null_n(&self, a1: &VectorField, a2: &VectorField) -> Result<VectorField> {
        self.check(&[a1, a2])?;
        let grid = *a1.grid();
        let out = self.bilinear(
            &Samples::new(&project_df(a1), false),
            &Samples::new(a1, false),
            &Samples::new(a2, true),
            &grid,
        );
        Ok(project_df(&out).into_repr_unchecked(a1.repr()))
    }

    /// Unprojected `Σ_i (−2[X'_i, ∂_i Y] + [X_i, ∇Y_i])`.
    fn bilinear(&self, xp: &Samples, x: &Samples, y: &Samples, grid: &TorusGrid) -> VectorField {
        let d = self.algebra.dim();
        let npts = grid.points();
        if self.algebra.is_abelian() {
            return VectorField::zeros(*grid, d, Repr::Spectral);
        }
        let mut out = vec![vec![0.0; npts]; 3 * d];
        let (mut xpv, mut xv, mut dy) = (vec![0.0; 3 * d], vec![0.0; 3 * d], vec![0.0; 9 * d]);
        let mut o = vec![0.0; 3 * d];
        for idx in 0..npts {
            xp.gather_vals(idx, &mut xpv);
            x.gather_vals(idx, &mut xv);
            y.gather_derivs(idx, &mut dy);
            o.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..3 {
                let oj = &mut o[j * d..(j + 1) * d];
                for i in 0..3 {
                    // ∂_i Y_j and ∂_j Y_i
                    let dij = &dy[(i * 3 + j) * d..(i * 3 + j + 1) * d];
                    let dji = &dy[(j * 3 + i) * d..(j * 3 + i + 1) * d];
                    self.algebra.bracket_acc(&xpv[i * d..(i + 1) * d], dij, -2.0, oj);
                    self.algebra.bracket_acc(&xv[i * d..(i + 1) * d], dji, 1.0, oj);
                }
            }
            for (dst, v) in out.iter_mut().zip(&o) {
                dst[idx] = *v;
            }
        }
        assemble(grid, d, &out)
    }

    /// Pairwise brackets `[A_0, A_1], [A_0, A_2], [A_1, A_2]` of sampled values,
    /// truncated and resampled.
    fn pair_brackets(&self, a: &Samples, grid: &TorusGrid) -> Samples {
        let d = self.algebra.dim();
        let npts = grid.points();
        let mut pairs = vec![vec![0.0; npts]; 3 * d];
        let mut av = vec![0.0; 3 * d];
        let mut o = vec![0.0; d];
        for idx in 0..npts {
            a.gather_vals(idx, &mut av);
            for (p, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
                self.algebra
                    .bracket_into(&av[i * d..(i + 1) * d], &av[j * d..(j + 1) * d], &mut o);
                for (k, v) in o.iter().enumerate() {
                    pairs[p * d + k][idx] = *v;
                }
            }
        }
        Samples::new(&assemble(grid, d, &pairs), false)
    }

    /// Adds `−Σ_i [A_i, [A_i, A_j]]` (chained truncated brackets) into `out`.
    fn add_cubic(&self, a: &Samples, out: &mut [Vec<f64>], grid: &TorusGrid) {
        let d = self.algebra.dim();
        let b = self.pair_brackets(a, grid);
        let (mut av, mut bv) = (vec![0.0; 3 * d], vec![0.0; 3 * d]);
        let mut o = vec![0.0; 3 * d];
        for idx in 0..grid.points() {
            a.gather_vals(idx, &mut av);
            b.gather_vals(idx, &mut bv);
            let ai = |i: usize| &av[i * d..(i + 1) * d];
            let bp = |p: usize| &bv[p * d..(p + 1) * d];
            o.iter_mut().for_each(|v| *v = 0.0);
            let s = &self.algebra;
            // B_01 = bp(0), B_02 = bp(1), B_12 = bp(2); B_ji = −B_ij.
            s.bracket_acc(ai(1), bp(0), 1.0, &mut o[0..d]);
            s.bracket_acc(ai(2), bp(1), 1.0, &mut o[0..d]);
            s.bracket_acc(ai(0), bp(0), -1.0, &mut o[d..2 * d]);
            s.bracket_acc(ai(2), bp(2), 1.0, &mut o[d..2 * d]);
            s.bracket_acc(ai(0), bp(1), -1.0, &mut o[2 * d..3 * d]);
            s.bracket_acc(ai(1), bp(2), -1.0, &mut o[2 * d..3 * d]);
            for (dst, v) in out.iter_mut().zip(&o) {
                dst[idx] += *v;
            }
        }
    }

    /// Source of `□A^df` for the full field `A`; divergence-free.
    pub fn wave_rhs(&self, a: &VectorField) -> Result<VectorField> {
        self.check(&[a])?;
        let grid = *a.grid();
        let d = self.algebra.dim();
        if self.algebra.is_abelian() {
            return Ok(VectorField::zeros(grid, d, a.repr()));
        }
        let sa = Samples::new(a, true);
        Ok(self.wave_rhs_sampled(&sa, &grid).into_repr_unchecked(a.repr()))
    }

    /// Wave source and curl-free velocity for the full field `A` and the
    /// divergence-free velocity, sharing one sampling of `A`. Both spectral.
    pub(crate) fn sources(
        &self,
        a: &VectorField,
        adf_t: &VectorField,
        guess: Option<&VectorField>,
    ) -> Result<(VectorField, VectorField)> {
        self.check(&[a, adf_t])?;
        let grid = *a.grid();
        let d = self.algebra.dim();
        if self.algebra.is_abelian() {
            let z = VectorField::zeros(grid, d, Repr::Spectral);
            return Ok((z.clone(), z));
        }
        let sa = Samples::new(a, true);
        let s = self.wave_rhs_sampled(&sa, &grid);
        let w = self.cf_velocity_sampled(&sa, adf_t, guess, &grid)?;
        Ok((s, w))
    }

    fn wave_rhs_sampled(&self, sa: &Samples, grid: &TorusGrid) -> VectorField {
        let grid = *grid;
        let d = self.algebra.dim();
        let npts = grid.points();
        let mut out = vec![vec![0.0; npts]; 3 * d];
        let (mut av, mut dv) = (vec![0.0; 3 * d], vec![0.0; 9 * d]);
        let mut div = vec![0.0; d];
        let mut o = vec![0.0; 3 * d];
        for idx in 0..npts {
            sa.gather_vals(idx, &mut av);
            sa.gather_derivs(idx, &mut dv);
            for k in 0..d {
                div[k] = dv[k] + dv[4 * d + k] + dv[8 * d + k];
            }
            o.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..3 {
                let oj = &mut o[j * d..(j + 1) * d];
                for i in 0..3 {
                    let ai = &av[i * d..(i + 1) * d];
                    self.algebra
                        .bracket_acc(ai, &dv[(i * 3 + j) * d..(i * 3 + j + 1) * d], -2.0, oj);
                    self.algebra
                        .bracket_acc(ai, &dv[(j * 3 + i) * d..(j * 3 + i + 1) * d], 1.0, oj);
                }
                if self.div_coupling {
                    self.algebra.bracket_acc(&div, &av[j * d..(j + 1) * d], -1.0, oj);
                }
            }
            for (dst, v) in out.iter_mut().zip(&o) {
                dst[idx] = *v;
            }
        }
        self.add_cubic(sa, &mut out, &grid);
        project_df(&assemble(&grid, d, &out))
    }

    /// The wave source split into its null, cross, cubic and divergence
    /// coupling parts (each projected). `total()` equals [`Dynamics::wave_rhs`]
    /// of `A^df + A^cf` up to rounding (the coupling term is zero for
    /// [`Dynamics::literal`]).
    pub fn wave_terms(&self, adf: &VectorField, acf: &VectorField) -> Result<WaveTerms> {
        self.check(&[adf, acf])?;
        let grid = *adf.grid();
        let d = self.algebra.dim();
        let repr = adf.repr();
        let (sdf, scf) = (Samples::new(adf, true), Samples::new(acf, true));
        let finish = |v: VectorField| project_df(&v).into_repr_unchecked(repr);
        let null = finish(self.bilinear(&sdf, &sdf, &sdf, &grid));
        let df_cf = finish(self.bilinear(&sdf, &sdf, &scf, &grid));
        let cf_df = finish(self.bilinear(&scf, &scf, &sdf, &grid));
        let cf_cf = finish(self.bilinear(&scf, &scf, &scf, &grid));

        let full = adf + acf;
        let sa = Samples::new(&full, true);
        let npts = grid.points();
        let mut cubic = vec![vec![0.0; npts]; 3 * d];
        if !self.algebra.is_abelian() {
            self.add_cubic(&sa, &mut cubic, &grid);
        }
        let cubic = finish(assemble(&grid, d, &cubic));

        let mut coupling = vec![vec![0.0; npts]; 3 * d];
        if self.div_coupling && !self.algebra.is_abelian() {
            let (mut av, mut dv, mut div) = (vec![0.0; 3 * d], vec![0.0; 9 * d], vec![0.0; d]);
            let mut o = vec![0.0; d];
            for idx in 0..npts {
                sa.gather_vals(idx, &mut av);
                sa.gather_derivs(idx, &mut dv);
                for k in 0..d {
                    div[k] = dv[k] + dv[4 * d + k] + dv[8 * d + k];
                }
                for j in 0..3 {
                    self.algebra.bracket_into(&div, &av[j * d..(j + 1) * d], &mut o);
                    for k in 0..d {
                        coupling[j * d + k][idx] = -o[k];
                    }
                }
            }
        }
        let div_coupling = finish(assemble(&grid, d, &coupling));
        Ok(WaveTerms {
            null,
            df_cf,
            cf_df,
            cf_cf,
            cubic,
            div_coupling,
        })
    }

    /// `‖div A_t + [A_i, (A_t)_i]‖_{L²}`.
    pub fn compatibility_residual(&self, a: &VectorField, at: &VectorField) -> Result<f64> {
        self.check(&[a, at])?;
        let grid = *a.grid();
        let mut r = at.spectral().divergence();
        if !self.algebra.is_abelian() {
            let f = self.bracket_trace(&Samples::new(a, false), &Samples::new(at, false), &grid);
            r.axpy(1.0, &f);
        }
        Ok(r.l2_norm())
    }

    /// Total charge `∫ Σ_i [A_i, (A_t)_i]`, which must vanish on the torus
    /// for the constraint to be solvable.
    pub fn charge(&self, a: &VectorField, at: &VectorField) -> Result<Vec<f64>> {
        self.check(&[a, at])?;
        let grid = *a.grid();
        let f = self.bracket_trace(&Samples::new(a, false), &Samples::new(at, false), &grid);
        let c = grid.length().powf(1.5);
        Ok((0..f.dim()).map(|k| f.block(k)[0].re * c).collect())
    }

    /// Makes `(A, A^df_t)` compatible: removes the total charge by a correction
    /// of `A^df_t` along the divergence-free parts of the infinitesimal constant
    /// rotations `[e_b, A]`, then solves for the curl-free velocity. Returns the
    /// corrected `A^df_t` and `A^cf_t` (both spectral).
    pub fn enforce_compatibility(
        &self,
        a: &VectorField,
        adf_t: &VectorField,
    ) -> Result<(VectorField, VectorField)> {
        self.check(&[a, adf_t])?;
        let d = self.algebra.dim();
        let mut vel = project_df(&adf_t.spectral());
        if self.algebra.is_abelian() {
            return Ok((vel, VectorField::zeros(*a.grid(), d, Repr::Spectral)));
        }
        let a_spec = a.spectral();
        let directions: Vec<VectorField> = (0..d)
            .map(|b| {
                let rotated = a_spec.map(|c| {
                    let mut out = ScalarField::zeros(*c.grid(), d, Repr::Spectral);
                    for src in 0..d {
                        for k in 0..d {
                            let coef = self.algebra.get(b, src, k);
                            if coef != 0.0 {
                                let (from, to) = (c.block(src).to_vec(), out.block_mut(k));
                                for (t, f) in to.iter_mut().zip(from) {
                                    *t += f * coef;
                                }
                            }
                        }
                    }
                    out
                });
                project_df(&rotated)
            })
            .collect();
        let mut m = vec![0.0; d * d];
        for (b, k_b) in directions.iter().enumerate() {
            let q = self.charge(a, k_b)?;
            for k in 0..d {
                m[k * d + b] = q[k];
            }
        }
        let mut w = self.cf_velocity(a, &vel, None)?;
        for _ in 0..6 {
            let q = self.charge(a, &(&vel + &w))?;
            let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = a.l2_norm() * (vel.l2_norm() + w.l2_norm());
            if qn <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            let c = solve_small(&m, &q, d);
            for (b, k_b) in directions.iter().enumerate() {
                vel.axpy(-c[b], k_b);
            }
            w = self.cf_velocity(a, &vel, Some(&w))?;
        }
        Ok((vel, w))
    }

    /// `‖∇A^df‖₂ + ‖A^cf_t‖₂ + ‖A^df_t‖₂` with `A^cf_t` from the Gauss law.
    pub fn hamiltonian_proxy(&self, state: &State) -> Result<f64> {
        let a = state.full_field();
        let w = self.cf_velocity(&a, &state.adf_t, None)?;
        Ok(gradient_norm(&state.adf) + w.l2_norm() + state.adf_t.l2_norm())
    }
}

/// `‖∇f‖₂` using the true wavenumbers `(Σ |ξ|² |f̂|²)^{1/2}`.
pub fn gradient_norm(v: &VectorField) -> f64 {
    let spec = v.spectral();
    let grid = *v.grid();
    let npts = grid.points();
    let mut w = vec![0.0; npts];
    crate::grid::for_each_mode(&grid, |idx, k, _| w[idx] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    let mut sum = 0.0;
    for c in spec.comps() {
        for a in 0..c.dim() {
            sum += c.block(a).iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>();
        }
    }
    sum.sqrt()
}
