//! Gauge transformations and the iterative passage to the Coulomb gauge.
//!
//! A gauge field `U` acts by `A_i ↦ U A_i U⁻¹ − (∂_i U) U⁻¹`. For `U = exp(φ)`
//! both terms have convergent expansions inside the algebra,
//! `e^{ad φ} A_i` and `Σ_k ad_φ^k(∂_i φ) / (k+1)!`, which is what
//! [`coulomb_fix`] uses; [`apply_gauge`] handles arbitrary `U` through
//! spectral derivatives of its matrix entries.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::fft;
use crate::grid::{Repr, ScalarField, TorusGrid, VectorField};
use crate::lie::{CMatrix, GroupElement, Representation, StructureTensor};
use crate::projections::{hodge_potential, project_cf, x_norm};

const ALGEBRA_TOL: f64 = 1e-9;
const SERIES_MAX_TERMS: usize = 60;

/// A group-valued field stored pointwise in a matrix representation.
#[derive(Debug, Clone)]
pub struct GaugeField {
    grid: TorusGrid,
    rep: Representation,
    mats: Vec<CMatrix>,
}

impl GaugeField {
    pub fn identity(grid: TorusGrid, rep: Representation) -> Self {
        let m = rep.size();
        Self {
            grid,
            mats: vec![CMatrix::identity(m); grid.points()],
            rep,
        }
    }

    /// `exp(V(x))` at every grid point.
    pub fn exp(v: &ScalarField, rep: Representation) -> Result<Self> {
        if v.dim() != rep.algebra_dim() {
            return Err(Error::InvalidInput(format!(
                "field has {} coefficients, representation expects {}",
                v.dim(),
                rep.algebra_dim()
            )));
        }
        let grid = *v.grid();
        let vals = physical_values(v)?;
        let d = v.dim();
        let npts = grid.points();
        let mut x = vec![0.0; d];
        let mats = (0..npts)
            .map(|idx| {
                for a in 0..d {
                    x[a] = vals[a * npts + idx];
                }
                rep.exp(&x).matrix
            })
            .collect();
        Ok(Self { grid, rep, mats })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn representation(&self) -> &Representation {
        &self.rep
    }

    pub fn at(&self, idx: usize) -> GroupElement {
        GroupElement {
            matrix: self.mats[idx].clone(),
        }
    }

    /// Pointwise product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.grid != rhs.grid || self.rep.size() != rhs.rep.size() {
            return Err(Error::InvalidInput("gauge fields live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            rep: self.rep.clone(),
            mats: self.mats.iter().zip(&rhs.mats).map(|(a, b)| a.mul(b)).collect(),
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            grid: self.grid,
            rep: self.rep.clone(),
            mats: self.mats.iter().map(CMatrix::inverse).collect::<Result<_>>()?,
        })
    }

    /// Largest `|det U − 1|` over the grid.
    pub fn determinant_defect(&self) -> f64 {
        self.mats
            .iter()
            .map(|m| (m.determinant() - 1.0).norm())
            .fold(0.0, f64::max)
    }

    /// `U x U⁻¹` pointwise, in the representation of `x`.
    pub fn adjoint(&self, x: &ScalarField) -> Result<ScalarField> {
        self.check(x.grid(), x.dim())?;
        let vals = physical_values(x)?;
        let d = x.dim();
        let npts = self.grid.points();
        let mut out = vec![0.0; d * npts];
        let mut buf = vec![0.0; d];
        for idx in 0..npts {
            for a in 0..d {
                buf[a] = vals[a * npts + idx];
            }
            let y = self.rep.adjoint(&self.at(idx), &buf)?;
            for a in 0..d {
                out[a * npts + idx] = y[a];
            }
        }
        Ok(ScalarField::from_real(self.grid, d, &out)?.into_repr_unchecked(x.repr()))
    }

    fn check(&self, grid: &TorusGrid, dim: usize) -> Result<()> {
        if *grid != self.grid {
            return Err(Error::InvalidInput("field and gauge live on different grids".into()));
        }
        if dim != self.rep.algebra_dim() {
            return Err(Error::InvalidInput(format!(
                "field has {dim} coefficients, gauge algebra has {}",
                self.rep.algebra_dim()
            )));
        }
        Ok(())
    }

    /// Spectral derivatives of every matrix entry along each axis.
    fn derivatives(&self) -> [Vec<CMatrix>; 3] {
        let grid = self.grid;
        let n = grid.n();
        let npts = grid.points();
        let m = self.rep.size();
        let plan = fft::fft3(n);
        let ko = grid.odd_wavenumbers();
        let mut out: [Vec<CMatrix>; 3] = [(); 3].map(|_| vec![CMatrix::zeros(m); npts]);
        let mut spec = vec![Complex64::new(0.0, 0.0); npts];
        let mut buf = vec![Complex64::new(0.0, 0.0); npts];
        for e in 0..m * m {
            for (idx, v) in spec.iter_mut().enumerate() {
                *v = self.mats[idx].data()[e];
            }
            plan.forward(&mut spec);
            for axis in 0..3 {
                for (idx, v) in buf.iter_mut().enumerate() {
                    let (i1, i2, i3) = grid.unflat(idx);
                    let k = ko[[i1, i2, i3][axis]];
                    *v = spec[idx] * Complex64::new(0.0, k / npts as f64);
                }
                plan.inverse(&mut buf);
                for (idx, v) in buf.iter().enumerate() {
                    out[axis][idx].data_mut()[e] = *v;
                }
            }
        }
        out
    }
}

/// Real grid values; spectra produced internally are Hermitian up to roundoff.
fn physical_values(f: &ScalarField) -> Result<Vec<f64>> {
    let p = f.clone().into_repr_unchecked(Repr::Physical);
    Ok(p.data().iter().map(|v| v.re).collect())
}

/// `A_i ↦ U A_i U⁻¹ − (∂_i U) U⁻¹`, pulled back to algebra coefficients.
/// The result keeps the representation of `a`.
pub fn apply_gauge(u: &GaugeField, a: &VectorField) -> Result<VectorField> {
    u.check(a.grid(), a.dim())?;
    let grid = *a.grid();
    let d = a.dim();
    let npts = grid.points();
    let rep = &u.rep;
    let inv = u.inverse()?;
    let du = u.derivatives();
    let vals: Vec<Vec<f64>> = (0..3).map(|i| physical_values(a.comp(i))).collect::<Result<_>>()?;
    let mut out = vec![vec![0.0; d * npts]; 3];
    let mut x = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for idx in 0..npts {
        let (ui, uinv) = (&u.mats[idx], &inv.mats[idx]);
        for i in 0..3 {
            for k in 0..d {
                x[k] = vals[i][k * npts + idx];
            }
            let conj = ui.mul(&rep.represent(&x)).mul(uinv);
            let mc = du[i][idx].mul(uinv);
            let (coeffs, resid) = rep.pull_back(&conj.sub(&mc));
            worst = worst.max(resid);
            for k in 0..d {
                out[i][k * npts + idx] = coeffs[k];
            }
        }
    }
    if worst > ALGEBRA_TOL {
        return Err(Error::Numerical(format!(
            "(∂U)U⁻¹ leaves the algebra (residual {worst:.2e})"
        )));
    }
    let comps = [0, 1, 2].map(|i| ScalarField::from_real(grid, d, &out[i]));
    let [c0, c1, c2] = comps;
    Ok(VectorField::new([c0?, c1?, c2?])?.into_repr_unchecked(a.repr()))
}

/// Gauge action of `U = exp(φ)` computed inside the algebra:
/// `A_i ↦ e^{ad φ} A_i − Σ_k ad_φ^k(∂_i φ)/(k+1)!`.
pub fn apply_exp_gauge(algebra: &StructureTensor, phi: &ScalarField, a: &VectorField) -> Result<VectorField> {
    let grid = *a.grid();
    let d = a.dim();
    if d != algebra.dim() || phi.dim() != d || *phi.grid() != grid {
        return Err(Error::InvalidInput("gauge potential and field do not match".into()));
    }
    let npts = grid.points();
    let p = physical_values(phi)?;
    let grad = VectorField::gradient(&phi.spectral());
    let g: Vec<Vec<f64>> = (0..3).map(|i| physical_values(grad.comp(i))).collect::<Result<_>>()?;
    let vals: Vec<Vec<f64>> = (0..3).map(|i| physical_values(a.comp(i))).collect::<Result<_>>()?;
    let mut out = vec![vec![0.0; d * npts]; 3];
    let (mut ph, mut term, mut next, mut sum) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    // Σ_k ad_φ^k(x) / (k + shift)! with the k = 0 weight 1/shift!
    let mut series = |ph: &[f64], x: &[f64], shift: usize, sum: &mut [f64]| {
        term.copy_from_slice(x);
        sum.copy_from_slice(x);
        for k in 1..SERIES_MAX_TERMS {
            algebra.bracket_into(ph, &term, &mut next);
            let c = 1.0 / (k + shift) as f64;
            let mut size: f64 = 0.0;
            for (t, v) in term.iter_mut().zip(&next) {
                *t = v * c;
                size = size.max(t.abs());
            }
            for (s, t) in sum.iter_mut().zip(term.iter()) {
                *s += t;
            }
            if size == 0.0 || size <= 1e-17 * sum.iter().fold(0.0, |m: f64, v| m.max(v.abs())) {
                break;
            }
        }
    };
    let mut x = vec![0.0; d];
    let mut mc = vec![0.0; d];
    for idx in 0..npts {
        for k in 0..d {
            ph[k] = p[k * npts + idx];
        }
        for i in 0..3 {
            for k in 0..d {
                x[k] = vals[i][k * npts + idx];
            }
            series(&ph, &x, 0, &mut sum);
            for k in 0..d {
                x[k] = g[i][k * npts + idx];
            }
            series(&ph, &x, 1, &mut mc);
            for k in 0..d {
                out[i][k * npts + idx] = sum[k] - mc[k];
            }
        }
    }
    let comps = [0, 1, 2].map(|i| ScalarField::from_real(grid, d, &out[i]));
    let [c0, c1, c2] = comps;
    Ok(VectorField::new([c0?, c1?, c2?])?.into_repr_unchecked(a.repr()))
}

/// Controls for [`coulomb_fix`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoulombOptions {
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CoulombOptions {
    fn default() -> Self {
        Self {
            s: 0.8,
            tol: 1e-10,
            max_iter: 20,
        }
    }
}

/// Outcome of [`coulomb_fix`].
#[derive(Debug, Clone)]
pub struct GaugeTransformResult {
    /// `Ã(0)`, in the representation of the input.
    pub transformed: VectorField,
    /// Product of all gauge steps, `Ã = U_total · A`.
    pub u_total: GaugeField,
    pub iterations: usize,
    /// `‖A^cf‖_{H^s}` before the first step and after every step.
    pub residual_history: Vec<f64>,
    /// `‖∇V‖_{H^s}` of the potential used in each step (0 for the initial entry).
    pub x_norms: Vec<f64>,
}

impl GaugeTransformResult {
    /// `δ_{k+1} / δ_k` for consecutive residuals.
    pub fn ratios(&self) -> Vec<f64> {
        self.residual_history.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Rows `iter,residual,x_norm_of_V`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,residual,x_norm_of_V\n");
        for (k, (r, x)) in self.residual_history.iter().zip(&self.x_norms).enumerate() {
            out.push_str(&format!("{k},{r:.16e},{x:.16e}\n"));
        }
        out
    }
}

/// Iterates `A ← exp(φ)·A` with `∇φ = A^cf` until `‖A^cf‖_{H^s} ≤ tol`.
pub fn coulomb_fix(
    a0: &VectorField,
    algebra: &StructureTensor,
    options: &CoulombOptions,
) -> Result<GaugeTransformResult> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", options.tol)));
    }
    if a0.dim() != algebra.dim() {
        return Err(Error::InvalidInput(format!(
            "field has {} coefficients, algebra has dimension {}",
            a0.dim(),
            algebra.dim()
        )));
    }
    let size = a0.sobolev_norm(options.s);
    if size > 1.0 {
        log::warn!("‖A0‖_H^{} = {size:.3e} is outside the small-data regime; attempting anyway", options.s);
    }
    let rep = Representation::default_for(algebra)?;
    let mut u_total = GaugeField::identity(*a0.grid(), rep.clone());
    let mut a = a0.clone();
    let mut history = vec![project_cf(&a).sobolev_norm(options.s)];
    let mut x_norms = vec![0.0];
    while *history.last().expect("non-empty") > options.tol {
        if history.len() > options.max_iter {
            return Err(Error::NonConvergence {
                iterations: options.max_iter,
                last: *history.last().expect("non-empty"),
                history,
            });
        }
        let phi = hodge_potential(&project_cf(&a.spectral()))?;
        x_norms.push(x_norm(&phi, options.s));
        a = apply_exp_gauge(algebra, &phi, &a)?;
        u_total = GaugeField::exp(&phi, rep.clone())?.compose(&u_total)?;
        let r = project_cf(&a).sobolev_norm(options.s);
        if !r.is_finite() {
            return Err(Error::Numerical("gauge iteration produced non-finite values".into()));
        }
        history.push(r);
    }
    Ok(GaugeTransformResult {
        transformed: a,
        u_total,
        iterations: history.len() - 1,
        residual_history: history,
        x_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Dynamics;
    use crate::grid::sampling::{random_scalar, random_vector, with_sobolev_norm};
    use crate::projections::project_df;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn su2_field(g: &TorusGrid, band: usize, norm: f64, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        with_sobolev_norm(&random_vector(g, 3, band, &mut rng), 0.8, norm)
    }

    fn random_gauge(g: &TorusGrid, amp: f64, seed: u64) -> (ScalarField, GaugeField) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_scalar(g, 3, 1, &mut rng);
        let v = v.scale(amp / v.physical().unwrap().max_abs());
        let rep = Representation::default_for(&StructureTensor::su2()).unwrap();
        let u = GaugeField::exp(&v, rep).unwrap();
        (v, u)
    }

    #[test]
    fn identity_gauge_changes_nothing() {
        let g = TorusGrid::standard(16).unwrap();
        let a = su2_field(&g, 3, 0.1, 1);
        let rep = Representation::default_for(&StructureTensor::su2()).unwrap();
        let out = apply_gauge(&GaugeField::identity(g, rep), &a).unwrap();
        assert!(out.max_abs_diff(&a) < 1e-14);
        assert_eq!(out.repr(), a.repr());
    }

    #[test]
    fn abelian_gauge_subtracts_gradient() {
        let g = TorusGrid::standard(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = StructureTensor::abelian(2);
        let a = random_vector(&g, 2, 3, &mut rng);
        let phi = random_scalar(&g, 2, 1, &mut rng);
        let phi = phi.scale(0.05 / phi.physical().unwrap().max_abs());
        let expected = &a - &VectorField::gradient(&phi);
        let fast = apply_exp_gauge(&s, &phi, &a).unwrap();
        assert!(fast.max_abs_diff(&expected) < 1e-13);
        let u = GaugeField::exp(&phi, Representation::default_for(&s).unwrap()).unwrap();
        let slow = apply_gauge(&u, &a).unwrap();
        assert!(slow.max_abs_diff(&expected) < 1e-10, "{}", slow.max_abs_diff(&expected));
    }

    #[test]
    fn exp_series_agrees_with_matrix_derivatives() {
        let g = TorusGrid::standard(16).unwrap();
        let a = su2_field(&g, 2, 0.2, 3);
        let (v, u) = random_gauge(&g, 0.2, 4);
        let fast = apply_exp_gauge(&StructureTensor::su2(), &v, &a).unwrap();
        let slow = apply_gauge(&u, &a).unwrap();
        assert!(fast.max_abs_diff(&slow) < 1e-11, "{}", fast.max_abs_diff(&slow));
    }

    #[test]
    fn curvature_is_covariant() {
        let g = TorusGrid::standard(32).unwrap();
        let dynamics = Dynamics::new(StructureTensor::su2());
        for seed in 0..3 {
            let a = su2_field(&g, 2, 0.3, 10 + seed);
            let (_, u) = random_gauge(&g, 0.1, 20 + seed);
            let f = dynamics.curvature(&a).unwrap();
            let f2 = dynamics.curvature(&apply_gauge(&u, &a).unwrap()).unwrap();
            for (p, q) in f.parts().iter().zip(f2.parts()) {
                let rotated = u.adjoint(p).unwrap();
                let err = rotated.max_abs_diff(q) / p.max_abs();
                assert!(err < 1e-10, "{err}");
            }
        }
    }

    #[test]
    fn gauge_group_laws() {
        let g = TorusGrid::standard(8).unwrap();
        let (_, u) = random_gauge(&g, 0.5, 5);
        assert!(u.determinant_defect() < 1e-13);
        let id = u.compose(&u.inverse().unwrap()).unwrap();
        let rep = u.representation().clone();
        for idx in 0..g.points() {
            assert!(id.at(idx).matrix.max_abs_diff(&CMatrix::identity(rep.size())) < 1e-14);
        }
    }

    #[test]
    fn divergence_free_data_needs_no_iteration() {
        let g = TorusGrid::standard(16).unwrap();
        let a = project_df(&su2_field(&g, 3, 0.05, 6));
        let r = coulomb_fix(&a, &StructureTensor::su2(), &CoulombOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.transformed, a);
    }

    #[test]
    fn abelian_data_fix_in_one_step() {
        let g = TorusGrid::standard(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = with_sobolev_norm(&random_vector(&g, 1, 3, &mut rng), 0.8, 0.05);
        let r = coulomb_fix(&a, &StructureTensor::abelian(1), &CoulombOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.residual_history[1] <= 1e-12);
        assert!(r.transformed.max_abs_diff(&project_df(&a)) < 1e-13);
    }

    #[test]
    fn su2_fix_contracts_and_records_gauge() {
        let g = TorusGrid::standard(16).unwrap();
        let a = su2_field(&g, 3, 0.05, 8);
        let r = coulomb_fix(&a, &StructureTensor::su2(), &CoulombOptions::default()).unwrap();
        assert!(r.iterations <= 8);
        assert!(r.ratios().iter().all(|q| *q <= 0.5), "{:?}", r.residual_history);
        assert!(*r.residual_history.last().unwrap() <= 1e-10);
        assert!(r.transformed.divergence().l2_norm() <= 1e-9);
        let replay = apply_gauge(&r.u_total, &a).unwrap();
        let err = replay.max_abs_diff(&r.transformed) / a.physical().unwrap().max_abs();
        assert!(err < 1e-8, "{err}");
        let csv = r.to_csv();
        assert!(csv.starts_with("iter,residual,x_norm_of_V\n"));
        assert_eq!(csv.lines().count(), r.iterations + 2);
    }

    #[test]
    fn non_convergence_carries_history() {
        let g = TorusGrid::standard(16).unwrap();
        let a = su2_field(&g, 3, 0.05, 9);
        let opts = CoulombOptions { max_iter: 1, ..CoulombOptions::default() };
        match coulomb_fix(&a, &StructureTensor::su2(), &opts) {
            Err(Error::NonConvergence { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
