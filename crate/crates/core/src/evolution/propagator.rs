use crate::grid::{for_each_mode, Repr, TorusGrid, VectorField};

/// Exact flow of `a_tt = Δa` over a fixed step, per Fourier mode:
/// `(â, â_t) ↦ (cos(|ξ|t) â + sin(|ξ|t)/|ξ| â_t, −|ξ| sin(|ξ|t) â + cos(|ξ|t) â_t)`,
/// with the zero mode moving as `â + t â_t`.
#[derive(Debug, Clone)]
pub struct WavePropagator {
    grid: TorusGrid,
    dt: f64,
    cos: Vec<f64>,
    sinc: Vec<f64>,
    msin: Vec<f64>,
}

impl WavePropagator {
    pub fn new(grid: TorusGrid, dt: f64) -> Self {
        let npts = grid.points();
        let (mut cos, mut sinc, mut msin) = (vec![0.0; npts], vec![0.0; npts], vec![0.0; npts]);
        for_each_mode(&grid, |idx, k, _| {
            let w = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            if w == 0.0 {
                cos[idx] = 1.0;
                sinc[idx] = dt;
            } else {
                let (s, c) = (w * dt).sin_cos();
                cos[idx] = c;
                sinc[idx] = s / w;
                msin[idx] = -w * s;
            }
        });
        Self {
            grid,
            dt,
            cos,
            sinc,
            msin,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Propagates spectral fields in place.
    pub fn apply_in_place(&self, a: &mut VectorField, at: &mut VectorField) {
        debug_assert_eq!(a.repr(), Repr::Spectral);
        debug_assert_eq!(at.repr(), Repr::Spectral);
        for i in 0..3 {
            for alg in 0..a.dim() {
                let ab = a.comp_mut(i).block_mut(alg);
                let tb = at.comp_mut(i).block_mut(alg);
                for idx in 0..ab.len() {
                    let (x, v) = (ab[idx], tb[idx]);
                    ab[idx] = x * self.cos[idx] + v * self.sinc[idx];
                    tb[idx] = x * self.msin[idx] + v * self.cos[idx];
                }
            }
        }
    }

    /// Propagated copies, in the representation of the inputs.
    pub fn apply(&self, a: &VectorField, at: &VectorField) -> (VectorField, VectorField) {
        let (mut x, mut v) = (a.spectral(), at.spectral());
        self.apply_in_place(&mut x, &mut v);
        (x.into_repr_unchecked(a.repr()), v.into_repr_unchecked(at.repr()))
    }
}

/// One exact linear step of size `dt` for `(A^df, ∂_t A^df)`.
pub fn linear_propagator(adf: &VectorField, adf_t: &VectorField, dt: f64) -> (VectorField, VectorField) {
    WavePropagator::new(*adf.grid(), dt).apply(adf, adf_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::gradient_norm;
    use crate::grid::sampling::random_vector;
    use crate::projections::project_df;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn energy(a: &VectorField, at: &VectorField) -> f64 {
        gradient_norm(a).powi(2) + at.l2_norm().powi(2)
    }

    #[test]
    fn zero_step_is_identity() {
        let g = TorusGrid::standard(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = project_df(&random_vector(&g, 3, 3, &mut rng));
        let at = project_df(&random_vector(&g, 3, 3, &mut rng));
        let (x, v) = linear_propagator(&a, &at, 0.0);
        assert_eq!(x, a);
        assert_eq!(v, at);
    }

    #[test]
    fn single_mode_returns_after_one_period() {
        let g = TorusGrid::standard(16).unwrap();
        let mut a = VectorField::zeros(g, 1, Repr::Spectral);
        let mut at = VectorField::zeros(g, 1, Repr::Spectral);
        // ξ = (1, 2, 0), polarization e_3 (orthogonal), Hermitian pair
        let (p, m) = (g.mode_index([1, 2, 0]), g.mode_index([-1, -2, 0]));
        a.comp_mut(2).block_mut(0)[p] = Complex64::new(0.3, 0.1);
        a.comp_mut(2).block_mut(0)[m] = Complex64::new(0.3, -0.1);
        at.comp_mut(2).block_mut(0)[p] = Complex64::new(-0.2, 0.5);
        at.comp_mut(2).block_mut(0)[m] = Complex64::new(-0.2, -0.5);
        let period = 2.0 * PI / 5f64.sqrt();
        let (x, v) = linear_propagator(&a, &at, period);
        assert!((&x - &a).max_abs() < 1e-13);
        assert!((&v - &at).max_abs() < 1e-13);
    }

    #[test]
    fn energy_is_conserved_over_many_steps() {
        let g = TorusGrid::standard(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a = project_df(&random_vector(&g, 3, 7, &mut rng));
        let mut at = project_df(&random_vector(&g, 3, 7, &mut rng));
        let e0 = energy(&a, &at);
        let prop = WavePropagator::new(g, 1e-3);
        for _ in 0..1000 {
            prop.apply_in_place(&mut a, &mut at);
        }
        assert!((energy(&a, &at) - e0).abs() <= 1e-12 * e0);
    }

    #[test]
    fn zero_mode_drifts_linearly() {
        let g = TorusGrid::standard(8).unwrap();
        let a = VectorField::from_fn(g, 1, |_, i, o| o[0] = i as f64);
        let at = VectorField::from_fn(g, 1, |_, _, o| o[0] = 2.0);
        let (x, _) = linear_propagator(&a, &at, 0.25);
        let expected = VectorField::from_fn(g, 1, |_, i, o| o[0] = i as f64 + 0.5);
        assert!(x.max_abs_diff(&expected) < 1e-14);
    }
}
