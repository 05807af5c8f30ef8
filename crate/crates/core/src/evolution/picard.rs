//! Picard iteration on the integral form of the split system.
//!
//! In the interaction picture `v(t) = E(−t)(A^df, ∂_t A^df)` the equations read
//! `v' = E(−t)(0, −S(A))`, `(A^cf)' = W(A)`, so each iterate is the data plus
//! time integrals of the sources evaluated on the previous iterate. Integrals
//! are cumulative fourth-order quadratures on a uniform node grid. All sources
//! live on the dealiased band, so only band coefficients are stored.

use num_complex::Complex64;

use super::{initial_state, EvolveConfig, State, WavePropagator};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::grid::{for_each_mode, Dealias, Repr, ScalarField, TorusGrid, VectorField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Iteration controls.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    /// Target spacing of the time nodes.
    pub node_spacing: f64,
    /// Stop once the successive difference drops below `tol` times the first one.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            node_spacing: 0.01,
            tol: 1e-12,
            max_iter: 20,
        }
    }
}

/// Running integrals `F(t_m) = ∫_0^{t_m} f` of equally spaced samples
/// (at least four), exact for cubic polynomials.
pub fn cumulative_quadrature(values: &[f64], step: f64) -> Result<Vec<f64>> {
    if values.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "cumulative quadrature needs at least 4 samples, got {}",
            values.len()
        )));
    }
    let mut out = vec![0.0; values.len()];
    for (m, w) in interval_weights(values.len() - 1).into_iter().enumerate() {
        out[m + 1] = out[m] + step * w.iter().map(|&(j, c)| c * values[j]).sum::<f64>();
    }
    Ok(out)
}

/// Weights (divided by the step) integrating each interval `[t_m, t_{m+1}]`
/// with the cubic through four neighbouring nodes.
fn interval_weights(intervals: usize) -> Vec<Vec<(usize, f64)>> {
    let m_last = intervals;
    (0..intervals)
        .map(|m| {
            let raw: [(usize, f64); 4] = if m == 0 {
                [(0, 9.0), (1, 19.0), (2, -5.0), (3, 1.0)]
            } else if m + 1 == m_last {
                [(m_last - 3, 1.0), (m_last - 2, -5.0), (m_last - 1, 19.0), (m_last, 9.0)]
            } else {
                [(m - 1, -1.0), (m, 13.0), (m + 1, 13.0), (m + 2, -1.0)]
            };
            raw.iter().map(|&(j, c)| (j, c / 24.0)).collect()
        })
        .collect()
}

/// Retained modes of the dealiasing band.
#[derive(Debug, Clone)]
struct Band {
    idx: Vec<usize>,
    omega: Vec<f64>,
    k2: Vec<f64>,
}

impl Band {
    fn new(grid: &TorusGrid) -> Self {
        let mask = grid.band_mask(Dealias::TwoThirds);
        let (mut idx, mut omega, mut k2) = (Vec::new(), Vec::new(), Vec::new());
        for_each_mode(grid, |i, k, _| {
            let (i1, i2, i3) = grid.unflat(i);
            if mask[i1] && mask[i2] && mask[i3] {
                let q = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                idx.push(i);
                omega.push(q.sqrt());
                k2.push(q);
            }
        });
        Self { idx, omega, k2 }
    }

    fn len(&self) -> usize {
        self.idx.len()
    }

    /// Band coefficients, ordered by component, algebra index, mode.
    fn compress(&self, v: &VectorField) -> Vec<Complex64> {
        let v = v.spectral();
        let mut out = Vec::with_capacity(3 * v.dim() * self.len());
        for i in 0..3 {
            for a in 0..v.dim() {
                let b = v.comp(i).block(a);
                out.extend(self.idx.iter().map(|&j| b[j]));
            }
        }
        out
    }

    fn expand(&self, grid: TorusGrid, dim: usize, data: &[Complex64]) -> VectorField {
        let nb = self.len();
        let comps = [0, 1, 2].map(|i| {
            let mut f = ScalarField::zeros(grid, dim, Repr::Spectral);
            for a in 0..dim {
                let src = &data[(i * dim + a) * nb..(i * dim + a + 1) * nb];
                let dst = f.block_mut(a);
                for (&j, v) in self.idx.iter().zip(src) {
                    dst[j] = *v;
                }
            }
            f
        });
        VectorField::new(comps).expect("components share layout")
    }

    /// Applies the free wave flow over `tau` to compressed pairs in place.
    fn propagate(&self, tau: f64, a: &mut [Complex64], at: &mut [Complex64]) {
        let nb = self.len();
        let table: Vec<(f64, f64, f64)> = self
            .omega
            .iter()
            .map(|&w| {
                if w == 0.0 {
                    (1.0, tau, 0.0)
                } else {
                    let (s, c) = (w * tau).sin_cos();
                    (c, s / w, -w * s)
                }
            })
            .collect();
        for (ab, tb) in a.chunks_mut(nb).zip(at.chunks_mut(nb)) {
            for (j, &(c, sinc, msin)) in table.iter().enumerate() {
                let (x, v) = (ab[j], tb[j]);
                ab[j] = x * c + v * sinc;
                tb[j] = x * msin + v * c;
            }
        }
    }

    fn weighted_norm(&self, data: &[Complex64], s: f64) -> f64 {
        let nb = self.len();
        let w: Vec<f64> = self.k2.iter().map(|q| (1.0 + q).powf(s)).collect();
        data.chunks(nb)
            .map(|b| b.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Converged Picard iterate on the node grid.
#[derive(Debug, Clone)]
pub struct PicardSolution {
    grid: TorusGrid,
    dim: usize,
    times: Vec<f64>,
    band: Band,
    adf0: VectorField,
    adf_t0: VectorField,
    acf0: VectorField,
    /// Duhamel increments of `v`, split into the `a` and `a_t` halves.
    duhamel: Vec<(Vec<Complex64>, Vec<Complex64>)>,
    cf_increment: Vec<Vec<Complex64>>,
    cf_velocity: Vec<Vec<Complex64>>,
    /// `δ_k`, the `X`-proxy size of `A^{(k)} − A^{(k−1)}`.
    pub differences: Vec<f64>,
}

impl PicardSolution {
    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of iterations performed.
    pub fn iterations(&self) -> usize {
        self.differences.len()
    }

    /// `δ_{k+1} / δ_k` for consecutive iterations.
    pub fn ratios(&self) -> Vec<f64> {
        self.differences.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// The iterate at node `m` as an evolution state (spectral).
    pub fn state_at(&self, m: usize) -> State {
        let t = self.times[m];
        let (da, dat) = &self.duhamel[m];
        let (mut a, mut at) = (da.clone(), dat.clone());
        self.band.propagate(t, &mut a, &mut at);
        let prop = WavePropagator::new(self.grid, t);
        let (mut adf, mut adf_t) = prop.apply(&self.adf0, &self.adf_t0);
        adf.axpy(1.0, &self.band.expand(self.grid, self.dim, &a));
        adf_t.axpy(1.0, &self.band.expand(self.grid, self.dim, &at));
        let mut acf = self.acf0.clone();
        acf.axpy(1.0, &self.band.expand(self.grid, self.dim, &self.cf_increment[m]));
        State::new(t, adf, adf_t, acf)
    }

    /// `∂_t A^cf` of the previous iterate at node `m`.
    pub fn cf_velocity_at(&self, m: usize) -> VectorField {
        self.band.expand(self.grid, self.dim, &self.cf_velocity[m])
    }
}

/// Solves the integral equations on `[0, t_end]` by Picard iteration
/// starting from `A^{(0)} = 0`, so the first iterate is the free evolution.
pub fn picard_solve(
    config: &EvolveConfig,
    dynamics: &Dynamics,
    a0: &VectorField,
    adf_t0: Option<&VectorField>,
    options: &PicardOptions,
) -> Result<PicardSolution> {
    if !(options.node_spacing > 0.0) || !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(Error::Configuration("invalid Picard options".into()));
    }
    let (st0, _) = initial_state(dynamics, a0, adf_t0)?;
    let grid = *st0.grid();
    let dim = st0.dim();
    let s = config.s;
    let intervals = ((config.t_end / options.node_spacing - 1e-9).ceil() as usize).max(3);
    let step = config.t_end / intervals as f64;
    let times: Vec<f64> = (0..=intervals).map(|m| m as f64 * step).collect();
    let band = Band::new(&grid);
    let width = 3 * dim * band.len();
    let zeros = vec![ZERO; width];

    let mut sol = PicardSolution {
        grid,
        dim,
        times,
        band,
        adf0: st0.adf.spectral(),
        adf_t0: st0.adf_t.spectral(),
        acf0: st0.acf.spectral(),
        duhamel: vec![(zeros.clone(), zeros.clone()); intervals + 1],
        cf_increment: vec![zeros.clone(); intervals + 1],
        cf_velocity: vec![zeros.clone(); intervals + 1],
        differences: Vec::new(),
    };

    // First iterate: the free flow of the data.
    let first = sol
        .times
        .iter()
        .map(|&t| {
            let (a, at) = WavePropagator::new(grid, t).apply(&sol.adf0, &sol.adf_t0);
            a.sobolev_norm(s) + at.sobolev_norm(s - 1.0) + sol.acf0.sobolev_norm(s + 0.25)
        })
        .fold(0.0, f64::max);
    sol.differences.push(first);
    if first == 0.0 {
        return Ok(sol);
    }

    let weights = interval_weights(intervals);
    let mut growth = 0;
    for _ in 1..options.max_iter {
        // Sources on the current iterate.
        let mut ga = Vec::with_capacity(intervals + 1);
        let mut gat = Vec::with_capacity(intervals + 1);
        for m in 0..=intervals {
            let st = sol.state_at(m);
            let guess = sol.band.expand(grid, dim, &sol.cf_velocity[m]);
            let (src, w) = dynamics.sources(&st.full_field(), &st.adf_t, Some(&guess))?;
            let mut a = zeros.clone();
            let mut at = sol.band.compress(&src);
            at.iter_mut().for_each(|v| *v = -*v);
            sol.band.propagate(-sol.times[m], &mut a, &mut at);
            ga.push(a);
            gat.push(at);
            sol.cf_velocity[m] = sol.band.compress(&w);
        }

        let mut delta: f64 = 0.0;
        let (mut da, mut dat, mut dc) = (zeros.clone(), zeros.clone(), zeros.clone());
        for m in 0..=intervals {
            if m > 0 {
                for &(j, c) in &weights[m - 1] {
                    let h = c * step;
                    for (((x, y), z), ((u, v), w)) in da
                        .iter_mut()
                        .zip(dat.iter_mut())
                        .zip(dc.iter_mut())
                        .zip(ga[j].iter().zip(&gat[j]).zip(&sol.cf_velocity[j]))
                    {
                        *x += u * h;
                        *y += v * h;
                        *z += w * h;
                    }
                }
            }
            let (old_a, old_at) = &sol.duhamel[m];
            let mut ea: Vec<Complex64> = da.iter().zip(old_a).map(|(x, y)| x - y).collect();
            let mut eat: Vec<Complex64> = dat.iter().zip(old_at).map(|(x, y)| x - y).collect();
            sol.band.propagate(sol.times[m], &mut ea, &mut eat);
            let ec: Vec<Complex64> = dc.iter().zip(&sol.cf_increment[m]).map(|(x, y)| x - y).collect();
            let x = sol.band.weighted_norm(&ea, s)
                + sol.band.weighted_norm(&eat, s - 1.0)
                + sol.band.weighted_norm(&ec, s + 0.25);
            delta = delta.max(x);
            sol.duhamel[m] = (da.clone(), dat.clone());
            sol.cf_increment[m] = dc.clone();
        }
        if !delta.is_finite() {
            return Err(Error::NonContraction {
                history: sol.differences.clone(),
            });
        }
        let last = *sol.differences.last().expect("non-empty");
        sol.differences.push(delta);
        log::debug!("picard iteration {}: δ = {delta:.3e}", sol.differences.len());
        if delta == 0.0 || delta <= options.tol * first {
            return Ok(sol);
        }
        if delta >= last {
            growth += 1;
            if growth >= 3 {
                return Err(Error::NonContraction {
                    history: sol.differences.clone(),
                });
            }
        } else {
            growth = 0;
        }
    }
    Err(Error::NonConvergence {
        iterations: options.max_iter,
        last: *sol.differences.last().expect("non-empty"),
        history: sol.differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_is_exact_for_cubics() {
        let step = 0.1;
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - 0.5 * t.powi(3);
        let anti = |t: f64| t - t * t + t.powi(3) - 0.125 * t.powi(4);
        let vals: Vec<f64> = (0..9).map(|m| f(m as f64 * step)).collect();
        let got = cumulative_quadrature(&vals, step).unwrap();
        for (m, g) in got.iter().enumerate() {
            assert!((g - anti(m as f64 * step)).abs() < 1e-14, "{m}");
        }
    }

    #[test]
    fn quadrature_is_fourth_order() {
        let err = |k: usize| {
            let step = 1.0 / k as f64;
            let vals: Vec<f64> = (0..=k).map(|m| (5.0 * m as f64 * step).cos()).collect();
            let got = cumulative_quadrature(&vals, step).unwrap();
            (got[k] - 5f64.sin() / 5.0).abs()
        };
        let ratio = err(40) / err(80);
        assert!((12.0..20.0).contains(&ratio), "{ratio}");
        assert!(cumulative_quadrature(&[1.0, 2.0, 3.0], 0.1).is_err());
    }

    #[test]
    fn band_round_trip_and_propagation() {
        use crate::grid::sampling::random_vector;
        use crate::projections::project_df;
        use rand::SeedableRng;
        let g = TorusGrid::standard(16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let a = project_df(&random_vector(&g, 2, 4, &mut rng));
        let at = project_df(&random_vector(&g, 2, 4, &mut rng));
        let band = Band::new(&g);
        let (mut ca, mut cat) = (band.compress(&a), band.compress(&at));
        assert_eq!(band.expand(g, 2, &ca), a);
        band.propagate(0.37, &mut ca, &mut cat);
        let (ea, eat) = WavePropagator::new(g, 0.37).apply(&a, &at);
        assert!(band.expand(g, 2, &ca).max_abs_diff(&ea) < 1e-14);
        assert!(band.expand(g, 2, &cat).max_abs_diff(&eat) < 1e-14);
        assert!((band.weighted_norm(&band.compress(&a), 0.8) - a.sobolev_norm(0.8)).abs() < 1e-13);
    }
}
