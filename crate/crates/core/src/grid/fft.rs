//! 3D complex FFTs on `n³` blocks plus paired real transforms.
//!
//! Normalization: spectral coefficients are `f̂(ξ) = L^{3/2}/N · DFT(f)(ξ)`,
//! i.e. the coefficients of `f` against the orthonormal Fourier basis
//! `e^{iξ·x} / L^{3/2}` of `L²(T³)`. Hence `Σ|f̂|² = h³ Σ|f|²`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::TorusGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) struct Fft3 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();
static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

/// 1D plans of any length, shared across threads.
pub(crate) fn plan_1d(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("fft planner poisoned");
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

pub(crate) fn fft3(n: usize) -> Arc<Fft3> {
    let mut plans = PLANS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("fft plan cache poisoned");
    plans
        .entry(n)
        .or_insert_with(|| {
            Arc::new(Fft3 {
                n,
                fwd: plan_1d(n, false),
                inv: plan_1d(n, true),
            })
        })
        .clone()
}

impl Fft3 {
    /// Unnormalized forward DFT of one `n³` block, in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &*self.fwd);
    }

    /// Unnormalized inverse DFT of one `n³` block, in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, &*self.inv);
    }

    fn transform(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        let n2 = n * n;
        debug_assert_eq!(buf.len(), n2 * n);
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        let mut tmp = vec![ZERO; n2 * n];

        // x3 is contiguous
        fft.process_with_scratch(buf, &mut scratch);

        // x2: transpose each x1-plane
        for p in 0..n {
            transpose::transpose(&buf[p * n2..(p + 1) * n2], &mut tmp[p * n2..(p + 1) * n2], n, n);
        }
        fft.process_with_scratch(&mut tmp, &mut scratch);
        for p in 0..n {
            transpose::transpose(&tmp[p * n2..(p + 1) * n2], &mut buf[p * n2..(p + 1) * n2], n, n);
        }

        // x1: treat the block as n rows of n² entries
        transpose::transpose(buf, &mut tmp, n2, n);
        fft.process_with_scratch(&mut tmp, &mut scratch);
        transpose::transpose(&tmp, buf, n, n2);
    }
}

/// Index of the mode `−ξ` for every flat index.
pub(crate) fn negated_index(n: usize) -> Vec<usize> {
    let neg = |i: usize| (n - i) % n;
    let mut out = Vec::with_capacity(n * n * n);
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                out.push((neg(i1) * n + neg(i2)) * n + neg(i3));
            }
        }
    }
    out
}

/// Forward transform of a single block with coefficient normalization.
pub(crate) fn forward_block(grid: &TorusGrid, buf: &mut [Complex64]) {
    fft3(grid.n()).forward(buf);
    let c = grid.spectral_scale();
    buf.iter_mut().for_each(|v| *v *= c);
}

/// Inverse transform of a single block with coefficient normalization.
pub(crate) fn inverse_block(grid: &TorusGrid, buf: &mut [Complex64]) {
    fft3(grid.n()).inverse(buf);
    let c = 1.0 / (grid.spectral_scale() * grid.points() as f64);
    buf.iter_mut().for_each(|v| *v *= c);
}

/// Physical values of Hermitian spectra, two per complex FFT.
pub(crate) fn inverse_real_batch(grid: &TorusGrid, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let plan = fft3(grid.n());
    let npts = grid.points();
    let c = 1.0 / (grid.spectral_scale() * npts as f64);
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| Complex64::new(x.re - y.im, x.im + y.re))
                .collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        plan.inverse(&mut buf);
        out.push(buf.iter().map(|v| v.re * c).collect());
        if pair.len() == 2 {
            out.push(buf.iter().map(|v| v.im * c).collect());
        }
    }
    out
}

/// Spectra of real fields, two per complex FFT.
pub(crate) fn forward_real_batch(grid: &TorusGrid, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let plan = fft3(grid.n());
    let c = grid.spectral_scale();
    let neg = negated_index(grid.n());
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        match pair {
            [a, b] => {
                let mut buf: Vec<Complex64> =
                    a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect();
                plan.forward(&mut buf);
                let mut sa = vec![ZERO; buf.len()];
                let mut sb = vec![ZERO; buf.len()];
                for (k, &mk) in neg.iter().enumerate() {
                    let z = buf[k];
                    let zc = buf[mk].conj();
                    sa[k] = (z + zc) * (0.5 * c);
                    // (z − zc) / 2i
                    let d = z - zc;
                    sb[k] = Complex64::new(d.im, -d.re) * (0.5 * c);
                }
                out.push(sa);
                out.push(sb);
            }
            [a] => {
                let mut buf: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                plan.forward(&mut buf);
                buf.iter_mut().for_each(|v| *v *= c);
                out.push(buf);
            }
            _ => unreachable!(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fft3_matches_direct_dft() {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<Complex64> = (0..n * n * n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut fast = data.clone();
        fft3(n).forward(&mut fast);
        let w = |j: usize, k: usize| {
            let ph = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
            Complex64::new(ph.cos(), ph.sin())
        };
        for k1 in [0, 1, 5] {
            for k2 in [0, 3, 7] {
                for k3 in [0, 2, 4] {
                    let mut sum = ZERO;
                    for j1 in 0..n {
                        for j2 in 0..n {
                            for j3 in 0..n {
                                sum += data[(j1 * n + j2) * n + j3] * w(j1, k1) * w(j2, k2) * w(j3, k3);
                            }
                        }
                    }
                    assert!((sum - fast[(k1 * n + k2) * n + k3]).norm() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn paired_real_transforms_roundtrip() {
        let grid = TorusGrid::new(8, 2.0 * std::f64::consts::PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fields: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..grid.points()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = fields.iter().map(|f| f.as_slice()).collect();
        let spectra = forward_real_batch(&grid, &refs);
        for (f, s) in fields.iter().zip(&spectra) {
            let mut single: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            forward_block(&grid, &mut single);
            let err = single.iter().zip(s).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
        let srefs: Vec<&[Complex64]> = spectra.iter().map(|s| s.as_slice()).collect();
        let back = inverse_real_batch(&grid, &srefs);
        for (f, b) in fields.iter().zip(&back) {
            let err = f.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
    }
}
