//! Fields sampled on `T³ × [−T, T)` and their space-time norms.
//!
//! Coefficients use the unitary normalization
//! `û(ξ, τ) = L^{3/2}/n³ · (2T)^{1/2}/n_t · Σ e^{−i(ξ·x + τt)} u(x, t)`,
//! so `Σ |û|² = h³ dt Σ |u|²`, with `τ_m = 2π m / (2T)`. Values are complex;
//! several coefficients per point are combined in the Euclidean norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft, for_each_mode, Repr, ScalarField, TorusGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    None,
    SmoothBump,
}

/// Time localization applied before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kind: WindowKind,
    /// Fraction of the window tapered, split evenly between both ends.
    pub margin: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            kind: WindowKind::SmoothBump,
            margin: 0.15,
        }
    }
}

impl WindowSpec {
    pub fn none() -> Self {
        Self {
            kind: WindowKind::None,
            margin: 0.0,
        }
    }

    pub fn smooth_bump(margin: f64) -> Result<Self> {
        let w = Self {
            kind: WindowKind::SmoothBump,
            margin,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.4).contains(&self.margin) {
            return Err(Error::InvalidInput(format!("window margin {} outside [0, 0.4]", self.margin)));
        }
        Ok(())
    }

    /// Window value at `t ∈ [−T, T]`: 1 in the interior, a `C^∞` ramp of
    /// width `margin·T` at each end.
    pub fn weight(&self, t: f64, half_width: f64) -> f64 {
        if self.kind == WindowKind::None || self.margin == 0.0 {
            return 1.0;
        }
        let ramp = self.margin * half_width;
        let d = (half_width - t.abs()) / ramp;
        if d >= 1.0 {
            1.0
        } else if d <= 0.0 {
            0.0
        } else {
            let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
            f(d) / (f(d) + f(1.0 - d))
        }
    }
}

/// Samples `u(x, t_j)`, `t_j = −T + j·2T/n_t`, stored per coefficient and time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: TorusGrid,
    dim: usize,
    half_width: f64,
    n_t: usize,
    window: WindowSpec,
    repr: Repr,
    data: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: TorusGrid, dim: usize, half_width: f64, n_t: usize, window: WindowSpec) -> Result<Self> {
        if n_t < 2 || n_t % 2 != 0 {
            return Err(Error::InvalidInput(format!("n_t must be even and at least 2, got {n_t}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidInput(format!("window half-width must be positive, got {half_width}")));
        }
        window.validate()?;
        Ok(Self {
            grid,
            dim,
            half_width,
            n_t,
            window,
            repr: Repr::Physical,
            data: vec![ZERO; dim * n_t * grid.points()],
        })
    }

    /// Physical samples from a closure `f(t, x, out)` writing `dim` complex values.
    pub fn from_fn(
        grid: TorusGrid,
        dim: usize,
        half_width: f64,
        n_t: usize,
        window: WindowSpec,
        f: impl Fn(f64, [f64; 3], &mut [Complex64]),
    ) -> Result<Self> {
        let mut out = Self::zeros(grid, dim, half_width, n_t, window)?;
        let npts = grid.points();
        let mut buf = vec![ZERO; dim];
        for j in 0..n_t {
            let t = out.time(j);
            for idx in 0..npts {
                f(t, grid.coords(idx), &mut buf);
                for a in 0..dim {
                    let k = out.offset(a, j) + idx;
                    out.data[k] = buf[a];
                }
            }
        }
        Ok(out)
    }

    /// Stacks spatial snapshots, one per time sample.
    pub fn from_snapshots(snapshots: &[ScalarField], half_width: f64, window: WindowSpec) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidInput("no time samples".into()))?;
        let (grid, dim) = (*first.grid(), first.dim());
        let mut out = Self::zeros(grid, dim, half_width, snapshots.len(), window)?;
        let npts = grid.points();
        for (j, s) in snapshots.iter().enumerate() {
            if *s.grid() != grid || s.dim() != dim {
                return Err(Error::InvalidInput("snapshots do not share a layout".into()));
            }
            let p = s.clone().into_repr_unchecked(Repr::Physical);
            for a in 0..dim {
                let o = out.offset(a, j);
                out.data[o..o + npts].copy_from_slice(p.block(a));
            }
        }
        Ok(out)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn window(&self) -> WindowSpec {
        self.window
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

    pub fn dt(&self) -> f64 {
        2.0 * self.half_width / self.n_t as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dt()
    }

    /// Angular frequency of τ index `m` (Nyquist counted as positive).
    pub fn tau(&self, m: usize) -> f64 {
        let n = self.n_t as i64;
        let m = m as i64;
        let signed = if m <= n / 2 { m } else { m - n };
        signed as f64 * std::f64::consts::PI / self.half_width
    }

    /// Storage index of the `(a, j)` block.
    #[inline]
    pub fn offset(&self, a: usize, j: usize) -> usize {
        (a * self.n_t + j) * self.grid.points()
    }

    pub fn block(&self, a: usize, j: usize) -> &[Complex64] {
        let o = self.offset(a, j);
        &self.data[o..o + self.grid.points()]
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.n_t == other.n_t
            && self.half_width == other.half_width
            && self.repr == other.repr
    }

    /// Physical samples with the window multiplied in; the result carries no window.
    pub fn localized(&self) -> Self {
        let mut out = match self.repr {
            Repr::Physical => self.clone(),
            Repr::Spectral => return self.physical(),
        };
        if self.window.kind != WindowKind::None {
            let npts = self.grid.points();
            for a in 0..self.dim {
                for j in 0..self.n_t {
                    let w = self.window.weight(self.time(j), self.half_width);
                    let o = self.offset(a, j);
                    out.data[o..o + npts].iter_mut().for_each(|v| *v *= w);
                }
            }
        }
        out.window = WindowSpec::none();
        out
    }

    /// Unitary space-time transform of the localized samples.
    pub fn spectral(&self) -> Self {
        if self.repr == Repr::Spectral {
            return self.clone();
        }
        let mut out = self.localized();
        let npts = self.grid.points();
        let plan = fft::fft3(self.grid.n());
        for block in out.data.chunks_mut(npts) {
            plan.forward(block);
        }
        let t_plan = fft::plan_1d(self.n_t, false);
        let scale = self.grid.spectral_scale() * (2.0 * self.half_width).sqrt() / self.n_t as f64;
        // Phase e^{iτ_m T} from the time origin at −T.
        let phase: Vec<f64> = (0..self.n_t).map(|m| if m % 2 == 0 { scale } else { -scale }).collect();
        out.transform_time(&*t_plan, &phase);
        out.repr = Repr::Spectral;
        out
    }

    /// Samples from a spectrum (already localized, so no window).
    pub fn physical(&self) -> Self {
        if self.repr == Repr::Physical {
            return self.clone();
        }
        let mut out = self.clone();
        let t_plan = fft::plan_1d(self.n_t, true);
        let scale = 1.0 / (self.grid.spectral_scale() * (2.0 * self.half_width).sqrt() * self.grid.points() as f64);
        let phase: Vec<f64> = (0..self.n_t).map(|m| if m % 2 == 0 { scale } else { -scale }).collect();
        // Undo the phase before the inverse time transform.
        let npts = self.grid.points();
        for a in 0..self.dim {
            for m in 0..self.n_t {
                let o = out.offset(a, m);
                let f = phase[m];
                out.data[o..o + npts].iter_mut().for_each(|v| *v *= f);
            }
        }
        out.transform_time(&*t_plan, &vec![1.0; self.n_t]);
        let plan = fft::fft3(self.grid.n());
        for block in out.data.chunks_mut(npts) {
            plan.inverse(block);
        }
        out.repr = Repr::Physical;
        out.window = WindowSpec::none();
        out
    }

    /// 1D transforms along time at every spatial point, then scaling by `post[m]`.
    fn transform_time(&mut self, plan: &dyn rustfft::Fft<f64>, post: &[f64]) {
        let npts = self.grid.points();
        let n_t = self.n_t;
        let mut column = vec![ZERO; n_t];
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        for a in 0..self.dim {
            let base = a * n_t * npts;
            for idx in 0..npts {
                for (j, c) in column.iter_mut().enumerate() {
                    *c = self.data[base + j * npts + idx];
                }
                plan.process_with_scratch(&mut column, &mut scratch);
                for (j, c) in column.iter().enumerate() {
                    self.data[base + j * npts + idx] = c * post[j];
                }
            }
        }
    }

    /// Discrete `L²_{t,x}` norm (of the localized field).
    pub fn l2_norm(&self) -> f64 {
        match self.repr {
            Repr::Spectral => self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
            Repr::Physical => {
                let loc = self.localized();
                let w = self.grid.spacing().powi(3) * self.dt();
                (w * loc.data.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
            }
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Sum of `|û|²` weighted by `weight(|ξ|², τ)`, square-rooted.
    pub fn weighted_norm(&self, weight: impl Fn(f64, f64) -> f64) -> f64 {
        let spec = self.spectral();
        let npts = self.grid.points();
        let mut k2 = vec![0.0; npts];
        for_each_mode(&self.grid, |idx, k, _| k2[idx] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        let mut total = 0.0;
        for m in 0..self.n_t {
            let tau = self.tau(m);
            let w: Vec<f64> = k2.iter().map(|&q| weight(q, tau)).collect();
            for a in 0..self.dim {
                total += spec
                    .block(a, m)
                    .iter()
                    .zip(&w)
                    .map(|(v, w)| w * v.norm_sqr())
                    .sum::<f64>();
            }
        }
        total.sqrt()
    }

    /// Applies a Fourier multiplier `m(k, k_odd, τ, τ_odd)`; the result is spectral.
    pub fn apply_multiplier(&self, m: impl Fn([f64; 3], [f64; 3], f64, f64) -> Complex64) -> Self {
        let mut spec = self.spectral();
        let npts = self.grid.points();
        let mut modes = vec![([0.0; 3], [0.0; 3]); npts];
        for_each_mode(&self.grid, |idx, k, ko| modes[idx] = (k, ko));
        for mi in 0..self.n_t {
            let tau = self.tau(mi);
            let tau_odd = if mi == self.n_t / 2 { 0.0 } else { tau };
            for a in 0..self.dim {
                let o = spec.offset(a, mi);
                for (v, (k, ko)) in spec.data[o..o + npts].iter_mut().zip(&modes) {
                    *v *= m(*k, *ko, tau, tau_odd);
                }
            }
        }
        spec
    }

    /// `∂_t` of the localized field (spectral).
    pub fn time_derivative(&self) -> Self {
        self.apply_multiplier(|_, _, _, t| Complex64::new(0.0, t))
    }

    /// `∂_{x_axis}` (spectral).
    pub fn partial_derivative(&self, axis: usize) -> Self {
        self.apply_multiplier(|_, ko, _, _| Complex64::new(0.0, ko[axis]))
    }

    /// `⟨∇⟩^{−1}` (spectral).
    pub fn inverse_bracket(&self) -> Self {
        self.apply_multiplier(|k, _, _, _| Complex64::new((1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).powf(-0.5), 0.0))
    }

    /// Concatenates coefficient lists of fields sharing a layout.
    pub fn stack(parts: &[Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidInput("nothing to stack".into()))?;
        let mut out = first.clone();
        for p in &parts[1..] {
            if !first.same_layout(p) || p.window != first.window {
                return Err(Error::InvalidInput("stacked fields do not share a layout".into()));
            }
            out.data.extend_from_slice(&p.data);
            out.dim += p.dim;
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Pointwise product of localized fields, coefficient by coefficient (a
/// single-coefficient factor broadcasts). Physical, no window.
pub fn product(f: &SpaceTimeField, g: &SpaceTimeField) -> Result<SpaceTimeField> {
    if f.grid != g.grid || f.n_t != g.n_t || f.half_width != g.half_width {
        return Err(Error::InvalidInput("space-time fields do not share a grid".into()));
    }
    let (f, g) = (f.localized(), g.localized());
    let dim = match (f.dim, g.dim) {
        (a, b) if a == b => a,
        (1, b) => b,
        (a, 1) => a,
        (a, b) => return Err(Error::InvalidInput(format!("cannot multiply {a}- and {b}-coefficient fields"))),
    };
    let block = f.n_t * f.grid.points();
    let mut out = SpaceTimeField::zeros(f.grid, dim, f.half_width, f.n_t, WindowSpec::none())?;
    for a in 0..dim {
        let fa = &f.data[(a % f.dim) * block..(a % f.dim + 1) * block];
        let ga = &g.data[(a % g.dim) * block..(a % g.dim + 1) * block];
        for ((o, x), y) in out.data[a * block..(a + 1) * block].iter_mut().zip(fa).zip(ga) {
            *o = x * y;
        }
    }
    Ok(out)
}

fn bracket(x2: f64) -> f64 {
    (1.0 + x2).sqrt()
}

/// The unitary space-time transform.
pub fn st_fourier(u: &SpaceTimeField) -> SpaceTimeField {
    u.spectral()
}

/// `(Σ ⟨ξ⟩^{2s} ⟨|τ| − |ξ|⟩^{2b} |û|²)^{1/2}`.
pub fn xsb_wave_norm(u: &SpaceTimeField, s: f64, b: f64) -> f64 {
    u.weighted_norm(|k2, tau| {
        let d = tau.abs() - k2.sqrt();
        bracket(k2).powf(2.0 * s) * bracket(d * d).powf(2.0 * b)
    })
}

/// `(Σ ⟨ξ⟩^{2s} ⟨τ⟩^{2b} |û|²)^{1/2}`.
pub fn xsb_product_norm(u: &SpaceTimeField, s: f64, b: f64) -> f64 {
    u.weighted_norm(|k2, tau| bracket(k2).powf(2.0 * s) * bracket(tau * tau).powf(2.0 * b))
}

/// Nesting of a mixed Lebesgue norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nesting {
    /// `L^q_t L^r_x`: spatial norm inside.
    TThenX,
    /// `L^r_x L^q_t`: temporal norm inside.
    XThenT,
}

fn lebesgue(values: impl Iterator<Item = f64>, p: f64, weight: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        (weight * values.map(|v| v.powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// `L^q_t L^r_x` or `L^r_x L^q_t` of the localized field with quadrature
/// weights `h³` and `dt`; `f64::INFINITY` selects the maximum.
pub fn mixed_norm(u: &SpaceTimeField, order: Nesting, q: f64, r: f64) -> Result<f64> {
    for p in [q, r] {
        if !(p >= 1.0) {
            return Err(Error::InvalidInput(format!("Lebesgue exponent {p} must lie in [1, ∞]")));
        }
    }
    let loc = u.localized();
    let npts = u.grid.points();
    let n_t = u.n_t;
    let block = n_t * npts;
    let mut mag = vec![0.0; block];
    for a in 0..u.dim {
        for (m, v) in mag.iter_mut().zip(&loc.data[a * block..(a + 1) * block]) {
            *m += v.norm_sqr();
        }
    }
    mag.iter_mut().for_each(|m| *m = m.sqrt());
    let (h3, dt) = (u.grid.spacing().powi(3), u.dt());
    Ok(match order {
        Nesting::TThenX => {
            let inner: Vec<f64> = (0..n_t)
                .map(|j| lebesgue(mag[j * npts..(j + 1) * npts].iter().copied(), r, h3))
                .collect();
            lebesgue(inner.into_iter(), q, dt)
        }
        Nesting::XThenT => {
            let inner: Vec<f64> = (0..npts)
                .map(|idx| lebesgue((0..n_t).map(|j| mag[j * npts + idx]), q, dt))
                .collect();
            lebesgue(inner.into_iter(), r, h3)
        }
    })
}

/// `max ⟨ξ⟩ / (⟨τ⟩ ⟨|τ| − |ξ|⟩)` over the discrete frequencies of a layout.
pub fn crude_weight_constant(grid: &TorusGrid, n_t: usize, half_width: f64) -> f64 {
    let mut ks = Vec::with_capacity(grid.points());
    for_each_mode(grid, |_, k, _| ks.push((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()));
    let mut worst: f64 = 0.0;
    for m in 0..n_t {
        let signed = if m <= n_t / 2 { m as f64 } else { m as f64 - n_t as f64 };
        let tau = signed * std::f64::consts::PI / half_width;
        for &k in &ks {
            let d = tau.abs() - k;
            worst = worst.max(bracket(k * k) / (bracket(tau * tau) * bracket(d * d)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn random_field(grid: TorusGrid, dim: usize, n_t: usize, seed: u64, window: WindowSpec) -> SpaceTimeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpaceTimeField::zeros(grid, dim, 1.0, n_t, window).unwrap();
        for v in f.data_mut() {
            *v = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        f
    }

    fn grid8() -> TorusGrid {
        TorusGrid::standard(8).unwrap()
    }

    /// Direct evaluation of `û` at one frequency.
    fn direct_coefficient(u: &SpaceTimeField, a: usize, xi: [i64; 3], m: i64) -> Complex64 {
        let g = *u.grid();
        let tau = m as f64 * PI / u.half_width();
        let scale = g.spectral_scale() * (2.0 * u.half_width()).sqrt() / u.n_t() as f64;
        let loc = u.localized();
        let mut sum = ZERO;
        for j in 0..u.n_t() {
            let t = u.time(j);
            for idx in 0..g.points() {
                let x = g.coords(idx);
                let ph = -(xi[0] as f64 * x[0] + xi[1] as f64 * x[1] + xi[2] as f64 * x[2] + tau * t);
                sum += loc.block(a, j)[idx] * Complex64::from_polar(1.0, ph);
            }
        }
        sum * scale
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let f = SpaceTimeField::zeros(grid8(), 1, 1.0, 8, WindowSpec::default()).unwrap();
        assert!(st_fourier(&f).data().iter().all(|v| *v == ZERO));
        assert!(SpaceTimeField::zeros(grid8(), 1, 1.0, 7, WindowSpec::none()).is_err());
        assert!(WindowSpec::smooth_bump(0.5).is_err());
    }

    #[test]
    fn separable_mode_is_a_single_coefficient() {
        let g = grid8();
        let (xi, m) = ([1i64, -2, 0], 3i64);
        let tau = m as f64 * PI;
        let f = SpaceTimeField::from_fn(g, 1, 1.0, 8, WindowSpec::none(), |t, x, o| {
            o[0] = Complex64::from_polar(0.7, x[0] - 2.0 * x[1] + tau * t);
        })
        .unwrap();
        let spec = st_fourier(&f);
        let peak = spec.block(0, 3)[g.mode_index(xi)];
        let expected = 0.7 * (g.volume() * 2.0).sqrt();
        assert!((peak.norm() - expected).abs() < 1e-12);
        let rest: f64 = spec.data().iter().map(|v| v.norm_sqr()).sum::<f64>() - peak.norm_sqr();
        assert!(rest.abs() < 1e-20);
    }

    #[test]
    fn transform_matches_direct_sum_and_inverts() {
        let g = grid8();
        let f = random_field(g, 2, 6, 1, WindowSpec::default());
        let spec = f.spectral();
        for (a, xi, m) in [(0, [0, 0, 0], 0), (1, [1, 3, -2], 2), (0, [4, -1, 2], -3i64)] {
            let idx = g.mode_index(xi);
            let mi = m.rem_euclid(6) as usize;
            let d = direct_coefficient(&f, a, xi, m);
            assert!((spec.block(a, mi)[idx] - d).norm() < 1e-12, "{xi:?} {m}");
        }
        let back = spec.physical();
        let loc = f.localized();
        let err = back.data().iter().zip(loc.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn parseval() {
        let f = random_field(grid8(), 3, 16, 2, WindowSpec::default());
        let (p, s) = (f.l2_norm(), f.spectral().l2_norm());
        assert!((p - s).abs() <= 1e-12 * p);
    }

    #[test]
    fn single_mode_weights() {
        let g = grid8();
        let m = 2i64;
        let tau = m as f64 * PI;
        let f = SpaceTimeField::from_fn(g, 1, 1.0, 8, WindowSpec::none(), |t, x, o| {
            o[0] = Complex64::from_polar(1.0, 2.0 * x[0] + x[1] + tau * t);
        })
        .unwrap();
        let a = f.l2_norm();
        let k2: f64 = 5.0;
        let off = tau - k2.sqrt();
        let (s, b) = (0.8, 0.76);
        let wave = a * (1.0 + k2).powf(s / 2.0) * (1.0 + off * off).powf(b / 2.0);
        assert!((xsb_wave_norm(&f, s, b) - wave).abs() < 1e-12 * wave);
        let prod = a * (1.0 + k2).powf(s / 2.0) * (1.0 + tau * tau).powf(b / 2.0);
        assert!((xsb_product_norm(&f, s, b) - prod).abs() < 1e-12 * prod);
        assert!((xsb_product_norm(&f, 0.0, 0.0) - a).abs() < 1e-12 * a);
    }

    #[test]
    fn free_mode_on_the_cone() {
        // |ξ| = 3 = τ with T = 1 needs τ = 3: choose half-width π/3·... use T = π so τ_m = m.
        let g = grid8();
        let f = SpaceTimeField::from_fn(g, 1, PI, 8, WindowSpec::none(), |t, x, o| {
            o[0] = Complex64::from_polar(0.5, 3.0 * x[2] + 3.0 * t);
        })
        .unwrap();
        let expected = f.l2_norm() * 10f64.powf(0.4);
        assert!((xsb_wave_norm(&f, 0.8, 0.76) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn time_independent_field_sits_at_zero_frequency() {
        let g = grid8();
        let f = SpaceTimeField::from_fn(g, 1, 1.0, 8, WindowSpec::none(), |_, x, o| {
            o[0] = Complex64::new(x[0].cos() + 0.5 * (2.0 * x[1]).sin(), 0.0);
        })
        .unwrap();
        let snap = ScalarField::from_fn(g, 1, |x, o| o[0] = x[0].cos() + 0.5 * (2.0 * x[1]).sin());
        let hs = snap.sobolev_norm(0.8) * 2f64.sqrt();
        assert!((xsb_product_norm(&f, 0.8, 3.0) - hs).abs() < 1e-12 * hs);
    }

    #[test]
    fn weighted_norms_match_direct_sums() {
        let g = grid8();
        let f = random_field(g, 2, 8, 3, WindowSpec::default());
        let spec = f.spectral();
        let k = g.wavenumbers();
        let (mut wave, mut prod) = (0.0, 0.0);
        for a in 0..2 {
            for m in 0..8 {
                let tau = f.tau(m);
                for idx in 0..g.points() {
                    let (i1, i2, i3) = g.unflat(idx);
                    let xi = (k[i1] * k[i1] + k[i2] * k[i2] + k[i3] * k[i3]).sqrt();
                    let v = spec.block(a, m)[idx].norm_sqr();
                    wave += (1.0 + xi * xi).powf(0.8) * (1.0 + (tau.abs() - xi).powi(2)).powf(-0.49) * v;
                    prod += (1.0 + xi * xi).powf(-0.2) * (1.0 + tau * tau).powf(0.51) * v;
                }
            }
        }
        assert!((xsb_wave_norm(&f, 0.8, -0.49) - wave.sqrt()).abs() <= 1e-13 * wave.sqrt());
        assert!((xsb_product_norm(&f, -0.2, 0.51) - prod.sqrt()).abs() <= 1e-13 * prod.sqrt());
    }

    #[test]
    fn norms_are_monotone() {
        let f = random_field(grid8(), 1, 8, 4, WindowSpec::default());
        assert!(xsb_wave_norm(&f, 0.8, 0.76) > xsb_wave_norm(&f, 0.7, 0.76));
        assert!(xsb_wave_norm(&f, 0.8, 0.76) > xsb_wave_norm(&f, 0.8, 0.5));
        assert!(xsb_product_norm(&f, 0.8, 0.51) > xsb_product_norm(&f, 0.8, 0.4));
    }

    #[test]
    fn mixed_norm_examples() {
        let g = grid8();
        let f = random_field(g, 2, 8, 5, WindowSpec::default());
        let l2 = f.l2_norm();
        for order in [Nesting::TThenX, Nesting::XThenT] {
            assert!((mixed_norm(&f, order, 2.0, 2.0).unwrap() - l2).abs() < 1e-13 * l2);
        }
        let c = SpaceTimeField::from_fn(g, 1, 1.0, 8, WindowSpec::none(), |_, _, o| o[0] = Complex64::new(-1.5, 0.0)).unwrap();
        let expected = 1.5 * g.volume().sqrt();
        assert!((mixed_norm(&c, Nesting::TThenX, f64::INFINITY, 2.0).unwrap() - expected).abs() < 1e-12 * expected);
        assert!(mixed_norm(&f, Nesting::TThenX, 0.5, 2.0).is_err());

        // L⁴_x L²_t by explicit loops.
        let loc = f.localized();
        let (h3, dt) = (g.spacing().powi(3), f.dt());
        let mut outer = 0.0;
        for idx in 0..g.points() {
            let mut inner = 0.0;
            for j in 0..8 {
                inner += dt * (0..2).map(|a| loc.block(a, j)[idx].norm_sqr()).sum::<f64>();
            }
            outer += h3 * inner.sqrt().powi(4);
        }
        let oracle = outer.powf(0.25);
        let got = mixed_norm(&f, Nesting::XThenT, 2.0, 4.0).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn derivatives_and_products() {
        let g = grid8();
        let f = SpaceTimeField::from_fn(g, 1, PI, 8, WindowSpec::none(), |t, x, o| {
            o[0] = Complex64::new((x[0] + 2.0 * t).sin(), 0.0);
        })
        .unwrap();
        let dt = f.time_derivative().physical();
        let dx = f.partial_derivative(0).physical();
        let expected_t = SpaceTimeField::from_fn(g, 1, PI, 8, WindowSpec::none(), |t, x, o| {
            o[0] = Complex64::new(2.0 * (x[0] + 2.0 * t).cos(), 0.0);
        })
        .unwrap();
        let err = dt.data().iter().zip(expected_t.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        let err = dx.data().iter().zip(expected_t.data()).map(|(a, b)| (2.0 * a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        let sq = product(&f, &f).unwrap();
        let v = sq.block(0, 3)[17];
        let w = f.block(0, 3)[17];
        assert!((v - w * w).norm() < 1e-15);
    }

    #[test]
    fn crude_weight_bound() {
        for n in [8, 16] {
            let g = TorusGrid::standard(n).unwrap();
            assert!(crude_weight_constant(&g, 2 * n, 1.0) <= 2.0);
        }
    }

    #[test]
    fn window_shape() {
        let w = WindowSpec::default();
        assert_eq!(w.weight(0.0, 1.0), 1.0);
        assert_eq!(w.weight(0.85, 1.0), 1.0);
        assert_eq!(w.weight(-1.0, 1.0), 0.0);
        let mid = w.weight(0.925, 1.0);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(w.weight(0.9, 1.0) > w.weight(0.95, 1.0));
    }
}
