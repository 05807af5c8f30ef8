use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft, TorusGrid};
use crate::spacetime::{SpaceTimeField, WindowSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    FreeWave,
    ConeConcentrated,
    RandomBand,
    PlaneWavePair,
    CurlfreeTimeband,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 5] = [
        Self::FreeWave,
        Self::ConeConcentrated,
        Self::RandomBand,
        Self::PlaneWavePair,
        Self::CurlfreeTimeband,
    ];
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FreeWave => "free-wave",
            Self::ConeConcentrated => "cone-concentrated",
            Self::RandomBand => "random-band",
            Self::PlaneWavePair => "plane-wave-pair",
            Self::CurlfreeTimeband => "curlfree-timeband",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown ensemble '{s}'")))
    }
}

/// Frequency annulus `lo ≤ |m| ≤ hi` in units of the lattice wavenumber.
/// Without an explicit band the annulus `[1, n/4]` of each grid is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("bad frequency band [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn default_for(n: usize) -> Self {
        Self { lo: 1.0, hi: n as f64 / 4.0 }
    }

    fn contains(&self, m: [i64; 3]) -> bool {
        let r = radius(m);
        r >= self.lo - 1e-12 && r <= self.hi + 1e-12
    }
}

fn radius(m: [i64; 3]) -> f64 {
    ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub count: usize,
    pub band: Option<Band>,
    /// Cone width `w` of `||τ| − |ξ|| ≤ w|ξ|`.
    pub cone_width: f64,
    /// Lie-algebra coefficients per field.
    pub dim: usize,
    pub half_width: f64,
    /// Time samples per spatial grid size `n`.
    pub time_ratio: usize,
    pub window: WindowSpec,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            kind: EnsembleKind::FreeWave,
            count: 50,
            band: None,
            cone_width: 0.25,
            dim: 1,
            half_width: 1.0,
            time_ratio: 2,
            window: WindowSpec::default(),
        }
    }
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, count: usize) -> Self {
        Self { kind, count, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Precondition("ensemble count must be at least 1".into()));
        }
        if !(self.cone_width > 0.0 && self.cone_width <= 1.0) {
            return Err(Error::InvalidInput(format!("cone width {} must lie in (0, 1]", self.cone_width)));
        }
        if self.dim == 0 || self.time_ratio == 0 {
            return Err(Error::InvalidInput("dim and time ratio must be positive".into()));
        }
        self.window.validate()
    }

    pub fn band_for(&self, n: usize) -> Band {
        self.band.unwrap_or_else(|| Band::default_for(n))
    }

    pub fn n_t(&self, n: usize) -> usize {
        self.time_ratio * n
    }
}

/// Grid-independent list of half-space modes in the band, strictly below Nyquist.
fn band_modes(grid: &TorusGrid, band: Band) -> Result<Vec<[i64; 3]>> {
    let half = grid.n() as i64 / 2;
    let r = band.hi.floor() as i64;
    if r >= half {
        return Err(Error::InvalidInput(format!(
            "band radius {} reaches the Nyquist index {half}",
            band.hi
        )));
    }
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                let m = [a, b, c];
                let positive = a > 0 || (a == 0 && (b > 0 || (b == 0 && c > 0)));
                if positive && band.contains(m) {
                    out.push(m);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput(format!("band [{}, {}] contains no modes", band.lo, band.hi)));
    }
    Ok(out)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Physical real field from per-slice spatial DFT coefficients stored by half-space mode.
fn synthesize(
    grid: &TorusGrid,
    dim: usize,
    half_width: f64,
    n_t: usize,
    window: WindowSpec,
    coeff: impl Fn(usize, usize, f64) -> Complex64,
    modes: &[[i64; 3]],
) -> Result<SpaceTimeField> {
    let mut out = SpaceTimeField::zeros(*grid, dim, half_width, n_t, window)?;
    let npts = grid.points();
    let plan = fft::fft3(grid.n());
    let mut buf = vec![ZERO; npts];
    for a in 0..dim {
        for j in 0..n_t {
            let t = out.time(j);
            buf.iter_mut().for_each(|v| *v = ZERO);
            for (i, m) in modes.iter().enumerate() {
                let c = coeff(a, i, t);
                buf[grid.mode_index(*m)] += c;
                buf[grid.mode_index([-m[0], -m[1], -m[2]])] += c.conj();
            }
            plan.inverse(&mut buf);
            let o = out.offset(a, j);
            for (dst, v) in out.data_mut()[o..o + npts].iter_mut().zip(&buf) {
                *dst = Complex64::new(v.re, 0.0);
            }
        }
    }
    Ok(out)
}

/// Exact free wave `u(t) = cos(|ξ|t) û₀ + sin(|ξ|t)/|ξ| û₁` from random data
/// on the band, with the spec's window.
pub fn free_wave_sample<R: Rng + ?Sized>(
    grid: &TorusGrid,
    spec: &EnsembleSpec,
    band: Band,
    rng: &mut R,
) -> Result<SpaceTimeField> {
    let modes = band_modes(grid, band)?;
    let k0 = grid.k0();
    let dim = spec.dim;
    // Comparable position and velocity parts: û₁ = |ξ| · gaussian.
    let data: Vec<(Complex64, Complex64)> = (0..dim * modes.len())
        .map(|_| (gaussian(rng), gaussian(rng)))
        .collect();
    let count = modes.len();
    synthesize(
        grid,
        dim,
        spec.half_width,
        spec.n_t(grid.n()),
        spec.window,
        |a, i, t| {
            let w = radius(modes[i]) * k0;
            let (c0, c1) = data[a * count + i];
            c0 * (w * t).cos() + c1 * (w * t).sin()
        },
        &modes,
    )
}

/// Space-time spectral sample supported on `(m, q)` pairs accepted by `keep(|ξ|, τ)`.
fn spectral_sample<R: Rng + ?Sized>(
    grid: &TorusGrid,
    spec: &EnsembleSpec,
    band: Band,
    rng: &mut R,
    keep: impl Fn(f64, f64) -> bool,
) -> Result<SpaceTimeField> {
    let modes = band_modes(grid, band)?;
    let n_t = spec.n_t(grid.n());
    let dt_step = PI / spec.half_width;
    let q_max = n_t as i64 / 2 - 1;
    let k0 = grid.k0();
    let mut terms: Vec<Vec<(f64, Complex64)>> = Vec::with_capacity(spec.dim * modes.len());
    for _ in 0..spec.dim {
        for m in &modes {
            let xi = radius(*m) * k0;
            let mut here = Vec::new();
            for q in -q_max..=q_max {
                let tau = q as f64 * dt_step;
                if keep(xi, tau) {
                    here.push((tau, gaussian(rng)));
                }
            }
            terms.push(here);
        }
    }
    let count = modes.len();
    if terms.iter().all(Vec::is_empty) {
        return Err(Error::InvalidInput("spectral ensemble support is empty".into()));
    }
    synthesize(
        grid,
        spec.dim,
        spec.half_width,
        n_t,
        WindowSpec::none(),
        |a, i, t| {
            terms[a * count + i]
                .iter()
                .map(|(tau, c)| c * Complex64::from_polar(1.0, -tau * t))
                .sum()
        },
        &modes,
    )
}

/// Random coefficients near the light cone, `||τ| − |ξ|| ≤ w|ξ|`, periodic in time.
pub fn cone_sample<R: Rng + ?Sized>(grid: &TorusGrid, spec: &EnsembleSpec, band: Band, rng: &mut R) -> Result<SpaceTimeField> {
    let w = spec.cone_width;
    spectral_sample(grid, spec, band, rng, |xi, tau| (tau.abs() - xi).abs() <= w * xi)
}

/// Random coefficients on the band with `|τ| ≤ hi · k0`.
pub fn random_band_sample<R: Rng + ?Sized>(
    grid: &TorusGrid,
    spec: &EnsembleSpec,
    band: Band,
    rng: &mut R,
) -> Result<SpaceTimeField> {
    let cap = band.hi * grid.k0();
    spectral_sample(grid, spec, band, rng, |_, tau| tau.abs() <= cap)
}

/// Random coefficients on the band with `|τ| ≤ π/T`, the slowly varying regime.
pub fn timeband_sample<R: Rng + ?Sized>(
    grid: &TorusGrid,
    spec: &EnsembleSpec,
    band: Band,
    rng: &mut R,
) -> Result<SpaceTimeField> {
    let cap = PI / spec.half_width * 1.000001;
    spectral_sample(grid, spec, band, rng, |_, tau| tau.abs() <= cap)
}

/// Random primitive lattice direction inside the band.
pub fn random_direction<R: Rng + ?Sized>(band: Band, rng: &mut R) -> Result<[i64; 3]> {
    let r = band.hi.floor() as i64;
    let mut candidates = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                let m = [a, b, c];
                let positive = a > 0 || (a == 0 && (b > 0 || (b == 0 && c > 0)));
                if positive && gcd3(m) == 1 && radius(m) <= band.hi + 1e-12 {
                    candidates.push(m);
                }
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::InvalidInput("band admits no plane-wave direction".into()));
    }
    Ok(candidates[rng.random_range(0..candidates.len())])
}

fn gcd3(m: [i64; 3]) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    gcd(gcd(m[0], m[1]), m[2])
}

/// Travelling wave `Σ_h Re(c_h e^{ih(d·x − |d|t)})` along direction `d`, harmonics inside the band.
pub fn plane_wave_sample<R: Rng + ?Sized>(
    grid: &TorusGrid,
    spec: &EnsembleSpec,
    band: Band,
    direction: [i64; 3],
    rng: &mut R,
) -> Result<SpaceTimeField> {
    let rd = radius(direction);
    if rd == 0.0 {
        return Err(Error::InvalidInput("plane-wave direction must be nonzero".into()));
    }
    let half = grid.n() as i64 / 2;
    let mut modes = Vec::new();
    let mut h = 1i64;
    while h as f64 * rd <= band.hi + 1e-12 {
        let m = direction.map(|c| c * h);
        if m.iter().all(|c| c.abs() < half) && h as f64 * rd >= band.lo - 1e-12 {
            modes.push(m);
        }
        h += 1;
    }
    if modes.is_empty() {
        return Err(Error::InvalidInput("no plane-wave harmonics inside the band".into()));
    }
    let coeffs: Vec<Complex64> = (0..spec.dim * modes.len()).map(|_| gaussian(rng)).collect();
    let count = modes.len();
    let omega = grid.k0() * rd;
    let harmonics: Vec<f64> = modes.iter().map(|m| radius(*m) / rd).collect();
    synthesize(
        grid,
        spec.dim,
        spec.half_width,
        spec.n_t(grid.n()),
        spec.window,
        |a, i, t| {
            coeffs[a * count + i] * Complex64::from_polar(1.0, -harmonics[i] * omega * t)
        },
        &modes,
    )
}

/// Draws the inputs of one sample. Input `i` uses RNG stream `3·sample + i`
/// so that draws do not depend on the case or on other samples. Plane-wave
/// pairs share one direction, drawn from its own stream unless given.
pub fn draw_inputs_with(
    grid: &TorusGrid,
    spec: &EnsembleSpec,
    seed: u64,
    sample: usize,
    count: usize,
    direction: Option<[i64; 3]>,
) -> Result<(Vec<SpaceTimeField>, Option<[i64; 3]>)> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let band = spec.band_for(grid.n());
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s);
        rng
    };
    let direction = match (spec.kind, direction) {
        (EnsembleKind::PlaneWavePair, None) => Some(random_direction(band, &mut stream(u64::MAX - sample as u64))?),
        (_, d) => d,
    };
    let inputs = (0..count)
        .map(|i| {
            let mut rng = stream((3 * sample + i) as u64);
            match spec.kind {
                EnsembleKind::FreeWave => free_wave_sample(grid, spec, band, &mut rng),
                EnsembleKind::ConeConcentrated => cone_sample(grid, spec, band, &mut rng),
                EnsembleKind::RandomBand => random_band_sample(grid, spec, band, &mut rng),
                EnsembleKind::CurlfreeTimeband => timeband_sample(grid, spec, band, &mut rng),
                EnsembleKind::PlaneWavePair => {
                    plane_wave_sample(grid, spec, band, direction.expect("drawn above"), &mut rng)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((inputs, direction))
}

pub fn draw_inputs(grid: &TorusGrid, spec: &EnsembleSpec, seed: u64, sample: usize, count: usize) -> Result<Vec<SpaceTimeField>> {
    draw_inputs_with(grid, spec, seed, sample, count, None).map(|(v, _)| v)
}

/// Fraction of spectral energy with `||τ| − |ξ|| ≤ w|ξ|`.
pub fn cone_concentration(u: &SpaceTimeField, w: f64) -> f64 {
    let total = u.weighted_norm(|_, _| 1.0);
    if total == 0.0 {
        return 0.0;
    }
    let near = u.weighted_norm(|k2, tau| {
        let xi = k2.sqrt();
        if (tau.abs() - xi).abs() <= w * xi {
            1.0
        } else {
            0.0
        }
    });
    (near / total).powi(2)
}
