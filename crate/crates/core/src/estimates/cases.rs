use std::cell::{OnceCell, RefCell};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{dealiased_product, fft, Dealias, Repr, ScalarField, VectorField};
use crate::spacetime::{mixed_norm, product, xsb_product_norm, xsb_wave_norm, Nesting, SpaceTimeField};

/// The inequalities under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseId {
    Energy,
    StrichartzL4,
    BilinearStrichartz(f64),
    L4xL2t,
    NullEst,
    Cnd,
    Dnd,
    Cubic,
    Cdc,
    Ddc,
    Ddd,
    ProdEq,
}

impl CaseId {
    /// The eleven space-time cases, with the bilinear estimate at `δ ∈ {0, ±0.2}`.
    pub fn standard_suite() -> Vec<CaseId> {
        use CaseId::*;
        vec![
            Energy,
            StrichartzL4,
            BilinearStrichartz(0.0),
            BilinearStrichartz(0.2),
            BilinearStrichartz(-0.2),
            L4xL2t,
            NullEst,
            Cnd,
            Dnd,
            Cubic,
            Cdc,
            Ddc,
            Ddd,
        ]
    }

    pub fn arity(&self) -> usize {
        match self {
            Self::Energy | Self::StrichartzL4 | Self::L4xL2t => 1,
            Self::Cubic => 3,
            _ => 2,
        }
    }

    /// Short description of both sides with the exponents of `e`.
    pub fn describe(&self, e: &Exponents) -> (String, String) {
        let (s, p) = (e.s, e.plus);
        let wave = |s: f64, b: f64| format!("X^{{{s:.4},{b:.4}}}_wave");
        let flat = |s: f64, b: f64| format!("X^{{{s:.4},{b:.4}}}_tau0");
        match self {
            Self::Energy => (format!("L^inf_t H^{s}_x"), wave(s, 0.5 + p)),
            Self::StrichartzL4 => ("L^4_tx".into(), wave(0.5, 0.5 + p)),
            Self::BilinearStrichartz(d) => (
                "L^2_tx of u v".into(),
                format!("{} * {}", wave(0.5 + d, 0.5 + p), wave(0.5 - d, 0.5 + p)),
            ),
            Self::L4xL2t => ("L^4_x L^2_t".into(), wave(0.25, 0.5 + p)),
            Self::NullEst => (
                format!("N(A1,A2) in {}", wave(s - 1.0, -0.25 + p)),
                format!("{0} * {0}", wave(s, 0.75 + p)),
            ),
            Self::Cnd => (
                format!("A1 grad A2 + A2 grad A1 in {}", wave(s - 1.0, -0.25 + p)),
                format!("{} * {}", wave(s, 0.75 + p), flat(s + 0.25, 0.5 + p)),
            ),
            Self::Dnd => (
                format!("A1 grad A2 in {}", wave(s - 1.0, -0.25 + p)),
                format!("{0} * {0}", flat(s + 0.25, 0.5 + p)),
            ),
            Self::Cubic => (
                format!("A1 A2 A3 in {}", wave(s - 1.0, -0.25 + p)),
                format!("prod min({}, {})", wave(s, 0.75 + p), flat(s + 0.25, 0.5 + p)),
            ),
            Self::Cdc => (
                format!("A1 dt A2 in {}", flat(s - 0.75, -0.5 + p)),
                format!("{0} * {0}", wave(s, 0.75 + p)),
            ),
            Self::Ddc => (
                format!("A1 dt A2 + A2 dt A1 in {}", flat(s - 0.75, -0.5 + p)),
                format!("{} * {}", wave(s, 0.75 + p), flat(s + 0.25, 0.5 + p)),
            ),
            Self::Ddd => (
                format!("A1 dt A2 in {}", flat(s - 0.75, -0.5 + p)),
                format!("{0} * {0}", flat(s + 0.25, 0.5 + p)),
            ),
            Self::ProdEq => (
                "max of fg in X, H^s, H^(s-1)".into(),
                format!("X = ||grad f||_H^{s}"),
            ),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Energy => f.write_str("energy"),
            Self::StrichartzL4 => f.write_str("strichartz_L4"),
            Self::BilinearStrichartz(d) => write!(f, "bilinear_strichartz({d})"),
            Self::L4xL2t => f.write_str("L4x_L2t"),
            Self::NullEst => f.write_str("null_est"),
            Self::Cnd => f.write_str("cnd"),
            Self::Dnd => f.write_str("dnd"),
            Self::Cubic => f.write_str("cubic"),
            Self::Cdc => f.write_str("cdc"),
            Self::Ddc => f.write_str("ddc"),
            Self::Ddd => f.write_str("ddd"),
            Self::ProdEq => f.write_str("prod_eq"),
        }
    }
}

impl Serialize for CaseId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix("bilinear_strichartz") {
            let d = match rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
                Some(inner) => inner
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad δ in case '{t}'")))?,
                None if rest.is_empty() => 0.0,
                None => return Err(Error::InvalidInput(format!("unknown case '{t}'"))),
            };
            if !(d.abs() < 0.25) {
                return Err(Error::InvalidInput(format!("bilinear δ = {d} must satisfy |δ| < 1/4")));
            }
            return Ok(Self::BilinearStrichartz(d));
        }
        Ok(match t {
            "energy" => Self::Energy,
            "strichartz_L4" => Self::StrichartzL4,
            "L4x_L2t" => Self::L4xL2t,
            "null_est" => Self::NullEst,
            "cnd" => Self::Cnd,
            "dnd" => Self::Dnd,
            "cubic" => Self::Cubic,
            "cdc" => Self::Cdc,
            "ddc" => Self::Ddc,
            "ddd" => Self::Ddd,
            "prod_eq" => Self::ProdEq,
            _ => return Err(Error::InvalidInput(format!("unknown case '{t}'"))),
        })
    }
}

/// Concrete exponents: `s` and the value of every `+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub s: f64,
    pub plus: f64,
}

impl Default for Exponents {
    fn default() -> Self {
        Self { s: 0.8, plus: 0.01 }
    }
}

impl Exponents {
    pub fn new(s: f64, plus: f64) -> Result<Self> {
        if !(s > 0.75) {
            return Err(Error::InvalidInput(format!("s = {s} must exceed 3/4")));
        }
        if !(plus > 0.0 && plus < 0.25) {
            return Err(Error::InvalidInput(format!("ϵ = {plus} must lie in (0, 1/4)")));
        }
        Ok(Self { s, plus })
    }
}

/// Both sides of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub lhs: f64,
    pub rhs: f64,
    /// Individual left-hand terms (two for the symmetric cases, three
    /// sub-estimate ratios for `prod_eq`).
    pub terms: Vec<f64>,
}

impl Evaluation {
    /// `lhs / rhs`; `0` when both vanish, `None` for a positive left side over a zero right side.
    pub fn ratio(&self) -> Option<f64> {
        if self.lhs == 0.0 {
            Some(0.0)
        } else if self.rhs > 0.0 {
            Some(self.lhs / self.rhs)
        } else {
            None
        }
    }
}

/// One input with its localized samples, spectrum and lazily built derivatives.
pub struct Prepared {
    phys: SpaceTimeField,
    spec: SpaceTimeField,
    grad: OnceCell<Vec<SpaceTimeField>>,
    grad_smoothed: OnceCell<Vec<SpaceTimeField>>,
    dt: OnceCell<SpaceTimeField>,
    norms: RefCell<Vec<(u8, u64, u64, f64)>>,
}

impl Prepared {
    pub fn new(u: &SpaceTimeField) -> Self {
        let phys = u.localized();
        let spec = phys.spectral();
        Self {
            phys,
            spec,
            grad: OnceCell::new(),
            grad_smoothed: OnceCell::new(),
            dt: OnceCell::new(),
            norms: RefCell::new(Vec::new()),
        }
    }

    pub fn physical(&self) -> &SpaceTimeField {
        &self.phys
    }

    pub fn spectrum(&self) -> &SpaceTimeField {
        &self.spec
    }

    /// `∂_i u` in physical space.
    fn grad(&self) -> &[SpaceTimeField] {
        self.grad
            .get_or_init(|| (0..3).map(|i| self.spec.partial_derivative(i).physical()).collect())
    }

    /// `∂_i ⟨∇⟩⁻¹u` in physical space.
    fn grad_smoothed(&self) -> &[SpaceTimeField] {
        self.grad_smoothed.get_or_init(|| {
            (0..3)
                .map(|i| {
                    self.spec
                        .apply_multiplier(|k, ko, _, _| {
                            let b = (1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                            Complex64::new(0.0, ko[i] / b)
                        })
                        .physical()
                })
                .collect()
        })
    }

    fn dt(&self) -> &SpaceTimeField {
        self.dt.get_or_init(|| self.spec.time_derivative().physical())
    }

    fn cached(&self, kind: u8, s: f64, b: f64, f: impl FnOnce(&SpaceTimeField) -> f64) -> f64 {
        let key = (kind, s.to_bits(), b.to_bits());
        if let Some(v) = self.norms.borrow().iter().find(|e| (e.0, e.1, e.2) == key) {
            return v.3;
        }
        let v = f(&self.spec);
        self.norms.borrow_mut().push((key.0, key.1, key.2, v));
        v
    }

    fn wave(&self, s: f64, b: f64) -> f64 {
        self.cached(0, s, b, |u| xsb_wave_norm(u, s, b))
    }

    fn flat(&self, s: f64, b: f64) -> f64 {
        self.cached(1, s, b, |u| xsb_product_norm(u, s, b))
    }
}

fn sum_fields(parts: impl IntoIterator<Item = SpaceTimeField>) -> SpaceTimeField {
    let mut it = parts.into_iter();
    let mut total = it.next().expect("nonempty sum");
    for p in it {
        for (x, y) in total.data_mut().iter_mut().zip(p.data()) {
            *x += y;
        }
    }
    total
}

fn gradient_products(a: &Prepared, b: &Prepared) -> Result<SpaceTimeField> {
    let parts = b
        .grad()
        .iter()
        .map(|d| product(&a.phys, d))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::stack(&parts)
}

/// `Σ_{i<j} (∂_i f ∂_j g − ∂_j f ∂_i g)` from physical derivatives.
fn null_forms(df: &[SpaceTimeField], dg: &[SpaceTimeField]) -> Result<SpaceTimeField> {
    let mut terms = Vec::with_capacity(6);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        terms.push(product(&df[i], &dg[j])?);
        terms.push(product(&df[j], &dg[i])?.scale(-1.0));
    }
    Ok(sum_fields(terms))
}

fn null_form_prepared(a1: &Prepared, a2: &Prepared) -> Result<SpaceTimeField> {
    let first = null_forms(a1.grad_smoothed(), a2.grad())?;
    let second = null_forms(a1.grad(), a2.grad())?.inverse_bracket().physical();
    Ok(sum_fields([first, second]))
}

/// The schematic null form `Σ_{i<j} Q_ij(⟨∇⟩⁻¹A₁, A₂) + ⟨∇⟩⁻¹ Σ_{i<j} Q_ij(A₁, A₂)`,
/// physical and unwindowed.
pub fn schematic_null_form(a1: &SpaceTimeField, a2: &SpaceTimeField) -> Result<SpaceTimeField> {
    null_form_prepared(&Prepared::new(a1), &Prepared::new(a2))
}

pub fn linf_t_hs(u: &SpaceTimeField, s: f64) -> f64 {
    let loc = u.localized();
    let grid = *u.grid();
    let npts = grid.points();
    let plan = fft::fft3(grid.n());
    let c = grid.spectral_scale();
    let mut w = vec![0.0; npts];
    crate::grid::for_each_mode(&grid, |idx, k, _| {
        w[idx] = (1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).powf(s)
    });
    let mut buf = vec![Complex64::new(0.0, 0.0); npts];
    let mut worst: f64 = 0.0;
    for j in 0..u.n_t() {
        let mut total = 0.0;
        for a in 0..u.dim() {
            buf.copy_from_slice(loc.block(a, j));
            plan.forward(&mut buf);
            total += buf.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>() * c * c;
        }
        worst = worst.max(total.sqrt());
    }
    worst
}

/// The spatial product estimates on time-independent fields `f`, `g`,
/// with `X = ‖∇f‖_{H^s}`. Terms are the three sub-ratios.
pub fn prod_eq(f: &ScalarField, g: &ScalarField, s: f64) -> Result<Evaluation> {
    let x = |h: &ScalarField| VectorField::gradient(&h.spectral()).sobolev_norm(s);
    // Alias-free on the half band; inputs are truncated to it.
    let (f, g) = (f.spectral().truncate(Dealias::Half), g.spectral().truncate(Dealias::Half));
    let fg = dealiased_product(&f, &g, Dealias::TwoThirds)?;
    let xf = x(&f);
    let pairs = [
        (x(&fg), xf * x(&g)),
        (fg.sobolev_norm(s), xf * g.sobolev_norm(s)),
        (fg.sobolev_norm(s - 1.0), xf * g.sobolev_norm(s - 1.0)),
    ];
    let ratio = |(l, r): (f64, f64)| {
        if l == 0.0 {
            0.0
        } else if r > 0.0 {
            l / r
        } else {
            f64::INFINITY
        }
    };
    let terms: Vec<f64> = pairs.iter().map(|p| ratio(*p)).collect();
    let worst = (0..3).max_by(|&i, &j| terms[i].total_cmp(&terms[j])).expect("three terms");
    let (lhs, rhs) = pairs[worst];
    Ok(Evaluation { lhs, rhs, terms })
}

/// Evaluates both sides of `case` on `inputs` (at least `case.arity()`).

/// Evaluates both sides of `case` on `inputs` (at least `case.arity()`).
pub fn evaluate(case: CaseId, inputs: &[SpaceTimeField], e: &Exponents) -> Result<Evaluation> {
    let prepared: Vec<Prepared> = inputs.iter().take(case.arity().max(2)).map(Prepared::new).collect();
    evaluate_prepared(case, &prepared, e)
}

/// As [`evaluate`], reusing transforms shared between cases.
pub fn evaluate_prepared(case: CaseId, inputs: &[Prepared], e: &Exponents) -> Result<Evaluation> {
    let needed = if case == CaseId::ProdEq { 2 } else { case.arity() };
    if inputs.len() < needed {
        return Err(Error::InvalidInput(format!(
            "case {case} needs {needed} inputs, got {}",
            inputs.len()
        )));
    }
    let (s, p) = (e.s, e.plus);
    let wave = |u: &SpaceTimeField, s: f64, b: f64| xsb_wave_norm(u, s, b);
    let flat = |u: &SpaceTimeField, s: f64, b: f64| xsb_product_norm(u, s, b);
    let single = |lhs: f64, rhs: f64| Evaluation { lhs, rhs, terms: vec![lhs] };
    let u = &inputs[0];
    let w_rhs = |a: &Prepared| a.wave(s, 0.75 + p);
    let f_rhs = |a: &Prepared| a.flat(s + 0.25, 0.5 + p);
    Ok(match case {
        CaseId::Energy => single(linf_t_hs(&u.phys, s), u.wave(s, 0.5 + p)),
        CaseId::StrichartzL4 => single(mixed_norm(&u.phys, Nesting::TThenX, 4.0, 4.0)?, u.wave(0.5, 0.5 + p)),
        CaseId::BilinearStrichartz(d) => {
            let v = &inputs[1];
            single(
                product(&u.phys, &v.phys)?.l2_norm(),
                u.wave(0.5 + d, 0.5 + p) * v.wave(0.5 - d, 0.5 + p),
            )
        }
        CaseId::L4xL2t => single(mixed_norm(&u.phys, Nesting::XThenT, 2.0, 4.0)?, u.wave(0.25, 0.5 + p)),
        CaseId::NullEst => {
            let v = &inputs[1];
            single(wave(&null_form_prepared(u, v)?, s - 1.0, -0.25 + p), w_rhs(u) * w_rhs(v))
        }
        CaseId::Cnd => {
            let v = &inputs[1];
            let t1 = wave(&gradient_products(u, v)?, s - 1.0, -0.25 + p);
            let t2 = wave(&gradient_products(v, u)?, s - 1.0, -0.25 + p);
            Evaluation { lhs: t1 + t2, rhs: w_rhs(u) * f_rhs(v), terms: vec![t1, t2] }
        }
        CaseId::Dnd => {
            let v = &inputs[1];
            single(wave(&gradient_products(u, v)?, s - 1.0, -0.25 + p), f_rhs(u) * f_rhs(v))
        }
        CaseId::Cubic => {
            let uvw = product(&product(&u.phys, &inputs[1].phys)?, &inputs[2].phys)?;
            let rhs = inputs[..3].iter().map(|a| w_rhs(a).min(f_rhs(a))).product();
            single(wave(&uvw, s - 1.0, -0.25 + p), rhs)
        }
        CaseId::Cdc => {
            let v = &inputs[1];
            single(flat(&product(&u.phys, v.dt())?, s - 0.75, -0.5 + p), w_rhs(u) * w_rhs(v))
        }
        CaseId::Ddc => {
            let v = &inputs[1];
            let t1 = flat(&product(&u.phys, v.dt())?, s - 0.75, -0.5 + p);
            let t2 = flat(&product(&v.phys, u.dt())?, s - 0.75, -0.5 + p);
            Evaluation { lhs: t1 + t2, rhs: w_rhs(u) * f_rhs(v), terms: vec![t1, t2] }
        }
        CaseId::Ddd => {
            let v = &inputs[1];
            single(flat(&product(&u.phys, v.dt())?, s - 0.75, -0.5 + p), f_rhs(u) * f_rhs(v))
        }
        CaseId::ProdEq => prod_eq(&snapshot(&u.phys)?, &snapshot(&inputs[1].phys)?, s)?,
    })
}

/// Real part of the `t = 0` slice of a localized field.
pub fn snapshot(w: &SpaceTimeField) -> Result<ScalarField> {
    let loc = w.localized();
    let j = w.n_t() / 2;
    let mut data = Vec::with_capacity(w.dim() * w.grid().points());
    for a in 0..w.dim() {
        data.extend(loc.block(a, j).iter().map(|v| Complex64::new(v.re, 0.0)));
    }
    ScalarField::from_data(*w.grid(), w.dim(), Repr::Physical, data)
}
