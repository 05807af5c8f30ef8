//! Finite-dimensional Lie algebra arithmetic.
//!
//! An algebra is described by its structure constants `c(a, b, k)` with
//! `[e_a, e_b] = Σ_k c(a, b, k) e_k`. Group elements live in a faithful
//! matrix representation registered for the tensor:
//!
//! * `Fundamental`: su(2) in the Pauli basis `e_a = −(i/2) σ_a`,
//! * `Diagonal`: abelian algebras as `e_a = i E_aa`,
//! * `Adjoint`: `ad(e_a)_{mk} = c(a, k, m)`, faithful when the centre is trivial.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const SU2_MATCH_TOL: f64 = 1e-14;

/// Structure constants of a Lie algebra, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    dim: usize,
    c: Vec<f64>,
    // (a, b, k, value) for every nonzero entry; drives the hot bracket loop.
    nonzero: Vec<(usize, usize, usize, f64)>,
}

impl StructureTensor {
    /// Builds a tensor from a dense `(a, b, k)` row-major array.
    ///
    /// Antisymmetry in `(a, b)` is checked exactly; the Jacobi identity is not
    /// enforced here (see [`StructureTensor::jacobi_residual`]).
    pub fn new(dim: usize, c: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("algebra dimension must be positive");
        }
        if c.len() != dim * dim * dim {
            return invalid(format!(
                "structure tensor of dimension {dim} needs {} entries, got {}",
                dim * dim * dim,
                c.len()
            ));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return invalid("structure constants must be finite");
        }
        for a in 0..dim {
            for b in 0..dim {
                for k in 0..dim {
                    let ab = c[(a * dim + b) * dim + k];
                    let ba = c[(b * dim + a) * dim + k];
                    if ab != -ba {
                        return invalid(format!(
                            "structure constants not antisymmetric at (a={a}, b={b}, k={k}): {ab} vs {ba}"
                        ));
                    }
                }
            }
        }
        let mut nonzero = Vec::new();
        for a in 0..dim {
            for b in 0..dim {
                for k in 0..dim {
                    let v = c[(a * dim + b) * dim + k];
                    if v != 0.0 {
                        nonzero.push((a, b, k, v));
                    }
                }
            }
        }
        Ok(Self { dim, c, nonzero })
    }

    /// su(2) with `c(a, b, k) = ε_{abk}`.
    pub fn su2() -> Self {
        let mut c = vec![0.0; 27];
        for (a, b, k, v) in [
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
            (1, 0, 2, -1.0),
            (2, 1, 0, -1.0),
            (0, 2, 1, -1.0),
        ] {
            c[(a * 3 + b) * 3 + k] = v;
        }
        Self::new(3, c).expect("epsilon tensor is antisymmetric")
    }

    /// The abelian algebra of the given dimension (all brackets vanish).
    pub fn abelian(dim: usize) -> Self {
        Self::new(dim.max(1), vec![0.0; dim.max(1).pow(3)]).expect("zero tensor is valid")
    }

    /// Builds a tensor from sparse `(a, b, k, value)` entries (0-based).
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut c = vec![0.0; dim * dim * dim];
        for &(a, b, k, v) in entries {
            if a >= dim || b >= dim || k >= dim {
                return invalid(format!("entry ({a}, {b}, {k}) out of range for dimension {dim}"));
            }
            c[(a * dim + b) * dim + k] = v;
        }
        Self::new(dim, c)
    }

    /// Parses the plain-text format: first line `dim`, then one line per
    /// nonzero entry `a b k value` with 1-based indices. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let dim: usize = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty structure tensor file".into()))?
            .parse()
            .map_err(|e| Error::InvalidInput(format!("bad dimension line: {e}")))?;
        let mut entries = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return invalid(format!("entry {}: expected `a b k value`, got `{line}`", lineno + 1));
            }
            let idx = |s: &str| -> Result<usize> {
                let i: usize = s
                    .parse()
                    .map_err(|e| Error::InvalidInput(format!("bad index `{s}`: {e}")))?;
                if i == 0 {
                    return invalid("indices are 1-based");
                }
                Ok(i - 1)
            };
            let v: f64 = parts[3]
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad value `{}`: {e}", parts[3])))?;
            entries.push((idx(parts[0])?, idx(parts[1])?, idx(parts[2])?, v));
        }
        Self::from_entries(dim, &entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, k: usize) -> f64 {
        self.c[(a * self.dim + b) * self.dim + k]
    }

    pub fn is_abelian(&self) -> bool {
        self.nonzero.is_empty()
    }

    pub fn is_su2(&self) -> bool {
        if self.dim != 3 {
            return false;
        }
        let eps = Self::su2();
        self.c
            .iter()
            .zip(&eps.c)
            .all(|(x, y)| (x - y).abs() <= SU2_MATCH_TOL)
    }

    /// `[X, Y]` on algebra elements.
    pub fn bracket(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        if x.dim() != self.dim || y.dim() != self.dim {
            return invalid(format!(
                "bracket operands have dimensions {} and {}, algebra has {}",
                x.dim(),
                y.dim(),
                self.dim
            ));
        }
        let mut out = vec![0.0; self.dim];
        self.bracket_into(&x.0, &y.0, &mut out);
        Ok(AlgebraElement(out))
    }

    /// Raw bracket on coefficient slices; `out` is overwritten.
    #[inline]
    pub fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(a, b, k, v) in &self.nonzero {
            out[k] += v * x[a] * y[b];
        }
    }

    /// Accumulating variant: `out += scale · [x, y]`.
    #[inline]
    pub fn bracket_acc(&self, x: &[f64], y: &[f64], scale: f64, out: &mut [f64]) {
        for &(a, b, k, v) in &self.nonzero {
            out[k] += scale * v * x[a] * y[b];
        }
    }

    /// Max-norm residual of the Jacobi identity over all index quadruples.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    for m in 0..n {
                        let mut sum = 0.0;
                        for k in 0..n {
                            sum += self.get(a, b, k) * self.get(k, d, m)
                                + self.get(b, d, k) * self.get(k, a, m)
                                + self.get(d, a, k) * self.get(k, b, m);
                        }
                        worst = worst.max(sum.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Free-function form of [`StructureTensor::jacobi_residual`].
pub fn jacobi_residual(s: &StructureTensor) -> f64 {
    s.jacobi_residual()
}

/// Coefficients of an algebra element in the basis `{e_a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement(Vec<f64>);

impl AlgebraElement {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|v| !v.is_finite()) {
            return invalid("algebra element has non-finite coefficients");
        }
        Ok(Self(coeffs))
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn basis(dim: usize, a: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[a] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> AlgebraElement {
        AlgebraElement(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> AlgebraElement {
        AlgebraElement(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: f64) -> AlgebraElement {
        AlgebraElement(self.0.iter().map(|a| a * rhs).collect())
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement(self.0.iter().map(|a| -a).collect())
    }
}

/// Small dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return invalid(format!("{n}x{n} matrix needs {} entries", n * n));
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn conj_transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        if n == 1 {
            let d = self.data[0];
            if d.norm() == 0.0 {
                return Err(Error::Numerical("matrix is singular".into()));
            }
            return Ok(Self { n, data: vec![d.inv()] });
        }
        if n == 2 {
            let (a, b, c, d) = (self.data[0], self.data[1], self.data[2], self.data[3]);
            let det = a * d - b * c;
            if det.norm() <= f64::EPSILON * self.norm_one().powi(2) {
                return Err(Error::Numerical("matrix is singular".into()));
            }
            let r = det.inv();
            return Ok(Self {
                n,
                data: vec![d * r, -b * r, -c * r, a * r],
            });
        }
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = self.norm_one().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
                .unwrap();
            if a[pivot * n + col].norm() <= 1e-14 * scale {
                return Err(Error::Numerical("matrix is singular".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[col * n + col].inv();
            for j in 0..n {
                a[col * n + j] *= p;
                inv[col * n + j] *= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[i * n + col];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[col * n + j], inv[col * n + j]);
                    a[i * n + j] -= f * ac;
                    inv[i * n + j] -= f * ic;
                }
            }
        }
        Ok(Self { n, data: inv })
    }

    pub fn determinant(&self) -> Complex64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
                .unwrap();
            if a[pivot * n + col].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for i in col + 1..n {
                let f = a[i * n + col] / p;
                for j in col..n {
                    let v = a[col * n + j];
                    a[i * n + j] -= f * v;
                }
            }
        }
        det
    }
}

/// Which faithful matrix representation to use for group elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepresentationId {
    Fundamental,
    Diagonal,
    Adjoint,
}

impl fmt::Display for RepresentationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Fundamental => "fundamental",
            Self::Diagonal => "diagonal",
            Self::Adjoint => "adjoint",
        };
        f.write_str(s)
    }
}

/// A registered representation `ρ: g → gl(m, C)` together with the data
/// needed to pull matrices back to algebra coefficients.
#[derive(Debug, Clone)]
pub struct Representation {
    id: RepresentationId,
    algebra_dim: usize,
    generators: Vec<CMatrix>,
    // Inverse Gram matrix of the generators under Re tr(A† B).
    gram_inv: Vec<f64>,
}

impl Representation {
    pub fn new(s: &StructureTensor, id: RepresentationId) -> Result<Self> {
        let dim = s.dim();
        let generators: Vec<CMatrix> = match id {
            RepresentationId::Fundamental => {
                if !s.is_su2() {
                    return Err(Error::Configuration(
                        "the fundamental representation is registered for su(2) only".into(),
                    ));
                }
                let z = Complex64::new(0.0, 0.0);
                let h = 0.5;
                // e_a = −(i/2) σ_a
                vec![
                    CMatrix::from_rows(2, vec![z, Complex64::new(0.0, -h), Complex64::new(0.0, -h), z])?,
                    CMatrix::from_rows(2, vec![z, Complex64::new(-h, 0.0), Complex64::new(h, 0.0), z])?,
                    CMatrix::from_rows(2, vec![Complex64::new(0.0, -h), z, z, Complex64::new(0.0, h)])?,
                ]
            }
            RepresentationId::Diagonal => {
                if !s.is_abelian() {
                    return Err(Error::Configuration(
                        "the diagonal representation is registered for abelian algebras only".into(),
                    ));
                }
                (0..dim)
                    .map(|a| {
                        let mut m = CMatrix::zeros(dim);
                        m.set(a, a, Complex64::new(0.0, 1.0));
                        m
                    })
                    .collect()
            }
            RepresentationId::Adjoint => (0..dim)
                .map(|a| {
                    let mut m = CMatrix::zeros(dim);
                    for mm in 0..dim {
                        for k in 0..dim {
                            m.set(mm, k, Complex64::new(s.get(a, k, mm), 0.0));
                        }
                    }
                    m
                })
                .collect(),
        };
        let mut gram = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                gram[a * dim + b] = generators[a]
                    .data()
                    .iter()
                    .zip(generators[b].data())
                    .map(|(x, y)| (x.conj() * y).re)
                    .sum();
            }
        }
        let gram_inv = invert_real(&gram, dim).ok_or_else(|| {
            Error::Configuration(format!("the {id} representation is not faithful for this algebra"))
        })?;
        Ok(Self {
            id,
            algebra_dim: dim,
            generators,
            gram_inv,
        })
    }

    /// The default representation: fundamental for su(2), diagonal for
    /// abelian algebras, adjoint otherwise.
    pub fn default_for(s: &StructureTensor) -> Result<Self> {
        let id = if s.is_su2() {
            RepresentationId::Fundamental
        } else if s.is_abelian() {
            RepresentationId::Diagonal
        } else {
            RepresentationId::Adjoint
        };
        Self::new(s, id)
    }

    pub fn id(&self) -> RepresentationId {
        self.id
    }

    pub fn algebra_dim(&self) -> usize {
        self.algebra_dim
    }

    /// Matrix size of the representation.
    pub fn size(&self) -> usize {
        self.generators[0].size()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn represent(&self, x: &[f64]) -> CMatrix {
        let m = self.size();
        let mut out = CMatrix::zeros(m);
        for (g, &c) in self.generators.iter().zip(x) {
            if c == 0.0 {
                continue;
            }
            for (o, v) in out.data_mut().iter_mut().zip(g.data()) {
                *o += v * c;
            }
        }
        out
    }

    /// Least-squares algebra coefficients of `m` and the relative residual
    /// `‖m − ρ(x)‖ / max(‖m‖, 1)` measuring how far `m` sits from `ρ(g)`.
    pub fn pull_back(&self, m: &CMatrix) -> (Vec<f64>, f64) {
        let dim = self.algebra_dim;
        let rhs: Vec<f64> = self
            .generators
            .iter()
            .map(|g| g.data().iter().zip(m.data()).map(|(x, y)| (x.conj() * y).re).sum())
            .collect();
        let coeffs: Vec<f64> = (0..dim)
            .map(|a| (0..dim).map(|b| self.gram_inv[a * dim + b] * rhs[b]).sum())
            .collect();
        let back = self.represent(&coeffs);
        let resid = back.max_abs_diff(m);
        let scale = m.data().iter().map(|v| v.norm()).fold(1.0, f64::max);
        (coeffs, resid / scale)
    }

    /// Group exponential by scaling and squaring with a truncated Taylor series.
    pub fn exp(&self, v: &[f64]) -> GroupElement {
        GroupElement {
            matrix: expm(&self.represent(v)),
        }
    }

    /// `U X U⁻¹` pulled back to the algebra.
    pub fn adjoint(&self, u: &GroupElement, x: &[f64]) -> Result<Vec<f64>> {
        let inv = u.matrix.inverse()?;
        let conj = u.matrix.mul(&self.represent(x)).mul(&inv);
        let (coeffs, resid) = self.pull_back(&conj);
        if resid > 1e-9 {
            return Err(Error::Numerical(format!(
                "conjugated element leaves the algebra (residual {resid:.2e})"
            )));
        }
        Ok(coeffs)
    }
}

/// A group element in a fixed matrix representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub matrix: CMatrix,
}

impl GroupElement {
    pub fn identity(size: usize) -> Self {
        Self {
            matrix: CMatrix::identity(size),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.inverse()?,
        })
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            matrix: self.matrix.mul(&rhs.matrix),
        }
    }
}

/// `exp(V)` in the requested representation of `s`.
pub fn group_exp(v: &AlgebraElement, s: &StructureTensor, rep: RepresentationId) -> Result<GroupElement> {
    if v.dim() != s.dim() {
        return invalid("algebra element dimension does not match the structure tensor");
    }
    Ok(Representation::new(s, rep)?.exp(v.coeffs()))
}

/// `U X U⁻¹` for `U` in `rep` (the representation `U` was built in).
pub fn adjoint(rep: &Representation, u: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    if x.dim() != rep.algebra_dim() {
        return invalid("algebra element dimension does not match the representation");
    }
    AlgebraElement::new(rep.adjoint(u, x.coeffs())?)
}

/// Matrix exponential: scale so the 1-norm is at most 1/2, sum the Taylor
/// series until terms drop below machine precision, then square back.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.size();
    let norm = m.norm_one();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut result = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=30 {
        term = term.mul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        result = result.add(&term);
        if term.norm_one() <= 1e-18 * result.norm_one() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

fn invert_real(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        for j in 0..n {
            a.swap(pivot * n + j, col * n + j);
            inv.swap(pivot * n + j, col * n + j);
        }
        let p = 1.0 / a[col * n + col];
        for j in 0..n {
            a[col * n + j] *= p;
            inv[col * n + j] *= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i * n + col];
                for j in 0..n {
                    a[i * n + j] -= f * a[col * n + j];
                    inv[i * n + j] -= f * inv[col * n + j];
                }
            }
        }
    }
    Some(inv)
}
