//! Exponential-polynomial spaces `E_(λ_0, …, λ_n)` in real form.
//!
//! A [`Spectrum`] lists the roots of the characteristic polynomial of a
//! constant-coefficient linear ODE together with their multiplicities. The
//! solution space is spanned by the real functions
//!
//! * `x^j e^{αx}` for a real root `α` of multiplicity `m`, `0 <= j < m`;
//! * `x^j e^{αx} cos(βx)` and `x^j e^{αx} sin(βx)` for each conjugate pair
//!   `α ± iβ` of multiplicity `m`, `0 <= j < m`.
//!
//! Derivatives of every order are evaluated in closed form through the
//! Leibniz rule applied to `x^j · e^{λx}` with complex `λ`, never by finite
//! differences.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One root of the characteristic polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub mult: usize,
}

impl Eigenvalue {
    pub fn real(re: f64, mult: usize) -> Self {
        Self { re, im: 0.0, mult }
    }

    /// Both members `re ± i·im` of a conjugate pair.
    pub fn conjugate_pair(re: f64, im: f64, mult: usize) -> [Self; 2] {
        [Self { re, im, mult }, Self { re, im: -im, mult }]
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.re
            .total_cmp(&other.re)
            .then(self.im.abs().total_cmp(&other.im.abs()))
            .then(other.im.total_cmp(&self.im))
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumRepr {
    eigenvalues: Vec<Eigenvalue>,
}

/// Multiset of eigenvalues defining an exponential-polynomial space.
///
/// Entries are kept in canonical order: by real part, then by modulus of the
/// imaginary part, with `+iβ` before `-iβ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumRepr", into = "SpectrumRepr")]
pub struct Spectrum {
    eigenvalues: Vec<Eigenvalue>,
}

impl TryFrom<SpectrumRepr> for Spectrum {
    type Error = Error;

    fn try_from(repr: SpectrumRepr) -> Result<Self> {
        Spectrum::new(repr.eigenvalues)
    }
}

impl From<Spectrum> for SpectrumRepr {
    fn from(s: Spectrum) -> Self {
        SpectrumRepr {
            eigenvalues: s.eigenvalues,
        }
    }
}

impl Spectrum {
    /// Validated spectrum of total multiplicity at least two.
    pub fn new(eigenvalues: Vec<Eigenvalue>) -> Result<Self> {
        Self::with_min_dim(eigenvalues, 2)
    }

    /// Spectra of derived spaces may have dimension one.
    pub(crate) fn with_min_dim(mut eigenvalues: Vec<Eigenvalue>, min_dim: usize) -> Result<Self> {
        for e in &eigenvalues {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::InvalidSpectrum(format!(
                    "non-finite eigenvalue {} + {}i",
                    e.re, e.im
                )));
            }
            if e.mult == 0 {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalue {} + {}i has multiplicity zero",
                    e.re, e.im
                )));
            }
        }
        // -0.0 and 0.0 must compare equal below
        for e in &mut eigenvalues {
            e.re += 0.0;
            e.im += 0.0;
        }
        eigenvalues.sort_by(Eigenvalue::canonical_cmp);
        for w in eigenvalues.windows(2) {
            if w[0].re == w[1].re && w[0].im == w[1].im {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalue {} + {}i listed twice; use the multiplicity field",
                    w[0].re, w[0].im
                )));
            }
        }
        for e in eigenvalues.iter().filter(|e| e.im != 0.0) {
            let partner = eigenvalues
                .iter()
                .any(|o| o.re == e.re && o.im == -e.im && o.mult == e.mult);
            if !partner {
                return Err(Error::ConjugationViolation { re: e.re, im: e.im });
            }
        }
        let dim: usize = eigenvalues.iter().map(|e| e.mult).sum();
        if dim < min_dim {
            return Err(Error::InvalidSpectrum(format!(
                "total multiplicity {dim} is below the required {min_dim}"
            )));
        }
        Ok(Self { eigenvalues })
    }

    /// Real spectrum from a list of exponents; repeated values become
    /// multiplicities, so `[0, 0, 2]` describes `⟨1, x, e^{2x}⟩`.
    pub fn from_real_exponents(exponents: &[f64]) -> Result<Self> {
        let mut sorted = exponents.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut entries: Vec<Eigenvalue> = Vec::new();
        for l in sorted {
            match entries.last_mut() {
                Some(last) if last.re == l => last.mult += 1,
                _ => entries.push(Eigenvalue::real(l, 1)),
            }
        }
        Self::new(entries)
    }

    /// Polynomials of degree at most `degree`.
    pub fn polynomial(degree: usize) -> Result<Self> {
        Self::new(vec![Eigenvalue::real(0.0, degree + 1)])
    }

    pub fn eigenvalues(&self) -> &[Eigenvalue] {
        &self.eigenvalues
    }

    /// Dimension `n + 1` of the space.
    pub fn dim(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.mult).sum()
    }

    /// The `n` of `U_n`.
    pub fn degree(&self) -> usize {
        self.dim() - 1
    }

    /// `max |Im λ_j|`.
    pub fn max_imag(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.im.abs())
            .fold(0.0, f64::max)
    }

    /// Multiplicity of the real eigenvalue `lambda`, if present.
    pub fn real_multiplicity(&self, lambda: f64) -> Option<usize> {
        self.eigenvalues
            .iter()
            .find(|e| e.im == 0.0 && e.re == lambda)
            .map(|e| e.mult)
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E(")?;
        for (i, e) in self.eigenvalues.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if e.im == 0.0 {
                write!(f, "{}", e.re)?;
            } else {
                write!(f, "{}{:+}i", e.re, e.im)?;
            }
            if e.mult > 1 {
                write!(f, "^{}", e.mult)?;
            }
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    PolyExp,
    PolyExpCos,
    PolyExpSin,
}

/// `x^power · e^{alpha x}`, optionally times `cos(beta x)` or `sin(beta x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealBasisFunction {
    pub kind: BasisKind,
    pub power: usize,
    pub alpha: f64,
    /// Zero for [`BasisKind::PolyExp`].
    pub beta: f64,
}

impl RealBasisFunction {
    /// `m`-th derivative at `x`.
    pub fn derivative(&self, x: f64, m: usize) -> f64 {
        let j = self.power;
        let top = m.min(j);
        match self.kind {
            BasisKind::PolyExp => {
                let e = (self.alpha * x).exp();
                let mut acc = 0.0;
                for i in 0..=top {
                    acc += binomial(m, i)
                        * falling(j, i)
                        * x.powi((j - i) as i32)
                        * self.alpha.powi((m - i) as i32);
                }
                acc * e
            }
            BasisKind::PolyExpCos | BasisKind::PolyExpSin => {
                let lambda = Complex64::new(self.alpha, self.beta);
                let e = (lambda * x).exp();
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..=top {
                    acc += lambda.powi((m - i) as i32)
                        * (binomial(m, i) * falling(j, i) * x.powi((j - i) as i32));
                }
                let z = acc * e;
                if self.kind == BasisKind::PolyExpCos {
                    z.re
                } else {
                    z.im
                }
            }
        }
    }
}

impl fmt::Display for RealBasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.power {
            0 => {}
            1 => parts.push("x".to_string()),
            p => parts.push(format!("x^{p}")),
        }
        if self.alpha != 0.0 {
            parts.push(format!("e^({}x)", self.alpha));
        }
        match self.kind {
            BasisKind::PolyExp => {}
            BasisKind::PolyExpCos => parts.push(format!("cos({}x)", self.beta)),
            BasisKind::PolyExpSin => parts.push(format!("sin({}x)", self.beta)),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

fn falling(j: usize, i: usize) -> f64 {
    (0..i).map(|t| (j - t) as f64).product()
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|t| t as f64).product()
}

/// Canonical real-form basis of the space described by `spec`.
pub fn build_space(spec: &Spectrum) -> Vec<RealBasisFunction> {
    let mut out = Vec::with_capacity(spec.dim());
    for e in spec.eigenvalues() {
        if e.im == 0.0 {
            for j in 0..e.mult {
                out.push(RealBasisFunction {
                    kind: BasisKind::PolyExp,
                    power: j,
                    alpha: e.re,
                    beta: 0.0,
                });
            }
        } else if e.im > 0.0 {
            for j in 0..e.mult {
                for kind in [BasisKind::PolyExpCos, BasisKind::PolyExpSin] {
                    out.push(RealBasisFunction {
                        kind,
                        power: j,
                        alpha: e.re,
                        beta: e.im,
                    });
                }
            }
        }
    }
    out
}

/// `π / M_n` with `M_n = max |Im λ_j|`, or `+∞` for a real spectrum.
///
/// An interval shorter than this is sufficient (not necessary) for the space
/// to be an extended Chebyshev system on it.
pub fn mn_bound(spec: &Spectrum) -> f64 {
    let m = spec.max_imag();
    if m > 0.0 {
        std::f64::consts::PI / m
    } else {
        f64::INFINITY
    }
}

/// A finite-dimensional family of functions whose derivatives can be
/// evaluated exactly at any point.
pub trait FunctionFamily: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// `m`-th derivative of every member at `x`.
    fn derivatives_at(&self, x: f64, m: usize) -> Vec<f64>;

    /// Derivatives of orders `0..=m` of every member, indexed `[order][member]`.
    fn jet(&self, x: f64, m: usize) -> Vec<Vec<f64>> {
        (0..=m).map(|j| self.derivatives_at(x, j)).collect()
    }
}

/// Anything with exact derivatives of every order.
pub trait Differentiable {
    fn derivative(&self, x: f64, m: usize) -> f64;

    fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// Derivatives of orders `0..=m` at `x`.
    fn jet(&self, x: f64, m: usize) -> Vec<f64> {
        (0..=m).map(|j| self.derivative(x, j)).collect()
    }
}

/// The space `E_Λ` together with its canonical real basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSpace {
    spectrum: Spectrum,
    functions: Vec<RealBasisFunction>,
}

impl ExpSpace {
    pub fn new(spectrum: Spectrum) -> Self {
        let functions = build_space(&spectrum);
        Self {
            spectrum,
            functions,
        }
    }

    pub fn shared(spectrum: Spectrum) -> Arc<Self> {
        Arc::new(Self::new(spectrum))
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn functions(&self) -> &[RealBasisFunction] {
        &self.functions
    }

    pub fn degree(&self) -> usize {
        self.functions.len() - 1
    }

    /// Position of a basis function in the canonical ordering.
    pub fn index_of(&self, kind: BasisKind, power: usize, alpha: f64, beta: f64) -> Option<usize> {
        self.functions.iter().position(|f| {
            f.kind == kind
                && f.power == power
                && (f.alpha - alpha).abs() <= 1e-12 * (1.0 + alpha.abs())
                && (f.beta - beta).abs() <= 1e-12 * (1.0 + beta.abs())
        })
    }
}

impl FunctionFamily for ExpSpace {
    fn dim(&self) -> usize {
        self.functions.len()
    }

    fn derivatives_at(&self, x: f64, m: usize) -> Vec<f64> {
        self.functions.iter().map(|f| f.derivative(x, m)).collect()
    }
}

/// A coefficient vector over the members of a [`FunctionFamily`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceElement<F = ExpSpace> {
    family: Arc<F>,
    coeffs: Vec<f64>,
}

impl<F: FunctionFamily> SpaceElement<F> {
    pub fn new(family: Arc<F>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != family.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                family.dim(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self { family, coeffs })
    }

    /// The `index`-th member of the family.
    pub fn unit(family: Arc<F>, index: usize) -> Self {
        let mut coeffs = vec![0.0; family.dim()];
        coeffs[index] = 1.0;
        Self { family, coeffs }
    }

    pub fn zero(family: Arc<F>) -> Self {
        let coeffs = vec![0.0; family.dim()];
        Self { family, coeffs }
    }

    pub fn family(&self) -> &Arc<F> {
        &self.family
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            family: self.family.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self * a + other * b`, coefficient-wise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(
            self.coeffs.len(),
            other.coeffs.len(),
            "elements of different families"
        );
        Self {
            family: self.family.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// `‖c‖_1 · max_i |φ_i^{(m)}(x)|`, the magnitude against which
    /// cancellation in `f^{(m)}(x)` is judged.
    pub fn derivative_scale(&self, x: f64, m: usize) -> f64 {
        let l1: f64 = self.coeffs.iter().map(|c| c.abs()).sum();
        let peak = self
            .family
            .derivatives_at(x, m)
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        l1 * peak
    }
}

impl<F: FunctionFamily> Differentiable for SpaceElement<F> {
    fn derivative(&self, x: f64, m: usize) -> f64 {
        self.family
            .derivatives_at(x, m)
            .iter()
            .zip(&self.coeffs)
            .map(|(v, c)| v * c)
            .sum()
    }

    fn jet(&self, x: f64, m: usize) -> Vec<f64> {
        self.family
            .jet(x, m)
            .iter()
            .map(|row| row.iter().zip(&self.coeffs).map(|(v, c)| v * c).sum())
            .collect()
    }
}

impl<F: FunctionFamily> Add for &SpaceElement<F> {
    type Output = SpaceElement<F>;
    fn add(self, rhs: Self) -> SpaceElement<F> {
        self.combine(1.0, rhs, 1.0)
    }
}

impl<F: FunctionFamily> Sub for &SpaceElement<F> {
    type Output = SpaceElement<F>;
    fn sub(self, rhs: Self) -> SpaceElement<F> {
        self.combine(1.0, rhs, -1.0)
    }
}

impl<F: FunctionFamily> Mul<f64> for &SpaceElement<F> {
    type Output = SpaceElement<F>;
    fn mul(self, rhs: f64) -> SpaceElement<F> {
        self.scaled(rhs)
    }
}

/// Named members of exponential-polynomial spaces.
impl SpaceElement<ExpSpace> {
    fn named(space: &Arc<ExpSpace>, kind: BasisKind, power: usize, alpha: f64, beta: f64, what: &str) -> Result<Self> {
        space
            .index_of(kind, power, alpha, beta)
            .map(|i| Self::unit(space.clone(), i))
            .ok_or_else(|| Error::NotInSpace(format!("{what} is not in {}", space.spectrum())))
    }

    /// `e^{λx}` for a real eigenvalue `λ`.
    pub fn exp(space: &Arc<ExpSpace>, lambda: f64) -> Result<Self> {
        Self::named(space, BasisKind::PolyExp, 0, lambda, 0.0, &format!("e^({lambda}x)"))
    }

    /// `x e^{λx}`; needs `λ` with multiplicity at least two.
    pub fn x_exp(space: &Arc<ExpSpace>, lambda: f64) -> Result<Self> {
        Self::named(space, BasisKind::PolyExp, 1, lambda, 0.0, &format!("x·e^({lambda}x)"))
    }

    pub fn one(space: &Arc<ExpSpace>) -> Result<Self> {
        Self::exp(space, 0.0)
    }

    pub fn x(space: &Arc<ExpSpace>) -> Result<Self> {
        Self::x_exp(space, 0.0)
    }

    pub fn cos(space: &Arc<ExpSpace>) -> Result<Self> {
        Self::named(space, BasisKind::PolyExpCos, 0, 0.0, 1.0, "cos(x)")
    }

    pub fn sin(space: &Arc<ExpSpace>) -> Result<Self> {
        Self::named(space, BasisKind::PolyExpSin, 0, 0.0, 1.0, "sin(x)")
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.family.spectrum()
    }

    /// If `self = c · e^{λx}` with `c > 0` and real `λ`, returns `λ`.
    pub fn as_positive_exponential(&self) -> Option<f64> {
        let mut found = None;
        for (c, f) in self.coeffs.iter().zip(self.family.functions()) {
            if *c == 0.0 {
                continue;
            }
            if found.is_some() || f.kind != BasisKind::PolyExp || f.power != 0 || *c < 0.0 {
                return None;
            }
            found = Some(f.alpha);
        }
        found
    }
}

/// `(f/g)^{(m)}` from the jets of `f` and `g` at one point.
///
/// Leibniz on `f = g · (f/g)` gives
/// `q_m = (f_m - Σ_{j=1..m} C(m,j) g_j q_{m-j}) / g_0`.
pub fn quotient_jet(f: &[f64], g: &[f64], floor: f64) -> Option<Vec<f64>> {
    let m = f.len().min(g.len());
    if m == 0 {
        return Some(Vec::new());
    }
    if !(g[0].abs() >= floor) {
        return None;
    }
    let mut q = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = f[k];
        for j in 1..=k {
            acc -= binomial(k, j) * g[j] * q[k - j];
        }
        q.push(acc / g[0]);
    }
    Some(q)
}

/// `(f/g)^{(m)}(x)` via the Leibniz recurrence.
pub fn quotient_deriv<N, D>(f: &N, g: &D, x: f64, m: usize) -> Result<f64>
where
    N: Differentiable + ?Sized,
    D: Differentiable + ?Sized,
{
    quotient_deriv_with_floor(f, g, x, m, 1e-300)
}

pub fn quotient_deriv_with_floor<N, D>(f: &N, g: &D, x: f64, m: usize, floor: f64) -> Result<f64>
where
    N: Differentiable + ?Sized,
    D: Differentiable + ?Sized,
{
    let gj = g.jet(x, m);
    let fj = f.jet(x, m);
    quotient_jet(&fj, &gj, floor)
        .map(|q| q[m])
        .ok_or(Error::DivisionByZero { x, value: gj[0] })
}

/// `x ↦ (num/den)^{(order)}(x)` as a differentiable function.
///
/// Evaluates to NaN where `den` vanishes; callers audit `den ≠ 0` first.
#[derive(Debug, Clone, Copy)]
pub struct QuotientDerivative<'a, N: ?Sized, D: ?Sized> {
    pub num: &'a N,
    pub den: &'a D,
    pub order: usize,
}

impl<N: Differentiable + ?Sized, D: Differentiable + ?Sized> Differentiable
    for QuotientDerivative<'_, N, D>
{
    fn derivative(&self, x: f64, m: usize) -> f64 {
        self.jet(x, m)[m]
    }

    fn jet(&self, x: f64, m: usize) -> Vec<f64> {
        let top = m + self.order;
        match quotient_jet(&self.num.jet(x, top), &self.den.jet(x, top), 1e-300) {
            Some(q) => q[self.order..].to_vec(),
            None => vec![f64::NAN; m + 1],
        }
    }
}

/// A closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr", into = "IntervalRepr")]
pub struct Interval {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    a: f64,
    b: f64,
}

impl TryFrom<IntervalRepr> for Interval {
    type Error = Error;
    fn try_from(r: IntervalRepr) -> Result<Self> {
        Interval::new(r.a, r.b)
    }
}

impl From<Interval> for IntervalRepr {
    fn from(i: Interval) -> Self {
        IntervalRepr { a: i.a, b: i.b }
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidInterval { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// `points` equispaced points including both endpoints.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        match points {
            0 => Vec::new(),
            1 => vec![self.a],
            _ => {
                let last = points - 1;
                (0..points)
                    .map(|i| {
                        if i == last {
                            self.b
                        } else {
                            self.a + self.length() * i as f64 / last as f64
                        }
                    })
                    .collect()
            }
        }
    }

    /// `points` Chebyshev–Lobatto points, endpoints included, ascending.
    pub fn chebyshev_lobatto(&self, points: usize) -> Vec<f64> {
        if points < 2 {
            return vec![0.5 * (self.a + self.b); points];
        }
        let last = points - 1;
        let mid = 0.5 * (self.a + self.b);
        let half = 0.5 * self.length();
        (0..points)
            .map(|i| match i {
                0 => self.a,
                i if i == last => self.b,
                _ => mid - half * (std::f64::consts::PI * i as f64 / last as f64).cos(),
            })
            .collect()
    }
}

/// Outcome of the randomized extended-Chebyshev audit.
#[derive(Debug, Clone, Serialize)]
pub struct EctReport {
    /// No sampled element exceeded `n` zeros.
    pub passed: bool,
    pub degree: usize,
    /// Largest zero count seen over all samples.
    pub max_zeros: usize,
    pub samples: usize,
    /// Coefficients of the first element found with too many zeros.
    pub witness: Option<Vec<f64>>,
    pub witness_zeros: Option<usize>,
}

/// Randomized evidence that `E_Λ` is an extended Chebyshev space on `iv`.
///
/// Each canonical basis function is probed first, followed by `trials`
/// random unit coefficient vectors. Zeros are counted on a uniform grid:
/// sign changes, exact zeros at grid points with their multiplicity read off
/// the analytic derivatives, and near-tangencies (a tiny local minimum of
/// `|f|` across which `f'` changes sign) counted as double zeros. A `true`
/// result is evidence, not proof.
pub fn verify_ect_heuristic(
    spec: &Spectrum,
    iv: Interval,
    trials: usize,
    grid: usize,
    seed: u64,
) -> Result<EctReport> {
    let space = ExpSpace::shared(spec.clone());
    let n = space.degree();
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if grid < 10 * (n + 1) {
        return Err(Error::InvalidArgument(format!(
            "grid of {grid} points is below 10(n+1) = {}",
            10 * (n + 1)
        )));
    }
    let xs = iv.grid(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EctReport {
        passed: true,
        degree: n,
        max_zeros: 0,
        samples: 0,
        witness: None,
        witness_zeros: None,
    };
    let probes = (0..=n).map(|i| SpaceElement::unit(space.clone(), i).coeffs);
    let random: Vec<Vec<f64>> = (0..trials)
        .map(|_| {
            let v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|c| c / norm).collect()
        })
        .collect();
    for coeffs in probes.chain(random) {
        let f = SpaceElement {
            family: space.clone(),
            coeffs,
        };
        let Some(zeros) = count_zeros(&f, &xs) else {
            continue;
        };
        report.samples += 1;
        report.max_zeros = report.max_zeros.max(zeros);
        if zeros > n && report.passed {
            report.passed = false;
            report.witness_zeros = Some(zeros);
            report.witness = Some(f.coeffs.clone());
        }
    }
    Ok(report)
}

/// Heuristic zero count with multiplicity; `None` if `f` vanishes on the grid.
fn count_zeros(f: &SpaceElement, xs: &[f64]) -> Option<usize> {
    let dim = f.family.dim();
    let vals: Vec<f64> = xs.iter().map(|&x| f.value(x)).collect();
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let is_zero = |x: f64, m: usize, v: f64| v.abs() <= 1e-10 * f.derivative_scale(x, m);

    let mut zeros = 0;
    let mut last_sign = 0.0;
    let mut zero_since_sign = false;
    for (&x, &v) in xs.iter().zip(&vals) {
        if is_zero(x, 0, v) {
            let mut mult = 1;
            while mult < dim && is_zero(x, mult, f.derivative(x, mult)) {
                mult += 1;
            }
            zeros += mult;
            zero_since_sign = true;
            continue;
        }
        let s = v.signum();
        if last_sign != 0.0 && s != last_sign && !zero_since_sign {
            zeros += 1;
        }
        last_sign = s;
        zero_since_sign = false;
    }

    for i in 1..xs.len().saturating_sub(1) {
        let (l, c, r) = (vals[i - 1], vals[i], vals[i + 1]);
        let same_sign = l.signum() == c.signum() && c.signum() == r.signum() && c != 0.0;
        if same_sign
            && c.abs() < l.abs()
            && c.abs() <= r.abs()
            && c.abs() < 1e-3 * scale
            && !is_zero(xs[i], 0, c)
        {
            let dl = f.derivative(xs[i - 1], 1);
            let dr = f.derivative(xs[i + 1], 1);
            if dl.signum() != dr.signum() {
                zeros += 2;
            }
        }
    }
    Some(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn u4() -> Spectrum {
        let mut e = vec![Eigenvalue::real(0.0, 3)];
        e.extend(Eigenvalue::conjugate_pair(0.0, 1.0, 1));
        Spectrum::new(e).unwrap()
    }

    fn trig() -> Arc<ExpSpace> {
        let mut e = vec![Eigenvalue::real(0.0, 1)];
        e.extend(Eigenvalue::conjugate_pair(0.0, 1.0, 1));
        ExpSpace::shared(Spectrum::new(e).unwrap())
    }

    #[test]
    fn polynomial_space_is_monomials() {
        let b = build_space(&Spectrum::polynomial(4).unwrap());
        assert_eq!(b.len(), 5);
        for (j, f) in b.iter().enumerate() {
            assert_eq!((f.kind, f.power, f.alpha), (BasisKind::PolyExp, j, 0.0));
        }
    }

    #[test]
    fn u4_basis_order() {
        let names: Vec<String> = build_space(&u4()).iter().map(|f| f.to_string()).collect();
        assert_eq!(names, ["1", "x", "x^2", "cos(1x)", "sin(1x)"]);
    }

    #[test]
    fn lone_complex_eigenvalue_rejected() {
        let err = Spectrum::new(vec![
            Eigenvalue { re: 0.0, im: 1.0, mult: 1 },
            Eigenvalue::real(0.0, 1),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::ConjugationViolation { .. }));
        let err = Spectrum::new(vec![Eigenvalue { re: 0.0, im: 1.0, mult: 2 }]).unwrap_err();
        assert!(matches!(err, Error::ConjugationViolation { .. }));
    }

    #[test]
    fn spectrum_rejects_duplicates_and_tiny_dimension() {
        assert!(Spectrum::new(vec![Eigenvalue::real(1.0, 1), Eigenvalue::real(1.0, 1)]).is_err());
        assert!(Spectrum::new(vec![Eigenvalue::real(1.0, 1)]).is_err());
        assert!(Spectrum::new(vec![Eigenvalue::real(1.0, 0), Eigenvalue::real(0.0, 2)]).is_err());
    }

    #[test]
    fn spectrum_json_roundtrip_is_canonical() {
        let json = r#"{"eigenvalues":[{"re":0.0,"im":-1.0,"mult":1},{"re":0.0,"im":0.0,"mult":3},{"re":0.0,"im":1.0,"mult":1}]}"#;
        let s: Spectrum = serde_json::from_str(json).unwrap();
        assert_eq!(s, u4());
        let back = serde_json::to_string(&s).unwrap();
        let again: Spectrum = serde_json::from_str(&back).unwrap();
        assert_eq!(again, s);
        let bad = r#"{"eigenvalues":[{"re":0.0,"im":1.0,"mult":1}]}"#;
        assert!(serde_json::from_str::<Spectrum>(bad).is_err());
    }

    #[test]
    fn from_real_exponents_merges_repeats() {
        let s = Spectrum::from_real_exponents(&[2.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.real_multiplicity(0.0), Some(2));
    }

    #[test]
    fn deriv_eval_examples() {
        let t = trig();
        let cos = SpaceElement::cos(&t).unwrap();
        assert_relative_eq!(cos.derivative(PI, 0), -1.0, epsilon = 1e-15);

        let s = ExpSpace::shared(Spectrum::from_real_exponents(&[1.0, 1.0, 1.0]).unwrap());
        let x2ex = SpaceElement::unit(s, 2);
        assert_relative_eq!(x2ex.derivative(0.0, 2), 2.0, epsilon = 1e-15);

        let u = ExpSpace::shared(u4());
        let p44 = SpaceElement::new(u, vec![-1.0, 0.0, 0.5, 1.0, 0.0]).unwrap();
        assert_relative_eq!(p44.derivative(0.0, 4), 1.0, epsilon = 1e-15);
        assert_eq!(p44.derivative(0.0, 0), 0.0);
    }

    #[test]
    fn damped_trig_derivative_matches_hand_expansion() {
        // d/dx [x e^{-x/2} sin 3x] = e^{-x/2}(sin 3x - x/2 sin 3x + 3x cos 3x)
        let f = RealBasisFunction {
            kind: BasisKind::PolyExpSin,
            power: 1,
            alpha: -0.5,
            beta: 3.0,
        };
        let x = 0.7_f64;
        let expected =
            (-0.5 * x).exp() * ((3.0 * x).sin() - 0.5 * x * (3.0 * x).sin() + 3.0 * x * (3.0 * x).cos());
        assert_relative_eq!(f.derivative(x, 1), expected, max_relative = 1e-14);
    }

    #[test]
    fn quotient_deriv_examples() {
        let p = ExpSpace::shared(Spectrum::polynomial(1).unwrap());
        let x = SpaceElement::x(&p).unwrap();
        let one = SpaceElement::one(&p).unwrap();
        assert_relative_eq!(quotient_deriv(&x, &one, 0.37, 1).unwrap(), 1.0);

        let t = trig();
        let sin = SpaceElement::sin(&t).unwrap();
        let cos = SpaceElement::cos(&t).unwrap();
        assert_relative_eq!(quotient_deriv(&sin, &cos, 0.0, 1).unwrap(), 1.0, epsilon = 1e-15);

        let e = ExpSpace::shared(Spectrum::from_real_exponents(&[1.0, 2.0]).unwrap());
        let e2 = SpaceElement::exp(&e, 2.0).unwrap();
        let e1 = SpaceElement::exp(&e, 1.0).unwrap();
        // oracle: f/g = e^x, every derivative is e^0.3
        let oracle = 0.3_f64.exp();
        assert_relative_eq!(quotient_deriv(&e2, &e1, 0.3, 3).unwrap(), oracle, max_relative = 1e-13);
    }

    #[test]
    fn quotient_by_zero_is_reported() {
        let t = trig();
        let sin = SpaceElement::sin(&t).unwrap();
        let cos = SpaceElement::cos(&t).unwrap();
        assert!(matches!(
            quotient_deriv(&cos, &sin, 0.0, 1),
            Err(Error::DivisionByZero { .. })
        ));
    }

    #[test]
    fn mn_bound_examples() {
        assert_relative_eq!(mn_bound(&u4()), PI);
        assert_eq!(mn_bound(&Spectrum::from_real_exponents(&[0.0, 1.0]).unwrap()), f64::INFINITY);
        let s = Spectrum::new(Eigenvalue::conjugate_pair(0.5, 2.0, 1).to_vec()).unwrap();
        assert_relative_eq!(mn_bound(&s), PI / 2.0);
    }

    #[test]
    fn ect_heuristic_examples() {
        let cubic = Spectrum::polynomial(3).unwrap();
        let r = verify_ect_heuristic(&cubic, Interval::new(0.0, 1.0).unwrap(), 1000, 400, 7).unwrap();
        assert!(r.passed, "{r:?}");

        let cs = Spectrum::new(Eigenvalue::conjugate_pair(0.0, 1.0, 1).to_vec()).unwrap();
        let r = verify_ect_heuristic(&cs, Interval::new(0.0, 3.5).unwrap(), 100, 400, 7).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness.as_deref(), Some(&[0.0, 1.0][..]), "sin is the first witness");
        assert_eq!(r.witness_zeros, Some(2));

        let r = verify_ect_heuristic(trig().spectrum(), Interval::new(0.0, 5.0).unwrap(), 1000, 500, 7)
            .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn ect_heuristic_rejects_coarse_grid() {
        let s = Spectrum::polynomial(3).unwrap();
        assert!(verify_ect_heuristic(&s, Interval::new(0.0, 1.0).unwrap(), 1, 39, 0).is_err());
    }

    #[test]
    fn lobatto_points_include_endpoints() {
        let iv = Interval::new(-1.0, 3.0).unwrap();
        let p = iv.chebyshev_lobatto(5);
        assert_eq!(p[0], -1.0);
        assert_eq!(p[4], 3.0);
        assert_relative_eq!(p[2], 1.0, epsilon = 1e-15);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    fn random_space() -> impl Strategy<Value = Arc<ExpSpace>> {
        (
            prop::collection::vec(-4.0..4.0f64, 1..3),
            prop::option::of((-4.0..4.0f64, 0.2..4.0f64)),
            1usize..3,
        )
            .prop_filter_map("valid spectrum", |(reals, pair, mult)| {
                let mut e: Vec<Eigenvalue> = reals.iter().map(|&r| Eigenvalue::real(r, mult)).collect();
                if let Some((re, im)) = pair {
                    e.extend(Eigenvalue::conjugate_pair(re, im, 1));
                }
                Spectrum::new(e).ok().map(ExpSpace::shared)
            })
    }

    fn element_in(space: Arc<ExpSpace>) -> impl Strategy<Value = SpaceElement> {
        let d = space.dim();
        prop::collection::vec(-1.0..1.0f64, d)
            .prop_map(move |c| SpaceElement::new(space.clone(), c).unwrap())
    }

    proptest! {
        #[test]
        fn derivative_is_linear(
            (f, g) in random_space().prop_flat_map(|s| (element_in(s.clone()), element_in(s))),
            c1 in -3.0..3.0f64, c2 in -3.0..3.0f64,
            x in -1.0..1.0f64, m in 0usize..=8,
        ) {
            let h = f.combine(c1, &g, c2);
            let lhs = h.derivative(x, m);
            let rhs = c1 * f.derivative(x, m) + c2 * g.derivative(x, m);
            let scale = (c1 * f.derivative(x, m)).abs() + (c2 * g.derivative(x, m)).abs();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn first_derivative_matches_central_difference(
            f in random_space().prop_flat_map(element_in),
            x in -1.0..1.0f64,
        ) {
            let h = 1e-6;
            let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let exact = f.derivative(x, 1);
            // roundoff of the difference quotient ~ eps * |f| / h
            let floor = 1e-9 * f.derivative_scale(x, 0).max(f.derivative_scale(x, 1));
            prop_assume!(exact.abs() > floor * 1e3);
            prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs());
        }

        #[test]
        fn quotient_recurrence_matches_finite_difference(
            (f, g) in random_space().prop_flat_map(|s| (element_in(s.clone()), element_in(s))),
            x in -1.0..1.0f64,
        ) {
            let gx = g.value(x);
            prop_assume!(gx.abs() > 0.1 * g.derivative_scale(x, 0).max(1e-12));
            let ratio = |t: f64| f.value(t) / g.value(t);
            let h = 1e-6;
            prop_assume!(g.value(x - h).signum() == gx.signum() && g.value(x + h).signum() == gx.signum());
            let fd = (ratio(x + h) - ratio(x - h)) / (2.0 * h);
            let exact = quotient_deriv(&f, &g, x, 1).unwrap();
            prop_assume!(exact.abs() > 1e-3 * (ratio(x).abs() + 1.0));
            prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs());
        }

        #[test]
        fn quotient_of_element_by_itself(
            f in random_space().prop_flat_map(element_in),
            x in -1.0..1.0f64, m in 0usize..=6,
        ) {
            prop_assume!(f.value(x).abs() > 1e-3);
            let q = quotient_deriv(&f, &f, x, m).unwrap();
            let expected = if m == 0 { 1.0 } else { 0.0 };
            prop_assert!((q - expected).abs() <= 1e-13, "q = {q}");
        }
    }
}
