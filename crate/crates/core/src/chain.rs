//! The space `D_{f0}U = {(f/f0)' : f ∈ U}` and the constants linking its
//! Bernstein basis `q_{n-1,k}` to `p_{n,k}`:
//!
//! ```text
//! (p_{n,k}/f0)' = c_k q_{n-1,k-1} + d_k q_{n-1,k}
//! (f1/f0)'      = Σ w_k q_{n-1,k}
//! ```

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::basis::{build_bernstein_basis_for, BernsteinBasis};
use crate::error::{Error, Result};
use crate::expspace::{
    quotient_jet, Differentiable, Eigenvalue, ExpSpace, FunctionFamily, Interval, QuotientDerivative, SpaceElement,
    Spectrum,
};
use crate::operator::{expand_in_basis, ExpansionCoeffs};
use crate::tolerances::Tolerances;

/// `D_{e^{λ0 x}} E_Λ = E_{Λ - λ0}` with one copy of `0` removed.
pub fn shift_spectrum(spec: &Spectrum, lambda0: f64) -> Result<Spectrum> {
    let close = |re: f64| (re - lambda0).abs() <= 1e-12 * lambda0.abs().max(1.0);
    let mut found = false;
    let mut shifted = Vec::with_capacity(spec.eigenvalues().len());
    for e in spec.eigenvalues() {
        let mut mult = e.mult;
        if !found && e.im == 0.0 && close(e.re) {
            found = true;
            mult -= 1;
        }
        if mult > 0 {
            let re = if e.im == 0.0 && close(e.re) { 0.0 } else { e.re - lambda0 };
            shifted.push(Eigenvalue { re, im: e.im, mult });
        }
    }
    if !found {
        return Err(Error::NotInSpectrum { lambda: lambda0 });
    }
    Spectrum::with_min_dim(shifted, 1)
}

/// `(b_i/f0)'` for a selection of `n` members of the parent basis.
#[derive(Debug, Clone)]
pub struct QuotientFamily {
    parent: Arc<ExpSpace>,
    f0: SpaceElement,
    members: Vec<usize>,
}

impl QuotientFamily {
    /// Picks `n` independent members by column-pivoted Gram–Schmidt on
    /// endpoint jets and interior samples.
    pub fn new(f0: &SpaceElement, iv: Interval, tol: &Tolerances) -> Result<Self> {
        let parent = f0.family().clone();
        let all = Self {
            parent: parent.clone(),
            f0: f0.clone(),
            members: (0..parent.dim()).collect(),
        };
        let n = parent.dim() - 1;
        if n == 0 {
            return Err(Error::InvalidArgument("derivative space of a one-dimensional space is trivial".into()));
        }

        let mut rows: Vec<Vec<f64>> = Vec::new();
        for x in [iv.a(), iv.b()] {
            rows.extend(all.jet(x, n - 1));
        }
        for x in iv.chebyshev_lobatto(2 * n + 2) {
            rows.push(all.derivatives_at(x, 0));
        }
        let mut m = DMatrix::<f64>::zeros(rows.len(), n + 1);
        for (i, r) in rows.iter().enumerate() {
            let s = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let s = if s > 0.0 { 1.0 / s } else { 1.0 };
            for (j, v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::DivisionByZero { x: f64::NAN, value: 0.0 });
                }
                m[(i, j)] = v * s;
            }
        }

        let mut chosen = Vec::with_capacity(n);
        let mut first = 0.0;
        let mut remaining: Vec<usize> = (0..=n).collect();
        for step in 0..n {
            let (pos, norm) = remaining
                .iter()
                .enumerate()
                .map(|(p, &j)| (p, m.column(j).norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if step == 0 {
                first = norm;
            }
            let ratio = if first > 0.0 { norm / first } else { 0.0 };
            if !(ratio > tol.rank) {
                return Err(Error::RankDeficiency { expected: n, pivot: ratio });
            }
            let j = remaining.swap_remove(pos);
            let u = m.column(j) / norm;
            for &other in &remaining {
                let proj = u.dot(&m.column(other));
                let mut col = m.column_mut(other);
                col.axpy(-proj, &u, 1.0);
            }
            chosen.push(j);
        }
        chosen.sort_unstable();
        Ok(Self {
            parent,
            f0: f0.clone(),
            members: chosen,
        })
    }

    /// Indices of the selected parent basis functions.
    pub fn members(&self) -> &[usize] {
        &self.members
    }
}

impl FunctionFamily for QuotientFamily {
    fn dim(&self) -> usize {
        self.members.len()
    }

    fn derivatives_at(&self, x: f64, m: usize) -> Vec<f64> {
        self.jet(x, m).pop().expect("non-empty jet")
    }

    fn jet(&self, x: f64, m: usize) -> Vec<Vec<f64>> {
        let top = m + 1;
        let g = self.f0.jet(x, top);
        let parent = self.parent.jet(x, top);
        let mut out = vec![Vec::with_capacity(self.members.len()); m + 1];
        for &i in &self.members {
            let f: Vec<f64> = parent.iter().map(|row| row[i]).collect();
            match quotient_jet(&f, &g, 1e-300) {
                Some(q) => out.iter_mut().zip(&q[1..]).for_each(|(o, v)| o.push(*v)),
                None => out.iter_mut().for_each(|o| o.push(f64::NAN)),
            }
        }
        out
    }
}

/// The two concrete representations of `D_{f0}U`.
#[derive(Debug, Clone)]
pub enum DerivedFamily {
    /// Closed form for `f0 = c e^{λ0 x}`.
    ShiftedSpectrum(ExpSpace),
    QuotientFamily(QuotientFamily),
}

impl DerivedFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DerivedFamily::ShiftedSpectrum(_) => "shifted_spectrum",
            DerivedFamily::QuotientFamily(_) => "quotient_family",
        }
    }
}

impl FunctionFamily for DerivedFamily {
    fn dim(&self) -> usize {
        match self {
            DerivedFamily::ShiftedSpectrum(s) => s.dim(),
            DerivedFamily::QuotientFamily(q) => q.dim(),
        }
    }

    fn derivatives_at(&self, x: f64, m: usize) -> Vec<f64> {
        match self {
            DerivedFamily::ShiftedSpectrum(s) => s.derivatives_at(x, m),
            DerivedFamily::QuotientFamily(q) => q.derivatives_at(x, m),
        }
    }

    fn jet(&self, x: f64, m: usize) -> Vec<Vec<f64>> {
        match self {
            DerivedFamily::ShiftedSpectrum(s) => s.jet(x, m),
            DerivedFamily::QuotientFamily(q) => q.jet(x, m),
        }
    }
}

/// `D_{f0}U` on an interval together with its Bernstein basis `q_{n-1,k}`.
#[derive(Debug, Clone)]
pub struct DerivedSpace {
    pub parent: Spectrum,
    pub f0: SpaceElement,
    pub basis: BernsteinBasis<DerivedFamily>,
    /// Largest relative deviation between the two representations, when both exist.
    pub agreement: Option<f64>,
}

impl DerivedSpace {
    pub fn family(&self) -> &DerivedFamily {
        self.basis.family()
    }
}

/// Builds `D_{f0}U` and its Bernstein basis, preferring the closed form.
pub fn derived_space(f0: &SpaceElement, iv: Interval, tol: &Tolerances) -> Result<DerivedSpace> {
    let quotient = || -> Result<BernsteinBasis<DerivedFamily>> {
        let fam = QuotientFamily::new(f0, iv, tol)?;
        build_bernstein_basis_for(Arc::new(DerivedFamily::QuotientFamily(fam)), iv, tol)
    };
    let parent = f0.spectrum().clone();
    let Some(lambda0) = f0.as_positive_exponential() else {
        return Ok(DerivedSpace {
            parent,
            f0: f0.clone(),
            basis: quotient()?,
            agreement: None,
        });
    };
    let shifted = ExpSpace::new(shift_spectrum(&parent, lambda0)?);
    let basis = build_bernstein_basis_for(Arc::new(DerivedFamily::ShiftedSpectrum(shifted)), iv, tol)?;
    let deviation = basis_agreement(&basis, &quotient()?, 200);
    if !(deviation <= 1e-7) {
        return Err(Error::RepresentationMismatch { deviation });
    }
    Ok(DerivedSpace {
        parent,
        f0: f0.clone(),
        basis,
        agreement: Some(deviation),
    })
}

/// Builds `D_{f0}U` through the quotient family only.
pub fn derived_space_quotient(f0: &SpaceElement, iv: Interval, tol: &Tolerances) -> Result<DerivedSpace> {
    let fam = QuotientFamily::new(f0, iv, tol)?;
    Ok(DerivedSpace {
        parent: f0.spectrum().clone(),
        f0: f0.clone(),
        basis: build_bernstein_basis_for(Arc::new(DerivedFamily::QuotientFamily(fam)), iv, tol)?,
        agreement: None,
    })
}

/// Largest relative deviation between two bases after fitting one positive
/// scalar per function (infinite if a fitted scalar is not positive).
pub fn basis_agreement<F: FunctionFamily, G: FunctionFamily>(
    u: &BernsteinBasis<F>,
    v: &BernsteinBasis<G>,
    grid_points: usize,
) -> f64 {
    if u.degree() != v.degree() {
        return f64::INFINITY;
    }
    let xs = u.interval().grid(grid_points);
    let uv: Vec<Vec<f64>> = xs.iter().map(|&x| u.values_at(x)).collect();
    let vv: Vec<Vec<f64>> = xs.iter().map(|&x| v.values_at(x)).collect();
    let mut worst = 0.0_f64;
    for k in 0..=u.degree() {
        let (mut uu, mut uvd, mut peak) = (0.0, 0.0, 0.0_f64);
        for (a, b) in uv.iter().zip(&vv) {
            uvd += a[k] * b[k];
            uu += b[k] * b[k];
            peak = peak.max(a[k].abs());
        }
        let s = uvd / uu;
        if !(s > 0.0) {
            return f64::INFINITY;
        }
        let dev = uv.iter().zip(&vv).fold(0.0_f64, |m, (a, b)| m.max((a[k] - s * b[k]).abs()));
        worst = worst.max(dev / peak);
    }
    worst
}

/// Endpoint constants `c_1..c_n` and `d_0..d_{n-1}`:
///
/// ```text
/// c_k = p_k^{(k)}(a)   / (f0(a) q_{k-1}^{(k-1)}(a))
/// d_k = p_k^{(n-k)}(b) / (f0(b) q_k^{(n-1-k)}(b))
/// ```
pub fn compute_ck_dk<F, G, D>(
    p_basis: &BernsteinBasis<F>,
    q_basis: &BernsteinBasis<G>,
    f0: &D,
    tol: &Tolerances,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FunctionFamily,
    G: FunctionFamily,
    D: Differentiable + ?Sized,
{
    let n = p_basis.degree();
    if q_basis.degree() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "q-basis degree {} does not match p-basis degree {n}",
            q_basis.degree()
        )));
    }
    let (a, b) = (p_basis.interval().a(), p_basis.interval().b());
    let (f0a, f0b) = (f0.value(a), f0.value(b));
    let checked = |which: String, row: &[f64], j: usize| -> Result<f64> {
        let scale = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let v = row[j];
        if !(v.abs() > tol.degenerate_denominator * scale) {
            return Err(Error::DegenerateDenominator { which, value: v });
        }
        Ok(v)
    };

    let qa = q_basis.jet(a, n - 1);
    let qb = q_basis.jet(b, n - 1);
    let mut c = Vec::with_capacity(n);
    for k in 1..=n {
        let den = checked(format!("c_{k}"), &qa[k - 1], k - 1)?;
        c.push(p_basis.derivatives_at(a, k)[k] / (f0a * den));
    }
    let mut d = Vec::with_capacity(n);
    for k in 0..n {
        let den = checked(format!("d_{k}"), &qb[n - 1 - k], k)?;
        d.push(p_basis.derivatives_at(b, n - k)[k] / (f0b * den));
    }
    Ok((c, d))
}

/// Sup over a uniform grid and all `k` of
/// `|(p_k/f0)' - c_k q_{k-1} - d_k q_k|`, relative to `sup |(p_k/f0)'|`.
pub fn prec_residual<F, G, D>(
    p_basis: &BernsteinBasis<F>,
    q_basis: &BernsteinBasis<G>,
    f0: &D,
    c: &[f64],
    d: &[f64],
    grid_points: usize,
) -> f64
where
    F: FunctionFamily,
    G: FunctionFamily,
    D: Differentiable + ?Sized,
{
    let n = p_basis.degree();
    let xs = p_basis.interval().grid(grid_points);
    let mut worst = 0.0_f64;
    for k in 0..=n {
        let lhs_f = QuotientDerivative {
            num: p_basis.function(k),
            den: f0,
            order: 1,
        };
        let (mut peak, mut dev) = (0.0_f64, 0.0_f64);
        for &x in &xs {
            let q = q_basis.values_at(x);
            let lhs = lhs_f.value(x);
            let mut rhs = 0.0;
            if k > 0 {
                rhs += c[k - 1] * q[k - 1];
            }
            if k < n {
                rhs += d[k] * q[k];
            }
            peak = peak.max(lhs.abs());
            dev = dev.max((lhs - rhs).abs());
        }
        worst = worst.max(if peak > 0.0 { dev / peak } else { dev });
    }
    worst
}

/// `β_0 = f0(a)/p_0(a)`, `β_{k+1} = -β_k d_k / c_{k+1}`.
pub fn beta_via_recursion<F: FunctionFamily, D: Differentiable + ?Sized>(
    c: &[f64],
    d: &[f64],
    f0: &D,
    p_basis: &BernsteinBasis<F>,
) -> Vec<f64> {
    let a = p_basis.interval().a();
    let mut beta = vec![f0.value(a) / p_basis.function(0).value(a)];
    for k in 0..c.len() {
        let next = -beta[k] * d[k] / c[k];
        beta.push(next);
    }
    beta
}

/// Coefficients of `(f1/f0)'` in the q-basis.
pub fn compute_w<G, N, D>(f0: &D, f1: &N, q_basis: &BernsteinBasis<G>, tol: &Tolerances) -> Result<Vec<f64>>
where
    G: FunctionFamily,
    N: Differentiable + ?Sized,
    D: Differentiable + ?Sized,
{
    let g = QuotientDerivative { num: f1, den: f0, order: 1 };
    Ok(expand_in_basis(&g, q_basis, tol)?.coeffs)
}

/// Sign pattern of `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sufficiency {
    AllPositive,
    AllNonNegative,
    SomeNegative,
}

impl Sufficiency {
    /// Whether the sign pattern guarantees that the operator exists.
    pub fn guarantees_existence(self) -> bool {
        self != Sufficiency::SomeNegative
    }
}

pub fn sufficiency_check(w: &[f64]) -> Sufficiency {
    sufficiency_check_with(w, Tolerances::default().w_zero)
}

/// Classifies `w / max|w|` with a zero band of `zero`.
pub fn sufficiency_check_with(w: &[f64], zero: f64) -> Sufficiency {
    let scale = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Sufficiency::AllNonNegative;
    }
    if w.iter().any(|v| v / scale < -zero) {
        Sufficiency::SomeNegative
    } else if w.iter().all(|v| v / scale > zero) {
        Sufficiency::AllPositive
    } else {
        Sufficiency::AllNonNegative
    }
}

/// Coefficients of `f1 - h(a) f0` (δ) and `f1 - h(b) f0` (Δ), `h = f1/f0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deltas {
    pub delta: Vec<f64>,
    #[serde(rename = "Delta")]
    pub big_delta: Vec<f64>,
    /// `max |γ| + max(|h(a)|, |h(b)|) max |β|`, the natural size of δ and Δ.
    pub scale: f64,
}

pub fn proof_deltas<D: Differentiable + ?Sized, N: Differentiable + ?Sized>(
    coeffs: &ExpansionCoeffs,
    f0: &D,
    f1: &N,
    iv: Interval,
) -> Deltas {
    let ha = f1.value(iv.a()) / f0.value(iv.a());
    let hb = f1.value(iv.b()) / f0.value(iv.b());
    let delta = coeffs.gamma.iter().zip(&coeffs.beta).map(|(g, b)| g - ha * b).collect();
    let big_delta = coeffs.gamma.iter().zip(&coeffs.beta).map(|(g, b)| g - hb * b).collect();
    let maxabs = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let scale = maxabs(&coeffs.gamma) + ha.abs().max(hb.abs()) * maxabs(&coeffs.beta);
    Deltas { delta, big_delta, scale }
}

/// Consistency of δ, Δ with `c`, `d`, `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaAudit {
    /// `|δ_0| / scale`.
    pub delta_start: f64,
    /// `|Δ_n| / scale`.
    pub big_delta_end: f64,
    /// `max_k |c_{k+1}δ_{k+1} + d_k δ_k - w_k|`, relative.
    pub upward_residual: f64,
    /// `max_k |c_{k+1}Δ_{k+1} + d_k Δ_k - w_k|`, relative.
    pub downward_residual: f64,
    /// `δ_k >= 0 >= Δ_k` up to `1e-10 · scale`; only checked when `w >= 0`.
    pub signs_ok: Option<bool>,
}

impl DeltaAudit {
    pub fn passed(&self, tol: f64) -> bool {
        self.delta_start <= 1e-10
            && self.big_delta_end <= 1e-10
            && self.upward_residual <= tol
            && self.downward_residual <= tol
            && self.signs_ok != Some(false)
    }
}

pub fn audit_deltas(deltas: &Deltas, c: &[f64], d: &[f64], w: &[f64], sufficiency: Sufficiency) -> DeltaAudit {
    let n = c.len();
    let scale = deltas.scale.max(f64::MIN_POSITIVE);
    let recursion = |v: &[f64]| {
        let (mut dev, mut size) = (0.0_f64, 0.0_f64);
        for k in 0..n {
            let (x, y) = (c[k] * v[k + 1], d[k] * v[k]);
            dev = dev.max((x + y - w[k]).abs());
            size = size.max(x.abs() + y.abs() + w[k].abs());
        }
        if size > 0.0 {
            dev / size
        } else {
            dev
        }
    };
    let band = 1e-10 * scale;
    let signs_ok = sufficiency.guarantees_existence().then(|| {
        deltas.delta.iter().all(|&v| v >= -band) && deltas.big_delta.iter().all(|&v| v <= band)
    });
    DeltaAudit {
        delta_start: deltas.delta[0].abs() / scale,
        big_delta_end: deltas.big_delta[n].abs() / scale,
        upward_residual: recursion(&deltas.delta),
        downward_residual: recursion(&deltas.big_delta),
        signs_ok,
    }
}

/// JSON diagnostics dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainData {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub w: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(rename = "Delta")]
    pub big_delta: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// All chain quantities for a configuration, with their cross-checks.
#[derive(Debug, Clone, Serialize)]
pub struct ChainAnalysis {
    pub data: ChainData,
    pub representation: &'static str,
    /// Deviation between the two derived-space representations, if both exist.
    pub agreement: Option<f64>,
    pub sufficiency: Sufficiency,
    /// Residual of `(p_k/f0)' = c_k q_{k-1} + d_k q_k` on 200 points.
    pub prec_residual: f64,
    /// `max |β_rec - β| / max |β|`.
    pub beta_recursion_error: f64,
    pub deltas: DeltaAudit,
}

/// Runs the full chain for `f0`, `f1` on the given p-basis.
pub fn analyze(p_basis: &BernsteinBasis, f0: &SpaceElement, f1: &SpaceElement, tol: &Tolerances) -> Result<ChainAnalysis> {
    let derived = derived_space(f0, p_basis.interval(), tol)?;
    analyze_with(p_basis, &derived, f0, f1, tol)
}

pub fn analyze_with(
    p_basis: &BernsteinBasis,
    derived: &DerivedSpace,
    f0: &SpaceElement,
    f1: &SpaceElement,
    tol: &Tolerances,
) -> Result<ChainAnalysis> {
    let iv = p_basis.interval();
    let q_basis = &derived.basis;
    let (c, d) = compute_ck_dk(p_basis, q_basis, f0, tol)?;
    let prec = prec_residual(p_basis, q_basis, f0, &c, &d, 200);
    let coeffs = ExpansionCoeffs {
        beta: expand_in_basis(f0, p_basis, tol)?.coeffs,
        gamma: expand_in_basis(f1, p_basis, tol)?.coeffs,
    };
    let beta_rec = beta_via_recursion(&c, &d, f0, p_basis);
    let bscale = coeffs.beta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let beta_recursion_error = beta_rec
        .iter()
        .zip(&coeffs.beta)
        .fold(0.0_f64, |m, (r, b)| m.max((r - b).abs()))
        / bscale;
    let w = compute_w(f0, f1, q_basis, tol)?;
    let sufficiency = sufficiency_check_with(&w, tol.w_zero);
    let deltas = proof_deltas(&coeffs, f0, f1, iv);
    let audit = audit_deltas(&deltas, &c, &d, &w, sufficiency);
    Ok(ChainAnalysis {
        data: ChainData {
            c,
            d,
            w,
            delta: deltas.delta,
            big_delta: deltas.big_delta,
            beta: coeffs.beta,
            gamma: coeffs.gamma,
        },
        representation: derived.family().name(),
        agreement: derived.agreement,
        sufficiency,
        prec_residual: prec,
        beta_recursion_error,
        deltas: audit,
    })
}
