//! Bernstein bases for `{a, b}` by confluent endpoint collocation.
//!
//! `p_{n,k}` is the element of an `(n+1)`-dimensional family with a zero of
//! order `k` at `a` and of order `n-k` at `b`. The `n` Hermite conditions
//! form an `n × (n+1)` matrix whose one-dimensional kernel is `p_{n,k}` up
//! to scale; the scale is fixed by `p_{n,k}^{(k)}(a) = k!`.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expspace::{factorial, Differentiable, ExpSpace, FunctionFamily, Interval, SpaceElement, Spectrum};
use crate::linalg::{null_vector, NullspaceError};
use crate::tolerances::Tolerances;

/// Non-fatal conditions attached to a constructed basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisWarning {
    /// The kernel solve for `p_{n,k}` left a relative residual above tolerance.
    IllConditioned { k: usize, residual: f64 },
    /// Degree above the soft cap; expect growing condition numbers.
    HighDegree { degree: usize },
}

/// `p_{n,0}, …, p_{n,n}` over a function family.
#[derive(Debug, Clone)]
pub struct BernsteinBasis<F = ExpSpace> {
    family: Arc<F>,
    iv: Interval,
    functions: Vec<SpaceElement<F>>,
    /// Prescribed `p_{n,k}^{(k)}(a)`; `k!` unless rescaled.
    normalization: Vec<f64>,
    warnings: Vec<BasisWarning>,
    /// Endpoint zeros were imposed by construction.
    exact_zeros: bool,
}

/// Hermite conditions defining `p_{n,k}`: derivatives `0..k` at `a` and
/// `0..n-k` at `b` of every family member, one row per condition.
pub fn collocation_matrix<F: FunctionFamily + ?Sized>(family: &F, iv: Interval, k: usize) -> DMatrix<f64> {
    let dim = family.dim();
    let n = dim - 1;
    assert!(k <= n, "k = {k} exceeds degree {n}");
    let mut m = DMatrix::zeros(n, dim);
    let mut row = 0;
    for (x, orders) in [(iv.a(), k), (iv.b(), n - k)] {
        for j in 0..orders {
            for (c, v) in family.derivatives_at(x, j).into_iter().enumerate() {
                m[(row, c)] = v;
            }
            row += 1;
        }
    }
    m
}

/// Bernstein basis of `E_Λ` on `iv` with default tolerances.
pub fn build_bernstein_basis(space: &Spectrum, iv: Interval) -> Result<BernsteinBasis> {
    build_bernstein_basis_for(ExpSpace::shared(space.clone()), iv, &Tolerances::default())
}

/// Bernstein basis of an arbitrary family.
pub fn build_bernstein_basis_for<F: FunctionFamily>(
    family: Arc<F>,
    iv: Interval,
    tol: &Tolerances,
) -> Result<BernsteinBasis<F>> {
    build_with_ordering(family, iv, tol, None)
}

/// Same as [`build_bernstein_basis_for`] but factorizes with the family's
/// columns shuffled by a seeded permutation. Results must agree with the
/// unshuffled build; used to audit uniqueness.
pub fn build_bernstein_basis_shuffled<F: FunctionFamily>(
    family: Arc<F>,
    iv: Interval,
    tol: &Tolerances,
    seed: u64,
) -> Result<BernsteinBasis<F>> {
    build_with_ordering(family, iv, tol, Some(seed))
}

fn build_with_ordering<F: FunctionFamily>(
    family: Arc<F>,
    iv: Interval,
    tol: &Tolerances,
    seed: Option<u64>,
) -> Result<BernsteinBasis<F>> {
    let dim = family.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty function family".into()));
    }
    let n = dim - 1;
    if n > tol.hard_degree_cap {
        return Err(Error::DegreeTooLarge {
            degree: n,
            cap: tol.hard_degree_cap,
        });
    }
    let mut warnings = Vec::new();
    if n > tol.soft_degree_cap {
        warnings.push(BasisWarning::HighDegree { degree: n });
    }
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);

    let mut functions = Vec::with_capacity(dim);
    for k in 0..=n {
        let rows = collocation_matrix(family.as_ref(), iv, k);
        let perm = rng.as_mut().map(|r| {
            let mut p: Vec<usize> = (0..dim).collect();
            p.shuffle(r);
            p
        });
        let kernel = null_vector(&rows, tol.rank, perm.as_deref()).map_err(|e| match e {
            NullspaceError::RankDeficient(ratio) => Error::NotChebyshevAtEndpoints {
                k,
                reason: format!("kernel dimension above one (singular value ratio {ratio:e})"),
            },
        })?;
        let v = kernel.vector;

        let lead_row = family.derivatives_at(iv.a(), k);
        let lead = dot(&lead_row, &v);
        if lead.abs() <= tol.rank * norm(&lead_row) {
            return Err(Error::NotChebyshevAtEndpoints {
                k,
                reason: format!("derivative of order {k} also vanishes at a = {}", iv.a()),
            });
        }
        let trail_row = family.derivatives_at(iv.b(), n - k);
        if dot(&trail_row, &v).abs() <= tol.rank * norm(&trail_row) {
            return Err(Error::NotChebyshevAtEndpoints {
                k,
                reason: format!("derivative of order {} also vanishes at b = {}", n - k, iv.b()),
            });
        }
        if kernel.residual > tol.basis_residual {
            warnings.push(BasisWarning::IllConditioned {
                k,
                residual: kernel.residual,
            });
        }
        let s = factorial(k) / lead;
        functions.push(SpaceElement::new(family.clone(), v.iter().map(|c| c * s).collect())?);
    }
    Ok(BernsteinBasis {
        family,
        iv,
        functions,
        normalization: (0..=n).map(factorial).collect(),
        warnings,
        exact_zeros: true,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl<F: FunctionFamily> BernsteinBasis<F> {
    /// Wrap externally supplied functions (for instance closed forms).
    /// Nothing is verified; use [`verify_zero_orders`].
    pub fn from_functions(family: Arc<F>, iv: Interval, functions: Vec<SpaceElement<F>>) -> Result<Self> {
        if functions.len() != family.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} functions for a family of dimension {}",
                functions.len(),
                family.dim()
            )));
        }
        let normalization = functions
            .iter()
            .enumerate()
            .map(|(k, p)| p.derivative(iv.a(), k))
            .collect();
        Ok(Self {
            family,
            iv,
            functions,
            normalization,
            warnings: Vec::new(),
            exact_zeros: false,
        })
    }

    pub fn degree(&self) -> usize {
        self.functions.len() - 1
    }

    pub fn interval(&self) -> Interval {
        self.iv
    }

    pub fn family(&self) -> &Arc<F> {
        &self.family
    }

    pub fn functions(&self) -> &[SpaceElement<F>] {
        &self.functions
    }

    pub fn function(&self, k: usize) -> &SpaceElement<F> {
        &self.functions[k]
    }

    /// Prescribed values of `p_{n,k}^{(k)}(a)`.
    pub fn normalization(&self) -> &[f64] {
        &self.normalization
    }

    pub fn warnings(&self) -> &[BasisWarning] {
        &self.warnings
    }

    /// `p_{n,k} ↦ s_k p_{n,k}`.
    pub fn rescaled(&self, scales: &[f64]) -> Self {
        assert_eq!(scales.len(), self.functions.len());
        Self {
            family: self.family.clone(),
            iv: self.iv,
            functions: self.functions.iter().zip(scales).map(|(p, s)| p.scaled(*s)).collect(),
            normalization: self.normalization.iter().zip(scales).map(|(v, s)| v * s).collect(),
            warnings: self.warnings.clone(),
            exact_zeros: self.exact_zeros,
        }
    }

    /// Derivatives of order `m` of every `p_{n,k}` at `x`; the zeros of
    /// order `k` at `a` and `n - k` at `b` are returned exactly.
    pub fn derivatives_at(&self, x: f64, m: usize) -> Vec<f64> {
        let fam = self.family.derivatives_at(x, m);
        let mut row: Vec<f64> = self.functions.iter().map(|p| dot(p.coeffs(), &fam)).collect();
        self.mask_endpoint_zeros(x, m, &mut row);
        row
    }

    fn mask_endpoint_zeros(&self, x: f64, m: usize, row: &mut [f64]) {
        let n = self.degree();
        if !self.exact_zeros {
            return;
        }
        if x == self.iv.a() {
            row.iter_mut().skip(m + 1).for_each(|v| *v = 0.0);
        } else if x == self.iv.b() {
            row.iter_mut().take(n.saturating_sub(m)).for_each(|v| *v = 0.0);
        }
    }

    pub fn values_at(&self, x: f64) -> Vec<f64> {
        self.derivatives_at(x, 0)
    }

    /// Derivatives of orders `0..=m` of every `p_{n,k}`, indexed `[order][k]`.
    pub fn jet(&self, x: f64, m: usize) -> Vec<Vec<f64>> {
        self.family
            .jet(x, m)
            .iter()
            .enumerate()
            .map(|(j, fam)| {
                let mut row: Vec<f64> = self.functions.iter().map(|p| dot(p.coeffs(), fam)).collect();
                self.mask_endpoint_zeros(x, j, &mut row);
                row
            })
            .collect()
    }

    /// `x, p_0(x), …, p_n(x)` on a uniform grid, 17 significant digits.
    pub fn to_csv(&self, grid_points: usize) -> String {
        let mut out = String::from("x");
        for k in 0..=self.degree() {
            write!(out, ",p_{k}").unwrap();
        }
        out.push('\n');
        for x in self.iv.grid(grid_points) {
            out.push_str(&fmt_f64(x));
            for v in self.values_at(x) {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Outcome of [`verify_zero_orders`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroOrderReport {
    pub ok: bool,
    /// Largest normalized residual over all conditions.
    pub worst_residual: f64,
}

/// Checks every defining zero, the normalization and the nonvanishing of
/// `p_{n,k}^{(n-k)}(b)`. Residuals are normalized by `‖c‖_1 · max_i |φ_i^{(j)}(x)|`.
pub fn verify_zero_orders<F: FunctionFamily>(basis: &BernsteinBasis<F>) -> ZeroOrderReport {
    const TOL: f64 = 1e-8;
    let n = basis.degree();
    let (a, b) = (basis.iv.a(), basis.iv.b());
    let mut worst = 0.0_f64;
    let mut ok = true;
    for (k, p) in basis.functions.iter().enumerate() {
        let scaled = |x: f64, j: usize| {
            let s = p.derivative_scale(x, j);
            let v = p.derivative(x, j);
            if s > 0.0 {
                v.abs() / s
            } else {
                v.abs()
            }
        };
        for j in 0..k {
            worst = worst.max(scaled(a, j));
        }
        for j in 0..n - k {
            worst = worst.max(scaled(b, j));
        }
        let target = basis.normalization[k];
        let lead = p.derivative(a, k);
        worst = worst.max((lead - target).abs() / target.abs().max(f64::MIN_POSITIVE));
        if scaled(b, n - k) <= TOL {
            ok = false;
        }
    }
    ZeroOrderReport {
        ok: ok && worst < TOL,
        worst_residual: worst,
    }
}

/// Non-negativity audit of one basis function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonNegEntry {
    pub k: usize,
    pub global: bool,
    pub local_a: bool,
    pub local_b: bool,
    pub min: f64,
    pub argmin: f64,
}

impl NonNegEntry {
    pub fn local(&self) -> bool {
        self.local_a && self.local_b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonNegReport {
    pub entries: Vec<NonNegEntry>,
    /// Width of each endpoint window.
    pub window: f64,
}

impl NonNegReport {
    pub fn globally_nonneg(&self) -> bool {
        self.entries.iter().all(|e| e.global)
    }

    pub fn locally_nonneg(&self) -> bool {
        self.entries.iter().all(NonNegEntry::local)
    }
}

/// Grid audit of `p_{n,k} >= 0`, globally and in the endpoint windows.
pub fn verify_nonneg<F: FunctionFamily>(basis: &BernsteinBasis<F>, grid_points: usize) -> Result<NonNegReport> {
    verify_nonneg_with(basis, grid_points, &Tolerances::default())
}

pub fn verify_nonneg_with<F: FunctionFamily>(
    basis: &BernsteinBasis<F>,
    grid_points: usize,
    tol: &Tolerances,
) -> Result<NonNegReport> {
    let n = basis.degree();
    if grid_points < 50 * (n + 1) {
        return Err(Error::InvalidArgument(format!(
            "grid of {grid_points} points is below 50(n+1) = {}",
            50 * (n + 1)
        )));
    }
    let iv = basis.iv;
    let (a, b) = (iv.a(), iv.b());
    let window = tol.endpoint_window * iv.length();
    const REFINE: usize = 64;
    let mut xs = iv.grid(grid_points);
    for i in 1..=REFINE {
        let t = 1.0 - (std::f64::consts::FRAC_PI_2 * i as f64 / REFINE as f64).cos();
        xs.push(a + window * t);
        xs.push(b - window * t);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let values: Vec<Vec<f64>> = xs.iter().map(|&x| basis.values_at(x)).collect();
    let entries = (0..=n)
        .map(|k| {
            let peak = values.iter().fold(0.0_f64, |m, v| m.max(v[k].abs()));
            let floor = -1e-10 * peak;
            let mut e = NonNegEntry {
                k,
                global: true,
                local_a: true,
                local_b: true,
                min: f64::INFINITY,
                argmin: a,
            };
            for (x, v) in xs.iter().zip(&values) {
                let v = v[k];
                if v < e.min {
                    e.min = v;
                    e.argmin = *x;
                }
                if v < floor {
                    e.global = false;
                    if *x <= a + window {
                        e.local_a = false;
                    }
                    if *x >= b - window {
                        e.local_b = false;
                    }
                }
            }
            e
        })
        .collect();
    Ok(NonNegReport { entries, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expspace::Eigenvalue;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn trig_spectrum() -> Spectrum {
        let mut e = vec![Eigenvalue::real(0.0, 1)];
        e.extend(Eigenvalue::conjugate_pair(0.0, 1.0, 1));
        Spectrum::new(e).unwrap()
    }

    fn u4_spectrum() -> Spectrum {
        let mut e = vec![Eigenvalue::real(0.0, 3)];
        e.extend(Eigenvalue::conjugate_pair(0.0, 1.0, 1));
        Spectrum::new(e).unwrap()
    }

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn collocation_rows_for_quadratics() {
        let space = ExpSpace::new(Spectrum::polynomial(2).unwrap());
        let m = collocation_matrix(&space, unit(), 1);
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), [1.0, 0.0, 0.0]);
        assert_eq!(m.row(1).iter().copied().collect::<Vec<_>>(), [1.0, 1.0, 1.0]);

        let m0 = collocation_matrix(&space, unit(), 0);
        let at_b = space.derivatives_at(1.0, 0);
        assert_eq!(m0.row(0).iter().copied().collect::<Vec<_>>(), at_b);
    }

    #[test]
    fn collocation_rows_for_trig() {
        let space = ExpSpace::new(trig_spectrum());
        let m = collocation_matrix(&space, Interval::new(0.0, PI / 2.0).unwrap(), 2);
        let r0: Vec<f64> = m.row(0).iter().copied().collect();
        let r1: Vec<f64> = m.row(1).iter().copied().collect();
        assert_eq!(r0, [1.0, 1.0, 0.0]);
        assert_eq!(r1[0], 0.0);
        assert_eq!(r1[2], 1.0);
        assert!(r1[1].abs() < 1e-300);
    }

    #[test]
    fn classical_quadratic_basis() {
        let basis = build_bernstein_basis(&Spectrum::polynomial(2).unwrap(), unit()).unwrap();
        let expected = [[1.0, -2.0, 1.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]];
        for (p, e) in basis.functions().iter().zip(expected) {
            for (c, ec) in p.coeffs().iter().zip(e) {
                assert_relative_eq!(*c, ec, epsilon = 1e-13);
            }
        }
        assert!(basis.warnings().is_empty());
        let report = verify_zero_orders(&basis);
        assert!(report.ok);
        assert!(report.worst_residual < 1e-13);
    }

    #[test]
    fn perturbed_basis_fails_zero_orders() {
        let basis = build_bernstein_basis(&Spectrum::polynomial(2).unwrap(), unit()).unwrap();
        let mut fns = basis.functions().to_vec();
        let mut c = fns[1].coeffs().to_vec();
        c[0] += 1e-3;
        fns[1] = SpaceElement::new(basis.family().clone(), c).unwrap();
        let broken = BernsteinBasis {
            functions: fns,
            exact_zeros: false,
            ..basis
        };
        assert!(!verify_zero_orders(&broken).ok);
    }

    #[test]
    fn u4_third_function_matches_closed_form() {
        let b = 7.0 * PI / 4.0;
        let basis = build_bernstein_basis(&u4_spectrum(), Interval::new(0.0, b).unwrap()).unwrap();
        let zr = verify_zero_orders(&basis);
        assert!(zr.ok && zr.worst_residual < 1e-8, "{zr:?}");
        let s = b.sin() - b;
        let c = b.cos() - 1.0 + 0.5 * b * b;
        let closed = |x: f64| s * (x.cos() - 1.0 + 0.5 * x * x) + c * (x - x.sin());
        // the scalar follows from the third derivative at 0: closed'''(0) = c
        let scalar = 6.0 / c;
        assert!(scalar > 0.0);
        let p43 = basis.function(3);
        let peak = Interval::new(0.0, b).unwrap().grid(200).iter().fold(0.0_f64, |m, &x| m.max(closed(x).abs()));
        for x in Interval::new(0.0, b).unwrap().grid(200) {
            assert!((p43.value(x) - scalar * closed(x)).abs() <= 1e-9 * scalar * peak);
        }
    }

    #[test]
    fn cos_sin_on_full_period_is_not_chebyshev() {
        let s = Spectrum::new(Eigenvalue::conjugate_pair(0.0, 1.0, 1).to_vec()).unwrap();
        let err = build_bernstein_basis(&s, Interval::new(0.0, 2.0 * PI).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotChebyshevAtEndpoints { .. }), "{err}");
    }

    #[test]
    fn degree_caps() {
        let tol = Tolerances::default();
        let space = ExpSpace::shared(Spectrum::polynomial(21).unwrap());
        assert!(matches!(
            build_bernstein_basis_for(space, unit(), &tol),
            Err(Error::DegreeTooLarge { degree: 21, .. })
        ));
        let space = ExpSpace::shared(Spectrum::polynomial(13).unwrap());
        let basis = build_bernstein_basis_for(space, Interval::new(-1.0, 1.0).unwrap(), &tol).unwrap();
        assert!(basis.warnings().contains(&BasisWarning::HighDegree { degree: 13 }));
    }

    #[test]
    fn shuffled_factorization_gives_same_basis() {
        let tol = Tolerances::default();
        for spec in [u4_spectrum(), Spectrum::from_real_exponents(&[0.0, 0.5, 1.3, 2.7, 4.0]).unwrap()] {
            let space = ExpSpace::shared(spec);
            let iv = Interval::new(0.0, 1.0).unwrap();
            let plain = build_bernstein_basis_for(space.clone(), iv, &tol).unwrap();
            for seed in [1, 2, 3] {
                let other = build_bernstein_basis_shuffled(space.clone(), iv, &tol, seed).unwrap();
                for (p, q) in plain.functions().iter().zip(other.functions()) {
                    let scale = p.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                    for (x, y) in p.coeffs().iter().zip(q.coeffs()) {
                        assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn u4_reflection_symmetry() {
        let b = 7.0 * PI / 4.0;
        let iv = Interval::new(0.0, b).unwrap();
        let basis = build_bernstein_basis(&u4_spectrum(), iv).unwrap();
        for (left, right) in [(0, 4), (1, 3)] {
            let p = basis.function(left);
            let q = basis.function(right);
            let mid = 0.5 * b;
            let ratio = p.value(mid) / q.value(b - mid);
            assert!(ratio > 0.0);
            let peak = iv.grid(200).iter().fold(0.0_f64, |m, &x| m.max(p.value(x).abs()));
            for x in iv.grid(200) {
                assert!((p.value(x) - ratio * q.value(b - x)).abs() <= 1e-8 * peak);
            }
        }
    }

    #[test]
    fn classical_basis_is_nonneg() {
        let basis = build_bernstein_basis(&Spectrum::polynomial(3).unwrap(), unit()).unwrap();
        let r = verify_nonneg(&basis, 400).unwrap();
        assert!(r.globally_nonneg() && r.locally_nonneg());
        assert!(verify_nonneg(&basis, 199).is_err());
    }

    #[test]
    fn trig_basis_loses_global_nonneg_past_two_pi() {
        let iv = Interval::new(0.0, 3.0 * PI - 0.1).unwrap();
        let basis = build_bernstein_basis(&trig_spectrum(), iv).unwrap();
        let r = verify_nonneg(&basis, 2000).unwrap();
        assert!(r.entries[0].global && r.entries[2].global);
        let e1 = &r.entries[1];
        assert!(!e1.global);
        assert!(e1.local_a && e1.local_b);
        assert!(e1.min < -1.0, "min {}", e1.min);
        // p_{2,1} = sin x - r(1 - cos x), r small: minimum close to 3π/2
        assert!((e1.argmin - 1.5 * PI).abs() < 0.1, "argmin {}", e1.argmin);

        let basis = build_bernstein_basis(&trig_spectrum(), Interval::new(0.0, PI).unwrap()).unwrap();
        assert!(verify_nonneg(&basis, 2000).unwrap().globally_nonneg());
    }

    #[test]
    fn csv_row_at_midpoint() {
        let basis = build_bernstein_basis(&Spectrum::polynomial(2).unwrap(), unit()).unwrap();
        let csv = basis.to_csv(3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,p_0,p_1,p_2");
        let mid: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(mid[0], 0.5);
        for v in &mid[1..] {
            assert_relative_eq!(*v, 0.25, epsilon = 1e-14);
        }
        assert_eq!(fmt_f64(0.25), "2.5000000000000000e-1");
    }

    #[test]
    fn rescaling_tracks_normalization() {
        let basis = build_bernstein_basis(&Spectrum::polynomial(2).unwrap(), unit()).unwrap();
        let r = basis.rescaled(&[2.0, 3.0, 0.5]);
        assert_eq!(r.normalization(), &[2.0, 3.0, 1.0]);
        assert!(verify_zero_orders(&r).ok);
    }
}
