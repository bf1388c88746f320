//! Bernstein operators `B_n f = Σ f(t_k) α_k p_{n,k}` fixing `f0` and `f1`.
//!
//! With `f0 = Σ β_k p_{n,k}` and `f1 = Σ γ_k p_{n,k}`, an operator fixing
//! both exists iff every `β_k > 0` and `γ_0/β_0 <= γ_k/β_k <= γ_n/β_n`. The
//! nodes then solve `f1(t_k)/f0(t_k) = γ_k/β_k` and the weights are
//! `α_k = β_k / f0(t_k)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{build_bernstein_basis_for, BernsteinBasis};
use crate::error::{Error, Result};
use crate::expspace::{Differentiable, ExpSpace, FunctionFamily, Interval, SpaceElement, Spectrum};
use crate::linalg;
use crate::roots::bisect_increasing;
use crate::tolerances::Tolerances;

/// Coefficients of `f0` (β) and `f1` (γ) in the Bernstein basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionCoeffs {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionStrategy {
    /// Collocation at Chebyshev–Lobatto points.
    Collocation,
    /// Triangular matching of endpoint derivatives.
    EndpointTriangular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expansion {
    pub coeffs: Vec<f64>,
    /// Sup-norm residual on the validation grid relative to `max |f|`.
    pub residual: f64,
    pub strategy: ExpansionStrategy,
}

/// Coefficients of `f` in `basis`.
///
/// Collocation at `n+1` Chebyshev–Lobatto points is tried first and
/// validated on a `10(n+1)`-point grid; if the relative residual exceeds
/// the tolerance, endpoint derivatives are matched instead (lower-triangular
/// at `a` for `k <= n/2`, upper-triangular at `b` for the rest).
pub fn expand_in_basis<F, G>(f: &G, basis: &BernsteinBasis<F>, tol: &Tolerances) -> Result<Expansion>
where
    F: FunctionFamily,
    G: Differentiable + ?Sized,
{
    let n = basis.degree();
    let iv = basis.interval();
    let check: Vec<(f64, Vec<f64>, f64)> = iv
        .grid(10 * (n + 1))
        .into_iter()
        .map(|x| (x, basis.values_at(x), f.value(x)))
        .collect();
    let scale = check.iter().fold(0.0_f64, |m, (_, _, v)| m.max(v.abs()));
    let residual_of = |coeffs: &[f64]| -> f64 {
        let worst = check.iter().fold(0.0_f64, |m, (_, p, v)| {
            let approx: f64 = p.iter().zip(coeffs).map(|(a, b)| a * b).sum();
            m.max((approx - v).abs())
        });
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    };

    let mut best: Option<Expansion> = None;
    let nodes = iv.chebyshev_lobatto(n + 1);
    let mut mat = DMatrix::zeros(n + 1, n + 1);
    let mut rhs = Vec::with_capacity(n + 1);
    for (i, &x) in nodes.iter().enumerate() {
        for (k, v) in basis.values_at(x).into_iter().enumerate() {
            mat[(i, k)] = v;
        }
        rhs.push(f.value(x));
    }
    if let Some(coeffs) = linalg::solve(mat, &rhs) {
        let residual = residual_of(&coeffs);
        if residual <= tol.expansion_residual {
            return Ok(Expansion {
                coeffs,
                residual,
                strategy: ExpansionStrategy::Collocation,
            });
        }
        best = Some(Expansion {
            coeffs,
            residual,
            strategy: ExpansionStrategy::Collocation,
        });
    }

    let coeffs = endpoint_triangular(f, basis);
    let residual = residual_of(&coeffs);
    if residual <= tol.expansion_residual {
        return Ok(Expansion {
            coeffs,
            residual,
            strategy: ExpansionStrategy::EndpointTriangular,
        });
    }
    let best_residual = best.map_or(residual, |b| b.residual.min(residual));
    Err(Error::SingularExpansion {
        residual: if best_residual.is_nan() { f64::INFINITY } else { best_residual },
    })
}

fn endpoint_triangular<F: FunctionFamily, G: Differentiable + ?Sized>(f: &G, basis: &BernsteinBasis<F>) -> Vec<f64> {
    let n = basis.degree();
    let iv = basis.interval();
    let split = n / 2;
    let mut c = vec![0.0; n + 1];
    let fa = f.jet(iv.a(), split);
    for j in 0..=split {
        // p_k^{(j)}(a) = 0 for k > j
        let d = basis.derivatives_at(iv.a(), j);
        let known: f64 = (0..j).map(|k| c[k] * d[k]).sum();
        c[j] = (fa[j] - known) / d[j];
    }
    let top = n - split - 1;
    if n > split {
        let fb = f.jet(iv.b(), top);
        for j in 0..=top {
            // p_k^{(j)}(b) = 0 for k < n - j
            let k = n - j;
            let d = basis.derivatives_at(iv.b(), j);
            let known: f64 = (k + 1..=n).map(|i| c[i] * d[i]).sum();
            c[k] = (fb[j] - known) / d[k];
        }
    }
    c
}

/// Which side of the sandwich a ratio violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub k: usize,
    pub ratio: f64,
    pub bound: Bound,
}

/// Ratio test for the existence of the operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `γ_k / β_k`.
    pub ratios: Vec<f64>,
    /// `γ_0 / β_0`.
    pub lower: f64,
    /// `γ_n / β_n`.
    pub upper: f64,
    pub violations: Vec<Violation>,
    pub beta_positive: bool,
    /// `max(|γ_0/β_0 - h(a)|, |γ_n/β_n - h(b)|)` relative to `|h(a)| + |h(b)|`.
    pub endpoint_identity_error: f64,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.beta_positive && self.violations.is_empty()
    }
}

fn ratio_scale(ha: f64, hb: f64) -> f64 {
    (ha.abs() + hb.abs()).max(hb - ha).max(f64::MIN_POSITIVE)
}

/// Audits `f0 > 0` and strict increase of `f1/f0` on the audit grid.
pub fn check_preconditions<F: FunctionFamily>(
    f0: &SpaceElement<F>,
    f1: &SpaceElement<F>,
    iv: Interval,
    tol: &Tolerances,
) -> Result<()> {
    let xs = iv.grid(tol.audit_grid.max(2));
    let mut prev: Option<f64> = None;
    for &x in &xs {
        let v0 = f0.value(x);
        if !(v0 > 0.0) {
            return Err(Error::PreconditionFailed(format!("f0({x}) = {v0} is not positive")));
        }
        let h = f1.value(x) / v0;
        if let Some(p) = prev {
            if !(h > p) {
                return Err(Error::PreconditionFailed(format!(
                    "f1/f0 is not strictly increasing near x = {x}"
                )));
            }
        }
        prev = Some(h);
    }
    Ok(())
}

/// Feasibility of the operator from the expansion coefficients.
pub fn ratio_check<F: FunctionFamily>(
    coeffs: &ExpansionCoeffs,
    f0: &SpaceElement<F>,
    f1: &SpaceElement<F>,
    iv: Interval,
    tol: &Tolerances,
) -> Result<FeasibilityReport> {
    check_preconditions(f0, f1, iv, tol)?;
    let n = coeffs.beta.len() - 1;
    let ha = f1.value(iv.a()) / f0.value(iv.a());
    let hb = f1.value(iv.b()) / f0.value(iv.b());
    let scale = ratio_scale(ha, hb);

    let beta_positive = coeffs.beta.iter().all(|&b| b > 0.0);
    let ratios: Vec<f64> = coeffs.gamma.iter().zip(&coeffs.beta).map(|(g, b)| g / b).collect();
    let lower = ratios[0];
    let upper = ratios[n];
    let endpoint_identity_error = ((lower - ha).abs().max((upper - hb).abs())) / scale;
    if !(endpoint_identity_error <= tol.endpoint_identity) {
        return Err(Error::PreconditionFailed(format!(
            "endpoint identities γ_0/β_0 = h(a), γ_n/β_n = h(b) violated by {endpoint_identity_error:e}"
        )));
    }
    let slack = tol.ratio_clamp * scale;
    let mut violations = Vec::new();
    for (k, &r) in ratios.iter().enumerate().take(n).skip(1) {
        if r < lower - slack {
            violations.push(Violation { k, ratio: r, bound: Bound::Lower });
        } else if r > upper + slack {
            violations.push(Violation { k, ratio: r, bound: Bound::Upper });
        }
    }
    Ok(FeasibilityReport {
        ratios,
        lower,
        upper,
        violations,
        beta_positive,
        endpoint_identity_error,
    })
}

/// Nodes `t_k` with `f1(t_k)/f0(t_k) = γ_k/β_k`; `t_0 = a` and `t_n = b`
/// exactly, interior nodes by bisection.
pub fn solve_nodes<F: FunctionFamily>(
    coeffs: &ExpansionCoeffs,
    f0: &SpaceElement<F>,
    f1: &SpaceElement<F>,
    iv: Interval,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let n = coeffs.beta.len() - 1;
    let h = |t: f64| f1.value(t) / f0.value(t);
    let (ha, hb) = (h(iv.a()), h(iv.b()));
    let scale = ratio_scale(ha, hb);
    let clamp = tol.ratio_clamp * scale;
    let stop = tol.bisection * (ha.abs() + hb.abs()).max(f64::MIN_POSITIVE);

    let mut nodes = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k == 0 {
            nodes.push(iv.a());
            continue;
        }
        if k == n {
            nodes.push(iv.b());
            continue;
        }
        let r = coeffs.gamma[k] / coeffs.beta[k];
        if !r.is_finite() || r < ha - clamp || r > hb + clamp {
            return Err(Error::RatioOutOfRange {
                k,
                ratio: r,
                lower: ha,
                upper: hb,
            });
        }
        let t = if r <= ha {
            iv.a()
        } else if r >= hb {
            iv.b()
        } else {
            bisect_increasing(h, r, iv.a(), iv.b(), stop, tol.bisection_max_iter).0
        };
        nodes.push(t);
    }
    Ok(nodes)
}

/// A Bernstein operator fixing `f0` and `f1`.
#[derive(Debug, Clone)]
pub struct BernsteinOperator<F = ExpSpace> {
    basis: BernsteinBasis<F>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    f0: SpaceElement<F>,
    f1: SpaceElement<F>,
    coeffs: ExpansionCoeffs,
    feasibility: FeasibilityReport,
}

/// Builds the Bernstein basis of `space` on `iv` and the operator fixing `f0`, `f1`.
pub fn build_operator(space: &Spectrum, iv: Interval, f0: &SpaceElement, f1: &SpaceElement) -> Result<BernsteinOperator> {
    build_operator_with(space, iv, f0, f1, &Tolerances::default())
}

pub fn build_operator_with(
    space: &Spectrum,
    iv: Interval,
    f0: &SpaceElement,
    f1: &SpaceElement,
    tol: &Tolerances,
) -> Result<BernsteinOperator> {
    for (name, f) in [("f0", f0), ("f1", f1)] {
        if f.spectrum() != space {
            return Err(Error::NotInSpace(format!("{name} belongs to {}, not {space}", f.spectrum())));
        }
    }
    let family: Arc<ExpSpace> = f0.family().clone();
    let basis = build_bernstein_basis_for(family, iv, tol)?;
    BernsteinOperator::from_basis(basis, f0.clone(), f1.clone(), tol)
}

impl<F: FunctionFamily> BernsteinOperator<F> {
    /// Operator for an already constructed basis (any positive scaling).
    pub fn from_basis(basis: BernsteinBasis<F>, f0: SpaceElement<F>, f1: SpaceElement<F>, tol: &Tolerances) -> Result<Self> {
        if basis.degree() < 1 {
            return Err(Error::InvalidArgument("an operator needs a space of dimension >= 2".into()));
        }
        let iv = basis.interval();
        check_preconditions(&f0, &f1, iv, tol)?;
        let coeffs = ExpansionCoeffs {
            beta: expand_in_basis(&f0, &basis, tol)?.coeffs,
            gamma: expand_in_basis(&f1, &basis, tol)?.coeffs,
        };
        let feasibility = ratio_check(&coeffs, &f0, &f1, iv, tol)?;
        if !feasibility.feasible() {
            return Err(Error::Infeasible(Box::new(feasibility)));
        }
        let nodes = solve_nodes(&coeffs, &f0, &f1, iv, tol)?;
        let weights: Vec<f64> = nodes.iter().zip(&coeffs.beta).map(|(&t, b)| b / f0.value(t)).collect();
        Ok(Self {
            basis,
            nodes,
            weights,
            f0,
            f1,
            coeffs,
            feasibility,
        })
    }

    pub fn basis(&self) -> &BernsteinBasis<F> {
        &self.basis
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn f0(&self) -> &SpaceElement<F> {
        &self.f0
    }

    pub fn f1(&self) -> &SpaceElement<F> {
        &self.f1
    }

    pub fn coeffs(&self) -> &ExpansionCoeffs {
        &self.coeffs
    }

    pub fn feasibility(&self) -> &FeasibilityReport {
        &self.feasibility
    }

    pub fn interval(&self) -> Interval {
        self.basis.interval()
    }

    /// `(B_n f)(x)`.
    pub fn apply<G: Fn(f64) -> f64>(&self, f: G, x: f64) -> f64 {
        let samples: Vec<f64> = self.nodes.iter().map(|&t| f(t)).collect();
        self.apply_samples(&samples, x)
    }

    /// `(B_n f)(x)` from the samples `f(t_0), …, f(t_n)`.
    pub fn apply_samples(&self, samples: &[f64], x: f64) -> f64 {
        self.basis
            .values_at(x)
            .iter()
            .zip(samples.iter().zip(&self.weights))
            .map(|(p, (s, w))| s * w * p)
            .sum()
    }

    /// `B_n f` on a set of points, sampling `f` once.
    pub fn apply_grid<G: Fn(f64) -> f64>(&self, f: G, xs: &[f64]) -> Vec<f64> {
        let samples: Vec<f64> = self.nodes.iter().map(|&t| f(t)).collect();
        xs.iter().map(|&x| self.apply_samples(&samples, x)).collect()
    }

    /// Replace one weight; only for sabotage tests and diagnostics.
    #[doc(hidden)]
    pub fn with_weight(mut self, k: usize, w: f64) -> Self {
        self.weights[k] = w;
        self
    }
}

/// Fixing residuals and a positivity probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `max |B_n f0 - f0|` on the grid.
    pub f0_residual: f64,
    /// `max |B_n f1 - f1|` on the grid.
    pub f1_residual: f64,
    /// `B_n f >= -1e-10` for every probe `f = max(0, g)`.
    pub positive: bool,
    /// Smallest value of `B_n f` seen over all probes.
    pub min_probe_value: f64,
}

/// Sup-norm fixing residuals on a uniform grid and a positivity check with
/// `f = 1` and `f = max(0, g)` for random elements `g` of the space.
pub fn residual_report<F: FunctionFamily>(op: &BernsteinOperator<F>, grid_points: usize, seed: u64) -> ResidualReport {
    const PROBES: usize = 32;
    let xs = op.interval().grid(grid_points.max(2));
    let sup = |f: &SpaceElement<F>| {
        let bf = op.apply_grid(|t| f.value(t), &xs);
        xs.iter().zip(bf).fold(0.0_f64, |m, (&x, v)| m.max((v - f.value(x)).abs()))
    };
    let f0_residual = sup(&op.f0);
    let f1_residual = sup(&op.f1);

    let family = op.f0.family().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_probe_value = f64::INFINITY;
    let mut probes: Vec<SpaceElement<F>> = Vec::with_capacity(PROBES);
    for _ in 0..PROBES {
        let c: Vec<f64> = (0..family.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        probes.push(SpaceElement::new(family.clone(), c).expect("finite coefficients"));
    }
    let mut check = |samples: Vec<f64>| {
        for &x in &xs {
            min_probe_value = min_probe_value.min(op.apply_samples(&samples, x));
        }
    };
    check(vec![1.0; op.nodes.len()]);
    for g in &probes {
        check(op.nodes.iter().map(|&t| g.value(t).max(0.0)).collect());
    }
    ResidualReport {
        f0_residual,
        f1_residual,
        positive: min_probe_value >= -1e-10,
        min_probe_value,
    }
}

/// JSON-facing snapshot of an operator.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorDump {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: Interval,
    pub spectrum: Spectrum,
}

impl BernsteinOperator<ExpSpace> {
    pub fn dump(&self) -> OperatorDump {
        OperatorDump {
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            interval: self.interval(),
            spectrum: self.f0.spectrum().clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_bernstein_basis;
    use crate::expspace::Eigenvalue;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn classical(n: usize) -> (Spectrum, Arc<ExpSpace>, SpaceElement, SpaceElement) {
        let spec = Spectrum::polynomial(n).unwrap();
        let space = ExpSpace::shared(spec.clone());
        let one = SpaceElement::one(&space).unwrap();
        let x = SpaceElement::x(&space).unwrap();
        (spec, space, one, x)
    }

    fn u4_config(b: f64) -> (Spectrum, Interval, SpaceElement, SpaceElement) {
        let mut e = vec![Eigenvalue::real(0.0, 3)];
        e.extend(Eigenvalue::conjugate_pair(0.0, 1.0, 1));
        let spec = Spectrum::new(e).unwrap();
        let space = ExpSpace::shared(spec.clone());
        let f0 = SpaceElement::one(&space).unwrap();
        let f1 = SpaceElement::new(space, vec![1.0, 1.0, 0.0, -1.0, 0.0]).unwrap();
        (spec, Interval::new(0.0, b).unwrap(), f0, f1)
    }

    #[test]
    fn expansion_examples() {
        let tol = Tolerances::default();
        let (spec, _, one, x) = classical(2);
        let basis = build_bernstein_basis(&spec, unit()).unwrap();
        let beta = expand_in_basis(&one, &basis, &tol).unwrap();
        assert_eq!(beta.strategy, ExpansionStrategy::Collocation);
        for (b, e) in beta.coeffs.iter().zip([1.0, 2.0, 1.0]) {
            assert_relative_eq!(*b, e, epsilon = 1e-13);
        }
        let gamma = expand_in_basis(&x, &basis, &tol).unwrap();
        for (g, e) in gamma.coeffs.iter().zip([0.0, 1.0, 1.0]) {
            assert_relative_eq!(*g, e, epsilon = 1e-13);
        }
        for j in 0..3 {
            let c = expand_in_basis(basis.function(j), &basis, &tol).unwrap().coeffs;
            for (k, v) in c.iter().enumerate() {
                assert_relative_eq!(*v, if k == j { 1.0 } else { 0.0 }, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn triangular_fallback_agrees_with_collocation() {
        let (spec, _, one, _) = classical(5);
        let basis = build_bernstein_basis(&spec, unit()).unwrap();
        let tri = endpoint_triangular(&one, &basis);
        // binomials under the k! normalization
        for (k, v) in tri.iter().enumerate() {
            let expected = crate::expspace::binomial(5, k);
            assert_relative_eq!(*v, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn ratio_check_examples() {
        let tol = Tolerances::default();
        let (spec, _, one, x) = classical(2);
        let basis = build_bernstein_basis(&spec, unit()).unwrap();
        let coeffs = ExpansionCoeffs {
            beta: expand_in_basis(&one, &basis, &tol).unwrap().coeffs,
            gamma: expand_in_basis(&x, &basis, &tol).unwrap().coeffs,
        };
        let r = ratio_check(&coeffs, &one, &x, unit(), &tol).unwrap();
        assert!(r.feasible());
        for (a, e) in r.ratios.iter().zip([0.0, 0.5, 1.0]) {
            assert_relative_eq!(*a, e, epsilon = 1e-13);
        }
        let err = ratio_check(&coeffs, &one, &one, unit(), &tol).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(_)));
    }

    #[test]
    fn counterexample_violates_upper_bound_at_two() {
        let tol = Tolerances::default();
        let (spec, iv, f0, f1) = u4_config(7.0 * PI / 4.0);
        let basis = build_bernstein_basis(&spec, iv).unwrap();
        let coeffs = ExpansionCoeffs {
            beta: expand_in_basis(&f0, &basis, &tol).unwrap().coeffs,
            gamma: expand_in_basis(&f1, &basis, &tol).unwrap().coeffs,
        };
        let r = ratio_check(&coeffs, &f0, &f1, iv, &tol).unwrap();
        assert!(r.beta_positive);
        assert_eq!(r.violations.len(), 1);
        assert_eq!((r.violations[0].k, r.violations[0].bound), (2, Bound::Upper));
        assert!(r.ratios[2] > r.ratios[4]);

        match solve_nodes(&coeffs, &f0, &f1, iv, &tol).unwrap_err() {
            Error::RatioOutOfRange { k, ratio, upper, .. } => {
                assert_eq!(k, 2);
                assert!(ratio > upper);
                // f1 is globally increasing, so its inverse lands beyond b
                let (t2, _) = bisect_increasing(|t| f1.value(t), ratio, 0.0, iv.b() + 4.0, 1e-13, 200);
                assert!(t2 > iv.b());
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(build_operator(&spec, iv, &f0, &f1), Err(Error::Infeasible(_))));
    }

    #[test]
    fn classical_nodes_and_operator() {
        let (spec, _, one, x) = classical(2);
        let op = build_operator(&spec, unit(), &one, &x).unwrap();
        for (t, e) in op.nodes().iter().zip([0.0, 0.5, 1.0]) {
            assert_relative_eq!(*t, e, epsilon = 1e-13);
        }
        // B_2 x^2 (1/2) = 1/4 + 1/8
        assert_relative_eq!(op.apply(|t| t * t, 0.5), 0.375, epsilon = 1e-13);
        assert_eq!(op.apply(|_| 0.0, 0.3), 0.0);
        assert_relative_eq!(op.apply(|t| t.sin(), 0.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(op.apply(|t| t.exp(), 1.0), 1.0_f64.exp(), max_relative = 1e-13);
    }

    #[test]
    fn exponential_nodes_invert_log() {
        let spec = Spectrum::from_real_exponents(&[0.0, 1.0, 2.0]).unwrap();
        let space = ExpSpace::shared(spec.clone());
        let f0 = SpaceElement::one(&space).unwrap();
        let f1 = SpaceElement::exp(&space, 1.0).unwrap();
        let op = build_operator(&spec, unit(), &f0, &f1).unwrap();
        let c = op.coeffs();
        let r = c.gamma[1] / c.beta[1];
        assert_relative_eq!(op.nodes()[1], r.ln(), epsilon = 1e-12);
        assert!((op.nodes()[1].exp() - r).abs() < 1e-12);
        assert!(op.weights().iter().all(|&w| w > 0.0));
        let rep = residual_report(&op, 1001, 3);
        assert!(rep.f0_residual < 1e-8 && rep.f1_residual < 1e-8 && rep.positive, "{rep:?}");
    }

    #[test]
    fn residuals_and_sabotage() {
        let (spec, _, one, x) = classical(4);
        let op = build_operator(&spec, unit(), &one, &x).unwrap();
        let rep = residual_report(&op, 501, 0);
        assert!(rep.f0_residual < 1e-12 && rep.f1_residual < 1e-12 && rep.positive, "{rep:?}");
        let broken = op.with_weight(0, -1.0);
        assert!(!residual_report(&broken, 501, 0).positive);
    }

    #[test]
    fn f0_must_be_positive() {
        let spec = Spectrum::polynomial(2).unwrap();
        let space = ExpSpace::shared(spec.clone());
        let f0 = SpaceElement::x(&space).unwrap();
        let f1 = SpaceElement::unit(space, 2);
        assert!(matches!(build_operator(&spec, unit(), &f0, &f1), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn rejects_elements_of_other_spaces() {
        let (spec, _, one, _) = classical(2);
        let (_, _, one3, x3) = classical(3);
        assert!(matches!(build_operator(&spec, unit(), &one3, &x3), Err(Error::NotInSpace(_))));
        let _ = one;
    }

    #[test]
    fn dump_serializes_expected_fields() {
        let (spec, _, one, x) = classical(2);
        let op = build_operator(&spec, unit(), &one, &x).unwrap();
        let v = serde_json::to_value(op.dump()).unwrap();
        assert_eq!(v["interval"]["a"], 0.0);
        assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
        assert!(v["spectrum"]["eigenvalues"].is_array());
    }
}
