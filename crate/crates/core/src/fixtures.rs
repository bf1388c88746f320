//! Closed-form Bernstein bases used as ground truth, and the counterexample
//! family `U = ⟨1, x, x², cos x, sin x⟩`, `f0 = 1`, `f1 = 1 + x - cos x`,
//! for which no operator exists once `b >= 7π/4`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{build_bernstein_basis_for, fmt_f64, BernsteinBasis};
use crate::chain::{compute_w, derived_space, sufficiency_check, Sufficiency};
use crate::error::{Error, Result};
use crate::expspace::{Differentiable, Eigenvalue, ExpSpace, FunctionFamily, Interval, SpaceElement, Spectrum};
use crate::operator::{build_operator_with, expand_in_basis};
use crate::roots::bisect_increasing;
use crate::tolerances::Tolerances;

/// `⟨1, x, x², cos x, sin x⟩`.
pub fn u4_spectrum() -> Spectrum {
    let mut e = vec![Eigenvalue::real(0.0, 3)];
    e.extend(Eigenvalue::conjugate_pair(0.0, 1.0, 1));
    Spectrum::new(e).expect("valid spectrum")
}

pub fn u4_space() -> Arc<ExpSpace> {
    ExpSpace::shared(u4_spectrum())
}

/// `⟨1, cos x, sin x⟩`.
pub fn example1_spectrum() -> Spectrum {
    let mut e = vec![Eigenvalue::real(0.0, 1)];
    e.extend(Eigenvalue::conjugate_pair(0.0, 1.0, 1));
    Spectrum::new(e).expect("valid spectrum")
}

pub fn example1_space() -> Arc<ExpSpace> {
    ExpSpace::shared(example1_spectrum())
}

/// `f0 = 1` and `f1 = 1 + x - cos x` in `u4_space`.
pub fn counterexample_pair(space: &Arc<ExpSpace>) -> (SpaceElement, SpaceElement) {
    let f0 = SpaceElement::one(space).expect("1 ∈ U");
    let f1 = SpaceElement::new(space.clone(), vec![1.0, 1.0, 0.0, -1.0, 0.0]).expect("finite");
    (f0, f1)
}

/// `p_{4,0}, …, p_{4,4}` on `[0, b]` over `(1, x, x², cos x, sin x)`.
///
/// `p_{4,2}` is undefined at `b = π`, where its normalizing denominator
/// `b + b cos b - 2 sin b` vanishes, and is a negative multiple of the
/// non-negative basis function for `b < π`.
pub fn u4_closed_form(b: f64) -> Result<Vec<SpaceElement>> {
    if !(b > 0.0 && b < TAU) {
        return Err(Error::OutOfRange {
            value: b,
            reason: "b must lie in (0, 2π)".into(),
        });
    }
    let (s, c) = (b.sin(), b.cos());
    let big_s = s - b;
    let big_c = c - 1.0 + 0.5 * b * b;
    let den = b + b * c - 2.0 * s;
    if !(den.abs() > 1e-12 * (2.0 + b)) {
        return Err(Error::DegenerateDenominator {
            which: "p_{4,2}".into(),
            value: den,
        });
    }
    let kk = (2.0 * c - 2.0 + b * s) / den;

    let p44 = vec![-1.0, 0.0, 0.5, 1.0, 0.0];
    let p43 = vec![-big_s, big_c, 0.5 * big_s, big_s, -big_c];
    let p42 = vec![1.0, kk, -(s + kk * (1.0 - c)) / (2.0 * b), -1.0, -kk];
    // p_{4,0}(x) = p_{4,4}(b - x), p_{4,1}(x) = p_{4,3}(b - x)
    let p40 = vec![-1.0 + 0.5 * b * b, -b, 0.5, c, s];
    let p41 = vec![
        big_s * (-1.0 + 0.5 * b * b) + big_c * b,
        -big_s * b - big_c,
        0.5 * big_s,
        big_s * c - big_c * s,
        big_s * s + big_c * c,
    ];
    let space = u4_space();
    [p40, p41, p42, p43, p44]
        .into_iter()
        .map(|v| SpaceElement::new(space.clone(), v))
        .collect()
}

/// `p_{2,0}, p_{2,1}, p_{2,2}` on `[0, b]` over `(1, cos x, sin x)`.
pub fn example1_closed_form(b: f64) -> Result<Vec<SpaceElement>> {
    let one_minus_cos = 1.0 - b.cos();
    if !(b > 0.0) || !(one_minus_cos > 1e-12) {
        return Err(Error::OutOfRange {
            value: b,
            reason: "⟨1, cos, sin⟩ has no Bernstein basis for {0, 2πk}".into(),
        });
    }
    let r = b.sin() / one_minus_cos;
    let space = example1_space();
    [vec![1.0, -b.cos(), -b.sin()], vec![-r, r, 1.0], vec![1.0, -1.0, 0.0]]
        .into_iter()
        .map(|v| SpaceElement::new(space.clone(), v))
        .collect()
}

/// Wraps closed-form functions as a basis on `[0, b]`.
pub fn closed_form_basis(functions: Vec<SpaceElement>, b: f64) -> Result<BernsteinBasis> {
    let family = functions
        .first()
        .ok_or_else(|| Error::InvalidArgument("no functions".into()))?
        .family()
        .clone();
    BernsteinBasis::from_functions(family, Interval::new(0.0, b)?, functions)
}

/// `h(b) = f1''(b) p_{4,3}'(b) - f1'(b) p_{4,3}''(b)` in expanded form.
pub fn h_criterion(b: f64) -> f64 {
    let (s, c) = (b.sin(), b.cos());
    c * s * b - 0.5 * b * b * c + 2.0 * c * c - 2.0 * c + b - b * c - 0.5 * s * b * b + s * b - 0.5 * b * b
}

/// `h(b)` evaluated from the derivatives of the closed-form `p_{4,3}`.
pub fn h_via_derivatives(b: f64) -> Result<f64> {
    let p = u4_closed_form(b)?;
    let (_, f1) = counterexample_pair(p[3].family());
    Ok(f1.derivative(b, 2) * p[3].derivative(b, 1) - f1.derivative(b, 1) * p[3].derivative(b, 2))
}

/// Left-hand side of the criterion
/// `[f0 f1'' - f0'' f1](b) p_{n-1}'(b) - [f0 f1' - f0' f1](b) p_{n-1}''(b) >= 0`,
/// equivalent to `γ_{n-2}/β_{n-2} <= γ_n/β_n`.
pub fn crit_inequality<F: FunctionFamily>(
    p_basis: &BernsteinBasis<F>,
    f0: &SpaceElement<F>,
    f1: &SpaceElement<F>,
    tol: &Tolerances,
) -> Result<f64> {
    let n = p_basis.degree();
    if n < 2 {
        return Err(Error::PreconditionFailed("the criterion needs n >= 2".into()));
    }
    let b = p_basis.interval().b();
    let (g0, g1) = (f0.jet(b, 2), f1.jet(b, 2));
    if !(g0[0] > 0.0) {
        return Err(Error::PreconditionFailed(format!("f0(b) = {} is not positive", g0[0])));
    }
    let beta = expand_in_basis(f0, p_basis, tol)?.coeffs;
    if beta[n - 2..].iter().any(|&v| !(v > 0.0)) {
        return Err(Error::PreconditionFailed("β_{n-2}, β_{n-1}, β_n must be positive".into()));
    }
    let p = p_basis.function(n - 1);
    let (d1, d2) = (p.derivative(b, 1), p.derivative(b, 2));
    Ok((g0[0] * g1[2] - g0[2] * g1[0]) * d1 - (g0[0] * g1[1] - g0[1] * g1[0]) * d2)
}

/// `β_{n-2}` of `f` from its derivatives at `b`:
///
/// ```text
/// β_{n-2} p_n p_{n-1}' p_{n-2}'' = p_n [f'' p_{n-1}' - f' p_{n-1}''] + f [p_n' p_{n-1}'' - p_{n-1}' p_n'']
/// ```
/// (everything at `b`).
pub fn beta_second_from_end<F: FunctionFamily, G: Differentiable + ?Sized>(p_basis: &BernsteinBasis<F>, f: &G) -> f64 {
    let n = p_basis.degree();
    let b = p_basis.interval().b();
    let jet = p_basis.jet(b, 2);
    let (pn, pn1, pn2) = ((jet[0][n], jet[1][n], jet[2][n]), (jet[1][n - 1], jet[2][n - 1]), jet[2][n - 2]);
    let fj = f.jet(b, 2);
    let rhs = pn.0 * (fj[2] * pn1.0 - fj[1] * pn1.1) + fj[0] * (pn.1 * pn1.1 - pn1.0 * pn.2);
    rhs / (pn.0 * pn1.0 * pn2)
}

/// One `b` of the counterexample scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub b: f64,
    pub h_b: f64,
    pub feasible: bool,
    /// First violated index when infeasible.
    pub violation: Option<usize>,
    /// `f1^{-1}(γ_2/β_2)` with the bracket extended to `[0, b + 4]` and
    /// widened further as needed; diagnostic only, NaN if `γ_2/β_2 < f1(0)`.
    pub t2_overshoot: f64,
    pub w_min: f64,
    pub sufficiency: Option<Sufficiency>,
    pub crit: Option<f64>,
    /// `crit >= 0` iff `γ_2/β_2 <= γ_4/β_4`.
    pub crit_agrees: Option<bool>,
    /// Failure other than infeasibility, if any.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleScan {
    pub rows: Vec<ScanRow>,
}

impl CounterexampleScan {
    /// `h(b) < 0` implies infeasible, and the criterion sign agrees with the ratio test.
    pub fn consistent(&self) -> bool {
        self.rows.iter().all(|r| {
            r.error.is_none() && (r.h_b >= 0.0 || !r.feasible) && r.crit_agrees != Some(false)
        })
    }

    /// `b,h_b,feasible,t2_overshoot,w_min` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("b,h_b,feasible,t2_overshoot,w_min\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(r.b),
                fmt_f64(r.h_b),
                r.feasible,
                fmt_f64(r.t2_overshoot),
                fmt_f64(r.w_min)
            )
            .unwrap();
        }
        out
    }
}

/// Evaluates the counterexample family at `steps` equally spaced `b`.
pub fn counterexample_scan(b_min: f64, b_max: f64, steps: usize) -> Result<CounterexampleScan> {
    counterexample_scan_with(b_min, b_max, steps, &Tolerances::default())
}

pub fn counterexample_scan_with(b_min: f64, b_max: f64, steps: usize, tol: &Tolerances) -> Result<CounterexampleScan> {
    if !(b_min > 0.0 && b_max < TAU && b_min <= b_max) || steps == 0 {
        return Err(Error::OutOfRange {
            value: if b_min > 0.0 { b_max } else { b_min },
            reason: "scan range must satisfy 0 < b_min <= b_max < 2π with at least one step".into(),
        });
    }
    let bs: Vec<f64> = if steps == 1 {
        vec![b_min]
    } else {
        (0..steps)
            .map(|i| b_min + (b_max - b_min) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let rows = bs.into_par_iter().map(|b| scan_one(b, tol)).collect();
    Ok(CounterexampleScan { rows })
}

fn scan_one(b: f64, tol: &Tolerances) -> ScanRow {
    let mut row = ScanRow {
        b,
        h_b: h_criterion(b),
        feasible: false,
        violation: None,
        t2_overshoot: f64::NAN,
        w_min: f64::NAN,
        sufficiency: None,
        crit: None,
        crit_agrees: None,
        error: None,
    };
    if let Err(e) = fill_row(&mut row, tol) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_row(row: &mut ScanRow, tol: &Tolerances) -> Result<()> {
    let b = row.b;
    let spec = u4_spectrum();
    let space = ExpSpace::shared(spec.clone());
    let (f0, f1) = counterexample_pair(&space);
    let iv = Interval::new(0.0, b)?;

    match build_operator_with(&spec, iv, &f0, &f1, tol) {
        Ok(_) => row.feasible = true,
        Err(Error::Infeasible(report)) => row.violation = report.violations.first().map(|v| v.k),
        Err(e) => return Err(e),
    }

    let basis = build_bernstein_basis_for(space.clone(), iv, tol)?;
    let beta = expand_in_basis(&f0, &basis, tol)?.coeffs;
    let gamma = expand_in_basis(&f1, &basis, tol)?.coeffs;
    let r2 = gamma[2] / beta[2];
    // f1 >= x, so widening the bracket always succeeds
    let mut hi = b + 4.0;
    while f1.value(hi) < r2 && hi < 1e6 {
        hi = b + 2.0 * (hi - b);
    }
    if r2 >= f1.value(0.0) && r2 <= f1.value(hi) {
        let scale = f1.value(0.0).abs() + f1.value(hi).abs();
        row.t2_overshoot = bisect_increasing(|t| f1.value(t), r2, 0.0, hi, tol.bisection * scale, tol.bisection_max_iter).0;
    }

    let derived = derived_space(&f0, iv, tol)?;
    let w = compute_w(&f0, &f1, &derived.basis, tol)?;
    row.w_min = w.iter().copied().fold(f64::INFINITY, f64::min);
    row.sufficiency = Some(sufficiency_check(&w));

    let crit = crit_inequality(&basis, &f0, &f1, tol)?;
    row.crit = Some(crit);
    row.crit_agrees = Some((crit >= 0.0) == (r2 <= gamma[4] / beta[4]));
    Ok(())
}

/// `7π/4`, the start of the range on which `h(b) < 0` is proved.
pub const COUNTEREXAMPLE_START: f64 = 7.0 * PI / 4.0;
