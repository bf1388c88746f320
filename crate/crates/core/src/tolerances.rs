//! Numerical thresholds shared by the constructions.
//!
//! The defaults are the tested contract. Every field can be overridden, for
//! example from a CLI problem file, but the test-suite only exercises the
//! defaults.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative singular-value threshold for nullspace rank decisions.
    pub rank: f64,
    /// Relative residual above which a basis solve is flagged ill-conditioned.
    pub basis_residual: f64,
    /// Relative residual accepted when expanding a function in a basis.
    pub expansion_residual: f64,
    /// Relative slack for node ratios marginally outside `[h(a), h(b)]`.
    pub ratio_clamp: f64,
    /// Relative tolerance for `γ_0/β_0 = h(a)` and `γ_n/β_n = h(b)`.
    pub endpoint_identity: f64,
    /// Bisection stops at `|h(t) - r| < bisection * (|h(a)| + |h(b)|)`.
    pub bisection: f64,
    pub bisection_max_iter: usize,
    /// Zero band for classifying normalized `w` coefficients.
    pub w_zero: f64,
    /// Smallest denominator magnitude accepted by quotient derivatives.
    pub division_floor: f64,
    /// Points of the grid on which `f0 > 0` and monotonicity are audited.
    pub audit_grid: usize,
    /// Relative floor for q-basis endpoint derivatives in `c_k`, `d_k`.
    pub degenerate_denominator: f64,
    /// Degree `n` above which a basis carries a conditioning warning.
    pub soft_degree_cap: usize,
    /// Degree `n` above which basis construction is refused.
    pub hard_degree_cap: usize,
    /// Fraction of the interval audited for local non-negativity.
    pub endpoint_window: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: 1e-10,
            basis_residual: 1e-8,
            expansion_residual: 1e-8,
            ratio_clamp: 1e-10,
            endpoint_identity: 1e-10,
            bisection: 1e-13,
            bisection_max_iter: 200,
            w_zero: 1e-12,
            division_floor: 1e-300,
            audit_grid: 1000,
            degenerate_denominator: 1e-12,
            soft_degree_cap: 12,
            hard_degree_cap: 20,
            endpoint_window: 0.05,
        }
    }
}
