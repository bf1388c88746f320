use std::fmt::Write as _;
use std::path::Path;

use bernstein_core::basis::{fmt_f64, verify_nonneg};
use bernstein_core::chain::analyze;
use bernstein_core::fixtures::counterexample_scan_with;
use bernstein_core::operator::{build_operator_with, residual_report};
use bernstein_core::{build_bernstein_basis_for, verify_ect_heuristic, Differentiable, ExpSpace, FunctionFamily};
use serde_json::{json, Value};

use crate::spec::ProblemSpec;
use crate::CliError;

const DEFAULT_GRID: usize = 101;
const RESIDUAL_GRID: usize = 1001;
const ECT_TRIALS: usize = 200;

fn seed() -> Result<u64, CliError> {
    match std::env::var("BERNSTEIN_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Spec(format!("BERNSTEIN_SEED must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

fn write(out: &Path, name: &str, contents: &str) -> Result<String, CliError> {
    let path = out.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(name.to_string())
}

fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

pub fn basis(problem: &ProblemSpec, out: &Path) -> Result<Value, CliError> {
    let spectrum = problem.spectrum()?;
    let iv = problem.interval()?;
    let tol = &problem.tolerances;
    let grid = problem.grid.unwrap_or(DEFAULT_GRID).max(2);
    let space = ExpSpace::shared(spectrum.clone());
    let basis = build_bernstein_basis_for(space.clone(), iv, tol)?;
    let n = basis.degree();

    let nonneg = verify_nonneg(&basis, grid.max(50 * (n + 1)))?;
    let ect = verify_ect_heuristic(spectrum, iv, ECT_TRIALS, (20 * (n + 1)).max(2000), seed()?)?;
    let coefficients: Vec<&[f64]> = basis.functions().iter().map(|p| p.coeffs()).collect();
    let names: Vec<String> = space.functions().iter().map(|f| f.to_string()).collect();
    let doc = json!({
        "spectrum": spectrum,
        "interval": iv,
        "canonical_basis": names,
        "coefficients": coefficients,
        "normalization": basis.normalization(),
        "warnings": basis.warnings(),
        "nonneg": nonneg,
        "ect": ect,
    });
    let files = vec![
        write(out, "basis.csv", &basis.to_csv(grid))?,
        write(out, "basis.json", &to_json(&doc))?,
    ];
    Ok(json!({
        "command": "basis",
        "degree": n,
        "globally_nonneg": nonneg.globally_nonneg(),
        "locally_nonneg": nonneg.locally_nonneg(),
        "ect_passed": ect.passed,
        "files": files,
    }))
}

pub fn operator(problem: &ProblemSpec, out: &Path) -> Result<Value, CliError> {
    let spectrum = problem.spectrum()?;
    let iv = problem.interval()?;
    let tol = &problem.tolerances;
    let space = ExpSpace::shared(spectrum.clone());
    let f0 = problem.function("f0", &space)?;
    let f1 = problem.function("f1", &space)?;
    let target = problem.target.is_some().then(|| problem.function("target", &space)).transpose()?;

    let op = build_operator_with(spectrum, iv, &f0, &f1, tol)?;
    let residuals = residual_report(&op, RESIDUAL_GRID, seed()?);
    let chain = match analyze(op.basis(), &f0, &f1, tol) {
        Ok(a) => json!(a),
        Err(e) => json!({ "error": { "kind": e.kind(), "message": e.to_string() } }),
    };
    let dump = op.dump();
    let doc = json!({
        "nodes": dump.nodes,
        "weights": dump.weights,
        "interval": dump.interval,
        "spectrum": dump.spectrum,
        "beta": op.coeffs().beta,
        "gamma": op.coeffs().gamma,
        "feasibility": op.feasibility(),
        "residuals": residuals,
        "chain": chain,
    });
    let mut files = vec![write(out, "operator.json", &to_json(&doc))?];
    if let Some(f) = target {
        let xs = iv.grid(problem.grid.unwrap_or(DEFAULT_GRID).max(2));
        let bf = op.apply_grid(|t| f.value(t), &xs);
        let mut csv = String::from("x,bn_f,f\n");
        for (x, v) in xs.iter().zip(bf) {
            writeln!(csv, "{},{},{}", fmt_f64(*x), fmt_f64(v), fmt_f64(f.value(*x))).unwrap();
        }
        files.push(write(out, "operator.csv", &csv)?);
    }
    Ok(json!({
        "command": "operator",
        "degree": op.basis().family().dim() - 1,
        "nodes": op.nodes(),
        "f0_residual": residuals.f0_residual,
        "f1_residual": residuals.f1_residual,
        "positive": residuals.positive,
        "files": files,
    }))
}

pub fn scan(problem: &ProblemSpec, out: &Path) -> Result<Value, CliError> {
    let range = problem.scan.ok_or_else(|| CliError::Spec("missing field `scan`".into()))?;
    let scan = counterexample_scan_with(range.b_min, range.b_max, range.steps, &problem.tolerances)?;
    let files = vec![
        write(out, "scan.csv", &scan.to_csv())?,
        write(out, "scan.json", &to_json(&scan))?,
    ];
    let feasible = scan.rows.iter().filter(|r| r.feasible).count();
    Ok(json!({
        "command": "scan",
        "rows": scan.rows.len(),
        "feasible": feasible,
        "infeasible": scan.rows.len() - feasible,
        "consistent": scan.consistent(),
        "files": files,
    }))
}
