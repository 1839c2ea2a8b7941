//! Rotated-quadratic-cone standard form and the conic solve.
//!
//! A [`ConicProblem`] minimizes a linear objective over variable boxes,
//! linear equalities `a·x = b`, linear inequalities `a·x ≤ b` and cone
//! memberships. Rotated cones `(x₀, x₁, x₂…)` mean `2·x₀·x₁ ≥ Σ xⱼ²`,
//! `x₀, x₁ ≥ 0`; quadratic cones mean `x₀ ≥ ‖(x₁…)‖`.
//!
//! The numerical work is delegated to Clarabel. A rotated cone is handed over
//! as the second-order cone `((x₀+x₁)/√2, (x₀−x₁)/√2, x₂…)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{self, Write};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relaxation::{ConeArg, RelaxedOpfModel, Sense};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: u32 = 200;

#[derive(Debug, Error, PartialEq)]
pub enum SocpError {
    #[error("{context} references variable {index}, but only {n} are registered")]
    UnregisteredVariable {
        context: String,
        index: usize,
        n: usize,
    },
    #[error("cone {0} has fewer than two entries")]
    ShortCone(usize),
    #[error("objective has {got} coefficients for {n} variables")]
    ObjectiveLength { got: usize, n: usize },
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("conic backend rejected the problem: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cone {
    Rotated(Vec<usize>),
    Quadratic(Vec<usize>),
}

impl Cone {
    pub fn members(&self) -> &[usize] {
        match self {
            Cone::Rotated(v) | Cone::Quadratic(v) => v,
        }
    }

    /// Distance-style violation at `x`: for rotated cones
    /// `max(0, Σxⱼ² − 2x₀x₁, −x₀, −x₁)`, for quadratic cones `max(0, ‖tail‖ − x₀)`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Cone::Rotated(v) => {
                let (a, b) = (x[v[0]], x[v[1]]);
                let sq: f64 = v[2..].iter().map(|&j| x[j] * x[j]).sum();
                (sq - 2.0 * a * b).max(-a).max(-b).max(0.0)
            }
            Cone::Quadratic(v) => {
                let norm = v[1..].iter().map(|&j| x[j] * x[j]).sum::<f64>().sqrt();
                (norm - x[v[0]]).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub names: Vec<String>,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub equalities: Vec<LinearRow>,
    /// Rows `a·x ≤ rhs`.
    pub inequalities: Vec<LinearRow>,
    pub cones: Vec<Cone>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.names.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), SocpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return Err(SocpError::ObjectiveLength {
                got: self.lower.len().min(self.upper.len()),
                n,
            });
        }
        let check = |context: &str, j: usize| {
            if j >= n {
                Err(SocpError::UnregisteredVariable {
                    context: context.to_string(),
                    index: j,
                    n,
                })
            } else {
                Ok(())
            }
        };
        for (r, row) in self.equalities.iter().enumerate() {
            for &(j, _) in &row.terms {
                check(&format!("equality {r}"), j)?;
            }
        }
        for (r, row) in self.inequalities.iter().enumerate() {
            for &(j, _) in &row.terms {
                check(&format!("inequality {r}"), j)?;
            }
        }
        for (c, cone) in self.cones.iter().enumerate() {
            let m = cone.members();
            let min = match cone {
                Cone::Rotated(_) => 2,
                Cone::Quadratic(_) => 1,
            };
            if m.len() < min {
                return Err(SocpError::ShortCone(c));
            }
            for &j in m {
                check(&format!("cone {c}"), j)?;
            }
        }
        Ok(())
    }

    /// Largest absolute value among right-hand sides, finite bounds and
    /// constraint coefficients.
    pub fn data_norm(&self) -> f64 {
        let rows = self.equalities.iter().chain(&self.inequalities);
        let coeffs = rows
            .flat_map(|r| r.terms.iter().map(|t| t.1.abs()).chain([r.rhs.abs()]))
            .fold(0.0, f64::max);
        self.lower
            .iter()
            .chain(&self.upper)
            .filter(|v| v.is_finite())
            .fold(coeffs, |m, v| m.max(v.abs()))
    }
}

/// Maximum violation per constraint family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equality: f64,
    pub inequality: f64,
    pub bound: f64,
    pub cone: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.equality
            .max(self.inequality)
            .max(self.bound)
            .max(self.cone)
    }
}

pub fn residuals(problem: &ConicProblem, x: &[f64]) -> ResidualReport {
    let equality = problem
        .equalities
        .iter()
        .map(|r| (r.eval(x) - r.rhs).abs())
        .fold(0.0, f64::max);
    let inequality = problem
        .inequalities
        .iter()
        .map(|r| (r.eval(x) - r.rhs).max(0.0))
        .fold(0.0, f64::max);
    let bound = (0..problem.num_vars())
        .map(|j| (problem.lower[j] - x[j]).max(x[j] - problem.upper[j]).max(0.0))
        .fold(0.0, f64::max);
    let cone = problem
        .cones
        .iter()
        .map(|c| c.violation(x))
        .fold(0.0, f64::max);
    ResidualReport {
        equality,
        inequality,
        bound,
        cone,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The backend stopped at its reduced accuracy level; `x` is its last iterate.
    Inaccurate,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual objective reported by the interior-point method.
    pub dual_objective: f64,
    pub residuals: ResidualReport,
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative KKT tolerance.
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Converts the relaxed model to standard form. Variables keep their model
/// index; every constant cone argument becomes one extra variable fixed by
/// its bounds.
pub fn assemble(model: &RelaxedOpfModel) -> Result<ConicProblem, SocpError> {
    let data = &model.data;
    let n = data.num_vars();
    let mut p = ConicProblem::new();
    for v in &data.variables {
        p.add_var(v.name.clone(), v.lower, v.upper, 0.0);
    }
    let check = |context: &str, j: usize| {
        if j >= n {
            Err(SocpError::UnregisteredVariable {
                context: context.to_string(),
                index: j,
                n,
            })
        } else {
            Ok(j)
        }
    };
    for &(v, c) in &data.objective.terms {
        let j = check("objective", v.0)?;
        p.objective[j] += c;
    }
    for (r, con) in data.constraints.iter().enumerate() {
        let mut terms = Vec::with_capacity(con.expr.terms.len());
        for &(v, c) in &con.expr.terms {
            terms.push((check(&format!("constraint {r}"), v.0)?, c));
        }
        let rhs = -con.expr.constant;
        match con.sense {
            Sense::Eq => p.equalities.push(LinearRow { terms, rhs }),
            Sense::Le => p.inequalities.push(LinearRow { terms, rhs }),
            Sense::Ge => p.inequalities.push(LinearRow {
                terms: terms.into_iter().map(|(j, c)| (j, -c)).collect(),
                rhs: -rhs,
            }),
        }
    }
    for (c, cone) in data.cones.iter().enumerate() {
        let mut members = Vec::with_capacity(2 + cone.tail.len());
        for (slot, arg) in cone.heads.iter().chain(&cone.tail).enumerate() {
            let j = match *arg {
                ConeArg::Var(v) => check(&format!("cone {c}"), v.0)?,
                ConeArg::Const(k) => p.add_var(format!("const[{c}.{slot}]"), k, k, 0.0),
            };
            members.push(j);
        }
        p.cones.push(Cone::Rotated(members));
    }
    Ok(p)
}

/// Solves the problem to relative KKT tolerance `opts.tol`.
///
/// Infeasible and unbounded problems come back as a status, not an error;
/// errors are reserved for malformed input.
pub fn solve(problem: &ConicProblem, opts: &SolveOptions) -> Result<ConicSolution, SocpError> {
    problem.validate()?;
    if !(opts.tol > 0.0) {
        return Err(SocpError::Tolerance(opts.tol));
    }
    let n = problem.num_vars();

    if (0..n).any(|j| problem.lower[j] > problem.upper[j]) {
        let x = vec![f64::NAN; n];
        return Ok(ConicSolution {
            status: SolveStatus::Infeasible,
            residuals: ResidualReport::default(),
            x,
            objective: f64::NAN,
            dual_objective: f64::NAN,
            iterations: 0,
        });
    }
    if n == 0 {
        return Ok(ConicSolution {
            status: SolveStatus::Optimal,
            x: Vec::new(),
            objective: 0.0,
            dual_objective: 0.0,
            residuals: ResidualReport::default(),
            iterations: 0,
        });
    }

    // Fixed variables are substituted into the right-hand sides; the backend
    // only sees the free columns.
    let mut column = vec![None; n];
    let mut n_free = 0;
    for j in 0..n {
        if problem.lower[j] != problem.upper[j] {
            column[j] = Some(n_free);
            n_free += 1;
        }
    }

    // Rows of A·x + s = b, s ∈ K, blocked as zero | nonnegative | cones.
    let mut rows_i = Vec::new();
    let mut rows_j = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::new();
    // Returns false when the row has no free column left.
    let mut push_row = |terms: &[(usize, f64)], rhs: f64, keep_empty: bool, b: &mut Vec<f64>| {
        let r = b.len();
        let mut rhs = rhs;
        let mut any = false;
        for &(j, a) in terms {
            match column[j] {
                Some(k) => {
                    rows_i.push(r);
                    rows_j.push(k);
                    vals.push(a);
                    any = true;
                }
                None => rhs -= a * problem.lower[j],
            }
        }
        if any || keep_empty {
            b.push(rhs);
            Ok(())
        } else {
            Err(rhs)
        }
    };
    let constant_tol = opts.tol * (1.0 + problem.data_norm());

    let mut zero = 0;
    let mut contradiction = false;
    for row in &problem.equalities {
        match push_row(&row.terms, row.rhs, false, &mut b) {
            Ok(()) => zero += 1,
            Err(rhs) => contradiction |= rhs.abs() > constant_tol,
        }
    }
    let mut nonneg = 0;
    for row in &problem.inequalities {
        match push_row(&row.terms, row.rhs, false, &mut b) {
            Ok(()) => nonneg += 1,
            Err(rhs) => contradiction |= rhs < -constant_tol,
        }
    }
    for j in 0..n {
        if column[j].is_none() {
            continue;
        }
        if problem.upper[j].is_finite() {
            let _ = push_row(&[(j, 1.0)], problem.upper[j], true, &mut b);
            nonneg += 1;
        }
        if problem.lower[j].is_finite() {
            let _ = push_row(&[(j, -1.0)], -problem.lower[j], true, &mut b);
            nonneg += 1;
        }
    }
    let mut cones = Vec::new();
    if zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(zero));
    }
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }
    for cone in &problem.cones {
        // s = M·x  ⇔  −M·x + s = 0
        match cone {
            Cone::Rotated(v) => {
                let h = FRAC_1_SQRT_2;
                let _ = push_row(&[(v[0], -h), (v[1], -h)], 0.0, true, &mut b);
                let _ = push_row(&[(v[0], -h), (v[1], h)], 0.0, true, &mut b);
                for &j in &v[2..] {
                    let _ = push_row(&[(j, -1.0)], 0.0, true, &mut b);
                }
                cones.push(SupportedConeT::SecondOrderConeT(v.len()));
            }
            Cone::Quadratic(v) => {
                for &j in v {
                    let _ = push_row(&[(j, -1.0)], 0.0, true, &mut b);
                }
                cones.push(SupportedConeT::SecondOrderConeT(v.len()));
            }
        }
    }
    let fixed_point = || -> Vec<f64> {
        (0..n)
            .map(|j| if column[j].is_none() { problem.lower[j] } else { 0.0 })
            .collect()
    };
    if contradiction {
        return Ok(ConicSolution {
            status: SolveStatus::Infeasible,
            residuals: ResidualReport::default(),
            x: vec![f64::NAN; n],
            objective: f64::NAN,
            dual_objective: f64::NAN,
            iterations: 0,
        });
    }
    if n_free == 0 {
        let x = fixed_point();
        let report = residuals(problem, &x);
        let status = if report.max() <= constant_tol {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        };
        let objective = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        return Ok(ConicSolution {
            status,
            residuals: report,
            x,
            objective,
            dual_objective: objective,
            iterations: 0,
        });
    }

    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n_free, rows_i, rows_j, vals);
    let p = CscMatrix::zeros((n_free, n_free));
    let settings = DefaultSettings {
        max_iter: opts.max_iter,
        verbose: false,
        tol_gap_abs: opts.tol,
        tol_gap_rel: opts.tol,
        tol_feas: opts.tol,
        tol_ktratio: opts.tol.sqrt().min(1e-6),
        max_threads: 1,
        presolve_enable: false,
        ..DefaultSettings::default()
    };
    // The argmin does not depend on the cost scale; a unit-norm cost keeps the
    // backend's initial point well scaled when weights span many decades.
    let cost_scale = problem
        .objective
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(f64::MIN_POSITIVE);
    let q: Vec<f64> = (0..n)
        .filter(|&j| column[j].is_some())
        .map(|j| problem.objective[j] / cost_scale)
        .collect();
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .map_err(|e| SocpError::Backend(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    log::debug!("clarabel status {:?} after {} iterations", sol.status, sol.iterations);
    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::Inaccurate,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
        _ => SolveStatus::NumericalFailure,
    };
    let mut x = fixed_point();
    for j in 0..n {
        if let Some(k) = column[j] {
            x[j] = sol.x[k];
        }
    }
    let report = residuals(problem, &x);
    let objective = problem
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();
    Ok(ConicSolution {
        status,
        residuals: report,
        objective,
        dual_objective: sol.obj_val_dual * cost_scale,
        x,
        iterations: sol.iterations,
    })
}

impl ConicSolution {
    /// `|primal − dual| / (1 + |primal|)`.
    pub fn relative_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs() / (1.0 + self.objective.abs())
    }
}

/// Writes the standard form as plain text: a header, then `obj`, `bound`,
/// `eq`/`le` triplets with their `rhs` lines, and one `rcone`/`qcone` line per
/// cone listing its member columns.
pub fn write_dump(problem: &ConicProblem, mut w: impl Write) -> io::Result<()> {
    writeln!(
        w,
        "# vars {} eq {} le {} cones {}",
        problem.num_vars(),
        problem.equalities.len(),
        problem.inequalities.len(),
        problem.cones.len()
    )?;
    for (j, name) in problem.names.iter().enumerate() {
        writeln!(w, "var {j} {name}")?;
    }
    for (j, c) in problem.objective.iter().enumerate() {
        if *c != 0.0 {
            writeln!(w, "obj {j} {c:e}")?;
        }
    }
    for j in 0..problem.num_vars() {
        writeln!(w, "bound {j} {:e} {:e}", problem.lower[j], problem.upper[j])?;
    }
    for (tag, rows) in [("eq", &problem.equalities), ("le", &problem.inequalities)] {
        for (r, row) in rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                writeln!(w, "{tag} {r} {j} {a:e}")?;
            }
            writeln!(w, "{tag}rhs {r} {:e}", row.rhs)?;
        }
    }
    for cone in &problem.cones {
        let (tag, v) = match cone {
            Cone::Rotated(v) => ("rcone", v),
            Cone::Quadratic(v) => ("qcone", v),
        };
        let cols: Vec<String> = v.iter().map(usize::to_string).collect();
        writeln!(w, "{tag} {}", cols.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn tight_square_epigraph() {
        // minimize w  s.t.  2·w·½ ≥ p²,  p = 2
        let mut pr = ConicProblem::new();
        let w = pr.add_var("w", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let half = pr.add_var("half", 0.5, 0.5, 0.0);
        let p = pr.add_var("p", 2.0, 2.0, 0.0);
        pr.cones.push(Cone::Rotated(vec![w, half, p]));
        let s = solve(&pr, &opts()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[w] - 4.0).abs() < 1e-6, "{}", s.x[w]);
    }

    #[test]
    fn reciprocal_at_rated_efficiency() {
        // minimize t̂  s.t.  2·t̂·s ≥ 2,  s ≤ 0.352
        let mut pr = ConicProblem::new();
        let t = pr.add_var("t", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let s = pr.add_var("s", f64::NEG_INFINITY, 0.352, 0.0);
        let k = pr.add_var("sqrt2", 2f64.sqrt(), 2f64.sqrt(), 0.0);
        pr.cones.push(Cone::Rotated(vec![t, s, k]));
        let sol = solve(&pr, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[t] - 1.0 / 0.352).abs() < 1e-6);
        assert!((sol.x[t] - 2.8409).abs() < 1e-4);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut pr = ConicProblem::new();
        pr.add_var("p", 1.0, 0.0, 1.0);
        assert_eq!(solve(&pr, &opts()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut pr = ConicProblem::new();
        let p = pr.add_var("p", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        pr.inequalities.push(LinearRow {
            terms: vec![(p, -1.0)],
            rhs: -1.0,
        });
        pr.inequalities.push(LinearRow {
            terms: vec![(p, 1.0)],
            rhs: 0.0,
        });
        assert_eq!(solve(&pr, &opts()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_objective_is_reported() {
        let mut pr = ConicProblem::new();
        pr.add_var("p", f64::NEG_INFINITY, 0.0, 1.0);
        assert_eq!(solve(&pr, &opts()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn quadratic_cone_norm_minimization() {
        // minimize t  s.t.  t ≥ ‖(x, y)‖, x = 3, y = 4
        let mut pr = ConicProblem::new();
        let t = pr.add_var("t", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let x = pr.add_var("x", 3.0, 3.0, 0.0);
        let y = pr.add_var("y", 4.0, 4.0, 0.0);
        pr.cones.push(Cone::Quadratic(vec![t, x, y]));
        let s = solve(&pr, &opts()).unwrap();
        assert!((s.objective - 5.0).abs() < 1e-6);
    }

    #[test]
    fn residual_examples() {
        let mut pr = ConicProblem::new();
        let a = pr.add_var("a", 0.0, 10.0, 0.0);
        let b = pr.add_var("b", 0.0, 10.0, 0.0);
        let c = pr.add_var("c", -10.0, 10.0, 0.0);
        pr.equalities.push(LinearRow {
            terms: vec![(a, 3.0), (b, 1.0)],
            rhs: 4.0,
        });
        pr.cones.push(Cone::Rotated(vec![a, b, c]));
        let x = [1.0, 1.0, 1.0];
        assert!(residuals(&pr, &x).max() <= 1e-12);
        let r = residuals(&pr, &[1.0 + 1e-3, 1.0, 1.0]);
        assert!((r.equality - 3e-3).abs() < 1e-12);
        let r = residuals(&pr, &[0.0, 0.0, 1.0]);
        assert_eq!(r.cone, 1.0);
    }

    #[test]
    fn empty_problem_is_trivially_optimal() {
        let s = solve(&ConicProblem::new(), &opts()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn unregistered_variable_is_rejected() {
        let mut pr = ConicProblem::new();
        pr.add_var("x", 0.0, 1.0, 1.0);
        pr.cones.push(Cone::Rotated(vec![0, 3]));
        assert!(matches!(
            solve(&pr, &opts()),
            Err(SocpError::UnregisteredVariable { index: 3, .. })
        ));
    }

    #[test]
    fn dump_lists_every_family() {
        let mut pr = ConicProblem::new();
        let w = pr.add_var("w", 0.0, f64::INFINITY, 1.0);
        let h = pr.add_var("h", 0.5, 0.5, 0.0);
        pr.equalities.push(LinearRow {
            terms: vec![(w, 1.0)],
            rhs: 2.0,
        });
        pr.cones.push(Cone::Rotated(vec![w, h]));
        let mut out = Vec::new();
        write_dump(&pr, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# vars 2 eq 1 le 0 cones 1\n"));
        assert!(text.contains("eq 0 0 1e0\n"));
        assert!(text.contains("rcone 0 1\n"));
    }
}
