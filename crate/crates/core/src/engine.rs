//! Fractional-programming dispatch loop.
//!
//! Every outer iteration builds the relaxation for the current auxiliary
//! multipliers and linearization points, solves it, recomputes the true ratio
//! terms from the dispatch, updates the multipliers in closed form and moves
//! the linearization points to the solved voltage products.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractional::{
    self, ratio_sum, surrogate, AuxiliaryState, FractionalError, RatioTerm,
    DEFAULT_NUMERATOR_CLAMP,
};
use crate::netmodel::{validate_case, DomainError, GeneratorClass, NetworkCase, Violation};
use crate::relaxation::{
    cone_constraints, Layout, LinearizationPoints, ModelOptions, RelaxationError, RelaxedOpfModel,
    Topology,
};
use crate::socp::{self, ResidualReport, SocpError, SolveOptions, SolveStatus};

/// Consecutive objective increases tolerated before giving up.
pub const DIVERGENCE_LIMIT: usize = 10;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("case is invalid: {}", join(.0))]
    InvalidCase(Vec<Violation>),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("variant {variant} is not applicable: {reason}")]
    Variant { variant: Variant, reason: String },
    #[error(transparent)]
    Relaxation(#[from] RelaxationError),
    #[error(transparent)]
    Socp(#[from] SocpError),
    #[error(transparent)]
    Fractional(#[from] FractionalError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Dispatch model variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// All units, free dispatch.
    Full,
    /// Main units only.
    A,
    /// One main unit and one auxiliary unit.
    B,
    /// All units at a common per-unit loading.
    C,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "proposed",
            Variant::A => "A",
            Variant::B => "B",
            Variant::C => "C",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            "C" | "c" => Ok(Variant::C),
            "full" | "proposed" => Ok(Variant::Full),
            other => Err(format!("unknown variant '{other}' (expected A, B, C or full)")),
        }
    }
}

impl Variant {
    /// Model restrictions for this variant on `case`.
    pub fn options(self, case: &NetworkCase) -> Result<ModelOptions, EngineError> {
        let n = case.generators.len();
        let class = |g: usize| case.generators[g].class;
        let first = |c: GeneratorClass| (0..n).find(|&g| class(g) == Some(c));
        let mut options = ModelOptions::full(n);
        match self {
            Variant::Full => {}
            Variant::A => {
                if first(GeneratorClass::Main).is_none() {
                    return Err(self.inapplicable("no main units"));
                }
                for (g, off) in options.fixed_off.iter_mut().enumerate() {
                    *off = class(g) != Some(GeneratorClass::Main);
                }
            }
            Variant::B => {
                let main = first(GeneratorClass::Main).ok_or_else(|| self.inapplicable("no main units"))?;
                let aux = first(GeneratorClass::Auxiliary)
                    .ok_or_else(|| self.inapplicable("no auxiliary units"))?;
                for (g, off) in options.fixed_off.iter_mut().enumerate() {
                    *off = g != main && g != aux;
                }
            }
            Variant::C => options.equal_sharing = true,
        }
        Ok(options)
    }

    fn inapplicable(self, reason: &str) -> EngineError {
        EngineError::Variant {
            variant: self,
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative change of the ratio objective treated as converged.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub inner_tol: f64,
    pub inner_max_iter: u32,
    /// Lower clamp on numerators in the auxiliary update.
    pub clamp: f64,
    /// Minimum norm of a linearization point.
    pub lin_floor: f64,
    pub variant: Variant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-6,
            max_outer: 500,
            inner_tol: socp::DEFAULT_TOLERANCE,
            inner_max_iter: socp::DEFAULT_MAX_ITER,
            clamp: DEFAULT_NUMERATOR_CLAMP,
            lin_floor: 1e-4,
            variant: Variant::Full,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        for (name, v) in [
            ("outer_tol", self.outer_tol),
            ("inner_tol", self.inner_tol),
            ("clamp", self.clamp),
            ("lin_floor", self.lin_floor),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(EngineError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer == 0 || self.inner_max_iter == 0 {
            return Err(EngineError::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispatchStatus {
    Converged,
    IterationLimit,
    Infeasible,
    NumericalFailure,
}

impl fmt::Display for DispatchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DispatchStatus::Converged => "converged",
            DispatchStatus::IterationLimit => "iteration-limit",
            DispatchStatus::Infeasible => "infeasible",
            DispatchStatus::NumericalFailure => "numerical-failure",
        })
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    /// Ratio objective `Σ P·(1/η)·Δt` of this iterate.
    pub objective: f64,
    /// Surrogate of this iterate under the multipliers it was solved with.
    pub surrogate: f64,
    /// Surrogate after the multiplier update, same iterate.
    pub surrogate_updated: f64,
    /// `surrogate − objective`.
    pub equiv_gap: f64,
    /// Largest slack `2u_iu_k − W_R² − W_I²` over voltage cones.
    pub cone_gap: f64,
    /// Largest cutting-function value of the updated multipliers.
    pub cut_max: f64,
    pub conic_objective: f64,
    pub conic_iterations: u32,
    /// Tolerance the accepted conic solve was certified at.
    pub conic_tol: f64,
    /// The conic solve stopped short of certified optimality but passed the
    /// feasibility check.
    pub inexact: bool,
    /// Largest move of a linearization point at the refresh.
    pub point_shift: f64,
}

/// Recovered dispatch for the whole horizon. Per-time vectors are `[t][unit]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub generator_ids: Vec<String>,
    pub storage_ids: Vec<String>,
    pub dt_hours: f64,
    pub p_g: Vec<Vec<f64>>,
    pub q_g: Vec<Vec<f64>>,
    /// Storage output, discharge positive.
    pub p_b: Vec<Vec<f64>>,
    /// Stored energy at the end of each step, MWh.
    pub energy: Vec<Vec<f64>>,
    pub soc: Vec<Vec<f64>>,
    pub voltage: Vec<Vec<f64>>,
    /// Bus-id pairs of the angle columns.
    pub branches: Vec<(u32, u32)>,
    /// Exact line angle; `None` when `W_R = W_I = 0`.
    pub angle: Vec<Vec<Option<f64>>>,
}

impl Schedule {
    pub fn horizon(&self) -> usize {
        self.p_g.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub status: DispatchStatus,
    pub variant: Variant,
    /// Best iterate by ratio objective; absent if no iterate was accepted.
    pub schedule: Option<Schedule>,
    pub fuel_liters: Option<f64>,
    pub objective: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub outer_iterations: usize,
    pub best_iteration: Option<usize>,
    pub conic_iterations: u64,
    /// Loosest tolerance any accepted conic solve needed.
    pub conic_tol: f64,
    /// Outer iterations that used an inexact conic solve.
    pub inexact_iterations: usize,
    /// Cone slack at the reported iterate.
    pub max_cone_gap: f64,
    pub max_cone_violation: f64,
    /// Surrogate minus ratio objective for the reported iterate and its updated multipliers.
    pub equivalence_gap: f64,
    /// Largest `|θ − atan2(W_I, W_R)|` at the reported iterate.
    pub max_angle_discrepancy: f64,
    /// Residuals of the conic solve that stopped the run, if it failed.
    pub failure: Option<ResidualReport>,
}

/// Bus voltages and exact line angles recovered from lifted variables.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredState {
    pub voltage: Vec<Vec<f64>>,
    pub angle: Vec<Vec<Option<f64>>>,
    pub max_discrepancy: f64,
    /// `(t, branch)` pairs whose angle is undefined.
    pub undefined: Vec<(usize, usize)>,
}

/// `V = (√2·u)^½`, `θ = atan2(W_I, W_R)`, compared against the model's `θ`.
pub fn recover_state(layout: &Layout, x: &[f64]) -> RecoveredState {
    let mut out = RecoveredState {
        voltage: Vec::new(),
        angle: Vec::new(),
        max_discrepancy: 0.0,
        undefined: Vec::new(),
    };
    for t in 0..layout.u.len() {
        out.voltage
            .push(layout.u[t].iter().map(|u| (SQRT_2 * x[u.0]).max(0.0).sqrt()).collect());
        let mut row = Vec::with_capacity(layout.wr[t].len());
        for k in 0..layout.wr[t].len() {
            let (wr, wi) = (x[layout.wr[t][k].0], x[layout.wi[t][k].0]);
            if wr == 0.0 && wi == 0.0 {
                out.undefined.push((t, k));
                row.push(None);
                continue;
            }
            let exact = wi.atan2(wr);
            out.max_discrepancy = out.max_discrepancy.max((exact - x[layout.theta[t][k].0]).abs());
            row.push(Some(exact));
        }
        out.angle.push(row);
    }
    out
}

/// `(1/α) Σ_t Σ_g P/η(P/P_base)·Δt`, from the schedule alone.
pub fn compute_fuel(schedule: &Schedule, case: &NetworkCase) -> Result<f64, DomainError> {
    let alpha = case.alpha();
    let mut total = 0.0;
    for row in &schedule.p_g {
        for (gen, &p) in case.generators.iter().zip(row) {
            total += gen.fuel_rate(p, alpha)? * schedule.dt_hours;
        }
    }
    Ok(total)
}

/// Ratio terms at a dispatch, `k = t·N_g + g`.
pub fn ratio_terms(case: &NetworkCase, p_g: &[Vec<f64>]) -> Result<Vec<RatioTerm>, EngineError> {
    let mut terms = Vec::with_capacity(case.n_terms());
    for (t, row) in p_g.iter().enumerate() {
        for (g, (gen, &p)) in case.generators.iter().zip(row).enumerate() {
            let eta = gen.efficiency_at(p);
            if !(eta > 0.0) {
                return Err(DomainError::NonpositiveEfficiency {
                    id: gen.id.clone(),
                    p_mw: p,
                    eta,
                }
                .into());
            }
            terms.push(RatioTerm::new(g, t, p.max(0.0), 1.0 / eta)?);
        }
    }
    Ok(terms)
}

fn extract_schedule(case: &NetworkCase, topo: &Topology, layout: &Layout, x: &[f64]) -> Schedule {
    let horizon = case.horizon();
    let dt = case.dt();
    let mut p_g = Vec::with_capacity(horizon);
    let mut q_g = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (mut prow, mut qrow) = (Vec::new(), Vec::new());
        for (g, gen) in case.generators.iter().enumerate() {
            let (lo, hi) = (gen.p_min, gen.p_max);
            prow.push(x[layout.pg[t][g].0].clamp(lo, hi));
            qrow.push(x[layout.qg[t][g].0].clamp(gen.q_min, gen.q_max));
        }
        p_g.push(prow);
        q_g.push(qrow);
    }
    let mut p_b = vec![Vec::with_capacity(case.storage.len()); horizon];
    let mut energy = vec![Vec::with_capacity(case.storage.len()); horizon];
    let mut soc = vec![Vec::with_capacity(case.storage.len()); horizon];
    for (s, ess) in case.storage.iter().enumerate() {
        let mut e = ess.initial_mwh;
        for t in 0..horizon {
            let p = x[layout.pb[t][s].0].clamp(-ess.max_charge_mw, ess.max_discharge_mw);
            e -= ess.efficiency * p * dt;
            p_b[t].push(p);
            energy[t].push(e);
            soc[t].push(e / ess.capacity_mwh);
        }
    }
    let state = recover_state(layout, x);
    Schedule {
        generator_ids: case.generators.iter().map(|g| g.id.clone()).collect(),
        storage_ids: case.storage.iter().map(|s| s.id.clone()).collect(),
        dt_hours: dt,
        p_g,
        q_g,
        p_b,
        energy,
        soc,
        voltage: state.voltage,
        branches: topo
            .branches
            .iter()
            .map(|b| (case.buses[b.from].id, case.buses[b.to].id))
            .collect(),
        angle: state.angle,
    }
}

/// Largest slack and largest violation of the voltage-product cones.
fn cone_gap(model: &RelaxedOpfModel, x: &[f64]) -> (f64, f64) {
    (0..model.layout.u.len())
        .flat_map(|t| cone_constraints(&model.topology, &model.layout, t))
        .fold((0.0, 0.0), |(gap, viol), c| {
            (gap.max(c.slack(x)), viol.max(c.violation(x)))
        })
}

/// Retries a solve that the backend could not certify at `opts.tol`.
pub const TOLERANCE_FALLBACK: [f64; 3] = [10.0, 100.0, 1000.0];

/// Largest row, bound or voltage-cone residual tolerated in an inexact solve.
pub const INEXACT_FEASIBILITY: f64 = 1e-6;

/// Largest relative primal-dual gap tolerated in an inexact solve.
pub const INEXACT_GAP: f64 = 1e-4;

/// An inexact conic solution is usable when the network part of the model
/// holds tightly. Surrogate epigraph cones may be loose: the ratio objective
/// is evaluated from the recovered outputs, not from the epigraph variables.
fn usable_inexact(model: &RelaxedOpfModel, sol: &socp::ConicSolution) -> bool {
    let r = &sol.residuals;
    let (_, network_cone) = cone_gap(model, &sol.x);
    r.equality.max(r.inequality).max(r.bound).max(network_cone) <= INEXACT_FEASIBILITY
        && sol.relative_gap() <= INEXACT_GAP
}

/// Outcome of one conic solve after fallback.
struct InnerSolve {
    sol: socp::ConicSolution,
    tol: f64,
    inexact: bool,
}

/// Solves at the configured tolerance, retrying at the looser tolerances of
/// [`TOLERANCE_FALLBACK`] until the backend certifies optimality or returns
/// a usable inexact point.
fn solve_with_fallback(
    model: &RelaxedOpfModel,
    problem: &socp::ConicProblem,
    opts: &SolveOptions,
    iterations: &mut u64,
) -> Result<InnerSolve, EngineError> {
    let mut tol = opts.tol;
    let mut factors = TOLERANCE_FALLBACK.iter();
    loop {
        let sol = socp::solve(problem, &SolveOptions { tol, ..*opts })?;
        *iterations += u64::from(sol.iterations);
        let unsettled = matches!(
            sol.status,
            SolveStatus::Inaccurate | SolveStatus::NumericalFailure | SolveStatus::IterationLimit
        );
        let inexact = unsettled && usable_inexact(model, &sol);
        match factors.next() {
            Some(f) if unsettled && !inexact => {
                tol = opts.tol * f;
                log::debug!("retrying conic solve at tolerance {tol:e}");
            }
            _ => return Ok(InnerSolve { sol, tol, inexact }),
        }
    }
}

struct Accepted {
    iter: usize,
    objective: f64,
    schedule: Schedule,
    cone_gap: f64,
    cone_violation: f64,
    equivalence_gap: f64,
    angle_discrepancy: f64,
}

/// Runs the fractional-programming loop for `config.variant`.
///
/// Convergence requires the relative change of the ratio objective to drop
/// below `outer_tol` while the multipliers carried into the iteration are
/// already a fixed point of the update: refreshing them lowers the surrogate
/// by at most `outer_tol·(1 + |H|)`. The reported schedule is the best iterate.
pub fn solve_dispatch(case: &NetworkCase, config: &SolverConfig) -> Result<DispatchSolution, EngineError> {
    config.validate()?;
    let violations = validate_case(case);
    if !violations.is_empty() {
        return Err(EngineError::InvalidCase(violations));
    }
    let options = config.variant.options(case)?;
    let dt = case.dt();
    let opts = SolveOptions {
        tol: config.inner_tol,
        max_iter: config.inner_max_iter,
    };

    let topo = Topology::new(case);
    let mut aux = AuxiliaryState::ones(case.n_terms());
    let mut points = LinearizationPoints::flat(case.horizon(), topo.branches.len());
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut best: Option<Accepted> = None;
    let mut conic_iterations = 0u64;
    let mut loosest_tol = 0.0f64;
    let mut status = DispatchStatus::IterationLimit;
    let mut failure = None;
    let mut increases = 0usize;
    let mut inexact_iterations = 0usize;

    for iter in 1..=config.max_outer {
        let model = RelaxedOpfModel::build(case, &aux, &points, &options)?;
        let problem = socp::assemble(&model)?;
        let InnerSolve {
            sol,
            tol: tol_used,
            inexact,
        } = solve_with_fallback(&model, &problem, &opts, &mut conic_iterations)?;
        loosest_tol = loosest_tol.max(tol_used);
        if inexact {
            inexact_iterations += 1;
            log::debug!("outer iteration {iter} accepted an inexact conic solve");
        }
        match sol.status {
            SolveStatus::Optimal => {}
            _ if inexact => {}
            SolveStatus::Infeasible => {
                status = DispatchStatus::Infeasible;
                failure = Some(sol.residuals);
                break;
            }
            other => {
                log::warn!("conic solve at outer iteration {iter} ended with {other:?}");
                status = DispatchStatus::NumericalFailure;
                failure = Some(sol.residuals);
                break;
            }
        }
        let x = &sol.x;
        let schedule = extract_schedule(case, &topo, &model.layout, x);
        let terms = ratio_terms(case, &schedule.p_g)?;
        let objective = ratio_sum(&terms, dt);
        let surrogate_in = surrogate(&terms, &aux, dt);
        let next_aux = AuxiliaryState::updated(&terms, config.clamp)?;
        let surrogate_out = surrogate(&terms, &next_aux, dt);
        let (gap, viol) = cone_gap(&model, x);
        let state = recover_state(&model.layout, x);

        let solved: Vec<Vec<(f64, f64)>> = (0..case.horizon())
            .map(|t| {
                (0..topo.branches.len())
                    .map(|k| (x[model.layout.wr[t][k].0], x[model.layout.wi[t][k].0]))
                    .collect()
            })
            .collect();
        let previous = points.clone();
        points.refresh(&solved, config.lin_floor);

        let prev_objective = trace.last().map(|r| r.objective);
        trace.push(TraceRow {
            iter,
            objective,
            surrogate: surrogate_in,
            surrogate_updated: surrogate_out,
            equiv_gap: surrogate_in - objective,
            cone_gap: gap,
            cut_max: next_aux.max_cutting_violation().max(0.0),
            conic_objective: sol.objective,
            conic_iterations: sol.iterations,
            conic_tol: tol_used,
            inexact,
            point_shift: points.distance(&previous),
        });
        log::debug!(
            "iter {iter}: H={objective:.9e} F={surrogate_in:.9e} gap={:.3e} cone={gap:.3e}",
            surrogate_in - objective
        );

        if best.as_ref().map_or(true, |b| objective < b.objective) {
            best = Some(Accepted {
                iter,
                objective,
                schedule,
                cone_gap: gap,
                cone_violation: viol,
                equivalence_gap: fractional::equivalence_gap(&terms, &next_aux, dt),
                angle_discrepancy: state.max_discrepancy,
            });
        }

        if let Some(prev) = prev_objective {
            let scale = objective.abs().max(prev.abs()).max(1.0);
            let settled = (objective - prev).abs() <= config.outer_tol * scale;
            let consistent =
                surrogate_in - surrogate_out <= config.outer_tol * (1.0 + objective.abs());
            if settled && consistent {
                status = DispatchStatus::Converged;
                break;
            }
            if objective > prev + config.outer_tol * scale {
                increases += 1;
                if increases >= DIVERGENCE_LIMIT {
                    status = DispatchStatus::NumericalFailure;
                    break;
                }
            } else {
                increases = 0;
            }
        }
        aux = next_aux;
    }

    let outer_iterations = trace.len();
    let mut out = DispatchSolution {
        status,
        variant: config.variant,
        schedule: None,
        fuel_liters: None,
        objective: None,
        trace,
        outer_iterations,
        best_iteration: None,
        conic_iterations,
        conic_tol: loosest_tol,
        inexact_iterations,
        max_cone_gap: 0.0,
        max_cone_violation: 0.0,
        equivalence_gap: 0.0,
        max_angle_discrepancy: 0.0,
        failure,
    };
    if status == DispatchStatus::Infeasible {
        return Ok(out);
    }
    if let Some(b) = best {
        out.fuel_liters = Some(compute_fuel(&b.schedule, case)?);
        out.objective = Some(b.objective);
        out.best_iteration = Some(b.iter);
        out.max_cone_gap = b.cone_gap;
        out.max_cone_violation = b.cone_violation;
        out.equivalence_gap = b.equivalence_gap;
        out.max_angle_discrepancy = b.angle_discrepancy;
        out.schedule = Some(b.schedule);
    }
    Ok(out)
}

/// Fuel of one variant in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub status: DispatchStatus,
    pub fuel_liters: Option<f64>,
    /// Fuel burnt up to the end of each step.
    pub cumulative: Vec<f64>,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub horizon: usize,
    pub results: Vec<VariantResult>,
}

impl Comparison {
    pub fn get(&self, variant: Variant) -> Option<&VariantResult> {
        self.results.iter().find(|r| r.variant == variant)
    }
}

/// Cumulative fuel per step of a schedule.
pub fn cumulative_fuel(schedule: &Schedule, case: &NetworkCase) -> Result<Vec<f64>, DomainError> {
    let alpha = case.alpha();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(schedule.horizon());
    for row in &schedule.p_g {
        for (gen, &p) in case.generators.iter().zip(row) {
            acc += gen.fuel_rate(p, alpha)? * schedule.dt_hours;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Solves the proposed model and every listed variant, concurrently. An
/// infeasible or failing variant only affects its own row; a variant that
/// cannot be applied to the case is reported as infeasible.
pub fn compare_models(
    case: &NetworkCase,
    alpha: Option<f64>,
    variants: &[Variant],
    config: &SolverConfig,
) -> Result<Comparison, EngineError> {
    let mut case = case.clone();
    if let Some(a) = alpha {
        case.system.alpha_mwh_per_liter = a;
    }
    let mut list = vec![Variant::Full];
    for &v in variants {
        if !list.contains(&v) {
            list.push(v);
        }
    }
    let case = &case;
    let runs: Vec<Result<VariantResult, EngineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = list
            .iter()
            .map(|&variant| {
                let config = SolverConfig {
                    variant,
                    ..config.clone()
                };
                scope.spawn(move || run_variant(case, &config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("variant solve panicked"))
            .collect()
    });
    let results = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Comparison {
        horizon: case.horizon(),
        results,
    })
}

fn run_variant(case: &NetworkCase, config: &SolverConfig) -> Result<VariantResult, EngineError> {
    let sol = match solve_dispatch(case, config) {
        Ok(sol) => sol,
        Err(EngineError::Variant { variant, .. }) => {
            return Ok(VariantResult {
                variant,
                status: DispatchStatus::Infeasible,
                fuel_liters: None,
                cumulative: Vec::new(),
                outer_iterations: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let cumulative = match &sol.schedule {
        Some(s) => cumulative_fuel(s, case)?,
        None => Vec::new(),
    };
    Ok(VariantResult {
        variant: config.variant,
        status: sol.status,
        fuel_liters: sol.fuel_liters,
        cumulative,
        outer_iterations: sol.outer_iterations,
    })
}
