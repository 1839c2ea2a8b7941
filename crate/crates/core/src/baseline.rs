//! Reference solvers for small cases: exhaustive grid search over generator
//! outputs and the equal per-unit loading rule.
//!
//! The grid search treats the last generator as the balancing unit. Its output
//! follows from the others, from storage and, on networks of at most two
//! lines, from an exact real-power flow at unit voltage magnitude. Larger
//! networks must be lossless and are treated as a single node. Reactive power
//! is not modelled by either solver.

use std::cmp::Ordering;

use thiserror::Error;

use crate::engine::{compute_fuel, Schedule};
use crate::netmodel::{validate_case, DomainError, NetworkCase, Violation};

pub const MAX_BUSES: usize = 3;
pub const MAX_GENERATORS: usize = 3;
pub const MAX_HORIZON: usize = 2;
pub const MAX_STORAGE: usize = 1;
/// Networks with more lines than this must be lossless.
pub const MAX_LOSSY_LINES: usize = 2;
pub const MAX_GRID_POINTS: f64 = 1e8;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("case is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidCase(Vec<Violation>),
    #[error("case exceeds oracle limits: {0}")]
    TooLarge(String),
    #[error("grid step must be positive and finite, got {0}")]
    Step(f64),
    #[error("no feasible grid point")]
    Infeasible,
    #[error("equal sharing infeasible at timestep {t}: load {load_mw} MW, capacity {capacity_mw} MW")]
    EqualSharing {
        t: usize,
        load_mw: f64,
        capacity_mw: f64,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A case small enough for exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyCase(NetworkCase);

impl TinyCase {
    pub fn new(case: NetworkCase) -> Result<Self, OracleError> {
        let violations = validate_case(&case);
        if !violations.is_empty() {
            return Err(OracleError::InvalidCase(violations));
        }
        let limits = [
            ("buses", case.buses.len(), MAX_BUSES),
            ("generators", case.generators.len(), MAX_GENERATORS),
            ("timesteps", case.horizon(), MAX_HORIZON),
            ("storage units", case.storage.len(), MAX_STORAGE),
        ];
        for (what, n, max) in limits {
            if n > max {
                return Err(OracleError::TooLarge(format!("{n} {what}, at most {max}")));
            }
        }
        if case.lines.len() > MAX_LOSSY_LINES && case.lines.iter().any(|l| l.g != 0.0) {
            return Err(OracleError::TooLarge(format!(
                "{} lines with losses, at most {MAX_LOSSY_LINES}",
                case.lines.len()
            )));
        }
        if let Some(b) = case.buses.iter().find(|b| b.v_min > 1.0 || b.v_max < 1.0) {
            return Err(OracleError::TooLarge(format!(
                "bus {} excludes unit voltage magnitude",
                b.id
            )));
        }
        Ok(Self(case))
    }

    pub fn case(&self) -> &NetworkCase {
        &self.0
    }

    fn exact_flow(&self) -> bool {
        self.0.lines.len() <= MAX_LOSSY_LINES && !self.0.lines.is_empty()
    }
}

/// Schedule and fuel found by a reference solver.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub schedule: Schedule,
    pub fuel_liters: f64,
    /// Grid points enumerated; zero for the equal-sharing rule.
    pub grid_points: u64,
}

/// One timestep of a candidate schedule.
#[derive(Debug, Clone)]
struct StepPoint {
    p_g: Vec<f64>,
    angle: Vec<f64>,
    fuel: f64,
}

/// Globally optimal schedule on a grid of `step` MW for every generator but
/// the last. Ties in fuel go to the lexicographically smallest schedule.
pub fn brute_force_dispatch(case: &TinyCase, step: f64) -> Result<OracleResult, OracleError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(OracleError::Step(step));
    }
    let c = case.case();
    let horizon = c.horizon();
    let free: Vec<Vec<f64>> = c.generators[..c.generators.len() - 1]
        .iter()
        .map(|g| grid(g.p_min, g.p_max, step))
        .collect();
    let storage = storage_trajectories(c, step);
    let per_step: f64 = free.iter().map(|v| v.len() as f64).product();
    let total = storage.len() as f64 * per_step.powi(horizon as i32);
    if total > MAX_GRID_POINTS {
        return Err(OracleError::TooLarge(format!(
            "{total:.3e} grid points, at most {MAX_GRID_POINTS:.0e}"
        )));
    }

    let mut best: Option<(f64, Vec<f64>, Vec<StepPoint>, Vec<f64>)> = None;
    for pb in &storage {
        let candidates: Vec<Vec<StepPoint>> = (0..horizon)
            .map(|t| step_candidates(case, t, &free, pb.get(t).copied().unwrap_or(0.0)))
            .collect::<Result<_, _>>()?;
        let mut index = vec![0usize; horizon];
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        loop {
            let points: Vec<&StepPoint> = index.iter().zip(&candidates).map(|(&i, c)| &c[i]).collect();
            if ramps_ok(c, &points) {
                let fuel: f64 = points.iter().map(|p| p.fuel).sum();
                let key: Vec<f64> = points
                    .iter()
                    .flat_map(|p| p.p_g.iter().copied())
                    .chain(pb.iter().copied())
                    .collect();
                let better = match &best {
                    None => true,
                    Some((f, k, _, _)) => match fuel.partial_cmp(f) {
                        Some(Ordering::Less) => true,
                        Some(Ordering::Equal) => lex_less(&key, k),
                        _ => false,
                    },
                };
                if better {
                    best = Some((fuel, key, points.into_iter().cloned().collect(), pb.clone()));
                }
            }
            if !advance(&mut index, &candidates) {
                break;
            }
        }
    }
    let (_, _, points, pb) = best.ok_or(OracleError::Infeasible)?;
    let p_g: Vec<Vec<f64>> = points.iter().map(|p| p.p_g.clone()).collect();
    let angles: Vec<Vec<f64>> = points.iter().map(|p| p.angle.clone()).collect();
    let schedule = build_schedule(c, p_g, &pb, Some(&angles));
    let fuel_liters = compute_fuel(&schedule, c)?;
    Ok(OracleResult {
        schedule,
        fuel_liters,
        grid_points: total as u64,
    })
}

/// Every generator at the same per-unit output `P/P_base`, meeting the total load
/// at each step. Network losses and storage are ignored.
pub fn equal_sharing_dispatch(case: &NetworkCase) -> Result<OracleResult, OracleError> {
    let violations = validate_case(case);
    if !violations.is_empty() {
        return Err(OracleError::InvalidCase(violations));
    }
    let capacity: f64 = case.generators.iter().map(|g| g.p_max).sum();
    let base: f64 = case.generators.iter().map(|g| g.p_base).sum();
    let mut p_g = Vec::with_capacity(case.horizon());
    for t in 0..case.horizon() {
        let load = case.loads.total_p(t);
        let share = load / base;
        let row: Vec<f64> = case.generators.iter().map(|g| share * g.p_base).collect();
        let fits = case
            .generators
            .iter()
            .zip(&row)
            .all(|(g, &p)| p >= g.p_min - FEAS_TOL && p <= g.p_max + FEAS_TOL);
        if !fits || load < 0.0 {
            return Err(OracleError::EqualSharing {
                t,
                load_mw: load,
                capacity_mw: capacity,
            });
        }
        p_g.push(row);
    }
    let zeros = vec![0.0; case.horizon()];
    let schedule = build_schedule(case, p_g, &zeros, None);
    let fuel_liters = compute_fuel(&schedule, case)?;
    Ok(OracleResult {
        schedule,
        fuel_liters,
        grid_points: 0,
    })
}

/// Multiples of `step` inside `[lo, hi]`.
fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let first = (lo / step - FEAS_TOL).ceil() as i64;
    let last = (hi / step + FEAS_TOL).floor() as i64;
    (first..=last).map(|k| (k as f64 * step).clamp(lo, hi)).collect()
}

/// Net-zero storage power trajectories on the grid; a single zero trajectory
/// when the case has no storage.
fn storage_trajectories(case: &NetworkCase, step: f64) -> Vec<Vec<f64>> {
    let horizon = case.horizon();
    let Some(ess) = case.storage.first() else {
        return vec![vec![0.0; horizon]];
    };
    if horizon == 1 {
        return vec![vec![0.0]];
    }
    let dt = case.dt();
    let (emin, emax) = (ess.soc_min * ess.capacity_mwh, ess.soc_max * ess.capacity_mwh);
    let cap = ess.max_charge_mw.min(ess.max_discharge_mw);
    grid(-cap, cap, step)
        .into_iter()
        .filter(|&p| {
            let e = ess.initial_mwh - ess.efficiency * p * dt;
            e >= emin - FEAS_TOL && e <= emax + FEAS_TOL
        })
        .map(|p| vec![p, -p])
        .collect()
}

/// Feasible single-step points for every grid combination of the free units.
fn step_candidates(case: &TinyCase, t: usize, free: &[Vec<f64>], pb: f64) -> Result<Vec<StepPoint>, OracleError> {
    let c = case.case();
    let alpha = c.alpha();
    let dt = c.dt();
    let slack = c.generators.len() - 1;
    let mut out = Vec::new();
    let mut index = vec![0usize; free.len()];
    loop {
        let mut p_g: Vec<f64> = index.iter().zip(free).map(|(&i, v)| v[i]).collect();
        if let Some((p_slack, angle)) = balance(case, t, &p_g, pb) {
            let g = &c.generators[slack];
            if p_slack >= g.p_min - FEAS_TOL && p_slack <= g.p_max + FEAS_TOL {
                p_g.push(p_slack.clamp(g.p_min, g.p_max));
                let mut fuel = 0.0;
                for (gen, &p) in c.generators.iter().zip(&p_g) {
                    fuel += gen.fuel_rate(p, alpha)? * dt;
                }
                out.push(StepPoint { p_g, angle, fuel });
            }
        }
        if !advance(&mut index, free) {
            break;
        }
    }
    Ok(out)
}

/// Output of the balancing unit and bus angles, or `None` when no admissible
/// flow exists.
fn balance(case: &TinyCase, t: usize, p_free: &[f64], pb: f64) -> Option<(f64, Vec<f64>)> {
    let c = case.case();
    let n = c.buses.len();
    let slack = c.generators.len() - 1;
    let slack_bus = c.bus_index(c.generators[slack].bus)?;
    // Net injection (MW) at each bus excluding the balancing unit.
    let mut inj: Vec<f64> = (0..n).map(|i| -c.loads.p(t, i)).collect();
    for (gen, &p) in c.generators.iter().zip(p_free) {
        inj[c.bus_index(gen.bus)?] += p;
    }
    if let Some(ess) = c.storage.first() {
        inj[c.bus_index(ess.bus)?] += pb;
    }
    if !case.exact_flow() {
        return Some((-inj.iter().sum::<f64>(), vec![0.0; n]));
    }

    let base = c.system.mva_base;
    let unknown: Vec<usize> = (0..n).filter(|&i| i != slack_bus).collect();
    let mut theta = vec![0.0; n];
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let (p, jac) = injections(c, &theta);
        let residual: Vec<f64> = unknown.iter().map(|&i| p[i] - inj[i] / base).collect();
        if residual.iter().all(|r| r.abs() <= NEWTON_TOL) {
            converged = true;
            break;
        }
        let a: Vec<Vec<f64>> = unknown
            .iter()
            .map(|&i| unknown.iter().map(|&k| jac[i][k]).collect())
            .collect();
        let delta = solve_small(a, residual)?;
        for (&i, d) in unknown.iter().zip(delta) {
            theta[i] -= d;
        }
    }
    if !converged {
        return None;
    }
    for (bus, &th) in c.buses.iter().zip(&theta) {
        if th < bus.theta_min - FEAS_TOL || th > bus.theta_max + FEAS_TOL {
            return None;
        }
    }
    for line in &c.lines {
        let (i, k) = (c.bus_index(line.from)?, c.bus_index(line.to)?);
        for (a, b) in [(i, k), (k, i)] {
            let d = theta[a] - theta[b];
            let flow = base * (line.g * (1.0 - d.cos()) - line.b * d.sin());
            if flow.abs() > line.rate_p_mw + FEAS_TOL {
                return None;
            }
        }
    }
    let (p, _) = injections(c, &theta);
    Some((p[slack_bus] * base - inj[slack_bus], theta))
}

/// Per-unit real injections at unit voltage magnitude and their Jacobian with
/// respect to the bus angles.
fn injections(case: &NetworkCase, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = case.buses.len();
    let mut p = vec![0.0; n];
    let mut jac = vec![vec![0.0; n]; n];
    for line in &case.lines {
        let (Some(i), Some(k)) = (case.bus_index(line.from), case.bus_index(line.to)) else {
            continue;
        };
        for (a, b) in [(i, k), (k, i)] {
            let d = theta[a] - theta[b];
            p[a] += line.g * (1.0 - d.cos()) - line.b * d.sin();
            let dp = line.g * d.sin() - line.b * d.cos();
            jac[a][a] += dp;
            jac[a][b] -= dp;
        }
    }
    (p, jac)
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn ramps_ok(case: &NetworkCase, points: &[&StepPoint]) -> bool {
    points.windows(2).all(|w| {
        case.generators.iter().enumerate().all(|(g, gen)| {
            let d = w[1].p_g[g] - w[0].p_g[g];
            d <= gen.ramp_up + FEAS_TOL && -d <= gen.ramp_down + FEAS_TOL
        })
    })
}

/// Odometer increment over `sizes`; false once every combination was visited.
fn advance<T>(index: &mut [usize], sizes: &[Vec<T>]) -> bool {
    for pos in (0..index.len()).rev() {
        index[pos] += 1;
        if index[pos] < sizes[pos].len() {
            return true;
        }
        index[pos] = 0;
    }
    false
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

fn build_schedule(case: &NetworkCase, p_g: Vec<Vec<f64>>, pb: &[f64], angles: Option<&[Vec<f64>]>) -> Schedule {
    let horizon = case.horizon();
    let dt = case.dt();
    let mut p_b = vec![Vec::new(); horizon];
    let mut energy = vec![Vec::new(); horizon];
    let mut soc = vec![Vec::new(); horizon];
    for ess in &case.storage {
        let mut e = ess.initial_mwh;
        for t in 0..horizon {
            e -= ess.efficiency * pb[t] * dt;
            p_b[t].push(pb[t]);
            energy[t].push(e);
            soc[t].push(e / ess.capacity_mwh);
        }
    }
    let branches: Vec<(u32, u32)> = case.lines.iter().map(|l| (l.from, l.to)).collect();
    let angle = (0..horizon)
        .map(|t| {
            case.lines
                .iter()
                .map(|l| {
                    let th = angles?.get(t)?;
                    Some(th[case.bus_index(l.from)?] - th[case.bus_index(l.to)?])
                })
                .collect()
        })
        .collect();
    Schedule {
        generator_ids: case.generators.iter().map(|g| g.id.clone()).collect(),
        storage_ids: case.storage.iter().map(|s| s.id.clone()).collect(),
        dt_hours: dt,
        q_g: vec![vec![0.0; case.generators.len()]; horizon],
        p_g,
        p_b,
        energy,
        soc,
        voltage: vec![vec![1.0; case.buses.len()]; horizon],
        branches,
        angle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{atg, line_rx, mtg, single_bus, ship_storage, tiny_two_generator, two_bus};
    use crate::netmodel::GeneratorSpec;

    fn tiny(case: NetworkCase) -> TinyCase {
        TinyCase::new(case).unwrap()
    }

    #[test]
    fn single_generator_is_forced() {
        let r = brute_force_dispatch(&tiny(single_bus(vec![mtg("M", 1)], &[2.0])), 0.5).unwrap();
        assert_eq!(r.schedule.p_g, vec![vec![2.0]]);
        let expected = mtg("M", 1).fuel_rate(2.0, 0.01).unwrap();
        assert!((r.fuel_liters - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_load_dispatches_nothing() {
        let r = brute_force_dispatch(&tiny(single_bus(vec![atg("A", 1), mtg("M", 1)], &[0.0])), 0.1).unwrap();
        assert_eq!(r.schedule.p_g, vec![vec![0.0, 0.0]]);
        assert_eq!(r.fuel_liters, 0.0);
    }

    #[test]
    fn tiny_two_generator_golden() {
        let r = brute_force_dispatch(&tiny(tiny_two_generator()), 1e-3).unwrap();
        let p = &r.schedule.p_g[0];
        assert!((p[0] - 4.7).abs() < 1e-9 && (p[1] - 0.3).abs() < 1e-9, "{p:?}");
        assert!((r.fuel_liters - 1480.396096).abs() < 1e-5, "{}", r.fuel_liters);
        assert_eq!(r.grid_points, 4701);
    }

    #[test]
    fn fuel_is_invariant_under_unit_order() {
        let a = brute_force_dispatch(&tiny(single_bus(vec![atg("A", 1), mtg("M", 1)], &[6.3])), 1e-2).unwrap();
        let b = brute_force_dispatch(&tiny(single_bus(vec![mtg("M", 1), atg("A", 1)], &[6.3])), 1e-2).unwrap();
        assert!((a.fuel_liters - b.fuel_liters).abs() <= 1e-9 * a.fuel_liters);
        assert!((a.schedule.p_g[0][0] - b.schedule.p_g[0][1]).abs() < 1e-9);
    }

    #[test]
    fn ties_resolve_to_smallest_schedule() {
        let twins = single_bus(vec![mtg("M1", 1), mtg("M2", 1)], &[10.0]);
        let r = brute_force_dispatch(&tiny(twins), 0.5).unwrap();
        // The split is symmetric, so the mirror image has the same fuel.
        assert!(r.schedule.p_g[0][0] <= r.schedule.p_g[0][1]);
    }

    #[test]
    fn lossy_line_needs_more_generation() {
        let case = two_bus(vec![mtg("M", 1)], line_rx(1, 2, 0.02, 0.1, 40.0, 30.0), &[5.0]);
        let r = brute_force_dispatch(&tiny(case), 0.1).unwrap();
        let p = r.schedule.p_g[0][0];
        let th = r.schedule.angle[0][0].unwrap();
        let g = line_rx(1, 2, 0.02, 0.1, 40.0, 30.0).g;
        let loss = 10.0 * 2.0 * g * (1.0 - th.cos());
        assert!(p > 5.0 && p < 5.1, "{p}");
        assert!((p - 5.0 - loss).abs() < 1e-9, "{p} {loss}");
        assert!(th > 0.0);
    }

    #[test]
    fn line_rating_can_make_it_infeasible() {
        let case = two_bus(vec![mtg("M", 1)], line_rx(1, 2, 0.0, 0.1, 3.0, 30.0), &[5.0]);
        assert!(matches!(
            brute_force_dispatch(&tiny(case), 0.1),
            Err(OracleError::Infeasible)
        ));
    }

    #[test]
    fn storage_shifts_energy_between_steps() {
        let g = GeneratorSpec {
            ramp_up: 35.0,
            ramp_down: 35.0,
            ..mtg("M", 1)
        };
        let mut case = single_bus(vec![g.clone(), GeneratorSpec { id: "N".into(), ..g }], &[2.0, 12.0]);
        case.storage.push(ship_storage("E", 1));
        let r = brute_force_dispatch(&tiny(case), 0.1).unwrap();
        let pb = &r.schedule.p_b;
        assert!((pb[0][0] + pb[1][0]).abs() < 1e-12);
        let soc = r.schedule.soc[0][0];
        assert!((0.2 - 1e-9..=1.0 + 1e-9).contains(&soc));
    }

    #[test]
    fn limits_are_enforced() {
        let big = single_bus(vec![atg("A", 1), atg("B", 1), atg("C", 1), atg("D", 1)], &[1.0]);
        assert!(matches!(TinyCase::new(big), Err(OracleError::TooLarge(_))));
        let three = single_bus(vec![mtg("A", 1), mtg("B", 1), mtg("C", 1)], &[1.0]);
        assert!(matches!(
            brute_force_dispatch(&tiny(three), 1e-3),
            Err(OracleError::TooLarge(_))
        ));
        assert!(matches!(
            brute_force_dispatch(&tiny(tiny_two_generator()), 0.0),
            Err(OracleError::Step(_))
        ));
    }

    #[test]
    fn equal_sharing_examples() {
        let twins = single_bus(vec![mtg("M1", 1), mtg("M2", 1)], &[14.0]);
        let r = equal_sharing_dispatch(&twins).unwrap();
        assert_eq!(r.schedule.p_g, vec![vec![7.0, 7.0]]);

        let pair = single_bus(vec![atg("A", 1), mtg("M", 1)], &[7.94]);
        let r = equal_sharing_dispatch(&pair).unwrap();
        assert!((r.schedule.p_g[0][0] - 0.94).abs() < 1e-12);
        assert!((r.schedule.p_g[0][1] - 7.0).abs() < 1e-12);

        let over = single_bus(vec![atg("A", 1), mtg("M", 1)], &[39.8]);
        assert!(matches!(
            equal_sharing_dispatch(&over),
            Err(OracleError::EqualSharing { t: 0, .. })
        ));
    }
}
