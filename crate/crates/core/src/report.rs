//! Output files: schedule and trace CSV, the run summary, the variant
//! comparison, and re-validation of a schedule against its case.
//!
//! Every writer renders floats with fixed formats so identical runs produce
//! identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Comparison, DispatchSolution, Schedule, TraceRow};
use crate::netmodel::{NetworkCase, Violation};

pub const SCHEDULE_HEADER: &str = "t,unit_id,kind,p_mw,q_mvar,soc";
pub const TRACE_HEADER: &str = "iter,objective,surrogate,equiv_gap,cone_gap,cut_max";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("schedule csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("schedule csv line {line}: {message}")]
    Schedule { line: u64, message: String },
    #[error("solution has no schedule (status {0})")]
    NoSchedule(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::ser::Error),
}

/// One row per unit and timestep; generators first, then storage.
pub fn schedule_csv(schedule: &Schedule) -> String {
    let mut out = String::from(SCHEDULE_HEADER);
    out.push('\n');
    for t in 0..schedule.horizon() {
        for (g, id) in schedule.generator_ids.iter().enumerate() {
            let _ = writeln!(
                out,
                "{t},{id},gen,{:.6},{:.6},",
                clean(schedule.p_g[t][g]),
                clean(schedule.q_g[t][g])
            );
        }
        for (s, id) in schedule.storage_ids.iter().enumerate() {
            let _ = writeln!(
                out,
                "{t},{id},ess,{:.6},{:.6},{:.6}",
                clean(schedule.p_b[t][s]),
                0.0,
                clean(schedule.soc[t][s])
            );
        }
    }
    out
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{},{:.9e},{:.9e},{:.6e},{:.6e},{:.6e}",
            r.iter,
            r.objective,
            r.surrogate,
            clean(r.equiv_gap),
            clean(r.cone_gap),
            clean(r.cut_max)
        );
    }
    out
}

/// Summary of one dispatch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: String,
    pub variant: String,
    pub fuel_liters: Option<f64>,
    pub outer_iterations: usize,
    pub best_iteration: Option<usize>,
    pub max_cone_gap: f64,
    pub equivalence_gap: f64,
    pub inexact_iterations: usize,
}

impl Summary {
    pub fn of(sol: &DispatchSolution) -> Self {
        Self {
            status: sol.status.to_string(),
            variant: sol.variant.to_string(),
            fuel_liters: sol.fuel_liters.map(|f| round(f, 6)),
            outer_iterations: sol.outer_iterations,
            best_iteration: sol.best_iteration,
            max_cone_gap: round_sig(sol.max_cone_gap),
            equivalence_gap: round_sig(sol.equivalence_gap),
            inexact_iterations: sol.inexact_iterations,
        }
    }
}

pub fn summary_toml(sol: &DispatchSolution) -> Result<String, ReportError> {
    Ok(toml::to_string(&Summary::of(sol))?)
}

pub fn solution_json(sol: &DispatchSolution) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(sol)?;
    s.push('\n');
    Ok(s)
}

/// Cumulative fuel per step, one column per variant.
pub fn cumulative_csv(cmp: &Comparison) -> String {
    let mut out = String::from("t");
    for r in &cmp.results {
        let _ = write!(out, ",{}", r.variant);
    }
    out.push('\n');
    for t in 0..cmp.horizon {
        let _ = write!(out, "{t}");
        for r in &cmp.results {
            match r.cumulative.get(t) {
                Some(v) => {
                    let _ = write!(out, ",{v:.6}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub status: String,
    pub fuel_liters: Option<f64>,
    pub outer_iterations: usize,
    /// Fuel relative to the proposed model, in percent.
    pub excess_percent: Option<f64>,
}

/// Per-variant fuel table keyed by variant name.
pub fn comparison_toml(cmp: &Comparison) -> Result<String, ReportError> {
    let base = cmp.results.first().and_then(|r| r.fuel_liters);
    let table: BTreeMap<String, VariantSummary> = cmp
        .results
        .iter()
        .map(|r| {
            let excess = match (r.fuel_liters, base) {
                (Some(f), Some(b)) if b > 0.0 => Some(round(100.0 * (f - b) / b, 4)),
                _ => None,
            };
            let summary = VariantSummary {
                status: r.status.to_string(),
                fuel_liters: r.fuel_liters.map(|f| round(f, 6)),
                outer_iterations: r.outer_iterations,
                excess_percent: excess,
            };
            (r.variant.to_string(), summary)
        })
        .collect();
    Ok(toml::to_string(&table)?)
}

/// Schedule read back from a schedule CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScheduleTable {
    pub generator_ids: Vec<String>,
    pub storage_ids: Vec<String>,
    /// `[t][unit]`
    pub p_g: Vec<Vec<f64>>,
    pub q_g: Vec<Vec<f64>>,
    pub p_b: Vec<Vec<f64>>,
    pub soc: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct ScheduleRow {
    t: usize,
    unit_id: String,
    kind: String,
    p_mw: f64,
    q_mvar: f64,
    soc: Option<f64>,
}

pub fn parse_schedule_csv(text: &str) -> Result<ScheduleTable, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = ScheduleTable::default();
    for (i, row) in reader.deserialize::<ScheduleRow>().enumerate() {
        let row = row?;
        // Data starts on line 2, after the header.
        let line = i as u64 + 2;
        let err = |message: String| ReportError::Schedule { line, message };
        let (ids, cols): (&mut Vec<String>, Vec<(&mut Vec<Vec<f64>>, f64)>) = match row.kind.as_str() {
            "gen" => (&mut out.generator_ids, vec![(&mut out.p_g, row.p_mw), (&mut out.q_g, row.q_mvar)]),
            "ess" => {
                let soc = row.soc.ok_or_else(|| err("storage row without soc".into()))?;
                (&mut out.storage_ids, vec![(&mut out.p_b, row.p_mw), (&mut out.soc, soc)])
            }
            other => return Err(err(format!("unknown kind '{other}'"))),
        };
        let unit = match ids.iter().position(|id| *id == row.unit_id) {
            Some(u) => u,
            None if row.t == 0 => {
                ids.push(row.unit_id.clone());
                ids.len() - 1
            }
            None => return Err(err(format!("unit '{}' first appears at t={}", row.unit_id, row.t))),
        };
        for (table, value) in cols {
            if table.len() <= row.t {
                table.resize(row.t + 1, Vec::new());
            }
            let r = &mut table[row.t];
            if r.len() != unit {
                return Err(err(format!("row for '{}' at t={} out of order", row.unit_id, row.t)));
            }
            r.push(value);
        }
    }
    Ok(out)
}

impl From<&Schedule> for ScheduleTable {
    fn from(s: &Schedule) -> Self {
        Self {
            generator_ids: s.generator_ids.clone(),
            storage_ids: s.storage_ids.clone(),
            p_g: s.p_g.clone(),
            q_g: s.q_g.clone(),
            p_b: s.p_b.clone(),
            soc: s.soc.clone(),
        }
    }
}

/// Checks unit bounds, ramps, storage rates, SOC bounds, the energy balance
/// between steps and storage net-zero, each to `tol` in its own unit.
pub fn check_schedule(case: &NetworkCase, s: &ScheduleTable, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |subject: String, message: String| out.push(Violation { subject, message });
    let horizon = case.horizon();
    let gen_ids: Vec<&str> = case.generators.iter().map(|g| g.id.as_str()).collect();
    let ess_ids: Vec<&str> = case.storage.iter().map(|e| e.id.as_str()).collect();
    if s.generator_ids != gen_ids || s.storage_ids != ess_ids {
        fail("schedule".into(), "units do not match the case".into());
        return out;
    }
    let complete = |t: &[Vec<f64>], n: usize| t.len() == horizon && t.iter().all(|r| r.len() == n);
    let ng = gen_ids.len();
    let ns = ess_ids.len();
    if !complete(&s.p_g, ng) || !complete(&s.q_g, ng) || (ns > 0 && !(complete(&s.p_b, ns) && complete(&s.soc, ns))) {
        fail("schedule".into(), format!("does not cover {horizon} timesteps"));
        return out;
    }
    for (g, gen) in case.generators.iter().enumerate() {
        for t in 0..horizon {
            let (p, q) = (s.p_g[t][g], s.q_g[t][g]);
            if p < gen.p_min - tol || p > gen.p_max + tol {
                fail(format!("{} t={t}", gen.id), format!("P = {p} outside [{}, {}]", gen.p_min, gen.p_max));
            }
            if q < gen.q_min - tol || q > gen.q_max + tol {
                fail(format!("{} t={t}", gen.id), format!("Q = {q} outside [{}, {}]", gen.q_min, gen.q_max));
            }
            if t > 0 {
                let d = p - s.p_g[t - 1][g];
                if d > gen.ramp_up + tol || -d > gen.ramp_down + tol {
                    fail(format!("{} t={t}", gen.id), format!("ramp {d} exceeds limits"));
                }
            }
        }
    }
    let dt = case.dt();
    for (k, ess) in case.storage.iter().enumerate() {
        let mut energy = ess.initial_mwh;
        let mut net = 0.0;
        for t in 0..horizon {
            let (p, soc) = (s.p_b[t][k], s.soc[t][k]);
            net += p;
            if p < -ess.max_charge_mw - tol || p > ess.max_discharge_mw + tol {
                fail(format!("{} t={t}", ess.id), format!("power {p} outside rate limits"));
            }
            if soc < ess.soc_min - tol || soc > ess.soc_max + tol {
                fail(format!("{} t={t}", ess.id), format!("SOC {soc} outside [{}, {}]", ess.soc_min, ess.soc_max));
            }
            energy -= ess.efficiency * p * dt;
            if (energy / ess.capacity_mwh - soc).abs() > tol {
                fail(format!("{} t={t}", ess.id), format!("SOC {soc} inconsistent with charging history"));
            }
        }
        if net.abs() > tol {
            fail(ess.id.clone(), format!("net storage power {net} is not zero"));
        }
    }
    out
}

/// Maps negative zero to zero so it prints without a sign.
fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn round(x: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (x * f).round() / f
}

/// Rounds to six significant digits.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return clean(x);
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}
