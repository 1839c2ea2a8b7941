//! Convex relaxation of the multi-period dispatch problem.
//!
//! Voltage products are lifted into `u_i = V_i²/√2`, `W_R = V_iV_k cos θ_ik`
//! and `W_I = V_iV_k sin θ_ik`, which makes injections and line flows linear.
//! The rank condition is relaxed to the rotated cone `W_R² + W_I² ≤ 2u_iu_k`
//! and the angle relation `θ = atan(W_I/W_R)` is linearized around a point
//! that the engine refreshes after every conic solve.
//!
//! Power balance rows are in MW; network expressions are in per-unit of the
//! system MVA base.

pub mod model;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use thiserror::Error;

use crate::fractional::AuxiliaryState;
use crate::netmodel::{GeneratorSpec, NetworkCase};
pub use model::{
    ConeArg, ConeFamily, Constraint, Family, LinExpr, ModelCone, ModelData, ModelResiduals, Sense,
    VarId, Variable,
};

/// Smallest squared norm accepted for a linearization point.
pub const MIN_POINT_NORM_SQ: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum RelaxationError {
    #[error("generator {0} has a convex efficiency curve (a > 0); the efficiency cap would be nonconvex")]
    UnsupportedCurvature(String),
    #[error("linearization point ({0}, {1}) is too close to the origin")]
    DegeneratePoint(f64, f64),
    #[error("auxiliary state has {got} pairs, expected {expected}")]
    AuxDimension { expected: usize, got: usize },
    #[error("auxiliary state violates zeta*beta >= 1 or positivity")]
    InfeasibleAux,
    #[error("linearization points do not match the case dimensions")]
    PointDimension,
    #[error("fixed-off mask has {got} entries for {expected} generators")]
    MaskDimension { expected: usize, got: usize },
}

/// Exact lift of a voltage pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lift {
    pub u_i: f64,
    pub u_k: f64,
    pub w_r: f64,
    pub w_i: f64,
}

/// `u = V²/√2`, `W_R = V_iV_k cos θ_ik`, `W_I = V_iV_k sin θ_ik`.
pub fn lift_voltage(v_i: f64, v_k: f64, theta_ik: f64) -> Lift {
    let m = v_i * v_k;
    Lift {
        u_i: v_i * v_i / SQRT_2,
        u_k: v_k * v_k / SQRT_2,
        w_r: m * theta_ik.cos(),
        w_i: m * theta_ik.sin(),
    }
}

/// Unordered bus pair with the summed admittance of its parallel lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub g_offdiag: f64,
    pub b_offdiag: f64,
    pub lines: Vec<usize>,
}

impl Branch {
    /// Hyperbolic scale `κ` of the loss-form cone coordinates: the series
    /// admittance magnitude, or 1 for a branch without one.
    pub fn cone_scale(&self) -> f64 {
        let y = self.g_offdiag.hypot(self.b_offdiag);
        if y > 0.0 {
            y
        } else {
            1.0
        }
    }

    /// Far end, and the sign `W_I` takes when seen from `bus`.
    pub fn seen_from(&self, bus: usize) -> (usize, f64) {
        if bus == self.from {
            (self.to, 1.0)
        } else {
            (self.from, -1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub branches: Vec<Branch>,
    /// Branch of each line.
    pub line_branch: Vec<usize>,
    pub g_diag: Vec<f64>,
    pub b_diag: Vec<f64>,
}

impl Topology {
    pub fn new(case: &NetworkCase) -> Self {
        let n = case.buses.len();
        let mut branches: Vec<Branch> = Vec::new();
        let mut line_branch = Vec::with_capacity(case.lines.len());
        let mut g_diag = vec![0.0; n];
        let mut b_diag = vec![0.0; n];
        for (l, line) in case.lines.iter().enumerate() {
            let i = case.bus_index(line.from).expect("validated line endpoint");
            let k = case.bus_index(line.to).expect("validated line endpoint");
            let existing = branches
                .iter()
                .position(|b| (b.from == i && b.to == k) || (b.from == k && b.to == i));
            let idx = match existing {
                Some(idx) => idx,
                None => {
                    branches.push(Branch {
                        from: i,
                        to: k,
                        g_offdiag: 0.0,
                        b_offdiag: 0.0,
                        lines: Vec::new(),
                    });
                    branches.len() - 1
                }
            };
            let br = &mut branches[idx];
            br.g_offdiag += line.g_offdiag();
            br.b_offdiag += line.b_offdiag();
            br.lines.push(l);
            line_branch.push(idx);
            g_diag[i] += line.g;
            g_diag[k] += line.g;
            b_diag[i] += line.b;
            b_diag[k] += line.b;
        }
        Self {
            branches,
            line_branch,
            g_diag,
            b_diag,
        }
    }
}

/// Coordinates of a voltage cone in which it reads `2·l·h ≥ d² + W_I²`. With
/// `m = (u_i + u_k)/√2` and branch scale `κ`: `l = κ·(m − W_R)`,
/// `h = (m + W_R)/(2κ)` and `d = (u_i − u_k)/√2`. `m − W_R` is the series
/// loss divided by `2g`; carrying it as a variable avoids cancellation, and
/// `κ` keeps the two heads of comparable size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCoords {
    pub l: VarId,
    pub h: VarId,
    pub d: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpigraphVars {
    /// `w ≥ P²`
    pub w: VarId,
    /// `t̂ ≥ 1/s`
    pub t_hat: VarId,
    /// `s ≤ η(p)`
    pub s: VarId,
    /// `v ≥ t̂²`
    pub v: VarId,
    /// Scaled slack `P_base²·(c + b·p − s)/(−a)` of the efficiency cap;
    /// absent for linear curves.
    pub r: Option<VarId>,
}

/// Variable ids, indexed `[t][element]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layout {
    pub pg: Vec<Vec<VarId>>,
    pub qg: Vec<Vec<VarId>>,
    pub pb: Vec<Vec<VarId>>,
    /// Stored energy at the end of each step.
    pub energy: Vec<Vec<VarId>>,
    pub u: Vec<Vec<VarId>>,
    pub wr: Vec<Vec<VarId>>,
    pub wi: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub cone: Vec<Vec<ConeCoords>>,
    pub epi: Vec<Vec<EpigraphVars>>,
}

impl Layout {
    /// Registers every variable of the case, unbounded; bounds come from
    /// [`operational_bounds`] and [`storage_constraints`].
    pub fn register(case: &NetworkCase, topo: &Topology, data: &mut ModelData) -> Self {
        let free = (f64::NEG_INFINITY, f64::INFINITY);
        let mut layout = Layout::default();
        for t in 0..case.horizon() {
            let mut var = |name: String| data.add_var(name, free.0, free.1);
            layout.pg.push(
                case.generators
                    .iter()
                    .map(|g| var(format!("pg[{},{t}]", g.id)))
                    .collect(),
            );
            layout.qg.push(
                case.generators
                    .iter()
                    .map(|g| var(format!("qg[{},{t}]", g.id)))
                    .collect(),
            );
            layout.pb.push(
                case.storage
                    .iter()
                    .map(|s| var(format!("pb[{},{t}]", s.id)))
                    .collect(),
            );
            layout.energy.push(
                case.storage
                    .iter()
                    .map(|s| var(format!("e[{},{t}]", s.id)))
                    .collect(),
            );
            layout.u.push(
                case.buses
                    .iter()
                    .map(|b| var(format!("u[{},{t}]", b.id)))
                    .collect(),
            );
            let pair = |b: &Branch| (case.buses[b.from].id, case.buses[b.to].id);
            layout.wr.push(
                topo.branches
                    .iter()
                    .map(|b| var(format!("wr[{}-{},{t}]", pair(b).0, pair(b).1)))
                    .collect(),
            );
            layout.wi.push(
                topo.branches
                    .iter()
                    .map(|b| var(format!("wi[{}-{},{t}]", pair(b).0, pair(b).1)))
                    .collect(),
            );
            layout.theta.push(
                topo.branches
                    .iter()
                    .map(|b| var(format!("theta[{}-{},{t}]", pair(b).0, pair(b).1)))
                    .collect(),
            );
            layout.cone.push(
                topo.branches
                    .iter()
                    .map(|b| {
                        let (i, k) = pair(b);
                        ConeCoords {
                            l: var(format!("cl[{i}-{k},{t}]")),
                            h: var(format!("ch[{i}-{k},{t}]")),
                            d: var(format!("cd[{i}-{k},{t}]")),
                        }
                    })
                    .collect(),
            );
            layout.epi.push(
                case.generators
                    .iter()
                    .map(|g| EpigraphVars {
                        w: var(format!("w[{},{t}]", g.id)),
                        t_hat: var(format!("that[{},{t}]", g.id)),
                        s: var(format!("s[{},{t}]", g.id)),
                        v: var(format!("v[{},{t}]", g.id)),
                        r: (g.a != 0.0).then(|| var(format!("r[{},{t}]", g.id))),
                    })
                    .collect(),
            );
        }
        layout
    }
}

/// Real and reactive injection at one bus, per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub p: LinExpr,
    pub q: LinExpr,
}

/// `P_inj = √2·u_i·G_ii + Σ_k (G_ik·W_R + B_ik·W_I)` and
/// `Q_inj = −√2·u_i·B_ii + Σ_k (G_ik·W_I − B_ik·W_R)` for every bus.
///
/// With no shunts `G_ii = −Σ_k G_ik`, so each branch contributes through
/// `√2·u_i − W_R = l/κ ± d` and the expressions are written in cone coordinates.
pub fn injection_expressions(topo: &Topology, layout: &Layout, t: usize) -> Vec<Injection> {
    let mut out: Vec<Injection> = (0..topo.g_diag.len())
        .map(|_| Injection {
            p: LinExpr::new(),
            q: LinExpr::new(),
        })
        .collect();
    for (k, br) in topo.branches.iter().enumerate() {
        let wi = layout.wi[t][k];
        let c = layout.cone[t][k];
        let inv = 1.0 / br.cone_scale();
        for bus in [br.from, br.to] {
            let (_, sign) = br.seen_from(bus);
            let inj = &mut out[bus];
            inj.p
                .add(c.l, -br.g_offdiag * inv)
                .add(c.d, -sign * br.g_offdiag)
                .add(wi, sign * br.b_offdiag);
            inj.q
                .add(c.l, br.b_offdiag * inv)
                .add(c.d, sign * br.b_offdiag)
                .add(wi, sign * br.g_offdiag);
        }
    }
    out
}

/// Real and reactive balance rows (MW / MVAr) at every bus for timestep `t`.
/// Storage injects real power only, discharge positive.
pub fn power_balance(case: &NetworkCase, topo: &Topology, layout: &Layout, t: usize) -> Vec<Constraint> {
    let base = case.system.mva_base;
    let injections = injection_expressions(topo, layout, t);
    let mut rows = Vec::with_capacity(2 * injections.len());
    for (i, inj) in injections.into_iter().enumerate() {
        let bus_id = case.buses[i].id;
        let mut p = inj.p.scaled(base);
        let mut q = inj.q.scaled(base);
        for (g, gen) in case.generators.iter().enumerate() {
            if gen.bus == bus_id {
                p.add(layout.pg[t][g], -1.0);
                q.add(layout.qg[t][g], -1.0);
            }
        }
        for (s, ess) in case.storage.iter().enumerate() {
            if ess.bus == bus_id {
                p.add(layout.pb[t][s], -1.0);
            }
        }
        p.constant += case.loads.p(t, i);
        q.constant += case.loads.q(t, i);
        rows.push(Constraint::new(Family::RealBalance, p, Sense::Eq));
        rows.push(Constraint::new(Family::ReactiveBalance, q, Sense::Eq));
    }
    rows
}

/// Flow at one end of a line, per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LineEndFlow {
    pub p: LinExpr,
    pub q: LinExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineFlow {
    pub line: usize,
    pub from_end: LineEndFlow,
    pub to_end: LineEndFlow,
}

/// `P_ik = √2·u_i·G_ik − (G_ik·W_R + B_ik·W_I)` and
/// `Q_ik = −√2·u_i·B_ik + (B_ik·W_R − G_ik·W_I)` at both ends of every line.
pub fn line_flow_expressions(
    case: &NetworkCase,
    topo: &Topology,
    layout: &Layout,
    t: usize,
) -> Vec<LineFlow> {
    case.lines
        .iter()
        .enumerate()
        .map(|(l, line)| {
            let br = &topo.branches[topo.line_branch[l]];
            let k = topo.line_branch[l];
            let (gik, bik) = (line.g_offdiag(), line.b_offdiag());
            let wi = layout.wi[t][k];
            let c = layout.cone[t][k];
            let inv = 1.0 / br.cone_scale();
            // √2·u_i − W_R = l/κ + sign·d
            let end = |bus: usize| {
                let (_, sign) = br.seen_from(bus);
                LineEndFlow {
                    p: LinExpr::new()
                        .with(c.l, gik * inv)
                        .with(c.d, sign * gik)
                        .with(wi, -sign * bik),
                    q: LinExpr::new()
                        .with(c.l, -bik * inv)
                        .with(c.d, -sign * bik)
                        .with(wi, -sign * gik),
                }
            };
            let from = case.bus_index(line.from).expect("validated");
            let to = case.bus_index(line.to).expect("validated");
            LineFlow {
                line: l,
                from_end: end(from),
                to_end: end(to),
            }
        })
        .collect()
}

/// Boxes every line-end flow by the line ratings (MW / MVAr).
pub fn line_flow_limits(case: &NetworkCase, topo: &Topology, layout: &Layout, t: usize) -> Vec<Constraint> {
    let base = case.system.mva_base;
    let mut rows = Vec::new();
    for flow in line_flow_expressions(case, topo, layout, t) {
        let line = &case.lines[flow.line];
        for end in [&flow.from_end, &flow.to_end] {
            for (expr, rate, family) in [
                (&end.p, line.rate_p_mw, Family::RealLineFlow),
                (&end.q, line.rate_q_mvar, Family::ReactiveLineFlow),
            ] {
                let mut upper = expr.scaled(base);
                upper.constant -= rate;
                rows.push(Constraint::new(family, upper, Sense::Le));
                let mut lower = expr.scaled(base);
                lower.constant += rate;
                rows.push(Constraint::new(family, lower, Sense::Ge));
            }
        }
    }
    rows
}

/// `W_R² + W_I² ≤ 2·u_i·u_k` for every branch.
pub fn cone_constraints(topo: &Topology, layout: &Layout, t: usize) -> Vec<ModelCone> {
    topo.branches
        .iter()
        .enumerate()
        .map(|(k, br)| ModelCone {
            family: ConeFamily::VoltageProduct,
            heads: [
                ConeArg::Var(layout.u[t][br.from]),
                ConeArg::Var(layout.u[t][br.to]),
            ],
            tail: vec![
                ConeArg::Var(layout.wr[t][k]),
                ConeArg::Var(layout.wi[t][k]),
            ],
        })
        .collect()
}

/// The voltage cones of timestep `t` in loss-form coordinates, with the rows
/// defining those coordinates. Equivalent to [`cone_constraints`].
pub fn loss_form_cones(
    topo: &Topology,
    layout: &Layout,
    t: usize,
) -> (Vec<Constraint>, Vec<ModelCone>) {
    let mut rows = Vec::with_capacity(3 * topo.branches.len());
    let mut cones = Vec::with_capacity(topo.branches.len());
    let s = FRAC_1_SQRT_2;
    for (k, br) in topo.branches.iter().enumerate() {
        let (ui, uk) = (layout.u[t][br.from], layout.u[t][br.to]);
        let (wr, wi) = (layout.wr[t][k], layout.wi[t][k]);
        let c = layout.cone[t][k];
        let kappa = br.cone_scale();
        let half = 0.5 / kappa;
        for expr in [
            LinExpr::new()
                .with(c.l, 1.0)
                .with(ui, -kappa * s)
                .with(uk, -kappa * s)
                .with(wr, kappa),
            LinExpr::new()
                .with(c.h, 1.0)
                .with(ui, -half * s)
                .with(uk, -half * s)
                .with(wr, -half),
            LinExpr::new().with(c.d, 1.0).with(ui, -s).with(uk, s),
        ] {
            rows.push(Constraint::new(Family::ConeCoordinates, expr, Sense::Eq));
        }
        cones.push(ModelCone {
            family: ConeFamily::VoltageProduct,
            heads: [ConeArg::Var(c.l), ConeArg::Var(c.h)],
            tail: vec![ConeArg::Var(c.d), ConeArg::Var(wi)],
        });
    }
    (rows, cones)
}

/// Sets the cone coordinates of every branch consistently with the `u` and
/// `W_R` entries of `x`.
pub fn fill_cone_coordinates(topo: &Topology, layout: &Layout, x: &mut [f64]) {
    for t in 0..layout.cone.len() {
        for (k, br) in topo.branches.iter().enumerate() {
            let (ui, uk) = (x[layout.u[t][br.from].0], x[layout.u[t][br.to].0]);
            let (m, wr) = ((ui + uk) * FRAC_1_SQRT_2, x[layout.wr[t][k].0]);
            let kappa = br.cone_scale();
            let c = layout.cone[t][k];
            x[c.l.0] = kappa * (m - wr);
            x[c.h.0] = (m + wr) / (2.0 * kappa);
            x[c.d.0] = (ui - uk) * FRAC_1_SQRT_2;
        }
    }
}

/// A physical operating point over the horizon. Voltages and bus angles are
/// indexed `[t][bus]`, dispatch `[t][unit]` in MW / MVAr.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub voltage: Vec<Vec<f64>>,
    pub angle: Vec<Vec<f64>>,
    pub p_g: Vec<Vec<f64>>,
    pub q_g: Vec<Vec<f64>>,
    pub p_b: Vec<Vec<f64>>,
}

/// Values of every model variable at the exact lift of `op`: voltage products,
/// cone coordinates, stored energy, and epigraph variables at equality.
pub fn lift_operating_point(case: &NetworkCase, model: &RelaxedOpfModel, op: &OperatingPoint) -> Vec<f64> {
    let layout = &model.layout;
    let mut x = vec![0.0; model.data.num_vars()];
    let dt = case.dt();
    for t in 0..case.horizon() {
        let (v, th) = (&op.voltage[t], &op.angle[t]);
        for (i, id) in layout.u[t].iter().enumerate() {
            x[id.0] = v[i] * v[i] / SQRT_2;
        }
        for (k, br) in model.topology.branches.iter().enumerate() {
            let lift = lift_voltage(v[br.from], v[br.to], th[br.from] - th[br.to]);
            x[layout.wr[t][k].0] = lift.w_r;
            x[layout.wi[t][k].0] = lift.w_i;
            x[layout.theta[t][k].0] = th[br.from] - th[br.to];
        }
        for (g, gen) in case.generators.iter().enumerate() {
            let p = op.p_g[t][g];
            let eta = gen.efficiency_at(p);
            let e = layout.epi[t][g];
            x[layout.pg[t][g].0] = p;
            x[layout.qg[t][g].0] = op.q_g[t][g];
            x[e.w.0] = p * p;
            x[e.s.0] = eta;
            x[e.t_hat.0] = 1.0 / eta;
            x[e.v.0] = 1.0 / (eta * eta);
            if let Some(r) = e.r {
                x[r.0] = p * p;
            }
        }
    }
    for (s, ess) in case.storage.iter().enumerate() {
        let mut energy = ess.initial_mwh;
        for t in 0..case.horizon() {
            let p = op.p_b[t][s];
            energy -= ess.efficiency * p * dt;
            x[layout.pb[t][s].0] = p;
            x[layout.energy[t][s].0] = energy;
        }
    }
    fill_cone_coordinates(&model.topology, layout, &mut x);
    x
}

/// Coefficients of the linearized angle relation
/// `θ + c_R·W_R + c_I·W_I = rhs`, exact at the expansion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRow {
    pub c_r: f64,
    pub c_i: f64,
    pub rhs: f64,
}

impl AngleRow {
    /// `θ` implied by the row at `(w_r, w_i)`.
    pub fn theta_at(&self, w_r: f64, w_i: f64) -> f64 {
        self.rhs - self.c_r * w_r - self.c_i * w_i
    }
}

pub fn angle_linearization(point: (f64, f64)) -> Result<AngleRow, RelaxationError> {
    let (wr, wi) = point;
    let n = wr * wr + wi * wi;
    if !(n >= MIN_POINT_NORM_SQ) {
        return Err(RelaxationError::DegeneratePoint(wr, wi));
    }
    Ok(AngleRow {
        c_r: wi / n,
        c_i: -wr / n,
        rhs: wi.atan2(wr),
    })
}

/// Expansion points `(W_R, W_I)` indexed `[t][branch]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationPoints {
    pub points: Vec<Vec<(f64, f64)>>,
}

impl LinearizationPoints {
    /// Flat voltage: `(1, 0)` everywhere.
    pub fn flat(horizon: usize, n_branches: usize) -> Self {
        Self {
            points: vec![vec![(1.0, 0.0); n_branches]; horizon],
        }
    }

    /// Replaces every point with the solved value, pushed out to norm `floor`
    /// when it lies closer to the origin.
    pub fn refresh(&mut self, solved: &[Vec<(f64, f64)>], floor: f64) {
        for (row, new_row) in self.points.iter_mut().zip(solved) {
            for (p, &(wr, wi)) in row.iter_mut().zip(new_row) {
                let n = wr.hypot(wi);
                *p = if n >= floor {
                    (wr, wi)
                } else if n > 0.0 {
                    (wr * floor / n, wi * floor / n)
                } else {
                    (floor, 0.0)
                };
            }
        }
    }

    /// Largest coordinate change between two point sets.
    pub fn distance(&self, other: &Self) -> f64 {
        self.points
            .iter()
            .flatten()
            .zip(other.points.iter().flatten())
            .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub var: VarId,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub bounds: Vec<Bound>,
    pub rows: Vec<Constraint>,
}

/// Storage dynamics over the horizon: energy recursion
/// `E_t = E_{t−1} − η_b·P_t·Δt`, rate box, net-zero exchange and SOC box.
pub fn storage_constraints(case: &NetworkCase, layout: &Layout) -> ConstraintSet {
    let dt = case.dt();
    let mut set = ConstraintSet::default();
    for (s, ess) in case.storage.iter().enumerate() {
        let mut net = LinExpr::new();
        for t in 0..case.horizon() {
            let p = layout.pb[t][s];
            let e = layout.energy[t][s];
            set.bounds.push(Bound {
                var: p,
                lower: -ess.max_charge_mw,
                upper: ess.max_discharge_mw,
            });
            set.bounds.push(Bound {
                var: e,
                lower: ess.soc_min * ess.capacity_mwh,
                upper: ess.soc_max * ess.capacity_mwh,
            });
            // E_t − E_{t−1} + η·P_t·Δt = 0
            let mut row = LinExpr::new()
                .with(e, 1.0)
                .with(p, ess.efficiency * dt);
            if t == 0 {
                row.constant = -ess.initial_mwh;
            } else {
                row.add(layout.energy[t - 1][s], -1.0);
            }
            set.rows
                .push(Constraint::new(Family::StorageEnergy, row, Sense::Eq));
            net.add(p, 1.0);
        }
        set.rows
            .push(Constraint::new(Family::StorageNetZero, net, Sense::Eq));
    }
    set
}

/// Restricted-dispatch options applied on top of the base model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelOptions {
    /// Generators forced off (P = Q = 0).
    pub fixed_off: Vec<bool>,
    /// Tie per-unit outputs `P/P_base` of all dispatchable units together.
    pub equal_sharing: bool,
}

impl ModelOptions {
    pub fn full(n_gen: usize) -> Self {
        Self {
            fixed_off: vec![false; n_gen],
            equal_sharing: false,
        }
    }
}

/// Generator boxes, voltage and angle boxes, ramp rows, plus the variant
/// restrictions in `options`.
pub fn operational_bounds(
    case: &NetworkCase,
    topo: &Topology,
    layout: &Layout,
    options: &ModelOptions,
) -> ConstraintSet {
    let mut set = ConstraintSet::default();
    let horizon = case.horizon();
    for t in 0..horizon {
        for (g, gen) in case.generators.iter().enumerate() {
            let off = options.fixed_off.get(g).copied().unwrap_or(false);
            let (plo, phi, qlo, qhi) = if off {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                (gen.p_min, gen.p_max, gen.q_min, gen.q_max)
            };
            set.bounds.push(Bound {
                var: layout.pg[t][g],
                lower: plo,
                upper: phi,
            });
            set.bounds.push(Bound {
                var: layout.qg[t][g],
                lower: qlo,
                upper: qhi,
            });
        }
        for (i, bus) in case.buses.iter().enumerate() {
            set.bounds.push(Bound {
                var: layout.u[t][i],
                lower: bus.v_min * bus.v_min / SQRT_2,
                upper: bus.v_max * bus.v_max / SQRT_2,
            });
        }
        for (k, br) in topo.branches.iter().enumerate() {
            let (bi, bk) = (&case.buses[br.from], &case.buses[br.to]);
            set.bounds.push(Bound {
                var: layout.theta[t][k],
                lower: bi.theta_min - bk.theta_max,
                upper: bi.theta_max - bk.theta_min,
            });
        }
        if options.equal_sharing {
            let on: Vec<usize> = (0..case.generators.len())
                .filter(|&g| !options.fixed_off.get(g).copied().unwrap_or(false))
                .collect();
            if let Some((&first, rest)) = on.split_first() {
                let base0 = case.generators[first].p_base;
                for &g in rest {
                    let row = LinExpr::new()
                        .with(layout.pg[t][g], 1.0 / case.generators[g].p_base)
                        .with(layout.pg[t][first], -1.0 / base0);
                    set.rows
                        .push(Constraint::new(Family::EqualSharing, row, Sense::Eq));
                }
            }
        }
    }
    for t in 0..horizon.saturating_sub(1) {
        for (g, gen) in case.generators.iter().enumerate() {
            let step = LinExpr::new()
                .with(layout.pg[t + 1][g], 1.0)
                .with(layout.pg[t][g], -1.0);
            let mut up = step.clone();
            up.constant = -gen.ramp_up;
            set.rows.push(Constraint::new(Family::Ramp, up, Sense::Le));
            let mut down = step;
            down.constant = gen.ramp_down;
            set.rows.push(Constraint::new(Family::Ramp, down, Sense::Ge));
        }
    }
    set
}

/// Epigraph form of the surrogate objective `½ Σ (ζ·P² + β·(1/η)²)·Δt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpigraphPieces {
    pub objective: LinExpr,
    /// Box on the epigraph variables implied by the output range; it never
    /// cuts off a minimizer but keeps weakly weighted epigraphs bounded.
    pub bounds: Vec<Bound>,
    pub rows: Vec<Constraint>,
    pub cones: Vec<ModelCone>,
}

/// Term `k = t·N_g + g` of `aux` weights generator `g` at timestep `t`.
pub fn epigraph_objective(
    case: &NetworkCase,
    aux: &AuxiliaryState,
    layout: &Layout,
) -> Result<EpigraphPieces, RelaxationError> {
    let n_gen = case.generators.len();
    if aux.len() != case.n_terms() {
        return Err(RelaxationError::AuxDimension {
            expected: case.n_terms(),
            got: aux.len(),
        });
    }
    if !aux.is_feasible() {
        return Err(RelaxationError::InfeasibleAux);
    }
    if let Some(g) = case.generators.iter().find(|g| g.a > 0.0) {
        return Err(RelaxationError::UnsupportedCurvature(g.id.clone()));
    }
    let dt = case.dt();
    let mut out = EpigraphPieces::default();
    for t in 0..case.horizon() {
        for (g, gen) in case.generators.iter().enumerate() {
            let pair = aux.pairs[t * n_gen + g];
            let e = layout.epi[t][g];
            let p = layout.pg[t][g];
            let (lo, hi) = (gen.p_min.min(0.0), gen.p_max);
            out.bounds.push(Bound {
                var: e.w,
                lower: 0.0,
                upper: (lo * lo).max(hi * hi),
            });
            let (eta_min, eta_max) = efficiency_range(gen, lo, hi);
            if eta_min > 0.0 {
                for (var, lower, upper) in [
                    (e.s, eta_min, eta_max),
                    (e.t_hat, 1.0 / eta_max, 1.0 / eta_min),
                    (e.v, 1.0 / (eta_max * eta_max), 1.0 / (eta_min * eta_min)),
                ] {
                    out.bounds.push(Bound { var, lower, upper });
                }
            }
            out.objective.add(e.w, 0.5 * pair.zeta * dt);
            out.objective.add(e.v, 0.5 * pair.beta * dt);
            out.cones.push(ModelCone {
                family: ConeFamily::OutputSquare,
                heads: [ConeArg::Var(e.w), ConeArg::Const(0.5)],
                tail: vec![ConeArg::Var(p)],
            });
            let slope = gen.b / gen.p_base;
            match e.r {
                Some(r) => {
                    // r = k·(c + b·p − s) with k = P_base²/(−a), and r ≥ P²
                    let k = gen.p_base * gen.p_base / -gen.a;
                    let mut row = LinExpr::new()
                        .with(r, 1.0)
                        .with(p, -k * slope)
                        .with(e.s, k);
                    row.constant = -k * gen.c;
                    out.rows
                        .push(Constraint::new(Family::EfficiencyCap, row, Sense::Eq));
                    out.cones.push(ModelCone {
                        family: ConeFamily::EfficiencyCurve,
                        heads: [ConeArg::Var(r), ConeArg::Const(0.5)],
                        tail: vec![ConeArg::Var(p)],
                    });
                }
                None => {
                    let mut row = LinExpr::new().with(e.s, 1.0).with(p, -slope);
                    row.constant = -gen.c;
                    out.rows
                        .push(Constraint::new(Family::EfficiencyCap, row, Sense::Le));
                }
            }
            out.cones.push(ModelCone {
                family: ConeFamily::Reciprocal,
                heads: [ConeArg::Var(e.t_hat), ConeArg::Var(e.s)],
                tail: vec![ConeArg::Const(SQRT_2)],
            });
            out.cones.push(ModelCone {
                family: ConeFamily::ReciprocalSquare,
                heads: [ConeArg::Var(e.v), ConeArg::Const(0.5)],
                tail: vec![ConeArg::Var(e.t_hat)],
            });
        }
    }
    Ok(out)
}

/// Extremes of the concave efficiency curve over outputs `[lo, hi]` MW.
fn efficiency_range(gen: &GeneratorSpec, lo: f64, hi: f64) -> (f64, f64) {
    let (e_lo, e_hi) = (gen.efficiency_at(lo), gen.efficiency_at(hi));
    let mut max = e_lo.max(e_hi);
    if gen.a < 0.0 {
        let vertex = -gen.b / (2.0 * gen.a) * gen.p_base;
        if vertex > lo && vertex < hi {
            max = max.max(gen.efficiency_at(vertex));
        }
    }
    (e_lo.min(e_hi), max)
}

/// The assembled relaxation for one fractional-programming iteration.
#[derive(Debug, Clone)]
pub struct RelaxedOpfModel {
    pub data: ModelData,
    pub layout: Layout,
    pub topology: Topology,
}

impl RelaxedOpfModel {
    pub fn build(
        case: &NetworkCase,
        aux: &AuxiliaryState,
        points: &LinearizationPoints,
        options: &ModelOptions,
    ) -> Result<Self, RelaxationError> {
        let topology = Topology::new(case);
        let horizon = case.horizon();
        if points.points.len() != horizon
            || points
                .points
                .iter()
                .any(|row| row.len() != topology.branches.len())
        {
            return Err(RelaxationError::PointDimension);
        }
        if options.fixed_off.len() != case.generators.len() {
            return Err(RelaxationError::MaskDimension {
                expected: case.generators.len(),
                got: options.fixed_off.len(),
            });
        }

        let mut data = ModelData::default();
        let layout = Layout::register(case, &topology, &mut data);

        let epi = epigraph_objective(case, aux, &layout)?;
        let mut angle_rows = Vec::new();
        for t in 0..horizon {
            for k in 0..topology.branches.len() {
                let row = angle_linearization(points.points[t][k])?;
                let expr = LinExpr::new()
                    .with(layout.theta[t][k], 1.0)
                    .with(layout.wr[t][k], row.c_r)
                    .with(layout.wi[t][k], row.c_i);
                let mut expr = expr;
                expr.constant = -row.rhs;
                angle_rows.push(Constraint::new(
                    Family::AngleLinearization,
                    expr,
                    Sense::Eq,
                ));
            }
        }

        for set in [
            operational_bounds(case, &topology, &layout, options),
            storage_constraints(case, &layout),
        ] {
            for b in set.bounds {
                data.set_bounds(b.var, b.lower, b.upper);
            }
            data.constraints.extend(set.rows);
        }
        for t in 0..horizon {
            data.constraints
                .extend(power_balance(case, &topology, &layout, t));
            data.constraints
                .extend(line_flow_limits(case, &topology, &layout, t));
            let (rows, cones) = loss_form_cones(&topology, &layout, t);
            data.constraints.extend(rows);
            data.cones.extend(cones);
        }
        data.constraints.extend(angle_rows);
        for b in &epi.bounds {
            data.set_bounds(b.var, b.lower, b.upper);
        }
        data.constraints.extend(epi.rows);
        data.cones.extend(epi.cones);
        data.objective = epi.objective;

        Ok(Self {
            data,
            layout,
            topology,
        })
    }
}

#[cfg(test)]
mod tests;
