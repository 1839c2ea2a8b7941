use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

use super::*;
use crate::cases;
use crate::fractional::{AuxPair, AuxiliaryState};
use crate::netmodel::{LineSpec, NetworkCase};

fn two_bus_case(g: f64, b: f64) -> NetworkCase {
    cases::two_bus(
        vec![cases::atg("G1", 1)],
        LineSpec {
            from: 1,
            to: 2,
            g,
            b,
            rate_p_mw: 40.0,
            rate_q_mvar: 30.0,
        },
        &[1.0],
    )
}

fn registered(case: &NetworkCase) -> (Topology, Layout, ModelData) {
    let topo = Topology::new(case);
    let mut data = ModelData::default();
    let layout = Layout::register(case, &topo, &mut data);
    (topo, layout, data)
}

#[test]
fn lift_examples() {
    let l = lift_voltage(1.0, 1.0, 0.0);
    assert!((l.u_i - FRAC_1_SQRT_2).abs() < 1e-15);
    assert_eq!((l.w_r, l.w_i), (1.0, 0.0));
    assert!((l.w_r.powi(2) + l.w_i.powi(2) - 2.0 * l.u_i * l.u_k).abs() < 1e-15);

    let l = lift_voltage(1.05, 0.95, 0.1);
    assert!((l.w_r - 0.9975 * 0.1f64.cos()).abs() < 1e-15);
    assert!((l.w_i - 0.9975 * 0.1f64.sin()).abs() < 1e-15);
    assert!((l.w_r.powi(2) + l.w_i.powi(2) - 2.0 * l.u_i * l.u_k).abs() < 1e-14);

    let l = lift_voltage(1.0, 1.0, std::f64::consts::FRAC_PI_2);
    assert!(l.w_r.abs() < 1e-15);
    assert!((l.w_i - 1.0).abs() < 1e-15);
}

#[test]
fn injection_examples() {
    // series admittance 1 − j10
    let case = two_bus_case(1.0, -10.0);
    let (topo, layout, data) = registered(&case);
    let inj = injection_expressions(&topo, &layout, 0);
    let mut x = vec![0.0; data.num_vars()];
    x[layout.u[0][0].0] = FRAC_1_SQRT_2;
    x[layout.u[0][1].0] = FRAC_1_SQRT_2;
    x[layout.wr[0][0].0] = 1.0;
    fill_cone_coordinates(&topo, &layout, &mut x);
    assert!(inj[0].p.eval(&x).abs() < 1e-15);
    assert!(inj[1].p.eval(&x).abs() < 1e-15);

    x[layout.wr[0][0].0] = 0.99;
    x[layout.wi[0][0].0] = 0.05;
    fill_cone_coordinates(&topo, &layout, &mut x);
    assert!((inj[0].p.eval(&x) - 0.51).abs() < 1e-12);
}

#[test]
fn isolated_bus_has_zero_injection() {
    let case = cases::single_bus(vec![cases::atg("G1", 1)], &[2.0]);
    let (topo, layout, _) = registered(&case);
    let inj = injection_expressions(&topo, &layout, 0);
    assert!(inj[0].p.terms.is_empty() && inj[0].p.constant == 0.0);
    let rows = power_balance(&case, &topo, &layout, 0);
    // P_g − P_l = 0 only
    assert_eq!(rows[0].expr.terms, vec![(layout.pg[0][0], -1.0)]);
    assert_eq!(rows[0].expr.constant, 2.0);
}

#[test]
fn line_flow_examples() {
    let case = two_bus_case(1.0, -10.0);
    let (topo, layout, data) = registered(&case);
    let flows = line_flow_expressions(&case, &topo, &layout, 0);
    let mut x = vec![0.0; data.num_vars()];
    x[layout.u[0][0].0] = FRAC_1_SQRT_2;
    x[layout.u[0][1].0] = FRAC_1_SQRT_2;
    x[layout.wr[0][0].0] = 1.0;
    fill_cone_coordinates(&topo, &layout, &mut x);
    for f in &flows {
        assert!(f.from_end.p.eval(&x).abs() < 1e-15);
        assert!(f.to_end.p.eval(&x).abs() < 1e-15);
    }
    x[layout.u[0][0].0] = 0.74;
    x[layout.wr[0][0].0] = 0.98;
    x[layout.wi[0][0].0] = 0.08;
    fill_cone_coordinates(&topo, &layout, &mut x);
    let expected = SQRT_2 * 0.74 * -1.0 - (-0.98 + 10.0 * 0.08);
    assert!((flows[0].from_end.p.eval(&x) - expected).abs() < 1e-12);
    assert!((expected + 0.8665).abs() < 1e-4);
}

#[test]
fn zero_rating_forces_zero_flow() {
    let mut case = two_bus_case(1.0, -10.0);
    case.lines[0].rate_p_mw = 0.0;
    let (topo, layout, data) = registered(&case);
    let rows = line_flow_limits(&case, &topo, &layout, 0);
    let flows = line_flow_expressions(&case, &topo, &layout, 0);
    let mut x = vec![0.0; data.num_vars()];
    x[layout.u[0][0].0] = 0.74;
    x[layout.u[0][1].0] = FRAC_1_SQRT_2;
    x[layout.wr[0][0].0] = 0.98;
    fill_cone_coordinates(&topo, &layout, &mut x);
    let flow = flows[0].from_end.p.eval(&x);
    assert!(flow.abs() > 1e-3);
    let worst = rows
        .iter()
        .filter(|r| r.family == Family::RealLineFlow)
        .map(|r| r.violation(&x))
        .fold(0.0, f64::max);
    assert!((worst - flow.abs() * case.system.mva_base).abs() < 1e-9);
}

#[test]
fn cone_examples() {
    let case = two_bus_case(1.0, -10.0);
    let (topo, layout, data) = registered(&case);
    let cones = cone_constraints(&topo, &layout, 0);
    assert_eq!(cones.len(), 1);
    let mut x = vec![0.0; data.num_vars()];
    x[layout.u[0][0].0] = FRAC_1_SQRT_2;
    x[layout.u[0][1].0] = FRAC_1_SQRT_2;
    x[layout.wr[0][0].0] = 1.0;
    assert!(cones[0].slack(&x).abs() < 1e-15);
    x[layout.wr[0][0].0] = 0.0;
    assert_eq!(cones[0].violation(&x), 0.0);
    x[layout.wr[0][0].0] = 1.1;
    assert!((cones[0].violation(&x) - 0.21).abs() < 1e-12);
}

#[test]
fn angle_linearization_examples() {
    let row = angle_linearization((1.0, 0.0)).unwrap();
    assert_eq!((row.c_r, row.c_i, row.rhs), (0.0, -1.0, 0.0));
    // θ = W_I
    assert_eq!(row.theta_at(0.7, 0.3), 0.3);

    let row = angle_linearization((1.0, 1.0)).unwrap();
    assert!((row.theta_at(2.0, 0.0) - (FRAC_PI_4 - 1.0)).abs() < 1e-15);
    assert_eq!(row.theta_at(1.0, 1.0), FRAC_PI_4);

    assert_eq!(
        angle_linearization((0.0, 0.0)),
        Err(RelaxationError::DegeneratePoint(0.0, 0.0))
    );
}

#[test]
fn angle_row_is_exact_at_expansion_point() {
    for &(wr, wi) in &[(0.98, 0.08), (1.1, -0.2), (0.5, 0.5), (0.9, 0.0)] {
        let row = angle_linearization((wr, wi)).unwrap();
        assert!((row.theta_at(wr, wi) - f64::atan(wi / wr)).abs() <= 1e-15);
    }
}

#[test]
fn linearization_refresh_floors_small_points() {
    let mut pts = LinearizationPoints::flat(1, 3);
    pts.refresh(&[vec![(0.9, 0.1), (1e-6, 0.0), (0.0, 0.0)]], 1e-4);
    assert_eq!(pts.points[0][0], (0.9, 0.1));
    assert!((pts.points[0][1].0 - 1e-4).abs() < 1e-18);
    assert_eq!(pts.points[0][2], (1e-4, 0.0));
}

fn storage_case(horizon: usize) -> NetworkCase {
    let mut case = cases::single_bus(vec![cases::atg("G1", 1)], &vec![1.0; horizon]);
    let mut ess = cases::ship_storage("E1", 1);
    ess.initial_mwh = 2.2;
    case.storage.push(ess);
    case
}

#[test]
fn storage_discharge_step() {
    let case = storage_case(1);
    let (_, layout, data) = registered(&case);
    let set = storage_constraints(&case, &layout);
    let mut x = vec![0.0; data.num_vars()];
    x[layout.pb[0][0].0] = 1.0;
    x[layout.energy[0][0].0] = 1.2;
    let energy_row = set
        .rows
        .iter()
        .find(|r| r.family == Family::StorageEnergy)
        .unwrap();
    assert!(energy_row.violation(&x) < 1e-15);
    assert!((1.2f64 / 2.2 - 0.545).abs() < 1e-3);
    let bound = set.bounds.iter().find(|b| b.var == layout.pb[0][0]).unwrap();
    assert_eq!((bound.lower, bound.upper), (-10.0, 10.0));
}

#[test]
fn storage_idle_and_round_trip() {
    let case = storage_case(2);
    let (_, layout, data) = registered(&case);
    let set = storage_constraints(&case, &layout);
    let check = |p: [f64; 2], e: [f64; 2]| {
        let mut x = vec![0.0; data.num_vars()];
        for t in 0..2 {
            x[layout.pb[t][0].0] = p[t];
            x[layout.energy[t][0].0] = e[t];
        }
        set.rows.iter().map(|r| r.violation(&x)).fold(0.0, f64::max)
    };
    assert!(check([0.0, 0.0], [2.2, 2.2]) < 1e-15);
    assert!(check([1.0, -1.0], [1.2, 2.2]) < 1e-15);
    // Net-zero violated by a one-way profile.
    assert!((check([1.0, 0.0], [1.2, 1.2]) - 1.0).abs() < 1e-15);
}

#[test]
fn operational_bound_examples() {
    let mut case = cases::single_bus(vec![cases::mtg("G1", 1)], &[10.0, 10.0]);
    case.generators[0].ramp_up = 5.0;
    case.generators[0].ramp_down = 5.0;
    let (topo, layout, data) = registered(&case);
    let set = operational_bounds(&case, &topo, &layout, &ModelOptions::full(1));
    let u = set.bounds.iter().find(|b| b.var == layout.u[0][0]).unwrap();
    assert!((u.lower - 0.6382).abs() < 1e-4);
    assert!((u.upper - 1.1025 / SQRT_2).abs() < 1e-12);
    assert!((u.upper - 0.77958).abs() < 1e-5);

    let ramp: Vec<_> = set.rows.iter().filter(|r| r.family == Family::Ramp).collect();
    assert_eq!(ramp.len(), 2);
    let at = |p1: f64| {
        let mut x = vec![0.0; data.num_vars()];
        x[layout.pg[0][0].0] = 10.0;
        x[layout.pg[1][0].0] = p1;
        ramp.iter().map(|r| r.violation(&x)).fold(0.0, f64::max)
    };
    assert_eq!(at(5.0), 0.0);
    assert_eq!(at(15.0), 0.0);
    assert!((at(15.5) - 0.5).abs() < 1e-12);
    assert!((at(4.0) - 1.0).abs() < 1e-12);

    let single = cases::single_bus(vec![cases::mtg("G1", 1)], &[10.0]);
    let (topo, layout, _) = registered(&single);
    let set = operational_bounds(&single, &topo, &layout, &ModelOptions::full(1));
    assert!(set.rows.iter().all(|r| r.family != Family::Ramp));
}

#[test]
fn epigraph_rejects_convex_curve() {
    let mut case = cases::single_bus(vec![cases::atg("G1", 1)], &[2.0]);
    case.generators[0].a = 0.05;
    let (_, layout, _) = registered(&case);
    assert_eq!(
        epigraph_objective(&case, &AuxiliaryState::ones(1), &layout),
        Err(RelaxationError::UnsupportedCurvature("G1".into()))
    );
}

#[test]
fn epigraph_is_tight_at_fixed_output() {
    let case = cases::single_bus(vec![cases::atg("G1", 1)], &[2.0]);
    let (_, layout, data) = registered(&case);
    let aux = AuxiliaryState {
        pairs: vec![AuxPair {
            zeta: 0.7,
            beta: 2.0,
        }],
    };
    let pieces = epigraph_objective(&case, &aux, &layout).unwrap();
    let g = &case.generators[0];
    for p_mw in [0.0, 2.0, 4.7] {
        let eta = g.efficiency_at(p_mw);
        let e = layout.epi[0][0];
        let mut x = vec![0.0; data.num_vars()];
        x[layout.pg[0][0].0] = p_mw;
        x[e.w.0] = p_mw * p_mw;
        x[e.s.0] = eta;
        x[e.t_hat.0] = 1.0 / eta;
        x[e.v.0] = 1.0 / (eta * eta);
        x[e.r.unwrap().0] = p_mw * p_mw;
        for cone in &pieces.cones {
            assert!(cone.slack(&x).abs() < 1e-12, "{:?} {}", cone.family, cone.slack(&x));
        }
        for row in &pieces.rows {
            assert!(row.violation(&x) < 1e-11, "{}", row.violation(&x));
        }
        let obj = pieces.objective.eval(&x);
        let expected = 0.5 * (0.7 * p_mw * p_mw + 2.0 / (eta * eta));
        assert!((obj - expected).abs() < 1e-12);
    }
}

#[test]
fn build_rejects_mismatched_inputs() {
    let case = cases::single_bus(vec![cases::atg("G1", 1)], &[2.0]);
    let pts = LinearizationPoints::flat(1, 0);
    assert!(matches!(
        RelaxedOpfModel::build(&case, &AuxiliaryState::ones(3), &pts, &ModelOptions::full(1)),
        Err(RelaxationError::AuxDimension { expected: 1, got: 3 })
    ));
    let bad = AuxiliaryState {
        pairs: vec![AuxPair {
            zeta: 0.5,
            beta: 0.5,
        }],
    };
    assert_eq!(
        RelaxedOpfModel::build(&case, &bad, &pts, &ModelOptions::full(1)).unwrap_err(),
        RelaxationError::InfeasibleAux
    );
}

#[test]
fn model_counts_match_dimensions() {
    let case = cases::ship();
    let topo = Topology::new(&case);
    let pts = LinearizationPoints::flat(24, topo.branches.len());
    let m = RelaxedOpfModel::build(
        &case,
        &AuxiliaryState::ones(case.n_terms()),
        &pts,
        &ModelOptions::full(4),
    )
    .unwrap();
    let count = |f: Family| m.data.constraints.iter().filter(|c| c.family == f).count();
    assert_eq!(count(Family::RealBalance), 12 * 24);
    assert_eq!(count(Family::AngleLinearization), 12 * 24);
    assert_eq!(count(Family::RealLineFlow), 12 * 24 * 4);
    assert_eq!(count(Family::Ramp), 4 * 23 * 2);
    assert_eq!(count(Family::StorageNetZero), 8);
    assert_eq!(count(Family::StorageEnergy), 8 * 24);
    let vp = m
        .data
        .cones
        .iter()
        .filter(|c| c.family == ConeFamily::VoltageProduct)
        .count();
    assert_eq!(vp, 12 * 24);
    assert_eq!(m.data.cones.len(), 12 * 24 + 4 * 24 * 4);
    for c in &m.data.constraints {
        assert!(c.expr.terms.iter().all(|(v, _)| v.0 < m.data.num_vars()));
    }
}
