use std::f64::consts::SQRT_2;

use proptest::prelude::*;

use fueldispatch::cases;
use fueldispatch::fractional::AuxiliaryState;
use fueldispatch::netmodel::{
    parse_case, serialize_case, BusSpec, GeneratorSpec, LineSpec, LoadProfile, NetworkCase,
    StorageSpec, SystemParams,
};
use fueldispatch::relaxation::{
    cone_constraints, fill_cone_coordinates, loss_form_cones, Layout, ModelData, ModelOptions,
    RelaxedOpfModel, Topology, LinearizationPoints,
};
use fueldispatch::socp::{solve, Cone, ConicProblem, LinearRow, SolveOptions, SolveStatus};

/// minimize a·x + b·y over the disc of radius r around (cx, cy)
fn disc_problem(a: f64, b: f64, cx: f64, cy: f64, r: f64) -> (ConicProblem, usize, usize) {
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let mut pr = ConicProblem::new();
    let x = pr.add_var("x", free.0, free.1, a);
    let y = pr.add_var("y", free.0, free.1, b);
    let dx = pr.add_var("dx", free.0, free.1, 0.0);
    let dy = pr.add_var("dy", free.0, free.1, 0.0);
    let rr = pr.add_var("r", r, r, 0.0);
    pr.equalities.push(LinearRow { terms: vec![(dx, 1.0), (x, -1.0)], rhs: -cx });
    pr.equalities.push(LinearRow { terms: vec![(dy, 1.0), (y, -1.0)], rhs: -cy });
    pr.cones.push(Cone::Quadratic(vec![rr, dx, dy]));
    (pr, x, y)
}

fn random_case(
    n_bus: usize,
    lines: Vec<(usize, usize, f64, f64)>,
    gens: Vec<(usize, f64, f64)>,
    store: Option<(usize, f64)>,
    loads: Vec<(f64, f64)>,
) -> NetworkCase {
    let horizon = 2;
    let buses: Vec<BusSpec> = (1..=n_bus as u32).map(cases::bus).collect();
    let lines = lines
        .into_iter()
        .filter(|&(f, t, _, _)| f % n_bus != t % n_bus)
        .map(|(f, t, g, b)| LineSpec {
            from: (f % n_bus) as u32 + 1,
            to: (t % n_bus) as u32 + 1,
            g,
            b,
            rate_p_mw: 40.0,
            rate_q_mvar: 30.0,
        })
        .collect();
    let generators = gens
        .into_iter()
        .enumerate()
        .map(|(k, (bus, p_max, c))| GeneratorSpec {
            id: format!("G{k}"),
            bus: (bus % n_bus) as u32 + 1,
            p_max,
            p_base: p_max,
            c,
            ..cases::atg("x", 1)
        })
        .collect();
    let storage = store
        .into_iter()
        .map(|(bus, frac)| StorageSpec {
            initial_mwh: 2.2 * frac,
            bus: (bus % n_bus) as u32 + 1,
            ..cases::ship_storage("E1", 1)
        })
        .collect();
    let mut profile = LoadProfile::zeros(horizon, n_bus);
    for (k, &(p, q)) in loads.iter().enumerate() {
        profile.set(k % horizon, (k / horizon) % n_bus, p, q);
    }
    NetworkCase {
        system: SystemParams {
            mva_base: 10.0,
            horizon,
            dt_hours: 0.5,
            alpha_mwh_per_liter: 0.01,
        },
        buses,
        lines,
        generators,
        storage,
        loads: profile,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn case_document_round_trips(
        n_bus in 1usize..5,
        lines in prop::collection::vec((0usize..5, 0usize..5, -50.0f64..50.0, -50.0f64..50.0), 0..4),
        gens in prop::collection::vec((0usize..5, 0.5f64..40.0, 0.05f64..0.4), 1..4),
        store in prop::option::of((0usize..5, 0.2f64..1.0)),
        loads in prop::collection::vec((0.0f64..10.0, -2.0f64..5.0), 0..8),
    ) {
        let case = random_case(n_bus, lines, gens, store, loads);
        let again = parse_case(&serialize_case(&case)).unwrap();
        prop_assert_eq!(case, again);
    }

    #[test]
    fn conic_argmin_matches_closed_form_and_ignores_cost_scale(
        angle in 0.0f64..std::f64::consts::TAU,
        cx in -5.0f64..5.0,
        cy in -5.0f64..5.0,
        r in 0.1f64..10.0,
        scale in 1e-3f64..1e3,
    ) {
        let (a, b) = (angle.cos(), angle.sin());
        let expect = (cx - r * a, cy - r * b);
        for k in [1.0, scale] {
            let (pr, x, y) = disc_problem(k * a, k * b, cx, cy, r);
            let s = solve(&pr, &SolveOptions::default()).unwrap();
            prop_assert_eq!(s.status, SolveStatus::Optimal);
            let tol = 1e-5 * (1.0 + r + cx.abs() + cy.abs());
            prop_assert!((s.x[x] - expect.0).abs() < tol, "{} vs {}", s.x[x], expect.0);
            prop_assert!((s.x[y] - expect.1).abs() < tol, "{} vs {}", s.x[y], expect.1);
        }
    }

    #[test]
    fn rotated_cones_match_grid_oracle(alpha in 0.1f64..10.0, gamma in 0.1f64..10.0) {
        // minimize α·w + γ·t  s.t.  w ≥ p², 2·t·p ≥ 1,  p ∈ [0.1, 5]
        let free = (f64::NEG_INFINITY, f64::INFINITY);
        let mut pr = ConicProblem::new();
        let w = pr.add_var("w", free.0, free.1, alpha);
        let t = pr.add_var("t", free.0, free.1, gamma);
        let p = pr.add_var("p", 0.1, 5.0, 0.0);
        let half = pr.add_var("half", 0.5, 0.5, 0.0);
        let one = pr.add_var("one", 1.0, 1.0, 0.0);
        pr.cones.push(Cone::Rotated(vec![w, half, p]));
        pr.cones.push(Cone::Rotated(vec![t, p, one]));
        let s = solve(&pr, &SolveOptions::default()).unwrap();
        prop_assert_eq!(s.status, SolveStatus::Optimal);
        let f = |p: f64| alpha * p * p + gamma / (2.0 * p);
        let best = (0..=49_000)
            .map(|k| 0.1 + k as f64 * 1e-4)
            .map(f)
            .fold(f64::INFINITY, f64::min);
        prop_assert!((s.objective - best).abs() <= 1e-6 * (1.0 + best), "{} vs {best}", s.objective);
    }

    #[test]
    fn loss_form_cone_is_the_voltage_cone(
        g in -60.0f64..60.0,
        b in -60.0f64..60.0,
        ui in 0.5f64..0.9,
        uk in 0.5f64..0.9,
        wr in -1.2f64..1.2,
        wi in -1.2f64..1.2,
    ) {
        let line = LineSpec { from: 1, to: 2, g, b, rate_p_mw: 1.0, rate_q_mvar: 1.0 };
        let case = cases::two_bus(vec![cases::atg("G", 1)], line, &[1.0]);
        let topo = Topology::new(&case);
        let mut data = ModelData::default();
        let layout = Layout::register(&case, &topo, &mut data);
        let mut x = vec![0.0; data.num_vars()];
        x[layout.u[0][0].0] = ui;
        x[layout.u[0][1].0] = uk;
        x[layout.wr[0][0].0] = wr;
        x[layout.wi[0][0].0] = wi;
        fill_cone_coordinates(&topo, &layout, &mut x);
        let (rows, cones) = loss_form_cones(&topo, &layout, 0);
        for row in &rows {
            prop_assert!(row.violation(&x) < 1e-12);
        }
        let semantic = cone_constraints(&topo, &layout, 0)[0].slack(&x);
        prop_assert!((cones[0].slack(&x) - semantic).abs() < 1e-12 * (1.0 + semantic.abs()));
        prop_assert!((semantic - (2.0 * ui * uk - wr * wr - wi * wi)).abs() < 1e-12);
    }

    #[test]
    fn flat_lift_is_feasible_for_any_aux(zeta in 0.01f64..100.0, beta_scale in 1.0f64..10.0) {
        let case = cases::single_bus(vec![cases::atg("A", 1), cases::mtg("M", 1)], &[3.0]);
        let aux = AuxiliaryState {
            pairs: vec![fueldispatch::fractional::AuxPair { zeta, beta: beta_scale / zeta }; 2],
        };
        let model = RelaxedOpfModel::build(&case, &aux, &LinearizationPoints::flat(1, 0), &ModelOptions::full(2)).unwrap();
        let op = fueldispatch::relaxation::OperatingPoint {
            voltage: vec![vec![1.0]],
            angle: vec![vec![0.0]],
            p_g: vec![vec![1.0, 2.0]],
            q_g: vec![vec![0.0, 0.0]],
            p_b: vec![vec![]],
        };
        let x = fueldispatch::relaxation::lift_operating_point(&case, &model, &op);
        let res = model.data.residuals(&x);
        prop_assert!(res.max() < 1e-12, "{res}");
        prop_assert!((x[model.layout.u[0][0].0] - 1.0 / SQRT_2).abs() < 1e-15);
    }
}
