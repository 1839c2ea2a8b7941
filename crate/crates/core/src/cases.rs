//! Built-in cases: the notional 12-bus MVAC ship system and small synthetic
//! networks used by tests, benchmarks and the oracle.
//!
//! The ship network data is approximate. Generator curves and storage data
//! follow the published unit tables; line impedances are a uniform ring and
//! the load profile is a synthetic daily shape.

use crate::netmodel::{
    BusSpec, GeneratorClass, GeneratorSpec, LineSpec, LoadProfile, NetworkCase, StorageSpec,
    SystemParams,
};

/// Auxiliary gas turbine, 4.7 MW.
pub fn atg(id: &str, bus: u32) -> GeneratorSpec {
    GeneratorSpec {
        id: id.to_string(),
        bus,
        class: Some(GeneratorClass::Auxiliary),
        p_min: 0.0,
        p_max: 4.7,
        q_min: -3.0,
        q_max: 3.5,
        p_base: 4.7,
        a: -0.133,
        b: 0.311,
        c: 0.174,
        ramp_down: 4.7,
        ramp_up: 4.7,
    }
}

/// Main gas turbine, 35 MW.
pub fn mtg(id: &str, bus: u32) -> GeneratorSpec {
    GeneratorSpec {
        id: id.to_string(),
        bus,
        class: Some(GeneratorClass::Main),
        p_min: 0.0,
        p_max: 35.0,
        q_min: -20.0,
        q_max: 25.0,
        p_base: 35.0,
        a: -0.133,
        b: 0.311,
        c: 0.204,
        ramp_down: 15.0,
        ramp_up: 15.0,
    }
}

/// Ship storage module: 2.2 MWh, 10 MW, SOC in [0.2, 1.0], starting at 60 %.
pub fn ship_storage(id: &str, bus: u32) -> StorageSpec {
    StorageSpec {
        id: id.to_string(),
        bus,
        capacity_mwh: 2.2,
        max_charge_mw: 10.0,
        max_discharge_mw: 10.0,
        efficiency: 1.0,
        soc_min: 0.2,
        soc_max: 1.0,
        initial_mwh: 1.32,
    }
}

pub fn bus(id: u32) -> BusSpec {
    BusSpec {
        id,
        v_min: 0.95,
        v_max: 1.05,
        theta_min: -0.5,
        theta_max: 0.5,
    }
}

/// Line with series impedance `r + j·x` (per-unit).
pub fn line_rx(from: u32, to: u32, r: f64, x: f64, rate_p_mw: f64, rate_q_mvar: f64) -> LineSpec {
    let d = r * r + x * x;
    LineSpec {
        from,
        to,
        g: r / d,
        b: -x / d,
        rate_p_mw,
        rate_q_mvar,
    }
}

fn system(horizon: usize, mva_base: f64) -> SystemParams {
    SystemParams {
        mva_base,
        horizon,
        dt_hours: 1.0,
        alpha_mwh_per_liter: 0.01,
    }
}

/// One bus carrying every generator; `demand[t]` is the real load in MW.
pub fn single_bus(generators: Vec<GeneratorSpec>, demand: &[f64]) -> NetworkCase {
    let generators = generators
        .into_iter()
        .map(|g| GeneratorSpec { bus: 1, ..g })
        .collect();
    let mut loads = LoadProfile::zeros(demand.len(), 1);
    for (t, &p) in demand.iter().enumerate() {
        loads.set(t, 0, p, 0.0);
    }
    NetworkCase {
        system: system(demand.len(), 10.0),
        buses: vec![bus(1)],
        lines: Vec::new(),
        generators,
        storage: Vec::new(),
        loads,
    }
}

/// ATG + MTG on a lossless single bus with a 5 MW load for one step.
pub fn tiny_two_generator() -> NetworkCase {
    single_bus(vec![atg("ATG1", 1), mtg("MTG1", 1)], &[5.0])
}

/// Two buses joined by one line; every generator sits on bus 1, `demand[t]`
/// is drawn at bus 2 with a 0.3 reactive ratio.
pub fn two_bus(generators: Vec<GeneratorSpec>, line: LineSpec, demand: &[f64]) -> NetworkCase {
    let generators = generators
        .into_iter()
        .map(|g| GeneratorSpec { bus: 1, ..g })
        .collect();
    let mut loads = LoadProfile::zeros(demand.len(), 2);
    for (t, &p) in demand.iter().enumerate() {
        loads.set(t, 1, p, 0.3 * p);
    }
    NetworkCase {
        system: system(demand.len(), 10.0),
        buses: vec![bus(1), bus(2)],
        lines: vec![LineSpec {
            from: 1,
            to: 2,
            ..line
        }],
        generators,
        storage: Vec::new(),
        loads,
    }
}

/// Normalized daily demand shape, hour 0 to 23.
pub const DAILY_SHAPE: [f64; 24] = [
    0.72, 0.68, 0.66, 0.65, 0.66, 0.70, 0.78, 0.86, 0.91, 0.94, 0.96, 0.97, 0.98, 0.98, 0.99, 1.00,
    1.00, 0.99, 0.97, 0.95, 0.92, 0.87, 0.81, 0.76,
];

/// Peak total real demand of the ship profile, MW.
pub const SHIP_PEAK_MW: f64 = 10.5;

/// Notional 12-bus MVAC ship: 2 MTG + 2 ATG, 8 storage modules (two per
/// zone), propulsion loads at buses 6 and 7 and AC load centers at buses
/// 1-4 and 9-12, over a 24 h horizon at 1 h steps.
pub fn ship() -> NetworkCase {
    let buses: Vec<BusSpec> = (1..=12).map(bus).collect();
    let lines = (1..=12)
        .map(|i| line_rx(i, i % 12 + 1, 0.002, 0.02, 40.0, 30.0))
        .collect();
    let generators = vec![
        mtg("MTG1", 1),
        mtg("MTG2", 7),
        atg("ATG1", 4),
        atg("ATG2", 10),
    ];
    let storage = [2, 3, 5, 6, 8, 9, 11, 12]
        .iter()
        .enumerate()
        .map(|(k, &b)| ship_storage(&format!("ESS{}", k + 1), b))
        .collect();

    let mut loads = LoadProfile::zeros(24, 12);
    for (t, shape) in DAILY_SHAPE.iter().enumerate() {
        let total = SHIP_PEAK_MW * shape;
        for id in 1..=12u32 {
            let (share, q_ratio) = match id {
                6 | 7 => (0.25, 0.3),
                5 | 8 => continue,
                _ => (0.0625, 0.4),
            };
            let p = round6(total * share);
            loads.set(t, (id - 1) as usize, p, round6(p * q_ratio));
        }
    }

    NetworkCase {
        system: system(24, 10.0),
        buses,
        lines,
        generators,
        storage,
        loads,
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::validate_case;

    #[test]
    fn built_in_cases_are_valid() {
        for case in [ship(), tiny_two_generator()] {
            assert!(validate_case(&case).is_empty(), "{:?}", validate_case(&case));
        }
    }

    #[test]
    fn ship_matches_unit_tables() {
        let s = ship();
        let mtgs: Vec<_> = s.generators.iter().filter(|g| g.p_max == 35.0).collect();
        let atgs: Vec<_> = s.generators.iter().filter(|g| g.p_max == 4.7).collect();
        assert_eq!((mtgs.len(), atgs.len()), (2, 2));
        assert_eq!(s.storage.len(), 8);
        assert!(s
            .storage
            .iter()
            .all(|e| e.capacity_mwh == 2.2 && e.max_discharge_mw == 10.0 && e.soc_min == 0.2));
        assert_eq!(s.horizon(), 24);
        let peak = (0..24).map(|t| s.loads.total_p(t)).fold(0.0, f64::max);
        assert!((peak - SHIP_PEAK_MW).abs() < 1e-5);
    }
}
