use std::collections::BTreeSet;
use std::fmt;

use super::{GeneratorSpec, NetworkCase};

/// One violated case invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn check(&mut self, ok: bool, subject: impl fmt::Display, message: &str) {
        if !ok {
            self.0.push(Violation {
                subject: subject.to_string(),
                message: message.to_string(),
            });
        }
    }
}

/// Lists every invariant the case violates; an empty list means the case is valid.
pub fn validate_case(case: &NetworkCase) -> Vec<Violation> {
    let mut r = Report(Vec::new());
    let sys = &case.system;
    r.check(sys.horizon >= 1, "system", "horizon must be at least 1");
    r.check(sys.dt_hours > 0.0, "system", "dt_hours must be positive");
    r.check(
        sys.alpha_mwh_per_liter > 0.0,
        "system",
        "alpha_mwh_per_liter must be positive",
    );
    r.check(sys.mva_base > 0.0, "system", "mva_base must be positive");
    r.check(
        case.loads.horizon() == sys.horizon,
        "loads",
        "load profile does not cover the horizon",
    );
    r.check(!case.buses.is_empty(), "buses", "at least one bus required");
    r.check(
        !case.generators.is_empty(),
        "generators",
        "at least one generator required",
    );

    let mut ids = BTreeSet::new();
    for bus in &case.buses {
        let who = format!("bus {}", bus.id);
        r.check(ids.insert(bus.id), &who, "duplicate bus id");
        r.check(bus.v_min > 0.0, &who, "v_min must be positive");
        r.check(bus.v_min <= bus.v_max, &who, "v_min exceeds v_max");
        r.check(
            bus.theta_min <= bus.theta_max,
            &who,
            "theta_min exceeds theta_max",
        );
    }
    let exists = |id: u32| ids.contains(&id);

    for (k, line) in case.lines.iter().enumerate() {
        let who = format!("line {k} ({}-{})", line.from, line.to);
        r.check(line.from != line.to, &who, "from-bus equals to-bus");
        r.check(
            exists(line.from) && exists(line.to),
            &who,
            "references nonexistent bus",
        );
        r.check(
            line.rate_p_mw >= 0.0 && line.rate_q_mvar >= 0.0,
            &who,
            "ratings must be nonnegative",
        );
    }

    for g in &case.generators {
        let who = format!("generator {}", g.id);
        r.check(exists(g.bus), &who, "references nonexistent bus");
        r.check(g.p_min >= 0.0, &who, "p_min must be nonnegative");
        r.check(g.p_max >= g.p_min, &who, "p_max below p_min");
        r.check(g.q_max >= g.q_min, &who, "q_max below q_min");
        r.check(g.p_base > 0.0, &who, "p_base must be positive");
        r.check(g.a <= 0.0, &who, "efficiency curve must be concave (a <= 0)");
        r.check(
            g.ramp_down >= 0.0 && g.ramp_up >= 0.0,
            &who,
            "ramp limits must be nonnegative",
        );
        if g.p_base > 0.0 && g.p_max >= g.p_min {
            r.check(
                min_efficiency(g) > 0.0,
                &who,
                "efficiency nonpositive on operating range",
            );
        }
    }

    for s in &case.storage {
        let who = format!("storage {}", s.id);
        r.check(exists(s.bus), &who, "references nonexistent bus");
        r.check(s.capacity_mwh > 0.0, &who, "capacity must be positive");
        r.check(
            0.0 <= s.soc_min && s.soc_min < s.soc_max && s.soc_max <= 1.0,
            &who,
            "SOC bounds must satisfy 0 <= soc_min < soc_max <= 1",
        );
        r.check(
            s.initial_mwh >= s.soc_min * s.capacity_mwh,
            &who,
            "initial energy below SOC_min",
        );
        r.check(
            s.initial_mwh <= s.soc_max * s.capacity_mwh,
            &who,
            "initial energy above SOC_max",
        );
        r.check(
            s.max_charge_mw >= 0.0 && s.max_discharge_mw >= 0.0,
            &who,
            "rates must be nonnegative",
        );
        r.check(
            s.efficiency > 0.0 && s.efficiency <= 1.0,
            &who,
            "efficiency must lie in (0, 1]",
        );
    }

    r.0
}

/// Minimum of η over the per-unit operating band `[P_min, P_max] / P_base`.
fn min_efficiency(g: &GeneratorSpec) -> f64 {
    let lo = g.p_min / g.p_base;
    let hi = g.p_max / g.p_base;
    let mut m = g.efficiency(lo).min(g.efficiency(hi));
    if g.a > 0.0 {
        let vertex = -g.b / (2.0 * g.a);
        if vertex > lo && vertex < hi {
            m = m.min(g.efficiency(vertex));
        }
    }
    m
}
