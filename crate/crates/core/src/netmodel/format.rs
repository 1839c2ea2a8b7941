//! TOML case documents with inline or CSV load profiles.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    BusSpec, CaseError, GeneratorSpec, LineSpec, LoadProfile, NetworkCase, StorageSpec,
    SystemParams,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDocument {
    system: SystemParams,
    buses: Vec<BusSpec>,
    #[serde(default)]
    lines: Vec<LineSpec>,
    #[serde(default)]
    generators: Vec<GeneratorSpec>,
    #[serde(default)]
    storage: Vec<StorageSpec>,
    #[serde(default)]
    loads: LoadsSection,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    entries: Vec<LoadEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadEntry {
    t: usize,
    bus: u32,
    p_mw: f64,
    q_mvar: f64,
}

/// Parses a case document. A `loads.csv` path is resolved against the
/// current directory; use [`parse_case_with_base`] or [`load_case`] to resolve
/// it against the case file location.
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    parse_case_with_base(text, None)
}

pub fn load_case(path: impl AsRef<Path>) -> Result<NetworkCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_case_with_base(&text, path.parent())
}

pub fn parse_case_with_base(text: &str, base: Option<&Path>) -> Result<NetworkCase, CaseError> {
    let doc: CaseDocument = toml::from_str(text).map_err(|e| CaseError::Parse(e.to_string()))?;

    if doc.buses.is_empty() {
        return Err(schema("buses", "at least one bus required"));
    }
    if doc.generators.is_empty() {
        return Err(schema("generators", "at least one generator required"));
    }
    if doc.system.horizon == 0 {
        return Err(schema("system", "horizon must be at least 1"));
    }

    let mut seen = BTreeSet::new();
    for bus in &doc.buses {
        if !seen.insert(bus.id) {
            return Err(schema("buses", &format!("duplicate bus id {}", bus.id)));
        }
    }
    let known = |id: u32| seen.contains(&id);
    for (k, line) in doc.lines.iter().enumerate() {
        for end in [line.from, line.to] {
            if !known(end) {
                return Err(CaseError::Reference(format!(
                    "lines[{k}] references nonexistent bus {end}"
                )));
            }
        }
    }
    for g in &doc.generators {
        if !known(g.bus) {
            return Err(CaseError::Reference(format!(
                "generator {} references nonexistent bus {}",
                g.id, g.bus
            )));
        }
    }
    for s in &doc.storage {
        if !known(s.bus) {
            return Err(CaseError::Reference(format!(
                "storage {} references nonexistent bus {}",
                s.id, s.bus
            )));
        }
    }

    let horizon = doc.system.horizon;
    let bus_index = |id: u32| doc.buses.iter().position(|b| b.id == id);
    let mut loads = LoadProfile::zeros(horizon, doc.buses.len());
    let mut filled = BTreeSet::new();
    let mut put = |t: usize, bus: u32, p: f64, q: f64, location: String| {
        if t >= horizon {
            return Err(CaseError::LoadCsv {
                location,
                message: format!("timestep {t} outside 0..{horizon}"),
            });
        }
        let Some(b) = bus_index(bus) else {
            return Err(CaseError::Reference(format!(
                "load {location} references nonexistent bus {bus}"
            )));
        };
        if !filled.insert((t, b)) {
            return Err(CaseError::LoadCsv {
                location,
                message: format!("duplicate entry for t={t}, bus={bus}"),
            });
        }
        loads.set(t, b, p, q);
        Ok(())
    };

    for (k, e) in doc.loads.entries.iter().enumerate() {
        put(e.t, e.bus, e.p_mw, e.q_mvar, format!("entries[{k}]"))?;
    }
    if let Some(rel) = &doc.loads.csv {
        let path = match base {
            Some(dir) => dir.join(rel),
            None => PathBuf::from(rel),
        };
        for (line, e) in read_load_csv(&path)?.into_iter() {
            put(
                e.t,
                e.bus,
                e.p_mw,
                e.q_mvar,
                format!("{}:{line}", path.display()),
            )?;
        }
    }

    Ok(NetworkCase {
        system: doc.system,
        buses: doc.buses,
        lines: doc.lines,
        generators: doc.generators,
        storage: doc.storage,
        loads,
    })
}

fn read_load_csv(path: &Path) -> Result<Vec<(u64, LoadEntry)>, CaseError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CaseError::LoadCsv {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for record in reader.deserialize::<LoadEntry>() {
        let record = record.map_err(|e| CaseError::LoadCsv {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        rows.push(((rows.len() + 2) as u64, record));
    }
    Ok(rows)
}

fn schema(section: &str, message: &str) -> CaseError {
    CaseError::Schema {
        section: section.to_string(),
        message: message.to_string(),
    }
}

/// Writes a case back to the document format with the load profile inlined.
/// Zero demand entries are omitted.
pub fn serialize_case(case: &NetworkCase) -> String {
    let mut entries = Vec::new();
    for t in 0..case.loads.horizon() {
        for (b, bus) in case.buses.iter().enumerate() {
            let (p, q) = (case.loads.p(t, b), case.loads.q(t, b));
            if p != 0.0 || q != 0.0 {
                entries.push(LoadEntry {
                    t,
                    bus: bus.id,
                    p_mw: p,
                    q_mvar: q,
                });
            }
        }
    }
    let doc = CaseDocument {
        system: case.system.clone(),
        buses: case.buses.clone(),
        lines: case.lines.clone(),
        generators: case.generators.clone(),
        storage: case.storage.clone(),
        loads: LoadsSection { csv: None, entries },
    };
    toml::to_string(&doc).expect("case document is always representable in TOML")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
mva_base = 10.0
horizon = 2
dt_hours = 1.0
alpha_mwh_per_liter = 0.01

[[buses]]
id = 1
v_min = 0.95
v_max = 1.05
theta_min = -0.5
theta_max = 0.5

[[generators]]
id = "G1"
bus = 1
p_min = 0.0
p_max = 4.7
q_min = -2.0
q_max = 2.0
p_base = 4.7
a = -0.133
b = 0.311
c = 0.174
ramp_down = 4.7
ramp_up = 4.7

[loads]
entries = [ { t = 1, bus = 1, p_mw = 2.0, q_mvar = 0.5 } ]
"#;

    #[test]
    fn parses_minimal_document_with_zero_fill() {
        let case = parse_case(MINIMAL).unwrap();
        assert_eq!(case.generators.len(), 1);
        assert_eq!(case.loads.p(0, 0), 0.0);
        assert_eq!(case.loads.p(1, 0), 2.0);
        assert_eq!(case.loads.q(1, 0), 0.5);
        assert_eq!(case.storage.len(), 0);
    }

    #[test]
    fn empty_generator_list_is_rejected() {
        let cut = MINIMAL.find("[[generators]]").unwrap();
        let end = MINIMAL.find("[loads]").unwrap();
        let stripped = format!("{}{}", &MINIMAL[..cut], &MINIMAL[end..]);
        let err = parse_case(&stripped).unwrap_err();
        assert_eq!(
            err.to_string(),
            "generators: at least one generator required"
        );
    }

    #[test]
    fn missing_field_names_field_and_location() {
        let text = MINIMAL.replace("alpha_mwh_per_liter = 0.01\n", "");
        let err = parse_case(&text).unwrap_err().to_string();
        assert!(err.contains("alpha_mwh_per_liter"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn dangling_storage_bus_is_a_reference_error() {
        let text = format!(
            "{MINIMAL}\n[[storage]]\nid = \"E1\"\nbus = 99\ncapacity_mwh = 2.2\nmax_charge_mw = 10.0\n\
             max_discharge_mw = 10.0\nsoc_min = 0.2\nsoc_max = 1.0\ninitial_mwh = 1.1\n"
        );
        let err = parse_case(&text).unwrap_err();
        assert!(matches!(err, CaseError::Reference(ref m) if m.contains("99")), "{err}");
    }

    #[test]
    fn load_outside_horizon_is_rejected() {
        let text = MINIMAL.replace("t = 1,", "t = 5,");
        assert!(matches!(
            parse_case(&text),
            Err(CaseError::LoadCsv { .. })
        ));
    }

    #[test]
    fn csv_loads_resolve_against_base_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("loads.csv"),
            "t,bus,p_mw,q_mvar\n0,1,1.5,0.2\n1,1,2.5,0.3\n",
        )
        .unwrap();
        let text = MINIMAL.replace(
            "entries = [ { t = 1, bus = 1, p_mw = 2.0, q_mvar = 0.5 } ]",
            "csv = \"loads.csv\"",
        );
        let case = parse_case_with_base(&text, Some(dir.path())).unwrap();
        assert_eq!(case.loads.p(0, 0), 1.5);
        assert_eq!(case.loads.q(1, 0), 0.3);
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let case = parse_case(MINIMAL).unwrap();
        let again = parse_case(&serialize_case(&case)).unwrap();
        assert_eq!(case, again);
    }
}
