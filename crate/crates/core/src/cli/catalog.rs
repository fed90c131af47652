//! Built-in potentials, initial data and kinetic states, with the
//! parameter schemas printed by `pdpt list`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::config::{CatalogRef, UserCatalog};
use crate::error::{Error, Result};
use crate::euler::{InitialData, Thermal, Velocity};
use crate::kinetic::{Beam, BeamState, GaussianPhaseDensity, PhaseMixture};
use crate::special::PotentialSpec;

/// Kinetic states selectable from campaign files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum KineticSpec {
    /// Two monokinetic beams at velocities `a` and `b` in d = 1.
    TwoBeam {
        #[serde(default)]
        a: f64,
        #[serde(default = "unit")]
        b: f64,
        #[serde(default = "unit")]
        mass: f64,
        #[serde(default = "half")]
        width: f64,
    },
    Beams {
        beams: Vec<Beam>,
    },
    GaussianPacket(GaussianPhaseDensity),
    /// Two counter-streaming Gaussian packets with thermal spread.
    WarmBeams {
        #[serde(default = "unit")]
        separation: f64,
        #[serde(default = "half")]
        speed: f64,
        #[serde(default = "width")]
        sigma_x: f64,
        #[serde(default = "spread")]
        sigma_xi: f64,
    },
}

fn unit() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn width() -> f64 {
    0.3
}

fn spread() -> f64 {
    0.15
}

/// A kinetic state in one of its two computable forms.
pub enum KineticRealization {
    Beams(BeamState),
    Smooth(PhaseMixture),
}

impl KineticRealization {
    pub fn d(&self) -> usize {
        match self {
            Self::Beams(b) => b.d(),
            Self::Smooth(m) => m.parts[0].center.len(),
        }
    }
}

impl KineticSpec {
    pub fn realize(&self) -> Result<KineticRealization> {
        Ok(match self {
            Self::TwoBeam { a, b, mass, width } => KineticRealization::Beams(BeamState::new(vec![
                Beam { mass: *mass, center: vec![0.0], width: *width, velocity: vec![*a] },
                Beam { mass: *mass, center: vec![0.0], width: *width, velocity: vec![*b] },
            ])?),
            Self::Beams { beams } => KineticRealization::Beams(BeamState::new(beams.clone())?),
            Self::GaussianPacket(g) => {
                g.validate()?;
                KineticRealization::Smooth(PhaseMixture { parts: vec![g.clone()] })
            }
            Self::WarmBeams { separation, speed, sigma_x, sigma_xi } => {
                let part = |sign: f64| GaussianPhaseDensity {
                    mass: 1.0,
                    center: vec![-0.5 * sign * separation],
                    sigma_x: *sigma_x,
                    u0: vec![sign * speed],
                    kappa: 0.0,
                    sigma_xi: *sigma_xi,
                };
                let m = PhaseMixture { parts: vec![part(1.0), part(-1.0)] };
                m.parts.iter().try_for_each(|p| p.validate())?;
                KineticRealization::Smooth(m)
            }
        })
    }
}

pub fn builtin_potential(name: &str) -> Option<PotentialSpec> {
    Some(match name {
        "quadratic" => PotentialSpec::Quadratic { c: 1.0 },
        "exp-cosh" => PotentialSpec::ExpCosh,
        "quartic" => PotentialSpec::Quartic,
        "norm-cone" => PotentialSpec::NormCone { c: 1.0, base: None },
        "periodic-perturbed" => PotentialSpec::PeriodicPerturbed { eps: 0.05, period: 1.0 },
        _ => return None,
    })
}

pub fn builtin_initial_data(name: &str) -> Option<InitialData> {
    let thermal = Thermal::Isentropic { a: 1.0 };
    Some(match name {
        "uniform" => InitialData::Uniform { rho: 1.0, u: vec![], p: 1.0 },
        "gaussian-bump" => InitialData::GaussianBump {
            amplitude: 1.0,
            width: 0.5,
            center: vec![],
            velocity: Velocity::default(),
            thermal,
        },
        "cos-bump" => InitialData::CosBump {
            amplitude: 1.0,
            radius: 1.0,
            power: 2.0,
            center: vec![],
            velocity: Velocity::default(),
            thermal,
        },
        "two-bump" => InitialData::TwoBump { amplitude: 1.0, radius: 0.8, centers: [vec![-0.7], vec![0.7]], thermal },
        "riemann" => InitialData::Riemann { left: [1.0, 0.0, 1.0], right: [0.125, 0.0, 0.1], x0: 0.0 },
        _ => return None,
    })
}

pub fn builtin_kinetic(name: &str) -> Option<KineticSpec> {
    Some(match name {
        "two-beam" => KineticSpec::TwoBeam { a: 0.0, b: 1.0, mass: 1.0, width: 0.5 },
        "gaussian-packet" => KineticSpec::GaussianPacket(GaussianPhaseDensity {
            mass: 1.0,
            center: vec![0.0],
            sigma_x: 0.6,
            u0: vec![0.4],
            kappa: 0.5,
            sigma_xi: 0.3,
        }),
        "warm-beams" => KineticSpec::WarmBeams { separation: 1.0, speed: 0.5, sigma_x: 0.3, sigma_xi: 0.15 },
        _ => return None,
    })
}

fn resolve<T: Clone>(
    r: &CatalogRef<T>,
    user: &std::collections::BTreeMap<String, T>,
    builtin: impl Fn(&str) -> Option<T>,
) -> Result<T> {
    match r {
        CatalogRef::Inline(v) => Ok(v.clone()),
        CatalogRef::Name(n) => user
            .get(n)
            .cloned()
            .or_else(|| builtin(n))
            .ok_or_else(|| Error::InvalidInput(format!("unknown catalog entry '{n}'"))),
    }
}

impl UserCatalog {
    pub fn potential(&self, r: &CatalogRef<PotentialSpec>) -> Result<PotentialSpec> {
        resolve(r, &self.potentials, builtin_potential)
    }

    pub fn initial_data(&self, r: &CatalogRef<InitialData>) -> Result<InitialData> {
        resolve(r, &self.initial_data, builtin_initial_data)
    }

    pub fn kinetic(&self, r: &CatalogRef<KineticSpec>) -> Result<KineticSpec> {
        resolve(r, &self.kinetic_states, builtin_kinetic)
    }
}

/// One catalog entry as printed by `pdpt list`.
struct Entry {
    name: &'static str,
    summary: &'static str,
    /// `(parameter, JSON type, default)`; no default means required.
    params: &'static [(&'static str, &'static str, Option<&'static str>)],
}

const POTENTIALS: &[Entry] = &[
    Entry { name: "quadratic", summary: "c |z|^2 / 2", params: &[("c", "number", Some("1"))] },
    Entry { name: "exp-cosh", summary: "e^t cosh x (d = 1)", params: &[] },
    Entry { name: "quartic", summary: "sum z_i^4 / 12", params: &[] },
    Entry {
        name: "norm-cone",
        summary: "c |z - base|, homogeneous of degree 1",
        params: &[("c", "number", Some("1")), ("base", "array", Some("origin"))],
    },
    Entry {
        name: "polynomial",
        summary: "user polynomial, sum of coef * z^powers",
        params: &[("terms", "array of {coef, powers}", None)],
    },
    Entry {
        name: "periodic-perturbed",
        summary: "|z|^2 / 2 + eps times a periodic product",
        params: &[("eps", "number", None), ("period", "number", Some("1"))],
    },
];

const INITIAL_DATA: &[Entry] = &[
    Entry {
        name: "uniform",
        summary: "constant state",
        params: &[("rho", "number", None), ("u", "array", Some("0")), ("p", "number", None)],
    },
    Entry {
        name: "gaussian-bump",
        summary: "amplitude exp(-|x - center|^2 / (2 width^2))",
        params: &[
            ("amplitude", "number", None),
            ("width", "number", None),
            ("center", "array", Some("origin")),
            ("velocity", "{uniform, linear}", Some("rest")),
            ("thermal", "thermal", None),
        ],
    },
    Entry {
        name: "cos-bump",
        summary: "amplitude cos^power(pi r / (2 radius)), compactly supported",
        params: &[
            ("amplitude", "number", None),
            ("radius", "number", None),
            ("power", "number", Some("2")),
            ("center", "array", Some("origin")),
            ("velocity", "{uniform, linear}", Some("rest")),
            ("thermal", "thermal", None),
        ],
    },
    Entry {
        name: "two-bump",
        summary: "two cos-bumps at rest",
        params: &[
            ("amplitude", "number", None),
            ("radius", "number", None),
            ("centers", "[array, array]", None),
            ("thermal", "thermal", None),
        ],
    },
    Entry {
        name: "riemann",
        summary: "planar jump between (rho, u_1, p) states",
        params: &[("left", "[number; 3]", None), ("right", "[number; 3]", None), ("x0", "number", Some("0"))],
    },
];

const KINETIC: &[Entry] = &[
    Entry {
        name: "two-beam",
        summary: "two monokinetic beams at velocities a and b (d = 1)",
        params: &[
            ("a", "number", Some("0")),
            ("b", "number", Some("1")),
            ("mass", "number", Some("1")),
            ("width", "number", Some("0.5")),
        ],
    },
    Entry { name: "beams", summary: "list of monokinetic beams", params: &[("beams", "array of beam", None)] },
    Entry {
        name: "gaussian-packet",
        summary: "Gaussian in x and xi with velocity shear kappa",
        params: &[
            ("mass", "number", None),
            ("center", "array", None),
            ("sigma_x", "number", None),
            ("u0", "array", None),
            ("kappa", "number", None),
            ("sigma_xi", "number", None),
        ],
    },
    Entry {
        name: "warm-beams",
        summary: "two counter-streaming Gaussian packets (d = 1)",
        params: &[
            ("separation", "number", Some("1")),
            ("speed", "number", Some("0.5")),
            ("sigma_x", "number", Some("0.3")),
            ("sigma_xi", "number", Some("0.15")),
        ],
    },
];

fn schema(e: &Entry) -> Value {
    let mut props = Map::new();
    let mut required = Vec::new();
    for (p, ty, default) in e.params {
        let mut v = json!({ "type": ty });
        match default {
            Some(d) => {
                v["default"] = json!(d);
            }
            None => required.push(json!(p)),
        }
        props.insert(p.to_string(), v);
    }
    json!({
        "name": e.name,
        "description": e.summary,
        "source": "builtin",
        "parameters": { "type": "object", "properties": props, "required": required },
    })
}

fn user_entries<T: Serialize>(map: &std::collections::BTreeMap<String, T>) -> Vec<Value> {
    map.iter()
        .map(|(name, v)| json!({ "name": name, "source": "user", "value": serde_json::to_value(v).unwrap_or(Value::Null) }))
        .collect()
}

/// The catalog with parameter schemas, extended by `user`.
pub fn catalog_json(user: &UserCatalog) -> Value {
    let section = |builtin: &[Entry], extra: Vec<Value>| -> Value {
        Value::Array(builtin.iter().map(schema).chain(extra).collect())
    };
    json!({
        "potentials": section(POTENTIALS, user_entries(&user.potentials)),
        "initial_data": section(INITIAL_DATA, user_entries(&user.initial_data)),
        "kinetic_states": section(KINETIC, user_entries(&user.kinetic_states)),
    })
}

pub fn catalog_text(user: &UserCatalog) -> String {
    let mut out = String::new();
    let mut section = |title: &str, builtin: &[Entry], extra: Vec<&String>| {
        out.push_str(title);
        out.push('\n');
        for e in builtin {
            let params: Vec<String> = e
                .params
                .iter()
                .map(|(p, ty, d)| match d {
                    Some(d) => format!("{p}: {ty} = {d}"),
                    None => format!("{p}: {ty}"),
                })
                .collect();
            out.push_str(&format!("  {:<20} {}\n", e.name, e.summary));
            if !params.is_empty() {
                out.push_str(&format!("  {:<20} ({})\n", "", params.join(", ")));
            }
        }
        for name in extra {
            out.push_str(&format!("  {name:<20} user entry\n"));
        }
    };
    section("potentials", POTENTIALS, user.potentials.keys().collect());
    section("initial data", INITIAL_DATA, user.initial_data.keys().collect());
    section("kinetic states", KINETIC, user.kinetic_states.keys().collect());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_default_exists() {
        for e in POTENTIALS.iter().filter(|e| e.params.iter().all(|p| p.2.is_some())) {
            assert!(builtin_potential(e.name).is_some(), "{}", e.name);
        }
        for e in KINETIC.iter().filter(|e| e.params.iter().all(|p| p.2.is_some())) {
            assert!(builtin_kinetic(e.name).is_some(), "{}", e.name);
        }
        for name in InitialData::NAMES {
            assert!(builtin_initial_data(name).is_some(), "{name}");
        }
    }

    #[test]
    fn builtin_kinetic_states_realize() {
        for name in ["two-beam", "gaussian-packet", "warm-beams"] {
            assert_eq!(builtin_kinetic(name).unwrap().realize().unwrap().d(), 1);
        }
    }

    #[test]
    fn listing_contains_required_names() {
        let text = catalog_text(&UserCatalog::default());
        for n in ["quadratic", "gaussian-bump", "two-beam"] {
            assert!(text.contains(n));
        }
        let v = catalog_json(&UserCatalog::default());
        assert_eq!(v["potentials"][0]["name"], "quadratic");
        assert_eq!(v["potentials"][0]["parameters"]["properties"]["c"]["type"], "number");
    }
}
