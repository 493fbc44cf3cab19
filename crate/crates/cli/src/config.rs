//! Flat JSON experiment configs and the preset table.

use cutquad::{GeometrySpec, Marking, Norm};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::Failure;

const GEOMETRY_KINDS: &[&str] = &["ellipsoid"];

/// What to compute for each geometry case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Run {
    /// Greedy optimization, once per marking strategy.
    Adaptive,
    /// Equal Gauss order on every cell, swept over ι = 0..=max_index.
    EqualGauss,
    /// Equal uniform-midpoint order on every cell, swept over ι = 0..=max_index.
    EqualUniform,
    ThumbA,
    ThumbB,
    /// Predicted against measured sub-cell and point counts.
    Counts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(t) => vec![t.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Cartesian product of ellipse parameters; empty lists keep the base geometry value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySweep {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub phi_deg: Vec<f64>,
    /// Additional cases with r1, r2 in [0.2, 1.2) and φ in [0, 180), drawn from `seed`.
    pub random_cases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub rho_max: u32,
    /// Polynomial degree per direction; 8 in 2D and 5 in 3D when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub norm: Norm,
    #[serde(default = "default_marking")]
    pub marking: OneOrMany<Marking>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_error: Option<f64>,
    #[serde(default = "default_runs")]
    pub runs: Vec<Run>,
    /// Equal-order index whose scheme is written and drawn.
    #[serde(default = "default_index")]
    pub index: usize,
    #[serde(default = "default_max_index")]
    pub max_index: usize,
    /// Highest Gauss degree of the rules of thumb.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<GeometrySweep>,
    #[serde(default)]
    pub seed: u64,
}

fn default_marking() -> OneOrMany<Marking> {
    OneOrMany::One(Marking::SubCell)
}

fn default_runs() -> Vec<Run> {
    vec![Run::Adaptive]
}

fn default_index() -> usize {
    1
}

fn default_max_index() -> usize {
    6
}

fn default_k_max() -> usize {
    8
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(if self.dim() == 2 { 8 } else { 5 })
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::config("invalid_config", m));
        if let Some(d) = self.dim {
            if d != self.dim() {
                return bad(format!("dim {d} does not match the geometry dimension {}", self.dim()));
            }
        }
        if self.rho_max < 1 {
            return bad("rho_max must be at least 1".into());
        }
        if self.runs.is_empty() {
            return bad("runs is empty".into());
        }
        if self.runs.contains(&Run::Adaptive) && self.budget.is_some() == self.target_error.is_some() {
            return bad("adaptive runs need exactly one of budget and target_error".into());
        }
        if self.marking.to_vec().is_empty() {
            return bad("marking is empty".into());
        }
        if self.index > self.max_index {
            return bad(format!("index {} exceeds max_index {}", self.index, self.max_index));
        }
        Ok(())
    }
}

fn circle(dim: usize) -> Value {
    json!({"kind": "ellipsoid", "r1": 0.6, "r2": 0.6, "phi_deg": 0.0, "dim": dim})
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig8a", "equal-order Gauss and uniform sweeps, circle, d=2, depth 3"),
    ("fig8b", "equal-order sweeps, circle, d=2, depth 4"),
    ("fig8c", "equal-order sweeps, circle, d=2, depth 5"),
    ("fig8d", "equal-order sweeps, sphere, d=3, depth 2"),
    ("fig8e", "equal-order sweeps, sphere, d=3, depth 3"),
    ("fig8f", "equal-order sweeps, sphere, d=3, depth 4"),
    ("fig11", "sub-cell marking to 144 points against equal order 2, d=2"),
    ("fig12", "sub-cell marking to error 7.35e-3 against equal order 2, d=2"),
    ("fig13", "sub-cell and level marking to 600 points, d=2"),
    ("fig13-3d", "sub-cell and level marking to 7168 points, d=3"),
    ("fig19", "rules of thumb A and B against the optimized and equal-order curves"),
    ("counts", "predicted and measured counts, circle, d=2, depth 5"),
    ("phi-sweep", "level marking to 200 points for r1=0.6, r2=0.1 over inclination angles"),
];

pub fn preset(name: &str) -> Option<Value> {
    let sweeps = |dim, rho| json!({"geometry": circle(dim), "rho_max": rho, "runs": ["equal_gauss", "equal_uniform"]});
    let v = match name {
        "fig8a" => sweeps(2, 3),
        "fig8b" => sweeps(2, 4),
        "fig8c" => sweeps(2, 5),
        "fig8d" => sweeps(3, 2),
        "fig8e" => sweeps(3, 3),
        "fig8f" => sweeps(3, 4),
        "fig11" => json!({"geometry": circle(2), "rho_max": 3, "budget": 144, "runs": ["adaptive", "equal_gauss"]}),
        "fig12" => {
            json!({"geometry": circle(2), "rho_max": 3, "target_error": 7.35e-3, "runs": ["adaptive", "equal_gauss"]})
        }
        "fig13" => json!({"geometry": circle(2), "rho_max": 3, "budget": 600, "marking": ["sub_cell", "level"]}),
        "fig13-3d" => json!({"geometry": circle(3), "rho_max": 3, "budget": 7168, "marking": ["sub_cell", "level"]}),
        "fig19" => json!({
            "geometry": circle(2), "rho_max": 3, "budget": 700,
            "runs": ["adaptive", "equal_gauss", "thumb_a", "thumb_b"]
        }),
        "counts" => json!({"geometry": circle(2), "rho_max": 5, "runs": ["counts"]}),
        "phi-sweep" => json!({
            "geometry": {"kind": "ellipsoid", "r1": 0.6, "r2": 0.1, "phi_deg": 0.0, "dim": 2},
            "rho_max": 3, "budget": 200, "marking": "level",
            "sweep": {"phi_deg": [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0]}
        }),
        _ => return None,
    };
    Some(v)
}

/// Builds a config from an optional preset overlaid with an optional config
/// object. Keys of the config object replace those of the preset; a `preset`
/// key in the object selects the preset when none is given on the command line.
pub fn resolve(preset_name: Option<&str>, file: Option<Value>) -> Result<ExperimentConfig, Failure> {
    let mut file = match file {
        None => Map::new(),
        Some(Value::Object(m)) => m,
        Some(_) => return Err(Failure::config("invalid_config", "config must be a JSON object".into())),
    };
    let from_file = match file.remove("preset") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(Failure::config("invalid_config", "preset must be a string".into())),
    };
    let mut merged = match preset_name.map(str::to_owned).or(from_file) {
        Some(name) => match preset(&name) {
            Some(Value::Object(m)) => m,
            _ => return Err(Failure::config("unknown_preset", format!("unknown preset {name:?}"))),
        },
        None => Map::new(),
    };
    merged.extend(file);
    if let Some(kind) = merged.get("geometry").and_then(|g| g.get("kind")) {
        if !kind.as_str().is_some_and(|k| GEOMETRY_KINDS.contains(&k)) {
            return Err(Failure::config(
                "invalid_geometry",
                format!("unknown geometry kind {kind}, expected one of {GEOMETRY_KINDS:?}"),
            ));
        }
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::config("invalid_config", e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for (name, _) in PRESETS {
            let cfg = resolve(Some(name), None).unwrap_or_else(|e| panic!("{name}: {}", e.message));
            assert!(cfg.rho_max >= 2);
        }
    }

    #[test]
    fn file_keys_override_the_preset() {
        let cfg = resolve(Some("fig11"), Some(json!({"budget": 100}))).unwrap();
        assert_eq!(cfg.budget, Some(100));
        let cfg = resolve(None, Some(json!({"preset": "fig11", "rho_max": 2}))).unwrap();
        assert_eq!((cfg.rho_max, cfg.budget), (2, Some(144)));
    }

    #[test]
    fn adaptive_runs_need_one_stop_rule() {
        let both = json!({"geometry": circle(2), "rho_max": 3, "budget": 10, "target_error": 1e-3});
        assert_eq!(resolve(None, Some(both)).unwrap_err().kind, "invalid_config");
        let none = json!({"geometry": circle(2), "rho_max": 3});
        assert!(resolve(None, Some(none)).is_err());
        let sweep_only = json!({"geometry": circle(2), "rho_max": 3, "runs": ["equal_gauss"]});
        assert!(resolve(None, Some(sweep_only)).is_ok());
    }

    #[test]
    fn unknown_geometry_kinds_are_rejected() {
        let cfg = json!({"geometry": {"kind": "torus", "dim": 2}, "rho_max": 3, "budget": 10});
        assert_eq!(resolve(None, Some(cfg)).unwrap_err().kind, "invalid_geometry");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let cfg = json!({"geometry": circle(2), "rho_max": 3, "budget": 10, "bugdet": 10});
        assert!(resolve(None, Some(cfg)).is_err());
    }
}
