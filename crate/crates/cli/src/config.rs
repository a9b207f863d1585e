//! Run configuration: JSON file merged over defaults, then `--set` overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub output: OutputSpec,
    pub dispersion: DispersionSpec,
    pub spectrum: SpectrumSpec,
    pub evolve: EvolveSpec,
    pub cascade: CascadeSpec,
    pub green: GreenSpec,
    pub heat: HeatSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpec {
    /// tanh, exp_layer or inflected.
    pub name: String,
    pub u_plus: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Falls back to $SHEARLAB_OUT_DIR, then ./shearlab-out.
    pub dir: Option<String>,
    pub svg: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSpec {
    /// rayleigh (point spectrum by the argument principle) or collocation (Orr–Sommerfeld).
    pub method: String,
    pub alpha: f64,
    pub region: Region,
    pub nu: f64,
    pub n_modes: usize,
    /// Collocation modes to report, most unstable first.
    pub keep: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// uniform or refined.
    pub kind: String,
    pub y_max: f64,
    pub n_points: usize,
    pub fine_end: f64,
    pub h_fine: f64,
    pub h_coarse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSpec {
    /// euler, ns or compare.
    pub mode: String,
    pub alpha: f64,
    pub nu: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_outputs: usize,
    /// bump or eigenmode (ns only).
    pub initial: String,
    pub bump_centre: f64,
    pub bump_width: f64,
    pub grid: GridSpec,
    /// Contour vertices as [re, im] pairs; empty selects a horizontal path above the spectrum.
    pub contour: Vec<[f64; 2]>,
    pub contour_height: f64,
    pub checkpoints: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeSpec {
    pub scenario: String,
    pub nu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenSpec {
    /// rayleigh or orr_sommerfeld.
    pub operator: String,
    pub alpha: f64,
    pub c: [f64; 2],
    pub nu: f64,
    pub x: f64,
    pub y_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSpec {
    pub y_max: f64,
    pub n_points: usize,
    pub dt: f64,
    pub steps: usize,
    /// crank_nicolson or explicit.
    pub scheme: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: ProfileSpec::default(),
            output: OutputSpec::default(),
            dispersion: DispersionSpec::default(),
            spectrum: SpectrumSpec::default(),
            evolve: EvolveSpec::default(),
            cascade: CascadeSpec::default(),
            green: GreenSpec::default(),
            heat: HeatSpec::default(),
        }
    }
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec { name: "exp_layer".into(), u_plus: 1.0 }
    }
}

impl Default for DispersionSpec {
    fn default() -> Self {
        DispersionSpec { alpha_min: 0.5, alpha_max: 6.0, n_points: 200 }
    }
}

impl Default for Region {
    fn default() -> Self {
        Region { re_min: 0.05, re_max: 0.95, im_min: 1e-3, im_max: 0.5 }
    }
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec { method: "rayleigh".into(), alpha: 0.5, region: Region::default(), nu: 1e-6, n_modes: 128, keep: 10 }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { kind: "uniform".into(), y_max: 10.0, n_points: 2048, fine_end: 1.0, h_fine: 0.002, h_coarse: 0.05 }
    }
}

impl Default for EvolveSpec {
    fn default() -> Self {
        EvolveSpec {
            mode: "euler".into(),
            alpha: 0.5,
            nu: 1e-6,
            t_final: 100.0,
            dt: 0.05,
            n_outputs: 40,
            initial: "bump".into(),
            bump_centre: 1.0,
            bump_width: 0.5,
            grid: GridSpec::default(),
            contour: Vec::new(),
            contour_height: 0.25,
            checkpoints: vec![1.0, 5.0, 10.0],
        }
    }
}

impl Default for CascadeSpec {
    fn default() -> Self {
        CascadeSpec { scenario: "euler_unstable".into(), nu: 1e-8 }
    }
}

impl Default for GreenSpec {
    fn default() -> Self {
        GreenSpec { operator: "rayleigh".into(), alpha: 0.5, c: [0.5, 0.1], nu: 1e-6, x: 1.0, y_max: 10.0, n_points: 401 }
    }
}

impl Default for HeatSpec {
    fn default() -> Self {
        HeatSpec { y_max: 30.0, n_points: 601, dt: 0.01, steps: 100, scheme: "crank_nicolson".into() }
    }
}

/// Config problems: bad file, bad JSON, unknown keys, bad overrides.
#[derive(Debug)]
pub struct ConfigError(pub String);

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `a.b.c=value`; the value is parsed as JSON, falling back to a string.
fn apply_set(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| ConfigError(format!("override '{assignment}' is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| ConfigError(format!("'{path}' descends into a non-object")))?;
        if !obj.contains_key(*key) {
            return Err(ConfigError(format!("unknown config key '{path}'")));
        }
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.get_mut(*key).expect("checked");
    }
    Err(ConfigError("empty override path".into()))
}

pub fn load(file: Option<&str>, sets: &[String]) -> Result<RunConfig, ConfigError> {
    let mut root = serde_json::to_value(RunConfig::default()).expect("defaults serialise");
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read config '{path}': {e}")))?;
        let user: Value = serde_json::from_str(&text).map_err(|e| ConfigError(format!("config '{path}' is not valid JSON: {e}")))?;
        if !user.is_object() {
            return Err(ConfigError("config root must be a JSON object".into()));
        }
        // Unknown keys are caught by the typed pass below.
        merge(&mut root, user);
    }
    for s in sets {
        apply_set(&mut root, s)?;
    }
    serde_json::from_value(root).map_err(|e| ConfigError(format!("invalid config: {e}")))
}

impl RunConfig {
    /// SHA-256 of the resolved config in its canonical serialisation.
    /// The output block is left out so the same run hashes the same wherever it lands.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSpec::default();
        let text = serde_json::to_string(&c).expect("serialisable");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
