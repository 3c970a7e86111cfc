//! TOML scenario configuration. Every physical key carries its SI unit in
//! the name; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controllers::{ControllerConfig, ControllerKind, PhGains, PiGains};
use crate::demos;
use crate::engine::{CheckThresholds, InitialCondition, Scenario, SimState};
use crate::error::{Error, Result};
use crate::io::load_csv::ingest_load_profile;
use crate::io::synthetic::SyntheticLoad;
use crate::ph::EnergyState;
use crate::plant::{GridProfile, GridSegment, Interpolation, LoadProfile, PlantParams};
use crate::Ab;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Normal,
    Ocp,
    Sag,
    Custom,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub r_g_ohm: Option<f64>,
    pub l_g_h: Option<f64>,
    pub r_f_ohm: Option<f64>,
    pub l_f_h: Option<f64>,
    pub c_dc_f: Option<f64>,
    pub eta: Option<f64>,
    pub v_base_ac_v: Option<f64>,
    pub v_base_dc_v: Option<f64>,
    pub s_base_w: Option<f64>,
    pub f_nom_hz: Option<f64>,
    pub v_dc_min_v: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhSection {
    pub k_v_w_per_v: Option<f64>,
    pub k_i_per_s: Option<f64>,
    pub a_v_w_per_v_s: Option<f64>,
    pub m_i_per_s2: Option<f64>,
    pub q_star_var: Option<f64>,
    pub tau_d_s: Option<f64>,
    pub tau_v_s: Option<f64>,
    pub v_dc_star_v: Option<f64>,
    pub v_ac_min_v: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiSection {
    pub kp_v_a_per_v: Option<f64>,
    pub ki_v_a_per_v_s: Option<f64>,
    pub kp_i_ohm: Option<f64>,
    pub ki_i_ohm_per_s: Option<f64>,
    pub current_limit_a: Option<f64>,
    pub v_dc_star_v: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: Option<String>,
    pub ph: Option<PhSection>,
    pub pi: Option<PiSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub start_s: f64,
    pub amplitude_pu: f64,
    pub frequency_hz: f64,
    pub phase_offset_rad: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub segments: Option<Vec<SegmentEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadPoint {
    pub time_s: f64,
    pub power_pu: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub seed: Option<u64>,
    pub duration_s: Option<f64>,
    pub hold_s: Option<f64>,
    pub ramp_s: Option<f64>,
    pub min_pu: Option<f64>,
    pub max_pu: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    /// `points`, `csv` or `synthetic`; inferred from the other keys when absent.
    pub source: Option<String>,
    /// `zoh` or `linear`.
    pub interpolation: Option<String>,
    pub points: Option<Vec<LoadPoint>>,
    pub csv_path: Option<String>,
    pub synthetic: Option<SyntheticSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub phi_alpha_vs: f64,
    pub phi_beta_vs: f64,
    pub q_dc_c: f64,
    pub zeta_v_vs: f64,
    pub zeta_i_alpha_as: f64,
    pub zeta_i_beta_as: f64,
    pub s_alpha_a: f64,
    pub s_beta_a: f64,
    pub v_f_alpha_v: f64,
    pub v_f_beta_v: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub duration_s: Option<f64>,
    pub step_s: Option<f64>,
    pub decimation: Option<usize>,
    /// `equilibrium`, `cold` or `explicit`.
    pub initial: Option<String>,
    pub initial_state: Option<StateSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub plots: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub max_deviation_pu: Option<f64>,
    pub recovery_band_pu: Option<f64>,
    pub recovery_within_s: Option<f64>,
    pub supply_tol_pu: Option<f64>,
    pub energy_tol_rel: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub scenario: ScenarioKind,
    pub name: Option<String>,
    pub plant: Option<PlantSection>,
    pub controller: Option<ControllerSection>,
    pub grid: Option<GridSection>,
    pub load: Option<LoadSection>,
    pub sim: Option<SimSection>,
    pub output: Option<OutputSection>,
    pub check: Option<CheckSection>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    pub plots: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { dir: None, plots: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub scenario: Scenario<f64>,
    pub output: OutputOptions,
}

/// Values that take precedence over the document.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub step_s: Option<f64>,
    pub duration_s: Option<f64>,
    pub controller: Option<ControllerKind>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario<f64>) {
        if let Some(h) = self.step_s {
            s.step = h;
        }
        if let Some(d) = self.duration_s {
            s.duration = d;
        }
        if let Some(k) = self.controller {
            s.controller.kind = k;
        }
    }
}

fn config_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        location: location.into(),
        message: message.into(),
    }
}

/// Fills `slot` from the document or the default, collecting defaulted keys.
struct Filler<'a> {
    section: &'static str,
    defaulted: &'a mut Vec<String>,
}

impl Filler<'_> {
    fn take<V: Copy>(&mut self, key: &str, value: Option<V>, default: V) -> V {
        value.unwrap_or_else(|| {
            self.defaulted.push(format!("{}.{key}", self.section));
            default
        })
    }
}

const PLANT_KEYS: [(&str, &str); 11] = [
    ("r_g", "plant.r_g_ohm"),
    ("l_g", "plant.l_g_h"),
    ("r_f", "plant.r_f_ohm"),
    ("l_f", "plant.l_f_h"),
    ("c_dc", "plant.c_dc_f"),
    ("eta", "plant.eta"),
    ("v_base_ac", "plant.v_base_ac_v"),
    ("v_base_dc", "plant.v_base_dc_v"),
    ("s_base", "plant.s_base_w"),
    ("f_nom", "plant.f_nom_hz"),
    ("v_dc_min", "plant.v_dc_min_v"),
];

const PH_KEYS: [(&str, &str); 9] = [
    ("k_v", "controller.ph.k_v_w_per_v"),
    ("k_i", "controller.ph.k_i_per_s"),
    ("a_v", "controller.ph.a_v_w_per_v_s"),
    ("m_i", "controller.ph.m_i_per_s2"),
    ("q_star", "controller.ph.q_star_var"),
    ("tau_d", "controller.ph.tau_d_s"),
    ("tau_v", "controller.ph.tau_v_s"),
    ("v_dc_star", "controller.ph.v_dc_star_v"),
    ("v_ac_min", "controller.ph.v_ac_min_v"),
];

const PI_KEYS: [(&str, &str); 6] = [
    ("kp_v", "controller.pi.kp_v_a_per_v"),
    ("ki_v", "controller.pi.ki_v_a_per_v_s"),
    ("kp_i", "controller.pi.kp_i_ohm"),
    ("ki_i", "controller.pi.ki_i_ohm_per_s"),
    ("current_limit", "controller.pi.current_limit_a"),
    ("v_dc_star", "controller.pi.v_dc_star_v"),
];

fn locate(err: Error, keys: &[(&str, &str)]) -> Error {
    match err {
        Error::Parameter { name, reason } => {
            let key = keys
                .iter()
                .find(|(n, _)| *n == name)
                .map_or(name.clone(), |(_, k)| (*k).to_string());
            config_err(key, reason)
        }
        other => other,
    }
}

fn build_plant(sec: Option<&PlantSection>, defaulted: &mut Vec<String>) -> Result<PlantParams<f64>> {
    let d = PlantParams::default();
    let s = sec.cloned().unwrap_or_default();
    let mut f = Filler {
        section: "plant",
        defaulted,
    };
    let p = PlantParams {
        r_g: f.take("r_g_ohm", s.r_g_ohm, d.r_g),
        l_g: f.take("l_g_h", s.l_g_h, d.l_g),
        r_f: f.take("r_f_ohm", s.r_f_ohm, d.r_f),
        l_f: f.take("l_f_h", s.l_f_h, d.l_f),
        c_dc: f.take("c_dc_f", s.c_dc_f, d.c_dc),
        eta: f.take("eta", s.eta, d.eta),
        v_base_ac: f.take("v_base_ac_v", s.v_base_ac_v, d.v_base_ac),
        v_base_dc: f.take("v_base_dc_v", s.v_base_dc_v, d.v_base_dc),
        s_base: f.take("s_base_w", s.s_base_w, d.s_base),
        f_nom: f.take("f_nom_hz", s.f_nom_hz, d.f_nom),
        v_dc_min: f.take("v_dc_min_v", s.v_dc_min_v, 0.1 * s.v_base_dc_v.unwrap_or(d.v_base_dc)),
    };
    p.validate().map_err(|e| locate(e, &PLANT_KEYS))?;
    Ok(p)
}

fn build_controller(
    sec: Option<&ControllerSection>,
    plant: &PlantParams<f64>,
    defaulted: &mut Vec<String>,
) -> Result<ControllerConfig<f64>> {
    let base = ControllerConfig::defaults_for(plant);
    let s = sec.cloned().unwrap_or_default();
    let kind = match &s.kind {
        Some(k) => k.parse().map_err(|m: String| config_err("controller.kind", m))?,
        None => {
            defaulted.push("controller.kind".into());
            ControllerKind::Ph
        }
    };
    let ph_s = s.ph.unwrap_or_default();
    let d = base.ph;
    let mut f = Filler {
        section: "controller.ph",
        defaulted,
    };
    let ph = PhGains {
        k_v: f.take("k_v_w_per_v", ph_s.k_v_w_per_v, d.k_v),
        k_i: f.take("k_i_per_s", ph_s.k_i_per_s, d.k_i),
        a_v: f.take("a_v_w_per_v_s", ph_s.a_v_w_per_v_s, d.a_v),
        m_i: f.take("m_i_per_s2", ph_s.m_i_per_s2, d.m_i),
        q_star: f.take("q_star_var", ph_s.q_star_var, d.q_star),
        tau_d: f.take("tau_d_s", ph_s.tau_d_s, d.tau_d),
        tau_v: f.take("tau_v_s", ph_s.tau_v_s, d.tau_v),
        v_dc_star: f.take("v_dc_star_v", ph_s.v_dc_star_v, d.v_dc_star),
        v_ac_min: f.take("v_ac_min_v", ph_s.v_ac_min_v, d.v_ac_min),
    };
    ph.validate().map_err(|e| locate(e, &PH_KEYS))?;
    let pi_s = s.pi.unwrap_or_default();
    let d = base.pi;
    let mut f = Filler {
        section: "controller.pi",
        defaulted,
    };
    let pi = PiGains {
        kp_v: f.take("kp_v_a_per_v", pi_s.kp_v_a_per_v, d.kp_v),
        ki_v: f.take("ki_v_a_per_v_s", pi_s.ki_v_a_per_v_s, d.ki_v),
        kp_i: f.take("kp_i_ohm", pi_s.kp_i_ohm, d.kp_i),
        ki_i: f.take("ki_i_ohm_per_s", pi_s.ki_i_ohm_per_s, d.ki_i),
        current_limit: f.take("current_limit_a", pi_s.current_limit_a, d.current_limit),
        v_dc_star: f.take("v_dc_star_v", pi_s.v_dc_star_v, d.v_dc_star),
    };
    pi.validate().map_err(|e| locate(e, &PI_KEYS))?;
    Ok(ControllerConfig { kind, ph, pi })
}

fn parse_interpolation(s: &str) -> Result<Interpolation> {
    match s {
        "zoh" => Ok(Interpolation::ZeroOrderHold),
        "linear" => Ok(Interpolation::Linear),
        other => Err(config_err(
            "load.interpolation",
            format!("unknown interpolation `{other}` (expected zoh or linear)"),
        )),
    }
}

fn interpolation_name(i: Interpolation) -> &'static str {
    match i {
        Interpolation::ZeroOrderHold => "zoh",
        Interpolation::Linear => "linear",
    }
}

fn scenario_error(location: &str, e: Error) -> Error {
    match e {
        Error::Scenario(m) => config_err(location, m),
        other => other,
    }
}

/// Parses a configuration document. Relative CSV paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path, ov: &Overrides) -> Result<Config> {
    let doc: ConfigDocument = toml::from_str(text).map_err(|e| {
        let location = e
            .span()
            .map(|sp| {
                let line = text[..sp.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "document".into());
        config_err(location, e.message().to_string())
    })?;
    build_config(&doc, base_dir, ov)
}

pub fn build_config(doc: &ConfigDocument, base_dir: &Path, ov: &Overrides) -> Result<Config> {
    let mut defaulted = Vec::new();
    let plant = build_plant(doc.plant.as_ref(), &mut defaulted)?;
    let controller = build_controller(doc.controller.as_ref(), &plant, &mut defaulted)?;

    let template: Scenario<f64> = match doc.scenario {
        ScenarioKind::Normal => demos::normal(),
        ScenarioKind::Ocp => demos::ocp(ov.seed.unwrap_or(SyntheticLoad::default().seed))?,
        ScenarioKind::Sag => demos::sag(),
        ScenarioKind::Custom => Scenario::steady("custom", 1.0),
    };

    let sim = doc.sim.clone().unwrap_or_default();
    let mut f = Filler {
        section: "sim",
        defaulted: &mut defaulted,
    };
    let duration = f.take("duration_s", sim.duration_s, template.duration);
    let step = f.take("step_s", sim.step_s, template.step);
    let decimation = f.take("decimation", sim.decimation, template.decimation);
    let initial = match (sim.initial.as_deref(), sim.initial_state) {
        (None | Some("equilibrium"), None) => InitialCondition::Equilibrium,
        (Some("cold"), None) => InitialCondition::ColdStart,
        (None | Some("explicit"), Some(st)) => InitialCondition::Explicit(SimState {
            energy: EnergyState {
                phi: Ab::new(st.phi_alpha_vs, st.phi_beta_vs),
                q_dc: st.q_dc_c,
                zeta_v: st.zeta_v_vs,
                zeta_i: Ab::new(st.zeta_i_alpha_as, st.zeta_i_beta_as),
            },
            s: Ab::new(st.s_alpha_a, st.s_beta_a),
            v_f: Ab::new(st.v_f_alpha_v, st.v_f_beta_v),
        }),
        (Some("explicit"), None) => {
            return Err(config_err("sim.initial_state", "required when sim.initial = \"explicit\""))
        }
        (Some(other), _) => {
            return Err(config_err(
                "sim.initial",
                format!("`{other}` is not one of equilibrium, cold or explicit (initial_state only with explicit)"),
            ))
        }
    };

    let grid = match doc.grid.as_ref().and_then(|g| g.segments.as_ref()) {
        Some(segs) => GridProfile::new(
            segs.iter()
                .map(|s| GridSegment {
                    start: s.start_s,
                    amplitude: s.amplitude_pu,
                    frequency_hz: s.frequency_hz,
                    phase_offset: s.phase_offset_rad.unwrap_or(0.0),
                })
                .collect(),
        )
        .map_err(|e| scenario_error("grid.segments", e))?,
        None => {
            defaulted.push("grid.segments".into());
            // Follow the configured nominal frequency.
            let segs = template
                .grid
                .segments()
                .iter()
                .map(|s| GridSegment {
                    frequency_hz: plant.f_nom,
                    ..*s
                })
                .collect();
            GridProfile::new(segs)?
        }
    };

    let load = build_load(doc.load.as_ref(), &template, duration, plant.s_base, base_dir, ov, &mut defaulted)?;

    let c = doc.check.clone().unwrap_or_default();
    let t = template.check;
    let mut f = Filler {
        section: "check",
        defaulted: &mut defaulted,
    };
    let check = CheckThresholds {
        max_deviation_pu: f.take("max_deviation_pu", c.max_deviation_pu, t.max_deviation_pu),
        recovery_band_pu: c.recovery_band_pu.or(t.recovery_band_pu),
        recovery_within_s: c.recovery_within_s.or(t.recovery_within_s),
        supply_tol_pu: f.take("supply_tol_pu", c.supply_tol_pu, t.supply_tol_pu),
        energy_tol_rel: f.take("energy_tol_rel", c.energy_tol_rel, t.energy_tol_rel),
    };

    let name = match &doc.name {
        Some(n) => n.clone(),
        None => template.name.clone(),
    };
    let mut scenario = Scenario {
        name,
        duration,
        step,
        decimation,
        plant,
        controller,
        grid,
        load,
        initial,
        check,
    };
    ov.apply(&mut scenario);
    scenario.validate().map_err(|e| scenario_error("sim", e))?;

    let out = doc.output.clone().unwrap_or_default();
    let output = OutputOptions {
        dir: out.dir.map(PathBuf::from),
        plots: out.plots.unwrap_or(true),
    };
    if !defaulted.is_empty() {
        log::info!("defaults used for: {}", defaulted.join(", "));
    }
    Ok(Config { scenario, output })
}

#[allow(clippy::too_many_arguments)]
fn build_load(
    sec: Option<&LoadSection>,
    template: &Scenario<f64>,
    duration: f64,
    s_base: f64,
    base_dir: &Path,
    ov: &Overrides,
    defaulted: &mut Vec<String>,
) -> Result<LoadProfile<f64>> {
    let Some(sec) = sec else {
        defaulted.push("load".into());
        return Ok(template.load.clone());
    };
    let source = match sec.source.as_deref() {
        Some(s) => s.to_string(),
        None if sec.points.is_some() => "points".into(),
        None if sec.csv_path.is_some() => "csv".into(),
        None if sec.synthetic.is_some() => "synthetic".into(),
        None => return Err(config_err("load", "needs points, csv_path or synthetic")),
    };
    let interpolation = sec.interpolation.as_deref().map(parse_interpolation).transpose()?;
    match source.as_str() {
        "points" => {
            let pts = sec
                .points
                .as_ref()
                .ok_or_else(|| config_err("load.points", "required for source = \"points\""))?;
            LoadProfile::new(
                pts.iter().map(|p| p.time_s).collect(),
                pts.iter().map(|p| p.power_pu).collect(),
                interpolation.unwrap_or(Interpolation::ZeroOrderHold),
            )
            .map_err(|e| scenario_error("load.points", e))
        }
        "csv" => {
            let rel = sec
                .csv_path
                .as_ref()
                .ok_or_else(|| config_err("load.csv_path", "required for source = \"csv\""))?;
            let mut profile = ingest_load_profile(base_dir.join(rel), s_base)?;
            if let Some(i) = interpolation {
                profile = LoadProfile::new(profile.times().to_vec(), profile.power_pu().to_vec(), i)?;
            }
            Ok(profile)
        }
        "synthetic" => {
            let s = sec.synthetic.clone().unwrap_or_default();
            let d = SyntheticLoad::default();
            let synth = SyntheticLoad {
                seed: ov.seed.or(s.seed).unwrap_or(d.seed),
                duration_s: s.duration_s.unwrap_or(duration),
                hold_s: s.hold_s.unwrap_or(d.hold_s),
                ramp_s: s.ramp_s.unwrap_or(d.ramp_s),
                min_pu: s.min_pu.unwrap_or(d.min_pu),
                max_pu: s.max_pu.unwrap_or(d.max_pu),
            };
            synth.generate().map_err(|e| scenario_error("load.synthetic", e))
        }
        other => Err(config_err(
            "load.source",
            format!("unknown source `{other}` (expected points, csv or synthetic)"),
        )),
    }
}

pub fn load_config(path: impl AsRef<Path>, ov: &Overrides) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base, ov).map_err(|e| match e {
        Error::Config { location, message } => config_err(format!("{}: {location}", path.display()), message),
        other => other,
    })
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<Scenario<f64>> {
    load_config(path, &Overrides::default()).map(|c| c.scenario)
}

/// Fully explicit document that parses back to the same scenario.
pub fn to_document(s: &Scenario<f64>, output: &OutputOptions) -> ConfigDocument {
    let p = &s.plant;
    let (ph, pi) = (&s.controller.ph, &s.controller.pi);
    let (initial, initial_state) = match &s.initial {
        InitialCondition::Equilibrium => ("equilibrium", None),
        InitialCondition::ColdStart => ("cold", None),
        InitialCondition::Explicit(x) => (
            "explicit",
            Some(StateSection {
                phi_alpha_vs: x.energy.phi.alpha,
                phi_beta_vs: x.energy.phi.beta,
                q_dc_c: x.energy.q_dc,
                zeta_v_vs: x.energy.zeta_v,
                zeta_i_alpha_as: x.energy.zeta_i.alpha,
                zeta_i_beta_as: x.energy.zeta_i.beta,
                s_alpha_a: x.s.alpha,
                s_beta_a: x.s.beta,
                v_f_alpha_v: x.v_f.alpha,
                v_f_beta_v: x.v_f.beta,
            }),
        ),
    };
    ConfigDocument {
        scenario: ScenarioKind::Custom,
        name: Some(s.name.clone()),
        plant: Some(PlantSection {
            r_g_ohm: Some(p.r_g),
            l_g_h: Some(p.l_g),
            r_f_ohm: Some(p.r_f),
            l_f_h: Some(p.l_f),
            c_dc_f: Some(p.c_dc),
            eta: Some(p.eta),
            v_base_ac_v: Some(p.v_base_ac),
            v_base_dc_v: Some(p.v_base_dc),
            s_base_w: Some(p.s_base),
            f_nom_hz: Some(p.f_nom),
            v_dc_min_v: Some(p.v_dc_min),
        }),
        controller: Some(ControllerSection {
            kind: Some(s.controller.kind.to_string()),
            ph: Some(PhSection {
                k_v_w_per_v: Some(ph.k_v),
                k_i_per_s: Some(ph.k_i),
                a_v_w_per_v_s: Some(ph.a_v),
                m_i_per_s2: Some(ph.m_i),
                q_star_var: Some(ph.q_star),
                tau_d_s: Some(ph.tau_d),
                tau_v_s: Some(ph.tau_v),
                v_dc_star_v: Some(ph.v_dc_star),
                v_ac_min_v: Some(ph.v_ac_min),
            }),
            pi: Some(PiSection {
                kp_v_a_per_v: Some(pi.kp_v),
                ki_v_a_per_v_s: Some(pi.ki_v),
                kp_i_ohm: Some(pi.kp_i),
                ki_i_ohm_per_s: Some(pi.ki_i),
                current_limit_a: Some(pi.current_limit),
                v_dc_star_v: Some(pi.v_dc_star),
            }),
        }),
        grid: Some(GridSection {
            segments: Some(
                s.grid
                    .segments()
                    .iter()
                    .map(|g| SegmentEntry {
                        start_s: g.start,
                        amplitude_pu: g.amplitude,
                        frequency_hz: g.frequency_hz,
                        phase_offset_rad: Some(g.phase_offset),
                    })
                    .collect(),
            ),
        }),
        load: Some(LoadSection {
            source: Some("points".into()),
            interpolation: Some(interpolation_name(s.load.interpolation()).into()),
            points: Some(
                s.load
                    .times()
                    .iter()
                    .zip(s.load.power_pu())
                    .map(|(&time_s, &power_pu)| LoadPoint { time_s, power_pu })
                    .collect(),
            ),
            csv_path: None,
            synthetic: None,
        }),
        sim: Some(SimSection {
            duration_s: Some(s.duration),
            step_s: Some(s.step),
            decimation: Some(s.decimation),
            initial: Some(initial.into()),
            initial_state,
        }),
        output: Some(OutputSection {
            dir: output.dir.as_ref().map(|d| d.display().to_string()),
            plots: Some(output.plots),
        }),
        check: Some(CheckSection {
            max_deviation_pu: Some(s.check.max_deviation_pu),
            recovery_band_pu: s.check.recovery_band_pu,
            recovery_within_s: s.check.recovery_within_s,
            supply_tol_pu: Some(s.check.supply_tol_pu),
            energy_tol_rel: Some(s.check.energy_tol_rel),
        }),
    }
}

pub fn serialize_config(s: &Scenario<f64>, output: &OutputOptions) -> Result<String> {
    toml::to_string(&to_document(s, output)).map_err(|e| config_err("serialize", e.to_string()))
}
