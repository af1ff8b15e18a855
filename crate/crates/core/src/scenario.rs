//! Scenario parameters, the key/value file format and derived physical constants.
//!
//! Every quantity is stored in SI units (m, s, W, J, Hz, rad) or as a linear ratio.
//! Conversions from dB, degrees, Wh and friends happen while parsing.
//!
//! ```
//! use insar_plan::scenario::Scenario;
//!
//! let sc = Scenario::parse_str("theta_1 = 45 deg\ne_max = 12.22 Wh\n").unwrap();
//! assert!((sc.theta_1 - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
//! assert!((sc.e_max[0] - 43_992.0).abs() < 1e-9);
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PlanError, Result};

/// Prefix for environment variables that override scenario keys,
/// e.g. `INSAR_P_COM_MAX="12 dB"`.
pub const ENV_PREFIX: &str = "INSAR_";

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Count,
    Plain,
    Ratio,
    Power,
    Angle,
    Energy,
    Frequency,
    Length,
    Time,
    Velocity,
    Temperature,
}

/// Canonical key names, their quantity kind and a short description.
const KEYS: &[(&str, Kind, &str)] = &[
    ("n_slots", Kind::Count, "number of time slots N"),
    ("delta_t", Kind::Time, "slot duration"),
    ("x_t", Kind::Length, "reference target ground-range coordinate"),
    ("theta_1", Kind::Angle, "master look angle"),
    ("theta_min", Kind::Angle, "minimum slave look angle"),
    ("theta_max", Kind::Angle, "maximum slave look angle"),
    ("theta_3db", Kind::Angle, "elevation beamwidth"),
    ("z_min", Kind::Length, "minimum altitude"),
    ("z_max", Kind::Length, "maximum altitude"),
    ("v_min", Kind::Velocity, "minimum along-track velocity"),
    ("v_max", Kind::Velocity, "maximum along-track velocity"),
    ("b_min", Kind::Length, "minimum baseline"),
    ("e_max", Kind::Energy, "battery capacity of both drones"),
    ("e_max_1", Kind::Energy, "battery capacity of the master"),
    ("e_max_2", Kind::Energy, "battery capacity of the slave"),
    ("p_t", Kind::Power, "radar transmit power of both drones"),
    ("p_t_1", Kind::Power, "master radar transmit power"),
    ("p_t_2", Kind::Power, "slave radar transmit power"),
    ("g_t", Kind::Ratio, "radar transmit antenna gain"),
    ("g_r", Kind::Ratio, "radar receive antenna gain"),
    ("lambda", Kind::Length, "radar wavelength"),
    ("f_0", Kind::Frequency, "radar centre frequency"),
    ("b_rg", Kind::Frequency, "radar bandwidth"),
    ("tau_p", Kind::Time, "pulse duration"),
    ("prf", Kind::Frequency, "pulse repetition frequency"),
    ("t_sys", Kind::Temperature, "receiver temperature"),
    ("noise_figure", Kind::Ratio, "receiver noise figure"),
    ("l_atm", Kind::Ratio, "atmospheric loss"),
    ("l_sys", Kind::Ratio, "system loss"),
    ("l_az", Kind::Ratio, "azimuth loss"),
    ("sigma_0", Kind::Ratio, "normalised backscatter coefficient"),
    ("k_b", Kind::Plain, "Boltzmann constant, J/K"),
    ("n_b", Kind::Count, "bits per complex sample"),
    ("n_l", Kind::Count, "independent looks"),
    ("gamma_snr_min", Kind::Plain, "minimum SNR decorrelation"),
    ("gamma_rg_min", Kind::Plain, "minimum baseline decorrelation"),
    ("gamma_other", Kind::Plain, "other decorrelation sources"),
    ("h_amb_min", Kind::Length, "minimum height of ambiguity"),
    ("delta_h_max", Kind::Length, "maximum 90% relative height error"),
    ("b_c", Kind::Frequency, "communication bandwidth of both drones"),
    ("b_c_1", Kind::Frequency, "master communication bandwidth"),
    ("b_c_2", Kind::Frequency, "slave communication bandwidth"),
    ("beta_c", Kind::Ratio, "reference channel gain over noise, both drones"),
    ("beta_c_1", Kind::Ratio, "master reference channel gain over noise"),
    ("beta_c_2", Kind::Ratio, "slave reference channel gain over noise"),
    ("p_com_max", Kind::Power, "maximum communication transmit power"),
    ("g_x", Kind::Length, "ground station x"),
    ("g_y", Kind::Length, "ground station y"),
    ("g_z", Kind::Length, "ground station z"),
    ("delta_u", Kind::Plain, "profile drag coefficient"),
    ("rho", Kind::Plain, "air density, kg/m^3"),
    ("rotor_solidity", Kind::Plain, "rotor solidity ratio"),
    ("disc_area", Kind::Plain, "rotor disc area, m^2"),
    ("omega", Kind::Plain, "blade angular velocity, rad/s"),
    ("rotor_radius", Kind::Length, "rotor radius"),
    ("k_u", Kind::Plain, "induced power correction factor"),
    ("weight", Kind::Plain, "drone weight, N"),
    ("u_tip", Kind::Velocity, "rotor blade tip speed"),
    ("d_0", Kind::Plain, "fuselage drag ratio"),
    ("pso_population", Kind::Count, "PSO population D"),
    ("pso_iterations", Kind::Count, "PSO iteration cap M1"),
    ("pso_patience", Kind::Count, "PSO early-stop window"),
    ("c_1", Kind::Plain, "PSO cognitive factor"),
    ("c_2", Kind::Plain, "PSO social factor"),
    ("v_pso_max", Kind::Velocity, "PSO maximum initial particle velocity"),
    ("pso_offset", Kind::Length, "PSO initial box depth O"),
    ("eps_1", Kind::Plain, "polyblock / PSO tolerance"),
    ("eps_2", Kind::Plain, "bisection tolerance"),
    ("eps_3", Kind::Plain, "SCA tolerance"),
    ("eps_4", Kind::Plain, "AO tolerance"),
    ("eps_5", Kind::Plain, "step-size grid resolution"),
    ("m_2", Kind::Count, "polyblock iteration cap"),
    ("m_3", Kind::Count, "SCA iteration cap"),
    ("ao_max_iterations", Kind::Count, "AO outer iteration cap"),
    ("realizations", Kind::Count, "Monte-Carlo realizations"),
];

/// Complete parameter set of a planning problem.
///
/// Index 0 of the two-element arrays refers to the master drone, index 1 to the slave.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_slots: usize,
    pub delta_t: f64,
    pub x_t: f64,
    pub theta_1: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_3db: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub b_min: f64,
    pub e_max: [f64; 2],
    pub p_t: [f64; 2],
    pub g_t: f64,
    pub g_r: f64,
    pub lambda: f64,
    pub f_0: f64,
    pub b_rg: f64,
    pub tau_p: f64,
    pub prf: f64,
    pub t_sys: f64,
    pub noise_figure: f64,
    pub l_atm: f64,
    pub l_sys: f64,
    pub l_az: f64,
    pub sigma_0: f64,
    pub k_b: f64,
    pub n_b: usize,
    pub n_l: usize,
    pub gamma_snr_min: f64,
    pub gamma_rg_min: f64,
    pub gamma_other: f64,
    pub h_amb_min: f64,
    pub delta_h_max: f64,
    pub b_c: [f64; 2],
    pub beta_c: [f64; 2],
    pub p_com_max: f64,
    pub gs: [f64; 3],
    pub rotor: Rotor,
    pub algo: AlgoParams,
}

/// Rotary-wing airframe parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotor {
    pub delta_u: f64,
    pub rho: f64,
    pub solidity: f64,
    pub disc_area: f64,
    pub omega: f64,
    pub radius: f64,
    pub k_u: f64,
    pub weight: f64,
    pub u_tip: f64,
    pub d_0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoParams {
    pub pso_population: usize,
    pub pso_iterations: usize,
    pub pso_patience: usize,
    pub c_1: f64,
    pub c_2: f64,
    pub v_pso_max: f64,
    pub pso_offset: f64,
    pub eps: [f64; 5],
    pub m_2: usize,
    pub m_3: usize,
    pub ao_max_iterations: usize,
    pub realizations: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Scenario {
            n_slots: 80,
            delta_t: 1.0,
            x_t: 20.0,
            theta_1: 45.0 * deg,
            theta_min: 15.0 * deg,
            theta_max: 75.0 * deg,
            theta_3db: 30.0 * deg,
            z_min: 1.0,
            z_max: 100.0,
            v_min: 0.1,
            v_max: 10.0,
            b_min: 2.0,
            e_max: [12.22 * 3600.0; 2],
            p_t: [db_to_linear(10.0) * 1e-3; 2],
            g_t: db_to_linear(6.0),
            g_r: db_to_linear(6.0),
            lambda: 0.12,
            f_0: 2.5e9,
            b_rg: 3e9,
            tau_p: 1e-6,
            prf: 100.0,
            t_sys: 400.0,
            noise_figure: db_to_linear(5.0),
            l_atm: db_to_linear(0.0),
            l_sys: db_to_linear(2.0),
            l_az: db_to_linear(2.0),
            sigma_0: db_to_linear(-10.0),
            k_b: 1.380_649e-23,
            n_b: 4,
            n_l: 16,
            gamma_snr_min: 0.8,
            gamma_rg_min: 0.8,
            gamma_other: 0.8,
            h_amb_min: 1.0,
            delta_h_max: 0.224,
            b_c: [1e9; 2],
            beta_c: [db_to_linear(18.75); 2],
            p_com_max: db_to_linear(10.0),
            gs: [0.0, -270.0, 5.0],
            rotor: Rotor {
                delta_u: 0.0012,
                rho: 1.225,
                solidity: 0.05,
                disc_area: 0.503,
                omega: 300.0,
                radius: 0.4,
                k_u: 0.1,
                weight: 60.0,
                u_tip: 120.0,
                d_0: 0.6,
            },
            algo: AlgoParams {
                pso_population: 2000,
                pso_iterations: 200,
                pso_patience: 20,
                c_1: 0.1,
                c_2: 0.2,
                v_pso_max: 20.0,
                pso_offset: 500.0,
                eps: [1e-4, 1e-4, 1e-4, 1e-4, 1e-2],
                m_2: 500,
                m_3: 100,
                ao_max_iterations: 50,
                realizations: 1000,
            },
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, kind, _)| *kind)
}

/// Convert `value [unit]` to SI for a quantity of the given kind.
fn to_si(kind: Kind, value: f64, unit: &str) -> std::result::Result<f64, String> {
    let bad = || Err(format!("unit `{unit}` does not apply to a {kind:?} quantity"));
    match (kind, unit) {
        (_, "") => Ok(value),
        (Kind::Ratio, "dB" | "dBi") => Ok(db_to_linear(value)),
        (Kind::Ratio, "lin") => Ok(value),
        (Kind::Power, "W") => Ok(value),
        (Kind::Power, "mW") => Ok(value * 1e-3),
        (Kind::Power, "dB" | "dBW") => Ok(db_to_linear(value)),
        (Kind::Power, "dBm") => Ok(db_to_linear(value) * 1e-3),
        (Kind::Angle, "rad") => Ok(value),
        (Kind::Angle, "deg") => Ok(value.to_radians()),
        (Kind::Energy, "J") => Ok(value),
        (Kind::Energy, "kJ") => Ok(value * 1e3),
        (Kind::Energy, "Wh") => Ok(value * 3600.0),
        (Kind::Frequency, "Hz") => Ok(value),
        (Kind::Frequency, "kHz") => Ok(value * 1e3),
        (Kind::Frequency, "MHz") => Ok(value * 1e6),
        (Kind::Frequency, "GHz") => Ok(value * 1e9),
        (Kind::Length, "m") => Ok(value),
        (Kind::Length, "cm") => Ok(value * 1e-2),
        (Kind::Length, "mm") => Ok(value * 1e-3),
        (Kind::Length, "km") => Ok(value * 1e3),
        (Kind::Time, "s") => Ok(value),
        (Kind::Time, "ms") => Ok(value * 1e-3),
        (Kind::Time, "us") => Ok(value * 1e-6),
        (Kind::Time, "ns") => Ok(value * 1e-9),
        (Kind::Velocity, "m/s") => Ok(value),
        (Kind::Velocity, "km/h") => Ok(value / 3.6),
        (Kind::Temperature, "K") => Ok(value),
        _ => bad(),
    }
}

/// Outcome of loading a scenario: the parameters plus non-fatal warnings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub warnings: Vec<String>,
}

impl Scenario {
    /// Reads a scenario file. Missing keys keep their Table-I defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Loaded> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PlanError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_with_warnings(&text)
    }

    pub fn parse_str(text: &str) -> Result<Scenario> {
        Self::parse_with_warnings(text).map(|l| l.scenario)
    }

    pub fn parse_with_warnings(text: &str) -> Result<Loaded> {
        let mut sc = Scenario::default();
        let mut warnings = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, rest) = body.split_once('=').ok_or_else(|| PlanError::Parse {
                line,
                msg: format!("expected `key = value [unit]`, got `{body}`"),
            })?;
            let key = key.trim();
            match sc.assign(key, rest.trim()) {
                Ok(true) => {}
                Ok(false) => {
                    let w = format!("line {line}: unknown key `{key}` ignored");
                    log::warn!("{w}");
                    warnings.push(w);
                }
                Err(msg) => return Err(PlanError::Parse { line, msg }),
            }
        }
        sc.validate()?;
        Ok(Loaded { scenario: sc, warnings })
    }

    /// Applies `INSAR_<KEY>` overrides from the given variables.
    pub fn apply_overrides<I, K, V>(&mut self, vars: I) -> Result<Vec<String>>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut applied = Vec::new();
        for (k, v) in vars {
            let Some(name) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = name.to_ascii_lowercase();
            match self.assign(&key, v.as_ref().trim()) {
                Ok(true) => applied.push(key),
                Ok(false) => log::warn!("environment override for unknown key `{key}` ignored"),
                Err(msg) => {
                    return Err(PlanError::Invalid {
                        key,
                        msg,
                    })
                }
            }
        }
        self.validate()?;
        Ok(applied)
    }

    /// Applies overrides from the process environment.
    pub fn apply_env(&mut self) -> Result<Vec<String>> {
        self.apply_overrides(std::env::vars())
    }

    /// Sets one key from its textual `value [unit]`. Returns `Ok(false)` for unknown keys.
    pub fn assign(&mut self, key: &str, value_text: &str) -> std::result::Result<bool, String> {
        let Some(kind) = kind_of(key) else {
            return Ok(false);
        };
        let mut parts = value_text.split_whitespace();
        let num = parts.next().ok_or_else(|| format!("missing value for `{key}`"))?;
        let unit = parts.next().unwrap_or("");
        if parts.next().is_some() {
            return Err(format!("trailing text after unit for `{key}`"));
        }
        let value: f64 = num
            .parse()
            .map_err(|_| format!("`{num}` is not a number (key `{key}`)"))?;
        let si = to_si(kind, value, unit).map_err(|m| format!("{key}: {m}"))?;
        self.set_si(key, si)?;
        Ok(true)
    }

    /// Sets one key from a value already in canonical units.
    pub fn set_si(&mut self, key: &str, v: f64) -> std::result::Result<(), String> {
        let count = |v: f64| -> std::result::Result<usize, String> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(format!("`{key}` must be a non-negative integer, got {v}"))
            }
        };
        match key {
            "n_slots" => self.n_slots = count(v)?,
            "delta_t" => self.delta_t = v,
            "x_t" => self.x_t = v,
            "theta_1" => self.theta_1 = v,
            "theta_min" => self.theta_min = v,
            "theta_max" => self.theta_max = v,
            "theta_3db" => self.theta_3db = v,
            "z_min" => self.z_min = v,
            "z_max" => self.z_max = v,
            "v_min" => self.v_min = v,
            "v_max" => self.v_max = v,
            "b_min" => self.b_min = v,
            "e_max" => self.e_max = [v; 2],
            "e_max_1" => self.e_max[0] = v,
            "e_max_2" => self.e_max[1] = v,
            "p_t" => self.p_t = [v; 2],
            "p_t_1" => self.p_t[0] = v,
            "p_t_2" => self.p_t[1] = v,
            "g_t" => self.g_t = v,
            "g_r" => self.g_r = v,
            "lambda" => self.lambda = v,
            "f_0" => self.f_0 = v,
            "b_rg" => self.b_rg = v,
            "tau_p" => self.tau_p = v,
            "prf" => self.prf = v,
            "t_sys" => self.t_sys = v,
            "noise_figure" => self.noise_figure = v,
            "l_atm" => self.l_atm = v,
            "l_sys" => self.l_sys = v,
            "l_az" => self.l_az = v,
            "sigma_0" => self.sigma_0 = v,
            "k_b" => self.k_b = v,
            "n_b" => self.n_b = count(v)?,
            "n_l" => self.n_l = count(v)?,
            "gamma_snr_min" => self.gamma_snr_min = v,
            "gamma_rg_min" => self.gamma_rg_min = v,
            "gamma_other" => self.gamma_other = v,
            "h_amb_min" => self.h_amb_min = v,
            "delta_h_max" => self.delta_h_max = v,
            "b_c" => self.b_c = [v; 2],
            "b_c_1" => self.b_c[0] = v,
            "b_c_2" => self.b_c[1] = v,
            "beta_c" => self.beta_c = [v; 2],
            "beta_c_1" => self.beta_c[0] = v,
            "beta_c_2" => self.beta_c[1] = v,
            "p_com_max" => self.p_com_max = v,
            "g_x" => self.gs[0] = v,
            "g_y" => self.gs[1] = v,
            "g_z" => self.gs[2] = v,
            "delta_u" => self.rotor.delta_u = v,
            "rho" => self.rotor.rho = v,
            "rotor_solidity" => self.rotor.solidity = v,
            "disc_area" => self.rotor.disc_area = v,
            "omega" => self.rotor.omega = v,
            "rotor_radius" => self.rotor.radius = v,
            "k_u" => self.rotor.k_u = v,
            "weight" => self.rotor.weight = v,
            "u_tip" => self.rotor.u_tip = v,
            "d_0" => self.rotor.d_0 = v,
            "pso_population" => self.algo.pso_population = count(v)?,
            "pso_iterations" => self.algo.pso_iterations = count(v)?,
            "pso_patience" => self.algo.pso_patience = count(v)?,
            "c_1" => self.algo.c_1 = v,
            "c_2" => self.algo.c_2 = v,
            "v_pso_max" => self.algo.v_pso_max = v,
            "pso_offset" => self.algo.pso_offset = v,
            "eps_1" => self.algo.eps[0] = v,
            "eps_2" => self.algo.eps[1] = v,
            "eps_3" => self.algo.eps[2] = v,
            "eps_4" => self.algo.eps[3] = v,
            "eps_5" => self.algo.eps[4] = v,
            "m_2" => self.algo.m_2 = count(v)?,
            "m_3" => self.algo.m_3 = count(v)?,
            "ao_max_iterations" => self.algo.ao_max_iterations = count(v)?,
            "realizations" => self.algo.realizations = count(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Canonical key/value view, every value in SI units or linear ratio.
    /// Shared keys (`e_max`, `p_t`, `b_c`, `beta_c`) are expanded per drone.
    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        let mut m = BTreeMap::new();
        let a = &self.algo;
        let r = &self.rotor;
        let entries: Vec<(&'static str, f64)> = vec![
            ("n_slots", self.n_slots as f64),
            ("delta_t", self.delta_t),
            ("x_t", self.x_t),
            ("theta_1", self.theta_1),
            ("theta_min", self.theta_min),
            ("theta_max", self.theta_max),
            ("theta_3db", self.theta_3db),
            ("z_min", self.z_min),
            ("z_max", self.z_max),
            ("v_min", self.v_min),
            ("v_max", self.v_max),
            ("b_min", self.b_min),
            ("e_max_1", self.e_max[0]),
            ("e_max_2", self.e_max[1]),
            ("p_t_1", self.p_t[0]),
            ("p_t_2", self.p_t[1]),
            ("g_t", self.g_t),
            ("g_r", self.g_r),
            ("lambda", self.lambda),
            ("f_0", self.f_0),
            ("b_rg", self.b_rg),
            ("tau_p", self.tau_p),
            ("prf", self.prf),
            ("t_sys", self.t_sys),
            ("noise_figure", self.noise_figure),
            ("l_atm", self.l_atm),
            ("l_sys", self.l_sys),
            ("l_az", self.l_az),
            ("sigma_0", self.sigma_0),
            ("k_b", self.k_b),
            ("n_b", self.n_b as f64),
            ("n_l", self.n_l as f64),
            ("gamma_snr_min", self.gamma_snr_min),
            ("gamma_rg_min", self.gamma_rg_min),
            ("gamma_other", self.gamma_other),
            ("h_amb_min", self.h_amb_min),
            ("delta_h_max", self.delta_h_max),
            ("b_c_1", self.b_c[0]),
            ("b_c_2", self.b_c[1]),
            ("beta_c_1", self.beta_c[0]),
            ("beta_c_2", self.beta_c[1]),
            ("p_com_max", self.p_com_max),
            ("g_x", self.gs[0]),
            ("g_y", self.gs[1]),
            ("g_z", self.gs[2]),
            ("delta_u", r.delta_u),
            ("rho", r.rho),
            ("rotor_solidity", r.solidity),
            ("disc_area", r.disc_area),
            ("omega", r.omega),
            ("rotor_radius", r.radius),
            ("k_u", r.k_u),
            ("weight", r.weight),
            ("u_tip", r.u_tip),
            ("d_0", r.d_0),
            ("pso_population", a.pso_population as f64),
            ("pso_iterations", a.pso_iterations as f64),
            ("pso_patience", a.pso_patience as f64),
            ("c_1", a.c_1),
            ("c_2", a.c_2),
            ("v_pso_max", a.v_pso_max),
            ("pso_offset", a.pso_offset),
            ("eps_1", a.eps[0]),
            ("eps_2", a.eps[1]),
            ("eps_3", a.eps[2]),
            ("eps_4", a.eps[3]),
            ("eps_5", a.eps[4]),
            ("m_2", a.m_2 as f64),
            ("m_3", a.m_3 as f64),
            ("ao_max_iterations", a.ao_max_iterations as f64),
            ("realizations", a.realizations as f64),
        ];
        m.extend(entries);
        m
    }

    /// Serialises in canonical units. Parsing the output reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# canonical units: m, s, W, J, Hz, rad, K; ratios linear\n");
        for (k, v) in self.to_map() {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, msg: &str| {
            Err(PlanError::Invalid {
                key: key.to_string(),
                msg: msg.to_string(),
            })
        };
        let positive = [
            ("delta_t", self.delta_t),
            ("theta_1", self.theta_1),
            ("theta_min", self.theta_min),
            ("theta_3db", self.theta_3db),
            ("z_min", self.z_min),
            ("v_min", self.v_min),
            ("b_min", self.b_min),
            ("e_max_1", self.e_max[0]),
            ("e_max_2", self.e_max[1]),
            ("p_t_1", self.p_t[0]),
            ("p_t_2", self.p_t[1]),
            ("g_t", self.g_t),
            ("g_r", self.g_r),
            ("lambda", self.lambda),
            ("f_0", self.f_0),
            ("b_rg", self.b_rg),
            ("tau_p", self.tau_p),
            ("prf", self.prf),
            ("t_sys", self.t_sys),
            ("noise_figure", self.noise_figure),
            ("l_atm", self.l_atm),
            ("l_sys", self.l_sys),
            ("l_az", self.l_az),
            ("sigma_0", self.sigma_0),
            ("k_b", self.k_b),
            ("h_amb_min", self.h_amb_min),
            ("delta_h_max", self.delta_h_max),
            ("b_c_1", self.b_c[0]),
            ("b_c_2", self.b_c[1]),
            ("beta_c_1", self.beta_c[0]),
            ("beta_c_2", self.beta_c[1]),
            ("p_com_max", self.p_com_max),
            ("rho", self.rotor.rho),
            ("disc_area", self.rotor.disc_area),
            ("u_tip", self.rotor.u_tip),
            ("v_pso_max", self.algo.v_pso_max),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return err(k, "must be strictly positive and finite");
            }
        }
        let non_negative = [
            ("delta_u", self.rotor.delta_u),
            ("rotor_solidity", self.rotor.solidity),
            ("omega", self.rotor.omega),
            ("k_u", self.rotor.k_u),
            ("weight", self.rotor.weight),
            ("d_0", self.rotor.d_0),
        ];
        for (k, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return err(k, "must be non-negative and finite");
            }
        }
        if self.n_slots < 2 {
            return err("n_slots", "needs at least two slots");
        }
        if self.n_b == 0 {
            return err("n_b", "must be at least 1");
        }
        if self.n_l == 0 {
            return err("n_l", "must be at least 1");
        }
        if !(self.theta_min < self.theta_1 && self.theta_1 < self.theta_max) {
            return err("theta_1", "must lie strictly between theta_min and theta_max");
        }
        if self.theta_max >= std::f64::consts::FRAC_PI_2 {
            return err("theta_max", "must be below 90 degrees");
        }
        if self.theta_1 + self.theta_3db / 2.0 >= std::f64::consts::FRAC_PI_2 {
            return err("theta_3db", "far beam edge of the master reaches the horizon");
        }
        if self.z_min >= self.z_max {
            return err("z_max", "must exceed z_min");
        }
        if self.v_min >= self.v_max {
            return err("v_max", "must exceed v_min");
        }
        for (k, g) in [
            ("gamma_snr_min", self.gamma_snr_min),
            ("gamma_rg_min", self.gamma_rg_min),
            ("gamma_other", self.gamma_other),
        ] {
            if !(g > 0.0 && g <= 1.0) {
                return err(k, "must lie in (0, 1]");
            }
        }
        let a = &self.algo;
        if a.pso_population == 0 || a.pso_iterations == 0 {
            return err("pso_population", "population and iteration cap must be positive");
        }
        if a.c_1 < 0.0 || a.c_2 < 0.0 || a.pso_offset <= 0.0 {
            return err("c_1", "PSO coefficients must be non-negative, offset positive");
        }
        for (i, e) in a.eps.iter().enumerate() {
            if !(*e > 0.0 && *e < 1.0) {
                return err(&format!("eps_{}", i + 1), "must lie in (0, 1)");
            }
        }
        if a.m_2 == 0 || a.m_3 == 0 || a.ao_max_iterations == 0 || a.realizations == 0 {
            return err("m_2", "iteration caps and realization count must be positive");
        }
        Ok(())
    }

    /// Applies the reduced desk-scale algorithm settings (D = 200, M1 = 50, 20 realizations).
    pub fn desk_scale(mut self) -> Self {
        self.algo.pso_population = 200;
        self.algo.pso_iterations = 50;
        self.algo.realizations = 20;
        self
    }

    pub fn derived(&self) -> Derived {
        Derived::new(self)
    }
}

/// Constants computed once from a [`Scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    /// Radar SNR constant of each drone: SNR = gamma_r / (v r^3 sin(theta)).
    pub gamma_r: [f64; 2],
    /// Blade profile power in hover, W.
    pub p_0: f64,
    /// Induced power in hover, W.
    pub p_i: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub v_0: f64,
    /// Fractional bandwidth B_Rg / f_0.
    pub b_p: f64,
    /// Altitude coefficient of the master's rate exponent, 1/m.
    pub a_1: f64,
    /// Constant part of the master's rate exponent.
    pub a_2: f64,
}

impl Derived {
    pub fn new(sc: &Scenario) -> Self {
        let r = &sc.rotor;
        let p_0 = r.delta_u / 8.0 * r.rho * r.solidity * r.disc_area * r.omega.powi(3) * r.radius.powi(3);
        let p_i = (1.0 + r.k_u) * r.weight.powf(1.5) / (2.0 * r.rho * r.disc_area).sqrt();
        let v_0 = (r.weight / (2.0 * r.rho * r.disc_area)).sqrt();
        let denom = 4f64.powi(4)
            * std::f64::consts::PI.powi(3)
            * sc.k_b
            * sc.t_sys
            * sc.b_rg
            * sc.noise_figure
            * sc.l_atm
            * sc.l_sys
            * sc.l_az;
        let gamma_r = sc.p_t.map(|pt| {
            sc.sigma_0 * pt * sc.g_t * sc.g_r * sc.lambda.powi(3) * SPEED_OF_LIGHT * sc.tau_p * sc.prf / denom
        });
        let rate = sc.n_b as f64 * sc.b_rg * sc.prf;
        let half = sc.theta_3db / 2.0;
        let a_1 = rate / (SPEED_OF_LIGHT * sc.b_c[0])
            * (1.0 / (sc.theta_1 + half).cos() - 1.0 / (sc.theta_1 - half).cos());
        let a_2 = rate * sc.tau_p / sc.b_c[0];
        Derived {
            gamma_r,
            p_0,
            p_i,
            v_0,
            b_p: sc.b_rg / sc.f_0,
            a_1,
            a_2,
        }
    }
}

/// Looks up the description of a canonical key.
pub fn describe(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, _, d)| *d)
}

/// All canonical keys accepted in scenario files.
pub fn keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|(k, _, _)| *k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let sc = Scenario::parse_str("").unwrap();
        assert_eq!(sc, Scenario::default());
    }

    #[test]
    fn unit_conversions() {
        let sc = Scenario::parse_str(
            "p_com_max = 10 dB\np_t = 10 dBm\nbeta_c = 18.75 dB\ntheta_3db = 30 deg\n",
        )
        .unwrap();
        assert!((sc.p_com_max - 10.0).abs() < 1e-12);
        assert!((sc.p_t[0] - 0.01).abs() < 1e-15);
        assert!((sc.beta_c[1] - 74.989_420_933_245_58).abs() < 1e-9);
        assert!((sc.theta_3db - std::f64::consts::PI / 6.0).abs() < 1e-15);
        assert_eq!(db_to_linear(0.0), 1.0);
    }

    #[test]
    fn unknown_key_warns() {
        let l = Scenario::parse_with_warnings("frobnicate = 3\n").unwrap();
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn bad_unit_and_negative_values_rejected() {
        assert!(Scenario::parse_str("b_rg = 3 deg").is_err());
        assert!(Scenario::parse_str("b_rg = -3 GHz").is_err());
        assert!(Scenario::parse_str("z_max = 0.5").is_err());
        assert!(Scenario::parse_str("n_l = 2.5").is_err());
        assert!(Scenario::parse_str("no equals sign").is_err());
    }

    #[test]
    fn overrides_from_variables() {
        let mut sc = Scenario::default();
        let applied = sc
            .apply_overrides([("INSAR_P_COM_MAX", "12 dB"), ("HOME", "/root")])
            .unwrap();
        assert_eq!(applied, vec!["p_com_max".to_string()]);
        assert!((sc.p_com_max - db_to_linear(12.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_induced_power_when_weightless() {
        let mut sc = Scenario::default();
        sc.rotor.k_u = 0.0;
        sc.rotor.weight = 0.0;
        assert_eq!(sc.derived().p_i, 0.0);
    }

    #[test]
    fn every_key_is_settable() {
        let mut sc = Scenario::default();
        for k in keys() {
            let v = if kind_of(k) == Some(Kind::Count) { 3.0 } else { 0.5 };
            sc.set_si(k, v).unwrap();
        }
    }
}
