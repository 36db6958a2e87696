//! Scenario parameters, the flat key-value config format, and sweep
//! specifications.
//!
//! The config file is plain text: one `key = value` pair per line, `#`
//! starts a comment, unknown or duplicate keys are rejected. Every key is
//! optional; an empty file yields the default scenario. Transmit power is
//! written in dB relative to one watt (`p_t_db`) and stored linearly;
//! element spacings default to half the configured wavelength.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::schemes::SchemeKind;

/// Full description of one simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit ring elements; must equal `n_users * n_rx`.
    pub n_tx: usize,
    /// Number of users.
    pub n_users: usize,
    /// Receive ring elements per user.
    pub n_rx: usize,
    /// Vortex modes (streams) per user; at most `n_rx`.
    pub streams_per_user: usize,
    /// Panel grid columns along y.
    pub m_y: usize,
    /// Panel grid rows along z.
    pub m_z: usize,
    /// Transmit ring radius in meters.
    pub r_t: f64,
    /// Receive ring radius in meters.
    pub r_r: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// Combined antenna gain factor applied to every path.
    pub beta: f64,
    /// Panel element spacing along y in meters.
    pub d_y: f64,
    /// Panel element spacing along z in meters.
    pub d_z: f64,
    /// Total transmit power budget in watts (linear).
    pub p_t: f64,
    /// Noise power per receive stream in watts.
    pub sigma2: f64,
    /// Panel center in meters.
    pub ris_center: Vector3<f64>,
    /// Center of the spherical user region in meters.
    pub user_region_center: Vector3<f64>,
    /// Radius of the user region in meters.
    pub user_region_radius: f64,
    /// Master seed for the Monte Carlo runner.
    pub seed: u64,
    /// Iteration cap of the alternating optimization.
    pub max_iters: usize,
    /// Sum-rate gain under which the alternation stops, bits/s/Hz.
    pub eps: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let wavelength = 0.06;
        SystemConfig {
            n_tx: 20,
            n_users: 4,
            n_rx: 5,
            streams_per_user: 4,
            m_y: 10,
            m_z: 6,
            r_t: 1.0,
            r_r: 0.2,
            wavelength,
            beta: 1.0,
            d_y: wavelength / 2.0,
            d_z: wavelength / 2.0,
            p_t: 10.0, // 10 dB over one watt
            sigma2: 1e-3,
            ris_center: Vector3::new(5.0, 2.0, 1.0),
            user_region_center: Vector3::new(10.0, 2.0, 1.0),
            user_region_radius: 2.0,
            seed: 0,
            max_iters: 50,
            eps: 1e-3,
        }
    }
}

impl SystemConfig {
    /// Total panel element count.
    pub fn m_elements(&self) -> usize {
        self.m_y * self.m_z
    }

    /// Total stream count across users.
    pub fn streams_total(&self) -> usize {
        self.n_users * self.streams_per_user
    }

    /// Checks every cross-field constraint, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::config("n_users", "must be at least 1"));
        }
        if self.n_rx == 0 {
            return Err(Error::config("n_rx", "must be at least 1"));
        }
        if self.n_tx != self.n_users * self.n_rx {
            return Err(Error::config(
                "n_tx",
                format!(
                    "must equal n_users * n_rx = {} (got {})",
                    self.n_users * self.n_rx,
                    self.n_tx
                ),
            ));
        }
        if self.streams_per_user == 0 || self.streams_per_user > self.n_rx {
            return Err(Error::config(
                "streams_per_user",
                format!(
                    "must be between 1 and n_rx = {} (got {})",
                    self.n_rx, self.streams_per_user
                ),
            ));
        }
        if self.m_y == 0 || self.m_z == 0 {
            return Err(Error::config("m_y", "panel grid must be at least 1x1"));
        }
        for (name, value) in [
            ("r_t", self.r_t),
            ("r_r", self.r_r),
            ("wavelength", self.wavelength),
            ("beta", self.beta),
            ("d_y", self.d_y),
            ("d_z", self.d_z),
            ("p_t", self.p_t),
            ("sigma2", self.sigma2),
            ("user_region_radius", self.user_region_radius),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::config(name, format!("must be positive (got {value})")));
            }
        }
        for (name, v) in [
            ("ris_center", self.ris_center),
            ("user_region_center", self.user_region_center),
        ] {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::config(name, "coordinates must be finite"));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters", "must be at least 1"));
        }
        if !self.eps.is_finite() || self.eps < 0.0 {
            return Err(Error::config("eps", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Which scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Transmit power in dB over one watt.
    PtDb,
    /// Total panel element count.
    MElements,
    /// Transmit ring elements (receive rings scale along, modes capped).
    NTx,
    /// User count (transmit ring scales along, modes capped).
    KUsers,
}

impl SweepVariable {
    /// The key used on the command line and in the CSV `variable` column.
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PtDb => "p_t_db",
            SweepVariable::MElements => "m_elements",
            SweepVariable::NTx => "n_tx",
            SweepVariable::KUsers => "k_users",
        }
    }

    /// Parses a variable name as written on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "p_t_db" => Ok(SweepVariable::PtDb),
            "m_elements" => Ok(SweepVariable::MElements),
            "n_tx" => Ok(SweepVariable::NTx),
            "k_users" => Ok(SweepVariable::KUsers),
            other => Err(Error::config(
                "sweep_variable",
                format!("unknown variable `{other}` (expected p_t_db, m_elements, n_tx, or k_users)"),
            )),
        }
    }

    /// True for variables whose values must be positive integers.
    fn integer_valued(self) -> bool {
        !matches!(self, SweepVariable::PtDb)
    }
}

/// A full sweep request: the variable, its values, and the Monte Carlo plan.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Swept values, strictly increasing.
    pub values: Vec<f64>,
    /// Schemes to evaluate at every point.
    pub schemes: Vec<SchemeKind>,
    /// Independent scenario draws per (value, scheme) cell.
    pub trials: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            variable: SweepVariable::PtDb,
            values: vec![10.0],
            schemes: vec![SchemeKind::Proposed],
            trials: 1,
        }
    }
}

impl SweepSpec {
    /// Checks value ordering, integrality, and scheme uniqueness.
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep_values", "at least one value required"));
        }
        for &v in &self.values {
            if !v.is_finite() {
                return Err(Error::config("sweep_values", "values must be finite"));
            }
            if self.variable.integer_valued() && (v.fract() != 0.0 || v < 1.0) {
                return Err(Error::config(
                    "sweep_values",
                    format!("{} takes positive integer values (got {v})", self.variable.name()),
                ));
            }
        }
        for pair in self.values.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::config(
                    "sweep_values",
                    format!("values must be strictly increasing (saw {} then {})", pair[0], pair[1]),
                ));
            }
        }
        if self.schemes.is_empty() {
            return Err(Error::config("sweep_schemes", "at least one scheme required"));
        }
        for (i, a) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(a) {
                return Err(Error::config(
                    "sweep_schemes",
                    format!("scheme `{}` listed twice", a.name()),
                ));
            }
        }
        if self.trials == 0 {
            return Err(Error::config("sweep_trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// Derives the scenario for one sweep point from the base config.
///
/// Power is converted from dB; panel resizes keep the configured column
/// count and adjust rows; ring resizes keep the user count (or receive ring
/// size) fixed and cap modes per user at `min(n_users, n_rx)` so they stay
/// separable.
pub fn apply_sweep_value(
    base: &SystemConfig,
    variable: SweepVariable,
    value: f64,
) -> Result<SystemConfig> {
    let mut cfg = base.clone();
    match variable {
        SweepVariable::PtDb => {
            cfg.p_t = 10f64.powf(value / 10.0);
        }
        SweepVariable::MElements => {
            let m = value as usize;
            if !m.is_multiple_of(cfg.m_y) {
                return Err(Error::config(
                    "sweep_values",
                    format!("m_elements = {m} is not divisible by m_y = {}", cfg.m_y),
                ));
            }
            cfg.m_z = m / cfg.m_y;
        }
        SweepVariable::NTx => {
            let n_tx = value as usize;
            if !n_tx.is_multiple_of(cfg.n_users) {
                return Err(Error::config(
                    "sweep_values",
                    format!("n_tx = {n_tx} is not divisible by n_users = {}", cfg.n_users),
                ));
            }
            cfg.n_tx = n_tx;
            cfg.n_rx = n_tx / cfg.n_users;
            cfg.streams_per_user = cfg.n_users.min(cfg.n_rx);
        }
        SweepVariable::KUsers => {
            let users = value as usize;
            cfg.n_users = users;
            cfg.n_tx = users * cfg.n_rx;
            cfg.streams_per_user = users.min(cfg.n_rx);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file; see the module docs for the format.
pub fn load_config(path: &Path) -> Result<(SystemConfig, SweepSpec)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses config text; every key optional, unknown keys rejected.
pub fn parse_config(text: &str) -> Result<(SystemConfig, SweepSpec)> {
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(line, "expected `key = value`")
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        if fields.insert(key, value.trim()).is_some() {
            return Err(Error::config(key, "key given more than once"));
        }
    }

    let defaults = SystemConfig::default();
    let n_users = get_usize(&fields, "n_users", defaults.n_users)?;
    let n_rx = get_usize(&fields, "n_rx", defaults.n_rx)?;
    let n_tx = get_usize(&fields, "n_tx", n_users * n_rx)?;
    let streams_per_user = get_usize(&fields, "streams_per_user", n_users.min(n_rx))?;
    let wavelength = get_f64(&fields, "wavelength", defaults.wavelength)?;
    let m_y = get_usize(&fields, "m_y", defaults.m_y)?;
    let m_z = match (fields.contains_key("m_z"), fields.contains_key("m_elements")) {
        (true, false) => get_usize(&fields, "m_z", 0)?,
        (have_mz, _) => {
            let m = get_usize(&fields, "m_elements", defaults.m_elements())?;
            if m_y == 0 || m % m_y != 0 {
                return Err(Error::config(
                    "m_elements",
                    format!("{m} is not divisible by m_y = {m_y}"),
                ));
            }
            let inferred = m / m_y;
            if have_mz && get_usize(&fields, "m_z", 0)? != inferred {
                return Err(Error::config(
                    "m_z",
                    format!("inconsistent with m_elements = {m} and m_y = {m_y}"),
                ));
            }
            inferred
        }
    };
    let p_t_db = get_f64(&fields, "p_t_db", 10.0)?;

    let cfg = SystemConfig {
        n_tx,
        n_users,
        n_rx,
        streams_per_user,
        m_y,
        m_z,
        r_t: get_f64(&fields, "r_t", defaults.r_t)?,
        r_r: get_f64(&fields, "r_r", defaults.r_r)?,
        wavelength,
        beta: get_f64(&fields, "beta", defaults.beta)?,
        d_y: get_f64(&fields, "d_y", wavelength / 2.0)?,
        d_z: get_f64(&fields, "d_z", wavelength / 2.0)?,
        p_t: 10f64.powf(p_t_db / 10.0),
        sigma2: get_f64(&fields, "sigma2", defaults.sigma2)?,
        ris_center: get_vector(&fields, "ris_center", defaults.ris_center)?,
        user_region_center: get_vector(&fields, "user_region_center", defaults.user_region_center)?,
        user_region_radius: get_f64(&fields, "user_region_radius", defaults.user_region_radius)?,
        seed: get_u64(&fields, "seed", defaults.seed)?,
        max_iters: get_usize(&fields, "max_iters", defaults.max_iters)?,
        eps: get_f64(&fields, "eps", defaults.eps)?,
    };
    cfg.validate()?;

    let default_spec = SweepSpec::default();
    let variable = match fields.get("sweep_variable") {
        Some(name) => SweepVariable::from_name(name)?,
        None => default_spec.variable,
    };
    let values = match fields.get("sweep_values") {
        Some(list) => parse_f64_list("sweep_values", list)?,
        None => default_spec.values,
    };
    let schemes = match fields.get("sweep_schemes") {
        Some(list) => list
            .split(',')
            .map(|s| SchemeKind::from_name(s.trim()))
            .collect::<Result<Vec<_>>>()?,
        None => default_spec.schemes,
    };
    let trials = get_usize(&fields, "sweep_trials", default_spec.trials)?;
    let spec = SweepSpec {
        variable,
        values,
        schemes,
        trials,
    };
    spec.validate()?;
    Ok((cfg, spec))
}

const KNOWN_KEYS: &[&str] = &[
    "n_tx",
    "n_users",
    "n_rx",
    "streams_per_user",
    "m_elements",
    "m_y",
    "m_z",
    "r_t",
    "r_r",
    "wavelength",
    "beta",
    "d_y",
    "d_z",
    "p_t_db",
    "sigma2",
    "ris_center",
    "user_region_center",
    "user_region_radius",
    "seed",
    "max_iters",
    "eps",
    "sweep_variable",
    "sweep_values",
    "sweep_schemes",
    "sweep_trials",
];

fn get_f64(fields: &HashMap<&str, &str>, key: &str, default: f64) -> Result<f64> {
    match fields.get(key) {
        Some(text) => text
            .parse::<f64>()
            .map_err(|_| Error::config(key, format!("`{text}` is not a number"))),
        None => Ok(default),
    }
}

fn get_usize(fields: &HashMap<&str, &str>, key: &str, default: usize) -> Result<usize> {
    match fields.get(key) {
        Some(text) => text
            .parse::<usize>()
            .map_err(|_| Error::config(key, format!("`{text}` is not a non-negative integer"))),
        None => Ok(default),
    }
}

fn get_u64(fields: &HashMap<&str, &str>, key: &str, default: u64) -> Result<u64> {
    match fields.get(key) {
        Some(text) => text
            .parse::<u64>()
            .map_err(|_| Error::config(key, format!("`{text}` is not a 64-bit unsigned integer"))),
        None => Ok(default),
    }
}

fn get_vector(
    fields: &HashMap<&str, &str>,
    key: &str,
    default: Vector3<f64>,
) -> Result<Vector3<f64>> {
    match fields.get(key) {
        Some(text) => {
            let parts = parse_f64_list(key, text)?;
            if parts.len() != 3 {
                return Err(Error::config(
                    key,
                    format!("expected three comma-separated coordinates, got {}", parts.len()),
                ));
            }
            Ok(Vector3::new(parts[0], parts[1], parts[2]))
        }
        None => Ok(default),
    }
}

fn parse_f64_list(key: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(key, format!("`{}` is not a number", part.trim())))
        })
        .collect()
}
