//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Keys are fixed; unknown or
//! repeated keys are rejected. Relative paths are resolved against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rodheat::{Forward, GridSpec, InitialProfile, MaterialCatalog, ProblemSpec, SeriesControl};

use crate::csvio::read_two_columns;
use crate::error::CliError;
use crate::fmt_num;

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "length_m",
    "hot_end_C",
    "cold_end_C",
    "initial_C",
    "initial_profile_file",
    "dx_m",
    "dt_s",
    "t_final_s",
    "alpha2_m2s",
    "material",
    "abs_term_tol",
    "min_terms",
    "max_terms",
    "x0_m",
    "times_s",
    "sigma_C",
    "seed",
    "bracket_lo",
    "bracket_hi",
    "rel_tol",
    "forward",
    "catalog_file",
    "measurements_file",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardKind {
    Analytic,
    Fd,
}

impl ForwardKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ForwardKind::Analytic => "analytic",
            ForwardKind::Fd => "fd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSource {
    Constant(f64),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diffusivity {
    Value(f64),
    Material(String),
    Unset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub length_m: f64,
    pub hot_end_c: f64,
    pub cold_end_c: f64,
    pub initial: InitialSource,
    pub dx_m: f64,
    pub dt_s: f64,
    pub t_final_s: f64,
    pub diffusivity: Diffusivity,
    pub abs_term_tol: f64,
    pub min_terms: usize,
    pub max_terms: usize,
    pub x0_m: Option<f64>,
    pub times_s: Vec<f64>,
    pub sigma_c: f64,
    pub seed: u64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub rel_tol: f64,
    pub forward: ForwardKind,
    pub catalog_file: Option<PathBuf>,
    pub measurements_file: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, String>,
    base: PathBuf,
}

impl Entries {
    fn raw(&self, key: &'static str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn required(&self, key: &'static str) -> Result<&str, CliError> {
        self.raw(key)
            .ok_or_else(|| CliError::config(key, "missing required key"))
    }

    fn number(&self, key: &'static str, default: Option<f64>) -> Result<f64, CliError> {
        let text = match (self.raw(key), default) {
            (Some(t), _) => t,
            (None, Some(d)) => return Ok(d),
            (None, None) => self.required(key)?,
        };
        let v: f64 = text
            .parse()
            .map_err(|_| CliError::config(key, format!("not a number: {text:?}")))?;
        if !v.is_finite() {
            return Err(CliError::config(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &'static str, default: Option<f64>) -> Result<f64, CliError> {
        let v = self.number(key, default)?;
        if v <= 0.0 {
            return Err(CliError::config(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, key: &'static str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(t) => t
                .parse()
                .map_err(|_| CliError::config(key, format!("not a non-negative integer: {t:?}"))),
        }
    }

    fn path(&self, key: &'static str) -> Option<PathBuf> {
        self.raw(key).map(|p| self.base.join(p))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let map = parse_pairs(text, |key| {
            KEYS.iter()
                .copied()
                .find(|k| *k == key)
                .ok_or_else(|| CliError::config(key, "unknown key"))
        })?;
        let e = Entries {
            map,
            base: base.to_path_buf(),
        };

        let initial = match (e.raw("initial_C"), e.path("initial_profile_file")) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "initial_profile_file",
                    "give either initial_C or initial_profile_file, not both",
                ))
            }
            (_, Some(p)) => InitialSource::File(p),
            (_, None) => InitialSource::Constant(e.number("initial_C", None)?),
        };

        let diffusivity = match (e.raw("alpha2_m2s"), e.raw("material")) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "material",
                    "give either alpha2_m2s or material, not both",
                ))
            }
            (Some(_), None) => Diffusivity::Value(e.positive("alpha2_m2s", None)?),
            (None, Some(name)) if !name.is_empty() => Diffusivity::Material(name.to_string()),
            (None, Some(_)) => return Err(CliError::config("material", "empty material name")),
            (None, None) => Diffusivity::Unset,
        };

        let times_s = match e.raw("times_s") {
            None => vec![0.0, 2000.0, 4000.0],
            Some(list) => parse_times(list)?,
        };

        let forward = match e.raw("forward").unwrap_or("fd") {
            "analytic" => ForwardKind::Analytic,
            "fd" => ForwardKind::Fd,
            other => {
                return Err(CliError::config(
                    "forward",
                    format!("expected analytic or fd, got {other:?}"),
                ))
            }
        };

        let seed = match e.raw("seed") {
            None => 0,
            Some(t) => t.parse().map_err(|_| {
                CliError::config("seed", format!("not a non-negative integer: {t:?}"))
            })?,
        };

        let x0_m = match e.raw("x0_m") {
            None => None,
            Some(_) => {
                let v = e.number("x0_m", None)?;
                if v < 0.0 {
                    return Err(CliError::config("x0_m", "must be >= 0"));
                }
                Some(v)
            }
        };

        let sigma_c = e.number("sigma_C", Some(0.0))?;
        if sigma_c < 0.0 {
            return Err(CliError::config("sigma_C", "must be >= 0"));
        }

        let cfg = RunConfig {
            length_m: e.positive("length_m", None)?,
            hot_end_c: e.number("hot_end_C", None)?,
            cold_end_c: e.number("cold_end_C", None)?,
            initial,
            dx_m: e.positive("dx_m", None)?,
            dt_s: e.positive("dt_s", None)?,
            t_final_s: e.positive("t_final_s", None)?,
            diffusivity,
            abs_term_tol: e.positive("abs_term_tol", Some(1e-10))?,
            min_terms: e.count("min_terms", 10)?,
            max_terms: e.count("max_terms", 10_000)?,
            x0_m,
            times_s,
            sigma_c,
            seed,
            bracket_lo: e.positive("bracket_lo", Some(1e-7))?,
            bracket_hi: e.positive("bracket_hi", Some(1e-3))?,
            rel_tol: e.positive("rel_tol", Some(1e-6))?,
            forward,
            catalog_file: e.path("catalog_file"),
            measurements_file: e.path("measurements_file"),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.min_terms < 1 || self.min_terms > self.max_terms {
            return Err(CliError::config(
                "min_terms",
                "need 1 <= min_terms <= max_terms",
            ));
        }
        if self.bracket_lo >= self.bracket_hi {
            return Err(CliError::config("bracket_hi", "must exceed bracket_lo"));
        }
        if let Some(x0) = self.x0_m {
            if x0 > self.length_m * (1.0 + 1e-12) {
                return Err(CliError::config("x0_m", "probe lies outside the rod"));
            }
        }
        self.grid()?;
        Ok(())
    }

    pub fn problem(&self) -> Result<ProblemSpec, CliError> {
        let initial = match &self.initial {
            InitialSource::Constant(c) => InitialProfile::Constant(*c),
            InitialSource::File(path) => {
                InitialProfile::Tabulated(read_two_columns(path, "x_m,u_C")?)
            }
        };
        ProblemSpec::new(self.length_m, self.hot_end_c, self.cold_end_c, initial)
            .map_err(|e| CliError::config(self.initial_key(), e.to_string()))
    }

    fn initial_key(&self) -> &'static str {
        match self.initial {
            InitialSource::Constant(_) => "initial_C",
            InitialSource::File(_) => "initial_profile_file",
        }
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        // a one-step horizon isolates spacing problems from horizon problems
        GridSpec::new(self.length_m, self.dx_m, self.dt_s, self.dt_s)
            .map_err(|e| CliError::config("dx_m", e.to_string()))?;
        GridSpec::new(self.length_m, self.dx_m, self.dt_s, self.t_final_s)
            .map_err(|e| CliError::config("t_final_s", e.to_string()))
    }

    pub fn series(&self) -> SeriesControl {
        SeriesControl::new(self.abs_term_tol, self.min_terms, self.max_terms)
            .expect("series control validated on parse")
    }

    pub fn forward(&self) -> Result<Forward, CliError> {
        Ok(match self.forward {
            ForwardKind::Analytic => Forward::Analytic(self.series()),
            ForwardKind::Fd => Forward::Fd(self.grid()?),
        })
    }

    /// Probe position, defaulting to mid-rod.
    pub fn x0(&self) -> f64 {
        self.x0_m.unwrap_or(0.5 * self.length_m)
    }

    pub fn catalog(&self) -> Result<MaterialCatalog, CliError> {
        let path = self
            .catalog_file
            .as_ref()
            .ok_or_else(|| CliError::config("catalog_file", "no material catalog configured"))?;
        let catalog = load_catalog(path)?;
        if catalog.is_empty() {
            return Err(CliError::config(
                "catalog_file",
                "material catalog is empty",
            ));
        }
        Ok(catalog)
    }

    /// The configured diffusivity, resolving a material name through the catalog.
    pub fn alpha2(&self) -> Result<f64, CliError> {
        match &self.diffusivity {
            Diffusivity::Value(a) => Ok(*a),
            Diffusivity::Material(name) => self
                .catalog()?
                .get(name)
                .ok_or_else(|| CliError::config("material", format!("{name} not in catalog"))),
            Diffusivity::Unset => Err(CliError::config("alpha2_m2s", "set alpha2_m2s or material")),
        }
    }

    pub fn material(&self) -> Option<&str> {
        match &self.diffusivity {
            Diffusivity::Material(m) => Some(m),
            _ => None,
        }
    }

    /// Effective configuration with defaults filled in and paths resolved.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("length_m", fmt_num(self.length_m));
        put("hot_end_C", fmt_num(self.hot_end_c));
        put("cold_end_C", fmt_num(self.cold_end_c));
        match &self.initial {
            InitialSource::Constant(c) => put("initial_C", fmt_num(*c)),
            InitialSource::File(p) => put("initial_profile_file", absolute(p)),
        }
        put("dx_m", fmt_num(self.dx_m));
        put("dt_s", fmt_num(self.dt_s));
        put("t_final_s", fmt_num(self.t_final_s));
        match &self.diffusivity {
            Diffusivity::Value(a) => put("alpha2_m2s", fmt_num(*a)),
            Diffusivity::Material(m) => put("material", m.clone()),
            Diffusivity::Unset => {}
        }
        put("abs_term_tol", fmt_num(self.abs_term_tol));
        put("min_terms", self.min_terms.to_string());
        put("max_terms", self.max_terms.to_string());
        if let Some(x0) = self.x0_m {
            put("x0_m", fmt_num(x0));
        }
        put("times_s", fmt_list(&self.times_s));
        put("sigma_C", fmt_num(self.sigma_c));
        put("seed", self.seed.to_string());
        put("bracket_lo", fmt_num(self.bracket_lo));
        put("bracket_hi", fmt_num(self.bracket_hi));
        put("rel_tol", fmt_num(self.rel_tol));
        put("forward", self.forward.as_str().to_string());
        if let Some(p) = &self.catalog_file {
            put("catalog_file", absolute(p));
        }
        if let Some(p) = &self.measurements_file {
            put("measurements_file", absolute(p));
        }
        out
    }
}

pub fn fmt_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_num(*v))
        .collect::<Vec<_>>()
        .join(", ")
}

fn absolute(p: &Path) -> String {
    std::path::absolute(p)
        .unwrap_or_else(|_| p.to_path_buf())
        .display()
        .to_string()
}

fn parse_times(list: &str) -> Result<Vec<f64>, CliError> {
    let mut times = Vec::new();
    for item in list.split(',') {
        let item = item.trim();
        let t: f64 = item
            .parse()
            .map_err(|_| CliError::config("times_s", format!("not a number: {item:?}")))?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::config("times_s", "times must be >= 0"));
        }
        if times.last().is_some_and(|&last| t <= last) {
            return Err(CliError::config(
                "times_s",
                "times must be strictly increasing",
            ));
        }
        times.push(t);
    }
    Ok(times)
}

/// `key = value` lines; `accept` maps each key to its canonical name.
fn parse_pairs(
    text: &str,
    accept: impl Fn(&str) -> Result<&'static str, CliError>,
) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(k) => &line[..k],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Input(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = accept(key.trim())?;
        if map
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(CliError::config(key, "key given twice"));
        }
    }
    Ok(map)
}

/// Catalog file: `name = alpha2_m2s` per line, in the same syntax as the config.
pub fn load_catalog(path: &Path) -> Result<MaterialCatalog, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config("catalog_file", format!("{}: {e}", path.display())))?;
    parse_catalog(&text)
}

pub fn parse_catalog(text: &str) -> Result<MaterialCatalog, CliError> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad =
            |msg: String| CliError::config("catalog_file", format!("line {}: {msg}", lineno + 1));
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected `name = alpha2_m2s`".into()))?;
        let alpha2: f64 = value
            .trim()
            .parse()
            .map_err(|_| bad(format!("not a number: {:?}", value.trim())))?;
        entries.push((name.trim().to_string(), alpha2));
    }
    MaterialCatalog::new(entries).map_err(|e| CliError::config("catalog_file", e.to_string()))
}
