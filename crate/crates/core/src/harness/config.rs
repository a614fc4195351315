//! Flat `key = value` scenario files.
//!
//! ```text
//! name = blowup_fixed_gamma
//! domain.kind = box2d
//! domain.a = 1
//! domain.b = 1
//! u0.kind = constant
//! u0.M0 = 1
//! schedule.kind = profile
//! schedule.gamma1 = 0.1
//! schedule.profile.kind = constant
//! solver.q = 2
//! solver.resolution = 64
//! horizon = 100
//! ```
//!
//! `schedule.kind` is `profile` (explicit decay profile) or `global` /
//! `capped` (profile built from the constant pipeline, with
//! `schedule.c_hat = calibrate` for an on-the-fly calibration). `horizon`
//! is a time or a multiple of the pipeline's `t*`, written `50*t_star`.
//! Blank lines and `#` comments are ignored; unknown or repeated keys are
//! errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Anchor, DecayProfile, Domain, InitialData};
use crate::schedule::Mode;
use crate::solver::{ArcCoverage, Scheme, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub domain: Domain,
    pub u0: InitialData,
    pub schedule: ScheduleSpec,
    pub solver: SolverConfig,
    pub horizon: Horizon,
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleSpec {
    Profile { gamma1: f64, profile: DecayProfile, anchor: Anchor },
    Pipeline { mode: Mode, gamma1: f64, beta: f64, b: Option<f64>, c_hat: CHat, anchor: Anchor },
}

impl ScheduleSpec {
    pub fn gamma1(&self) -> f64 {
        match self {
            ScheduleSpec::Profile { gamma1, .. } | ScheduleSpec::Pipeline { gamma1, .. } => *gamma1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CHat {
    Value(f64),
    /// Calibrate on the standard plan at the pipeline's `alpha`.
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Time(f64),
    TStarMultiple(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub report: bool,
    pub trace: bool,
    pub snapshot: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { report: true, trace: true, snapshot: true }
    }
}

/// Render a number so that parsing it back gives the same bits.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_num(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}`: expected a number, got `{v}`")))
}

/// Serde name of a unit enum variant, e.g. `Scheme::CrankNicolson` → `crank-nicolson`.
fn enum_label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit variants serialize as strings"),
    }
}

fn parse_enum<T: DeserializeOwned>(key: &str, v: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|_| Error::Config(format!("`{key}`: unknown value `{v}`")))
}

/// Ordered key/value pairs of one scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pairs(pub Vec<(String, String)>);

impl Pairs {
    fn push(&mut self, k: &str, v: impl Into<String>) {
        self.0.push((k.to_string(), v.into()));
    }

    fn num(&mut self, k: &str, v: f64) {
        self.push(k, fmt_num(v));
    }

    /// Replace the value of `key`, appending it if absent.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Pairs::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", no + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            if out.get(k).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
            out.push(k, v);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Consumes keys, remembering which ones were used.
struct Reader {
    map: BTreeMap<String, String>,
}

impl Reader {
    fn opt(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn req(&mut self, key: &str) -> Result<String> {
        self.opt(key).ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn num(&mut self, key: &str) -> Result<f64> {
        let v = self.req(key)?;
        parse_num(key, &v)
    }

    fn num_or(&mut self, key: &str, default: f64) -> Result<f64> {
        self.opt(key).map_or(Ok(default), |v| parse_num(key, &v))
    }

    fn enum_or<T: DeserializeOwned>(&mut self, key: &str, default: T) -> Result<T> {
        self.opt(key).map_or(Ok(default), |v| parse_enum(key, &v))
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
        }
    }
}

impl Scenario {
    pub fn to_pairs(&self) -> Pairs {
        let mut p = Pairs::default();
        p.push("name", self.name.clone());
        match self.domain {
            Domain::Box2d { a, b } => {
                p.push("domain.kind", "box2d");
                p.num("domain.a", a);
                p.num("domain.b", b);
            }
            Domain::Box3d { a, b, c } => {
                p.push("domain.kind", "box3d");
                p.num("domain.a", a);
                p.num("domain.b", b);
                p.num("domain.c", c);
            }
            Domain::Disk2d => p.push("domain.kind", "disk2d"),
        }
        match &self.u0 {
            InitialData::Constant { m0 } => {
                p.push("u0.kind", "constant");
                p.num("u0.M0", *m0);
            }
            InitialData::Cosine { m0, amp, k } => {
                p.push("u0.kind", "cosine");
                p.num("u0.M0", *m0);
                p.num("u0.amp", *amp);
                p.push("u0.k", k.to_string());
            }
            InitialData::Nodal { resolution, values } => {
                p.push("u0.kind", "nodal");
                p.push("u0.resolution", resolution.to_string());
                p.push("u0.values", values.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(" "));
            }
        }
        match &self.schedule {
            ScheduleSpec::Profile { gamma1, profile, anchor } => {
                p.push("schedule.kind", "profile");
                p.num("schedule.gamma1", *gamma1);
                p.push("schedule.anchor", enum_label(anchor));
                match profile {
                    DecayProfile::Constant => p.push("schedule.profile.kind", "constant"),
                    DecayProfile::Polynomial { rate, beta } => {
                        p.push("schedule.profile.kind", "polynomial");
                        p.num("schedule.profile.rate", *rate);
                        p.num("schedule.profile.beta", *beta);
                    }
                    DecayProfile::Exponential { rate } => {
                        p.push("schedule.profile.kind", "exponential");
                        p.num("schedule.profile.rate", *rate);
                    }
                    DecayProfile::SphericalCap { rate } => {
                        p.push("schedule.profile.kind", "spherical-cap");
                        p.num("schedule.profile.rate", *rate);
                    }
                    DecayProfile::Table { samples } => {
                        p.push("schedule.profile.kind", "table");
                        let s: Vec<String> =
                            samples.iter().map(|(t, f)| format!("{}:{}", fmt_num(*t), fmt_num(*f))).collect();
                        p.push("schedule.profile.samples", s.join(" "));
                    }
                }
            }
            ScheduleSpec::Pipeline { mode, gamma1, beta, b, c_hat, anchor } => {
                p.push("schedule.kind", mode.to_string());
                p.num("schedule.gamma1", *gamma1);
                p.push("schedule.anchor", enum_label(anchor));
                p.num("schedule.beta", *beta);
                if let Some(b) = b {
                    p.num("schedule.B", *b);
                }
                match c_hat {
                    CHat::Value(v) => p.num("schedule.c_hat", *v),
                    CHat::Calibrate => p.push("schedule.c_hat", "calibrate"),
                }
            }
        }
        let s = &self.solver;
        p.num("solver.q", s.q);
        p.push("solver.scheme", enum_label(&s.scheme));
        p.push("solver.resolution", s.resolution.to_string());
        p.num("solver.dt_init", s.dt_init);
        p.num("solver.dt_min", s.dt_min);
        p.push("solver.u_max", s.u_max.map_or("auto".to_string(), fmt_num));
        p.num("solver.newton_tol", s.newton_tol);
        p.push("solver.newton_max_iter", s.newton_max_iter.to_string());
        p.num("solver.max_rel_change", s.max_rel_change);
        p.push("solver.coverage", enum_label(&s.coverage));
        match self.horizon {
            Horizon::Time(t) => p.num("horizon", t),
            Horizon::TStarMultiple(k) => p.push("horizon", format!("{}*t_star", fmt_num(k))),
        }
        let o = self.outputs;
        let names: Vec<&str> = [(o.report, "report"), (o.trace, "trace"), (o.snapshot, "snapshot")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        p.push("outputs", names.join(","));
        p
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().to_text()
    }

    pub fn from_pairs(pairs: &Pairs) -> Result<Self> {
        let mut r = Reader { map: pairs.0.iter().cloned().collect() };
        let name = r.req("name")?;
        let domain = match r.req("domain.kind")?.as_str() {
            "box2d" => Domain::box2d(r.num("domain.a")?, r.num("domain.b")?)?,
            "box3d" => Domain::box3d(r.num("domain.a")?, r.num("domain.b")?, r.num("domain.c")?)?,
            "disk2d" => Domain::disk2d(),
            other => return Err(Error::Config(format!("unknown domain kind `{other}`"))),
        };
        let u0 = match r.req("u0.kind")?.as_str() {
            "constant" => InitialData::Constant { m0: r.num("u0.M0")? },
            "cosine" => InitialData::Cosine {
                m0: r.num("u0.M0")?,
                amp: r.num("u0.amp")?,
                k: parse_count("u0.k", &r.req("u0.k")?)?,
            },
            "nodal" => InitialData::Nodal {
                resolution: parse_count("u0.resolution", &r.req("u0.resolution")?)?,
                values: r
                    .req("u0.values")?
                    .split_whitespace()
                    .map(|v| parse_num("u0.values", v))
                    .collect::<Result<_>>()?,
            },
            other => return Err(Error::Config(format!("unknown u0 kind `{other}`"))),
        };
        u0.validate()?;
        let kind = r.req("schedule.kind")?;
        let gamma1 = r.num("schedule.gamma1")?;
        let anchor = r.enum_or("schedule.anchor", Anchor::Center)?;
        let schedule = if kind == "profile" {
            let profile = match r.req("schedule.profile.kind")?.as_str() {
                "constant" => DecayProfile::Constant,
                "polynomial" => DecayProfile::Polynomial {
                    rate: r.num("schedule.profile.rate")?,
                    beta: r.num("schedule.profile.beta")?,
                },
                "exponential" => DecayProfile::Exponential { rate: r.num("schedule.profile.rate")? },
                "spherical-cap" => DecayProfile::SphericalCap { rate: r.num("schedule.profile.rate")? },
                "table" => DecayProfile::Table { samples: parse_samples(&r.req("schedule.profile.samples")?)? },
                other => return Err(Error::Config(format!("unknown profile kind `{other}`"))),
            };
            profile.validate()?;
            ScheduleSpec::Profile { gamma1, profile, anchor }
        } else {
            let mode: Mode = kind.parse()?;
            let beta = r.num("schedule.beta")?;
            let b = r.opt("schedule.B").map(|v| parse_num("schedule.B", &v)).transpose()?;
            if mode == Mode::Capped && b.is_none() {
                return Err(Error::Config("capped schedules need `schedule.B`".into()));
            }
            let c_hat = match r.req("schedule.c_hat")?.as_str() {
                "calibrate" => CHat::Calibrate,
                v => CHat::Value(parse_num("schedule.c_hat", v)?),
            };
            ScheduleSpec::Pipeline { mode, gamma1, beta, b, c_hat, anchor }
        };
        let d = SolverConfig::default();
        let solver = SolverConfig {
            q: r.num_or("solver.q", d.q)?,
            scheme: r.enum_or::<Scheme>("solver.scheme", d.scheme)?,
            resolution: match r.opt("solver.resolution") {
                Some(v) => parse_count("solver.resolution", &v)?,
                None => d.resolution,
            },
            dt_init: r.num_or("solver.dt_init", d.dt_init)?,
            dt_min: r.num_or("solver.dt_min", d.dt_min)?,
            u_max: match r.opt("solver.u_max").as_deref() {
                None | Some("auto") => None,
                Some(v) => Some(parse_num("solver.u_max", v)?),
            },
            newton_tol: r.num_or("solver.newton_tol", d.newton_tol)?,
            newton_max_iter: match r.opt("solver.newton_max_iter") {
                Some(v) => parse_count("solver.newton_max_iter", &v)?,
                None => d.newton_max_iter,
            },
            max_rel_change: r.num_or("solver.max_rel_change", d.max_rel_change)?,
            coverage: r.enum_or::<ArcCoverage>("solver.coverage", d.coverage)?,
        };
        solver.validate()?;
        let h = r.req("horizon")?;
        let horizon = match h.strip_suffix("*t_star") {
            Some(k) => {
                if !matches!(schedule, ScheduleSpec::Pipeline { .. }) {
                    return Err(Error::Config("`*t_star` horizons need a pipeline schedule".into()));
                }
                Horizon::TStarMultiple(parse_num("horizon", k)?)
            }
            None => Horizon::Time(parse_num("horizon", &h)?),
        };
        let outputs = match r.opt("outputs") {
            None => Outputs::default(),
            Some(list) => {
                let mut o = Outputs { report: false, trace: false, snapshot: false };
                for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match item {
                        "report" => o.report = true,
                        "trace" => o.trace = true,
                        "snapshot" => o.snapshot = true,
                        other => return Err(Error::Config(format!("unknown output `{other}`"))),
                    }
                }
                o
            }
        };
        r.finish()?;
        Ok(Scenario { name, domain, u0, schedule, solver, horizon, outputs })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&Pairs::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Copy with one dotted key replaced.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut p = self.to_pairs();
        p.set(key, value);
        Self::from_pairs(&p)
    }
}

fn parse_count(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("`{key}`: expected a non-negative integer, got `{v}`")))
}

fn parse_samples(v: &str) -> Result<Vec<(f64, f64)>> {
    v.split_whitespace()
        .map(|pair| {
            let (t, f) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("table sample `{pair}` is not `t:f`")))?;
            Ok((parse_num("schedule.profile.samples", t)?, parse_num("schedule.profile.samples", f)?))
        })
        .collect()
}
