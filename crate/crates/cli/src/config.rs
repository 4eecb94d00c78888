//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # comment
//! [protocol]
//! rounds = 1e7
//! mu = 0.52
//! [channel]
//! eta = 0.70
//! p_e = 0.003
//! ```
//!
//! Sections: `protocol`, `channel`, `security`, `coefficients`, `geometry`,
//! `latency`, `run`. Keys are unique per section; `latency` takes arbitrary
//! component names. The workspace README lists every key.

use std::collections::BTreeMap;

use serde::Serialize;

use qpv_core::photon_stats::{ChannelModel, Intensity};
use qpv_core::protocol::{AdversaryStrategy, FunctionBackend, Role};
use qpv_core::security_bounds::vacuum_stationary_x;
use qpv_core::spacetime::{LatencyBudget, TimingRecord, VerifierGeometry};
use qpv_core::{ProtocolParams, ScoreCoefficients, SecurityParams};

use crate::error::CliError;

pub const SECTIONS: &[&str] = &["protocol", "channel", "security", "coefficients", "geometry", "latency", "run"];

fn allowed_keys(section: &str) -> Option<&'static [&'static str]> {
    Some(match section {
        "protocol" => &["rounds", "input_bits", "mu", "rep_rate"],
        "channel" => &["eta", "p_e", "measured_qber"],
        "security" => &["epsilon", "xi"],
        "coefficients" => &["gamma_c", "gamma_perp", "gamma_i"],
        "geometry" => &[
            "dimension",
            "v1",
            "v2",
            "t1_send_ps",
            "t1_recv_ps",
            "t2_send_ps",
            "t2_recv_ps",
        ],
        "run" => &[
            "role",
            "adversary_x",
            "det_eff",
            "seeds",
            "function_backend",
            "function_seed",
            "expected",
            "mu_min",
            "mu_max",
            "mu_tolerance",
        ],
        _ => return None,
    })
}

pub const DEFAULT_INPUT_BITS: u32 = 40;
pub const DEFAULT_REP_RATE: f64 = 2e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocateConfig {
    pub geometry: VerifierGeometry,
    pub timing: TimingRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSection {
    pub role: Role,
    pub seeds: Vec<u64>,
    pub function_backend: FunctionBackend,
    pub function_seed: u64,
    /// Report analytic expected tallies instead of sampling.
    pub expected: bool,
    pub mu_interval: (f64, f64),
    pub mu_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub protocol: Option<ProtocolParams>,
    /// Measured bit error rate, carried for the record; planning uses `p_e`.
    pub measured_qber: Option<f64>,
    pub coefficients: ScoreCoefficients,
    pub locate: Option<LocateConfig>,
    pub latency: Option<LatencyBudget>,
    pub run: RunSection,
}

struct Entry {
    value: String,
    line: usize,
}

type Sections = BTreeMap<String, Vec<(String, Entry)>>;

fn tokenize(text: &str) -> Result<Sections, CliError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(CliError::config(name, line, "unknown section"));
            }
            if sections.contains_key(name) {
                return Err(CliError::config(name, line, "duplicate section"));
            }
            sections.insert(name.to_string(), Vec::new());
            current = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::config(content, line, "expected `key = value`"));
        };
        let key = key.trim();
        let Some(section) = &current else {
            return Err(CliError::config(key, line, "key outside of any [section]"));
        };
        let entries = sections.get_mut(section).expect("section registered");
        if let Some((_, prev)) = entries.iter().find(|(k, _)| k == key) {
            return Err(CliError::config(
                &format!("{section}.{key}"),
                line,
                &format!("duplicate key (first defined on line {})", prev.line),
            ));
        }
        if let Some(keys) = allowed_keys(section) {
            if !keys.contains(&key) {
                return Err(CliError::config(&format!("{section}.{key}"), line, "unknown key"));
            }
        }
        entries.push((
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line,
            },
        ));
    }
    Ok(sections)
}

/// Typed view over one section's entries.
struct Section<'a> {
    name: &'a str,
    entries: &'a [(String, Entry)],
}

impl<'a> Section<'a> {
    fn raw(&self, key: &str) -> Option<&'a Entry> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, e)| e)
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|e| {
                e.value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::config(&self.path(key), e.line, "expected a finite number"))
            })
            .transpose()
    }

    fn req_f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?.ok_or_else(|| CliError::missing(&self.path(key)))
    }

    /// Non-negative integer; accepts exponent notation such as `1e7`.
    fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.raw(key)
            .map(|e| {
                if let Ok(v) = e.value.parse::<u64>() {
                    return Ok(v);
                }
                match e.value.parse::<f64>() {
                    Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15 => Ok(v as u64),
                    _ => Err(CliError::config(&self.path(key), e.line, "expected a non-negative integer")),
                }
            })
            .transpose()
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).map_or(0, |e| e.line)
    }

    /// Maps a core validation failure onto this key.
    fn check<T>(&self, key: &str, r: qpv_core::Result<T>) -> Result<T, CliError> {
        r.map_err(|e| CliError::config(&self.path(key), self.line(key), &e.to_string()))
    }
}

fn parse_seeds(s: &Section, key: &str) -> Result<Vec<u64>, CliError> {
    let Some(e) = s.raw(key) else {
        return Ok(Vec::new());
    };
    let bad = || CliError::config(&s.path(key), e.line, "expected `a, b, c` or `a..b` (inclusive)");
    if let Some((a, b)) = e.value.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    e.value
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
        .collect()
}

fn parse_point(s: &Section, key: &str, dim: u64) -> Result<Vec<f64>, CliError> {
    let e = s.raw(key).ok_or_else(|| CliError::missing(&s.path(key)))?;
    let coords: Option<Vec<f64>> = e.value.split(',').map(|t| t.trim().parse::<f64>().ok()).collect();
    match coords {
        Some(c) if c.len() as u64 == dim => Ok(c),
        _ => Err(CliError::config(
            &s.path(key),
            e.line,
            &format!("expected {dim} comma-separated coordinate(s)"),
        )),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let sections = tokenize(text)?;
    let empty: Vec<(String, Entry)> = Vec::new();
    let section = |name: &'static str| Section {
        name,
        entries: sections.get(name).map_or(&empty[..], |v| &v[..]),
    };
    let present = |name: &str| sections.contains_key(name);

    let coeff = section("coefficients");
    let d = ScoreCoefficients::PUBLISHED;
    let coefficients = ScoreCoefficients {
        gamma_c: coeff.f64("gamma_c")?.unwrap_or(d.gamma_c),
        gamma_perp: coeff.f64("gamma_perp")?.unwrap_or(d.gamma_perp),
        gamma_i: coeff.f64("gamma_i")?.unwrap_or(d.gamma_i),
    };
    coefficients
        .validate()
        .map_err(|e| CliError::config("coefficients", coeff.line("gamma_c"), &e.to_string()))?;

    let sec = section("security");
    let epsilon = sec.f64("epsilon")?.unwrap_or(SecurityParams::DEFAULT.epsilon);
    let xi = sec.f64("xi")?.unwrap_or(SecurityParams::DEFAULT.xi);
    sec.check("epsilon", SecurityParams::new(epsilon, 0.5))?;
    let security = sec.check("xi", SecurityParams::new(epsilon, xi))?;

    let proto = section("protocol");
    let chan = section("channel");
    let measured_qber = chan.f64("measured_qber")?;
    if let Some(q) = measured_qber {
        if !(0.0..=1.0).contains(&q) {
            return Err(CliError::config("channel.measured_qber", chan.line("measured_qber"), "must lie in [0, 1]"));
        }
    }
    let protocol = if present("protocol") || present("channel") {
        let rounds = proto.u64("rounds")?.ok_or_else(|| CliError::missing("protocol.rounds"))?;
        if rounds < 1 {
            return Err(CliError::config("protocol.rounds", proto.line("rounds"), "at least one round is required"));
        }
        let mu = proto.check("mu", Intensity::new(proto.req_f64("mu")?))?;
        let eta = chan.req_f64("eta")?;
        let p_e = chan.req_f64("p_e")?;
        chan.check("eta", ChannelModel::new(eta, 0.0))?;
        let channel = chan.check("p_e", ChannelModel::new(eta, p_e))?;
        let input_bits = match proto.u64("input_bits")? {
            Some(n) => u32::try_from(n)
                .map_err(|_| CliError::config("protocol.input_bits", proto.line("input_bits"), "too large"))?,
            None => DEFAULT_INPUT_BITS,
        };
        let params = ProtocolParams {
            rounds,
            input_bits,
            mu,
            channel,
            security,
            rep_rate: proto.f64("rep_rate")?.unwrap_or(DEFAULT_REP_RATE),
        };
        if params.rep_rate <= 0.0 {
            return Err(CliError::config("protocol.rep_rate", proto.line("rep_rate"), "must be > 0"));
        }
        proto.check("input_bits", params.validate())?;
        Some(params)
    } else {
        None
    };

    let geo = section("geometry");
    let locate = if present("geometry") {
        let dim = geo.u64("dimension")?.unwrap_or(1);
        let geometry = match dim {
            1 => geo.check("v2", VerifierGeometry::line(parse_point(&geo, "v1", 1)?[0], parse_point(&geo, "v2", 1)?[0]))?,
            2 => {
                let (a, b) = (parse_point(&geo, "v1", 2)?, parse_point(&geo, "v2", 2)?);
                geo.check("v2", VerifierGeometry::plane([a[0], a[1]], [b[0], b[1]]))?
            }
            _ => return Err(CliError::config("geometry.dimension", geo.line("dimension"), "must be 1 or 2")),
        };
        let time = |key: &str| -> Result<i64, CliError> {
            let e = geo.raw(key).ok_or_else(|| CliError::missing(&geo.path(key)))?;
            e.value
                .parse::<i64>()
                .map_err(|_| CliError::config(&geo.path(key), e.line, "expected an integer number of picoseconds"))
        };
        let timing = TimingRecord {
            t1_send: time("t1_send_ps")?,
            t1_recv: time("t1_recv_ps")?,
            t2_send: time("t2_send_ps")?,
            t2_recv: time("t2_recv_ps")?,
        };
        if timing.t1_recv < timing.t1_send {
            return Err(CliError::config("geometry.t1_recv_ps", geo.line("t1_recv_ps"), "receive precedes send"));
        }
        if timing.t2_recv < timing.t2_send {
            return Err(CliError::config("geometry.t2_recv_ps", geo.line("t2_recv_ps"), "receive precedes send"));
        }
        Some(LocateConfig { geometry, timing })
    } else {
        None
    };

    let latency = match sections.get("latency") {
        Some(entries) => {
            let lat = section("latency");
            let mut components = Vec::with_capacity(entries.len());
            for (k, _) in entries {
                components.push((k.clone(), lat.req_f64(k)?));
            }
            Some(lat.check(
                entries.first().map_or("", |(k, _)| k.as_str()),
                LatencyBudget::new(components),
            )?)
        }
        None => None,
    };

    let run = section("run");
    let det_eff = run.f64("det_eff")?.unwrap_or(1.0);
    let adversary_x = match run.raw("adversary_x") {
        None => None,
        Some(e) if e.value == "auto" => None,
        Some(_) => run.u64("adversary_x")?,
    };
    let auto_x = || -> Result<u64, CliError> {
        let xs = run.check("adversary_x", vacuum_stationary_x(&coefficients, security.epsilon))?;
        Ok(xs.max(0.0).round() as u64)
    };
    let role = match run.raw("role").map(|e| e.value.as_str()).unwrap_or("honest") {
        "honest" => Role::Honest,
        "vacuum-responder" => Role::Adversary(AdversaryStrategy::VacuumResponder {
            x: adversary_x.map_or_else(auto_x, Ok)?,
        }),
        "intercept-resend" => Role::Adversary(AdversaryStrategy::InterceptResend { det_eff }),
        "composite" => Role::Adversary(AdversaryStrategy::Composite {
            x: adversary_x.map_or_else(auto_x, Ok)?,
            det_eff,
        }),
        _ => {
            return Err(CliError::config(
                "run.role",
                run.line("role"),
                "expected honest, vacuum-responder, intercept-resend or composite",
            ))
        }
    };
    if let Role::Adversary(s) = &role {
        run.check("det_eff", s.validate())?;
    }
    let function_backend = match run.raw("function_backend").map(|e| e.value.as_str()) {
        None | Some("keyed") => FunctionBackend::Keyed,
        Some("explicit") => FunctionBackend::Explicit,
        Some(_) => {
            return Err(CliError::config("run.function_backend", run.line("function_backend"), "expected keyed or explicit"))
        }
    };
    if let (FunctionBackend::Explicit, Some(p)) = (function_backend, &protocol) {
        if p.input_bits > qpv_core::protocol::MAX_EXPLICIT_BITS {
            return Err(CliError::config(
                "run.function_backend",
                run.line("function_backend"),
                "explicit tables are limited to input_bits <= 30; use keyed",
            ));
        }
    }
    let expected = match run.raw("expected").map(|e| e.value.as_str()) {
        None | Some("false") => false,
        Some("true") => true,
        Some(_) => return Err(CliError::config("run.expected", run.line("expected"), "expected true or false")),
    };
    let mu_interval = (run.f64("mu_min")?.unwrap_or(0.05), run.f64("mu_max")?.unwrap_or(2.0));
    if !(mu_interval.0 > 0.0 && mu_interval.0 < mu_interval.1 && mu_interval.1 <= 5.0) {
        return Err(CliError::config("run.mu_min", run.line("mu_min"), "need 0 < mu_min < mu_max <= 5"));
    }
    let mu_tolerance = run.f64("mu_tolerance")?.unwrap_or(1e-4);
    if mu_tolerance <= 0.0 {
        return Err(CliError::config("run.mu_tolerance", run.line("mu_tolerance"), "must be > 0"));
    }

    Ok(RunConfig {
        protocol,
        measured_qber,
        coefficients,
        locate,
        latency,
        run: RunSection {
            role,
            seeds: parse_seeds(&run, "seeds")?,
            function_backend,
            function_seed: run.u64("function_seed")?.unwrap_or(0),
            expected,
            mu_interval,
            mu_tolerance,
        },
    })
}
