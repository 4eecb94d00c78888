//! Subcommand execution and report serialization.

use std::fmt::Write as _;

use serde::Serialize;

use qpv_core::planner::{attack_resource_rate, honest_expected_score, honest_expected_tally, optimize_mu, AttackResource};
use qpv_core::protocol::{run_session, BooleanFunction};
use qpv_core::security_bounds::threshold;
use qpv_core::spacetime::{latency_budget, position_region, LatencySummary};
use qpv_core::{Execution, ExpectedTally, PlanResult, PositionRegion, ProtocolParams, ThresholdReport, TrialRecord};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "qpv";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column header of tabular trial output.
pub const TRIAL_HEADER: &str = "Total,Correct,Error,No-Response,Score/Threshold";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Threshold,
    Optimize,
    Simulate,
    Locate,
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Single JSON document.
    Obj,
    /// Comma-separated rows.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Results {
    Threshold(ThresholdReport),
    Plan {
        plan: PlanResult,
        attack_resource: AttackResource,
    },
    Trials {
        trials: Vec<TrialRecord>,
        expected: ExpectedTally,
        expected_score: f64,
    },
    ExpectedTally {
        tally: ExpectedTally,
        score: f64,
        threshold: f64,
    },
    Region {
        r1: f64,
        r2: f64,
        region: PositionRegion,
    },
    Budget(LatencySummary),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub seeds: Vec<u64>,
    pub config: RunConfig,
    pub results: Results,
}

impl Report {
    /// 0 when the run succeeded and any verification passed, 1 when a
    /// verification failed or the located region is empty.
    pub fn exit_code(&self) -> i32 {
        let failed = match &self.results {
            Results::Trials { trials, .. } => trials.iter().any(|t| !t.passed),
            Results::ExpectedTally { score, threshold, .. } => score < threshold,
            Results::Region { region, .. } => region.is_empty(),
            _ => false,
        };
        i32::from(failed)
    }
}

fn need_protocol(cfg: &RunConfig, cmd: &str) -> Result<ProtocolParams, CliError> {
    cfg.protocol
        .ok_or_else(|| CliError::Config(format!("{cmd} requires [protocol] and [channel] sections")))
}

/// Runs `cmd` on a validated configuration. `seeds` overrides `run.seeds` when non-empty.
pub fn run_command(cmd: Command, cfg: &RunConfig, seeds: &[u64], exec: Execution) -> Result<Report, CliError> {
    let seeds: Vec<u64> = if seeds.is_empty() { cfg.run.seeds.clone() } else { seeds.to_vec() };
    let coeffs = &cfg.coefficients;
    let results = match cmd {
        Command::Threshold => {
            let p = need_protocol(cfg, "threshold")?;
            Results::Threshold(threshold(p.rounds, p.mu, coeffs, &p.security)?)
        }
        Command::Optimize => {
            let p = need_protocol(cfg, "optimize")?;
            let plan = optimize_mu(&p, coeffs, cfg.run.mu_interval, cfg.run.mu_tolerance, exec)?;
            Results::Plan {
                plan,
                attack_resource: attack_resource_rate(p.input_bits, p.rep_rate)?,
            }
        }
        Command::Simulate => {
            let p = need_protocol(cfg, "simulate")?;
            let expected = honest_expected_tally(&p)?;
            let expected_score = honest_expected_score(&p, coeffs)?;
            if cfg.run.expected {
                Results::ExpectedTally {
                    tally: expected,
                    score: expected_score,
                    threshold: threshold(p.rounds, p.mu, coeffs, &p.security)?.gamma0,
                }
            } else {
                if seeds.is_empty() {
                    return Err(CliError::Config(
                        "simulate requires seeds (--seed or run.seeds) unless run.expected = true".into(),
                    ));
                }
                let f = BooleanFunction::create(p.input_bits, cfg.run.function_seed, cfg.run.function_backend)?;
                let trials = seeds
                    .iter()
                    .map(|&seed| run_session(&p, coeffs, &cfg.run.role, &f, seed, exec))
                    .collect::<Result<Vec<_>, _>>()?;
                Results::Trials {
                    trials,
                    expected,
                    expected_score,
                }
            }
        }
        Command::Locate => {
            let loc = cfg
                .locate
                .as_ref()
                .ok_or_else(|| CliError::Config("locate requires a [geometry] section".into()))?;
            let (r1, r2) = loc.timing.radii()?;
            Results::Region {
                r1,
                r2,
                region: position_region(&loc.geometry, r1, r2)?,
            }
        }
        Command::Budget => {
            let budget = cfg
                .latency
                .as_ref()
                .ok_or_else(|| CliError::Config("budget requires a [latency] section".into()))?;
            Results::Budget(latency_budget(budget))
        }
    };
    let seeds = if matches!(results, Results::Trials { .. }) { seeds } else { Vec::new() };
    Ok(Report {
        tool: TOOL,
        version: VERSION,
        command: cmd,
        seeds,
        config: cfg.clone(),
        results,
    })
}

fn rows(out: &mut String, pairs: &[(&str, String)]) {
    out.push_str("Quantity,Value\n");
    for (k, v) in pairs {
        let _ = writeln!(out, "{k},{v}");
    }
}

/// Serializes a report. Output depends only on the report contents.
pub fn emit_report(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Obj => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Internal(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Table => {
            let mut out = String::new();
            match &report.results {
                Results::Trials { trials, .. } => {
                    out.push_str(TRIAL_HEADER);
                    out.push('\n');
                    for t in trials {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{:.2}",
                            t.tally.responses(),
                            t.tally.n_c,
                            t.tally.n_i,
                            t.tally.n_perp,
                            t.score
                        );
                    }
                }
                Results::ExpectedTally { tally, threshold, .. } => {
                    out.push_str(TRIAL_HEADER);
                    out.push('\n');
                    let _ = writeln!(
                        out,
                        "{:.0},{:.0},{:.0},{:.0},{:.0}",
                        tally.n_c + tally.n_i,
                        tally.n_c,
                        tally.n_i,
                        tally.n_perp,
                        threshold
                    );
                }
                Results::Threshold(t) => rows(
                    &mut out,
                    &[
                        ("n0_lower", format!("{:.6}", t.bounds.n0_lower)),
                        ("n1_upper", format!("{:.6}", t.bounds.n1_upper)),
                        ("n2plus_upper", format!("{:.6}", t.bounds.n2plus_upper)),
                        ("s0_upper", format!("{:.6}", t.s0_upper)),
                        ("s1_upper", format!("{:.6}", t.s1_upper)),
                        ("s2plus_upper", format!("{:.6}", t.s2plus_upper)),
                        ("gamma0", format!("{:.6}", t.gamma0)),
                        ("x_star", format!("{:.6}", t.x_star)),
                        ("n_xi", t.n_xi.to_string()),
                        ("total_failure_prob", format!("{:e}", t.total_failure_prob)),
                    ],
                ),
                Results::Plan { plan, attack_resource } => rows(
                    &mut out,
                    &[
                        ("mu_star", format!("{:.6}", plan.mu_star)),
                        ("honest_score", format!("{:.6}", plan.honest_score)),
                        ("threshold", format!("{:.6}", plan.threshold)),
                        ("margin", format!("{:.6}", plan.margin)),
                        ("feasible", plan.feasible.to_string()),
                        ("attack_pairs_per_second", format!("{:e}", attack_resource.pairs_per_second)),
                    ],
                ),
                Results::Region { r1, r2, region } => rows(
                    &mut out,
                    &[
                        ("r1_m", format!("{r1:.6}")),
                        ("r2_m", format!("{r2:.6}")),
                        ("empty", region.is_empty().to_string()),
                        ("diameter_m", format!("{:.6}", region.diameter)),
                    ],
                ),
                Results::Budget(b) => {
                    out.push_str("Component,Nanoseconds\n");
                    for (name, ns) in &b.breakdown {
                        let _ = writeln!(out, "{name},{ns}");
                    }
                    let _ = writeln!(out, "total,{}", b.total_ns);
                }
            }
            Ok(out)
        }
    }
}
