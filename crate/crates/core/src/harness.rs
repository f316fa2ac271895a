//! Deterministic verification runs and their reports.
//!
//! Every random draw comes from ChaCha8 seeded with `seed_from_u64(seed)`,
//! with one stream per trial (or per sample group), so the output does not
//! depend on how work is spread across threads. Results are merged in
//! index order.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bound_formulas::{v_bullen, v_hadamard, BullenConfig, CaseTag, HadamardConfig};
use crate::error::{domain, Error, Result};
use crate::frac_quad::{abs_moment_quadrature, Interval, KernelSide, Order, QuadratureSettings};
use crate::inequality_engine::{
    bullen_bound, corollary_suite_from, hadamard_bound, verify, CorollaryGrid, CorollaryOutcome,
    ErratumEntry, GapResult, WeightedFunctional,
};
use crate::lip_corpus::{
    random_lipschitz_with, LipschitzWitness, PiecewiseLinearFunction, DEFAULT_M_MAX,
    DEFAULT_SEGMENTS,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64(seed), one stream per trial";

/// Exact and quadrature gaps may differ by `max(1e-10, 1e-8 |gap|)`.
pub const ORACLE_ABS_TOL: f64 = 1e-10;
pub const ORACLE_REL_TOL: f64 = 1e-8;
/// Largest accepted relative residual of a moment identity.
pub const IDENTITY_TOL: f64 = 1e-8;
pub const MIN_IDENTITY_SAMPLES: usize = 500;
/// Offset on either side of a case boundary for the continuity probe.
pub const BOUNDARY_OFFSET: f64 = 1e-9;
/// Allowed jump across a boundary, relative to `1 + |V|`.
pub const CONTINUITY_TOL: f64 = 1e-6;
pub const CONTINUITY_PROBES: usize = 20;
/// Random-witness streams reserved for each order of a corollary audit.
pub const STREAMS_PER_ORDER: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyHadamard,
    VerifyBullen,
    CheckIdentities,
    AuditCorollaries,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::VerifyHadamard => "verify-hadamard",
            Command::VerifyBullen => "verify-bullen",
            Command::CheckIdentities => "check-identities",
            Command::AuditCorollaries => "audit-corollaries",
            Command::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub alpha_grid: Vec<f64>,
    pub interval: Interval,
    pub m_max: f64,
    pub segments: usize,
    /// `None` writes to stdout.
    pub output_path: Option<PathBuf>,
    pub format: Format,
    /// Fixed witness in the corpus table format, replacing random draws.
    pub witness: Option<PathBuf>,
    pub corollary_grid: CorollaryGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            trials: 1000,
            alpha_grid: vec![0.5, 1.0, 1.5, 2.0],
            interval: Interval::unit(),
            m_max: DEFAULT_M_MAX,
            segments: DEFAULT_SEGMENTS,
            output_path: None,
            format: Format::Json,
            witness: None,
            corollary_grid: CorollaryGrid::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        if self.alpha_grid.is_empty() {
            return domain("alpha grid is empty");
        }
        self.orders()?;
        if !(self.m_max >= 0.0) || !self.m_max.is_finite() {
            return domain(format!(
                "m_max must be finite and nonnegative, got {}",
                self.m_max
            ));
        }
        if self.segments == 0 {
            return domain("segments must be at least 1");
        }
        Ok(())
    }

    pub fn orders(&self) -> Result<Vec<Order>> {
        self.alpha_grid.iter().map(|a| Order::new(*a)).collect()
    }

    fn load_witness(&self) -> Result<Option<LipschitzWitness>> {
        let Some(path) = &self.witness else {
            return Ok(None);
        };
        let f = load_witness(path)?;
        let i = f.interval();
        if i.a() != self.interval.a() || i.b() != self.interval.b() {
            return domain(format!(
                "witness is defined on [{}, {}] but the run uses [{}, {}]",
                i.a(),
                i.b(),
                self.interval.a(),
                self.interval.b()
            ));
        }
        Ok(Some(LipschitzWitness::new(f)))
    }
}

pub fn load_witness(path: &Path) -> Result<PiecewiseLinearFunction> {
    PiecewiseLinearFunction::from_table(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool_version: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub alpha_grid: Vec<f64>,
    pub interval: [f64; 2],
    pub m_max: f64,
    pub segments: usize,
    pub generator: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corollary_grid: Option<CorollaryGrid>,
}

impl Metadata {
    fn from_run(run: &RunConfig) -> Self {
        Metadata {
            tool_version: TOOL_VERSION,
            seed: run.seed,
            trials: run.trials,
            alpha_grid: run.alpha_grid.clone(),
            interval: [run.interval.a(), run.interval.b()],
            m_max: run.m_max,
            segments: run.segments,
            generator: GENERATOR,
            witness: run.witness.as_ref().map(|p| p.display().to_string()),
            corollary_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub alpha: f64,
    pub case: CaseTag,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub x: f64,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub lipschitz: f64,
    #[serde(flatten)]
    pub result: GapResult,
    pub quadrature_gap: f64,
    pub oracle_residual: f64,
    pub oracle_breach: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Sample,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub alpha: f64,
    pub case: CaseTag,
    pub probe: Probe,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub x: f64,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Sum of the closed-form panel moments.
    pub closed: f64,
    /// Same sum by reference quadrature.
    pub quadrature: f64,
    /// Largest panel discrepancy over `|quadrature|`.
    pub relative_residual: f64,
    /// Case-table value, reported for comparison only.
    pub printed_total: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRecord {
    pub alpha: f64,
    pub boundary: &'static str,
    pub below_case: CaseTag,
    pub above_case: CaseTag,
    pub below: f64,
    pub above: f64,
    pub delta: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Records {
    Trials(Vec<TrialRecord>),
    Identities {
        samples: Vec<IdentityRecord>,
        continuity: Vec<ContinuityRecord>,
    },
    Corollaries(Vec<CorollaryOutcome>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Trials(r) => r.len(),
            Records::Identities { samples, .. } => samples.len(),
            Records::Corollaries(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub violations: usize,
    pub max_ratio: Option<f64>,
    pub max_oracle_residual: f64,
    pub oracle_breaches: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity_probes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_continuity_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity_breaches: Option<usize>,
    /// Samples whose case-table value differs from the moment assembly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed_table_mismatches: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cases_covered: Vec<CaseTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_violations: Option<usize>,
    pub errata: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub command: Command,
    pub metadata: Metadata,
    pub records: Records,
    pub summary: Summary,
    pub errata: Vec<ErratumEntry>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// The record table, plus named side tables (errata, continuity).
    pub fn to_csv(&self) -> (String, Vec<(&'static str, String)>) {
        let mut extra = Vec::new();
        let main = match &self.records {
            Records::Trials(r) => trials_csv(r, self.command == Command::VerifyBullen),
            Records::Identities {
                samples,
                continuity,
            } => {
                extra.push(("continuity", continuity_csv(continuity)));
                identities_csv(samples)
            }
            Records::Corollaries(r) => {
                extra.push(("errata", errata_csv(&self.errata)));
                corollaries_csv(r)
            }
        };
        (main, extra)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn params_cell(p: &std::collections::BTreeMap<String, f64>) -> String {
    p.iter()
        .map(|(k, v)| format!("{k}={}", num(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn trials_csv(rows: &[TrialRecord], three: bool) -> String {
    let mut s = String::from(if three {
        "trial,alpha,case,lambda,eta,mu,x,y,z,lipschitz,gap,bound,ratio,passed,quadrature_gap,oracle_residual\n"
    } else {
        "trial,alpha,case,lambda,x,y,lipschitz,gap,bound,ratio,passed,quadrature_gap,oracle_residual\n"
    });
    for r in rows {
        let mut cells = vec![
            r.trial.to_string(),
            num(r.alpha),
            r.case.to_string(),
            num(r.lambda),
        ];
        if three {
            cells.extend([opt(r.eta), opt(r.mu), num(r.x), num(r.y), opt(r.z)]);
        } else {
            cells.extend([num(r.x), num(r.y)]);
        }
        cells.extend([
            num(r.lipschitz),
            num(r.result.gap),
            num(r.result.bound),
            opt(r.result.ratio),
            r.result.passed.to_string(),
            num(r.quadrature_gap),
            num(r.oracle_residual),
        ]);
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn identities_csv(rows: &[IdentityRecord]) -> String {
    let mut s = String::from(
        "alpha,case,probe,lambda,eta,x,y,z,closed,quadrature,relative_residual,printed_total,passed\n",
    );
    for r in rows {
        let probe = match r.probe {
            Probe::Sample => "sample",
            Probe::Boundary => "boundary",
        };
        let cells = [
            num(r.alpha),
            r.case.to_string(),
            probe.to_string(),
            num(r.lambda),
            opt(r.eta),
            num(r.x),
            num(r.y),
            opt(r.z),
            num(r.closed),
            num(r.quadrature),
            num(r.relative_residual),
            num(r.printed_total),
            r.passed.to_string(),
        ];
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn continuity_csv(rows: &[ContinuityRecord]) -> String {
    let mut s = String::from("alpha,boundary,below_case,above_case,below,above,delta,passed\n");
    for r in rows {
        let cells = [
            num(r.alpha),
            r.boundary.to_string(),
            r.below_case.to_string(),
            r.above_case.to_string(),
            num(r.below),
            num(r.above),
            num(r.delta),
            r.passed.to_string(),
        ];
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn corollaries_csv(rows: &[CorollaryOutcome]) -> String {
    let mut s = String::from(
        "formula_id,params,printed_bound,theorem_bound,bounds_agree,worst_ratio,worst_witness,witnesses,violations,literal_violations\n",
    );
    for r in rows {
        let cells = [
            r.formula_id.clone(),
            params_cell(&r.params),
            num(r.printed_bound),
            num(r.theorem_bound),
            r.bounds_agree.to_string(),
            opt(r.worst.ratio),
            r.worst_witness.clone(),
            r.witnesses.to_string(),
            r.violations.to_string(),
            r.literal_violations.to_string(),
        ];
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn errata_csv(rows: &[ErratumEntry]) -> String {
    let mut s = String::from("formula_id,kind,max_abs_deviation,params,witness\n");
    for e in rows {
        let kind = serde_json::to_value(e.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let cells = [
            e.formula_id.clone(),
            kind,
            num(e.max_abs_deviation),
            params_cell(&e.params),
            e.witness.clone().unwrap_or_default(),
        ];
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn max_ratio<'a>(results: impl Iterator<Item = &'a GapResult>) -> Option<f64> {
    results
        .filter_map(|r| r.ratio)
        .fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn oracle_breach(gap: f64, quad: f64) -> bool {
    (gap - quad).abs() > ORACLE_ABS_TOL.max(ORACLE_REL_TOL * gap.abs())
}

fn draw_witness(
    rng: &mut ChaCha8Rng,
    run: &RunConfig,
    fixed: &Option<LipschitzWitness>,
) -> Result<LipschitzWitness> {
    match fixed {
        Some(w) => Ok(w.clone()),
        None => random_lipschitz_with(rng, run.interval, run.segments, run.m_max),
    }
}

fn sorted_uniforms<const N: usize>(rng: &mut ChaCha8Rng, interval: Interval) -> [f64; N] {
    let mut out = [0.0; N];
    for v in &mut out {
        *v = interval.lerp(rng.random::<f64>());
    }
    out.sort_by(f64::total_cmp);
    out
}

fn trials_summary(records: &[TrialRecord]) -> Summary {
    let violations = records.iter().filter(|r| !r.result.passed).count();
    let oracle_breaches = records.iter().filter(|r| r.oracle_breach).count();
    Summary {
        records: records.len(),
        violations,
        max_ratio: max_ratio(records.iter().map(|r| &r.result)),
        max_oracle_residual: records
            .iter()
            .map(|r| r.oracle_residual)
            .fold(0.0, f64::max),
        oracle_breaches,
        continuity_probes: None,
        max_continuity_delta: None,
        continuity_breaches: None,
        printed_table_mismatches: None,
        cases_covered: covered(records.iter().map(|r| r.case)),
        literal_violations: None,
        errata: 0,
        passed: violations == 0 && oracle_breaches == 0,
    }
}

fn covered(cases: impl Iterator<Item = CaseTag>) -> Vec<CaseTag> {
    let mut v: Vec<CaseTag> = cases.collect();
    v.sort();
    v.dedup();
    v
}

fn gap_record(
    functional: &WeightedFunctional,
    witness: &LipschitzWitness,
    bound: f64,
) -> Result<(GapResult, f64, f64, bool)> {
    let gap = functional.gap(witness.function())?;
    let quad = functional.gap_quadrature(witness.function(), &QuadratureSettings::default())?;
    let r = verify(gap, bound);
    Ok((r, quad, (gap - quad).abs(), oracle_breach(gap, quad)))
}

/// Random two-node configurations against random Lipschitz witnesses.
///
/// Per trial: witness, then `λ`, then a sorted pair `x ≤ y`, all from the
/// trial's stream. Every order in the grid reuses the trial's draws.
pub fn cmd_verify_hadamard(run: &RunConfig) -> Result<VerificationReport> {
    run.validate()?;
    let orders = run.orders()?;
    let fixed = run.load_witness()?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..run.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<TrialRecord>> {
            let mut rng = trial_rng(run.seed, t as u64);
            let w = draw_witness(&mut rng, run, &fixed)?;
            let lambda = rng.random::<f64>();
            let [x, y] = sorted_uniforms::<2>(&mut rng, run.interval);
            orders
                .iter()
                .map(|&o| {
                    let c = HadamardConfig::new(run.interval, o, lambda, x, y)?;
                    let bound = hadamard_bound(&c, w.constant())?;
                    let (result, quadrature_gap, oracle_residual, oracle_breach) =
                        gap_record(&WeightedFunctional::hadamard(&c), &w, bound)?;
                    Ok(TrialRecord {
                        trial: t,
                        alpha: o.value(),
                        case: c.case(),
                        lambda,
                        eta: None,
                        mu: None,
                        x,
                        y,
                        z: None,
                        lipschitz: w.constant(),
                        result,
                        quadrature_gap,
                        oracle_residual,
                        oracle_breach,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        command: Command::VerifyHadamard,
        metadata: Metadata::from_run(run),
        summary: trials_summary(&records),
        records: Records::Trials(records),
        errata: vec![],
    })
}

/// Random three-node configurations: weights uniform on the simplex, sorted
/// nodes `x ≤ y ≤ z`.
pub fn cmd_verify_bullen(run: &RunConfig) -> Result<VerificationReport> {
    run.validate()?;
    let orders = run.orders()?;
    let fixed = run.load_witness()?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..run.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<TrialRecord>> {
            let mut rng = trial_rng(run.seed, t as u64);
            let w = draw_witness(&mut rng, run, &fixed)?;
            let [u1, u2] = sorted_uniforms::<2>(&mut rng, Interval::unit());
            let (lambda, eta, mu) = (u1, u2 - u1, 1.0 - u2);
            let [x, y, z] = sorted_uniforms::<3>(&mut rng, run.interval);
            orders
                .iter()
                .map(|&o| {
                    let c = BullenConfig::new(run.interval, o, lambda, eta, mu, x, y, z)?;
                    let bound = bullen_bound(&c, w.constant())?;
                    let (result, quadrature_gap, oracle_residual, oracle_breach) =
                        gap_record(&WeightedFunctional::bullen(&c), &w, bound)?;
                    Ok(TrialRecord {
                        trial: t,
                        alpha: o.value(),
                        case: c.case(),
                        lambda: c.lambda(),
                        eta: Some(c.eta()),
                        mu: Some(c.mu()),
                        x,
                        y,
                        z: Some(z),
                        lipschitz: w.constant(),
                        result,
                        quadrature_gap,
                        oracle_residual,
                        oracle_breach,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        command: Command::VerifyBullen,
        metadata: Metadata::from_run(run),
        summary: trials_summary(&records),
        records: Records::Trials(records),
        errata: vec![],
    })
}

/// A point of the identity check: either bound function configuration.
#[derive(Debug, Clone)]
enum Sample {
    Two(HadamardConfig),
    Three(BullenConfig),
}

impl Sample {
    fn case(&self) -> CaseTag {
        match self {
            Sample::Two(c) => c.case(),
            Sample::Three(c) => c.case(),
        }
    }

    fn total(&self) -> Result<f64> {
        Ok(match self {
            Sample::Two(c) => v_hadamard(c)?.total(),
            Sample::Three(c) => v_bullen(c)?.total(),
        })
    }

    fn record(&self, probe: Probe) -> Result<IdentityRecord> {
        let s = QuadratureSettings::reference();
        let q = |x: f64, lo: f64, hi: f64, anchor: f64, side: KernelSide, o: Order| {
            abs_moment_quadrature(x, lo, hi, anchor, side, o, &s)
        };
        let (order, breakdown, quads) = match self {
            Sample::Two(c) => {
                let (a, b, v, o) = (c.interval().a(), c.interval().b(), c.node(), c.order());
                (
                    o,
                    v_hadamard(c)?,
                    vec![
                        q(c.x(), a, v, a, KernelSide::Left, o)?,
                        q(c.y(), v, b, b, KernelSide::Right, o)?,
                    ],
                )
            }
            Sample::Three(c) => {
                let (a, b, o) = (c.interval().a(), c.interval().b(), c.order());
                let (v1, v2) = c.nodes();
                (
                    o,
                    v_bullen(c)?,
                    vec![
                        q(c.x(), a, v1, a, KernelSide::Left, o)?,
                        q(c.y(), v1, v2, v2, KernelSide::Right, o)?,
                        q(c.z(), v2, b, b, KernelSide::Right, o)?,
                    ],
                )
            }
        };
        let quadrature: f64 = quads.iter().sum();
        let worst = breakdown
            .terms()
            .iter()
            .zip(&quads)
            .map(|(t, q)| (t.value - q).abs())
            .fold(0.0, f64::max);
        let relative_residual = if worst == 0.0 {
            0.0
        } else {
            worst / quadrature.abs().max(f64::MIN_POSITIVE)
        };
        let (lambda, eta, x, y, z) = match self {
            Sample::Two(c) => (c.lambda(), None, c.x(), c.y(), None),
            Sample::Three(c) => (c.lambda(), Some(c.eta()), c.x(), c.y(), Some(c.z())),
        };
        Ok(IdentityRecord {
            alpha: order.value(),
            case: breakdown.case(),
            probe,
            lambda,
            eta,
            x,
            y,
            z,
            closed: breakdown.total(),
            quadrature,
            relative_residual,
            printed_total: breakdown.printed_total(),
            passed: relative_residual <= IDENTITY_TOL,
        })
    }
}

const MAX_ATTEMPTS: usize = 1_000_000;

fn random_two_node(rng: &mut ChaCha8Rng, i: Interval, o: Order) -> Result<HadamardConfig> {
    let lambda = rng.random::<f64>();
    let [x, y] = sorted_uniforms::<2>(rng, i);
    HadamardConfig::new(i, o, lambda, x, y)
}

fn random_three_node(rng: &mut ChaCha8Rng, i: Interval, o: Order) -> Result<BullenConfig> {
    let [u1, u2] = sorted_uniforms::<2>(rng, Interval::unit());
    let [x, y, z] = sorted_uniforms::<3>(rng, i);
    BullenConfig::new(i, o, u1, u2 - u1, 1.0 - u2, x, y, z)
}

/// Draws `count` configurations that fall in `case`, by rejection.
fn samples_in_case(
    rng: &mut ChaCha8Rng,
    interval: Interval,
    order: Order,
    case: CaseTag,
    count: usize,
) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..MAX_ATTEMPTS {
        if out.len() == count {
            break;
        }
        let s = match case {
            CaseTag::Hadamard(_) => Sample::Two(random_two_node(rng, interval, order)?),
            CaseTag::Bullen(_) => Sample::Three(random_three_node(rng, interval, order)?),
        };
        if s.case() == case {
            out.push(s);
        }
    }
    if out.len() < count {
        return Err(Error::Internal(format!(
            "could not sample {count} configurations in {case}"
        )));
    }
    Ok(out)
}

/// Pairs of configurations straddling a case boundary by `±BOUNDARY_OFFSET`.
fn boundary_pairs(
    rng: &mut ChaCha8Rng,
    interval: Interval,
    order: Order,
) -> Result<Vec<(&'static str, Sample, Sample)>> {
    let e = BOUNDARY_OFFSET;
    let len = interval.len();
    let mut out = Vec::new();
    // keep split points away from the ends so both sides stay in range
    let span = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    for _ in 0..CONTINUITY_PROBES {
        let lambda = span(rng, 0.05, 0.95);
        let v = interval.lerp(lambda);
        let y = span(rng, v + 2.0 * e * len, interval.b());
        let two =
            |x: f64, y: f64| HadamardConfig::new(interval, order, lambda, x, y).map(Sample::Two);
        out.push(("x=V", two(v - e * len, y)?, two(v + e * len, y)?));
        let x = span(rng, interval.a(), v - 2.0 * e * len);
        out.push(("y=V", two(x, v - e * len)?, two(x, v + e * len)?));
    }
    for _ in 0..CONTINUITY_PROBES {
        let lambda = span(rng, 0.05, 0.45);
        let eta = span(rng, 0.1, 0.45);
        let (v1, v2) = (interval.lerp(lambda), interval.lerp(lambda + eta));
        let three = |x: f64, y: f64, z: f64| {
            BullenConfig::from_lambda_eta(interval, order, lambda, eta, (x, y, z))
                .map(Sample::Three)
        };
        let d = e * len;
        let [p, q] = {
            let mut t = [
                span(rng, v1 + 2.0 * d, interval.b()),
                span(rng, v1 + 2.0 * d, interval.b()),
            ];
            t.sort_by(f64::total_cmp);
            t
        };
        out.push(("x=V1", three(v1 - d, p, q)?, three(v1 + d, p, q)?));
        let x = span(rng, interval.a(), v1 - 2.0 * d);
        let z = span(rng, v1 + 2.0 * d, interval.b());
        out.push(("y=V1", three(x, v1 - d, z)?, three(x, v1 + d, z)?));
        let x = span(rng, interval.a(), v2 - 2.0 * d);
        let z = span(rng, v2 + 2.0 * d, interval.b());
        out.push(("y=V2", three(x, v2 - d, z)?, three(x, v2 + d, z)?));
        let [p, q] = {
            let mut t = [
                span(rng, interval.a(), v2 - 2.0 * d),
                span(rng, interval.a(), v2 - 2.0 * d),
            ];
            t.sort_by(f64::total_cmp);
            t
        };
        out.push(("z=V2", three(p, q, v2 - d)?, three(p, q, v2 + d)?));
    }
    Ok(out)
}

/// Closed-form panel moments against reference quadrature, every case of
/// both bound functions, plus continuity across case boundaries.
///
/// At least [`MIN_IDENTITY_SAMPLES`] configurations are drawn per order,
/// split evenly over the eleven cases; `trials` raises that count.
pub fn cmd_check_identities(run: &RunConfig) -> Result<VerificationReport> {
    run.validate()?;
    let orders = run.orders()?;
    let cases: Vec<CaseTag> = CaseTag::all_hadamard()
        .chain(CaseTag::all_bullen())
        .collect();
    let per_case = run.trials.max(MIN_IDENTITY_SAMPLES).div_ceil(cases.len());

    // one stream per (order, case) group, plus one per order for the probes
    let groups: Vec<(usize, Option<usize>)> = (0..orders.len())
        .flat_map(|k| {
            (0..cases.len())
                .map(move |c| (k, Some(c)))
                .chain([(k, None)])
        })
        .collect();
    let results: Vec<(Vec<IdentityRecord>, Vec<ContinuityRecord>)> = groups
        .par_iter()
        .map(|&(k, c)| -> Result<_> {
            let order = orders[k];
            let stream = ((k as u64) << 32) | c.map_or(u32::MAX as u64, |c| c as u64);
            let mut rng = trial_rng(run.seed, stream);
            match c {
                Some(c) => {
                    let samples =
                        samples_in_case(&mut rng, run.interval, order, cases[c], per_case)?;
                    let recs = samples
                        .iter()
                        .map(|s| s.record(Probe::Sample))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((recs, vec![]))
                }
                None => {
                    let mut recs = Vec::new();
                    let mut cont = Vec::new();
                    for (boundary, lo, hi) in boundary_pairs(&mut rng, run.interval, order)? {
                        let (below, above) = (lo.total()?, hi.total()?);
                        let delta = (above - below).abs();
                        cont.push(ContinuityRecord {
                            alpha: order.value(),
                            boundary,
                            below_case: lo.case(),
                            above_case: hi.case(),
                            below,
                            above,
                            delta,
                            passed: delta <= CONTINUITY_TOL * (1.0 + below.abs()),
                        });
                        recs.push(lo.record(Probe::Boundary)?);
                        recs.push(hi.record(Probe::Boundary)?);
                    }
                    Ok((recs, cont))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut samples = Vec::new();
    let mut continuity = Vec::new();
    for (s, c) in results {
        samples.extend(s);
        continuity.extend(c);
    }
    let violations = samples.iter().filter(|r| !r.passed).count();
    let continuity_breaches = continuity.iter().filter(|r| !r.passed).count();
    let cases_covered = covered(samples.iter().map(|r| r.case));
    let all_cases = cases.iter().all(|c| cases_covered.contains(c));
    let printed_table_mismatches = samples
        .iter()
        .filter(|r| !crate::bound_formulas::dual_paths_agree(r.printed_total, r.closed))
        .count();
    let summary = Summary {
        records: samples.len(),
        violations,
        max_ratio: None,
        max_oracle_residual: samples
            .iter()
            .map(|r| r.relative_residual)
            .fold(0.0, f64::max),
        oracle_breaches: violations,
        continuity_probes: Some(continuity.len()),
        max_continuity_delta: Some(continuity.iter().map(|r| r.delta).fold(0.0, f64::max)),
        continuity_breaches: Some(continuity_breaches),
        printed_table_mismatches: Some(printed_table_mismatches),
        cases_covered,
        literal_violations: None,
        errata: 0,
        passed: violations == 0 && continuity_breaches == 0 && all_cases,
    };
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        command: Command::CheckIdentities,
        metadata: Metadata::from_run(run),
        records: Records::Identities {
            samples,
            continuity,
        },
        summary,
        errata: vec![],
    })
}

/// Runs the corollary suite at every order of the grid. Misprints go to the
/// erratum ledger and do not fail the run; only a witness exceeding a
/// theorem-level bound does.
pub fn cmd_audit_corollaries(run: &RunConfig) -> Result<VerificationReport> {
    run.validate()?;
    let orders = run.orders()?;
    let mut grid = run.corollary_grid.clone();
    grid.seed = run.seed;
    let mut outcomes = Vec::new();
    let mut errata = Vec::new();
    for (k, &o) in orders.iter().enumerate() {
        let r = corollary_suite_from(run.interval, o, &grid, k as u64 * STREAMS_PER_ORDER)?;
        outcomes.extend(r.outcomes);
        errata.extend(r.errata);
    }
    let violations: usize = outcomes.iter().map(|o| o.violations).sum();
    let mut metadata = Metadata::from_run(run);
    metadata.corollary_grid = Some(grid);
    let summary = Summary {
        records: outcomes.len(),
        violations,
        max_ratio: max_ratio(outcomes.iter().map(|o| &o.worst)),
        max_oracle_residual: 0.0,
        oracle_breaches: 0,
        continuity_probes: None,
        max_continuity_delta: None,
        continuity_breaches: None,
        printed_table_mismatches: None,
        cases_covered: vec![],
        literal_violations: Some(outcomes.iter().map(|o| o.literal_violations).sum()),
        errata: errata.len(),
        passed: violations == 0,
    };
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        command: Command::AuditCorollaries,
        metadata,
        records: Records::Corollaries(outcomes),
        summary,
        errata,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Hadamard,
    Bullen,
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Functional::Hadamard => "hadamard",
            Functional::Bullen => "bullen",
        })
    }
}

/// Grid of a ratio sweep. Nodes are symmetric: `x = δa + (1-δ)b` and its
/// mirror, with the midpoint as middle node of the three-node functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub functional: Functional,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Middle weights; three-node functional only.
    pub etas: Vec<f64>,
}

impl SweepConfig {
    pub fn new(functional: Functional) -> Self {
        SweepConfig {
            functional,
            lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            deltas: vec![0.5, 0.625, 0.75, 0.875, 1.0],
            etas: vec![0.0, 0.25, 0.5],
        }
    }
}

pub const HADAMARD_SWEEP_HEADER: &str = "alpha,lambda,delta,gap,bound,ratio";
pub const BULLEN_SWEEP_HEADER: &str = "alpha,lambda,eta,delta,gap,bound,ratio";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub delta: f64,
    pub gap: f64,
    pub bound: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub schema_version: u32,
    pub functional: Functional,
    /// `panel-tent` or the witness file path.
    pub witness: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows whose gap exceeds the bound plus slack.
    pub fn violations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| !verify(r.gap, r.bound).passed)
            .count()
    }

    pub fn to_csv(&self) -> String {
        let three = self.functional == Functional::Bullen;
        let mut s = String::from(if three {
            BULLEN_SWEEP_HEADER
        } else {
            HADAMARD_SWEEP_HEADER
        });
        s.push('\n');
        for r in &self.rows {
            let mut cells = vec![num(r.alpha), num(r.lambda)];
            if three {
                cells.push(opt(r.eta));
            }
            cells.extend([num(r.delta), num(r.gap), num(r.bound), opt(r.ratio)]);
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Gap-to-bound ratios over a parameter grid, for plotting. Without a fixed
/// witness each row uses the panel tent of its own functional, which
/// attains the bound whenever every node lies in its own panel.
pub fn cmd_sweep(run: &RunConfig, sweep: &SweepConfig) -> Result<SweepTable> {
    run.validate()?;
    let orders = run.orders()?;
    let fixed = run.load_witness()?;
    for d in &sweep.deltas {
        if !(0.0..=1.0).contains(d) {
            return domain(format!("delta = {d} outside [0, 1]"));
        }
    }
    let i = run.interval;
    let mid = 0.5 * (i.a() + i.b());
    let mut points = Vec::new();
    for &o in &orders {
        for &lambda in &sweep.lambdas {
            match sweep.functional {
                Functional::Hadamard => {
                    for &delta in &sweep.deltas {
                        points.push((o, lambda, None, delta));
                    }
                }
                Functional::Bullen => {
                    for &eta in &sweep.etas {
                        if lambda + eta > 1.0 {
                            continue;
                        }
                        for &delta in &sweep.deltas {
                            points.push((o, lambda, Some(eta), delta));
                        }
                    }
                }
            }
        }
    }
    let rows = points
        .par_iter()
        .map(|&(o, lambda, eta, delta)| -> Result<SweepRow> {
            let (p, q) = {
                let (u, v) = (i.lerp(1.0 - delta), i.lerp(delta));
                (u.min(v), u.max(v))
            };
            let (functional, unit_bound) = match eta {
                None => {
                    let c = HadamardConfig::new(i, o, lambda, p, q)?;
                    (WeightedFunctional::hadamard(&c), hadamard_bound(&c, 1.0)?)
                }
                Some(eta) => {
                    let c = BullenConfig::from_lambda_eta(i, o, lambda, eta, (p, mid, q))?;
                    (WeightedFunctional::bullen(&c), bullen_bound(&c, 1.0)?)
                }
            };
            let w = match &fixed {
                Some(w) => w.clone(),
                None => LipschitzWitness::new(functional.panel_tent()?),
            };
            let r = verify(functional.gap(w.function())?, w.constant() * unit_bound);
            Ok(SweepRow {
                alpha: o.value(),
                lambda,
                eta,
                delta,
                gap: r.gap,
                bound: r.bound,
                ratio: r.ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        schema_version: SCHEMA_VERSION,
        functional: sweep.functional,
        witness: run
            .witness
            .as_ref()
            .map_or_else(|| "panel-tent".to_string(), |p| p.display().to_string()),
        rows,
    })
}

/// Process exit status for an error: 2 for bad input or I/O, 1 otherwise.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Parse { .. } | Error::Io(_) | Error::Json(_) => 2,
        Error::ToleranceNotMet { .. } | Error::Inconsistency { .. } | Error::Internal(_) => 1,
    }
}
