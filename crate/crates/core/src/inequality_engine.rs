//! Gaps, bounds and pass/fail adjudication for the fractional inequalities,
//! plus an audit of the specialized bounds derived from them.
//!
//! A gap is the absolute value of
//! `Σ w_i f(p_i) - s · Γ(α+1)/(b-a)^α · Σ_panels J f`, where the panels are
//! `[a, V]`, `[V, b]` (two nodes) or `[a, V1]`, `[V1, V2]`, `[V2, b]` (three
//! nodes). Piecewise-linear witnesses are integrated in closed form; the
//! quadrature route exists to cross-check that.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound_formulas::{
    bullen_quarter_coeff, classical_table, endpoint_weighted_coeff, l_coeff, n_coeff, node_bound,
    quartile_pair_coeff, simpson_coeff, single_node_coeff, v_bullen, v_hadamard,
    weighted_bullen_coeff, BullenConfig, HadamardConfig,
};
use crate::error::{domain, Result};
use crate::frac_quad::{kernel_integral, Interval, KernelSide, Order, QuadratureSettings};
use crate::lip_corpus::{
    exact_kernel_integral, random_lipschitz_with, LipschitzWitness, PiecewiseLinearFunction,
    DEFAULT_M_MAX, DEFAULT_SEGMENTS,
};

/// Relative part of the pass/fail slack `1e-9 · (1 + bound)`.
pub const SLACK: f64 = 1e-9;
/// Deviations above this are recorded as errata.
pub const ERRATUM_THRESHOLD: f64 = 1e-8;
/// A printed bound counts as agreeing with the theorem-level one within
/// this relative tolerance.
pub const AGREEMENT_RTOL: f64 = 1e-10;

pub fn slack(bound: f64) -> f64 {
    SLACK * (1.0 + bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oracle,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub gap: f64,
    pub bound: f64,
    /// `gap / bound`; zero when both vanish, absent when only the bound does.
    pub ratio: Option<f64>,
    pub method: Method,
    pub passed: bool,
}

pub fn verify(gap: f64, bound: f64) -> GapResult {
    verify_with(gap, bound, Method::Oracle)
}

pub fn verify_with(gap: f64, bound: f64, method: Method) -> GapResult {
    let sl = slack(bound);
    let ratio = if bound > 0.0 {
        Some(gap / bound)
    } else if gap <= sl {
        Some(0.0)
    } else {
        None
    };
    GapResult {
        gap,
        bound,
        ratio,
        method,
        passed: gap <= bound + sl,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErratumKind {
    /// The printed bound differs from the theorem evaluated at the same nodes.
    BoundMismatch,
    /// The printed left-hand side is not the scaled theorem functional.
    WeightMismatch,
    /// A witness exceeds the printed bound applied to the printed left-hand side.
    LiteralViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErratumEntry {
    pub formula_id: String,
    pub kind: ErratumKind,
    pub max_abs_deviation: f64,
    pub params: BTreeMap<String, f64>,
    pub witness: Option<String>,
}

/// Panel layout of the fractional part of a functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "panels")]
pub enum Panels {
    Two { split: f64 },
    Three { v1: f64, v2: f64 },
}

impl Panels {
    fn edges(&self, interval: Interval) -> Vec<f64> {
        match *self {
            Panels::Two { split } => vec![interval.a(), split, interval.b()],
            Panels::Three { v1, v2 } => vec![interval.a(), v1, v2, interval.b()],
        }
    }
}

/// `Σ w_i f(p_i) - scale · Γ(α+1)/(b-a)^α · Σ_panels J f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedFunctional {
    interval: Interval,
    order: Order,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: Panels,
    scale: f64,
}

impl WeightedFunctional {
    pub fn new(
        interval: Interval,
        order: Order,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        panels: Panels,
        scale: f64,
    ) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return domain("functional needs one weight per node");
        }
        if nodes.iter().any(|p| !interval.contains(*p)) {
            return domain("functional nodes must lie in the interval");
        }
        let edges = panels.edges(interval);
        if edges.windows(2).any(|w| w[0] > w[1]) {
            return domain("panel split points out of order");
        }
        Ok(WeightedFunctional {
            interval,
            order,
            nodes,
            weights,
            panels,
            scale,
        })
    }

    /// Left-hand side of the two-node inequality.
    pub fn hadamard(c: &HadamardConfig) -> Self {
        let al = c.order().value();
        WeightedFunctional {
            interval: c.interval(),
            order: c.order(),
            nodes: vec![c.x(), c.y()],
            weights: vec![c.lambda().powf(al), (1.0 - c.lambda()).powf(al)],
            panels: Panels::Two { split: c.node() },
            scale: 1.0,
        }
    }

    /// Left-hand side of the three-node inequality.
    pub fn bullen(c: &BullenConfig) -> Self {
        let al = c.order().value();
        let (v1, v2) = c.nodes();
        WeightedFunctional {
            interval: c.interval(),
            order: c.order(),
            nodes: vec![c.x(), c.y(), c.z()],
            weights: vec![c.lambda().powf(al), c.eta().powf(al), c.mu().powf(al)],
            panels: Panels::Three { v1, v2 },
            scale: 1.0,
        }
    }

    /// Multiplies the whole functional by `s`.
    pub fn times(mut self, s: f64) -> Self {
        for w in &mut self.weights {
            *w *= s;
        }
        self.scale *= s;
        self
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn panels(&self) -> Panels {
        self.panels
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Largest absolute difference in node weights or fractional scale.
    pub fn weight_deviation(&self, other: &WeightedFunctional) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold((self.scale - other.scale).abs(), f64::max)
    }

    fn prefactor(&self) -> f64 {
        let al = self.order.value();
        self.scale * al / self.interval.len().powf(al)
    }

    fn point_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }

    /// Signed functional value with closed-form fractional integrals.
    pub fn value_exact(&self, f: &PiecewiseLinearFunction) -> Result<f64> {
        let (a, b) = (self.interval.a(), self.interval.b());
        let o = self.order;
        let raw = match self.panels {
            Panels::Two { split } => {
                exact_kernel_integral(f, a, split, a, KernelSide::Left, o)?
                    + exact_kernel_integral(f, split, b, b, KernelSide::Right, o)?
            }
            Panels::Three { v1, v2 } => {
                exact_kernel_integral(f, a, v1, a, KernelSide::Left, o)?
                    + exact_kernel_integral(f, v1, v2, v2, KernelSide::Right, o)?
                    + exact_kernel_integral(f, v2, b, b, KernelSide::Right, o)?
            }
        };
        Ok(self.point_sum(|t| f.eval(t)) - self.prefactor() * raw)
    }

    /// Signed functional value with adaptive quadrature; `points` are known
    /// kinks of `f`.
    pub fn value_quadrature<F: Fn(f64) -> f64>(
        &self,
        f: F,
        points: &[f64],
        settings: &QuadratureSettings,
    ) -> Result<f64> {
        let (a, b) = (self.interval.a(), self.interval.b());
        let o = self.order;
        let k = |lo: f64, hi: f64, anchor: f64, side: KernelSide| {
            kernel_integral(&f, lo, hi, anchor, side, o, points, settings)
        };
        let raw = match self.panels {
            Panels::Two { split } => {
                k(a, split, a, KernelSide::Left)? + k(split, b, b, KernelSide::Right)?
            }
            Panels::Three { v1, v2 } => {
                k(a, v1, a, KernelSide::Left)?
                    + k(v1, v2, v2, KernelSide::Right)?
                    + k(v2, b, b, KernelSide::Right)?
            }
        };
        Ok(self.point_sum(&f) - self.prefactor() * raw)
    }

    pub fn gap(&self, f: &PiecewiseLinearFunction) -> Result<f64> {
        Ok(self.value_exact(f)?.abs())
    }

    pub fn gap_quadrature(
        &self,
        f: &PiecewiseLinearFunction,
        settings: &QuadratureSettings,
    ) -> Result<f64> {
        Ok(self
            .value_quadrature(|t| f.eval(t), f.breakpoints(), settings)?
            .abs())
    }

    /// Unit-slope function equal to `|t - node_i| + k_i` on the i-th panel.
    /// It attains the bound whenever every node sits in its own panel.
    pub fn panel_tent(&self) -> Result<PiecewiseLinearFunction> {
        let edges = self.panels.edges(self.interval);
        let centers: Vec<f64> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.clamp(
                    edges[i.min(edges.len() - 2)],
                    edges[(i + 1).min(edges.len() - 1)],
                )
            })
            .collect();
        if centers.len() + 1 != edges.len() {
            return domain("panel tent needs one node per panel");
        }
        PiecewiseLinearFunction::panel_tent(self.interval, &edges, &centers)
    }
}

pub fn hadamard_gap(config: &HadamardConfig, witness: &LipschitzWitness) -> Result<f64> {
    WeightedFunctional::hadamard(config).gap(witness.function())
}

pub fn hadamard_gap_quadrature(
    config: &HadamardConfig,
    f: &PiecewiseLinearFunction,
    settings: &QuadratureSettings,
) -> Result<f64> {
    WeightedFunctional::hadamard(config).gap_quadrature(f, settings)
}

/// `α M V(x, y) / (b-a)^α`.
pub fn hadamard_bound(config: &HadamardConfig, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return domain(format!("Lipschitz constant {m} is negative"));
    }
    let al = config.order().value();
    Ok(al * m * v_hadamard(config)?.total() / config.interval().len().powf(al))
}

pub fn bullen_gap(config: &BullenConfig, witness: &LipschitzWitness) -> Result<f64> {
    WeightedFunctional::bullen(config).gap(witness.function())
}

pub fn bullen_gap_quadrature(
    config: &BullenConfig,
    f: &PiecewiseLinearFunction,
    settings: &QuadratureSettings,
) -> Result<f64> {
    WeightedFunctional::bullen(config).gap_quadrature(f, settings)
}

/// `α M V(x, y, z) / (b-a)^α`.
pub fn bullen_bound(config: &BullenConfig, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return domain(format!("Lipschitz constant {m} is negative"));
    }
    let al = config.order().value();
    Ok(al * m * v_bullen(config)?.total() / config.interval().len().powf(al))
}

/// Parameter grids for the corollary audit. Every list may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryGrid {
    pub lambdas: Vec<f64>,
    /// Symmetric-node parameter, within `[1/2, 1]`.
    pub deltas: Vec<f64>,
    /// Single-node position parameter, within `[0, 1]`.
    pub node_deltas: Vec<f64>,
    pub etas: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Node positions as fractions of the interval.
    pub node_fractions: Vec<f64>,
    pub random_witnesses: usize,
    pub seed: u64,
}

impl Default for CorollaryGrid {
    fn default() -> Self {
        CorollaryGrid {
            lambdas: vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0],
            deltas: vec![0.5, 0.6, 0.75, 0.9, 1.0],
            node_deltas: vec![0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0],
            etas: vec![0.0, 0.2, 0.4, 0.6],
            thetas: vec![0.0, 0.25, 1.0 / 3.0, 0.5, 0.75, 1.0],
            node_fractions: vec![0.0, 0.2, 0.5, 0.7, 1.0],
            random_witnesses: 8,
            seed: 42,
        }
    }
}

impl CorollaryGrid {
    pub fn empty() -> Self {
        CorollaryGrid {
            lambdas: vec![],
            deltas: vec![],
            node_deltas: vec![],
            etas: vec![],
            thetas: vec![],
            node_fractions: vec![],
            random_witnesses: 0,
            seed: 0,
        }
    }
}

/// One specialized inequality at one parameter point.
#[derive(Debug, Clone)]
struct Instance {
    id: &'static str,
    params: BTreeMap<String, f64>,
    /// The functional the theorem actually covers.
    derived: WeightedFunctional,
    /// The left-hand side as printed.
    literal: WeightedFunctional,
    /// Per unit Lipschitz constant.
    theorem_bound: f64,
    printed_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryOutcome {
    pub formula_id: String,
    pub params: BTreeMap<String, f64>,
    pub printed_bound: f64,
    pub theorem_bound: f64,
    pub bounds_agree: bool,
    /// Witness with the largest gap-to-bound ratio against the bound used.
    pub worst: GapResult,
    pub worst_witness: String,
    pub witnesses: usize,
    pub violations: usize,
    pub literal_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub outcomes: Vec<CorollaryOutcome>,
    /// One entry per formula, kind and order, at the worst parameter point.
    pub errata: Vec<ErratumEntry>,
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn coeff_bound(interval: Interval, order: Order, coeff: f64) -> f64 {
    coeff * interval.len() / (order.value() + 1.0)
}

fn instances(interval: Interval, order: Order, grid: &CorollaryGrid) -> Result<Vec<Instance>> {
    let al = order.value();
    let (a, b) = (interval.a(), interval.b());
    let len = interval.len();
    let mid = 0.5 * (a + b);
    let unit_hadamard = |c: &HadamardConfig| hadamard_bound(c, 1.0);
    let unit_bullen = |c: &BullenConfig| bullen_bound(c, 1.0);
    let same = |c: &HadamardConfig| WeightedFunctional::hadamard(c);
    let mut out = Vec::new();

    for &lam in &grid.lambdas {
        for &delta in &grid.deltas {
            let c = HadamardConfig::new(
                interval,
                order,
                lam,
                interval.lerp(1.0 - delta),
                interval.lerp(delta),
            )?;
            out.push(Instance {
                id: "symmetric-nodes",
                params: params(&[("alpha", al), ("lambda", lam), ("delta", delta)]),
                derived: same(&c),
                literal: same(&c),
                theorem_bound: unit_hadamard(&c)?,
                printed_bound: coeff_bound(interval, order, l_coeff(order, lam, delta)?),
            });
        }
    }

    for &w in &grid.node_fractions {
        let x = interval.lerp(w);
        let c = HadamardConfig::new(interval, order, w, x, x)?;
        out.push(Instance {
            id: "split-node",
            params: params(&[("alpha", al), ("x", x)]),
            derived: same(&c),
            literal: same(&c),
            theorem_bound: unit_hadamard(&c)?,
            printed_bound: node_bound(interval, order, x)?,
        });
    }

    for &lam in &grid.lambdas {
        let c = HadamardConfig::new(interval, order, lam, a, b)?;
        out.push(Instance {
            id: "endpoint-weighted",
            params: params(&[("alpha", al), ("lambda", lam)]),
            derived: same(&c),
            literal: same(&c),
            theorem_bound: unit_hadamard(&c)?,
            printed_bound: coeff_bound(interval, order, endpoint_weighted_coeff(order, lam)?),
        });
    }

    for &w in &grid.node_fractions {
        let x = interval.lerp(w);
        let lam = (x - a) / len;
        let c = HadamardConfig::new(interval, order, lam, a, b)?;
        let literal = WeightedFunctional::new(
            interval,
            order,
            vec![a, b],
            vec![
                (x - a).powf(al) / len.powf(al),
                (b - x).powf(al) / len.powf(al),
            ],
            Panels::Two { split: x },
            1.0,
        )?;
        out.push(Instance {
            id: "endpoint-weighted-at-point",
            params: params(&[("alpha", al), ("x", x)]),
            derived: same(&c),
            literal,
            theorem_bound: unit_hadamard(&c)?,
            printed_bound: al * node_bound(interval, order, x)?,
        });
    }

    // the single node sits at the split point, so lambda = 1 - delta
    for &delta in &grid.node_deltas {
        let x = interval.lerp(1.0 - delta);
        let c = HadamardConfig::new(interval, order, 1.0 - delta, x, x)?;
        out.push(Instance {
            id: "single-node",
            params: params(&[("alpha", al), ("delta", delta)]),
            derived: same(&c),
            literal: same(&c),
            theorem_bound: unit_hadamard(&c)?,
            printed_bound: len * single_node_coeff(order, delta)? / (al + 1.0),
        });
    }

    let half_scale = 2f64.powf(al - 1.0);
    for &delta in &grid.node_deltas {
        let x = interval.lerp(1.0 - delta);
        let c = HadamardConfig::new(interval, order, 0.5, x, x)?;
        let literal = WeightedFunctional::new(
            interval,
            order,
            vec![x],
            vec![1.0],
            Panels::Two { split: mid },
            half_scale,
        )?;
        let derived = same(&c).times(half_scale);
        out.push(Instance {
            id: "single-node-midpoint-split",
            params: params(&[("alpha", al), ("delta", delta)]),
            derived: WeightedFunctional {
                nodes: vec![x],
                weights: vec![derived.weights.iter().sum()],
                ..derived
            },
            literal,
            theorem_bound: half_scale * unit_hadamard(&c)?,
            printed_bound: half_scale * len * single_node_coeff(order, delta)? / (al + 1.0),
        });
    }

    if !grid.lambdas.is_empty() || !grid.node_fractions.is_empty() {
        let (x, y) = (interval.lerp(0.25), interval.lerp(0.75));
        let c = HadamardConfig::new(interval, order, 0.5, x, y)?;
        let literal = WeightedFunctional::new(
            interval,
            order,
            vec![x, y],
            vec![0.5, 0.5],
            Panels::Two { split: mid },
            half_scale,
        )?;
        out.push(Instance {
            id: "quartile-pair",
            params: params(&[("alpha", al)]),
            derived: same(&c).times(half_scale),
            literal,
            theorem_bound: half_scale * unit_hadamard(&c)?,
            printed_bound: coeff_bound(interval, order, quartile_pair_coeff(order)),
        });
    }

    for &lam in &grid.lambdas {
        for &eta in &grid.etas {
            if lam + eta > 1.0 {
                continue;
            }
            for &delta in &grid.deltas {
                let nodes = (interval.lerp(1.0 - delta), mid, interval.lerp(delta));
                let c = BullenConfig::from_lambda_eta(interval, order, lam, eta, nodes)?;
                let f = WeightedFunctional::bullen(&c);
                out.push(Instance {
                    id: "three-node-symmetric",
                    params: params(&[
                        ("alpha", al),
                        ("lambda", lam),
                        ("eta", eta),
                        ("delta", delta),
                    ]),
                    derived: f.clone(),
                    literal: f,
                    theorem_bound: unit_bullen(&c)?,
                    printed_bound: coeff_bound(interval, order, n_coeff(order, lam, eta, delta)?),
                });
            }
        }
    }

    for &theta in &grid.thetas {
        let c = BullenConfig::new(
            interval,
            order,
            theta / 2.0,
            1.0 - theta,
            theta / 2.0,
            a,
            mid,
            b,
        )?;
        let f = WeightedFunctional::bullen(&c);
        out.push(Instance {
            id: "endpoint-midpoint",
            params: params(&[("alpha", al), ("theta", theta)]),
            derived: f.clone(),
            literal: f,
            theorem_bound: unit_bullen(&c)?,
            printed_bound: coeff_bound(interval, order, weighted_bullen_coeff(order, theta)?),
        });
    }

    if !grid.thetas.is_empty() {
        // printed scales: 2^(α-1) and 6^(α-1) on the fractional part
        for (id, theta, s, weights, printed) in [
            (
                "quarter-node-bullen",
                0.5,
                half_scale,
                [0.25, 0.5, 0.25],
                bullen_quarter_coeff(order),
            ),
            (
                "simpson",
                1.0 / 3.0,
                6f64.powf(al - 1.0),
                [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
                simpson_coeff(order),
            ),
        ] {
            let c = BullenConfig::new(
                interval,
                order,
                theta / 2.0,
                1.0 - theta,
                theta / 2.0,
                a,
                mid,
                b,
            )?;
            let (v1, v2) = c.nodes();
            let literal = WeightedFunctional::new(
                interval,
                order,
                vec![a, mid, b],
                weights.to_vec(),
                Panels::Three { v1, v2 },
                s,
            )?;
            out.push(Instance {
                id,
                params: params(&[("alpha", al), ("theta", theta)]),
                derived: WeightedFunctional::bullen(&c).times(s),
                literal,
                theorem_bound: s * unit_bullen(&c)?,
                printed_bound: coeff_bound(interval, order, printed),
            });
        }
    }

    let fr = &grid.node_fractions;
    for &lam in &grid.lambdas {
        for &eta in &grid.etas {
            if lam + eta > 1.0 {
                continue;
            }
            for i in 0..fr.len() {
                for j in i..fr.len() {
                    for k in j..fr.len() {
                        let mut t = [fr[i], fr[j], fr[k]];
                        t.sort_by(f64::total_cmp);
                        let nodes = (
                            interval.lerp(t[0]),
                            interval.lerp(t[1]),
                            interval.lerp(t[2]),
                        );
                        let c = BullenConfig::from_lambda_eta(interval, order, lam, eta, nodes)?;
                        let v = v_bullen(&c)?;
                        let scale = al / len.powf(al);
                        let f = WeightedFunctional::bullen(&c);
                        out.push(Instance {
                            id: "three-node-table",
                            params: params(&[
                                ("alpha", al),
                                ("lambda", lam),
                                ("eta", eta),
                                ("x", nodes.0),
                                ("y", nodes.1),
                                ("z", nodes.2),
                            ]),
                            derived: f.clone(),
                            literal: f,
                            theorem_bound: scale * v.total(),
                            printed_bound: scale * v.printed_total(),
                        });
                    }
                }
            }
        }
    }

    if al == 1.0 {
        for &lam in &grid.lambdas {
            for i in 0..fr.len() {
                for j in i..fr.len() {
                    let (x, y) = (
                        interval.lerp(fr[i].min(fr[j])),
                        interval.lerp(fr[i].max(fr[j])),
                    );
                    let c = HadamardConfig::new(interval, order, lam, x, y)?;
                    out.push(Instance {
                        id: "classical-two-node",
                        params: params(&[("alpha", al), ("lambda", lam), ("x", x), ("y", y)]),
                        derived: same(&c),
                        literal: same(&c),
                        theorem_bound: unit_hadamard(&c)?,
                        printed_bound: classical_table(interval, lam, x, y)? / len,
                    });
                }
            }
        }
    }

    Ok(out)
}

fn witnesses(
    inst: &Instance,
    interval: Interval,
    grid: &CorollaryGrid,
    stream: u64,
) -> Result<Vec<(String, LipschitzWitness)>> {
    let mut out = vec![(
        "constant".to_string(),
        LipschitzWitness::new(PiecewiseLinearFunction::constant(interval, 1.0)),
    )];
    if let Ok(tent) = inst.derived.panel_tent() {
        out.push(("panel-tent".to_string(), LipschitzWitness::new(tent)));
    }
    let mut seen: Vec<f64> = Vec::new();
    for &p in inst.derived.nodes().iter().chain(inst.literal.nodes()) {
        if seen.contains(&p) {
            continue;
        }
        seen.push(p);
        out.push((
            format!("tent@{p}"),
            LipschitzWitness::new(PiecewiseLinearFunction::tent(interval, p)?),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    rng.set_stream(stream);
    for r in 0..grid.random_witnesses {
        let w = random_lipschitz_with(&mut rng, interval, DEFAULT_SEGMENTS, DEFAULT_M_MAX)?;
        out.push((format!("random#{stream}.{r}"), w));
    }
    Ok(out)
}

struct InstanceRun {
    outcome: CorollaryOutcome,
    errata: Vec<ErratumEntry>,
}

fn run_instance(
    inst: &Instance,
    interval: Interval,
    grid: &CorollaryGrid,
    stream: u64,
) -> Result<InstanceRun> {
    let t = inst.theorem_bound;
    let p = inst.printed_bound;
    let bounds_agree = (p - t).abs() <= AGREEMENT_RTOL * t.abs().max(1.0);
    let used = if bounds_agree { p.min(t) } else { t };
    let mut errata = Vec::new();
    if (p - t).abs() > ERRATUM_THRESHOLD {
        errata.push(ErratumEntry {
            formula_id: inst.id.to_string(),
            kind: ErratumKind::BoundMismatch,
            max_abs_deviation: (p - t).abs(),
            params: inst.params.clone(),
            witness: None,
        });
    }
    let wdev = inst.derived.weight_deviation(&inst.literal);
    if wdev > ERRATUM_THRESHOLD {
        errata.push(ErratumEntry {
            formula_id: inst.id.to_string(),
            kind: ErratumKind::WeightMismatch,
            max_abs_deviation: wdev,
            params: inst.params.clone(),
            witness: None,
        });
    }

    let mut worst: Option<(GapResult, String)> = None;
    let mut violations = 0;
    let mut literal_violations = 0;
    let mut literal_worst: Option<(f64, String)> = None;
    let ws = witnesses(inst, interval, grid, stream)?;
    for (label, w) in &ws {
        let m = w.constant();
        let r = verify(inst.derived.gap(w.function())?, m * used);
        if !r.passed {
            violations += 1;
        }
        let key = |g: &GapResult| g.ratio.unwrap_or(f64::INFINITY);
        if worst.as_ref().is_none_or(|(g, _)| key(&r) > key(g)) {
            worst = Some((r, label.clone()));
        }
        let lit = inst.literal.gap(w.function())?;
        let printed = m * p;
        if lit > printed + slack(printed) {
            literal_violations += 1;
            let excess = lit - printed;
            if literal_worst.as_ref().is_none_or(|(e, _)| excess > *e) {
                literal_worst = Some((excess, label.clone()));
            }
        }
    }
    if let Some((excess, label)) = literal_worst {
        if excess > ERRATUM_THRESHOLD {
            errata.push(ErratumEntry {
                formula_id: inst.id.to_string(),
                kind: ErratumKind::LiteralViolation,
                max_abs_deviation: excess,
                params: inst.params.clone(),
                witness: Some(label),
            });
        }
    }
    let (worst, worst_witness) = worst.expect("witness list is never empty");
    Ok(InstanceRun {
        outcome: CorollaryOutcome {
            formula_id: inst.id.to_string(),
            params: inst.params.clone(),
            printed_bound: p,
            theorem_bound: t,
            bounds_agree,
            worst,
            worst_witness,
            witnesses: ws.len(),
            violations,
            literal_violations,
        },
        errata,
    })
}

/// Evaluates every specialized inequality over the grid at one order.
///
/// For each instance the theorem functional is tested against the smaller
/// of the printed and theorem-level bounds when they agree, and against the
/// theorem-level bound otherwise. The printed left-hand side is separately
/// tested against the printed bound; failures there, and any disagreement
/// between printed and theorem-level quantities, become errata. Errata are
/// reduced to the worst parameter point per formula and kind.
pub fn corollary_suite(
    interval: Interval,
    order: Order,
    grid: &CorollaryGrid,
) -> Result<SuiteResult> {
    corollary_suite_from(interval, order, grid, 0)
}

/// [`corollary_suite`] with random-witness streams numbered from `first_stream`,
/// so several orders can share one seed without sharing witnesses.
pub fn corollary_suite_from(
    interval: Interval,
    order: Order,
    grid: &CorollaryGrid,
    first_stream: u64,
) -> Result<SuiteResult> {
    let insts = instances(interval, order, grid)?;
    let runs: Vec<InstanceRun> = insts
        .par_iter()
        .enumerate()
        .map(|(i, inst)| run_instance(inst, interval, grid, first_stream + i as u64))
        .collect::<Result<_>>()?;

    let mut worst: BTreeMap<(String, ErratumKind), ErratumEntry> = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(runs.len());
    for run in runs {
        outcomes.push(run.outcome);
        for e in run.errata {
            let key = (e.formula_id.clone(), e.kind);
            match worst.get(&key) {
                Some(cur) if cur.max_abs_deviation >= e.max_abs_deviation => {}
                _ => {
                    worst.insert(key, e);
                }
            }
        }
    }
    Ok(SuiteResult {
        outcomes,
        errata: worst.into_values().collect(),
    })
}

/// Number of instances [`corollary_suite`] would evaluate.
pub fn corollary_instance_count(
    interval: Interval,
    order: Order,
    grid: &CorollaryGrid,
) -> Result<usize> {
    Ok(instances(interval, order, grid)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lip_corpus::random_lipschitz;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ord(a: f64) -> Order {
        Order::new(a).unwrap()
    }

    fn unit() -> Interval {
        Interval::unit()
    }

    #[test]
    fn verify_contract() {
        let r = verify(0.0, 0.0);
        assert!(r.passed);
        assert_eq!(r.ratio, Some(0.0));
        let r = verify(0.4714045, 0.4714045);
        assert!(r.passed);
        assert_relative_eq!(r.ratio.unwrap(), 1.0);
        let r = verify(1.0, 0.5);
        assert!(!r.passed);
        assert_eq!(r.ratio, Some(2.0));
        let r = verify(1.0, 0.0);
        assert!(!r.passed);
        assert_eq!(r.ratio, None);
        assert!(verify(0.5 + 1e-10, 0.5).passed);
    }

    #[test]
    fn sharpness_golden() {
        let c = HadamardConfig::new(unit(), ord(0.5), 0.5, 0.5, 0.5).unwrap();
        let w = LipschitzWitness::new(PiecewiseLinearFunction::tent(unit(), 0.5).unwrap());
        let gap = hadamard_gap(&c, &w).unwrap();
        let bound = hadamard_bound(&c, w.constant()).unwrap();
        let want = 2f64.sqrt() / 3.0;
        assert!((gap - want).abs() < 1e-14);
        assert!((bound - want).abs() < 1e-14);
        let quad =
            hadamard_gap_quadrature(&c, w.function(), &QuadratureSettings::default()).unwrap();
        assert!((quad - want).abs() < 1e-10);
    }

    #[test]
    fn constant_witness_has_zero_gap() {
        let w = LipschitzWitness::new(PiecewiseLinearFunction::constant(unit(), 3.7));
        for al in [0.5, 1.0, 1.5, 2.0] {
            let c = HadamardConfig::new(unit(), ord(al), 0.3, 0.1, 0.8).unwrap();
            assert!(hadamard_gap(&c, &w).unwrap() < 1e-14);
            let c = BullenConfig::new(unit(), ord(al), 0.2, 0.5, 0.3, 0.1, 0.4, 0.8).unwrap();
            assert!(bullen_gap(&c, &w).unwrap() < 1e-14);
        }
    }

    #[test]
    fn unit_order_midpoint_is_classical_midpoint_deviation() {
        let i = Interval::new(-1.0, 2.0).unwrap();
        let f = random_lipschitz(11, i, 6, 2.0).unwrap();
        let c = HadamardConfig::new(i, ord(1.0), 0.5, 0.5, 0.5).unwrap();
        let g = hadamard_gap(&c, &f).unwrap();
        let mean = crate::lip_corpus::exact_rl_left(f.function(), ord(1.0), 2.0).unwrap() / 3.0;
        assert_relative_eq!(g, (f.function().eval(0.5) - mean).abs(), epsilon = 1e-14);
    }

    #[test]
    fn unit_order_bullen_is_classical_bullen_deviation() {
        let i = Interval::new(0.0, 2.0).unwrap();
        let f = random_lipschitz(12, i, 6, 2.0).unwrap();
        let c = BullenConfig::new(i, ord(1.0), 0.25, 0.5, 0.25, 0.0, 1.0, 2.0).unwrap();
        let g = bullen_gap(&c, &f).unwrap();
        let fe = |t| f.function().eval(t);
        let mean = crate::lip_corpus::exact_rl_left(f.function(), ord(1.0), 2.0).unwrap() / 2.0;
        let classical = 0.5 * ((fe(0.0) + fe(2.0)) / 2.0 + fe(1.0)) - mean;
        assert_relative_eq!(g, classical.abs(), epsilon = 1e-14);
    }

    #[test]
    fn bounds_vanish_for_zero_constant() {
        let c = HadamardConfig::new(unit(), ord(0.7), 0.3, 0.1, 0.8).unwrap();
        assert_eq!(hadamard_bound(&c, 0.0).unwrap(), 0.0);
        let c = BullenConfig::new(unit(), ord(0.7), 0.2, 0.5, 0.3, 0.1, 0.4, 0.8).unwrap();
        assert_eq!(bullen_bound(&c, 0.0).unwrap(), 0.0);
        assert!(bullen_bound(&c, -1.0).is_err());
    }

    #[test]
    fn single_panel_bound() {
        let c = BullenConfig::new(unit(), ord(0.6), 0.0, 1.0, 0.0, 0.3, 0.3, 0.3).unwrap();
        let mid = crate::bound_formulas::abs_moment_mid_closed(0.3, 0.0, 1.0, ord(0.6)).unwrap();
        assert_relative_eq!(
            bullen_bound(&c, 2.0).unwrap(),
            0.6 * 2.0 * mid,
            max_relative = 1e-14
        );
    }

    #[test]
    fn panel_tent_attains_interior_cases() {
        for al in [0.5, 1.0, 1.5, 2.0] {
            let c = HadamardConfig::new(unit(), ord(al), 0.4, 0.2, 0.7).unwrap();
            let f = WeightedFunctional::hadamard(&c);
            let w = LipschitzWitness::new(f.panel_tent().unwrap());
            let r = verify(
                f.gap(w.function()).unwrap(),
                hadamard_bound(&c, w.constant()).unwrap(),
            );
            assert!(
                (r.ratio.unwrap() - 1.0).abs() < 1e-12,
                "alpha {al}: {:?}",
                r
            );

            let c = BullenConfig::new(unit(), ord(al), 0.3, 0.4, 0.3, 0.1, 0.5, 0.9).unwrap();
            let f = WeightedFunctional::bullen(&c);
            let w = LipschitzWitness::new(f.panel_tent().unwrap());
            let r = verify(
                f.gap(w.function()).unwrap(),
                bullen_bound(&c, w.constant()).unwrap(),
            );
            assert!(
                (r.ratio.unwrap() - 1.0).abs() < 1e-12,
                "alpha {al}: {:?}",
                r
            );
        }
    }

    #[test]
    fn split_node_tent_is_sharp() {
        for al in [0.5, 1.0, 1.5, 2.0] {
            for lam in [0.2, 0.5, 0.8] {
                let c = HadamardConfig::new(unit(), ord(al), lam, lam, lam).unwrap();
                let w = LipschitzWitness::new(PiecewiseLinearFunction::tent(unit(), lam).unwrap());
                let r = verify(
                    hadamard_gap(&c, &w).unwrap(),
                    node_bound(unit(), ord(al), lam).unwrap(),
                );
                assert!(
                    r.ratio.unwrap() >= 0.999999,
                    "alpha {al}, lambda {lam}: {:?}",
                    r
                );
            }
        }
    }

    #[test]
    fn empty_grid_gives_empty_suite() {
        let r = corollary_suite(unit(), ord(1.0), &CorollaryGrid::empty()).unwrap();
        assert!(r.outcomes.is_empty());
        assert!(r.errata.is_empty());
    }

    #[test]
    fn suite_has_no_theorem_violations_and_flags_known_misprints() {
        let grid = CorollaryGrid::default();
        for al in [0.5, 1.0, 2.0] {
            let r = corollary_suite(unit(), ord(al), &grid).unwrap();
            let bad: Vec<_> = r.outcomes.iter().filter(|o| o.violations > 0).collect();
            assert!(bad.is_empty(), "alpha {al}: {bad:?}");
            let ids: Vec<(&str, ErratumKind)> = r
                .errata
                .iter()
                .map(|e| (e.formula_id.as_str(), e.kind))
                .collect();
            assert!(ids.contains(&("three-node-table", ErratumKind::BoundMismatch)));
            assert!(ids.contains(&("three-node-symmetric", ErratumKind::BoundMismatch)));
            for consistent in [
                "symmetric-nodes",
                "split-node",
                "endpoint-weighted",
                "endpoint-weighted-at-point",
                "single-node",
                "endpoint-midpoint",
                "quartile-pair",
            ] {
                assert!(
                    !ids.iter().any(|(id, _)| *id == consistent),
                    "alpha {al}: {consistent} flagged"
                );
            }
            if al == 1.0 {
                assert!(ids.contains(&("classical-two-node", ErratumKind::BoundMismatch)));
                for id in [
                    "simpson",
                    "quarter-node-bullen",
                    "single-node-midpoint-split",
                ] {
                    assert!(
                        !ids.iter().any(|(i, _)| *i == id),
                        "{id} flagged at unit order"
                    );
                }
            } else {
                assert!(ids.contains(&("single-node-midpoint-split", ErratumKind::BoundMismatch)));
                assert!(ids.contains(&("simpson", ErratumKind::BoundMismatch)));
                assert!(ids.contains(&("simpson", ErratumKind::WeightMismatch)));
                assert!(ids.contains(&("quarter-node-bullen", ErratumKind::WeightMismatch)));
                assert!(ids.contains(&("quarter-node-bullen", ErratumKind::LiteralViolation)));
                assert!(!ids.contains(&("quarter-node-bullen", ErratumKind::BoundMismatch)));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn soundness(seed in any::<u64>(), al in 0.1f64..3.0, w in prop::array::uniform2(0.0f64..=1.0), n in prop::array::uniform3(0.0f64..=1.0)) {
            let f = random_lipschitz(seed, unit(), 6, 2.0).unwrap();
            let mut n = n;
            n.sort_by(f64::total_cmp);
            let c = HadamardConfig::new(unit(), ord(al), w[0], n[0], n[2]).unwrap();
            prop_assert!(verify(hadamard_gap(&c, &f).unwrap(), hadamard_bound(&c, f.constant()).unwrap()).passed);
            let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            let c = BullenConfig::new(unit(), ord(al), lo, hi - lo, 1.0 - hi, n[0], n[1], n[2]).unwrap();
            prop_assert!(verify(bullen_gap(&c, &f).unwrap(), bullen_bound(&c, f.constant()).unwrap()).passed);
        }

        #[test]
        fn exact_and_quadrature_gaps_agree(seed in any::<u64>(), al in 0.2f64..3.0, w in prop::array::uniform2(0.0f64..=1.0), n in prop::array::uniform3(0.0f64..=1.0)) {
            let s = QuadratureSettings::default();
            let f = random_lipschitz(seed, unit(), 6, 2.0).unwrap();
            let mut n = n;
            n.sort_by(f64::total_cmp);
            let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            let c = BullenConfig::new(unit(), ord(al), lo, hi - lo, 1.0 - hi, n[0], n[1], n[2]).unwrap();
            let e = bullen_gap(&c, &f).unwrap();
            let q = bullen_gap_quadrature(&c, f.function(), &s).unwrap();
            prop_assert!((e - q).abs() <= 1e-8 * e.abs().max(1e-2), "{e} vs {q}");
            let c = HadamardConfig::new(unit(), ord(al), w[0], n[0], n[2]).unwrap();
            let e = hadamard_gap(&c, &f).unwrap();
            let q = hadamard_gap_quadrature(&c, f.function(), &s).unwrap();
            prop_assert!((e - q).abs() <= 1e-8 * e.abs().max(1e-2), "{e} vs {q}");
        }

        #[test]
        fn shift_and_scale_behave(seed in any::<u64>(), al in 0.2f64..3.0, lam in 0.0f64..=1.0, n in prop::array::uniform2(0.0f64..=1.0), shift in -50.0f64..50.0, s in 0.1f64..10.0) {
            let f = random_lipschitz(seed, unit(), 6, 2.0).unwrap();
            let (x, y) = if n[0] <= n[1] { (n[0], n[1]) } else { (n[1], n[0]) };
            let c = HadamardConfig::new(unit(), ord(al), lam, x, y).unwrap();
            let g = hadamard_gap(&c, &f).unwrap();
            let shifted = hadamard_gap(&c, &LipschitzWitness::new(f.function().shifted(shift))).unwrap();
            prop_assert!((g - shifted).abs() <= 1e-12 * (1.0 + shift.abs()));
            let scaled = LipschitzWitness::new(f.function().scaled(s));
            let gs = hadamard_gap(&c, &scaled).unwrap();
            prop_assert!((gs - s * g).abs() <= 1e-12 * s * (1.0 + g));
            let b = hadamard_bound(&c, f.constant()).unwrap();
            let bs = hadamard_bound(&c, s * f.constant()).unwrap();
            prop_assert!((bs - s * b).abs() <= 1e-12 * s * b.max(1e-300));
        }
    }
}
