//! Closed-form bound functions for the two- and three-node fractional
//! inequalities.
//!
//! Every bound is a sum of weighted absolute moments
//! `∫ |node - t| K(t) dt` over the panels `[a, V]`, `[V1, V2]` and `[V, b]`.
//! Each bound function is evaluated twice: once as the case-by-case table of
//! printed closed forms, once by assembling the moment identities below. The
//! assembly is the value that is returned; the table is kept alongside it so
//! that disagreements can be reported.

use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::frac_quad::{pow0, Interval, Order};

/// Relative tolerance for the printed table against the moment assembly.
pub const DUAL_PATH_RTOL: f64 = 1e-12;
/// Tolerance used when checking weights that should sum to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[inline]
fn two_over(al: f64) -> f64 {
    2.0 / (al * (al + 1.0))
}

/// `∫_a^V |x - t| (t - a)^(α-1) dt` for `x ≥ a`.
pub fn abs_moment_left_closed(x: f64, anchor_a: f64, upper_v: f64, order: Order) -> Result<f64> {
    if !(anchor_a <= upper_v) {
        return domain(format!("left panel [{anchor_a}, {upper_v}] is reversed"));
    }
    if !(x >= anchor_a) {
        return domain(format!("node {x} lies below the kernel anchor {anchor_a}"));
    }
    let al = order.value();
    let w = upper_v - anchor_a;
    let xr = x - anchor_a;
    Ok(if x >= upper_v {
        pow0(w, al) * (xr / al - w / (al + 1.0))
    } else {
        two_over(al) * pow0(xr, al + 1.0) + pow0(w, al) * (w / (al + 1.0) - xr / al)
    })
}

/// `∫_V^b |y - t| (b - t)^(α-1) dt` for `y ≤ b`.
pub fn abs_moment_right_closed(y: f64, lower_v: f64, anchor_b: f64, order: Order) -> Result<f64> {
    if !(lower_v <= anchor_b) {
        return domain(format!("right panel [{lower_v}, {anchor_b}] is reversed"));
    }
    if !(y <= anchor_b) {
        return domain(format!("node {y} lies above the kernel anchor {anchor_b}"));
    }
    let al = order.value();
    let w = anchor_b - lower_v;
    let yr = anchor_b - y;
    Ok(if y <= lower_v {
        pow0(w, al) * (yr / al - w / (al + 1.0))
    } else {
        two_over(al) * pow0(yr, al + 1.0) + pow0(w, al) * (w / (al + 1.0) - yr / al)
    })
}

/// `∫_V1^V2 |y - t| (V2 - t)^(α-1) dt` for any real `y`.
pub fn abs_moment_mid_closed(y: f64, v1: f64, v2: f64, order: Order) -> Result<f64> {
    if !(v1 <= v2) {
        return domain(format!("middle panel requires v1 <= v2, got [{v1}, {v2}]"));
    }
    let al = order.value();
    let w = v2 - v1;
    let yr = v2 - y;
    Ok(if y >= v2 {
        pow0(w, al) * ((y - v2) / al + w / (al + 1.0))
    } else if y >= v1 {
        two_over(al) * pow0(yr, al + 1.0) + pow0(w, al) * (w / (al + 1.0) - yr / al)
    } else {
        pow0(w, al) * (yr / al - w / (al + 1.0))
    })
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return domain(format!("{name} = {v} outside [0, 1]"));
    }
    Ok(())
}

/// Parameters of the two-node inequality: nodes `x ≤ y` weighted by
/// `λ^α` and `(1-λ)^α`, split point `V = (1-λ) a + λ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HadamardConfig {
    interval: Interval,
    order: Order,
    lambda: f64,
    x: f64,
    y: f64,
}

impl HadamardConfig {
    pub fn new(interval: Interval, order: Order, lambda: f64, x: f64, y: f64) -> Result<Self> {
        check_unit("lambda", lambda)?;
        if !(interval.a() <= x && x <= y && y <= interval.b()) {
            return domain(format!(
                "nodes must satisfy a <= x <= y <= b, got x={x}, y={y} on [{}, {}]",
                interval.a(),
                interval.b()
            ));
        }
        Ok(HadamardConfig {
            interval,
            order,
            lambda,
            x,
            y,
        })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }
    pub fn order(&self) -> Order {
        self.order
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }

    /// The split point `V`.
    pub fn node(&self) -> f64 {
        let (a, b) = (self.interval.a(), self.interval.b());
        ((1.0 - self.lambda) * a + self.lambda * b).clamp(a, b)
    }

    pub fn case(&self) -> CaseTag {
        let v = self.node();
        CaseTag::Hadamard(if v <= self.x {
            1
        } else if v <= self.y {
            2
        } else {
            3
        })
    }

    pub fn with_order(&self, order: Order) -> Self {
        HadamardConfig { order, ..*self }
    }

    /// Same configuration carried to another interval by the increasing
    /// affine map between the two.
    pub fn mapped_to(&self, target: Interval) -> Result<Self> {
        let map = affine(self.interval, target);
        HadamardConfig::new(
            target,
            self.order,
            self.lambda,
            map(self.x),
            map(self.y).max(map(self.x)),
        )
    }
}

fn affine(from: Interval, to: Interval) -> impl Fn(f64) -> f64 {
    move |t| {
        let w = (t - from.a()) / from.len();
        to.lerp(w).clamp(to.a(), to.b())
    }
}

/// Parameters of the three-node inequality: nodes `x ≤ y ≤ z` weighted by
/// `λ^α, η^α, μ^α`, split points `V1 = (1-λ) a + λ b` and
/// `V2 = μ a + (λ+η) b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BullenConfig {
    interval: Interval,
    order: Order,
    lambda: f64,
    eta: f64,
    mu: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl BullenConfig {
    /// The weights must sum to one within `1e-12`; they are renormalized to
    /// remove the residue.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        interval: Interval,
        order: Order,
        lambda: f64,
        eta: f64,
        mu: f64,
        x: f64,
        y: f64,
        z: f64,
    ) -> Result<Self> {
        check_unit("lambda", lambda)?;
        check_unit("eta", eta)?;
        check_unit("mu", mu)?;
        let sum = lambda + eta + mu;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return domain(format!("weights sum to {sum}, expected 1"));
        }
        if !(interval.a() <= x && x <= y && y <= z && z <= interval.b()) {
            return domain(format!(
                "nodes must satisfy a <= x <= y <= z <= b, got x={x}, y={y}, z={z} on [{}, {}]",
                interval.a(),
                interval.b()
            ));
        }
        Ok(BullenConfig {
            interval,
            order,
            lambda: lambda / sum,
            eta: eta / sum,
            mu: mu / sum,
            x,
            y,
            z,
        })
    }

    /// Shorthand taking `μ = 1 - λ - η`.
    pub fn from_lambda_eta(
        interval: Interval,
        order: Order,
        lambda: f64,
        eta: f64,
        nodes: (f64, f64, f64),
    ) -> Result<Self> {
        let mu = 1.0 - lambda - eta;
        let mu = if mu < 0.0 && mu > -WEIGHT_SUM_TOL {
            0.0
        } else {
            mu
        };
        BullenConfig::new(interval, order, lambda, eta, mu, nodes.0, nodes.1, nodes.2)
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }
    pub fn order(&self) -> Order {
        self.order
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    /// The split points `(V1, V2)`, with `a ≤ V1 ≤ V2 ≤ b` enforced against
    /// rounding.
    pub fn nodes(&self) -> (f64, f64) {
        let (a, b) = (self.interval.a(), self.interval.b());
        let v1 = ((1.0 - self.lambda) * a + self.lambda * b).clamp(a, b);
        let v2 = (self.mu * a + (self.lambda + self.eta) * b).clamp(v1, b);
        (v1, v2)
    }

    pub fn case(&self) -> CaseTag {
        let (v1, v2) = self.nodes();
        let (x, y, z) = (self.x, self.y, self.z);
        CaseTag::Bullen(if v1 <= x {
            if v2 <= y {
                1
            } else if v2 <= z {
                2
            } else {
                3
            }
        } else if v1 <= y {
            if v2 <= y {
                4
            } else if v2 <= z {
                5
            } else {
                6
            }
        } else if v2 <= z {
            7
        } else {
            8
        })
    }

    pub fn with_order(&self, order: Order) -> Self {
        BullenConfig { order, ..*self }
    }

    pub fn mapped_to(&self, target: Interval) -> Result<Self> {
        let map = affine(self.interval, target);
        let x = map(self.x);
        let y = map(self.y).max(x);
        let z = map(self.z).max(y);
        BullenConfig::new(target, self.order, self.lambda, self.eta, self.mu, x, y, z)
    }
}

/// Which ordering of the nodes against the split points a configuration
/// falls in. At exact ties the lower index wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseTag {
    Hadamard(u8),
    Bullen(u8),
}

impl CaseTag {
    pub fn index(self) -> u8 {
        match self {
            CaseTag::Hadamard(i) | CaseTag::Bullen(i) => i,
        }
    }

    pub fn ordering(self) -> &'static str {
        match self {
            CaseTag::Hadamard(1) => "V <= x <= y",
            CaseTag::Hadamard(2) => "x <= V <= y",
            CaseTag::Hadamard(3) => "x <= y <= V",
            CaseTag::Bullen(1) => "V1 <= x, V2 <= y",
            CaseTag::Bullen(2) => "V1 <= x <= y <= V2 <= z",
            CaseTag::Bullen(3) => "V1 <= x <= z <= V2",
            CaseTag::Bullen(4) => "x <= V1 <= V2 <= y",
            CaseTag::Bullen(5) => "x <= V1 <= y <= V2 <= z",
            CaseTag::Bullen(6) => "x <= V1 <= y <= z <= V2",
            CaseTag::Bullen(7) => "y <= V1 <= V2 <= z",
            CaseTag::Bullen(8) => "y <= V1, z <= V2",
            _ => "unknown",
        }
    }

    pub fn all_hadamard() -> impl Iterator<Item = CaseTag> {
        (1..=3).map(CaseTag::Hadamard)
    }

    pub fn all_bullen() -> impl Iterator<Item = CaseTag> {
        (1..=8).map(CaseTag::Bullen)
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseTag::Hadamard(i) => write!(f, "hadamard-{i}"),
            CaseTag::Bullen(i) => write!(f, "bullen-{i}"),
        }
    }
}

impl Serialize for CaseTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub name: &'static str,
    pub value: f64,
}

/// A bound function value split into its panel moments.
///
/// `total` is the moment assembly. `printed_total` is the case table value
/// for the same configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundBreakdown {
    case: CaseTag,
    terms: Vec<Term>,
    total: f64,
    printed_total: f64,
}

impl BoundBreakdown {
    pub fn case(&self) -> CaseTag {
        self.case
    }
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
    pub fn total(&self) -> f64 {
        self.total
    }
    pub fn printed_total(&self) -> f64 {
        self.printed_total
    }

    /// `printed_total - total`.
    pub fn printed_deviation(&self) -> f64 {
        self.printed_total - self.total
    }

    pub fn paths_agree(&self) -> bool {
        dual_paths_agree(self.printed_total, self.total)
    }
}

pub fn dual_paths_agree(printed: f64, assembled: f64) -> bool {
    (printed - assembled).abs() <= DUAL_PATH_RTOL * assembled.abs().max(1.0)
}

impl Serialize for BoundBreakdown {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.terms.len() + 3))?;
        m.serialize_entry("case", &self.case)?;
        for t in &self.terms {
            m.serialize_entry(t.name, &t.value)?;
        }
        m.serialize_entry("total", &self.total)?;
        m.serialize_entry("printed_total", &self.printed_total)?;
        m.end()
    }
}

fn hadamard_printed(c: &HadamardConfig, case: u8) -> f64 {
    let al = c.order.value();
    let (a, b, v, x, y) = (c.interval.a(), c.interval.b(), c.node(), c.x, c.y);
    let p = |u: f64| pow0(u, al);
    let k = two_over(al);
    match case {
        1 => {
            p(v - a) * ((x - a) / al - (v - a) / (al + 1.0))
                + k * pow0(b - y, al + 1.0)
                + p(b - v) * ((b - v) / (al + 1.0) - (b - y) / al)
        }
        2 => {
            k * pow0(x - a, al + 1.0)
                + p(v - a) * ((v - a) / (al + 1.0) - (x - a) / al)
                + k * pow0(b - y, al + 1.0)
                + p(b - v) * ((b - v) / (al + 1.0) - (b - y) / al)
        }
        _ => {
            k * pow0(x - a, al + 1.0)
                + p(v - a) * ((v - a) / (al + 1.0) - (x - a) / al)
                + p(b - v) * ((b - y) / al - (b - v) / (al + 1.0))
        }
    }
}

/// The two-node bound function `V(x, y)`.
///
/// Fails with [`Error::Inconsistency`] if the case table and the assembly
/// disagree, which cannot happen unless one of them is mistyped.
pub fn v_hadamard(config: &HadamardConfig) -> Result<BoundBreakdown> {
    let (a, b, v) = (config.interval.a(), config.interval.b(), config.node());
    let left = abs_moment_left_closed(config.x, a, v, config.order)?;
    let right = abs_moment_right_closed(config.y, v, b, config.order)?;
    let case = config.case();
    let total = left + right;
    let printed_total = hadamard_printed(config, case.index());
    if !dual_paths_agree(printed_total, total) {
        return Err(Error::Inconsistency {
            what: format!("two-node bound, {case}"),
            printed: printed_total,
            assembled: total,
        });
    }
    Ok(BoundBreakdown {
        case,
        terms: vec![
            Term {
                name: "left_moment",
                value: left,
            },
            Term {
                name: "right_moment",
                value: right,
            },
        ],
        total,
        printed_total,
    })
}

fn bullen_printed(c: &BullenConfig, case: u8) -> f64 {
    let al = c.order.value();
    let (a, b) = (c.interval.a(), c.interval.b());
    let (v1, v2) = c.nodes();
    let (x, y, z) = (c.x, c.y, c.z);
    let p = |u: f64| pow0(u, al);
    let k = two_over(al);

    let left_outer = || p(v1 - a) * ((x - a) / al - (v1 - a) / (al + 1.0));
    let left_inner =
        || k * pow0(x - a, al + 1.0) + p(v1 - a) * ((v1 - a) / (al + 1.0) - (x - a) / al);
    let mid_above = || p(v2 - v1) * ((y - v2) / al + (v2 - v1) / (al + 1.0));
    let mid_inner =
        || k * pow0(v2 - y, al + 1.0) + p(v2 - v1) * ((v2 - v1) / (al + 1.0) - (v2 - y) / al);
    // As tabulated for y below V1. The true moment is the negative of this.
    let mid_below = || p(v2 - v1) * ((v2 - v1) / (al + 1.0) - (v2 - y) / al);
    let right_inner =
        || k * pow0(b - z, al + 1.0) + p(b - v2) * ((b - v2) / (al + 1.0) - (b - z) / al);
    let right_outer = || p(b - v2) * ((b - z) / al - (b - v2) / (al + 1.0));

    match case {
        1 => left_outer() + mid_above() + right_inner(),
        2 => left_outer() + mid_inner() + right_inner(),
        3 => left_outer() + mid_inner() + right_outer(),
        4 => left_inner() + mid_above() + right_inner(),
        5 => left_inner() + mid_inner() + right_inner(),
        6 => left_inner() + mid_inner() + right_outer(),
        7 => left_inner() + mid_below() + right_inner(),
        _ => left_inner() + mid_below() + right_outer(),
    }
}

/// Cases whose tabulated middle-panel term has the wrong sign.
pub const BULLEN_TABLE_SIGN_CASES: [u8; 2] = [7, 8];

/// The three-node bound function `V(x, y, z)`.
///
/// In cases 7 and 8 the tabulated form carries the middle moment with the
/// opposite sign, so there `printed_total` differs from `total` by twice
/// that moment; the assembly is returned and the difference is left for the
/// caller to report. Any other disagreement is an [`Error::Inconsistency`].
pub fn v_bullen(config: &BullenConfig) -> Result<BoundBreakdown> {
    let (a, b) = (config.interval.a(), config.interval.b());
    let (v1, v2) = config.nodes();
    let left = abs_moment_left_closed(config.x, a, v1, config.order)?;
    let mid = abs_moment_mid_closed(config.y, v1, v2, config.order)?;
    let right = abs_moment_right_closed(config.z, v2, b, config.order)?;
    let case = config.case();
    let total = left + mid + right;
    let printed_total = bullen_printed(config, case.index());
    if !BULLEN_TABLE_SIGN_CASES.contains(&case.index()) && !dual_paths_agree(printed_total, total) {
        return Err(Error::Inconsistency {
            what: format!("three-node bound, {case}"),
            printed: printed_total,
            assembled: total,
        });
    }
    Ok(BoundBreakdown {
        case,
        terms: vec![
            Term {
                name: "left_moment",
                value: left,
            },
            Term {
                name: "mid_moment",
                value: mid,
            },
            Term {
                name: "right_moment",
                value: right,
            },
        ],
        total,
        printed_total,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&delta) {
        return domain(format!("delta = {delta} outside [1/2, 1]"));
    }
    Ok(())
}

/// Case of the symmetric-node coefficient, lower index on ties.
pub fn l_case(lambda: f64, delta: f64) -> u8 {
    if lambda <= 1.0 - delta {
        1
    } else if lambda <= delta {
        2
    } else {
        3
    }
}

/// Tabulated coefficient `L(α, λ, δ)` for the symmetric nodes
/// `x = δa + (1-δ)b`, `y = (1-δ)a + δb`. The bound is `M L (b-a) / (α+1)`.
pub fn l_coeff(order: Order, lambda: f64, delta: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    check_delta(delta)?;
    let al = order.value();
    let d = 1.0 - delta;
    let lm = 1.0 - lambda;
    let p = |u: f64| pow0(u, al);
    Ok(match l_case(lambda, delta) {
        1 => {
            p(lambda) * (d * (1.0 + al) - lambda * al)
                + 2.0 * pow0(d, al + 1.0)
                + p(lm) * (lm * al - d * (1.0 + al))
        }
        2 => {
            4.0 * pow0(d, al + 1.0)
                + p(lambda) * (lambda * al - d * (1.0 + al))
                + p(lm) * (lm * al - d * (1.0 + al))
        }
        _ => {
            2.0 * pow0(d, al + 1.0)
                + p(lambda) * (lambda * al - d * (1.0 + al))
                + p(lm) * (d * (1.0 + al) - lm * al)
        }
    })
}

/// `α(α+1) V(x, y)` on `[0, 1]` at the symmetric nodes: the value that
/// [`l_coeff`] should reproduce.
pub fn l_coeff_reference(order: Order, lambda: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let c = HadamardConfig::new(Interval::unit(), order, lambda, 1.0 - delta, delta)?;
    let al = order.value();
    Ok(al * (al + 1.0) * v_hadamard(&c)?.total())
}

/// Case of the three-node symmetric coefficient, lower index on ties. It
/// coincides with the case of the underlying three-node configuration.
pub fn n_case(lambda: f64, eta: f64, delta: f64) -> u8 {
    let s = lambda + eta;
    let d = 1.0 - delta;
    let h = 0.5;
    if s <= d || (lambda <= d && d <= s && s <= h) {
        1
    } else if lambda <= d && h <= s && s <= delta {
        2
    } else if lambda <= d && delta <= s {
        3
    } else if d <= lambda && s <= h {
        4
    } else if d <= lambda && lambda <= h && h <= s && s <= delta {
        5
    } else if d <= lambda && lambda <= h && delta <= s {
        6
    } else if h <= lambda && s <= delta {
        7
    } else {
        8
    }
}

fn check_lambda_eta(lambda: f64, eta: f64) -> Result<()> {
    check_unit("lambda", lambda)?;
    check_unit("eta", eta)?;
    if lambda + eta > 1.0 + WEIGHT_SUM_TOL {
        return domain(format!("lambda + eta = {} exceeds 1", lambda + eta));
    }
    Ok(())
}

/// Tabulated coefficient `N(α, λ, η, δ)` for the nodes
/// `x = δa + (1-δ)b`, `y = (a+b)/2`, `z = (1-δ)a + δb`. The bound is
/// `M N (b-a) / (α+1)`.
pub fn n_coeff(order: Order, lambda: f64, eta: f64, delta: f64) -> Result<f64> {
    check_lambda_eta(lambda, eta)?;
    check_delta(delta)?;
    let al = order.value();
    let s = lambda + eta;
    let m = (1.0 - s).max(0.0);
    let d = 1.0 - delta;
    let h = 0.5;
    let p = |u: f64| pow0(u, al);
    let q = |u: f64| pow0(u, al + 1.0);
    Ok(match n_case(lambda, eta, delta) {
        1 => {
            p(lambda) * (d * (al + 1.0) - al * lambda)
                + p(eta) * ((h - s) * (al + 1.0) + al * eta)
                + 2.0 * q(d)
                + p(m) * (al * m - (al + 1.0) * d)
        }
        2 => {
            p(lambda) * (d * (al + 1.0) - al * lambda)
                + 2.0 * q(s - h)
                + p(eta) * (al * eta - (al + 1.0) * (s - h))
                + 2.0 * q(d)
                + p(m) * (al * m - (al + 1.0) * d)
        }
        3 => {
            p(lambda) * (d * (al + 1.0) - al * lambda)
                + 2.0 * q(s - h)
                + p(eta) * (al * eta - (al + 1.0) * (s - h))
                + p(m) * ((al + 1.0) * d - al * m)
        }
        4 => {
            4.0 * q(d)
                + p(lambda) * (al * lambda - d * (al + 1.0))
                + p(eta) * (al * eta + (al + 1.0) * (h - s))
                + p(m) * (al * m - (al + 1.0) * d)
        }
        5 => {
            4.0 * q(d)
                + p(lambda) * (al * lambda - d * (al + 1.0))
                + 2.0 * q(s - h)
                + p(eta) * (al * eta - (al + 1.0) * (s - h))
                + p(m) * (al * m - (al + 1.0) * d)
        }
        6 => {
            2.0 * q(d)
                + p(lambda) * (al * lambda - d * (al + 1.0))
                + 2.0 * q(s - h)
                + p(eta) * (al * eta - (al + 1.0) * (s - h))
                + p(m) * ((al + 1.0) * d - al * m)
        }
        7 => {
            4.0 * q(d)
                + p(lambda) * (al * lambda - d * (al + 1.0))
                + p(eta) * (al * eta - (al + 1.0) * (s - h))
                + p(m) * (al * m - (al + 1.0) * d)
        }
        _ => {
            2.0 * q(d)
                + p(lambda) * (al * lambda - d * (al + 1.0))
                + p(eta) * (al * eta - (al + 1.0) * (s - h))
                + p(m) * ((al + 1.0) * d - al * m)
        }
    })
}

/// `α(α+1) V(x, y, z)` on `[0, 1]` at the nodes of [`n_coeff`].
pub fn n_coeff_reference(order: Order, lambda: f64, eta: f64, delta: f64) -> Result<f64> {
    check_lambda_eta(lambda, eta)?;
    check_delta(delta)?;
    let c = BullenConfig::from_lambda_eta(
        Interval::unit(),
        order,
        lambda,
        eta,
        (1.0 - delta, 0.5, delta),
    )?;
    let al = order.value();
    Ok(al * (al + 1.0) * v_bullen(&c)?.total())
}

/// Bracket of the endpoint/midpoint weighted bound:
/// `2α(θ/2)^(α+1) + (1-θ)^(α+1)(α-1)/2 + 2((1-θ)/2)^(α+1)`.
/// The bound is `M · bracket · (b-a) / (α+1)`.
pub fn weighted_bullen_coeff(order: Order, theta: f64) -> Result<f64> {
    check_unit("theta", theta)?;
    let al = order.value();
    let q = |u: f64| pow0(u, al + 1.0);
    Ok(
        2.0 * al * q(theta / 2.0)
            + q(1.0 - theta) * (al - 1.0) / 2.0
            + 2.0 * q((1.0 - theta) / 2.0),
    )
}

/// `α(α+1) V(a, (a+b)/2, b)` on `[0, 1]` with weights `θ/2, 1-θ, θ/2`.
pub fn weighted_bullen_coeff_reference(order: Order, theta: f64) -> Result<f64> {
    check_unit("theta", theta)?;
    let c = BullenConfig::new(
        Interval::unit(),
        order,
        theta / 2.0,
        1.0 - theta,
        theta / 2.0,
        0.0,
        0.5,
        1.0,
    )?;
    let al = order.value();
    Ok(al * (al + 1.0) * v_bullen(&c)?.total())
}

/// Printed bracket of the quarter-node Bullen bound,
/// `[α + 1 + 2^(α-1)(α-1)] / 2^(α+2)`; the bound is
/// `M · coeff · (b-a) / (α+1)`.
pub fn bullen_quarter_coeff(order: Order) -> f64 {
    let al = order.value();
    (al + 1.0 + 2f64.powf(al - 1.0) * (al - 1.0)) / 2f64.powf(al + 2.0)
}

/// Printed bracket of the Simpson-type bound read literally,
/// `[α + 3·2^(2α)(α-1) + 2^(α+1)] / 18`.
pub fn simpson_coeff(order: Order) -> f64 {
    let al = order.value();
    (al + 3.0 * 2f64.powf(2.0 * al) * (al - 1.0) + 2f64.powf(al + 1.0)) / 18.0
}

/// Printed bracket of the quarter-pair two-node bound,
/// `[1 + 2^(α-1)(α-1)] / 2^(α+1)`.
pub fn quartile_pair_coeff(order: Order) -> f64 {
    let al = order.value();
    (1.0 + 2f64.powf(al - 1.0) * (al - 1.0)) / 2f64.powf(al + 1.0)
}

/// Printed endpoint-weighted bracket `α[λ^(α+1) + (1-λ)^(α+1)]`.
pub fn endpoint_weighted_coeff(order: Order, lambda: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    let al = order.value();
    Ok(al * (pow0(lambda, al + 1.0) + pow0(1.0 - lambda, al + 1.0)))
}

/// Printed single-node bracket `δ^(α+1) + (1-δ)^(α+1)`, `δ ∈ [0, 1]`.
pub fn single_node_coeff(order: Order, delta: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    let al = order.value();
    Ok(pow0(delta, al + 1.0) + pow0(1.0 - delta, al + 1.0))
}

/// Printed bound for the split point used as the node, per unit Lipschitz
/// constant: `[(x-a)^(α+1) + (b-x)^(α+1)] / ((α+1)(b-a)^α)`.
pub fn node_bound(interval: Interval, order: Order, x: f64) -> Result<f64> {
    if !interval.contains(x) {
        return domain(format!("node {x} outside the interval"));
    }
    let al = order.value();
    let (a, b) = (interval.a(), interval.b());
    Ok((pow0(x - a, al + 1.0) + pow0(b - x, al + 1.0)) / ((al + 1.0) * interval.len().powf(al)))
}

/// The classical two-node table `V(A, B)` with split point
/// `V = (1-λ)a + λb`, for `a ≤ A ≤ B ≤ b`.
pub fn classical_table(interval: Interval, lambda: f64, lo: f64, hi: f64) -> Result<f64> {
    check_unit("lambda", lambda)?;
    let (a, b) = (interval.a(), interval.b());
    if !(a <= lo && lo <= hi && hi <= b) {
        return domain("classical table needs a <= A <= B <= b");
    }
    let v = ((1.0 - lambda) * a + lambda * b).clamp(a, b);
    let sq = |u: f64| u * u;
    Ok(if v <= lo {
        sq(lo - a) - sq(lo - v) + sq(hi - v) + sq(b - hi)
    } else if v <= hi {
        sq(lo - a) + sq(v - lo) + sq(hi - v) + sq(b - hi)
    } else {
        sq(lo - a) + sq(v - lo) + sq(b - hi) - sq(v - hi)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_quad::{abs_moment_quadrature, KernelSide, QuadratureSettings};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ord(a: f64) -> Order {
        Order::new(a).unwrap()
    }

    fn unit() -> Interval {
        Interval::unit()
    }

    #[test]
    fn moment_examples() {
        assert_relative_eq!(
            abs_moment_left_closed(1.0, 0.0, 1.0, ord(1.0)).unwrap(),
            0.5
        );
        assert_relative_eq!(
            abs_moment_left_closed(1.0, 0.0, 1.0, ord(2.0)).unwrap(),
            1.0 / 6.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            abs_moment_right_closed(0.0, 0.0, 1.0, ord(1.0)).unwrap(),
            0.5
        );
        assert_relative_eq!(
            abs_moment_right_closed(1.0, 0.0, 1.0, ord(2.0)).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-15
        );
        for y in [-1.0, 0.3, 0.7, 2.0] {
            assert_eq!(abs_moment_mid_closed(y, 0.7, 0.7, ord(0.4)).unwrap(), 0.0);
        }
        assert_relative_eq!(
            abs_moment_mid_closed(0.9, 0.2, 0.9, ord(1.0)).unwrap(),
            0.49 / 2.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            abs_moment_mid_closed(0.5, 0.0, 1.0, ord(1.0)).unwrap(),
            0.25,
            max_relative = 1e-15
        );
    }

    #[test]
    fn moment_domain_errors() {
        assert!(abs_moment_left_closed(0.5, 1.0, 0.0, ord(1.0)).is_err());
        assert!(abs_moment_left_closed(-0.1, 0.0, 1.0, ord(1.0)).is_err());
        assert!(abs_moment_right_closed(0.5, 1.0, 0.0, ord(1.0)).is_err());
        assert!(abs_moment_right_closed(1.1, 0.0, 1.0, ord(1.0)).is_err());
        assert!(abs_moment_mid_closed(0.5, 0.6, 0.2, ord(1.0)).is_err());
    }

    #[test]
    fn moment_branches_meet_at_the_split() {
        for al in [0.3, 1.0, 2.5] {
            let o = ord(al);
            let at = abs_moment_left_closed(0.4, 0.0, 0.4, o).unwrap();
            let below = abs_moment_left_closed(0.4 - 1e-12, 0.0, 0.4, o).unwrap();
            assert!((at - below).abs() < 1e-10);
            let at = abs_moment_right_closed(0.4, 0.4, 1.0, o).unwrap();
            let above = abs_moment_right_closed(0.4 + 1e-12, 0.4, 1.0, o).unwrap();
            assert!((at - above).abs() < 1e-10);
            for edge in [0.2, 0.7] {
                let at = abs_moment_mid_closed(edge, 0.2, 0.7, o).unwrap();
                let lo = abs_moment_mid_closed(edge - 1e-12, 0.2, 0.7, o).unwrap();
                assert!(
                    (at - lo).abs() < 1e-10,
                    "mid at {edge}, alpha {al}: {at} vs {lo}"
                );
            }
        }
    }

    #[test]
    fn mid_moment_below_panel_matches_quadrature() {
        let s = QuadratureSettings::reference();
        let o = ord(0.6);
        let closed = abs_moment_mid_closed(0.1, 0.3, 0.8, o).unwrap();
        let quad = abs_moment_quadrature(0.1, 0.3, 0.8, 0.8, KernelSide::Right, o, &s).unwrap();
        assert_relative_eq!(closed, quad, max_relative = 1e-12);
        assert!(closed > 0.0);
    }

    #[test]
    fn sharpness_config_value() {
        let c = HadamardConfig::new(unit(), ord(0.5), 0.5, 0.5, 0.5).unwrap();
        let v = v_hadamard(&c).unwrap();
        assert_eq!(v.case(), CaseTag::Hadamard(1));
        let want = 2.0 * 2f64.sqrt() / 3.0;
        assert_relative_eq!(v.total(), want, max_relative = 1e-15);
        assert_relative_eq!(v.total(), 0.942_809_041_6, epsilon = 1e-10);
        assert!(v.paths_agree());
    }

    #[test]
    fn case_selection_prefers_lower_index() {
        let c = HadamardConfig::new(unit(), ord(1.0), 0.5, 0.5, 0.7).unwrap();
        assert_eq!(c.case(), CaseTag::Hadamard(1));
        let c = HadamardConfig::new(unit(), ord(1.0), 0.5, 0.2, 0.5).unwrap();
        assert_eq!(c.case(), CaseTag::Hadamard(2));
        let c = HadamardConfig::new(unit(), ord(1.0), 0.5, 0.1, 0.2).unwrap();
        assert_eq!(c.case(), CaseTag::Hadamard(3));

        let nodes = |x, y, z| {
            BullenConfig::new(unit(), ord(1.0), 0.25, 0.5, 0.25, x, y, z)
                .unwrap()
                .case()
                .index()
        };
        assert_eq!(nodes(0.25, 0.75, 0.9), 1);
        assert_eq!(nodes(0.3, 0.5, 0.75), 2);
        assert_eq!(nodes(0.3, 0.5, 0.6), 3);
        assert_eq!(nodes(0.1, 0.8, 0.9), 4);
        assert_eq!(nodes(0.1, 0.25, 0.9), 5);
        assert_eq!(nodes(0.1, 0.5, 0.6), 6);
        assert_eq!(nodes(0.1, 0.2, 0.8), 7);
        assert_eq!(nodes(0.1, 0.2, 0.3), 8);
        assert_eq!(nodes(0.0, 0.1, 0.2), 8);
    }

    #[test]
    fn config_validation() {
        assert!(HadamardConfig::new(unit(), ord(1.0), 1.5, 0.1, 0.2).is_err());
        assert!(HadamardConfig::new(unit(), ord(1.0), 0.5, 0.3, 0.2).is_err());
        assert!(HadamardConfig::new(unit(), ord(1.0), 0.5, -0.1, 0.2).is_err());
        assert!(BullenConfig::new(unit(), ord(1.0), 0.5, 0.5, 0.5, 0.1, 0.2, 0.3).is_err());
        assert!(BullenConfig::new(unit(), ord(1.0), 0.2, 0.3, 0.5, 0.1, 0.4, 0.3).is_err());
        let c = BullenConfig::new(unit(), ord(1.0), 0.2, 0.3, 0.5 + 5e-13, 0.1, 0.2, 0.3).unwrap();
        assert!((c.lambda() + c.eta() + c.mu() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bullen_nodes_for_quarter_and_sixth_weights() {
        let c = BullenConfig::new(unit(), ord(0.7), 0.25, 0.5, 0.25, 0.0, 0.5, 1.0).unwrap();
        assert_eq!(c.nodes(), (0.25, 0.75));
        let i = Interval::new(2.0, 8.0).unwrap();
        let c =
            BullenConfig::new(i, ord(0.7), 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 2.0, 5.0, 8.0).unwrap();
        let (v1, v2) = c.nodes();
        assert_relative_eq!(v1, (5.0 * 2.0 + 8.0) / 6.0, max_relative = 1e-15);
        assert_relative_eq!(v2, (2.0 + 5.0 * 8.0) / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn single_panel_collapse() {
        let c = BullenConfig::new(unit(), ord(1.0), 0.0, 1.0, 0.0, 0.5, 0.5, 0.5).unwrap();
        let v = v_bullen(&c).unwrap();
        assert_relative_eq!(v.total(), 0.25, max_relative = 1e-15);
        assert_eq!(v.terms()[0].value, 0.0);
        assert_eq!(v.terms()[2].value, 0.0);
    }

    #[test]
    fn sign_cases_deviate_by_twice_the_mid_moment() {
        let c = BullenConfig::new(unit(), ord(0.8), 0.4, 0.3, 0.3, 0.1, 0.2, 0.9).unwrap();
        let v = v_bullen(&c).unwrap();
        assert_eq!(v.case(), CaseTag::Bullen(7));
        let mid = v.terms()[1].value;
        assert!(mid > 0.0);
        assert_relative_eq!(v.printed_deviation(), -2.0 * mid, max_relative = 1e-12);
        assert!(!v.paths_agree());
    }

    #[test]
    fn classical_table_is_twice_the_unit_order_bound() {
        for (lam, x, y) in [(0.2, 0.5, 0.9), (0.5, 0.3, 0.6), (0.9, 0.1, 0.4)] {
            let c = HadamardConfig::new(unit(), ord(1.0), lam, x, y).unwrap();
            let table = classical_table(unit(), lam, x, y).unwrap();
            assert_relative_eq!(
                table,
                2.0 * v_hadamard(&c).unwrap().total(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn l_coeff_examples() {
        let l = l_coeff(ord(1.0), 0.5, 1.0).unwrap();
        assert_relative_eq!(l, 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            l_coeff_reference(ord(1.0), 0.5, 1.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert!(l_coeff(ord(1.0), 0.5, 0.4).is_err());
        assert!(l_coeff(ord(1.0), 1.2, 0.6).is_err());
    }

    #[test]
    fn node_bound_matches_theorem_at_split_point() {
        for al in [0.5, 1.0, 1.5, 2.0] {
            let c = HadamardConfig::new(unit(), ord(al), 0.3, 0.3, 0.3).unwrap();
            let theorem = al * v_hadamard(&c).unwrap().total();
            assert_relative_eq!(
                node_bound(unit(), ord(al), 0.3).unwrap(),
                theorem,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn weighted_bullen_examples() {
        assert_relative_eq!(
            weighted_bullen_coeff(ord(1.0), 1.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        for al in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let o = ord(al);
            let scaled = 2f64.powf(al - 1.0) * weighted_bullen_coeff(o, 0.5).unwrap();
            assert_relative_eq!(scaled, bullen_quarter_coeff(o), max_relative = 1e-13);
        }
        // the literal Simpson bracket agrees with the scaled weighted bracket
        // only at unit order
        let o = ord(1.0);
        assert_relative_eq!(
            weighted_bullen_coeff(o, 1.0 / 3.0).unwrap(),
            simpson_coeff(o),
            max_relative = 1e-14
        );
        let o = ord(2.0);
        let scaled = 6.0 * weighted_bullen_coeff(o, 1.0 / 3.0).unwrap();
        assert_relative_eq!(scaled, (2.0 + 16.0 + 8.0) / 18.0, max_relative = 1e-14);
        assert_relative_eq!(
            simpson_coeff(o),
            (2.0 + 48.0 + 8.0) / 18.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn quartile_pair_matches_theorem() {
        for al in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let o = ord(al);
            let c = HadamardConfig::new(unit(), o, 0.5, 0.25, 0.75).unwrap();
            let theorem = 2f64.powf(al - 1.0) * al * (al + 1.0) * v_hadamard(&c).unwrap().total();
            assert_relative_eq!(quartile_pair_coeff(o), theorem, max_relative = 1e-13);
        }
    }

    #[test]
    fn breakdown_serializes_flat() {
        let c = HadamardConfig::new(unit(), ord(1.0), 0.5, 0.25, 0.75).unwrap();
        let json = serde_json::to_value(v_hadamard(&c).unwrap()).unwrap();
        assert_eq!(json["case"], "hadamard-2");
        assert!(json["left_moment"].is_f64());
        assert!(json["total"].is_f64());
    }

    fn sorted3(mut v: [f64; 3]) -> [f64; 3] {
        v.sort_by(f64::total_cmp);
        v
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn hadamard_paths_agree(al in 0.05f64..5.0, lam in 0.0f64..=1.0, u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
            let (x, y) = if u <= v { (u, v) } else { (v, u) };
            let c = HadamardConfig::new(unit(), ord(al), lam, x, y).unwrap();
            let b = v_hadamard(&c).unwrap();
            prop_assert!(b.paths_agree());
            prop_assert!(b.total() >= -1e-12);
        }

        #[test]
        fn bullen_paths_agree_outside_sign_cases(
            al in 0.05f64..5.0, w in prop::array::uniform2(0.0f64..=1.0), n in prop::array::uniform3(0.0f64..=1.0),
        ) {
            let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            let [x, y, z] = sorted3(n);
            let c = BullenConfig::new(unit(), ord(al), lo, hi - lo, 1.0 - hi, x, y, z).unwrap();
            let b = v_bullen(&c).unwrap();
            prop_assert!(b.total() >= -1e-12);
            if !BULLEN_TABLE_SIGN_CASES.contains(&b.case().index()) {
                prop_assert!(b.paths_agree());
            }
        }

        #[test]
        fn assembly_matches_quadrature(al in 0.1f64..3.0, lam in 0.0f64..=1.0, n in prop::array::uniform3(0.0f64..=1.0)) {
            let s = QuadratureSettings::reference();
            let o = ord(al);
            let [x, y, z] = sorted3(n);
            let v = lam;
            let closed = abs_moment_left_closed(x, 0.0, v, o).unwrap();
            let quad = abs_moment_quadrature(x, 0.0, v, 0.0, KernelSide::Left, o, &s).unwrap();
            prop_assert!((closed - quad).abs() <= 1e-8 * quad.abs() + 1e-13, "left {closed} {quad}");
            let closed = abs_moment_right_closed(z, v, 1.0, o).unwrap();
            let quad = abs_moment_quadrature(z, v, 1.0, 1.0, KernelSide::Right, o, &s).unwrap();
            prop_assert!((closed - quad).abs() <= 1e-8 * quad.abs() + 1e-13, "right {closed} {quad}");
            let (v1, v2) = if x <= z { (x, z) } else { (z, x) };
            let closed = abs_moment_mid_closed(y * 2.0 - 0.5, v1, v2, o).unwrap();
            let quad = abs_moment_quadrature(y * 2.0 - 0.5, v1, v2, v2, KernelSide::Right, o, &s).unwrap();
            prop_assert!((closed - quad).abs() <= 1e-8 * quad.abs() + 1e-13, "mid {closed} {quad}");
        }

        #[test]
        fn l_coeff_matches_reference(al in 0.05f64..5.0, lam in 0.0f64..=1.0, delta in 0.5f64..=1.0) {
            let o = ord(al);
            let printed = l_coeff(o, lam, delta).unwrap();
            let reference = l_coeff_reference(o, lam, delta).unwrap();
            prop_assert!((printed - reference).abs() <= 1e-12 * reference.abs().max(1.0));
        }

        #[test]
        fn n_coeff_tracks_the_three_node_table(
            al in 0.05f64..5.0, w in prop::array::uniform2(0.0f64..=1.0), delta in 0.5f64..=1.0,
        ) {
            let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            let (lam, eta) = (lo, hi - lo);
            let o = ord(al);
            let c = BullenConfig::from_lambda_eta(unit(), o, lam, eta, (1.0 - delta, 0.5, delta)).unwrap();
            prop_assert_eq!(c.case().index(), n_case(lam, eta, delta));
            let table = v_bullen(&c).unwrap();
            let scale = al * (al + 1.0);
            let printed = n_coeff(o, lam, eta, delta).unwrap();
            prop_assert!((printed - scale * table.printed_total()).abs() <= 1e-11 * printed.abs().max(1.0));
            if !BULLEN_TABLE_SIGN_CASES.contains(&table.case().index()) {
                let reference = n_coeff_reference(o, lam, eta, delta).unwrap();
                prop_assert!((printed - reference).abs() <= 1e-11 * reference.abs().max(1.0));
            }
        }

        #[test]
        fn weighted_bullen_matches_reference(al in 0.05f64..5.0, theta in 0.0f64..=1.0) {
            let o = ord(al);
            let printed = weighted_bullen_coeff(o, theta).unwrap();
            let reference = weighted_bullen_coeff_reference(o, theta).unwrap();
            prop_assert!((printed - reference).abs() <= 1e-12 * reference.abs().max(1.0));
        }

        #[test]
        fn case_boundaries_are_continuous(al in 0.1f64..4.0, lam in 0.01f64..0.99, other in 0.0f64..=1.0) {
            let o = ord(al);
            let v = lam;
            let eps = 1e-9;
            let at = |x: f64, y: f64| v_hadamard(&HadamardConfig::new(unit(), o, lam, x, y).unwrap()).unwrap().total();
            // x crossing V with y pinned above
            let y = v + (1.0 - v) * other;
            if y >= v + eps {
                let (lo, hi) = (at(v - eps, y), at(v + eps, y));
                prop_assert!((lo - hi).abs() <= 1e-6 * (1.0 + lo.abs()));
            }
            // y crossing V with x pinned below
            let x = v * other;
            if x <= v - eps {
                let (lo, hi) = (at(x, v - eps), at(x, v + eps));
                prop_assert!((lo - hi).abs() <= 1e-6 * (1.0 + lo.abs()));
            }
        }

        #[test]
        fn scale_covariance(
            al in 0.1f64..3.0, lam in 0.0f64..=1.0, u in 0.0f64..=1.0, v in 0.0f64..=1.0,
            shift in -5.0f64..5.0, s in 0.1f64..10.0,
        ) {
            let (x, y) = if u <= v { (u, v) } else { (v, u) };
            let c = HadamardConfig::new(unit(), ord(al), lam, x, y).unwrap();
            let target = Interval::new(shift, shift + s).unwrap();
            let mapped = c.mapped_to(target).unwrap();
            let base = v_hadamard(&c).unwrap().total();
            let scaled = v_hadamard(&mapped).unwrap().total();
            prop_assert!(rel_close(scaled, s.powf(al + 1.0) * base, 1e-10) || (base < 1e-12 && scaled.abs() < 1e-10 * s.powf(al + 1.0)));
        }
    }
}
