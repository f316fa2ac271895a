//! Piecewise-linear Lipschitz test functions.
//!
//! The family is closed under the power-rule integrals that make up every
//! fractional functional in this crate, so each function doubles as a
//! quadrature-free oracle: on a segment where `f(t) = c + e * u` with
//! `u = |t - anchor|`, the kernel integral is
//! `c (u1^α - u0^α)/α + e (u1^(α+1) - u0^(α+1))/(α+1)`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::frac_quad::{gamma_fn, pow0, Interval, KernelSide, Order};

pub const DEFAULT_SEGMENTS: usize = 6;
pub const DEFAULT_M_MAX: f64 = 2.0;

/// Continuous piecewise-linear function on `[breakpoints[0], breakpoints[n-1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return domain("a piecewise-linear function needs at least 2 breakpoints");
        }
        if breakpoints.len() != values.len() {
            return domain(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            ));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return domain("breakpoints and values must be finite");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return domain("breakpoints must be strictly increasing");
        }
        Ok(PiecewiseLinearFunction {
            breakpoints,
            values,
        })
    }

    pub fn constant(interval: Interval, c: f64) -> Self {
        PiecewiseLinearFunction {
            breakpoints: vec![interval.a(), interval.b()],
            values: vec![c, c],
        }
    }

    pub fn linear(interval: Interval, value_at_a: f64, slope: f64) -> Self {
        PiecewiseLinearFunction {
            breakpoints: vec![interval.a(), interval.b()],
            values: vec![value_at_a, value_at_a + slope * interval.len()],
        }
    }

    /// `t ↦ |t - center|` on the interval.
    pub fn tent(interval: Interval, center: f64) -> Result<Self> {
        Self::panel_tent(interval, &[interval.a(), interval.b()], &[center])
    }

    /// Continuous unit-slope function that equals `|t - centers[i]| + k_i` on
    /// the i-th panel `[edges[i], edges[i+1]]`, with the offsets `k_i` chosen
    /// for continuity.
    ///
    /// When every center lies inside its own panel this function turns each
    /// step of the moment bound into an equality, which makes it the
    /// sharpness witness for both the two- and three-panel functionals.
    pub fn panel_tent(interval: Interval, edges: &[f64], centers: &[f64]) -> Result<Self> {
        if edges.len() != centers.len() + 1 || centers.is_empty() {
            return domain("panel_tent needs one more edge than centers");
        }
        if edges[0] != interval.a() || edges[edges.len() - 1] != interval.b() {
            return domain("panel edges must start at a and end at b");
        }
        if edges.windows(2).any(|w| w[0] > w[1]) {
            return domain("panel edges must be nondecreasing");
        }
        if centers.iter().any(|c| !interval.contains(*c)) {
            return domain("panel centers must lie in the interval");
        }

        let mut knots: Vec<f64> = Vec::with_capacity(2 * edges.len());
        let mut vals: Vec<f64> = Vec::with_capacity(2 * edges.len());
        let mut offset = 0.0;
        let mut started = false;
        for (i, &c) in centers.iter().enumerate() {
            let (lo, hi) = (edges[i], edges[i + 1]);
            if lo == hi {
                continue;
            }
            if started {
                // match the value already placed at `lo`
                offset = vals[vals.len() - 1] - (lo - c).abs();
            } else {
                knots.push(lo);
                vals.push((lo - c).abs());
                started = true;
            }
            if c > lo && c < hi {
                knots.push(c);
                vals.push(offset);
            }
            knots.push(hi);
            vals.push((hi - c).abs() + offset);
        }
        PiecewiseLinearFunction::new(knots, vals)
    }

    pub fn interval(&self) -> Interval {
        Interval::new(
            self.breakpoints[0],
            self.breakpoints[self.breakpoints.len() - 1],
        )
        .expect("validated on construction")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterator over `(t0, t1, f(t0), f(t1))`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (t[0], t[1], v[0], v[1]))
    }

    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments()
            .map(|(t0, t1, v0, v1)| (v1 - v0) / (t1 - t0))
    }

    /// Linear interpolation; arguments outside the domain are clamped.
    pub fn eval(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        let n = bp.len();
        if t <= bp[0] {
            return self.values[0];
        }
        if t >= bp[n - 1] {
            return self.values[n - 1];
        }
        // first breakpoint strictly greater than t
        let j = bp.partition_point(|&p| p <= t);
        let (t0, t1) = (bp[j - 1], bp[j]);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }

    /// `t ↦ f(a + b - t)`.
    pub fn reflect(&self) -> Self {
        let (a, b) = (
            self.breakpoints[0],
            self.breakpoints[self.breakpoints.len() - 1],
        );
        let mut breakpoints: Vec<f64> = self.breakpoints.iter().rev().map(|t| a + b - t).collect();
        breakpoints[0] = a;
        let last = breakpoints.len() - 1;
        breakpoints[last] = b;
        PiecewiseLinearFunction {
            breakpoints,
            values: self.values.iter().rev().copied().collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        PiecewiseLinearFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        PiecewiseLinearFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Two-column text table: one `breakpoint<TAB>value` row per knot,
    /// 17 significant digits, `#` comment header.
    pub fn to_table(&self) -> String {
        let mut out = String::from("# breakpoint\tvalue\n");
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:.16e}\t{v:.16e}");
        }
        out
    }

    /// Parses the format written by [`to_table`](Self::to_table). Columns may
    /// be separated by whitespace or a comma; blank lines and lines starting
    /// with `#` are skipped.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut bp = Vec::new();
        let mut vals = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 2 columns, found {}", cols.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("{s:?}: {e}"),
                })
            };
            bp.push(parse(cols[0])?);
            vals.push(parse(cols[1])?);
        }
        PiecewiseLinearFunction::new(bp, vals)
    }
}

/// Sharp Lipschitz constant: the largest absolute segment slope.
pub fn lipschitz_constant(f: &PiecewiseLinearFunction) -> f64 {
    f.slopes().fold(0.0, |m, s| m.max(s.abs()))
}

/// A test function bundled with its sharp Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzWitness {
    function: PiecewiseLinearFunction,
    constant: f64,
}

impl LipschitzWitness {
    pub fn new(function: PiecewiseLinearFunction) -> Self {
        let constant = lipschitz_constant(&function);
        LipschitzWitness { function, constant }
    }

    pub fn function(&self) -> &PiecewiseLinearFunction {
        &self.function
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn into_function(self) -> PiecewiseLinearFunction {
        self.function
    }
}

/// Random piecewise-linear witness, bit-for-bit reproducible from `seed`.
///
/// The generator is ChaCha8 seeded through `seed_from_u64`.
pub fn random_lipschitz(
    seed: u64,
    interval: Interval,
    segments: usize,
    m_max: f64,
) -> Result<LipschitzWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_lipschitz_with(&mut rng, interval, segments, m_max)
}

/// Same as [`random_lipschitz`] but drawing from a caller-owned generator.
///
/// Draw order: `segments - 1` interior breakpoints, then `f(a)` uniform in
/// `[-1, 1]`, then one slope per segment uniform in `[-m_max, m_max]`.
pub fn random_lipschitz_with<R: Rng + ?Sized>(
    rng: &mut R,
    interval: Interval,
    segments: usize,
    m_max: f64,
) -> Result<LipschitzWitness> {
    if segments == 0 {
        return domain("random_lipschitz needs at least one segment");
    }
    if !(m_max >= 0.0) || !m_max.is_finite() {
        return domain(format!(
            "m_max must be a finite nonnegative number, got {m_max}"
        ));
    }
    let mut interior: Vec<f64> = (1..segments)
        .map(|_| interval.lerp(rng.random::<f64>()))
        .filter(|t| *t > interval.a() && *t < interval.b())
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();

    let mut breakpoints = Vec::with_capacity(interior.len() + 2);
    breakpoints.push(interval.a());
    breakpoints.extend(interior);
    breakpoints.push(interval.b());

    let start = 2.0 * rng.random::<f64>() - 1.0;
    let mut values = Vec::with_capacity(breakpoints.len());
    values.push(start);
    for w in breakpoints.windows(2) {
        let slope = m_max * (2.0 * rng.random::<f64>() - 1.0);
        let prev = values[values.len() - 1];
        values.push(prev + slope * (w[1] - w[0]));
    }
    let function = PiecewiseLinearFunction::new(breakpoints, values)?;
    Ok(LipschitzWitness::new(function))
}

/// Closed-form `∫_lower^upper K(t) f(t) dt` for the power kernel anchored at
/// `anchor` (no `1/Γ` factor). `[lower, upper]` must lie inside the domain
/// of `f`.
pub fn exact_kernel_integral(
    f: &PiecewiseLinearFunction,
    lower: f64,
    upper: f64,
    anchor: f64,
    side: KernelSide,
    order: Order,
) -> Result<f64> {
    let dom = f.interval();
    if !(lower <= upper) || !dom.contains(lower) || !dom.contains(upper) {
        return domain(format!(
            "range [{lower}, {upper}] not inside [{}, {}]",
            dom.a(),
            dom.b()
        ));
    }
    let ok = match side {
        KernelSide::Left => anchor <= lower,
        KernelSide::Right => anchor >= upper,
    };
    if !ok {
        return domain(format!("kernel anchor {anchor} inside [{lower}, {upper}]"));
    }
    let alpha = order.value();
    let mut total = 0.0;
    for (t0, t1, v0, v1) in f.segments() {
        let p = t0.max(lower);
        let q = t1.min(upper);
        if p >= q {
            continue;
        }
        let d = (v1 - v0) / (t1 - t0);
        let c = v0 + d * (anchor - t0);
        let (e, u0, u1) = match side {
            KernelSide::Left => (d, p - anchor, q - anchor),
            KernelSide::Right => (-d, anchor - q, anchor - p),
        };
        total += c * (pow0(u1, alpha) - pow0(u0, alpha)) / alpha
            + e * (pow0(u1, alpha + 1.0) - pow0(u0, alpha + 1.0)) / (alpha + 1.0);
    }
    Ok(total)
}

/// Closed-form counterpart of `frac_quad::rl_left`.
pub fn exact_rl_left(f: &PiecewiseLinearFunction, order: Order, upper: f64) -> Result<f64> {
    let a = f.breakpoints[0];
    let raw = exact_kernel_integral(f, a, upper, a, KernelSide::Left, order)?;
    Ok(raw / gamma_fn(order.value())?)
}

/// Closed-form counterpart of `frac_quad::rl_right`.
pub fn exact_rl_right(f: &PiecewiseLinearFunction, order: Order, lower: f64) -> Result<f64> {
    let b = f.breakpoints[f.breakpoints.len() - 1];
    let raw = exact_kernel_integral(f, lower, b, b, KernelSide::Right, order)?;
    Ok(raw / gamma_fn(order.value())?)
}

/// Closed-form counterpart of `frac_quad::rl_mid`.
pub fn exact_rl_mid(f: &PiecewiseLinearFunction, v1: f64, v2: f64, order: Order) -> Result<f64> {
    if !(v1 <= v2) {
        return domain(format!("middle panel requires v1 <= v2, got [{v1}, {v2}]"));
    }
    let raw = exact_kernel_integral(f, v1, v2, v2, KernelSide::Right, order)?;
    Ok(raw / gamma_fn(order.value())?)
}
