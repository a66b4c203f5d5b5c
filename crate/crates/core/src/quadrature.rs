//! Deterministic Gauss–Legendre integration.
//!
//! Multi-dimensional integrals are built by nesting one-dimensional panels,
//! each with its own node count taken from a [`QuadratureSpec`]. Piecewise
//! integrands are split at their breakpoints by the caller; panels whose
//! integrand has square-root behaviour at an endpoint use
//! [`GaussLegendre::integrate_smoothed`], which applies the substitution
//! `x = a + (b-a)(1 - cos ψ)/2` before integrating in `ψ`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on `P_n`. Exact for polynomials of
    /// degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        // Absorb the rounding of the other weights into the central one(s) so
        // that constants integrate exactly.
        let (lo, hi) = ((n - 1) / 2, n / 2);
        let rest = compensated_sum(
            weights
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != lo && i != hi)
                .map(|(_, w)| *w),
        );
        let central = (2.0 - rest) / (hi - lo + 1) as f64;
        weights[lo] = central;
        weights[hi] = central;
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Abscissae and weights mapped onto `[a, b]`.
    pub fn panel(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    /// Abscissae and weights on `[a, b]` after the cosine substitution.
    ///
    /// Endpoint behaviour like `√(x-a)` or `√(b-x)` becomes analytic in the
    /// mapped variable, restoring spectral convergence.
    pub fn smoothed_panel(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        self.panel(0.0, PI).map(move |(psi, w)| {
            let (s, c) = psi.sin_cos();
            (a + half * (1.0 - c), w * half * s)
        })
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        compensated_sum(self.panel(a, b).map(|(x, w)| w * f(x)))
    }

    pub fn integrate_smoothed<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        compensated_sum(self.smoothed_panel(a, b).map(|(x, w)| w * f(x)))
    }
}

/// Neumaier summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre estimate of `∫_a^b f` with `nodes` points.
///
/// Fails on the first abscissa where `f` is not finite.
pub fn integrate_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, nodes: usize) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::invalid(
            "bounds",
            format!("need a <= b, got [{a}, {b}]"),
        ));
    }
    if nodes == 0 {
        return Err(Error::invalid("nodes", "at least one node is required"));
    }
    let rule = GaussLegendre::new(nodes);
    let mut terms = Vec::with_capacity(nodes);
    for (x, w) in rule.panel(a, b) {
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::NonFiniteIntegrand { abscissa: x });
        }
        terms.push(w * y);
    }
    Ok(compensated_sum(terms))
}

/// Integration variables of the interference transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    /// Distance of the receiver of interest from the center.
    V,
    /// Distance of an interferer from the center.
    T,
    /// Serving-link length.
    Z0,
    /// Angle between receiver and interferer, replacing the interferer
    /// distance `w`.
    Angle,
    /// Link length of an interferer to its own receiver.
    Zi,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::V, Level::T, Level::Z0, Level::Angle, Level::Zi];

    fn slot(self) -> usize {
        match self {
            Level::V => 0,
            Level::T => 1,
            Level::Z0 => 2,
            Level::Angle => 3,
            Level::Zi => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::V => "v",
            Level::T => "t",
            Level::Z0 => "z0",
            Level::Angle => "angle",
            Level::Zi => "zi",
        }
    }

    /// Parses `v`, `t`, `z0`, `angle` (also `w`, `phi`), `zi`.
    pub fn parse(s: &str) -> Option<Level> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v" => Some(Level::V),
            "t" => Some(Level::T),
            "z0" => Some(Level::Z0),
            "angle" | "w" | "phi" => Some(Level::Angle),
            "zi" => Some(Level::Zi),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluation count above which a single transform evaluation logs a warning.
pub const EVALUATION_BUDGET: u64 = 1_000_000_000;

/// Node counts per integration level plus the refinement target.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    nodes: [usize; 5],
    rel_tol: f64,
    max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: [24, 24, 24, 32, 24],
            rel_tol: 1e-8,
            max_nodes: 1024,
        }
    }
}

impl QuadratureSpec {
    pub const MIN_NODES: usize = 4;

    pub fn new(nodes: [usize; 5], rel_tol: f64) -> Result<Self> {
        let spec = QuadratureSpec {
            nodes,
            rel_tol,
            ..QuadratureSpec::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same node count on every level.
    pub fn uniform(nodes: usize, rel_tol: f64) -> Result<Self> {
        Self::new([nodes; 5], rel_tol)
    }

    fn validate(&self) -> Result<()> {
        if let Some(level) = Level::ALL
            .iter()
            .find(|l| self.nodes[l.slot()] < Self::MIN_NODES)
        {
            return Err(Error::invalid(
                "nodes",
                format!("level {level} needs at least {} nodes", Self::MIN_NODES),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid(
                "rel_tol",
                format!("{} must be positive", self.rel_tol),
            ));
        }
        if self.max_nodes < Self::MIN_NODES {
            return Err(Error::invalid(
                "max_nodes",
                "budget below the minimum node count",
            ));
        }
        Ok(())
    }

    pub fn nodes(&self, level: Level) -> usize {
        self.nodes[level.slot()]
    }

    pub fn with_nodes(mut self, level: Level, nodes: usize) -> Result<Self> {
        self.nodes[level.slot()] = nodes;
        self.validate()?;
        Ok(self)
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Result<Self> {
        self.rel_tol = rel_tol;
        self.validate()?;
        Ok(self)
    }

    /// Largest node count [`refine_until`] may reach on any level.
    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn with_max_nodes(mut self, max_nodes: usize) -> Result<Self> {
        self.max_nodes = max_nodes;
        self.validate()?;
        Ok(self)
    }

    /// Every level doubled, or `None` once that would exceed the budget.
    pub fn doubled(&self) -> Option<Self> {
        let mut next = self.clone();
        for n in next.nodes.iter_mut() {
            *n *= 2;
            if *n > self.max_nodes {
                return None;
            }
        }
        Some(next)
    }

    /// Integrand evaluations for one interference-transform call. Both the
    /// serving-link and the interferer-link integrals are split into two
    /// panels.
    pub fn laplace_evaluations(&self) -> u64 {
        let n = |l: Level| self.nodes(l) as u64;
        n(Level::V) * n(Level::T) * n(Level::Angle) * 2 * n(Level::Zi)
            + n(Level::V) * 2 * n(Level::Z0)
    }
}

/// Result of a converged [`refine_until`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub value: f64,
    /// `|last - previous| / |last|` (absolute delta when `last` is zero).
    pub rel_delta: f64,
    /// The spec that produced `value`.
    pub spec: QuadratureSpec,
}

fn relative_delta(previous: f64, last: f64) -> f64 {
    let diff = (last - previous).abs();
    if last == 0.0 {
        diff
    } else {
        diff / last.abs()
    }
}

/// Doubles every level's node count until two successive estimates agree to
/// `spec.rel_tol()`.
///
/// Returns [`Error::BudgetExhausted`] with both last estimates when the next
/// doubling would pass `spec.max_nodes()`.
pub fn refine_until<F>(mut estimate: F, spec: &QuadratureSpec) -> Result<Refined>
where
    F: FnMut(&QuadratureSpec) -> Result<f64>,
{
    let mut current = spec.clone();
    let mut previous = estimate(&current)?;
    loop {
        let Some(next) = current.doubled() else {
            return Err(Error::BudgetExhausted {
                previous,
                last: previous,
                rel_delta: f64::INFINITY,
            });
        };
        let last = estimate(&next)?;
        let rel_delta = relative_delta(previous, last);
        if rel_delta < spec.rel_tol() {
            return Ok(Refined {
                value: last,
                rel_delta,
                spec: next,
            });
        }
        if next.doubled().is_none() {
            return Err(Error::BudgetExhausted {
                previous,
                last,
                rel_delta,
            });
        }
        previous = last;
        current = next;
    }
}
