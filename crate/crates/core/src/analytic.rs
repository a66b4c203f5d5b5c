//! Interference Laplace transform and success probability.
//!
//! For a receiver at radius `v` and `n_t - 1` interferers sharing radius `t`,
//! every interferer contributes the same conditional factor
//!
//! ```text
//! E(v, t; s) = (1/π) ∫_0^π ∫ f_Z(z | t) / (1 + s z^α w(φ)^{-α}) dz dφ,
//! ```
//!
//! where `f_Z(·|t)` is the two-branch link-distance law and `w(φ)` the
//! receiver–interferer distance at angle `φ`. A full-duplex receiver also
//! carries `exp(-s β z0^α)` per interferer, which does not depend on `t` and
//! so factors out of the power:
//!
//! ```text
//! L_HDRX(s) = ∫∫ E^{n_t-1} · 4vt/R⁴ dv dt
//! L_FDTR(s) = ∫∫ E^{n_t-1} · S(v; s, n_t-1) · 4vt/R⁴ dv dt
//! S(v; s, k) = ∫ exp(-s β k z0^α) f_Z(z0 | v) dz0
//! ```
//!
//! With [`SelfInterference::Single`] the serving factor uses `k = 1` instead.
//! All integrals are tensor Gauss–Legendre rules; every piecewise density is
//! integrated per branch, the arccos branch on a cosine-mapped panel. Each
//! factor is accumulated as one minus the integral of its complement, which
//! keeps it in `[0, 1]` and makes the `s = 0` and `n_t = 1` cases exact.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{link_branch_inner, link_branch_outer, DiskConfig};
use crate::modes::{compute_mode_probabilities, transmitter_count_pmf, ModeProbabilities};
use crate::popularity::PopularityProfile;
use crate::quadrature::{GaussLegendre, Level, QuadratureSpec, EVALUATION_BUDGET};

/// Binomial terms below this mass are skipped by [`success_curve`].
pub const PRUNE_MASS: f64 = 1e-12;

/// How residual self-interference enters a full-duplex receiver's SIR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfInterference {
    /// `β z0^α` added once per interferer.
    #[default]
    PerInterferer,
    /// `β z0^α` added once.
    Single,
}

impl SelfInterference {
    pub fn name(self) -> &'static str {
        match self {
            SelfInterference::PerInterferer => "per-interferer",
            SelfInterference::Single => "single",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per-interferer" | "per_interferer" => Some(SelfInterference::PerInterferer),
            "single" => Some(SelfInterference::Single),
            _ => None,
        }
    }

    /// Number of `β z0^α` terms in the interference given `interferers`.
    pub fn terms(self, interferers: usize) -> usize {
        match self {
            SelfInterference::PerInterferer => interferers,
            SelfInterference::Single => 1,
        }
    }
}

/// Path loss and self-interference parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    alpha: f64,
    beta: f64,
    self_interference: SelfInterference,
}

impl ChannelConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("{alpha} must be finite and > 2"),
            ));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid("beta", format!("{beta} must lie in [0, 1]")));
        }
        Ok(ChannelConfig {
            alpha,
            beta,
            self_interference: SelfInterference::default(),
        })
    }

    pub fn with_self_interference(mut self, model: SelfInterference) -> Self {
        self.self_interference = model;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn self_interference(&self) -> SelfInterference {
        self.self_interference
    }
}

/// Everything that defines one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    n_users: usize,
    disk: DiskConfig,
    profile: Arc<PopularityProfile>,
    channel: ChannelConfig,
}

impl ModelConfig {
    pub fn new(
        n_users: usize,
        disk: DiskConfig,
        profile: Arc<PopularityProfile>,
        channel: ChannelConfig,
    ) -> Result<Self> {
        profile.check_users(n_users)?;
        Ok(ModelConfig {
            n_users,
            disk,
            profile,
            channel,
        })
    }

    /// Zipf library of `library_size` items with exponent `gamma_r`.
    pub fn zipf(
        n_users: usize,
        radius: f64,
        library_size: usize,
        gamma_r: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        Self::new(
            n_users,
            DiskConfig::new(radius)?,
            Arc::new(PopularityProfile::zipf(library_size, gamma_r)?),
            ChannelConfig::new(alpha, beta)?,
        )
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn disk(&self) -> &DiskConfig {
        &self.disk
    }

    pub fn radius(&self) -> f64 {
        self.disk.radius()
    }

    pub fn profile(&self) -> &PopularityProfile {
        &self.profile
    }

    pub fn shared_profile(&self) -> Arc<PopularityProfile> {
        Arc::clone(&self.profile)
    }

    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }

    pub fn with_channel(mut self, channel: ChannelConfig) -> Self {
        self.channel = channel;
        self
    }

    pub fn with_disk(mut self, disk: DiskConfig) -> Self {
        self.disk = disk;
        self
    }

    pub fn mode_probabilities(&self) -> ModeProbabilities {
        compute_mode_probabilities(&self.profile, self.n_users)
            .expect("user count validated at construction")
    }

    pub fn hitting_probability(&self) -> f64 {
        self.profile
            .hitting_probability(self.n_users)
            .expect("user count validated at construction")
    }
}

/// Receiver type of the user of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    /// Half-duplex receiver, no self-interference.
    Hdrx,
    /// Full-duplex transceiver, receives while transmitting.
    Fdtr,
}

/// Where a [`SuccessCurve`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSource {
    Analytic,
    Simulated,
}

/// Success probability at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessPoint {
    pub p_total: f64,
    pub p_cache: f64,
    pub p_sir: f64,
}

/// Success probability over a grid of linear SIR thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    pub thetas: Vec<f64>,
    pub p_cache: f64,
    pub p_sir: Vec<f64>,
    pub p_total: Vec<f64>,
    pub source: CurveSource,
    /// 95% normal-approximation half widths; simulated curves only.
    pub ci_halfwidth: Option<Vec<f64>>,
    /// Binomial mass of the transmitter-count terms that were evaluated,
    /// counting `n_t = 0` (which contributes nothing). Analytic curves only.
    pub retained_mass: Option<f64>,
}

/// Quadrature nodes for one panel, with the density folded into the weight.
#[derive(Debug, Clone, Default)]
struct DensityNodes {
    /// `z^α`.
    powered: Vec<f64>,
    /// `quadrature weight × density`.
    weight: Vec<f64>,
}

impl DensityNodes {
    /// Nodes for the link-distance law `f_Z(·|q)`, both branches.
    fn link(q: f64, radius: f64, alpha: f64, rule: &GaussLegendre) -> Self {
        let mut out = DensityNodes::default();
        let mut push = |z: f64, w: f64| {
            out.powered.push(z.powf(alpha));
            out.weight.push(w);
        };
        for (z, w) in rule.panel(0.0, radius - q) {
            push(z, w * link_branch_inner(z, radius));
        }
        if q > 0.0 {
            for (z, w) in rule.smoothed_panel(radius - q, radius + q) {
                push(z, w * link_branch_outer(z, q, radius));
            }
        }
        out
    }
}

/// The `(v, t)` grid of per-interferer factors at one value of `s`.
struct TransformGrid {
    s: f64,
    beta: f64,
    self_interference: SelfInterference,
    /// `quadrature weight × 2v/R²` for each `v` node.
    v_weight: Vec<f64>,
    t_weight: Vec<f64>,
    /// Row-major `E(v_i, t_j; s)`.
    per_interferer: Vec<f64>,
    /// Serving-link nodes for each `v` node.
    serving: Vec<DensityNodes>,
}

impl TransformGrid {
    fn build(s: f64, cfg: &ModelConfig, spec: &QuadratureSpec) -> Self {
        let radius = cfg.radius();
        let alpha = cfg.channel.alpha;
        let r2 = radius * radius;

        let evaluations = spec.laplace_evaluations();
        if evaluations > EVALUATION_BUDGET {
            log::warn!(
                "interference transform uses {evaluations} integrand evaluations per call \
                 (budget {EVALUATION_BUDGET})"
            );
        }

        let v_rule = GaussLegendre::new(spec.nodes(Level::V));
        let t_rule = GaussLegendre::new(spec.nodes(Level::T));
        let z0_rule = GaussLegendre::new(spec.nodes(Level::Z0));
        let angle_rule = GaussLegendre::new(spec.nodes(Level::Angle));
        let zi_rule = GaussLegendre::new(spec.nodes(Level::Zi));

        let v_nodes: Vec<(f64, f64)> = v_rule
            .panel(0.0, radius)
            .map(|(v, w)| (v, w * 2.0 * v / r2))
            .collect();
        let t_nodes: Vec<(f64, f64)> = t_rule
            .panel(0.0, radius)
            .map(|(t, w)| (t, w * 2.0 * t / r2))
            .collect();
        // Angle weights carry the uniform density 1/π.
        let angles: Vec<(f64, f64)> = angle_rule
            .panel(0.0, std::f64::consts::PI)
            .map(|(phi, w)| (phi.cos(), w / std::f64::consts::PI))
            .collect();

        let interferer_links: Vec<DensityNodes> = t_nodes
            .iter()
            .map(|&(t, _)| DensityNodes::link(t, radius, alpha, &zi_rule))
            .collect();

        let mut per_interferer = vec![1.0; v_nodes.len() * t_nodes.len()];
        if s > 0.0 {
            let mut w_powered = vec![0.0; angles.len()];
            for (i, &(v, _)) in v_nodes.iter().enumerate() {
                for (j, &(t, _)) in t_nodes.iter().enumerate() {
                    for (wp, &(cos_phi, _)) in w_powered.iter_mut().zip(&angles) {
                        let w2 = (v * v + t * t - 2.0 * v * t * cos_phi).max(0.0);
                        *wp = w2.powf(0.5 * alpha);
                    }
                    let links = &interferer_links[j];
                    // 1 - J = s z^α / (w^α + s z^α)
                    let mut loss = 0.0;
                    for (&wp, &(_, aw)) in w_powered.iter().zip(&angles) {
                        let mut inner = 0.0;
                        for (&zp, &dw) in links.powered.iter().zip(&links.weight) {
                            let sz = s * zp;
                            let denom = wp + sz;
                            if denom > 0.0 {
                                inner += dw * sz / denom;
                            }
                        }
                        loss += aw * inner;
                    }
                    per_interferer[i * t_nodes.len() + j] = (1.0 - loss).clamp(0.0, 1.0);
                }
            }
        }

        let serving = v_nodes
            .iter()
            .map(|&(v, _)| DensityNodes::link(v, radius, alpha, &z0_rule))
            .collect();

        TransformGrid {
            s,
            beta: cfg.channel.beta,
            self_interference: cfg.channel.self_interference,
            v_weight: v_nodes.iter().map(|&(_, w)| w).collect(),
            t_weight: t_nodes.iter().map(|&(_, w)| w).collect(),
            per_interferer,
            serving,
        }
    }

    /// `S(v_i; s, k)`: expected `exp(-s β k z0^α)` over the serving link.
    fn serving_factor(&self, i: usize, terms: usize) -> f64 {
        let c = self.s * self.beta * terms as f64;
        if c == 0.0 {
            return 1.0;
        }
        let nodes = &self.serving[i];
        let loss: f64 = nodes
            .powered
            .iter()
            .zip(&nodes.weight)
            .map(|(&zp, &w)| w * -(-c * zp).exp_m1())
            .sum();
        (1.0 - loss).clamp(0.0, 1.0)
    }

    fn laplace(&self, kind: ReceiverKind, n_t: usize) -> f64 {
        debug_assert!(n_t >= 1);
        let interferers = n_t - 1;
        let si_terms = self.self_interference.terms(interferers);
        let needs_serving = kind == ReceiverKind::Fdtr && si_terms > 0;
        if interferers == 0 && !needs_serving {
            return 1.0;
        }
        let cols = self.t_weight.len();
        let mut loss = 0.0;
        for (i, &wv) in self.v_weight.iter().enumerate() {
            let row = &self.per_interferer[i * cols..(i + 1) * cols];
            let serving = if needs_serving {
                self.serving_factor(i, si_terms)
            } else {
                1.0
            };
            let inner: f64 = row
                .iter()
                .zip(&self.t_weight)
                .map(|(&e, &wt)| wt * (1.0 - e.powi(interferers as i32) * serving))
                .sum();
            loss += wv * inner;
        }
        (1.0 - loss).clamp(0.0, 1.0)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(
            "theta",
            format!("{theta} must be positive and finite"),
        ));
    }
    Ok(())
}

/// Laplace transform of the interference seen by a receiver of type `kind`
/// when `n_t` nodes transmit (the serving node among them).
pub fn laplace_interference(
    s: f64,
    kind: ReceiverKind,
    n_t: usize,
    cfg: &ModelConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid(
            "s",
            format!("{s} must be nonnegative and finite"),
        ));
    }
    if n_t == 0 {
        return Err(Error::invalid("n_t", "at least the serving node transmits"));
    }
    Ok(TransformGrid::build(s, cfg, spec).laplace(kind, n_t))
}

/// Probability of being served from the own cache, `P_hit / N`.
pub fn success_probability_cache(cfg: &ModelConfig) -> f64 {
    cfg.hitting_probability() / cfg.n_users as f64
}

/// Success probability at linear SIR threshold `theta`, summing over every
/// transmitter count `1..=N`.
pub fn success_probability(
    cfg: &ModelConfig,
    theta: f64,
    spec: &QuadratureSpec,
) -> Result<SuccessPoint> {
    check_theta(theta)?;
    let modes = cfg.mode_probabilities();
    let pmf = transmitter_count_pmf(modes.p_tx, cfg.n_users)?;
    let grid = TransformGrid::build(theta, cfg, spec);
    let p_sir: f64 = (1..=cfg.n_users)
        .map(|n_t| conditional_success(&grid, &modes, n_t) * pmf.mass(n_t))
        .sum();
    let p_cache = success_probability_cache(cfg);
    Ok(SuccessPoint {
        p_total: p_cache + p_sir,
        p_cache,
        p_sir,
    })
}

/// `P_HDRX L_HDRX + P_FDTR L_FDTR` for a fixed transmitter count.
fn conditional_success(grid: &TransformGrid, modes: &ModeProbabilities, n_t: usize) -> f64 {
    let mut q = 0.0;
    if modes.p_hdrx > 0.0 {
        q += modes.p_hdrx * grid.laplace(ReceiverKind::Hdrx, n_t);
    }
    if modes.p_fdtr > 0.0 {
        q += modes.p_fdtr * grid.laplace(ReceiverKind::Fdtr, n_t);
    }
    q
}

/// Analytic success curve over ascending linear thresholds.
///
/// Thresholds are evaluated in parallel; the result does not depend on the
/// number of workers. Transmitter counts whose binomial mass is below
/// [`PRUNE_MASS`] are skipped.
pub fn success_curve(
    cfg: &ModelConfig,
    thetas: &[f64],
    spec: &QuadratureSpec,
) -> Result<SuccessCurve> {
    for &theta in thetas {
        check_theta(theta)?;
    }
    if thetas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid(
            "thetas",
            "thresholds must be sorted ascending",
        ));
    }
    let modes = cfg.mode_probabilities();
    let pmf = transmitter_count_pmf(modes.p_tx, cfg.n_users)?;
    let counts: Vec<usize> = (1..=cfg.n_users)
        .filter(|&n_t| pmf.mass(n_t) >= PRUNE_MASS)
        .collect();
    let retained_mass = pmf.mass(0) + counts.iter().map(|&n| pmf.mass(n)).sum::<f64>();

    let p_sir: Vec<f64> = thetas
        .par_iter()
        .map(|&theta| {
            let grid = TransformGrid::build(theta, cfg, spec);
            counts
                .iter()
                .map(|&n_t| conditional_success(&grid, &modes, n_t) * pmf.mass(n_t))
                .sum()
        })
        .collect();

    let p_cache = success_probability_cache(cfg);
    Ok(SuccessCurve {
        thetas: thetas.to_vec(),
        p_cache,
        p_total: p_sir.iter().map(|p| p_cache + p).collect(),
        p_sir,
        source: CurveSource::Analytic,
        ci_halfwidth: None,
        retained_mass: Some(retained_mass),
    })
}
