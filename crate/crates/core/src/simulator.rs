//! Monte Carlo of the full network.
//!
//! One trial drops `N` users uniformly in the disk, gives user `κ` content
//! `κ`, draws one Zipf request per user, classifies every user's operating
//! mode and evaluates the SIR of each receiving user under Rayleigh fading and
//! full channel inversion. Trials are seeded from `(master_seed, trial_index)`
//! only, and tallies are integer counts, so results are bit-identical for any
//! worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::analytic::{ChannelConfig, CurveSource, ModelConfig, SuccessCurve};
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform_disk, Point2D};
use crate::modes::OperatingMode;
use crate::popularity::PopularityProfile;

/// Which users of a trial contribute success samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluate {
    /// Every user of every trial.
    #[default]
    AllUsers,
    /// One uniformly chosen user per trial; samples are independent.
    OneRandomUser,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    pub master_seed: u64,
    pub evaluate: Evaluate,
}

impl SimConfig {
    pub fn new(trials: u64, master_seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("trials", "at least one trial is required"));
        }
        Ok(SimConfig {
            trials,
            master_seed,
            evaluate: Evaluate::AllUsers,
        })
    }

    pub fn with_evaluate(mut self, evaluate: Evaluate) -> Self {
        self.evaluate = evaluate;
        self
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `index`; depends on nothing else.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index.wrapping_mul(0xD134_2543_DE82_EF95))
}

pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master_seed, index))
}

/// Modes of one request vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub modes: Vec<OperatingMode>,
    /// Users with at least one other user requesting their content, ascending.
    pub transmitters: Vec<usize>,
    /// For each user, the other users requesting its content, ascending.
    pub requesters: Vec<Vec<usize>>,
    /// For each user whose request is cached by another user, that user.
    pub server_of: Vec<Option<usize>>,
}

/// Classifies every user given its request.
///
/// Users are zero-based; `requests[u]` is a one-based content index and user
/// `u` caches content `u + 1`.
pub fn classify_modes(requests: &[usize], n_users: usize) -> Classification {
    assert_eq!(requests.len(), n_users, "one request per user");
    let mut requesters = vec![Vec::new(); n_users];
    for (u, &r) in requests.iter().enumerate() {
        let owner = r - 1;
        if owner < n_users && owner != u {
            requesters[owner].push(u);
        }
    }
    let server_of: Vec<Option<usize>> = requests
        .iter()
        .enumerate()
        .map(|(u, &r)| (r <= n_users && r - 1 != u).then_some(r - 1))
        .collect();

    let modes = (0..n_users)
        .map(|u| {
            let own = requests[u] == u + 1;
            let demanded = !requesters[u].is_empty();
            match (own, server_of[u], demanded) {
                (true, _, false) => OperatingMode::SelfRequest,
                (true, _, true) => OperatingMode::SelfRequestHdtx,
                (false, Some(_), false) => OperatingMode::Hdrx,
                (false, Some(server), true) => {
                    if requests[server] == u + 1 {
                        OperatingMode::Bfd
                    } else {
                        OperatingMode::Tnfd
                    }
                }
                (false, None, true) => OperatingMode::Hdtx,
                (false, None, false) => OperatingMode::HittingOutage,
            }
        })
        .collect();
    let transmitters = (0..n_users)
        .filter(|&u| !requesters[u].is_empty())
        .collect();
    Classification {
        modes,
        transmitters,
        requesters,
        server_of,
    }
}

/// One sampled network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub positions: Vec<Point2D>,
    /// One-based content index requested by each user.
    pub requests: Vec<usize>,
    pub modes: Vec<OperatingMode>,
    pub transmitters: Vec<usize>,
    /// Receiver each transmitter power-controls towards.
    pub serve_target: Vec<Option<usize>>,
    /// Caching user that serves each D2D requester.
    pub server_of: Vec<Option<usize>>,
}

fn sample_requests<R: Rng + ?Sized>(
    profile: &PopularityProfile,
    n: usize,
    rng: &mut R,
) -> Vec<usize> {
    (0..n).map(|_| profile.sample_request(rng)).collect()
}

/// Drops the users, draws their requests and picks every transmitter's
/// target uniformly among its requesters.
pub fn sample_network<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> NetworkRealization {
    let n = cfg.n_users();
    let positions: Vec<Point2D> = (0..n)
        .map(|_| sample_uniform_disk(cfg.disk(), rng))
        .collect();
    let requests = sample_requests(cfg.profile(), n, rng);
    let class = classify_modes(&requests, n);
    let mut serve_target = vec![None; n];
    for &tx in &class.transmitters {
        let who = &class.requesters[tx];
        serve_target[tx] = Some(who[rng.random_range(0..who.len())]);
    }
    NetworkRealization {
        positions,
        requests,
        modes: class.modes,
        transmitters: class.transmitters,
        serve_target,
        server_of: class.server_of,
    }
}

/// What happened to one user in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UserOutcome {
    /// Served from its own cache.
    Cached,
    /// Received over D2D with this SIR (infinite without interference).
    Link { sir: f64 },
    /// Never gets its content in this slot.
    Outage,
}

impl UserOutcome {
    pub fn succeeds(&self, theta: f64) -> bool {
        match *self {
            UserOutcome::Cached => true,
            UserOutcome::Link { sir } => sir >= theta,
            UserOutcome::Outage => false,
        }
    }
}

/// SIR of receiver `u` served by `server`.
///
/// The server is taken to power-control towards `u`, so the useful signal is
/// the fading gain alone. Every other transmitter interferes with its power
/// inverted towards its own target. `full_duplex` adds residual
/// self-interference over the serving-link length.
fn link_sir<R: Rng + ?Sized>(
    net: &NetworkRealization,
    u: usize,
    server: usize,
    full_duplex: bool,
    channel: &ChannelConfig,
    rng: &mut R,
) -> f64 {
    let alpha = channel.alpha();
    let x = net.positions[u];
    let signal: f64 = rng.sample(Exp1);
    let mut interference = 0.0;
    let mut interferers = 0usize;
    for &nu in &net.transmitters {
        if nu == server || nu == u {
            continue;
        }
        let target = net.serve_target[nu].expect("transmitters have a target");
        let y = net.positions[nu];
        let h: f64 = rng.sample(Exp1);
        interference += h * (y.distance(&net.positions[target]) / y.distance(&x)).powf(alpha);
        interferers += 1;
    }
    if full_duplex && channel.beta() > 0.0 {
        let terms = channel.self_interference().terms(interferers) as f64;
        let z0 = net.positions[server].distance(&x);
        interference += terms * channel.beta() * z0.powf(alpha);
    }
    if interference > 0.0 {
        signal / interference
    } else {
        f64::INFINITY
    }
}

/// Outcome of user `u`; draws fading only for D2D receivers.
pub fn evaluate_user<R: Rng + ?Sized>(
    net: &NetworkRealization,
    u: usize,
    channel: &ChannelConfig,
    rng: &mut R,
) -> UserOutcome {
    let mode = net.modes[u];
    if mode.is_cached() {
        UserOutcome::Cached
    } else if mode.is_receiving() {
        let server = net.server_of[u].expect("receivers have a server");
        UserOutcome::Link {
            sir: link_sir(net, u, server, mode.is_full_duplex(), channel, rng),
        }
    } else {
        UserOutcome::Outage
    }
}

/// One network with the outcomes of the evaluated users.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSample {
    pub network: NetworkRealization,
    /// `None` for users not evaluated in this trial.
    pub outcomes: Vec<Option<UserOutcome>>,
}

/// Samples a network and evaluates the users selected by `evaluate`.
pub fn sample_trial<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    evaluate: Evaluate,
    rng: &mut R,
) -> TrialSample {
    let network = sample_network(cfg, rng);
    let n = cfg.n_users();
    let mut outcomes = vec![None; n];
    match evaluate {
        Evaluate::AllUsers => {
            for (u, slot) in outcomes.iter_mut().enumerate() {
                *slot = Some(evaluate_user(&network, u, cfg.channel(), rng));
            }
        }
        Evaluate::OneRandomUser => {
            let u = rng.random_range(0..n);
            outcomes[u] = Some(evaluate_user(&network, u, cfg.channel(), rng));
        }
    }
    TrialSample { network, outcomes }
}

/// Per-user success indicators and modes of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub modes: Vec<OperatingMode>,
    pub success: Vec<Option<bool>>,
}

/// One trial at threshold `theta` (linear scale).
pub fn run_trial<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    sim: &SimConfig,
    theta: f64,
    rng: &mut R,
) -> TrialResult {
    let sample = sample_trial(cfg, sim.evaluate, rng);
    TrialResult {
        success: sample
            .outcomes
            .iter()
            .map(|o| o.map(|o| o.succeeds(theta)))
            .collect(),
        modes: sample.network.modes,
    }
}

/// Empirical mode and transmitter-count frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFrequencies {
    pub counts: [u64; 7],
    /// Number of user observations behind `counts`.
    pub samples: u64,
    pub trials: u64,
    /// `transmitter_hist[k]`: trials with exactly `k` transmitters.
    pub transmitter_hist: Vec<u64>,
}

impl ModeFrequencies {
    fn new(n_users: usize) -> Self {
        ModeFrequencies {
            counts: [0; 7],
            samples: 0,
            trials: 0,
            transmitter_hist: vec![0; n_users + 1],
        }
    }

    fn merge(mut self, other: &ModeFrequencies) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self
            .transmitter_hist
            .iter_mut()
            .zip(&other.transmitter_hist)
        {
            *a += b;
        }
        self.samples += other.samples;
        self.trials += other.trials;
        self
    }

    pub fn count(&self, mode: OperatingMode) -> u64 {
        self.counts[mode.index()]
    }

    pub fn frequency(&self, mode: OperatingMode) -> f64 {
        self.count(mode) as f64 / self.samples as f64
    }

    /// `BFD + TNFD`.
    pub fn fdtr_frequency(&self) -> f64 {
        (self.count(OperatingMode::Bfd) + self.count(OperatingMode::Tnfd)) as f64
            / self.samples as f64
    }

    pub fn transmit_frequency(&self) -> f64 {
        let tx: u64 = OperatingMode::ALL
            .iter()
            .filter(|m| m.is_transmitting())
            .map(|&m| self.count(m))
            .sum();
        tx as f64 / self.samples as f64
    }

    pub fn transmitter_frequency(&self, k: usize) -> f64 {
        self.transmitter_hist.get(k).copied().unwrap_or(0) as f64 / self.trials as f64
    }
}

/// Request-only census of operating modes: no geometry, no fading.
pub fn mode_census(
    profile: &PopularityProfile,
    n_users: usize,
    sim: &SimConfig,
) -> Result<ModeFrequencies> {
    profile.check_users(n_users)?;
    let out = (0..sim.trials)
        .into_par_iter()
        .fold(
            || ModeFrequencies::new(n_users),
            |mut acc, i| {
                let mut rng = trial_rng(sim.master_seed, i);
                let requests = sample_requests(profile, n_users, &mut rng);
                let class = classify_modes(&requests, n_users);
                record_modes(
                    &mut acc,
                    &class.modes,
                    class.transmitters.len(),
                    sim.evaluate,
                    &mut rng,
                );
                acc
            },
        )
        .reduce(|| ModeFrequencies::new(n_users), |a, b| a.merge(&b));
    Ok(out)
}

fn record_modes<R: Rng + ?Sized>(
    acc: &mut ModeFrequencies,
    modes: &[OperatingMode],
    transmitters: usize,
    evaluate: Evaluate,
    rng: &mut R,
) {
    match evaluate {
        Evaluate::AllUsers => {
            for m in modes {
                acc.counts[m.index()] += 1;
            }
            acc.samples += modes.len() as u64;
        }
        Evaluate::OneRandomUser => {
            let u = rng.random_range(0..modes.len());
            acc.counts[modes[u].index()] += 1;
            acc.samples += 1;
        }
    }
    acc.transmitter_hist[transmitters] += 1;
    acc.trials += 1;
}

#[derive(Debug, Clone)]
struct Tally {
    successes: Vec<u64>,
    cached: u64,
    modes: ModeFrequencies,
}

impl Tally {
    fn new(n_thetas: usize, n_users: usize) -> Self {
        Tally {
            successes: vec![0; n_thetas],
            cached: 0,
            modes: ModeFrequencies::new(n_users),
        }
    }

    fn merge(mut self, other: Tally) -> Self {
        for (a, b) in self.successes.iter_mut().zip(&other.successes) {
            *a += b;
        }
        self.cached += other.cached;
        self.modes = self.modes.merge(&other.modes);
        self
    }
}

/// Simulated success curve together with the observed mode frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub curve: SuccessCurve,
    pub modes: ModeFrequencies,
}

/// Runs `sim.trials` independent trials and averages the success indicator
/// over the evaluated users at every threshold (linear scale).
///
/// Uses the ambient rayon pool; the output does not depend on its size.
pub fn run_experiment(
    cfg: &ModelConfig,
    sim: &SimConfig,
    thetas: &[f64],
) -> Result<ExperimentReport> {
    if let Some(bad) = thetas.iter().find(|t| !(**t > 0.0) || t.is_nan()) {
        return Err(Error::invalid("theta", format!("{bad} must be positive")));
    }
    let n = cfg.n_users();
    let tally = (0..sim.trials)
        .into_par_iter()
        .fold(
            || Tally::new(thetas.len(), n),
            |mut acc, i| {
                let mut rng = trial_rng(sim.master_seed, i);
                let sample = sample_trial(cfg, sim.evaluate, &mut rng);
                for (u, outcome) in sample.outcomes.iter().enumerate() {
                    let Some(outcome) = outcome else { continue };
                    acc.modes.counts[sample.network.modes[u].index()] += 1;
                    acc.modes.samples += 1;
                    if matches!(outcome, UserOutcome::Cached) {
                        acc.cached += 1;
                    }
                    for (k, &theta) in thetas.iter().enumerate() {
                        if outcome.succeeds(theta) {
                            acc.successes[k] += 1;
                        }
                    }
                }
                acc.modes.transmitter_hist[sample.network.transmitters.len()] += 1;
                acc.modes.trials += 1;
                acc
            },
        )
        .reduce(|| Tally::new(thetas.len(), n), Tally::merge);

    let samples = tally.modes.samples as f64;
    let p_total: Vec<f64> = tally
        .successes
        .iter()
        .map(|&s| s as f64 / samples)
        .collect();
    let p_cache = tally.cached as f64 / samples;
    let ci = p_total
        .iter()
        .map(|p| 1.96 * (p * (1.0 - p) / samples).sqrt())
        .collect();
    Ok(ExperimentReport {
        curve: SuccessCurve {
            thetas: thetas.to_vec(),
            p_cache,
            p_sir: p_total.iter().map(|p| p - p_cache).collect(),
            p_total,
            source: CurveSource::Simulated,
            ci_halfwidth: Some(ci),
            retained_mass: None,
        },
        modes: tally.modes,
    })
}
