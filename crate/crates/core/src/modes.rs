//! Operating-mode probabilities of an arbitrary user, the transmit probability
//! and the law of the number of concurrent transmitters.

use std::fmt;

use crate::error::{Error, Result};
use crate::popularity::PopularityProfile;

/// Operating mode of a single user in one slot.
///
/// `Bfd` and `Tnfd` together make up the full-duplex transceiver (FDTR) mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatingMode {
    /// Own cache hit, nobody wants our content.
    SelfRequest,
    /// Own cache hit while serving someone else.
    SelfRequestHdtx,
    /// Exchanging contents with the node that serves us.
    Bfd,
    /// Receiving from one node while serving a different one.
    Tnfd,
    /// Receiving over D2D, not serving anyone.
    Hdrx,
    /// Content not cached anywhere, but serving someone.
    Hdtx,
    /// Content not cached anywhere and nobody wants ours.
    HittingOutage,
}

impl OperatingMode {
    pub const ALL: [OperatingMode; 7] = [
        OperatingMode::SelfRequest,
        OperatingMode::SelfRequestHdtx,
        OperatingMode::Bfd,
        OperatingMode::Tnfd,
        OperatingMode::Hdrx,
        OperatingMode::Hdtx,
        OperatingMode::HittingOutage,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_transmitting(self) -> bool {
        matches!(
            self,
            OperatingMode::SelfRequestHdtx
                | OperatingMode::Bfd
                | OperatingMode::Tnfd
                | OperatingMode::Hdtx
        )
    }

    pub fn is_full_duplex(self) -> bool {
        matches!(self, OperatingMode::Bfd | OperatingMode::Tnfd)
    }

    /// Served from its own cache.
    pub fn is_cached(self) -> bool {
        matches!(
            self,
            OperatingMode::SelfRequest | OperatingMode::SelfRequestHdtx
        )
    }

    /// Receives its content over a D2D link.
    pub fn is_receiving(self) -> bool {
        matches!(
            self,
            OperatingMode::Hdrx | OperatingMode::Bfd | OperatingMode::Tnfd
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            OperatingMode::SelfRequest => "SR",
            OperatingMode::SelfRequestHdtx => "SR-HDTX",
            OperatingMode::Bfd => "BFD",
            OperatingMode::Tnfd => "TNFD",
            OperatingMode::Hdrx => "HDRX",
            OperatingMode::Hdtx => "HDTX",
            OperatingMode::HittingOutage => "HO",
        }
    }
}

impl fmt::Display for OperatingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Probabilities that an arbitrary user is in each operating mode, plus the
/// probability that it transmits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProbabilities {
    pub n_users: usize,
    pub p_sr: f64,
    pub p_sr_hdtx: f64,
    pub p_fdtr: f64,
    pub p_bfd: f64,
    pub p_tnfd: f64,
    pub p_hdrx: f64,
    pub p_hdtx: f64,
    pub p_ho: f64,
    pub p_tx: f64,
}

impl ModeProbabilities {
    /// Probability of a given (fine-grained) mode label.
    pub fn of(&self, mode: OperatingMode) -> f64 {
        match mode {
            OperatingMode::SelfRequest => self.p_sr,
            OperatingMode::SelfRequestHdtx => self.p_sr_hdtx,
            OperatingMode::Bfd => self.p_bfd,
            OperatingMode::Tnfd => self.p_tnfd,
            OperatingMode::Hdrx => self.p_hdrx,
            OperatingMode::Hdtx => self.p_hdtx,
            OperatingMode::HittingOutage => self.p_ho,
        }
    }

    /// `p_sr + p_sr_hdtx + p_fdtr + p_hdtx + p_hdrx + p_ho`; equals 1.
    pub fn total(&self) -> f64 {
        self.p_sr + self.p_sr_hdtx + self.p_fdtr + self.p_hdtx + self.p_hdrx + self.p_ho
    }
}

/// `(1 - ρ)^k` via `exp(k·ln(1-ρ))`, with `x^0 = 1` even for `ρ = 1`.
fn survival_pow(rho: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        (k as f64 * (-rho).ln_1p()).exp()
    }
}

/// Closed-form mode probabilities for `n_users` users caching contents
/// `1..=n_users` of `profile`.
pub fn compute_mode_probabilities(
    profile: &PopularityProfile,
    n_users: usize,
) -> Result<ModeProbabilities> {
    let p_hit = profile.hitting_probability(n_users)?;
    let n = n_users as f64;

    let mut m = ModeProbabilities {
        n_users,
        p_sr: 0.0,
        p_sr_hdtx: 0.0,
        p_fdtr: 0.0,
        p_bfd: 0.0,
        p_tnfd: 0.0,
        p_hdrx: 0.0,
        p_hdtx: 0.0,
        p_ho: 0.0,
        p_tx: 0.0,
    };
    for &rho in &profile.rho()[..n_users] {
        // Nobody else requests content κ.
        let idle = survival_pow(rho, n_users - 1);
        let demanded = 1.0 - idle;
        let elsewhere = p_hit - rho;

        m.p_sr += rho * idle;
        m.p_sr_hdtx += rho * demanded;
        m.p_fdtr += elsewhere * demanded;
        m.p_bfd += elsewhere * rho;
        m.p_tnfd += elsewhere * (1.0 - rho - idle);
        m.p_hdrx += elsewhere * idle;
        m.p_hdtx += (1.0 - p_hit) * demanded;
        m.p_ho += (1.0 - p_hit) * idle;
        m.p_tx += demanded;
    }
    for p in [
        &mut m.p_sr,
        &mut m.p_sr_hdtx,
        &mut m.p_fdtr,
        &mut m.p_bfd,
        &mut m.p_tnfd,
        &mut m.p_hdrx,
        &mut m.p_hdtx,
        &mut m.p_ho,
        &mut m.p_tx,
    ] {
        *p = (*p / n).clamp(0.0, 1.0);
    }
    Ok(m)
}

/// Probability that an arbitrary user transmits:
/// `(1/N) Σ_κ (1 - (1-ρ_κ)^{N-1})`.
pub fn transmit_probability(profile: &PopularityProfile, n_users: usize) -> Result<f64> {
    profile.check_users(n_users)?;
    let sum: f64 = profile.rho()[..n_users]
        .iter()
        .map(|&rho| 1.0 - survival_pow(rho, n_users - 1))
        .sum();
    Ok(sum / n_users as f64)
}

/// Binomial law of the number of concurrent transmitters.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitterCountPmf {
    pub n_users: usize,
    pub pmf: Vec<f64>,
}

impl TransmitterCountPmf {
    /// `P(N_t = k)`; zero outside `0..=N`.
    pub fn mass(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }
}

/// `Binomial(n_users, p_tx)` mass function, evaluated in log space so that
/// it stays accurate for `N` in the tens of thousands.
///
/// This treats users as transmitting independently. In a realized network
/// they are not (all transmit events derive from one request vector), so the
/// law matches the true transmitter count in mean only.
pub fn transmitter_count_pmf(p_tx: f64, n_users: usize) -> Result<TransmitterCountPmf> {
    if !(0.0..=1.0).contains(&p_tx) {
        return Err(Error::invalid("p_tx", format!("{p_tx} is not in [0, 1]")));
    }
    let n = n_users;
    let mut pmf = vec![0.0; n + 1];
    if p_tx == 0.0 {
        pmf[0] = 1.0;
    } else if p_tx == 1.0 {
        pmf[n] = 1.0;
    } else {
        let ln_p = p_tx.ln();
        let ln_q = (-p_tx).ln_1p();
        let mut ln_choose = 0.0;
        for (k, slot) in pmf.iter_mut().enumerate() {
            if k > 0 {
                ln_choose += ((n - k + 1) as f64 / k as f64).ln();
            }
            *slot = (ln_choose + k as f64 * ln_p + (n - k) as f64 * ln_q).exp();
        }
    }
    Ok(TransmitterCountPmf { n_users, pmf })
}
