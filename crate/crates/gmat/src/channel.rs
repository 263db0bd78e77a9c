//! Correlated Rayleigh channel episodes and the delayed-CSIT visibility rule.
//!
//! Each slot draws an independent K x K matrix H(t) = Rr^(1/2) Hw(t) Rt^(1/2)
//! with Hw i.i.d. circularly-symmetric complex Gaussian of unit variance per
//! entry; row i of H(t) is the transposed channel vector of user i. The
//! transmitter side only ever sees a [`CsitView`], which exposes strictly
//! past slots.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::numerics::{hermitian_sqrt, HermitianMatrix};
use crate::protocol::Schedule;
use crate::{CMat, CVec, Error, Result, C64};

/// Fading parameters of one simulation stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingConfig {
    pub users: usize,
    /// Transmit-side correlation coefficient in [0, 1).
    pub tau_t: f64,
    /// Receive-side correlation coefficient in [0, 1).
    pub tau_r: f64,
    pub seed: u64,
}

impl FadingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users < 2 {
            return Err(Error::UsersOutOfRange(self.users));
        }
        check_tau(self.tau_t)?;
        check_tau(self.tau_r)?;
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..1.0).contains(&tau) || !tau.is_finite() {
        return Err(Error::TauOutOfRange(tau));
    }
    Ok(())
}

/// Exponential correlation matrix with entry (i, j) = tau^|i-j|; positive
/// definite for tau in [0, 1).
pub fn correlation_matrix(k: usize, tau: f64) -> Result<HermitianMatrix> {
    check_tau(tau)?;
    let m = CMat::from_fn(k, k, |i, j| {
        C64::from(tau.powi((i as i32 - j as i32).abs()))
    });
    HermitianMatrix::new(m)
}

/// All channel matrices of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEpisode {
    users: usize,
    slots: Vec<CMat>,
}

impl ChannelEpisode {
    /// Wrap explicit slot matrices (each K x K with finite entries).
    pub fn from_slots(users: usize, slots: Vec<CMat>) -> Result<Self> {
        for (t, m) in slots.iter().enumerate() {
            if m.nrows() != users || m.ncols() != users {
                return Err(Error::DimensionMismatch {
                    expected: users,
                    got: m.nrows().max(m.ncols()),
                    context: "episode slot matrix",
                });
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::SlotOutOfRange {
                    slot: t,
                    total: slots.len(),
                });
            }
        }
        Ok(Self { users, slots })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn total_slots(&self) -> usize {
        self.slots.len()
    }

    /// The K x K matrix H(t); row i is h_i^T(t).
    pub fn slot(&self, t: usize) -> &CMat {
        &self.slots[t]
    }

    /// Channel vector h_i(t) of `user` in slot `t`, as a column.
    pub fn h(&self, user: usize, t: usize) -> CVec {
        self.slots[t].row(user).transpose()
    }

    /// Single coefficient h_{i, antenna}(t).
    pub fn coeff(&self, user: usize, antenna: usize, t: usize) -> C64 {
        self.slots[t][(user, antenna)]
    }
}

/// Reusable sampler holding the correlation square roots.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    users: usize,
    rt_sqrt: CMat,
    rr_sqrt: CMat,
}

impl ChannelSampler {
    pub fn new(cfg: &FadingConfig) -> Result<Self> {
        cfg.validate()?;
        let rt = correlation_matrix(cfg.users, cfg.tau_t)?;
        let rr = correlation_matrix(cfg.users, cfg.tau_r)?;
        Ok(Self {
            users: cfg.users,
            rt_sqrt: hermitian_sqrt(&rt)?,
            rr_sqrt: hermitian_sqrt(&rr)?,
        })
    }

    /// Draw `total_slots` independent slot matrices from `rng`.
    pub fn sample(&self, total_slots: usize, rng: &mut impl Rng) -> ChannelEpisode {
        let k = self.users;
        let slots = (0..total_slots)
            .map(|_| {
                let hw = CMat::from_fn(k, k, |_, _| {
                    C64::new(
                        FRAC_1_SQRT_2 * rng.sample::<f64, _>(StandardNormal),
                        FRAC_1_SQRT_2 * rng.sample::<f64, _>(StandardNormal),
                    )
                });
                &self.rr_sqrt * hw * &self.rt_sqrt
            })
            .collect();
        ChannelEpisode { users: k, slots }
    }
}

/// Sample one episode reproducibly from the config seed.
pub fn sample_episode(cfg: &FadingConfig, schedule: &Schedule) -> Result<ChannelEpisode> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_episode_with(cfg, schedule, &mut rng)
}

/// Sample one episode from an explicit generator (one generator per worker;
/// no shared mutable state).
pub fn sample_episode_with(
    cfg: &FadingConfig,
    schedule: &Schedule,
    rng: &mut impl Rng,
) -> Result<ChannelEpisode> {
    if cfg.users != schedule.users() {
        return Err(Error::DimensionMismatch {
            expected: schedule.users(),
            got: cfg.users,
            context: "fading config user count",
        });
    }
    let sampler = ChannelSampler::new(cfg)?;
    Ok(sampler.sample(schedule.total_slots(), rng))
}

/// Delayed-CSIT view at one moment: slots 0..now are known, the present and
/// future are not reachable at all.
#[derive(Debug, Clone, Copy)]
pub struct CsitView<'a> {
    episode: &'a ChannelEpisode,
    now: usize,
}

/// View of `episode` at slot `now` (0-based, about to be transmitted):
/// exposes exactly the slots before it.
pub fn csit_at(episode: &ChannelEpisode, now: usize) -> Result<CsitView<'_>> {
    if now >= episode.total_slots() {
        return Err(Error::SlotOutOfRange {
            slot: now,
            total: episode.total_slots(),
        });
    }
    Ok(CsitView { episode, now })
}

impl<'a> CsitView<'a> {
    pub fn users(&self) -> usize {
        self.episode.users()
    }

    /// Number of visible slots (0..now).
    pub fn known_slots(&self) -> usize {
        self.now
    }

    /// Channel vector of `user` in a past slot.
    ///
    /// Panics when `t >= now`: present or future slots cannot be read
    /// through a view, which is what keeps precoder computations honest.
    pub fn h(&self, user: usize, t: usize) -> CVec {
        assert!(
            t < self.now,
            "delayed-CSIT violation: slot {t} not visible at slot {}",
            self.now
        );
        self.episode.h(user, t)
    }

    /// Squared norm of a past channel vector.
    pub fn h_norm_squared(&self, user: usize, t: usize) -> f64 {
        self.h(user, t).norm_squared()
    }
}
