//! Receiver-side quantities: MMSE filters and per-stream MSE, exact and
//! closed-form mutual information, per-slot sum rate, and high-SNR slope
//! estimation.
//!
//! Rates are reported in bits (base-2 logs). The exact mutual information
//! of one symbol vector pools every other branch (other users' and the
//! same user's other repetitions) into the whitening term, mirroring the
//! MMSE receiver's covariance.

use crate::channel::ChannelEpisode;
use crate::numerics::{logdet_hpd, orth_complement, HermitianMatrix};
use crate::protocol::{assemble_effective_channel, make_lifting_constants, PrecoderSet, Schedule};
use crate::{CMat, CVec, Error, Result, C64};

const LN_2: f64 = std::f64::consts::LN_2;

/// One averaged sample of a rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub snr_db: f64,
    /// Normalized power rho = P/K.
    pub rho: f64,
    /// Mean sum rate in bits per channel use.
    pub sum_rate: f64,
    pub realizations: usize,
    pub std_err: f64,
}

/// How the per-slot sum rate is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Exact log-det mutual information per symbol vector.
    ExactMi,
    /// Per-stream MMSE-receiver rate sum log2(1 + SINR_m).
    MmseSinr,
}

/// Received covariance I + rho * sum_b H_b H_b^H over `t` observations.
fn covariance(t: usize, channels: &[&CMat], rho: f64) -> CMat {
    let mut phi = CMat::identity(t, t);
    for h in channels {
        phi += (*h * h.adjoint()).map(|z| z * C64::from(rho));
    }
    phi
}

/// Optimum MMSE filter for one symbol vector:
/// `V = sqrt(rho) (I + rho * sum_all H H^H)^-1 H_desired`, where `all`
/// contains every branch arriving at this receiver (desired included).
pub fn mmse_filter(desired: &CMat, all: &[&CMat], rho: f64) -> CMat {
    let phi = covariance(desired.nrows(), all, rho);
    let chol = phi.cholesky().expect("received covariance is HPD");
    chol.solve(desired).map(|z| z * C64::from(rho.sqrt()))
}

/// Per-stream MSE matrix `E = I - rho H^H Phi^-1 H` of one symbol vector.
pub fn stream_mse_matrix(desired: &CMat, all: &[&CMat], rho: f64) -> CMat {
    let phi = covariance(desired.nrows(), all, rho);
    let chol = phi.cholesky().expect("received covariance is HPD");
    let x = chol.solve(desired);
    CMat::identity(desired.ncols(), desired.ncols())
        - (desired.adjoint() * x).map(|z| z * C64::from(rho))
}

/// Optimal total MSE of one symbol vector (trace of the MSE matrix).
pub fn mse_of_user(desired: &CMat, all: &[&CMat], rho: f64) -> f64 {
    stream_mse_matrix(desired, all, rho).trace().re
}

/// Exact mutual information of one symbol vector in bits:
/// `log2 det(I + (I + rho*sum_int H H^H)^-1 rho H_d H_d^H)`, computed as a
/// difference of two Cholesky log-dets.
pub fn mutual_information_exact(desired: &CMat, interferers: &[&CMat], rho: f64) -> Result<f64> {
    let phi_int = covariance(desired.nrows(), interferers, rho);
    let phi_full = &phi_int + (desired * desired.adjoint()).map(|z| z * C64::from(rho));
    let ld_full = logdet_hpd(&HermitianMatrix::from_hermitian_part(&phi_full))?;
    let ld_int = logdet_hpd(&HermitianMatrix::from_hermitian_part(&phi_int))?;
    Ok((ld_full - ld_int) / LN_2)
}

struct TwoUserSide {
    /// Own channel at the own phase-1 slot (h_A(1) for user A).
    h_own: CVec,
    /// Own channel at the peer's phase-1 slot (h_A(2) for user A).
    h_cross: CVec,
    /// |h_{i,1}(3)|^2, the slot-3 retransmission gain seen by this user.
    g3_sq: f64,
}

fn two_user_sides(episode: &ChannelEpisode) -> Result<(TwoUserSide, TwoUserSide)> {
    if episode.users() != 2 {
        return Err(Error::UsersOutOfRange(episode.users()));
    }
    let a = TwoUserSide {
        h_own: episode.h(0, 0),
        h_cross: episode.h(0, 1),
        g3_sq: episode.coeff(0, 0, 2).norm_sqr(),
    };
    let b = TwoUserSide {
        h_own: episode.h(1, 1),
        h_cross: episode.h(1, 0),
        g3_sq: episode.coeff(1, 0, 2).norm_sqr(),
    };
    Ok((a, b))
}

/// One user's closed-form mutual information in nats:
/// `log(1 + rho ||h_own||^2 + theta(w_own) / delta(w_peer))`.
fn closed_form_side(side: &TwoUserSide, w_own: &CVec, w_peer: &CVec, rho: f64) -> f64 {
    let n_own = side.h_own.norm_squared();
    let n_cross = side.h_cross.norm_squared();
    let own_proj = (side.h_own.adjoint() * w_own)[(0, 0)].norm_sqr();
    let cross_proj = (side.h_cross.adjoint() * w_peer)[(0, 0)].norm_sqr();
    let theta = (1.0 + rho * n_cross)
        * rho
        * side.g3_sq
        * (w_own.norm_squared() + rho * w_own.norm_squared() * n_own - rho * own_proj);
    let delta = (1.0 + rho * n_cross) * (1.0 + rho * side.g3_sq * w_peer.norm_squared())
        - rho * rho * side.g3_sq * cross_proj;
    (1.0 + rho * n_own + theta / delta).ln()
}

/// Closed-form 2-user mutual informations `(I_A, I_B)` in bits, valid for
/// arbitrary (w1, w2). Matches [`mutual_information_exact`] on the true
/// effective channels.
pub fn mutual_information_2user_closed(
    w1: &CVec,
    w2: &CVec,
    episode: &ChannelEpisode,
    rho: f64,
) -> Result<(f64, f64)> {
    let (a, b) = two_user_sides(episode)?;
    Ok((
        closed_form_side(&a, w1, w2, rho) / LN_2,
        closed_form_side(&b, w2, w1, rho) / LN_2,
    ))
}

/// Sum mutual information in the Rayleigh-quotient form, bits. Requires
/// unit-norm precoders (the symmetric power split under which the identity
/// is derived) and rho > 0.
pub fn sum_mi_rayleigh_form(
    w1: &CVec,
    w2: &CVec,
    episode: &ChannelEpisode,
    rho: f64,
) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::NonPositiveSnr(rho));
    }
    for w in [w1, w2] {
        let n = w.norm_squared();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitNorm(n));
        }
    }
    let (a, b) = two_user_sides(episode)?;
    let pa1 = orth_complement(&a.h_own)?.outer();
    let pa2 = orth_complement(&a.h_cross)?.outer();
    let pb1 = orth_complement(&b.h_cross)?.outer();
    let pb2 = orth_complement(&b.h_own)?.outer();
    let na1 = a.h_own.norm_squared();
    let na2 = a.h_cross.norm_squared();
    let nb1 = b.h_cross.norm_squared();
    let nb2 = b.h_own.norm_squared();
    let gamma1 = (1.0 + rho * na2) / (rho * a.g3_sq) + w2.norm_squared();
    let gamma2 = (1.0 + rho * nb1) / (rho * b.g3_sq) + w1.norm_squared();
    let reg = |gamma: f64, outer: &CMat| -> CMat {
        CMat::identity(2, 2).map(|z| z * C64::from(gamma)) + outer.map(|z| z * C64::from(rho))
    };
    let r1 = reg(1.0, &pa1).map(|z| z * C64::from(1.0 + rho * na2));
    let r2 = reg(gamma1, &pa2).map(|z| z * C64::from(1.0 + rho * na1));
    let q1 = reg(gamma2, &pb1).map(|z| z * C64::from(1.0 + rho * nb2));
    let q2 = reg(1.0, &pb2).map(|z| z * C64::from(1.0 + rho * nb1));
    let quad = |m: &CMat, w: &CVec| (w.adjoint() * m * w)[(0, 0)].re;
    let log_c = (1.0 + rho * na1).ln() + (1.0 + rho * nb2).ln();
    let sum = (1.0 + quad(&r1, w1) / quad(&r2, w2)).ln()
        + (1.0 + quad(&q2, w2) / quad(&q1, w1)).ln()
        + log_c;
    Ok(sum / LN_2)
}

/// Per-slot sum rate of one episode under one precoder set, in bits per
/// channel use: the sum over users and branches of each symbol vector's
/// rate, divided by the total slot count. True (non-virtual) effective
/// channels throughout.
///
/// Both modes are scored from the MSE matrix `E = I - rho H^H Phi^-1 H`
/// with Phi the full received covariance at that receiver: the exact
/// mutual information equals `-log2 det(E)` by the determinant lemma
/// (one factorization per receiver instead of one per symbol vector), and
/// the per-stream MMSE-receiver rate is `-sum_m log2 E_mm`.
pub fn sum_rate(
    episode: &ChannelEpisode,
    precoders: &PrecoderSet,
    schedule: &Schedule,
    rho: f64,
    mode: RateMode,
) -> Result<f64> {
    let users = schedule.users();
    let branches = schedule.branches();
    let constants = make_lifting_constants(schedule, episode)?;
    let mut channels = Vec::with_capacity(users * users * branches);
    for receiver in 0..users {
        for owner in 0..users {
            for branch in 0..branches {
                let h = assemble_effective_channel(
                    schedule, receiver, owner, branch, episode, precoders, &constants, false,
                )?;
                channels.push(h.into_matrix());
            }
        }
    }
    let mut total = 0.0;
    for receiver in 0..users {
        let recv_all: Vec<&CMat> = (0..users * branches)
            .map(|i| &channels[receiver * users * branches + i])
            .collect();
        let phi = covariance(schedule.total_slots(), &recv_all, rho);
        let chol = phi.cholesky().ok_or(Error::NotPositiveDefinite {
            context: "received covariance",
        })?;
        for branch in 0..branches {
            let desired = &channels[(receiver * users + receiver) * branches + branch];
            let x = chol.solve(desired);
            let e =
                CMat::identity(users, users) - (desired.adjoint() * x).map(|z| z * C64::from(rho));
            match mode {
                RateMode::ExactMi => {
                    total += -logdet_hpd(&HermitianMatrix::from_hermitian_part(&e))? / LN_2;
                }
                RateMode::MmseSinr => {
                    for m in 0..users {
                        let mse = e[(m, m)].re;
                        // Per-stream SINR = 1/mse - 1, so the rate is -log2(mse).
                        total += -(mse.max(f64::MIN_POSITIVE)).ln() / LN_2;
                    }
                }
            }
        }
    }
    Ok(total / schedule.total_slots() as f64)
}

/// Least-squares slope of sum rate against log2(rho) over the given points.
pub fn dof_slope(curve: &[RatePoint]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: curve.len(),
        });
    }
    let xs: Vec<f64> = curve.iter().map(|p| p.rho.log2()).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.sum_rate).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints { needed: 2, got: 1 });
    }
    Ok(sxy / sxx)
}
