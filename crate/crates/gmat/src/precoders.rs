//! The four order-2 precoder families.
//!
//! * **MAT** is the pure interference-repetition baseline: each combining
//!   vector is the overhearing peer's channel at the slot where the owner's
//!   symbol was sent, which aligns all overheard interference.
//! * **GMAT-MMSE** runs fixed-step gradient descent on the virtual MMSE cost.
//!   The virtual channels replace every coefficient the transmitter cannot
//!   know yet (receive diagonals and lift diagonals of phases >= 2) by one,
//!   so both the cost and its gradient are functions of delayed CSIT only.
//! * **GMAT-DSINR** is closed form: each vector is the dominant generalized
//!   eigenvector of a regularized SINR quotient in a dual interference
//!   channel built from orthogonal complements of phase-1 channels.
//! * **MRT / ZF** are the classic beamformers of the equivalent 2-user single-beam
//!   interference channel, for comparison.
//!
//! Gradient convention: [`mmse_gradient`] returns, per generation matrix W,
//! the matrix `dJ/dRe(W) + i dJ/dIm(W)` (twice the Wirtinger derivative with
//! respect to conj(W)), so a descent step is simply `W -= beta * G`.

use crate::channel::{ChannelEpisode, CsitView};
use crate::numerics::{
    generalized_eig_extreme, orth_complement, quadratic_form, Extreme, HermitianMatrix,
};
use crate::protocol::{
    combining_constants, k_subsets, order2_chain, virtual_channel, PrecoderSet, Schedule,
};
use crate::{CMat, CVec, Error, Result, C64};

/// Settings for the virtual-MMSE gradient descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseOptConfig {
    /// Fixed step size beta.
    pub step: f64,
    /// Maximum number of descent iterations.
    pub max_iters: usize,
    /// Normalized transmit power rho = P/K the cost is evaluated at.
    pub rho: f64,
    /// Power-constraint handling after each step.
    pub projection: Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Scale the whole set down onto the budget sphere when violated.
    ScaleToBudget,
    /// Leave iterates unconstrained.
    None,
}

impl MmseOptConfig {
    /// Defaults: beta = 0.01, at most 500 iterations, budget projection on.
    pub fn new(rho: f64) -> Self {
        Self {
            step: 0.01,
            max_iters: 500,
            rho,
            projection: Projection::ScaleToBudget,
        }
    }
}

/// The interference-repetition baseline: w(owner, peer) on a branch is the
/// peer's channel at the phase-1 slot that carried the owner's symbol.
pub fn mat_precoder(view: &CsitView<'_>, schedule: &Schedule) -> PrecoderSet {
    let users = schedule.users();
    let mut set = PrecoderSet::zeros(users, schedule.branches());
    for branch in 0..schedule.branches() {
        for owner in 0..users {
            let slot = schedule.phase1_slot(owner, branch);
            for peer in 0..users {
                if peer != owner {
                    set.set(branch, owner, peer, view.h(peer, slot));
                }
            }
        }
    }
    set
}

/// All K^2 L virtual channels, indexed `[(receiver * K + owner) * L + branch]`.
fn virtual_channel_set(
    view: &CsitView<'_>,
    schedule: &Schedule,
    precoders: &PrecoderSet,
    combining: &[CMat],
) -> Result<Vec<CMat>> {
    let users = schedule.users();
    let branches = schedule.branches();
    let mut out = Vec::with_capacity(users * users * branches);
    for receiver in 0..users {
        for owner in 0..users {
            for branch in 0..branches {
                let h = virtual_channel(
                    schedule, receiver, owner, branch, view, precoders, combining,
                )?;
                out.push(h.into_matrix());
            }
        }
    }
    Ok(out)
}

/// Virtual MMSE cost J: the sum over receivers and branches of the optimal
/// per-stream MSE traces `Tr(I - rho H^H Phi^-1 H)`, with Phi the full
/// virtual received covariance at that receiver.
pub fn mmse_cost(
    view: &CsitView<'_>,
    schedule: &Schedule,
    precoders: &PrecoderSet,
    rho: f64,
) -> Result<f64> {
    let combining = combining_constants(schedule);
    let channels = virtual_channel_set(view, schedule, precoders, &combining)?;
    Ok(cost_from_channels(schedule, &channels, rho))
}

fn receiver_covariance(schedule: &Schedule, channels: &[CMat], receiver: usize, rho: f64) -> CMat {
    let users = schedule.users();
    let branches = schedule.branches();
    let t = schedule.total_slots();
    let mut phi = CMat::identity(t, t);
    for owner in 0..users {
        for branch in 0..branches {
            let h = &channels[(receiver * users + owner) * branches + branch];
            phi += (h * h.adjoint()).map(|z| z * C64::from(rho));
        }
    }
    phi
}

fn cost_from_channels(schedule: &Schedule, channels: &[CMat], rho: f64) -> f64 {
    let users = schedule.users();
    let branches = schedule.branches();
    let mut j = 0.0;
    for receiver in 0..users {
        let phi = receiver_covariance(schedule, channels, receiver, rho);
        // A failed factorization means the iterate overflowed; surface it
        // as a non-finite cost so the optimizer aborts with its diagnostic.
        let Some(chol) = phi.cholesky() else {
            return f64::NAN;
        };
        for branch in 0..branches {
            let h = &channels[(receiver * users + receiver) * branches + branch];
            let x = chol.solve(h);
            j += users as f64 - rho * (h.adjoint() * x).trace().re;
        }
    }
    j
}

/// Gradient of the virtual MMSE cost with respect to the real and imaginary
/// parts of each order-2 generation matrix, indexed `[owner * L + branch]`,
/// each entry Q_2 x K.
pub fn mmse_gradient(
    view: &CsitView<'_>,
    schedule: &Schedule,
    precoders: &PrecoderSet,
    rho: f64,
) -> Result<Vec<CMat>> {
    let combining = combining_constants(schedule);
    let channels = virtual_channel_set(view, schedule, precoders, &combining)?;
    Ok(gradient_from_channels(schedule, &channels, &combining, rho))
}

fn gradient_from_channels(
    schedule: &Schedule,
    channels: &[CMat],
    combining: &[CMat],
    rho: f64,
) -> Vec<CMat> {
    let users = schedule.users();
    let branches = schedule.branches();
    let q2 = schedule.subset_count(2);
    let chains: Vec<CMat> = (0..branches)
        .map(|b| order2_chain(schedule, combining, b))
        .collect();
    let mut grads = vec![CMat::zeros(q2, users); users * branches];
    for receiver in 0..users {
        let phi = receiver_covariance(schedule, channels, receiver, rho);
        let chol = phi.cholesky().expect("virtual covariance is HPD");
        // Solutions Y_l = Phi^-1 H_own(l) and the sandwich
        // M = Phi^-1 S Phi^-1 = rho * sum_l Y_l Y_l^H.
        let t = schedule.total_slots();
        let mut m = CMat::zeros(t, t);
        let mut own_solutions = Vec::with_capacity(branches);
        for branch in 0..branches {
            let h = &channels[(receiver * users + receiver) * branches + branch];
            let y = chol.solve(h);
            m += (&y * y.adjoint()).map(|z| z * C64::from(rho));
            own_solutions.push(y);
        }
        for owner in 0..users {
            for branch in 0..branches {
                let h = &channels[(receiver * users + owner) * branches + branch];
                let mut g = (&m * h).map(|z| z * C64::from(rho));
                if owner == receiver {
                    g -= own_solutions[branch].map(|z| z * C64::from(rho));
                }
                // Chain rule through H = base + chain * W, then pack the
                // real/imaginary gradient (factor two from Wirtinger).
                grads[owner * branches + branch] +=
                    (chains[branch].adjoint() * g).map(|z| z * C64::from(2.0));
            }
        }
    }
    grads
}

/// Apply one packed-gradient step to the free coordinates (the nonzero rows
/// of each generation matrix).
fn apply_gradient_step(
    precoders: &mut PrecoderSet,
    grads: &[CMat],
    schedule: &Schedule,
    step: f64,
) {
    let users = schedule.users();
    let branches = schedule.branches();
    let subsets = k_subsets(users, 2);
    for owner in 0..users {
        for branch in 0..branches {
            let g = &grads[owner * branches + branch];
            for (r, s) in subsets.iter().enumerate() {
                if !s.contains(&owner) {
                    continue;
                }
                let peer = s.iter().copied().find(|&u| u != owner).unwrap();
                let mut w = precoders.get(branch, owner, peer).clone();
                for c in 0..users {
                    w[c] -= C64::from(step) * g[(r, c)];
                }
                precoders.set(branch, owner, peer, w);
            }
        }
    }
}

/// Gradient descent on the virtual MMSE cost from the MAT initialization.
///
/// With budget projection on, the raw MAT point (whose vectors are channel
/// draws of expected squared norm K) is first scaled onto the power budget,
/// then every violating step is scaled back; the returned iterate is the
/// one with the lowest recorded cost, so it never loses to the feasible
/// MAT baseline it started from. A zero-iteration run is a no-op returning
/// the MAT precoders unchanged.
pub fn gmat_mmse_optimize(
    view: &CsitView<'_>,
    schedule: &Schedule,
    cfg: &MmseOptConfig,
) -> Result<PrecoderSet> {
    let combining = combining_constants(schedule);
    let mut current = mat_precoder(view, schedule);
    if cfg.max_iters == 0 {
        return Ok(current);
    }
    let budget = schedule.power_budget();
    if cfg.projection == Projection::ScaleToBudget {
        current.project_to_budget(budget);
    }
    let channels = virtual_channel_set(view, schedule, &current, &combining)?;
    let mut best_cost = cost_from_channels(schedule, &channels, cfg.rho);
    let mut best = current.clone();
    let mut channels = channels;
    for iteration in 0..cfg.max_iters {
        let grads = gradient_from_channels(schedule, &channels, &combining, cfg.rho);
        apply_gradient_step(&mut current, &grads, schedule, cfg.step);
        if cfg.projection == Projection::ScaleToBudget {
            current.project_to_budget(budget);
        }
        channels = virtual_channel_set(view, schedule, &current, &combining)?;
        let cost = cost_from_channels(schedule, &channels, cfg.rho);
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost { iteration });
        }
        if cost < best_cost {
            best_cost = cost;
            best = current.clone();
        }
    }
    Ok(best)
}

/// The generalized-eigenproblem data of one dual-SINR maximization: the
/// quotient is `(w^H A w) / (w^H B w)` with A the regularized desired-side
/// matrix and B the regularized interference-side matrix.
#[derive(Debug, Clone)]
pub struct DualSinrProblem {
    pub numerator: HermitianMatrix,
    pub denominator: HermitianMatrix,
    pub gamma: f64,
}

impl DualSinrProblem {
    pub fn quotient(&self, w: &CVec) -> f64 {
        quadratic_form(self.numerator.entries(), w) / quadratic_form(self.denominator.entries(), w)
    }
}

/// Build the dual-SINR problem of the (owner, peer) pair on one branch:
/// numerator `I + rho * sum_{k != peer} Uk Uk^H`, denominator
/// `gamma I + rho * U_peer U_peer^H`, with Uk the scaled orthogonal
/// complement of user k's channel at the owner's phase-1 slot and
/// `gamma = 1 + ||h_peer||^2 + 1/rho` (unit-norm precoders substituted).
pub fn dual_sinr_problem(
    view: &CsitView<'_>,
    schedule: &Schedule,
    branch: usize,
    owner: usize,
    peer: usize,
    rho: f64,
) -> Result<DualSinrProblem> {
    if !(rho > 0.0) {
        return Err(Error::NonPositiveSnr(rho));
    }
    let users = schedule.users();
    let slot = schedule.phase1_slot(owner, branch);
    let mut numerator = CMat::identity(users, users);
    let mut peer_outer = CMat::zeros(users, users);
    let mut gamma = 0.0;
    for k in 0..users {
        let h = view.h(k, slot);
        let oc = orth_complement(&h)?;
        if k == peer {
            peer_outer = oc.outer();
            gamma = 1.0 + h.norm_squared() + 1.0 / rho;
        } else {
            numerator += oc.outer().map(|z| z * C64::from(rho));
        }
    }
    let denominator = CMat::identity(users, users).map(|z| z * C64::from(gamma))
        + peer_outer.map(|z| z * C64::from(rho));
    Ok(DualSinrProblem {
        numerator: HermitianMatrix::from_hermitian_part(&numerator),
        denominator: HermitianMatrix::from_hermitian_part(&denominator),
        gamma,
    })
}

/// Closed-form precoders plus a count of nearly-degenerate eigensolves
/// (where any maximizer of the quotient was accepted).
#[derive(Debug, Clone)]
pub struct DsinrPrecoders {
    pub precoders: PrecoderSet,
    pub degenerate_solves: usize,
}

/// Closed-form dual-SINR precoders: each w(owner, peer) is the unit-norm
/// dominant generalized eigenvector of its [`DualSinrProblem`].
pub fn gmat_dsinr_precoder(
    view: &CsitView<'_>,
    schedule: &Schedule,
    rho: f64,
) -> Result<DsinrPrecoders> {
    let users = schedule.users();
    let mut set = PrecoderSet::zeros(users, schedule.branches());
    let mut degenerate_solves = 0;
    for branch in 0..schedule.branches() {
        for owner in 0..users {
            for peer in 0..users {
                if peer == owner {
                    continue;
                }
                let problem = dual_sinr_problem(view, schedule, branch, owner, peer, rho)?;
                let eig = generalized_eig_extreme(
                    &problem.numerator,
                    &problem.denominator,
                    Extreme::Max,
                )?;
                if eig.degenerate {
                    degenerate_solves += 1;
                }
                set.set(branch, owner, peer, eig.vector);
            }
        }
    }
    Ok(DsinrPrecoders {
        precoders: set,
        degenerate_solves,
    })
}

/// The equivalent 2-user single-beam interference channel: row-scaled
/// channel stacks, the effective noise powers, and the scaling coefficients,
/// all exact functions of the episode and the precoder norms.
#[derive(Debug, Clone)]
pub struct IcDual {
    pub h1: CMat,
    pub h2: CMat,
    pub g1: CMat,
    pub g2: CMat,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub alphas: [f64; 4],
    pub betas: [f64; 4],
    pub rho: f64,
    pub log_c: f64,
}

struct IcInputs {
    h_a1: CVec,
    h_a2: CVec,
    h_b1: CVec,
    h_b2: CVec,
    g_a3_sq: f64,
    g_b3_sq: f64,
}

fn ic_dual_from_inputs(inp: &IcInputs, w1_sq: f64, w2_sq: f64, rho: f64) -> Result<IcDual> {
    if !(rho > 0.0) {
        return Err(Error::NonPositiveSnr(rho));
    }
    let na1 = inp.h_a1.norm_squared();
    let na2 = inp.h_a2.norm_squared();
    let nb1 = inp.h_b1.norm_squared();
    let nb2 = inp.h_b2.norm_squared();
    let alpha2 = (1.0 + rho * na2) / (rho * na1);
    let alpha1 = alpha2 / (1.0 + rho * na1);
    let alpha3 = 1.0 / (rho * inp.g_b3_sq * w1_sq);
    let alpha4 = alpha3 + 1.0;
    let beta2 = (1.0 + rho * nb1) / (rho * nb2);
    let beta1 = beta2 / (1.0 + rho * nb2);
    let beta3 = 1.0 / (rho * inp.g_a3_sq * w2_sq);
    let beta4 = beta3 + 1.0;
    let sigma1_sq = 1.0 / (rho * inp.g_a3_sq) + w2_sq;
    let sigma2_sq = 1.0 / (rho * inp.g_b3_sq) + w1_sq;
    let stack = |c_top: f64, top: &CVec, c_bot: f64, bot: &CMat| -> Result<CMat> {
        let mut m = CMat::zeros(2, 2);
        m.row_mut(0)
            .copy_from(&top.adjoint().map(|z| z * C64::from(c_top.sqrt())));
        m.row_mut(1)
            .copy_from(&bot.adjoint().map(|z| z * C64::from(c_bot.sqrt())));
        Ok(m)
    };
    let pa1 = orth_complement(&inp.h_a1)?;
    let pa2 = orth_complement(&inp.h_a2)?;
    let pb1 = orth_complement(&inp.h_b1)?;
    let pb2 = orth_complement(&inp.h_b2)?;
    Ok(IcDual {
        h1: stack(alpha1, &inp.h_a1, alpha2, pa1.complement())?,
        h2: stack(beta3, &inp.h_a2, beta4, pa2.complement())?,
        g1: stack(alpha3, &inp.h_b1, alpha4, pb1.complement())?,
        g2: stack(beta1, &inp.h_b2, beta2, pb2.complement())?,
        sigma1_sq,
        sigma2_sq,
        alphas: [alpha1, alpha2, alpha3, alpha4],
        betas: [beta1, beta2, beta3, beta4],
        rho,
        log_c: (1.0 + rho * na1).ln() + (1.0 + rho * nb2).ln(),
    })
}

/// The exact dual interference channel of a 2-user episode under precoders
/// (w1, w2): uses the true slot-3 coefficients, for receiver-side analysis.
pub fn ic_dual_matrices(
    episode: &ChannelEpisode,
    w1: &CVec,
    w2: &CVec,
    rho: f64,
) -> Result<IcDual> {
    if episode.users() != 2 {
        return Err(Error::UsersOutOfRange(episode.users()));
    }
    let inp = IcInputs {
        h_a1: episode.h(0, 0),
        h_a2: episode.h(0, 1),
        h_b1: episode.h(1, 0),
        h_b2: episode.h(1, 1),
        g_a3_sq: episode.coeff(0, 0, 2).norm_sqr(),
        g_b3_sq: episode.coeff(1, 0, 2).norm_sqr(),
    };
    ic_dual_from_inputs(&inp, w1.norm_squared(), w2.norm_squared(), rho)
}

/// Delayed-CSIT variant for precoder design: the unknown slot-3 magnitudes
/// are set to one and unit precoder norms are assumed. The MRT/ZF
/// directions are unaffected (they depend only on the sign of the row-scale
/// gaps), so this is the form the sweep uses.
pub fn ic_dual_from_view(view: &CsitView<'_>, rho: f64) -> Result<IcDual> {
    if view.users() != 2 {
        return Err(Error::UsersOutOfRange(view.users()));
    }
    let inp = IcInputs {
        h_a1: view.h(0, 0),
        h_a2: view.h(0, 1),
        h_b1: view.h(1, 0),
        h_b2: view.h(1, 1),
        g_a3_sq: 1.0,
        g_b3_sq: 1.0,
    };
    ic_dual_from_inputs(&inp, 1.0, 1.0, rho)
}

impl IcDual {
    /// Received SINRs of the dual channel under (w1, w2).
    pub fn sinrs(&self, w1: &CVec, w2: &CVec) -> (f64, f64) {
        let p = |m: &CMat, w: &CVec| (m * w).norm_squared();
        let sinr1 = self.rho * p(&self.h1, w1) / (self.sigma1_sq + self.rho * p(&self.h2, w2));
        let sinr2 = self.rho * p(&self.g2, w2) / (self.sigma2_sq + self.rho * p(&self.g1, w1));
        (sinr1, sinr2)
    }

    /// log(1 + SINR_1) + log(1 + SINR_2) + log C in nats; equals the exact
    /// 2-user sum mutual information.
    pub fn sum_log_terms(&self, w1: &CVec, w2: &CVec) -> f64 {
        let (s1, s2) = self.sinrs(w1, w2);
        (1.0 + s1).ln() + (1.0 + s2).ln() + self.log_c
    }
}

/// MRT and ZF precoder sets of the dual channel, with a degeneracy flag for
/// tied spectra.
#[derive(Debug, Clone)]
pub struct MrtZfPrecoders {
    pub mrt: PrecoderSet,
    pub zf: PrecoderSet,
    pub degenerate: bool,
}

/// Classic beamformers of the dual interference channel: MRT takes the
/// dominant eigvectors of the direct-channel Grams, ZF the minor eigvectors
/// of the cross-channel Grams. All outputs unit norm.
pub fn mrt_zf_precoders(dual: &IcDual) -> Result<MrtZfPrecoders> {
    let id = HermitianMatrix::new(CMat::identity(2, 2))?;
    let gram = |m: &CMat| HermitianMatrix::from_hermitian_part(&(m.adjoint() * m));
    let solve = |m: &CMat, which: Extreme| -> Result<(CVec, bool)> {
        let eig = generalized_eig_extreme(&gram(m), &id, which)?;
        Ok((eig.vector, eig.degenerate))
    };
    let (mrt1, d1) = solve(&dual.h1, Extreme::Max)?;
    let (mrt2, d2) = solve(&dual.g2, Extreme::Max)?;
    let (zf1, d3) = solve(&dual.g1, Extreme::Min)?;
    let (zf2, d4) = solve(&dual.h2, Extreme::Min)?;
    let mut mrt = PrecoderSet::zeros(2, 1);
    mrt.set(0, 0, 1, mrt1);
    mrt.set(0, 1, 0, mrt2);
    let mut zf = PrecoderSet::zeros(2, 1);
    zf.set(0, 0, 1, zf1);
    zf.set(0, 1, 0, zf2);
    Ok(MrtZfPrecoders {
        mrt,
        zf,
        degenerate: d1 || d2 || d3 || d4,
    })
}
